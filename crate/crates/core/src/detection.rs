//! Position-detection probabilities in a narrow window.
//!
//! Two evaluations are offered side by side: the exact Gaussian integral over
//! the window and the midpoint estimate `2ε·ρ(centre)`. The reference
//! projection-point table agrees with the former, the turning-point table
//! with the latter (its heavy-mass entry is `2/√(2π)`, not `erf(1/√2)`).

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::kernel::Evolution;
use crate::physics::{MassSweep, PhysicalConstants, WavePacketSpec};
use crate::quadrature::{erf, erfc};

/// Window `[center - epsilon, center + epsilon]` read out at `t_eval`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionWindow {
    pub center: f64,
    pub epsilon: f64,
    pub t_eval: f64,
}

impl DetectionWindow {
    pub fn new(center: f64, epsilon: f64, t_eval: f64) -> Result<Self> {
        let w = Self {
            center,
            epsilon,
            t_eval,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(domain(format!(
                "window half-width must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.t_eval.is_finite() && self.t_eval >= 0.0) {
            return Err(domain(format!(
                "evaluation time must be non-negative, got {}",
                self.t_eval
            )));
        }
        if !self.center.is_finite() {
            return Err(domain("window centre must be finite"));
        }
        Ok(())
    }

    pub fn lower(&self) -> f64 {
        self.center - self.epsilon
    }

    pub fn upper(&self) -> f64 {
        self.center + self.epsilon
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionProbability {
    pub exact: f64,
    pub midpoint: f64,
    pub sigma_at_t: f64,
}

impl DetectionProbability {
    pub fn get(&self, variant: Variant) -> f64 {
        match variant {
            Variant::Midpoint => self.midpoint,
            Variant::Exact | Variant::Both => self.exact,
        }
    }
}

/// Which evaluation of the window probability to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Exact,
    Midpoint,
    Both,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Exact => "exact",
            Variant::Midpoint => "midpoint",
            Variant::Both => "both",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Variant::Exact),
            "midpoint" => Ok(Variant::Midpoint),
            "both" => Ok(Variant::Both),
            other => Err(domain(format!(
                "unknown variant `{other}` (expected exact, midpoint or both)"
            ))),
        }
    }
}

/// Mass of the standard normal distribution between `lo` and `hi`.
pub fn standard_normal_mass(lo: f64, hi: f64) -> f64 {
    let (a, b) = (lo / SQRT_2, hi / SQRT_2);
    // Stay on the side of the tails where erfc keeps full relative precision.
    if a >= 0.0 {
        0.5 * (erfc(a) - erfc(b))
    } else if b <= 0.0 {
        0.5 * (erfc(-b) - erfc(-a))
    } else {
        0.5 * (erf(b) - erf(a))
    }
}

pub fn detection_probability(
    spec: &WavePacketSpec,
    constants: &PhysicalConstants,
    window: &DetectionWindow,
) -> Result<DetectionProbability> {
    spec.validate()?;
    window.validate()?;
    let ev = Evolution::new(spec, constants);
    let t = window.t_eval;
    let sigma = ev.sigma(t);
    let c = ev.center(t);
    Ok(DetectionProbability {
        exact: standard_normal_mass((window.lower() - c) / sigma, (window.upper() - c) / sigma),
        midpoint: 2.0 * window.epsilon * ev.density(window.center, t),
        sigma_at_t: sigma,
    })
}

/// The two detection scenarios of the reference tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// Window at the launch point `z = 0`, read out at `t2 = 2u/g`.
    ProjectionPoint,
    /// Window on the packet centre at the apex time `t1 = u/g`.
    TurningPoint,
}

impl Scenario {
    /// Detection window for one packet. The turning-point window sits on the
    /// packet centre at `t1`, i.e. at height `u²/2g`.
    pub fn window(
        &self,
        spec: &WavePacketSpec,
        constants: &PhysicalConstants,
        epsilon: f64,
    ) -> Result<DetectionWindow> {
        match self {
            Scenario::ProjectionPoint => DetectionWindow::new(spec.z0, epsilon, spec.classical_return_time(constants)?),
            Scenario::TurningPoint => {
                let t1 = spec.classical_turning_time(constants)?;
                DetectionWindow::new(Evolution::new(spec, constants).center(t1), epsilon, t1)
            }
        }
    }
}

/// Launch parameters shared by every row of a table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableParams {
    pub u: f64,
    pub sigma0: f64,
    pub epsilon: f64,
}

impl Default for TableParams {
    /// `u = 10³ cm/s`, `σ0 = 10⁻³ cm`, `ε = σ0`.
    fn default() -> Self {
        Self {
            u: 1e3,
            sigma0: 1e-3,
            epsilon: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub species: String,
    pub mass_amu: f64,
    pub window_center: f64,
    pub t_eval: f64,
    pub probability: DetectionProbability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityTable {
    pub scenario: Scenario,
    pub params: TableParams,
    pub rows: Vec<TableRow>,
}

fn table(
    scenario: Scenario,
    masses: &MassSweep,
    params: TableParams,
    constants: &PhysicalConstants,
) -> Result<ProbabilityTable> {
    let rows = masses
        .masses()
        .par_iter()
        .enumerate()
        .map(|(i, &m)| {
            let spec = WavePacketSpec::from_amu(m, params.sigma0, params.u, constants)?;
            let window = scenario.window(&spec, constants, params.epsilon)?;
            Ok(TableRow {
                species: masses.label(i),
                mass_amu: m,
                window_center: window.center,
                t_eval: window.t_eval,
                probability: detection_probability(&spec, constants, &window)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProbabilityTable { scenario, params, rows })
}

/// Probability of finding the packet near its launch point when the centre
/// returns there.
pub fn table1(masses: &MassSweep, params: TableParams, constants: &PhysicalConstants) -> Result<ProbabilityTable> {
    table(Scenario::ProjectionPoint, masses, params, constants)
}

/// Probability of finding the packet near the apex of its trajectory.
pub fn table2(masses: &MassSweep, params: TableParams, constants: &PhysicalConstants) -> Result<ProbabilityTable> {
    table(Scenario::TurningPoint, masses, params, constants)
}

/// Large-mass limit of the window probability, where `σ(t) = σ0`.
pub fn limit_probability(params: &TableParams, variant: Variant) -> f64 {
    let r = params.epsilon / params.sigma0;
    match variant {
        Variant::Midpoint => 2.0 * r / (2.0 * PI).sqrt(),
        Variant::Exact | Variant::Both => erf(r / SQRT_2),
    }
}

/// Geometric mass grid searched by [`saturation_mass`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassScan {
    pub start_amu: f64,
    pub stop_amu: f64,
    pub points_per_decade: usize,
}

impl Default for MassScan {
    fn default() -> Self {
        Self {
            start_amu: 1.0,
            stop_amu: 1e12,
            points_per_decade: 20,
        }
    }
}

impl MassScan {
    pub fn masses(&self) -> Result<Vec<f64>> {
        if !(self.start_amu > 0.0 && self.stop_amu >= self.start_amu && self.points_per_decade > 0) {
            return Err(domain(format!("invalid mass scan {self:?}")));
        }
        let decades = (self.stop_amu / self.start_amu).log10();
        let n = (decades * self.points_per_decade as f64).round() as usize;
        Ok((0..=n)
            .map(|i| self.start_amu * 10f64.powf(i as f64 / self.points_per_decade as f64))
            .collect())
    }
}

/// Smallest scanned mass whose window probability is within `tolerance` of
/// the large-mass limit.
pub fn saturation_mass(
    scenario: Scenario,
    params: TableParams,
    variant: Variant,
    tolerance: f64,
    scan: &MassScan,
    constants: &PhysicalConstants,
) -> Result<f64> {
    if tolerance.is_nan() || tolerance < 0.0 {
        return Err(domain(format!("tolerance must be non-negative, got {tolerance}")));
    }
    let limit = limit_probability(&params, variant);
    for m in scan.masses()? {
        let spec = WavePacketSpec::from_amu(m, params.sigma0, params.u, constants)?;
        let window = scenario.window(&spec, constants, params.epsilon)?;
        let p = detection_probability(&spec, constants, &window)?.get(variant);
        if (p - limit).abs() < tolerance {
            return Ok(m);
        }
    }
    Err(Error::NotFound(format!(
        "no mass in [{}, {}] amu is within {tolerance} of the limit {limit}",
        scan.start_amu, scan.stop_amu
    )))
}
