//! Mean arrival time of a freely falling packet from the probability current.
//!
//! The packet starts at rest centred on `z0` and falls towards `-z`; the
//! detector sits a distance `Z` below, at `z0 - Z`. The arrival-time density
//! is `|J(z0 - Z, t)|` and its first moment, cut off at the time `T` when
//! the packet has fallen `Z + 3σ(T)`, is the mean arrival time. In the
//! mirrored fall coordinate this is the familiar
//! `J = ρ(Z,t) [gt + ħ²t/(4m²σ0²σ²)(Z - gt²/2)]` up to an overall sign.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::kernel::Evolution;
use crate::physics::{MassSweep, PhysicalConstants, WavePacketSpec};
use crate::quadrature::{integrate_with_breakpoints, QuadratureResult, DEFAULT_REL_TOL};

/// Relative step below which the cutoff iteration stops.
pub const CUTOFF_REL_TOL: f64 = 1e-12;
pub const CUTOFF_MAX_ITERATIONS: usize = 50;
/// Largest combined relative quadrature error accepted for τ̄.
pub const MAX_ARRIVAL_REL_ERROR: f64 = 1e-8;

/// Detector a distance `distance` (cm, positive) below the starting point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub distance: f64,
}

impl DetectorConfig {
    pub fn new(distance: f64) -> Result<Self> {
        if !(distance.is_finite() && distance > 0.0) {
            return Err(domain(format!("detector distance must be positive, got {distance}")));
        }
        Ok(Self { distance })
    }
}

/// Solution of `T = sqrt(2 (Z + 3σ(T)) / g)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub time: f64,
    pub iterations: usize,
    /// `sqrt(2 (Z + 3σ(t_c)) / g)` with σ taken at the classical arrival
    /// time instead of self-consistently.
    pub one_shot: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrivalTimeResult {
    pub mean_tau: f64,
    pub cutoff_t: f64,
    pub cutoff_one_shot: f64,
    pub cutoff_iterations: usize,
    /// ∫|J| t dt over [0, T].
    pub numerator: f64,
    /// ∫|J| dt over [0, T].
    pub denominator: f64,
    /// Sum of the relative error estimates of both integrals.
    pub quad_error: f64,
    pub classical_tau: f64,
}

/// Classical fall time `sqrt(2Z/g)`.
pub fn classical_fall_time(spec: &WavePacketSpec, constants: &PhysicalConstants, detector: &DetectorConfig) -> f64 {
    (2.0 * detector.distance / spec.acceleration(constants)).sqrt()
}

/// Self-consistent integration cutoff.
///
/// The fixed-point map contracts slowly for light packets (factor ≈ 0.5 per
/// step at 1 amu), so the equation `T - φ(T) = 0` is solved with Newton's
/// method started from the classical fall time.
pub fn cutoff_time(spec: &WavePacketSpec, constants: &PhysicalConstants, detector: &DetectorConfig) -> Result<Cutoff> {
    spec.validate()?;
    let ev = Evolution::new(spec, constants);
    let g = spec.acceleration(constants);
    let z = detector.distance;
    let s0 = spec.sigma0;
    let rate = constants.hbar / (2.0 * spec.m_inertial * s0 * s0);

    let phi = |t: f64| (2.0 * (z + 3.0 * ev.sigma(t)) / g).sqrt();
    let dphi = |t: f64, phi_t: f64| {
        let tau = rate * t;
        let dsigma = s0 * rate * tau / tau.hypot(1.0);
        3.0 * dsigma / (g * phi_t)
    };

    let t0 = classical_fall_time(spec, constants, detector);
    let one_shot = phi(t0);
    let mut t = t0;
    for iteration in 1..=CUTOFF_MAX_ITERATIONS {
        let p = phi(t);
        let slope = 1.0 - dphi(t, p);
        let mut next = t - (t - p) / slope;
        if !(next.is_finite() && next > 0.0) || slope <= 0.0 {
            next = p;
        }
        if (next - t).abs() <= CUTOFF_REL_TOL * next {
            return Ok(Cutoff {
                time: next,
                iterations: iteration,
                one_shot,
            });
        }
        t = next;
    }
    Err(Error::Convergence {
        what: "cutoff time",
        iterations: CUTOFF_MAX_ITERATIONS,
        estimate: t,
        error_estimate: (phi(t) - t).abs(),
    })
}

fn require_rest(spec: &WavePacketSpec) -> Result<()> {
    if spec.u != 0.0 {
        return Err(Error::Unsupported(format!(
            "arrival times are defined for a packet released at rest, got u = {}",
            spec.u
        )));
    }
    Ok(())
}

/// `|J|` at the detector at time `t`.
pub fn arrival_distribution(
    spec: &WavePacketSpec,
    constants: &PhysicalConstants,
    detector: &DetectorConfig,
    t: f64,
) -> Result<f64> {
    require_rest(spec)?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(domain(format!("time must be non-negative, got {t}")));
    }
    let ev = Evolution::new(spec, constants);
    Ok(ev.current(spec.z0 - detector.distance, t).abs())
}

/// Breakpoints that bracket the sharp arrival peak of heavy packets.
fn breakpoints(ev: &Evolution, t_classical: f64, cutoff: f64) -> Vec<f64> {
    let width = ev.sigma(t_classical) / (ev.acceleration() * t_classical);
    let mut pts = vec![0.0, cutoff];
    for k in [-8.0, -2.0, 0.0, 2.0, 8.0] {
        let p = t_classical + k * width;
        if p > 0.0 && p < cutoff {
            pts.push(p);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

pub fn mean_arrival_time(
    spec: &WavePacketSpec,
    constants: &PhysicalConstants,
    detector: &DetectorConfig,
) -> Result<ArrivalTimeResult> {
    require_rest(spec)?;
    let cutoff = cutoff_time(spec, constants, detector)?;
    let ev = Evolution::new(spec, constants);
    let zd = spec.z0 - detector.distance;
    let classical_tau = classical_fall_time(spec, constants, detector);
    let pts = breakpoints(&ev, classical_tau, cutoff.time);

    let den = integrate_with_breakpoints(|t| ev.current(zd, t).abs(), &pts, DEFAULT_REL_TOL, 0.0)?;
    let num = integrate_with_breakpoints(|t| ev.current(zd, t).abs() * t, &pts, DEFAULT_REL_TOL, 0.0)?;
    let quad_error = num.rel_error_estimate() + den.rel_error_estimate();
    if den.value.is_nan() || den.value <= 0.0 || quad_error > MAX_ARRIVAL_REL_ERROR {
        return Err(Error::Convergence {
            what: "arrival-time quadrature",
            iterations: (num.evaluations + den.evaluations) / crate::quadrature::RULE_SIZE,
            estimate: num.value / den.value,
            error_estimate: quad_error,
        });
    }
    Ok(ArrivalTimeResult {
        mean_tau: num.value / den.value,
        cutoff_t: cutoff.time,
        cutoff_one_shot: cutoff.one_shot,
        cutoff_iterations: cutoff.iterations,
        numerator: num.value,
        denominator: den.value,
        quad_error,
        classical_tau,
    })
}

/// Both raw integrals, for callers that want the individual estimates.
pub fn arrival_integrals(
    spec: &WavePacketSpec,
    constants: &PhysicalConstants,
    detector: &DetectorConfig,
) -> Result<(QuadratureResult, QuadratureResult)> {
    require_rest(spec)?;
    let cutoff = cutoff_time(spec, constants, detector)?;
    let ev = Evolution::new(spec, constants);
    let zd = spec.z0 - detector.distance;
    let pts = breakpoints(&ev, classical_fall_time(spec, constants, detector), cutoff.time);
    Ok((
        integrate_with_breakpoints(|t| ev.current(zd, t).abs() * t, &pts, DEFAULT_REL_TOL, 0.0)?,
        integrate_with_breakpoints(|t| ev.current(zd, t).abs(), &pts, DEFAULT_REL_TOL, 0.0)?,
    ))
}

/// Drop geometry of the mass sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FallParams {
    pub sigma0: f64,
    pub distance: f64,
}

impl Default for FallParams {
    /// `σ0 = 10⁻⁴ cm`, `Z = 10⁻² cm`.
    fn default() -> Self {
        Self {
            sigma0: 1e-4,
            distance: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mass_amu: f64,
    pub tau: f64,
    pub classical_tau: f64,
    pub cutoff_t: f64,
}

/// Mean arrival time for each mass of the sweep, in input order.
pub fn mass_sweep_tau(masses: &MassSweep, params: FallParams, constants: &PhysicalConstants) -> Result<Vec<SweepRow>> {
    let detector = DetectorConfig::new(params.distance)?;
    masses
        .masses()
        .par_iter()
        .map(|&m| {
            let spec = WavePacketSpec::from_amu(m, params.sigma0, 0.0, constants)?;
            let r = mean_arrival_time(&spec, constants, &detector)?;
            Ok(SweepRow {
                mass_amu: m,
                tau: r.mean_tau,
                classical_tau: r.classical_tau,
                cutoff_t: r.cutoff_t,
            })
        })
        .collect()
}
