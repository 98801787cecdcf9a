//! Physical constants, wave-packet parameters and mass sweeps.
//!
//! Everything is expressed in CGS units: lengths in cm, times in s, masses in
//! g and actions in erg·s. Masses enter the public interface in atomic mass
//! units and are converted once, in [`WavePacketSpec::from_amu`].

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Reduced Planck constant rounded to four significant figures, erg·s.
///
/// This is the default because the reference detection-probability tables
/// are reproduced to their last printed digit with it (together with
/// `g = 980 cm/s²`). See [`HBAR_CODATA`] for the full-precision value.
pub const HBAR_TABULATED: f64 = 1.054e-27;
/// CODATA 2018 reduced Planck constant, erg·s.
pub const HBAR_CODATA: f64 = 1.054_571_817e-27;
/// Unified atomic mass unit, g.
pub const AMU_GRAMS: f64 = 1.660_539_066_60e-24;
/// Gravitational acceleration, cm/s².
pub const G_ACCEL_DEFAULT: f64 = 980.0;

/// The three constants every computation depends on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub g_accel: f64,
    pub amu: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            hbar: HBAR_TABULATED,
            g_accel: G_ACCEL_DEFAULT,
            amu: AMU_GRAMS,
        }
    }
}

impl PhysicalConstants {
    pub fn new(hbar: f64, g_accel: f64, amu: f64) -> Result<Self> {
        let c = Self { hbar, g_accel, amu };
        c.validate()?;
        Ok(c)
    }

    /// Defaults with the CODATA value of ħ instead of the tabulated one.
    pub fn codata() -> Self {
        Self {
            hbar: HBAR_CODATA,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("hbar", self.hbar), ("g_accel", self.g_accel), ("amu", self.amu)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(domain(format!("{name} must be finite and positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Replaces one constant by its configuration key (`hbar`, `g_accel`, `amu`).
    pub fn with_override(mut self, key: &str, value: f64) -> Result<Self> {
        match key {
            "hbar" => self.hbar = value,
            "g_accel" => self.g_accel = value,
            "amu" => self.amu = value,
            other => return Err(domain(format!("unknown constant `{other}`"))),
        }
        self.validate()?;
        Ok(self)
    }
}

/// Parameters of a Gaussian wave packet launched with group velocity `u`
/// from `z0`, in a field pulling towards `-z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavePacketSpec {
    pub m_inertial: f64,
    pub m_grav: f64,
    pub sigma0: f64,
    /// Signed initial group velocity; positive means an upward launch.
    pub u: f64,
    pub z0: f64,
}

impl WavePacketSpec {
    /// Packet with equal inertial and gravitational mass (grams).
    pub fn new(mass: f64, sigma0: f64, u: f64) -> Result<Self> {
        Self::with_masses(mass, mass, sigma0, u, 0.0)
    }

    pub fn with_masses(m_inertial: f64, m_grav: f64, sigma0: f64, u: f64, z0: f64) -> Result<Self> {
        let spec = Self {
            m_inertial,
            m_grav,
            sigma0,
            u,
            z0,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Builds a packet from a mass in atomic mass units; `z0 = 0`.
    pub fn from_amu(mass_amu: f64, sigma0: f64, u: f64, constants: &PhysicalConstants) -> Result<Self> {
        if !(mass_amu.is_finite() && mass_amu > 0.0) {
            return Err(domain(format!("mass must be positive, got {mass_amu} amu")));
        }
        Self::new(mass_amu * constants.amu, sigma0, u)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m_inertial.is_finite() && self.m_inertial > 0.0) {
            return Err(domain(format!(
                "inertial mass must be positive, got {}",
                self.m_inertial
            )));
        }
        if !(self.m_grav.is_finite() && self.m_grav > 0.0) {
            return Err(domain(format!(
                "gravitational mass must be positive, got {}",
                self.m_grav
            )));
        }
        if !(self.sigma0.is_finite() && self.sigma0 > 0.0) {
            return Err(domain(format!("sigma0 must be positive, got {}", self.sigma0)));
        }
        if !(self.u.is_finite() && self.z0.is_finite()) {
            return Err(domain("u and z0 must be finite"));
        }
        Ok(())
    }

    /// Effective downward acceleration `(m_g / m_i) g`.
    pub fn acceleration(&self, constants: &PhysicalConstants) -> f64 {
        self.m_grav / self.m_inertial * constants.g_accel
    }

    pub fn mass_amu(&self, constants: &PhysicalConstants) -> f64 {
        self.m_inertial / constants.amu
    }

    /// Time `u/g` at which the packet centre reaches its apex.
    pub fn classical_turning_time(&self, constants: &PhysicalConstants) -> Result<f64> {
        if self.u <= 0.0 {
            return Err(domain(format!("no upward turning point for u = {}", self.u)));
        }
        Ok(self.u / self.acceleration(constants))
    }

    /// Time `2u/g` at which the packet centre is back at its launch point.
    pub fn classical_return_time(&self, constants: &PhysicalConstants) -> Result<f64> {
        Ok(2.0 * self.classical_turning_time(constants)?)
    }
}

/// Free-function form of [`WavePacketSpec::from_amu`].
pub fn make_spec_from_amu(mass_amu: f64, sigma0: f64, u: f64, constants: &PhysicalConstants) -> Result<WavePacketSpec> {
    WavePacketSpec::from_amu(mass_amu, sigma0, u, constants)
}

/// A strictly increasing list of masses in amu, optionally labelled.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MassSweep {
    masses: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl MassSweep {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        Self::check(&masses)?;
        Ok(Self { masses, labels: None })
    }

    pub fn with_labels(masses: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        Self::check(&masses)?;
        if labels.len() != masses.len() {
            return Err(domain(format!("{} labels for {} masses", labels.len(), masses.len())));
        }
        Ok(Self {
            masses,
            labels: Some(labels),
        })
    }

    /// The nine species of the reference detection-probability tables.
    pub fn builtin_species() -> Self {
        let rows: [(&str, f64); 9] = [
            ("H", 1.00),
            ("H2", 2.00),
            ("Li", 6.94),
            ("Be", 9.01),
            ("C", 12.01),
            ("Ag", 107.87),
            ("C60", 720.00),
            ("protein molecule", 7.2e4),
            ("heavier molecule", 7.2e7),
        ];
        Self {
            masses: rows.iter().map(|r| r.1).collect(),
            labels: Some(rows.iter().map(|r| r.0.to_string()).collect()),
        }
    }

    /// `points` masses spaced evenly in log10 between `min` and `max`.
    pub fn geometric(min: f64, max: f64, points: usize) -> Result<Self> {
        Self::spaced(min, max, points, true)
    }

    pub fn linear(min: f64, max: f64, points: usize) -> Result<Self> {
        Self::spaced(min, max, points, false)
    }

    fn spaced(min: f64, max: f64, points: usize, log: bool) -> Result<Self> {
        if points == 0 {
            return Err(domain("a sweep needs at least one point"));
        }
        if !(min > 0.0 && max.is_finite()) || max < min || (points > 1 && max == min) {
            return Err(domain(format!("invalid mass range [{min}, {max}]")));
        }
        if points == 1 {
            return Self::new(vec![min]);
        }
        let n = (points - 1) as f64;
        let masses = (0..points)
            .map(|i| {
                let f = i as f64 / n;
                if i == points - 1 {
                    max
                } else if log {
                    10f64.powf(min.log10() + f * (max.log10() - min.log10()))
                } else {
                    min + f * (max - min)
                }
            })
            .collect();
        Self::new(masses)
    }

    fn check(masses: &[f64]) -> Result<()> {
        if let Some(m) = masses.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
            return Err(domain(format!("masses must be positive, got {m}")));
        }
        if masses.windows(2).any(|w| w[1] <= w[0]) {
            return Err(domain("masses must be strictly increasing"));
        }
        Ok(())
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Label of row `i`, falling back to the formatted mass.
    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => format!("{}", self.masses[i]),
        }
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }
}
