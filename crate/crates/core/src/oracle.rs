//! Classical Liouville ensembles used as an independent check on the
//! quantum results.
//!
//! The initial phase-space density is the product of the packet's position
//! density (mean `z0`, std `σ0`) and momentum density (mean `m u`, std
//! `ħ/2σ0`). Each sample then moves on its own parabola, so for the linear
//! potential the position marginal at time `t` is Gaussian with exactly the
//! quantum variance `σ0² + (ħt/2mσ0)²`.
//!
//! Samples are drawn in fixed-size chunks. Chunk `k` uses a ChaCha8 stream
//! seeded with `seed` on stream `k`, and Gaussian pairs come from the
//! Box–Muller transform `r = sqrt(-2 ln u1)`, `(r cos 2πu2, r sin 2πu2)`,
//! with `u1 ∈ (0, 1]` and `u2 ∈ [0, 1)` built from the top 53 bits of a
//! 64-bit output. Results therefore do not depend on the thread count.

use std::f64::consts::TAU;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detection::DetectionWindow;
use crate::error::{domain, Error, Result};
use crate::kernel::Evolution;
use crate::physics::{PhysicalConstants, WavePacketSpec};
use crate::quadrature::pairwise_sum;

/// Samples per independently seeded chunk.
pub const CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub z: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalEnsemble {
    pub samples: Vec<PhasePoint>,
    pub m: f64,
    pub seed: u64,
    /// Packet the ensemble was matched to.
    pub spec: WavePacketSpec,
}

/// A Monte-Carlo estimate and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalArrival {
    pub mean: f64,
    pub std_error: f64,
    pub included: usize,
    /// Trajectories that never reach the detector, or reach it after the cutoff.
    pub excluded: usize,
}

#[inline]
fn unit_open_low(x: u64) -> f64 {
    ((x >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[inline]
fn unit_closed_low(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// One Box–Muller pair of independent standard normals.
#[inline]
pub fn box_muller<R: RngCore>(rng: &mut R) -> (f64, f64) {
    let u1 = unit_open_low(rng.next_u64());
    let u2 = unit_closed_low(rng.next_u64());
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (TAU * u2).sin_cos();
    (r * c, r * s)
}

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// Draws `n` phase-space points matched to the packet's initial state.
pub fn sample_ensemble(
    spec: &WavePacketSpec,
    constants: &PhysicalConstants,
    n: usize,
    seed: u64,
) -> Result<ClassicalEnsemble> {
    if n == 0 {
        return Err(domain("ensemble size must be at least 1"));
    }
    spec.validate()?;
    let sigma_p = constants.hbar / (2.0 * spec.sigma0);
    let p_mean = spec.m_inertial * spec.u;
    let mut samples = vec![PhasePoint { z: 0.0, p: 0.0 }; n];
    samples.par_chunks_mut(CHUNK).enumerate().for_each(|(k, chunk)| {
        let mut rng = chunk_rng(seed, k);
        for s in chunk.iter_mut() {
            let (a, b) = box_muller(&mut rng);
            *s = PhasePoint {
                z: spec.z0 + spec.sigma0 * a,
                p: p_mean + sigma_p * b,
            };
        }
    });
    Ok(ClassicalEnsemble {
        samples,
        m: spec.m_inertial,
        seed,
        spec: *spec,
    })
}

impl ClassicalEnsemble {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Displacement of a sample from the packet centre at time `t`.
    ///
    /// Equal to `z + (p/m) t - a t²/2 - c(t)`, arranged so the large common
    /// drift cancels before rounding.
    #[inline]
    fn offset(&self, s: &PhasePoint, t: f64) -> f64 {
        (s.z - self.spec.z0) + (s.p / self.m - self.spec.u) * t
    }

    /// Sample mean and (unbiased) variance of position at time `t`.
    pub fn position_moments(&self, constants: &PhysicalConstants, t: f64) -> (f64, f64) {
        let centre = Evolution::new(&self.spec, constants).center(t);
        let n = self.len() as f64;
        let sums: Vec<f64> = self
            .samples
            .par_chunks(CHUNK)
            .map(|c| pairwise_sum(&c.iter().map(|s| self.offset(s, t)).collect::<Vec<_>>()))
            .collect();
        let mean = pairwise_sum(&sums) / n;
        let sq: Vec<f64> = self
            .samples
            .par_chunks(CHUNK)
            .map(|c| pairwise_sum(&c.iter().map(|s| (self.offset(s, t) - mean).powi(2)).collect::<Vec<_>>()))
            .collect();
        let var = if self.len() > 1 {
            pairwise_sum(&sq) / (n - 1.0)
        } else {
            0.0
        };
        (centre + mean, var)
    }

    /// Sample standard deviations of the initial position and momentum.
    pub fn initial_spreads(&self) -> (f64, f64) {
        let n = self.len() as f64;
        let mz = pairwise_sum(&self.samples.iter().map(|s| s.z).collect::<Vec<_>>()) / n;
        let mp = pairwise_sum(&self.samples.iter().map(|s| s.p).collect::<Vec<_>>()) / n;
        let vz = pairwise_sum(&self.samples.iter().map(|s| (s.z - mz).powi(2)).collect::<Vec<_>>()) / n;
        let vp = pairwise_sum(&self.samples.iter().map(|s| (s.p - mp).powi(2)).collect::<Vec<_>>()) / n;
        (vz.sqrt(), vp.sqrt())
    }
}

/// Fraction of trajectories inside the window at `window.t_eval`.
pub fn classical_detection_probability(
    ensemble: &ClassicalEnsemble,
    constants: &PhysicalConstants,
    window: &DetectionWindow,
) -> Result<Estimate> {
    window.validate()?;
    let t = window.t_eval;
    let centre = Evolution::new(&ensemble.spec, constants).center(t);
    let lo = window.lower() - centre;
    let hi = window.upper() - centre;
    let hits: usize = ensemble
        .samples
        .par_chunks(CHUNK)
        .map(|c| {
            c.iter()
                .filter(|s| {
                    let d = ensemble.offset(s, t);
                    d >= lo && d <= hi
                })
                .count()
        })
        .sum();
    let n = ensemble.len();
    let p = hits as f64 / n as f64;
    Ok(Estimate {
        value: p,
        std_error: (p * (1.0 - p) / n as f64).sqrt(),
        n,
    })
}

/// First time at which a trajectory starting `height` above the detector
/// with upward speed `v` crosses it, under downward acceleration `a`.
fn first_passage(height: f64, v: f64, a: f64) -> Option<f64> {
    let disc = v * v + 2.0 * a * height;
    if height > 0.0 {
        let r = disc.sqrt();
        Some(if v >= 0.0 { (v + r) / a } else { 2.0 * height / (r - v) })
    } else if height == 0.0 {
        Some(0.0)
    } else if v > 0.0 && disc >= 0.0 {
        // Starts below the detector but rises through it.
        Some(-2.0 * height / (v + disc.sqrt()))
    } else {
        None
    }
}

/// Mean first-passage time through the detector a distance `distance`
/// below `z0`, ignoring trajectories that arrive after `cutoff`.
pub fn classical_mean_arrival(
    ensemble: &ClassicalEnsemble,
    constants: &PhysicalConstants,
    distance: f64,
    cutoff: Option<f64>,
) -> Result<ClassicalArrival> {
    if ensemble.spec.u != 0.0 {
        return Err(Error::Unsupported(format!(
            "arrival times need an ensemble released at rest, got u = {}",
            ensemble.spec.u
        )));
    }
    if !(distance.is_finite() && distance > 0.0) {
        return Err(domain(format!("detector distance must be positive, got {distance}")));
    }
    let a = ensemble.spec.acceleration(constants);
    let limit = cutoff.unwrap_or(f64::INFINITY);
    let z0 = ensemble.spec.z0;
    let m = ensemble.m;

    let partial: Vec<(f64, f64, usize)> = ensemble
        .samples
        .par_chunks(CHUNK)
        .map(|c| {
            let times: Vec<f64> = c
                .iter()
                .filter_map(|s| first_passage(s.z - z0 + distance, s.p / m, a))
                .filter(|t| *t <= limit)
                .collect();
            let sq: Vec<f64> = times.iter().map(|t| t * t).collect();
            (pairwise_sum(&times), pairwise_sum(&sq), times.len())
        })
        .collect();

    let included: usize = partial.iter().map(|p| p.2).sum();
    let excluded = ensemble.len() - included;
    if included == 0 {
        return Err(Error::NotFound("no trajectory reaches the detector".into()));
    }
    let n = included as f64;
    let mean = pairwise_sum(&partial.iter().map(|p| p.0).collect::<Vec<_>>()) / n;
    let mean_sq = pairwise_sum(&partial.iter().map(|p| p.1).collect::<Vec<_>>()) / n;
    let var = (mean_sq - mean * mean).max(0.0);
    Ok(ClassicalArrival {
        mean,
        std_error: (var / n).sqrt(),
        included,
        excluded,
    })
}
