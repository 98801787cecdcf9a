//! Closed-form evolution of a Gaussian packet in the potential `V = m_g g z`.
//!
//! Gravity pulls towards `-z`. A packet launched from `z0` with group
//! velocity `u` has its centre at `z0 + u t - a t²/2`, with `a = (m_g/m_i) g`,
//! and its width grows as `σ(t) = σ0 sqrt(1 + (ħt / 2 m σ0²)²)`.
//!
//! Density, velocity field and current use these closed forms directly and
//! never go through [`Evolution::psi`]. The phase of ψ grows like
//! `m g² t³ / 6ħ`, which for heavy packets exceeds 10¹⁵ rad; every phase
//! term is reduced modulo 2π before exponentiation, but past ~10¹⁶ rad the
//! absolute phase carries no significant digits. The modulus is unaffected.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::physics::{PhysicalConstants, WavePacketSpec};

/// Value of ψ(z, t), in cm^{-1/2}.
pub type ComplexAmplitude = Complex64;

/// Density, velocity and current at one space-time point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicSample {
    pub z: f64,
    pub t: f64,
    pub rho: f64,
    pub v: f64,
    pub j: f64,
}

/// Precomputed evaluator for one packet. Methods assume `t >= 0`; the free
/// functions at module level check it.
#[derive(Debug, Clone, Copy)]
pub struct Evolution {
    spec: WavePacketSpec,
    hbar: f64,
    accel: f64,
    /// ħ / (2 m σ0²), the inverse spreading time scale.
    spread_rate: f64,
}

impl Evolution {
    pub fn new(spec: &WavePacketSpec, constants: &PhysicalConstants) -> Self {
        Self {
            spec: *spec,
            hbar: constants.hbar,
            accel: spec.acceleration(constants),
            spread_rate: constants.hbar / (2.0 * spec.m_inertial * spec.sigma0 * spec.sigma0),
        }
    }

    pub fn spec(&self) -> &WavePacketSpec {
        &self.spec
    }

    pub fn acceleration(&self) -> f64 {
        self.accel
    }

    /// Dimensionless spreading parameter ħt / (2 m σ0²).
    #[inline]
    fn tau(&self, t: f64) -> f64 {
        self.spread_rate * t
    }

    #[inline]
    pub fn sigma(&self, t: f64) -> f64 {
        self.spec.sigma0 * self.tau(t).hypot(1.0)
    }

    #[inline]
    pub fn center(&self, t: f64) -> f64 {
        self.spec.z0 + self.spec.u * t - 0.5 * self.accel * t * t
    }

    #[inline]
    pub fn center_velocity(&self, t: f64) -> f64 {
        self.spec.u - self.accel * t
    }

    /// σ'(t)/σ(t) = ħ²t / (4 m² σ0² σ²).
    #[inline]
    pub fn spread_coefficient(&self, t: f64) -> f64 {
        let tau = self.tau(t);
        self.spread_rate * tau / (1.0 + tau * tau)
    }

    #[inline]
    pub fn density(&self, z: f64, t: f64) -> f64 {
        let s = self.sigma(t);
        let x = (z - self.center(t)) / s;
        (-0.5 * x * x).exp() / ((2.0 * PI).sqrt() * s)
    }

    #[inline]
    pub fn velocity(&self, z: f64, t: f64) -> f64 {
        self.center_velocity(t) + self.spread_coefficient(t) * (z - self.center(t))
    }

    #[inline]
    pub fn current(&self, z: f64, t: f64) -> f64 {
        self.density(z, t) * self.velocity(z, t)
    }

    pub fn sample(&self, z: f64, t: f64) -> KinematicSample {
        let rho = self.density(z, t);
        let v = self.velocity(z, t);
        KinematicSample {
            z,
            t,
            rho,
            v,
            j: rho * v,
        }
    }

    /// The time-evolved wave function.
    pub fn psi(&self, z: f64, t: f64) -> ComplexAmplitude {
        let s0 = self.spec.sigma0;
        let tau = self.tau(t);
        let sigma2 = s0 * s0 * (1.0 + tau * tau);
        let x = z - self.center(t);
        let k = self.spec.m_inertial / self.hbar;
        let u = self.spec.u;
        let xi = z - self.spec.z0;

        let modulus =
            (2.0 * PI).powf(-0.25) / s0.sqrt() * (1.0 + tau * tau).powf(-0.25) * (-x * x / (4.0 * sigma2)).exp();

        let phase = [
            -0.5 * tau.atan(),
            x * x * tau / (4.0 * sigma2),
            k * (u - self.accel * t) * (xi - 0.5 * u * t),
            -k * self.accel * self.accel * t * t * t / 6.0,
            -k * self.accel * self.spec.z0 * t,
        ]
        .iter()
        .map(|p| p.rem_euclid(TAU))
        .sum::<f64>()
        .rem_euclid(TAU);

        Complex64::from_polar(modulus, phase)
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(domain(format!("time must be non-negative, got {t}")));
    }
    Ok(())
}

/// Packet width σ(t).
pub fn sigma_t(spec: &WavePacketSpec, constants: &PhysicalConstants, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(Evolution::new(spec, constants).sigma(t))
}

pub fn psi(spec: &WavePacketSpec, constants: &PhysicalConstants, z: f64, t: f64) -> Result<ComplexAmplitude> {
    check_time(t)?;
    Ok(Evolution::new(spec, constants).psi(z, t))
}

pub fn density(spec: &WavePacketSpec, constants: &PhysicalConstants, z: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(Evolution::new(spec, constants).density(z, t))
}

pub fn velocity_field(spec: &WavePacketSpec, constants: &PhysicalConstants, z: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(Evolution::new(spec, constants).velocity(z, t))
}

/// Probability current; positive values flow towards increasing `z`.
pub fn current(spec: &WavePacketSpec, constants: &PhysicalConstants, z: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(Evolution::new(spec, constants).current(z, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::make_spec_from_amu;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn consts() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    #[test]
    fn sigma_identity_and_limits() {
        let c = consts();
        let h = make_spec_from_amu(1.0, 1e-3, 1e3, &c).unwrap();
        assert_eq!(sigma_t(&h, &c, 0.0).unwrap(), 1e-3);
        assert!(sigma_t(&h, &c, -1.0).is_err());

        // ħ t2 / (2 m σ0) by hand, t2 = 2u/g.
        let t2 = 2000.0 / 980.0;
        let expected = 1e-3 * (1.0 + (c.hbar * t2 / (2.0 * c.amu * 1e-6)).powi(2)).sqrt();
        let s = sigma_t(&h, &c, t2).unwrap();
        assert_relative_eq!(s, expected, max_relative = 1e-14);
        assert!((s - 0.648).abs() < 1e-3, "sigma(t2) = {s}");

        let heavy = make_spec_from_amu(1e30, 1e-3, 1e3, &c).unwrap();
        assert_relative_eq!(sigma_t(&heavy, &c, 10.0).unwrap(), 1e-3, max_relative = 1e-15);
    }

    #[test]
    fn psi_at_origin() {
        let c = consts();
        let s = make_spec_from_amu(1.0, 1e-3, 0.0, &c).unwrap();
        let p = psi(&s, &c, 0.0, 0.0).unwrap();
        assert_relative_eq!(p.re, (2.0 * PI * 1e-6).powf(-0.25), max_relative = 1e-14);
        assert!(p.im.abs() < 1e-12 * p.re);
    }

    #[test]
    fn psi_phase_at_half_launch_point() {
        // At z = ut/2 the launch phase factor vanishes, leaving the gravity
        // phase -(m/ħ) g²t³/6 plus the complex-width contributions.
        let c = PhysicalConstants::default();
        let s = make_spec_from_amu(1.0, 1e-4, 10.0, &c).unwrap();
        let t = 2e-3;
        let z = s.u * t / 2.0;
        let ev = Evolution::new(&s, &c);
        let tau = c.hbar * t / (2.0 * s.m_inertial * 1e-8);
        let sig2 = 1e-8 * (1.0 + tau * tau);
        let x = z - (s.u * t - 0.5 * c.g_accel * t * t);
        let expected = -0.5 * tau.atan() + x * x * tau / (4.0 * sig2)
            - s.m_inertial / c.hbar * c.g_accel.powi(2) * t.powi(3) / 6.0;
        let got = ev.psi(z, t).arg();
        let diff = (got - expected).rem_euclid(TAU);
        assert!(diff.min(TAU - diff) < 1e-9, "phase {got} vs {expected}");
    }

    #[test]
    fn psi_modulus_matches_density() {
        let c = consts();
        for m in [1.0, 720.0, 1e8] {
            let s = make_spec_from_amu(m, 1e-3, 1e3, &c).unwrap();
            let ev = Evolution::new(&s, &c);
            for t in [0.0, 0.3, 1.0, 2.04] {
                for k in -4..=4 {
                    let z = ev.center(t) + 0.5 * k as f64 * ev.sigma(t);
                    let p = ev.psi(z, t).norm_sqr();
                    assert_relative_eq!(p, ev.density(z, t), max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn psi_solves_schrodinger() {
        // iħ ψ_t = -ħ²/(2m) ψ_zz + m_g g z ψ, by central differences.
        let c = consts();
        let s = WavePacketSpec::with_masses(c.amu, 1.3 * c.amu, 1e-4, 10.0, 2e-5).unwrap();
        let ev = Evolution::new(&s, &c);
        let m = s.m_inertial;
        let t = 1.5e-3;
        let hz = s.sigma0 * 1e-3;
        let ht = 1e-9;
        for k in -3..=3 {
            let z = ev.center(t) + 0.7 * k as f64 * ev.sigma(t);
            let d_t = (ev.psi(z, t + ht) - ev.psi(z, t - ht)) / (2.0 * ht);
            let d_zz = (ev.psi(z + hz, t) - 2.0 * ev.psi(z, t) + ev.psi(z - hz, t)) / (hz * hz);
            let lhs = Complex64::i() * c.hbar * d_t;
            let rhs = -c.hbar * c.hbar / (2.0 * m) * d_zz + s.m_grav * c.g_accel * z * ev.psi(z, t);
            let scale = (c.hbar * c.hbar / (2.0 * m) * d_zz).norm() + lhs.norm();
            assert!((lhs - rhs).norm() < 1e-5 * scale, "residual at k={k}");
        }
    }

    #[test]
    fn current_matches_psi_gradient() {
        // J = (ħ/m) Im(ψ* ∂ψ/∂z), an independent route to the closed form.
        let c = consts();
        let s = make_spec_from_amu(3.0, 1e-4, 5.0, &c).unwrap();
        let ev = Evolution::new(&s, &c);
        let t = 4e-3;
        let h = ev.sigma(t) * 1e-5;
        for k in -4..=4 {
            let z = ev.center(t) + 0.5 * k as f64 * ev.sigma(t);
            let grad = (ev.psi(z + h, t) - ev.psi(z - h, t)) / (2.0 * h);
            let j = c.hbar / s.m_inertial * (ev.psi(z, t).conj() * grad).im;
            assert_relative_eq!(j, ev.current(z, t), max_relative = 1e-6);
        }
    }

    #[test]
    fn density_examples() {
        let c = consts();
        let s = make_spec_from_amu(1.0, 1e-3, 0.0, &c).unwrap();
        assert_relative_eq!(
            density(&s, &c, 0.0, 0.0).unwrap(),
            1.0 / (2.0 * PI * 1e-6).sqrt(),
            max_relative = 1e-14
        );
        // At t2 = 2u/g the centre is back at z = 0.
        let s = make_spec_from_amu(1.0, 1e-3, 1e3, &c).unwrap();
        let t2 = s.classical_return_time(&c).unwrap();
        let sig = sigma_t(&s, &c, t2).unwrap();
        assert_relative_eq!(
            density(&s, &c, 0.0, t2).unwrap(),
            1.0 / (2.0 * PI * sig * sig).sqrt(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn peak_tracks_classical_trajectory_with_mass_ratio() {
        let c = consts();
        let s = WavePacketSpec::with_masses(10.0 * c.amu, 12.0 * c.amu, 1e-3, 50.0, 0.1).unwrap();
        let ev = Evolution::new(&s, &c);
        for t in [0.0, 0.01, 0.05, 0.1] {
            let expected = 0.1 + 50.0 * t - 0.5 * 1.2 * c.g_accel * t * t;
            let sig = ev.sigma(t);
            let cell = sig / 500.0;
            let argmax = (-2000..=2000)
                .map(|i| expected + i as f64 * cell)
                .max_by(|a, b| ev.density(*a, t).total_cmp(&ev.density(*b, t)))
                .unwrap();
            assert!((argmax - expected).abs() <= cell);
        }
    }

    #[test]
    fn velocity_examples() {
        let c = consts();
        let s = make_spec_from_amu(1.0, 1e-4, 0.0, &c).unwrap();
        let ev = Evolution::new(&s, &c);
        for z in [-1.0, 0.0, 3.0] {
            assert_eq!(velocity_field(&s, &c, z, 0.0).unwrap(), 0.0);
            assert_eq!(current(&s, &c, z, 0.0).unwrap(), 0.0);
        }
        // At the centre the speed is the free-fall speed g t, directed down.
        let t = 3e-3;
        let zc = -0.5 * c.g_accel * t * t;
        assert_relative_eq!(ev.velocity(zc, t), -c.g_accel * t, max_relative = 1e-14);
        let peak = 1.0 / ((2.0 * PI).sqrt() * ev.sigma(t));
        assert_relative_eq!(ev.current(zc, t), -peak * c.g_accel * t, max_relative = 1e-12);

        // Mirrored fall coordinate reproduces gt + ħ²t/(4m²σ0²σ²)(Z - gt²/2).
        let zf = 7e-3;
        let sig = ev.sigma(t);
        let fall_frame = c.g_accel * t
            + c.hbar.powi(2) * t / (4.0 * s.m_inertial.powi(2) * 1e-8 * sig * sig) * (zf - 0.5 * c.g_accel * t * t);
        assert_relative_eq!(-ev.velocity(-zf, t), fall_frame, max_relative = 1e-12);

        let heavy = make_spec_from_amu(1e20, 1e-4, 0.0, &c).unwrap();
        let evh = Evolution::new(&heavy, &c);
        for z in [-1.0, 0.0, 1.0] {
            assert_relative_eq!(evh.velocity(z, t), -c.g_accel * t, max_relative = 1e-12);
        }
    }

    #[test]
    fn sample_is_consistent() {
        let c = consts();
        let s = make_spec_from_amu(2.0, 1e-3, 1e3, &c).unwrap();
        let k = Evolution::new(&s, &c).sample(300.0, 0.5);
        assert_eq!(k.j, k.rho * k.v);
        assert!(k.rho >= 0.0);
    }

    proptest! {
        #[test]
        fn sigma_monotone_in_time_and_mass(m in 0.5f64..1e6, t1 in 0.0f64..5.0, dt in 1e-3f64..5.0) {
            let c = consts();
            let a = make_spec_from_amu(m, 1e-3, 0.0, &c).unwrap();
            let b = make_spec_from_amu(2.0 * m, 1e-3, 0.0, &c).unwrap();
            let ea = Evolution::new(&a, &c);
            let eb = Evolution::new(&b, &c);
            prop_assume!(ea.tau(t1 + dt) > 1e-6);
            prop_assert!(ea.sigma(t1 + dt) > ea.sigma(t1));
            prop_assert!(eb.sigma(t1 + dt) < ea.sigma(t1 + dt));
        }
    }
}
