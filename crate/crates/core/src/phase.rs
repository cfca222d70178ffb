//! Phase distribution and Barnett-Pegg / Carruthers-Nieto phase fluctuations.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::FockAmplitudes;
use crate::moments::{number_mean_and_variance, MomentSource};
use crate::witnesses::{Health, TRUNCATION_WARN};

pub const DEFAULT_GRID_POINTS: usize = 1024;
pub const MIN_GRID_POINTS: usize = 256;

/// Denominators below this suppress the corresponding parameter.
pub const FLUCTUATION_DENOMINATOR_TOL: f64 = 1e-12;

/// `P(theta)` sampled on a uniform grid over `[0, 2 pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDistribution {
    thetas: Vec<f64>,
    values: Vec<f64>,
    step: f64,
}

impl PhaseDistribution {
    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Trapezoid rule on the periodic grid.
    pub fn integral(&self) -> f64 {
        self.step * self.values.iter().sum::<f64>()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.thetas.iter().copied().zip(self.values.iter().copied())
    }
}

/// `P(theta) = |<theta|psi>|^2 = |sum_w c_w e^{-i w theta}|^2 / 2 pi`, which
/// peaks at `arg alpha` for a coherent state.
pub fn phase_density(psi: &FockAmplitudes, theta: f64) -> f64 {
    // the common factor e^{i offset theta} has unit modulus
    let z = Complex64::from_polar(1.0, -theta);
    let sum = psi.amps().iter().rev().fold(Complex64::default(), |acc, c| acc * z + c);
    sum.norm_sqr() / (2.0 * PI)
}

pub fn phase_distribution(psi: &FockAmplitudes, grid_points: usize) -> Result<PhaseDistribution> {
    if grid_points < MIN_GRID_POINTS {
        return Err(Error::Parameter(format!(
            "phase grid needs at least {MIN_GRID_POINTS} points, got {grid_points}"
        )));
    }
    let step = 2.0 * PI / grid_points as f64;
    let thetas: Vec<f64> = (0..grid_points).map(|i| i as f64 * step).collect();
    let values = thetas.iter().map(|&t| phase_density(psi, t)).collect();
    Ok(PhaseDistribution { thetas, values, step })
}

/// First and second moments of the Barnett-Pegg sine and cosine operators
/// `S = (a - a^dag) / (2i sqrt(Nbar + 1/2))`, `C = (a + a^dag) / (2 sqrt(Nbar + 1/2))`
/// with `Nbar` the mean photon number of the state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineCosineMoments {
    pub mean_n: f64,
    pub mean_s: f64,
    pub mean_s2: f64,
    pub mean_c: f64,
    pub mean_c2: f64,
}

pub fn sine_cosine_moments<S: MomentSource + ?Sized>(src: &S) -> SineCosineMoments {
    let a = src.moment_tj(0, 1);
    let a2 = src.moment_tj(0, 2);
    let n = src.moment_tj(1, 1).re;
    let scale_sqr = n + 0.5;
    let scale = scale_sqr.sqrt();
    // <a a^dag> + <a^dag a> = 2n + 1
    let sym = 2.0 * n + 1.0;
    SineCosineMoments {
        mean_n: n,
        mean_s: a.im / scale,
        mean_c: a.re / scale,
        mean_s2: (sym - 2.0 * a2.re) / (4.0 * scale_sqr),
        mean_c2: (sym + 2.0 * a2.re) / (4.0 * scale_sqr),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluctuationReport {
    /// `(dN)^2 [(dS)^2 + (dC)^2] / (<S>^2 + <C>^2)`; `None` when the denominator vanishes.
    pub u: Option<f64>,
    /// `(dN)^2 (dS)^2`.
    pub s_s: f64,
    /// `S_s / <C>^2`; `None` when `<C>^2` vanishes.
    pub q_param: Option<f64>,
    pub mean_s: f64,
    pub mean_c: f64,
    pub var_s: f64,
    pub var_c: f64,
    pub var_n: f64,
    pub health: Health,
}

impl FluctuationReport {
    /// Below the coherent-state value 1/2.
    pub fn below_coherent(&self) -> Option<bool> {
        self.u.map(|u| u < 0.5 - crate::witnesses::SIGN_TOL)
    }
}

pub fn phase_fluctuation_u<S: MomentSource + ?Sized>(src: &S) -> FluctuationReport {
    let m = sine_cosine_moments(src);
    let (_, var_n) = number_mean_and_variance(src);
    let var_s = m.mean_s2 - m.mean_s * m.mean_s;
    let var_c = m.mean_c2 - m.mean_c * m.mean_c;
    let den = m.mean_s * m.mean_s + m.mean_c * m.mean_c;
    let mut health = Health {
        denominator_small: false,
        truncation_warning: src.state().truncation_eps() > TRUNCATION_WARN,
    };
    let u = if den < FLUCTUATION_DENOMINATOR_TOL {
        health.denominator_small = true;
        None
    } else {
        Some(var_n * (var_s + var_c) / den)
    };
    let s_s = var_n * var_s;
    let c2 = m.mean_c * m.mean_c;
    let q_param = (c2 >= FLUCTUATION_DENOMINATOR_TOL).then(|| s_s / c2);
    FluctuationReport {
        u,
        s_s,
        q_param,
        mean_s: m.mean_s,
        mean_c: m.mean_c,
        var_s,
        var_c,
        var_n,
        health,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engineering::{pasdfs_amplitudes, StateSpec, DEFAULT_EPS};
    use crate::fock::OracleMoments;

    fn state(k: usize, q: usize, n: usize, alpha: Complex64) -> FockAmplitudes {
        pasdfs_amplitudes(&StateSpec::new(k, q, n, alpha), DEFAULT_EPS).unwrap()
    }

    #[test]
    fn fock_phase_is_uniform() {
        for n in 0..4 {
            let d = phase_distribution(&FockAmplitudes::fock(n), DEFAULT_GRID_POINTS).unwrap();
            for v in d.values() {
                assert!((v - 1.0 / (2.0 * PI)).abs() < 1e-12);
            }
            assert!((d.integral() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_size_guard() {
        assert!(phase_distribution(&FockAmplitudes::vacuum(), 128).is_err());
    }

    #[test]
    fn normalization_and_reflection_symmetry() {
        let psi = state(1, 2, 1, Complex64::new(0.9, 0.0));
        let d = phase_distribution(&psi, 512).unwrap();
        assert!((d.integral() - 1.0).abs() < 1e-10);
        let n = d.len();
        for i in 1..n {
            assert!((d.values()[i] - d.values()[n - i]).abs() < 1e-12);
        }
        assert!(d.values().iter().all(|v| *v >= -1e-14));
    }

    #[test]
    fn global_phase_leaves_density_unchanged() {
        let psi = state(2, 1, 0, Complex64::new(0.4, -0.7));
        let rotated = psi.with_global_phase(1.234);
        for i in 0..50 {
            let t = i as f64 * 0.13;
            assert!((phase_density(&psi, t) - phase_density(&rotated, t)).abs() < 1e-12);
        }
    }

    #[test]
    fn coherent_sine_cosine() {
        let alpha = 1.3;
        let psi = state(0, 0, 0, Complex64::new(alpha, 0.0));
        let m = sine_cosine_moments(&psi);
        assert!(m.mean_s.abs() < 1e-14);
        assert!((m.mean_c - alpha / (alpha * alpha + 0.5).sqrt()).abs() < 1e-12);
        let f = sine_cosine_moments(&FockAmplitudes::fock(3));
        assert_eq!((f.mean_s, f.mean_c), (0.0, 0.0));
    }

    #[test]
    fn coherent_u_is_one_half() {
        for r in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let psi = state(0, 0, 0, Complex64::from_polar(r, 0.7));
            let u = phase_fluctuation_u(&psi).u.unwrap();
            assert!((u - 0.5).abs() < 1e-9, "r={r} u={u}");
        }
    }

    #[test]
    fn fock_u_is_suppressed() {
        let r = phase_fluctuation_u(&FockAmplitudes::fock(2));
        assert!(r.u.is_none());
        assert!(r.q_param.is_none());
        assert!(r.health.denominator_small);
        assert!(r.var_s >= 0.0 && r.var_c >= 0.0 && r.var_n >= 0.0);
    }

    #[test]
    fn subtracted_state_matches_oracle_and_dips_below_coherent() {
        let psi = state(1, 2, 0, Complex64::new(1.0, 0.0));
        let a = sine_cosine_moments(&psi);
        let b = sine_cosine_moments(&OracleMoments::new(&psi));
        for (x, y) in [
            (a.mean_s, b.mean_s),
            (a.mean_c, b.mean_c),
            (a.mean_s2, b.mean_s2),
            (a.mean_c2, b.mean_c2),
        ] {
            assert!((x - y).abs() < 1e-10);
        }
        let r = phase_fluctuation_u(&psi);
        assert!(r.u.unwrap() < 0.5, "U = {:?}", r.u);
        assert_eq!(r.below_coherent(), Some(true));
    }
}
