//! Closed-form amplitudes of displaced Fock states and of their
//! photon-added-then-subtracted descendants.
//!
//! The displaced Fock state `D(alpha)|n>` has number-basis coefficients
//!
//! ```text
//! m >= n:  sqrt(n!/m!) alpha^(m-n)       e^(-|alpha|^2/2) L_n^(m-n)(|alpha|^2)
//! m <  n:  sqrt(m!/n!) (-alpha*)^(n-m)   e^(-|alpha|^2/2) L_m^(n-m)(|alpha|^2)
//! ```
//!
//! Applying `a^q a^dag^k` maps `|m>` to `(m+k)!/sqrt(m!(m+k-q)!) |m+k-q>`.
//! Both steps are evaluated with log-factorials so the series can run to a
//! few hundred photons.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{FockAmplitudes, ANNIHILATION_NORM};
use crate::moments::MAX_MOMENT_ORDER;
use crate::numerics::{assoc_laguerre, log_factorial, DEFAULT_MAX_FACTORIAL};

/// Default bound on the norm of the discarded tail.
pub const DEFAULT_EPS: f64 = 1e-12;

/// Largest k, q or n accepted in a [`StateSpec`].
pub const MAX_ENGINEERING: usize = 12;

/// Highest photon number a constructed state may reach; leaves room for
/// moments of order [`MAX_MOMENT_ORDER`] inside the factorial table.
pub const MAX_PHOTON: usize = DEFAULT_MAX_FACTORIAL - MAX_MOMENT_ORDER;

/// Engineering parameters of `N a^q a^dag^k D(alpha)|n>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateSpec {
    pub k: usize,
    pub q: usize,
    pub n: usize,
    pub alpha: Complex64,
}

impl StateSpec {
    pub fn new(k: usize, q: usize, n: usize, alpha: Complex64) -> Self {
        Self { k, q, n, alpha }
    }

    /// Builds `alpha = modulus * e^{i theta}`.
    pub fn polar(k: usize, q: usize, n: usize, modulus: f64, theta: f64) -> Self {
        Self::new(k, q, n, Complex64::from_polar(modulus, theta))
    }

    pub fn validate(&self) -> Result<()> {
        for (what, v) in [("k", self.k), ("q", self.q), ("n", self.n)] {
            if v > MAX_ENGINEERING {
                return Err(Error::Capacity {
                    what,
                    value: v,
                    limit: MAX_ENGINEERING,
                });
            }
        }
        if !(self.alpha.re.is_finite() && self.alpha.im.is_finite()) {
            return Err(Error::Parameter("alpha must be finite".into()));
        }
        Ok(())
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= 1e-6 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("eps must lie in (0, 1e-6], got {eps}")))
    }
}

/// `<m|D(alpha)|n>` for `alpha != 0`.
fn dfs_coefficient(alpha: Complex64, n: usize, m: usize) -> Result<Complex64> {
    let x = alpha.norm_sqr();
    let (r, theta) = alpha.to_polar();
    let (lo, hi) = if m >= n { (n, m) } else { (m, n) };
    let d = hi - lo;
    let log_mag = 0.5 * (log_factorial(lo)? - log_factorial(hi)?) + d as f64 * r.ln() - 0.5 * x;
    let lag = assoc_laguerre(lo, d as i64, x);
    let phase = if m >= n {
        Complex64::from_polar(1.0, d as f64 * theta)
    } else {
        // (-alpha*)^(n-m)
        let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
        Complex64::from_polar(sign, -(d as f64) * theta)
    };
    Ok(phase * (log_mag.exp() * lag))
}

/// Coefficients `<m|D(alpha)|n>` for `m = 0 ..= M` with discarded tail norm below `eps`.
pub fn dfs_coefficients(alpha: Complex64, n: usize, eps: f64) -> Result<FockAmplitudes> {
    check_eps(eps)?;
    StateSpec::new(0, 0, n, alpha).validate()?;
    build(alpha, n, 0, 0, eps)
}

/// Normalized amplitudes of `N a^q a^dag^k D(alpha)|n>`.
///
/// The stored window starts at photon number `max(0, k - q)`, or at the
/// single occupied level when `alpha = 0`.
pub fn pasdfs_amplitudes(spec: &StateSpec, eps: f64) -> Result<FockAmplitudes> {
    check_eps(eps)?;
    spec.validate()?;
    build(spec.alpha, spec.n, spec.k, spec.q, eps)
}

fn build(alpha: Complex64, n: usize, k: usize, q: usize, eps: f64) -> Result<FockAmplitudes> {
    if alpha == Complex64::default() {
        // a^q a^dag^k |n> is proportional to |n + k - q>, or zero
        return match (n + k).checked_sub(q) {
            Some(w) => Ok(FockAmplitudes::fock(w)),
            None => Err(Error::Annihilated { norm: 0.0 }),
        };
    }

    let x = alpha.norm_sqr();
    let first_m = q.saturating_sub(k);
    let spread = x + (n + k) as f64;
    // beyond this the weighted terms decay monotonically
    let past_peak = (spread + 2.0 * spread.sqrt() + 2.0).ceil() as usize;

    let mut amps = Vec::new();
    let mut norm_sqr = 0.0;
    let mut prev_sqr = f64::INFINITY;
    let mut small_run = 0;
    let mut m = first_m;
    loop {
        let w = m + k - q;
        if w > MAX_PHOTON {
            return Err(Error::Truncation {
                message: format!("series did not converge below eps = {eps:e} by photon number {MAX_PHOTON}"),
                suggested_dim: MAX_PHOTON,
            });
        }
        let weight = log_factorial(m + k)? - 0.5 * log_factorial(m)? - 0.5 * log_factorial(w)?;
        let c = dfs_coefficient(alpha, n, m)? * weight.exp();
        let sqr = c.norm_sqr();
        amps.push(c);
        norm_sqr += sqr;

        if m >= past_peak && m >= n {
            let rel = sqr / norm_sqr;
            let decaying = sqr <= 0.5 * prev_sqr;
            if rel < 1e-2 * eps * eps && decaying {
                small_run += 1;
            } else {
                small_run = 0;
            }
            if small_run >= 2 {
                break;
            }
        }
        prev_sqr = sqr;
        m += 1;
    }

    if norm_sqr.is_nan() || norm_sqr <= ANNIHILATION_NORM {
        return Err(Error::Annihilated { norm: norm_sqr.sqrt() });
    }
    // geometric tail with ratio <= 1/2 past the last stored term
    let tail = (2.0 * amps.last().map_or(0.0, |c| c.norm_sqr()) / norm_sqr).sqrt();
    FockAmplitudes::normalized(first_m + k - q, amps, tail)
}
