//! Truncated Fock-space states and the dense-matrix oracle.
//!
//! The oracle implements every operation literally (ladder matrices, the
//! displacement operator as a matrix exponential, repeated matrix action)
//! and is the reference the closed-form paths are tested against.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::engineering::StateSpec;
use crate::error::{Error, Result};
use crate::moments::{MomentKey, MomentSource};

/// States whose squared norm falls below this are treated as annihilated.
pub const ANNIHILATION_NORM: f64 = 1e-14;

/// Largest tolerated probability in the top levels of an oracle basis.
pub const ORACLE_NORM_LOSS: f64 = 1e-8;

/// Number of top basis levels inspected for leakage by [`displace_oracle`].
const BOUNDARY_BAND: usize = 5;

/// Normalized amplitudes `c_w` of a pure state for photon numbers
/// `w = offset .. offset + len`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockAmplitudes {
    offset: usize,
    amps: Vec<Complex64>,
    truncation_eps: f64,
}

impl FockAmplitudes {
    /// Wraps raw amplitudes without renormalizing.
    pub fn from_raw(offset: usize, amps: Vec<Complex64>, truncation_eps: f64) -> Self {
        Self {
            offset,
            amps,
            truncation_eps,
        }
    }

    /// Normalizes `amps` to unit norm.
    pub fn normalized(offset: usize, mut amps: Vec<Complex64>, truncation_eps: f64) -> Result<Self> {
        let norm_sqr: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
        if norm_sqr.is_nan() || norm_sqr <= ANNIHILATION_NORM {
            return Err(Error::Annihilated { norm: norm_sqr.sqrt() });
        }
        let scale = norm_sqr.sqrt().recip();
        amps.iter_mut().for_each(|c| *c *= scale);
        Ok(Self::from_raw(offset, amps, truncation_eps))
    }

    /// The number state `|n>`, stored exactly.
    pub fn fock(n: usize) -> Self {
        Self::from_raw(n, vec![Complex64::new(1.0, 0.0)], 0.0)
    }

    pub fn vacuum() -> Self {
        Self::fock(0)
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    /// Bound on the norm of the part of the state discarded by truncation.
    pub fn truncation_eps(&self) -> f64 {
        self.truncation_eps
    }

    /// Highest stored photon number.
    pub fn max_photon(&self) -> usize {
        self.offset + self.amps.len().saturating_sub(1)
    }

    /// Amplitude at photon number `w`, zero outside the stored window.
    pub fn amplitude(&self, w: usize) -> Complex64 {
        w.checked_sub(self.offset)
            .and_then(|i| self.amps.get(i).copied())
            .unwrap_or_default()
    }

    pub fn probability(&self, w: usize) -> f64 {
        self.amplitude(w).norm_sqr()
    }

    /// `(w, c_w)` pairs in increasing photon number.
    pub fn iter(&self) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        self.amps.iter().enumerate().map(move |(i, c)| (self.offset + i, *c))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Multiplies every amplitude by `e^{i phi}`.
    pub fn with_global_phase(&self, phi: f64) -> Self {
        let ph = Complex64::from_polar(1.0, phi);
        Self::from_raw(
            self.offset,
            self.amps.iter().map(|c| c * ph).collect(),
            self.truncation_eps,
        )
    }

    /// Largest componentwise difference over the union of both supports.
    pub fn max_abs_diff(&self, other: &FockAmplitudes) -> f64 {
        let lo = self.offset.min(other.offset);
        let hi = self.max_photon().max(other.max_photon());
        (lo..=hi)
            .map(|w| (self.amplitude(w) - other.amplitude(w)).norm())
            .fold(0.0, f64::max)
    }

    /// Dense column vector over photon numbers `0 .. dim`.
    pub fn to_dense(&self, dim: usize) -> Result<DVector<Complex64>> {
        if self.max_photon() >= dim {
            return Err(Error::Parameter(format!(
                "state reaches photon number {} but dim is {dim}",
                self.max_photon()
            )));
        }
        Ok(DVector::from_fn(dim, |w, _| self.amplitude(w)))
    }

    /// Trims leading and trailing exact zeros.
    pub fn from_dense(v: &DVector<Complex64>, truncation_eps: f64) -> Self {
        let first = v.iter().position(|c| *c != Complex64::default());
        let Some(first) = first else {
            return Self::from_raw(0, Vec::new(), truncation_eps);
        };
        let last = v.iter().rposition(|c| *c != Complex64::default()).unwrap();
        Self::from_raw(
            first,
            v.rows(first, last - first + 1).iter().copied().collect(),
            truncation_eps,
        )
    }
}

/// Dense complex matrix in the truncated number basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    entries: DMatrix<Complex64>,
}

impl DenseOperator {
    pub fn from_matrix(entries: DMatrix<Complex64>) -> Self {
        assert!(entries.is_square(), "operator must be square");
        Self { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_matrix(DMatrix::identity(dim, dim))
    }

    /// `<w|a|w+1> = sqrt(w+1)`.
    pub fn ladder_lower(dim: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        for w in 0..dim.saturating_sub(1) {
            m[(w, w + 1)] = Complex64::new(((w + 1) as f64).sqrt(), 0.0);
        }
        Self::from_matrix(m)
    }

    /// `<w+1|a^dag|w> = sqrt(w+1)`.
    pub fn ladder_raise(dim: usize) -> Self {
        Self::from_matrix(Self::ladder_lower(dim).entries.adjoint())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_matrix(self.entries.adjoint())
    }

    pub fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        &self.entries * v
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::from_matrix(&self.entries * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_matrix(&self.entries + &other.entries)
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::from_matrix(&self.entries * &other.entries)
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(Self::identity(self.dim()), |acc, _| acc.mul(self))
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        self.entries
            .column_iter()
            .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Matrix exponential by scaling and squaring.
    ///
    /// The scaled matrix has 1-norm at most 1/2 and its Taylor series is
    /// summed until the next term falls below machine precision relative to
    /// the partial sum.
    pub fn exp(&self) -> Self {
        let dim = self.dim();
        let norm = self.norm_one();
        let squarings = if norm > 0.5 {
            (norm / 0.5).log2().ceil() as u32
        } else {
            0
        };
        let scaled = &self.entries * Complex64::new(0.5f64.powi(squarings as i32), 0.0);
        let mut sum = DMatrix::<Complex64>::identity(dim, dim);
        let mut term = sum.clone();
        for j in 1..64 {
            term = &term * &scaled / Complex64::new(j as f64, 0.0);
            sum += &term;
            let t = term.iter().map(|z| z.norm()).fold(0.0, f64::max);
            // remaining tail is bounded by t * ||B|| / (1 - ||B||) <= t
            if t < 1e-18 {
                break;
            }
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        Self::from_matrix(sum)
    }
}

/// Basis size needed to displace a state reaching photon number `n_max` by `alpha`.
pub fn required_dim(alpha: Complex64, n_max: usize) -> usize {
    let mean = alpha.norm_sqr() + n_max as f64;
    (mean + 8.0 * mean.sqrt() + 32.0).ceil() as usize
}

/// `D(alpha) = exp(alpha a^dag - alpha* a)` truncated to `dim`.
pub fn displacement_operator(alpha: Complex64, dim: usize) -> DenseOperator {
    let a = DenseOperator::ladder_lower(dim);
    let ad = DenseOperator::ladder_raise(dim);
    ad.scale(alpha).add(&a.scale(-alpha.conj())).exp()
}

/// `D(alpha)|psi>` in a basis of size `dim`.
///
/// The truncated generator is anti-Hermitian, so the result is unit norm
/// regardless of `dim`; leakage is measured instead as the probability in
/// the top few basis levels and reported in `truncation_eps`.
pub fn displace_oracle(alpha: Complex64, psi: &FockAmplitudes, dim: usize) -> Result<FockAmplitudes> {
    if dim < 2 {
        return Err(Error::Parameter(format!("dim must be >= 2, got {dim}")));
    }
    let v = psi.to_dense(dim)?;
    let out = displacement_operator(alpha, dim).apply(&v);
    let band = BOUNDARY_BAND.min(dim);
    let leak: f64 = out.rows(dim - band, band).iter().map(|c| c.norm_sqr()).sum();
    let norm_dev = (out.norm_squared() - psi.norm_sqr()).abs();
    let loss = leak + norm_dev;
    if loss > ORACLE_NORM_LOSS {
        return Err(Error::Truncation {
            message: format!("probability {loss:e} reached the top of a {dim}-level basis"),
            suggested_dim: 2 * dim,
        });
    }
    let mut amps: Vec<Complex64> = out.iter().copied().collect();
    // drop the trailing levels that carry no resolvable weight
    while amps.len() > psi.max_photon() + 1 && amps.last().is_some_and(|c| c.norm_sqr() < 1e-300) {
        amps.pop();
    }
    Ok(FockAmplitudes::from_raw(0, amps, loss))
}

/// [`displace_oracle`] with the basis chosen by [`required_dim`] and doubled
/// on leakage, at most twice.
pub fn displace_oracle_auto(alpha: Complex64, psi: &FockAmplitudes) -> Result<FockAmplitudes> {
    let mut dim = required_dim(alpha, psi.max_photon());
    let mut last = None;
    for _ in 0..3 {
        match displace_oracle(alpha, psi, dim) {
            Ok(out) => return Ok(out),
            Err(e @ Error::Truncation { .. }) => {
                last = Some(e);
                dim *= 2;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("loop ran"))
}

/// `N a^q a^dag^k |psi>` by literal matrix action in a basis large enough
/// that no component is lost.
pub fn apply_add_subtract_oracle(psi: &FockAmplitudes, k: usize, q: usize) -> Result<FockAmplitudes> {
    let dim = psi.max_photon() + k + 1;
    let mut v = psi.to_dense(dim)?;
    let a = DenseOperator::ladder_lower(dim);
    let ad = DenseOperator::ladder_raise(dim);
    for _ in 0..k {
        v = ad.apply(&v);
    }
    for _ in 0..q {
        v = a.apply(&v);
    }
    let norm_sqr = v.norm_squared();
    if norm_sqr.is_nan() || norm_sqr <= ANNIHILATION_NORM {
        return Err(Error::Annihilated { norm: norm_sqr.sqrt() });
    }
    v /= Complex64::new(norm_sqr.sqrt(), 0.0);
    Ok(FockAmplitudes::from_dense(&v, psi.truncation_eps()))
}

/// The whole engineering chain `N a^q a^dag^k D(alpha)|n>` done with dense
/// matrices, independent of the closed-form coefficients.
pub fn pasdfs_oracle(spec: &StateSpec) -> Result<FockAmplitudes> {
    spec.validate()?;
    let displaced = displace_oracle_auto(spec.alpha, &FockAmplitudes::fock(spec.n))?;
    apply_add_subtract_oracle(&displaced, spec.k, spec.q)
}

/// `<psi| a^dag^t a^j |psi>` as the inner product `<a^t psi | a^j psi>`.
///
/// Only lowering operators act on the state, so a basis of size
/// `max_photon + 1` is exact.
pub fn expectation_oracle(psi: &FockAmplitudes, t: usize, j: usize) -> Result<Complex64> {
    MomentKey::new(t, j)?;
    let dim = psi.max_photon() + 1;
    let v = psi.to_dense(dim)?;
    let a = DenseOperator::ladder_lower(dim);
    let lower = |mut x: DVector<Complex64>, times: usize| {
        for _ in 0..times {
            x = a.apply(&x);
        }
        x
    };
    let left = lower(v.clone(), t);
    let right = lower(v, j);
    Ok(left.dotc(&right))
}

/// Moment source that evaluates every moment through [`expectation_oracle`].
#[derive(Debug, Clone, Copy)]
pub struct OracleMoments<'a> {
    psi: &'a FockAmplitudes,
}

impl<'a> OracleMoments<'a> {
    pub fn new(psi: &'a FockAmplitudes) -> Self {
        Self { psi }
    }
}

impl MomentSource for OracleMoments<'_> {
    fn state(&self) -> &FockAmplitudes {
        self.psi
    }

    fn moment(&self, key: MomentKey) -> Complex64 {
        expectation_oracle(self.psi, key.t(), key.j()).expect("validated key")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn basis(dim: usize, w: usize) -> DVector<Complex64> {
        DVector::from_fn(dim, |i, _| if i == w { c(1.0, 0.0) } else { c(0.0, 0.0) })
    }

    #[test]
    fn ladder_action() {
        let a = DenseOperator::ladder_lower(2);
        let out = a.apply(&basis(2, 1));
        assert_eq!(out, basis(2, 0));
        let a = DenseOperator::ladder_lower(6);
        assert!(a.apply(&basis(6, 0)).iter().all(|z| *z == c(0.0, 0.0)));
        let n = DenseOperator::ladder_raise(6).mul(&a);
        for w in 0..5 {
            let diff = n.apply(&basis(6, w)) - basis(6, w) * c(w as f64, 0.0);
            assert!(diff.norm() <= 4.0 * f64::EPSILON * w as f64);
        }
    }

    #[test]
    fn commutator_is_identity_off_the_top_row() {
        let dim = 12;
        let a = DenseOperator::ladder_lower(dim);
        let ad = DenseOperator::ladder_raise(dim);
        let comm = a.mul(&ad).matrix() - ad.mul(&a).matrix() - DMatrix::identity(dim, dim);
        // sqrt(w+1)^2 is w+1 only up to rounding
        for r in 0..dim - 1 {
            for col in 0..dim {
                assert!(comm[(r, col)].norm() <= 4.0 * f64::EPSILON * (r + 1) as f64);
            }
        }
        assert!((comm[(dim - 1, dim - 1)].re + dim as f64).abs() < 1e-12);
    }

    #[test]
    fn exp_of_zero_and_diagonal() {
        let z = DenseOperator::from_matrix(DMatrix::zeros(4, 4));
        assert_eq!(z.exp(), DenseOperator::identity(4));
        let d = DenseOperator::from_matrix(DMatrix::from_diagonal(&DVector::from_vec(vec![
            c(3.0, 0.0),
            c(0.0, 2.0),
            c(-1.5, 0.5),
        ])));
        let e = d.exp();
        for i in 0..3 {
            let want = d.matrix()[(i, i)].exp();
            assert!((e.matrix()[(i, i)] - want).norm() < 1e-13 * want.norm());
        }
    }

    #[test]
    fn displacement_of_identity_and_vacuum() {
        let psi = FockAmplitudes::normalized(1, vec![c(0.6, 0.0), c(0.0, 0.8)], 0.0).unwrap();
        let out = displace_oracle(c(0.0, 0.0), &psi, 16).unwrap();
        assert!(out.max_abs_diff(&psi) < 1e-15);

        let out = displace_oracle_auto(c(1.0, 0.0), &FockAmplitudes::vacuum()).unwrap();
        let mut fact = 1.0f64;
        for w in 0..25 {
            if w > 0 {
                fact *= w as f64;
            }
            let want = (-0.5f64).exp() / fact.sqrt();
            assert!((out.amplitude(w) - c(want, 0.0)).norm() < 1e-13, "w={w}");
        }
    }

    #[test]
    fn displacement_preserves_norm() {
        for alpha in [c(0.5, 0.0), c(-1.0, 1.5), c(2.0, -0.3)] {
            let out = displace_oracle_auto(alpha, &FockAmplitudes::fock(3)).unwrap();
            assert!((out.norm_sqr() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn small_basis_reports_truncation() {
        let err = displace_oracle(c(3.0, 0.0), &FockAmplitudes::vacuum(), 10).unwrap_err();
        assert!(matches!(err, Error::Truncation { suggested_dim: 20, .. }));
    }

    #[test]
    fn add_subtract_basics() {
        let one = apply_add_subtract_oracle(&FockAmplitudes::vacuum(), 1, 0).unwrap();
        assert!(one.max_abs_diff(&FockAmplitudes::fock(1)) < 1e-15);
        let coh = displace_oracle_auto(c(0.7, 0.2), &FockAmplitudes::vacuum()).unwrap();
        let sub = apply_add_subtract_oracle(&coh, 0, 1).unwrap();
        // eigenstate of a: same amplitudes up to the global phase alpha/|alpha|
        let phase = c(0.7, 0.2) / c(0.7, 0.2).norm();
        for w in 0..15 {
            assert!((sub.amplitude(w) - phase * coh.amplitude(w)).norm() < 1e-12, "w={w}");
        }
        assert!(matches!(
            apply_add_subtract_oracle(&FockAmplitudes::fock(1), 0, 2),
            Err(Error::Annihilated { .. })
        ));
    }

    #[test]
    fn oracle_moments_of_simple_states() {
        let alpha = c(0.8, -0.4);
        let coh = displace_oracle_auto(alpha, &FockAmplitudes::vacuum()).unwrap();
        let n = expectation_oracle(&coh, 1, 1).unwrap();
        assert!((n - c(alpha.norm_sqr(), 0.0)).norm() < 1e-12);
        let ad = expectation_oracle(&coh, 1, 0).unwrap();
        assert!((ad - alpha.conj()).norm() < 1e-12);
        let f2 = expectation_oracle(&FockAmplitudes::fock(2), 2, 2).unwrap();
        assert!((f2 - c(2.0, 0.0)).norm() < 1e-14);
        assert!(expectation_oracle(&coh, 11, 0).is_err());
    }

    #[test]
    fn dense_round_trip_trims_zeros() {
        let psi = FockAmplitudes::normalized(3, vec![c(1.0, 0.0), c(0.0, 1.0)], 0.0).unwrap();
        let d = psi.to_dense(8).unwrap();
        assert_eq!(FockAmplitudes::from_dense(&d, 0.0), psi);
        assert!(psi.to_dense(4).is_err());
    }
}
