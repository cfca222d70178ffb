//! Moments-based nonclassicality witnesses.
//!
//! Every criterion returns a real number whose negativity certifies
//! nonclassicality. Criteria are generic over [`MomentSource`] so the same
//! code runs on closed-form moments and on the dense-matrix oracle.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{DenseOperator, FockAmplitudes};
use crate::moments::{MomentSource, MAX_MOMENT_ORDER};
use crate::numerics::{binomial, double_factorial_odd, pochhammer_half, stirling2};

/// Values below `-SIGN_TOL` are reported as nonclassical.
pub const SIGN_TOL: f64 = 1e-10;

/// Truncation bound above which reports carry a warning.
pub const TRUNCATION_WARN: f64 = 1e-10;

/// Relative threshold for a vanishing Agarwal-Tara denominator.
pub const DENOMINATOR_TOL: f64 = 1e-12;

/// Largest order accepted by the order-indexed criteria.
pub const MAX_ORDER: usize = MAX_MOMENT_ORDER;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Criterion {
    Antibunching,
    Hosps,
    HongMandel,
    Klyshko,
    AgarwalTara,
    Vogel,
}

impl Criterion {
    pub const ALL: [Criterion; 6] = [
        Criterion::Antibunching,
        Criterion::Hosps,
        Criterion::HongMandel,
        Criterion::Klyshko,
        Criterion::AgarwalTara,
        Criterion::Vogel,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Criterion::Antibunching => "antibunching",
            Criterion::Hosps => "hosps",
            Criterion::HongMandel => "hong_mandel",
            Criterion::Klyshko => "klyshko",
            Criterion::AgarwalTara => "agarwal_tara",
            Criterion::Vogel => "vogel",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Criterion::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown criterion '{s}'")))
    }
}

/// Numerical-health flags attached to a report.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Health {
    pub denominator_small: bool,
    pub truncation_warning: bool,
}

impl Health {
    fn for_state(psi: &FockAmplitudes) -> Self {
        Self {
            denominator_small: false,
            truncation_warning: psi.truncation_eps() > TRUNCATION_WARN,
        }
    }

    pub fn is_clean(&self) -> bool {
        !self.denominator_small && !self.truncation_warning
    }

    /// `|`-separated flag names, empty when clean.
    pub fn labels(&self) -> String {
        let mut out = Vec::new();
        if self.denominator_small {
            out.push("denominator_small");
        }
        if self.truncation_warning {
            out.push("truncation_warning");
        }
        out.join("|")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessReport {
    pub criterion: Criterion,
    /// Order `l` of the moment criteria or photon number `z` for Klyshko; 0 if unused.
    pub argument: usize,
    /// NaN when `health.denominator_small` is set.
    pub value: f64,
    pub nonclassical: bool,
    pub health: Health,
}

impl WitnessReport {
    fn new(criterion: Criterion, argument: usize, value: f64, health: Health) -> Self {
        let nonclassical = !health.denominator_small && value < -SIGN_TOL;
        Self {
            criterion,
            argument,
            value,
            nonclassical,
            health,
        }
    }

    /// Order as quoted in figure legends: `l - 1` for antibunching and
    /// HOSPS, `l` for squeezing, `z` for Klyshko.
    pub fn reported_order(&self) -> usize {
        match self.criterion {
            Criterion::Antibunching | Criterion::Hosps => self.argument - 1,
            _ => self.argument,
        }
    }
}

fn check_order(l: usize, even: bool) -> Result<()> {
    if !(2..=MAX_ORDER).contains(&l) {
        return Err(Error::Parameter(format!(
            "order l must lie in 2..={MAX_ORDER}, got {l}"
        )));
    }
    if even && !l.is_multiple_of(2) {
        return Err(Error::Domain(format!("only even orders are allowed, got {l}")));
    }
    Ok(())
}

/// Real part of a Hermitian expectation; flags a warning if the imaginary
/// residue is not roundoff.
fn real_part(z: Complex64, health: &mut Health) -> f64 {
    if z.im.abs() > 1e-10 * (1.0 + z.re.abs()) {
        health.truncation_warning = true;
    }
    z.re
}

/// `d(l-1) = <a^dag^l a^l> - <a^dag a>^l`.
fn antibunching_value<S: MomentSource + ?Sized>(src: &S, l: usize, health: &mut Health) -> f64 {
    let mean = real_part(src.moment_tj(1, 1), health);
    real_part(src.moment_tj(l, l), health) - mean.powi(l as i32)
}

/// Lower (`l = 2`) and higher-order antibunching `d(l-1)`.
pub fn antibunching<S: MomentSource + ?Sized>(src: &S, l: usize) -> Result<WitnessReport> {
    check_order(l, false)?;
    let mut health = Health::for_state(src.state());
    let value = antibunching_value(src, l, &mut health);
    Ok(WitnessReport::new(Criterion::Antibunching, l, value, health))
}

/// Higher-order sub-Poissonian statistics
/// `D_h(l-1) = sum_{e=0}^{l} sum_{f=1}^{e} S2(e,f) C(l,e) (-1)^e d(f-1) <N>^(l-e)`.
pub fn hosps<S: MomentSource + ?Sized>(src: &S, l: usize) -> Result<WitnessReport> {
    check_order(l, false)?;
    let mut health = Health::for_state(src.state());
    let mean = real_part(src.moment_tj(1, 1), &mut health);
    let d: Vec<f64> = (0..=l)
        .map(|f| {
            if f == 0 {
                0.0
            } else {
                antibunching_value(src, f, &mut health)
            }
        })
        .collect();
    let mut value = 0.0;
    for e in 1..=l {
        let sign = if e % 2 == 0 { 1.0 } else { -1.0 };
        let outer = binomial(l, e) * sign * mean.powi((l - e) as i32);
        let inner: f64 = (1..=e)
            .map(|f| stirling2(e, f).map(|s| s as f64 * d[f]))
            .sum::<Result<f64>>()?;
        value += outer * inner;
    }
    Ok(WitnessReport::new(Criterion::Hosps, l, value, health))
}

/// `<(Delta X)^l>` for `X = (a + a^dag)/sqrt(2)`, computed as
/// `|| (X - <X>)^(l/2) psi ||^2` by dense matrix action.
///
/// The basis has `max_photon + l/2 + 1` levels, so no component is lost.
pub fn quadrature_variance_l(psi: &FockAmplitudes, l: usize) -> Result<f64> {
    check_order(l, true)?;
    let dim = psi.max_photon() + l / 2 + 1;
    let a = DenseOperator::ladder_lower(dim);
    let x = a
        .add(&a.adjoint())
        .scale(Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0));
    let mut v = psi.to_dense(dim)?;
    let mean = v.dotc(&x.apply(&v)).re;
    for _ in 0..l / 2 {
        v = x.apply(&v) - &v * Complex64::new(mean, 0.0);
    }
    Ok(v.norm_squared())
}

/// Coefficient conventions for the normal-ordered expansion of `<(Delta X)^l>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpansionVariant {
    /// `(2i-1)!!` and `C(r-2i, k)`; agrees with the direct evaluation.
    Standard,
    /// `(2i-1)!` and `C(2i, k)` taken literally from the printed formula.
    AsPrinted,
}

/// Fast path for `<(Delta X)^l>` through normally ordered moments:
///
/// ```text
/// sum_{r=0}^{l} sum_{i=0}^{floor(r/2)} sum_{k=0}^{r-2i} (-1)^r 2^(-l/2) (2i-1)!!
///     C(r-2i,k) C(l,r) C(r,2i) <a^dag + a>^(l-r) <a^dag^k a^(r-2i-k)>
/// ```
pub fn quadrature_variance_expansion<S: MomentSource + ?Sized>(src: &S, l: usize) -> Result<f64> {
    quadrature_variance_expansion_with(src, l, ExpansionVariant::Standard)
}

pub fn quadrature_variance_expansion_with<S: MomentSource + ?Sized>(
    src: &S,
    l: usize,
    variant: ExpansionVariant,
) -> Result<f64> {
    check_order(l, true)?;
    let quad_mean = 2.0 * src.moment_tj(1, 0).re;
    let mut sum = Complex64::default();
    for r in 0..=l {
        let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
        let outer = sign * binomial(l, r) * quad_mean.powi((l - r) as i32);
        for i in 0..=r / 2 {
            let (ordering, inner_top) = match variant {
                ExpansionVariant::Standard => (double_factorial_odd(i), r - 2 * i),
                ExpansionVariant::AsPrinted => {
                    let fact = if i == 0 {
                        1.0
                    } else {
                        (1..2 * i).map(|v| v as f64).product()
                    };
                    (fact, 2 * i)
                }
            };
            let coeff = outer * binomial(r, 2 * i) * ordering;
            for k in 0..=r - 2 * i {
                let b = binomial(inner_top, k);
                if b == 0.0 {
                    continue;
                }
                sum += src.moment_tj(k, r - 2 * i - k) * (coeff * b);
            }
        }
    }
    Ok(sum.re * 0.5f64.powi((l / 2) as i32))
}

/// Hong-Mandel squeezing `S(l) = (<(Delta X)^l> - (1/2)_{l/2}) / (1/2)_{l/2}`.
pub fn hong_mandel<S: MomentSource + ?Sized>(src: &S, l: usize) -> Result<WitnessReport> {
    check_order(l, true)?;
    let health = Health::for_state(src.state());
    let baseline = pochhammer_half(l)?;
    let var = quadrature_variance_l(src.state(), l)?;
    Ok(WitnessReport::new(
        Criterion::HongMandel,
        l,
        (var - baseline) / baseline,
        health,
    ))
}

/// Klyshko `B(z) = (z+2) p_z p_{z+2} - (z+1) p_{z+1}^2`.
pub fn klyshko<S: MomentSource + ?Sized>(src: &S, z: usize) -> WitnessReport {
    let psi = src.state();
    let p = |w: usize| psi.probability(w);
    let value = (z + 2) as f64 * p(z) * p(z + 2) - (z + 1) as f64 * p(z + 1).powi(2);
    WitnessReport::new(Criterion::Klyshko, z, value, Health::for_state(psi))
}

/// `B(z)` for `z = 0 ..= z_max`.
pub fn klyshko_profile<S: MomentSource + ?Sized>(src: &S, z_max: usize) -> Vec<WitnessReport> {
    (0..=z_max).map(|z| klyshko(src, z)).collect()
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn det3c(m: [[Complex64; 3]; 3]) -> Complex64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn hankel(s: [f64; 5]) -> [[f64; 3]; 3] {
    [[s[0], s[1], s[2]], [s[1], s[2], s[3]], [s[2], s[3], s[4]]]
}

/// Agarwal-Tara `A3 = det m / (det mu - det m)` with `m_i = <a^dag^i a^i>`
/// and `mu_i = <N^i>` taken from the photon-number distribution.
pub fn agarwal_tara<S: MomentSource + ?Sized>(src: &S) -> WitnessReport {
    let psi = src.state();
    let mut health = Health::for_state(psi);
    let mut m = [1.0; 5];
    let mut mu = [1.0; 5];
    for i in 1..=4 {
        m[i] = real_part(src.moment_tj(i, i), &mut health);
        mu[i] = psi.iter().map(|(w, c)| (w as f64).powi(i as i32) * c.norm_sqr()).sum();
    }
    let det_m = det3(hankel(m));
    let det_mu = det3(hankel(mu));
    let scale = mu.iter().fold(1.0f64, |acc, v| acc.max(v.abs())).powi(3);
    let den = det_mu - det_m;
    if den.abs() < DENOMINATOR_TOL * scale {
        health.denominator_small = true;
        return WitnessReport::new(Criterion::AgarwalTara, 0, f64::NAN, health);
    }
    WitnessReport::new(Criterion::AgarwalTara, 0, det_m / den, health)
}

/// Vogel determinant of the moment matrix
/// `[[1, <a>, <a^dag>], [<a^dag>, <a^dag a>, <a^dag^2>], [<a>, <a^2>, <a^dag a>]]`.
pub fn vogel<S: MomentSource + ?Sized>(src: &S) -> WitnessReport {
    let mut health = Health::for_state(src.state());
    let one = Complex64::new(1.0, 0.0);
    let a = src.moment_tj(0, 1);
    let ad = src.moment_tj(1, 0);
    let n = src.moment_tj(1, 1);
    let ad2 = src.moment_tj(2, 0);
    let a2 = src.moment_tj(0, 2);
    let det = det3c([[one, a, ad], [ad, n, ad2], [a, a2, n]]);
    let value = real_part(det, &mut health);
    WitnessReport::new(Criterion::Vogel, 0, value, health)
}

/// Evaluates `criterion` at `argument` (order `l` or photon number `z`).
pub fn evaluate<S: MomentSource + ?Sized>(src: &S, criterion: Criterion, argument: usize) -> Result<WitnessReport> {
    match criterion {
        Criterion::Antibunching => antibunching(src, argument),
        Criterion::Hosps => hosps(src, argument),
        Criterion::HongMandel => hong_mandel(src, argument),
        Criterion::Klyshko => Ok(klyshko(src, argument)),
        Criterion::AgarwalTara => Ok(agarwal_tara(src)),
        Criterion::Vogel => Ok(vogel(src)),
    }
}
