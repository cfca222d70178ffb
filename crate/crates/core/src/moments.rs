//! Normally ordered moments `<a^dag^t a^j>` from stored amplitudes.

use std::collections::HashMap;
use std::sync::RwLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::FockAmplitudes;
use crate::numerics::log_factorial;

/// Largest creation or annihilation power accepted in a moment.
pub const MAX_MOMENT_ORDER: usize = 10;

/// Addresses `<a^dag^t a^j>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MomentKey {
    t: usize,
    j: usize,
}

impl MomentKey {
    pub fn new(t: usize, j: usize) -> Result<Self> {
        if t > MAX_MOMENT_ORDER || j > MAX_MOMENT_ORDER {
            return Err(Error::Capacity {
                what: "moment order",
                value: t.max(j),
                limit: MAX_MOMENT_ORDER,
            });
        }
        Ok(Self { t, j })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn swapped(&self) -> Self {
        Self { t: self.j, j: self.t }
    }
}

/// Anything that can supply the moments of a normalized pure state.
///
/// Witnesses are generic over this so the closed-form and oracle paths run
/// the same criterion code.
pub trait MomentSource {
    fn state(&self) -> &FockAmplitudes;

    fn moment(&self, key: MomentKey) -> Complex64;

    /// `<a^dag^t a^j>` for orders already known to be in range.
    fn moment_tj(&self, t: usize, j: usize) -> Complex64 {
        self.moment(MomentKey::new(t, j).expect("moment order within capacity"))
    }
}

/// Closed-form moment over the stored amplitudes:
/// `sum_w conj(c_{w-j+t}) c_w sqrt(w! (w-j+t)!) / (w-j)!`.
///
/// The factorial ratio is evaluated in log space and terms falling outside
/// the stored window contribute zero.
pub fn moment(psi: &FockAmplitudes, key: MomentKey) -> Result<Complex64> {
    let (t, j) = (key.t, key.j);
    let mut sum = Complex64::default();
    for (w, c) in psi.iter() {
        if w < j {
            continue;
        }
        let shifted = w - j + t;
        let other = psi.amplitude(shifted);
        if other == Complex64::default() {
            continue;
        }
        let log_ratio = 0.5 * log_factorial(w)? + 0.5 * log_factorial(shifted)? - log_factorial(w - j)?;
        sum += other.conj() * c * log_ratio.exp();
    }
    Ok(sum)
}

impl MomentSource for FockAmplitudes {
    fn state(&self) -> &FockAmplitudes {
        self
    }

    fn moment(&self, key: MomentKey) -> Complex64 {
        moment(self, key).expect("state within factorial table")
    }
}

/// Per-state memo of moments, safe to share between threads.
#[derive(Debug)]
pub struct MomentCache<'a> {
    psi: &'a FockAmplitudes,
    values: RwLock<HashMap<MomentKey, Complex64>>,
}

impl<'a> MomentCache<'a> {
    pub fn new(psi: &'a FockAmplitudes) -> Self {
        Self {
            psi,
            values: RwLock::new(HashMap::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.values.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl MomentSource for MomentCache<'_> {
    fn state(&self) -> &FockAmplitudes {
        self.psi
    }

    fn moment(&self, key: MomentKey) -> Complex64 {
        if let Some(v) = self.values.read().unwrap().get(&key) {
            return *v;
        }
        let v = MomentSource::moment(self.psi, key);
        *self.values.write().unwrap().entry(key).or_insert(v)
    }
}

/// `(<N>, <N^2> - <N>^2)` with `<N^2> = <a^dag^2 a^2> + <a^dag a>`.
pub fn number_mean_and_variance<S: MomentSource + ?Sized>(src: &S) -> (f64, f64) {
    let n1 = src.moment_tj(1, 1).re;
    let n2 = src.moment_tj(2, 2).re + n1;
    (n1, n2 - n1 * n1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::expectation_oracle;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn coherent(alpha: Complex64) -> FockAmplitudes {
        // Poisson amplitudes written out directly
        let mut amps = Vec::new();
        let mut term = c((-alpha.norm_sqr() / 2.0).exp(), 0.0);
        for w in 0..80 {
            if w > 0 {
                term = term * alpha / (w as f64).sqrt();
            }
            amps.push(term);
        }
        FockAmplitudes::from_raw(0, amps, 0.0)
    }

    #[test]
    fn coherent_first_moments() {
        let alpha = c(0.9, 0.4);
        let psi = coherent(alpha);
        let ad = moment(&psi, MomentKey::new(1, 0).unwrap()).unwrap();
        assert!((ad - alpha.conj()).norm() < 1e-13);
        let a2 = moment(&psi, MomentKey::new(0, 2).unwrap()).unwrap();
        assert!((a2 - alpha * alpha).norm() < 1e-13);
        let (mean, var) = number_mean_and_variance(&psi);
        assert!((mean - alpha.norm_sqr()).abs() < 1e-13);
        assert!((var - alpha.norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn fock_moments() {
        for n in 0..6 {
            let psi = FockAmplitudes::fock(n);
            let m = moment(&psi, MomentKey::new(1, 1).unwrap()).unwrap();
            assert!((m - c(n as f64, 0.0)).norm() < 1e-14);
            let (mean, var) = number_mean_and_variance(&psi);
            assert!((mean - n as f64).abs() < 1e-14);
            assert!(var.abs() < 1e-13);
        }
    }

    #[test]
    fn key_capacity() {
        assert!(MomentKey::new(10, 10).is_ok());
        assert!(matches!(MomentKey::new(11, 0), Err(Error::Capacity { .. })));
    }

    #[test]
    fn matches_oracle_on_generic_state() {
        let psi = FockAmplitudes::normalized(
            2,
            vec![c(0.3, 0.1), c(-0.2, 0.5), c(0.7, 0.0), c(0.1, -0.3), c(0.05, 0.02)],
            0.0,
        )
        .unwrap();
        for t in 0..=4 {
            for j in 0..=4 {
                let key = MomentKey::new(t, j).unwrap();
                let a = moment(&psi, key).unwrap();
                let b = expectation_oracle(&psi, t, j).unwrap();
                assert!((a - b).norm() < 1e-12, "({t},{j})");
            }
        }
    }

    #[test]
    fn cache_is_read_through() {
        let psi = coherent(c(0.5, 0.0));
        let cache = MomentCache::new(&psi);
        assert!(cache.is_empty());
        let key = MomentKey::new(2, 1).unwrap();
        let first = cache.moment(key);
        let second = cache.moment(key);
        assert_eq!(first, second);
        assert_eq!(cache.len(), 1);
        assert_eq!(first, moment(&psi, key).unwrap());
    }

    #[test]
    fn cache_under_concurrent_readers() {
        let psi = coherent(c(1.1, -0.2));
        let cache = MomentCache::new(&psi);
        let keys: Vec<MomentKey> = (0..5)
            .flat_map(|t| (0..5).map(move |j| MomentKey::new(t, j).unwrap()))
            .collect();
        std::thread::scope(|s| {
            for _ in 0..4 {
                s.spawn(|| {
                    for k in &keys {
                        let v = cache.moment(*k);
                        assert_eq!(v, moment(&psi, *k).unwrap());
                    }
                });
            }
        });
        assert_eq!(cache.len(), keys.len());
    }
}
