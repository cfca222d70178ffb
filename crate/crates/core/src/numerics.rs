//! Special-function and combinatorial kernels.
//!
//! Everything here is shared by the state construction, the moment formula
//! and the witnesses. Factorial ratios are handled in log space so that
//! photon numbers of a few hundred never overflow.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Largest photon number whose log-factorial is tabulated by default.
pub const DEFAULT_MAX_FACTORIAL: usize = 512;
/// Largest row of the default Stirling table.
pub const DEFAULT_MAX_STIRLING: usize = 16;

/// `values[m] = ln(m!)` for `0 <= m <= max`.
#[derive(Debug, Clone)]
pub struct LogFactorialTable {
    values: Vec<f64>,
}

impl LogFactorialTable {
    pub fn new(max: usize) -> Self {
        let mut values = Vec::with_capacity(max + 1);
        // exact integer factorials while they fit in u64
        let mut fact: u64 = 1;
        values.push(0.0);
        let mut m = 1usize;
        while m <= max && m <= 20 {
            fact *= m as u64;
            values.push((fact as f64).ln());
            m += 1;
        }
        // compensated running sum of ln(m) beyond that
        let mut sum = values[values.len() - 1];
        let mut carry = 0.0f64;
        while m <= max {
            let y = (m as f64).ln() - carry;
            let t = sum + y;
            carry = (t - sum) - y;
            sum = t;
            values.push(sum);
            m += 1;
        }
        Self { values }
    }

    pub fn max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, m: usize) -> Result<f64> {
        self.values.get(m).copied().ok_or(Error::Capacity {
            what: "factorial argument",
            value: m,
            limit: self.max(),
        })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

impl Default for LogFactorialTable {
    fn default() -> Self {
        Self::new(DEFAULT_MAX_FACTORIAL)
    }
}

/// Stirling numbers of the second kind, `S2(e, f)` for `f <= e <= max`.
///
/// Rows are held as exact `u64` until the first overflow; from that row on
/// only the `f64` values are available and [`Stirling2Table::exact_rows`]
/// tells where exactness stops.
#[derive(Debug, Clone)]
pub struct Stirling2Table {
    exact: Vec<Vec<u64>>,
    real: Vec<Vec<f64>>,
}

impl Stirling2Table {
    pub fn new(max: usize) -> Self {
        let mut exact: Vec<Vec<u64>> = vec![vec![1]];
        let mut real: Vec<Vec<f64>> = vec![vec![1.0]];
        let mut overflowed = false;
        for e in 1..=max {
            let prev_r = &real[e - 1];
            let mut row_r = vec![0.0; e + 1];
            for f in 1..=e {
                let same = if f < e { prev_r[f] } else { 0.0 };
                row_r[f] = f as f64 * same + prev_r[f - 1];
            }
            if !overflowed {
                let prev = &exact[e - 1];
                let mut row = vec![0u64; e + 1];
                for f in 1..=e {
                    let same = if f < e { prev[f] } else { 0 };
                    match (f as u64).checked_mul(same).and_then(|v| v.checked_add(prev[f - 1])) {
                        Some(v) => row[f] = v,
                        None => {
                            overflowed = true;
                            break;
                        }
                    }
                }
                if !overflowed {
                    exact.push(row);
                }
            }
            real.push(row_r);
        }
        Self { exact, real }
    }

    pub fn max(&self) -> usize {
        self.real.len() - 1
    }

    /// Number of leading rows held in exact integer arithmetic.
    pub fn exact_rows(&self) -> usize {
        self.exact.len()
    }

    /// Exact value; `f > e` yields 0 by convention.
    pub fn get(&self, e: usize, f: usize) -> Result<u64> {
        if e > self.max() {
            return Err(Error::Capacity {
                what: "Stirling row",
                value: e,
                limit: self.max(),
            });
        }
        if f > e {
            return Ok(0);
        }
        match self.exact.get(e) {
            Some(row) => Ok(row[f]),
            None => Err(Error::Capacity {
                what: "exact Stirling row",
                value: e,
                limit: self.exact_rows() - 1,
            }),
        }
    }

    pub fn get_f64(&self, e: usize, f: usize) -> Result<f64> {
        if e > self.max() {
            return Err(Error::Capacity {
                what: "Stirling row",
                value: e,
                limit: self.max(),
            });
        }
        Ok(if f > e { 0.0 } else { self.real[e][f] })
    }
}

impl Default for Stirling2Table {
    fn default() -> Self {
        Self::new(DEFAULT_MAX_STIRLING)
    }
}

fn log_factorials() -> &'static LogFactorialTable {
    static TABLE: OnceLock<LogFactorialTable> = OnceLock::new();
    TABLE.get_or_init(LogFactorialTable::default)
}

fn stirling_table() -> &'static Stirling2Table {
    static TABLE: OnceLock<Stirling2Table> = OnceLock::new();
    TABLE.get_or_init(Stirling2Table::default)
}

/// `ln(m!)` from the shared table.
pub fn log_factorial(m: usize) -> Result<f64> {
    log_factorials().get(m)
}

/// `S2(e, f)` from the shared table; zero when `f > e`.
pub fn stirling2(e: usize, f: usize) -> Result<u64> {
    stirling_table().get(e, f)
}

/// Binomial coefficient as a float. Exact for the small arguments used here.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as f64
}

/// `(2i - 1)!!` with the convention `(-1)!! = 1`.
pub fn double_factorial_odd(i: usize) -> f64 {
    (1..=i).map(|j| (2 * j - 1) as f64).product()
}

/// Pochhammer symbol `(1/2)_{l/2}` for even `l >= 2`.
pub fn pochhammer_half(l: usize) -> Result<f64> {
    if l < 2 || !l.is_multiple_of(2) {
        return Err(Error::Domain(format!(
            "Pochhammer (1/2)_(l/2) needs an even l >= 2, got {l}"
        )));
    }
    Ok((0..l / 2).map(|i| 0.5 + i as f64).product())
}

/// Associated Laguerre polynomial `L_p^(s)(x)` by the three-term recurrence in `p`.
///
/// `s` may be negative; the recurrence is valid for any real order.
pub fn assoc_laguerre(p: usize, s: i64, x: f64) -> f64 {
    let s = s as f64;
    let mut prev = 1.0;
    if p == 0 {
        return prev;
    }
    let mut cur = 1.0 + s - x;
    for i in 1..p {
        let i = i as f64;
        let next = ((2.0 * i + s + 1.0 - x) * cur - (i + s) * prev) / (i + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}
