//! Husimi Q function on single points and complex-plane grids.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::FockAmplitudes;
use crate::moments::MomentSource;

/// Largest `|beta|` accepted by [`q_function`].
pub const MAX_BETA: f64 = 12.0;
pub const MIN_GRID: usize = 64;
/// Nodes below this fraction of the grid peak count as zeros of Q.
pub const ZERO_REL: f64 = 1e-6;
/// Mass outside the window above which the window is widened.
pub const MAX_MISSING_MASS: f64 = 0.01;

const WIDEN_FACTOR: f64 = 1.5;

/// `Q(beta) = e^{-|beta|^2} |sum_w c_w beta*^w / sqrt(w!)|^2 / pi`.
///
/// The terms `e^{-|beta|^2/2} beta*^w / sqrt(w!)` are generated by the
/// recurrence `t_w = t_{w-1} beta* / sqrt(w)`, which stays below one in
/// modulus for `|beta| <= MAX_BETA` and never overflows.
pub fn q_function(psi: &FockAmplitudes, beta: Complex64) -> Result<f64> {
    if beta.is_nan() || beta.norm() > MAX_BETA {
        return Err(Error::Parameter(format!("|beta| = {} exceeds {MAX_BETA}", beta.norm())));
    }
    Ok(q_unchecked(psi, beta))
}

fn q_unchecked(psi: &FockAmplitudes, beta: Complex64) -> f64 {
    let bc = beta.conj();
    let mut term = Complex64::new((-0.5 * beta.norm_sqr()).exp(), 0.0);
    let mut sum = Complex64::default();
    for w in 0..=psi.max_photon() {
        if w > 0 {
            term = term * bc / (w as f64).sqrt();
        }
        let c = psi.amplitude(w);
        if c != Complex64::default() {
            sum += c * term;
        }
    }
    (sum.norm_sqr() / PI).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Window {
    /// Centered on `<a>` with half-width `4 + sqrt(<N>)`.
    Auto,
    Explicit {
        re: (f64, f64),
        im: (f64, f64),
    },
}

/// Q sampled on an `nx` by `ny` grid including the window edges.
#[derive(Debug, Clone, PartialEq)]
pub struct QGrid {
    re_range: (f64, f64),
    im_range: (f64, f64),
    nx: usize,
    ny: usize,
    /// Row-major, `values[iy * nx + ix]`.
    values: Vec<f64>,
    widened: bool,
    mass_warning: bool,
}

/// A refined zero of Q found from a grid local minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QZero {
    pub beta: Complex64,
    pub value: f64,
}

impl QGrid {
    pub fn re_range(&self) -> (f64, f64) {
        self.re_range
    }

    pub fn im_range(&self) -> (f64, f64) {
        self.im_range
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dx(&self) -> f64 {
        (self.re_range.1 - self.re_range.0) / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.im_range.1 - self.im_range.0) / (self.ny - 1) as f64
    }

    pub fn node(&self, ix: usize, iy: usize) -> Complex64 {
        Complex64::new(
            self.re_range.0 + ix as f64 * self.dx(),
            self.im_range.0 + iy as f64 * self.dy(),
        )
    }

    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nx + ix]
    }

    /// Whether the automatic widening step was taken.
    pub fn widened(&self) -> bool {
        self.widened
    }

    /// Set when more than 1% of the mass still lies outside after widening.
    pub fn mass_warning(&self) -> bool {
        self.mass_warning
    }

    /// `(Re beta, Im beta, Q)` in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.ny).flat_map(move |iy| {
            (0..self.nx).map(move |ix| {
                let b = self.node(ix, iy);
                (b.re, b.im, self.value(ix, iy))
            })
        })
    }

    fn weight(&self, ix: usize, iy: usize) -> f64 {
        let wx = if ix == 0 || ix == self.nx - 1 { 0.5 } else { 1.0 };
        let wy = if iy == 0 || iy == self.ny - 1 { 0.5 } else { 1.0 };
        wx * wy * self.dx() * self.dy()
    }

    /// Trapezoid estimate of `integral Q d^2 beta` over the window.
    pub fn mass(&self) -> f64 {
        let mut total = 0.0;
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                total += self.weight(ix, iy) * self.value(ix, iy);
            }
        }
        total
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn argmax(&self) -> Complex64 {
        let (i, _) =
            self.values.iter().enumerate().fold(
                (0, f64::NEG_INFINITY),
                |best, (i, v)| if *v > best.1 { (i, *v) } else { best },
            );
        self.node(i % self.nx, i / self.nx)
    }

    /// Mean and covariance matrix `[[xx, xy], [xy, yy]]` of the Q mass.
    pub fn moments(&self) -> (Complex64, [[f64; 2]; 2]) {
        let mut m0 = 0.0;
        let (mut mx, mut my) = (0.0, 0.0);
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                let w = self.weight(ix, iy) * self.value(ix, iy);
                let b = self.node(ix, iy);
                m0 += w;
                mx += w * b.re;
                my += w * b.im;
            }
        }
        let (mx, my) = (mx / m0, my / m0);
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                let w = self.weight(ix, iy) * self.value(ix, iy);
                let b = self.node(ix, iy);
                let (dx, dy) = (b.re - mx, b.im - my);
                sxx += w * dx * dx;
                sxy += w * dx * dy;
                syy += w * dy * dy;
            }
        }
        (Complex64::new(mx, my), [[sxx / m0, sxy / m0], [sxy / m0, syy / m0]])
    }

    /// Angle in `[0, pi)` of the major axis of the covariance ellipse, with
    /// the major and minor variances.
    pub fn principal_axis(&self) -> (f64, f64, f64) {
        let (_, c) = self.moments();
        let (a, b, d) = (c[0][0], c[0][1], c[1][1]);
        let mid = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        let angle = 0.5 * (2.0 * b).atan2(a - d);
        (angle.rem_euclid(PI), mid + rad, mid - rad)
    }

    /// Interior nodes not above any of their eight neighbours. Ties matter: a
    /// zero midway between nodes shows up as a pair of equal minima.
    fn local_minima(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for iy in 1..self.ny - 1 {
            for ix in 1..self.nx - 1 {
                let v = self.value(ix, iy);
                let is_min = (-1i64..=1).all(|dy| {
                    (-1i64..=1).all(|dx| {
                        (dx == 0 && dy == 0) || v <= self.value((ix as i64 + dx) as usize, (iy as i64 + dy) as usize)
                    })
                });
                if is_min {
                    out.push((ix, iy));
                }
            }
        }
        out
    }
}

/// Evaluates Q over a window, widening an automatic or explicit window once
/// by half its size when more than 1% of the mass falls outside.
pub fn q_grid(psi: &FockAmplitudes, window: Window, nx: usize, ny: usize) -> Result<QGrid> {
    if nx < MIN_GRID || ny < MIN_GRID {
        return Err(Error::Parameter(format!(
            "Q grid needs at least {MIN_GRID}x{MIN_GRID} nodes, got {nx}x{ny}"
        )));
    }
    let (re, im) = match window {
        Window::Auto => {
            let center = psi.moment_tj(0, 1);
            let half = 4.0 + psi.moment_tj(1, 1).re.max(0.0).sqrt();
            (
                (center.re - half, center.re + half),
                (center.im - half, center.im + half),
            )
        }
        Window::Explicit { re, im } => {
            if !(re.1 > re.0 && im.1 > im.0) {
                return Err(Error::Parameter("window bounds must be increasing".into()));
            }
            (re, im)
        }
    };
    let mut grid = sample(psi, re, im, nx, ny)?;
    if grid.mass() < 1.0 - MAX_MISSING_MASS {
        let grow = |r: (f64, f64)| {
            let extra = 0.5 * (WIDEN_FACTOR - 1.0) * (r.1 - r.0);
            (r.0 - extra, r.1 + extra)
        };
        grid = sample(psi, grow(re), grow(im), nx, ny)?;
        grid.widened = true;
        grid.mass_warning = grid.mass() < 1.0 - MAX_MISSING_MASS;
    }
    Ok(grid)
}

fn sample(psi: &FockAmplitudes, re: (f64, f64), im: (f64, f64), nx: usize, ny: usize) -> Result<QGrid> {
    let corner = re.0.abs().max(re.1.abs()).hypot(im.0.abs().max(im.1.abs()));
    if corner > MAX_BETA * std::f64::consts::SQRT_2 {
        return Err(Error::Parameter(format!("Q window reaches |beta| = {corner:.3}")));
    }
    let mut grid = QGrid {
        re_range: re,
        im_range: im,
        nx,
        ny,
        values: Vec::new(),
        widened: false,
        mass_warning: false,
    };
    let rows: Vec<Vec<f64>> = (0..ny)
        .into_par_iter()
        .map(|iy| (0..nx).map(|ix| q_unchecked(psi, grid.node(ix, iy))).collect())
        .collect();
    grid.values = rows.concat();
    Ok(grid)
}

/// Zeros of Q: grid local minima refined by successive zooming, kept when
/// the refined value is below [`ZERO_REL`] times the grid peak.
pub fn find_zeros(psi: &FockAmplitudes, grid: &QGrid) -> Vec<QZero> {
    let threshold = ZERO_REL * grid.peak();
    let step = grid.dx().max(grid.dy());
    let mut zeros: Vec<QZero> = Vec::new();
    for (ix, iy) in grid.local_minima() {
        let mut center = grid.node(ix, iy);
        let mut best = grid.value(ix, iy);
        let mut half = step;
        for _ in 0..60 {
            let mut next = center;
            for jy in -2i32..=2 {
                for jx in -2i32..=2 {
                    let b = center + Complex64::new(jx as f64, jy as f64) * (half / 2.0);
                    let v = q_unchecked(psi, b);
                    if v < best {
                        best = v;
                        next = b;
                    }
                }
            }
            center = next;
            half *= 0.6;
        }
        if best < threshold && zeros.iter().all(|z| (z.beta - center).norm() > step) {
            zeros.push(QZero {
                beta: center,
                value: best,
            });
        }
    }
    zeros
}
