//! Periodic tensor grid on `[-L, L)^dim` with cached FFT plans.
//!
//! Point `j` on an axis sits at `x_j = (j - N/2) h` with `h = 2L/N`, so the
//! origin is the sample `N/2` and the reflection `x -> -x` maps index `j` to
//! `(N - j) mod N` exactly. Wavenumbers are stored in FFT order
//! `0, 1, ..., N/2-1, -N/2, ..., -1` (times `pi/L`).

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

struct GridInner {
    dim: usize,
    n: usize,
    half_width: f64,
    spacing: f64,
    axis_k: Vec<f64>,
    k_squared: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Cheaply cloneable handle to a grid. Two grids compare equal when their
/// dimension, resolution and half-width agree.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.inner.dim)
            .field("n", &self.inner.n)
            .field("half_width", &self.inner.half_width)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.dim == other.inner.dim
                && self.inner.n == other.inner.n
                && self.inner.half_width == other.inner.half_width)
    }
}

impl Grid {
    pub fn new(dim: usize, half_width: f64, points_per_axis: usize) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if points_per_axis < 16 || points_per_axis % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be even and >= 16, got {points_per_axis}"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("half width must be positive, got {half_width}")));
        }
        let n = points_per_axis;
        let spacing = 2.0 * half_width / n as f64;
        let dk = std::f64::consts::PI / half_width;
        let axis_k: Vec<f64> = (0..n)
            .map(|j| {
                let m = if j < n / 2 { j as i64 } else { j as i64 - n as i64 };
                m as f64 * dk
            })
            .collect();
        let k_squared = match dim {
            1 => axis_k.iter().map(|k| k * k).collect(),
            _ => {
                let mut out = Vec::with_capacity(n * n);
                for k0 in &axis_k {
                    for k1 in &axis_k {
                        out.push(k0 * k0 + k1 * k1);
                    }
                }
                out
            }
        };
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Self {
            inner: Arc::new(GridInner {
                dim,
                n,
                half_width,
                spacing,
                axis_k,
                k_squared,
                forward,
                inverse,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.inner.n
    }

    pub fn half_width(&self) -> f64 {
        self.inner.half_width
    }

    pub fn spacing(&self) -> f64 {
        self.inner.spacing
    }

    /// Total number of samples, `N^dim`.
    pub fn len(&self) -> usize {
        self.inner.n.pow(self.inner.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `h^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.inner.spacing.powi(self.inner.dim as i32)
    }

    /// Per-axis wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.axis_k
    }

    /// `|k|^2` for every spectral index (row-major, FFT order per axis).
    pub fn k_squared(&self) -> &[f64] {
        &self.inner.k_squared
    }

    /// Coordinates of the `j`-th sample along one axis.
    pub fn axis_coordinate(&self, j: usize) -> f64 {
        (j as f64 - (self.inner.n / 2) as f64) * self.inner.spacing
    }

    pub fn axis_coordinates(&self) -> Vec<f64> {
        (0..self.inner.n).map(|j| self.axis_coordinate(j)).collect()
    }

    /// Integer offsets from the origin sample, per axis.
    pub fn offsets(&self, index: usize) -> [i64; 2] {
        let n = self.inner.n;
        let half = (n / 2) as i64;
        match self.inner.dim {
            1 => [index as i64 - half, 0],
            _ => [(index / n) as i64 - half, (index % n) as i64 - half],
        }
    }

    /// Spatial position of a flat sample index (second entry is 0 in 1D).
    pub fn position(&self, index: usize) -> [f64; 2] {
        let [a, b] = self.offsets(index);
        [a as f64 * self.inner.spacing, b as f64 * self.inner.spacing]
    }

    /// `|x|` at every sample. No wrap-around: the seam samples sit at `|x| = L`.
    pub fn radii(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let [a, b] = self.offsets(i);
                ((a * a + b * b) as f64).sqrt() * self.inner.spacing
            })
            .collect()
    }

    /// Squared integer distance to the origin sample; exact, used for ordering.
    pub fn squared_offset(&self, index: usize) -> i64 {
        let [a, b] = self.offsets(index);
        a * a + b * b
    }

    /// Index of the mirror image `x -> -x`.
    pub fn mirror(&self, index: usize) -> usize {
        let n = self.inner.n;
        let flip = |j: usize| (n - j) % n;
        match self.inner.dim {
            1 => flip(index),
            _ => flip(index / n) * n + flip(index % n),
        }
    }

    /// Index of the origin sample.
    pub fn origin(&self) -> usize {
        let half = self.inner.n / 2;
        match self.inner.dim {
            1 => half,
            _ => half * self.inner.n + half,
        }
    }

    /// In-place unnormalized forward DFT over all axes.
    pub(crate) fn fft_in_place(&self, data: &mut [Complex64]) {
        self.transform(data, true);
    }

    /// In-place unnormalized inverse DFT over all axes.
    pub(crate) fn ifft_in_place(&self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    fn transform(&self, data: &mut [Complex64], forward: bool) {
        debug_assert_eq!(data.len(), self.len());
        let plan = if forward { &self.inner.forward } else { &self.inner.inverse };
        let n = self.inner.n;
        // rows (contiguous chunks of length n)
        plan.process(data);
        if self.inner.dim == 2 {
            let mut col = vec![Complex64::new(0.0, 0.0); n * n];
            for i in 0..n {
                for j in 0..n {
                    col[j * n + i] = data[i * n + j];
                }
            }
            plan.process(&mut col);
            for i in 0..n {
                for j in 0..n {
                    data[i * n + j] = col[j * n + i];
                }
            }
        }
    }

    /// Multiply by a real Fourier multiplier given per spectral index.
    pub(crate) fn apply_multiplier(&self, data: &mut [Complex64], multiplier: &[f64]) {
        self.fft_in_place(data);
        let norm = 1.0 / self.len() as f64;
        for (c, m) in data.iter_mut().zip(multiplier) {
            *c *= m * norm;
        }
        self.ifft_in_place(data);
    }

    /// Multiply by a complex Fourier multiplier given per spectral index.
    pub(crate) fn apply_complex_multiplier(&self, data: &mut [Complex64], multiplier: &[Complex64]) {
        self.fft_in_place(data);
        let norm = 1.0 / self.len() as f64;
        for (c, m) in data.iter_mut().zip(multiplier) {
            *c *= m * norm;
        }
        self.ifft_in_place(data);
    }

    /// `(-1)^(j0 + j1)` phase that recentres the DFT on `x = 0`.
    pub(crate) fn centering_sign(&self, spectral_index: usize) -> f64 {
        let n = self.inner.n;
        let parity = match self.inner.dim {
            1 => spectral_index,
            _ => spectral_index / n + spectral_index % n,
        };
        if parity % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// `|k|^(2s)` on every spectral index.
    pub fn fractional_symbol(&self, s: f64) -> Vec<f64> {
        self.inner.k_squared.iter().map(|&k2| if k2 == 0.0 { 0.0 } else { k2.powf(s) }).collect()
    }

    /// `(1 + |k|^2)^s` on every spectral index.
    pub fn sobolev_weight(&self, s: f64) -> Vec<f64> {
        self.inner.k_squared.iter().map(|&k2| (1.0 + k2).powf(s)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_resolution() {
        assert!(Grid::new(1, 12.0, 15).is_err());
        assert!(Grid::new(1, 12.0, 8).is_err());
        assert!(Grid::new(3, 12.0, 32).is_err());
        assert!(Grid::new(1, -1.0, 32).is_err());
    }

    #[test]
    fn spacing_and_wavenumbers() {
        let g = Grid::new(1, 12.0, 512).unwrap();
        assert_eq!(g.spacing() * 512.0, 24.0);
        let k = g.wavenumbers();
        assert_eq!(k.len(), 512);
        assert_eq!(k.iter().filter(|&&v| v == 0.0).count(), 1);
        assert!((k[1] - std::f64::consts::PI / 12.0).abs() < 1e-15);
        assert!(k[256] < 0.0);
    }

    #[test]
    fn mirror_is_exact_reflection() {
        for dim in [1, 2] {
            let g = Grid::new(dim, 5.0, 16).unwrap();
            for i in 0..g.len() {
                let m = g.mirror(i);
                assert_eq!(g.mirror(m), i);
                let [a, b] = g.position(i);
                let [c, d] = g.position(m);
                // the seam sample is its own mirror (x = -L is identified with L)
                let seam = g.offsets(i).iter().any(|&o| o == -8);
                if !seam {
                    assert_eq!(a, -c);
                    assert_eq!(b, -d);
                }
            }
            assert_eq!(g.position(g.origin()), [0.0, 0.0]);
        }
    }
}
