use num_complex::Complex64;

use super::grid::Grid;
use crate::error::{Error, Result};

/// Relative imaginary-part threshold under which a field counts as real.
pub const REAL_TOLERANCE: f64 = 1e-12;

/// A complex function sampled on a [`Grid`], row-major over the axes.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Grid,
    values: Vec<Complex64>,
}

/// Fourier coefficients of a field, scaled so that they approximate the
/// continuum transform `\hat f(k) = \int f(x) e^{-ikx} dx`.
///
/// With this scaling Parseval reads
/// `h^d sum |f|^2 = (N h)^{-d} sum |\hat f|^2`.
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: Grid,
    coefficients: Vec<Complex64>,
}

impl Field {
    pub fn zeros(grid: &Grid) -> Self {
        Self { grid: grid.clone(), values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_values(grid: &Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid: grid.clone(), values })
    }

    pub fn from_real(grid: &Grid, values: &[f64]) -> Result<Self> {
        Self::from_values(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Samples `f(x)` at every grid point; `x[1]` is zero in 1D.
    pub fn from_fn(grid: &Grid, mut f: impl FnMut([f64; 2]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.position(i))).collect();
        Self { grid: grid.clone(), values }
    }

    pub fn from_real_fn(grid: &Grid, mut f: impl FnMut([f64; 2]) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|c| c.re).collect()
    }

    pub fn imag_parts(&self) -> Vec<f64> {
        self.values.iter().map(|c| c.im).collect()
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn max_imaginary(&self) -> f64 {
        self.values.iter().map(|c| c.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_real(&self) -> bool {
        self.max_imaginary() <= REAL_TOLERANCE * self.max_modulus()
    }

    /// Real samples, or [`Error::NotReal`] when the imaginary part is not negligible.
    pub fn require_real(&self) -> Result<Vec<f64>> {
        if self.is_real() {
            Ok(self.real_parts())
        } else {
            Err(Error::NotReal(self.max_imaginary()))
        }
    }

    pub fn ensure_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `int f conj(g) dx` by the rectangle rule.
    pub fn inner(&self, other: &Field) -> Complex64 {
        let sum: Complex64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj()).sum();
        sum * self.grid.cell_volume()
    }

    pub fn l2_norm_squared(&self) -> f64 {
        self.values.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_squared().sqrt()
    }

    /// `(int |f|^q)^(1/q)`.
    pub fn lq_norm(&self, q: f64) -> f64 {
        let sum: f64 = self.values.iter().map(|c| c.norm().powf(q)).sum();
        (sum * self.grid.cell_volume()).powf(1.0 / q)
    }

    pub fn scaled(&self, factor: f64) -> Field {
        Field { grid: self.grid.clone(), values: self.values.iter().map(|c| c * factor).collect() }
    }

    pub fn scaled_complex(&self, factor: Complex64) -> Field {
        Field { grid: self.grid.clone(), values: self.values.iter().map(|c| c * factor).collect() }
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: Complex64, other: &Field) -> Field {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + alpha * b).collect();
        Field { grid: self.grid.clone(), values }
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    pub fn add(&self, other: &Field) -> Field {
        self.axpy(Complex64::new(1.0, 0.0), other)
    }

    /// Rescale so that `||f||_2^2 = power`.
    pub fn normalized_to(&self, power: f64) -> Field {
        let norm = self.l2_norm();
        self.scaled(power.sqrt() / norm)
    }

    pub fn map(&self, mut f: impl FnMut(Complex64) -> Complex64) -> Field {
        Field { grid: self.grid.clone(), values: self.values.iter().map(|&c| f(c)).collect() }
    }

    /// Pointwise multiplication by real samples.
    pub fn mul_real(&self, weights: &[f64]) -> Field {
        let values = self.values.iter().zip(weights).map(|(c, w)| c * w).collect();
        Field { grid: self.grid.clone(), values }
    }

    /// The field translated by an integer number of samples per axis (periodic).
    pub fn shifted(&self, offset: [i64; 2]) -> Field {
        let g = &self.grid;
        let n = g.points_per_axis() as i64;
        let wrap = |j: i64| j.rem_euclid(n) as usize;
        let mut values = vec![Complex64::new(0.0, 0.0); g.len()];
        for (i, v) in self.values.iter().enumerate() {
            let target = match g.dim() {
                1 => wrap(i as i64 + offset[0]),
                _ => {
                    let (a, b) = ((i as i64) / n, (i as i64) % n);
                    wrap(a + offset[0]) * n as usize + wrap(b + offset[1])
                }
            };
            values[target] = *v;
        }
        Field { grid: g.clone(), values }
    }

    /// Forward transform with continuum scaling.
    pub fn fft_forward(&self) -> Spectrum {
        let g = &self.grid;
        let mut data = self.values.clone();
        g.fft_in_place(&mut data);
        let w = g.cell_volume();
        for (i, c) in data.iter_mut().enumerate() {
            *c *= w * g.centering_sign(i);
        }
        Spectrum { grid: g.clone(), coefficients: data }
    }

    /// Apply a real Fourier multiplier (given per spectral index).
    pub fn apply_multiplier(&self, multiplier: &[f64]) -> Field {
        let mut data = self.values.clone();
        self.grid.apply_multiplier(&mut data, multiplier);
        Field { grid: self.grid.clone(), values: data }
    }

    /// Spectral derivative along the first axis.
    pub fn derivative_x1(&self) -> Field {
        let g = &self.grid;
        let n = g.points_per_axis();
        let k = g.wavenumbers();
        let mut data = self.values.clone();
        g.fft_in_place(&mut data);
        let norm = 1.0 / g.len() as f64;
        for (i, c) in data.iter_mut().enumerate() {
            let j = if g.dim() == 1 { i } else { i / n };
            // the Nyquist mode has no well-defined odd derivative
            let kx = if j == n / 2 { 0.0 } else { k[j] };
            *c *= Complex64::new(0.0, kx * norm);
        }
        g.ifft_in_place(&mut data);
        Field { grid: g.clone(), values: data }
    }
}

impl Spectrum {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn from_coefficients(grid: &Grid, coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() != grid.len() {
            return Err(Error::InvalidParameter("coefficient count does not match grid".into()));
        }
        Ok(Self { grid: grid.clone(), coefficients })
    }

    /// Measure factor `(N h)^{-d}` that turns coefficient sums into integrals.
    pub fn measure(&self) -> f64 {
        let g = &self.grid;
        (1.0 / (g.points_per_axis() as f64 * g.spacing())).powi(g.dim() as i32)
    }

    /// `(N h)^{-d} sum w(k) |\hat f(k)|^2`.
    pub fn weighted_energy(&self, weight: &[f64]) -> f64 {
        let sum: f64 = self.coefficients.iter().zip(weight).map(|(c, w)| w * c.norm_sqr()).sum();
        sum * self.measure()
    }

    pub fn fft_inverse(&self) -> Field {
        let g = &self.grid;
        let mut data: Vec<Complex64> =
            self.coefficients.iter().enumerate().map(|(i, c)| c * g.centering_sign(i)).collect();
        g.ifft_in_place(&mut data);
        let scale = 1.0 / (g.len() as f64 * g.cell_volume());
        for c in &mut data {
            *c *= scale;
        }
        Field { grid: g.clone(), values: data }
    }
}
