//! Trapping potentials, the fractional Laplacian, `H = (-Delta)^s + V` and
//! its resolvent.

mod potential;
mod resolvent;

pub use potential::{Potential, PotentialKind, PotentialSpec, RadialTable};
pub use resolvent::{apply_free_resolvent, apply_resolvent, solve_shifted, CgOutcome, MAX_CG_ITERATIONS};

use std::sync::Arc;

use num_complex::Complex64;

use crate::domain::{Field, Grid, Spectrum};
use crate::error::{Error, Result};

pub fn check_order(s: f64) -> Result<()> {
    if s > 0.0 && s <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("s must lie in (0, 1], got {s}")))
    }
}

/// `(-Delta)^s f` via the multiplier `|k|^(2s)`.
pub fn apply_fractional_laplacian(f: &Field, s: f64) -> Result<Field> {
    check_order(s)?;
    Ok(f.apply_multiplier(&f.grid().fractional_symbol(s)))
}

/// The operator `(-Delta)^s + W + shift` for a real weight `W` on a grid.
///
/// `W` is the trapping potential for `H`, or a potential modified by a
/// ground state for the linearized operators.
#[derive(Clone, Debug)]
pub struct OperatorHandle {
    grid: Grid,
    s: f64,
    weights: Arc<Vec<f64>>,
    shift: f64,
    symbol: Arc<Vec<f64>>,
}

impl OperatorHandle {
    pub fn new(s: f64, potential: &Potential, shift: f64) -> Result<Self> {
        Self::with_weights(potential.grid(), s, potential.samples().to_vec(), shift)
    }

    pub fn with_weights(grid: &Grid, s: f64, weights: Vec<f64>, shift: f64) -> Result<Self> {
        check_order(s)?;
        if weights.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if !shift.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidParameter("operator coefficients must be finite".into()));
        }
        Ok(Self {
            grid: grid.clone(),
            s,
            weights: Arc::new(weights),
            shift,
            symbol: Arc::new(grid.fractional_symbol(s)),
        })
    }

    /// Same operator with a different constant shift.
    pub fn with_shift(&self, shift: f64) -> Self {
        Self { shift, ..self.clone() }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    /// Lower bound `min W + shift` of the potential part.
    pub fn potential_floor(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min) + self.shift
    }

    pub fn apply(&self, f: &Field) -> Result<Field> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let mut out = f.values().to_vec();
        self.apply_raw(f.values(), &mut out);
        Field::from_values(&self.grid, out)
    }

    /// `out = A x` on raw samples.
    pub(crate) fn apply_raw(&self, x: &[Complex64], out: &mut [Complex64]) {
        out.copy_from_slice(x);
        self.grid.apply_multiplier(out, &self.symbol);
        for ((o, xi), w) in out.iter_mut().zip(x).zip(self.weights.iter()) {
            *o += xi * (w + self.shift);
        }
    }

    /// Real-valued fast path of [`apply_raw`](Self::apply_raw).
    pub(crate) fn apply_real(&self, x: &[f64]) -> Vec<f64> {
        let input: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut out = input.clone();
        self.apply_raw(&input, &mut out);
        out.into_iter().map(|c| c.re).collect()
    }

    /// `<A f, f>` (real for self-adjoint `A`).
    pub fn quadratic_form(&self, f: &Field) -> Result<f64> {
        Ok(self.apply(f)?.inner(f).re)
    }
}

/// `(-Delta)^s f + (W + shift) f`.
pub fn apply_h(h: &OperatorHandle, f: &Field) -> Result<Field> {
    h.apply(f)
}

/// Grid kernel of `((-Delta)^s + lambda)^{-1}`, i.e. the inverse transform of
/// `1 / (|k|^(2s) + lambda)`, centred on the origin sample.
pub fn greens_function_profile(s: f64, lambda: f64, grid: &Grid) -> Result<Field> {
    check_order(s)?;
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("Green's function needs lambda > 0, got {lambda}")));
    }
    let coefficients =
        grid.fractional_symbol(s).iter().map(|m| Complex64::new(1.0 / (m + lambda), 0.0)).collect();
    let field = Spectrum::from_coefficients(grid, coefficients)?.fft_inverse();
    Ok(field.map(|c| Complex64::new(c.re, 0.0)))
}
