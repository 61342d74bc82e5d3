//! Grids, fields, transforms, norms, the energy functionals and the
//! symmetric-decreasing rearrangement.

mod field;
mod grid;
pub mod rearrange;
pub mod snapshot;

pub use field::{Field, Spectrum, REAL_TOLERANCE};
pub use grid::Grid;
pub use rearrange::rearrange_decreasing;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::Potential;

/// Forward transform, see [`Field::fft_forward`].
pub fn fft_forward(f: &Field) -> Spectrum {
    f.fft_forward()
}

/// Inverse transform, see [`Spectrum::fft_inverse`].
pub fn fft_inverse(s: &Spectrum) -> Field {
    s.fft_inverse()
}

pub fn l2_norm(f: &Field) -> f64 {
    f.l2_norm()
}

/// `||f||_{H^s}` with the multiplier `(1 + |k|^2)^s`, `s` in `[0, 1]`.
pub fn hs_norm(f: &Field, s: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidParameter(format!("Sobolev index must lie in [0, 1], got {s}")));
    }
    Ok(hs_norm_squared(f, s).sqrt())
}

pub(crate) fn hs_norm_squared(f: &Field, s: f64) -> f64 {
    f.fft_forward().weighted_energy(&f.grid().sobolev_weight(s))
}

/// `<f, g>_{H^s}` (linear in `f`, antilinear in `g`).
pub fn hs_inner(f: &Field, g: &Field, s: f64) -> Complex64 {
    let w = f.grid().sobolev_weight(s);
    let a = f.fft_forward();
    let b = g.fft_forward();
    let sum: Complex64 =
        a.coefficients().iter().zip(b.coefficients()).zip(&w).map(|((x, y), w)| x * y.conj() * w).sum();
    sum * a.measure()
}

/// `|| |nabla|^s f ||^2`, computed spectrally.
pub fn kinetic_energy(f: &Field, s: f64) -> f64 {
    f.fft_forward().weighted_energy(&f.grid().fractional_symbol(s))
}

/// Parts of the energy `E[u] = (kinetic + potential)/2 - nonlinear/(p+1)` and the power.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalValues {
    pub kinetic: f64,
    pub potential_term: f64,
    pub nonlinear_term: f64,
    pub energy: f64,
    pub power: f64,
    pub p: f64,
}

impl FunctionalValues {
    fn from_parts(kinetic: f64, potential_term: f64, nonlinear_term: f64, power: f64, p: f64) -> Self {
        let energy = 0.5 * (kinetic + potential_term) - nonlinear_term / (p + 1.0);
        Self { kinetic, potential_term, nonlinear_term, energy, power, p }
    }

    /// Energy including the mass term `omega P / 2`; conserved by the flow in the
    /// frame rotating with the standing wave.
    pub fn total_energy(&self, omega: f64) -> f64 {
        self.energy + 0.5 * omega * self.power
    }
}

/// Kinetic, potential and nonlinear parts plus `E` and `P` for a field.
pub fn functionals(f: &Field, potential: &Potential, s: f64, p: f64) -> Result<FunctionalValues> {
    if potential.grid() != f.grid() {
        return Err(Error::GridMismatch);
    }
    if p <= 1.0 {
        return Err(Error::InvalidParameter(format!("nonlinearity exponent must exceed 1, got {p}")));
    }
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::InvalidParameter(format!("s must lie in (0, 1], got {s}")));
    }
    let w = f.grid().cell_volume();
    let kinetic = kinetic_energy(f, s);
    let mut potential_term = 0.0;
    let mut nonlinear = 0.0;
    let mut power = 0.0;
    for (c, v) in f.values().iter().zip(potential.samples()) {
        let m2 = c.norm_sqr();
        potential_term += v * m2;
        nonlinear += m2.powf(0.5 * (p + 1.0));
        power += m2;
    }
    Ok(FunctionalValues::from_parts(kinetic, potential_term * w, nonlinear * w, power * w, p))
}

/// `|u|^(p-1) u`, with `0` mapped to `0`.
pub fn power_nonlinearity(u: Complex64, p: f64) -> Complex64 {
    let m = u.norm();
    if m == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        u * m.powf(p - 1.0)
    }
}

/// Real version of [`power_nonlinearity`]: `sign(x) |x|^p`.
pub fn power_nonlinearity_real(x: f64, p: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().powf(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{Potential, PotentialKind};
    use std::f64::consts::PI;

    fn line(n: usize) -> Grid {
        Grid::new(1, 12.0, n).unwrap()
    }

    fn gaussian(g: &Grid) -> Field {
        Field::from_real_fn(g, |x| (-0.5 * (x[0] * x[0] + x[1] * x[1])).exp())
    }

    #[test]
    fn transform_of_zero_and_constant() {
        let g = line(64);
        let zero = Field::zeros(&g).fft_forward();
        assert!(zero.coefficients().iter().all(|c| c.norm() == 0.0));

        let one = Field::from_real_fn(&g, |_| 1.0).fft_forward();
        let c = one.coefficients();
        let peak = c[0].norm();
        assert!((peak - 24.0).abs() < 1e-12);
        assert!(c[1..].iter().all(|z| z.norm() <= 1e-12 * peak));
    }

    #[test]
    fn single_mode_has_single_coefficient() {
        let g = line(64);
        let k1 = g.wavenumbers()[3];
        let f = Field::from_fn(&g, |x| Complex64::from_polar(1.0, k1 * x[0]));
        let c = f.fft_forward();
        let peak = c.coefficients()[3].norm();
        for (i, z) in c.coefficients().iter().enumerate() {
            if i != 3 {
                assert!(z.norm() <= 1e-12 * peak, "mode {i} = {z}");
            }
        }
    }

    #[test]
    fn inverse_undoes_forward_in_2d() {
        let g = Grid::new(2, 3.0, 16).unwrap();
        let f = Field::from_fn(&g, |x| Complex64::new(x[0].sin() + x[1], x[0] * x[1]));
        let back = f.fft_forward().fft_inverse();
        let err = f.sub(&back).l2_norm() / f.l2_norm();
        assert!(err < 1e-12);
    }

    #[test]
    fn hs_norm_rejects_bad_index_and_reduces_to_l2() {
        let g = line(128);
        let f = gaussian(&g);
        assert!(hs_norm(&f, 1.5).is_err());
        assert!(hs_norm(&f, -0.1).is_err());
        assert!((hs_norm(&f, 0.0).unwrap() - f.l2_norm()).abs() < 1e-12);
        assert_eq!(hs_norm(&Field::zeros(&g), 1.0).unwrap(), 0.0);
    }

    #[test]
    fn hs_norm_of_gaussian() {
        // ||g||^2 + ||g'||^2 = sqrt(pi) + sqrt(pi)/2
        let g = line(512);
        let value = hs_norm(&gaussian(&g), 1.0).unwrap();
        let expected = (1.5 * PI.sqrt()).sqrt();
        assert!((value - expected).abs() < 1e-4, "{value} vs {expected}");
        assert!((expected - 1.63056).abs() < 1e-4);
    }

    #[test]
    fn gaussian_functionals_in_harmonic_trap() {
        let g = line(512);
        let v = Potential::new(&g, PotentialKind::Power { alpha: 2.0 }).unwrap();
        let vals = functionals(&gaussian(&g), &v, 1.0, 3.0).unwrap();
        let energy = PI.sqrt() / 2.0 - 0.25 * (PI / 2.0).sqrt();
        assert!((vals.energy - energy).abs() < 1e-4);
        assert!((vals.energy - 0.57290).abs() < 1e-4);
        assert!((vals.power - PI.sqrt()).abs() < 1e-4);
        assert_eq!(vals.energy, 0.5 * (vals.kinetic + vals.potential_term) - vals.nonlinear_term / 4.0);

        let zero = functionals(&Field::zeros(&g), &v, 1.0, 3.0).unwrap();
        assert_eq!((zero.kinetic, zero.potential_term, zero.nonlinear_term), (0.0, 0.0, 0.0));
        assert_eq!((zero.energy, zero.power), (0.0, 0.0));
    }

    #[test]
    fn functionals_reject_grid_mismatch() {
        let v = Potential::new(&line(64), PotentialKind::Power { alpha: 2.0 }).unwrap();
        assert!(matches!(functionals(&gaussian(&line(128)), &v, 1.0, 3.0), Err(Error::GridMismatch)));
    }

    #[test]
    fn derivative_of_gaussian() {
        let g = line(256);
        let d = gaussian(&g).derivative_x1();
        let exact = Field::from_real_fn(&g, |x| -x[0] * (-0.5 * x[0] * x[0]).exp());
        assert!(d.sub(&exact).l2_norm() < 1e-10);
    }
}
