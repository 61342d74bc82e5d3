//! Modulation angle, orthogonal decomposition and distance to the orbit `{e^{i theta} phi}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::{hs_inner, hs_norm_squared, Field};
use crate::error::{Error, Result};

fn real_inner(a: &[f64], b: &[f64], w: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * w
}

/// `theta` on the small branch of `sin(theta) ||phi||^2 = <Im u, phi>`.
pub fn modulation_theta(u: &Field, phi: &Field) -> Result<f64> {
    u.ensure_same_grid(phi)?;
    let phi = phi.require_real()?;
    let w = u.grid().cell_volume();
    let sine = real_inner(&u.imag_parts(), &phi, w) / real_inner(&phi, &phi, w);
    if !(sine.abs() <= 1.0) {
        return Err(Error::ModulationBreakdown(sine));
    }
    Ok(sine.asin())
}

/// `Re u = (cos theta + mu) phi + eta`, `Im u = sin theta phi + zeta`, with
/// `eta, zeta` orthogonal to `phi` in `L^2`.
#[derive(Clone, Debug)]
pub struct Modulation {
    pub theta: f64,
    pub mu: f64,
    pub eta: Field,
    pub zeta: Field,
}

impl Modulation {
    /// The field the decomposition came from.
    pub fn reconstruct(&self, phi: &Field) -> Result<Field> {
        let phi = phi.require_real()?;
        let (s, c) = self.theta.sin_cos();
        let values = phi
            .iter()
            .zip(self.eta.values())
            .zip(self.zeta.values())
            .map(|((f, e), z)| Complex64::new((c + self.mu) * f + e.re, s * f + z.re))
            .collect();
        Field::from_values(self.eta.grid(), values)
    }
}

pub fn decompose_modulated(u: &Field, phi: &Field) -> Result<Modulation> {
    let theta = modulation_theta(u, phi)?;
    let grid = u.grid();
    let w = grid.cell_volume();
    let f = phi.require_real()?;
    let norm2 = real_inner(&f, &f, w);
    let (s, c) = theta.sin_cos();
    let re: Vec<f64> = u.real_parts().iter().zip(&f).map(|(r, f)| r - c * f).collect();
    let mu = real_inner(&re, &f, w) / norm2;
    let eta: Vec<f64> = re.iter().zip(&f).map(|(r, f)| r - mu * f).collect();
    let zeta: Vec<f64> = u.imag_parts().iter().zip(&f).map(|(i, f)| i - s * f).collect();
    Ok(Modulation { theta, mu, eta: Field::from_real(grid, &eta)?, zeta: Field::from_real(grid, &zeta)? })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitalDistance {
    /// `inf_theta ||u - e^{i theta} phi||_{H^s}`.
    pub d: f64,
    /// The minimizing phase, in `(-pi, pi]`.
    pub theta: f64,
}

/// Closed-form minimizer `theta* = arg <u, phi>_{H^s}`; `d` is evaluated as
/// `||u - e^{i theta*} phi||` directly to avoid cancellation.
pub fn orbital_distance(u: &Field, phi: &Field, s: f64) -> Result<OrbitalDistance> {
    u.ensure_same_grid(phi)?;
    phi.require_real()?;
    crate::operators::check_order(s)?;
    let z = hs_inner(u, phi, s);
    let theta = if z.norm() == 0.0 { 0.0 } else { z.arg() };
    let diff = u.axpy(-Complex64::from_polar(1.0, theta), phi);
    Ok(OrbitalDistance { d: hs_norm_squared(&diff, s).sqrt(), theta })
}
