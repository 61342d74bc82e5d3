//! Preconditioned conjugate gradients for `((-Delta)^s + W + mu) f = g`.
//!
//! The preconditioner is the free resolvent `(|k|^(2s) + c)^{-1}` with
//! `c = max(min W + mu, 1)`.

use num_complex::Complex64;

use super::OperatorHandle;
use crate::domain::Field;
use crate::error::{Error, Result};

pub const MAX_CG_ITERATIONS: usize = 10_000;

#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub solution: Field,
    pub iterations: usize,
    /// Final `||A f - g|| / ||g||`, recomputed from scratch.
    pub relative_residual: f64,
}

/// `((-Delta)^s + mu)^{-1} g`, applied exactly in Fourier space.
pub fn apply_free_resolvent(g: &Field, s: f64, mu: f64) -> Result<Field> {
    super::check_order(s)?;
    if !(mu > 0.0) {
        return Err(Error::NotPositiveDefinite(format!("free resolvent needs mu > 0, got {mu}")));
    }
    let inv: Vec<f64> = g.grid().fractional_symbol(s).iter().map(|m| 1.0 / (m + mu)).collect();
    Ok(g.apply_multiplier(&inv))
}

/// Solve `A f = g` to `||A f - g|| <= tol ||g||` where `A` is the handle
/// (its shift plays the role of `mu`).
pub fn apply_resolvent(h: &OperatorHandle, g: &Field, tol: f64) -> Result<Field> {
    Ok(solve_shifted(h, g, None, tol, MAX_CG_ITERATIONS)?.solution)
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// PCG with an optional warm start.
pub fn solve_shifted(
    h: &OperatorHandle,
    g: &Field,
    initial: Option<&Field>,
    tol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    if g.grid() != h.grid() || initial.is_some_and(|x| x.grid() != h.grid()) {
        return Err(Error::GridMismatch);
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let floor = h.potential_floor();
    if floor < 0.0 {
        return Err(Error::NotPositiveDefinite(format!(
            "min(W) + shift = {floor} < 0; the operator is not known to be positive"
        )));
    }
    let grid = h.grid().clone();
    let rhs = g.values();
    let rhs_norm = norm(rhs);
    if rhs_norm == 0.0 {
        return Ok(CgOutcome { solution: Field::zeros(&grid), iterations: 0, relative_residual: 0.0 });
    }
    let c = floor.max(1.0);
    let precond: Vec<f64> = h.symbol().iter().map(|m| 1.0 / (m + c)).collect();
    let apply_precond = |r: &[Complex64]| {
        let mut z = r.to_vec();
        grid.apply_multiplier(&mut z, &precond);
        z
    };

    let n = rhs.len();
    let mut x = initial.map_or_else(|| vec![Complex64::new(0.0, 0.0); n], |f| f.values().to_vec());
    let mut ax = vec![Complex64::new(0.0, 0.0); n];
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    // restart from the true residual whenever the recursive one claims convergence
    for _restart in 0..4 {
        h.apply_raw(&x, &mut ax);
        let mut r: Vec<Complex64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        residual = norm(&r) / rhs_norm;
        if residual <= tol {
            break;
        }
        let mut z = apply_precond(&r);
        let mut p = z.clone();
        let mut rz = dot(&r, &z).re;
        let mut ap = vec![Complex64::new(0.0, 0.0); n];
        while iterations < max_iter {
            iterations += 1;
            h.apply_raw(&p, &mut ap);
            let pap = dot(&p, &ap).re;
            if !(pap > 0.0) {
                return Err(Error::NotPositiveDefinite(format!("curvature p'Ap = {pap:e} during CG")));
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            if norm(&r) / rhs_norm <= 0.5 * tol {
                break;
            }
            z = apply_precond(&r);
            let rz_next = dot(&r, &z).re;
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        if iterations >= max_iter {
            h.apply_raw(&x, &mut ax);
            residual = rhs.iter().zip(&ax).map(|(b, a)| (b - a).norm_sqr()).sum::<f64>().sqrt() / rhs_norm;
            break;
        }
    }
    if residual > tol {
        h.apply_raw(&x, &mut ax);
        residual = rhs.iter().zip(&ax).map(|(b, a)| (b - a).norm_sqr()).sum::<f64>().sqrt() / rhs_norm;
    }
    if residual > tol {
        return Err(Error::NotConverged { what: "conjugate gradients", iterations, residual });
    }
    Ok(CgOutcome { solution: Field::from_values(&grid, x)?, iterations, relative_residual: residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Grid;
    use crate::operators::{Potential, PotentialKind, RadialTable};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line() -> Grid {
        Grid::new(1, 12.0, 512).unwrap()
    }

    fn zero_potential(g: &Grid) -> Potential {
        let t = RadialTable::new(vec![0.0, 100.0], vec![0.0, 0.0]).unwrap();
        Potential::new(g, PotentialKind::Tabulated(t)).unwrap()
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let g = line();
        let v = Potential::new(&g, PotentialKind::Power { alpha: 2.0 }).unwrap();
        let h = OperatorHandle::new(1.0, &v, 0.0).unwrap();
        let out = apply_resolvent(&h, &Field::zeros(&g), 1e-10).unwrap();
        assert_eq!(out.max_modulus(), 0.0);
    }

    #[test]
    fn harmonic_ground_state_is_fixed() {
        let g = line();
        let v = Potential::new(&g, PotentialKind::Power { alpha: 2.0 }).unwrap();
        let h = OperatorHandle::new(1.0, &v, 0.0).unwrap();
        let f = Field::from_real_fn(&g, |x| (-0.5 * x[0] * x[0]).exp());
        let out = apply_resolvent(&h, &f, 1e-12).unwrap();
        assert!(out.sub(&f).l2_norm() / f.l2_norm() < 1e-6);
    }

    #[test]
    fn zero_potential_matches_green_multiplier() {
        let g = line();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = Field::from_real_fn(&g, |_| rng.random_range(-1.0..1.0));
        for s in [0.5, 1.0] {
            let h = OperatorHandle::new(s, &zero_potential(&g), 1.0).unwrap();
            let cg = apply_resolvent(&h, &f, 1e-12).unwrap();
            let exact = apply_free_resolvent(&f, s, 1.0).unwrap();
            assert!(cg.sub(&exact).l2_norm() / exact.l2_norm() < 1e-10);
        }
    }

    #[test]
    fn residual_and_ordering_hold() {
        let g = line();
        let v = Potential::new(&g, PotentialKind::HarmonicQuartic { a: 0.1 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = Field::from_real_fn(&g, |x| rng.random_range(0.0..1.0) * (-x[0] * x[0] / 20.0).exp());
        for (s, mu) in [(0.5, 0.5), (0.75, 2.0), (1.0, 1.0)] {
            let h = OperatorHandle::new(s, &v, mu).unwrap();
            let out = solve_shifted(&h, &f, None, 1e-10, MAX_CG_ITERATIONS).unwrap();
            let res = h.apply(&out.solution).unwrap().sub(&f).l2_norm() / f.l2_norm();
            assert!(res <= 1e-10, "{res}");
            let free = apply_free_resolvent(&f, s, mu).unwrap();
            assert!(out.solution.l2_norm() <= free.l2_norm() * (1.0 + 1e-6));
        }
    }

    #[test]
    fn negative_floor_is_rejected() {
        let g = line();
        let v = Potential::new(&g, PotentialKind::Power { alpha: 2.0 }).unwrap();
        let h = OperatorHandle::new(1.0, &v, -0.5).unwrap();
        let f = Field::from_real_fn(&g, |x| (-x[0] * x[0]).exp());
        assert!(matches!(apply_resolvent(&h, &f, 1e-8), Err(Error::NotPositiveDefinite(_))));
        assert!(apply_free_resolvent(&f, 1.0, 0.0).is_err());
    }

    #[test]
    fn iteration_cap_is_reported() {
        let g = line();
        let v = Potential::new(&g, PotentialKind::Power { alpha: 4.0 }).unwrap();
        let h = OperatorHandle::new(1.0, &v, 0.0).unwrap();
        let f = Field::from_real_fn(&g, |x| (x[0] * 3.0).sin());
        assert!(matches!(solve_shifted(&h, &f, None, 1e-12, 3), Err(Error::NotConverged { .. })));
    }
}
