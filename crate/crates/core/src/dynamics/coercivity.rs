//! Lower bounds `<L h, h> >= kappa ||h||_{H^s}^2` on the `L^2` complement of `phi`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::OperatorHandle;
use crate::spectral::LinearizedPair;

const MAX_ITERATIONS: usize = 5_000;
const TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoercivityReport {
    pub kappa_plus: f64,
    pub kappa_minus: f64,
    /// `min(kappa_plus, kappa_minus)`.
    pub kappa: f64,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Problem<'a> {
    op: &'a OperatorHandle,
    phi: Vec<f64>,
    phi_norm2: f64,
    sobolev: Vec<f64>,
    precond: Vec<f64>,
}

impl Problem<'_> {
    fn multiplier(&self, v: &[f64], m: &[f64]) -> Vec<f64> {
        let mut c: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.op.grid().apply_multiplier(&mut c, m);
        c.into_iter().map(|z| z.re).collect()
    }

    fn project(&self, v: &mut [f64]) {
        let c = dot(v, &self.phi) / self.phi_norm2;
        for (x, f) in v.iter_mut().zip(&self.phi) {
            *x -= c * f;
        }
    }

    /// Smallest Rayleigh quotient reached from `start`, by locally optimal
    /// preconditioned iteration on the subspace `{x, T r, previous step}`.
    fn minimize(&self, start: Vec<f64>) -> Result<(f64, usize)> {
        let mut x = start;
        self.project(&mut x);
        let mut prev: Option<Vec<f64>> = None;
        let mut rho_old = f64::INFINITY;
        for it in 0..MAX_ITERATIONS {
            let bx = self.multiplier(&x, &self.sobolev);
            let ax = self.op.apply_real(&x);
            let rho = dot(&ax, &x) / dot(&bx, &x);
            if (rho_old - rho).abs() <= TOLERANCE * rho.abs().max(1e-3) {
                return Ok((rho, it));
            }
            rho_old = rho;
            let r: Vec<f64> = ax.iter().zip(&bx).map(|(a, b)| a - rho * b).collect();
            let mut w = self.multiplier(&r, &self.precond);
            self.project(&mut w);

            // B-orthonormal basis of the search space
            let mut basis: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
            for mut v in [Some(x.clone()), Some(w), prev.clone()].into_iter().flatten() {
                for _ in 0..2 {
                    for (q, bq) in &basis {
                        let c = dot(&v, bq);
                        v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
                    }
                }
                let bv = self.multiplier(&v, &self.sobolev);
                let n2 = dot(&v, &bv);
                if n2 > 1e-24 * dot(&v, &v).max(f64::MIN_POSITIVE) && n2 > 0.0 {
                    let n = n2.sqrt();
                    basis.push((v.iter().map(|a| a / n).collect(), bv.iter().map(|a| a / n).collect()));
                }
            }
            let images: Vec<Vec<f64>> = basis.iter().map(|(q, _)| self.op.apply_real(q)).collect();
            let k = basis.len();
            let a = DMatrix::from_fn(k, k, |i, j| 0.5 * (dot(&images[i], &basis[j].0) + dot(&images[j], &basis[i].0)));
            let eig = SymmetricEigen::new(a);
            let c = (0..k).min_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j])).unwrap_or(0);
            let y = eig.eigenvectors.column(c);
            let mut next = vec![0.0; x.len()];
            let mut step = vec![0.0; x.len()];
            for (i, (q, _)) in basis.iter().enumerate() {
                for (n, v) in next.iter_mut().zip(q) {
                    *n += y[i] * v;
                }
                if i > 0 {
                    for (n, v) in step.iter_mut().zip(q) {
                        *n += y[i] * v;
                    }
                }
            }
            self.project(&mut next);
            self.project(&mut step);
            prev = Some(step);
            x = next;
        }
        Err(Error::NotConverged { what: "coercivity minimization", iterations: MAX_ITERATIONS, residual: rho_old })
    }
}

fn minimum(op: &OperatorHandle, phi: &[f64], trials: usize, rng: &mut ChaCha8Rng) -> Result<(f64, usize)> {
    let grid = op.grid();
    let floor = op.potential_floor();
    let c = floor.max(1.0);
    let problem = Problem {
        op,
        phi: phi.to_vec(),
        phi_norm2: dot(phi, phi),
        sobolev: grid.sobolev_weight(op.s()),
        precond: grid.fractional_symbol(op.s()).iter().map(|k| 1.0 / (k + c)).collect(),
    };
    let radii = grid.radii();
    let reach = 0.25 * grid.half_width();
    let mut best = (f64::INFINITY, 0);
    for _ in 0..trials.max(1) {
        let start: Vec<f64> = radii
            .iter()
            .map(|r| {
                let z: f64 = StandardNormal.sample(rng);
                z * (-(r / reach).powi(2)).exp()
            })
            .collect::<Vec<f64>>();
        let (kappa, it) = problem.minimize(start)?;
        best = (best.0.min(kappa), best.1 + it);
    }
    Ok(best)
}

/// Minimizes both `H^s` Rayleigh quotients over `phi`-orthogonal fields from
/// `trials` seeded starts each. Errors if either minimum is not positive.
pub fn coercivity_check(pair: &LinearizedPair, trials: usize, seed: u64) -> Result<CoercivityReport> {
    let phi = pair.phi.require_real()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (kappa_plus, a) = minimum(&pair.lplus, &phi, trials, &mut rng)?;
    let (kappa_minus, b) = minimum(&pair.lminus, &phi, trials, &mut rng)?;
    let kappa = kappa_plus.min(kappa_minus);
    if !(kappa > 0.0) {
        return Err(Error::NotPositiveDefinite(format!(
            "coercivity constant on the complement of phi is {kappa:e} (L+: {kappa_plus:e}, L-: {kappa_minus:e})"
        )));
    }
    Ok(CoercivityReport { kappa_plus, kappa_minus, kappa, iterations: a + b })
}
