//! Shift-invert block Lanczos with full reorthogonalization.
//!
//! The Krylov space of `(A - sigma)^{-1}` is built block by block from a seeded
//! random start; Ritz pairs come from a Rayleigh-Ritz projection of `A` itself
//! so their residuals are measured against the true operator.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Sector;
use crate::domain::Field;
use crate::error::{Error, Result};
use crate::operators::{solve_shifted, OperatorHandle, MAX_CG_ITERATIONS};

const SEED: u64 = 0x5eed_1a2c;
const BLOCK: usize = 4;
const INNER_TOL: f64 = 1e-13;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn project(v: &mut [f64], sector: Sector, mirror: &[usize]) {
    let sign = match sector {
        Sector::Full => return,
        Sector::Even => 1.0,
        Sector::Odd => -1.0,
    };
    let copy = v.to_vec();
    for (i, x) in v.iter_mut().enumerate() {
        *x = 0.5 * (copy[i] + sign * copy[mirror[i]]);
    }
}

/// Orthogonalize against `basis` twice; returns the norm before normalization.
fn orthonormalize(v: &mut [f64], basis: &[Vec<f64>]) -> f64 {
    let before = dot(v, v).sqrt();
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, v);
            for (x, y) in v.iter_mut().zip(q) {
                *x -= c * y;
            }
        }
    }
    let after = dot(v, v).sqrt();
    if after > 1e-10 * before {
        for x in v.iter_mut() {
            *x /= after;
        }
    }
    after / before.max(f64::MIN_POSITIVE)
}

pub(crate) fn lowest(
    op: &OperatorHandle,
    m: usize,
    sector: Sector,
    tolerance: f64,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let grid = op.grid().clone();
    let n = grid.len();
    let mirror: Vec<usize> = (0..n).map(|i| grid.mirror(i)).collect();
    let sigma = op.potential_floor() - 1.0;
    let shifted = op.with_shift(op.shift() - sigma);
    let max_basis = n.min(600);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let random = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        project(&mut v, sector, &mirror);
        v
    };

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut images: Vec<Vec<f64>> = Vec::new();
    let mut gram: Vec<Vec<f64>> = Vec::new();
    let append = |v: Vec<f64>, basis: &mut Vec<Vec<f64>>, images: &mut Vec<Vec<f64>>, gram: &mut Vec<Vec<f64>>| {
        let av = op.apply_real(&v);
        let row: Vec<f64> = basis.iter().map(|q| dot(q, &av)).collect();
        for (r, g) in row.iter().zip(gram.iter_mut()) {
            g.push(*r);
        }
        let mut own = row;
        own.push(dot(&v, &av));
        gram.push(own);
        basis.push(v);
        images.push(av);
    };

    let mut block = Vec::new();
    while block.len() < BLOCK {
        let mut v = random(&mut rng);
        if orthonormalize(&mut v, &basis) > 1e-6 {
            block.push(v.clone());
            append(v, &mut basis, &mut images, &mut gram);
        }
    }
    let mut last_residual = f64::INFINITY;
    loop {
        let k = basis.len();
        if k >= m + BLOCK {
            let g = DMatrix::from_fn(k, k, |i, j| 0.5 * (gram[i][j] + gram[j][i]));
            let eig = SymmetricEigen::new(g);
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]).then(x.cmp(&y)));
            let mut pairs = Vec::with_capacity(m);
            let mut worst: f64 = 0.0;
            for &c in order.iter().take(m) {
                let mu = eig.eigenvalues[c];
                let mut v = vec![0.0; n];
                let mut av = vec![0.0; n];
                for j in 0..k {
                    let y = eig.eigenvectors[(j, c)];
                    for i in 0..n {
                        v[i] += y * basis[j][i];
                        av[i] += y * images[j][i];
                    }
                }
                let norm = dot(&v, &v).sqrt();
                let res = av.iter().zip(&v).map(|(a, x)| (a - mu * x).powi(2)).sum::<f64>().sqrt() / norm;
                worst = worst.max(res / (1.0 + mu.abs()));
                v.iter_mut().for_each(|x| *x /= norm);
                pairs.push((mu, v));
            }
            last_residual = worst;
            if worst <= tolerance {
                return Ok(pairs);
            }
        }
        if basis.len() + BLOCK > max_basis {
            return Err(Error::NotConverged {
                what: "shift-invert Lanczos",
                iterations: basis.len(),
                residual: last_residual,
            });
        }
        let mut next = Vec::with_capacity(BLOCK);
        for q in &block {
            let rhs = Field::from_real(&grid, q)?;
            let solved = solve_shifted(&shifted, &rhs, None, INNER_TOL, MAX_CG_ITERATIONS)?;
            let mut w: Vec<f64> = solved.solution.values().iter().map(|c: &Complex64| c.re).collect();
            project(&mut w, sector, &mirror);
            let mut kept = orthonormalize(&mut w, &basis) > 1e-10;
            while !kept {
                w = random(&mut rng);
                kept = orthonormalize(&mut w, &basis) > 1e-6;
            }
            next.push(w.clone());
            append(w, &mut basis, &mut images, &mut gram);
        }
        block = next;
    }
}
