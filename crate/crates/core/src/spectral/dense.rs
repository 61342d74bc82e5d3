//! Dense diagonalization of 1D operators, optionally restricted to a parity sector.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::Sector;
use crate::error::{Error, Result};
use crate::operators::OperatorHandle;

/// Sector basis: each vector is a list of `(index, coefficient)` pairs.
pub(crate) fn sector_basis(n: usize, sector: Sector) -> Vec<Vec<(usize, f64)>> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    match sector {
        Sector::Full => (0..n).map(|j| vec![(j, 1.0)]).collect(),
        Sector::Even => {
            let mut out = vec![vec![(0, 1.0)], vec![(n / 2, 1.0)]];
            out.extend((1..n / 2).map(|j| vec![(j, r), (n - j, r)]));
            out
        }
        Sector::Odd => (1..n / 2).map(|j| vec![(j, r), (n - j, -r)]).collect(),
    }
}

/// Lowest `m` eigenpairs; eigenvectors are unit vectors in the Euclidean norm.
pub(crate) fn lowest(op: &OperatorHandle, m: usize, sector: Sector) -> Result<Vec<(f64, Vec<f64>)>> {
    let grid = op.grid();
    if grid.dim() != 1 {
        return Err(Error::Unsupported("dense eigensolver is 1D only".into()));
    }
    let n = grid.len();
    // first column of the kinetic circulant
    let mut column = vec![Complex64::new(0.0, 0.0); n];
    column[0] = Complex64::new(1.0, 0.0);
    grid.apply_multiplier(&mut column, op.symbol());
    let kernel: Vec<f64> = column.iter().map(|c| c.re).collect();
    let weights = op.weights();
    let entry = |i: usize, j: usize| {
        let k = kernel[(i + n - j) % n];
        if i == j {
            k + weights[i] + op.shift()
        } else {
            k
        }
    };
    let basis = sector_basis(n, sector);
    let dim = basis.len();
    if m > dim {
        return Err(Error::InvalidParameter(format!("requested {m} eigenpairs from a {dim}-dimensional sector")));
    }
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    for (ia, va) in basis.iter().enumerate() {
        for ib in ia..dim {
            let mut sum = 0.0;
            for &(i, ci) in va {
                for &(j, cj) in &basis[ib] {
                    sum += ci * cj * entry(i, j);
                }
            }
            a[(ia, ib)] = sum;
            a[(ib, ia)] = sum;
        }
    }
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]).then(x.cmp(&y)));
    Ok(order
        .into_iter()
        .take(m)
        .map(|c| {
            let mut v = vec![0.0; n];
            for (ia, va) in basis.iter().enumerate() {
                let coeff = eig.eigenvectors[(ia, c)];
                for &(i, ci) in va {
                    v[i] += ci * coeff;
                }
            }
            (eig.eigenvalues[c], v)
        })
        .collect())
}
