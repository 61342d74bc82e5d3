//! Discrete symmetric-decreasing rearrangement.
//!
//! Moduli are sorted in descending order and dealt onto the grid points in
//! order of increasing distance from the origin; equal distances are broken
//! by flat index. The output is an exact permutation of `|f|`.

use std::cmp::Ordering;

use super::{Field, Grid};
use crate::error::Result;

/// Grid indices sorted by distance from the origin, ties by index.
pub fn radial_order(grid: &Grid) -> Vec<usize> {
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by_key(|&i| (grid.squared_offset(i), i));
    order
}

/// Symmetric-decreasing rearrangement of `|f|` for a real field.
pub fn rearrange_decreasing(f: &Field) -> Result<Field> {
    let values = f.require_real()?;
    Ok(Field::from_real(f.grid(), &rearrange_samples(f.grid(), &values))?)
}

/// Same as [`rearrange_decreasing`] on raw samples.
pub fn rearrange_samples(grid: &Grid, values: &[f64]) -> Vec<f64> {
    let mut moduli: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    moduli.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    let mut out = vec![0.0; values.len()];
    for (slot, value) in radial_order(grid).into_iter().zip(moduli) {
        out[slot] = value;
    }
    out
}

/// Largest violation of radial monotonicity: `max(f(x2) - f(x1))` over
/// pairs with `|x1| <= |x2|` on the grid (0 when nonincreasing).
pub fn radial_monotonicity_violation(grid: &Grid, values: &[f64]) -> f64 {
    // walk shells outward; a sample may not exceed the minimum of all
    // strictly closer shells
    let order = radial_order(grid);
    let mut worst: f64 = 0.0;
    let mut inner_min = f64::INFINITY;
    let mut shell_min = f64::INFINITY;
    let mut current = None;
    for i in order {
        let d = grid.squared_offset(i);
        if current != Some(d) {
            inner_min = inner_min.min(shell_min);
            shell_min = f64::INFINITY;
            current = Some(d);
        }
        if inner_min.is_finite() {
            worst = worst.max(values[i] - inner_min);
        }
        shell_min = shell_min.min(values[i]);
    }
    worst
}
