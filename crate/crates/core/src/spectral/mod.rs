//! Eigen-analysis of `H` and of the linearized operators `L+` and `L-`.
//!
//! In 1D the even/odd parity sectors play the role of the radial and first
//! angular sectors. Small 1D problems are diagonalized densely; everything
//! else goes through shift-invert block Lanczos.

mod dense;
mod krylov;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::domain::{power_nonlinearity, Field, Grid};
use crate::error::{Error, Result};
use crate::groundstate::{GroundState, ProblemSpec};
use crate::operators::{OperatorHandle, Potential};

/// Largest number of eigenpairs a single solve may request.
pub const MAX_EIGENPAIRS: usize = 12;
/// Largest 1D resolution handled by dense diagonalization.
pub const DENSE_LIMIT: usize = 1024;
/// Residual target `||A v - mu v|| <= RESIDUAL_TOLERANCE (1 + |mu|)`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;
/// Default amplitude threshold for sign-change counting.
pub const AMPLITUDE_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sector {
    Full,
    Even,
    Odd,
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sector::Full => "full",
            Sector::Even => "even",
            Sector::Odd => "odd",
        })
    }
}

impl std::str::FromStr for Sector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "full" => Ok(Sector::Full),
            "even" => Ok(Sector::Even),
            "odd" => Ok(Sector::Odd),
            other => Err(Error::InvalidParameter(format!("unknown sector '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorTag {
    H,
    Lplus,
    Lminus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EigenMethod {
    /// Dense for 1D grids up to [`DENSE_LIMIT`] points, Lanczos otherwise.
    Auto,
    Dense,
    Lanczos,
}

/// Lowest eigenpairs of one operator in one sector.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub operator: OperatorTag,
    pub sector: Sector,
    pub eigenvalues: Vec<f64>,
    /// L2-normalized on the grid; not serialized (dumped as snapshots instead).
    #[serde(skip)]
    pub eigenfields: Vec<Field>,
    pub residuals: Vec<f64>,
    pub orthonormality_error: f64,
    pub negative_count: usize,
    pub near_zero_count: usize,
    pub zero_tol: f64,
    pub sign_changes: Vec<usize>,
}

impl SpectrumReport {
    /// Residual and orthonormality requirements on the stored pairs.
    pub fn is_accurate(&self) -> bool {
        self.residuals.iter().zip(&self.eigenvalues).all(|(r, mu)| *r <= RESIDUAL_TOLERANCE * (1.0 + mu.abs()))
            && self.orthonormality_error <= RESIDUAL_TOLERANCE
    }
}

/// Samples along the ray `x_1 >= 0` (through the origin, along the first axis).
pub fn ray_profile(f: &Field) -> Vec<f64> {
    let g = f.grid();
    let n = g.points_per_axis();
    let half = n / 2;
    (half..n)
        .map(|a| {
            let index = if g.dim() == 1 { a } else { a * n + half };
            f.values()[index].re
        })
        .collect()
}

/// Counts sign alternations among entries above `amplitude_tol * max|value|`.
pub fn count_sign_changes(profile: &[f64], amplitude_tol: f64) -> Result<usize> {
    let peak = profile.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::EmptyProfile);
    }
    let threshold = amplitude_tol * peak;
    let mut last = 0.0f64;
    let mut changes = 0;
    for &v in profile.iter().filter(|v| v.abs() > threshold) {
        if last != 0.0 && v.signum() != last.signum() {
            changes += 1;
        }
        last = v;
    }
    Ok(changes)
}

fn to_field(grid: &Grid, v: &[f64]) -> Result<Field> {
    // unit Euclidean vector -> unit grid L2 norm, sign fixed by the largest entry
    let scale = 1.0 / grid.cell_volume().sqrt();
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() * (1.0 + 1e-12) {
            best = i;
        }
    }
    let sign = if v[best] < 0.0 { -1.0 } else { 1.0 };
    let samples: Vec<f64> = v.iter().map(|x| x * scale * sign).collect();
    Field::from_real(grid, &samples)
}

/// Lowest `m` eigenpairs of a self-adjoint operator, ascending.
pub fn eigen_lowest(op: &OperatorHandle, tag: OperatorTag, m: usize, sector: Sector, zero_tol: f64) -> Result<SpectrumReport> {
    eigen_lowest_with(op, tag, m, sector, zero_tol, EigenMethod::Auto)
}

pub fn eigen_lowest_with(
    op: &OperatorHandle,
    tag: OperatorTag,
    m: usize,
    sector: Sector,
    zero_tol: f64,
    method: EigenMethod,
) -> Result<SpectrumReport> {
    if m == 0 || m > MAX_EIGENPAIRS {
        return Err(Error::InvalidParameter(format!("eigenpair count must lie in 1..={MAX_EIGENPAIRS}, got {m}")));
    }
    if !(zero_tol >= 0.0) {
        return Err(Error::InvalidParameter("zero tolerance must be nonnegative".into()));
    }
    let grid = op.grid().clone();
    if grid.dim() != 1 && sector != Sector::Full {
        return Err(Error::Unsupported(format!("{sector} sector is only available in 1D")));
    }
    let dense = match method {
        EigenMethod::Dense => true,
        EigenMethod::Lanczos => false,
        EigenMethod::Auto => grid.dim() == 1 && grid.points_per_axis() <= DENSE_LIMIT,
    };
    let pairs = if dense {
        dense::lowest(op, m, sector)?
    } else {
        krylov::lowest(op, m, sector, 1e-2 * RESIDUAL_TOLERANCE)?
    };

    let mut eigenvalues = Vec::with_capacity(m);
    let mut eigenfields = Vec::with_capacity(m);
    let mut residuals = Vec::with_capacity(m);
    let mut sign_changes = Vec::with_capacity(m);
    for (mu, v) in pairs {
        let field = to_field(&grid, &v)?;
        let res = op.apply(&field)?.axpy((-mu).into(), &field).l2_norm();
        sign_changes.push(count_sign_changes(&ray_profile(&field), AMPLITUDE_TOLERANCE).unwrap_or(0));
        eigenvalues.push(mu);
        residuals.push(res);
        eigenfields.push(field);
    }
    let mut orthonormality_error: f64 = 0.0;
    for i in 0..eigenfields.len() {
        for j in 0..=i {
            let target = if i == j { 1.0 } else { 0.0 };
            orthonormality_error = orthonormality_error.max((eigenfields[i].inner(&eigenfields[j]).re - target).abs());
        }
    }
    Ok(SpectrumReport {
        operator: tag,
        sector,
        negative_count: eigenvalues.iter().filter(|&&mu| mu < -zero_tol).count(),
        near_zero_count: eigenvalues.iter().filter(|&&mu| mu.abs() <= zero_tol).count(),
        eigenvalues,
        eigenfields,
        residuals,
        orthonormality_error,
        zero_tol,
        sign_changes,
    })
}

/// `zero_tol = 1e-6 (1 + |omega|)`.
pub fn default_zero_tol(omega: f64) -> f64 {
    1e-6 * (1.0 + omega.abs())
}

/// Largest Euler-Lagrange residual (relative to `sqrt(lambda)`) accepted by [`linearize`].
pub const LINEARIZE_RESIDUAL_LIMIT: f64 = 1e-6;

/// `L+ = H + omega - p phi^(p-1)` and `L- = H + omega - phi^(p-1)` about a ground state.
#[derive(Clone, Debug)]
pub struct LinearizedPair {
    pub lplus: OperatorHandle,
    pub lminus: OperatorHandle,
    pub phi: Field,
    pub omega: f64,
    pub p: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairResiduals {
    /// `||L- phi|| / ||phi||`.
    pub lminus_phi: f64,
    /// `||L+ phi + (p-1) phi^p|| / ||phi||`.
    pub lplus_phi: f64,
    /// `<L+ phi, phi>` and `-(p-1) int phi^(p+1)`.
    pub lplus_form: f64,
    pub lplus_form_expected: f64,
}

pub fn linearize(spec: &ProblemSpec, gs: &GroundState) -> Result<LinearizedPair> {
    if gs.phi.grid() != spec.grid() {
        return Err(Error::GridMismatch);
    }
    let limit = LINEARIZE_RESIDUAL_LIMIT * gs.lambda.sqrt();
    if !(gs.el_residual <= limit) {
        return Err(Error::NotConverged { what: "ground state", iterations: gs.iterations, residual: gs.el_residual });
    }
    let phi = gs.phi.require_real()?;
    let v = spec.potential().samples();
    let p = spec.p();
    let power: Vec<f64> = phi.iter().map(|x| x.abs().powf(p - 1.0)).collect();
    let plus: Vec<f64> = v.iter().zip(&power).map(|(v, q)| v - p * q).collect();
    let minus: Vec<f64> = v.iter().zip(&power).map(|(v, q)| v - q).collect();
    Ok(LinearizedPair {
        lplus: OperatorHandle::with_weights(spec.grid(), spec.s(), plus, gs.omega)?,
        lminus: OperatorHandle::with_weights(spec.grid(), spec.s(), minus, gs.omega)?,
        phi: gs.phi.clone(),
        omega: gs.omega,
        p,
    })
}

impl LinearizedPair {
    pub fn residuals(&self) -> Result<PairResiduals> {
        let norm = self.phi.l2_norm();
        let phi_p = self.phi.map(|c| power_nonlinearity(c, self.p));
        let lplus_phi = self.lplus.apply(&self.phi)?;
        Ok(PairResiduals {
            lminus_phi: self.lminus.apply(&self.phi)?.l2_norm() / norm,
            lplus_phi: lplus_phi.axpy((self.p - 1.0).into(), &phi_p).l2_norm() / norm,
            lplus_form: lplus_phi.inner(&self.phi).re,
            lplus_form_expected: -(self.p - 1.0) * phi_p.inner(&self.phi).re,
        })
    }
}

/// Morse index and kernel data for `L+`, and the bottom of the spectrum of `L-`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexCertificate {
    pub n_plus: usize,
    pub ker_plus_dim: usize,
    pub lminus_min: f64,
    pub lminus_gap: f64,
    /// Cosine similarity between the lowest `L-` eigenvector and `phi`.
    pub lminus_alignment: f64,
    /// Largest `|<v, phi>| / ||phi||` over `L+` eigenvectors inside the zero band.
    pub kernel_overlap: f64,
    pub zero_tol: f64,
}

impl IndexCertificate {
    pub fn non_degenerate(&self) -> bool {
        self.n_plus == 1 && self.ker_plus_dim == 0 && self.lminus_min.abs() <= 1e-6 && self.lminus_gap > 0.0
    }
}

/// Certificate from precomputed full spectra (at least four pairs each).
pub fn certify_from_spectra(plus: &SpectrumReport, minus: &SpectrumReport, phi: &Field) -> Result<IndexCertificate> {
    for (report, tag) in [(plus, OperatorTag::Lplus), (minus, OperatorTag::Lminus)] {
        if report.operator != tag || report.sector != Sector::Full || report.eigenvalues.len() < 4 {
            return Err(Error::InvalidParameter(format!("need a full-sector {tag:?} spectrum with at least 4 pairs")));
        }
    }
    let zero_tol = plus.zero_tol;
    let phi_norm = phi.l2_norm();
    let kernel_overlap = plus
        .eigenvalues
        .iter()
        .zip(&plus.eigenfields)
        .filter(|(mu, _)| mu.abs() <= zero_tol)
        .map(|(_, v)| v.inner(phi).re.abs() / phi_norm)
        .fold(0.0, f64::max);
    Ok(IndexCertificate {
        n_plus: plus.negative_count,
        ker_plus_dim: plus.near_zero_count,
        lminus_min: minus.eigenvalues[0],
        lminus_gap: minus.eigenvalues[1],
        lminus_alignment: minus.eigenfields[0].inner(phi).re.abs() / phi_norm,
        kernel_overlap,
        zero_tol,
    })
}

/// Full spectra of `L+` and `L-` (six pairs each) and the resulting certificate.
pub fn certify_indices(pair: &LinearizedPair, zero_tol: f64) -> Result<(IndexCertificate, SpectrumReport, SpectrumReport)> {
    let plus = eigen_lowest(&pair.lplus, OperatorTag::Lplus, 6, Sector::Full, zero_tol)?;
    let minus = eigen_lowest(&pair.lminus, OperatorTag::Lminus, 6, Sector::Full, zero_tol)?;
    Ok((certify_from_spectra(&plus, &minus, &pair.phi)?, plus, minus))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SturmReport {
    pub e0: f64,
    pub e1: f64,
    pub sign_changes_e1: usize,
}

impl SturmReport {
    pub fn holds(&self) -> bool {
        self.e0 < 0.0 && self.e1 > 0.0 && self.sign_changes_e1 == 1
    }
}

/// Two lowest even-sector eigenvalues of `L+` and the radial sign changes of
/// the second eigenfield.
pub fn sturm_second_radial(pair: &LinearizedPair) -> Result<SturmReport> {
    if pair.phi.grid().dim() != 1 {
        return Err(Error::Unsupported("radial sign-change analysis is 1D only".into()));
    }
    let even = eigen_lowest(&pair.lplus, OperatorTag::Lplus, 2, Sector::Even, 0.0)?;
    let e1_field = &even.eigenfields[1];
    Ok(SturmReport {
        e0: even.eigenvalues[0],
        e1: even.eigenvalues[1],
        sign_changes_e1: count_sign_changes(&ray_profile(e1_field), AMPLITUDE_TOLERANCE)?,
    })
}

/// `||L+ (d phi / d x_1) + (dV / d x_1) phi||_2 / ||phi||_2`.
pub fn check_sector_relation(spec: &ProblemSpec, pair: &LinearizedPair) -> Result<f64> {
    let dv = spec.potential().gradient_x1()?;
    let dphi = pair.phi.derivative_x1();
    let lhs = pair.lplus.apply(&dphi)?.add(&pair.phi.mul_real(&dv));
    Ok(lhs.l2_norm() / pair.phi.l2_norm())
}

/// One row of the truncated-potential table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationRow {
    pub radius: f64,
    pub e0: f64,
    pub e1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationTable {
    pub rows: Vec<TruncationRow>,
    pub untruncated: TruncationRow,
    pub nondecreasing: bool,
    pub bounded: bool,
}

/// Two lowest (even-sector in 1D) eigenvalues of `(-Delta)^s + min(V, V(R)) + shift`
/// for each radius.
pub fn truncated_potential_convergence(s: f64, potential: &Potential, shift: f64, radii: &[f64]) -> Result<TruncationTable> {
    let grid = potential.grid();
    let l = grid.half_width();
    if radii.iter().any(|&r| !(r > 0.0 && r <= l)) {
        return Err(Error::InvalidParameter(format!("truncation radii must lie in (0, {l}]")));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("truncation radii must be ascending".into()));
    }
    let sector = if grid.dim() == 1 { Sector::Even } else { Sector::Full };
    let lowest_two = |weights: Vec<f64>| -> Result<(f64, f64)> {
        let op = OperatorHandle::with_weights(grid, s, weights, shift)?;
        let r = eigen_lowest(&op, OperatorTag::H, 2, sector, 0.0)?;
        Ok((r.eigenvalues[0], r.eigenvalues[1]))
    };
    let (u0, u1) = lowest_two(potential.samples().to_vec())?;
    let outer = grid.radii().into_iter().fold(0.0, f64::max);
    let untruncated = TruncationRow { radius: outer, e0: u0, e1: u1 };
    let rows = radii
        .iter()
        .map(|&radius| {
            let (e0, e1) = lowest_two(potential.truncated_samples(radius))?;
            Ok(TruncationRow { radius, e0, e1 })
        })
        .collect::<Result<Vec<_>>>()?;
    // roundoff slack: far-out truncations change the eigenvalues below machine precision
    let slack = 1e-12 * (1.0 + u0.abs().max(u1.abs()));
    let nondecreasing = rows.windows(2).all(|w| w[1].e0 >= w[0].e0 - slack && w[1].e1 >= w[0].e1 - slack);
    let bounded = rows.iter().all(|r| r.e0 <= u0 + slack && r.e1 <= u1 + slack);
    Ok(TruncationTable { rows, untruncated, nondecreasing, bounded })
}
