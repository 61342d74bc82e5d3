//! Normalized ground states: minimizers of `E` at fixed power `||u||^2 = lambda`.

mod fixed_point;
mod flow;

pub use fixed_point::{solve_fixed_point, FixedPointOptions};
pub use flow::{solve_gradient_flow, FlowOptions};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::domain::rearrange::radial_monotonicity_violation;
use crate::domain::{functionals, power_nonlinearity, Field, Grid};
use crate::error::{Error, Result};
use crate::operators::{check_order, OperatorHandle, Potential};
use crate::spectral::SpectrumReport;

/// Relative tolerance on `||phi||^2 = lambda` accepted by [`extract_omega`].
pub const CONSTRAINT_TOLERANCE: f64 = 1e-8;

/// Parameters of a normalized ground-state problem.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    s: f64,
    p: f64,
    lambda: f64,
    potential: Potential,
}

impl ProblemSpec {
    /// Rejects `p >= 1 + 4s/n`, where the constrained minimization is not
    /// guaranteed to have a solution.
    pub fn new(s: f64, p: f64, lambda: f64, potential: Potential) -> Result<Self> {
        check_order(s)?;
        if !(p > 1.0) {
            return Err(Error::InvalidParameter(format!("nonlinearity exponent must exceed 1, got {p}")));
        }
        let bound = critical_exponent(s, potential.grid().dim());
        if p >= bound {
            return Err(Error::Supercritical { p, bound });
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("power lambda must be positive, got {lambda}")));
        }
        Ok(Self { s, p, lambda, potential })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.potential.grid().dim()
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn grid(&self) -> &Grid {
        self.potential.grid()
    }

    /// `(-Delta)^s + V + shift`.
    pub fn hamiltonian(&self, shift: f64) -> OperatorHandle {
        OperatorHandle::new(self.s, &self.potential, shift).expect("spec was validated")
    }

    /// The same problem at a different power.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.s, self.p, lambda, self.potential.clone())
    }

    /// Default starting point `e^{-|x|^2/2}` rescaled to `||u||^2 = lambda`.
    pub fn gaussian_guess(&self) -> Field {
        Field::from_real_fn(self.grid(), |x| (-0.5 * (x[0] * x[0] + x[1] * x[1])).exp()).normalized_to(self.lambda)
    }
}

/// `1 + 4s/n`.
pub fn critical_exponent(s: f64, dim: usize) -> f64 {
    1.0 + 4.0 * s / dim as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    GradientFlow,
    FixedPoint,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::GradientFlow => "gradient_flow",
            SolverKind::FixedPoint => "fixed_point",
        })
    }
}

/// A solved normalized wave with its multiplier and diagnostics.
#[derive(Clone, Debug)]
pub struct GroundState {
    pub phi: Field,
    pub omega: f64,
    pub lambda: f64,
    pub energy: f64,
    pub el_residual: f64,
    pub iterations: usize,
    pub solver: SolverKind,
}

/// JSON form of a [`GroundState`] (the field itself goes to a snapshot).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundStateReport {
    pub s: f64,
    pub p: f64,
    pub n: usize,
    pub lambda: f64,
    pub omega: f64,
    pub energy: f64,
    pub el_residual: f64,
    pub iterations: usize,
    pub solver: SolverKind,
}

/// One violated ground-state invariant.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantFailure {
    pub name: &'static str,
    pub measured: f64,
    pub bound: f64,
}

impl fmt::Display for InvariantFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: measured {:.3e}, bound {:.3e}", self.name, self.measured, self.bound)
    }
}

impl GroundState {
    /// Rebuild the derived quantities from a profile (e.g. one loaded from a snapshot).
    pub fn from_profile(spec: &ProblemSpec, phi: Field, iterations: usize, solver: SolverKind) -> Result<Self> {
        let omega = extract_omega(spec, &phi)?;
        let el_residual = el_residual(spec, &phi, omega)?;
        let energy = functionals(&phi, spec.potential(), spec.s, spec.p)?.energy;
        Ok(Self { phi, omega, lambda: spec.lambda, energy, el_residual, iterations, solver })
    }

    pub fn report(&self, spec: &ProblemSpec) -> GroundStateReport {
        GroundStateReport {
            s: spec.s,
            p: spec.p,
            n: spec.dim(),
            lambda: self.lambda,
            omega: self.omega,
            energy: self.energy,
            el_residual: self.el_residual,
            iterations: self.iterations,
            solver: self.solver,
        }
    }

    /// Default Euler-Lagrange tolerance `1e-8 sqrt(lambda)`.
    pub fn default_tolerance(lambda: f64) -> f64 {
        1e-8 * lambda.sqrt()
    }

    /// Checks constraint, positivity, radial monotonicity and the residual.
    pub fn check_invariants(&self, residual_bound: f64) -> Vec<InvariantFailure> {
        let mut failures = Vec::new();
        let power = self.phi.l2_norm_squared();
        let constraint = ((power - self.lambda) / self.lambda).abs();
        if !(constraint <= 1e-10) {
            failures.push(InvariantFailure { name: "constraint", measured: constraint, bound: 1e-10 });
        }
        match self.phi.require_real() {
            Err(_) => failures.push(InvariantFailure {
                name: "real",
                measured: self.phi.max_imaginary(),
                bound: 0.0,
            }),
            Ok(values) => {
                let peak = values.iter().copied().fold(0.0, f64::max);
                let lowest = values.iter().copied().fold(f64::INFINITY, f64::min);
                if lowest < -1e-10 * peak {
                    failures.push(InvariantFailure { name: "positivity", measured: -lowest / peak, bound: 1e-10 });
                }
                let bump = radial_monotonicity_violation(self.phi.grid(), &values) / peak;
                if !(bump <= 1e-8) {
                    failures.push(InvariantFailure { name: "bell_shape", measured: bump, bound: 1e-8 });
                }
            }
        }
        if !(self.el_residual <= residual_bound) {
            failures.push(InvariantFailure { name: "el_residual", measured: self.el_residual, bound: residual_bound });
        }
        failures
    }
}

fn ensure_grid(spec: &ProblemSpec, f: &Field) -> Result<()> {
    if f.grid() == spec.grid() {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// `E'[f] = (-Delta)^s f + V f - |f|^(p-1) f`.
pub fn energy_gradient(spec: &ProblemSpec, f: &Field) -> Result<Field> {
    ensure_grid(spec, f)?;
    let hf = spec.hamiltonian(0.0).apply(f)?;
    Ok(hf.sub(&f.map(|c| power_nonlinearity(c, spec.p))))
}

/// `omega = -(|| |nabla|^s phi ||^2 + int V phi^2 - int phi^(p+1)) / lambda`.
pub fn extract_omega(spec: &ProblemSpec, phi: &Field) -> Result<f64> {
    ensure_grid(spec, phi)?;
    let power = phi.l2_norm_squared();
    if !(((power - spec.lambda) / spec.lambda).abs() <= CONSTRAINT_TOLERANCE) {
        return Err(Error::ConstraintViolated { expected: spec.lambda, actual: power });
    }
    let v = functionals(phi, spec.potential(), spec.s, spec.p)?;
    Ok(-(v.kinetic + v.potential_term - v.nonlinear_term) / spec.lambda)
}

/// `|| E'[phi] + omega phi ||_2`.
pub fn el_residual(spec: &ProblemSpec, phi: &Field, omega: f64) -> Result<f64> {
    Ok(energy_gradient(spec, phi)?.add(&phi.scaled(omega)).l2_norm())
}

/// Both sides of `omega + sigma_0 = <Psi_0, phi^p> / <Psi_0, phi>`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmegaBound {
    pub omega_plus_sigma0: f64,
    pub ratio: f64,
    pub agreement: f64,
}

impl OmegaBound {
    pub fn holds(&self, omega: f64) -> bool {
        self.omega_plus_sigma0 > 0.0 && self.agreement <= 1e-6 * (1.0 + omega.abs())
    }
}

/// Compares `omega + sigma_0(H)` against the ratio obtained by testing the
/// Euler-Lagrange equation with the ground eigenfunction of `H`.
pub fn check_omega_lower_bound(gs: &GroundState, spectrum: &SpectrumReport, p: f64) -> Result<OmegaBound> {
    let psi0 = spectrum.eigenfields.first().ok_or(Error::EmptyProfile)?;
    let sigma0 = spectrum.eigenvalues[0];
    if psi0.grid() != gs.phi.grid() {
        return Err(Error::GridMismatch);
    }
    let phi_p = gs.phi.map(|c| power_nonlinearity(c, p));
    let ratio = psi0.inner(&phi_p).re / psi0.inner(&gs.phi).re;
    let omega_plus_sigma0 = gs.omega + sigma0;
    Ok(OmegaBound { omega_plus_sigma0, ratio, agreement: (omega_plus_sigma0 - ratio).abs() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::PotentialKind;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(s: f64, p: f64, lambda: f64) -> ProblemSpec {
        let g = Grid::new(1, 12.0, 512).unwrap();
        ProblemSpec::new(s, p, lambda, Potential::new(&g, PotentialKind::Power { alpha: 2.0 }).unwrap()).unwrap()
    }

    #[test]
    fn supercritical_is_rejected() {
        let g = Grid::new(1, 12.0, 64).unwrap();
        let v = Potential::new(&g, PotentialKind::Power { alpha: 2.0 }).unwrap();
        assert!(matches!(ProblemSpec::new(1.0, 5.0, 1.0, v.clone()), Err(Error::Supercritical { .. })));
        assert!(ProblemSpec::new(1.0, 4.9, 1.0, v.clone()).is_ok());
        assert!(ProblemSpec::new(1.0, 3.0, 0.0, v.clone()).is_err());
        let g2 = Grid::new(2, 6.0, 16).unwrap();
        let v2 = Potential::new(&g2, PotentialKind::Power { alpha: 2.0 }).unwrap();
        assert!(ProblemSpec::new(0.5, 2.0, 1.0, v2).is_err());
    }

    #[test]
    fn gradient_of_zero_is_zero() {
        let sp = spec(1.0, 3.0, 1.0);
        assert_eq!(energy_gradient(&sp, &Field::zeros(sp.grid())).unwrap().max_modulus(), 0.0);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let sp = spec(0.75, 2.5, 1.0);
        let g = sp.grid().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let a: f64 = rng.random_range(0.5..2.0);
            let c: f64 = rng.random_range(-1.0..1.0);
            let f = Field::from_real_fn(&g, |x| a * (-(x[0] - c).powi(2) / 2.0).exp() * (1.0 + 0.3 * x[0].sin()));
            let h = Field::from_real_fn(&g, |x| (-(x[0] * x[0]) / 3.0).exp() * (1.3 * x[0] + c).cos());
            let eps = 1e-5;
            let e = |u: &Field| functionals(u, sp.potential(), sp.s(), sp.p()).unwrap().energy;
            let fd = (e(&f.axpy(eps.into(), &h)) - e(&f.axpy((-eps).into(), &h))) / (2.0 * eps);
            let exact = energy_gradient(&sp, &f).unwrap().inner(&h).re;
            assert!((fd - exact).abs() <= 1e-6 * exact.abs(), "{fd} vs {exact}");
        }
    }

    #[test]
    fn omega_from_linear_limit() {
        // tiny power: the profile is the harmonic ground state and omega -> -1
        let sp = spec(1.0, 3.0, 1e-6);
        let phi = sp.gaussian_guess();
        let omega = extract_omega(&sp, &phi).unwrap();
        assert!((omega + 1.0).abs() < 1e-3);
        assert!(extract_omega(&sp, &phi.scaled(1.1)).is_err());
    }

    #[test]
    fn omega_is_resolution_independent() {
        let phi_on = |n: usize| {
            let g = Grid::new(1, 12.0, n).unwrap();
            let v = Potential::new(&g, PotentialKind::Power { alpha: 2.0 }).unwrap();
            let sp = ProblemSpec::new(1.0, 3.0, 1.0, v).unwrap();
            let phi = Field::from_real_fn(&g, |x| (-0.4 * x[0] * x[0]).exp() * (1.0 + 0.1 * x[0] * x[0]))
                .normalized_to(1.0);
            extract_omega(&sp, &phi).unwrap()
        };
        assert!((phi_on(256) - phi_on(512)).abs() < 1e-6);
    }

    #[test]
    fn omega_makes_residual_orthogonal() {
        let sp = spec(0.5, 2.0, 0.5);
        let phi = Field::from_real_fn(sp.grid(), |x| 1.0 / (1.0 + x[0] * x[0]).powi(2)).normalized_to(0.5);
        let omega = extract_omega(&sp, &phi).unwrap();
        let r = energy_gradient(&sp, &phi).unwrap().add(&phi.scaled(omega));
        assert!(r.inner(&phi).re.abs() < 1e-10);
    }
}
