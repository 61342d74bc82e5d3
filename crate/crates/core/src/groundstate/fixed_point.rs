//! Picard iteration `phi <- ((-Delta)^s + V + omega + N)^{-1} [phi^p + N phi]`.

use num_complex::Complex64;

use super::{el_residual, extract_omega, GroundState, ProblemSpec, SolverKind};
use crate::domain::{functionals, power_nonlinearity, Field};
use crate::error::{Error, Result};
use crate::operators::{solve_shifted, MAX_CG_ITERATIONS};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedPointOptions {
    /// Initial shift `N`; doubled when divergence is detected.
    pub shift: f64,
    pub max_shift: f64,
    /// Euler-Lagrange tolerance; `None` means `1e-8 sqrt(lambda)`.
    pub tol: Option<f64>,
    pub max_iter: usize,
    /// Relative tolerance of each inner resolvent solve.
    pub inner_tol: f64,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self { shift: 50.0, max_shift: 1e4, tol: None, max_iter: 20_000, inner_tol: 1e-13 }
    }
}

/// Window and growth factor of the divergence detector.
const WINDOW: usize = 50;
const GROWTH: f64 = 10.0;

pub fn solve_fixed_point(spec: &ProblemSpec, init: Option<&Field>, options: FixedPointOptions) -> Result<GroundState> {
    if !(options.shift > 0.0) {
        return Err(Error::InvalidParameter(format!("fixed-point shift must be positive, got {}", options.shift)));
    }
    let lambda = spec.lambda();
    let start = match init {
        Some(f) if f.grid() != spec.grid() => return Err(Error::GridMismatch),
        Some(f) => f.normalized_to(lambda),
        None => spec.gaussian_guess(),
    };
    let tol = options.tol.unwrap_or_else(|| GroundState::default_tolerance(lambda));
    let base = spec.hamiltonian(0.0);
    let mut shift = options.shift;
    let mut phi = start.clone();
    let mut omega = extract_omega(spec, &phi)?;
    let mut residual = el_residual(spec, &phi, omega)?;
    let mut history = vec![residual];
    let mut iterations = 0;

    while residual > tol {
        if iterations >= options.max_iter {
            return Err(Error::NotConverged { what: "fixed-point iteration", iterations, residual });
        }
        iterations += 1;
        let rhs = phi.map(|c| power_nonlinearity(c, spec.p())).axpy(Complex64::new(shift, 0.0), &phi);
        let resolvent = base.with_shift(omega + shift);
        let warm = phi.scaled(1.0);
        let solved = solve_shifted(&resolvent, &rhs, Some(&warm), options.inner_tol, MAX_CG_ITERATIONS)?;
        phi = solved.solution.map(|c| Complex64::new(c.re, 0.0)).normalized_to(lambda);
        omega = extract_omega(spec, &phi)?;
        residual = el_residual(spec, &phi, omega)?;
        history.push(residual);

        let k = history.len();
        let diverging = !residual.is_finite()
            || (k > WINDOW && residual > GROWTH * history[k - 1 - WINDOW]);
        if diverging {
            shift *= 2.0;
            if shift > options.max_shift {
                return Err(Error::Diverged { shift });
            }
            phi = start.clone();
            omega = extract_omega(spec, &phi)?;
            residual = el_residual(spec, &phi, omega)?;
            history = vec![residual];
        }
    }
    let energy = functionals(&phi, spec.potential(), spec.s(), spec.p())?.energy;
    Ok(GroundState {
        phi,
        omega,
        lambda,
        energy,
        el_residual: residual,
        iterations,
        solver: SolverKind::FixedPoint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Grid;
    use crate::groundstate::{solve_gradient_flow, FlowOptions};
    use crate::operators::{Potential, PotentialKind};

    fn harmonic_spec() -> ProblemSpec {
        let g = Grid::new(1, 12.0, 512).unwrap();
        ProblemSpec::new(1.0, 3.0, 1.0, Potential::new(&g, PotentialKind::Power { alpha: 2.0 }).unwrap()).unwrap()
    }

    #[test]
    fn agrees_with_gradient_flow() {
        let sp = harmonic_spec();
        let flow = solve_gradient_flow(&sp, None, FlowOptions::default()).unwrap();
        let fixed = solve_fixed_point(&sp, None, FixedPointOptions::default()).unwrap();
        assert!(fixed.phi.sub(&flow.phi).l2_norm() <= 1e-6);
        assert!(fixed.check_invariants(GroundState::default_tolerance(1.0)).is_empty());
        let min = fixed.phi.real_parts().into_iter().fold(f64::INFINITY, f64::min);
        assert!(min >= -1e-10 * fixed.phi.max_modulus());

        let warm = solve_fixed_point(&sp, Some(&flow.phi), FixedPointOptions::default()).unwrap();
        assert!(warm.iterations <= 5, "{}", warm.iterations);
    }

    #[test]
    fn nonpositive_shift_rejected() {
        let opts = FixedPointOptions { shift: 0.0, ..FixedPointOptions::default() };
        assert!(solve_fixed_point(&harmonic_spec(), None, opts).is_err());
    }
}
