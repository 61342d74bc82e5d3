//! Normalized gradient flow with a semi-implicit kinetic step.

use num_complex::Complex64;

use super::{GroundState, ProblemSpec, SolverKind};
use crate::domain::{functionals, power_nonlinearity, Field};
use crate::error::{Error, Result};
use crate::operators::OperatorHandle;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowOptions {
    /// Requested step; capped at `1.5 / max(V + omega)` for the explicit part.
    pub tau: f64,
    /// Euler-Lagrange tolerance; `None` means `1e-8 sqrt(lambda)`.
    pub tol: Option<f64>,
    pub max_iter: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self { tau: 1e-2, tol: None, max_iter: 2_000_000 }
    }
}

struct Point {
    f: Field,
    energy: f64,
    omega: f64,
    residual: Field,
    residual_norm: f64,
}

fn evaluate(spec: &ProblemSpec, h: &OperatorHandle, f: Field) -> Result<Point> {
    let hf = h.apply(&f)?;
    let nl = f.map(|c| power_nonlinearity(c, spec.p()));
    let quad = hf.inner(&f).re;
    let nonlinear = nl.inner(&f).re;
    let energy = 0.5 * quad - nonlinear / (spec.p() + 1.0);
    let omega = -(quad - nonlinear) / spec.lambda();
    let residual = hf.sub(&nl).axpy(Complex64::new(omega, 0.0), &f);
    let residual_norm = residual.l2_norm();
    Ok(Point { f, energy, omega, residual, residual_norm })
}

/// Minimize `E` on `||u||^2 = lambda` by
/// `f <- normalize(f - tau (1 + tau |k|^(2s))^{-1} (E'[f] + omega f))`,
/// halving `tau` whenever the energy would increase.
pub fn solve_gradient_flow(spec: &ProblemSpec, init: Option<&Field>, options: FlowOptions) -> Result<GroundState> {
    if !(options.tau > 0.0) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {}", options.tau)));
    }
    let start = match init {
        Some(f) => {
            if f.grid() != spec.grid() {
                return Err(Error::GridMismatch);
            }
            f.clone()
        }
        None => spec.gaussian_guess(),
    };
    if !(start.l2_norm() > 0.0) {
        return Err(Error::InvalidParameter("initial field has zero norm".into()));
    }
    let tol = options.tol.unwrap_or_else(|| GroundState::default_tolerance(spec.lambda()));
    let lambda = spec.lambda();
    let h = spec.hamiltonian(0.0);
    let symbol = h.symbol().to_vec();

    let mut point = evaluate(spec, &h, start.normalized_to(lambda))?;
    let stiffness = spec.potential().max() + point.omega.abs();
    let tau_cap = options.tau.min(1.5 / stiffness.max(1e-12));
    let mut tau = tau_cap;
    let mut multiplier: Vec<f64> = symbol.iter().map(|k| 1.0 / (1.0 + tau * k)).collect();
    let mut iterations = 0;

    while point.residual_norm > tol {
        if iterations >= options.max_iter {
            return Err(Error::NotConverged {
                what: "gradient flow",
                iterations,
                residual: point.residual_norm,
            });
        }
        iterations += 1;
        loop {
            let direction = point.residual.apply_multiplier(&multiplier);
            let trial = point.f.axpy(Complex64::new(-tau, 0.0), &direction).normalized_to(lambda);
            let next = evaluate(spec, &h, trial)?;
            let slack = 1e-12 * point.energy.abs().max(1.0);
            if next.energy <= point.energy + slack {
                point = next;
                break;
            }
            tau *= 0.5;
            if tau < 1e-14 * tau_cap {
                return Err(Error::EnergyIncrease { before: point.energy, after: next.energy });
            }
            multiplier = symbol.iter().map(|k| 1.0 / (1.0 + tau * k)).collect();
        }
        if tau < tau_cap {
            tau = (tau * 1.25).min(tau_cap);
            multiplier = symbol.iter().map(|k| 1.0 / (1.0 + tau * k)).collect();
        }
    }
    let energy = functionals(&point.f, spec.potential(), spec.s(), spec.p())?.energy;
    Ok(GroundState {
        omega: point.omega,
        lambda,
        energy,
        el_residual: point.residual_norm,
        iterations,
        solver: SolverKind::GradientFlow,
        phi: real_part(point.f),
    })
}

fn real_part(f: Field) -> Field {
    f.map(|c| Complex64::new(c.re, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Grid;
    use crate::operators::{Potential, PotentialKind};

    fn harmonic_spec(lambda: f64) -> ProblemSpec {
        let g = Grid::new(1, 12.0, 512).unwrap();
        ProblemSpec::new(1.0, 3.0, lambda, Potential::new(&g, PotentialKind::Power { alpha: 2.0 }).unwrap()).unwrap()
    }

    #[test]
    fn small_power_collapses_onto_oscillator_ground_state() {
        let sp = harmonic_spec(1e-4);
        let gs = solve_gradient_flow(&sp, None, FlowOptions::default()).unwrap();
        assert!(gs.omega > -1.0 && gs.omega < -1.0 + 1e-2, "{}", gs.omega);
        let psi0 = Field::from_real_fn(sp.grid(), |x| (-0.5 * x[0] * x[0]).exp());
        let cos = gs.phi.inner(&psi0).re / (gs.phi.l2_norm() * psi0.l2_norm());
        assert!(cos >= 1.0 - 1e-3);
        assert!(gs.check_invariants(GroundState::default_tolerance(1e-4)).is_empty());
    }

    #[test]
    fn translated_start_is_recentred() {
        let sp = harmonic_spec(1.0);
        let init = Field::from_real_fn(sp.grid(), |x| (-(x[0] - 2.0).powi(2)).exp());
        let gs = solve_gradient_flow(&sp, Some(&init), FlowOptions::default()).unwrap();
        assert!(gs.check_invariants(GroundState::default_tolerance(1.0)).is_empty());
        let v = gs.phi.real_parts();
        let peak = (0..v.len()).max_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap()).unwrap();
        assert_eq!(peak, sp.grid().origin());
    }

    #[test]
    fn rejects_bad_input() {
        let sp = harmonic_spec(1.0);
        let opts = FlowOptions { tau: 0.0, ..FlowOptions::default() };
        assert!(solve_gradient_flow(&sp, None, opts).is_err());
        let zero = Field::zeros(sp.grid());
        assert!(solve_gradient_flow(&sp, Some(&zero), FlowOptions::default()).is_err());
        let capped = FlowOptions { max_iter: 3, ..FlowOptions::default() };
        assert!(matches!(solve_gradient_flow(&sp, None, capped), Err(Error::NotConverged { .. })));
    }
}
