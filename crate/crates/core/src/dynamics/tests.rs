use super::*;
use crate::domain::{hs_norm, Grid};
use crate::groundstate::{solve_gradient_flow, FlowOptions, GroundState};
use crate::operators::{Potential, PotentialKind, RadialTable};
use crate::spectral::{certify_indices, default_zero_tol, linearize};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn default_problem() -> (ProblemSpec, GroundState) {
    let g = Grid::new(1, 12.0, 512).unwrap();
    let v = Potential::new(&g, PotentialKind::Power { alpha: 2.0 }).unwrap();
    let spec = ProblemSpec::new(1.0, 3.0, 1.0, v).unwrap();
    let gs = solve_gradient_flow(&spec, None, FlowOptions::default()).unwrap();
    (spec, gs)
}

fn perturbed(spec: &ProblemSpec, gs: &GroundState, delta: f64) -> Field {
    gs.phi.axpy(Complex64::new(delta, 0.0), &stability::perturbation_direction(spec, &gs.phi, 7).unwrap())
}

#[test]
fn soliton_rotates_at_its_frequency() {
    let (spec, gs) = default_problem();
    let u = evolve(&spec, &gs.phi, 1e-3, 1000).unwrap();
    let exact = gs.phi.scaled_complex(Complex64::from_polar(1.0, -gs.omega));
    let err = u.sub(&exact).l2_norm();
    assert!(err <= 1e-6, "{err:e}");
}

#[test]
fn linear_flow_is_a_pure_multiplier() {
    let g = Grid::new(1, 12.0, 128).unwrap();
    let zero = RadialTable::new(vec![0.0, 100.0], vec![0.0, 0.0]).unwrap();
    let spec = ProblemSpec::new(0.6, 2.0, 1.0, Potential::new(&g, PotentialKind::Tabulated(zero)).unwrap()).unwrap();
    let u0 = Field::from_fn(&g, |x| Complex64::new((-x[0] * x[0]).exp(), x[0] * (-x[0] * x[0]).exp()));
    let dt = 0.37;
    let stepper = StrangStepper::with_coupling(&spec, dt, 0.0).unwrap();
    let mut state = EvolutionState::new(&spec, u0.clone(), dt).unwrap();
    stepper.step(&mut state).unwrap();
    stepper.step(&mut state).unwrap();
    assert!((state.t - 2.0 * dt).abs() < 1e-15);
    let before = u0.fft_forward();
    let after = state.u.fft_forward();
    let symbol = g.fractional_symbol(0.6);
    for ((a, b), w) in before.coefficients().iter().zip(after.coefficients()).zip(&symbol) {
        let expected = a * Complex64::from_polar(1.0, 2.0 * dt * w);
        assert!((b - expected).norm() <= 1e-12 * (1.0 + a.norm()));
    }
}

#[test]
fn step_strang_validates_dt() {
    let (spec, gs) = default_problem();
    let mut state = EvolutionState::new(&spec, gs.phi.clone(), 1e-2).unwrap();
    let next = step_strang(&state).unwrap();
    assert!((next.t - 1e-2).abs() < 1e-15);
    state.dt = -1e-2;
    assert!(step_strang(&state).is_err());
    assert!(StrangStepper::new(&spec, 0.0).is_err());
}

#[test]
fn second_order_self_convergence() {
    let (spec, gs) = default_problem();
    let u0 = perturbed(&spec, &gs, 1e-2);
    let run = |dt: f64| evolve(&spec, &u0, dt, (1.0 / dt).round() as usize).unwrap();
    let (a, b, c) = (run(0.02), run(0.01), run(0.005));
    let ratio = a.sub(&b).l2_norm() / b.sub(&c).l2_norm();
    assert!((ratio - 4.0).abs() <= 0.8, "{ratio}");
}

#[test]
fn steps_are_reversible() {
    let (spec, gs) = default_problem();
    let u0 = perturbed(&spec, &gs, 0.05);
    let there = evolve(&spec, &u0, 1e-2, 100).unwrap();
    let back = evolve(&spec, &there, -1e-2, 100).unwrap();
    assert!(back.sub(&u0).l2_norm() <= 1e-10);
}

#[test]
fn conservation_on_soliton_data() {
    let (spec, gs) = default_problem();
    let (_, report) = monitored_run(&spec, &gs.phi, gs.omega, 1e-3, 10_000, 100).unwrap();
    assert!(report.max_power_drift <= 1e-10, "{report:?}");
    assert!(report.max_energy_drift <= 1e-6, "{report:?}");

    let drift = |u0: &Field, dt: f64| {
        let steps = (10.0 / dt).round() as usize;
        monitored_run(&spec, u0, gs.omega, dt, steps, steps / 100).unwrap().1.max_energy_drift
    };
    // second order on generic data
    let u0 = perturbed(&spec, &gs, 1e-2);
    let ratio = drift(&u0, 1e-2) / drift(&u0, 5e-3);
    assert!((ratio - 4.0).abs() <= 0.8, "{ratio}");
    // the total energy is stationary at phi, so soliton data drifts at fourth order
    let ratio = drift(&gs.phi, 1e-2) / drift(&gs.phi, 5e-3);
    assert!((ratio - 16.0).abs() <= 3.2, "{ratio}");
}

#[test]
fn monitor_needs_two_samples() {
    let s = ConservationSample { t: 0.0, total_energy: 1.0, power: 1.0 };
    assert!(conservation_monitor(&[s]).is_err());
    let r = conservation_monitor(&[s, ConservationSample { t: 1.0, total_energy: 1.5, power: 0.9 }]).unwrap();
    assert!((r.max_energy_drift - 0.5).abs() < 1e-15 && (r.max_power_drift - 0.1).abs() < 1e-15);
}

#[test]
fn unperturbed_soliton_persists() {
    let (spec, gs) = default_problem();
    let opts = StabilityOptions { delta: 0.0, t_final: 10.0, ..StabilityOptions::default() };
    let trace = run_stability_experiment(&spec, &gs, opts).unwrap();
    assert_eq!(trace.samples.len(), 101);
    assert!(trace.sup_distance() <= 1e-5, "{:e}", trace.sup_distance());
    // the offset is the splitting error, quadratic in dt
    let fine = run_stability_experiment(&spec, &gs, StabilityOptions { dt: 5e-4, ..opts }).unwrap();
    assert!(fine.sup_distance() <= 1e-6, "{:e}", fine.sup_distance());
}

#[test]
fn perturbed_trace_is_consistent() {
    let (spec, gs) = default_problem();
    let opts = StabilityOptions { delta: 1e-3, t_final: 5.0, seed: 42, ..StabilityOptions::default() };
    let trace = run_stability_experiment(&spec, &gs, opts).unwrap();
    assert!((trace.samples[0].d - 1e-3).abs() <= 1e-10);
    // past |omega t| = pi/2, so the co-rotating frame is what keeps theta small
    assert!(trace.samples.iter().all(|s| s.d >= 0.0 && s.theta.abs() < 0.05));
    assert!(trace.sup_ratio() <= 10.0);
    assert_eq!(trace.modulation_breakdown, None);

    let again = run_stability_experiment(&spec, &gs, opts).unwrap();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    trace.write_csv(&mut a).unwrap();
    again.write_csv(&mut b).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("t,d,theta,mu,eta_norm,zeta_norm,E_drift,P_drift\n"));
    assert_eq!(text.lines().count(), 52);
}

#[test]
fn perturbation_direction_is_normalized_and_in_phase() {
    let (spec, gs) = default_problem();
    let w = stability::perturbation_direction(&spec, &gs.phi, 1).unwrap();
    assert!((hs_norm(&w, 1.0).unwrap() - 1.0).abs() < 1e-12);
    assert!(crate::domain::hs_inner(&w, &gs.phi, 1.0).im.abs() < 1e-12);
    let other = stability::perturbation_direction(&spec, &gs.phi, 2).unwrap();
    assert!(hs_norm(&w.sub(&other), 1.0).unwrap() > 0.5);
}

#[test]
fn coarse_steps_trip_the_drift_limit() {
    let (spec, gs) = default_problem();
    let opts = StabilityOptions { delta: 1e-3, t_final: 20.0, dt: 1.0, ..StabilityOptions::default() };
    assert!(matches!(run_stability_experiment(&spec, &gs, opts), Err(Error::ConservationDrift { .. })));
}

/// `min <A h, h> / <B h, h>` over `h` orthogonal to `phi`, by dense generalized eigensolve.
fn dense_coercivity(op: &crate::operators::OperatorHandle, phi: &[f64]) -> f64 {
    let g = op.grid();
    let n = g.len();
    let column = |m: &[f64]| {
        let mut c = vec![Complex64::new(0.0, 0.0); n];
        c[0] = Complex64::new(1.0, 0.0);
        g.apply_multiplier(&mut c, m);
        c.into_iter().map(|z| z.re).collect::<Vec<f64>>()
    };
    let kin = column(op.symbol());
    let sob = column(&g.sobolev_weight(op.s()));
    let norm2: f64 = phi.iter().map(|x| x * x).sum();
    let proj = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } - phi[i] * phi[j] / norm2);
    let pp = DMatrix::from_fn(n, n, |i, j| phi[i] * phi[j] / norm2);
    let a = DMatrix::from_fn(n, n, |i, j| {
        kin[(i + n - j) % n] + if i == j { op.weights()[i] + op.shift() } else { 0.0 }
    });
    let b = DMatrix::from_fn(n, n, |i, j| sob[(i + n - j) % n]);
    let a = &proj * a * &proj + &pp * 1e6;
    let b = &proj * b * &proj + &pp;
    let l = b.cholesky().unwrap().l();
    let li = l.clone().try_inverse().unwrap();
    let c = &li * a * li.transpose();
    let c = 0.5 * (&c + c.transpose());
    c.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

#[test]
fn coercivity_on_the_default_problem() {
    let (spec, gs) = default_problem();
    let pair = linearize(&spec, &gs).unwrap();
    let report = coercivity_check(&pair, 3, 9).unwrap();
    assert!(report.kappa > 0.0);
    let phi = gs.phi.real_parts();
    let plus = dense_coercivity(&pair.lplus, &phi);
    let minus = dense_coercivity(&pair.lminus, &phi);
    assert!((report.kappa_plus - plus).abs() <= 1e-6 * plus.abs());
    assert!((report.kappa_minus - minus).abs() <= 1e-6 * minus.abs());

    // sampled Rayleigh quotients never fall below the minimum
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = spec.grid();
    let norm2 = gs.phi.l2_norm_squared();
    for _ in 0..100 {
        let raw = Field::from_real_fn(g, |x| rng.random_range(-1.0..1.0) * (-x[0] * x[0] / 6.0).exp());
        let h = raw.axpy(-raw.inner(&gs.phi) / norm2, &gs.phi);
        let hs2 = hs_norm(&h, spec.s()).unwrap().powi(2);
        for op in [&pair.lplus, &pair.lminus] {
            assert!(op.quadratic_form(&h).unwrap() >= report.kappa * hs2 * (1.0 - 1e-6));
        }
    }

    // the spectral gap eigenvector bounds kappa_minus from above
    let (cert, _, minus_spec) = certify_indices(&pair, default_zero_tol(gs.omega)).unwrap();
    let v2 = &minus_spec.eigenfields[1];
    let bound = cert.lminus_gap * v2.l2_norm_squared() / hs_norm(v2, spec.s()).unwrap().powi(2);
    assert!(report.kappa_minus <= bound * (1.0 + 1e-8));
    assert!(report.kappa_minus >= 0.8 * bound);
}
