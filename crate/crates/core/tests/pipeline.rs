use approx::assert_abs_diff_eq;
use fnls::domain::snapshot::{read_field, write_field, PayloadKind};
use fnls::domain::{Field, Grid};
use fnls::dynamics::{orbital_distance, run_stability_experiment, StabilityOptions};
use fnls::groundstate::{solve_fixed_point, solve_gradient_flow, FixedPointOptions, FlowOptions, GroundState, ProblemSpec};
use fnls::operators::{Potential, PotentialKind};
use fnls::spectral::{certify_indices, default_zero_tol, linearize};
use num_complex::Complex64;

fn spec(s: f64, alpha: f64, lambda: f64) -> ProblemSpec {
    let g = Grid::new(1, 12.0, 512).unwrap();
    let v = Potential::new(&g, PotentialKind::Power { alpha }).unwrap();
    ProblemSpec::new(s, 1.0 + 2.0 * s, lambda, v).unwrap()
}

#[test]
fn solve_certify_and_perturb() {
    let sp = spec(1.0, 2.0, 1.0);
    let gs = solve_gradient_flow(&sp, None, FlowOptions::default()).unwrap();
    assert!(gs.check_invariants(GroundState::default_tolerance(1.0)).is_empty());

    let pair = linearize(&sp, &gs).unwrap();
    let (cert, _, _) = certify_indices(&pair, default_zero_tol(gs.omega)).unwrap();
    assert!(cert.non_degenerate());
    assert_eq!(cert.n_plus, 1);

    let opts = StabilityOptions { delta: 3e-3, t_final: 3.0, ..StabilityOptions::default() };
    let trace = run_stability_experiment(&sp, &gs, opts).unwrap();
    assert_abs_diff_eq!(trace.samples[0].d, 3e-3, epsilon = 1e-10);
    assert!(trace.sup_distance() <= 3e-2);
    assert!(trace.max_power_drift() <= 1e-10);
}

#[test]
fn solvers_agree_on_a_fractional_quartic_trap() {
    let sp = spec(0.75, 4.0, 0.25);
    let flow = solve_gradient_flow(&sp, None, FlowOptions::default()).unwrap();
    let fixed = solve_fixed_point(&sp, Some(&flow.phi), FixedPointOptions::default()).unwrap();
    assert!(flow.phi.sub(&fixed.phi).l2_norm() <= 1e-6);
    assert_abs_diff_eq!(flow.omega, fixed.omega, epsilon = 1e-6);
    assert_abs_diff_eq!(flow.phi.l2_norm_squared(), 0.25, epsilon = 1e-10);
}

#[test]
fn snapshot_round_trip_preserves_distance() {
    let sp = spec(1.0, 2.0, 1.0);
    let gs = solve_gradient_flow(&sp, None, FlowOptions::default()).unwrap();
    let rotated = gs.phi.scaled_complex(Complex64::from_polar(1.0, 0.7));
    let mut bytes = Vec::new();
    write_field(&mut bytes, &rotated, PayloadKind::Complex).unwrap();
    let (back, kind): (Field, _) = read_field(bytes.as_slice()).unwrap();
    assert_eq!(kind, PayloadKind::Complex);
    assert_eq!(back.values(), rotated.values());
    let d = orbital_distance(&back, &gs.phi, 1.0).unwrap();
    assert!(d.d <= 1e-12);
    assert_abs_diff_eq!(d.theta, 0.7, epsilon = 1e-12);
}
