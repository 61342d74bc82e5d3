//! The verification table: every check over the configured sweep.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use fnls::domain::rearrange::rearrange_samples;
use fnls::domain::{functionals, hs_norm, kinetic_energy, Field, Grid};
use fnls::dynamics::{coercivity_check, monitored_run, perturbation_direction, run_stability_experiment, StabilityOptions};
use fnls::groundstate::{check_omega_lower_bound, energy_gradient, GroundState, ProblemSpec, SolverKind};
use fnls::operators::{OperatorHandle, Potential, PotentialKind, PotentialSpec};
use fnls::spectral::{
    certify_indices, check_sector_relation, default_zero_tol, eigen_lowest, linearize, sturm_second_radial,
    truncated_potential_convergence, OperatorTag, Sector,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::commands::{solve, Context};
use crate::config::RunConfig;
use crate::output::write_json;
use crate::tolerances as tol;
use crate::Failure;

/// One line of the table. `cell` names the parameter point, empty for global rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub id: String,
    pub cell: String,
    pub passed: bool,
    pub measured: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl Row {
    fn new(id: &str, cell: &str) -> Self {
        Self { id: id.into(), cell: cell.into(), passed: true, measured: BTreeMap::new(), note: String::new() }
    }

    fn with(mut self, name: &str, value: f64) -> Self {
        self.measured.insert(name.into(), value);
        self
    }

    fn pass(mut self, ok: bool) -> Self {
        self.passed = self.passed && ok;
        self
    }

    fn error(id: &str, cell: &str, e: impl std::fmt::Display) -> Self {
        Self { note: e.to_string(), passed: false, ..Self::new(id, cell) }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.measured.get(name).copied()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub rows: Vec<Row>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn rows_with_id<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a Row> + 'a {
        self.rows.iter().filter(move |r| r.id == id)
    }

    /// Plain-text table, one row per line.
    pub fn table(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let values: Vec<String> = r.measured.iter().map(|(k, v)| format!("{k}={v:.3e}")).collect();
            let _ = writeln!(
                out,
                "{:<34} {:<4} {:<30} {}{}",
                r.id,
                if r.passed { "pass" } else { "FAIL" },
                r.cell,
                values.join(" "),
                if r.note.is_empty() { String::new() } else { format!(" ({})", r.note) }
            );
        }
        out
    }
}

/// One point of the ground-state sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub s: f64,
    pub p: f64,
    pub lambda: f64,
    pub potential: PotentialSpec,
}

impl Cell {
    pub fn label(&self) -> String {
        format!("s={} V={} lambda={}", self.s, self.potential.label(), self.lambda)
    }
}

pub fn sweep_cells(cfg: &RunConfig) -> Vec<Cell> {
    let mut cells = Vec::new();
    for &s in &cfg.sweep_s {
        for v in &cfg.sweep_potentials {
            for &lambda in &cfg.sweep_lambda {
                cells.push(Cell { s, p: 1.0 + 2.0 * s / cfg.n as f64, lambda, potential: v.clone() });
            }
        }
    }
    cells
}

fn groundstate_row(id: &str, cell: &str, gs: &GroundState) -> Row {
    let bound = GroundState::default_tolerance(gs.lambda);
    let failures = gs.check_invariants(bound);
    let mut row = Row::new(id, cell)
        .with("el_residual", gs.el_residual)
        .with("el_bound", bound)
        .with("omega", gs.omega)
        .with("iterations", gs.iterations as f64)
        .pass(failures.is_empty());
    for f in failures {
        row = row.with(f.name, f.measured);
    }
    row
}

/// Rows derived from one ground-state profile. The power constraint is checked
/// on the profile as given; everything else uses it rescaled to `lambda`, so a
/// corrupted normalization fails only its own row.
pub fn profile_rows(spec: &ProblemSpec, cell: &str, phi: &Field, zero_tol: Option<f64>) -> Vec<Row> {
    let lambda = spec.lambda();
    let constraint = ((phi.l2_norm_squared() - lambda) / lambda).abs();
    let mut rows =
        vec![Row::new("groundstate.constraint", cell).with("relative_error", constraint).pass(constraint <= tol::CONSTRAINT)];
    match spectral_rows(spec, cell, &phi.normalized_to(lambda), zero_tol) {
        Ok(more) => rows.extend(more),
        Err(e) => rows.push(Row::error("spectral", cell, e)),
    }
    rows
}

fn spectral_rows(spec: &ProblemSpec, cell: &str, phi: &Field, zero_tol: Option<f64>) -> fnls::Result<Vec<Row>> {
    let gs = GroundState::from_profile(spec, phi.clone(), 0, SolverKind::GradientFlow)?;
    let mut rows = Vec::new();
    let h = eigen_lowest(&spec.hamiltonian(0.0), OperatorTag::H, 1, Sector::Full, 0.0)?;
    let b = check_omega_lower_bound(&gs, &h, spec.p())?;
    rows.push(
        Row::new("multiplier.lower_bound", cell)
            .with("omega_plus_sigma0", b.omega_plus_sigma0)
            .with("ratio", b.ratio)
            .with("agreement", b.agreement)
            .pass(b.omega_plus_sigma0 > 0.0 && b.agreement <= tol::OMEGA_AGREEMENT * (1.0 + gs.omega.abs())),
    );
    let pair = linearize(spec, &gs)?;
    let z = zero_tol.unwrap_or_else(|| default_zero_tol(gs.omega));
    let (c, _, _) = certify_indices(&pair, z)?;
    rows.push(
        Row::new("lplus.morse_index", cell)
            .with("n_plus", c.n_plus as f64)
            .with("ker_plus_dim", c.ker_plus_dim as f64)
            .with("zero_tol", c.zero_tol)
            .pass(c.n_plus == 1 && c.ker_plus_dim == 0),
    );
    rows.push(
        Row::new("lminus.kernel", cell)
            .with("lminus_min", c.lminus_min)
            .with("alignment", c.lminus_alignment)
            .pass(c.lminus_min.abs() <= tol::LMINUS_ZERO && c.lminus_alignment >= 1.0 - tol::LMINUS_ALIGNMENT),
    );
    rows.push(Row::new("lminus.gap", cell).with("lminus_gap", c.lminus_gap).pass(c.lminus_gap > 0.0));
    if spec.dim() == 1 {
        let st = sturm_second_radial(&pair)?;
        rows.push(
            Row::new("lplus.sturm_second_radial", cell)
                .with("e0", st.e0)
                .with("e1", st.e1)
                .with("sign_changes", st.sign_changes_e1 as f64)
                .pass(st.holds()),
        );
        if spec.potential().gradient_x1().is_ok() {
            let r = check_sector_relation(spec, &pair)?;
            rows.push(Row::new("lplus.sector_identity", cell).with("residual", r).pass(r <= tol::SECTOR_IDENTITY));
        }
        let odd = eigen_lowest(&pair.lplus, OperatorTag::Lplus, 1, Sector::Odd, 0.0)?;
        rows.push(Row::new("lplus.odd_positive", cell).with("odd_min", odd.eigenvalues[0]).pass(odd.eigenvalues[0] > 0.0));
    }
    Ok(rows)
}

fn cell_rows(cfg: &RunConfig, cell: &Cell) -> Vec<Row> {
    let label = cell.label();
    let spec = match cfg.grid().and_then(|g| cfg.problem_with(cell.s, cell.p, cell.lambda, &cell.potential, &g, None)) {
        Ok(s) => s,
        Err(e) => return vec![Row::error("groundstate.setup", &label, e)],
    };
    let flow = solve(cfg, &spec, SolverKind::GradientFlow);
    let fixed = solve(cfg, &spec, SolverKind::FixedPoint);
    let mut rows = Vec::new();
    for (id, r) in [("groundstate.gradient_flow", &flow), ("groundstate.fixed_point", &fixed)] {
        rows.push(match r {
            Ok(gs) => groundstate_row(id, &label, gs),
            Err(e) => Row::error(id, &label, e),
        });
    }
    match (&flow, &fixed) {
        (Ok(a), Ok(b)) => {
            let d = a.phi.sub(&b.phi).l2_norm();
            rows.push(Row::new("groundstate.cross_solver", &label).with("l2_distance", d).pass(d <= tol::CROSS_SOLVER));
        }
        _ => rows.push(Row::error("groundstate.cross_solver", &label, "a solver failed")),
    }
    if let Ok(gs) = &flow {
        rows.extend(profile_rows(&spec, &label, &gs.phi, cfg.zero_tol));
    }
    rows
}

fn oscillator_rows(cfg: &RunConfig) -> fnls::Result<Vec<Row>> {
    let g = Grid::new(1, cfg.half_width, cfg.points)?;
    let v = Potential::new(&g, PotentialKind::Power { alpha: 2.0 })?;
    let h = OperatorHandle::new(1.0, &v, 0.0)?;
    let r = eigen_lowest(&h, OperatorTag::H, 1, Sector::Full, 0.0)?;
    let exact = Field::from_real_fn(&g, |x| (-0.5 * x[0] * x[0]).exp());
    let cos = r.eigenfields[0].inner(&exact).re.abs() / (r.eigenfields[0].l2_norm() * exact.l2_norm());
    let err = (r.eigenvalues[0] - 1.0).abs();
    Ok(vec![Row::new("spectrum.oscillator_ground", "s=1 V=|x|^2")
        .with("sigma0", r.eigenvalues[0])
        .with("cosine_gap", 1.0 - cos)
        .pass(err <= tol::OSCILLATOR_LEVEL && 1.0 - cos <= tol::OSCILLATOR_SHAPE)])
}

fn default_problem(cfg: &RunConfig) -> Result<(ProblemSpec, GroundState), Failure> {
    let spec = cfg.problem(None)?;
    let gs = solve(cfg, &spec, SolverKind::GradientFlow)?;
    Ok((spec, gs))
}

fn truncation_rows(cfg: &RunConfig) -> Result<Vec<Row>, Failure> {
    let spec = cfg.problem(None)?;
    let t = truncated_potential_convergence(spec.s(), spec.potential(), 0.0, &cfg.radii).map_err(Failure::Solver)?;
    let last = t.rows.last().map(|r| (r.e0 - t.untruncated.e0).abs()).unwrap_or(f64::INFINITY);
    let mut row = Row::new("truncation.monotone", "default")
        .with("last_gap", last)
        .pass(t.nondecreasing && t.bounded && last <= tol::TRUNCATION);
    for r in &t.rows {
        row = row.with(&format!("e0_r{}", r.radius), r.e0);
    }
    Ok(vec![row.with("e0_untruncated", t.untruncated.e0)])
}

fn bumps(g: &Grid, rng: &mut ChaCha8Rng) -> Field {
    let params: Vec<(f64, [f64; 2], f64)> = (0..3)
        .map(|_| {
            let c = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            (rng.random_range(0.2..1.5), c, rng.random_range(0.5..2.0))
        })
        .collect();
    Field::from_real_fn(g, |x| {
        params
            .iter()
            .map(|(a, c, w)| a * (-(0..g.dim()).map(|k| (x[k] - c[k]).powi(2)).sum::<f64>() / (w * w)).exp())
            .sum()
    })
}

fn rearrangement_rows(seed: u64) -> fnls::Result<Vec<Row>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7265_6172);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let g = Grid::new(1, 6.0, 128)?;
    let v: Vec<f64> = g.radii().iter().map(|r| r * r).collect();
    let (mut hl, mut pot) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for _ in 0..100 {
        let f: Vec<f64> = (0..g.len()).map(|_| rng.random_range(0.0..1.0)).collect();
        let h: Vec<f64> = (0..g.len()).map(|_| rng.random_range(0.0..1.0)).collect();
        let (fs, hs) = (rearrange_samples(&g, &f), rearrange_samples(&g, &h));
        let lhs = dot(&f, &h);
        hl = hl.max((lhs - dot(&fs, &hs)) / lhs);
        let sq = |a: &[f64]| a.iter().map(|x| x * x).collect::<Vec<f64>>();
        let (vf, vs) = (dot(&v, &sq(&f)), dot(&v, &sq(&fs)));
        pot = pot.max((vs - vf) / vf);
    }
    let mut ps: f64 = 0.0;
    for (dim, n) in [(1, 256), (2, 64)] {
        let g = Grid::new(dim, 8.0, n)?;
        for _ in 0..10 {
            let f = bumps(&g, &mut rng);
            let star = fnls::domain::rearrange_decreasing(&f)?;
            for s in [0.5, 1.0] {
                ps = ps.max(kinetic_energy(&star, s) / kinetic_energy(&f, s) - 1.0);
            }
        }
    }
    Ok(vec![
        Row::new("rearrangement.hardy_littlewood", "100 fields").with("max_excess", hl).pass(hl <= tol::REARRANGEMENT_ROUNDOFF),
        Row::new("rearrangement.potential", "100 fields").with("max_excess", pot).pass(pot <= tol::REARRANGEMENT_ROUNDOFF),
        Row::new("rearrangement.polya_szego", "20 fields").with("max_excess", ps).pass(ps <= tol::POLYA_SZEGO_SLACK),
    ])
}

fn gradient_rows(cfg: &RunConfig) -> Result<Vec<Row>, Failure> {
    let spec = cfg.problem(None)?;
    let g = spec.grid().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6772_6164);
    let e = |u: &Field| functionals(u, spec.potential(), spec.s(), spec.p()).map(|f| f.energy);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let f = bumps(&g, &mut rng);
        let h = bumps(&g, &mut rng).map(|c| c * Complex64::new(1.0, 0.0));
        let eps = 1e-5;
        let fd = (e(&f.axpy(eps.into(), &h)).map_err(Failure::Solver)?
            - e(&f.axpy((-eps).into(), &h)).map_err(Failure::Solver)?)
            / (2.0 * eps);
        let exact = energy_gradient(&spec, &f).map_err(Failure::Solver)?.inner(&h).re;
        worst = worst.max((fd - exact).abs() / exact.abs());
    }
    Ok(vec![Row::new("gradient.finite_difference", "default").with("max_relative_error", worst).pass(worst <= tol::GRADIENT_FD)])
}

fn conservation_rows(cfg: &RunConfig) -> Result<Vec<Row>, Failure> {
    let (spec, gs) = default_problem(cfg)?;
    let run = |u0: &Field, dt: f64| {
        let steps = (10.0 / dt).round() as usize;
        monitored_run(&spec, u0, gs.omega, dt, steps, (steps / 100).max(1)).map(|r| r.1).map_err(Failure::Solver)
    };
    let base = run(&gs.phi, 1e-3)?;
    let w = perturbation_direction(&spec, &gs.phi, cfg.seed).map_err(Failure::Solver)?;
    let perturbed = gs.phi.axpy(Complex64::new(1e-2, 0.0), &w);
    let ratio = run(&perturbed, 1e-2)?.max_energy_drift / run(&perturbed, 5e-3)?.max_energy_drift;
    let soliton_ratio = run(&gs.phi, 1e-2)?.max_energy_drift / run(&gs.phi, 5e-3)?.max_energy_drift;
    Ok(vec![
        Row::new("dynamics.conservation", "default T=10 dt=1e-3")
            .with("power_drift", base.max_power_drift)
            .with("energy_drift", base.max_energy_drift)
            .pass(base.max_power_drift <= tol::POWER_DRIFT && base.max_energy_drift <= tol::ENERGY_DRIFT),
        Row::new("dynamics.energy_order", "default delta=1e-2 dt=1e-2/5e-3")
            .with("ratio", ratio)
            .with("soliton_ratio", soliton_ratio)
            .pass((ratio - tol::ORDER_RATIO).abs() <= tol::ORDER_RATIO_SPREAD * tol::ORDER_RATIO),
    ])
}

fn stability_rows(cfg: &RunConfig) -> Result<Vec<Row>, Failure> {
    let (spec, gs) = default_problem(cfg)?;
    let mut rows = Vec::new();
    let persistence = StabilityOptions { delta: 0.0, t_final: 10.0, dt: cfg.dt, seed: cfg.seed, ..StabilityOptions::default() };
    let mut record = |id: &str, cell: String, opts: StabilityOptions, bound: f64| -> Option<f64> {
        match run_stability_experiment(&spec, &gs, opts) {
            Ok(t) => {
                let sup = t.sup_distance();
                rows.push(
                    Row::new(id, &cell)
                        .with("sup_distance", sup)
                        .with("energy_drift", t.max_energy_drift())
                        .with("power_drift", t.max_power_drift())
                        .pass(sup <= bound),
                );
                Some(sup)
            }
            Err(e) => {
                rows.push(Row::error(id, &cell, e));
                None
            }
        }
    };
    record("dynamics.persistence", "default delta=0 T=10".into(), persistence, tol::PERSISTENCE);
    let mut ratios = Vec::new();
    for &delta in &cfg.sweep_deltas {
        let opts = StabilityOptions { delta, t_final: cfg.sweep_t, dt: cfg.dt, seed: cfg.seed, ..StabilityOptions::default() };
        let cell = format!("default delta={delta} T={}", cfg.sweep_t);
        if let Some(sup) = record("dynamics.orbital_stability", cell, opts, tol::STABILITY_ENVELOPE * delta) {
            ratios.push(sup / delta);
        }
    }
    if ratios.len() == cfg.sweep_deltas.len() && !ratios.is_empty() {
        let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        rows.push(Row::new("dynamics.linear_scaling", "default").with("ratio_spread", hi / lo).pass(hi / lo <= tol::LINEAR_SCALING));
    } else {
        rows.push(Row::error("dynamics.linear_scaling", "default", "a stability run failed"));
    }
    Ok(rows)
}

fn coercivity_rows(cfg: &RunConfig) -> Result<Vec<Row>, Failure> {
    let (spec, gs) = default_problem(cfg)?;
    let pair = linearize(&spec, &gs).map_err(Failure::Solver)?;
    let report = coercivity_check(&pair, 3, cfg.seed).map_err(Failure::Solver)?;
    let z = cfg.zero_tol.unwrap_or_else(|| default_zero_tol(gs.omega));
    let (c, _, minus) = certify_indices(&pair, z).map_err(Failure::Solver)?;
    let v2 = &minus.eigenfields[1];
    let rayleigh = c.lminus_gap * v2.l2_norm_squared() / hs_norm(v2, spec.s()).map_err(Failure::Solver)?.powi(2);
    let consistency = report.kappa_minus / rayleigh;
    Ok(vec![Row::new("dynamics.coercivity", "default")
        .with("kappa_plus", report.kappa_plus)
        .with("kappa_minus", report.kappa_minus)
        .with("gap_rayleigh", rayleigh)
        .with("consistency", consistency)
        .pass(report.kappa > 0.0 && consistency <= 1.0 + 1e-8 && consistency >= 1.0 - tol::COERCIVITY_CONSISTENCY)])
}

fn smoke_2d_rows(cfg: &RunConfig) -> Result<Vec<Row>, Failure> {
    let g = Grid::new(2, 8.0, 128).map_err(Failure::Solver)?;
    let spec = cfg.problem_with(1.0, 2.0, 1.0, &PotentialSpec::Power { alpha: 2.0 }, &g, None)?;
    let gs = solve(cfg, &spec, SolverKind::GradientFlow)?;
    let cell = "2D N=128 s=1 p=2 V=|x|^2 lambda=1";
    let mut rows = vec![groundstate_row("groundstate.smoke_2d", cell, &gs)];
    let opts = StabilityOptions { delta: 1e-3, t_final: 1.0, dt: cfg.dt, seed: cfg.seed, ..StabilityOptions::default() };
    rows.push(match run_stability_experiment(&spec, &gs, opts) {
        Ok(t) => Row::new("dynamics.smoke_2d", cell)
            .with("sup_distance", t.sup_distance())
            .with("energy_drift", t.max_energy_drift())
            .with("power_drift", t.max_power_drift())
            .pass(t.sup_distance() <= tol::STABILITY_ENVELOPE * 1e-3 && t.max_power_drift() <= tol::POWER_DRIFT),
        Err(e) => Row::error("dynamics.smoke_2d", cell, e),
    });
    Ok(rows)
}

enum Job {
    Oscillator,
    Cell(Cell),
    Truncation,
    Rearrangement,
    Gradient,
    Conservation,
    Stability,
    Coercivity,
    Smoke2d,
}

impl Job {
    fn id(&self) -> &'static str {
        match self {
            Job::Oscillator => "spectrum.oscillator_ground",
            Job::Cell(_) => "groundstate",
            Job::Truncation => "truncation.monotone",
            Job::Rearrangement => "rearrangement",
            Job::Gradient => "gradient.finite_difference",
            Job::Conservation => "dynamics.conservation",
            Job::Stability => "dynamics.orbital_stability",
            Job::Coercivity => "dynamics.coercivity",
            Job::Smoke2d => "groundstate.smoke_2d",
        }
    }

    fn run(&self, cfg: &RunConfig) -> Vec<Row> {
        let result = match self {
            Job::Oscillator => oscillator_rows(cfg).map_err(Failure::Solver),
            Job::Cell(c) => Ok(cell_rows(cfg, c)),
            Job::Truncation => truncation_rows(cfg),
            Job::Rearrangement => rearrangement_rows(cfg.seed).map_err(Failure::Solver),
            Job::Gradient => gradient_rows(cfg),
            Job::Conservation => conservation_rows(cfg),
            Job::Stability => stability_rows(cfg),
            Job::Coercivity => coercivity_rows(cfg),
            Job::Smoke2d => smoke_2d_rows(cfg),
        };
        result.unwrap_or_else(|e| vec![Row::error(self.id(), "", e)])
    }
}

/// Run every check; cells execute in parallel on the current rayon pool, rows
/// come back in a fixed order.
pub fn run(cfg: &RunConfig) -> VerifyReport {
    let mut jobs = vec![Job::Oscillator];
    jobs.extend(sweep_cells(cfg).into_iter().map(Job::Cell));
    jobs.extend([Job::Truncation, Job::Rearrangement, Job::Gradient]);
    if !cfg.sweep_deltas.is_empty() {
        jobs.extend([Job::Conservation, Job::Stability, Job::Coercivity]);
    }
    if cfg.smoke_2d {
        jobs.push(Job::Smoke2d);
    }
    let rows: Vec<Row> = jobs.par_iter().map(|j| j.run(cfg)).collect::<Vec<_>>().into_iter().flatten().collect();
    let passed = rows.iter().all(|r| r.passed);
    VerifyReport { seed: cfg.seed, rows, passed }
}

pub fn verify(ctx: &Context) -> Result<VerifyReport, Failure> {
    let report = run(&ctx.config);
    write_json(&ctx.out.join("verify.json"), &report)?;
    crate::output::write_atomic(&ctx.out.join("verify.txt"), report.table().as_bytes())?;
    if report.passed {
        Ok(report)
    } else {
        Err(Failure::Check(report.rows.iter().filter(|r| !r.passed).map(|r| format!("{} [{}]", r.id, r.cell)).collect()))
    }
}
