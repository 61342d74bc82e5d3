//! Single-run subcommands: groundstate, spectrum, evolve, stability.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use fnls::domain::snapshot::{self, PayloadKind};
use fnls::domain::Field;
use fnls::dynamics::{
    perturbation_direction, run_stability_experiment, ConservationReport, ConservationSample, StabilityOptions,
    StrangStepper, DRIFT_LIMIT,
};
use fnls::groundstate::{
    check_omega_lower_bound, solve_fixed_point, solve_gradient_flow, GroundState, GroundStateReport, OmegaBound,
    ProblemSpec, SolverKind,
};
use fnls::spectral::{
    certify_from_spectra, check_sector_relation, default_zero_tol, eigen_lowest, linearize,
    sturm_second_radial, truncated_potential_convergence, IndexCertificate, OperatorTag, PairResiduals, Sector,
    SpectrumReport, SturmReport, TruncationTable,
};
use num_complex::Complex64;
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{write_atomic, write_json, write_snapshot};
use crate::tolerances as tol;
use crate::Failure;

pub const GROUNDSTATE_SNAPSHOT: &str = "groundstate.fnls";

/// Everything a subcommand needs besides its own flags.
#[derive(Clone, Debug)]
pub struct Context {
    pub config: RunConfig,
    /// Directory against which relative paths in the config are resolved.
    pub base: Option<PathBuf>,
    pub out: PathBuf,
}

impl Context {
    pub fn problem(&self) -> Result<ProblemSpec, Failure> {
        self.config.problem(self.base.as_deref())
    }
}

/// One named pass/fail check with its measurement.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub id: String,
    pub passed: bool,
    pub measured: f64,
    pub bound: f64,
}

impl Check {
    pub fn at_most(id: &str, measured: f64, bound: f64) -> Self {
        Self { id: id.into(), passed: measured <= bound, measured, bound }
    }

    pub fn above(id: &str, measured: f64, bound: f64) -> Self {
        Self { id: id.into(), passed: measured > bound, measured, bound }
    }

    pub fn equals(id: &str, measured: usize, expected: usize) -> Self {
        Self { id: id.into(), passed: measured == expected, measured: measured as f64, bound: expected as f64 }
    }
}

fn failed(checks: &[Check]) -> Result<(), Failure> {
    let bad: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{}: measured {:.3e}, bound {:.3e}", c.id, c.measured, c.bound))
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(bad))
    }
}

pub fn solve(config: &RunConfig, spec: &ProblemSpec, solver: SolverKind) -> Result<GroundState, Failure> {
    match solver {
        SolverKind::GradientFlow => solve_gradient_flow(spec, None, config.flow_options()),
        SolverKind::FixedPoint => solve_fixed_point(spec, None, config.fixed_point_options()),
    }
    .map_err(Failure::Solver)
}

pub fn profile_csv(field: &Field) -> String {
    let g = field.grid();
    let mut out = String::from(if g.dim() == 1 { "x,phi\n" } else { "x,y,phi\n" });
    for (i, c) in field.values().iter().enumerate() {
        let x = g.position(i);
        if g.dim() == 1 {
            let _ = writeln!(out, "{},{}", x[0], c.re);
        } else {
            let _ = writeln!(out, "{},{},{}", x[0], x[1], c.re);
        }
    }
    out
}

#[derive(Serialize)]
struct GroundStateFile<'a> {
    report: GroundStateReport,
    potential: String,
    #[serde(rename = "L")]
    half_width: f64,
    #[serde(rename = "N")]
    points: usize,
    checks: &'a [Check],
    passed: bool,
}

pub fn groundstate(ctx: &Context) -> Result<GroundState, Failure> {
    let cfg = &ctx.config;
    let spec = ctx.problem()?;
    let gs = solve(cfg, &spec, cfg.solver)?;
    let bound = cfg.tol.unwrap_or_else(|| GroundState::default_tolerance(spec.lambda()));
    let failures = gs.check_invariants(bound);
    let mut checks = vec![Check::at_most("groundstate.el_residual", gs.el_residual, bound)];
    checks.extend(failures.iter().filter(|f| f.name != "el_residual").map(|f| Check {
        id: format!("groundstate.{}", f.name),
        passed: false,
        measured: f.measured,
        bound: f.bound,
    }));
    let file = GroundStateFile {
        report: gs.report(&spec),
        potential: cfg.potential.label(),
        half_width: cfg.half_width,
        points: cfg.points,
        checks: &checks,
        passed: checks.iter().all(|c| c.passed),
    };
    write_json(&ctx.out.join("groundstate.json"), &file)?;
    write_snapshot(&ctx.out.join(GROUNDSTATE_SNAPSHOT), &gs.phi, PayloadKind::Real)?;
    write_atomic(&ctx.out.join("groundstate.csv"), profile_csv(&gs.phi).as_bytes())?;
    failed(&checks)?;
    Ok(gs)
}

/// Load a ground-state snapshot and check it against the configured problem.
pub fn load_groundstate(ctx: &Context, spec: &ProblemSpec, path: Option<&Path>) -> Result<GroundState, Failure> {
    let path = path.map(Path::to_path_buf).unwrap_or_else(|| ctx.out.join(GROUNDSTATE_SNAPSHOT));
    let (field, kind) =
        snapshot::load(&path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    if field.grid() != spec.grid() {
        let g = field.grid();
        return Err(Failure::Config(format!(
            "snapshot grid (n={}, N={}, L={}) does not match the configuration",
            g.dim(),
            g.points_per_axis(),
            g.half_width()
        )));
    }
    if kind != PayloadKind::Real {
        return Err(Failure::Config("ground-state snapshot must hold a real profile".into()));
    }
    GroundState::from_profile(spec, field, 0, ctx.config.solver)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumFile {
    pub omega: f64,
    pub spectra: Vec<SpectrumReport>,
    pub pair_residuals: PairResiduals,
    pub certificate: Option<IndexCertificate>,
    pub omega_bound: Option<OmegaBound>,
    pub sturm: Option<SturmReport>,
    pub sector_identity: Option<f64>,
    pub truncation: Option<TruncationTable>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

fn spectral(e: fnls::Error) -> Failure {
    Failure::Solver(e)
}

pub fn spectrum_report(ctx: &Context, spec: &ProblemSpec, gs: &GroundState) -> Result<SpectrumFile, Failure> {
    let cfg = &ctx.config;
    let one_d = spec.dim() == 1;
    let sectors: Vec<Sector> = if one_d {
        cfg.sectors.clone()
    } else if cfg.sectors.contains(&Sector::Full) {
        vec![Sector::Full]
    } else {
        return Err(Failure::Config("parity sectors are only defined in 1D; request \"full\" in 2D".into()));
    };
    let zero_tol = cfg.zero_tol.unwrap_or_else(|| default_zero_tol(gs.omega));
    let pair = linearize(spec, gs).map_err(spectral)?;
    let h = spec.hamiltonian(0.0);
    let mut spectra = Vec::new();
    let mut checks = Vec::new();
    let mut certificate = None;
    let mut omega_bound = None;
    for &sector in &sectors {
        let m = if sector == Sector::Full { cfg.m.max(4) } else { cfg.m };
        let hs = eigen_lowest(&h, OperatorTag::H, m, sector, 0.0).map_err(spectral)?;
        let plus = eigen_lowest(&pair.lplus, OperatorTag::Lplus, m, sector, zero_tol).map_err(spectral)?;
        let minus = eigen_lowest(&pair.lminus, OperatorTag::Lminus, m, sector, zero_tol).map_err(spectral)?;
        if sector != Sector::Odd && omega_bound.is_none() {
            let b = check_omega_lower_bound(gs, &hs, spec.p()).map_err(spectral)?;
            checks.push(Check::above("multiplier.lower_bound", b.omega_plus_sigma0, 0.0));
            checks.push(Check::at_most("multiplier.ground_ratio", b.agreement, tol::OMEGA_AGREEMENT * (1.0 + gs.omega.abs())));
            omega_bound = Some(b);
        }
        if sector == Sector::Full {
            let c = certify_from_spectra(&plus, &minus, &gs.phi).map_err(spectral)?;
            checks.extend(certificate_checks(&c));
            certificate = Some(c);
        }
        if sector == Sector::Odd {
            checks.push(Check::above("lplus.odd_positive", plus.eigenvalues[0], 0.0));
        }
        spectra.extend([hs, plus, minus]);
    }
    let pair_residuals = pair.residuals().map_err(spectral)?;
    let wants_even = sectors.iter().any(|s| *s != Sector::Odd);
    let wants_odd = sectors.iter().any(|s| *s != Sector::Even);
    let sturm = if one_d && wants_even {
        let r = sturm_second_radial(&pair).map_err(spectral)?;
        checks.push(Check { id: "lplus.sturm_second_radial".into(), passed: r.holds(), measured: r.sign_changes_e1 as f64, bound: 1.0 });
        Some(r)
    } else {
        None
    };
    let sector_identity = if one_d && wants_odd && spec.potential().gradient_x1().is_ok() {
        let r = check_sector_relation(spec, &pair).map_err(spectral)?;
        checks.push(Check::at_most("lplus.sector_identity", r, tol::SECTOR_IDENTITY));
        Some(r)
    } else {
        None
    };
    let truncation = if wants_even && !cfg.radii.is_empty() {
        let radii: Vec<f64> = cfg.radii.iter().copied().filter(|&r| r <= spec.grid().half_width()).collect();
        let t = truncated_potential_convergence(spec.s(), spec.potential(), 0.0, &radii).map_err(spectral)?;
        let last = t.rows.last().map(|r| (r.e0 - t.untruncated.e0).abs()).unwrap_or(0.0);
        checks.push(Check { id: "truncation.monotone".into(), passed: t.nondecreasing && t.bounded, measured: last, bound: 0.0 });
        Some(t)
    } else {
        None
    };
    let passed = checks.iter().all(|c| c.passed);
    Ok(SpectrumFile {
        omega: gs.omega,
        spectra,
        pair_residuals,
        certificate,
        omega_bound,
        sturm,
        sector_identity,
        truncation,
        checks,
        passed,
    })
}

pub fn certificate_checks(c: &IndexCertificate) -> Vec<Check> {
    vec![
        Check::equals("lplus.morse_index", c.n_plus, 1),
        Check::equals("lplus.kernel_dimension", c.ker_plus_dim, 0),
        Check::at_most("lminus.ground_value", c.lminus_min.abs(), tol::LMINUS_ZERO),
        Check::above("lminus.ground_alignment", c.lminus_alignment, 1.0 - tol::LMINUS_ALIGNMENT),
        Check::above("lminus.gap", c.lminus_gap, 0.0),
    ]
}

/// Long-format CSV of all computed eigenvalues.
pub fn spectra_csv(spectra: &[SpectrumReport]) -> String {
    let mut out = String::from("operator,sector,index,eigenvalue,residual,sign_changes\n");
    for r in spectra {
        let op = match r.operator {
            OperatorTag::H => "H",
            OperatorTag::Lplus => "Lplus",
            OperatorTag::Lminus => "Lminus",
        };
        for (i, mu) in r.eigenvalues.iter().enumerate() {
            let _ = writeln!(out, "{op},{},{i},{mu},{},{}", r.sector, r.residuals[i], r.sign_changes[i]);
        }
    }
    out
}

pub fn spectrum(ctx: &Context, gs_path: Option<&Path>) -> Result<SpectrumFile, Failure> {
    let spec = ctx.problem()?;
    let gs = load_groundstate(ctx, &spec, gs_path)?;
    let report = spectrum_report(ctx, &spec, &gs)?;
    write_json(&ctx.out.join("spectrum.json"), &report)?;
    write_atomic(&ctx.out.join("spectra.csv"), spectra_csv(&report.spectra).as_bytes())?;
    failed(&report.checks)?;
    Ok(report)
}

fn integrator(e: fnls::Error) -> Failure {
    match e {
        fnls::Error::ConservationDrift { .. } => Failure::Integrator(e),
        other => Failure::Solver(other),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EvolveFile {
    pub delta: f64,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub seed: u64,
    pub scheme: &'static str,
    pub conservation: ConservationReport,
    pub drift_limit: f64,
}

/// Evolve the perturbed ground state to `T`, sampling every 0.1 time units.
pub fn evolve(ctx: &Context, gs_path: Option<&Path>) -> Result<EvolveFile, Failure> {
    let cfg = &ctx.config;
    let spec = ctx.problem()?;
    let gs = load_groundstate(ctx, &spec, gs_path)?;
    let mut u = if cfg.delta > 0.0 {
        let w = perturbation_direction(&spec, &gs.phi, cfg.seed).map_err(Failure::Solver)?;
        gs.phi.axpy(Complex64::new(cfg.delta, 0.0), &w)
    } else {
        gs.phi.clone()
    };
    let stepper = StrangStepper::new(&spec, cfg.dt).map_err(Failure::Solver)?;
    let steps = (cfg.t_final / cfg.dt).round() as usize;
    let every = ((0.1 / cfg.dt).round() as usize).max(1);
    let sample = |u: &Field, t: f64| ConservationSample::of(&spec, u, t, gs.omega).map_err(Failure::Solver);
    let mut samples = vec![sample(&u, 0.0)?];
    let mut csv = String::from("t,total_energy,power\n");
    let mut abort = None;
    for k in 1..=steps {
        stepper.step_values(u.values_mut());
        if k % every == 0 || k == steps {
            let s = sample(&u, k as f64 * cfg.dt)?;
            samples.push(s);
            let r = fnls::dynamics::conservation_monitor(&[samples[0], s]).map_err(Failure::Solver)?;
            if !(r.max_energy_drift <= DRIFT_LIMIT && r.max_power_drift <= DRIFT_LIMIT) {
                abort = Some(r);
                break;
            }
        }
    }
    for s in &samples {
        let _ = writeln!(csv, "{},{},{}", s.t, s.total_energy, s.power);
    }
    write_atomic(&ctx.out.join("conservation.csv"), csv.as_bytes())?;
    if let Some(r) = abort {
        return Err(integrator(fnls::Error::ConservationDrift { energy: r.max_energy_drift, power: r.max_power_drift }));
    }
    let conservation = fnls::dynamics::conservation_monitor(&samples).map_err(Failure::Solver)?;
    write_snapshot(&ctx.out.join("evolved.fnls"), &u, PayloadKind::Complex)?;
    let file = EvolveFile {
        delta: cfg.delta,
        dt: cfg.dt,
        t_final: cfg.t_final,
        seed: cfg.seed,
        scheme: "strang",
        conservation,
        drift_limit: DRIFT_LIMIT,
    };
    write_json(&ctx.out.join("evolve.json"), &file)?;
    Ok(file)
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityFile {
    pub s: f64,
    pub p: f64,
    pub n: usize,
    pub lambda: f64,
    pub potential: String,
    #[serde(rename = "L")]
    pub half_width: f64,
    #[serde(rename = "N")]
    pub points: usize,
    pub delta: f64,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub seed: u64,
    pub scheme: &'static str,
    pub omega: f64,
    pub sup_distance: f64,
    pub bound: f64,
    pub max_energy_drift: f64,
    pub max_power_drift: f64,
    pub modulation_breakdown: Option<f64>,
    pub passed: bool,
}

/// Envelope on `sup d(t)`: `10 delta`, or the persistence bound when `delta = 0`.
pub fn stability_bound(delta: f64) -> f64 {
    if delta > 0.0 {
        tol::STABILITY_ENVELOPE * delta
    } else {
        tol::PERSISTENCE
    }
}

pub fn stability(ctx: &Context, gs_path: Option<&Path>) -> Result<StabilityFile, Failure> {
    let cfg = &ctx.config;
    let spec = ctx.problem()?;
    let gs = load_groundstate(ctx, &spec, gs_path)?;
    let options = StabilityOptions { delta: cfg.delta, t_final: cfg.t_final, dt: cfg.dt, seed: cfg.seed, ..StabilityOptions::default() };
    let trace = run_stability_experiment(&spec, &gs, options).map_err(integrator)?;
    let mut csv = Vec::new();
    trace.write_csv(&mut csv).map_err(Failure::Solver)?;
    write_atomic(&ctx.out.join("stability.csv"), &csv)?;
    let bound = stability_bound(cfg.delta);
    let sup = trace.sup_distance();
    let file = StabilityFile {
        s: spec.s(),
        p: spec.p(),
        n: spec.dim(),
        lambda: spec.lambda(),
        potential: cfg.potential.label(),
        half_width: cfg.half_width,
        points: cfg.points,
        delta: cfg.delta,
        dt: cfg.dt,
        t_final: cfg.t_final,
        seed: cfg.seed,
        scheme: "strang",
        omega: gs.omega,
        sup_distance: sup,
        bound,
        max_energy_drift: trace.max_energy_drift(),
        max_power_drift: trace.max_power_drift(),
        modulation_breakdown: trace.modulation_breakdown,
        passed: sup <= bound,
    };
    write_json(&ctx.out.join("stability.json"), &file)?;
    failed(&[Check::at_most("dynamics.orbital_distance", sup, bound)])?;
    Ok(file)
}
