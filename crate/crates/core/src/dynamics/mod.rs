//! Time integration of `i u_t + (-Delta)^s u + V u - |u|^(p-1) u = 0`.
//!
//! With this sign convention a standing wave is `u(t) = exp(-i omega t) phi`,
//! the opposite of the more common `i u_t - Delta u` form.

mod coercivity;
mod modulation;
mod stability;

pub use coercivity::{coercivity_check, CoercivityReport};
pub use modulation::{decompose_modulated, modulation_theta, orbital_distance, Modulation, OrbitalDistance};
pub use stability::{perturbation_direction, run_stability_experiment, StabilityOptions, StabilitySample, StabilityTrace, DRIFT_LIMIT};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::{functionals, Field};
use crate::error::{Error, Result};
use crate::groundstate::ProblemSpec;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    Strang,
}

/// A solution snapshot together with the problem it evolves under.
#[derive(Clone, Debug)]
pub struct EvolutionState {
    pub t: f64,
    pub u: Field,
    pub spec: ProblemSpec,
    pub dt: f64,
    pub scheme: Scheme,
}

impl EvolutionState {
    pub fn new(spec: &ProblemSpec, u: Field, dt: f64) -> Result<Self> {
        if u.grid() != spec.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { t: 0.0, u, spec: spec.clone(), dt, scheme: Scheme::Strang })
    }
}

/// Precomputed Strang stepper; `dt` may be negative to run the flow backwards.
#[derive(Clone, Debug)]
pub struct StrangStepper {
    dt: f64,
    p: f64,
    coupling: f64,
    potential: Vec<f64>,
    kinetic_phase: Vec<Complex64>,
    grid: crate::domain::Grid,
}

impl StrangStepper {
    pub fn new(spec: &ProblemSpec, dt: f64) -> Result<Self> {
        Self::with_coupling(spec, dt, 1.0)
    }

    /// `coupling` multiplies the nonlinear term; `0` gives the linear flow.
    pub fn with_coupling(spec: &ProblemSpec, dt: f64, coupling: f64) -> Result<Self> {
        if !(dt.is_finite() && dt != 0.0) {
            return Err(Error::InvalidParameter(format!("time step must be finite and nonzero, got {dt}")));
        }
        let grid = spec.grid().clone();
        let kinetic_phase =
            grid.fractional_symbol(spec.s()).iter().map(|w| Complex64::from_polar(1.0, dt * w)).collect();
        Ok(Self {
            dt,
            p: spec.p(),
            coupling,
            potential: spec.potential().samples().to_vec(),
            kinetic_phase,
            grid,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn half_spatial(&self, u: &mut [Complex64]) {
        let h = 0.5 * self.dt;
        for (c, v) in u.iter_mut().zip(&self.potential) {
            let m = c.norm();
            let nl = if m == 0.0 { 0.0 } else { self.coupling * m.powf(self.p - 1.0) };
            *c *= Complex64::from_polar(1.0, h * (v - nl));
        }
    }

    /// One step in place.
    pub fn step_values(&self, u: &mut [Complex64]) {
        self.half_spatial(u);
        self.grid.apply_complex_multiplier(u, &self.kinetic_phase);
        self.half_spatial(u);
    }

    pub fn step(&self, state: &mut EvolutionState) -> Result<()> {
        if state.u.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        self.step_values(state.u.values_mut());
        state.t += self.dt;
        state.dt = self.dt;
        Ok(())
    }
}

/// One Strang step of `state` with its own `dt`.
pub fn step_strang(state: &EvolutionState) -> Result<EvolutionState> {
    if !(state.dt > 0.0) {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {}", state.dt)));
    }
    let stepper = StrangStepper::new(&state.spec, state.dt)?;
    let mut next = state.clone();
    stepper.step(&mut next)?;
    Ok(next)
}

/// Evolve `u` by `steps` steps.
pub fn evolve(spec: &ProblemSpec, u: &Field, dt: f64, steps: usize) -> Result<Field> {
    let stepper = StrangStepper::new(spec, dt)?;
    if u.grid() != spec.grid() {
        return Err(Error::GridMismatch);
    }
    let mut out = u.clone();
    for _ in 0..steps {
        stepper.step_values(out.values_mut());
    }
    Ok(out)
}

/// Conserved quantities of one state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservationSample {
    pub t: f64,
    /// `E + omega P / 2`.
    pub total_energy: f64,
    pub power: f64,
}

impl ConservationSample {
    pub fn of(spec: &ProblemSpec, u: &Field, t: f64, omega: f64) -> Result<Self> {
        let f = functionals(u, spec.potential(), spec.s(), spec.p())?;
        Ok(Self { t, total_energy: f.total_energy(omega), power: f.power })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservationReport {
    pub max_energy_drift: f64,
    pub max_power_drift: f64,
}

fn relative(x: f64, reference: f64) -> f64 {
    (x - reference).abs() / reference.abs().max(f64::MIN_POSITIVE)
}

/// Largest relative drifts against the first sample.
pub fn conservation_monitor(samples: &[ConservationSample]) -> Result<ConservationReport> {
    let Some(first) = samples.first().filter(|_| samples.len() >= 2) else {
        return Err(Error::InvalidParameter("conservation monitor needs at least two samples".into()));
    };
    let mut report = ConservationReport { max_energy_drift: 0.0, max_power_drift: 0.0 };
    for s in &samples[1..] {
        report.max_energy_drift = report.max_energy_drift.max(relative(s.total_energy, first.total_energy));
        report.max_power_drift = report.max_power_drift.max(relative(s.power, first.power));
    }
    Ok(report)
}

/// Evolve for `steps` steps, sampling the conserved quantities every `every` steps.
pub fn monitored_run(
    spec: &ProblemSpec,
    u: &Field,
    omega: f64,
    dt: f64,
    steps: usize,
    every: usize,
) -> Result<(Field, ConservationReport)> {
    if u.grid() != spec.grid() {
        return Err(Error::GridMismatch);
    }
    let stepper = StrangStepper::new(spec, dt)?;
    let every = every.max(1);
    let mut out = u.clone();
    let mut samples = vec![ConservationSample::of(spec, &out, 0.0, omega)?];
    for k in 1..=steps {
        stepper.step_values(out.values_mut());
        if k % every == 0 || k == steps {
            samples.push(ConservationSample::of(spec, &out, k as f64 * dt, omega)?);
        }
    }
    let report = conservation_monitor(&samples)?;
    Ok((out, report))
}

#[cfg(test)]
mod tests;
