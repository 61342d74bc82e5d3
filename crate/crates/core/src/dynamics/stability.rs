//! Perturb the ground state, evolve, and track the distance to its orbit.

use std::io::Write;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{decompose_modulated, orbital_distance, ConservationSample, Scheme, StrangStepper};
use crate::domain::{hs_inner, hs_norm_squared, Field};
use crate::error::{Error, Result};
use crate::groundstate::{GroundState, ProblemSpec};

/// Relative drift of `E + omega P / 2` or `P` that aborts a run.
pub const DRIFT_LIMIT: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityOptions {
    pub delta: f64,
    pub t_final: f64,
    pub dt: f64,
    pub seed: u64,
    pub sample_interval: f64,
    pub drift_limit: f64,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        Self { delta: 1e-3, t_final: 50.0, dt: 1e-3, seed: 0, sample_interval: 0.1, drift_limit: DRIFT_LIMIT }
    }
}

/// One row of the trace. `theta`, `mu`, `eta_norm`, `zeta_norm` describe
/// `e^{i omega t} u(t)` and are NaN where the modulation ansatz breaks down.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilitySample {
    pub t: f64,
    pub d: f64,
    pub theta: f64,
    pub mu: f64,
    pub eta_norm: f64,
    pub zeta_norm: f64,
    #[serde(rename = "E_drift")]
    pub energy_drift: f64,
    #[serde(rename = "P_drift")]
    pub power_drift: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilityTrace {
    pub options: StabilityOptions,
    pub scheme: Scheme,
    pub omega: f64,
    pub samples: Vec<StabilitySample>,
    /// Time of the first modulation breakdown, if any.
    pub modulation_breakdown: Option<f64>,
}

impl StabilityTrace {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn distance(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.d).collect()
    }

    pub fn sup_distance(&self) -> f64 {
        self.samples.iter().map(|s| s.d).fold(0.0, f64::max)
    }

    /// `sup_t d(t) / delta`; infinite for `delta = 0` unless `d` vanishes.
    pub fn sup_ratio(&self) -> f64 {
        self.sup_distance() / self.options.delta
    }

    pub fn max_energy_drift(&self) -> f64 {
        self.samples.iter().map(|s| s.energy_drift).fold(0.0, f64::max)
    }

    pub fn max_power_drift(&self) -> f64 {
        self.samples.iter().map(|s| s.power_drift).fold(0.0, f64::max)
    }

    /// Columns `t,d,theta,mu,eta_norm,zeta_norm,E_drift,P_drift`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for s in &self.samples {
            w.serialize(s)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Correlation scale of the random direction: white noise is filtered by
/// `exp(-|k|^2 / (2 K^2))` before tapering.
pub const PERTURBATION_BANDWIDTH: f64 = 2.0;

const SUPPORT_LEVEL: f64 = 1e-3;

/// Seeded smooth complex Gaussian field, tapered by `exp(-(|x|/R)^8)`, with
/// the phase direction `i phi` removed so `<w, phi>_{H^s}` is real, normalized in `H^s`.
///
/// `R` is twice the radius where `|phi|` falls to `SUPPORT_LEVEL` of its peak,
/// capped at `0.8 L`; noise far out in a steep trap would otherwise dominate the dynamics.
pub fn perturbation_direction(spec: &ProblemSpec, phi: &Field, seed: u64) -> Result<Field> {
    let grid = spec.grid();
    if phi.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let s = spec.s();
    let radii = grid.radii();
    let cutoff = SUPPORT_LEVEL * phi.max_modulus();
    let support = phi
        .values()
        .iter()
        .zip(&radii)
        .filter(|(v, _)| v.norm() >= cutoff)
        .fold(0.0, |acc: f64, (_, r)| acc.max(*r));
    let reach = (2.0 * support).clamp(grid.spacing(), 0.8 * grid.half_width());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values: Vec<Complex64> = (0..grid.len())
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        })
        .collect();
    let filter: Vec<f64> = grid
        .k_squared()
        .iter()
        .map(|k2| (-k2 / (2.0 * PERTURBATION_BANDWIDTH * PERTURBATION_BANDWIDTH)).exp())
        .collect();
    grid.apply_multiplier(&mut values, &filter);
    for (v, r) in values.iter_mut().zip(&radii) {
        *v *= (-(r / reach).powi(8)).exp();
    }
    let w = Field::from_values(grid, values)?;
    let tangent = hs_inner(&w, phi, s).im / hs_norm_squared(phi, s);
    let w = w.axpy(Complex64::new(0.0, -tangent), phi);
    let norm = hs_norm_squared(&w, s).sqrt();
    Ok(w.scaled(1.0 / norm))
}

fn sample(
    spec: &ProblemSpec,
    u: &Field,
    phi: &Field,
    t: f64,
    omega: f64,
    reference: &ConservationSample,
) -> Result<(StabilitySample, bool)> {
    let s = spec.s();
    let d = orbital_distance(u, phi, s)?.d;
    let c = ConservationSample::of(spec, u, t, omega)?;
    let energy_drift = (c.total_energy - reference.total_energy).abs() / reference.total_energy.abs();
    let power_drift = (c.power - reference.power).abs() / reference.power;
    // modulation is tracked in the frame rotating with the standing wave
    let co_rotating = u.scaled_complex(Complex64::from_polar(1.0, omega * t));
    let (theta, mu, eta_norm, zeta_norm, broken) = match decompose_modulated(&co_rotating, phi) {
        Ok(m) => (m.theta, m.mu, hs_norm_squared(&m.eta, s).sqrt(), hs_norm_squared(&m.zeta, s).sqrt(), false),
        Err(Error::ModulationBreakdown(_)) => (f64::NAN, f64::NAN, f64::NAN, f64::NAN, true),
        Err(e) => return Err(e),
    };
    Ok((StabilitySample { t, d, theta, mu, eta_norm, zeta_norm, energy_drift, power_drift }, broken))
}

/// Evolve `phi + delta w` to `t_final` and record the trace every `sample_interval`.
pub fn run_stability_experiment(
    spec: &ProblemSpec,
    gs: &GroundState,
    options: StabilityOptions,
) -> Result<StabilityTrace> {
    let StabilityOptions { delta, t_final, dt, seed, sample_interval, drift_limit } = options;
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("perturbation size must be nonnegative, got {delta}")));
    }
    if !(dt > 0.0 && t_final >= 0.0 && sample_interval > 0.0 && drift_limit > 0.0) {
        return Err(Error::InvalidParameter("time step, horizon, sampling interval and drift limit must be positive".into()));
    }
    let phi = &gs.phi;
    let mut u = if delta > 0.0 {
        phi.axpy(Complex64::new(delta, 0.0), &perturbation_direction(spec, phi, seed)?)
    } else {
        phi.clone()
    };
    let stepper = StrangStepper::new(spec, dt)?;
    let steps = (t_final / dt).round() as usize;
    let every = ((sample_interval / dt).round() as usize).max(1);
    let reference = ConservationSample::of(spec, &u, 0.0, gs.omega)?;
    let mut trace =
        StabilityTrace { options, scheme: Scheme::Strang, omega: gs.omega, samples: Vec::new(), modulation_breakdown: None };
    let record = |u: &Field, t: f64, trace: &mut StabilityTrace| -> Result<()> {
        let (row, broken) = sample(spec, u, phi, t, gs.omega, &reference)?;
        if broken && trace.modulation_breakdown.is_none() {
            trace.modulation_breakdown = Some(t);
        }
        trace.samples.push(row);
        if !(row.energy_drift <= drift_limit && row.power_drift <= drift_limit) {
            return Err(Error::ConservationDrift { energy: row.energy_drift, power: row.power_drift });
        }
        Ok(())
    };
    record(&u, 0.0, &mut trace)?;
    for k in 1..=steps {
        stepper.step_values(u.values_mut());
        if k % every == 0 || k == steps {
            record(&u, k as f64 * dt, &mut trace)?;
        }
    }
    Ok(trace)
}
