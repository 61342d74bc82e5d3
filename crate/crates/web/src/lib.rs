//! Browser bindings: ground-state profile, linearized spectra and an
//! orbital-stability trace on a small 1D grid.

use fnls::domain::Grid;
use fnls::dynamics::{run_stability_experiment, StabilityOptions};
use fnls::groundstate::{solve_gradient_flow, FlowOptions, GroundState, ProblemSpec};
use fnls::operators::{Potential, PotentialKind};
use fnls::spectral::{eigen_lowest, linearize, OperatorTag, Sector};
use wasm_bindgen::prelude::*;

const HALF_WIDTH: f64 = 12.0;
const POINTS: usize = 256;

fn problem(s: f64, alpha: f64, lambda: f64) -> fnls::Result<(ProblemSpec, GroundState)> {
    let g = Grid::new(1, HALF_WIDTH, POINTS)?;
    let v = Potential::new(&g, PotentialKind::Power { alpha })?;
    // mass-subcritical exponent for the chosen dispersion
    let spec = ProblemSpec::new(s, 1.0 + 2.0 * s, lambda, v)?;
    let gs = solve_gradient_flow(&spec, None, FlowOptions::default())?;
    Ok((spec, gs))
}

#[wasm_bindgen]
pub struct Profile {
    x: Vec<f64>,
    phi: Vec<f64>,
    omega: f64,
    energy: f64,
}

#[wasm_bindgen]
impl Profile {
    #[wasm_bindgen(getter)]
    pub fn x(&self) -> Vec<f64> {
        self.x.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn phi(&self) -> Vec<f64> {
        self.phi.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn omega(&self) -> f64 {
        self.omega
    }
    #[wasm_bindgen(getter)]
    pub fn energy(&self) -> f64 {
        self.energy
    }
}

#[wasm_bindgen]
pub struct Spectra {
    lplus: Vec<f64>,
    lminus: Vec<f64>,
}

#[wasm_bindgen]
impl Spectra {
    #[wasm_bindgen(getter)]
    pub fn lplus(&self) -> Vec<f64> {
        self.lplus.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn lminus(&self) -> Vec<f64> {
        self.lminus.clone()
    }
}

#[wasm_bindgen]
pub struct Trace {
    t: Vec<f64>,
    d: Vec<f64>,
}

#[wasm_bindgen]
impl Trace {
    #[wasm_bindgen(getter)]
    pub fn t(&self) -> Vec<f64> {
        self.t.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn d(&self) -> Vec<f64> {
        self.d.clone()
    }
}

pub fn compute_profile(s: f64, alpha: f64, lambda: f64) -> fnls::Result<Profile> {
    let (spec, gs) = problem(s, alpha, lambda)?;
    let x = spec.grid().axis_coordinates();
    Ok(Profile { x, phi: gs.phi.real_parts(), omega: gs.omega, energy: gs.energy })
}

pub fn compute_spectra(s: f64, alpha: f64, lambda: f64, m: usize) -> fnls::Result<Spectra> {
    let (spec, gs) = problem(s, alpha, lambda)?;
    let pair = linearize(&spec, &gs)?;
    let plus = eigen_lowest(&pair.lplus, OperatorTag::Lplus, m, Sector::Full, 0.0)?;
    let minus = eigen_lowest(&pair.lminus, OperatorTag::Lminus, m, Sector::Full, 0.0)?;
    Ok(Spectra { lplus: plus.eigenvalues, lminus: minus.eigenvalues })
}

pub fn compute_trace(s: f64, alpha: f64, lambda: f64, delta: f64, t_final: f64, seed: u64) -> fnls::Result<Trace> {
    let (spec, gs) = problem(s, alpha, lambda)?;
    let opts = StabilityOptions { delta, t_final, dt: 2e-3, seed, ..StabilityOptions::default() };
    let trace = run_stability_experiment(&spec, &gs, opts)?;
    Ok(Trace { t: trace.times(), d: trace.distance() })
}

fn js(e: fnls::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = groundState)]
pub fn ground_state(s: f64, alpha: f64, lambda: f64) -> Result<Profile, JsError> {
    compute_profile(s, alpha, lambda).map_err(js)
}

#[wasm_bindgen(js_name = linearizedSpectra)]
pub fn linearized_spectra(s: f64, alpha: f64, lambda: f64, m: usize) -> Result<Spectra, JsError> {
    compute_spectra(s, alpha, lambda, m).map_err(js)
}

#[wasm_bindgen(js_name = stabilityTrace)]
pub fn stability_trace(s: f64, alpha: f64, lambda: f64, delta: f64, t_final: f64, seed: u32) -> Result<Trace, JsError> {
    compute_trace(s, alpha, lambda, delta, t_final, seed as u64).map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_is_normalized_and_peaked_at_the_origin() {
        let p = compute_profile(1.0, 2.0, 1.0).unwrap();
        assert_eq!(p.x.len(), POINTS);
        let h = 2.0 * HALF_WIDTH / POINTS as f64;
        let power: f64 = p.phi.iter().map(|v| v * v * h).sum();
        assert!((power - 1.0).abs() < 1e-10);
        let peak = p.phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(p.phi[POINTS / 2], peak);
        assert!(p.omega < 0.0);
    }

    #[test]
    fn spectra_show_one_negative_direction_and_the_phase_zero_mode() {
        let sp = compute_spectra(0.75, 2.0, 1.0, 3).unwrap();
        assert!(sp.lplus[0] < 0.0 && sp.lplus[1] > 0.0);
        assert!(sp.lminus[0].abs() < 1e-6 && sp.lminus[1] > 0.0);
    }

    #[test]
    fn trace_starts_at_delta() {
        let tr = compute_trace(1.0, 2.0, 1.0, 1e-2, 1.0, 3).unwrap();
        assert_eq!(tr.t.len(), tr.d.len());
        assert!((tr.d[0] - 1e-2).abs() < 1e-10);
        assert!(tr.d.iter().all(|d| *d < 0.1));
        assert!(compute_profile(1.0, 2.0, -1.0).is_err());
    }
}
