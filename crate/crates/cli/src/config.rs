//! Run configuration: one flat JSON document, unknown keys rejected.

use std::path::{Path, PathBuf};

use fnls::domain::Grid;
use fnls::groundstate::{critical_exponent, FixedPointOptions, FlowOptions, ProblemSpec, SolverKind};
use fnls::operators::{Potential, PotentialSpec};
use fnls::spectral::Sector;
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub s: f64,
    pub p: f64,
    pub n: usize,
    pub lambda: f64,
    pub potential: PotentialSpec,
    #[serde(rename = "L")]
    pub half_width: f64,
    #[serde(rename = "N")]
    pub points: usize,

    pub solver: SolverKind,
    pub tau: f64,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    /// Initial shift of the fixed-point iteration.
    pub shift: f64,

    pub m: usize,
    pub zero_tol: Option<f64>,
    pub sectors: Vec<Sector>,
    /// Truncation radii for the truncated-potential table.
    pub radii: Vec<f64>,

    pub dt: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub delta: f64,
    pub seed: u64,

    pub out: Option<PathBuf>,

    /// Sweep axes for `verify`; each cell uses `p = 1 + 2s/n`.
    pub sweep_s: Vec<f64>,
    pub sweep_potentials: Vec<PotentialSpec>,
    pub sweep_lambda: Vec<f64>,
    pub sweep_deltas: Vec<f64>,
    /// Horizon of the orbital-stability runs in `verify`.
    pub sweep_t: f64,
    pub smoke_2d: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            s: 1.0,
            p: 3.0,
            n: 1,
            lambda: 1.0,
            potential: PotentialSpec::Power { alpha: 2.0 },
            half_width: 12.0,
            points: 512,
            solver: SolverKind::GradientFlow,
            tau: 1e-2,
            tol: None,
            max_iter: None,
            shift: 50.0,
            m: 6,
            zero_tol: None,
            sectors: vec![Sector::Full, Sector::Even, Sector::Odd],
            radii: vec![2.0, 4.0, 6.0, 8.0],
            dt: 1e-3,
            t_final: 50.0,
            delta: 1e-3,
            seed: 0,
            out: None,
            sweep_s: vec![0.5, 0.75, 1.0],
            sweep_potentials: vec![PotentialSpec::Power { alpha: 2.0 }, PotentialSpec::Power { alpha: 4.0 }],
            sweep_lambda: vec![0.25, 1.0, 4.0],
            sweep_deltas: vec![1e-3, 3e-3, 1e-2],
            sweep_t: 50.0,
            smoke_2d: true,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<(), Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Failure::Config(format!("{name} must be positive, got {v}")))
    }
}

impl RunConfig {
    /// Parse and validate; tabulated potential paths are relative to the file.
    pub fn load(path: &Path) -> Result<(Self, Option<PathBuf>), Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg = Self::from_json(&text)?;
        Ok((cfg, path.parent().map(Path::to_path_buf)))
    }

    pub fn from_json(text: &str) -> Result<Self, Failure> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Failure::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Failure> {
        if !(self.s > 0.0 && self.s <= 1.0) {
            return Err(Failure::Config(format!("s must lie in (0, 1], got {}", self.s)));
        }
        if !(self.n == 1 || self.n == 2) {
            return Err(Failure::Config(format!("n must be 1 or 2, got {}", self.n)));
        }
        if self.points % 2 != 0 || self.points < 4 {
            return Err(Failure::Config(format!("N must be even and at least 4, got {}", self.points)));
        }
        let bound = critical_exponent(self.s, self.n);
        if !(self.p > 1.0 && self.p < bound) {
            return Err(Failure::Config(format!(
                "p = {} violates the subcriticality hypothesis 1 < p < 1 + 4s/n = {bound} \
                 under which normalized ground states exist",
                self.p
            )));
        }
        for (name, v) in [
            ("lambda", self.lambda),
            ("L", self.half_width),
            ("tau", self.tau),
            ("shift", self.shift),
            ("dt", self.dt),
            ("T", self.t_final),
            ("sweep_t", self.sweep_t),
        ] {
            positive(name, v)?;
        }
        for (name, v) in [("tol", self.tol), ("zero_tol", self.zero_tol)] {
            if let Some(v) = v {
                positive(name, v)?;
            }
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Failure::Config(format!("delta must be nonnegative, got {}", self.delta)));
        }
        if self.m == 0 || self.m > fnls::spectral::MAX_EIGENPAIRS {
            return Err(Failure::Config(format!("m must lie in 1..={}", fnls::spectral::MAX_EIGENPAIRS)));
        }
        if self.sectors.is_empty() {
            return Err(Failure::Config("sectors must not be empty".into()));
        }
        for (name, list) in [("radii", &self.radii), ("sweep_s", &self.sweep_s), ("sweep_lambda", &self.sweep_lambda)] {
            for &v in list {
                positive(name, v)?;
            }
        }
        if self.sweep_s.iter().any(|&s| s > 1.0) {
            return Err(Failure::Config("sweep_s entries must lie in (0, 1]".into()));
        }
        for &d in &self.sweep_deltas {
            positive("sweep_deltas", d)?;
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid, Failure> {
        Grid::new(self.n, self.half_width, self.points).map_err(|e| Failure::Config(e.to_string()))
    }

    pub fn problem(&self, base: Option<&Path>) -> Result<ProblemSpec, Failure> {
        self.problem_with(self.s, self.p, self.lambda, &self.potential, &self.grid()?, base)
    }

    pub fn problem_with(
        &self,
        s: f64,
        p: f64,
        lambda: f64,
        potential: &PotentialSpec,
        grid: &Grid,
        base: Option<&Path>,
    ) -> Result<ProblemSpec, Failure> {
        let kind = potential.resolve(base).map_err(|e| Failure::Config(e.to_string()))?;
        let v = Potential::new(grid, kind).map_err(|e| Failure::Config(e.to_string()))?;
        ProblemSpec::new(s, p, lambda, v).map_err(|e| Failure::Config(e.to_string()))
    }

    pub fn flow_options(&self) -> FlowOptions {
        let d = FlowOptions::default();
        FlowOptions { tau: self.tau, tol: self.tol, max_iter: self.max_iter.unwrap_or(d.max_iter) }
    }

    pub fn fixed_point_options(&self) -> FixedPointOptions {
        let d = FixedPointOptions::default();
        FixedPointOptions { shift: self.shift, tol: self.tol, max_iter: self.max_iter.unwrap_or(d.max_iter), ..d }
    }

    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf).or_else(|| self.out.clone()).unwrap_or_else(|| PathBuf::from("out"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
        let cfg = RunConfig::from_json("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn keys_mirror_the_fields() {
        let cfg = RunConfig::from_json(r#"{"s": 0.5, "p": 2.0, "L": 10, "N": 256, "T": 5,
            "potential": {"kind": "harmquart", "a": 0.5}, "sectors": ["odd"]}"#)
        .unwrap();
        assert_eq!((cfg.s, cfg.half_width, cfg.points, cfg.t_final), (0.5, 10.0, 256, 5.0));
        assert_eq!(cfg.sectors, vec![Sector::Odd]);
    }

    #[test]
    fn rejections() {
        for bad in [
            r#"{"typo": 1}"#,
            r#"{"N": 511}"#,
            r#"{"s": 0}"#,
            r#"{"s": 1.5}"#,
            r#"{"tol": -1e-8}"#,
            r#"{"dt": 0}"#,
            r#"{"potential": {"kind": "power", "alpha": 2, "extra": 1}}"#,
        ] {
            assert!(matches!(RunConfig::from_json(bad), Err(Failure::Config(_))), "{bad}");
        }
        match RunConfig::from_json(r#"{"p": 5, "s": 1, "n": 1}"#) {
            Err(Failure::Config(msg)) => assert!(msg.contains("subcriticality"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }
}
