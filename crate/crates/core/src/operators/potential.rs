use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::rearrange::radial_order;
use crate::domain::Grid;
use crate::error::{Error, Result};

/// Radial samples `(r_i, V(r_i))` with `r` strictly ascending and `V`
/// nondecreasing, interpolated linearly (which keeps monotonicity).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialTable {
    r: Vec<f64>,
    v: Vec<f64>,
}

impl RadialTable {
    pub fn new(r: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if r.len() != v.len() || r.len() < 2 {
            return Err(Error::InvalidPotential("table needs at least two (r, V) rows".into()));
        }
        if r[0] < 0.0 || r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPotential("table radii must be >= 0 and strictly ascending".into()));
        }
        if v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidPotential("tabulated potential must be nondecreasing in r".into()));
        }
        Ok(Self { r, v })
    }

    /// Parses `r,V` rows; a non-numeric first row is treated as a header.
    pub fn from_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
        let (mut r, mut v) = (Vec::new(), Vec::new());
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() < 2 {
                return Err(Error::InvalidPotential(format!("row {} has fewer than two columns", line + 1)));
            }
            match (record[0].parse::<f64>(), record[1].parse::<f64>()) {
                (Ok(a), Ok(b)) => {
                    r.push(a);
                    v.push(b);
                }
                _ if line == 0 => continue,
                _ => return Err(Error::InvalidPotential(format!("row {} is not numeric", line + 1))),
            }
        }
        Self::new(r, v)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        Self::from_csv(std::fs::File::open(path)?)
    }

    /// Linear interpolation; beyond the last row the final slope is continued.
    pub fn eval(&self, radius: f64) -> f64 {
        let n = self.r.len();
        let seg = match self.r.iter().position(|&x| x > radius) {
            Some(0) => 0,
            Some(i) => i - 1,
            None => n - 2,
        };
        let (r0, r1, v0, v1) = (self.r[seg], self.r[seg + 1], self.v[seg], self.v[seg + 1]);
        if radius <= r0 && seg == 0 {
            return v0;
        }
        v0 + (v1 - v0) * (radius - r0) / (r1 - r0)
    }
}

/// Shape of a radial trapping potential.
#[derive(Clone, Debug, PartialEq)]
pub enum PotentialKind {
    /// `r^alpha`, `alpha >= 1`.
    Power { alpha: f64 },
    /// `r^2 + a r^4`, `a >= 0`.
    HarmonicQuartic { a: f64 },
    Tabulated(RadialTable),
}

impl PotentialKind {
    fn validate(&self) -> Result<()> {
        match *self {
            PotentialKind::Power { alpha } if !(alpha >= 1.0 && alpha.is_finite()) => {
                Err(Error::InvalidPotential(format!("power potential needs alpha >= 1, got {alpha}")))
            }
            PotentialKind::HarmonicQuartic { a } if !(a >= 0.0 && a.is_finite()) => {
                Err(Error::InvalidPotential(format!("quartic coefficient must be >= 0, got {a}")))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            PotentialKind::Power { alpha } => r.powf(*alpha),
            PotentialKind::HarmonicQuartic { a } => r * r + a * r.powi(4),
            PotentialKind::Tabulated(t) => t.eval(r),
        }
    }

    /// `dV/dr`, when known in closed form.
    pub fn radial_derivative(&self, r: f64) -> Option<f64> {
        match self {
            PotentialKind::Power { alpha } => {
                Some(if r == 0.0 { if *alpha == 1.0 { 1.0 } else { 0.0 } } else { alpha * r.powf(alpha - 1.0) })
            }
            PotentialKind::HarmonicQuartic { a } => Some(2.0 * r + 4.0 * a * r.powi(3)),
            PotentialKind::Tabulated(_) => None,
        }
    }
}

/// Potential as it appears in run configurations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum PotentialSpec {
    #[serde(rename = "power")]
    Power { alpha: f64 },
    #[serde(rename = "harmquart")]
    HarmonicQuartic { a: f64 },
    #[serde(rename = "tabulated")]
    Tabulated { path: PathBuf },
}

impl PotentialSpec {
    /// Resolve to a kind, reading tabulated data relative to `base` when the path is relative.
    pub fn resolve(&self, base: Option<&Path>) -> Result<PotentialKind> {
        Ok(match self {
            PotentialSpec::Power { alpha } => PotentialKind::Power { alpha: *alpha },
            PotentialSpec::HarmonicQuartic { a } => PotentialKind::HarmonicQuartic { a: *a },
            PotentialSpec::Tabulated { path } => {
                let full = match base {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path.clone(),
                };
                PotentialKind::Tabulated(RadialTable::from_csv_path(&full)?)
            }
        })
    }

    pub fn label(&self) -> String {
        match self {
            PotentialSpec::Power { alpha } => format!("|x|^{alpha}"),
            PotentialSpec::HarmonicQuartic { a } => format!("|x|^2+{a}|x|^4"),
            PotentialSpec::Tabulated { path } => format!("table:{}", path.display()),
        }
    }
}

/// A radial, nondecreasing trapping potential sampled once on a grid.
#[derive(Clone, Debug)]
pub struct Potential {
    kind: PotentialKind,
    grid: Grid,
    samples: Arc<Vec<f64>>,
}

impl Potential {
    pub fn new(grid: &Grid, kind: PotentialKind) -> Result<Self> {
        kind.validate()?;
        let samples: Vec<f64> = grid.radii().iter().map(|&r| kind.eval(r)).collect();
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPotential("potential is not finite on the grid".into()));
        }
        if samples.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidPotential("potential must be nonnegative".into()));
        }
        // nondecreasing along increasing grid radius
        let order = radial_order(grid);
        let mut prev_r = -1i64;
        let mut prev_max = f64::NEG_INFINITY;
        let mut shell_max = f64::NEG_INFINITY;
        for i in order {
            let d = grid.squared_offset(i);
            if d != prev_r {
                prev_max = prev_max.max(shell_max);
                shell_max = f64::NEG_INFINITY;
                prev_r = d;
            }
            if samples[i] < prev_max {
                return Err(Error::InvalidPotential(format!(
                    "potential decreases with |x| near r = {}",
                    (d as f64).sqrt() * grid.spacing()
                )));
            }
            shell_max = shell_max.max(samples[i]);
        }
        Ok(Self { kind, grid: grid.clone(), samples: Arc::new(samples) })
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.kind.eval(r)
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// The same potential on another grid.
    pub fn resampled(&self, grid: &Grid) -> Result<Self> {
        Self::new(grid, self.kind.clone())
    }

    /// `W_R = min(V, V(R))` on the grid.
    pub fn truncated_samples(&self, radius: f64) -> Vec<f64> {
        let cap = self.eval(radius);
        self.samples.iter().map(|&v| v.min(cap)).collect()
    }

    /// `dV/dx_1 = V'(r) x_1 / r` at every sample.
    pub fn gradient_x1(&self) -> Result<Vec<f64>> {
        (0..self.grid.len())
            .map(|i| {
                let [x1, x2] = self.grid.position(i);
                let r = (x1 * x1 + x2 * x2).sqrt();
                let dv = self.kind.radial_derivative(r).ok_or_else(|| {
                    Error::Unsupported("tabulated potential carries no derivative data".into())
                })?;
                Ok(if r == 0.0 { 0.0 } else { dv * x1 / r })
            })
            .collect()
    }
}
