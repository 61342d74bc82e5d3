//! Pass/fail bounds shared by the subcommands and the verification table.

/// `|sigma_0(H) - 1|` for the quantum oscillator.
pub const OSCILLATOR_LEVEL: f64 = 1e-6;
/// `1 - cos` between the oscillator ground state and `exp(-x^2/2)`.
pub const OSCILLATOR_SHAPE: f64 = 1e-8;
/// `||phi||^2 = lambda`, relative.
pub const CONSTRAINT: f64 = 1e-10;
/// L2 distance between the two solvers' profiles.
pub const CROSS_SOLVER: f64 = 1e-6;
/// `omega + sigma_0` against the tested Euler-Lagrange ratio, times `1 + |omega|`.
pub const OMEGA_AGREEMENT: f64 = 1e-6;
pub const LMINUS_ZERO: f64 = 1e-6;
pub const LMINUS_ALIGNMENT: f64 = 1e-8;
/// `||L+ d phi + V' phi|| / ||phi||`.
pub const SECTOR_IDENTITY: f64 = 1e-5;
/// Truncated against untruncated ground level at the largest radius.
pub const TRUNCATION: f64 = 1e-4;
/// Discrete rearrangement inequalities hold up to summation roundoff.
pub const REARRANGEMENT_ROUNDOFF: f64 = 1e-12;
pub const POLYA_SZEGO_SLACK: f64 = 0.01;
pub const GRADIENT_FD: f64 = 1e-6;
pub const POWER_DRIFT: f64 = 1e-10;
pub const ENERGY_DRIFT: f64 = 1e-6;
/// Energy drift ratio under dt halving: `4 +- 20%`.
pub const ORDER_RATIO: f64 = 4.0;
pub const ORDER_RATIO_SPREAD: f64 = 0.2;
pub const STABILITY_ENVELOPE: f64 = 10.0;
/// `sup d(t) / delta` may vary by this factor across the perturbation sizes.
pub const LINEAR_SCALING: f64 = 2.0;
/// `sup d(t)` for unperturbed soliton data.
pub const PERSISTENCE: f64 = 1e-5;
/// `kappa_minus` against the Rayleigh quotient of the second `L-` eigenvector.
pub const COERCIVITY_CONSISTENCY: f64 = 0.2;
