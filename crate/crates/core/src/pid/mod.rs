//! Bivariate partial information decomposition of `I(Y; F, B)` into unique,
//! redundant and synergistic parts, built on the unique-information program
//!
//! ```text
//! Uni(Y; U | C) = min_{Q ∈ Δ_P} I_Q(Y; U | C),
//! Δ_P = { Q : Q_YU = P_YU, Q_YC = P_YC }.
//! ```
//!
//! The redundancy follows from `Rd = I(Y; F) − Uni(Y; F | B)` and the
//! synergy is whatever remains of `I(Y; F, B)`.

mod oracle;
mod solver;
mod tree;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::dist::{mutual_information, Axis, JointPmf3};
use crate::error::{Error, Result};

pub use oracle::brute_force_unique;

/// Step rule used between Frank–Wolfe gap evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Steps toward the linear-subproblem vertex with exact line search.
    FrankWolfe,
    /// Log-barrier Newton steps in the affine hull, falling back to
    /// Frank–Wolfe steps when the reduced problem is too large.
    #[default]
    BarrierNewton,
}

/// Starting point of the solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Initialization {
    /// `Q(f, b | y) = P(f | y) P(b | y)`.
    #[default]
    ProductCoupling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Stopping threshold on the Frank–Wolfe duality gap, in bits.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub algorithm: Algorithm,
    pub initialization: Initialization,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: 100_000,
            algorithm: Algorithm::default(),
            initialization: Initialization::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument("solver tolerance must be > 0".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max iterations must be >= 1".into()));
        }
        Ok(())
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveDiagnostics {
    pub iterations: usize,
    /// Final duality gap in bits; an upper bound on the suboptimality.
    pub gap: f64,
    pub converged: bool,
    pub wall_time: Duration,
}

/// A solution of the unique-information program.
#[derive(Debug, Clone)]
pub struct UniqueInformation {
    pub bits: f64,
    /// Minimizing coupling `Q*` in the original `(Y, F, B)` orientation.
    pub coupling: JointPmf3,
    pub diagnostics: SolveDiagnostics,
}

/// Computes `Uni(Y; unique | other)` where `unique` is `F` or `B`.
///
/// A run that hits the iteration cap is returned with
/// `diagnostics.converged == false` rather than as an error.
pub fn solve_unique_information(
    joint: &JointPmf3,
    unique: Axis,
    config: &SolverConfig,
) -> Result<UniqueInformation> {
    config.validate()?;
    let oriented = match unique {
        Axis::B => joint.clone(),
        Axis::F => joint.swap_sources(),
        Axis::Y => return Err(Error::InvalidArgument("unique axis must be F or B".into())),
    };
    let sol = solver::minimize(&oriented, config)?;
    let coupling = match unique {
        Axis::F => sol.coupling.swap_sources(),
        _ => sol.coupling,
    };
    Ok(UniqueInformation {
        bits: sol.value_bits,
        coupling,
        diagnostics: sol.diagnostics,
    })
}

/// The four decomposition terms with unclamped values.
#[derive(Debug, Clone)]
pub struct PidResult {
    pub uni_b_given_f: f64,
    pub uni_f_given_b: f64,
    pub redundancy: f64,
    pub synergy: f64,
    pub total_mi: f64,
    pub diagnostics_b: SolveDiagnostics,
    pub diagnostics_f: SolveDiagnostics,
}

/// Serialized form of a [`PidResult`]; negative round-off is clamped to 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidReport {
    pub uni_b_given_f: f64,
    pub uni_f_given_b: f64,
    pub redundancy: f64,
    pub synergy: f64,
    pub total_mi: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl PidResult {
    pub fn converged(&self) -> bool {
        self.diagnostics_b.converged && self.diagnostics_f.converged
    }

    pub fn terms(&self) -> [f64; 4] {
        [self.uni_b_given_f, self.uni_f_given_b, self.redundancy, self.synergy]
    }

    /// Output record; `scale` converts bits to the reporting unit
    /// (1 for bits, `ln 2` for nats).
    pub fn report_scaled(&self, scale: f64) -> PidReport {
        let c = |v: f64| v.max(0.0) * scale;
        PidReport {
            uni_b_given_f: c(self.uni_b_given_f),
            uni_f_given_b: c(self.uni_f_given_b),
            redundancy: c(self.redundancy),
            synergy: c(self.synergy),
            total_mi: c(self.total_mi),
            gap: self.diagnostics_b.gap.max(self.diagnostics_f.gap) * scale,
            iterations: self.diagnostics_b.iterations + self.diagnostics_f.iterations,
            converged: self.converged(),
        }
    }

    pub fn report(&self) -> PidReport {
        self.report_scaled(1.0)
    }
}

/// Full decomposition of `I(Y; F, B)`.
pub fn pid_decompose(joint: &JointPmf3, config: &SolverConfig) -> Result<PidResult> {
    let uni_b = solve_unique_information(joint, Axis::B, config)?;
    let uni_f = solve_unique_information(joint, Axis::F, config)?;
    let total_mi = mutual_information(&joint.versus_rest(Axis::Y));
    let mi_f = mutual_information(&joint.pair(Axis::Y, Axis::F));
    let redundancy = mi_f - uni_f.bits;
    let synergy = total_mi - uni_f.bits - uni_b.bits - redundancy;
    Ok(PidResult {
        uni_b_given_f: uni_b.bits,
        uni_f_given_b: uni_f.bits,
        redundancy,
        synergy,
        total_mi,
        diagnostics_b: uni_b.diagnostics,
        diagnostics_f: uni_f.diagnostics,
    })
}
