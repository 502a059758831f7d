//! Run configuration: one JSON object per run. Unknown fields are
//! rejected so typos surface as config errors instead of silently
//! falling back to defaults.

use std::path::PathBuf;

use estbounds::engine::Tolerances;
use serde::Deserialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
#[clap(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Fig1,
    Fig2,
    Fig3,
    Bound,
    QuantumCheck,
}

/// Model family plus its parameters. The Poisson family carries the
/// anchor that sizes its truncated support.
#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    QubitBinomial { m: u32, r: f64 },
    Poisson { theta_anchor: f64, m: u32 },
    Kronecker { grid: Vec<f64> },
}

impl ModelSpec {
    pub fn build(&self) -> estbounds::Result<estbounds::models::DiscreteModel> {
        use estbounds::models::DiscreteModel;
        match self {
            ModelSpec::QubitBinomial { m, r } => DiscreteModel::qubit_binomial(*m, *r),
            ModelSpec::Poisson { theta_anchor, m } => DiscreteModel::poisson(*theta_anchor, *m),
            ModelSpec::Kronecker { grid } => DiscreteModel::kronecker(grid.clone()),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstraintSpec {
    Barankin { test_points: Vec<f64> },
    Ecrb { test_points: Vec<f64> },
    Crb,
}

#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub rank: Option<f64>,
    pub divergence: Option<f64>,
    pub quadrature_nodes: Option<usize>,
}

impl ToleranceOverrides {
    pub fn apply(&self, base: Tolerances) -> Tolerances {
        Tolerances {
            rank: self.rank.unwrap_or(base.rank),
            divergence: self.divergence.unwrap_or(base.divergence),
            ..base
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub model: Option<ModelSpec>,
    pub constraints: Option<ConstraintSpec>,
    /// Parameter value the bound is evaluated at (`bound` command).
    pub theta: Option<f64>,
    /// Parameter values swept by `fig3` and `quantum-check`.
    pub thetas: Option<Vec<f64>>,
    /// Upper end of the measurement sweep m = 1..=m_max (`fig1`, `fig2`).
    pub m_max: Option<u32>,
    /// Explicit measurement counts (`fig3`).
    pub m_values: Option<Vec<u32>>,
    pub n_samples: Option<usize>,
    pub seed: Option<u64>,
    /// Qubit visibility for the figure sweeps.
    pub r: Option<f64>,
    pub tolerances: Option<ToleranceOverrides>,
    /// Regularization strengths for `quantum-check` extrapolation.
    pub epsilons: Option<Vec<f64>>,
    /// Fock-space cutoff for `quantum-check`.
    pub truncation: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
}

pub fn load(path: &std::path::Path) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}
