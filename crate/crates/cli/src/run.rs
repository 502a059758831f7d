//! Command implementations. Each returns plain rows; serialization and
//! destination handling live in `output`.

use estbounds::bayes::{self, DEFAULT_QUADRATURE_NODES};
use estbounds::constraints::{barankin_constraints, crb_constraint, ecrb_constraints, TestPointGrid};
use estbounds::engine::{compute_bound, BoundResult, BoundStatus, Tolerances};
use estbounds::models::DiscreteModel;
use estbounds::quantum::{
    coherent_state, q_ecrb_matrix, qfi_pure, richardson_limit, CoherentEpsilonFamily,
    DEFAULT_FOCK_TRUNCATION,
};
use estbounds::reference::{poisson_barankin, poisson_crb, poisson_mle_variance, qubit_crb};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ConstraintSpec, RunConfig};
use crate::CliError;

/// Truth and spacing of the figure sweeps.
const FIG_THETA: f64 = std::f64::consts::FRAC_PI_4;
const FIG_SPACING: f64 = std::f64::consts::FRAC_PI_6;
const FIG_GRID_SIZES: [usize; 3] = [3, 4, 5];
const DEFAULT_M_MAX: u32 = 30;
const DEFAULT_FIG3_M: [u32; 8] = [1, 2, 5, 10, 20, 50, 100, 200];
const DEFAULT_FIG3_THETAS: [f64; 2] = [0.1, 0.7];
const DEFAULT_N_SAMPLES: usize = 200;
const DEFAULT_QUANTUM_THETAS: [f64; 4] = [0.1, 0.3, 0.5, 0.9];
const DEFAULT_EPSILONS: [f64; 3] = [1e-3, 1e-4, 1e-5];

#[derive(Debug, Serialize)]
pub struct FigRow {
    pub m: u32,
    pub n: usize,
    pub status: BoundStatus,
    /// Empty on divergent cells.
    pub bound: Option<f64>,
    pub crb: f64,
    pub rank: usize,
    pub kernel_projection_norm: f64,
}

#[derive(Debug, Serialize)]
pub struct Fig3Row {
    pub theta: f64,
    pub m: u32,
    pub barankin_ratio: f64,
    pub mle_ratio: f64,
    pub bayes_ratio: f64,
    pub bayes_stderr: f64,
}

#[derive(Debug, Serialize)]
pub struct QuantumRow {
    pub theta: f64,
    pub qfi: f64,
    pub closed_form: f64,
    pub extrapolated: f64,
}

fn numerical(e: estbounds::Error) -> CliError {
    use estbounds::Error::*;
    match e {
        InvalidParameter(_) | DimensionMismatch(_) => CliError::Config(e.to_string()),
        _ => CliError::Numerical(e.to_string()),
    }
}

fn visibility(cfg: &RunConfig, flag_r: Option<f64>) -> f64 {
    flag_r.or(cfg.r).unwrap_or(1.0)
}

fn sweep<F>(cfg: &RunConfig, flag_r: Option<f64>, constrain: F) -> Result<Vec<FigRow>, CliError>
where
    F: Fn(&DiscreteModel, &TestPointGrid) -> estbounds::Result<estbounds::engine::ConstraintSet>
        + Sync,
{
    let r = visibility(cfg, flag_r);
    let m_max = cfg.m_max.unwrap_or(DEFAULT_M_MAX);
    let tol = cfg.tolerances.unwrap_or_default().apply(Tolerances::default());
    let cells: Vec<(u32, usize)> = (1..=m_max)
        .flat_map(|m| FIG_GRID_SIZES.iter().map(move |&n| (m, n)))
        .collect();
    let mut rows = cells
        .into_par_iter()
        .map(|(m, n)| -> Result<FigRow, CliError> {
            let model = DiscreteModel::qubit_binomial(m, r).map_err(numerical)?;
            let grid =
                TestPointGrid::uniform_from(&model, FIG_THETA, FIG_SPACING, n).map_err(numerical)?;
            let set = constrain(&model, &grid).map_err(numerical)?;
            let b = compute_bound(&model, &set, FIG_THETA, &tol).map_err(numerical)?;
            Ok(FigRow {
                m,
                n,
                status: b.status,
                bound: b.value,
                crb: qubit_crb(FIG_THETA, m, r).map_err(numerical)?,
                rank: b.rank,
                kernel_projection_norm: b.kernel_projection_norm,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    rows.sort_by(|a, b| (a.m, a.n).cmp(&(b.m, b.n)));
    Ok(rows)
}

pub fn fig1(cfg: &RunConfig, flag_r: Option<f64>) -> Result<Vec<FigRow>, CliError> {
    sweep(cfg, flag_r, |model, grid| {
        barankin_constraints(model, grid, FIG_THETA)
    })
}

pub fn fig2(cfg: &RunConfig, flag_r: Option<f64>) -> Result<Vec<FigRow>, CliError> {
    sweep(cfg, flag_r, ecrb_constraints)
}

pub fn fig3(cfg: &RunConfig, flag_seed: Option<u64>) -> Result<Vec<Fig3Row>, CliError> {
    let seed = flag_seed.or(cfg.seed).unwrap_or(0);
    let n_samples = cfg.n_samples.unwrap_or(DEFAULT_N_SAMPLES);
    let nodes = cfg
        .tolerances
        .unwrap_or_default()
        .quadrature_nodes
        .unwrap_or(DEFAULT_QUADRATURE_NODES);
    let mut thetas = cfg.thetas.clone().unwrap_or(DEFAULT_FIG3_THETAS.to_vec());
    thetas.sort_by(|a, b| a.partial_cmp(b).expect("theta grid contains NaN"));
    let mut ms = cfg.m_values.clone().unwrap_or(DEFAULT_FIG3_M.to_vec());
    ms.sort_unstable();
    let mut rows = Vec::with_capacity(thetas.len() * ms.len());
    for &theta in &thetas {
        for &m in &ms {
            // Each cell reuses the user seed; samples within a cell are
            // split across generator streams, so any single cell is
            // reproducible in isolation.
            let run = bayes::fig3_protocol_with_nodes(theta, m, n_samples, seed, nodes)
                .map_err(numerical)?;
            let crb = poisson_crb(theta, m).map_err(numerical)?;
            rows.push(Fig3Row {
                theta,
                m,
                barankin_ratio: poisson_barankin(theta, m).map_err(numerical)? / crb,
                mle_ratio: poisson_mle_variance(theta, m).map_err(numerical)? / crb,
                bayes_ratio: run.ratio_mean,
                bayes_stderr: run.ratio_stderr,
            });
        }
    }
    Ok(rows)
}

pub fn bound(cfg: &RunConfig) -> Result<BoundResult, CliError> {
    let model = cfg
        .model
        .as_ref()
        .ok_or_else(|| CliError::Config("`bound` requires a model spec".into()))?
        .build()
        .map_err(numerical)?;
    let theta = cfg
        .theta
        .ok_or_else(|| CliError::Config("`bound` requires theta".into()))?;
    let spec = cfg
        .constraints
        .as_ref()
        .ok_or_else(|| CliError::Config("`bound` requires a constraint spec".into()))?;
    let tol = cfg.tolerances.unwrap_or_default().apply(Tolerances::default());
    let set = match spec {
        ConstraintSpec::Barankin { test_points } => {
            let grid = TestPointGrid::new(&model, test_points.clone(), theta).map_err(numerical)?;
            barankin_constraints(&model, &grid, theta).map_err(numerical)?
        }
        ConstraintSpec::Ecrb { test_points } => {
            let grid = TestPointGrid::new(&model, test_points.clone(), theta).map_err(numerical)?;
            ecrb_constraints(&model, &grid).map_err(numerical)?
        }
        ConstraintSpec::Crb => crb_constraint(&model, theta).map_err(numerical)?,
    };
    compute_bound(&model, &set, theta, &tol).map_err(numerical)
}

pub fn quantum_check(cfg: &RunConfig) -> Result<Vec<QuantumRow>, CliError> {
    let truncation = cfg.truncation.unwrap_or(DEFAULT_FOCK_TRUNCATION);
    let epsilons = cfg.epsilons.clone().unwrap_or(DEFAULT_EPSILONS.to_vec());
    let mut thetas = cfg
        .thetas
        .clone()
        .unwrap_or(DEFAULT_QUANTUM_THETAS.to_vec());
    thetas.sort_by(|a, b| a.partial_cmp(b).expect("theta grid contains NaN"));
    thetas
        .iter()
        .map(|&theta| {
            let psi = coherent_state(theta, truncation).map_err(numerical)?;
            let qfi = qfi_pure(&psi).map_err(numerical)?;
            let samples = epsilons
                .iter()
                .map(|&epsilon| {
                    let family = CoherentEpsilonFamily {
                        epsilon,
                        truncation,
                    };
                    Ok((
                        epsilon,
                        q_ecrb_matrix(&family, &[theta], theta).map_err(numerical)?[(0, 0)],
                    ))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            Ok(QuantumRow {
                theta,
                qfi,
                closed_form: -1.0 / (theta * theta * theta.ln()),
                extrapolated: richardson_limit(&samples).map_err(numerical)?,
            })
        })
        .collect()
}
