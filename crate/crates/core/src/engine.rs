//! Constraint matrices and variance lower bounds.
//!
//! For a finite-outcome model `p(x|θ)` and constraints `(g_k, λ_k)` the
//! bound on the variance of any estimator with biases `λ_k` is
//!
//! ```text
//! sup_a (aᵀλ)² / (aᵀCa),    C_kl = Σ_{x ∈ X₊} g_k(x) g_l(x) / p(x|θ).
//! ```
//!
//! The supremum equals `λᵀC⁺λ` on the range of `C` and diverges whenever
//! `λ` has a component in the kernel of `C`.  Numerically the kernel is
//! identified on the diagonally equilibrated matrix
//! `C̃ = D C D`, `D = diag(C_kk^{-1/2})`, which has unit diagonal and is
//! invariant under rescaling any single constraint `(g_k, λ_k) → (c g_k,
//! c λ_k)`.  Eigenvalue thresholds applied to the raw `C` would not be:
//! Barankin matrices for many repetitions have entries spanning dozens of
//! orders of magnitude, and a threshold relative to the largest raw
//! eigenvalue silently discards genuinely independent constraints.  The
//! substitution `a = D u` maps the supremum exactly onto `(C̃, Dλ)`, so the
//! bound value is unchanged.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::models::DiscreteModel;
use crate::{Error, Result};

/// Numerical thresholds used by the engine.  All are dimensionless except
/// `support`, which is an absolute probability cutoff.
#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    /// Outcomes with `p(x|θ) > support` form the effective support X₊.
    pub support: f64,
    /// Eigenvalues of the equilibrated matrix below `rank * max_eigenvalue`
    /// count as kernel directions.
    pub rank: f64,
    /// The bound diverges when the kernel component of the (equilibrated)
    /// bias vector exceeds `divergence * ‖λ‖`.
    pub divergence: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            support: 1e-14,
            rank: 1e-10,
            divergence: 1e-8,
        }
    }
}

/// Which family a constraint set was built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    /// Test functions are probability vectors at shifted parameter values.
    Barankin,
    /// Test functions are score-type derivative vectors at shifted values.
    Ecrb,
    /// Single derivative constraint at the true parameter.
    Crb,
    /// Anything else (user-supplied test functions or biases).
    Custom,
}

/// One linear bias constraint: a test function over the outcome set and
/// the bias value an estimator is required to attain against it.
#[derive(Clone, Debug)]
pub struct Constraint {
    /// Test function `g(x)`, indexed like the model outcomes.
    pub test_fn: Vec<f64>,
    /// Required bias `λ = Σ_x g(x) (θ_est(x) - ⟨θ_est⟩_θ)`.
    pub bias: f64,
}

/// A set of constraints anchored at a true parameter value.
#[derive(Clone, Debug)]
pub struct ConstraintSet {
    pub constraints: Vec<Constraint>,
    pub kind: ConstraintKind,
    /// Parameter value the bound is evaluated at.
    pub anchor_theta: f64,
}

impl ConstraintSet {
    /// Builds a set after checking it is non-empty and rectangular.
    pub fn new(constraints: Vec<Constraint>, kind: ConstraintKind, anchor_theta: f64) -> Result<Self> {
        if constraints.is_empty() {
            return Err(Error::InvalidParameter("empty constraint set".into()));
        }
        let len = constraints[0].test_fn.len();
        if constraints.iter().any(|c| c.test_fn.len() != len) {
            return Err(Error::DimensionMismatch(
                "constraints have differing outcome-space sizes".into(),
            ));
        }
        Ok(Self {
            constraints,
            kind,
            anchor_theta,
        })
    }

    /// Number of constraints.
    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    /// True when the set holds no constraints (never, by construction).
    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    /// Bias vector λ.
    pub fn biases(&self) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.constraints.iter().map(|c| c.bias))
    }
}

/// Whether a bound evaluated to a finite value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundStatus {
    Finite,
    Divergent,
}

/// Outcome of a bound evaluation, with conditioning diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct BoundResult {
    pub status: BoundStatus,
    /// Bound value; present exactly when `status == Finite`.
    pub value: Option<f64>,
    /// Number of retained eigendirections of the equilibrated matrix.
    pub rank: usize,
    /// Norm of the kernel component of the equilibrated bias vector.
    pub kernel_projection_norm: f64,
    /// Smallest retained eigenvalue of the equilibrated matrix
    /// (0 when nothing is retained).
    pub smallest_kept_singular_value: f64,
    /// Set when a test function carries weight on outcomes outside X₊.
    pub support_warning: bool,
}

/// Builds the constraint matrix `C_kl = Σ_{x∈X₊} g_k(x)g_l(x)/p(x|θ)` over
/// the effective support `X₊ = {x : p(x|θ) > τ_supp}`.  Returns the matrix
/// together with a flag marking test functions with weight outside X₊.
pub fn constraint_matrix(
    model: &DiscreteModel,
    set: &ConstraintSet,
    theta: f64,
    tol: &Tolerances,
) -> Result<(DMatrix<f64>, bool)> {
    let p = model.probs(theta)?;
    let d = model.num_outcomes();
    if set.constraints[0].test_fn.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "test functions have length {}, model has {} outcomes",
            set.constraints[0].test_fn.len(),
            d
        )));
    }
    let support: Vec<usize> = (0..d).filter(|&x| p[x] > tol.support).collect();
    if support.is_empty() {
        return Err(Error::DegenerateModel);
    }
    let mut warning = false;
    'outer: for c in &set.constraints {
        for x in 0..d {
            if p[x] <= tol.support && c.test_fn[x].abs() > tol.support {
                warning = true;
                break 'outer;
            }
        }
    }
    let n = set.len();
    let mut c = DMatrix::zeros(n, n);
    for k in 0..n {
        for l in k..n {
            let mut acc = 0.0;
            for &x in &support {
                acc += set.constraints[k].test_fn[x] * set.constraints[l].test_fn[x] / p[x];
            }
            c[(k, l)] = acc;
            c[(l, k)] = acc; // exact symmetry by mirroring
        }
    }
    Ok((c, warning))
}

/// Evaluates `sup_a (aᵀλ)²/(aᵀCa)` for a symmetric PSD matrix `C`.
///
/// The matrix is diagonally equilibrated before its eigendecomposition;
/// see the module docs for why.  Directions whose equilibrated eigenvalue
/// falls below `τ_rank` times the largest are treated as kernel.  If the
/// equilibrated bias vector has a kernel component larger than `τ_div`
/// times its norm the bound diverges; otherwise the value is the
/// pseudo-inverse quadratic form on the retained eigenspace.
pub fn evaluate_bound(
    c: &DMatrix<f64>,
    lambda: &DVector<f64>,
    tol: &Tolerances,
) -> Result<BoundResult> {
    let n = c.nrows();
    if c.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "constraint matrix is {}x{}, expected square",
            n,
            c.ncols()
        )));
    }
    if lambda.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "bias vector has length {}, matrix is {n}x{n}",
            lambda.len()
        )));
    }
    let scale = c.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    if !scale.is_finite() {
        return Err(Error::InvalidParameter(
            "constraint matrix has non-finite entries".into(),
        ));
    }
    for k in 0..n {
        for l in (k + 1)..n {
            if (c[(k, l)] - c[(l, k)]).abs() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::NotSymmetric);
            }
        }
    }
    for k in 0..n {
        if c[(k, k)] < 0.0 {
            return Err(Error::NotPositiveSemidefinite(c[(k, k)]));
        }
    }

    // Equilibrate: ct = D C D with D = diag(1/sqrt(C_kk)); zero-diagonal
    // constraints are exact kernel rows and keep unit scaling.
    let d: Vec<f64> = (0..n)
        .map(|k| {
            let v = c[(k, k)];
            if v > 0.0 {
                1.0 / v.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let mut ct = DMatrix::zeros(n, n);
    for k in 0..n {
        for l in k..n {
            let v = d[k] * d[l] * c[(k, l)];
            ct[(k, l)] = v;
            ct[(l, k)] = v;
        }
    }
    let lt = DVector::from_iterator(n, (0..n).map(|k| d[k] * lambda[k]));

    let eig = ct.symmetric_eigen();
    let max_eig = eig.eigenvalues.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v));
    let rank_cut = tol.rank * max_eig.max(0.0);
    if let Some(&bad) = eig
        .eigenvalues
        .iter()
        .find(|&&v| v < -(rank_cut + 1e-30))
    {
        return Err(Error::NotPositiveSemidefinite(bad));
    }

    let mut rank = 0;
    let mut kernel_sq = 0.0;
    let mut value = 0.0;
    let mut smallest_kept = f64::INFINITY;
    for (i, &ev) in eig.eigenvalues.iter().enumerate() {
        let proj = eig.eigenvectors.column(i).dot(&lt);
        if ev > rank_cut {
            rank += 1;
            smallest_kept = smallest_kept.min(ev);
            value += proj * proj / ev;
        } else {
            kernel_sq += proj * proj;
        }
    }
    let kernel_projection_norm = kernel_sq.sqrt();
    let divergent = kernel_projection_norm > tol.divergence * lt.norm();
    Ok(BoundResult {
        status: if divergent {
            BoundStatus::Divergent
        } else {
            BoundStatus::Finite
        },
        value: if divergent { None } else { Some(value) },
        rank,
        kernel_projection_norm,
        smallest_kept_singular_value: if rank == 0 { 0.0 } else { smallest_kept },
        support_warning: false,
    })
}

/// Convenience: builds the constraint matrix for `set` at `theta` and
/// evaluates the bound, propagating the support warning.
pub fn compute_bound(
    model: &DiscreteModel,
    set: &ConstraintSet,
    theta: f64,
    tol: &Tolerances,
) -> Result<BoundResult> {
    let (c, warning) = constraint_matrix(model, set, theta, tol)?;
    let mut result = evaluate_bound(&c, &set.biases(), tol)?;
    result.support_warning = warning;
    Ok(result)
}

/// Exact variance of a deterministic estimator `θ_est: outcome → value`
/// under `p(·|θ)`.
pub fn estimator_variance(model: &DiscreteModel, estimator: &[f64], theta: f64) -> Result<f64> {
    let p = model.probs(theta)?;
    if estimator.len() != p.len() {
        return Err(Error::DimensionMismatch(format!(
            "estimator has length {}, model has {} outcomes",
            estimator.len(),
            p.len()
        )));
    }
    let mean: f64 = p.iter().zip(estimator).map(|(&pi, &e)| pi * e).sum();
    Ok(p.iter()
        .zip(estimator)
        .map(|(&pi, &e)| pi * (e - mean) * (e - mean))
        .sum())
}

/// A bound tailored to a concrete estimator, together with the estimator's
/// exact variance for comparison.
#[derive(Clone, Debug)]
pub struct EstimatorBound {
    /// Biases the estimator realizes against the test functions.
    pub lambda: Vec<f64>,
    pub bound: BoundResult,
    pub variance: f64,
}

/// Builds Barankin-type test functions `g_k = p(·|θ_k)` at the given test
/// points, computes the biases the estimator actually attains,
/// `λ_k = Σ_{x∈X₊} g_k(x)(θ_est(x) - ⟨θ_est⟩_θ)`, and evaluates the bound.
/// The resulting value never exceeds the estimator's variance.
pub fn bound_from_estimator(
    model: &DiscreteModel,
    estimator: &[f64],
    test_points: &[f64],
    theta: f64,
    tol: &Tolerances,
) -> Result<EstimatorBound> {
    if test_points.is_empty() {
        return Err(Error::InvalidParameter("no test points given".into()));
    }
    let variance = estimator_variance(model, estimator, theta)?;
    let p = model.probs(theta)?;
    let mean: f64 = p.iter().zip(estimator).map(|(&pi, &e)| pi * e).sum();
    let support: Vec<usize> = (0..p.len()).filter(|&x| p[x] > tol.support).collect();
    if support.is_empty() {
        return Err(Error::DegenerateModel);
    }
    let mut constraints = Vec::with_capacity(test_points.len());
    for &tk in test_points {
        model.validate_test_point(tk)?;
        let g = model.probs(tk)?;
        let bias: f64 = support.iter().map(|&x| g[x] * (estimator[x] - mean)).sum();
        constraints.push(Constraint { test_fn: g, bias });
    }
    let set = ConstraintSet::new(constraints, ConstraintKind::Custom, theta)?;
    let bound = compute_bound(model, &set, theta, tol)?;
    Ok(EstimatorBound {
        lambda: set.constraints.iter().map(|c| c.bias).collect(),
        bound,
        variance,
    })
}
