//! Constraint families over test-point grids, and searches over test-point
//! placements: the two-point (Hammersley–Chapman–Robbins) optimization and
//! fixed-size sweeps.

use crate::engine::{
    compute_bound, BoundStatus, Constraint, ConstraintKind, ConstraintSet, Tolerances,
};
use crate::models::DiscreteModel;
use crate::{Error, Result};

/// A strictly increasing set of test points tied to a model's domain.
#[derive(Clone, Debug)]
pub struct TestPointGrid {
    points: Vec<f64>,
    includes_truth: bool,
}

impl TestPointGrid {
    /// Validates the points against the model domain.  `includes_truth` is
    /// set when the first point equals the anchor exactly.
    pub fn new(model: &DiscreteModel, points: Vec<f64>, anchor: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("empty test-point grid".into()));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "test points must be strictly increasing".into(),
            ));
        }
        for &p in &points {
            model.validate_test_point(p)?;
        }
        let includes_truth = points[0] == anchor;
        Ok(Self {
            points,
            includes_truth,
        })
    }

    /// Uniform grid `anchor, anchor + spacing, …` with `n` points.
    pub fn uniform_from(model: &DiscreteModel, anchor: f64, spacing: f64, n: usize) -> Result<Self> {
        if spacing <= 0.0 || !spacing.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grid spacing must be positive, got {spacing}"
            )));
        }
        let points = (0..n).map(|k| anchor + k as f64 * spacing).collect();
        Self::new(model, points, anchor)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn includes_truth(&self) -> bool {
        self.includes_truth
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Unbiasedness-at-test-points constraints: `g_k(x) = p(x|θ_k)`,
/// `λ_k = θ_k − θ`.
pub fn barankin_constraints(
    model: &DiscreteModel,
    grid: &TestPointGrid,
    theta: f64,
) -> Result<ConstraintSet> {
    let mut constraints = Vec::with_capacity(grid.len());
    for &tk in grid.points() {
        constraints.push(Constraint {
            test_fn: model.probs(tk)?,
            bias: tk - theta,
        });
    }
    ConstraintSet::new(constraints, ConstraintKind::Barankin, theta)
}

/// Unit-slope-at-test-points constraints: `g_k(x) = ∂_θ p(x|θ)|_{θ_k}`,
/// `λ_k = 1`.  The grid's first point is taken as the true parameter.
pub fn ecrb_constraints(model: &DiscreteModel, grid: &TestPointGrid) -> Result<ConstraintSet> {
    let mut constraints = Vec::with_capacity(grid.len());
    for &tk in grid.points() {
        constraints.push(Constraint {
            test_fn: model.dprobs(tk)?,
            bias: 1.0,
        });
    }
    ConstraintSet::new(constraints, ConstraintKind::Ecrb, grid.points()[0])
}

/// The single local unit-slope constraint; the bound it induces is the
/// reciprocal Fisher information `1/F(θ)`.
pub fn crb_constraint(model: &DiscreteModel, theta: f64) -> Result<ConstraintSet> {
    let set = ConstraintSet::new(
        vec![Constraint {
            test_fn: model.dprobs(theta)?,
            bias: 1.0,
        }],
        ConstraintKind::Crb,
        theta,
    )?;
    Ok(set)
}

/// Result of the two-point bound optimization.
#[derive(Clone, Copy, Debug)]
pub struct HcrBound {
    /// Supremum of the two-point bound over the searched interval.
    pub value: f64,
    /// Location of the second test point at the supremum.
    pub theta_opt: f64,
}

/// Exclusion margin around the true parameter, as a fraction of the search
/// interval: the two-point objective becomes 0/0 as θ′ → θ.
const THETA_MARGIN: f64 = 1e-6;

/// Number of coarse scan points for the two-point search (and for each
/// coordinate of a `n = 2` sweep, keeping the two searches identical).
const HCR_SCAN: usize = 64;

/// Width of the golden-section bracket at which refinement stops.
const REFINE_XTOL: f64 = 1e-10;

struct TwoPointObjective<'a> {
    model: &'a DiscreteModel,
    theta: f64,
    margin: f64,
    tol: &'a Tolerances,
}

impl TwoPointObjective<'_> {
    /// Finite bound value for the grid {θ, θ′}, or −∞ when the placement is
    /// excluded, divergent, or rank deficient.
    fn eval(&self, tp: f64) -> Result<f64> {
        if (tp - self.theta).abs() < self.margin || self.model.validate_test_point(tp).is_err() {
            return Ok(f64::NEG_INFINITY);
        }
        let set = two_point_set(self.model, self.theta, tp)?;
        let b = compute_bound(self.model, &set, self.theta, self.tol)?;
        Ok(match b.status {
            BoundStatus::Finite if b.rank == 2 => b.value.unwrap(),
            _ => f64::NEG_INFINITY,
        })
    }
}

fn two_point_set(model: &DiscreteModel, theta: f64, tp: f64) -> Result<ConstraintSet> {
    let constraints = vec![
        Constraint {
            test_fn: model.probs(theta)?,
            bias: 0.0,
        },
        Constraint {
            test_fn: model.probs(tp)?,
            bias: tp - theta,
        },
    ];
    ConstraintSet::new(constraints, ConstraintKind::Barankin, theta)
}

/// Golden-section maximization of `f` on `[lo, hi]`, folding every
/// evaluation into `best`.  `f` may return −∞ inside the bracket.
fn golden_max(
    lo: f64,
    hi: f64,
    best: &mut (f64, f64),
    mut f: impl FnMut(f64) -> Result<f64>,
) -> Result<()> {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (lo, hi);
    let mut x1 = hi - INVPHI * (hi - lo);
    let mut x2 = lo + INVPHI * (hi - lo);
    let track = |x: f64, v: f64, best: &mut (f64, f64)| {
        if v > best.1 {
            *best = (x, v);
        }
    };
    let mut f1 = f(x1)?;
    track(x1, f1, best);
    let mut f2 = f(x2)?;
    track(x2, f2, best);
    while hi - lo > REFINE_XTOL {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INVPHI * (hi - lo);
            f1 = f(x1)?;
            track(x1, f1, best);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INVPHI * (hi - lo);
            f2 = f(x2)?;
            track(x2, f2, best);
        }
    }
    Ok(())
}

/// Maximizes the two-test-point bound with grid {θ, θ′} over θ′ in the
/// search interval: a 64-point coarse scan followed by golden-section
/// refinement of the best bracket.  The returned value is the best bound
/// seen anywhere, so maxima at the interval ends are kept.
pub fn hcr_bound(
    model: &DiscreteModel,
    theta: f64,
    interval: (f64, f64),
    tol: &Tolerances,
) -> Result<HcrBound> {
    let (a, b) = interval;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "invalid search interval [{a}, {b}]"
        )));
    }
    model.validate_test_point(a)?;
    model.validate_test_point(b)?;
    let obj = TwoPointObjective {
        model,
        theta,
        margin: THETA_MARGIN * (b - a),
        tol,
    };
    let step = (b - a) / (HCR_SCAN - 1) as f64;
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    let mut best_idx = None;
    for i in 0..HCR_SCAN {
        let x = if i + 1 == HCR_SCAN { b } else { a + i as f64 * step };
        let v = obj.eval(x)?;
        if v > best.1 {
            best = (x, v);
            best_idx = Some(i);
        }
    }
    let Some(i) = best_idx else {
        return Err(Error::SearchFailed(
            "two-point bound diverged at every scanned test point".into(),
        ));
    };
    let lo = if i == 0 { a } else { a + (i - 1) as f64 * step };
    let hi = if i + 1 >= HCR_SCAN { b } else { a + (i + 1) as f64 * step };
    golden_max(lo, hi, &mut best, |x| obj.eval(x))?;
    Ok(HcrBound {
        value: best.1,
        theta_opt: best.0,
    })
}

/// Placement search strategy for [`barankin_sweep`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepStrategy {
    /// Exhaustive scan over combinations of a fixed coordinate grid.
    GridScan,
    /// Grid scan followed by cyclic golden-section refinement of each
    /// coordinate of the best placement.
    CoordinateRefine,
}

/// Best placement found by a sweep.
#[derive(Clone, Debug)]
pub struct SweepOptimum {
    pub value: f64,
    /// Full test-point set, the true parameter included as first entry.
    pub points: Vec<f64>,
}

/// Outcome of a fixed-n placement sweep.
#[derive(Clone, Debug)]
pub struct SweepResult {
    /// Best finite, well-conditioned placement; `None` when every placement
    /// diverged or was skipped (certain when the outcome count is below n).
    pub best: Option<SweepOptimum>,
    /// Placements evaluated in the scan phase.
    pub evaluated: usize,
    /// Placements whose bound diverged.
    pub divergent: usize,
    /// Placements with a finite value but an effectively rank-deficient
    /// constraint matrix; their values are unreliable and are not ranked.
    pub skipped: usize,
}

/// Scan-grid size per coordinate, chosen so the combination count stays
/// in the low thousands.
fn sweep_grid_size(n: usize) -> usize {
    match n {
        2 => HCR_SCAN,
        3 => 40,
        4 => 24,
        5 => 16,
        _ => 10,
    }
}

/// Maximizes the n-point bound (true parameter plus n−1 free test points in
/// the interval) over placements.  Deterministic: combinations are scanned
/// in lexicographic order and ties keep the earliest placement.
pub fn barankin_sweep(
    model: &DiscreteModel,
    theta: f64,
    n: usize,
    strategy: SweepStrategy,
    interval: (f64, f64),
    tol: &Tolerances,
) -> Result<SweepResult> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "sweep needs at least two test points, got {n}"
        )));
    }
    let (a, b) = interval;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "invalid search interval [{a}, {b}]"
        )));
    }
    model.validate_test_point(a)?;
    model.validate_test_point(b)?;
    let margin = THETA_MARGIN * (b - a);
    let k = sweep_grid_size(n);
    let step = (b - a) / (k - 1) as f64;
    let candidates: Vec<f64> = (0..k)
        .map(|i| if i + 1 == k { b } else { a + i as f64 * step })
        .filter(|x| (x - theta).abs() >= margin)
        .collect();
    let free = n - 1;
    if candidates.len() < free {
        return Err(Error::SearchFailed(format!(
            "scan grid has {} usable points, need {free}",
            candidates.len()
        )));
    }

    let eval = |pts: &[f64]| -> Result<f64> {
        let set = placement_set(model, theta, pts)?;
        let bound = compute_bound(model, &set, theta, tol)?;
        Ok(match bound.status {
            BoundStatus::Finite if bound.rank == n => bound.value.unwrap(),
            BoundStatus::Finite => f64::MIN, // rank deficient: count as skipped
            BoundStatus::Divergent => f64::NEG_INFINITY,
        })
    };

    let mut evaluated = 0usize;
    let mut divergent = 0usize;
    let mut skipped = 0usize;
    let mut best: Option<(Vec<f64>, f64)> = None;

    let mut idx: Vec<usize> = (0..free).collect();
    let mut pts = vec![0.0; free];
    loop {
        for (slot, &ci) in idx.iter().enumerate() {
            pts[slot] = candidates[ci];
        }
        evaluated += 1;
        let v = eval(&pts)?;
        if v == f64::NEG_INFINITY {
            divergent += 1;
        } else if v == f64::MIN {
            skipped += 1;
        } else if best.as_ref().map_or(true, |(_, bv)| v > *bv) {
            best = Some((pts.clone(), v));
        }
        // next combination in lexicographic order
        let mut advanced = false;
        for j in (0..free).rev() {
            if idx[j] + (free - j) < candidates.len() {
                idx[j] += 1;
                for l in (j + 1)..free {
                    idx[l] = idx[l - 1] + 1;
                }
                advanced = true;
                break;
            }
        }
        if !advanced {
            break;
        }
    }

    let Some((mut pts, mut value)) = best else {
        return Ok(SweepResult {
            best: None,
            evaluated,
            divergent,
            skipped,
        });
    };

    if strategy == SweepStrategy::CoordinateRefine {
        // Refine each coordinate inside a one-grid-step bracket around its
        // current value, keeping the placement strictly ordered.
        let sep = 1e-9 * (b - a);
        for _cycle in 0..2 {
            for j in 0..free {
                let lo = (pts[j] - step).max(if j == 0 { a } else { pts[j - 1] + sep });
                let hi = (pts[j] + step).min(if j + 1 < free { pts[j + 1] - sep } else { b });
                if !(lo < hi) {
                    continue;
                }
                let mut coord_best = (pts[j], value);
                let mut trial = pts.clone();
                golden_max(lo, hi, &mut coord_best, |x| {
                    if (x - theta).abs() < margin {
                        return Ok(f64::NEG_INFINITY);
                    }
                    trial[j] = x;
                    let v = eval(&trial)?;
                    Ok(if v == f64::MIN { f64::NEG_INFINITY } else { v })
                })?;
                pts[j] = coord_best.0;
                value = coord_best.1;
            }
        }
    }

    let mut points = Vec::with_capacity(n);
    points.push(theta);
    points.extend_from_slice(&pts);
    Ok(SweepResult {
        best: Some(SweepOptimum { value, points }),
        evaluated,
        divergent,
        skipped,
    })
}

fn placement_set(model: &DiscreteModel, theta: f64, free_points: &[f64]) -> Result<ConstraintSet> {
    let mut constraints = Vec::with_capacity(free_points.len() + 1);
    constraints.push(Constraint {
        test_fn: model.probs(theta)?,
        bias: 0.0,
    });
    for &tp in free_points {
        constraints.push(Constraint {
            test_fn: model.probs(tp)?,
            bias: tp - theta,
        });
    }
    ConstraintSet::new(constraints, ConstraintKind::Barankin, theta)
}

/// Smallest spacing of a uniform grid with `d` points on `[a, b]`:
/// `(b − a)/(d − 1)`.
pub fn min_grid_spacing(a: f64, b: f64, d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!(
            "grid needs at least two points, got {d}"
        )));
    }
    if !(b > a) {
        return Err(Error::InvalidParameter(format!("empty interval [{a}, {b}]")));
    }
    Ok((b - a) / (d - 1) as f64)
}

/// Spacing of the finest resolvable uniform grid after `m` repetitions:
/// `(b − a)/m`.
pub fn min_grid_spacing_iid(a: f64, b: f64, m: u32) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidParameter("need at least one repetition".into()));
    }
    if !(b > a) {
        return Err(Error::InvalidParameter(format!("empty interval [{a}, {b}]")));
    }
    Ok((b - a) / m as f64)
}
