//! Finite-outcome measurement models.
//!
//! Every model exposes an ordered outcome set `{0, …, num_outcomes()-1}`,
//! a probability mass function `p(x|θ)` and its analytic θ-derivative.
//! Compound models for `m` repeated single-shot measurements are expressed
//! through a sufficient statistic so the outcome set stays polynomial in
//! `m` (a count for the spin model, a total count for the Poisson model).

use serde::Serialize;

use crate::{Error, Result};

/// Tail budget used when sizing the Poisson truncation: the retained mass
/// is `1 - tail` with `tail < 1e-12` everywhere on the working θ-range.
const POISSON_TAIL_BOUND: f64 = 1e-12;

/// A measurement model with finitely many outcomes and one real parameter.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DiscreteModel {
    /// `m`-shot spin-½ phase model with Bloch length `r`, summarized by the
    /// number of `1` outcomes: `p(k|θ) = C(m,k) q₁ᵏ q₀^{m-k}` with
    /// `q₁ = (1 - r cos θ)/2`, `q₀ = (1 + r cos θ)/2`, `θ ∈ [0, π]`.
    QubitBinomial { m: u32, r: f64 },
    /// Total count of `m` Poisson measurements with mean `μ = -ln θ` each:
    /// `p(s|θ) = (mμ)^s θ^m / s!`, `θ ∈ (0, 1)`, truncated at `s_max`.
    /// `theta_anchor` is the smallest θ the truncation was sized for.
    Poisson {
        m: u32,
        theta_anchor: f64,
        s_max: u32,
    },
    /// Deterministic pointer model on a parameter grid: `p(x|θ) = δ_{x,k(θ)}`
    /// where `k(θ)` is the index of the grid point nearest θ.  The
    /// θ-derivative vanishes identically.
    Kronecker { grid: Vec<f64> },
}

impl DiscreteModel {
    /// Spin binomial model. Requires `m ≥ 1` and `r ∈ (0, 1]`.
    pub fn qubit_binomial(m: u32, r: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("qubit model needs m >= 1".into()));
        }
        if !(r > 0.0 && r <= 1.0) || !r.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Bloch length r must lie in (0, 1], got {r}"
            )));
        }
        Ok(Self::QubitBinomial { m, r })
    }

    /// Poisson total-count model. `theta` anchors the truncation: the
    /// retained support holds at least `1 - 1e-12` of the mass for every
    /// θ in `[theta, 1)`. Requires `m ≥ 1` and `theta ∈ (0, 1)`.
    pub fn poisson(theta: f64, m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("Poisson model needs m >= 1".into()));
        }
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "Poisson anchor theta must lie in (0, 1), got {theta}"
            )));
        }
        let mean_max = f64::from(m) * (-theta.ln());
        // Mean plus a 12-sigma-and-slack margin keeps the tail far below
        // the 1e-12 budget for every mean up to mean_max.
        let s_max = (mean_max + 12.0 * mean_max.sqrt() + 30.0).ceil();
        debug_assert!(poisson_tail_below(mean_max, s_max, POISSON_TAIL_BOUND));
        Ok(Self::Poisson {
            m,
            theta_anchor: theta,
            s_max: s_max as u32,
        })
    }

    /// Deterministic pointer model on a strictly increasing grid.
    pub fn kronecker(grid: Vec<f64>) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::InvalidParameter("empty Kronecker grid".into()));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidParameter(
                "Kronecker grid must be finite and strictly increasing".into(),
            ));
        }
        Ok(Self::Kronecker { grid })
    }

    /// Number of outcomes in the ordered outcome set.
    pub fn num_outcomes(&self) -> usize {
        match self {
            Self::QubitBinomial { m, .. } => *m as usize + 1,
            Self::Poisson { s_max, .. } => *s_max as usize + 1,
            Self::Kronecker { grid } => grid.len(),
        }
    }

    /// Closed θ-interval on which the model is defined.  The Poisson
    /// family is defined on `(0, 1]` (open at 0); `θ = 1` is the
    /// zero-mean limit, valid as a test point.
    pub fn theta_domain(&self) -> (f64, f64) {
        match self {
            Self::QubitBinomial { .. } => (0.0, std::f64::consts::PI),
            Self::Poisson { .. } => (0.0, 1.0),
            Self::Kronecker { grid } => (grid[0], grid[grid.len() - 1]),
        }
    }

    /// Checks that θ is a valid evaluation point for `prob`/`dprob`.
    pub fn validate_theta(&self, theta: f64) -> Result<()> {
        if !theta.is_finite() {
            return Err(Error::InvalidParameter("theta is not finite".into()));
        }
        let ok = match self {
            Self::QubitBinomial { .. } => (0.0..=std::f64::consts::PI).contains(&theta),
            Self::Poisson { .. } => theta > 0.0 && theta <= 1.0,
            Self::Kronecker { grid } => theta >= grid[0] && theta <= grid[grid.len() - 1],
        };
        if ok {
            Ok(())
        } else {
            let (lo, hi) = self.theta_domain();
            Err(Error::InvalidParameter(format!(
                "theta = {theta} outside the model domain [{lo}, {hi}]"
            )))
        }
    }

    /// Checks that θ may serve as a test point.  For the smooth families
    /// this is the domain check; the pointer model additionally requires
    /// an exact grid match, since off-grid test functions are meaningless
    /// for a deterministic model.
    pub fn validate_test_point(&self, theta: f64) -> Result<()> {
        self.validate_theta(theta)?;
        if let Self::Kronecker { grid } = self {
            let span = grid[grid.len() - 1] - grid[0];
            let tol = 1e-12 * span.max(1.0);
            if !grid.iter().any(|g| (g - theta).abs() <= tol) {
                return Err(Error::InvalidParameter(format!(
                    "test point {theta} is not on the Kronecker grid"
                )));
            }
        }
        Ok(())
    }

    /// Probability vector `p(·|θ)` over the ordered outcome set.
    pub fn probs(&self, theta: f64) -> Result<Vec<f64>> {
        self.validate_theta(theta)?;
        Ok(match self {
            Self::QubitBinomial { m, r } => qubit_probs(*m, *r, theta),
            Self::Poisson { m, s_max, .. } => poisson_probs(*m, *s_max, theta),
            Self::Kronecker { grid } => {
                let k = nearest_index(grid, theta);
                let mut p = vec![0.0; grid.len()];
                p[k] = 1.0;
                p
            }
        })
    }

    /// Analytic derivative vector `∂_θ p(·|θ)`.
    pub fn dprobs(&self, theta: f64) -> Result<Vec<f64>> {
        self.validate_theta(theta)?;
        Ok(match self {
            Self::QubitBinomial { m, r } => qubit_dprobs(*m, *r, theta),
            Self::Poisson { m, s_max, .. } => poisson_dprobs(*m, *s_max, theta),
            Self::Kronecker { grid } => vec![0.0; grid.len()],
        })
    }

    /// Single-outcome probability `p(x|θ)`.
    pub fn prob(&self, x: usize, theta: f64) -> Result<f64> {
        self.check_outcome(x)?;
        Ok(self.probs(theta)?[x])
    }

    /// Single-outcome derivative `∂_θ p(x|θ)`.
    pub fn dprob(&self, x: usize, theta: f64) -> Result<f64> {
        self.check_outcome(x)?;
        Ok(self.dprobs(theta)?[x])
    }

    fn check_outcome(&self, x: usize) -> Result<()> {
        if x < self.num_outcomes() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "outcome index {x} out of range (model has {} outcomes)",
                self.num_outcomes()
            )))
        }
    }
}

fn nearest_index(grid: &[f64], theta: f64) -> usize {
    let mut best = 0;
    let mut dist = f64::INFINITY;
    for (i, g) in grid.iter().enumerate() {
        let d = (g - theta).abs();
        if d < dist {
            dist = d;
            best = i;
        }
    }
    best
}

fn qubit_probs(m: u32, r: f64, theta: f64) -> Vec<f64> {
    let q1 = (1.0 - r * theta.cos()) / 2.0;
    let q0 = (1.0 + r * theta.cos()) / 2.0;
    let mut p = Vec::with_capacity(m as usize + 1);
    let mut binom = 1.0;
    for k in 0..=m {
        if k > 0 {
            binom *= f64::from(m - k + 1) / f64::from(k);
        }
        p.push(binom * q1.powi(k as i32) * q0.powi((m - k) as i32));
    }
    p
}

fn qubit_dprobs(m: u32, r: f64, theta: f64) -> Vec<f64> {
    let q1 = (1.0 - r * theta.cos()) / 2.0;
    let q0 = (1.0 + r * theta.cos()) / 2.0;
    let dq1 = r * theta.sin() / 2.0;
    let dq0 = -r * theta.sin() / 2.0;
    let mut dp = Vec::with_capacity(m as usize + 1);
    let mut binom = 1.0;
    for k in 0..=m {
        if k > 0 {
            binom *= f64::from(m - k + 1) / f64::from(k);
        }
        // Product rule with explicit guards so q = 0 never meets a
        // negative power.
        let t1 = if k == 0 {
            0.0
        } else {
            f64::from(k) * q1.powi(k as i32 - 1) * dq1 * q0.powi((m - k) as i32)
        };
        let t2 = if k == m {
            0.0
        } else {
            q1.powi(k as i32) * f64::from(m - k) * q0.powi((m - k) as i32 - 1) * dq0
        };
        dp.push(binom * (t1 + t2));
    }
    dp
}

fn poisson_probs(m: u32, s_max: u32, theta: f64) -> Vec<f64> {
    let mean = f64::from(m) * (-theta.ln());
    let mut p = Vec::with_capacity(s_max as usize + 1);
    // Log-space evaluation keeps large-mean vectors finite; entries that
    // underflow to zero sit far below the support threshold anyway.
    let ln_mean = if mean > 0.0 { mean.ln() } else { f64::NEG_INFINITY };
    let mut ln_fact = 0.0;
    for s in 0..=s_max {
        if s > 0 {
            ln_fact += f64::from(s).ln();
        }
        let ln_p = if s == 0 {
            -mean
        } else {
            f64::from(s) * ln_mean - mean - ln_fact
        };
        p.push(ln_p.exp());
    }
    p
}

fn poisson_dprobs(m: u32, s_max: u32, theta: f64) -> Vec<f64> {
    let mf = f64::from(m);
    let mu = -theta.ln();
    let p = poisson_probs(m, s_max, theta);
    let mut dp = Vec::with_capacity(p.len());
    if mu == 0.0 {
        // θ = 1 limit: p(s|θ) → δ_{s0}; the derivative limits are
        // ∂p(0) = m, ∂p(1) = -m, 0 beyond.
        for s in 0..=s_max {
            dp.push(match s {
                0 => mf,
                1 => -mf,
                _ => 0.0,
            });
        }
    } else {
        for (s, &ps) in p.iter().enumerate() {
            dp.push(ps * (mf * mu - s as f64) / (mu * theta));
        }
    }
    dp
}

fn poisson_tail_below(mean: f64, s_max: f64, budget: f64) -> bool {
    // Chernoff: P(S > s) <= exp(-mean) (e*mean/s)^s for s > mean.
    if mean == 0.0 {
        return true;
    }
    let s = s_max;
    let ln_tail = -mean + s * (1.0 + (mean / s).ln());
    ln_tail < budget.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const PI: f64 = std::f64::consts::PI;

    #[test]
    fn qubit_single_shot_probabilities() {
        let m = DiscreteModel::qubit_binomial(1, 1.0).unwrap();
        let p = m.probs(PI / 4.0).unwrap();
        // q0 = (1 + sqrt(2)/2)/2 at theta = pi/4, r = 1
        assert_relative_eq!(p[0], 0.8535533905932737, max_relative = 1e-15);
        assert_relative_eq!(p[1], 1.0 - 0.8535533905932737, max_relative = 1e-12);
    }

    #[test]
    fn qubit_compound_counts_ones() {
        // p(0 | pi/3, m=3, r=1) = q0^3 = (3/4)^3 = 27/64
        let m = DiscreteModel::qubit_binomial(3, 1.0).unwrap();
        let p = m.probs(PI / 3.0).unwrap();
        assert_relative_eq!(p[0], 27.0 / 64.0, max_relative = 1e-14);
    }

    #[test]
    fn poisson_low_counts() {
        // theta = 1/e, m = 1: mean 1, p(s) = e^-1 / s!
        let m = DiscreteModel::poisson((-1.0f64).exp(), 1).unwrap();
        let p = m.probs((-1.0f64).exp()).unwrap();
        let e1 = (-1.0f64).exp();
        assert_relative_eq!(p[0], e1, max_relative = 1e-14);
        assert_relative_eq!(p[1], e1, max_relative = 1e-14);
        assert_relative_eq!(p[2], e1 / 2.0, max_relative = 1e-14);
        // p(0|theta) = theta^m
        let m2 = DiscreteModel::poisson(0.5, 2).unwrap();
        assert_relative_eq!(m2.prob(0, 0.5).unwrap(), 0.25, max_relative = 1e-14);
    }

    #[test]
    fn poisson_zero_mean_limit() {
        let m = DiscreteModel::poisson(0.5, 2).unwrap();
        let p = m.probs(1.0).unwrap();
        assert_eq!(p[0], 1.0);
        assert!(p[1..].iter().all(|&x| x == 0.0));
        let dp = m.dprobs(1.0).unwrap();
        assert_eq!(dp[0], 2.0);
        assert_eq!(dp[1], -2.0);
        assert_eq!(dp[2], 0.0);
    }

    #[test]
    fn kronecker_is_deterministic() {
        let m = DiscreteModel::kronecker(vec![0.0, 0.5, 1.0]).unwrap();
        assert_eq!(m.probs(0.5).unwrap(), vec![0.0, 1.0, 0.0]);
        assert_eq!(m.probs(0.62).unwrap(), vec![0.0, 1.0, 0.0]); // nearest
        assert_eq!(m.dprobs(0.5).unwrap(), vec![0.0; 3]);
        assert!(m.validate_test_point(0.5).is_ok());
        assert!(m.validate_test_point(0.62).is_err());
    }

    #[test]
    fn probabilities_normalize_on_a_theta_grid() {
        let qubit = DiscreteModel::qubit_binomial(7, 0.9).unwrap();
        for i in 1..100 {
            let th = PI * i as f64 / 100.0;
            let sum: f64 = qubit.probs(th).unwrap().iter().sum();
            assert!((sum - 1.0).abs() < 1e-12, "qubit sum {sum} at {th}");
        }
        let pois = DiscreteModel::poisson(0.05, 3).unwrap();
        for i in 1..100 {
            let th = 0.05 + 0.94 * i as f64 / 100.0;
            let sum: f64 = pois.probs(th).unwrap().iter().sum();
            // Truncation keeps the tail below 1e-12.
            assert!((sum - 1.0).abs() < 1e-12, "poisson sum {sum} at {th}");
        }
    }

    #[test]
    fn derivatives_sum_to_zero() {
        let qubit = DiscreteModel::qubit_binomial(6, 1.0).unwrap();
        let pois = DiscreteModel::poisson(0.1, 4).unwrap();
        for i in 1..50 {
            let th = PI * i as f64 / 50.0;
            let s: f64 = qubit.dprobs(th).unwrap().iter().sum();
            assert!(s.abs() < 1e-10);
        }
        for i in 1..50 {
            let th = 0.1 + 0.89 * i as f64 / 50.0;
            let s: f64 = pois.dprobs(th).unwrap().iter().sum();
            assert!(s.abs() < 1e-10);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let models = [
            DiscreteModel::qubit_binomial(5, 0.8).unwrap(),
            DiscreteModel::poisson(0.1, 3).unwrap(),
        ];
        for model in &models {
            let (lo, hi) = model.theta_domain();
            for i in 1..20 {
                let th = lo + (hi - lo) * i as f64 / 20.0;
                // Derivatives steepen like 1/theta near the lower edge of the
                // Poisson domain; scale the step to keep truncation error down.
                let h = 1e-5 * th;
                if th - h <= lo || th + h >= hi {
                    continue;
                }
                let plus = model.probs(th + h).unwrap();
                let minus = model.probs(th - h).unwrap();
                let dp = model.dprobs(th).unwrap();
                for x in 0..model.num_outcomes() {
                    let fd = (plus[x] - minus[x]) / (2.0 * h);
                    let scale = dp[x].abs().max(1e-8);
                    assert!(
                        (fd - dp[x]).abs() / scale < 1e-6,
                        "x={x} th={th} fd={fd} dp={}",
                        dp[x]
                    );
                }
            }
        }
    }

    #[test]
    fn constructor_rejects_bad_parameters() {
        assert!(DiscreteModel::qubit_binomial(0, 1.0).is_err());
        assert!(DiscreteModel::qubit_binomial(1, 0.0).is_err());
        assert!(DiscreteModel::qubit_binomial(1, 1.5).is_err());
        assert!(DiscreteModel::poisson(0.0, 1).is_err());
        assert!(DiscreteModel::poisson(1.0, 1).is_err());
        assert!(DiscreteModel::kronecker(vec![]).is_err());
        assert!(DiscreteModel::kronecker(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn domain_checks() {
        let q = DiscreteModel::qubit_binomial(2, 1.0).unwrap();
        assert!(q.probs(-0.1).is_err());
        assert!(q.probs(PI + 0.1).is_err());
        let p = DiscreteModel::poisson(0.1, 1).unwrap();
        assert!(p.probs(0.0).is_err());
        assert!(p.probs(1.0).is_ok()); // zero-mean limit allowed
        assert!(p.probs(1.1).is_err());
    }

    #[test]
    fn serialized_description_names_the_family() {
        let m = DiscreteModel::poisson(0.1, 2).unwrap();
        let js = serde_json::to_string(&m).unwrap();
        assert!(js.contains("\"family\":\"poisson\""), "{js}");
        assert!(js.contains("\"s_max\""), "{js}");
    }
}
