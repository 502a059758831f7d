//! Randomized structural properties of the bound engine. Each property
//! encodes an exact mathematical fact, so failures are real bugs rather
//! than tolerance noise; tolerances below only absorb double-precision
//! rounding.

use estbounds::constraints::{barankin_constraints, crb_constraint, ecrb_constraints, TestPointGrid};
use estbounds::engine::{bound_from_estimator, compute_bound, constraint_matrix, BoundStatus, Tolerances};
use estbounds::models::DiscreteModel;
use estbounds::reference;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

const PI: f64 = std::f64::consts::PI;

/// Strictly increasing test points above `theta`, inside (theta, hi).
fn points_above(theta: f64, fractions: &[f64], hi: f64) -> Vec<f64> {
    let mut fs: Vec<f64> = fractions.to_vec();
    fs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    fs.dedup_by(|a, b| (*a - *b).abs() < 0.02);
    fs.iter().map(|f| theta + f * (hi - theta)).collect()
}

proptest! {
    // Any in-range estimator's variance is an upper envelope for the bound
    // assembled from its own constraint values.
    #[test]
    fn bound_never_exceeds_estimator_variance_qubit(
        m in 1u32..=5,
        r in 0.3f64..1.0,
        theta in 0.3f64..2.8,
        fractions in prop::collection::vec(0.02f64..0.98, 1..=3),
        est_seed in any::<u64>(),
    ) {
        let model = DiscreteModel::qubit_binomial(m, r).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(est_seed);
        let estimator: Vec<f64> =
            (0..model.num_outcomes()).map(|_| rng.random_range(-1.0..2.0)).collect();
        let mut pts = vec![theta];
        pts.extend(points_above(theta, &fractions, PI - 0.01));
        let tol = Tolerances::default();
        let out = bound_from_estimator(&model, &estimator, &pts, theta, &tol).unwrap();
        if let Some(v) = out.bound.value {
            prop_assert!(
                v <= out.variance * (1.0 + 1e-7) + 1e-12,
                "bound {v} exceeds variance {}", out.variance
            );
        }
    }

    #[test]
    fn bound_never_exceeds_estimator_variance_poisson(
        m in 1u32..=4,
        theta in 0.15f64..0.85,
        fractions in prop::collection::vec(0.02f64..0.98, 1..=3),
        est_seed in any::<u64>(),
    ) {
        let model = DiscreteModel::poisson(theta, m).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(est_seed);
        let estimator: Vec<f64> =
            (0..model.num_outcomes()).map(|_| rng.random_range(-1.0..2.0)).collect();
        let mut pts = vec![theta];
        pts.extend(points_above(theta, &fractions, 0.999));
        let tol = Tolerances::default();
        let out = bound_from_estimator(&model, &estimator, &pts, theta, &tol).unwrap();
        if let Some(v) = out.bound.value {
            prop_assert!(
                v <= out.variance * (1.0 + 1e-7) + 1e-12,
                "bound {v} exceeds variance {}", out.variance
            );
        }
    }

    // Rescaling one constraint (values and bias together, any sign or
    // magnitude) must leave status and value untouched.
    #[test]
    fn per_constraint_rescaling_is_invariant(
        m in 1u32..=5,
        theta in 0.4f64..1.2,
        spacing in 0.15f64..0.5,
        n in 2usize..=3,
        exp in -6.0f64..6.0,
        negate in any::<bool>(),
        which in any::<prop::sample::Index>(),
    ) {
        let model = DiscreteModel::qubit_binomial(m, 1.0).unwrap();
        let grid = TestPointGrid::uniform_from(&model, theta, spacing, n).unwrap();
        let set = barankin_constraints(&model, &grid, theta).unwrap();
        let tol = Tolerances::default();
        let b0 = compute_bound(&model, &set, theta, &tol).unwrap();
        let mut scaled = set.clone();
        let k = which.index(n);
        let c = if negate { -10f64.powf(exp) } else { 10f64.powf(exp) };
        for g in &mut scaled.constraints[k].test_fn {
            *g *= c;
        }
        scaled.constraints[k].bias *= c;
        let b1 = compute_bound(&model, &scaled, theta, &tol).unwrap();
        prop_assert_eq!(b0.status, b1.status);
        if let (Some(v0), Some(v1)) = (b0.value, b1.value) {
            if v0 > 0.0 {
                prop_assert!((v1 - v0).abs() <= 1e-9 * v0, "drift {} vs {}", v0, v1);
            }
        }
    }

    // m independent repetitions multiply outcome probabilities, so every
    // moment-matrix entry is the single-shot entry raised to the m-th power.
    #[test]
    fn repetition_exponentiates_matrix_entries(
        m in 1u32..=5,
        r in 0.4f64..1.0,
        theta in 0.4f64..2.0,
        off1 in 0.1f64..0.5,
        off2 in 0.1f64..0.5,
    ) {
        prop_assume!(theta + off1 + off2 < PI - 0.01);
        let pts = vec![theta, theta + off1, theta + off1 + off2];
        let tol = Tolerances::default();
        let single = DiscreteModel::qubit_binomial(1, r).unwrap();
        let grid1 = TestPointGrid::new(&single, pts.clone(), theta).unwrap();
        let set1 = barankin_constraints(&single, &grid1, theta).unwrap();
        let (c1, _) = constraint_matrix(&single, &set1, theta, &tol).unwrap();
        let multi = DiscreteModel::qubit_binomial(m, r).unwrap();
        let gridm = TestPointGrid::new(&multi, pts, theta).unwrap();
        let setm = barankin_constraints(&multi, &gridm, theta).unwrap();
        let (cm, _) = constraint_matrix(&multi, &setm, theta, &tol).unwrap();
        for k in 0..3 {
            for l in 0..3 {
                let expect = c1[(k, l)].powi(m as i32);
                prop_assert!(
                    (cm[(k, l)] - expect).abs() <= 1e-9 * expect.abs(),
                    "entry ({},{}): {} vs {}", k, l, cm[(k, l)], expect
                );
            }
        }
    }

    // Enlarging the test-point set can only tighten (raise) the bound: the
    // value is a supremum over coefficient vectors, and the smaller set's
    // vectors embed into the larger set's.
    #[test]
    fn adding_test_points_never_lowers_the_bound(
        m in 1u32..=6,
        theta in 0.4f64..1.5,
        fractions in prop::collection::vec(0.05f64..0.95, 2..=4),
    ) {
        let model = DiscreteModel::qubit_binomial(m, 1.0).unwrap();
        let extra = points_above(theta, &fractions, PI - 0.01);
        prop_assume!(extra.len() >= 2);
        let mut small = vec![theta];
        small.extend(&extra[..extra.len() - 1]);
        let mut large = vec![theta];
        large.extend(&extra);
        let tol = Tolerances::default();
        let eval = |pts: Vec<f64>| {
            let grid = TestPointGrid::new(&model, pts, theta).unwrap();
            let set = barankin_constraints(&model, &grid, theta).unwrap();
            compute_bound(&model, &set, theta, &tol).unwrap()
        };
        let b_small = eval(small);
        let b_large = eval(large);
        if b_large.status == BoundStatus::Finite {
            prop_assert_eq!(b_small.status, BoundStatus::Finite);
            let (vs, vl) = (b_small.value.unwrap(), b_large.value.unwrap());
            prop_assert!(
                vs <= vl * (1.0 + 1e-8) + 1e-12,
                "subset bound {vs} exceeds superset bound {vl}"
            );
        }
    }

    // The unit-slope grid bound can only improve on the single-score bound.
    #[test]
    fn unit_slope_grid_bound_dominates_single_score(
        m in 2u32..=8,
        theta in 0.3f64..2.0,
        spacing in 0.05f64..0.4,
        n in 2usize..=4,
    ) {
        prop_assume!(theta + spacing * (n as f64 - 1.0) < PI - 0.01);
        let model = DiscreteModel::qubit_binomial(m, 1.0).unwrap();
        let grid = TestPointGrid::uniform_from(&model, theta, spacing, n).unwrap();
        let set = ecrb_constraints(&model, &grid).unwrap();
        let tol = Tolerances::default();
        let b = compute_bound(&model, &set, theta, &tol).unwrap();
        if let Some(v) = b.value {
            let crb = reference::qubit_crb(theta, m, 1.0).unwrap();
            prop_assert!(v >= crb * (1.0 - 1e-9) - 1e-12, "value {v} below {crb}");
        }
    }

    // The optimized two-point bound is never looser than the local one.
    #[test]
    fn poisson_barankin_dominates_crb(theta in 0.01f64..0.99, m in 1u32..=300) {
        let b = reference::poisson_barankin(theta, m).unwrap();
        let c = reference::poisson_crb(theta, m).unwrap();
        prop_assert!(b >= c * (1.0 - 1e-12), "{b} < {c}");
    }

    // Single-score constraint reproduces the closed form on both families.
    #[test]
    fn single_score_bound_matches_closed_forms(
        theta in 0.05f64..0.95,
        m in 1u32..=50,
    ) {
        let tol = Tolerances::default();
        let model = DiscreteModel::poisson(theta, m).unwrap();
        let b = compute_bound(&model, &crb_constraint(&model, theta).unwrap(), theta, &tol)
            .unwrap()
            .value
            .unwrap();
        let closed = reference::poisson_crb(theta, m).unwrap();
        prop_assert!((b - closed).abs() <= 1e-9 * closed);

        let qtheta = theta * PI;
        let model = DiscreteModel::qubit_binomial(m, 0.9).unwrap();
        let b = compute_bound(&model, &crb_constraint(&model, qtheta).unwrap(), qtheta, &tol)
            .unwrap()
            .value
            .unwrap();
        let closed = reference::qubit_crb(qtheta, m, 0.9).unwrap();
        prop_assert!((b - closed).abs() <= 1e-9 * closed);
    }
}
