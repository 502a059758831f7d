//! Fixture builders shared by the criterion benches: constructing models
//! and constraint sets is cheap relative to the kernels being measured,
//! but keeping it out of the timed closures makes the numbers honest.

use estbounds::constraints::{barankin_constraints, ecrb_constraints, TestPointGrid};
use estbounds::engine::{ConstraintSet, Tolerances};
use estbounds::models::DiscreteModel;

pub const FIG_THETA: f64 = std::f64::consts::FRAC_PI_4;
pub const FIG_SPACING: f64 = std::f64::consts::FRAC_PI_6;

pub fn qubit_barankin(m: u32, n: usize) -> (DiscreteModel, ConstraintSet) {
    let model = DiscreteModel::qubit_binomial(m, 1.0).unwrap();
    let grid = TestPointGrid::uniform_from(&model, FIG_THETA, FIG_SPACING, n).unwrap();
    let set = barankin_constraints(&model, &grid, FIG_THETA).unwrap();
    (model, set)
}

pub fn qubit_ecrb(m: u32, n: usize) -> (DiscreteModel, ConstraintSet) {
    let model = DiscreteModel::qubit_binomial(m, 1.0).unwrap();
    let grid = TestPointGrid::uniform_from(&model, FIG_THETA, FIG_SPACING, n).unwrap();
    let set = ecrb_constraints(&model, &grid).unwrap();
    (model, set)
}

pub fn tolerances() -> Tolerances {
    Tolerances::default()
}
