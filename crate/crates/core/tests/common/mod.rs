#![allow(dead_code)]

use mfa_topo_core::synthetic::{AnalyticField, SAMPLES_PER_SPAN};
use mfa_topo_core::MfaModel;

pub const DEGREE: usize = 4;

/// Reference model of a synthetic field: degree 4, reference span counts,
/// fitted to the default sampling.
pub fn fit_reference(field: AnalyticField) -> MfaModel {
    let (nx, ny) = field.grid_size(SAMPLES_PER_SPAN);
    let grid = field.make_grid(nx, ny).unwrap();
    let (a, b) = field.spans();
    MfaModel::fit(&grid, DEGREE, a + DEGREE, b + DEGREE).unwrap().model
}
