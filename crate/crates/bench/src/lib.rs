//! Fixtures shared by the benchmarks.

use shoreline::integrate::{apply_boundaries, BoundarySpec, GhostedState};
use shoreline::{BedProfile, Grid, State};

/// A perturbed lake on a bumpy bed with a dry shoreline on each side.
pub fn shoreline_fixture(cells: usize) -> GhostedState {
    let grid = Grid::uniform(cells, -2.0, 2.0, 0.0).expect("valid grid");
    let bed = BedProfile::from_fn(&grid, |x: f64| 0.5 * x * x + 0.05 * (7.0 * x).sin()).expect("finite bed");
    let h: Vec<f64> = grid
        .centers()
        .iter()
        .zip(bed.center())
        .map(|(x, b)| (1.0 + 0.05 * (-(x * x) * 10.0).exp() - b).max(0.0))
        .collect();
    let q = h.iter().map(|h| 0.1 * h).collect();
    let state = State::new(h, q, 0.0).expect("valid state");
    apply_boundaries(&state, &bed, &grid, &BoundarySpec::walls())
}
