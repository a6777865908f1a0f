//! Spatial discretisation, conserved-variable storage and error norms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A one-dimensional finite-volume grid.
///
/// Cell `j` (zero based) spans `interfaces[j]..interfaces[j + 1]`. The
/// `frame_velocity` is the speed at which the grid is notionally translating
/// in the physical frame; the solver itself always works in grid coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    interfaces: Vec<f64>,
    widths: Vec<f64>,
    spacings: Vec<f64>,
    frame_velocity: f64,
}

impl Grid {
    /// `cells` equal cells on `[x_left, x_right]`.
    pub fn uniform(cells: usize, x_left: f64, x_right: f64, frame_velocity: f64) -> Result<Self> {
        if cells < 3 {
            return Err(Error::invalid_argument(format!(
                "a grid needs at least 3 cells, got {cells}"
            )));
        }
        if !(x_right > x_left) || !x_left.is_finite() || !x_right.is_finite() {
            return Err(Error::invalid_argument(format!(
                "domain [{x_left}, {x_right}] is empty or not finite"
            )));
        }
        let length = x_right - x_left;
        let width = length / cells as f64;
        let mut interfaces: Vec<f64> = (0..=cells)
            .map(|k| x_left + length * (k as f64 / cells as f64))
            .collect();
        interfaces[cells] = x_right;
        Ok(Grid {
            interfaces,
            widths: vec![width; cells],
            spacings: vec![width; cells - 1],
            frame_velocity,
        })
    }

    /// A grid with arbitrary strictly increasing interface positions.
    pub fn from_interfaces(interfaces: Vec<f64>, frame_velocity: f64) -> Result<Self> {
        if interfaces.len() < 2 {
            return Err(Error::invalid_argument("a grid needs at least one cell"));
        }
        if interfaces.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid_argument("interface positions must be finite"));
        }
        let widths: Vec<f64> = interfaces.windows(2).map(|w| w[1] - w[0]).collect();
        if let Some(j) = widths.iter().position(|&w| !(w > 0.0)) {
            return Err(Error::invalid_argument(format!(
                "interfaces must be strictly increasing (cell {j})"
            )));
        }
        let spacings = widths.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        Ok(Grid {
            interfaces,
            widths,
            spacings,
            frame_velocity,
        })
    }

    /// Number of cells `J`.
    pub fn len(&self) -> usize {
        self.widths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.widths.is_empty()
    }

    pub fn interfaces(&self) -> &[f64] {
        &self.interfaces
    }

    /// Cell widths `Δx_j`.
    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    /// Distances between adjacent cell centres, `(Δx_j + Δx_{j+1}) / 2`.
    pub fn spacings(&self) -> &[f64] {
        &self.spacings
    }

    pub fn frame_velocity(&self) -> f64 {
        self.frame_velocity
    }

    pub fn x_left(&self) -> f64 {
        self.interfaces[0]
    }

    pub fn x_right(&self) -> f64 {
        self.interfaces[self.interfaces.len() - 1]
    }

    pub fn length(&self) -> f64 {
        self.x_right() - self.x_left()
    }

    pub fn center(&self, j: usize) -> f64 {
        0.5 * (self.interfaces[j] + self.interfaces[j + 1])
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.center(j)).collect()
    }

    pub fn min_width(&self) -> f64 {
        self.widths.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn build_uniform_grid(cells: usize, x_left: f64, x_right: f64, frame_velocity: f64) -> Result<Grid> {
    Grid::uniform(cells, x_left, x_right, frame_velocity)
}

/// Cell-averaged depth and discharge at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub h: Vec<f64>,
    pub q: Vec<f64>,
    pub t: f64,
}

impl State {
    pub fn new(h: Vec<f64>, q: Vec<f64>, t: f64) -> Result<Self> {
        let state = State { h, q, t };
        state.validate()?;
        Ok(state)
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    /// Checks lengths, finiteness and nonnegative depth.
    pub fn validate(&self) -> Result<()> {
        if self.h.len() != self.q.len() {
            return Err(Error::invalid_state(format!(
                "depth has {} cells but discharge has {}",
                self.h.len(),
                self.q.len()
            )));
        }
        for (j, (&h, &q)) in self.h.iter().zip(&self.q).enumerate() {
            if !h.is_finite() || !q.is_finite() {
                return Err(Error::invalid_state(format!("non-finite value in cell {j}")));
            }
            if h < 0.0 {
                return Err(Error::invalid_state(format!("negative depth {h} in cell {j}")));
            }
        }
        Ok(())
    }

    /// `q_j / h_j`, or zero in a dry cell.
    pub fn velocity(&self, j: usize) -> f64 {
        if self.h[j] > 0.0 {
            self.q[j] / self.h[j]
        } else {
            0.0
        }
    }

    pub fn total_mass(&self, grid: &Grid) -> f64 {
        self.h.iter().zip(grid.widths()).map(|(h, dx)| h * dx).sum()
    }
}

/// A continuous bed sampled at the cell interfaces.
#[derive(Debug, Clone, PartialEq)]
pub struct BedProfile {
    interface: Vec<f64>,
    cell_diff: Vec<f64>,
    center: Vec<f64>,
    center_diff: Vec<f64>,
}

impl BedProfile {
    pub fn from_interface_values(interface: Vec<f64>) -> Result<Self> {
        if interface.len() < 2 {
            return Err(Error::invalid_argument("bed needs at least two interface values"));
        }
        if interface.iter().any(|b| !b.is_finite()) {
            return Err(Error::invalid_argument("bed elevations must be finite"));
        }
        let cell_diff: Vec<f64> = interface.windows(2).map(|w| w[1] - w[0]).collect();
        let center: Vec<f64> = interface.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let center_diff = center.windows(2).map(|w| w[1] - w[0]).collect();
        Ok(BedProfile {
            interface,
            cell_diff,
            center,
            center_diff,
        })
    }

    pub fn from_fn(grid: &Grid, bed: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_interface_values(grid.interfaces().iter().map(|&x| bed(x)).collect())
    }

    pub fn flat(grid: &Grid) -> Self {
        Self::from_interface_values(vec![0.0; grid.len() + 1]).expect("flat bed is valid")
    }

    pub fn len(&self) -> usize {
        self.center.len()
    }

    pub fn is_empty(&self) -> bool {
        self.center.is_empty()
    }

    /// `b_{j+1/2}` for all `J + 1` interfaces.
    pub fn interface(&self) -> &[f64] {
        &self.interface
    }

    /// `Δb_j = b_{j+1/2} - b_{j-1/2}`.
    pub fn cell_diff(&self) -> &[f64] {
        &self.cell_diff
    }

    /// Cell-centre bed, the mean of the two bounding interfaces.
    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// Differences between adjacent cell-centre values, `b_{j+1} - b_j`.
    pub fn center_diff(&self) -> &[f64] {
        &self.center_diff
    }

    /// The piecewise-linear interpolant of the interface values, evaluated
    /// inside cell `j`.
    pub fn linear_in_cell(&self, grid: &Grid, j: usize, x: f64) -> f64 {
        let xl = grid.interfaces()[j];
        let s = (x - xl) / grid.widths()[j];
        self.interface[j] + s * self.cell_diff[j]
    }

    pub fn is_flat(&self) -> bool {
        self.cell_diff.iter().all(|&d| d == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    pub g: f64,
}

impl PhysParams {
    pub fn new(g: f64) -> Result<Self> {
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::invalid_argument(format!("gravity must be positive, got {g}")));
        }
        Ok(PhysParams { g })
    }
}

impl Default for PhysParams {
    /// Dimensionless units, `g = 1`.
    fn default() -> Self {
        PhysParams { g: 1.0 }
    }
}

const GAUSS_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GAUSS_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Five-point Gauss-Legendre integral of `f` over `[a, b]`.
pub fn gauss_integral(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GAUSS_NODES
        .iter()
        .zip(GAUSS_WEIGHTS)
        .map(|(&x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Mean of `f` over `[a, b]`, integrating each piece between the sorted
/// `breaks` that fall strictly inside the interval separately.
pub fn interval_average(f: &impl Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64]) -> f64 {
    let mut total = 0.0;
    let mut lo = a;
    for &x in breaks.iter().filter(|&&x| x > a && x < b) {
        total += gauss_integral(f, lo, x);
        lo = x;
    }
    total += gauss_integral(f, lo, b);
    total / (b - a)
}

/// Cell averages of a smooth pointwise function.
pub fn init_cell_averages(f: impl Fn(f64) -> f64, grid: &Grid) -> Vec<f64> {
    init_cell_averages_split(f, grid, &[])
}

/// Cell averages of a piecewise-smooth function. Cells straddling one of the
/// `breaks` (kinks or jumps) are split there so each piece is smooth.
pub fn init_cell_averages_split(f: impl Fn(f64) -> f64, grid: &Grid, breaks: &[f64]) -> Vec<f64> {
    let mut breaks = breaks.to_vec();
    breaks.sort_by(f64::total_cmp);
    let x = grid.interfaces();
    (0..grid.len())
        .map(|j| interval_average(&f, x[j], x[j + 1], &breaks))
        .collect()
}

/// A finite union of closed intervals, used to select cells by centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    intervals: Vec<(f64, f64)>,
}

impl Region {
    pub fn interval(a: f64, b: f64) -> Self {
        Region {
            intervals: vec![(a.min(b), a.max(b))],
        }
    }

    pub fn union(intervals: impl IntoIterator<Item = (f64, f64)>) -> Self {
        Region {
            intervals: intervals.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect(),
        }
    }

    pub fn everywhere() -> Self {
        Region::interval(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| x >= a && x <= b)
    }

    /// Indices of cells whose centres lie in the region.
    pub fn cells(&self, grid: &Grid) -> Vec<usize> {
        (0..grid.len()).filter(|&j| self.contains(grid.center(j))).collect()
    }
}

/// Mean absolute difference over the cells whose centres lie in `region`.
pub fn l1_error(sim: &[f64], exact: &[f64], grid: &Grid, region: &Region) -> Result<f64> {
    if sim.len() != grid.len() || exact.len() != grid.len() {
        return Err(Error::invalid_argument(format!(
            "arrays of length {} and {} do not match a grid of {} cells",
            sim.len(),
            exact.len(),
            grid.len()
        )));
    }
    let cells = region.cells(grid);
    if cells.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let sum: f64 = cells.iter().map(|&j| (sim[j] - exact[j]).abs()).sum();
    Ok(sum / cells.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn uniform_grid_partitions_interval() {
        let grid = build_uniform_grid(4, 0.0, 4.0, 0.0).unwrap();
        assert_eq!(grid.interfaces(), &[0.0, 1.0, 2.0, 3.0, 4.0]);
        assert!(grid.widths().iter().all(|&w| w == 1.0));
        assert!(grid.spacings().iter().all(|&w| w == 1.0));
    }

    #[test]
    fn slow_shock_grid_dimensions() {
        let grid = build_uniform_grid(1000, -10.0, 10.0, 0.1).unwrap();
        assert_eq!(grid.len(), 1000);
        assert_relative_eq!(grid.widths()[0], 0.02, epsilon = 1e-15);
        assert_eq!(grid.frame_velocity(), 0.1);
        assert_eq!(grid.x_right(), 10.0);
    }

    #[test]
    fn grid_rejects_bad_arguments() {
        assert!(matches!(build_uniform_grid(2, 0.0, 1.0, 0.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(build_uniform_grid(10, 1.0, 1.0, 0.0), Err(Error::InvalidArgument(_))));
        assert!(Grid::from_interfaces(vec![0.0, 1.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn nonuniform_spacings_are_midpoint_distances() {
        let grid = Grid::from_interfaces(vec![0.0, 1.0, 3.0, 3.5], 0.0).unwrap();
        assert_eq!(grid.widths(), &[1.0, 2.0, 0.5]);
        assert_eq!(grid.spacings(), &[1.5, 1.25]);
    }

    #[test]
    fn cell_averages_of_simple_functions() {
        let grid = Grid::from_interfaces(vec![0.0, 1.0], 0.0).unwrap();
        assert_relative_eq!(init_cell_averages(|_| 3.5, &grid)[0], 3.5, epsilon = 1e-15);
        assert_relative_eq!(init_cell_averages(|x| x, &grid)[0], 0.5, epsilon = 1e-15);
        assert_relative_eq!(init_cell_averages(|x| x * x, &grid)[0], 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn split_averaging_of_a_step_is_exact() {
        let grid = build_uniform_grid(4, 0.0, 4.0, 0.0).unwrap();
        let step = |x: f64| if x <= 1.5 { 1.0 } else { 0.0 };
        let avg = init_cell_averages_split(step, &grid, &[1.5]);
        assert_eq!(avg, vec![1.0, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn l1_error_examples() {
        let grid = build_uniform_grid(4, 0.0, 4.0, 0.0).unwrap();
        let exact = [0.0, 1.0, 2.0, 3.0];
        let all = Region::everywhere();
        assert_eq!(l1_error(&exact, &exact, &grid, &all).unwrap(), 0.0);
        let ones: Vec<f64> = exact.iter().map(|e| e + 1.0).collect();
        assert_eq!(l1_error(&ones, &exact, &grid, &all).unwrap(), 1.0);
        let bump = [0.0, 3.0, 2.0, 3.0];
        assert_eq!(l1_error(&bump, &exact, &grid, &all).unwrap(), 0.5);
        assert_eq!(
            l1_error(&exact, &exact, &grid, &Region::interval(10.0, 11.0)),
            Err(Error::EmptyRegion)
        );
    }

    #[test]
    fn bed_differences_are_consistent() {
        let grid = build_uniform_grid(5, 0.0, 1.0, 0.0).unwrap();
        let bed = BedProfile::from_fn(&grid, |x| x * x).unwrap();
        for j in 0..5 {
            let b = bed.interface();
            assert_relative_eq!(bed.cell_diff()[j], b[j + 1] - b[j]);
            assert_relative_eq!(bed.center()[j], 0.5 * (b[j] + b[j + 1]));
        }
        for j in 0..4 {
            assert_relative_eq!(bed.center_diff()[j], bed.center()[j + 1] - bed.center()[j]);
        }
    }

    #[test]
    fn state_rejects_negative_depth() {
        assert!(State::new(vec![1.0, -1e-3], vec![0.0, 0.0], 0.0).is_err());
        assert!(State::new(vec![1.0], vec![0.0, 0.0], 0.0).is_err());
    }

    proptest! {
        #[test]
        fn gauss_averages_are_exact_for_degree_nine(
            coeffs in proptest::collection::vec(-3.0f64..3.0, 10),
            a in -5.0f64..5.0,
            len in 0.01f64..3.0,
        ) {
            let b = a + len;
            let poly = |x: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
            // Antiderivative evaluated directly.
            let anti = |x: f64| coeffs.iter().enumerate().map(|(k, c)| c * x.powi(k as i32 + 1) / (k as f64 + 1.0)).sum::<f64>();
            let expected = (anti(b) - anti(a)) / len;
            let got = interval_average(&poly, a, b, &[]);
            let scale = 1.0 + coeffs.iter().map(|c| c.abs()).sum::<f64>() * a.abs().max(b.abs()).powi(9).max(1.0);
            prop_assert!((got - expected).abs() <= 1e-12 * scale);
        }

        #[test]
        fn l1_error_is_nonnegative_and_permutation_invariant(
            pairs in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..40),
            seed in any::<u64>(),
        ) {
            let n = pairs.len();
            let grid = build_uniform_grid(n, 0.0, 1.0, 0.0).unwrap();
            let sim: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let exact: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let e = l1_error(&sim, &exact, &grid, &Region::everywhere()).unwrap();
            prop_assert!(e >= 0.0);
            prop_assert_eq!(e == 0.0, sim == exact);

            // Shuffle the cells; on a uniform grid this permutes the grid too.
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let rs: Vec<f64> = order.iter().map(|&j| sim[j]).collect();
            let re: Vec<f64> = order.iter().map(|&j| exact[j]).collect();
            let e2 = l1_error(&rs, &re, &grid, &Region::everywhere()).unwrap();
            prop_assert!((e - e2).abs() <= 1e-12 * (1.0 + e));
        }
    }
}
