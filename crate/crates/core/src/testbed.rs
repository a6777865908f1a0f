//! Benchmark problems, their reference solutions and the diagnostics used to
//! judge a run.
//!
//! All problems are dimensionless with `g = 1`. The slow shock is simulated in
//! a frame moving with the grid: positions and velocities returned here for it
//! are grid-frame values, and `TestProblem::frame_velocity` converts back.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{self, BoundarySpec, Observer, Problem, RunOutcome, TimeControls};
use crate::mesh::{self, BedProfile, Grid, PhysParams, Region, State};
use crate::reconstruction::SchemeConfig;

/// Resolutions `round(10^{a/4})` for `a = 8..=16`.
pub const RESOLUTION_LADDER: [usize; 9] = [100, 178, 316, 562, 1000, 1778, 3162, 5623, 10000];

/// Depth below which a cell counts as dry for front and velocity diagnostics.
pub const H_DRY: f64 = 1e-10;

pub const SLOW_SHOCK_LEFT: (f64, f64) = (0.1, 2.3452);
pub const SLOW_SHOCK_RIGHT: (f64, f64) = (1.0, 0.2345);
const SLOW_SHOCK_FRAME: f64 = 0.1;
const DRAIN_FILM: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProblemId {
    #[serde(rename = "lake-at-rest")]
    LakeAtRest,
    #[serde(rename = "basin-drain")]
    BasinDrain,
    #[serde(rename = "thacker")]
    ThackerOscillation,
    #[serde(rename = "slow-shock")]
    SlowShock,
    #[serde(rename = "dam-break")]
    DamBreak,
}

impl ProblemId {
    pub const ALL: [ProblemId; 5] = [
        ProblemId::LakeAtRest,
        ProblemId::BasinDrain,
        ProblemId::ThackerOscillation,
        ProblemId::SlowShock,
        ProblemId::DamBreak,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemId::LakeAtRest => "lake-at-rest",
            ProblemId::BasinDrain => "basin-drain",
            ProblemId::ThackerOscillation => "thacker",
            ProblemId::SlowShock => "slow-shock",
            ProblemId::DamBreak => "dam-break",
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lake-at-rest" | "tp1" => Ok(ProblemId::LakeAtRest),
            "basin-drain" | "tp2" => Ok(ProblemId::BasinDrain),
            "thacker" | "tp3" => Ok(ProblemId::ThackerOscillation),
            "slow-shock" | "tp4" => Ok(ProblemId::SlowShock),
            "dam-break" | "tp5" => Ok(ProblemId::DamBreak),
            other => Err(Error::invalid_argument(format!("unknown problem '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestProblem {
    pub id: ProblemId,
    pub domain: (f64, f64),
    pub boundaries: BoundarySpec,
    pub t_range: (f64, f64),
    pub default_cells: usize,
    /// Velocity of the grid relative to the physical frame.
    pub frame_velocity: f64,
}

impl TestProblem {
    pub fn new(id: ProblemId) -> Self {
        let walls = BoundarySpec::walls();
        let (domain, boundaries, t_range, default_cells, frame_velocity) = match id {
            ProblemId::LakeAtRest => ((-2.0, 2.0), walls, (0.0, 100.0), 100, 0.0),
            ProblemId::BasinDrain => ((-2.0, 2.0), walls, (0.0, 8.0), 1000, 0.0),
            ProblemId::ThackerOscillation => ((-2.0, 2.0), walls, (0.0, SQRT_2 * PI), 1000, 0.0),
            ProblemId::SlowShock => ((-10.0, 10.0), BoundarySpec::extrapolate(), (-1.0, 1.0), 1000, SLOW_SHOCK_FRAME),
            ProblemId::DamBreak => ((0.0, 4.0), walls, (0.0, 1.0), 1000, 0.0),
        };
        TestProblem {
            id,
            domain,
            boundaries,
            t_range,
            default_cells,
            frame_velocity,
        }
    }

    pub fn bed(&self, x: f64) -> f64 {
        match self.id {
            ProblemId::LakeAtRest | ProblemId::BasinDrain => (x * x - 1.0 / 3.0).abs() + 1.0 / 3.0,
            ProblemId::ThackerOscillation => x * x - 1.0,
            ProblemId::SlowShock | ProblemId::DamBreak => 0.0,
        }
    }

    /// Points where the bed or the initial data are not smooth.
    fn bed_breaks(&self) -> Vec<f64> {
        match self.id {
            ProblemId::LakeAtRest | ProblemId::BasinDrain => {
                let k = 1.0 / 3f64.sqrt();
                vec![-1.0, -k, k, 1.0]
            }
            _ => Vec::new(),
        }
    }

    /// Snapshot times used by default: a handful spread over the run, and
    /// the phase-plot cadence of 0.01 for the slow shock.
    pub fn default_snapshots(&self) -> Vec<f64> {
        let (t0, t1) = self.t_range;
        match self.id {
            ProblemId::SlowShock => (-100..=100).map(|i| i as f64 / 100.0).collect(),
            _ => (0..=5).map(|i| t0 + (t1 - t0) * i as f64 / 5.0).collect(),
        }
    }
}

/// A discretised problem ready to run.
#[derive(Debug, Clone, PartialEq)]
pub struct Setup {
    pub problem: TestProblem,
    pub grid: Grid,
    pub bed: BedProfile,
    pub initial: State,
    pub boundaries: BoundarySpec,
    pub t_range: (f64, f64),
}

impl Setup {
    pub fn run(
        &self,
        cfg: &SchemeConfig,
        phys: &PhysParams,
        controls: &TimeControls,
        observers: &mut [&mut dyn Observer],
    ) -> Result<RunOutcome> {
        let problem = Problem {
            grid: &self.grid,
            bed: &self.bed,
            boundaries: self.boundaries,
            scheme: cfg,
            phys,
        };
        integrate::run(self.initial.clone(), &problem, controls, observers)
    }
}

/// Mean over a cell of `max(d, 0)` for `d` linear from `d0` to `d1`.
fn mean_positive_part(d0: f64, d1: f64) -> f64 {
    match (d0 > 0.0, d1 > 0.0) {
        (true, true) => 0.5 * (d0 + d1),
        (false, false) => 0.0,
        (true, false) => d0 * d0 / (2.0 * (d0 - d1)),
        (false, true) => d1 * d1 / (2.0 * (d1 - d0)),
    }
}

/// Cell averages of `max(1 - b, film)` for the piecewise-linear bed, so that
/// fully wet cells hold the discrete lake at rest `h_j + b_j = 1` exactly.
fn basin_depths(bed: &BedProfile, film: f64) -> Vec<f64> {
    let bi = bed.interface();
    (0..bed.len())
        .map(|j| film + mean_positive_part(1.0 - film - bi[j], 1.0 - film - bi[j + 1]))
        .collect()
}

pub fn problem_setup(id: ProblemId, cells: usize) -> Result<Setup> {
    let problem = TestProblem::new(id);
    let (xl, xr) = problem.domain;
    let grid = Grid::uniform(cells, xl, xr, problem.frame_velocity)?;
    let bed = BedProfile::from_fn(&grid, |x| problem.bed(x))?;
    let t0 = problem.t_range.0;
    let (h, q) = match id {
        ProblemId::LakeAtRest => (basin_depths(&bed, 0.0), vec![0.0; cells]),
        ProblemId::BasinDrain => (basin_depths(&bed, DRAIN_FILM), vec![0.0; cells]),
        ProblemId::ThackerOscillation | ProblemId::SlowShock | ProblemId::DamBreak => exact_cell_averages(id, &grid, t0)?,
    };
    let initial = State::new(h, q, t0)?;
    Ok(Setup {
        problem,
        grid,
        bed,
        initial,
        boundaries: problem.boundaries,
        t_range: problem.t_range,
    })
}

/// Depth and velocity at `(x, t)`; the velocity is `None` where the exact
/// solution is dry.
pub fn exact_solution(id: ProblemId, x: f64, t: f64) -> Result<(f64, Option<f64>)> {
    match id {
        ProblemId::LakeAtRest => {
            let h = (1.0 - TestProblem::new(id).bed(x)).max(0.0);
            Ok((h, (h > 0.0).then_some(0.0)))
        }
        ProblemId::BasinDrain => Err(Error::Unsupported(
            "the draining basin has only an asymptotic reference; see drain_reference".into(),
        )),
        ProblemId::ThackerOscillation => {
            let s = x - (SQRT_2 * t).cos();
            if (-1.0..=1.0).contains(&s) {
                Ok((1.0 - s * s, Some(-SQRT_2 * (SQRT_2 * t).sin())))
            } else {
                Ok((0.0, None))
            }
        }
        ProblemId::SlowShock => {
            let (hl, ul) = SLOW_SHOCK_LEFT;
            let (hr, ur) = SLOW_SHOCK_RIGHT;
            if x < slow_shock_position(t) {
                Ok((hl, Some(ul - SLOW_SHOCK_FRAME)))
            } else {
                Ok((hr, Some(ur - SLOW_SHOCK_FRAME)))
            }
        }
        ProblemId::DamBreak => {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::Unsupported(format!(
                    "the dam-break solution is only valid for 0 <= t <= 1, got {t}"
                )));
            }
            let s = x - 1.0;
            if t == 0.0 {
                return Ok(if s <= 0.0 { (1.0, Some(0.0)) } else { (0.0, None) });
            }
            if s <= -t {
                Ok((1.0, Some(0.0)))
            } else if s <= 2.0 * t {
                let c = 2.0 / 3.0 - s / (3.0 * t);
                Ok((c * c, Some(2.0 / 3.0 + 2.0 * s / (3.0 * t))))
            } else {
                Ok((0.0, None))
            }
        }
    }
}

/// Grid-frame position of the slow shock.
pub fn slow_shock_position(t: f64) -> f64 {
    -SLOW_SHOCK_FRAME * t
}

fn exact_breaks(id: ProblemId, t: f64) -> Vec<f64> {
    match id {
        ProblemId::LakeAtRest | ProblemId::BasinDrain => TestProblem::new(id).bed_breaks(),
        ProblemId::ThackerOscillation => {
            let c = (SQRT_2 * t).cos();
            vec![c - 1.0, c + 1.0]
        }
        ProblemId::SlowShock => vec![slow_shock_position(t)],
        ProblemId::DamBreak => vec![1.0 - t, 1.0 + 2.0 * t],
    }
}

/// Cell averages of the exact `(h, q)` at time `t`, integrated piecewise
/// between the non-smooth points of the solution.
pub fn exact_cell_averages(id: ProblemId, grid: &Grid, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    exact_solution(id, grid.center(0), t)?;
    let breaks = exact_breaks(id, t);
    let depth = |x: f64| exact_solution(id, x, t).map(|(h, _)| h).unwrap_or(0.0);
    let discharge = |x: f64| {
        exact_solution(id, x, t)
            .map(|(h, u)| h * u.unwrap_or(0.0))
            .unwrap_or(0.0)
    };
    Ok((
        mesh::init_cell_averages_split(depth, grid, &breaks),
        mesh::init_cell_averages_split(discharge, grid, &breaks),
    ))
}

/// Named regions over which errors are reported at time `t`.
pub fn error_regions(id: ProblemId, t: f64) -> Vec<(&'static str, Region)> {
    match id {
        ProblemId::LakeAtRest | ProblemId::BasinDrain => vec![
            ("wet", Region::interval(-1.0, 1.0)),
            ("dry", Region::union([(-2.0, -1.0), (1.0, 2.0)])),
        ],
        ProblemId::ThackerOscillation => {
            let c = (SQRT_2 * t).cos();
            let mut dry = Vec::new();
            if c - 1.0 > -2.0 {
                dry.push((-2.0, c - 1.0));
            }
            if c + 1.0 < 2.0 {
                dry.push((c + 1.0, 2.0));
            }
            vec![("wet", Region::interval(c - 1.0, c + 1.0)), ("dry", Region::union(dry))]
        }
        ProblemId::SlowShock => vec![("all", Region::everywhere())],
        ProblemId::DamBreak => {
            let front = 1.0 + 2.0 * t;
            vec![("wet", Region::interval(0.0, front)), ("dry", Region::interval(front, 4.0))]
        }
    }
}

/// Mean absolute error over the cells of `region`, averaged over `h` and `q`.
pub fn state_l1_error(state: &State, exact: &(Vec<f64>, Vec<f64>), grid: &Grid, region: &Region) -> Result<f64> {
    let eh = mesh::l1_error(&state.h, &exact.0, grid, region)?;
    let eq = mesh::l1_error(&state.q, &exact.1, grid, region)?;
    Ok(0.5 * (eh + eq))
}

/// Errors in every region of [`error_regions`] against the exact cell averages.
/// Regions without cells are skipped.
pub fn region_errors(id: ProblemId, state: &State, grid: &Grid) -> Result<Vec<(&'static str, f64)>> {
    let exact = exact_cell_averages(id, grid, state.t)?;
    let mut out = Vec::new();
    for (name, region) in error_regions(id, state.t) {
        match state_l1_error(state, &exact, grid, &region) {
            Ok(e) => out.push((name, e)),
            Err(Error::EmptyRegion) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DrainReference {
    pub t: f64,
    /// Position of the parcel that started at the domain edge `x = 2`.
    pub edge_parcel: f64,
    /// When that parcel reaches the lake at `x = 1`.
    pub edge_arrival_time: f64,
    /// When the region `|x| >= 1.2` is empty in the asymptotic solution.
    pub outer_dry_time: f64,
    /// Decay rate of `log10` of the outer-region volume per unit time.
    pub decay_rate_log10: f64,
}

/// Thin-film parcel trajectory `x = x0 cos(√2 t)` on the slope `b = x²`.
pub fn drain_parcel(x0: f64, t: f64) -> f64 {
    x0 * (SQRT_2 * t).cos()
}

/// Time for a parcel released from rest at `x0` to reach `x`.
pub fn drain_arrival_time(x0: f64, x: f64) -> f64 {
    (x / x0).acos() / SQRT_2
}

pub fn drain_reference(t: f64) -> DrainReference {
    DrainReference {
        t,
        edge_parcel: drain_parcel(2.0, t),
        edge_arrival_time: drain_arrival_time(2.0, 1.0),
        outer_dry_time: drain_arrival_time(2.0, 1.2),
        decay_rate_log10: -3.0 / 8.0,
    }
}

/// `Σ Δx_j h_j` over cells whose centres lie in `region`.
pub fn region_volume(state: &State, grid: &Grid, region: &Region) -> f64 {
    region.cells(grid).into_iter().map(|j| grid.widths()[j] * state.h[j]).sum()
}

/// The region `|x| >= 1.2` of the draining basin.
pub fn drain_outer_region() -> Region {
    Region::union([(-2.0, -1.2), (1.2, 2.0)])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DamBreakDiagnostics {
    pub t: f64,
    /// Centre of the wet cell with the largest velocity.
    pub x_f1: f64,
    /// Centre of the last wet cell.
    pub x_f2: f64,
    /// Exact front `1 + 2t`.
    pub x_f: f64,
    pub u_max: f64,
    pub c_m: f64,
    pub x_st: f64,
    /// Tailwater depth whose Stoker solution departs from the dry-bed
    /// solution at `x_f1`.
    pub h_r: f64,
}

pub fn max_velocity(state: &State, h_dry: f64) -> Option<(usize, f64)> {
    state
        .h
        .iter()
        .zip(&state.q)
        .enumerate()
        .filter(|(_, (&h, _))| h > h_dry)
        .map(|(j, (&h, &q))| (j, q / h))
        .fold(None, |best, (j, u)| match best {
            Some((_, b)) if b >= u => best,
            _ => Some((j, u)),
        })
}

pub fn dam_break_fronts(state: &State, grid: &Grid, h_dry: f64) -> Result<DamBreakDiagnostics> {
    let t = state.t;
    if !(t > 0.0) {
        return Err(Error::invalid_argument("front diagnostics need t > 0"));
    }
    let (j1, u_max) = max_velocity(state, h_dry).ok_or_else(|| Error::invalid_state("fully dry state"))?;
    let j2 = state
        .h
        .iter()
        .rposition(|&h| h > h_dry)
        .expect("a wet cell exists");
    let x_f1 = grid.center(j1);
    let c_m = 2.0 / 3.0 - (x_f1 - 1.0) / (3.0 * t);
    Ok(DamBreakDiagnostics {
        t,
        x_f1,
        x_f2: grid.center(j2),
        x_f: 1.0 + 2.0 * t,
        u_max,
        c_m,
        x_st: 1.0 + t * (2.0 - 3.0 * c_m),
        h_r: c_m.powi(4) / 8.0,
    })
}

/// Velocity of the state with depth `h` joined by a shock to the reference
/// state `(h_ref, u_ref)` lying on its right, on the branch where the
/// characteristics converge.
pub fn hugoniot_velocity(h_ref: f64, u_ref: f64, g: f64, h: f64) -> f64 {
    u_ref + (h_ref - h) * (g * (h + h_ref) / (2.0 * h * h_ref)).sqrt()
}

/// `(C⁻, C⁺)` along the Hugoniot locus through the reference state.
pub fn hugoniot_locus(h_ref: f64, u_ref: f64, g: f64, h_samples: &[f64]) -> Result<Vec<(f64, f64)>> {
    h_samples
        .iter()
        .map(|&h| {
            if !(h > 0.0) {
                return Err(Error::invalid_argument(format!("locus depth must be positive, got {h}")));
            }
            let u = hugoniot_velocity(h_ref, u_ref, g, h);
            let c = 2.0 * (g * h).sqrt();
            Ok((u - c, u + c))
        })
        .collect()
}

/// Residuals of the mass and momentum jump conditions for a shock of speed `s`.
pub fn rankine_hugoniot_residual(left: (f64, f64), right: (f64, f64), s: f64, g: f64) -> (f64, f64) {
    let (hl, ul) = left;
    let (hr, ur) = right;
    let mass = s * (hr - hl) - (hr * ur - hl * ul);
    let mom_flux = |h: f64, u: f64| h * u * u + 0.5 * g * h * h;
    let momentum = s * (hr * ur - hl * ul) - (mom_flux(hr, ur) - mom_flux(hl, ul));
    (mass, momentum)
}

/// Shock speed from the mass jump.
pub fn shock_speed(left: (f64, f64), right: (f64, f64)) -> f64 {
    (right.0 * right.1 - left.0 * left.1) / (right.0 - left.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharacteristicInvariants {
    pub c_minus: Vec<f64>,
    pub c_plus: Vec<f64>,
    pub energy: Vec<f64>,
    pub froude: Vec<f64>,
}

/// `C± = u ± 2√(gh)`, `E = u²/2 + gη` and `Fr = |u|/√(gh)` per cell, with
/// `u = q/h + frame_velocity` and `u = 0` in dry cells.
pub fn characteristic_invariants(
    state: &State,
    bed_center: &[f64],
    g: f64,
    frame_velocity: f64,
) -> CharacteristicInvariants {
    let n = state.len();
    let mut out = CharacteristicInvariants {
        c_minus: Vec::with_capacity(n),
        c_plus: Vec::with_capacity(n),
        energy: Vec::with_capacity(n),
        froude: Vec::with_capacity(n),
    };
    for j in 0..n {
        let h = state.h[j];
        let u = if h > H_DRY { state.q[j] / h + frame_velocity } else { 0.0 };
        let c = (g * h.max(0.0)).sqrt();
        out.c_minus.push(u - 2.0 * c);
        out.c_plus.push(u + 2.0 * c);
        out.energy.push(0.5 * u * u + g * (h + bed_center[j]));
        out.froude.push(if c > 0.0 { u.abs() / c } else { 0.0 });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Envelope {
    /// Fitted amplitude at the start of the profile.
    pub amplitude: f64,
    pub decay_length: f64,
    pub peaks: usize,
}

/// Fits `|h - h_ref| ≈ A exp(-(x - x_0)/χ)` to the local maxima of the
/// deviation, with `x_0` the first sample position.
pub fn oscillation_envelope(x: &[f64], h: &[f64], h_ref: f64) -> Result<Envelope> {
    if x.len() != h.len() {
        return Err(Error::invalid_argument("profile coordinates and depths differ in length"));
    }
    let dev: Vec<f64> = h.iter().map(|v| (v - h_ref).abs()).collect();
    if dev.iter().all(|&d| d == 0.0) {
        return Ok(Envelope {
            amplitude: 0.0,
            decay_length: f64::INFINITY,
            peaks: 0,
        });
    }
    let peaks: Vec<usize> = (1..dev.len().saturating_sub(1))
        .filter(|&i| dev[i] > 0.0 && dev[i] >= dev[i - 1] && dev[i] > dev[i + 1])
        .collect();
    if peaks.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} oscillation peaks found, at least 3 are needed",
            peaks.len()
        )));
    }
    let px: Vec<f64> = peaks.iter().map(|&i| x[i] - x[0]).collect();
    let py: Vec<f64> = peaks.iter().map(|&i| dev[i].ln()).collect();
    let (slope, intercept) = fit_line(&px, &py)?;
    Ok(Envelope {
        amplitude: intercept.exp(),
        decay_length: if slope < 0.0 { -1.0 / slope } else { f64::INFINITY },
        peaks: peaks.len(),
    })
}

/// Largest `|h - h_ref|` at positions strictly inside `window`.
pub fn oscillation_amplitude(x: &[f64], h: &[f64], h_ref: f64, window: (f64, f64)) -> f64 {
    x.iter()
        .zip(h)
        .filter(|(&x, _)| x > window.0 && x < window.1)
        .map(|(_, v)| (v - h_ref).abs())
        .fold(0.0, f64::max)
}

/// Snapshots of the slow shock at or after this time have shed the
/// relaxation of the initial jump.
pub const SLOW_SHOCK_SETTLED: f64 = -0.5;

/// Grid-frame interval downstream of the slow shock holding its wave train.
///
/// It starts ten cells past the shock and ends half way to the fast pulse
/// released from the initial jump, which travels with the downstream `λ⁺`.
pub fn slow_shock_downstream_window(t: f64, dx: f64) -> (f64, f64) {
    let (h, u) = SLOW_SHOCK_RIGHT;
    let lambda = u - SLOW_SHOCK_FRAME + h.sqrt();
    let start_time = TestProblem::new(ProblemId::SlowShock).t_range.0;
    let xs = slow_shock_position(t);
    (xs + 10.0 * dx, xs + 0.5 * (lambda + SLOW_SHOCK_FRAME) * (t - start_time))
}

/// Hugoniot locus through the downstream slow-shock state in `(C⁻, C⁺)`
/// coordinates, sampled at `samples + 1` depths spanning the jump.
pub fn slow_shock_locus(samples: usize) -> Result<Vec<(f64, f64)>> {
    let (hl, hr) = (SLOW_SHOCK_LEFT.0, SLOW_SHOCK_RIGHT.0);
    let n = samples.max(1);
    let depths: Vec<f64> = (0..=n).map(|i| hl + (hr - hl) * i as f64 / n as f64).collect();
    hugoniot_locus(SLOW_SHOCK_RIGHT.0, SLOW_SHOCK_RIGHT.1, 1.0, &depths)
}

/// Physical `(C⁻, C⁺)` of the cells partway through the slow shock: depths
/// strictly inside the jump after trimming 5% of its height at each end.
pub fn shock_transition_points(state: &State, frame_velocity: f64, g: f64) -> Vec<(f64, f64)> {
    let (hl, hr) = (SLOW_SHOCK_LEFT.0, SLOW_SHOCK_RIGHT.0);
    let margin = 0.05 * (hr - hl);
    state
        .h
        .iter()
        .zip(&state.q)
        .filter(|(&h, _)| h > hl + margin && h < hr - margin)
        .map(|(&h, &q)| {
            let u = q / h + frame_velocity;
            let c = 2.0 * (g * h).sqrt();
            (u - c, u + c)
        })
        .collect()
}

/// Least-squares line `y = slope·x + intercept`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::invalid_argument("fit inputs differ in length"));
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData(format!("{} points cannot define a slope", x.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all abscissae coincide".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Slope of `log y` against `log x`. Every value must be positive.
pub fn fit_loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.iter().chain(y).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::InsufficientData("log-log fit needs positive finite values".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    fit_line(&lx, &ly).map(|(s, _)| s)
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let s = if len2 > 0.0 {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ((p.0 - a.0 - s * dx).powi(2) + (p.1 - a.1 - s * dy).powi(2)).sqrt()
}

/// Distance from `p` to the polyline through `curve`.
pub fn polyline_distance(p: (f64, f64), curve: &[(f64, f64)]) -> f64 {
    match curve.len() {
        0 => f64::INFINITY,
        1 => segment_distance(p, curve[0], curve[0]),
        _ => curve
            .windows(2)
            .map(|w| segment_distance(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Largest distance of any point from the curve.
pub fn tube_width(points: &[(f64, f64)], curve: &[(f64, f64)]) -> f64 {
    points.iter().map(|&p| polyline_distance(p, curve)).fold(0.0, f64::max)
}
