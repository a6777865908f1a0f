//! Boundary ghost cells, time-step selection and the SSP-RK2 time loop.

use serde::{Deserialize, Serialize};

use crate::detectors::DetectorOutput;
use crate::error::{Error, Result};
use crate::flux::{self, RhsData};
use crate::mesh::{BedProfile, Grid, PhysParams, State};
use crate::reconstruction::{ReconOutput, SchemeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryKind {
    /// Reflecting wall: the ghost cell mirrors depth and negates discharge.
    WallZeroVelocity,
    /// Zeroth-order copy of the outermost cell.
    Extrapolate,
}

impl BoundaryKind {
    /// The exterior state at the outer interface given the interior value there.
    pub fn outer_state(self, h: f64, q: f64) -> (f64, f64) {
        match self {
            BoundaryKind::WallZeroVelocity => (h, -q),
            BoundaryKind::Extrapolate => (h, q),
        }
    }

    fn ghost(self, h: f64, q: f64) -> (f64, f64) {
        self.outer_state(h, q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundarySpec {
    pub left: BoundaryKind,
    pub right: BoundaryKind,
}

impl BoundarySpec {
    pub fn walls() -> Self {
        BoundarySpec {
            left: BoundaryKind::WallZeroVelocity,
            right: BoundaryKind::WallZeroVelocity,
        }
    }

    pub fn extrapolate() -> Self {
        BoundarySpec {
            left: BoundaryKind::Extrapolate,
            right: BoundaryKind::Extrapolate,
        }
    }
}

/// Cell data padded with one ghost cell on each side (`J + 2` entries).
/// Index `j + 1` holds interior cell `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct GhostedState {
    pub h: Vec<f64>,
    pub q: Vec<f64>,
    /// Cell-centre bed.
    pub b: Vec<f64>,
    /// `Δb_j` across each cell.
    pub db: Vec<f64>,
    pub dx: Vec<f64>,
    pub domain_length: f64,
    pub left: BoundaryKind,
    pub right: BoundaryKind,
    pub t: f64,
}

impl GhostedState {
    /// Number of interior cells.
    pub fn cells(&self) -> usize {
        self.h.len() - 2
    }
}

/// Pads `state` with ghost cells. The bed is mirrored about each end
/// interface, so a ghost cell shares the centre elevation of its neighbour and
/// has the opposite cell difference.
pub fn apply_boundaries(state: &State, bed: &BedProfile, grid: &Grid, spec: &BoundarySpec) -> GhostedState {
    let n = state.len();
    let mut g = GhostedState {
        h: Vec::with_capacity(n + 2),
        q: Vec::with_capacity(n + 2),
        b: Vec::with_capacity(n + 2),
        db: Vec::with_capacity(n + 2),
        dx: Vec::with_capacity(n + 2),
        domain_length: grid.length(),
        left: spec.left,
        right: spec.right,
        t: state.t,
    };
    let (hl, ql) = spec.left.ghost(state.h[0], state.q[0]);
    let (hr, qr) = spec.right.ghost(state.h[n - 1], state.q[n - 1]);
    let (bc, bd, w) = (bed.center(), bed.cell_diff(), grid.widths());

    g.h.push(hl);
    g.h.extend_from_slice(&state.h);
    g.h.push(hr);
    g.q.push(ql);
    g.q.extend_from_slice(&state.q);
    g.q.push(qr);
    g.b.push(bc[0]);
    g.b.extend_from_slice(bc);
    g.b.push(bc[n - 1]);
    g.db.push(-bd[0]);
    g.db.extend_from_slice(bd);
    g.db.push(-bd[n - 1]);
    g.dx.push(w[0]);
    g.dx.extend_from_slice(w);
    g.dx.push(w[n - 1]);
    g
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeControls {
    pub cfl: f64,
    pub t_end: f64,
    pub dt_max: f64,
    pub snapshot_times: Vec<f64>,
}

impl TimeControls {
    pub fn new(t_end: f64) -> Self {
        TimeControls {
            cfl: 0.25,
            t_end,
            dt_max: f64::INFINITY,
            snapshot_times: Vec::new(),
        }
    }

    pub fn with_snapshots(mut self, times: Vec<f64>) -> Self {
        self.snapshot_times = times;
        self
    }

    pub fn validate(&self, t_start: f64) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 0.5) {
            return Err(Error::invalid_argument(format!("cfl must lie in (0, 0.5], got {}", self.cfl)));
        }
        if !self.t_end.is_finite() || self.t_end < t_start {
            return Err(Error::invalid_argument(format!(
                "t_end {} precedes the start time {t_start}",
                self.t_end
            )));
        }
        if !(self.dt_max > 0.0) {
            return Err(Error::invalid_argument("dt_max must be positive"));
        }
        if self.snapshot_times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid_argument("snapshot times must be sorted"));
        }
        if let (Some(&first), Some(&last)) = (self.snapshot_times.first(), self.snapshot_times.last()) {
            if first < t_start || last > self.t_end {
                return Err(Error::invalid_argument(format!(
                    "snapshot times must lie in [{t_start}, {}]",
                    self.t_end
                )));
            }
        }
        Ok(())
    }
}

/// `cfl · min Δx / max(|u| + √(g h))`, or `dt_max` when every cell is dry.
pub fn stable_dt(state: &State, grid: &Grid, phys: &PhysParams, controls: &TimeControls) -> f64 {
    let speed = state
        .h
        .iter()
        .zip(&state.q)
        .filter(|(&h, _)| h > 0.0)
        .map(|(&h, &q)| (q / h).abs() + (phys.g * h).sqrt())
        .fold(0.0, f64::max);
    if speed == 0.0 {
        return controls.dt_max;
    }
    (controls.cfl * grid.min_width() / speed).min(controls.dt_max)
}

/// Shortens `dt` so that `t + dt` does not pass `stop`, landing on it exactly
/// when the remainder is within round-off.
pub fn clip_to_stop(t: f64, dt: f64, stop: f64) -> f64 {
    let remaining = stop - t;
    if dt >= remaining - 64.0 * f64::EPSILON * stop.abs().max(1.0) {
        remaining
    } else {
        dt
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: State,
    /// Mass changed by zeroing negative or vanishing depths, `Σ Δx_j |h_j|`.
    pub clipped_mass: f64,
}

/// Per-cell time derivatives `(dh/dt, dq/dt)`.
pub type Derivative = (Vec<f64>, Vec<f64>);

/// One Heun-form SSP-RK2 step.
pub fn ssp_rk2_step(
    state: &State,
    dt: f64,
    widths: &[f64],
    mut rhs: impl FnMut(&State) -> Result<Derivative>,
) -> Result<StepOutcome> {
    let first = rhs(state)?;
    ssp_rk2_from(state, &first, dt, widths, rhs)
}

fn ssp_rk2_from(
    state: &State,
    first: &Derivative,
    dt: f64,
    widths: &[f64],
    mut rhs: impl FnMut(&State) -> Result<Derivative>,
) -> Result<StepOutcome> {
    if !(dt > 0.0) {
        return Err(Error::invalid_argument(format!("time step must be positive, got {dt}")));
    }
    let mut clipped = 0.0;
    let n = state.len();
    let mut stage = State {
        h: (0..n).map(|j| state.h[j] + dt * first.0[j]).collect(),
        q: (0..n).map(|j| state.q[j] + dt * first.1[j]).collect(),
        t: state.t + dt,
    };
    clipped += finish_stage(&mut stage, widths, state.t)?;

    let second = rhs(&stage)?;
    let mut next = State {
        h: (0..n).map(|j| 0.5 * state.h[j] + 0.5 * (stage.h[j] + dt * second.0[j])).collect(),
        q: (0..n).map(|j| 0.5 * state.q[j] + 0.5 * (stage.q[j] + dt * second.1[j])).collect(),
        t: state.t + dt,
    };
    clipped += finish_stage(&mut next, widths, state.t)?;
    Ok(StepOutcome {
        state: next,
        clipped_mass: clipped,
    })
}

/// Depths below this are treated as dry after each stage. Films that decay
/// exponentially would otherwise reach the subnormal range, where `q / h`
/// loses all precision.
pub const DEPTH_FLOOR: f64 = 1e-100;

fn finish_stage(stage: &mut State, widths: &[f64], t: f64) -> Result<f64> {
    let mut clipped = 0.0;
    for j in 0..stage.h.len() {
        if !stage.h[j].is_finite() || !stage.q[j].is_finite() {
            return Err(Error::NumericalFailure {
                time: t,
                cell: Some(j),
                reason: format!("non-finite state (h={}, q={})", stage.h[j], stage.q[j]),
            });
        }
        if stage.h[j] < DEPTH_FLOOR {
            clipped += stage.h[j].abs() * widths.get(j).copied().unwrap_or(1.0);
            stage.h[j] = 0.0;
            stage.q[j] = 0.0;
        }
    }
    Ok(clipped)
}

/// What the loop passes to observers at snapshot times.
pub struct Snapshot<'a> {
    pub index: usize,
    pub state: &'a State,
    pub recon: &'a ReconOutput,
    pub detectors: Option<&'a DetectorOutput>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Halt,
}

pub trait Observer {
    fn on_snapshot(&mut self, _snapshot: &Snapshot<'_>) {}

    /// Called after every completed step.
    fn on_step(&mut self, _state: &State) -> Control {
        Control::Continue
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub state: State,
    pub steps: usize,
    pub clipped_mass: f64,
    /// True when an observer stopped the run before `t_end`.
    pub halted: bool,
}

/// Everything that stays fixed during a run.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub grid: &'a Grid,
    pub bed: &'a BedProfile,
    pub boundaries: BoundarySpec,
    pub scheme: &'a SchemeConfig,
    pub phys: &'a PhysParams,
}

impl Problem<'_> {
    pub fn rhs(&self, state: &State) -> Result<RhsData> {
        let ghosted = apply_boundaries(state, self.bed, self.grid, &self.boundaries);
        flux::assemble_rhs(&ghosted, self.scheme, self.phys).map_err(|e| as_failure(e, state.t))
    }

    fn derivative(&self, state: &State) -> Result<Derivative> {
        self.rhs(state).map(|r| (r.dh, r.dq))
    }
}

fn as_failure(e: Error, t: f64) -> Error {
    match e {
        Error::InvalidState(reason) => Error::NumericalFailure {
            time: t,
            cell: None,
            reason,
        },
        other => other,
    }
}

/// Time steps that are smaller than this fraction of the run length abort the run.
const DT_COLLAPSE: f64 = 1e-12;

/// Advances `initial` to `controls.t_end`, invoking observers at every
/// snapshot time (including the start time if listed).
pub fn run(
    initial: State,
    problem: &Problem<'_>,
    controls: &TimeControls,
    observers: &mut [&mut dyn Observer],
) -> Result<RunOutcome> {
    initial.validate()?;
    problem.scheme.validate()?;
    controls.validate(initial.t)?;
    if initial.len() != problem.grid.len() || problem.bed.len() != problem.grid.len() {
        return Err(Error::invalid_argument("state, bed and grid sizes differ"));
    }
    let widths = problem.grid.widths();
    let span = (controls.t_end - initial.t).abs().max(f64::MIN_POSITIVE);
    let min_dx = problem.grid.min_width();

    let mut state = initial;
    let mut steps = 0;
    let mut clipped_mass = 0.0;
    let mut next_snapshot = 0;
    let snaps = &controls.snapshot_times;

    loop {
        let rhs = problem.rhs(&state)?;
        while next_snapshot < snaps.len() && snaps[next_snapshot] <= state.t {
            let snapshot = Snapshot {
                index: next_snapshot,
                state: &state,
                recon: &rhs.recon,
                detectors: rhs.detectors.as_ref(),
            };
            for obs in observers.iter_mut() {
                obs.on_snapshot(&snapshot);
            }
            next_snapshot += 1;
        }
        if state.t >= controls.t_end {
            break;
        }

        let mut dt = stable_dt(&state, problem.grid, problem.phys, controls);
        let interface_speed = rhs.fluxes.max_speed();
        if interface_speed > 0.0 {
            dt = dt.min(controls.cfl * min_dx / interface_speed);
        }
        if !dt.is_finite() {
            dt = span.min(controls.dt_max);
        }
        if dt < DT_COLLAPSE * span {
            return Err(Error::NumericalFailure {
                time: state.t,
                cell: None,
                reason: format!("time step collapsed to {dt:e}"),
            });
        }
        let stop = snaps
            .get(next_snapshot)
            .copied()
            .unwrap_or(controls.t_end)
            .min(controls.t_end);
        dt = clip_to_stop(state.t, dt, stop);
        let t_new = if dt == stop - state.t { stop } else { state.t + dt };

        let first = (rhs.dh, rhs.dq);
        let outcome = ssp_rk2_from(&state, &first, dt, widths, |s| problem.derivative(s))?;
        state = outcome.state;
        state.t = t_new;
        clipped_mass += outcome.clipped_mass;
        steps += 1;

        let mut halt = false;
        for obs in observers.iter_mut() {
            if obs.on_step(&state) == Control::Halt {
                halt = true;
            }
        }
        if halt {
            return Ok(RunOutcome {
                state,
                steps,
                clipped_mass,
                halted: true,
            });
        }
    }
    Ok(RunOutcome {
        state,
        steps,
        clipped_mass,
        halted: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reconstruction::Scheme;
    use approx::assert_relative_eq;

    #[test]
    fn wall_ghost_reflects_discharge() {
        let grid = Grid::uniform(4, 0.0, 1.0, 0.0).unwrap();
        let bed = BedProfile::from_fn(&grid, |x| x * x).unwrap();
        let state = State::new(vec![1.0, 2.0, 3.0, 4.0], vec![0.3, 0.0, 0.0, -0.2], 0.0).unwrap();
        let g = apply_boundaries(&state, &bed, &grid, &BoundarySpec::walls());
        assert_eq!((g.h[0], g.q[0]), (1.0, -0.3));
        assert_eq!((g.h[5], g.q[5]), (4.0, 0.2));
        assert_eq!(g.b[0], g.b[1]);
        assert_eq!(g.db[0], -g.db[1]);
        assert_eq!(g.cells(), 4);
        let e = apply_boundaries(&state, &bed, &grid, &BoundarySpec::extrapolate());
        assert_eq!((e.h[0], e.q[0]), (1.0, 0.3));
    }

    #[test]
    fn stable_dt_examples() {
        let grid = Grid::uniform(10, 0.0, 1.0, 0.0).unwrap();
        let phys = PhysParams::default();
        let controls = TimeControls::new(1.0);
        let dry = State::new(vec![0.0; 10], vec![0.0; 10], 0.0).unwrap();
        assert_eq!(stable_dt(&dry, &grid, &phys, &controls), f64::INFINITY);
        let mut h = vec![0.0; 10];
        h[4] = 1.0;
        let one = State::new(h, vec![0.0; 10], 0.0).unwrap();
        assert_relative_eq!(stable_dt(&one, &grid, &phys, &controls), 0.025, max_relative = 1e-12);
        let fine = Grid::uniform(20, 0.0, 1.0, 0.0).unwrap();
        let mut h = vec![0.0; 20];
        h[4] = 1.0;
        let one = State::new(h, vec![0.0; 20], 0.0).unwrap();
        assert_relative_eq!(stable_dt(&one, &fine, &phys, &controls), 0.0125, max_relative = 1e-12);
    }

    #[test]
    fn heun_on_scalar_decay() {
        let state = State::new(vec![1.0], vec![0.0], 0.0).unwrap();
        let out = ssp_rk2_step(&state, 0.1, &[1.0], |s| Ok((vec![-s.h[0]], vec![0.0]))).unwrap();
        assert_relative_eq!(out.state.h[0], 0.905, epsilon = 1e-15);
        let fixed = ssp_rk2_step(&state, 0.1, &[1.0], |_| Ok((vec![0.0], vec![0.0]))).unwrap();
        assert_eq!(fixed.state.h, state.h);
    }

    #[test]
    fn heun_matches_linear_system() {
        // dy/dt = A y with A = [[0, 1], [-1, 0]]; Heun gives (I + dt A + dt² A²/2) y.
        let state = State::new(vec![0.3], vec![0.7], 0.0).unwrap();
        let dt = 0.05;
        let out = ssp_rk2_step(&state, dt, &[1.0], |s| Ok((vec![s.q[0]], vec![-s.h[0]]))).unwrap();
        let (y0, y1) = (0.3, 0.7);
        let e0 = y0 + dt * y1 - 0.5 * dt * dt * y0;
        let e1 = y1 - dt * y0 - 0.5 * dt * dt * y1;
        assert_relative_eq!(out.state.h[0], e0, epsilon = 1e-15);
        assert_relative_eq!(out.state.q[0], e1, epsilon = 1e-15);
    }

    #[test]
    fn clipping_is_logged_and_zeroes_discharge() {
        let state = State::new(vec![1e-3, 1.0], vec![0.5, 0.0], 0.0).unwrap();
        let out = ssp_rk2_step(&state, 1.0, &[2.0, 2.0], |_| Ok((vec![-1.0, 0.0], vec![0.0, 0.0]))).unwrap();
        assert_eq!(out.state.h[0], 0.0);
        assert_eq!(out.state.q[0], 0.0);
        assert!(out.clipped_mass > 0.0);
    }

    #[test]
    fn non_finite_values_fail_with_cell() {
        let state = State::new(vec![1.0, 1.0], vec![0.0, 0.0], 0.5).unwrap();
        let err = ssp_rk2_step(&state, 0.1, &[1.0, 1.0], |_| Ok((vec![0.0, f64::NAN], vec![0.0, 0.0]))).unwrap_err();
        match err {
            Error::NumericalFailure { time, cell, .. } => {
                assert_eq!(time, 0.5);
                assert_eq!(cell, Some(1));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn clip_to_stop_lands_exactly() {
        assert_eq!(clip_to_stop(0.0, 0.3, 0.25), 0.25);
        assert_eq!(clip_to_stop(0.0, 0.1, 0.25), 0.1);
        assert_eq!(clip_to_stop(0.1, 0.15 - 1e-17, 0.25), 0.25 - 0.1);
    }

    struct Recorder(Vec<f64>);

    impl Observer for Recorder {
        fn on_snapshot(&mut self, s: &Snapshot<'_>) {
            self.0.push(s.state.t);
        }
    }

    fn lake() -> (Grid, BedProfile, State) {
        let grid = Grid::uniform(20, -1.0, 1.0, 0.0).unwrap();
        let bed = BedProfile::from_fn(&grid, |x| 0.2 * x * x).unwrap();
        let h = bed.center().iter().map(|b| 1.0 - b).collect();
        let state = State::new(h, vec![0.0; 20], 0.0).unwrap();
        (grid, bed, state)
    }

    #[test]
    fn run_hits_snapshots_and_zero_length_is_identity() {
        let (grid, bed, state) = lake();
        let cfg = SchemeConfig::with_scheme(Scheme::SkT);
        let phys = PhysParams::default();
        let problem = Problem {
            grid: &grid,
            bed: &bed,
            boundaries: BoundarySpec::walls(),
            scheme: &cfg,
            phys: &phys,
        };
        let mut rec = Recorder(Vec::new());
        let controls = TimeControls::new(0.5).with_snapshots(vec![0.0, 0.123, 0.5]);
        let out = run(state.clone(), &problem, &controls, &mut [&mut rec]).unwrap();
        assert_eq!(rec.0, vec![0.0, 0.123, 0.5]);
        assert_eq!(out.state.t, 0.5);
        assert!(!out.halted);

        let still = run(state.clone(), &problem, &TimeControls::new(0.0), &mut []).unwrap();
        assert_eq!(still.state, state);
        assert_eq!(still.steps, 0);
    }

    #[test]
    fn run_is_deterministic() {
        let (grid, bed, mut state) = lake();
        state.h[7] += 0.1;
        let cfg = SchemeConfig::default();
        let phys = PhysParams::default();
        let problem = Problem {
            grid: &grid,
            bed: &bed,
            boundaries: BoundarySpec::walls(),
            scheme: &cfg,
            phys: &phys,
        };
        let a = run(state.clone(), &problem, &TimeControls::new(0.7), &mut []).unwrap();
        let b = run(state, &problem, &TimeControls::new(0.7), &mut []).unwrap();
        assert_eq!(a.state.h, b.state.h);
        assert_eq!(a.state.q, b.state.q);
    }

    struct HaltAfter(usize);

    impl Observer for HaltAfter {
        fn on_step(&mut self, _: &State) -> Control {
            self.0 = self.0.saturating_sub(1);
            if self.0 == 0 {
                Control::Halt
            } else {
                Control::Continue
            }
        }
    }

    #[test]
    fn observer_can_halt() {
        let (grid, bed, state) = lake();
        let cfg = SchemeConfig::default();
        let phys = PhysParams::default();
        let problem = Problem {
            grid: &grid,
            bed: &bed,
            boundaries: BoundarySpec::walls(),
            scheme: &cfg,
            phys: &phys,
        };
        let out = run(state, &problem, &TimeControls::new(10.0), &mut [&mut HaltAfter(3)]).unwrap();
        assert!(out.halted);
        assert_eq!(out.steps, 3);
    }

    #[test]
    fn invalid_controls_rejected() {
        let mut c = TimeControls::new(1.0);
        c.cfl = 0.6;
        assert!(c.validate(0.0).is_err());
        let c = TimeControls::new(1.0).with_snapshots(vec![0.5, 0.2]);
        assert!(c.validate(0.0).is_err());
        assert!(TimeControls::new(-1.0).validate(0.0).is_err());
    }
}
