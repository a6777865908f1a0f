use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use shoreline::integrate::{Control, Observer, Snapshot, TimeControls};
use shoreline::testbed::{self, problem_setup, DamBreakDiagnostics, Setup, H_DRY, SLOW_SHOCK_RIGHT, SLOW_SHOCK_SETTLED};
use shoreline::{Error, PhysParams, ProblemId, SchemeConfig, State};

use crate::args::RunConfig;
use crate::error::CliError;
use crate::output::{prepare_dir, snapshot_rows, write_json, write_snapshot_csv};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureInfo {
    pub time: f64,
    pub cell: Option<usize>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapshotMetrics {
    pub t: f64,
    pub mass: f64,
    /// ℓ1 errors per region against the exact cell averages.
    pub errors: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outer_volume: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fronts: Option<DamBreakDiagnostics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub downstream_amplitude: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Metrics {
    pub snapshots: Vec<SnapshotMetrics>,
    /// Errors of the final state.
    pub final_errors: BTreeMap<String, f64>,
    /// Mean of the snapshot errors per region.
    pub time_mean_errors: BTreeMap<String, f64>,
    /// Largest `q/h` over cells holding any fluid, across all steps.
    pub peak_velocity: f64,
    /// Phase-space distance of the settled shock transition from the Hugoniot locus.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tube_width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub config: RunConfig,
    pub scheme_parameters: SchemeConfig,
    pub g: f64,
    pub frame_velocity: f64,
    pub run_dir: PathBuf,
    pub snapshot_files: Vec<PathBuf>,
    pub wall_clock_seconds: f64,
    pub steps: usize,
    pub clipped_mass: f64,
    pub halted: bool,
    pub final_time: Option<f64>,
    pub failure: Option<FailureInfo>,
    pub metrics: Metrics,
}

fn errors_of(id: ProblemId, state: &State, setup: &Setup) -> BTreeMap<String, f64> {
    match testbed::region_errors(id, state, &setup.grid) {
        Ok(e) => e.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        Err(_) => BTreeMap::new(),
    }
}

struct Recorder<'a> {
    cfg: &'a RunConfig,
    setup: &'a Setup,
    g: f64,
    dir: &'a Path,
    files: Vec<PathBuf>,
    metrics: Vec<SnapshotMetrics>,
    transitions: Vec<(f64, f64)>,
    peak_velocity: f64,
    io_error: Option<CliError>,
}

impl Recorder<'_> {
    fn measure(&self, state: &State) -> SnapshotMetrics {
        let id = self.cfg.problem;
        let grid = &self.setup.grid;
        let mut m = SnapshotMetrics {
            t: state.t,
            mass: state.total_mass(grid),
            errors: errors_of(id, state, self.setup),
            outer_volume: None,
            fronts: None,
            downstream_amplitude: None,
        };
        match id {
            ProblemId::BasinDrain => {
                m.outer_volume = Some(testbed::region_volume(state, grid, &testbed::drain_outer_region()));
            }
            ProblemId::DamBreak if state.t > 0.0 => {
                m.fronts = testbed::dam_break_fronts(state, grid, H_DRY).ok();
            }
            ProblemId::SlowShock => {
                let window = testbed::slow_shock_downstream_window(state.t, grid.min_width());
                if window.1 > window.0 {
                    let x = grid.centers();
                    m.downstream_amplitude =
                        Some(testbed::oscillation_amplitude(&x, &state.h, SLOW_SHOCK_RIGHT.0, window));
                }
            }
            _ => {}
        }
        m
    }
}

impl Observer for Recorder<'_> {
    fn on_snapshot(&mut self, s: &Snapshot<'_>) {
        if self.io_error.is_some() {
            return;
        }
        let theta = if s.recon.theta_h.len() == s.state.len() {
            s.recon.theta_h.clone()
        } else {
            vec![1.0; s.state.len()]
        };
        let rows = snapshot_rows(s.state, &self.setup.grid, &self.setup.bed, &s.recon.gamma, &theta, self.g);
        let path = self.dir.join(format!("snapshot_{:04}.csv", s.index));
        match write_snapshot_csv(&path, &rows) {
            Ok(()) => self.files.push(path),
            Err(e) => self.io_error = Some(e),
        }
        if self.cfg.problem == ProblemId::SlowShock && s.state.t >= SLOW_SHOCK_SETTLED - 1e-12 {
            let fv = self.setup.problem.frame_velocity;
            self.transitions.extend(testbed::shock_transition_points(s.state, fv, self.g));
        }
        let m = self.measure(s.state);
        self.metrics.push(m);
    }

    fn on_step(&mut self, state: &State) -> Control {
        if let Some((_, u)) = testbed::max_velocity(state, 0.0) {
            self.peak_velocity = self.peak_velocity.max(u);
        }
        let too_fast = self.cfg.halt_velocity.is_some_and(|limit| self.peak_velocity > limit);
        if self.io_error.is_some() || too_fast {
            Control::Halt
        } else {
            Control::Continue
        }
    }
}

/// Directory of a single run below `out`.
pub fn run_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out.join(format!("{}-{}-J{}", cfg.problem.name(), cfg.scheme.name(), cfg.cells))
}

/// Runs one configuration, writing a CSV per snapshot and `summary.json`.
/// A numerical failure is recorded rather than returned.
pub fn run_single(cfg: &RunConfig) -> Result<RunRecord, CliError> {
    let dir = prepare_dir(&run_dir(cfg))?;
    let setup = problem_setup(cfg.problem, cfg.cells)?;
    let phys = PhysParams::default();
    let scheme = SchemeConfig::with_scheme(cfg.scheme);
    let mut controls = TimeControls::new(cfg.t_end).with_snapshots(cfg.snapshots.clone());
    controls.cfl = cfg.cfl;

    let mut rec = Recorder {
        cfg,
        setup: &setup,
        g: phys.g,
        dir: &dir,
        files: Vec::new(),
        metrics: Vec::new(),
        transitions: Vec::new(),
        peak_velocity: testbed::max_velocity(&setup.initial, 0.0).map_or(0.0, |p| p.1),
        io_error: None,
    };
    let start = Instant::now();
    let outcome = setup.run(&scheme, &phys, &controls, &mut [&mut rec]);
    let wall = start.elapsed().as_secs_f64();
    if let Some(e) = rec.io_error.take() {
        return Err(e);
    }

    let mut metrics = Metrics {
        peak_velocity: rec.peak_velocity,
        ..Default::default()
    };
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for m in &rec.metrics {
        for (k, v) in &m.errors {
            let e = sums.entry(k.clone()).or_default();
            e.0 += v;
            e.1 += 1;
        }
    }
    metrics.time_mean_errors = sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect();
    if cfg.problem == ProblemId::SlowShock && !rec.transitions.is_empty() {
        metrics.tube_width = Some(testbed::tube_width(&rec.transitions, &testbed::slow_shock_locus(400)?));
    }

    let (mut steps, mut clipped, mut halted, mut final_time, mut failure) = (0, 0.0, false, None, None);
    match outcome {
        Ok(out) => {
            steps = out.steps;
            clipped = out.clipped_mass;
            halted = out.halted;
            final_time = Some(out.state.t);
            metrics.final_errors = errors_of(cfg.problem, &out.state, &setup);
        }
        Err(Error::NumericalFailure { time, cell, reason }) => {
            failure = Some(FailureInfo { time, cell, reason });
        }
        Err(e) => return Err(e.into()),
    }
    metrics.snapshots = rec.metrics;

    let record = RunRecord {
        config: cfg.clone(),
        scheme_parameters: scheme,
        g: phys.g,
        frame_velocity: setup.problem.frame_velocity,
        run_dir: dir.clone(),
        snapshot_files: rec.files,
        wall_clock_seconds: wall,
        steps,
        clipped_mass: clipped,
        halted,
        final_time,
        failure,
        metrics,
    };
    write_json(&dir.join("summary.json"), &record)?;
    Ok(record)
}
