use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::Parser;
use serde::Serialize;

use shoreline::testbed::{TestProblem, RESOLUTION_LADDER};
use shoreline::{ProblemId, Scheme};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "shoreline", version, about = "One-dimensional shallow water benchmark runner")]
struct Cli {
    /// Benchmark problem: lake-at-rest, basin-drain, thacker, slow-shock, dam-break (or tp1..tp5).
    #[arg(long)]
    problem: ProblemId,

    /// Reconstruction: skt, skk, ku02, ku07, ch15, constant, minmod.
    #[arg(long, default_value = "skt")]
    scheme: Scheme,

    /// Number of cells; defaults to the problem's standard resolution.
    #[arg(long)]
    cells: Option<usize>,

    #[arg(long, default_value_t = 0.25)]
    cfl: f64,

    /// End time; defaults to the problem's standard end time.
    #[arg(long, allow_negative_numbers = true)]
    t_end: Option<f64>,

    /// Comma-separated snapshot times.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snapshots: Option<Vec<f64>>,

    #[arg(long, default_value = "runs")]
    out: PathBuf,

    /// Run every resolution of the ladder and fit convergence slopes.
    #[arg(long)]
    sweep: bool,

    /// Comma-separated resolutions for --sweep.
    #[arg(long, value_delimiter = ',')]
    ladder: Option<Vec<usize>>,

    /// Stop a run once the peak velocity exceeds this value.
    #[arg(long)]
    halt_velocity: Option<f64>,

    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    #[serde(serialize_with = "as_name")]
    pub problem: ProblemId,
    #[serde(serialize_with = "scheme_name")]
    pub scheme: Scheme,
    pub cells: usize,
    pub cfl: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub snapshots: Vec<f64>,
    pub out: PathBuf,
    pub sweep: bool,
    pub ladder: Vec<usize>,
    pub halt_velocity: Option<f64>,
    pub seed: u64,
}

fn as_name<S: serde::Serializer>(p: &ProblemId, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(p.name())
}

fn scheme_name<S: serde::Serializer>(p: &Scheme, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(p.name())
}

impl RunConfig {
    /// The same configuration at a different resolution.
    pub fn with_cells(&self, cells: usize) -> Self {
        RunConfig {
            cells,
            ..self.clone()
        }
    }
}

/// Parses `argv` (including the program name).
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => CliError::Help(e.to_string()),
        _ => CliError::Usage(e.to_string()),
    })?;
    let problem = TestProblem::new(cli.problem);
    let cells = cli.cells.unwrap_or(problem.default_cells);
    if cells < 3 {
        return Err(CliError::Usage(format!("--cells must be at least 3, got {cells}")));
    }
    if !(cli.cfl > 0.0 && cli.cfl <= 1.0) {
        return Err(CliError::Usage(format!("--cfl must lie in (0, 1], got {}", cli.cfl)));
    }
    let (t_start, default_end) = problem.t_range;
    let t_end = cli.t_end.unwrap_or(default_end);
    if !(t_end > t_start) {
        return Err(CliError::Usage(format!("--t-end {t_end} must exceed the start time {t_start}")));
    }
    let snapshots = match cli.snapshots {
        Some(times) => {
            if times.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(CliError::Usage("--snapshots must be strictly increasing".into()));
            }
            if times.iter().any(|&t| t < t_start || t > t_end) {
                return Err(CliError::Usage(format!(
                    "--snapshots must lie in [{t_start}, {t_end}]"
                )));
            }
            times
        }
        None => default_snapshots(&problem, t_end),
    };
    let ladder = cli.ladder.unwrap_or_else(|| RESOLUTION_LADDER.to_vec());
    if ladder.is_empty() || ladder.iter().any(|&j| j < 3) {
        return Err(CliError::Usage("--ladder resolutions must be at least 3".into()));
    }
    if cli.halt_velocity.is_some_and(|u| !(u > 0.0)) {
        return Err(CliError::Usage("--halt-velocity must be positive".into()));
    }
    Ok(RunConfig {
        problem: cli.problem,
        scheme: cli.scheme,
        cells,
        cfl: cli.cfl,
        t_start,
        t_end,
        snapshots,
        out: cli.out,
        sweep: cli.sweep,
        ladder,
        halt_velocity: cli.halt_velocity,
        seed: cli.seed,
    })
}

/// The problem's standard cadence cut at `t_end`, always ending at `t_end`.
fn default_snapshots(problem: &TestProblem, t_end: f64) -> Vec<f64> {
    let standard = problem.default_snapshots();
    if (t_end - problem.t_range.1).abs() <= f64::EPSILON * t_end.abs().max(1.0) {
        return standard;
    }
    let mut times: Vec<f64> = standard.into_iter().filter(|&t| t < t_end).collect();
    times.push(t_end);
    times
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<RunConfig, CliError> {
        parse_args(std::iter::once("shoreline").chain(s.split_whitespace()))
    }

    #[test]
    fn dam_break_config() {
        let cfg = parse("--problem dam-break --scheme skt --cells 1000 --out runs/").unwrap();
        assert_eq!(cfg.problem, ProblemId::DamBreak);
        assert_eq!(cfg.scheme, Scheme::SkT);
        assert_eq!(cfg.cells, 1000);
        assert_eq!(cfg.out, PathBuf::from("runs/"));
        assert_eq!((cfg.t_start, cfg.t_end), (0.0, 1.0));
        assert!(!cfg.sweep);
    }

    #[test]
    fn too_few_cells_is_a_usage_error() {
        assert!(matches!(parse("--problem tp1 --cells 2"), Err(CliError::Usage(_))));
        assert!(matches!(parse("--cells 2"), Err(CliError::Usage(_))));
    }

    #[test]
    fn unknown_flags_and_values_are_rejected() {
        assert!(matches!(parse("--problem tp1 --frobnicate"), Err(CliError::Usage(_))));
        assert!(matches!(parse("--problem tp9"), Err(CliError::Usage(_))));
        assert!(matches!(parse("--problem tp1 --scheme wendland"), Err(CliError::Usage(_))));
        assert!(matches!(parse("--problem tp1 --cfl 0"), Err(CliError::Usage(_))));
        assert!(matches!(parse("--help"), Err(CliError::Help(_))));
    }

    #[test]
    fn sweep_uses_the_full_ladder() {
        let cfg = parse("--sweep --problem thacker --scheme skt").unwrap();
        assert!(cfg.sweep);
        assert_eq!(cfg.ladder, RESOLUTION_LADDER.to_vec());
    }

    #[test]
    fn snapshot_lists() {
        let cfg = parse("--problem tp5 --snapshots 0,0.2,1").unwrap();
        assert_eq!(cfg.snapshots, vec![0.0, 0.2, 1.0]);
        assert!(parse("--problem tp5 --snapshots 0.2,0.1").is_err());
        assert!(parse("--problem tp5 --snapshots 0.5,2").is_err());
        let cut = parse("--problem tp3 --t-end 1").unwrap();
        assert_eq!(cut.snapshots.last(), Some(&1.0));
        assert!(cut.snapshots.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn slow_shock_keeps_its_cadence() {
        let cfg = parse("--problem slow-shock").unwrap();
        assert_eq!(cfg.cells, 1000);
        assert_eq!(cfg.snapshots.len(), 201);
        assert_eq!(cfg.t_start, -1.0);
        let early = parse("--problem tp4 --t-end -0.5 --snapshots -1,-0.75").unwrap();
        assert_eq!(early.t_end, -0.5);
        assert_eq!(early.snapshots, vec![-1.0, -0.75]);
    }
}
