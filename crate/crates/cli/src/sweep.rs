use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Serialize;

use shoreline::testbed::fit_loglog_slope;

use crate::args::RunConfig;
use crate::error::CliError;
use crate::output::{format_float, prepare_dir, write_json};
use crate::run::{run_single, FailureInfo};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepEntry {
    pub cells: usize,
    pub summary: PathBuf,
    pub failure: Option<FailureInfo>,
    pub final_errors: BTreeMap<String, f64>,
    pub time_mean_errors: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub config: RunConfig,
    pub runs: Vec<SweepEntry>,
    /// Log-log slope of the final error against `J` per region; `None`
    /// when fewer than two successful resolutions have a positive error.
    pub slopes: BTreeMap<String, Option<f64>>,
    pub time_mean_slopes: BTreeMap<String, Option<f64>>,
}

impl SweepReport {
    pub fn any_failed(&self) -> bool {
        self.runs.iter().any(|r| r.failure.is_some())
    }
}

fn slopes(runs: &[SweepEntry], pick: impl Fn(&SweepEntry) -> &BTreeMap<String, f64>) -> BTreeMap<String, Option<f64>> {
    let regions: BTreeSet<&String> = runs.iter().flat_map(|r| pick(r).keys()).collect();
    regions
        .into_iter()
        .map(|region| {
            let (j, e): (Vec<f64>, Vec<f64>) = runs
                .iter()
                .filter(|r| r.failure.is_none())
                .filter_map(|r| pick(r).get(region).map(|&e| (r.cells as f64, e)))
                .filter(|&(_, e)| e > 0.0)
                .unzip();
            (region.clone(), fit_loglog_slope(&j, &e).ok())
        })
        .collect()
}

/// Sweep output directory below `out`.
pub fn sweep_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out.join(format!("sweep-{}-{}", cfg.problem.name(), cfg.scheme.name()))
}

/// Runs every resolution of the ladder in turn; a failed run is recorded and
/// the sweep moves on.
pub fn run_sweep(cfg: &RunConfig) -> Result<SweepReport, CliError> {
    let dir = prepare_dir(&sweep_dir(cfg))?;
    let mut runs = Vec::new();
    for &cells in &cfg.ladder {
        let mut sub = cfg.with_cells(cells);
        sub.out = dir.clone();
        sub.sweep = false;
        let rec = run_single(&sub)?;
        runs.push(SweepEntry {
            cells,
            summary: rec.run_dir.join("summary.json"),
            failure: rec.failure,
            final_errors: rec.metrics.final_errors,
            time_mean_errors: rec.metrics.time_mean_errors,
        });
    }
    let report = SweepReport {
        config: cfg.clone(),
        slopes: slopes(&runs, |r| &r.final_errors),
        time_mean_slopes: slopes(&runs, |r| &r.time_mean_errors),
        runs,
    };
    write_json(&dir.join("sweep.json"), &report)?;
    write_sweep_csv(&dir.join("sweep.csv"), &report)?;
    Ok(report)
}

/// One row per run and region: `cells,region,final_error,time_mean_error,failed`.
pub fn write_sweep_csv(path: &Path, report: &SweepReport) -> Result<(), CliError> {
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["cells", "region", "final_error", "time_mean_error", "failed"])
        .map_err(csv_err)?;
    for r in &report.runs {
        let regions: BTreeSet<&String> = r.final_errors.keys().chain(r.time_mean_errors.keys()).collect();
        for region in regions {
            let val = |m: &BTreeMap<String, f64>| m.get(region).copied().map(format_float).unwrap_or_default();
            w.write_record([
                r.cells.to_string(),
                region.clone(),
                val(&r.final_errors),
                val(&r.time_mean_errors),
                r.failure.is_some().to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::args::parse_args;

    fn cfg(args: &str, out: &Path) -> RunConfig {
        let argv = format!("shoreline --sweep {args} --out {}", out.to_str().unwrap());
        parse_args(argv.split_whitespace()).unwrap()
    }

    #[test]
    fn short_thacker_sweep_converges() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg("--problem thacker --ladder 100,178,316 --t-end 0.5", dir.path());
        let report = run_sweep(&c).unwrap();
        assert_eq!(report.runs.len(), 3);
        assert!(!report.any_failed());
        let wet = report.slopes["wet"].unwrap();
        assert!(wet < -1.0, "{wet}");
        let csv = std::fs::read_to_string(sweep_dir(&c).join("sweep.csv")).unwrap();
        assert_eq!(csv.lines().count(), 1 + 3 * 2);
    }

    #[test]
    fn single_resolution_has_no_slope() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg("--problem dam-break --ladder 100 --t-end 0.2", dir.path());
        let report = run_sweep(&c).unwrap();
        assert_eq!(report.slopes["wet"], None);
        let json = std::fs::read_to_string(sweep_dir(&c).join("sweep.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert!(v["slopes"]["wet"].is_null());
    }

    #[test]
    fn failures_are_recorded_and_the_sweep_continues() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg("--problem dam-break --scheme minmod --ladder 316,100 --t-end 0.2", dir.path());
        let report = run_sweep(&c).unwrap();
        assert!(report.runs[0].failure.is_some());
        assert!(report.runs[1].failure.is_none());
        assert!(report.any_failed());
    }

    #[test]
    fn repeated_sweeps_are_bit_identical() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let args = "--problem thacker --ladder 100,178 --t-end 0.3";
        let ra = run_sweep(&cfg(args, a.path())).unwrap();
        let rb = run_sweep(&cfg(args, b.path())).unwrap();
        assert_eq!(ra.slopes, rb.slopes);
        assert_eq!(ra.runs[1].final_errors, rb.runs[1].final_errors);
    }
}
