use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use shoreline::testbed::{characteristic_invariants, H_DRY};
use shoreline::{BedProfile, Grid, State};

use crate::error::CliError;

pub const SNAPSHOT_COLUMNS: [&str; 10] = [
    "x_center", "h", "q", "u", "b_center", "eta", "gamma", "theta", "C_minus", "C_plus",
];

/// One CSV row. `u` is absent in dry cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRow {
    pub x_center: f64,
    pub h: f64,
    pub q: f64,
    pub u: Option<f64>,
    pub b_center: f64,
    pub eta: f64,
    pub gamma: f64,
    pub theta: f64,
    #[serde(rename = "C_minus")]
    pub c_minus: f64,
    #[serde(rename = "C_plus")]
    pub c_plus: f64,
}

/// Builds the rows for a snapshot. `h`, `q` and `u` are in the frame of the
/// grid; `C±` are in the rest frame.
pub fn snapshot_rows(
    state: &State,
    grid: &Grid,
    bed: &BedProfile,
    gamma: &[f64],
    theta: &[f64],
    g: f64,
) -> Vec<SnapshotRow> {
    let inv = characteristic_invariants(state, bed.center(), g, grid.frame_velocity());
    (0..state.len())
        .map(|j| {
            let h = state.h[j];
            SnapshotRow {
                x_center: grid.center(j),
                h,
                q: state.q[j],
                u: (h > H_DRY).then(|| state.q[j] / h),
                b_center: bed.center()[j],
                eta: h + bed.center()[j],
                gamma: gamma[j],
                theta: theta[j],
                c_minus: inv.c_minus[j],
                c_plus: inv.c_plus[j],
            }
        })
        .collect()
}

/// Seventeen significant digits, enough to recover every `f64` exactly.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_snapshot_csv(path: &Path, rows: &[SnapshotRow]) -> Result<(), CliError> {
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(SNAPSHOT_COLUMNS).map_err(csv_err)?;
    for r in rows {
        let u = r.u.map(format_float).unwrap_or_default();
        let fields = [
            format_float(r.x_center),
            format_float(r.h),
            format_float(r.q),
            u,
            format_float(r.b_center),
            format_float(r.eta),
            format_float(r.gamma),
            format_float(r.theta),
            format_float(r.c_minus),
            format_float(r.c_plus),
        ];
        w.write_record(&fields).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_snapshot_csv(path: &Path) -> Result<Vec<SnapshotRow>, CliError> {
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

/// Creates `dir` and checks that files can be written in it.
pub fn prepare_dir(dir: &Path) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"").map_err(|e| CliError::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| CliError::io(&probe, e))?;
    Ok(dir.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(v: [f64; 9], wet: bool) -> SnapshotRow {
        SnapshotRow {
            x_center: v[0],
            h: v[1],
            q: v[2],
            u: wet.then_some(v[2] / v[1]),
            b_center: v[3],
            eta: v[4],
            gamma: v[5],
            theta: v[6],
            c_minus: v[7],
            c_plus: v[8],
        }
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(
            rows in proptest::collection::vec((proptest::array::uniform9(-1e300f64..1e300), any::<bool>()), 1..20)
        ) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("s.csv");
            let rows: Vec<SnapshotRow> = rows.into_iter().map(|(v, w)| row(v, w)).collect();
            write_snapshot_csv(&path, &rows).unwrap();
            let back = read_snapshot_csv(&path).unwrap();
            prop_assert_eq!(back, rows);
        }
    }

    #[test]
    fn header_and_dry_cells() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let grid = Grid::uniform(3, 0.0, 3.0, 0.0).unwrap();
        let bed = BedProfile::flat(&grid);
        let state = State::new(vec![1.0, 0.0, 4.0], vec![0.5, 0.0, -2.0], 0.0).unwrap();
        let rows = snapshot_rows(&state, &grid, &bed, &[1.0; 3], &[1.0; 3], 1.0);
        write_snapshot_csv(&path, &rows).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), SNAPSHOT_COLUMNS.join(","));
        let dry: Vec<&str> = lines.nth(1).unwrap().split(',').collect();
        assert_eq!(dry[3], "");
        assert_eq!(rows[2].u, Some(-0.5));
        assert_eq!(rows[2].c_plus, -0.5 + 4.0);
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn unwritable_directory_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain-file");
        fs::write(&file, b"x").unwrap();
        assert!(matches!(prepare_dir(&file.join("sub")), Err(CliError::Io { .. })));
    }
}
