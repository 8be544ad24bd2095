//! In-memory run record and its on-disk directory layout.
//!
//! ```text
//! <dir>/config.json            validated configuration
//! <dir>/norms.csv              one NormReport per row
//! <dir>/turning.csv            curve runs only
//! <dir>/snapshots/t_<t>.csv    x,f  or  alpha,z1,z2
//! <dir>/status.json            final status, turning time, flags
//! ```
//!
//! Every number is written with 17 significant digits so values round-trip
//! exactly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::{MuskatError, Result};
use crate::grid::{PeriodicGrid, RealField};
use crate::norms::NormReport;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    Completed,
    BlowupSuspected,
    SelfIntersectionSuspected,
    ParametrizationDegraded,
    Turned,
    NonFinite,
}

impl RunStatus {
    /// 0 for a completed run, 2 for any numerical halt.
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Completed => 0,
            _ => 2,
        }
    }
}

/// Curve-run diagnostics at one report instant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TurningRecord {
    pub time: f64,
    pub turning_indicator: f64,
    pub chord_arc_min: f64,
    pub param_ratio: f64,
}

impl TurningRecord {
    pub const KEYS: [&'static str; 4] =
        ["time", "turning_indicator", "chord_arc_min", "param_ratio"];
}

#[derive(Clone, Debug, PartialEq)]
pub enum SnapshotData {
    Graph(RealField),
    Curve {
        grid: PeriodicGrid,
        z1: Vec<f64>,
        z2: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub data: SnapshotData,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct StatusFile {
    status: RunStatus,
    turning_time: Option<f64>,
    flags: Vec<String>,
    message: Option<String>,
}

/// Everything a run produced.
#[derive(Clone, Debug, PartialEq)]
pub struct RunLog {
    pub config: SimConfig,
    pub reports: Vec<NormReport>,
    pub snapshots: Vec<Snapshot>,
    pub turning: Vec<TurningRecord>,
    pub status: RunStatus,
    pub turning_time: Option<f64>,
    pub flags: Vec<String>,
    pub message: Option<String>,
}

pub(crate) fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.iter().map(|v| fmt_num(*v)))
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> MuskatError {
    MuskatError::RunLog(e.to_string())
}

/// Header and numeric rows of a CSV file.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| MuskatError::RunLog(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = r
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let row = record
            .iter()
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| {
                MuskatError::RunLog(format!("{} row {}: {e}", path.display(), line + 2))
            })?;
        if row.len() != header.len() {
            return Err(MuskatError::RunLog(format!(
                "{} row {}: expected {} columns",
                path.display(),
                line + 2,
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

/// A graph field stored with columns `x, f` on a uniform grid starting at 0.
/// The period is `N` times the spacing of the `x` column.
pub fn read_field_csv(path: &Path) -> Result<RealField> {
    let (header, rows) = read_csv(path)?;
    if header != ["x", "f"] {
        return Err(MuskatError::RunLog(format!(
            "{}: expected columns x,f, found {}",
            path.display(),
            header.join(",")
        )));
    }
    if rows.len() < 2 {
        return Err(MuskatError::RunLog(format!(
            "{}: fewer than two rows",
            path.display()
        )));
    }
    let h = rows[1][0] - rows[0][0];
    let uniform = rows
        .iter()
        .enumerate()
        .all(|(j, r)| (r[0] - rows[0][0] - j as f64 * h).abs() <= 1e-9 * h * rows.len() as f64);
    if !(h > 0.0) || !uniform || rows[0][0].abs() > 1e-12 * h {
        return Err(MuskatError::RunLog(format!(
            "{}: x must be uniform and start at 0",
            path.display()
        )));
    }
    let grid = PeriodicGrid::new(rows.len(), h * rows.len() as f64)?;
    RealField::new(grid, rows.iter().map(|r| r[1]).collect())
}

fn snapshot_name(time: f64) -> String {
    format!("t_{}.csv", fmt_num(time))
}

impl RunLog {
    pub fn new(config: SimConfig) -> Self {
        Self {
            config,
            reports: Vec::new(),
            snapshots: Vec::new(),
            turning: Vec::new(),
            status: RunStatus::Completed,
            turning_time: None,
            flags: Vec::new(),
            message: None,
        }
    }

    pub fn initial_report(&self) -> Option<&NormReport> {
        self.reports.first()
    }

    /// Graph snapshots in time order.
    pub fn graph_snapshots(&self) -> impl Iterator<Item = (f64, &RealField)> {
        self.snapshots.iter().filter_map(|s| match &s.data {
            SnapshotData::Graph(f) => Some((s.time, f)),
            SnapshotData::Curve { .. } => None,
        })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let snap_dir = dir.join("snapshots");
        fs::create_dir_all(&snap_dir)?;
        fs::write(
            dir.join("config.json"),
            serde_json::to_string_pretty(&self.config)? + "\n",
        )?;
        write_csv(
            &dir.join("norms.csv"),
            &NormReport::KEYS,
            self.reports.iter().map(|r| r.values().to_vec()),
        )?;
        if !self.turning.is_empty() {
            write_csv(
                &dir.join("turning.csv"),
                &TurningRecord::KEYS,
                self.turning
                    .iter()
                    .map(|t| vec![t.time, t.turning_indicator, t.chord_arc_min, t.param_ratio]),
            )?;
        }
        for snap in &self.snapshots {
            let path = snap_dir.join(snapshot_name(snap.time));
            match &snap.data {
                SnapshotData::Graph(f) => write_csv(
                    &path,
                    &["x", "f"],
                    f.samples()
                        .iter()
                        .enumerate()
                        .map(|(j, v)| vec![f.grid().x(j), *v]),
                )?,
                SnapshotData::Curve { grid, z1, z2 } => write_csv(
                    &path,
                    &["alpha", "z1", "z2"],
                    z1.iter()
                        .zip(z2)
                        .enumerate()
                        .map(|(j, (a, b))| vec![grid.x(j), *a, *b]),
                )?,
            }
        }
        let status = StatusFile {
            status: self.status,
            turning_time: self.turning_time,
            flags: self.flags.clone(),
            message: self.message.clone(),
        };
        fs::write(
            dir.join("status.json"),
            serde_json::to_string_pretty(&status)? + "\n",
        )?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let read = |name: &str| {
            fs::read_to_string(dir.join(name))
                .map_err(|e| MuskatError::RunLog(format!("{}: {e}", dir.join(name).display())))
        };
        let config: SimConfig = serde_json::from_str(&read("config.json")?)?;
        let status: StatusFile = serde_json::from_str(&read("status.json")?)?;
        let (header, rows) = read_csv(&dir.join("norms.csv"))?;
        if header != NormReport::KEYS {
            return Err(MuskatError::RunLog(format!(
                "norms.csv header {header:?} does not match {:?}",
                NormReport::KEYS
            )));
        }
        let reports = rows
            .into_iter()
            .map(|r| NormReport::from_values(r.try_into().expect("column count checked")))
            .collect();
        let turning_path = dir.join("turning.csv");
        let turning = if turning_path.exists() {
            let (header, rows) = read_csv(&turning_path)?;
            if header != TurningRecord::KEYS {
                return Err(MuskatError::RunLog(format!(
                    "turning.csv header {header:?} does not match {:?}",
                    TurningRecord::KEYS
                )));
            }
            rows.into_iter()
                .map(|r| TurningRecord {
                    time: r[0],
                    turning_indicator: r[1],
                    chord_arc_min: r[2],
                    param_ratio: r[3],
                })
                .collect()
        } else {
            Vec::new()
        };
        let mut snapshots = Vec::new();
        let snap_dir = dir.join("snapshots");
        if snap_dir.exists() {
            for entry in fs::read_dir(&snap_dir)? {
                let path = entry?.path();
                let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
                    continue;
                };
                let Some(t) = name.strip_prefix("t_").and_then(|n| n.strip_suffix(".csv")) else {
                    continue;
                };
                let time: f64 = t
                    .parse()
                    .map_err(|_| MuskatError::RunLog(format!("bad snapshot name {name}")))?;
                snapshots.push(Snapshot {
                    time,
                    data: load_snapshot(&path, config.length)?,
                });
            }
        }
        snapshots.sort_by(|a, b| a.time.total_cmp(&b.time));
        Ok(Self {
            config,
            reports,
            snapshots,
            turning,
            status: status.status,
            turning_time: status.turning_time,
            flags: status.flags,
            message: status.message,
        })
    }
}

fn load_snapshot(path: &Path, length: f64) -> Result<SnapshotData> {
    let (header, rows) = read_csv(path)?;
    let grid = PeriodicGrid::new(rows.len(), length)
        .map_err(|e| MuskatError::RunLog(format!("{}: {e}", path.display())))?;
    let column = |i: usize| rows.iter().map(|r| r[i]).collect::<Vec<f64>>();
    match header
        .iter()
        .map(String::as_str)
        .collect::<Vec<_>>()
        .as_slice()
    {
        ["x", "f"] => Ok(SnapshotData::Graph(RealField::new(grid, column(1))?)),
        ["alpha", "z1", "z2"] => Ok(SnapshotData::Curve {
            grid,
            z1: column(1),
            z2: column(2),
        }),
        _ => Err(MuskatError::RunLog(format!(
            "{}: unexpected header {header:?}",
            path.display()
        ))),
    }
}
