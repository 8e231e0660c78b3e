//! CSV and JSON output formats.
//!
//! CSV values are written with 17 significant digits so that re-running a
//! seeded configuration reproduces files byte for byte.

use crate::error::{Error, Result};
use crate::gridops::CellArray;
use crate::shotnoise::PointCloud;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

/// Full-precision decimal rendering of one f64.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    let file = std::fs::File::create(path)
        .map_err(|e| Error::invalid(format!("cannot create {}: {e}", path.display())))?;
    Ok(std::io::BufWriter::new(file))
}

fn io_err(e: std::io::Error) -> Error {
    Error::invalid(format!("write failed: {e}"))
}

/// `replica,value` rows.
pub fn write_replica_csv(path: &Path, values: &[f64]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "replica,value").map_err(io_err)?;
    for (i, v) in values.iter().enumerate() {
        writeln!(w, "{i},{}", fmt_float(*v)).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// `replica,point_id,value` rows, replica-major.
pub fn write_field_csv(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "replica,point_id,value").map_err(io_err)?;
    for (r, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            writeln!(w, "{r},{j},{}", fmt_float(*v)).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

/// `k_1..k_d,value` rows of a cell array.
pub fn write_cells_csv(path: &Path, cells: &CellArray) -> Result<()> {
    let mut w = create(path)?;
    let d = cells.dim();
    let header: Vec<String> = (1..=d).map(|i| format!("k_{i}")).collect();
    writeln!(w, "{},value", header.join(",")).map_err(io_err)?;
    for (flat, v) in cells.values().iter().enumerate() {
        let k = cells.cell_at(flat);
        let coords: Vec<String> = k.iter().map(|c| c.to_string()).collect();
        writeln!(w, "{},{}", coords.join(","), fmt_float(*v)).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// `e_1..e_dim,xi` rows of a marked cloud.
pub fn write_cloud_csv(path: &Path, cloud: &PointCloud) -> Result<()> {
    let mut w = create(path)?;
    let dim = cloud.marks.first().map_or(0, |(e, _)| e.len());
    let header: Vec<String> = (1..=dim).map(|i| format!("e_{i}")).collect();
    writeln!(w, "{},xi", header.join(",")).map_err(io_err)?;
    for (e, xi) in &cloud.marks {
        let coords: Vec<String> = e.iter().map(|v| fmt_float(*v)).collect();
        writeln!(w, "{},{}", coords.join(","), fmt_float(*xi)).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Reads a headerless or headered CSV of points (one point per row).
pub fn read_points_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
    let mut points = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let parsed: std::result::Result<Vec<f64>, _> =
            fields.iter().map(|f| f.trim().parse::<f64>()).collect();
        match parsed {
            Ok(coords) => points.push(coords),
            Err(_) if lineno == 0 => continue, // header row
            Err(e) => {
                return Err(Error::invalid(format!(
                    "bad point on line {}: {e}",
                    lineno + 1
                )))
            }
        }
    }
    if points.is_empty() {
        return Err(Error::invalid("points file contains no points"));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::invalid("points have inconsistent dimensions"));
    }
    Ok(points)
}

/// Marginal summary attached to replica outputs.
#[derive(Clone, Debug, Serialize)]
pub struct MarginalSummary {
    pub alpha: f64,
    pub sigma_f: f64,
    pub nu_f: f64,
    pub h: f64,
    pub n: usize,
    pub ks_stat: f64,
    pub ks_pvalue: f64,
}

/// Wraps any serializable report together with the configuration that
/// produced it, so the run can be reproduced from the report alone.
pub fn write_report_json<T: Serialize, C: Serialize>(
    path: &Path,
    report: &T,
    config: &C,
) -> Result<()> {
    let body = serde_json::json!({
        "config": config,
        "report": report,
    });
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, &body)
        .map_err(|e| Error::invalid(format!("report serialization failed: {e}")))?;
    writeln!(w).map_err(io_err)?;
    w.flush().map_err(io_err)
}
