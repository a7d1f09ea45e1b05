//! Flat-file artifacts: JSON records and CSV tables.

use std::fs;
use std::path::{Path, PathBuf};

use pshlab_core::scenario::Study;
use pshlab_core::variation::StencilGrid;
use serde::Serialize;

use crate::{CliError, ResultRecord, SweepRow};

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf, CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(path.to_path_buf())
}

pub fn write_grid(path: &Path, grid: &StencilGrid) -> Result<PathBuf, CliError> {
    fs::write(path, grid.to_csv())?;
    Ok(path.to_path_buf())
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

/// Ledger entries per refinement level.
pub fn write_refinement(path: &Path, study: &Study) -> Result<PathBuf, CliError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record([
        "level", "faces", "h", "energy", "delta_e", "a", "b", "alpha", "rho", "r1", "r2", "r3", "r4", "hopf_l1",
        "tangency",
    ])
    .map_err(csv_error)?;
    for l in &study.levels {
        let c = &l.certificate;
        let row = [l.energy, c.delta_e, c.a, c.b, c.alpha, c.rho, c.r1, c.r2, c.r3, c.r4, c.hopf_l1, c.tangency.defect];
        let mut fields = vec![l.level.to_string(), l.faces.to_string(), format!("{:e}", l.h)];
        fields.extend(row.iter().map(|x| format!("{x:e}")));
        w.write_record(&fields).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(path.to_path_buf())
}

pub fn write_summary(path: &Path, rows: &[SweepRow]) -> Result<PathBuf, CliError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(path.to_path_buf())
}

/// Record, refinement table and (optionally) the energy grid of a certify run.
pub fn write_run(dir: &Path, stem: &str, rec: &ResultRecord, grid: Option<&StencilGrid>) -> Result<(), CliError> {
    ensure_dir(dir)?;
    write_json(&dir.join(format!("{stem}.json")), rec)?;
    write_refinement(&dir.join(format!("{stem}_refinement.csv")), &rec.study)?;
    if let Some(g) = grid {
        write_grid(&dir.join(format!("{stem}_egrid.csv")), g)?;
    }
    Ok(())
}
