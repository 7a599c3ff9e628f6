//! Comma-separated moment time series.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::Moments;

/// One row; moments in zero-point units, `xp_sym_hbar = ⟨{x,p}⟩/ħ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub t_omega: f64,
    pub mean_x_zpf: f64,
    pub mean_p_zpf: f64,
    pub x2_zpf2: f64,
    pub p2_zpf2: f64,
    pub xp_sym_hbar: f64,
    pub norm: f64,
    pub lambda_min: f64,
}

impl SeriesRow {
    pub fn new(t: f64, m: &Moments, norm: f64, lambda_min: f64) -> Self {
        Self {
            t_omega: t,
            mean_x_zpf: m.mean_x,
            mean_p_zpf: m.mean_p,
            x2_zpf2: m.x2,
            p2_zpf2: m.p2,
            xp_sym_hbar: m.xp_over_hbar(),
            norm,
            lambda_min,
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        k => {
            let offset = match &k {
                csv::ErrorKind::Deserialize { pos: Some(p), .. } => p.byte(),
                _ => 0,
            };
            Error::Format { offset, msg: format!("{k:?}") }
        }
    }
}

pub fn write_series(path: &Path, rows: &[SeriesRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_series(path: &Path) -> Result<Vec<SeriesRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut rows: Vec<SeriesRow> = Vec::new();
    for rec in r.deserialize() {
        let row: SeriesRow = rec.map_err(csv_err)?;
        if let Some(prev) = rows.last() {
            if !(row.t_omega > prev.t_omega) {
                return Err(Error::Format {
                    offset: 0,
                    msg: format!("t_omega not increasing at row {}", rows.len() + 1),
                });
            }
        }
        rows.push(row);
    }
    Ok(rows)
}
