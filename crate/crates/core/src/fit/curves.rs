use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::FitError;

/// A data point `(x, y ± err)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub y: f64,
    pub err: f64,
}

impl CurvePoint {
    pub fn new(x: f64, y: f64, err: f64) -> Self {
        Self { x, y, err }
    }
}

pub(crate) fn csv_error(e: csv::Error) -> FitError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    FitError::Parse {
        line,
        message: e.to_string(),
    }
}

pub(crate) fn check_points(points: &[CurvePoint]) -> Result<(), FitError> {
    for (i, p) in points.iter().enumerate() {
        if !(p.x.is_finite() && p.y.is_finite() && p.err.is_finite() && p.err > 0.0) {
            return Err(FitError::InvalidInput(format!(
                "point {i}: ({}, {} ± {}) needs finite values and a positive error",
                p.x, p.y, p.err
            )));
        }
    }
    Ok(())
}

/// Reads `x,y,err` CSV (header required). Errors report the 1-based line.
pub fn read_curve_csv<R: Read>(input: R) -> Result<Vec<CurvePoint>, FitError> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers().map_err(csv_error)?.clone();
    for col in ["x", "y", "err"] {
        if !headers.iter().any(|h| h.trim() == col) {
            return Err(FitError::Parse {
                line: 1,
                message: format!("missing column {col:?}"),
            });
        }
    }
    let mut out = Vec::new();
    for row in reader.deserialize::<CurvePoint>() {
        out.push(row.map_err(csv_error)?);
    }
    check_points(&out)?;
    Ok(out)
}

pub fn write_curve_csv<W: Write>(points: &[CurvePoint], out: W) -> Result<(), FitError> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p).map_err(csv_error)?;
    }
    w.flush().map_err(|e| FitError::InvalidInput(e.to_string()))?;
    Ok(())
}
