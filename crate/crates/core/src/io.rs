//! File formats: the flow CSV with its JSON sidecar, and trajectory CSVs.
//!
//! Numbers are written in their shortest round-trip decimal form, so every
//! file parses back to bit-identical values.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::StatePair;
use crate::flow::{DegeneracyMarker, FlowTrace, GridFailure};
use crate::matrixkit::CMatrix;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed header: {0}")]
    Header(String),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("sidecar does not match the table: {0}")]
    Sidecar(String),
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn parse_num(s: &str, row: usize) -> Result<f64, IoError> {
    s.trim().parse().map_err(|_| IoError::Row {
        row,
        message: format!("not a number: {s:?}"),
    })
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, IoError> {
    let bytes = w.into_inner().map_err(|e| IoError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
}

/// `t, re_1..re_N, im_1..im_N, real_1..real_N`
pub fn flow_header(n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for part in ["re", "im", "real"] {
        h.extend((1..=n).map(|i| format!("{part}_{i}")));
    }
    h
}

pub fn write_flow_csv(trace: &FlowTrace) -> Result<String, IoError> {
    let n = trace.dim();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(flow_header(n))?;
    for s in 0..trace.len() {
        let mut row = vec![num(trace.times[s])];
        row.extend(trace.curves.iter().map(|c| num(c[s].re)));
        row.extend(trace.curves.iter().map(|c| num(c[s].im)));
        row.extend(trace.reality.iter().map(|r| if r[s] { "1" } else { "0" }.to_string()));
        w.write_record(&row)?;
    }
    finish(w)
}

/// The tabular part of a [`FlowTrace`].
#[derive(Debug, Clone, PartialEq)]
pub struct FlowTable {
    pub times: Vec<f64>,
    pub curves: Vec<Vec<Complex64>>,
    pub reality: Vec<Vec<bool>>,
}

pub fn read_flow_csv(text: &str) -> Result<FlowTable, IoError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.len() < 4 || (header.len() - 1) % 3 != 0 {
        return Err(IoError::Header(format!("{} columns", header.len())));
    }
    let n = (header.len() - 1) / 3;
    if header != flow_header(n) {
        return Err(IoError::Header(header.join(",")));
    }
    let mut table = FlowTable {
        times: Vec::new(),
        curves: vec![Vec::new(); n],
        reality: vec![Vec::new(); n],
    };
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let t = parse_num(&rec[0], row)?;
        if table.times.last().is_some_and(|&p| p >= t) {
            return Err(IoError::Row {
                row,
                message: "times must be strictly ascending".into(),
            });
        }
        table.times.push(t);
        for b in 0..n {
            let z = Complex64::new(parse_num(&rec[1 + b], row)?, parse_num(&rec[1 + n + b], row)?);
            table.curves[b].push(z);
            table.reality[b].push(match rec[1 + 2 * n + b].trim() {
                "1" => true,
                "0" => false,
                other => {
                    return Err(IoError::Row {
                        row,
                        message: format!("reality flag must be 0 or 1, got {other:?}"),
                    })
                }
            });
        }
    }
    Ok(table)
}

/// Everything of a [`FlowTrace`] that does not fit the CSV table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSidecar {
    pub degeneracy_markers: Vec<DegeneracyMarker>,
    pub gaps: Vec<GridFailure>,
    pub refined: Vec<bool>,
}

impl FlowSidecar {
    pub fn of(trace: &FlowTrace) -> Self {
        FlowSidecar {
            degeneracy_markers: trace.degeneracy_markers.clone(),
            gaps: trace.gaps.clone(),
            refined: trace.refined.clone(),
        }
    }

    pub fn assemble(self, table: FlowTable) -> Result<FlowTrace, IoError> {
        if self.refined.len() != table.times.len() {
            return Err(IoError::Sidecar(format!(
                "{} refinement flags for {} rows",
                self.refined.len(),
                table.times.len()
            )));
        }
        Ok(FlowTrace {
            times: table.times,
            curves: table.curves,
            reality: table.reality,
            refined: self.refined,
            degeneracy_markers: self.degeneracy_markers,
            gaps: self.gaps,
        })
    }
}

/// `t`, then the real parts of all entries row-major, then the imaginary parts.
pub fn write_matrix_trajectory(traj: &[(f64, CMatrix)]) -> Result<String, IoError> {
    let (rows, cols) = traj.first().map(|(_, m)| (m.rows(), m.cols())).unwrap_or((0, 0));
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    for part in ["re", "im"] {
        for i in 1..=rows {
            header.extend((1..=cols).map(|j| format!("{part}_{i}_{j}")));
        }
    }
    w.write_record(&header)?;
    for (t, m) in traj {
        let mut row = vec![num(*t)];
        row.extend(m.as_slice().iter().map(|z| num(z.re)));
        row.extend(m.as_slice().iter().map(|z| num(z.im)));
        w.write_record(&row)?;
    }
    finish(w)
}

pub fn read_matrix_trajectory(text: &str) -> Result<Vec<(f64, CMatrix)>, IoError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let width = r.headers()?.len();
    let n = ((width.saturating_sub(1) / 2) as f64).sqrt() as usize;
    if n == 0 || 1 + 2 * n * n != width {
        return Err(IoError::Header(format!("{width} columns is not 1 + 2 N²")));
    }
    let mut out = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let t = parse_num(&rec[0], row)?;
        let mut data = Vec::with_capacity(n * n);
        for k in 0..n * n {
            data.push(Complex64::new(parse_num(&rec[1 + k], row)?, parse_num(&rec[1 + n * n + k], row)?));
        }
        let m = CMatrix::new(n, n, data).map_err(|e| IoError::Row {
            row,
            message: e.to_string(),
        })?;
        out.push((t, m));
    }
    Ok(out)
}

/// `t`, then re/im of the ket, then re/im of the ketket.
pub fn write_state_trajectory(traj: &[(f64, StatePair)]) -> Result<String, IoError> {
    let n = traj.first().map(|(_, s)| s.dim()).unwrap_or(0);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    for v in ["ket", "ketket"] {
        for part in ["re", "im"] {
            header.extend((1..=n).map(|i| format!("{part}_{v}_{i}")));
        }
    }
    w.write_record(&header)?;
    for (t, s) in traj {
        let mut row = vec![num(*t)];
        for v in [&s.ket, &s.ketket] {
            row.extend(v.iter().map(|z| num(z.re)));
            row.extend(v.iter().map(|z| num(z.im)));
        }
        w.write_record(&row)?;
    }
    finish(w)
}

pub fn read_state_trajectory(text: &str) -> Result<Vec<(f64, StatePair)>, IoError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let width = r.headers()?.len();
    if width < 5 || (width - 1) % 4 != 0 {
        return Err(IoError::Header(format!("{width} columns is not 1 + 4 N")));
    }
    let n = (width - 1) / 4;
    let mut out = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let t = parse_num(&rec[0], row)?;
        let vec_at = |off: usize| -> Result<Vec<Complex64>, IoError> {
            (0..n)
                .map(|i| Ok(Complex64::new(parse_num(&rec[off + i], row)?, parse_num(&rec[off + n + i], row)?)))
                .collect()
        };
        out.push((
            t,
            StatePair {
                ket: vec_at(1)?,
                ketket: vec_at(1 + 2 * n)?,
            },
        ));
    }
    Ok(out)
}
