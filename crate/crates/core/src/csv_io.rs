//! Plain CSV emission and reading for matrices, snapshots and marginals.
//!
//! Zone ids are written verbatim, so ids containing commas or line breaks
//! are refused rather than quoted. Reals use Rust's shortest round-trip
//! formatting, which makes the output byte-deterministic.

use std::io::{self, BufRead, Write};

use chrono::SecondsFormat;
use thiserror::Error;

use crate::ingestion::SnapshotSeries;
use crate::matrix::DenseMatrix;
use crate::polytope::{FlowMatrix, Marginals};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("zone id {0:?} cannot be written to CSV")]
    BadZoneId(String),
    #[error("{ids} zone ids for a {rows}x{cols} matrix")]
    Shape { ids: usize, rows: usize, cols: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn check_ids(ids: &[String]) -> Result<(), CsvError> {
    match ids.iter().find(|id| id.contains([',', '\n', '\r'])) {
        Some(bad) => Err(CsvError::BadZoneId(bad.clone())),
        None => Ok(()),
    }
}

/// Header `origin,<id_1>,...,<id_n>`, then one row per origin.
pub fn write_matrix_csv<T: Scalar, W: Write>(mut out: W, ids: &[String], m: &DenseMatrix<T>) -> Result<(), CsvError> {
    check_ids(ids)?;
    if ids.len() != m.nrows() || ids.len() != m.ncols() {
        return Err(CsvError::Shape {
            ids: ids.len(),
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    write!(out, "origin")?;
    for id in ids {
        write!(out, ",{id}")?;
    }
    writeln!(out)?;
    for (i, id) in ids.iter().enumerate() {
        write!(out, "{id}")?;
        for v in m.row(i) {
            write!(out, ",{}", v.to_f64().unwrap_or(f64::NAN))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Same layout as [`write_matrix_csv`] with integer entries.
pub fn write_flow_csv<W: Write>(mut out: W, ids: &[String], f: &FlowMatrix) -> Result<(), CsvError> {
    check_ids(ids)?;
    if ids.len() != f.n_rows() || ids.len() != f.n_cols() {
        return Err(CsvError::Shape {
            ids: ids.len(),
            rows: f.n_rows(),
            cols: f.n_cols(),
        });
    }
    writeln!(out, "origin,{}", ids.join(","))?;
    for (i, row) in f.to_dense().iter().enumerate() {
        write!(out, "{}", ids[i])?;
        for v in row {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads what [`write_matrix_csv`] writes: zone ids from the header and a
/// square real matrix whose row labels must follow the same order.
pub fn read_matrix_csv<R: BufRead>(input: R) -> Result<(Vec<String>, DenseMatrix<f64>), CsvError> {
    let mut lines = input.lines().enumerate().filter(|(_, l)| match l {
        Ok(s) => !s.trim().is_empty(),
        Err(_) => true,
    });
    let parse = |line: usize, message: String| CsvError::Parse { line: line + 1, message };
    let (_, header) = lines.next().ok_or_else(|| parse(0, "empty input".into()))?;
    let header = header?;
    let ids: Vec<String> = header.trim().split(',').skip(1).map(|s| s.trim().to_string()).collect();
    let n = ids.len();
    let mut data = Vec::with_capacity(n * n);
    let mut row = 0;
    for (idx, line) in lines {
        let line = line?;
        let mut fields = line.trim().split(',').map(str::trim);
        let label = fields.next().unwrap_or_default();
        if row >= n {
            return Err(parse(idx, "more rows than header columns".into()));
        }
        if label != ids[row] {
            return Err(parse(idx, format!("row label {label:?}, expected {:?}", ids[row])));
        }
        let values: Vec<f64> = fields
            .map(|f| f.parse::<f64>().map_err(|_| parse(idx, format!("bad number {f:?}"))))
            .collect::<Result<_, _>>()?;
        if values.len() != n {
            return Err(parse(idx, format!("expected {n} values, found {}", values.len())));
        }
        data.extend(values);
        row += 1;
    }
    if row != n {
        return Err(parse(0, format!("expected {n} rows, found {row}")));
    }
    Ok((ids, DenseMatrix::from_vec(n, n, data).expect("square by construction")))
}

/// `interval_end,zone_id,count`, one line per snapshot and zone.
pub fn write_snapshot_csv<W: Write>(mut out: W, ids: &[String], series: &SnapshotSeries) -> Result<(), CsvError> {
    check_ids(ids)?;
    writeln!(out, "interval_end,zone_id,count")?;
    for s in &series.snapshots {
        let t = s.interval_end.to_rfc3339_opts(SecondsFormat::Secs, true);
        for (id, c) in ids.iter().zip(&s.counts) {
            writeln!(out, "{t},{id},{c}")?;
        }
    }
    Ok(())
}

/// `zone_id,gamma,eta`.
pub fn write_marginals_csv<W: Write>(mut out: W, ids: &[String], m: &Marginals) -> Result<(), CsvError> {
    check_ids(ids)?;
    if ids.len() != m.n() {
        return Err(CsvError::Shape {
            ids: ids.len(),
            rows: m.n(),
            cols: 2,
        });
    }
    writeln!(out, "zone_id,gamma,eta")?;
    for (i, id) in ids.iter().enumerate() {
        writeln!(out, "{id},{},{}", m.gamma()[i], m.eta()[i])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingestion::PresenceSnapshot;
    use chrono::{TimeDelta, TimeZone, Utc};

    fn ids() -> Vec<String> {
        vec!["A".into(), "B".into()]
    }

    #[test]
    fn matrix_round_trip() {
        let m = DenseMatrix::from_rows(&[vec![2.0 / 3.0, 1.0 / 3.0], vec![0.0, 1.0]]);
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, &ids(), &m).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("origin,A,B\nA,0.6666666666666666,0.3333333333333333\n"));
        let (read_ids, back) = read_matrix_csv(buf.as_slice()).unwrap();
        assert_eq!(read_ids, ids());
        assert_eq!(back, m);
    }

    #[test]
    fn flow_csv() {
        let f = FlowMatrix::from_dense(&[vec![2, 1], vec![0, 1]]);
        let mut buf = Vec::new();
        write_flow_csv(&mut buf, &ids(), &f).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "origin,A,B\nA,2,1\nB,0,1\n");
    }

    #[test]
    fn bad_input_is_reported() {
        assert!(matches!(
            read_matrix_csv("origin,A,B\nB,1,0\nA,0,1\n".as_bytes()),
            Err(CsvError::Parse { line: 2, .. })
        ));
        assert!(read_matrix_csv("origin,A,B\nA,1,x\nB,0,1\n".as_bytes()).is_err());
        assert!(read_matrix_csv("origin,A,B\nA,1,0\n".as_bytes()).is_err());
        let mut sink = Vec::new();
        let m = DenseMatrix::<f64>::identity(2);
        assert!(matches!(
            write_matrix_csv(&mut sink, &["a,b".into(), "c".into()], &m),
            Err(CsvError::BadZoneId(_))
        ));
        assert!(matches!(write_matrix_csv(&mut sink, &["a".into()], &m), Err(CsvError::Shape { .. })));
    }

    #[test]
    fn snapshots_and_marginals() {
        let series = SnapshotSeries {
            snapshots: vec![PresenceSnapshot {
                interval_end: Utc.with_ymd_and_hms(2017, 3, 6, 8, 15, 0).unwrap(),
                counts: vec![3, 1],
            }],
            spacing: TimeDelta::minutes(15),
            gaps: vec![],
        };
        let mut buf = Vec::new();
        write_snapshot_csv(&mut buf, &ids(), &series).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "interval_end,zone_id,count\n2017-03-06T08:15:00Z,A,3\n2017-03-06T08:15:00Z,B,1\n"
        );
        let mut buf = Vec::new();
        let m = Marginals::new(vec![3, 1], vec![2, 2]).unwrap();
        write_marginals_csv(&mut buf, &ids(), &m).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "zone_id,gamma,eta\nA,3,2\nB,1,2\n");
    }
}
