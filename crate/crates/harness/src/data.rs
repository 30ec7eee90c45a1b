//! Dataset readers for the data presets.

use crate::config::Schema;
use crate::error::{HarnessError, Result};
use fwlab_core::{Matrix, Observation};
use std::path::Path;

#[derive(Clone, Debug, PartialEq)]
pub enum Dataset {
    Dense {
        features: Matrix,
        targets: Vec<f64>,
        columns: Vec<String>,
    },
    Triplets {
        observed: Vec<Observation>,
        rows: usize,
        cols: usize,
    },
}

/// Reads `path` per `schema`. Dense data is Z-scored when `normalize` is set.
pub fn load_dataset(path: &Path, schema: Schema, target_column: Option<&str>, normalize: bool) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    match schema {
        Schema::DenseCsv => {
            let target = target_column.ok_or_else(|| HarnessError::Validation("dense_csv needs target_column".into()))?;
            parse_dense_csv(&text, path, target, normalize)
        }
        Schema::Libsvm => parse_libsvm(&text, path, normalize),
        Schema::TripletCsv => parse_triplets(&text, path),
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> HarnessError {
    HarnessError::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn parse_f64(s: &str, path: &Path, line: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| parse_err(path, line, format!("not a number: {:?}", s.trim())))
}

pub fn parse_dense_csv(text: &str, path: &Path, target: &str, normalize: bool) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let ti = headers
        .iter()
        .position(|h| h == target)
        .ok_or_else(|| parse_err(path, 1, format!("no column named {target:?}")))?;
    let columns: Vec<String> = headers.iter().enumerate().filter(|(i, _)| *i != ti).map(|(_, h)| h.clone()).collect();
    let mut data = Vec::new();
    let mut targets = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| parse_err(path, line, e.to_string()))?;
        if rec.len() != headers.len() {
            return Err(parse_err(path, line, format!("expected {} fields, found {}", headers.len(), rec.len())));
        }
        for (i, field) in rec.iter().enumerate() {
            let v = parse_f64(field, path, line)?;
            if i == ti {
                targets.push(v);
            } else {
                data.push(v);
            }
        }
    }
    finish_dense(data, targets, columns, path, normalize)
}

/// `label idx:value …` with 1-based indices.
pub fn parse_libsvm(text: &str, path: &Path, normalize: bool) -> Result<Dataset> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut targets = Vec::new();
    let mut width = 0;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let raw = raw.split('#').next().unwrap_or("").trim();
        if raw.is_empty() {
            continue;
        }
        let mut parts = raw.split_whitespace();
        targets.push(parse_f64(parts.next().unwrap_or(""), path, line)?);
        let mut row = Vec::new();
        for tok in parts {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(path, line, format!("expected idx:value, got {tok:?}")))?;
            let i: usize = i
                .parse()
                .ok()
                .filter(|i| *i >= 1)
                .ok_or_else(|| parse_err(path, line, format!("bad index {i:?}")))?;
            width = width.max(i);
            row.push((i - 1, parse_f64(v, path, line)?));
        }
        rows.push(row);
    }
    let mut data = vec![0.0; rows.len() * width];
    for (r, row) in rows.iter().enumerate() {
        for (i, v) in row {
            data[r * width + i] = *v;
        }
    }
    let columns = (1..=width).map(|i| i.to_string()).collect();
    finish_dense(data, targets, columns, path, normalize)
}

fn finish_dense(mut data: Vec<f64>, targets: Vec<f64>, columns: Vec<String>, path: &Path, normalize: bool) -> Result<Dataset> {
    let m = targets.len();
    let n = columns.len();
    if m == 0 || n == 0 {
        return Err(parse_err(path, 1, "no data rows or no feature columns"));
    }
    if normalize {
        for (j, name) in columns.iter().enumerate() {
            if zscore_strided(&mut data[j..], n, m) {
                log::warn!("{}: column {name:?} is constant, set to 0", path.display());
            }
        }
    }
    if data.iter().chain(&targets).any(|v| !v.is_finite()) {
        return Err(HarnessError::Numerical(format!("{}: non-finite value after normalization", path.display())));
    }
    let features = Matrix::new(m, n, data).expect("row-major buffer of m·n");
    Ok(Dataset::Dense {
        features,
        targets,
        columns,
    })
}

/// Z-scores `count` values spaced `stride` apart; returns true if the column
/// was constant and has been zeroed.
pub(crate) fn zscore_strided(v: &mut [f64], stride: usize, count: usize) -> bool {
    let get = |v: &[f64], i: usize| v[i * stride];
    let mean = (0..count).map(|i| get(v, i)).sum::<f64>() / count as f64;
    let var = (0..count).map(|i| (get(v, i) - mean).powi(2)).sum::<f64>() / count as f64;
    let sd = var.sqrt();
    let constant = !(sd > 1e-12 * mean.abs().max(1.0));
    for i in 0..count {
        let x = &mut v[i * stride];
        *x = if constant { 0.0 } else { (*x - mean) / sd };
    }
    constant
}

pub fn zscore(v: &mut [f64]) -> bool {
    let n = v.len();
    zscore_strided(v, 1, n)
}

/// `row,col,value`, 0-based, optional header line.
pub fn parse_triplets(text: &str, path: &Path) -> Result<Dataset> {
    let mut observed = Vec::new();
    let (mut rows, mut cols) = (0, 0);
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        let f: Vec<&str> = raw.split(',').map(str::trim).collect();
        if f.len() != 3 {
            return Err(parse_err(path, line, format!("expected 3 fields, found {}", f.len())));
        }
        let (Ok(r), Ok(c)) = (f[0].parse::<usize>(), f[1].parse::<usize>()) else {
            if line == 1 && observed.is_empty() {
                continue;
            }
            return Err(parse_err(path, line, "row and column must be non-negative integers"));
        };
        let value = parse_f64(f[2], path, line)?;
        if !value.is_finite() {
            return Err(parse_err(path, line, "non-finite value"));
        }
        rows = rows.max(r + 1);
        cols = cols.max(c + 1);
        observed.push(Observation { row: r, col: c, value });
    }
    if observed.is_empty() {
        return Err(parse_err(path, 1, "no observations"));
    }
    Ok(Dataset::Triplets { observed, rows, cols })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("mem.csv")
    }

    #[test]
    fn dense_shape() {
        let d = parse_dense_csv("a,y\n1,2\n3,4\n5,6\n", p(), "y", false).unwrap();
        match d {
            Dataset::Dense { features, targets, .. } => {
                assert_eq!((features.rows(), features.cols()), (3, 1));
                assert_eq!(targets, vec![2.0, 4.0, 6.0]);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn constant_column_is_zeroed() {
        let d = parse_dense_csv("a,b,y\n1,7,0\n2,7,0\n3,7,1\n", p(), "y", true).unwrap();
        let Dataset::Dense { features, .. } = d else { panic!() };
        assert!((0..3).all(|i| features.get(i, 1) == 0.0));
        let col: Vec<f64> = (0..3).map(|i| features.get(i, 0)).collect();
        let mean: f64 = col.iter().sum::<f64>() / 3.0;
        let var: f64 = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 3.0;
        assert!(mean.abs() < 1e-15 && (var - 1.0).abs() < 1e-12);
    }

    #[test]
    fn malformed_row_reports_line() {
        let e = parse_dense_csv("a,y\n1,2\nx,4\n", p(), "y", false).unwrap_err();
        match e {
            HarnessError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn triplet_single() {
        let d = parse_triplets("0,0,2.5\n", p()).unwrap();
        assert_eq!(
            d,
            Dataset::Triplets {
                observed: vec![Observation { row: 0, col: 0, value: 2.5 }],
                rows: 1,
                cols: 1
            }
        );
        assert!(parse_triplets("row,col,value\n1,2,3\n", p()).is_ok());
        assert!(parse_triplets("0,0\n", p()).is_err());
    }

    #[test]
    fn libsvm_sparse_rows() {
        let d = parse_libsvm("+1 1:0.5 3:2\n-1 2:1\n", p(), false).unwrap();
        let Dataset::Dense { features, targets, .. } = d else { panic!() };
        assert_eq!(targets, vec![1.0, -1.0]);
        assert_eq!(features.row(0), &[0.5, 0.0, 2.0]);
        assert_eq!(features.row(1), &[0.0, 1.0, 0.0]);
    }
}
