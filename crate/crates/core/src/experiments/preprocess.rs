//! Table preprocessing: drop, interpolate, per-column log maps, unit-norm
//! features, bias coordinate and a final `1/√2` scale.

use std::collections::HashSet;
use std::path::Path;

use super::regression::RegressionExample;
use crate::error::{Error, Result};
use crate::vector::norm;

/// A numeric table with optional (missing) cells.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

fn is_missing(cell: &str) -> bool {
    matches!(
        cell.trim().to_ascii_lowercase().as_str(),
        "" | "na" | "nan" | "?" | "null"
    )
}

impl RawTable {
    pub fn from_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::Data(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Data(e.to_string()))?;
            let row = rec
                .iter()
                .enumerate()
                .map(|(j, cell)| {
                    if is_missing(cell) {
                        return Ok(None);
                    }
                    cell.trim().parse::<f64>().map(Some).map_err(|_| {
                        Error::Data(format!(
                            "row {}: column {:?} has non-numeric value {cell:?}",
                            i + 1,
                            headers.get(j).map_or("?", |s| s.as_str())
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(RawTable { headers, rows })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_reader(f)
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("unknown column {name:?}")))
    }
}

/// Which columns to drop, transform, and predict.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ColumnSpec {
    pub target: String,
    pub drop: Vec<String>,
    pub log1p: Vec<String>,
    pub ln: Vec<String>,
}

/// Fills missing cells by linear interpolation between the neighbouring
/// observed values; leading and trailing gaps take the nearest value.
pub fn interpolate(col: &mut [Option<f64>], name: &str) -> Result<()> {
    let known: Vec<usize> = (0..col.len()).filter(|&i| col[i].is_some()).collect();
    if known.is_empty() {
        if col.is_empty() {
            return Ok(());
        }
        return Err(Error::Data(format!("column {name:?} has no values")));
    }
    let first = known[0];
    let last = *known.last().unwrap();
    for i in 0..first {
        col[i] = col[first];
    }
    for i in last + 1..col.len() {
        col[i] = col[last];
    }
    for w in known.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (va, vb) = (col[a].unwrap(), col[b].unwrap());
        for i in a + 1..b {
            let f = (i - a) as f64 / (b - a) as f64;
            col[i] = Some(va + f * (vb - va));
        }
    }
    Ok(())
}

/// Turns a raw table into unit-norm regression examples.
pub fn preprocess(table: &RawTable, spec: &ColumnSpec) -> Result<Vec<RegressionExample>> {
    let target = table.column(&spec.target)?;
    let dropped: HashSet<usize> = spec
        .drop
        .iter()
        .map(|c| table.column(c))
        .collect::<Result<_>>()?;
    if dropped.contains(&target) {
        return Err(Error::Config("the target column cannot be dropped".into()));
    }
    let log1p: HashSet<usize> = spec.log1p.iter().map(|c| table.column(c)).collect::<Result<_>>()?;
    let ln: HashSet<usize> = spec.ln.iter().map(|c| table.column(c)).collect::<Result<_>>()?;
    if let Some(c) = log1p.intersection(&ln).next() {
        return Err(Error::Config(format!(
            "column {:?} has both log1p and ln maps",
            table.headers[*c]
        )));
    }
    let kept: Vec<usize> = (0..table.headers.len()).filter(|c| !dropped.contains(c)).collect();
    let mut cols: Vec<Vec<Option<f64>>> = Vec::with_capacity(kept.len());
    for &c in &kept {
        let mut col: Vec<Option<f64>> = table
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.get(c).copied().ok_or_else(|| {
                    Error::Data(format!("row {}: expected {} cells", i + 1, table.headers.len()))
                })
            })
            .collect::<Result<_>>()?;
        interpolate(&mut col, &table.headers[c])?;
        cols.push(col);
    }
    for (k, &c) in kept.iter().enumerate() {
        for (i, cell) in cols[k].iter_mut().enumerate() {
            let v = cell.expect("interpolated");
            let mapped = if log1p.contains(&c) {
                if v <= -1.0 {
                    return Err(Error::Data(format!(
                        "row {}: ln(1 + x) undefined for {v} in column {:?}",
                        i + 1,
                        table.headers[c]
                    )));
                }
                v.ln_1p()
            } else if ln.contains(&c) {
                if v <= 0.0 {
                    return Err(Error::Data(format!(
                        "row {}: ln x undefined for {v} in column {:?}",
                        i + 1,
                        table.headers[c]
                    )));
                }
                v.ln()
            } else {
                v
            };
            *cell = Some(mapped);
        }
    }
    let target_k = kept.iter().position(|&c| c == target).expect("target kept");
    let n = table.rows.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let features: Vec<f64> = (0..kept.len())
            .filter(|&k| k != target_k)
            .map(|k| cols[k][i].unwrap())
            .collect();
        out.push(RegressionExample {
            x: unit_features_with_bias(&features),
            y: cols[target_k][i].unwrap(),
        });
    }
    Ok(out)
}

/// `(x / ‖x‖, 1) / √2`, or `(0, …, 0, 1)` for a zero feature row.
pub fn unit_features_with_bias(features: &[f64]) -> Vec<f64> {
    let n = norm(features);
    let mut x = Vec::with_capacity(features.len() + 1);
    if n == 0.0 {
        x.extend(std::iter::repeat(0.0).take(features.len()));
        x.push(1.0);
        return x;
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    x.extend(features.iter().map(|v| v / n * s));
    x.push(s);
    x
}
