//! CSV input: price or return series, observation files and simulated datasets.
//!
//! Floats are written in Rust's shortest round-trip form (at most 17
//! significant digits), so every file re-reads to identical values.

use std::io::{Read, Write};
use std::path::Path;

use smcsmooth::model::Dataset;

use crate::error::{HarnessError, Result};

/// Daily log returns with their dates.
#[derive(Debug, Clone, PartialEq)]
pub struct Returns {
    pub dates: Vec<String>,
    pub values: Vec<f64>,
    pub warnings: Vec<String>,
}

fn column(headers: &csv::StringRecord, names: &[&str]) -> Option<usize> {
    headers.iter().position(|h| names.iter().any(|n| h.trim().eq_ignore_ascii_case(n)))
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map(|p| p.line()).unwrap_or(0)
}

fn parse_field(rec: &csv::StringRecord, idx: usize, what: &str) -> Result<f64> {
    let raw = rec.get(idx).unwrap_or("").trim();
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| HarnessError::Data(format!("line {}: bad {what} `{raw}`", line_of(rec))))
}

/// Reads `date,price` (converted to `log(P_t / P_{t-1})`) or `date,return`
/// (taken verbatim).
pub fn read_returns<R: Read>(reader: R) -> Result<Returns> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let date = column(&headers, &["date"]).ok_or_else(|| HarnessError::Data("missing `date` column".into()))?;
    let price = column(&headers, &["price", "close", "adj_close"]);
    let ret = column(&headers, &["return", "returns", "y"]);
    if price.is_none() && ret.is_none() {
        return Err(HarnessError::Data("need a `price` or `return` column".into()));
    }

    let mut dates = Vec::new();
    let mut raw = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let v = match price {
            Some(i) => {
                let p = parse_field(&rec, i, "price")?;
                if p <= 0.0 {
                    return Err(HarnessError::Data(format!("line {}: non-positive price {p}", line_of(&rec))));
                }
                p
            }
            None => parse_field(&rec, ret.expect("checked above"), "return")?,
        };
        dates.push(rec.get(date).unwrap_or("").to_string());
        raw.push(v);
    }

    let mut warnings = Vec::new();
    if let Some(k) = dates.windows(2).position(|w| w[1] <= w[0]) {
        warnings.push(format!("dates not increasing at row {} (`{}` after `{}`)", k + 2, dates[k + 1], dates[k]));
    }

    let (dates, values) = if price.is_some() {
        if raw.len() < 2 {
            return Err(HarnessError::Data("need at least two prices".into()));
        }
        (dates[1..].to_vec(), raw.windows(2).map(|w| (w[1] / w[0]).ln()).collect())
    } else {
        (dates, raw)
    };
    Ok(Returns { dates, values, warnings })
}

pub fn ingest_returns(path: &Path) -> Result<Returns> {
    let f = std::fs::File::open(path).map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))?;
    read_returns(f)
}

/// Observations from the `y` column (or the only column) of a CSV file.
/// Rows with an empty `y` are skipped, so dataset files carrying `x_0`
/// read back unchanged.
pub fn read_observations<R: Read>(reader: R) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let idx = match column(&headers, &["y"]) {
        Some(i) => i,
        None if headers.len() == 1 => 0,
        None => return Err(HarnessError::Data("no `y` column".into())),
    };
    let mut ys = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.get(idx).is_some_and(|s| !s.trim().is_empty()) {
            ys.push(parse_field(&rec, idx, "observation")?);
        }
    }
    if ys.is_empty() {
        return Err(HarnessError::Data("no observations".into()));
    }
    Ok(ys)
}

pub fn load_observations(path: &Path) -> Result<Vec<f64>> {
    let f = std::fs::File::open(path).map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))?;
    read_observations(f)
}

/// Writes `t,x,y`; the `t = 0` row holds `x_0` with an empty `y`.
pub fn write_dataset<W: Write>(d: &Dataset, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["t", "x", "y"])?;
    wtr.write_record(["0".to_string(), d.x0.to_string(), String::new()])?;
    for (t, (x, y)) in d.states.iter().zip(&d.observations).enumerate() {
        wtr.write_record([(t + 1).to_string(), x.to_string(), y.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a file written by [`write_dataset`].
pub fn read_dataset<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let (xi, yi) = match (column(&headers, &["x"]), column(&headers, &["y"])) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(HarnessError::Data("dataset needs `x` and `y` columns".into())),
    };
    let mut d = Dataset { x0: 0.0, states: Vec::new(), observations: Vec::new() };
    for rec in rdr.records() {
        let rec = rec?;
        let x = parse_field(&rec, xi, "state")?;
        if rec.get(yi).is_some_and(|s| !s.is_empty()) {
            d.states.push(x);
            d.observations.push(parse_field(&rec, yi, "observation")?);
        } else {
            d.x0 = x;
        }
    }
    Ok(d)
}
