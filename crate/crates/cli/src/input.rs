//! CSV ingestion: one or two numeric columns, optional header row.

use std::io::Read;

use ucusum::Series;

use crate::Failure;

/// Reads `path` (or standard input for `-`) into a series.
pub fn read_series(path: &str) -> Result<Series, Failure> {
    let text = if path == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Failure::data(format!("standard input: {e}")))?;
        s
    } else {
        std::fs::read_to_string(path).map_err(|e| Failure::data(format!("{path}: {e}")))?
    };
    parse_series(&text).map_err(|msg| Failure::data(format!("{path}: {msg}")))
}

pub fn parse_series(text: &str) -> Result<Series, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| match e.position() {
            Some(p) => format!("line {}: {e}", p.line()),
            None => e.to_string(),
        })?;
        let line = record.position().map_or(i as u64 + 1, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Vec<Option<f64>> = record
            .iter()
            .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect();
        if rows.is_empty() && width.is_none() && parsed.iter().any(Option::is_none) {
            // A first row that does not parse is taken as the header.
            width = Some(record.len());
            continue;
        }
        if let Some(col) = parsed.iter().position(Option::is_none) {
            return Err(format!(
                "line {line}, column {}: `{}` is not a finite number",
                col + 1,
                &record[col]
            ));
        }
        match width {
            Some(w) if w != record.len() => {
                return Err(format!(
                    "line {line}: expected {w} column(s), found {}",
                    record.len()
                ));
            }
            _ => width = Some(record.len()),
        }
        rows.push(parsed.into_iter().flatten().collect());
    }
    if rows.is_empty() {
        return Err("no observations".into());
    }
    let series = match width {
        Some(1) => Series::univariate(rows.into_iter().map(|r| r[0]).collect()),
        Some(2) => Series::bivariate(rows.into_iter().map(|r| [r[0], r[1]]).collect()),
        Some(w) => return Err(format!("expected 1 or 2 columns, found {w}")),
        None => unreachable!("rows imply a width"),
    };
    series.map_err(|e| e.to_string())
}
