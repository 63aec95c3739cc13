use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;

use super::RawSeries;
use crate::error::{ForecastError, Result};

pub const DATE_FORMAT: &str = "%Y-%m-%d";

pub fn load_csv(path: impl AsRef<Path>) -> Result<RawSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| ForecastError::Io(format!("{}: {e}", path.display())))?;
    read_csv(file)
}

/// Parses the `date,<features...>,<target>` schema and returns rows sorted
/// by date. Line numbers in errors count the header as line 1.
pub fn read_csv<R: Read>(reader: R) -> Result<RawSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| ForecastError::Format(format!("header: {e}")))?
        .clone();
    if header.is_empty() || header.iter().all(str::is_empty) {
        return Err(ForecastError::EmptyInput("CSV file has no header".into()));
    }
    if header.get(0) != Some("date") {
        return Err(ForecastError::Format(format!(
            "first column must be `date`, found `{}`",
            header.get(0).unwrap_or("")
        )));
    }
    if header.len() < 3 {
        return Err(ForecastError::Format(
            "need a date column, at least one feature and a target".into(),
        ));
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let (feature_names, target_name) = {
        let (t, f) = names.split_last().expect("checked width");
        (f.to_vec(), t.clone())
    };

    let mut rows: Vec<(NaiveDate, Vec<f64>, f64, u64)> = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let line = idx as u64 + 2;
        let record = record.map_err(|e| ForecastError::Format(format!("line {line}: {e}")))?;
        if record.len() != header.len() {
            return Err(ForecastError::Format(format!(
                "line {line}: {} fields, header has {}",
                record.len(),
                header.len()
            )));
        }
        let raw_date = &record[0];
        if raw_date.is_empty() {
            return Err(ForecastError::Format(format!("line {line}: missing date")));
        }
        let date = NaiveDate::parse_from_str(raw_date, DATE_FORMAT).map_err(|_| {
            ForecastError::Format(format!("line {line}: invalid date `{raw_date}`"))
        })?;
        let mut values = Vec::with_capacity(names.len());
        for (col, cell) in record.iter().enumerate().skip(1) {
            let v: f64 = cell.parse().map_err(|_| {
                ForecastError::Format(format!(
                    "line {line}: non-numeric value `{cell}` in column `{}`",
                    &header[col]
                ))
            })?;
            if !v.is_finite() {
                return Err(ForecastError::Format(format!(
                    "line {line}: non-finite value in column `{}`",
                    &header[col]
                )));
            }
            values.push(v);
        }
        let target = values.pop().expect("width checked");
        rows.push((date, values, target, line));
    }
    if rows.is_empty() {
        return Err(ForecastError::EmptyInput(
            "CSV file has no data rows".into(),
        ));
    }
    rows.sort_by_key(|r| r.0);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(ForecastError::Format(format!(
            "duplicate date {} on lines {} and {}",
            w[0].0,
            w[0].3.min(w[1].3),
            w[0].3.max(w[1].3)
        )));
    }

    let mut series = RawSeries {
        dates: Vec::with_capacity(rows.len()),
        features: Vec::with_capacity(rows.len()),
        target: Vec::with_capacity(rows.len()),
        feature_names,
        target_name,
    };
    for (date, features, target, _) in rows {
        series.dates.push(date);
        series.features.push(features);
        series.target.push(target);
    }
    Ok(series)
}

pub fn write_csv(series: &RawSeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path)
        .map_err(|e| ForecastError::Io(format!("{}: {e}", path.display())))?;
    write_csv_to(series, std::io::BufWriter::new(file))
}

/// Writes the standard schema. Values use Rust's shortest round-trip
/// formatting, so reading the file back reproduces every `f64` exactly.
pub fn write_csv_to<W: Write>(series: &RawSeries, writer: W) -> Result<()> {
    series.validate()?;
    let mut wtr = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| ForecastError::Io(e.to_string());
    let mut header = vec!["date".to_string()];
    header.extend(series.feature_names.iter().cloned());
    header.push(series.target_name.clone());
    wtr.write_record(&header).map_err(io)?;
    for r in 0..series.len() {
        let mut record = Vec::with_capacity(header.len());
        record.push(series.dates[r].format(DATE_FORMAT).to_string());
        record.extend(series.features[r].iter().map(|v| v.to_string()));
        record.push(series.target[r].to_string());
        wtr.write_record(&record).map_err(io)?;
    }
    wtr.flush()?;
    Ok(())
}
