//! Canonical on-disk forms: `date,close` CSV and `[{date, close}]` JSON.

use std::fs;
use std::path::{Path, PathBuf};

use illiquid_core::timeseries::PriceSeries;
use serde::{Serialize, Serializer};

use crate::error::CliError;
use crate::ingest::{parse_price_csv, CsvSchema};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Shortest representation that reads back to the same bits; non-finite
/// values as `inf`, `-inf`, `nan`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_else(|| "NA".into())
}

/// JSON numbers for finite values, strings otherwise.
pub fn ser_f64<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(&fmt_f64(*v))
    }
}

pub fn ser_f64_vec<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        if x.is_finite() {
            seq.serialize_element(x)?;
        } else {
            seq.serialize_element(&fmt_f64(*x))?;
        }
    }
    seq.end()
}

pub fn series_to_csv(series: &PriceSeries) -> String {
    let mut out = String::from("date,close\n");
    for o in series.observations() {
        out.push_str(&format!("{},{}\n", o.date, fmt_f64(o.close)));
    }
    out
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialisable");
    s.push('\n');
    s
}

/// Loads a series written by this tool: JSON by extension, otherwise CSV
/// with `date` and `close` columns in ISO format.
pub fn read_series(path: &Path) -> Result<PriceSeries, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        return serde_json::from_str(&text).map_err(|e| CliError::format(path, e));
    }
    parse_price_csv(text.as_bytes(), &CsvSchema::default()).map_err(|source| CliError::Ingest {
        path: path.to_path_buf(),
        source,
    })
}

pub fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "series".into())
}

/// Writes files under one output directory and remembers what it wrote.
#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn write_series(&mut self, name: &str, series: &PriceSeries, format: OutputFormat) -> Result<PathBuf, CliError> {
        match format {
            OutputFormat::Csv => self.write(&format!("{name}.csv"), &series_to_csv(series)),
            OutputFormat::Json => self.write(&format!("{name}.json"), &to_json(series)),
        }
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    #[test]
    fn csv_round_trip_is_exact() {
        let d = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let s = PriceSeries::from_parts(&[d, d.succ_opt().unwrap()], &[0.1 + 0.2, 1e-7]).unwrap();
        let text = series_to_csv(&s);
        let back = parse_price_csv(text.as_bytes(), &CsvSchema::default()).unwrap();
        assert_eq!(back, s);
        assert_eq!(series_to_csv(&back), text);
    }

    #[test]
    fn non_finite_formatting() {
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        assert_eq!(fmt_opt(None), "NA");
        #[derive(Serialize)]
        struct W(#[serde(serialize_with = "ser_f64")] f64);
        assert_eq!(serde_json::to_string(&W(f64::INFINITY)).unwrap(), "\"inf\"");
        assert_eq!(serde_json::to_string(&W(1.5)).unwrap(), "1.5");
    }
}
