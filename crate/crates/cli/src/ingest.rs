//! Parsing of user-declared CSV exports into a [`PriceSeries`].

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use chrono::NaiveDate;
use illiquid_core::timeseries::{Observation, PriceSeries};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum DateFormat {
    /// `MM/DD/YYYY`
    Mdy,
    /// `YYYY-MM-DD`
    Ymd,
    Custom(String),
}

impl DateFormat {
    pub fn pattern(&self) -> &str {
        match self {
            DateFormat::Mdy => "%m/%d/%Y",
            DateFormat::Ymd => "%Y-%m-%d",
            DateFormat::Custom(p) => p,
        }
    }
}

impl FromStr for DateFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mdy" | "mm/dd/yyyy" => Ok(DateFormat::Mdy),
            "ymd" | "yyyy-mm-dd" | "iso" => Ok(DateFormat::Ymd),
            _ if s.contains('%') => Ok(DateFormat::Custom(s.to_string())),
            _ => Err(format!("unknown date format `{s}` (use mdy, ymd or a strftime pattern)")),
        }
    }
}

impl fmt::Display for DateFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DateFormat::Mdy => f.write_str("mdy"),
            DateFormat::Ymd => f.write_str("ymd"),
            DateFormat::Custom(p) => f.write_str(p),
        }
    }
}

impl From<DateFormat> for String {
    fn from(d: DateFormat) -> String {
        d.to_string()
    }
}

impl TryFrom<String> for DateFormat {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RowOrder {
    Asc,
    Desc,
    /// Accept either order (or none) and sort.
    #[default]
    Any,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub date_column: String,
    pub price_column: String,
    pub date_format: DateFormat,
    pub order: RowOrder,
    pub delimiter: char,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            date_column: "date".into(),
            price_column: "close".into(),
            date_format: DateFormat::Ymd,
            order: RowOrder::Any,
            delimiter: ',',
        }
    }
}

/// Row numbers are file line numbers, header = line 1.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed header: {0}")]
    Header(String),
    #[error("column `{0}` not found in header")]
    MissingColumn(String),
    #[error("row {row}: {message}")]
    Malformed { row: u64, message: String },
    #[error("row {row}: cannot parse date `{value}` with format `{format}`")]
    Date { row: u64, value: String, format: String },
    #[error("row {row}: missing or unparseable price `{value}`")]
    Price { row: u64, value: String },
    #[error("row {row}: price {value} is not positive")]
    NonPositive { row: u64, value: f64 },
    #[error("rows {first} and {second}: duplicate date {date}")]
    Duplicate { first: u64, second: u64, date: NaiveDate },
    #[error("row {row}: date {date} breaks the declared {order} order")]
    Order { row: u64, date: NaiveDate, order: &'static str },
    #[error("no data rows")]
    Empty,
    #[error("delimiter must be a single ASCII character")]
    Delimiter,
}

fn norm(h: &str) -> String {
    h.trim().trim_start_matches('\u{feff}').to_ascii_lowercase()
}

fn parse_price(raw: &str) -> Option<f64> {
    let cleaned: String = raw.trim().chars().filter(|c| *c != ',' && *c != '_').collect();
    let v: f64 = cleaned.parse().ok()?;
    v.is_finite().then_some(v)
}

/// Reads `raw` according to `schema`, returning an ascending series.
/// Extra columns are ignored.
pub fn parse_price_csv<R: Read>(raw: R, schema: &CsvSchema) -> Result<PriceSeries, IngestError> {
    if !schema.delimiter.is_ascii() {
        return Err(IngestError::Delimiter);
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter as u8)
        .has_headers(true)
        .flexible(true)
        .from_reader(raw);
    let headers = reader
        .headers()
        .map_err(|e| IngestError::Header(e.to_string()))?
        .clone();
    if headers.is_empty() || headers.iter().all(|h| h.trim().is_empty()) {
        return Err(IngestError::Header("empty header row".into()));
    }
    let find = |name: &str| {
        let want = norm(name);
        headers
            .iter()
            .position(|h| norm(h) == want)
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
    };
    let date_idx = find(&schema.date_column)?;
    let price_idx = find(&schema.price_column)?;
    let pattern = schema.date_format.pattern();

    let mut rows: Vec<(u64, Observation)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| IngestError::Malformed {
            row: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let row = record.position().map(|p| p.line()).unwrap_or(0);
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let date_raw = record.get(date_idx).unwrap_or("").trim();
        let date = NaiveDate::parse_from_str(date_raw, pattern).map_err(|_| IngestError::Date {
            row,
            value: date_raw.to_string(),
            format: pattern.to_string(),
        })?;
        let price_raw = record.get(price_idx).unwrap_or("");
        let close = parse_price(price_raw).ok_or_else(|| IngestError::Price {
            row,
            value: price_raw.trim().to_string(),
        })?;
        if close <= 0.0 {
            return Err(IngestError::NonPositive { row, value: close });
        }
        rows.push((row, Observation::new(date, close)));
    }
    if rows.is_empty() {
        return Err(IngestError::Empty);
    }

    let mut seen: BTreeMap<NaiveDate, u64> = BTreeMap::new();
    for (row, obs) in &rows {
        if let Some(first) = seen.insert(obs.date, *row) {
            return Err(IngestError::Duplicate {
                first,
                second: *row,
                date: obs.date,
            });
        }
    }
    let check = |ascending: bool, label: &'static str| {
        for w in rows.windows(2) {
            let ok = if ascending {
                w[1].1.date > w[0].1.date
            } else {
                w[1].1.date < w[0].1.date
            };
            if !ok {
                return Err(IngestError::Order {
                    row: w[1].0,
                    date: w[1].1.date,
                    order: label,
                });
            }
        }
        Ok(())
    };
    match schema.order {
        RowOrder::Asc => check(true, "ascending")?,
        RowOrder::Desc => check(false, "descending")?,
        RowOrder::Any => {}
    }

    let mut observations: Vec<Observation> = rows.into_iter().map(|(_, o)| o).collect();
    observations.sort_by_key(|o| o.date);
    Ok(PriceSeries::new(observations).expect("dates unique and prices positive"))
}
