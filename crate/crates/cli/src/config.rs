//! Optional TOML run configuration. Every key may also be given as a flag;
//! flags win, then the file, then built-in defaults.

use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use illiquid_core::attenuation::ShockPolicy;
use illiquid_core::regime::ModelKind;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::formats::OutputFormat;
use crate::ingest::{DateFormat, RowOrder};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub format: Option<OutputFormat>,
    pub jobs: Option<usize>,
    #[serde(default)]
    pub ingest: IngestSection,
    #[serde(default)]
    pub calibrate: CalibrateSection,
    #[serde(default)]
    pub forecast: ForecastSection,
    #[serde(default)]
    pub evaluate: EvaluateSection,
    #[serde(default)]
    pub correlate: CorrelateSection,
    #[serde(default)]
    pub attenuation: AttenuationSection,
    #[serde(default)]
    pub pdf: PdfSection,
    #[serde(default)]
    pub resample: ResampleSection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestSection {
    pub date_column: Option<String>,
    pub price_column: Option<String>,
    pub date_format: Option<DateFormat>,
    pub order: Option<RowOrder>,
    pub delimiter: Option<char>,
}

/// How the calibration window is prepared before the chain is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum StateEncoding {
    /// Observed rows only.
    #[default]
    Raw,
    /// Forward-filled onto the weekday calendar first, so no-trade days count as repeats.
    Filled,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateSection {
    pub model: Option<ModelKind>,
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
    pub dt: Option<f64>,
    pub state_encoding: Option<StateEncoding>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecastSection {
    pub n_sims: Option<usize>,
    pub horizon: Option<usize>,
    pub ceiling: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateSection {
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelateSection {
    pub windows: Option<Vec<usize>>,
    pub weekday: Option<String>,
    pub resample: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttenuationSection {
    pub grid: Option<Vec<[f64; 2]>>,
    pub rho: Option<f64>,
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub horizon: Option<usize>,
    pub replications: Option<usize>,
    pub s0: Option<f64>,
    pub policy: Option<ShockPolicy>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdfSection {
    pub bins: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResampleSection {
    pub weekday: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|message| CliError::Config {
            path: path.to_path_buf(),
            message,
        })
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.message().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_parse() {
        let cfg = FileConfig::parse(
            r#"
seed = 7
format = "json"

[calibrate]
model = "mm-xou"
start = "2020-01-01"
state_encoding = "filled"

[attenuation]
grid = [[0.5, 0.5], [0.9, 0.1]]
policy = "queued"
"#,
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.format, Some(OutputFormat::Json));
        assert_eq!(cfg.calibrate.model, Some(ModelKind::MmXou));
        assert_eq!(cfg.calibrate.state_encoding, Some(StateEncoding::Filled));
        assert_eq!(cfg.attenuation.grid.unwrap().len(), 2);
        assert_eq!(cfg.attenuation.policy, Some(ShockPolicy::Queued));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(FileConfig::parse("sed = 1").is_err());
        assert!(FileConfig::parse("[forecast]\nnsims = 3").is_err());
    }
}
