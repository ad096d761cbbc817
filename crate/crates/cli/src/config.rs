//! Run configuration: one JSON file per run, schema-validated, with every
//! default materialized into the `resolved_config` echo that accompanies
//! results. Re-running an echoed config reproduces the outputs
//! byte-for-byte.

use std::path::{Path, PathBuf};

use darsim_core::analysis::SnrOptions;
use darsim_core::psychophysics::{ObserverModel, QuestParams, SessionDesign};
use darsim_core::resonator::{LowPassConfig, ThresholdElementConfig};
use darsim_core::signals::{BinarySignalSpec, CarrierSpec};
use serde::{Deserialize, Serialize};

/// Environment variable consulted for the output directory when neither
/// `--out` nor the config sets one.
pub const OUT_DIR_ENV: &str = "DARSIM_OUT_DIR";

/// Exit-code classes: `Config` → 2, `Domain` → 3, `Io` → 1.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<darsim_core::Error> for CliError {
    fn from(err: darsim_core::Error) -> Self {
        match err {
            // Parameter validation failures are configuration mistakes;
            // the rest are properties of the configured computation.
            darsim_core::Error::Validation(_) => CliError::Config(err.to_string()),
            _ => CliError::Domain(err.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io(err.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Tabular output format. Summaries are always JSON.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Closed-form prediction inputs (the signal level the device sees).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictSection {
    /// Constant signal level U_s riding on the carrier.
    pub u_s: f64,
}

/// Carrier-amplitude sweep inputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Carrier amplitudes to visit.
    pub u_t_grid: Vec<f64>,
    /// Noise realizations averaged per grid point (noise carriers only).
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub snr: SnrOptions,
    /// When present, comparator points on deterministic carriers also get
    /// a transfer-linearity fit over this signal-level grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linearity_grid: Option<Vec<f64>>,
}

fn default_repeats() -> usize {
    1
}

/// Paired-statistics inputs: two named columns of one CSV file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeSection {
    /// CSV file holding the paired measurements.
    pub input: PathBuf,
    pub control_column: String,
    pub test_column: String,
    #[serde(default = "default_reshuffles")]
    pub n_reshuffles: usize,
    #[serde(default = "default_bootstrap")]
    pub n_bootstrap: usize,
}

fn default_reshuffles() -> usize {
    darsim_core::analysis::DEFAULT_RESHUFFLES
}

fn default_bootstrap() -> usize {
    darsim_core::analysis::DEFAULT_BOOTSTRAP
}

/// One run's full configuration. Commands use the blocks they need and
/// reject missing ones by name; unknown keys anywhere are schema errors.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed for every random element of the run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Output directory for CSV/JSON files.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Tabular output format.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub signal: Option<BinarySignalSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub carrier: Option<CarrierSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_element: Option<ThresholdElementConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lpf: Option<LowPassConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_rate_hz: Option<f64>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub predict: Option<PredictSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub quest: Option<QuestParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observer: Option<ObserverModel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub session: Option<SessionDesign>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_sessions: Option<usize>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub analyze: Option<AnalyzeSection>,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Applies override flags and the output-directory environment
    /// variable, then materializes every cross-command default. Command
    /// handlers fill their own section defaults on top of this.
    pub fn resolve(
        mut self,
        seed_flag: Option<u64>,
        out_flag: Option<PathBuf>,
        format_flag: Option<OutputFormat>,
    ) -> Self {
        if let Some(seed) = seed_flag {
            self.seed = Some(seed);
        }
        self.seed = Some(self.seed.unwrap_or(0));

        if let Some(out) = out_flag {
            self.out_dir = Some(out);
        }
        if self.out_dir.is_none() {
            self.out_dir = Some(
                std::env::var_os(OUT_DIR_ENV)
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from(".")),
            );
        }

        if let Some(format) = format_flag {
            self.format = Some(format);
        }
        self.format = Some(self.format.unwrap_or_default());
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("resolved config")
    }

    pub fn out_dir(&self) -> &Path {
        self.out_dir.as_deref().expect("resolved config")
    }

    pub fn format(&self) -> OutputFormat {
        self.format.expect("resolved config")
    }

    /// A required block, by config key.
    pub fn require<'a, T>(&self, field: Option<&'a T>, name: &str, command: &str) -> CliResult<&'a T> {
        field.ok_or_else(|| {
            CliError::Config(format!(
                "missing config block `{name}`, required by `{command}`"
            ))
        })
    }
}
