//! The single declarative config document every subcommand reads.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use fairaudit_core::checklist::ThresholdProfile;
use fairaudit_core::dataset::{TableFormat, TableSchema};
use fairaudit_core::metrics::MetricConfig;
use fairaudit_core::mitigate::PerformanceMetric;
use fairaudit_core::privacy::BinningSpec;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: PathBuf,
    /// "csv" (delimited text) or "records" (one JSON object per line).
    #[serde(default = "default_format")]
    pub format: String,
    /// Field delimiter for the csv format; a single character.
    #[serde(default = "default_delimiter")]
    pub delimiter: String,
    /// Threshold used to binarize scores when the file has no
    /// prediction column.
    #[serde(default = "default_score_threshold")]
    pub score_threshold: f64,
}

fn default_format() -> String {
    "csv".into()
}

fn default_delimiter() -> String {
    ",".into()
}

fn default_score_threshold() -> f64 {
    0.5
}

impl DatasetConfig {
    pub fn table_format(&self) -> Result<TableFormat> {
        match self.format.as_str() {
            "csv" => {
                let bytes = self.delimiter.as_bytes();
                if bytes.len() != 1 {
                    bail!("delimiter must be a single byte, got `{}`", self.delimiter);
                }
                Ok(TableFormat::Delimited {
                    delimiter: bytes[0],
                })
            }
            "records" => Ok(TableFormat::Records),
            other => bail!("unknown dataset format `{other}` (expected csv or records)"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProxyConfig {
    #[serde(default = "default_proxy_threshold")]
    pub threshold: f64,
}

fn default_proxy_threshold() -> f64 {
    fairaudit_core::proxy::DEFAULT_PROXY_THRESHOLD
}

impl Default for ProxyConfig {
    fn default() -> Self {
        ProxyConfig {
            threshold: default_proxy_threshold(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MitigationConfig {
    #[serde(default = "default_mitigation_epsilon")]
    pub epsilon: f64,
    /// Number of evenly spaced thresholds in \[0,1\].
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_metric")]
    pub metric: PerformanceMetric,
    /// Sensitive column to mitigate on; defaults to the first one.
    #[serde(default)]
    pub sensitive: Option<String>,
}

fn default_mitigation_epsilon() -> f64 {
    0.10
}

fn default_grid_points() -> usize {
    101
}

fn default_metric() -> PerformanceMetric {
    PerformanceMetric::Accuracy
}

impl Default for MitigationConfig {
    fn default() -> Self {
        MitigationConfig {
            epsilon: default_mitigation_epsilon(),
            grid_points: default_grid_points(),
            metric: default_metric(),
            sensitive: None,
        }
    }
}

impl MitigationConfig {
    pub fn grid(&self) -> Vec<f64> {
        let steps = self.grid_points.max(2) - 1;
        (0..=steps).map(|i| i as f64 / steps as f64).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurrogateSettings {
    #[serde(default = "default_max_depth")]
    pub max_depth: usize,
    #[serde(default = "default_min_leaf")]
    pub min_leaf: usize,
}

fn default_max_depth() -> usize {
    4
}

fn default_min_leaf() -> usize {
    5
}

impl Default for SurrogateSettings {
    fn default() -> Self {
        SurrogateSettings {
            max_depth: default_max_depth(),
            min_leaf: default_min_leaf(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrivacyConfig {
    /// Quasi-identifier columns; defaults to every column with the
    /// quasi_identifier role.
    #[serde(default)]
    pub quasi_identifiers: Option<Vec<String>>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub binning: BinningSpec,
    /// Include raw quasi-identifier tuples in the report. Off by default
    /// so the privacy section cannot leak the data it audits.
    #[serde(default)]
    pub include_values: bool,
}

fn default_k() -> usize {
    fairaudit_core::privacy::DEFAULT_K
}

impl Default for PrivacyConfig {
    fn default() -> Self {
        PrivacyConfig {
            quasi_identifiers: None,
            k: default_k(),
            binning: BinningSpec::default(),
            include_values: false,
        }
    }
}

/// Which pipeline stages a run executes. Stage order is fixed
/// (load, metrics, proxy, privacy, explain, mitigate, assess) no matter
/// which subset is enabled.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stages {
    #[serde(default = "yes")]
    pub metrics: bool,
    #[serde(default = "yes")]
    pub proxy: bool,
    #[serde(default = "yes")]
    pub privacy: bool,
    #[serde(default = "yes")]
    pub explain: bool,
    #[serde(default = "yes")]
    pub mitigate: bool,
    #[serde(default = "yes")]
    pub assess: bool,
}

fn yes() -> bool {
    true
}

impl Default for Stages {
    fn default() -> Self {
        Stages {
            metrics: true,
            proxy: true,
            privacy: true,
            explain: true,
            mitigate: true,
            assess: true,
        }
    }
}

impl Stages {
    pub fn none() -> Self {
        Stages {
            metrics: false,
            proxy: false,
            privacy: false,
            explain: false,
            mitigate: false,
            assess: false,
        }
    }

    pub fn only(stage: &str) -> Result<Self> {
        let mut s = Stages::none();
        match stage {
            "metrics" => s.metrics = true,
            "proxy" => s.proxy = true,
            "privacy" => s.privacy = true,
            "explain" => s.explain = true,
            "mitigate" => s.mitigate = true,
            "assess" => s.assess = true,
            other => bail!("unknown stage `{other}`"),
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    pub dataset: DatasetConfig,
    pub schema: TableSchema,
    #[serde(default)]
    pub metrics: MetricConfig,
    #[serde(default)]
    pub proxy: ProxyConfig,
    #[serde(default)]
    pub mitigation: MitigationConfig,
    #[serde(default)]
    pub surrogate: SurrogateSettings,
    #[serde(default)]
    pub privacy: PrivacyConfig,
    #[serde(default)]
    pub profile: ThresholdProfile,
    /// "builtin" or a path to a questionnaire definition document.
    #[serde(default = "default_questionnaire")]
    pub questionnaire: String,
    /// Path to an answers document; without one the assess stage is
    /// skipped.
    #[serde(default)]
    pub answers: Option<PathBuf>,
    #[serde(default)]
    pub stages: Stages,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_questionnaire() -> String {
    "builtin".into()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl AuditConfig {
    /// Parses the config document and resolves its relative paths
    /// against the config file's directory.
    pub fn load(path: &Path) -> Result<(AuditConfig, PathBuf)> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config `{}`", path.display()))?;
        let mut config: AuditConfig = serde_json::from_str(&text)
            .with_context(|| format!("cannot parse config `{}`", path.display()))?;
        config.validate()?;
        let base = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        config.dataset.path = base.join(&config.dataset.path);
        if let Some(answers) = &config.answers {
            config.answers = Some(base.join(answers));
        }
        if config.questionnaire != "builtin" {
            config.questionnaire = base
                .join(&config.questionnaire)
                .to_string_lossy()
                .into_owned();
        }
        config.output_dir = base.join(&config.output_dir);
        Ok((config, base))
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |name: &str, v: f64| -> Result<()> {
            if !(0.0..=1.0).contains(&v) {
                bail!("{name} must lie in [0,1], got {v}");
            }
            Ok(())
        };
        in_unit("dataset.score_threshold", self.dataset.score_threshold)?;
        in_unit("proxy.threshold", self.proxy.threshold)?;
        in_unit("mitigation.epsilon", self.mitigation.epsilon)?;
        in_unit("profile.min_fidelity", self.profile.min_fidelity)?;
        if self.metrics.epsilon < 0.0 {
            bail!("metrics.epsilon must be nonnegative");
        }
        if self.metrics.alpha < 0.0 {
            bail!("metrics.alpha must be nonnegative");
        }
        if self.mitigation.grid_points < 2 {
            bail!("mitigation.grid_points must be at least 2");
        }
        if self.privacy.k == 0 {
            bail!("privacy.k must be at least 1");
        }
        if self.profile.k == 0 {
            bail!("profile.k must be at least 1");
        }
        if self.profile.di_low > self.profile.di_high {
            bail!("profile disparate-impact band is empty");
        }
        self.dataset.table_format()?;
        Ok(())
    }

    /// Echo of the effective configuration for the report document.
    pub fn echo(&self) -> Result<serde_json::Value> {
        serde_json::to_value(self).context("config echo")
    }

    pub fn privileged_map(&self) -> &BTreeMap<String, String> {
        &self.schema.privileged
    }
}
