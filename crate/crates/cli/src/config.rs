//! Run configuration: one JSON file defines the repository, component
//! rules and analysis parameters; command-line flags override file
//! values, and the resolved result is echoed in run metadata so every
//! effective value is visible.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use codemine_core::analyzer::{self, CheckerCommand};
use codemine_core::expertise::{ComponentRule, DEFAULT_TOP_K, DEFAULT_WINDOW_DAYS};
use codemine_core::miner::RepositoryRef;
use codemine_core::squale::{MarkFormula, MetricId, SqualeConfig, ThresholdRule};
use codemine_core::{Error, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Json,
    Csv,
    Svg,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<OutputFormat> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "svg" | "svg-chart" => Ok(OutputFormat::Svg),
            other => Err(Error::Config(format!(
                "unknown output format {other:?} (expected json, csv or svg)"
            ))),
        }
    }
}

/// On-disk configuration file shape.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub repository: RepositorySection,
    /// Path to the author alias map (JSON array of canonical/alias
    /// entries), relative to this file.
    #[serde(default)]
    pub alias_map: Option<PathBuf>,
    /// Ordered glob rules mapping paths to components; unmatched paths
    /// fall back to their top-level directory.
    #[serde(default)]
    pub components: Vec<ComponentRule>,
    #[serde(default)]
    pub profile: Option<String>,
    #[serde(default)]
    pub checkers: Vec<CheckerCommand>,
    #[serde(default)]
    pub lambda: Option<f64>,
    /// Per-metric overrides of the mark table.
    #[serde(default)]
    pub thresholds: Vec<ThresholdOverride>,
    #[serde(default)]
    pub window: Option<WindowSection>,
    /// Analysis cache directory; defaults to `codemine-store` next to
    /// this file.
    #[serde(default)]
    pub store: Option<PathBuf>,
    #[serde(default)]
    pub output_format: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepositorySection {
    pub path: PathBuf,
    #[serde(default)]
    pub branch: Option<String>,
    #[serde(default)]
    pub name: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdOverride {
    pub metric: MetricId,
    pub formula: MarkFormula,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSection {
    /// RFC 3339 timestamp; defaults to the newest analyzed commit.
    #[serde(default)]
    pub reference_time: Option<String>,
    #[serde(default)]
    pub duration_days: Option<u32>,
}

/// Command-line overrides, applied over the file.
#[derive(Debug, Clone, Default)]
pub struct CliOverrides {
    pub branch: Option<String>,
    pub window_days: Option<u32>,
    pub reference_time: Option<String>,
    pub lambda: Option<f64>,
    pub top_k: Option<usize>,
    pub format: Option<String>,
    pub component: Option<String>,
}

/// Fully resolved configuration; serialized into every report's run
/// metadata.
#[derive(Debug, Clone, Serialize)]
pub struct EffectiveConfig {
    pub repository: EffectiveRepository,
    pub alias_map: Option<String>,
    pub components: Vec<ComponentRule>,
    pub profile: String,
    pub checkers: Vec<CheckerCommand>,
    pub lambda: f64,
    pub thresholds: BTreeMap<MetricId, ThresholdRule>,
    pub window_days: u32,
    /// Unix seconds; absent means "newest analyzed commit".
    pub reference_time: Option<i64>,
    pub top_k: usize,
    pub format: OutputFormat,
    pub component_filter: Option<String>,
    pub store: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct EffectiveRepository {
    pub path: String,
    pub branch: Option<String>,
    pub name: String,
}

impl EffectiveConfig {
    pub fn repository_ref(&self) -> RepositoryRef {
        RepositoryRef {
            path: PathBuf::from(&self.repository.path),
            branch: self.repository.branch.clone(),
            name: self.repository.name.clone(),
        }
    }

    pub fn squale(&self) -> SqualeConfig {
        SqualeConfig {
            lambda: self.lambda,
            thresholds: self.thresholds.clone(),
        }
    }

    pub fn store_path(&self) -> PathBuf {
        PathBuf::from(&self.store)
    }

    pub fn alias_map_path(&self) -> Option<PathBuf> {
        self.alias_map.as_ref().map(PathBuf::from)
    }
}

pub fn parse_reference_time(s: &str) -> Result<i64> {
    chrono::DateTime::parse_from_rfc3339(s)
        .map(|dt| dt.timestamp())
        .map_err(|e| Error::Config(format!("unparseable reference time {s:?}: {e}")))
}

/// Load the config file and fold in command-line overrides.
pub fn load(config_path: &Path, overrides: &CliOverrides) -> Result<EffectiveConfig> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", config_path.display())))?;
    let file: RunConfigFile = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("malformed config {}: {e}", config_path.display())))?;
    resolve(config_path, file, overrides)
}

fn resolve(
    config_path: &Path,
    file: RunConfigFile,
    overrides: &CliOverrides,
) -> Result<EffectiveConfig> {
    let base = config_path.parent().unwrap_or(Path::new("."));
    let anchor = |p: &Path| -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    };

    let repository_path = anchor(&file.repository.path);
    let name = file.repository.name.clone().unwrap_or_else(|| {
        repository_path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "repository".into())
    });

    let profile_id = file.profile.unwrap_or_else(|| "c-family".into());
    analyzer::profile(&profile_id)?;

    let mut thresholds = SqualeConfig::default().thresholds;
    for over in &file.thresholds {
        thresholds.insert(
            over.metric,
            ThresholdRule {
                formula: over.formula,
                lower: over.lower,
                upper: over.upper,
            },
        );
    }

    let lambda = overrides
        .lambda
        .or(file.lambda)
        .unwrap_or(codemine_core::squale::DEFAULT_LAMBDA);

    let window = file.window.unwrap_or_default();
    let window_days = overrides
        .window_days
        .or(window.duration_days)
        .unwrap_or(DEFAULT_WINDOW_DAYS);
    if window_days == 0 {
        return Err(Error::Config(
            "window duration must be at least 1 day".into(),
        ));
    }
    let reference_time = match overrides
        .reference_time
        .as_deref()
        .or(window.reference_time.as_deref())
    {
        Some(s) => Some(parse_reference_time(s)?),
        None => None,
    };

    let format = match overrides.format.as_deref() {
        Some(s) => OutputFormat::parse(s)?,
        None => match file.output_format.as_deref() {
            Some(s) => OutputFormat::parse(s)?,
            None => OutputFormat::Json,
        },
    };

    let config = EffectiveConfig {
        repository: EffectiveRepository {
            path: repository_path.to_string_lossy().into_owned(),
            branch: overrides.branch.clone().or(file.repository.branch),
            name,
        },
        alias_map: file
            .alias_map
            .as_deref()
            .map(|p| anchor(p).to_string_lossy().into_owned()),
        components: file.components,
        profile: profile_id,
        checkers: file.checkers,
        lambda,
        thresholds,
        window_days,
        reference_time,
        top_k: overrides.top_k.unwrap_or(DEFAULT_TOP_K),
        format,
        component_filter: overrides.component.clone(),
        store: file
            .store
            .as_deref()
            .map(&anchor)
            .unwrap_or_else(|| base.join("codemine-store"))
            .to_string_lossy()
            .into_owned(),
    };
    config.squale().validate()?;
    Ok(config)
}
