//! Squale mark computation: raw metric values are normalized onto the
//! bounded [0,3] scale via threshold-bracketed formulas, then aggregated
//! with a lambda-weighted mean that emphasizes bad marks.
//!
//! Below the lower threshold a metric is harmless and marks 3; above the
//! upper threshold it marks 0; in between the per-metric formula applies.
//! The global mark is `-log_lambda(mean(lambda^-mark))`: higher lambda
//! weights bad marks harder, pulling the aggregate toward the minimum.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::analyzer::MetricVector;
use crate::error::{Error, Result};

/// The five metrics with mark formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, Hash)]
pub enum MetricId {
    #[serde(rename = "cc")]
    Cc,
    #[serde(rename = "hv")]
    Hv,
    #[serde(rename = "hd")]
    Hd,
    #[serde(rename = "Ca")]
    Ca,
    #[serde(rename = "Ce")]
    Ce,
}

impl MetricId {
    pub const ALL: [MetricId; 5] = [
        MetricId::Cc,
        MetricId::Hv,
        MetricId::Hd,
        MetricId::Ca,
        MetricId::Ce,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricId::Cc => "cc",
            MetricId::Hv => "hv",
            MetricId::Hd => "hd",
            MetricId::Ca => "Ca",
            MetricId::Ce => "Ce",
        }
    }

    pub fn parse(s: &str) -> Result<MetricId> {
        match s {
            "cc" => Ok(MetricId::Cc),
            "hv" => Ok(MetricId::Hv),
            "hd" => Ok(MetricId::Hd),
            "Ca" | "ca" => Ok(MetricId::Ca),
            "Ce" | "ce" => Ok(MetricId::Ce),
            other => Err(Error::UnknownMetric(other.to_string())),
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// In-band mark formula shapes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "lowercase")]
pub enum MarkFormula {
    /// `2^((center - raw) / scale)`
    Exp2 { center: f64, scale: f64 },
    /// `3 - 3 * raw / span`
    Linear { span: f64 },
}

impl MarkFormula {
    pub fn evaluate(&self, raw: f64) -> f64 {
        match *self {
            MarkFormula::Exp2 { center, scale } => ((center - raw) / scale).exp2(),
            MarkFormula::Linear { span } => 3.0 - 3.0 * raw / span,
        }
    }
}

/// One row of the mark table: formula plus the band it applies to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRule {
    pub formula: MarkFormula,
    pub lower: f64,
    pub upper: f64,
}

/// Mark normalization and aggregation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqualeConfig {
    /// Weighting strength; common values 3 (soft), 9 (medium), 30 (hard).
    pub lambda: f64,
    pub thresholds: BTreeMap<MetricId, ThresholdRule>,
}

pub const DEFAULT_LAMBDA: f64 = 9.0;

impl Default for SqualeConfig {
    fn default() -> Self {
        let mut thresholds = BTreeMap::new();
        thresholds.insert(
            MetricId::Cc,
            ThresholdRule {
                formula: MarkFormula::Exp2 {
                    center: 7.0,
                    scale: 3.5,
                },
                lower: 2.0,
                upper: 19.0,
            },
        );
        thresholds.insert(
            MetricId::Hv,
            ThresholdRule {
                formula: MarkFormula::Linear { span: 1000.0 },
                lower: 20.0,
                upper: 1000.0,
            },
        );
        thresholds.insert(
            MetricId::Hd,
            ThresholdRule {
                formula: MarkFormula::Linear { span: 50.0 },
                lower: 10.0,
                upper: 50.0,
            },
        );
        thresholds.insert(
            MetricId::Ca,
            ThresholdRule {
                formula: MarkFormula::Exp2 {
                    center: 30.0,
                    scale: 7.0,
                },
                lower: 19.0,
                upper: 60.0,
            },
        );
        thresholds.insert(
            MetricId::Ce,
            ThresholdRule {
                formula: MarkFormula::Exp2 {
                    center: 10.0,
                    scale: 2.0,
                },
                lower: 6.0,
                upper: 19.0,
            },
        );
        SqualeConfig {
            lambda: DEFAULT_LAMBDA,
            thresholds,
        }
    }
}

impl SqualeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda.is_nan() || self.lambda <= 1.0 {
            return Err(Error::Config(format!(
                "lambda must be > 1, got {}",
                self.lambda
            )));
        }
        for (metric, rule) in &self.thresholds {
            if rule.lower.is_nan() || rule.upper.is_nan() || rule.lower >= rule.upper {
                return Err(Error::Config(format!(
                    "threshold rule for {metric}: lower ({}) must be < upper ({})",
                    rule.lower, rule.upper
                )));
            }
        }
        Ok(())
    }
}

/// Marks of one file, keyed by metric.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IndividualMarks {
    pub marks: BTreeMap<MetricId, f64>,
}

impl IndividualMarks {
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.marks.values().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }
}

/// Lambda-weighted aggregate of individual marks, in [0,3].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalMark {
    pub value: f64,
}

/// Normalize one raw metric value onto [0,3].
///
/// Values strictly below the lower threshold mark 3 (no refactoring
/// relevance), strictly above the upper threshold mark 0 (needs review);
/// the band in between uses the configured formula, clamped against
/// overshoot (the Ce formula exceeds 3 near its lower bound).
pub fn individual_mark(metric: MetricId, raw: f64, config: &SqualeConfig) -> Result<f64> {
    let rule = config
        .thresholds
        .get(&metric)
        .ok_or_else(|| Error::UnknownMetric(metric.name().to_string()))?;
    if raw < rule.lower {
        return Ok(3.0);
    }
    if raw > rule.upper {
        return Ok(0.0);
    }
    Ok(rule.formula.evaluate(raw).clamp(0.0, 3.0))
}

/// Marks for every metric present in the vector and configured in the
/// threshold table. Absent metrics (e.g. coupling for languages without
/// imports) are omitted rather than imputed.
pub fn marks_for_vector(vector: &MetricVector, config: &SqualeConfig) -> Result<IndividualMarks> {
    let mut marks = BTreeMap::new();
    let raws = [
        (MetricId::Cc, vector.cc.map(f64::from)),
        (MetricId::Hv, vector.hv),
        (MetricId::Hd, vector.hd),
        (MetricId::Ca, vector.ca.map(f64::from)),
        (MetricId::Ce, vector.ce.map(f64::from)),
    ];
    for (metric, raw) in raws {
        if let Some(raw) = raw {
            if config.thresholds.contains_key(&metric) {
                marks.insert(metric, individual_mark(metric, raw, config)?);
            }
        }
    }
    Ok(IndividualMarks { marks })
}

/// Aggregate marks into the global mark
/// `GM = -log_lambda(mean(lambda^-mark))`, clamped to [0,3] against
/// floating-point drift at the boundaries.
///
/// A uniform mark set aggregates to that mark; the identity is returned
/// directly so it holds bit-exactly.
pub fn global_mark(marks: &[f64], config: &SqualeConfig) -> Result<GlobalMark> {
    if marks.is_empty() {
        return Err(Error::EmptyMarks);
    }
    let first = marks[0];
    if marks.iter().all(|&m| m == first) {
        return Ok(GlobalMark {
            value: first.clamp(0.0, 3.0),
        });
    }
    // Summation in sorted order keeps the result permutation-invariant
    // down to the bit.
    let mut sorted = marks.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mean_weight =
        sorted.iter().map(|&m| config.lambda.powf(-m)).sum::<f64>() / sorted.len() as f64;
    let value = -(mean_weight.ln() / config.lambda.ln());
    Ok(GlobalMark {
        value: value.clamp(0.0, 3.0),
    })
}
