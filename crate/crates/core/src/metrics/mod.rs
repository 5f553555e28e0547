//! Questionnaire scoring and action-log summaries.

mod log;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use log::{summarize_log, ActionLogLine, EventLogLine, LogRecord, LogSummary, Outcome, OutcomeLogLine, OUTCOME_OK};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("{instrument}: expected {expected} items, got {got}")]
    Count {
        instrument: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{instrument}: item {item} = {value} is outside {min}..={max}")]
    Range {
        instrument: &'static str,
        item: usize,
        value: i64,
        min: i64,
        max: i64,
    },
    #[error("mapping error: {0}")]
    Mapping(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Instrument {
    Sus,
    Ipq,
    Ssq,
    Cohesion,
}

impl Instrument {
    pub fn name(self) -> &'static str {
        match self {
            Instrument::Sus => "SUS",
            Instrument::Ipq => "IPQ",
            Instrument::Ssq => "SSQ",
            Instrument::Cohesion => "cohesion",
        }
    }
}

fn check(instrument: &'static str, items: &[i64], expected: usize, min: i64, max: i64) -> Result<(), MetricsError> {
    if items.len() != expected {
        return Err(MetricsError::Count {
            instrument,
            expected,
            got: items.len(),
        });
    }
    match items.iter().position(|v| !(min..=max).contains(v)) {
        Some(i) => Err(MetricsError::Range {
            instrument,
            item: i + 1,
            value: items[i],
            min,
            max,
        }),
        None => Ok(()),
    }
}

/// System Usability Scale, 0 to 100.
pub fn sus_score(items: &[i64]) -> Result<f64, MetricsError> {
    check("SUS", items, 10, 1, 5)?;
    let sum: i64 = items
        .iter()
        .enumerate()
        .map(|(i, &r)| if i % 2 == 0 { r - 1 } else { 5 - r })
        .sum();
    Ok(sum as f64 * 2.5)
}

pub fn cohesion_score(items: &[i64]) -> Result<f64, MetricsError> {
    check("cohesion", items, 4, 1, 5)?;
    Ok(items.iter().sum::<i64>() as f64 / 4.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IpqSubscale {
    SpatialPresence,
    Involvement,
    ExperiencedRealism,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IpqItem {
    pub item: usize,
    pub subscale: IpqSubscale,
    #[serde(default)]
    pub reverse: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IpqMapping {
    pub items: Vec<IpqItem>,
}

impl IpqMapping {
    pub fn validate(&self) -> Result<(), MetricsError> {
        let n = self.items.len();
        let mut seen = vec![false; n];
        for it in &self.items {
            if it.item == 0 || it.item > n || seen[it.item - 1] {
                return Err(MetricsError::Mapping(format!(
                    "item {} is out of range or mapped twice",
                    it.item
                )));
            }
            seen[it.item - 1] = true;
        }
        for sub in [
            IpqSubscale::SpatialPresence,
            IpqSubscale::Involvement,
            IpqSubscale::ExperiencedRealism,
        ] {
            if !self.items.iter().any(|i| i.subscale == sub) {
                return Err(MetricsError::Mapping(format!("subscale {sub:?} has no items")));
            }
        }
        Ok(())
    }
}

pub fn load_ipq_mapping(yaml_text: &str) -> Result<IpqMapping, MetricsError> {
    let m: IpqMapping = serde_yaml::from_str(yaml_text).map_err(|e| MetricsError::Mapping(e.to_string()))?;
    m.validate()?;
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IpqScores {
    pub spatial_presence: f64,
    pub involvement: f64,
    pub experienced_realism: f64,
}

/// Subscale means on the 1..7 scale, reverse-coded items mapped to 8 - r.
pub fn ipq_scores(items: &[i64], mapping: &IpqMapping) -> Result<IpqScores, MetricsError> {
    mapping.validate()?;
    check("IPQ", items, mapping.items.len(), 1, 7)?;
    let mean = |sub: IpqSubscale| {
        let vals: Vec<f64> = mapping
            .items
            .iter()
            .filter(|m| m.subscale == sub)
            .map(|m| {
                let r = items[m.item - 1];
                (if m.reverse { 8 - r } else { r }) as f64
            })
            .collect();
        vals.iter().sum::<f64>() / vals.len() as f64
    };
    Ok(IpqScores {
        spatial_presence: mean(IpqSubscale::SpatialPresence),
        involvement: mean(IpqSubscale::Involvement),
        experienced_realism: mean(IpqSubscale::ExperiencedRealism),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SsqSubscale {
    /// 1-based item positions.
    pub items: Vec<usize>,
    pub multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SsqWeights {
    pub nausea: SsqSubscale,
    pub oculomotor: SsqSubscale,
    pub disorientation: SsqSubscale,
    pub total_multiplier: f64,
}

pub const SSQ_ITEMS: usize = 16;

impl SsqWeights {
    pub fn validate(&self) -> Result<(), MetricsError> {
        for (name, s) in [
            ("nausea", &self.nausea),
            ("oculomotor", &self.oculomotor),
            ("disorientation", &self.disorientation),
        ] {
            if s.items.is_empty() || s.items.iter().any(|&i| i == 0 || i > SSQ_ITEMS) {
                return Err(MetricsError::Mapping(format!(
                    "{name}: items must be non-empty and within 1..={SSQ_ITEMS}"
                )));
            }
        }
        Ok(())
    }
}

pub fn load_ssq_weights(yaml_text: &str) -> Result<SsqWeights, MetricsError> {
    let w: SsqWeights = serde_yaml::from_str(yaml_text).map_err(|e| MetricsError::Mapping(e.to_string()))?;
    w.validate()?;
    Ok(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SsqScores {
    pub nausea: f64,
    pub oculomotor: f64,
    pub disorientation: f64,
    pub total: f64,
}

pub fn ssq_scores(items: &[i64], weights: &SsqWeights) -> Result<SsqScores, MetricsError> {
    weights.validate()?;
    check("SSQ", items, SSQ_ITEMS, 0, 3)?;
    let raw = |s: &SsqSubscale| s.items.iter().map(|&i| items[i - 1]).sum::<i64>() as f64;
    let (n, o, d) = (
        raw(&weights.nausea),
        raw(&weights.oculomotor),
        raw(&weights.disorientation),
    );
    Ok(SsqScores {
        nausea: n * weights.nausea.multiplier,
        oculomotor: o * weights.oculomotor.multiplier,
        disorientation: d * weights.disorientation.multiplier,
        total: (n + o + d) * weights.total_multiplier,
    })
}
