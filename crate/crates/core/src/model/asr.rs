//! Architecturally significant requirements and their quantified criteria.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AsrKind {
    Functionality,
    Quality,
    Constraint,
}

impl AsrKind {
    pub const ALL: [AsrKind; 3] = [AsrKind::Functionality, AsrKind::Quality, AsrKind::Constraint];

    pub fn as_str(self) -> &'static str {
        match self {
            AsrKind::Functionality => "Functionality",
            AsrKind::Quality => "Quality",
            AsrKind::Constraint => "Constraint",
        }
    }
}

impl FromStr for AsrKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "functionality" | "functional" => Ok(AsrKind::Functionality),
            "quality" => Ok(AsrKind::Quality),
            "constraint" => Ok(AsrKind::Constraint),
            other => Err(format!("unknown requirement kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AsrStatus {
    Proposed,
    Refined,
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Metric {
    ResponseTimeSeconds,
    DistanceMeters,
    Boolean,
    Count,
    Other(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparator {
    LE,
    GE,
    EQ,
}

impl Comparator {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::LE => "<=",
            Comparator::GE => ">=",
            Comparator::EQ => "==",
        }
    }
}

/// A measurable acceptance bound. The unit of `value` is implied by `metric`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantifiedCriterion {
    pub metric: Metric,
    pub comparator: Comparator,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CriterionError {
    #[error("criterion value must be finite")]
    NotFinite,
    #[error("criterion value must be non-negative")]
    Negative,
    #[error("cannot parse criterion {0:?}: expected `<metric> <=|>=|== <value>`")]
    Syntax(String),
}

impl QuantifiedCriterion {
    pub fn new(metric: Metric, comparator: Comparator, value: f64) -> Result<Self, CriterionError> {
        let c = QuantifiedCriterion { metric, comparator, value };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), CriterionError> {
        if !self.value.is_finite() {
            return Err(CriterionError::NotFinite);
        }
        if self.value < 0.0 {
            return Err(CriterionError::Negative);
        }
        Ok(())
    }
}

impl fmt::Display for QuantifiedCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let metric = match &self.metric {
            Metric::ResponseTimeSeconds => "response_time_seconds".to_string(),
            Metric::DistanceMeters => "distance_meters".to_string(),
            Metric::Boolean => "boolean".to_string(),
            Metric::Count => "count".to_string(),
            Metric::Other(name) => format!("other:{name}"),
        };
        write!(f, "{metric} {} {}", self.comparator.symbol(), self.value)
    }
}

impl FromStr for QuantifiedCriterion {
    type Err = CriterionError;

    /// Accepts the textual form produced by `Display`, e.g. `response_time_seconds <= 90`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let syntax = || CriterionError::Syntax(s.to_string());
        let (metric_text, comparator, rest) = ["<=", ">=", "=="]
            .iter()
            .find_map(|op| s.split_once(op).map(|(l, r)| (l, *op, r)))
            .ok_or_else(syntax)?;
        let comparator = match comparator {
            "<=" => Comparator::LE,
            ">=" => Comparator::GE,
            _ => Comparator::EQ,
        };
        let metric_text = metric_text.trim();
        let metric = match metric_text.to_ascii_lowercase().as_str() {
            "response_time_seconds" => Metric::ResponseTimeSeconds,
            "distance_meters" => Metric::DistanceMeters,
            "boolean" => Metric::Boolean,
            "count" => Metric::Count,
            _ => match metric_text.split_once(':') {
                Some((prefix, name)) if prefix.eq_ignore_ascii_case("other") && !name.trim().is_empty() => {
                    Metric::Other(name.trim().to_string())
                }
                _ => return Err(syntax()),
            },
        };
        let value: f64 = rest.trim().parse().map_err(|_| syntax())?;
        QuantifiedCriterion::new(metric, comparator, value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Asr {
    pub id: String,
    pub kind: AsrKind,
    pub statement: String,
    pub criterion: Option<QuantifiedCriterion>,
    #[serde(default)]
    pub tags: Vec<String>,
    pub status: AsrStatus,
}

impl Asr {
    /// Checks the invariants that must hold for the record in its current status.
    pub fn check_invariants(&self) -> Result<(), String> {
        if let Some(c) = &self.criterion {
            c.validate().map_err(|e| e.to_string())?;
        }
        if self.kind == AsrKind::Quality && self.status == AsrStatus::Accepted && self.criterion.is_none() {
            return Err("an accepted quality requirement needs a quantified criterion".into());
        }
        Ok(())
    }
}

pub const ASR_ID_PREFIX: &str = "ASR-";

pub fn format_asr_id(n: usize) -> String {
    format!("{ASR_ID_PREFIX}{n:03}")
}

/// Smallest unused id in the `ASR-001, ASR-002, ...` scheme.
pub fn new_asr_id<'a, I>(existing: I) -> String
where
    I: IntoIterator<Item = &'a str>,
{
    let taken: BTreeSet<&str> = existing.into_iter().collect();
    (1..)
        .map(format_asr_id)
        .find(|candidate| !taken.contains(candidate.as_str()))
        .expect("unbounded id space")
}
