use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioKind {
    Individual,
    Interacting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Classification {
    Direct,
    Indirect,
    Unclassified,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaamScenario {
    pub id: String,
    pub text: String,
    pub kind: ScenarioKind,
    pub classification: Classification,
    /// For interacting scenarios this is the interaction path, in order.
    pub affected_elements: Vec<String>,
    pub source_asrs: Vec<String>,
}

impl SaamScenario {
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.kind == ScenarioKind::Interacting && self.affected_elements.len() < 2 {
            return Err(format!("{}: an interacting scenario needs at least two affected elements", self.id));
        }
        if self.classification != Classification::Unclassified && self.affected_elements.is_empty() {
            return Err(format!("{}: a classified scenario needs affected elements", self.id));
        }
        let distinct: BTreeSet<&str> = self.affected_elements.iter().map(String::as_str).collect();
        if distinct.len() != self.affected_elements.len() {
            return Err(format!("{}: affected elements must be distinct", self.id));
        }
        Ok(())
    }
}

pub fn format_scenario_id(n: usize) -> String {
    format!("SCN-{n:03}")
}

/// Verdicts are ordered `Unknown < Unsatisfied < Partial < Satisfied` only for sorting;
/// `Unknown` is not comparable in the quality sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Unknown,
    Unsatisfied,
    Partial,
    Satisfied,
}

/// Mark placed in the scenario-interaction matrix; carries the scenario's classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Marker {
    Direct,
    Indirect,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixCell {
    pub scenario_id: String,
    pub element: String,
    pub marker: Marker,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub per_asr_verdicts: BTreeMap<String, Verdict>,
    /// Sorted by (scenario id, element name).
    pub interaction_matrix: Vec<MatrixCell>,
    pub hotspots: Vec<String>,
    /// Accepted requirements that no scenario exercises.
    pub needs_scenarios: Vec<String>,
    pub summary: String,
}

impl EvaluationReport {
    pub fn check_invariants(&self, accepted_ids: &[&str]) -> Result<(), String> {
        for id in accepted_ids {
            if !self.per_asr_verdicts.contains_key(*id) {
                return Err(format!("accepted requirement {id} has no verdict"));
            }
        }
        let elements: BTreeSet<&str> = self.interaction_matrix.iter().map(|c| c.element.as_str()).collect();
        if let Some(h) = self.hotspots.iter().find(|h| !elements.contains(h.as_str())) {
            return Err(format!("hotspot {h} does not appear in the interaction matrix"));
        }
        Ok(())
    }
}
