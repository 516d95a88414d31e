use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::model::{
    new_asr_id, ArtifactKind, ArtifactRef, Asr, AsrKind, AsrStatus, Origin, ProvenanceEvent, QuantifiedCriterion,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OpKind {
    Add,
    Remove,
    Update,
}

/// Partial requirement fields; absent fields are left unchanged by an update.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AsrPatch {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<AsrKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub statement: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criterion: Option<QuantifiedCriterion>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tags: Option<Vec<String>>,
}

impl AsrPatch {
    pub fn is_empty(&self) -> bool {
        self.kind.is_none() && self.statement.is_none() && self.criterion.is_none() && self.tags.is_none()
    }

    fn changed_fields(&self) -> Vec<&'static str> {
        let mut f = Vec::new();
        if self.kind.is_some() {
            f.push("kind");
        }
        if self.statement.is_some() {
            f.push("statement");
        }
        if self.criterion.is_some() {
            f.push("criterion");
        }
        if self.tags.is_some() {
            f.push("tags");
        }
        f
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementOp {
    pub op: OpKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default)]
    pub payload: AsrPatch,
}

impl RefinementOp {
    pub fn add(payload: AsrPatch) -> Self {
        RefinementOp { op: OpKind::Add, target: None, payload }
    }

    pub fn update(target: impl Into<String>, payload: AsrPatch) -> Self {
        RefinementOp { op: OpKind::Update, target: Some(target.into()), payload }
    }

    pub fn remove(target: impl Into<String>) -> Self {
        RefinementOp { op: OpKind::Remove, target: Some(target.into()), payload: AsrPatch::default() }
    }

    pub fn check_well_formed(&self) -> Result<(), AnalysisError> {
        match (self.op, &self.target) {
            (OpKind::Add, Some(_)) => Err(AnalysisError::InvalidPayload("an add must not name a target".into())),
            (OpKind::Remove | OpKind::Update, None) => {
                Err(AnalysisError::InvalidPayload(format!("{:?} requires a target requirement id", self.op)))
            }
            _ => Ok(()),
        }
    }
}

/// Applies one refinement and returns the new list plus the provenance it must be logged with.
///
/// Pure in `(asrs, op)`: adds get the smallest free id and status Refined, updates merge the
/// payload and set Refined, removals set Rejected and keep the record as a tombstone.
pub fn apply_refinement(
    asrs: &[Asr],
    op: &RefinementOp,
    origin: Origin,
) -> Result<(Vec<Asr>, ProvenanceEvent), AnalysisError> {
    op.check_well_formed()?;
    if let Some(c) = &op.payload.criterion {
        c.validate().map_err(|e| AnalysisError::InvalidPayload(e.to_string()))?;
    }
    let mut out = asrs.to_vec();
    let event = match op.op {
        OpKind::Add => {
            let kind = op.payload.kind.ok_or_else(|| AnalysisError::InvalidPayload("an add needs a kind".into()))?;
            let statement = op
                .payload
                .statement
                .as_deref()
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| AnalysisError::InvalidPayload("an add needs a statement".into()))?;
            let id = new_asr_id(asrs.iter().map(|a| a.id.as_str()));
            out.push(Asr {
                id: id.clone(),
                kind,
                statement: statement.to_string(),
                criterion: op.payload.criterion.clone(),
                tags: op.payload.tags.clone().unwrap_or_default(),
                status: AsrStatus::Refined,
            });
            ProvenanceEvent::new(ArtifactRef::new(ArtifactKind::Asr, id), origin)
        }
        OpKind::Update => {
            let target = op.target.as_deref().unwrap_or_default();
            let asr = find_live(&mut out, target)?;
            if op.payload.is_empty() {
                return Err(AnalysisError::InvalidPayload("an update needs at least one field".into()));
            }
            if let Some(k) = op.payload.kind {
                asr.kind = k;
            }
            if let Some(s) = &op.payload.statement {
                if s.trim().is_empty() {
                    return Err(AnalysisError::InvalidPayload("statement must not be empty".into()));
                }
                asr.statement = s.trim().to_string();
            }
            if let Some(c) = &op.payload.criterion {
                asr.criterion = Some(c.clone());
            }
            if let Some(t) = &op.payload.tags {
                asr.tags = t.clone();
            }
            asr.status = AsrStatus::Refined;
            ProvenanceEvent::new(
                ArtifactRef::new(ArtifactKind::Asr, target).with_field(op.payload.changed_fields().join(",")),
                origin,
            )
        }
        OpKind::Remove => {
            let target = op.target.as_deref().unwrap_or_default();
            let asr = find_live(&mut out, target)?;
            asr.status = AsrStatus::Rejected;
            ProvenanceEvent::new(ArtifactRef::new(ArtifactKind::Asr, target).with_field("status"), origin)
        }
    };
    Ok((out, event))
}

fn find_live<'a>(asrs: &'a mut [Asr], id: &str) -> Result<&'a mut Asr, AnalysisError> {
    let asr = asrs.iter_mut().find(|a| a.id == id).ok_or_else(|| AnalysisError::UnknownAsr(id.to_string()))?;
    if asr.status == AsrStatus::Rejected {
        return Err(AnalysisError::InvalidPayload(format!("{id} was removed and cannot change")));
    }
    Ok(asr)
}

/// Marks `ids` Accepted, all or nothing.
pub fn accept_asrs(asrs: &[Asr], ids: &[String]) -> Result<(Vec<Asr>, Vec<ProvenanceEvent>), AnalysisError> {
    let mut out = asrs.to_vec();
    let mut events = Vec::new();
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id.as_str()) {
            continue;
        }
        let asr = out.iter_mut().find(|a| &a.id == id).ok_or_else(|| AnalysisError::UnknownAsr(id.clone()))?;
        if asr.status == AsrStatus::Rejected {
            return Err(AnalysisError::InvariantViolation {
                asr_id: id.clone(),
                reason: "a removed requirement cannot be accepted".into(),
            });
        }
        asr.status = AsrStatus::Accepted;
        asr.check_invariants()
            .map_err(|reason| AnalysisError::InvariantViolation { asr_id: id.clone(), reason })?;
        events.push(ProvenanceEvent::new(
            ArtifactRef::new(ArtifactKind::Asr, id).with_field("status"),
            Origin::Architect,
        ));
    }
    Ok((out, events))
}
