use serde::{Deserialize, Serialize};

use crate::model::{AnnotationKey, MemberKind, ModelGraph, Visibility};

pub const DEFAULT_SENSITIVE_FIELDS: [&str; 4] = ["address", "dob", "ssn", "full_history"];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CheckReason {
    MissingAnnotation(AnnotationKey),
    PublicConstructor,
    NoStaticAccessor,
    SensitiveFieldExposed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckOutcome {
    Pass { satisfied: Vec<String> },
    Fail { reasons: Vec<CheckReason> },
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, CheckOutcome::Pass { .. })
    }

    pub fn reasons(&self) -> &[CheckReason] {
        match self {
            CheckOutcome::Pass { .. } => &[],
            CheckOutcome::Fail { reasons } => reasons,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
pub enum CheckError {
    #[error("no element named {0:?} in the model")]
    UnknownElement(String),
}

/// Field names treated as personal data by the data-minimization check. Names are compared
/// case-insensitively with underscores ignored, so `fullHistory` matches `full_history`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensitiveFields {
    keys: Vec<String>,
}

impl Default for SensitiveFields {
    fn default() -> Self {
        SensitiveFields::new(DEFAULT_SENSITIVE_FIELDS)
    }
}

impl SensitiveFields {
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut keys: Vec<String> = names.into_iter().map(|n| fold(n.as_ref())).filter(|k| !k.is_empty()).collect();
        keys.sort();
        keys.dedup();
        SensitiveFields { keys }
    }

    pub fn contains(&self, field: &str) -> bool {
        self.keys.binary_search(&fold(field)).is_ok()
    }
}

fn fold(name: &str) -> String {
    name.chars().filter(|c| *c != '_').flat_map(char::to_lowercase).collect()
}

/// Singleton holds iff the element is annotated, declares no public constructor, and exposes
/// at least one public static operation. Only the named element is inspected.
pub fn check_singleton(model: &ModelGraph, element: &str) -> Result<CheckOutcome, CheckError> {
    let e = model.element(element).ok_or_else(|| CheckError::UnknownElement(element.to_string()))?;
    let mut reasons = Vec::new();
    let mut satisfied = Vec::new();
    if e.annotation(&AnnotationKey::Singleton).is_some() {
        satisfied.push("annotated <<singleton>>".to_string());
    } else {
        reasons.push(CheckReason::MissingAnnotation(AnnotationKey::Singleton));
    }
    let public_ctor = e.members.iter().any(|m| m.is_constructor_of(&e.name) && m.visibility == Visibility::Public);
    if public_ctor {
        reasons.push(CheckReason::PublicConstructor);
    } else {
        satisfied.push("no public constructor".to_string());
    }
    let accessor = e
        .members
        .iter()
        .find(|m| m.is_static && m.visibility == Visibility::Public && m.kind == MemberKind::Operation);
    match accessor {
        Some(m) => satisfied.push(format!("static accessor {}()", m.name)),
        None => reasons.push(CheckReason::NoStaticAccessor),
    }
    Ok(if reasons.is_empty() { CheckOutcome::Pass { satisfied } } else { CheckOutcome::Fail { reasons } })
}

/// Checks a tactic annotation on one element. Data minimization additionally fails for every
/// public attribute whose name is in `sensitive`.
pub fn check_tactic(
    model: &ModelGraph,
    element: &str,
    key: &AnnotationKey,
    sensitive: &SensitiveFields,
) -> Result<CheckOutcome, CheckError> {
    if *key == AnnotationKey::Singleton {
        return check_singleton(model, element);
    }
    let e = model.element(element).ok_or_else(|| CheckError::UnknownElement(element.to_string()))?;
    let mut reasons = Vec::new();
    let mut satisfied = Vec::new();
    if e.annotation(key).is_some() {
        satisfied.push(format!("annotated <<{key}>>"));
    } else {
        reasons.push(CheckReason::MissingAnnotation(key.clone()));
    }
    if *key == AnnotationKey::DataMinimized {
        let exposed: Vec<&str> = e
            .members
            .iter()
            .filter(|m| m.kind == MemberKind::Attribute && m.visibility == Visibility::Public)
            .filter(|m| sensitive.contains(&m.name))
            .map(|m| m.name.as_str())
            .collect();
        if exposed.is_empty() {
            satisfied.push("no public sensitive attribute".to_string());
        }
        reasons.extend(exposed.into_iter().map(|n| CheckReason::SensitiveFieldExposed(n.to_string())));
    }
    Ok(if reasons.is_empty() { CheckOutcome::Pass { satisfied } } else { CheckOutcome::Fail { reasons } })
}
