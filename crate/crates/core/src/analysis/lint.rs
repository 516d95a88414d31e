use serde::{Deserialize, Serialize};

use crate::model::{Asr, AsrKind, AsrStatus};

pub const DEFAULT_VAGUE_TERMS: [&str; 5] = ["instantly", "securely", "fast", "scalable", "user-friendly"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LintCode {
    UnquantifiedQuality,
    VagueTerm,
    MissingConstraintTag,
    EmptyStatement,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LintFinding {
    pub asr_id: String,
    pub code: LintCode,
    pub detail: String,
    pub triggering_term: Option<String>,
}

/// Vague-term lexicon, matched case-insensitively on whole words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    terms: Vec<String>,
}

impl Default for Lexicon {
    fn default() -> Self {
        Lexicon::new(DEFAULT_VAGUE_TERMS)
    }
}

impl Lexicon {
    pub fn new<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut terms: Vec<String> =
            terms.into_iter().map(|t| t.as_ref().trim().to_lowercase()).filter(|t| !t.is_empty()).collect();
        terms.sort();
        terms.dedup();
        Lexicon { terms }
    }

    /// One term per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Self {
        Lexicon::new(text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')))
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    /// Lexicon terms occurring in `text` as whole words, in lexicon order.
    pub fn matches(&self, text: &str) -> Vec<&str> {
        let lower = text.to_lowercase();
        self.terms.iter().filter(|t| contains_word(&lower, t)).map(String::as_str).collect()
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn contains_word(haystack: &str, word: &str) -> bool {
    haystack.match_indices(word).any(|(i, _)| {
        let before = haystack[..i].chars().next_back();
        let after = haystack[i + word.len()..].chars().next();
        !before.is_some_and(is_word_char) && !after.is_some_and(is_word_char)
    })
}

/// Deterministic findings for every requirement that is not a tombstone, sorted by
/// (asr id, code, term).
pub fn lint_asrs(asrs: &[Asr], lexicon: &Lexicon) -> Vec<LintFinding> {
    let mut findings = Vec::new();
    for asr in asrs.iter().filter(|a| a.status != AsrStatus::Rejected) {
        let finding = |code, detail: String, term: Option<&str>| LintFinding {
            asr_id: asr.id.clone(),
            code,
            detail,
            triggering_term: term.map(str::to_string),
        };
        if asr.statement.trim().is_empty() {
            findings.push(finding(LintCode::EmptyStatement, "statement is empty".into(), None));
        }
        if asr.kind == AsrKind::Quality && asr.criterion.is_none() {
            findings.push(finding(
                LintCode::UnquantifiedQuality,
                "quality requirement has no quantified criterion".into(),
                None,
            ));
        }
        for term in lexicon.matches(&asr.statement) {
            findings.push(finding(LintCode::VagueTerm, format!("vague term {term:?}; state a measurable bound"), Some(term)));
        }
        if asr.kind == AsrKind::Constraint && asr.tags.is_empty() {
            findings.push(finding(
                LintCode::MissingConstraintTag,
                "constraint carries no regulatory or policy tag".into(),
                None,
            ));
        }
    }
    findings.sort_by(|a, b| {
        (&a.asr_id, a.code, &a.triggering_term).cmp(&(&b.asr_id, b.code, &b.triggering_term))
    });
    findings
}
