use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::SessionError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Phase {
    StoryCapture,
    Analysis,
    Synthesis,
    Evaluation,
    Reported,
}

impl Phase {
    pub const ALL: [Phase; 5] = [Phase::StoryCapture, Phase::Analysis, Phase::Synthesis, Phase::Evaluation, Phase::Reported];
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionState {
    pub state: Phase,
    pub revision: u64,
}

impl Default for SessionState {
    fn default() -> Self {
        SessionState { state: Phase::StoryCapture, revision: 0 }
    }
}

/// What the gates look at; taken from the project at transition time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GateFacts {
    pub has_story: bool,
    pub accepted_asrs: usize,
    pub model_revisions: usize,
    pub reports: usize,
}

/// StoryCapture→Analysis, Analysis↔Synthesis, Synthesis↔Evaluation, Evaluation→Reported, and
/// any state back to Analysis. Self-loops are not transitions.
pub fn is_allowed(from: Phase, to: Phase) -> bool {
    use Phase::*;
    from != to
        && matches!(
            (from, to),
            (_, Analysis) | (Analysis, Synthesis) | (Synthesis, Evaluation) | (Evaluation, Synthesis) | (Evaluation, Reported)
        )
}

/// The precondition for entering `to`, or the reason it does not hold.
pub fn gate(to: Phase, facts: &GateFacts) -> Result<(), String> {
    match to {
        Phase::Analysis if !facts.has_story => Err("analysis needs an imported story".into()),
        Phase::Synthesis if facts.accepted_asrs == 0 => Err("synthesis needs at least one accepted requirement".into()),
        Phase::Evaluation if facts.model_revisions == 0 => Err("evaluation needs a parsed model revision".into()),
        Phase::Reported if facts.reports == 0 => Err("reporting needs an evaluation report".into()),
        _ => Ok(()),
    }
}

pub fn transition(session: SessionState, to: Phase, facts: &GateFacts) -> Result<SessionState, SessionError> {
    if !is_allowed(session.state, to) {
        return Err(SessionError::IllegalTransition { from: session.state, to });
    }
    gate(to, facts).map_err(SessionError::GateUnsatisfied)?;
    Ok(SessionState { state: to, revision: session.revision + 1 })
}

/// Shortest sequence of allowed transitions from `from` to `to` (empty when already there).
pub fn route(from: Phase, to: Phase) -> Option<Vec<Phase>> {
    let mut prev: [Option<Phase>; 5] = [None; 5];
    let idx = |p: Phase| Phase::ALL.iter().position(|x| *x == p).expect("phase listed");
    let mut queue = VecDeque::from([from]);
    let mut seen = [false; 5];
    seen[idx(from)] = true;
    while let Some(p) = queue.pop_front() {
        if p == to {
            let mut path = Vec::new();
            let mut cur = p;
            while cur != from {
                path.push(cur);
                cur = prev[idx(cur)].expect("visited phases have a predecessor");
            }
            path.reverse();
            return Some(path);
        }
        for next in Phase::ALL {
            if is_allowed(p, next) && !seen[idx(next)] {
                seen[idx(next)] = true;
                prev[idx(next)] = Some(p);
                queue.push_back(next);
            }
        }
    }
    None
}
