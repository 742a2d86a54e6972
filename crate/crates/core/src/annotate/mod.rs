//! Human annotation of informativeness: task sets, the two labelling
//! schemes, the session state machine replayed from an event log, and
//! agreement statistics.
//!
//! Under `two_phase` an annotator first scores `info1` on a masked sentence,
//! then asks for the target to be revealed and scores `info2`. Under `info3`
//! the target is shown from the start and one guided score is given.
//!
//! All state changes are expressed as [`LogEvent`]s. A caller that persists
//! events appends each one before (or instead of) applying it, so replaying
//! the log into a fresh [`AnnotationState`] reconstructs every session.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Pos;
use crate::stats::StatsError;

mod agreement;
mod state;

pub use agreement::{
    agreement, classifier_annotation_correlation, Agreement, Correlation, PosAgreement,
};
pub use state::{AnnotationState, Session};

const GUIDELINES_TSV: &str = include_str!("../../resources/info3_guidelines.txt");

/// The five anchors of the `info3` scale, indexed by score - 1.
pub fn info3_guidelines() -> Vec<String> {
    GUIDELINES_TSV
        .lines()
        .filter_map(|l| l.split_once('\t'))
        .map(|(_, text)| text.to_string())
        .collect()
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnnotateError {
    #[error("unknown task set {0:?}")]
    UnknownTaskSet(String),
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error("task {0:?} is not in this session")]
    UnknownTask(String),
    #[error("duplicate task id {0:?}")]
    DuplicateTask(String),
    #[error("duplicate task set {0:?}")]
    DuplicateTaskSet(String),
    #[error("task {task_id:?}: {reason}")]
    BadTask {
        task_id: String,
        reason: &'static str,
    },
    #[error("{measure} score {score} outside {min}..={max}")]
    OutOfRange {
        measure: Measure,
        score: i64,
        min: u8,
        max: u8,
    },
    #[error("{measure} is not collected under {scheme}")]
    WrongScheme { measure: Measure, scheme: Scheme },
    #[error("{annotator} already scored {measure} for {task_id}")]
    Conflict {
        annotator: String,
        task_id: String,
        measure: Measure,
    },
    #[error("protocol violation: {0}")]
    Protocol(&'static str),
    #[error("log is inconsistent: {0}")]
    Replay(String),
    #[error("need at least {needed} shared tasks, found {found}")]
    InsufficientOverlap { needed: usize, found: usize },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    TwoPhase,
    Info3,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::TwoPhase => "two_phase",
            Scheme::Info3 => "info3",
        }
    }

    /// Measures a task needs under this scheme, in collection order.
    pub fn measures(self) -> &'static [Measure] {
        match self {
            Scheme::TwoPhase => &[Measure::Info1, Measure::Info2],
            Scheme::Info3 => &[Measure::Info3],
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "two_phase" => Ok(Scheme::TwoPhase),
            "info3" => Ok(Scheme::Info3),
            other => Err(alloc::format!("unknown scheme {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Info1,
    Info2,
    Info3,
}

impl Measure {
    pub fn as_str(self) -> &'static str {
        match self {
            Measure::Info1 => "info1",
            Measure::Info2 => "info2",
            Measure::Info3 => "info3",
        }
    }

    /// Inclusive score range.
    pub fn range(self) -> (u8, u8) {
        match self {
            Measure::Info1 | Measure::Info2 => (1, 10),
            Measure::Info3 => (1, 5),
        }
    }

    pub fn check(self, score: i64) -> Result<u8, AnnotateError> {
        let (min, max) = self.range();
        if score < min as i64 || score > max as i64 {
            return Err(AnnotateError::OutOfRange {
                measure: self,
                score,
                min,
                max,
            });
        }
        Ok(score as u8)
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Measure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "info1" => Ok(Measure::Info1),
            "info2" => Ok(Measure::Info2),
            "info3" => Ok(Measure::Info3),
            other => Err(alloc::format!("unknown measure {other:?}")),
        }
    }
}

/// Where a task sentence came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    #[default]
    Corpus,
    Definition,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationTask {
    pub task_id: String,
    pub tokens: Vec<String>,
    pub position: usize,
    pub pos: Pos,
    #[serde(default)]
    pub provenance: Provenance,
}

impl AnnotationTask {
    pub fn validate(&self) -> Result<(), AnnotateError> {
        let bad = |reason| {
            Err(AnnotateError::BadTask {
                task_id: self.task_id.clone(),
                reason,
            })
        };
        if self.task_id.is_empty() {
            return bad("empty task id");
        }
        if self.position >= self.tokens.len() {
            return bad("target position outside the sentence");
        }
        if self.tokens.iter().any(|t| t.is_empty()) {
            return bad("empty token");
        }
        Ok(())
    }

    pub fn target_form(&self) -> &str {
        &self.tokens[self.position]
    }

    /// Tokens with every occurrence of the target form (ignoring case)
    /// replaced by the slot marker.
    pub fn masked_tokens(&self) -> Vec<String> {
        let target = self.target_form().to_lowercase();
        self.tokens
            .iter()
            .map(|t| {
                if t.to_lowercase() == target {
                    crate::corpus::TARGET.to_string()
                } else {
                    t.clone()
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSet {
    pub id: String,
    pub tasks: Vec<AnnotationTask>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub seq: u64,
    pub annotator: String,
    pub task_id: String,
    pub measure: Measure,
    pub score: u8,
    /// Caller-supplied timestamp (milliseconds since the Unix epoch).
    pub ts: u64,
}

/// One persisted state change.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LogEvent {
    Session {
        session_id: String,
        annotator: String,
        scheme: Scheme,
        task_set: String,
        seed: u64,
        ts: u64,
    },
    Reveal {
        session_id: String,
        task_id: String,
        ts: u64,
    },
    Score {
        session_id: String,
        #[serde(flatten)]
        record: AnnotationRecord,
    },
}

/// What `next` serves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskPayload {
    /// Before reveal: the target form appears nowhere in `tokens`.
    Masked {
        task_id: String,
        tokens: Vec<String>,
        slot_index: usize,
        pos: Pos,
        measure: Measure,
        index: usize,
        total: usize,
    },
    Revealed {
        task_id: String,
        tokens: Vec<String>,
        slot_index: usize,
        target: String,
        pos: Pos,
        measure: Measure,
        index: usize,
        total: usize,
    },
    Info3 {
        task_id: String,
        tokens: Vec<String>,
        target_index: usize,
        target: String,
        pos: Pos,
        measure: Measure,
        guidelines: Vec<String>,
        index: usize,
        total: usize,
    },
    Done {
        completed: usize,
        total: usize,
    },
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn guideline_resource_has_five_anchors() {
        let g = info3_guidelines();
        assert_eq!(g.len(), 5);
        assert!(g.iter().all(|line| !line.is_empty()));
    }

    #[test]
    fn ranges() {
        assert_eq!(Measure::Info1.check(10), Ok(10));
        assert!(Measure::Info2.check(0).is_err());
        assert_eq!(
            Measure::Info3.check(6),
            Err(AnnotateError::OutOfRange {
                measure: Measure::Info3,
                score: 6,
                min: 1,
                max: 5
            })
        );
    }

    #[test]
    fn masking_hides_every_copy() {
        let t = AnnotationTask {
            task_id: "t1".into(),
            tokens: vec!["Bank".into(), "by".into(), "the".into(), "bank".into()],
            position: 3,
            pos: Pos::Noun,
            provenance: Provenance::Corpus,
        };
        assert_eq!(t.masked_tokens(), ["TARGET", "by", "the", "TARGET"]);
    }

    #[test]
    fn names_round_trip() {
        for m in [Measure::Info1, Measure::Info2, Measure::Info3] {
            assert_eq!(m.as_str().parse::<Measure>().unwrap(), m);
        }
        for s in [Scheme::TwoPhase, Scheme::Info3] {
            assert_eq!(s.as_str().parse::<Scheme>().unwrap(), s);
        }
    }
}
