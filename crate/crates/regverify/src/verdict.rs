use std::fmt;

use crate::semantics::{AbstractConfig, Execution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Answer {
    Positive,
    Negative,
    /// Only produced when a budgeted search runs out.
    Unknown,
}

impl Answer {
    pub fn as_str(&self) -> &'static str {
        match self {
            Answer::Positive => "positive",
            Answer::Negative => "negative",
            Answer::Unknown => "unknown",
        }
    }

    pub fn from_bool(b: bool) -> Answer {
        if b {
            Answer::Positive
        } else {
            Answer::Negative
        }
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A decision together with an optional abstract witness execution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub answer: Answer,
    pub algorithm: &'static str,
    pub witness: Option<Execution<AbstractConfig>>,
    pub explored_nodes: u64,
}

impl Verdict {
    pub fn new(answer: Answer, algorithm: &'static str) -> Verdict {
        Verdict { answer, algorithm, witness: None, explored_nodes: 0 }
    }

    pub fn with_nodes(mut self, n: u64) -> Verdict {
        self.explored_nodes = n;
        self
    }

    pub fn with_witness(mut self, w: Execution<AbstractConfig>) -> Verdict {
        self.witness = Some(w);
        self
    }

    pub fn is_positive(&self) -> bool {
        self.answer == Answer::Positive
    }
}
