use thiserror::Error;

use crate::netmodel::{LinkKey, NodeId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("duplicate node {0}")]
    DuplicateNode(NodeId),
    #[error("node {0} has a non-finite position")]
    NonFinitePosition(NodeId),
    #[error("node {0} has a negative or non-finite speed")]
    NegativeSpeed(NodeId),
    #[error("link from node {0} to itself")]
    SelfLink(NodeId),
    #[error("duplicate link {0}")]
    DuplicateLink(LinkKey),
    #[error("link {0} must have positive capacity")]
    BadCapacity(LinkKey),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaError {
    #[error("chromosome lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("chromosome has {got} genes but the graph has {expected} links")]
    WrongLength { expected: usize, got: usize },
    #[error("invalid GA parameters: {0}")]
    Params(String),
}

/// Scenario text problem. Always carries the 1-based line it was found on.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {kind}")]
pub struct ScenarioError {
    pub line: usize,
    pub kind: ScenarioErrorKind,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioErrorKind {
    #[error("syntax error at `{token}`: {reason}")]
    Syntax { token: String, reason: String },
    #[error("unknown record kind `{0}`")]
    UnknownRecord(String),
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
    #[error("`{token}` refers to a node that does not exist")]
    Dangling { token: String },
    #[error("invalid record `{token}`: {reason}")]
    Invalid { token: String, reason: String },
}

impl ScenarioError {
    pub fn syntax(line: usize, token: impl Into<String>, reason: impl Into<String>) -> Self {
        ScenarioError {
            line,
            kind: ScenarioErrorKind::Syntax {
                token: token.into(),
                reason: reason.into(),
            },
        }
    }

    pub fn invalid(line: usize, token: impl Into<String>, reason: impl Into<String>) -> Self {
        ScenarioError {
            line,
            kind: ScenarioErrorKind::Invalid {
                token: token.into(),
                reason: reason.into(),
            },
        }
    }

    pub fn dangling(line: usize, token: impl Into<String>) -> Self {
        ScenarioError {
            line,
            kind: ScenarioErrorKind::Dangling {
                token: token.into(),
            },
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("weight optimization failed: {0}")]
    Ga(#[from] GaError),
}
