use std::fmt;

use thiserror::Error;

use crate::domain::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {reason}")]
    Parse {
        line: usize,
        column: usize,
        reason: String,
    },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("unknown item id `{0}`")]
    UnknownItemId(String),

    #[error("invalid puzzle: {}", ViolationList(.0))]
    InvalidPuzzle(Vec<Violation>),

    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),

    #[error("item {0} is already part of the assignment")]
    DuplicateItem(usize),

    #[error("node {0} is already visited")]
    NodeAlreadyVisited(usize),

    #[error("pool holds {pool} items but the formation needs {nodes}")]
    PoolTooSmall { pool: usize, nodes: usize },

    #[error(
        "could not build an initial population: {found} of {wanted} solutions after {attempts} constructions (best synergy seen {best_synergy:.4})"
    )]
    InitializationBudgetExceeded {
        wanted: usize,
        found: usize,
        attempts: usize,
        best_synergy: f64,
    },

    #[error("instance needs {assignments} assignments, above the enumeration cap of {cap}")]
    InstanceTooLarge { assignments: u128, cap: u128 },

    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

struct ViolationList<'a>(&'a [Violation]);

impl fmt::Display for ViolationList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{}: {}", v.field, v.message)?;
        }
        Ok(())
    }
}
