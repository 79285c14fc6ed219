//! File formats and synthetic data.
//!
//! Pools, puzzles and reports are JSON documents; convergence logs are CSV
//! with one row per generation. Every loader reports malformed input with a
//! line and column.

mod generate;
mod log;
mod pool;
mod puzzle;
mod report;

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub use generate::{generate_pool, CategoricalSpec, LevelSpec, PoolSpec, PriceModel};
pub use log::{log_to_csv, parse_log};
pub use pool::{parse_pool, pool_to_json, PoolFile};
pub use puzzle::{parse_puzzle_file, PuzzleFile, RequirementEntry, SolverDefaults};
pub use report::{OracleReport, PopulationReport, SolutionRecord, SolutionReport};

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize infallibly");
    text.push('\n');
    text
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(json_error)
}

pub(crate) fn json_error(e: serde_json::Error) -> Error {
    let full = e.to_string();
    let reason = match full.rfind(" at line ") {
        Some(cut) => full[..cut].to_string(),
        None => full,
    };
    Error::Parse {
        line: e.line(),
        column: e.column(),
        reason,
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    Ok(fs::read_to_string(path)?)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(fs::write(path, text)?)
}
