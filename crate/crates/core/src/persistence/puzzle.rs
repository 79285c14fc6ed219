use serde::{Deserialize, Serialize};

use crate::domain::{validate_puzzle, FormationGraph, Puzzle, Requirement, TraitKind, TraitSchema, TraitValue};
use crate::error::{Error, Result};
use crate::synergy::{KernelSpec, WeightKernel};

use super::{from_json, to_json};

/// A requirement as written in a puzzle file. Identical to [`Requirement`]
/// plus `min_mean`, a per-node average that becomes a sum bound once the
/// node count is known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RequirementEntry {
    MinSum {
        #[serde(rename = "trait")]
        trait_name: String,
        bound: f64,
    },
    MinMean {
        #[serde(rename = "trait")]
        trait_name: String,
        mean: f64,
    },
    MinCount {
        #[serde(rename = "trait")]
        trait_name: String,
        value: TraitValue,
        bound: u32,
    },
    MaxCount {
        #[serde(rename = "trait")]
        trait_name: String,
        value: TraitValue,
        bound: u32,
    },
    MinDistinct {
        #[serde(rename = "trait")]
        trait_name: String,
        bound: u32,
    },
    MaxPerValue {
        #[serde(rename = "trait")]
        trait_name: String,
        cap: u32,
    },
    SynergyAtLeast {
        threshold: f64,
    },
}

impl RequirementEntry {
    fn trait_name(&self) -> Option<&str> {
        match self {
            RequirementEntry::MinSum { trait_name, .. }
            | RequirementEntry::MinMean { trait_name, .. }
            | RequirementEntry::MinCount { trait_name, .. }
            | RequirementEntry::MaxCount { trait_name, .. }
            | RequirementEntry::MinDistinct { trait_name, .. }
            | RequirementEntry::MaxPerValue { trait_name, .. } => Some(trait_name),
            RequirementEntry::SynergyAtLeast { .. } => None,
        }
    }

    pub fn to_requirement(&self, node_count: usize) -> Requirement {
        match self.clone() {
            RequirementEntry::MinSum { trait_name, bound } => Requirement::MinSum { trait_name, bound },
            RequirementEntry::MinMean { trait_name, mean } => Requirement::MinSum {
                trait_name,
                bound: mean * node_count as f64,
            },
            RequirementEntry::MinCount { trait_name, value, bound } => Requirement::MinCount { trait_name, value, bound },
            RequirementEntry::MaxCount { trait_name, value, bound } => Requirement::MaxCount { trait_name, value, bound },
            RequirementEntry::MinDistinct { trait_name, bound } => Requirement::MinDistinct { trait_name, bound },
            RequirementEntry::MaxPerValue { trait_name, cap } => Requirement::MaxPerValue { trait_name, cap },
            RequirementEntry::SynergyAtLeast { threshold } => Requirement::SynergyAtLeast { threshold },
        }
    }
}

impl From<&Requirement> for RequirementEntry {
    fn from(r: &Requirement) -> Self {
        match r.clone() {
            Requirement::MinSum { trait_name, bound } => RequirementEntry::MinSum { trait_name, bound },
            Requirement::MinCount { trait_name, value, bound } => RequirementEntry::MinCount { trait_name, value, bound },
            Requirement::MaxCount { trait_name, value, bound } => RequirementEntry::MaxCount { trait_name, value, bound },
            Requirement::MinDistinct { trait_name, bound } => RequirementEntry::MinDistinct { trait_name, bound },
            Requirement::MaxPerValue { trait_name, cap } => RequirementEntry::MaxPerValue { trait_name, cap },
            Requirement::SynergyAtLeast { threshold } => RequirementEntry::SynergyAtLeast { threshold },
        }
    }
}

/// Defaults a puzzle may suggest; command-line flags take precedence.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverDefaults {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub islands: Option<usize>,
}

/// On-disk puzzle. It names traits but carries no schema; [`PuzzleFile::bind`]
/// resolves it against a pool's schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PuzzleFile {
    pub name: String,
    pub graph: FormationGraph,
    pub requirements: Vec<RequirementEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverDefaults>,
}

impl PuzzleFile {
    pub fn from_puzzle(puzzle: &Puzzle) -> Self {
        PuzzleFile {
            name: puzzle.name.clone(),
            graph: puzzle.graph.clone(),
            requirements: puzzle.requirements.iter().map(RequirementEntry::from).collect(),
            kernel: None,
            solver: None,
        }
    }

    pub fn solver(&self) -> SolverDefaults {
        self.solver.clone().unwrap_or_default()
    }

    /// Resolves trait names against `schema` and validates the result.
    pub fn bind(&self, schema: &TraitSchema) -> Result<Puzzle> {
        for entry in &self.requirements {
            let Some(name) = entry.trait_name() else { continue };
            let Some(col) = schema.position(name) else {
                return Err(Error::SchemaMismatch(format!("requirement references unknown trait `{name}`")));
            };
            let numeric = schema.traits[col].kind == TraitKind::Numeric;
            if matches!(entry, RequirementEntry::MinSum { .. } | RequirementEntry::MinMean { .. }) && !numeric {
                return Err(Error::SchemaMismatch(format!("sum bound on categorical trait `{name}`")));
            }
        }
        let kernel = match &self.kernel {
            Some(spec) => WeightKernel::from_spec(schema, spec)?,
            None => WeightKernel::default_for(schema),
        };
        let n = self.graph.node_count();
        let puzzle = Puzzle {
            name: self.name.clone(),
            schema: schema.clone(),
            graph: self.graph.clone(),
            requirements: self.requirements.iter().map(|r| r.to_requirement(n)).collect(),
            kernel,
        };
        let errors: Vec<_> = validate_puzzle(&puzzle).into_iter().filter(|v| v.is_error()).collect();
        if !errors.is_empty() {
            return Err(Error::InvalidPuzzle(errors));
        }
        Ok(puzzle)
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }
}

pub fn parse_puzzle_file(text: &str) -> Result<PuzzleFile> {
    from_json(text)
}
