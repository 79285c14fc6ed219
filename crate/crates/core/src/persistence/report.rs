use serde::{Deserialize, Serialize};

use crate::domain::{evaluate, Pool, Puzzle, RequirementCheck, Solution};
use crate::error::Result;
use crate::oracle::OracleResult;

use super::{from_json, to_json};

/// One formation by item id, in node order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionRecord {
    pub items: Vec<String>,
    pub synergy: f64,
    pub price: f64,
}

impl SolutionRecord {
    pub fn new(solution: &Solution, pool: &Pool) -> Self {
        SolutionRecord {
            items: solution.item_ids(pool).into_iter().map(String::from).collect(),
            synergy: solution.synergy,
            price: solution.fitness,
        }
    }

    /// Resolves ids against `pool`, keeping the recorded synergy and price.
    pub fn to_solution(&self, pool: &Pool) -> Result<Solution> {
        Ok(Solution {
            items: pool.resolve(&self.items)?,
            synergy: self.synergy,
            fitness: self.price,
        })
    }
}

/// A single solution with its requirement-by-requirement check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionReport {
    pub puzzle: String,
    pub method: String,
    pub seed: u64,
    pub feasible: bool,
    pub solution: SolutionRecord,
    pub checks: Vec<RequirementCheck>,
}

impl SolutionReport {
    pub fn new(method: &str, seed: u64, solution: &Solution, puzzle: &Puzzle, pool: &Pool) -> Result<Self> {
        let report = evaluate(solution, puzzle, pool)?;
        Ok(SolutionReport {
            puzzle: puzzle.name.clone(),
            method: method.to_string(),
            seed,
            feasible: report.feasible(),
            solution: SolutionRecord::new(solution, pool),
            checks: report.checks,
        })
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn parse(text: &str) -> Result<Self> {
        from_json(text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationReport {
    pub puzzle: String,
    pub seed: u64,
    /// Cheapest first.
    pub solutions: Vec<SolutionRecord>,
}

impl PopulationReport {
    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn parse(text: &str) -> Result<Self> {
        from_json(text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleReport {
    pub puzzle: String,
    pub enumerated: u64,
    pub feasible_count: u64,
    pub optimal_price: Option<f64>,
    pub optimal_count: u64,
    pub optimal: Vec<SolutionRecord>,
}

impl OracleReport {
    pub fn new(result: &OracleResult, puzzle: &Puzzle, pool: &Pool) -> Self {
        OracleReport {
            puzzle: puzzle.name.clone(),
            enumerated: result.enumerated,
            feasible_count: result.feasible_count,
            optimal_price: result.optimal_fitness,
            optimal_count: result.optimal_count,
            optimal: result.optimal_solutions.iter().map(|s| SolutionRecord::new(s, pool)).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn parse(text: &str) -> Result<Self> {
        from_json(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{FormationGraph, Item, Requirement, TraitDef, TraitSchema};
    use crate::error::Error;

    fn fixture() -> (Pool, Puzzle) {
        let schema = TraitSchema::new(vec![TraitDef::categorical("race")]);
        let items = ["elf", "elf", "orc"]
            .iter()
            .enumerate()
            .map(|(i, r)| Item::new(format!("x{i}"), vec![(*r).into()], 0.1 * (i + 1) as f64))
            .collect();
        let pool = Pool::new(schema.clone(), items).unwrap();
        let puzzle = Puzzle::new("p", schema, FormationGraph::path(2), vec![Requirement::synergy(1.0)]);
        (pool, puzzle)
    }

    #[test]
    fn solution_report_round_trip() {
        let (pool, puzzle) = fixture();
        let s = Solution {
            items: vec![1, 0],
            synergy: 1.0,
            fitness: 0.1 + 0.2,
        };
        let report = SolutionReport::new("construct", 3, &s, &puzzle, &pool).unwrap();
        assert!(report.feasible);
        let text = report.to_json();
        let back = SolutionReport::parse(&text).unwrap();
        assert_eq!(back, report);
        assert_eq!(back.to_json(), text);
        assert_eq!(back.solution.to_solution(&pool).unwrap(), s);
    }

    #[test]
    fn unknown_id_on_resolve() {
        let (pool, _) = fixture();
        let rec = SolutionRecord {
            items: vec!["x0".into(), "nobody".into()],
            synergy: 0.0,
            price: 0.0,
        };
        assert!(matches!(rec.to_solution(&pool), Err(Error::UnknownItemId(id)) if id == "nobody"));
    }

    #[test]
    fn oracle_report_round_trip() {
        let (pool, puzzle) = fixture();
        let result = crate::oracle::enumerate_all(&pool, &puzzle, &Default::default()).unwrap();
        let report = OracleReport::new(&result, &puzzle, &pool);
        assert_eq!(report.feasible_count, 2);
        assert_eq!(report.optimal[0].items, vec!["x0", "x1"]);
        assert_eq!(OracleReport::parse(&report.to_json()).unwrap(), report);
    }
}
