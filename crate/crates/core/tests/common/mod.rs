#![allow(dead_code)]

use std::path::PathBuf;

use puzzle_ga::domain::{Pool, Puzzle};
use puzzle_ga::persistence::{parse_pool, parse_puzzle_file};

/// Pool generator seed behind `data/pool-12.json`.
pub const REFERENCE_POOL_SEED: u64 = 2;
/// Pool generator seed behind `data/pool-500.json`.
pub const DESK_POOL_SEED: u64 = 1;

// Ground truth for `tiny.json` on `pool-12.json`, enumerated once by the
// oracle and cross-checked with an independent brute force.
pub const TINY_ENUMERATED: u64 = 11_880;
pub const TINY_FEASIBLE_COUNT: u64 = 392;
pub const TINY_OPTIMAL_PRICE: f64 = 62.92;
pub const TINY_OPTIMAL_COUNT: u64 = 24;

// Same for `tiny-path.json`, which has exactly 30 feasible arrangements.
pub const PATH_FEASIBLE_COUNT: u64 = 30;
pub const PATH_OPTIMAL_PRICE: f64 = 124.3;
pub const PATH_OPTIMAL_COUNT: u64 = 2;

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn load_pool(name: &str) -> Pool {
    parse_pool(&std::fs::read_to_string(data(name)).unwrap()).unwrap()
}

pub fn load_puzzle(name: &str, pool: &Pool) -> Puzzle {
    parse_puzzle_file(&std::fs::read_to_string(data(name)).unwrap())
        .unwrap()
        .bind(pool.schema())
        .unwrap()
}

/// Prices in the data files have cents; sums may carry float noise.
pub fn same_price(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

use puzzle_ga::constraints::{filter_pool, LinearConstraint, PartialState, WorkCounter};
use puzzle_ga::domain::{FormationGraph, Requirement};
use puzzle_ga::oracle::{enumerate_all, feasible_selections};
use puzzle_ga::persistence::{generate_pool, CategoricalSpec, LevelSpec, PoolSpec};
use puzzle_ga::rng::Rng;

/// A small pool with few values per trait, so that random count bounds bite.
pub fn tiny_spec(size: usize) -> PoolSpec {
    let mut spec = PoolSpec::with_size(size);
    let cat = |name: &str, values: &[&str]| CategoricalSpec {
        name: name.into(),
        values: values.iter().map(|v| v.to_string()).collect(),
        synergy_weight: 1.0,
    };
    spec.categorical = vec![
        cat("race", &["goblin", "elf", "orc"]),
        cat("nation", &["north", "south"]),
        cat("religion", &["r1", "r2", "r3", "r4"]),
        cat("hometown", &["t1", "t2", "t3"]),
    ];
    spec.level = LevelSpec {
        name: "level".into(),
        min: 1,
        max: 6,
        scale: 3.0,
        synergy_weight: 1.0,
    };
    spec
}

/// Random pool (5 to 14 items) and a path puzzle (1 to 4 nodes) carrying
/// one to four random linear requirements.
pub fn random_linear_instance(seed: u64) -> (Pool, Puzzle) {
    let mut rng = Rng::new(seed);
    let m = 5 + rng.index(10);
    let n = 1 + rng.index(4);
    let pool = generate_pool(&tiny_spec(m), rng.next_u64()).unwrap();
    let count = 1 + rng.index(4);
    let pick = |rng: &mut Rng, values: &[&str]| values[rng.index(values.len())].to_string();
    let requirements = (0..count)
        .map(|_| match rng.index(5) {
            0 => Requirement::min_sum("level", (n + rng.index(5 * n + 1)) as f64),
            1 => Requirement::min_count("race", pick(&mut rng, &["goblin", "elf", "orc"]).as_str(), rng.index(n + 1) as u32),
            2 => Requirement::max_count("nation", pick(&mut rng, &["north", "south"]).as_str(), rng.index(n) as u32),
            3 => Requirement::min_distinct("religion", 1 + rng.index(n) as u32),
            _ => Requirement::max_per_value("hometown", 1 + rng.index(n) as u32),
        })
        .collect();
    let puzzle = Puzzle::new(format!("random-{seed}"), pool.schema().clone(), FormationGraph::path(n), requirements);
    (pool, puzzle)
}

/// Findings of [`check_filter_soundness`] on one instance.
#[derive(Debug, Default)]
pub struct SoundnessReport {
    pub states: usize,
    pub survivors: usize,
    /// Survivors that leave some single requirement unsatisfiable.
    pub stranded: usize,
    /// Items in a feasible completion that the filter dropped.
    pub lost: usize,
    /// Chained filtering disagreed with filtering the whole remaining pool.
    pub chain_mismatches: usize,
    /// Survivors with no completion meeting all requirements at once.
    pub joint_dead_ends: usize,
    /// The oracle's count disagreed with feasible selections times arrangements.
    pub oracle_mismatch: bool,
}

fn extends(selections: &[Vec<usize>], chosen: &[usize]) -> bool {
    selections.iter().any(|s| chosen.iter().all(|c| s.binary_search(c).is_ok()))
}

/// Walks random traversals of `puzzle` and checks every filter result
/// against exhaustive enumeration.
pub fn check_filter_soundness(pool: &Pool, puzzle: &Puzzle, walks: usize, seed: u64) -> SoundnessReport {
    let mut report = SoundnessReport::default();
    let n = puzzle.node_count();
    let constraints = LinearConstraint::compile(puzzle, pool).unwrap();
    let joint = feasible_selections(pool, puzzle, u128::MAX).unwrap();
    let single: Vec<Vec<Vec<usize>>> = puzzle
        .requirements
        .iter()
        .map(|r| {
            let mut p = puzzle.clone();
            p.requirements = vec![r.clone()];
            feasible_selections(pool, &p, u128::MAX).unwrap()
        })
        .collect();

    let arrangements: u64 = (1..=n as u64).product();
    let oracle = enumerate_all(pool, puzzle, &Default::default()).unwrap();
    report.oracle_mismatch = oracle.feasible_count != joint.len() as u64 * arrangements;

    let mut rng = Rng::new(seed);
    for _ in 0..walks {
        let mut state = PartialState::new(n, &constraints);
        let mut chosen: Vec<usize> = Vec::new();
        let mut chained: Vec<usize> = (0..pool.len()).collect();
        for node in 0..n {
            let rest: Vec<usize> = (0..pool.len()).filter(|i| !chosen.contains(i)).collect();
            let fresh = filter_pool(&rest, &state, &constraints, pool, &mut WorkCounter::default());
            chained = filter_pool(&chained, &state, &constraints, pool, &mut WorkCounter::default());
            report.states += 1;
            if chained != fresh {
                report.chain_mismatches += 1;
            }
            for &x in &rest {
                let mut with = chosen.clone();
                with.push(x);
                with.sort_unstable();
                let kept = fresh.contains(&x);
                if kept {
                    report.survivors += 1;
                    if single.iter().any(|s| !extends(s, &with)) {
                        report.stranded += 1;
                    }
                    if !extends(&joint, &with) {
                        report.joint_dead_ends += 1;
                    }
                } else if extends(&joint, &with) {
                    report.lost += 1;
                }
            }
            if fresh.is_empty() {
                break;
            }
            let x = fresh[rng.index(fresh.len())];
            state.assign(node, x, &constraints, pool).unwrap();
            chosen.push(x);
            chained.retain(|&i| i != x);
        }
    }
    report
}
