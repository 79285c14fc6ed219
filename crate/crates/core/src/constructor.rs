//! Guided randomized construction of a single feasible solution.
//!
//! One iteration draws a random traversal order over the nodes. At each
//! node the candidate pool is filtered by the look-ahead rules and the
//! candidate with the highest summed weight towards already-visited
//! neighbours is placed (uniformly random for a node with no visited
//! neighbour, ties broken uniformly). If the pool empties, or the finished
//! formation misses the synergy threshold, the next iteration starts over on
//! a fresh path. Iteration `i` runs on its own generator seeded with the
//! `i`-th link of the seed chain, so iterations share nothing but that chain.

use serde::{Deserialize, Serialize};

use crate::constraints::{filter_pool, PartialState, WorkCounter};
use crate::domain::{FormationGraph, Solution};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::rng::{self, Rng};
use crate::synergy::neighbor_score;

pub const DEFAULT_MAX_ITERATIONS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructorConfig {
    pub max_iterations: usize,
    pub rng_seed: u64,
}

impl Default for ConstructorConfig {
    fn default() -> Self {
        ConstructorConfig {
            max_iterations: DEFAULT_MAX_ITERATIONS,
            rng_seed: 0,
        }
    }
}

impl ConstructorConfig {
    pub fn new(rng_seed: u64) -> Self {
        ConstructorConfig {
            rng_seed,
            ..Default::default()
        }
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    fn check(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConstructOutcome {
    Solved {
        solution: Solution,
        /// 1-based iteration that produced the solution.
        iterations: usize,
    },
    Infeasible {
        attempts: usize,
        /// Highest synergy among completed formations, if any completed.
        best_synergy_seen: Option<f64>,
    },
}

impl ConstructOutcome {
    pub fn solution(&self) -> Option<&Solution> {
        match self {
            ConstructOutcome::Solved { solution, .. } => Some(solution),
            ConstructOutcome::Infeasible { .. } => None,
        }
    }

    pub fn into_solution(self) -> Option<Solution> {
        match self {
            ConstructOutcome::Solved { solution, .. } => Some(solution),
            ConstructOutcome::Infeasible { .. } => None,
        }
    }
}

/// How a node's item is picked from the filtered candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pick {
    /// Highest neighbour score, ties uniformly at random.
    Guided,
    /// Uniform over the filtered candidates.
    Uniform,
}

/// Result of one pass over a traversal order.
#[derive(Debug, Clone, PartialEq)]
pub struct Pass {
    /// Filled slots, or `None` if the candidate pool ran dry.
    pub items: Option<Vec<usize>>,
    pub work: WorkCounter,
    /// Candidate scorings performed by the guided pick.
    pub scored: u64,
}

/// Uniformly random visiting order of the graph's nodes.
pub fn random_traversal(graph: &FormationGraph, rng: &mut Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..graph.node_count()).collect();
    rng.shuffle(&mut order);
    order
}

/// Fills the empty slots of `state`, visiting them in `order`, drawing from
/// `candidates` (which must exclude items already placed).
pub fn fill(
    inst: &Instance<'_>,
    mut state: PartialState,
    mut candidates: Vec<usize>,
    order: &[usize],
    pick: Pick,
    rng: &mut Rng,
) -> Pass {
    let pool = inst.pool;
    let graph = &inst.puzzle.graph;
    let constraints = inst.constraints();
    let mut work = WorkCounter::default();
    let mut scored = 0;
    for &node in order {
        candidates = filter_pool(&candidates, &state, constraints, pool, &mut work);
        if candidates.is_empty() {
            return Pass {
                items: None,
                work,
                scored,
            };
        }
        let has_visited_neighbor = graph.neighbors(node).iter().any(|&nb| state.item_at(nb).is_some());
        let chosen = if pick == Pick::Guided && has_visited_neighbor {
            let mut best = f64::NEG_INFINITY;
            let mut best_pos = 0;
            let mut ties = 0u64;
            for (pos, &cand) in candidates.iter().enumerate() {
                let score = neighbor_score(inst.kernel(), pool, cand, node, &state, graph);
                if score > best {
                    best = score;
                    best_pos = pos;
                    ties = 1;
                } else if score == best {
                    ties += 1;
                    if rng.below(ties) == 0 {
                        best_pos = pos;
                    }
                }
            }
            scored += candidates.len() as u64;
            best_pos
        } else {
            rng.index(candidates.len())
        };
        let item = candidates.swap_remove(chosen);
        state
            .assign(node, item, constraints, pool)
            .expect("candidates exclude placed items and order visits each empty node once");
    }
    let items = state.slots().iter().map(|s| s.expect("every node visited")).collect();
    Pass {
        items: Some(items),
        work,
        scored,
    }
}

/// One full traversal from an empty formation.
pub fn single_pass(inst: &Instance<'_>, pick: Pick, rng: &mut Rng) -> Pass {
    let order = random_traversal(&inst.puzzle.graph, rng);
    let candidates = (0..inst.pool.len()).collect();
    fill(inst, inst.empty_state(), candidates, &order, pick, rng)
}

fn ensure_pool(inst: &Instance<'_>) -> Result<()> {
    if inst.pool.len() < inst.node_count() {
        return Err(Error::PoolTooSmall {
            pool: inst.pool.len(),
            nodes: inst.node_count(),
        });
    }
    Ok(())
}

/// Builds one solution meeting every requirement, or reports how close the
/// iterations came.
pub fn construct(inst: &Instance<'_>, config: &ConstructorConfig) -> Result<ConstructOutcome> {
    construct_counted(inst, config).map(|(outcome, _)| outcome)
}

/// [`construct`] plus the number of completed formations it scored.
pub fn construct_counted(inst: &Instance<'_>, config: &ConstructorConfig) -> Result<(ConstructOutcome, u64)> {
    config.check()?;
    ensure_pool(inst)?;
    let mut seed = config.rng_seed;
    let mut best_synergy_seen: Option<f64> = None;
    let mut evaluations = 0;
    for iteration in 1..=config.max_iterations {
        let mut rng = Rng::new(seed);
        seed = rng::next_seed(seed);
        let Some(items) = single_pass(inst, Pick::Guided, &mut rng).items else {
            continue;
        };
        let solution = inst.solution(items);
        evaluations += 1;
        if inst.meets_synergy(solution.synergy) {
            let outcome = ConstructOutcome::Solved {
                solution,
                iterations: iteration,
            };
            return Ok((outcome, evaluations));
        }
        best_synergy_seen = Some(best_synergy_seen.map_or(solution.synergy, |b| b.max(solution.synergy)));
    }
    let outcome = ConstructOutcome::Infeasible {
        attempts: config.max_iterations,
        best_synergy_seen,
    };
    Ok((outcome, evaluations))
}

/// Baseline without synergy guidance: picks uniformly among the filtered
/// candidates and returns the first formation that fills every node (linear
/// requirements hold, synergy is whatever it came out as). Paths are only
/// restarted when the pool runs dry.
pub fn construct_unguided(inst: &Instance<'_>, config: &ConstructorConfig) -> Result<Option<Solution>> {
    first_complete(inst, config, Pick::Uniform)
}

/// Guided counterpart of [`construct_unguided`]: the first completed
/// formation, synergy threshold ignored.
pub fn construct_guided_once(inst: &Instance<'_>, config: &ConstructorConfig) -> Result<Option<Solution>> {
    first_complete(inst, config, Pick::Guided)
}

fn first_complete(inst: &Instance<'_>, config: &ConstructorConfig, pick: Pick) -> Result<Option<Solution>> {
    config.check()?;
    ensure_pool(inst)?;
    let mut seed = config.rng_seed;
    for _ in 0..config.max_iterations {
        let mut rng = Rng::new(seed);
        seed = rng::next_seed(seed);
        if let Some(items) = single_pass(inst, pick, &mut rng).items {
            return Ok(Some(inst.solution(items)));
        }
    }
    Ok(None)
}
