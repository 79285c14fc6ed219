use crate::constraints::{LinearConstraint, PartialState};
use crate::domain::{validate_puzzle, Pool, Puzzle, Solution};
use crate::error::{Error, Result};
use crate::synergy::CompiledKernel;

/// A puzzle bound to a pool: requirements and kernel compiled against the
/// pool's value codes. Shared read-only by every search routine.
#[derive(Debug, Clone)]
pub struct Instance<'a> {
    pub pool: &'a Pool,
    pub puzzle: &'a Puzzle,
    kernel: CompiledKernel,
    linear: Vec<LinearConstraint>,
    threshold: Option<f64>,
}

impl<'a> Instance<'a> {
    pub fn new(pool: &'a Pool, puzzle: &'a Puzzle) -> Result<Self> {
        let errors: Vec<_> = validate_puzzle(puzzle).into_iter().filter(|v| v.is_error()).collect();
        if !errors.is_empty() {
            return Err(Error::InvalidPuzzle(errors));
        }
        if pool.schema() != &puzzle.schema {
            return Err(Error::SchemaMismatch("pool and puzzle use different schemas".into()));
        }
        Ok(Instance {
            pool,
            puzzle,
            kernel: CompiledKernel::new(&puzzle.kernel, pool),
            linear: LinearConstraint::compile(puzzle, pool)?,
            threshold: puzzle.synergy_threshold(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.puzzle.graph.node_count()
    }

    pub fn kernel(&self) -> &CompiledKernel {
        &self.kernel
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.linear
    }

    pub fn synergy_threshold(&self) -> Option<f64> {
        self.threshold
    }

    pub fn empty_state(&self) -> PartialState {
        PartialState::new(self.node_count(), &self.linear)
    }

    pub fn synergy(&self, items: &[usize]) -> f64 {
        self.kernel.synergy(self.pool, &self.puzzle.graph, items)
    }

    pub fn price(&self, items: &[usize]) -> f64 {
        crate::domain::selection_price(self.pool, items)
    }

    /// Wraps a complete assignment, caching synergy and price.
    pub fn solution(&self, items: Vec<usize>) -> Solution {
        let synergy = self.synergy(&items);
        let fitness = self.price(&items);
        Solution {
            items,
            synergy,
            fitness,
        }
    }

    pub fn meets_synergy(&self, synergy: f64) -> bool {
        self.threshold.map_or(true, |t| synergy >= t)
    }

    /// Whether the item multiset meets every linear requirement.
    pub fn linear_feasible(&self, items: &[usize]) -> bool {
        let slots: Vec<Option<usize>> = items.iter().map(|&i| Some(i)).collect();
        match PartialState::from_slots(&slots, &self.linear, self.pool) {
            Ok(state) => state.satisfies_all(&self.linear),
            Err(_) => false,
        }
    }

    pub fn is_feasible(&self, solution: &Solution) -> bool {
        solution.items.len() == self.node_count()
            && self.meets_synergy(solution.synergy)
            && self.linear_feasible(&solution.items)
    }
}
