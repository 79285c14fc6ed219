//! Exhaustive ground truth for tiny instances.
//!
//! Every injective assignment of pool items to graph nodes is scored with
//! the reference [`evaluate_assignment`] route. Nothing is pruned, so the
//! cost is `M!/(M-N)!` evaluations; a size guard refuses anything larger
//! than the configured cap.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{evaluate_assignment, Pool, Puzzle, Solution};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_ENUMERATION: u128 = 100_000_000;
pub const DEFAULT_MAX_OPTIMAL_KEPT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleCaps {
    pub max_enumeration: u128,
    pub max_optimal_kept: usize,
}

impl Default for OracleCaps {
    fn default() -> Self {
        OracleCaps {
            max_enumeration: DEFAULT_MAX_ENUMERATION,
            max_optimal_kept: DEFAULT_MAX_OPTIMAL_KEPT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub feasible_count: u64,
    pub optimal_fitness: Option<f64>,
    /// Cheapest feasible assignments in canonical order, truncated to the cap.
    pub optimal_solutions: Vec<Solution>,
    /// How many cheapest assignments exist in total.
    pub optimal_count: u64,
    pub enumerated: u64,
}

/// Number of ordered selections of `n` out of `m`, or `None` on overflow.
pub fn assignment_count(m: usize, n: usize) -> Option<u128> {
    if n > m {
        return Some(0);
    }
    (0..n).try_fold(1u128, |acc, k| acc.checked_mul((m - k) as u128))
}

fn guard(pool: &Pool, puzzle: &Puzzle, cap: u128) -> Result<()> {
    let total = assignment_count(pool.len(), puzzle.node_count()).unwrap_or(u128::MAX);
    if total > cap {
        return Err(Error::InstanceTooLarge { assignments: total, cap });
    }
    Ok(())
}

/// Calls `visit` on every injective assignment whose first node holds `first`.
fn for_each_with_first(m: usize, n: usize, first: usize, visit: &mut impl FnMut(&[usize])) {
    fn rec(m: usize, n: usize, used: &mut [bool], current: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
        if current.len() == n {
            visit(current);
            return;
        }
        for i in 0..m {
            if !used[i] {
                used[i] = true;
                current.push(i);
                rec(m, n, used, current, visit);
                current.pop();
                used[i] = false;
            }
        }
    }
    let mut used = vec![false; m];
    used[first] = true;
    let mut current = vec![first];
    rec(m, n, &mut used, &mut current, visit);
}

#[derive(Default)]
struct Partial {
    feasible: u64,
    best: Option<f64>,
    best_count: u64,
    kept: Vec<Solution>,
    enumerated: u64,
}

impl Partial {
    fn offer(&mut self, solution: Solution, keep: usize) {
        match self.best {
            Some(b) if solution.fitness > b => return,
            Some(b) if solution.fitness == b => self.best_count += 1,
            _ => {
                self.best = Some(solution.fitness);
                self.best_count = 1;
                self.kept.clear();
            }
        }
        if self.kept.len() < keep {
            self.kept.push(solution);
        }
    }

    fn merge(mut self, other: Partial, keep: usize) -> Partial {
        self.feasible += other.feasible;
        self.enumerated += other.enumerated;
        match (self.best, other.best) {
            (_, None) => {}
            (None, Some(_)) => {
                self.best = other.best;
                self.best_count = other.best_count;
                self.kept = other.kept;
            }
            (Some(a), Some(b)) if b < a => {
                self.best = other.best;
                self.best_count = other.best_count;
                self.kept = other.kept;
            }
            (Some(a), Some(b)) if a == b => {
                self.best_count += other.best_count;
                self.kept.extend(other.kept);
            }
            _ => {}
        }
        self.kept.sort_by(|a, b| a.canonical_cmp(b));
        self.kept.truncate(keep);
        self
    }
}

/// Scores every injective assignment and reports the feasible count and the
/// cheapest feasible assignments.
pub fn enumerate_all(pool: &Pool, puzzle: &Puzzle, caps: &OracleCaps) -> Result<OracleResult> {
    guard(pool, puzzle, caps.max_enumeration)?;
    let m = pool.len();
    let n = puzzle.node_count();
    let keep = caps.max_optimal_kept;
    let merged = if n == 0 {
        let report = evaluate_assignment(&[], puzzle, pool)?;
        let mut p = Partial {
            enumerated: 1,
            ..Partial::default()
        };
        if report.feasible() {
            p.feasible = 1;
            p.offer(
                Solution {
                    items: Vec::new(),
                    synergy: report.synergy,
                    fitness: report.fitness,
                },
                keep,
            );
        }
        p
    } else if n > m {
        Partial::default()
    } else {
        let parts: Vec<Partial> = (0..m)
            .into_par_iter()
            .map(|first| {
                let mut part = Partial::default();
                let mut failure = None;
                for_each_with_first(m, n, first, &mut |items| {
                    part.enumerated += 1;
                    match evaluate_assignment(items, puzzle, pool) {
                        Ok(report) if report.feasible() => {
                            part.feasible += 1;
                            let solution = Solution {
                                items: items.to_vec(),
                                synergy: report.synergy,
                                fitness: report.fitness,
                            };
                            part.offer(solution, keep);
                        }
                        Ok(_) => {}
                        Err(e) => {
                            failure.get_or_insert(e);
                        }
                    }
                });
                failure.map_or(Ok(part), Err)
            })
            .collect::<Result<_>>()?;
        parts.into_iter().fold(Partial::default(), |acc, p| acc.merge(p, keep))
    };
    let mut kept = merged.kept;
    kept.sort_by(|a, b| a.canonical_cmp(b));
    kept.truncate(keep);
    Ok(OracleResult {
        feasible_count: merged.feasible,
        optimal_fitness: merged.best,
        optimal_solutions: kept,
        optimal_count: merged.best_count,
        enumerated: merged.enumerated,
    })
}

/// Every `n`-subset of the pool (as sorted positions) meeting all linear
/// requirements. Arrangement does not matter for these, so subsets suffice.
pub fn feasible_selections(pool: &Pool, puzzle: &Puzzle, cap: u128) -> Result<Vec<Vec<usize>>> {
    let m = pool.len();
    let n = puzzle.node_count();
    let subsets = binomial(m, n).unwrap_or(u128::MAX);
    if subsets > cap {
        return Err(Error::InstanceTooLarge { assignments: subsets, cap });
    }
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(n);
    let mut failure = None;
    subsets_rec(m, n, 0, &mut current, &mut |items| match evaluate_assignment(items, puzzle, pool) {
        Ok(report) if report.linear_feasible() => out.push(items.to_vec()),
        Ok(_) => {}
        Err(e) => {
            failure.get_or_insert(e);
        }
    });
    failure.map_or(Ok(out), Err)
}

fn subsets_rec(m: usize, n: usize, start: usize, current: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    if current.len() == n {
        visit(current);
        return;
    }
    for i in start..m {
        if m - i < n - current.len() {
            break;
        }
        current.push(i);
        subsets_rec(m, n, i + 1, current, visit);
        current.pop();
    }
}

pub fn binomial(m: usize, n: usize) -> Option<u128> {
    if n > m {
        return Some(0);
    }
    let n = n.min(m - n);
    let mut acc = 1u128;
    for k in 0..n {
        acc = acc.checked_mul((m - k) as u128)? / (k as u128 + 1);
    }
    Some(acc)
}
