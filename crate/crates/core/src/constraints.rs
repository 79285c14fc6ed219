//! Linear requirements over partial assignments and the look-ahead filter
//! that keeps a constructive search from painting itself into a corner.
//!
//! With `L` of `N` nodes visited, `K = N - L` slots remain. For a minimum
//! count that still needs `k` items, the pool is left alone while `K > k` and
//! restricted to items carrying the property once `K = k`; since every step
//! fills exactly one slot, `K` can never drop below `k`. The same forcing
//! idea is applied to caps (remove the property once the cap is reached,
//! and give up once the open slots no longer fit under it),
//! distinct-value minimums (restrict to unseen values once the remaining
//! slots are all needed), and sums (drop items that cannot reach the bound
//! even when topped up with the best remaining values).
//!
//! Every exclusion is permanent for the rest of a traversal, so callers may
//! feed the previous step's output back in as the next step's candidates.

use crate::domain::{Pool, Puzzle, Requirement, TraitKind};
use crate::error::{Error, Result};

/// A linear requirement bound to a pool's trait columns and value codes.
#[derive(Debug, Clone, PartialEq)]
pub enum LinearConstraint {
    MinSum { col: usize, bound: f64 },
    /// `code` is `None` when no pool item carries the value.
    MinCount { col: usize, code: Option<u32>, bound: u32 },
    MaxCount { col: usize, code: Option<u32>, bound: u32 },
    MinDistinct { col: usize, bound: u32 },
    MaxPerValue { col: usize, cap: u32 },
}

impl LinearConstraint {
    pub fn compile(puzzle: &Puzzle, pool: &Pool) -> Result<Vec<LinearConstraint>> {
        let schema = pool.schema();
        let mut out = Vec::new();
        for req in puzzle.linear_requirements() {
            let name = req.trait_name().unwrap_or_default();
            let col = schema
                .position(name)
                .ok_or_else(|| Error::SchemaMismatch(format!("unknown trait `{name}`")))?;
            let c = match req {
                Requirement::MinSum { bound, .. } => {
                    if schema.traits[col].kind != TraitKind::Numeric {
                        return Err(Error::SchemaMismatch(format!("min_sum over categorical trait `{name}`")));
                    }
                    LinearConstraint::MinSum { col, bound: *bound }
                }
                Requirement::MinCount { value, bound, .. } => LinearConstraint::MinCount {
                    col,
                    code: pool.value_code(col, value),
                    bound: *bound,
                },
                Requirement::MaxCount { value, bound, .. } => LinearConstraint::MaxCount {
                    col,
                    code: pool.value_code(col, value),
                    bound: *bound,
                },
                Requirement::MinDistinct { bound, .. } => LinearConstraint::MinDistinct { col, bound: *bound },
                Requirement::MaxPerValue { cap, .. } => LinearConstraint::MaxPerValue { col, cap: *cap },
                Requirement::SynergyAtLeast { .. } => unreachable!("filtered to linear requirements"),
            };
            out.push(c);
        }
        Ok(out)
    }

    fn col(&self) -> usize {
        match self {
            LinearConstraint::MinSum { col, .. }
            | LinearConstraint::MinCount { col, .. }
            | LinearConstraint::MaxCount { col, .. }
            | LinearConstraint::MinDistinct { col, .. }
            | LinearConstraint::MaxPerValue { col, .. } => *col,
        }
    }

    fn satisfied_by(&self, tally: &Tally) -> bool {
        match (self, tally) {
            (LinearConstraint::MinSum { bound, .. }, Tally::Sum(s)) => s >= bound,
            (LinearConstraint::MinCount { bound, .. }, Tally::Count(c)) => c >= bound,
            (LinearConstraint::MaxCount { bound, .. }, Tally::Count(c)) => c <= bound,
            (LinearConstraint::MinDistinct { bound, .. }, Tally::Values(v)) => v.len() >= *bound as usize,
            (LinearConstraint::MaxPerValue { cap, .. }, Tally::Values(v)) => v.iter().all(|&(_, n)| n <= *cap),
            _ => false,
        }
    }
}

/// Running value of one constraint over the visited nodes.
#[derive(Debug, Clone, PartialEq)]
pub enum Tally {
    Sum(f64),
    Count(u32),
    /// `(value code, multiplicity)` sorted by code.
    Values(Vec<(u32, u32)>),
}

impl Tally {
    fn empty(c: &LinearConstraint) -> Self {
        match c {
            LinearConstraint::MinSum { .. } => Tally::Sum(0.0),
            LinearConstraint::MinCount { .. } | LinearConstraint::MaxCount { .. } => Tally::Count(0),
            LinearConstraint::MinDistinct { .. } | LinearConstraint::MaxPerValue { .. } => Tally::Values(Vec::new()),
        }
    }

    fn add(&mut self, c: &LinearConstraint, value: u32) {
        match (self, c) {
            (Tally::Sum(s), _) => *s += value as f64,
            (Tally::Count(n), LinearConstraint::MinCount { code, .. } | LinearConstraint::MaxCount { code, .. }) => {
                if *code == Some(value) {
                    *n += 1;
                }
            }
            (Tally::Values(vals), _) => match vals.binary_search_by_key(&value, |&(v, _)| v) {
                Ok(pos) => vals[pos].1 += 1,
                Err(pos) => vals.insert(pos, (value, 1)),
            },
            _ => {}
        }
    }

    fn multiplicity(&self, value: u32) -> u32 {
        match self {
            Tally::Values(vals) => vals
                .binary_search_by_key(&value, |&(v, _)| v)
                .map_or(0, |pos| vals[pos].1),
            _ => 0,
        }
    }
}

/// Nodes visited so far, the items on them, and one tally per constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialState {
    slots: Vec<Option<usize>>,
    visited: usize,
    tallies: Vec<Tally>,
}

impl PartialState {
    pub fn new(node_count: usize, constraints: &[LinearConstraint]) -> Self {
        PartialState {
            slots: vec![None; node_count],
            visited: 0,
            tallies: constraints.iter().map(Tally::empty).collect(),
        }
    }

    /// State with the given occupied slots.
    pub fn from_slots(slots: &[Option<usize>], constraints: &[LinearConstraint], pool: &Pool) -> Result<Self> {
        let mut state = PartialState::new(slots.len(), constraints);
        for (node, slot) in slots.iter().enumerate() {
            if let Some(item) = slot {
                state.assign(node, *item, constraints, pool)?;
            }
        }
        Ok(state)
    }

    /// Places `item` on `node` and updates every tally incrementally.
    pub fn assign(&mut self, node: usize, item: usize, constraints: &[LinearConstraint], pool: &Pool) -> Result<()> {
        if self.slots[node].is_some() {
            return Err(Error::NodeAlreadyVisited(node));
        }
        if self.contains_item(item) {
            return Err(Error::DuplicateItem(item));
        }
        self.slots[node] = Some(item);
        self.visited += 1;
        for (tally, c) in self.tallies.iter_mut().zip(constraints) {
            tally.add(c, pool.code(item, c.col()));
        }
        Ok(())
    }

    /// Value-returning form of [`assign`](Self::assign).
    pub fn update(&self, node: usize, item: usize, constraints: &[LinearConstraint], pool: &Pool) -> Result<Self> {
        let mut next = self.clone();
        next.assign(node, item, constraints, pool)?;
        Ok(next)
    }

    pub fn item_at(&self, node: usize) -> Option<usize> {
        self.slots[node]
    }

    pub fn slots(&self) -> &[Option<usize>] {
        &self.slots
    }

    pub fn visited_count(&self) -> usize {
        self.visited
    }

    pub fn remaining(&self) -> usize {
        self.slots.len() - self.visited
    }

    pub fn is_complete(&self) -> bool {
        self.visited == self.slots.len()
    }

    pub fn contains_item(&self, item: usize) -> bool {
        self.slots.iter().any(|s| *s == Some(item))
    }

    pub fn tallies(&self) -> &[Tally] {
        &self.tallies
    }

    /// Whether every linear constraint holds on the visited nodes.
    pub fn satisfies_all(&self, constraints: &[LinearConstraint]) -> bool {
        constraints.iter().zip(&self.tallies).all(|(c, t)| c.satisfied_by(t))
    }

    /// Tallies recomputed from the occupied slots alone.
    pub fn recomputed_tallies(&self, constraints: &[LinearConstraint], pool: &Pool) -> Vec<Tally> {
        constraints
            .iter()
            .map(|c| {
                let mut t = Tally::empty(c);
                for item in self.slots.iter().flatten() {
                    t.add(c, pool.code(*item, c.col()));
                }
                t
            })
            .collect()
    }
}

/// Per-constraint decision derived from the state alone.
enum Gate {
    Open,
    Require(usize, u32),
    Exclude(usize, u32),
    /// Exclude every value of the column whose multiplicity hit the cap.
    ExcludeCapped(usize, usize, u32),
    /// Restrict to values not yet seen in the column.
    RequireUnseen(usize, usize),
}

/// Counts item-constraint checks so the per-iteration cost can be asserted.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct WorkCounter {
    pub checks: u64,
}

/// Candidates from `candidates` that keep every linear constraint
/// satisfiable. An empty result means the traversal must start over.
///
/// Filtering iterates to a fixpoint, so the result does not depend on
/// requirement order and re-filtering it under the same state is a no-op.
pub fn filter_pool(
    candidates: &[usize],
    state: &PartialState,
    constraints: &[LinearConstraint],
    pool: &Pool,
    counter: &mut WorkCounter,
) -> Vec<usize> {
    let slots_left = state.remaining();
    if slots_left == 0 || candidates.len() < slots_left {
        return Vec::new();
    }

    let mut gates = Vec::with_capacity(constraints.len());
    for (i, (c, tally)) in constraints.iter().zip(state.tallies()).enumerate() {
        let gate = match (c, tally) {
            (LinearConstraint::MinSum { .. }, _) => Gate::Open,
            (LinearConstraint::MinCount { col, code, bound }, Tally::Count(n)) => {
                let need = bound.saturating_sub(*n) as usize;
                if need > slots_left {
                    return Vec::new();
                }
                match code {
                    _ if need == 0 => Gate::Open,
                    None => return Vec::new(),
                    Some(code) if need == slots_left => Gate::Require(*col, *code),
                    Some(_) => Gate::Open,
                }
            }
            (LinearConstraint::MaxCount { col, code, bound }, Tally::Count(n)) => {
                if n > bound {
                    return Vec::new();
                }
                match code {
                    Some(code) if n == bound => Gate::Exclude(*col, *code),
                    _ => Gate::Open,
                }
            }
            (LinearConstraint::MinDistinct { col, bound }, Tally::Values(vals)) => {
                let need = (*bound as usize).saturating_sub(vals.len());
                if need > slots_left {
                    return Vec::new();
                }
                if need > 0 && need == slots_left {
                    Gate::RequireUnseen(*col, i)
                } else {
                    Gate::Open
                }
            }
            (LinearConstraint::MaxPerValue { col, cap }, Tally::Values(vals)) => {
                if vals.iter().any(|&(_, n)| n > *cap) {
                    return Vec::new();
                }
                if vals.iter().any(|&(_, n)| n == *cap) || *cap == 0 {
                    Gate::ExcludeCapped(*col, i, *cap)
                } else {
                    Gate::Open
                }
            }
            _ => unreachable!("tally kind follows constraint kind"),
        };
        gates.push(gate);
    }

    let tallies = state.tallies();
    let mut kept: Vec<usize> = Vec::with_capacity(candidates.len());
    'items: for &item in candidates {
        counter.checks += gates.len() as u64;
        for gate in &gates {
            let ok = match *gate {
                Gate::Open => true,
                Gate::Require(col, code) => pool.code(item, col) == code,
                Gate::Exclude(col, code) => pool.code(item, col) != code,
                Gate::ExcludeCapped(col, t, cap) => tallies[t].multiplicity(pool.code(item, col)) < cap,
                Gate::RequireUnseen(col, t) => tallies[t].multiplicity(pool.code(item, col)) == 0,
            };
            if !ok {
                continue 'items;
            }
        }
        kept.push(item);
    }

    // Pool-dependent checks: availability of counted properties and
    // distinct values, room under caps, and reachability of sums. Removing
    // items can only tighten these, so iterate until nothing changes.
    let mut top = Vec::with_capacity(slots_left);
    let mut counts = ValueCounts::default();
    loop {
        if kept.len() < slots_left {
            return Vec::new();
        }
        let mut removed = false;
        for (c, tally) in constraints.iter().zip(tallies) {
            match (c, tally) {
                (LinearConstraint::MinCount { col, code: Some(code), bound }, Tally::Count(n)) if n < bound => {
                    counter.checks += kept.len() as u64;
                    let have = kept.iter().filter(|&&i| pool.code(i, *col) == *code).count();
                    if have < (bound - n) as usize {
                        return Vec::new();
                    }
                }
                (LinearConstraint::MinDistinct { col, bound }, Tally::Values(vals)) if vals.len() < *bound as usize => {
                    counter.checks += kept.len() as u64;
                    let need = *bound as usize - vals.len();
                    let mut unseen = 0;
                    counts.each(&kept, *col, pool, |v, _| unseen += (tally.multiplicity(v) == 0) as usize);
                    if unseen < need {
                        return Vec::new();
                    }
                }
                // Upper bounds: the open slots must fit under the caps. Any
                // pick lowers this capacity by exactly one, so passing it
                // here keeps every survivor completable for this bound.
                (LinearConstraint::MaxCount { col, code: Some(code), bound }, Tally::Count(n)) => {
                    counter.checks += kept.len() as u64;
                    let matching = kept.iter().filter(|&&i| pool.code(i, *col) == *code).count();
                    let room = bound.saturating_sub(*n) as usize;
                    if kept.len() - matching + matching.min(room) < slots_left {
                        return Vec::new();
                    }
                }
                (LinearConstraint::MaxPerValue { col, cap }, Tally::Values(_)) => {
                    counter.checks += kept.len() as u64;
                    let mut capacity = 0usize;
                    counts.each(&kept, *col, pool, |v, avail| {
                        capacity += cap.saturating_sub(tally.multiplicity(v)).min(avail) as usize
                    });
                    if capacity < slots_left {
                        return Vec::new();
                    }
                }
                (LinearConstraint::MinSum { col, bound }, Tally::Sum(sum)) if sum < bound => {
                    counter.checks += 2 * kept.len() as u64;
                    top.clear();
                    top.extend(kept.iter().map(|&i| pool.code(i, *col)));
                    let k = slots_left;
                    if top.len() > k {
                        top.select_nth_unstable_by(k - 1, |a, b| b.cmp(a));
                        top.truncate(k);
                    }
                    top.sort_unstable_by(|a, b| b.cmp(a));
                    let best_k: f64 = top.iter().map(|&v| v as f64).sum();
                    if sum + best_k < *bound {
                        return Vec::new();
                    }
                    let kth = top[k - 1];
                    let best_rest = best_k - kth as f64;
                    let before = kept.len();
                    // Items at least as large as the k-th best ride on the
                    // full top-k sum, which already reaches the bound.
                    kept.retain(|&i| {
                        let v = pool.code(i, *col);
                        v >= kth || sum + v as f64 + best_rest >= *bound
                    });
                    removed |= kept.len() != before;
                }
                _ => {}
            }
        }
        if !removed {
            return kept;
        }
    }
}

/// Largest code range counted with a direct table instead of sorting.
const DENSE_CODES: u32 = 1024;

/// Reusable buffers for per-value multiplicities of a column.
#[derive(Default)]
struct ValueCounts {
    table: Vec<u32>,
    sorted: Vec<u32>,
}

impl ValueCounts {
    /// Calls `f(value, multiplicity)` once per value present among `items`.
    fn each(&mut self, items: &[usize], col: usize, pool: &Pool, mut f: impl FnMut(u32, u32)) {
        let bound = pool.code_bound(col);
        if bound <= DENSE_CODES {
            self.table.clear();
            self.table.resize(bound as usize, 0);
            for &i in items {
                self.table[pool.code(i, col) as usize] += 1;
            }
            for (v, &n) in self.table.iter().enumerate() {
                if n > 0 {
                    f(v as u32, n);
                }
            }
        } else {
            self.sorted.clear();
            self.sorted.extend(items.iter().map(|&i| pool.code(i, col)));
            self.sorted.sort_unstable();
            for run in self.sorted.chunk_by(|a, b| a == b) {
                f(run[0], run.len() as u32);
            }
        }
    }
}
