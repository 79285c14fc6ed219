//! Hybrid graph-based genetic algorithm.
//!
//! Chromosomes are complete feasible formations; genes keep their node
//! positions. Each generation breeds offspring by linear-rank selection,
//! per-node uniform crossover and random removal, then heals the gaps with
//! the guided constructor (a child that cannot be healed is swapped for a
//! freshly constructed formation). Parents and offspring are merged and the
//! cheapest formations survive. When the survivors' coefficient of variation
//! of price drops below the threshold, a fixed share of non-elite members is
//! replaced by fresh constructions. The reported diversity is that of the
//! survivors, before any refresh.
//!
//! All randomness is drawn from per-offspring streams derived from the
//! population stream and generation number, so results do not depend on how
//! many worker threads breed in parallel.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constraints::PartialState;
use crate::constructor::{construct_counted, fill, ConstructOutcome, ConstructorConfig, Pick, DEFAULT_MAX_ITERATIONS};
use crate::domain::Solution;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::rng::{derive, Rng};

const INIT_STREAM: u64 = 0x494E_4954;
const POPULATION_STREAM: u64 = 0x504F_5055;
/// Constructions allowed per requested member during initialization.
pub const INIT_ATTEMPTS_PER_MEMBER: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population_size: usize,
    pub offspring_size: usize,
    /// Probability that a node inherits from the first parent.
    pub crossover_rate: f64,
    /// Per-node removal probability during mutation.
    pub mutation_rate: f64,
    pub generations: usize,
    /// Coefficient-of-variation floor that triggers a refresh.
    pub diversity_threshold: f64,
    pub refresh_fraction: f64,
    pub elitism: bool,
    /// Constructor iterations used for initialization, healing and refresh.
    pub max_iterations: usize,
    pub rng_seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 50,
            offspring_size: 100,
            crossover_rate: 0.5,
            mutation_rate: 0.2,
            generations: 100,
            diversity_threshold: 0.05,
            refresh_fraction: 1.0 / 3.0,
            elitism: true,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            rng_seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.population_size < 2 || self.offspring_size < 2 {
            return bad("population and offspring sizes must be at least 2");
        }
        for (name, rate) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
            ("refresh_fraction", self.refresh_fraction),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::InvalidConfig(format!("{name} must lie in [0, 1]")));
            }
        }
        if !(self.diversity_threshold >= 0.0) {
            return bad("diversity_threshold must be non-negative");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1");
        }
        Ok(())
    }

    pub fn refresh_count(&self) -> usize {
        (self.population_size as f64 * self.refresh_fraction + 1e-9).floor() as usize
    }
}

/// A generation of feasible chromosomes, kept sorted cheapest first.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub members: Vec<Solution>,
    pub generation: usize,
    /// Prices of the members chosen by selection, before any refresh.
    pub selected: Vec<f64>,
    /// Coefficient of variation of `selected`; drives the refresh.
    pub diversity: f64,
    /// Members replaced by fresh constructions in this generation.
    pub refreshed: usize,
    /// Seed of this population's random stream.
    pub stream: u64,
    /// Formations scored so far on behalf of this population.
    pub evaluations: u64,
}

impl Population {
    pub fn new(mut members: Vec<Solution>, stream: u64) -> Self {
        members.sort_by(|a, b| a.canonical_cmp(b));
        let selected: Vec<f64> = members.iter().map(|m| m.fitness).collect();
        Population {
            diversity: price_cv(&selected),
            members,
            generation: 0,
            selected,
            refreshed: 0,
            stream,
            evaluations: 0,
        }
    }

    pub fn best(&self) -> &Solution {
        &self.members[0]
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Slots with optional items plus items barred from refilling them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialSolution {
    pub slots: Vec<Option<usize>>,
    pub banned: Vec<usize>,
}

impl PartialSolution {
    pub fn empty_nodes(&self) -> Vec<usize> {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(n, s)| s.is_none().then_some(n))
            .collect()
    }
}

impl From<&Solution> for PartialSolution {
    fn from(s: &Solution) -> Self {
        PartialSolution {
            slots: s.items.iter().map(|&i| Some(i)).collect(),
            banned: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HealOutcome {
    Healed(Solution),
    Rejected,
}

/// Population seed stream shared by vanilla runs and island 0.
pub fn population_stream(seed: u64, island: usize) -> u64 {
    derive(seed, POPULATION_STREAM + island as u64)
}

/// `population_size` independently seeded feasible solutions.
///
/// Construction `i` uses a seed derived from `seed` and `i`; successes are
/// kept in attempt order. Duplicates are allowed. Gives up after
/// [`INIT_ATTEMPTS_PER_MEMBER`] constructions per requested member.
pub fn init_population(inst: &Instance<'_>, config: &GaConfig) -> Result<Population> {
    config.validate()?;
    let (members, evaluations) = initial_members(inst, config.population_size, config)?;
    let mut pop = Population::new(members, population_stream(config.rng_seed, 0));
    pop.evaluations = evaluations;
    Ok(pop)
}

pub(crate) fn initial_members(inst: &Instance<'_>, wanted: usize, config: &GaConfig) -> Result<(Vec<Solution>, u64)> {
    let init_seed = derive(config.rng_seed, INIT_STREAM);
    let budget = wanted * INIT_ATTEMPTS_PER_MEMBER;
    let mut members = Vec::with_capacity(wanted);
    let mut evaluations = 0;
    let mut best_synergy = f64::NEG_INFINITY;
    let mut next = 0;
    while members.len() < wanted && next < budget {
        let batch = (wanted - members.len()).max(4).min(budget - next);
        let results: Vec<(ConstructOutcome, u64)> = (next..next + batch)
            .into_par_iter()
            .map(|i| {
                let cfg = ConstructorConfig::new(derive(init_seed, i as u64)).with_max_iterations(config.max_iterations);
                construct_counted(inst, &cfg)
            })
            .collect::<Result<_>>()?;
        next += batch;
        for (outcome, evals) in results {
            evaluations += evals;
            match outcome {
                ConstructOutcome::Solved { solution, .. } => {
                    if members.len() < wanted {
                        members.push(solution);
                    }
                }
                ConstructOutcome::Infeasible { best_synergy_seen, .. } => {
                    if let Some(s) = best_synergy_seen {
                        best_synergy = best_synergy.max(s);
                    }
                }
            }
        }
    }
    if members.len() < wanted {
        return Err(Error::InitializationBudgetExceeded {
            wanted,
            found: members.len(),
            attempts: next,
            best_synergy,
        });
    }
    Ok((members, evaluations))
}

/// Linear-rank weights for members sorted best first; tied fitness values
/// share the average of their ranks.
pub fn rank_weights(members: &[Solution]) -> Vec<f64> {
    let n = members.len();
    let mut weights = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && members[end].fitness == members[start].fitness {
            end += 1;
        }
        // Positions start..end carry raw weights n-start down to n-end+1.
        let avg = ((n - start) + (n - end + 1)) as f64 / 2.0;
        weights[start..end].fill(avg);
        start = end;
    }
    weights
}

fn draw_weighted(weights: &[f64], skip: Option<usize>, rng: &mut Rng) -> usize {
    let total: f64 = weights
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .map(|(_, w)| w)
        .sum();
    let mut target = rng.unit() * total;
    let mut last = 0;
    for (i, w) in weights.iter().enumerate() {
        if Some(i) == skip {
            continue;
        }
        last = i;
        if target < *w {
            return i;
        }
        target -= w;
    }
    last
}

/// Two distinct parent positions drawn by linear rank (best = highest weight).
pub fn rank_select(population: &Population, rng: &mut Rng) -> (usize, usize) {
    let weights = rank_weights(&population.members);
    let a = draw_weighted(&weights, None, rng);
    let b = draw_weighted(&weights, Some(a), rng);
    (a, b)
}

/// Per node, the gene comes from `a` with probability `p_first` and from
/// `b` otherwise; if that item is already placed the other parent's gene is
/// tried, and the node stays empty when both are taken.
pub fn uniform_crossover(a: &Solution, b: &Solution, p_first: f64, rng: &mut Rng) -> PartialSolution {
    let n = a.items.len();
    let mut slots = vec![None; n];
    let mut placed: Vec<usize> = Vec::with_capacity(n);
    for node in 0..n {
        let (first, second) = if rng.chance(p_first) {
            (a.items[node], b.items[node])
        } else {
            (b.items[node], a.items[node])
        };
        let gene = if !placed.contains(&first) {
            Some(first)
        } else if !placed.contains(&second) {
            Some(second)
        } else {
            None
        };
        if let Some(g) = gene {
            placed.push(g);
        }
        slots[node] = gene;
    }
    PartialSolution {
        slots,
        banned: Vec::new(),
    }
}

/// Visits occupied nodes in random order and removes each item with
/// probability `rate`; removed items are barred from the following heal.
pub fn mutate(partial: &PartialSolution, rate: f64, rng: &mut Rng) -> PartialSolution {
    let mut out = partial.clone();
    let mut order: Vec<usize> = (0..out.slots.len()).collect();
    rng.shuffle(&mut order);
    for node in order {
        if let Some(item) = out.slots[node] {
            if rng.chance(rate) {
                out.slots[node] = None;
                out.banned.push(item);
            }
        }
    }
    out
}

/// Completes the empty nodes with the guided constructor, visiting them in
/// a fresh random order per attempt. Returns the outcome and the number of
/// formations scored.
pub fn heal(inst: &Instance<'_>, partial: &PartialSolution, max_iterations: usize, rng: &mut Rng) -> (HealOutcome, u64) {
    let Ok(state) = PartialState::from_slots(&partial.slots, inst.constraints(), inst.pool) else {
        return (HealOutcome::Rejected, 0);
    };
    let mut empty = partial.empty_nodes();
    if empty.is_empty() {
        let solution = inst.solution(partial.slots.iter().map(|s| s.unwrap()).collect());
        return if inst.is_feasible(&solution) {
            (HealOutcome::Healed(solution), 1)
        } else {
            (HealOutcome::Rejected, 1)
        };
    }
    let mut excluded = vec![false; inst.pool.len()];
    for &i in partial.slots.iter().flatten().chain(&partial.banned) {
        excluded[i] = true;
    }
    let candidates: Vec<usize> = (0..inst.pool.len()).filter(|&i| !excluded[i]).collect();
    let mut evaluations = 0;
    for _ in 0..max_iterations {
        rng.shuffle(&mut empty);
        let pass = fill(inst, state.clone(), candidates.clone(), &empty, Pick::Guided, rng);
        if let Some(items) = pass.items {
            evaluations += 1;
            let solution = inst.solution(items);
            if inst.is_feasible(&solution) {
                return (HealOutcome::Healed(solution), evaluations);
            }
        }
    }
    (HealOutcome::Rejected, evaluations)
}

/// Population standard deviation of price over mean price; 0 for a zero mean.
pub fn diversity_cv(members: &[Solution]) -> f64 {
    price_cv(&members.iter().map(|m| m.fitness).collect::<Vec<_>>())
}

pub fn price_cv(prices: &[f64]) -> f64 {
    if prices.is_empty() {
        return 0.0;
    }
    let n = prices.len() as f64;
    let mean = prices.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return 0.0;
    }
    let var = prices.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean
}

pub fn median_fitness(members: &[Solution]) -> f64 {
    let mut f: Vec<f64> = members.iter().map(|m| m.fitness).collect();
    f.sort_by(f64::total_cmp);
    let n = f.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        f[n / 2]
    } else {
        (f[n / 2 - 1] + f[n / 2]) / 2.0
    }
}

fn fresh(inst: &Instance<'_>, seed: u64, max_iterations: usize) -> Result<(Option<Solution>, u64)> {
    let cfg = ConstructorConfig::new(seed).with_max_iterations(max_iterations);
    let (outcome, evals) = construct_counted(inst, &cfg)?;
    Ok((outcome.into_solution(), evals))
}

/// Up to [`INIT_ATTEMPTS_PER_MEMBER`] fresh constructions, stopping at the first success.
fn refill(inst: &Instance<'_>, seed: u64, max_iterations: usize) -> Result<(Option<Solution>, u64)> {
    let mut evaluations = 0;
    for attempt in 0..INIT_ATTEMPTS_PER_MEMBER {
        let (s, evals) = fresh(inst, derive(seed, attempt as u64), max_iterations)?;
        evaluations += evals;
        if s.is_some() {
            return Ok((s, evaluations));
        }
    }
    Ok((None, evaluations))
}

fn breed(inst: &Instance<'_>, pop: &Population, config: &GaConfig, seed: u64) -> Result<(Option<Solution>, u64)> {
    let mut rng = Rng::new(seed);
    let (ia, ib) = rank_select(pop, &mut rng);
    let child = uniform_crossover(&pop.members[ia], &pop.members[ib], config.crossover_rate, &mut rng);
    let child = mutate(&child, config.mutation_rate, &mut rng);
    let (outcome, evals) = heal(inst, &child, config.max_iterations, &mut rng);
    match outcome {
        HealOutcome::Healed(s) => Ok((Some(s), evals)),
        HealOutcome::Rejected => {
            let (s, more) = fresh(inst, rng.fork(), config.max_iterations)?;
            Ok((s, evals + more))
        }
    }
}

/// Breeds, merges, selects and, when diversity is low, refreshes.
pub fn next_generation(pop: &Population, inst: &Instance<'_>, config: &GaConfig) -> Result<Population> {
    config.validate()?;
    if pop.members.len() < 2 {
        return Err(Error::InvalidConfig("population needs at least two members".into()));
    }
    let generation = pop.generation + 1;
    let gen_seed = derive(pop.stream, generation as u64);
    let bred: Vec<(Option<Solution>, u64)> = (0..config.offspring_size)
        .into_par_iter()
        .map(|k| breed(inst, pop, config, derive(gen_seed, k as u64)))
        .collect::<Result<_>>()?;
    let mut evaluations = pop.evaluations;
    let mut merged = pop.members.clone();
    for (child, evals) in bred {
        evaluations += evals;
        merged.extend(child);
    }
    merged.sort_by(|a, b| a.canonical_cmp(b));
    merged.truncate(config.population_size);
    let mut members = merged;
    let selected: Vec<f64> = members.iter().map(|m| m.fitness).collect();
    let diversity = price_cv(&selected);

    let mut rng = Rng::new(derive(gen_seed, u64::MAX));
    let mut refreshed = 0;
    if diversity < config.diversity_threshold {
        let protected = usize::from(config.elitism);
        let mut slots: Vec<usize> = (protected..members.len()).collect();
        rng.shuffle(&mut slots);
        slots.truncate(config.refresh_count());
        let base = config.offspring_size as u64;
        let refills: Vec<(Option<Solution>, u64)> = slots
            .par_iter()
            .enumerate()
            .map(|(j, _)| refill(inst, derive(gen_seed, base + j as u64), config.max_iterations))
            .collect::<Result<_>>()?;
        for (&slot, (sol, evals)) in slots.iter().zip(refills) {
            evaluations += evals;
            if let Some(s) = sol {
                members[slot] = s;
                refreshed += 1;
            }
        }
        if refreshed == 0 && !slots.is_empty() {
            return Err(Error::InitializationBudgetExceeded {
                wanted: slots.len(),
                found: 0,
                attempts: slots.len() * INIT_ATTEMPTS_PER_MEMBER,
                best_synergy: f64::NAN,
            });
        }
        members.sort_by(|a, b| a.canonical_cmp(b));
    }
    Ok(Population {
        members,
        generation,
        selected,
        diversity,
        refreshed,
        stream: pop.stream,
        evaluations,
    })
}

/// One row of a convergence log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub generation: usize,
    pub best_fitness: f64,
    pub median_fitness: f64,
    pub diversity_cv: f64,
    pub evaluations: u64,
    /// Islands were regrouped right after this generation.
    pub migration: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceLog {
    pub records: Vec<LogRecord>,
}

impl ConvergenceLog {
    /// Best and median over `members`; diversity over the selected prices.
    pub fn push(&mut self, generation: usize, members: &[Solution], selected: &[f64], evaluations: u64, migration: bool) {
        let best = members.iter().map(|m| m.fitness).fold(f64::INFINITY, f64::min);
        self.records.push(LogRecord {
            generation,
            best_fitness: best,
            median_fitness: median_fitness(members),
            diversity_cv: price_cv(selected),
            evaluations,
            migration,
        });
    }

    pub fn best_is_monotone(&self) -> bool {
        self.records.windows(2).all(|w| w[1].best_fitness <= w[0].best_fitness)
    }

    pub fn final_best(&self) -> Option<f64> {
        self.records.last().map(|r| r.best_fitness)
    }
}

/// Soft limits checked between generations.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunControl {
    pub deadline: Option<Instant>,
    /// Stop once this many formations have been scored.
    pub max_evaluations: Option<u64>,
}

impl RunControl {
    pub fn should_stop(&self, evaluations: u64) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d) || self.max_evaluations.is_some_and(|b| evaluations >= b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MigrationEvent {
    pub generation: usize,
    pub members: usize,
    /// The regrouped chromosomes form the same multiset as before.
    pub conserved: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub best: Solution,
    pub log: ConvergenceLog,
    /// Final members, cheapest first.
    pub final_population: Vec<Solution>,
    pub evaluations: u64,
    pub migrations: Vec<MigrationEvent>,
    /// The run hit its deadline or budget before the last generation.
    pub stopped_early: bool,
}

/// Single-population GA for `config.generations` generations.
pub fn run_vanilla(inst: &Instance<'_>, config: &GaConfig, control: &RunControl) -> Result<RunResult> {
    let mut pop = init_population(inst, config)?;
    let mut log = ConvergenceLog::default();
    log.push(0, &pop.members, &pop.selected, pop.evaluations, false);
    let mut stopped_early = false;
    for _ in 0..config.generations {
        if control.should_stop(pop.evaluations) {
            stopped_early = true;
            break;
        }
        pop = next_generation(&pop, inst, config)?;
        log.push(pop.generation, &pop.members, &pop.selected, pop.evaluations, false);
    }
    Ok(RunResult {
        best: pop.best().clone(),
        log,
        evaluations: pop.evaluations,
        final_population: pop.members,
        migrations: Vec::new(),
        stopped_early,
    })
}
