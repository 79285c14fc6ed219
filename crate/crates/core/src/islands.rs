//! Island model: sub-populations evolve independently and are periodically
//! pooled, sorted by price and re-sliced so that similar chromosomes share
//! an island.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::Solution;
use crate::error::{Error, Result};
use crate::evolution::{
    initial_members, next_generation, population_stream, ConvergenceLog, GaConfig, MigrationEvent, Population, RunControl,
    RunResult,
};
use crate::instance::Instance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IslandConfig {
    pub island_count: usize,
    pub per_island_population: usize,
    pub per_island_offspring: usize,
    /// Generations each island runs alone between two regroupings.
    pub migration_interval: usize,
    pub total_generations: usize,
    pub rng_seed: u64,
}

impl Default for IslandConfig {
    fn default() -> Self {
        IslandConfig {
            island_count: 5,
            per_island_population: 10,
            per_island_offspring: 20,
            migration_interval: 10,
            total_generations: 100,
            rng_seed: 0,
        }
    }
}

impl IslandConfig {
    /// One island is accepted and behaves exactly like the single-population GA.
    pub fn validate(&self) -> Result<()> {
        if self.island_count == 0 {
            return Err(Error::InvalidConfig("island_count must be at least 1".into()));
        }
        if self.per_island_population < 2 || self.per_island_offspring < 2 {
            return Err(Error::InvalidConfig("per-island sizes must be at least 2".into()));
        }
        if self.migration_interval == 0 {
            return Err(Error::InvalidConfig("migration_interval must be at least 1".into()));
        }
        Ok(())
    }

    pub fn total_population(&self) -> usize {
        self.island_count * self.per_island_population
    }

    /// GA settings for one island: sizes and seed from here, rates from `base`.
    pub fn island_ga(&self, base: &GaConfig) -> GaConfig {
        GaConfig {
            population_size: self.per_island_population,
            offspring_size: self.per_island_offspring,
            generations: self.total_generations,
            rng_seed: self.rng_seed,
            ..*base
        }
    }
}

/// Sorts by price (ties by item list) and cuts into equal contiguous blocks.
pub fn partition(mut members: Vec<Solution>, island_count: usize) -> Result<Vec<Vec<Solution>>> {
    if island_count == 0 || members.len() % island_count != 0 {
        return Err(Error::InvalidConfig(format!(
            "{} members cannot be split evenly over {island_count} islands",
            members.len()
        )));
    }
    members.sort_by(|a, b| a.canonical_cmp(b));
    let size = members.len() / island_count;
    let mut blocks = Vec::with_capacity(island_count);
    let mut rest = members.into_iter();
    for _ in 0..island_count {
        blocks.push(rest.by_ref().take(size).collect());
    }
    Ok(blocks)
}

fn sorted_multiset(members: impl Iterator<Item = Vec<usize>>) -> Vec<Vec<usize>> {
    let mut all: Vec<_> = members.collect();
    all.sort();
    all
}

/// Pools every island, then re-slices by price, each island keeping its
/// size. Island streams, generation
/// counters and evaluation tallies stay with their island slots.
pub fn migrate(islands: &[Population]) -> (Vec<Population>, MigrationEvent) {
    let before = sorted_multiset(islands.iter().flat_map(|p| p.members.iter().map(|m| m.items.clone())));
    let all: Vec<Solution> = islands.iter().flat_map(|p| p.members.iter().cloned()).collect();
    let count = all.len();
    let generation = islands.first().map_or(0, |p| p.generation);
    let mut sorted = all;
    sorted.sort_by(|a, b| a.canonical_cmp(b));
    let mut rest = sorted.into_iter();
    let blocks: Vec<Vec<Solution>> = islands.iter().map(|p| rest.by_ref().take(p.len()).collect()).collect();
    let regrouped: Vec<Population> = islands
        .iter()
        .zip(blocks)
        .map(|(old, members)| {
            let mut p = Population::new(members, old.stream);
            p.generation = old.generation;
            p.evaluations = old.evaluations;
            p.refreshed = old.refreshed;
            p
        })
        .collect();
    let after = sorted_multiset(regrouped.iter().flat_map(|p| p.members.iter().map(|m| m.items.clone())));
    let event = MigrationEvent {
        generation,
        members: count,
        conserved: before == after,
    };
    (regrouped, event)
}

fn global_members(islands: &[Population]) -> Vec<Solution> {
    let mut all: Vec<Solution> = islands.iter().flat_map(|p| p.members.iter().cloned()).collect();
    all.sort_by(|a, b| a.canonical_cmp(b));
    all
}

fn global_selected(islands: &[Population]) -> Vec<f64> {
    islands.iter().flat_map(|p| p.selected.iter().copied()).collect()
}

fn total_evaluations(islands: &[Population], init: u64) -> u64 {
    init + islands.iter().map(|p| p.evaluations).sum::<u64>()
}

/// Runs the island model. `base` supplies the genetic operator rates;
/// sizes, generations and seed come from `config`.
pub fn run_multi_island(inst: &Instance<'_>, base: &GaConfig, config: &IslandConfig, control: &RunControl) -> Result<RunResult> {
    config.validate()?;
    let ga = config.island_ga(base);
    ga.validate()?;
    let (members, init_evals) = initial_members(inst, config.total_population(), &ga)?;
    let mut islands: Vec<Population> = partition(members, config.island_count)?
        .into_iter()
        .enumerate()
        .map(|(i, block)| Population::new(block, population_stream(config.rng_seed, i)))
        .collect();
    // A lone island carries the initialization cost itself, like the vanilla run.
    let mut init_share = init_evals;
    if config.island_count == 1 {
        islands[0].evaluations = init_evals;
        init_share = 0;
    }

    let mut log = ConvergenceLog::default();
    log.push(0, &global_members(&islands), &global_selected(&islands), total_evaluations(&islands, init_share), false);
    let mut migrations = Vec::new();
    let mut stopped_early = false;
    for generation in 1..=config.total_generations {
        if control.should_stop(total_evaluations(&islands, init_share)) {
            stopped_early = true;
            break;
        }
        islands = islands
            .par_iter()
            .map(|p| next_generation(p, inst, &ga))
            .collect::<Result<_>>()?;
        let migrating =
            config.island_count > 1 && generation % config.migration_interval == 0 && generation < config.total_generations;
        log.push(
            generation,
            &global_members(&islands),
            &global_selected(&islands),
            total_evaluations(&islands, init_share),
            migrating,
        );
        if migrating {
            let (regrouped, event) = migrate(&islands);
            islands = regrouped;
            migrations.push(event);
        }
    }
    let final_population = global_members(&islands);
    Ok(RunResult {
        best: final_population[0].clone(),
        evaluations: total_evaluations(&islands, init_share),
        final_population,
        log,
        migrations,
        stopped_early,
    })
}
