mod common;

use common::*;
use puzzle_ga::constructor::{construct, ConstructorConfig};
use puzzle_ga::domain::{evaluate, evaluate_assignment, Solution};
use puzzle_ga::evolution::{heal, init_population, run_vanilla, GaConfig, HealOutcome, PartialSolution, RunControl};
use puzzle_ga::oracle::enumerate_all;
use puzzle_ga::persistence::{generate_pool, pool_to_json, PoolSpec};
use puzzle_ga::rng::Rng;
use puzzle_ga::Instance;

#[test]
fn shipped_pools_match_their_generator_seeds() {
    let shipped = std::fs::read_to_string(data("pool-12.json")).unwrap();
    let pool = generate_pool(&PoolSpec::with_size(12), REFERENCE_POOL_SEED).unwrap();
    assert_eq!(pool_to_json(&pool), shipped);

    let shipped = std::fs::read_to_string(data("pool-500.json")).unwrap();
    let pool = generate_pool(&PoolSpec::default(), DESK_POOL_SEED).unwrap();
    assert_eq!(pool_to_json(&pool), shipped);
}

#[test]
fn reference_oracle_values_are_frozen() {
    let pool = load_pool("pool-12.json");
    let puzzle = load_puzzle("tiny.json", &pool);
    let r = enumerate_all(&pool, &puzzle, &Default::default()).unwrap();
    assert_eq!(r.enumerated, TINY_ENUMERATED);
    assert_eq!(r.feasible_count, TINY_FEASIBLE_COUNT);
    assert!(same_price(r.optimal_fitness.unwrap(), TINY_OPTIMAL_PRICE));
    assert_eq!(r.optimal_count, TINY_OPTIMAL_COUNT);
    for s in &r.optimal_solutions {
        assert!(evaluate(s, &puzzle, &pool).unwrap().feasible());
        assert_eq!(s.fitness, r.optimal_fitness.unwrap());
    }

    let path = load_puzzle("tiny-path.json", &pool);
    let r = enumerate_all(&pool, &path, &Default::default()).unwrap();
    assert_eq!(r.feasible_count, PATH_FEASIBLE_COUNT);
    assert!(same_price(r.optimal_fitness.unwrap(), PATH_OPTIMAL_PRICE));
    assert_eq!(r.optimal_count, PATH_OPTIMAL_COUNT);
}

#[test]
fn construct_beats_random_sampling_on_the_reference() {
    let pool = load_pool("pool-12.json");
    let puzzle = load_puzzle("tiny.json", &pool);
    let inst = Instance::new(&pool, &puzzle).unwrap();
    let mut solved = 0;
    for seed in 0..100 {
        if let Some(s) = construct(&inst, &ConstructorConfig::new(seed)).unwrap().into_solution() {
            assert!(evaluate(&s, &puzzle, &pool).unwrap().feasible());
            solved += 1;
        }
    }
    let fraction = TINY_FEASIBLE_COUNT as f64 / TINY_ENUMERATED as f64;
    assert!(solved as f64 / 100.0 >= fraction, "{solved}/100 vs {fraction}");
}

#[test]
fn population_larger_than_feasible_set_repeats_members() {
    let pool = load_pool("pool-12.json");
    let puzzle = load_puzzle("tiny-path.json", &pool);
    let inst = Instance::new(&pool, &puzzle).unwrap();
    let cfg = GaConfig { population_size: 50, rng_seed: 3, ..Default::default() };
    let pop = init_population(&inst, &cfg).unwrap();
    assert_eq!(pop.len(), 50);
    for m in &pop.members {
        assert!(evaluate(m, &puzzle, &pool).unwrap().feasible());
    }
    let mut distinct: Vec<&Vec<usize>> = pop.members.iter().map(|m| &m.items).collect();
    distinct.sort();
    distinct.dedup();
    assert!(distinct.len() as u64 <= PATH_FEASIBLE_COUNT);
    assert!(distinct.len() < 50);
}

/// Items that complete `slots` at its single empty node, by brute force.
fn completions(slots: &[Option<usize>], inst_pool: &puzzle_ga::domain::Pool, puzzle: &puzzle_ga::domain::Puzzle) -> Vec<usize> {
    let hole = slots.iter().position(Option::is_none).unwrap();
    (0..inst_pool.len())
        .filter(|i| !slots.contains(&Some(*i)))
        .filter(|&i| {
            let mut items: Vec<usize> = slots.iter().map(|s| s.unwrap_or(0)).collect();
            items[hole] = i;
            evaluate_assignment(&items, puzzle, inst_pool).unwrap().feasible()
        })
        .collect()
}

#[test]
fn heal_fills_one_gap_with_an_enumerated_completion() {
    let pool = load_pool("pool-12.json");
    let puzzle = load_puzzle("tiny.json", &pool);
    let inst = Instance::new(&pool, &puzzle).unwrap();
    let best = &enumerate_all(&pool, &puzzle, &Default::default()).unwrap().optimal_solutions[0];
    for hole in 0..4 {
        let mut partial = PartialSolution::from(best);
        partial.slots[hole] = None;
        let allowed = completions(&partial.slots, &pool, &puzzle);
        assert!(!allowed.is_empty());
        for seed in 0..20 {
            match heal(&inst, &partial, 10, &mut Rng::new(seed)).0 {
                HealOutcome::Healed(s) => {
                    assert!(allowed.contains(&s.items[hole]));
                    assert!(evaluate(&s, &puzzle, &pool).unwrap().feasible());
                }
                HealOutcome::Rejected => panic!("completion exists for hole {hole}"),
            }
        }
    }
}

#[test]
fn heal_rejects_partials_without_completions() {
    let pool = load_pool("pool-12.json");
    let puzzle = load_puzzle("tiny.json", &pool);
    let inst = Instance::new(&pool, &puzzle).unwrap();
    let mut linear_dead = 0;
    let mut synergy_dead = 0;
    for a in 0..12 {
        for b in 0..12 {
            for c in 0..12 {
                if a == b || b == c || a == c {
                    continue;
                }
                let slots = vec![Some(a), Some(b), Some(c), None];
                if !completions(&slots, &pool, &puzzle).is_empty() {
                    continue;
                }
                let linear_ok = (0..12)
                    .filter(|i| ![a, b, c].contains(i))
                    .any(|i| inst.linear_feasible(&[a, b, c, i]));
                if linear_ok {
                    synergy_dead += 1;
                } else {
                    linear_dead += 1;
                }
                let partial = PartialSolution { slots, banned: Vec::new() };
                assert_eq!(heal(&inst, &partial, 10, &mut Rng::new(a as u64)).0, HealOutcome::Rejected);
            }
        }
    }
    assert!(linear_dead > 0 && synergy_dead > 0, "{linear_dead} {synergy_dead}");
}

fn reaches_optimum(results: &[Solution], puzzle: &puzzle_ga::domain::Puzzle, pool: &puzzle_ga::domain::Pool) -> usize {
    results
        .iter()
        .inspect(|s| {
            assert!(evaluate(s, puzzle, pool).unwrap().feasible());
            assert!(s.fitness >= TINY_OPTIMAL_PRICE - 1e-9);
        })
        .filter(|s| same_price(s.fitness, TINY_OPTIMAL_PRICE))
        .count()
}

#[test]
fn vanilla_ga_finds_the_reference_optimum() {
    let pool = load_pool("pool-12.json");
    let puzzle = load_puzzle("tiny.json", &pool);
    let inst = Instance::new(&pool, &puzzle).unwrap();
    let bests: Vec<Solution> = (0..20)
        .map(|seed| {
            let cfg = GaConfig { population_size: 12, offspring_size: 24, generations: 100, rng_seed: seed, ..Default::default() };
            run_vanilla(&inst, &cfg, &RunControl::default()).unwrap().best
        })
        .collect();
    let hits = reaches_optimum(&bests, &puzzle, &pool);
    assert!(hits >= 18, "{hits}/20");
}
