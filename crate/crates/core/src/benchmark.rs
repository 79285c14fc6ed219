//! Desk-scale experiments: guided versus unguided construction, and the
//! single-population GA versus the island model under a shared budget.
//!
//! Everything here is a pure function of the inputs and seed; wall-clock
//! time is measured but never written into the comparable outputs.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constructor::{construct_guided_once, construct_unguided, ConstructorConfig, DEFAULT_MAX_ITERATIONS};
use crate::error::{Error, Result};
use crate::evolution::{run_vanilla, ConvergenceLog, GaConfig, LogRecord, RunControl};
use crate::instance::Instance;
use crate::islands::{run_multi_island, IslandConfig};
use crate::rng::derive;

pub const DEFAULT_GUIDANCE_ATTEMPTS: usize = 5000;
pub const DEFAULT_CONVERGENCE_RUNS: usize = 25;
pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Guided,
    Unguided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidanceSample {
    pub attempt: usize,
    pub arm: Arm,
    /// Synergy of the first completed formation; empty if every restart ran dry.
    pub synergy: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub completed: usize,
    pub max: f64,
    pub median: f64,
    pub mean: f64,
    /// Completed attempts at or above the puzzle's synergy threshold.
    pub reached_threshold: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuidanceResult {
    pub threshold: f64,
    pub samples: Vec<GuidanceSample>,
    pub guided: SampleSummary,
    pub unguided: SampleSummary,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => v[n / 2],
        _ => (v[n / 2 - 1] + v[n / 2]) / 2.0,
    }
}

fn summarize(values: &[f64], threshold: f64) -> SampleSummary {
    SampleSummary {
        completed: values.len(),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        median: median(values),
        mean: values.iter().sum::<f64>() / values.len() as f64,
        reached_threshold: values.iter().filter(|&&s| s >= threshold).count(),
    }
}

/// Single attempts with and without synergy guidance. Attempt `i` of both
/// arms starts from the same seed.
pub fn run_guidance_experiment(inst: &Instance<'_>, attempts: usize, seed: u64) -> Result<GuidanceResult> {
    let Some(threshold) = inst.synergy_threshold() else {
        return Err(Error::InvalidConfig("guidance experiment needs a synergy threshold".into()));
    };
    let pairs: Vec<(Option<f64>, Option<f64>)> = (0..attempts)
        .into_par_iter()
        .map(|i| {
            let cfg = ConstructorConfig::new(derive(seed, i as u64)).with_max_iterations(DEFAULT_MAX_ITERATIONS);
            let guided = construct_guided_once(inst, &cfg)?.map(|s| s.synergy);
            let unguided = construct_unguided(inst, &cfg)?.map(|s| s.synergy);
            Ok((guided, unguided))
        })
        .collect::<Result<_>>()?;
    let mut samples = Vec::with_capacity(2 * attempts);
    for (attempt, (g, u)) in pairs.iter().enumerate() {
        samples.push(GuidanceSample {
            attempt,
            arm: Arm::Guided,
            synergy: *g,
        });
        samples.push(GuidanceSample {
            attempt,
            arm: Arm::Unguided,
            synergy: *u,
        });
    }
    let guided: Vec<f64> = pairs.iter().filter_map(|p| p.0).collect();
    let unguided: Vec<f64> = pairs.iter().filter_map(|p| p.1).collect();
    Ok(GuidanceResult {
        threshold,
        guided: summarize(&guided, threshold),
        unguided: summarize(&unguided, threshold),
        samples,
    })
}

impl GuidanceResult {
    /// `attempt,arm,synergy`, one row per attempt and arm.
    pub fn samples_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for s in &self.samples {
            w.serialize(s).expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("flushing to memory")).expect("csv output is UTF-8")
    }

    /// Counts per synergy bin of width 1/20; the last bin includes 1.0.
    pub fn histogram_csv(&self) -> String {
        let mut counts = [[0usize; 2]; HISTOGRAM_BINS];
        for s in &self.samples {
            if let Some(v) = s.synergy {
                let bin = ((v * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
                counts[bin][usize::from(s.arm == Arm::Unguided)] += 1;
            }
        }
        let mut out = String::from("bin_low,bin_high,guided,unguided\n");
        for (b, [g, u]) in counts.iter().enumerate() {
            let lo = b as f64 / HISTOGRAM_BINS as f64;
            let hi = (b + 1) as f64 / HISTOGRAM_BINS as f64;
            writeln!(out, "{lo},{hi},{g},{u}").expect("writing to a string");
        }
        out
    }

    pub fn summary_json(&self) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            threshold: f64,
            attempts: usize,
            guided: &'a SampleSummary,
            unguided: &'a SampleSummary,
        }
        crate::persistence::to_json(&Summary {
            threshold: self.threshold,
            attempts: self.samples.len() / 2,
            guided: &self.guided,
            unguided: &self.unguided,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceConfig {
    pub runs: usize,
    /// Operator rates plus the single-population sizes.
    pub vanilla: GaConfig,
    /// Island sizes; operator rates come from `vanilla`.
    pub islands: IslandConfig,
    /// Evaluation budget per run and arm; each run stops at the first
    /// generation boundary at or past it. `None` runs every generation.
    pub budget: Option<u64>,
    pub seed: u64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig {
            runs: DEFAULT_CONVERGENCE_RUNS,
            vanilla: GaConfig::default(),
            islands: IslandConfig::default(),
            budget: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmRun {
    pub seed: u64,
    pub log: ConvergenceLog,
    pub final_best: f64,
    pub evaluations: u64,
    /// Median of the per-generation diversity over the run.
    pub median_diversity: f64,
    pub migrations_conserved: bool,
    pub wall_seconds: f64,
}

/// Per-generation envelope over runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub generation: usize,
    pub runs: usize,
    pub best_min: f64,
    pub best_median: f64,
    pub best_max: f64,
    pub median_median: f64,
    pub cv_min: f64,
    pub cv_median: f64,
    pub cv_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceResult {
    pub vanilla: Vec<ArmRun>,
    pub islands: Vec<ArmRun>,
}

fn arm_run(seed: u64, result: crate::evolution::RunResult, started: Instant) -> ArmRun {
    let cvs: Vec<f64> = result.log.records.iter().map(|r| r.diversity_cv).collect();
    ArmRun {
        seed,
        final_best: result.best.fitness,
        evaluations: result.evaluations,
        median_diversity: median(&cvs),
        migrations_conserved: result.migrations.iter().all(|m| m.conserved),
        log: result.log,
        wall_seconds: started.elapsed().as_secs_f64(),
    }
}

/// Paired runs: run `i` of both arms uses the same seed.
pub fn run_convergence_experiment(inst: &Instance<'_>, config: &ConvergenceConfig) -> Result<ConvergenceResult> {
    let control = RunControl {
        deadline: None,
        max_evaluations: config.budget,
    };
    let pairs: Vec<(ArmRun, ArmRun)> = (0..config.runs)
        .into_par_iter()
        .map(|i| {
            let seed = derive(config.seed, i as u64);
            let started = Instant::now();
            let vanilla_cfg = GaConfig {
                rng_seed: seed,
                ..config.vanilla
            };
            let v = arm_run(seed, run_vanilla(inst, &vanilla_cfg, &control)?, started);
            let started = Instant::now();
            let island_cfg = IslandConfig {
                rng_seed: seed,
                ..config.islands
            };
            let m = arm_run(seed, run_multi_island(inst, &config.vanilla, &island_cfg, &control)?, started);
            Ok((v, m))
        })
        .collect::<Result<_>>()?;
    let (vanilla, islands) = pairs.into_iter().unzip();
    Ok(ConvergenceResult { vanilla, islands })
}

pub fn bands(runs: &[ArmRun]) -> Vec<BandRow> {
    let longest = runs.iter().map(|r| r.log.records.len()).max().unwrap_or(0);
    (0..longest)
        .map(|g| {
            let rows: Vec<&LogRecord> = runs.iter().filter_map(|r| r.log.records.get(g)).collect();
            let best: Vec<f64> = rows.iter().map(|r| r.best_fitness).collect();
            let med: Vec<f64> = rows.iter().map(|r| r.median_fitness).collect();
            let cv: Vec<f64> = rows.iter().map(|r| r.diversity_cv).collect();
            let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
            let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            BandRow {
                generation: rows[0].generation,
                runs: rows.len(),
                best_min: min(&best),
                best_median: median(&best),
                best_max: max(&best),
                median_median: median(&med),
                cv_min: min(&cv),
                cv_median: median(&cv),
                cv_max: max(&cv),
            }
        })
        .collect()
}

impl ConvergenceResult {
    pub fn median_final_best(runs: &[ArmRun]) -> f64 {
        median(&runs.iter().map(|r| r.final_best).collect::<Vec<_>>())
    }

    pub fn median_diversity(runs: &[ArmRun]) -> f64 {
        median(&runs.iter().map(|r| r.median_diversity).collect::<Vec<_>>())
    }

    /// Every logged best-fitness series is non-increasing and every
    /// migration conserved its chromosomes.
    pub fn invariants_hold(&self) -> bool {
        self.vanilla
            .iter()
            .chain(&self.islands)
            .all(|r| r.log.best_is_monotone() && r.migrations_conserved)
    }

    /// `arm,generation,...` band rows for both arms.
    pub fn bands_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.write_record([
            "arm",
            "generation",
            "runs",
            "best_min",
            "best_median",
            "best_max",
            "median_median",
            "cv_min",
            "cv_median",
            "cv_max",
        ])
        .expect("writing to memory");
        for (arm, runs) in [("vanilla", &self.vanilla), ("islands", &self.islands)] {
            for b in bands(runs) {
                w.write_record([
                    arm.to_string(),
                    b.generation.to_string(),
                    b.runs.to_string(),
                    b.best_min.to_string(),
                    b.best_median.to_string(),
                    b.best_max.to_string(),
                    b.median_median.to_string(),
                    b.cv_min.to_string(),
                    b.cv_median.to_string(),
                    b.cv_max.to_string(),
                ])
                .expect("writing to memory");
            }
        }
        String::from_utf8(w.into_inner().expect("flushing to memory")).expect("csv output is UTF-8")
    }

    pub fn summary_json(&self) -> String {
        #[derive(Serialize)]
        struct ArmSummary {
            runs: usize,
            median_final_best: f64,
            median_diversity: f64,
            median_evaluations: f64,
        }
        #[derive(Serialize)]
        struct Summary {
            vanilla: ArmSummary,
            islands: ArmSummary,
            invariants_hold: bool,
        }
        let arm = |runs: &[ArmRun]| ArmSummary {
            runs: runs.len(),
            median_final_best: Self::median_final_best(runs),
            median_diversity: Self::median_diversity(runs),
            median_evaluations: median(&runs.iter().map(|r| r.evaluations as f64).collect::<Vec<_>>()),
        };
        crate::persistence::to_json(&Summary {
            vanilla: arm(&self.vanilla),
            islands: arm(&self.islands),
            invariants_hold: self.invariants_hold(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{FormationGraph, Item, Pool, Puzzle, Requirement, TraitDef, TraitSchema};

    #[test]
    fn identical_items_score_one_in_both_arms() {
        let schema = TraitSchema::new(vec![TraitDef::categorical("race"), TraitDef::numeric("level", 4.0)]);
        let items = (0..20).map(|i| Item::new(format!("c{i}"), vec!["elf".into(), 5u32.into()], 1.0)).collect();
        let pool = Pool::new(schema.clone(), items).unwrap();
        let puzzle = Puzzle::new("same", schema, FormationGraph::grid(2, 3), vec![Requirement::synergy(0.9)]);
        let inst = Instance::new(&pool, &puzzle).unwrap();
        let r = run_guidance_experiment(&inst, 30, 1).unwrap();
        assert_eq!(r.samples.len(), 60);
        assert!(r.samples.iter().all(|s| s.synergy == Some(1.0)));
        assert_eq!(r.guided.max, 1.0);
        assert_eq!(r.unguided.median, 1.0);
        assert_eq!(r.samples_csv().lines().count(), 61);
        let hist = r.histogram_csv();
        assert!(hist.lines().last().unwrap().ends_with(",30,30"));
    }

    #[test]
    fn single_run_bands_follow_the_trajectory() {
        let log = ConvergenceLog {
            records: (0..4)
                .map(|g| LogRecord {
                    generation: g,
                    best_fitness: 10.0 - g as f64,
                    median_fitness: 12.0,
                    diversity_cv: 0.1 * g as f64,
                    evaluations: 10 * g as u64,
                    migration: false,
                })
                .collect(),
        };
        let run = ArmRun {
            seed: 0,
            log: log.clone(),
            final_best: 7.0,
            evaluations: 30,
            median_diversity: 0.15,
            migrations_conserved: true,
            wall_seconds: 0.0,
        };
        for (band, rec) in bands(&[run]).iter().zip(&log.records) {
            assert_eq!(band.best_min, rec.best_fitness);
            assert_eq!(band.best_max, rec.best_fitness);
            assert_eq!(band.best_median, rec.best_fitness);
            assert_eq!(band.cv_median, rec.diversity_cv);
        }
    }

    #[test]
    fn median_values() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }
}
