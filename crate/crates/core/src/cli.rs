//! Command-line front end.
//!
//! Exit codes: 0 success, 2 no feasible formation found, 3 bad input or
//! configuration, 4 instance too large for exhaustive enumeration.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};

use crate::benchmark::{
    run_convergence_experiment, run_guidance_experiment, ConvergenceConfig, ConvergenceResult, DEFAULT_CONVERGENCE_RUNS,
    DEFAULT_GUIDANCE_ATTEMPTS,
};
use crate::constructor::{construct, ConstructOutcome, ConstructorConfig, DEFAULT_MAX_ITERATIONS};
use crate::domain::{Pool, Puzzle};
use crate::error::{Error, Result};
use crate::evolution::{run_vanilla, GaConfig, RunControl, RunResult};
use crate::instance::Instance;
use crate::islands::{run_multi_island, IslandConfig};
use crate::oracle::{enumerate_all, OracleCaps, DEFAULT_MAX_ENUMERATION};
use crate::persistence::{
    generate_pool, log_to_csv, parse_pool, parse_puzzle_file, pool_to_json, read_text, write_text, OracleReport,
    PoolSpec, PopulationReport, PuzzleFile, SolutionRecord, SolutionReport,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_TOO_LARGE: i32 = 4;

/// Share of the best price within which a formation counts as near-optimal
/// in the optimize summary.
const NEAR_OPTIMAL_MARGIN: f64 = 0.05;

#[derive(Debug, Parser)]
#[command(name = "puzzle-ga", version, about = "Select-and-arrange puzzle solver")]
struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a seeded synthetic pool.
    GenPool {
        #[arg(long, default_value_t = 500)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build one feasible formation with the guided constructor.
    Solve {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Search for cheap formations with the genetic algorithm.
    Optimize(OptimizeArgs),
    /// Enumerate every assignment of a tiny instance.
    Oracle {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = DEFAULT_MAX_ENUMERATION)]
        cap: u128,
        #[arg(long)]
        out: PathBuf,
    },
    /// Desk-scale experiments.
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Debug, Args)]
struct InputArgs {
    #[arg(long)]
    pool: PathBuf,
    #[arg(long)]
    puzzle: PathBuf,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of islands (default 5).
    #[arg(long, conflicts_with = "vanilla")]
    islands: Option<usize>,
    /// Single population instead of islands.
    #[arg(long)]
    vanilla: bool,
    #[arg(long)]
    generations: Option<usize>,
    /// Total population over all islands.
    #[arg(long, default_value_t = 50)]
    population: usize,
    /// Total offspring per generation over all islands.
    #[arg(long, default_value_t = 100)]
    offspring: usize,
    #[arg(long, default_value_t = 10)]
    migration_interval: usize,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Stop after the generation running when this many seconds have passed.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum BenchCommand {
    /// Guided versus unguided single construction attempts.
    Guidance {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = DEFAULT_GUIDANCE_ATTEMPTS)]
        attempts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Single population versus islands, paired seeds.
    Convergence {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = DEFAULT_CONVERGENCE_RUNS)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        generations: usize,
        /// Evaluation budget per run and arm.
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long, default_value_t = 5)]
        islands: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InitializationBudgetExceeded { .. } => EXIT_INFEASIBLE,
        Error::InstanceTooLarge { .. } => EXIT_TOO_LARGE,
        _ => EXIT_INPUT,
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be at least 1");
            return EXIT_INPUT;
        }
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return EXIT_INPUT;
        }
    };
    match pool.install(|| run(cli.command)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn load(input: &InputArgs) -> Result<(Pool, PuzzleFile, Puzzle)> {
    let pool = parse_pool(&read_text(&input.pool)?).map_err(|e| in_file(&input.pool, e))?;
    let file = parse_puzzle_file(&read_text(&input.puzzle)?).map_err(|e| in_file(&input.puzzle, e))?;
    let puzzle = file.bind(pool.schema()).map_err(|e| in_file(&input.puzzle, e))?;
    Ok((pool, file, puzzle))
}

fn in_file(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse { line, column, reason } => Error::Parse {
            line,
            column,
            reason: format!("{}: {reason}", path.display()),
        },
        other => other,
    }
}

fn run(command: Command) -> Result<i32> {
    match command {
        Command::GenPool { size, seed, out } => {
            let pool = generate_pool(&PoolSpec::with_size(size), seed)?;
            write_text(&out, &pool_to_json(&pool))?;
            Ok(EXIT_OK)
        }
        Command::Solve { input, seed, max_iters, out } => {
            let (pool, file, puzzle) = load(&input)?;
            let defaults = file.solver();
            let seed = seed.or(defaults.seed).unwrap_or(0);
            let iterations = max_iters.or(defaults.max_iterations).unwrap_or(DEFAULT_MAX_ITERATIONS);
            let inst = Instance::new(&pool, &puzzle)?;
            match construct(&inst, &ConstructorConfig::new(seed).with_max_iterations(iterations))? {
                ConstructOutcome::Solved { solution, iterations } => {
                    let report = SolutionReport::new("construct", seed, &solution, &puzzle, &pool)?;
                    write_text(&out, &report.to_json())?;
                    println!(
                        "solved in {iterations} iteration(s): price {:.2}, synergy {:.4}",
                        solution.fitness, solution.synergy
                    );
                    Ok(EXIT_OK)
                }
                ConstructOutcome::Infeasible { attempts, best_synergy_seen } => {
                    match best_synergy_seen {
                        Some(s) => eprintln!(
                            "no feasible formation after {attempts} iteration(s); best synergy seen {s:.4}, required {}",
                            inst.synergy_threshold().unwrap_or(0.0)
                        ),
                        None => eprintln!(
                            "no feasible formation after {attempts} iteration(s); no traversal met the linear requirements"
                        ),
                    }
                    Ok(EXIT_INFEASIBLE)
                }
            }
        }
        Command::Optimize(args) => optimize(args),
        Command::Oracle { input, cap, out } => {
            let (pool, _, puzzle) = load(&input)?;
            let caps = OracleCaps {
                max_enumeration: cap,
                ..OracleCaps::default()
            };
            let result = enumerate_all(&pool, &puzzle, &caps)?;
            write_text(&out, &OracleReport::new(&result, &puzzle, &pool).to_json())?;
            match result.optimal_fitness {
                Some(p) => println!(
                    "{} of {} assignments feasible; optimal price {p:.2} ({} optimal)",
                    result.feasible_count, result.enumerated, result.optimal_count
                ),
                None => println!("none of {} assignments is feasible", result.enumerated),
            }
            Ok(if result.feasible_count == 0 { EXIT_INFEASIBLE } else { EXIT_OK })
        }
        Command::Bench(BenchCommand::Guidance { input, attempts, seed, out }) => {
            let (pool, _, puzzle) = load(&input)?;
            let inst = Instance::new(&pool, &puzzle)?;
            let result = run_guidance_experiment(&inst, attempts, seed)?;
            write_text(&out.join("samples.csv"), &result.samples_csv())?;
            write_text(&out.join("histogram.csv"), &result.histogram_csv())?;
            write_text(&out.join("summary.json"), &result.summary_json())?;
            println!(
                "guided: max {:.4}, median {:.4} | unguided: max {:.4}, median {:.4}",
                result.guided.max, result.guided.median, result.unguided.max, result.unguided.median
            );
            Ok(EXIT_OK)
        }
        Command::Bench(BenchCommand::Convergence {
            input,
            runs,
            seed,
            generations,
            budget,
            islands,
            out,
        }) => {
            let (pool, _, puzzle) = load(&input)?;
            let inst = Instance::new(&pool, &puzzle)?;
            let vanilla = GaConfig {
                generations,
                ..GaConfig::default()
            };
            let island_cfg = split(&vanilla, islands, 10, generations)?;
            let config = ConvergenceConfig {
                runs,
                vanilla,
                islands: island_cfg,
                budget,
                seed,
            };
            let started = Instant::now();
            let result = run_convergence_experiment(&inst, &config)?;
            write_convergence(&out, &result)?;
            println!(
                "median final best: vanilla {:.2}, islands {:.2} | median diversity: vanilla {:.4}, islands {:.4}",
                ConvergenceResult::median_final_best(&result.vanilla),
                ConvergenceResult::median_final_best(&result.islands),
                ConvergenceResult::median_diversity(&result.vanilla),
                ConvergenceResult::median_diversity(&result.islands),
            );
            eprintln!("wall time {:.1}s", started.elapsed().as_secs_f64());
            Ok(EXIT_OK)
        }
    }
}

/// Island settings that divide the totals in `ga` evenly.
fn split(ga: &GaConfig, islands: usize, migration_interval: usize, generations: usize) -> Result<IslandConfig> {
    if islands == 0 || ga.population_size % islands != 0 || ga.offspring_size % islands != 0 {
        return Err(Error::InvalidConfig(format!(
            "population {} and offspring {} must divide evenly over {islands} islands",
            ga.population_size, ga.offspring_size
        )));
    }
    Ok(IslandConfig {
        island_count: islands,
        per_island_population: ga.population_size / islands,
        per_island_offspring: ga.offspring_size / islands,
        migration_interval,
        total_generations: generations,
        rng_seed: ga.rng_seed,
    })
}

fn write_convergence(out: &Path, result: &ConvergenceResult) -> Result<()> {
    for (arm, runs) in [("vanilla", &result.vanilla), ("islands", &result.islands)] {
        for (i, run) in runs.iter().enumerate() {
            write_text(&out.join(arm).join(format!("run-{i:03}.csv")), &log_to_csv(&run.log))?;
        }
    }
    write_text(&out.join("bands.csv"), &result.bands_csv())?;
    write_text(&out.join("summary.json"), &result.summary_json())
}

fn optimize(args: OptimizeArgs) -> Result<i32> {
    let (pool, file, puzzle) = load(&args.input)?;
    let defaults = file.solver();
    let seed = args.seed.or(defaults.seed).unwrap_or(0);
    let generations = args.generations.or(defaults.generations).unwrap_or(100);
    let ga = GaConfig {
        population_size: args.population,
        offspring_size: args.offspring,
        generations,
        max_iterations: args.max_iters.or(defaults.max_iterations).unwrap_or(DEFAULT_MAX_ITERATIONS),
        rng_seed: seed,
        ..GaConfig::default()
    };
    let control = RunControl {
        deadline: args.time_limit.map(|s| Instant::now() + Duration::from_secs_f64(s.max(0.0))),
        max_evaluations: None,
    };
    let inst = Instance::new(&pool, &puzzle)?;
    let (method, result): (String, RunResult) = if args.vanilla {
        ("vanilla".into(), run_vanilla(&inst, &ga, &control)?)
    } else {
        let islands = args.islands.or(defaults.islands).unwrap_or(5);
        let cfg = split(&ga, islands, args.migration_interval, generations)?;
        (format!("islands-{islands}"), run_multi_island(&inst, &ga, &cfg, &control)?)
    };
    if result.stopped_early {
        eprintln!(
            "warning: time limit reached after generation {}; results are partial",
            result.log.records.last().map_or(0, |r| r.generation)
        );
    }
    let best = SolutionReport::new(&method, seed, &result.best, &puzzle, &pool)?;
    let population = PopulationReport {
        puzzle: puzzle.name.clone(),
        seed,
        solutions: result.final_population.iter().map(|s| SolutionRecord::new(s, &pool)).collect(),
    };
    write_text(&args.out.join("best.json"), &best.to_json())?;
    write_text(&args.out.join("population.json"), &population.to_json())?;
    write_text(&args.out.join("convergence.csv"), &log_to_csv(&result.log))?;

    let mut distinct: Vec<&Vec<usize>> = result.final_population.iter().map(|s| &s.items).collect();
    distinct.sort();
    distinct.dedup();
    let cutoff = result.best.fitness * (1.0 + NEAR_OPTIMAL_MARGIN);
    let mut near: Vec<&Vec<usize>> = result
        .final_population
        .iter()
        .filter(|s| s.fitness <= cutoff)
        .map(|s| &s.items)
        .collect();
    near.sort();
    near.dedup();
    println!("puzzle       {}", puzzle.name);
    println!("method       {method}, seed {seed}, {} generation(s)", result.log.records.len().saturating_sub(1));
    println!("best price   {:.2}", result.best.fitness);
    println!("synergy      {:.4}", result.best.synergy);
    println!("formation    {}", result.best.item_ids(&pool).join(" "));
    println!("distinct     {} in final population, {} within 5% of best", distinct.len(), near.len());
    println!("evaluations  {}", result.evaluations);
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_are_input_errors() {
        assert_eq!(cli_main(["puzzle-ga", "frobnicate"]), EXIT_INPUT);
        assert_eq!(cli_main(["puzzle-ga", "solve", "--pool", "x.json"]), EXIT_INPUT);
        assert_eq!(cli_main(["puzzle-ga", "--help"]), EXIT_OK);
    }

    #[test]
    fn missing_file_is_an_input_error() {
        let code = cli_main([
            "puzzle-ga",
            "solve",
            "--pool",
            "/nonexistent/pool.json",
            "--puzzle",
            "/nonexistent/p.json",
            "--out",
            "/tmp/never.json",
        ]);
        assert_eq!(code, EXIT_INPUT);
    }

    #[test]
    fn uneven_island_split_is_rejected() {
        assert!(split(&GaConfig::default(), 3, 10, 10).is_err());
        let cfg = split(&GaConfig::default(), 5, 10, 10).unwrap();
        assert_eq!((cfg.per_island_population, cfg.per_island_offspring), (10, 20));
    }
}
