mod common;

use common::*;
use puzzle_ga::cli::{cli_main, EXIT_INFEASIBLE, EXIT_INPUT, EXIT_OK, EXIT_TOO_LARGE};
use puzzle_ga::persistence::{parse_log, parse_pool, OracleReport, PopulationReport, SolutionReport};

fn run(args: &[&str]) -> i32 {
    cli_main(std::iter::once("puzzle-ga").chain(args.iter().copied()))
}

fn path(p: &std::path::Path) -> String {
    p.display().to_string()
}

#[test]
fn gen_pool_writes_a_loadable_pool() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nested/pool.json");
    assert_eq!(run(&["gen-pool", "--size", "40", "--seed", "3", "--out", &path(&out)]), EXIT_OK);
    let pool = parse_pool(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(pool.len(), 40);
}

#[test]
fn solve_writes_a_feasible_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    let code = run(&[
        "solve",
        "--pool",
        &path(&data("pool-500.json")),
        "--puzzle",
        &path(&data("type1.json")),
        "--seed",
        "1",
        "--out",
        &path(&out),
    ]);
    assert_eq!(code, EXIT_OK);
    let report = SolutionReport::parse(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(report.feasible);
    assert!(report.checks.iter().all(|c| c.satisfied));
    assert_eq!(report.solution.items.len(), 10);
}

#[test]
fn unsatisfiable_puzzle_exits_with_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let puzzle = dir.path().join("p.json");
    std::fs::write(
        &puzzle,
        r#"{"name": "impossible", "graph": {"nodes": 4, "edges": [[0, 1], [1, 2], [2, 3]]},
            "requirements": [{"type": "min_sum", "trait": "level", "bound": 1000}]}"#,
    )
    .unwrap();
    let out = dir.path().join("s.json");
    let args = ["solve", "--pool", &path(&data("pool-12.json")), "--puzzle", &path(&puzzle), "--out", &path(&out)];
    assert_eq!(run(&args), EXIT_INFEASIBLE);
    assert!(!out.exists());
}

#[test]
fn malformed_and_mismatched_inputs_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\n  \"name\": \"x\",\n  \"graph\": \n}").unwrap();
    let out = path(&dir.path().join("o.json"));
    let pool = path(&data("pool-12.json"));
    assert_eq!(run(&["solve", "--pool", &pool, "--puzzle", &path(&broken), "--out", &out]), EXIT_INPUT);

    let unknown = dir.path().join("unknown.json");
    std::fs::write(
        &unknown,
        r#"{"name": "x", "graph": {"nodes": 2, "edges": [[0, 1]]},
            "requirements": [{"type": "min_distinct", "trait": "guild", "bound": 2}]}"#,
    )
    .unwrap();
    assert_eq!(run(&["solve", "--pool", &pool, "--puzzle", &path(&unknown), "--out", &out]), EXIT_INPUT);
    assert_eq!(run(&["optimize", "--pool", &pool, "--puzzle", &path(&data("tiny.json")), "--islands", "3", "--out", &out]), EXIT_INPUT);
    assert_eq!(run(&["--workers", "0", "gen-pool", "--out", &out]), EXIT_INPUT);
}

#[test]
fn oracle_matches_frozen_values_and_refuses_large_instances() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.json");
    let pool = path(&data("pool-12.json"));
    let tiny = path(&data("tiny.json"));
    assert_eq!(run(&["oracle", "--pool", &pool, "--puzzle", &tiny, "--out", &path(&out)]), EXIT_OK);
    let report = OracleReport::parse(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report.feasible_count, TINY_FEASIBLE_COUNT);
    assert_eq!(report.optimal_count, TINY_OPTIMAL_COUNT);
    assert!(same_price(report.optimal_price.unwrap(), TINY_OPTIMAL_PRICE));

    assert_eq!(run(&["oracle", "--pool", &pool, "--puzzle", &tiny, "--cap", "1000", "--out", &path(&out)]), EXIT_TOO_LARGE);
    let big = path(&data("pool-500.json"));
    let type1 = path(&data("type1.json"));
    assert_eq!(run(&["oracle", "--pool", &big, "--puzzle", &type1, "--out", &path(&out)]), EXIT_TOO_LARGE);
}

#[test]
fn optimize_writes_best_population_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(&[
        "optimize",
        "--pool",
        &path(&data("pool-12.json")),
        "--puzzle",
        &path(&data("tiny.json")),
        "--islands",
        "2",
        "--population",
        "12",
        "--offspring",
        "24",
        "--generations",
        "12",
        "--migration-interval",
        "4",
        "--out",
        &path(dir.path()),
    ]);
    assert_eq!(code, EXIT_OK);
    let best = SolutionReport::parse(&std::fs::read_to_string(dir.path().join("best.json")).unwrap()).unwrap();
    assert!(best.feasible);
    let population = PopulationReport::parse(&std::fs::read_to_string(dir.path().join("population.json")).unwrap()).unwrap();
    assert_eq!(population.solutions.len(), 12);
    assert!(population.solutions.iter().all(|s| s.price >= best.solution.price));
    let log = parse_log(&std::fs::read_to_string(dir.path().join("convergence.csv")).unwrap()).unwrap();
    assert_eq!(log.records.len(), 13);
    assert!(log.best_is_monotone());
    let migrations: Vec<usize> = log.records.iter().filter(|r| r.migration).map(|r| r.generation).collect();
    assert_eq!(migrations, vec![4, 8]);
}

#[test]
fn convergence_bench_writes_per_run_logs() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(&[
        "bench",
        "convergence",
        "--pool",
        &path(&data("pool-12.json")),
        "--puzzle",
        &path(&data("tiny.json")),
        "--runs",
        "3",
        "--generations",
        "5",
        "--out",
        &path(dir.path()),
    ]);
    assert_eq!(code, EXIT_OK);
    for arm in ["vanilla", "islands"] {
        for i in 0..3 {
            let log = parse_log(&std::fs::read_to_string(dir.path().join(arm).join(format!("run-{i:03}.csv"))).unwrap()).unwrap();
            assert!(log.best_is_monotone());
        }
    }
    assert!(dir.path().join("bands.csv").exists());
    assert!(dir.path().join("summary.json").exists());
}
