fn main() {
    std::process::exit(puzzle_ga::cli::cli_main(std::env::args_os()));
}
