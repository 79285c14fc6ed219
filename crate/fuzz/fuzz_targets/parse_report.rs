#![no_main]

use libfuzzer_sys::fuzz_target;
use puzzle_ga::persistence::{OracleReport, PopulationReport, SolutionReport};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(r) = SolutionReport::parse(text) {
        let _ = SolutionReport::parse(&r.to_json()).expect("saved report reloads");
    }
    if let Ok(r) = PopulationReport::parse(text) {
        let _ = PopulationReport::parse(&r.to_json()).expect("saved report reloads");
    }
    if let Ok(r) = OracleReport::parse(text) {
        let _ = OracleReport::parse(&r.to_json()).expect("saved report reloads");
    }
});
