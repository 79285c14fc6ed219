#![no_main]

use libfuzzer_sys::fuzz_target;
use puzzle_ga::persistence::{log_to_csv, parse_log};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(log) = parse_log(text) {
        let _ = parse_log(&log_to_csv(&log)).expect("saved log reloads");
    }
});
