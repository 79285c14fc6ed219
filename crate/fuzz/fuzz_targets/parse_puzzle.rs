#![no_main]

use libfuzzer_sys::fuzz_target;
use puzzle_ga::persistence::{parse_puzzle_file, PoolSpec};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(file) = parse_puzzle_file(text) else { return };
    assert_eq!(parse_puzzle_file(&file.to_json()).expect("saved puzzle reloads"), file);
    // Binding must reject or accept without panicking.
    let _ = file.bind(&PoolSpec::default().schema());
});
