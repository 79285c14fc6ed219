#![no_main]

use libfuzzer_sys::fuzz_target;
use puzzle_ga::persistence::{parse_pool, pool_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(pool) = parse_pool(text) {
        let again = parse_pool(&pool_to_json(&pool)).expect("saved pool reloads");
        assert_eq!(again, pool);
    }
});
