#![no_main]

use libfuzzer_sys::fuzz_target;
use qrewind::io::{parse_statistics, statistics_json};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(stats) = parse_statistics(s) {
        let again = parse_statistics(&statistics_json(&stats)).unwrap();
        // NaN fields compare unequal to themselves; compare the serialized form
        assert_eq!(statistics_json(&again), statistics_json(&stats));
    }
});
