#![no_main]

use libfuzzer_sys::fuzz_target;
use qrewind::io::{matrices_json, parse_matrices};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(m) = parse_matrices(s) {
        // accepted input must survive a write/read cycle unchanged
        assert_eq!(parse_matrices(&matrices_json(&m)).unwrap(), m);
    }
});
