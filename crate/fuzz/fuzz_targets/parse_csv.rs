#![no_main]

use libfuzzer_sys::fuzz_target;
use qrewind::io::{curve_csv, dist_csv, parse_curve_csv, parse_dist_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(d) = parse_dist_csv(s) {
        assert_eq!(parse_dist_csv(&dist_csv(&d)).unwrap(), d);
    }
    if let Ok(c) = parse_curve_csv(s) {
        assert_eq!(parse_curve_csv(&curve_csv(&c)).unwrap(), c);
    }
});
