#![no_main]

use libfuzzer_sys::fuzz_target;
use qrewind::Probability;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(p) = s.parse::<Probability>() {
        let x = p.to_f64();
        assert!((0.0..=1.0).contains(&x));
        assert_eq!(p.to_string().parse::<Probability>().unwrap().to_rational(), p.to_rational());
    }
});
