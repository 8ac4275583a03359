//! Unit-quantity literals must never panic, and every accepted value must
//! survive the canonical render → parse round trip bit-exactly.

#![no_main]

use chainlight::config::{parse_angle, parse_frequency, parse_length, parse_time};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(v) = parse_frequency(text) {
        assert!(v.is_finite());
        let again = parse_frequency(&format!("{v} rad/s")).expect("canonical form parses");
        assert_eq!(again, v);
    }
    if let Ok(v) = parse_length(text) {
        assert!(v.is_finite());
        let again = parse_length(&format!("{v} m")).expect("canonical form parses");
        assert_eq!(again, v);
    }
    if let Ok(v) = parse_time(text) {
        assert!(v.is_finite());
        let again = parse_time(&format!("{v} s")).expect("canonical form parses");
        assert_eq!(again, v);
    }
    if let Ok(v) = parse_angle(text) {
        assert!(v.is_finite());
        let again = parse_angle(&format!("{v} rad")).expect("canonical form parses");
        assert_eq!(again, v);
    }
});
