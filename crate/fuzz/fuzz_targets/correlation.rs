#![no_main]
use ci_engine::format::{parse_correlation, serialize_correlation};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(c) = parse_correlation(s) {
        assert_eq!(parse_correlation(&serialize_correlation(&c)).expect("canonical text parses"), c);
    }
});
