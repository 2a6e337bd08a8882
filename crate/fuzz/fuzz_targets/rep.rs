#![no_main]
use ci_engine::format::{parse_rep, serialize_rep};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(r) = parse_rep(s) {
        assert_eq!(parse_rep(&serialize_rep(&r)).expect("canonical text parses"), r);
    }
});
