#![no_main]
use ci_engine::format::{parse_model, serialize_model};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(m) = parse_model(s) {
        let text = serialize_model(&m);
        assert_eq!(parse_model(&text).expect("canonical text parses"), m);
    }
});
