#![no_main]
use ci_engine::format::{parse_fragment, serialize_fragment};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(f) = parse_fragment(s) {
        let _ = parse_fragment(&serialize_fragment(&f)).expect("canonical text parses");
    }
});
