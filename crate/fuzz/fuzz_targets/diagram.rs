#![no_main]
use ci_engine::format::{parse_diagram, serialize_diagram};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(d) = parse_diagram(s) {
        let text = serialize_diagram(&d);
        let back = parse_diagram(&text).expect("canonical text parses");
        assert_eq!(serialize_diagram(&back), text);
    }
});
