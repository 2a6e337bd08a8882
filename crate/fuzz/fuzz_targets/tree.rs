#![no_main]
use ci_engine::format::{parse_tree, serialize_tree, Kind};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let Ok(doc) = parse_tree(s) else { return };
    // whatever parses must survive a serialize/parse cycle unchanged
    let Kind::Map(entries) = &doc.kind else { panic!("root is not a map") };
    let text = serialize_tree(entries);
    let again = parse_tree(&text).expect("serializer output parses");
    let Kind::Map(again) = &again.kind else { panic!("root is not a map") };
    assert_eq!(serialize_tree(again), text);
});
