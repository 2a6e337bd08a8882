#![no_main]
use ci_engine::rational;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(x) = rational::parse(s) {
        assert_eq!(rational::parse(&rational::format(&x)).unwrap(), x);
    }
});
