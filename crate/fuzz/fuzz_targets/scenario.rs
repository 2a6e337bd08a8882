#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(sc) = ci_engine_cli::parse_scenario(s) {
        assert_eq!(ci_engine_cli::parse_scenario(&ci_engine_cli::scenario_label(&sc)), Ok(sc));
    }
});
