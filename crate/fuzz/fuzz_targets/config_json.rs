#![no_main]

use libfuzzer_sys::fuzz_target;
use lorentz_cli::AnalysisConfig;

// Parsing and resolving only; running analyses is unbounded in the horizon.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(config) = AnalysisConfig::from_json(text) else { return };
    let echo = serde_json::to_string(&config).unwrap();
    assert_eq!(AnalysisConfig::from_json(&echo).unwrap(), config);
    let _ = config.setup();
});
