//! Scenario TOML parsing must never panic, whatever the file contains:
//! parse errors and validation errors are the only acceptable outcomes.

#![no_main]

use libfuzzer_sys::fuzz_target;

use gresilience::scenario::ScenarioConfig;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Ok(cfg) = ScenarioConfig::from_toml_str(&text) {
        // A config that parsed also validates, and survives patching.
        cfg.validate().expect("parsed configs are valid");
        let _ = cfg.with_param("policy.eps_high", 0.75);
    }
});
