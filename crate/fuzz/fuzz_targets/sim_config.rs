#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    // Parsing and compiling untrusted config must never panic; compiled
    // specs have already passed their validity checks.
    if let Ok(config) = bellkit::config::parse_sim_config(text) {
        let _ = config.compile();
    }
});
