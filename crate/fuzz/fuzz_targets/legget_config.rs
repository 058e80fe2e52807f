#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(config) = bellkit::config::parse_legget_config(text) {
        if let Ok(compiled) = config.compile() {
            // A compiled model must marginalize/condition without panics.
            let _ = bellkit::model_from_joint(&compiled.joint);
        }
    }
});
