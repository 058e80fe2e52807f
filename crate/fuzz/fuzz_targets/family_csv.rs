#![no_main]

use libfuzzer_sys::fuzz_target;
use num_rational::BigRational;

use bellkit::{validate_family, MarginalFamily};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    // Neither parsing mode may panic, and whatever parses must survive
    // validation (validation may reject it, but without panicking).
    if let Ok(family) = bellkit::io::parse_family_csv_str::<f64>(text) {
        let _ = validate_family(&family);
    }
    if let Ok(family) = bellkit::io::parse_family_csv_str::<BigRational>(text) {
        let violations = validate_family(&family);
        // A family the exact mode accepts must also be acceptable after the
        // float conversion (the float tolerance is wider).
        if violations.is_empty() && family.n <= 4 {
            let float: MarginalFamily<f64> = family.map_scalar();
            assert!(validate_family(&float).is_empty());
        }
    }
});
