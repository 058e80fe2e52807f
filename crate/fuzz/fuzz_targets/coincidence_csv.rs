#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    // The parser must never panic; accepted records must satisfy the type's
    // own invariants.
    if let Ok(records) = bellkit::io::parse_coincidence_csv_str(text) {
        for record in &records {
            assert!(record.total() > 0, "zero-total rows must be rejected");
            assert!(record.theta1.is_finite() && record.theta2.is_finite());
        }
        // Accepted data survives a write/parse round trip with counts intact.
        let rewritten = bellkit::io::write_coincidence_csv(&records);
        let reparsed = bellkit::io::parse_coincidence_csv_str(&rewritten)
            .expect("writer output must parse");
        assert_eq!(records.len(), reparsed.len());
        for (a, b) in records.iter().zip(&reparsed) {
            assert_eq!(a.counts(), b.counts());
        }
    }
});
