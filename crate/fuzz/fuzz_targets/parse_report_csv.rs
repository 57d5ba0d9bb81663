//! Report CSV parsing must never panic; accepted input re-serializes to the
//! same bytes modulo float shortest-form printing.

#![no_main]

use libfuzzer_sys::fuzz_target;

use gresilience::report::{parse_csv, rows_to_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(rows) = parse_csv(text) {
        let reprinted = rows_to_csv(&rows);
        let reparsed = parse_csv(&reprinted).expect("serialized reports reparse");
        assert_eq!(rows_to_csv(&reparsed), reprinted, "round trip must be stable");
    }
});
