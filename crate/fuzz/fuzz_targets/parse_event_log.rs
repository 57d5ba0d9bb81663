//! Event-log text parsing must never panic, and anything it accepts must
//! round-trip byte-identically and survive downstream analysis.

#![no_main]

use libfuzzer_sys::fuzz_target;

use gresilience::events::EventLog;
use gresilience::metrics::detect_episodes;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(log) = EventLog::parse_text(text) {
        let reprinted = log.to_text();
        let reparsed = EventLog::parse_text(&reprinted).expect("serialized logs reparse");
        assert_eq!(reparsed.to_text(), reprinted, "round trip must be stable");
        let _ = detect_episodes(&log);
    }
});
