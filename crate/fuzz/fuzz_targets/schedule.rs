#![no_main]

use libfuzzer_sys::fuzz_target;
use slspectra_cli::parse::{parse_range, parse_schedule, parse_window};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(s) = parse_schedule(text) {
        for w in s.windows(2) {
            assert!(w[0].k_max <= w[1].k_max);
        }
    }
    let _ = parse_range(text);
    let _ = parse_window(text);
});
