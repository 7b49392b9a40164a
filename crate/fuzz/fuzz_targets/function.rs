#![no_main]

use libfuzzer_sys::fuzz_target;
use slspectra_cli::parse::{parse_function, parse_table, FunctionArg};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    // The same bytes go through both the spec and the table parser.
    if let Ok(FunctionArg::Spec(f)) = parse_function(text) {
        let _ = f.eval(0.5);
    }
    if let Ok(f) = parse_table(text) {
        let _ = f.eval(0.5);
    }
});
