#![no_main]

use libfuzzer_sys::fuzz_target;
use num_complex::Complex64;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(tau) = slspectra::BoundaryParam::parse(text) {
            let _ = slspectra::eval_param(&tau, Complex64::new(0.5, 1.0));
        }
    }
});
