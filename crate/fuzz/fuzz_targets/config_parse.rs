#![no_main]
use libfuzzer_sys::fuzz_target;

// Parsing and validation must reject bad input with an error, never a panic.
fuzz_target!(|src: &str| {
    if let Ok(cfg) = phononet::config::from_str(src) {
        let _ = phononet::validate(&cfg);
    }
});
