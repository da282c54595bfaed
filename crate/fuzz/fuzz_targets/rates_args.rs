#![no_main]
use libfuzzer_sys::fuzz_target;

// Whitespace-separated arguments of the `rates` subcommand.
fuzz_target!(|src: &str| {
    let args: Vec<&str> = src.split_whitespace().collect();
    let _ = phononet::rates::query::run(&args);
});
