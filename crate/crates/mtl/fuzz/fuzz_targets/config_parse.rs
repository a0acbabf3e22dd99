//! Fuzz the configuration language: no panic on any input, and every
//! accepted configuration survives an emit/parse/emit round trip.

#![no_main]

use libfuzzer_sys::fuzz_target;
use mtl::config::{emit_config, parse_config};

fuzz_target!(|data: &str| {
    if let Ok(config) = parse_config(data) {
        let emitted = emit_config(&config);
        let reparsed = parse_config(&emitted).expect("canonical emission parses");
        assert_eq!(emit_config(&reparsed), emitted);
    }
});
