//! Fuzz the word parser: arbitrary input must either parse to a freely
//! reduced word that round-trips through rendering, or fail cleanly.

#![no_main]

use libfuzzer_sys::fuzz_target;
use mtl::words::FreeBasis;

fuzz_target!(|data: &str| {
    let basis = FreeBasis::parse("a b s").unwrap();
    if let Ok(word) = basis.parse_word(data) {
        // reduced, and stable under a render/parse round trip
        let rendered = basis.render(&word);
        let again = basis.parse_word(&rendered).expect("rendered word parses");
        assert_eq!(word, again);
        let (core, conj) = word.cyclic_reduce();
        assert_eq!(conj.concat(&core).concat(&conj.inverse()), word);
    }
});
