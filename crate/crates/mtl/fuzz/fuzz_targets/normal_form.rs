//! Fuzz the mapping torus normal form: every parsed torus word must
//! round-trip through t^m * tail.

#![no_main]

use libfuzzer_sys::fuzz_target;
use mtl::autos::Automorphism;
use mtl::suspension::torus_presentation;
use mtl::words::{FreeBasis, Word};

fuzz_target!(|data: &str| {
    let basis = FreeBasis::parse("a b").unwrap();
    let images = vec![
        basis.parse_word("ab").unwrap(),
        basis.parse_word("a").unwrap(),
    ];
    let alpha = Automorphism::validate(basis, images).unwrap();
    let pres = torus_presentation(&alpha).unwrap();
    if let Ok(word) = pres.extended.parse_word(data) {
        // keep inputs small enough that iterated rewriting stays cheap
        if word.len() > 64 {
            return;
        }
        let (m, tail) = pres.normal_form(&word);
        let rebuilt = pres.t_power_times(m, &tail);
        let diff = word.concat(&rebuilt.inverse());
        assert_eq!(pres.normal_form(&diff), (0, Word::empty()));
    }
});
