//! Cross-module invariants: metric comparisons across splittings, the
//! torus-side orientation of B0, structural idempotence of the emitted
//! peripheral families, and determinism of the reports.

use mtl::autos::Automorphism;
use mtl::config::parse_config;
use mtl::driver::{analyze, run, CliCommand, RunOptions};
use mtl::growth::{classify, GrowthSequence};
use mtl::rng::SplitMix64;
use mtl::splittings::{build_hnn_context, verify_peripheral_structure, KStatus, SearchBounds};
use mtl::subgroups::SubgroupGraph;
use mtl::suspension::torus_presentation;
use mtl::words::{length, random_reduced_word, FreeBasis, Metric, Word};

fn auto(b: &FreeBasis, images: &[&str]) -> Automorphism {
    let ws: Vec<Word> = images.iter().map(|s| b.parse_word(s).unwrap()).collect();
    Automorphism::validate(b.clone(), ws).unwrap()
}

/// Tree growth classes agree across two splittings with the same
/// elliptic factor. The second splitting has stable letter s' = s b,
/// realized by rewriting through the substitution s -> s b^-1.
#[test]
fn tree_growth_class_agrees_across_splittings() {
    let b = FreeBasis::parse("a b s").unwrap();
    let alpha = auto(&b, &["ab", "a", "s"]);
    let stable = 2;
    let rewrite = auto(&b, &["a", "b", "sB"]);
    let mut rng = SplitMix64::new(42);
    let horizon = 16;
    for _ in 0..40 {
        let len = 1 + rng.below(6);
        let g = random_reduced_word(&mut rng, &[0, 1, 2], len);
        let mut first = Vec::with_capacity(horizon + 1);
        let mut second = Vec::with_capacity(horizon + 1);
        let mut cur = g.clone();
        for n in 0..=horizon {
            if n > 0 {
                cur = alpha.apply(&cur);
            }
            first.push(length(&cur, Metric::Tree { stable }));
            second.push(length(&rewrite.apply(&cur), Metric::Tree { stable }));
        }
        let report1 = classify(
            GrowthSequence {
                element: g.clone(),
                metric: Metric::Tree { stable },
                horizon,
                values: first,
                truncated: false,
            },
            &alpha,
        );
        let report2 = classify(
            GrowthSequence {
                element: g.clone(),
                metric: Metric::Tree { stable },
                horizon,
                values: second,
                truncated: false,
            },
            &alpha,
        );
        assert_eq!(
            report1.class.is_exponential(),
            report2.class.is_exponential(),
            "tree growth classes diverge on {}",
            b.render(&g)
        );
        // a one-edge splitting preserved this way keeps every element
        // tree-polynomial
        assert!(!report1.class.is_exponential());
    }
}

/// The conjugate s B0 s^-1 is normalized by t in the mapping torus,
/// checked through the normal form on instances with nontrivial B0.
#[test]
fn b0_conjugate_is_normalized_by_t() {
    let instances: Vec<(FreeBasis, Vec<usize>, usize, Vec<&str>)> = vec![
        (
            FreeBasis::parse("a b s").unwrap(),
            vec![0, 1],
            2,
            vec!["ab", "a", "sB"],
        ),
        (
            FreeBasis::parse("a b c s").unwrap(),
            vec![0, 1, 2],
            3,
            vec!["a", "bc", "b", "sbCB"],
        ),
    ];
    for (b, factor, stable, images) in instances {
        let alpha = auto(&b, &images);
        let ctx =
            build_hnn_context(&b, &factor, stable, &alpha, None, &SearchBounds::default()).unwrap();
        assert!(matches!(ctx.k_status, KStatus::Found { .. }));
        assert!(!ctx.b0.is_trivial());
        let pres = torus_presentation(&alpha).unwrap();
        let s = Word::generator(stable);
        let conj_gens: Vec<Word> = ctx
            .b0
            .free_basis()
            .iter()
            .map(|w| s.concat(w).concat(&s.inverse()))
            .collect();
        let conjugate = SubgroupGraph::fold(b.len(), &conj_gens);
        let t = pres.t_word();
        for gen in &conj_gens {
            for moved in [
                t.concat(gen).concat(&t.inverse()),
                t.inverse().concat(gen).concat(&t),
            ] {
                let (m, tail) = pres.normal_form(&moved);
                assert_eq!(m, 0);
                assert!(
                    conjugate.member(&tail),
                    "t-conjugate of {} left s B0 s^-1 in F({:?})",
                    b.render(gen),
                    b.names()
                );
            }
        }
    }
}

/// Structures emitted by the assembly pass the verification suite at the
/// same bounds, across the splitting kinds.
#[test]
fn emitted_structures_verify_at_same_bounds() {
    let configs = [
        // flagship HNN
        "group a b s\nauto\na -> ab\nb -> a\ns -> s\nend\nsplit hnn factor=a,b stable=s\nsubgroup P = abAB\n",
        // product of a Fibonacci factor and a fixed line
        "group a b c\nauto\na -> ab\nb -> a\nc -> c\nend\nsplit product left=a,b right=c\nsubgroup P = abAB\n",
        // rank-three factor with empty K; the factor's own peripheral
        // family is the join of the fixed letter with the invariant
        // conjugate of the (b, c) commutator
        "group a b c s\nauto\na -> a\nb -> bc\nc -> b\ns -> sBA\nend\nsplit hnn factor=a,b,c stable=s\nsubgroup M = a,BCbc\n",
        // nested: a product inside an HNN, identity automorphism
        "group a b s\nsplit hnn factor=a,b stable=s\nsplit product left=a right=b\n",
    ];
    for text in configs {
        let config = parse_config(text).unwrap();
        let letters: Vec<usize> = (0..config.basis.len()).collect();
        let analysis = analyze(&config, &letters).unwrap();
        let report = verify_peripheral_structure(
            &config.alpha,
            &analysis.structure.entries,
            &letters,
            &config.bounds,
        );
        assert!(
            report.passed,
            "structure from config failed verification:\n{text}\nfailures: {:?}",
            report
                .completeness
                .failures
                .iter()
                .map(|w| config.basis.render(w))
                .collect::<Vec<_>>()
        );
    }
}

/// Two Fibonacci blocks: both factor classes carry exactly preserved
/// representatives, so the peripheral family collapses to the single
/// preserved pair.
#[test]
fn two_fibonacci_blocks_collapse_to_the_preserved_pair() {
    let text = "group a b c d\nauto\na -> ab\nb -> a\nc -> cd\nd -> c\nend\n\
split product left=a,b right=c,d\nsubgroup P1 = abAB\nsubgroup P2 = cdCD\n";
    let config = parse_config(text).unwrap();
    let analysis = analyze(&config, &[0, 1, 2, 3]).unwrap();
    assert_eq!(analysis.structure.entries.len(), 1);
    let b = &config.basis;
    let expected = SubgroupGraph::fold(
        4,
        &[b.parse_word("ABab").unwrap(), b.parse_word("CDcd").unwrap()],
    );
    assert_eq!(analysis.structure.entries[0].graph, expected);
    // witness: the mixed product has a period-two orbit
    let mixed = b.parse_word("ABabCDcd").unwrap();
    assert_eq!(config.alpha.apply(&config.alpha.apply(&mixed)), mixed);
}

/// Exhaustive completeness cross-check at a longer radius than the
/// verification bounds: over the flagship group, every cyclic class of
/// length up to 5 is either conjugate into <ABab, s> or exponential,
/// while the pair <abAB>, <s> misses exactly the rotations of s ABab and
/// its inverse.
#[test]
fn flagship_structure_is_complete_at_radius_five() {
    use mtl::growth::classify_element_capped;
    use mtl::words::CyclicWord;
    let b = FreeBasis::parse("a b s").unwrap();
    let alpha = auto(&b, &["ab", "a", "s"]);
    let absorbed = SubgroupGraph::fold(
        3,
        &[b.parse_word("ABab").unwrap(), b.parse_word("s").unwrap()],
    );
    let commutator = SubgroupGraph::fold(3, &[b.parse_word("abAB").unwrap()]);
    let stable_line = SubgroupGraph::fold(3, &[b.parse_word("s").unwrap()]);

    let mut seen = std::collections::HashSet::new();
    let mut missed_by_pair: Vec<String> = Vec::new();
    for w in mtl::words::reduced_words(&[0, 1, 2], 5) {
        if !w.is_cyclically_reduced() {
            continue;
        }
        let (cw, _) = CyclicWord::from_word(&w);
        let canon = cw.canonical();
        if !seen.insert(canon.clone()) {
            continue;
        }
        let in_absorbed = absorbed.conjugate_into(&canon).is_some();
        let in_pair = commutator.conjugate_into(&canon).is_some()
            || stable_line.conjugate_into(&canon).is_some();
        if in_absorbed && in_pair {
            continue;
        }
        let report = classify_element_capped(&alpha, &canon, 40, Metric::Conjugacy, 20_000);
        let exponential = report.class.is_exponential();
        // the absorbed structure is complete: nothing polynomial escapes
        assert!(
            in_absorbed || exponential,
            "class {} escapes the absorbed structure with class {}",
            b.render(&canon),
            report.class.label()
        );
        if !in_pair && !exponential {
            missed_by_pair.push(b.render(&canon));
        }
    }
    missed_by_pair.sort();
    assert_eq!(
        missed_by_pair,
        vec!["aSBAb", "abSAB", "absAB", "asBAb"],
        "the pair misses exactly the rotations of s ABab and its inverse"
    );
}

/// When the peripheral structure is the whole group, its suspension is
/// the whole mapping torus and the report says so.
#[test]
fn whole_group_structure_suspends_to_the_whole_torus() {
    let text = "group a s\nauto\na -> a\ns -> sA\nend\n\
split hnn factor=a stable=s\nbounds horizon=40 radius=6 maxExp=4 maxConj=4 seed=0\n";
    let config = parse_config(text).unwrap();
    let analysis = analyze(&config, &[0, 1]).unwrap();
    assert!(analysis.structure.entries[0].graph.is_whole_group());
    let outcome = run(CliCommand::Suspend, &config, &RunOptions::default()).unwrap();
    assert_eq!(outcome.exit_code, 0);
    let json = &outcome
        .json
        .iter()
        .find(|(n, _)| n == "suspend.json")
        .unwrap()
        .1;
    assert!(json.contains("\"degenerate\""), "{json}");
    // exponent 1 with an empty tail: the stable letter is t itself, so
    // the subgroup generators together with t generate the torus
    assert!(json.contains("\"exponent\": 1"));
    assert!(json.contains("\"stable_tail\": \"\""));
    // consistency of the recomputed pieces on the context itself
    let ctx = analysis.hnn.as_ref().unwrap();
    assert_eq!(mtl::splittings::compute_b0(ctx, &config.bounds), ctx.b0);
    assert_eq!(
        mtl::splittings::solve_k_status(ctx, config.bounds.radius),
        ctx.k_status
    );
}

/// Random valid configurations survive the emit/parse round trip
/// byte-identically. Automorphisms are built from random elementary
/// Nielsen moves, so validation always succeeds.
#[test]
fn random_configs_round_trip() {
    use mtl::config::{emit_config, parse_config};
    let mut rng = SplitMix64::new(7);
    let alphabets = ["a b", "a b c", "a b s", "p q r z"];
    for trial in 0..60 {
        let basis = FreeBasis::parse(alphabets[rng.below(alphabets.len())]).unwrap();
        let n = basis.len();
        let mut images: Vec<Word> = (0..n).map(Word::generator).collect();
        for _ in 0..rng.below(8) {
            match rng.below(3) {
                0 => {
                    // x -> x y^(+-1)
                    let x = rng.below(n);
                    let y = rng.below(n);
                    if x != y {
                        let factor = if rng.below(2) == 0 {
                            images[y].clone()
                        } else {
                            images[y].inverse()
                        };
                        images[x] = images[x].concat(&factor);
                    }
                }
                1 => {
                    let x = rng.below(n);
                    images[x] = images[x].inverse();
                }
                _ => {
                    let (x, y) = (rng.below(n), rng.below(n));
                    images.swap(x, y);
                }
            }
        }
        let alpha =
            Automorphism::validate(basis.clone(), images).expect("Nielsen moves preserve validity");
        let mut text = String::new();
        let letters: Vec<String> = basis.names().iter().map(|c| c.to_string()).collect();
        text.push_str(&format!("group {}\n", letters.join(" ")));
        text.push_str("auto\n");
        for g in 0..n {
            text.push_str(&format!(
                "{} -> {}\n",
                basis.name(g),
                basis.render(alpha.image_of(g))
            ));
        }
        text.push_str("end\n");
        for i in 0..rng.below(3) {
            let len = 1 + rng.below(5);
            let gens: Vec<usize> = (0..n).collect();
            let w = random_reduced_word(&mut rng, &gens, len);
            text.push_str(&format!("element e{i} = {}\n", basis.render(&w)));
        }
        let config = parse_config(&text).unwrap_or_else(|e| panic!("trial {trial}: {e}\n{text}"));
        let emitted = emit_config(&config);
        let reparsed = parse_config(&emitted).unwrap();
        assert_eq!(emit_config(&reparsed), emitted, "trial {trial}");
        assert_eq!(reparsed.alpha, config.alpha);
    }
}

/// Reports are byte-identical across runs, and the exit code contract
/// holds.
#[test]
fn reports_are_deterministic_and_exit_codes_honest() {
    let text = "group a b s\nauto\na -> ab\nb -> a\ns -> s\nend\n\
split hnn factor=a,b stable=s\nsubgroup P = abAB\nelement x = abAB\nelement y = a\n";
    let config = parse_config(text).unwrap();
    let opts = RunOptions::default();
    for command in [
        CliCommand::Growth,
        CliCommand::Peripheral,
        CliCommand::Suspend,
        CliCommand::Verify,
    ] {
        let first = run(command, &config, &opts).unwrap();
        let second = run(command, &config, &opts).unwrap();
        assert_eq!(first.json, second.json);
        assert_eq!(
            first.exit_code, 0,
            "command {command:?} failed: {:?}",
            first.summary
        );
    }
    // a failing verification drives a nonzero exit
    let bad = parse_config("group a b\nsubgroup P = a\n").unwrap();
    let outcome = run(CliCommand::Verify, &bad, &opts).unwrap();
    assert_eq!(outcome.exit_code, 1);
    let outcome = run(CliCommand::Peripheral, &bad, &opts).unwrap();
    assert_eq!(outcome.exit_code, 1);
}
