//! Classification of the growth of an element's iterated images as
//! bounded, polynomial, or exponential.
//!
//! A bounded verdict is certified by an orbit periodicity certificate;
//! the polynomial and exponential verdicts are heuristic (tail ratio test
//! and finite differences), and the report says so via `certified`.
//! Inconclusive is a first-class outcome, never silently coerced.

use crate::autos::{Automorphism, OrbitCertificate};
use crate::error::{Error, Result};
use crate::subgroups::SubgroupGraph;
use crate::words::{length, Metric, Word};

pub const DEFAULT_HORIZON: usize = 40;
/// Tail ratio threshold: exponential when the geometric mean of
/// consecutive ratios over the last half exceeds 1 + RATIO_TAU.
pub const RATIO_TAU: f64 = 0.05;
/// Iteration stops once a word outgrows this many letters; the sequence
/// is then truncated and flagged.
pub const VALUE_CAP: usize = 200_000;
pub const MAX_POLY_DEGREE: usize = 6;
/// Classification below this many data points is refused.
pub const MIN_HORIZON: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthSequence {
    pub element: Word,
    pub metric: Metric,
    /// Requested horizon; `values` may stop earlier when truncated.
    pub horizon: usize,
    pub values: Vec<usize>,
    pub truncated: bool,
}

impl GrowthSequence {
    pub fn effective_horizon(&self) -> usize {
        self.values.len() - 1
    }
}

/// `values[n]` = length of the n-th image of g, for n = 0..=horizon, cut
/// short only when the iterate outgrows `VALUE_CAP` letters.
pub fn growth_sequence(
    alpha: &Automorphism,
    g: &Word,
    horizon: usize,
    metric: Metric,
) -> GrowthSequence {
    growth_sequence_capped(alpha, g, horizon, metric, VALUE_CAP)
}

/// As `growth_sequence` with an explicit word size budget. Search loops
/// run with a small cap: an iterate that outgrows it is already
/// conclusively exponential for their purposes.
pub fn growth_sequence_capped(
    alpha: &Automorphism,
    g: &Word,
    horizon: usize,
    metric: Metric,
    cap: usize,
) -> GrowthSequence {
    let mut values = Vec::with_capacity(horizon + 1);
    let mut cur = g.clone();
    let mut truncated = false;
    for n in 0..=horizon {
        if n > 0 {
            cur = alpha.apply(&cur);
        }
        values.push(length(&cur, metric));
        if cur.len() > cap && n < horizon {
            truncated = true;
            break;
        }
    }
    GrowthSequence {
        element: g.clone(),
        metric,
        horizon,
        values,
        truncated,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GrowthClass {
    Bounded,
    Polynomial { degree: usize, residual: f64 },
    Exponential { rate: f64, residual: f64 },
    Inconclusive { reason: String },
}

impl GrowthClass {
    pub fn label(&self) -> &'static str {
        match self {
            GrowthClass::Bounded => "bounded",
            GrowthClass::Polynomial { .. } => "polynomial",
            GrowthClass::Exponential { .. } => "exponential",
            GrowthClass::Inconclusive { .. } => "inconclusive",
        }
    }

    pub fn is_exponential(&self) -> bool {
        matches!(self, GrowthClass::Exponential { .. })
    }

    pub fn is_inconclusive(&self) -> bool {
        matches!(self, GrowthClass::Inconclusive { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    pub class: GrowthClass,
    pub certificate: Option<OrbitCertificate>,
    pub certified: bool,
    pub sequence: GrowthSequence,
}

fn strictly_increasing(values: &[usize]) -> bool {
    values.windows(2).all(|w| w[1] > w[0])
}

fn values_periodic(values: &[usize], preperiod: usize, period: usize) -> bool {
    if period == 0 || values.len() <= preperiod + period {
        return false;
    }
    (preperiod..values.len() - period).all(|i| values[i] == values[i + period])
}

pub fn classify(seq: GrowthSequence, alpha: &Automorphism) -> GrowthReport {
    let values = &seq.values;
    let n = seq.effective_horizon();
    if n < MIN_HORIZON {
        return GrowthReport {
            class: GrowthClass::Inconclusive {
                reason: format!("horizon {n} below the minimum {MIN_HORIZON}"),
            },
            certificate: None,
            certified: false,
            sequence: seq,
        };
    }

    // Bounded: orbit periodicity of the conjugacy class. A strictly
    // increasing value sequence already rules out a repeat, so the scan
    // is skipped there. Under the plain word length a periodic conjugacy
    // orbit does not bound the values, so value periodicity is required
    // on top of the certificate.
    let certificate = if strictly_increasing(values) {
        None
    } else {
        alpha.orbit_period(&seq.element, n)
    };
    if let Some(cert) = &certificate {
        let value_bounded = match seq.metric {
            Metric::Word => values_periodic(values, cert.preperiod, cert.period),
            Metric::Conjugacy | Metric::Tree { .. } => true,
        };
        if value_bounded {
            return GrowthReport {
                class: GrowthClass::Bounded,
                certified: true,
                certificate,
                sequence: seq,
            };
        }
    }

    let half = n / 2;
    let tail = &values[half..];
    if tail.iter().all(|&v| v > 0) {
        let steps = (n - half) as f64;
        let log_rate = ((values[n] as f64).ln() - (values[half] as f64).ln()) / steps;
        let rate = log_rate.exp();
        if rate > 1.0 + RATIO_TAU {
            let residual = tail
                .windows(2)
                .map(|w| ((w[1] as f64).ln() - (w[0] as f64).ln() - log_rate).abs())
                .fold(0.0, f64::max);
            return GrowthReport {
                class: GrowthClass::Exponential { rate, residual },
                certificate,
                certified: false,
                sequence: seq,
            };
        }
    }

    let max_value = values.iter().copied().max().unwrap_or(0).max(1);
    let noise = 2.0 + 2.0 * (max_value as f64).log2();
    let mut diffs: Vec<i64> = tail.iter().map(|&v| v as i64).collect();
    for degree in 1..=MAX_POLY_DEGREE {
        if diffs.len() < 2 {
            break;
        }
        diffs = diffs.windows(2).map(|w| w[1] - w[0]).collect();
        let worst = diffs.iter().map(|d| d.abs()).max().unwrap_or(0) as f64;
        if worst <= noise {
            return GrowthReport {
                class: GrowthClass::Polynomial {
                    degree,
                    residual: worst,
                },
                certificate,
                certified: false,
                sequence: seq,
            };
        }
    }

    let reason = if seq.truncated {
        "sequence truncated before a conclusive ratio or difference test".to_string()
    } else {
        format!("no polynomial fit within degree {MAX_POLY_DEGREE}")
    };
    GrowthReport {
        class: GrowthClass::Inconclusive { reason },
        certificate,
        certified: false,
        sequence: seq,
    }
}

pub fn classify_element(
    alpha: &Automorphism,
    g: &Word,
    horizon: usize,
    metric: Metric,
) -> GrowthReport {
    classify(growth_sequence(alpha, g, horizon, metric), alpha)
}

pub fn classify_element_capped(
    alpha: &Automorphism,
    g: &Word,
    horizon: usize,
    metric: Metric,
    cap: usize,
) -> GrowthReport {
    classify(
        growth_sequence_capped(alpha, g, horizon, metric, cap),
        alpha,
    )
}

/// Growth of a whole invariant subgroup: the worst generator under the
/// plain word length. Word length is subadditive on products, so a
/// non-exponential verdict on every generator extends to all elements,
/// and an exponential generator is itself the witness.
pub fn subgroup_growth(
    alpha: &Automorphism,
    a: &SubgroupGraph,
    horizon: usize,
) -> Result<GrowthReport> {
    let image = alpha.image_subgroup(a);
    if &image != a {
        return Err(Error::NotInvariant(
            "subgroup is not preserved by the automorphism".into(),
        ));
    }
    let generators = if a.is_trivial() {
        vec![Word::empty()]
    } else {
        a.free_basis()
    };
    let mut worst: Option<GrowthReport> = None;
    for gen in generators {
        let report = classify_element(alpha, &gen, horizon, Metric::Word);
        let replace = match &worst {
            None => true,
            Some(prev) => severity(&report.class) > severity(&prev.class),
        };
        if replace {
            worst = Some(report);
        }
    }
    Ok(worst.expect("at least one generator inspected"))
}

fn severity(class: &GrowthClass) -> (u8, usize) {
    match class {
        GrowthClass::Bounded => (0, 0),
        GrowthClass::Polynomial { degree, .. } => (1, *degree),
        GrowthClass::Inconclusive { .. } => (2, 0),
        GrowthClass::Exponential { .. } => (3, 0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use crate::words::{random_reduced_word, FreeBasis};

    fn b2() -> FreeBasis {
        FreeBasis::parse("a b").unwrap()
    }

    fn auto(images: &[&str]) -> Automorphism {
        let b = b2();
        let ws: Vec<Word> = images.iter().map(|s| b.parse_word(s).unwrap()).collect();
        Automorphism::validate(b, ws).unwrap()
    }

    #[test]
    fn sequence_examples() {
        let alpha = auto(&["a", "ba"]);
        let seq = growth_sequence(&alpha, &Word::generator(1), 4, Metric::Conjugacy);
        assert_eq!(seq.values, vec![1, 2, 3, 4, 5]);

        let fib = auto(&["ab", "a"]);
        let seq = growth_sequence(&fib, &Word::generator(0), 5, Metric::Word);
        assert_eq!(seq.values, vec![1, 2, 3, 5, 8, 13]);

        let seq = growth_sequence(&fib, &Word::empty(), 10, Metric::Word);
        assert_eq!(seq.values, vec![0; 11]);
    }

    #[test]
    fn classify_linear_as_degree_one() {
        let alpha = auto(&["a", "ba"]);
        let report = classify_element(
            &alpha,
            &Word::generator(1),
            DEFAULT_HORIZON,
            Metric::Conjugacy,
        );
        match report.class {
            GrowthClass::Polynomial { degree, .. } => assert_eq!(degree, 1),
            other => panic!("expected polynomial, got {other:?}"),
        }
        assert!(!report.certified);
    }

    #[test]
    fn classify_commutator_as_bounded_with_period_two() {
        let fib = auto(&["ab", "a"]);
        let commutator = b2().parse_word("abAB").unwrap();
        let report = classify_element(&fib, &commutator, 20, Metric::Conjugacy);
        assert_eq!(report.class, GrowthClass::Bounded);
        assert!(report.certified);
        let cert = report.certificate.expect("certificate");
        assert_eq!(cert.period, 2);
        assert!(cert.verify(&fib, &commutator));
    }

    #[test]
    fn classify_fibonacci_as_exponential_with_golden_rate() {
        let fib = auto(&["ab", "a"]);
        let report = classify_element(&fib, &Word::generator(0), 30, Metric::Word);
        match report.class {
            GrowthClass::Exponential { rate, .. } => {
                assert!((1.55..=1.70).contains(&rate), "rate {rate}");
            }
            other => panic!("expected exponential, got {other:?}"),
        }
    }

    #[test]
    fn word_metric_needs_value_periodicity_for_bounded() {
        // the commutator class is orbit periodic, but its plain word
        // length explodes under the conjugators
        let fib = auto(&["ab", "a"]);
        let commutator = b2().parse_word("abAB").unwrap();
        let report = classify_element(&fib, &commutator, 30, Metric::Word);
        assert!(report.class.is_exponential(), "got {:?}", report.class);
    }

    #[test]
    fn truncation_keeps_exponential_conclusive() {
        let fib = auto(&["ab", "a"]);
        let seq = growth_sequence(&fib, &Word::generator(0), 60, Metric::Word);
        assert!(seq.truncated);
        assert!(seq.values.len() < 61);
        let report = classify(seq, &fib);
        assert!(report.class.is_exponential());
    }

    #[test]
    fn short_horizon_is_inconclusive() {
        let fib = auto(&["ab", "a"]);
        let seq = growth_sequence(&fib, &Word::generator(0), 4, Metric::Word);
        let report = classify(seq, &fib);
        assert!(report.class.is_inconclusive());
    }

    #[test]
    fn conjugacy_values_never_exceed_word_values() {
        let fib = auto(&["ab", "a"]);
        let mut rng = SplitMix64::new(31);
        for _ in 0..20 {
            let len = rng.below(8);
            let g = random_reduced_word(&mut rng, &[0, 1], len);
            let w = growth_sequence(&fib, &g, 12, Metric::Word);
            let c = growth_sequence(&fib, &g, 12, Metric::Conjugacy);
            let shared = w.values.len().min(c.values.len());
            for i in 0..shared {
                assert!(c.values[i] <= w.values[i]);
            }
        }
    }

    #[test]
    fn classification_is_conjugation_invariant() {
        let fib = auto(&["ab", "a"]);
        let mut rng = SplitMix64::new(32);
        for g in [b2().parse_word("abAB").unwrap(), Word::generator(0)] {
            let base = classify_element(&fib, &g, 30, Metric::Conjugacy);
            for _ in 0..5 {
                let len = rng.below(6);
                let h = random_reduced_word(&mut rng, &[0, 1], len);
                let conj = classify_element(&fib, &g.conjugated(&h), 30, Metric::Conjugacy);
                assert_eq!(base.class.label(), conj.class.label());
            }
        }
    }

    #[test]
    fn subgroup_growth_examples() {
        // not invariant: the commutator subgroup moves to a conjugate
        let fib = auto(&["ab", "a"]);
        let c = SubgroupGraph::fold(2, &[b2().parse_word("abAB").unwrap()]);
        assert!(matches!(
            subgroup_growth(&fib, &c, 20),
            Err(Error::NotInvariant(_))
        ));

        let alpha = auto(&["a", "ba"]);
        let a = SubgroupGraph::fold(2, &[Word::generator(0)]);
        let report = subgroup_growth(&alpha, &a, DEFAULT_HORIZON).unwrap();
        assert_eq!(report.class, GrowthClass::Bounded);

        let whole = SubgroupGraph::whole_group(2);
        let report = subgroup_growth(&fib, &whole, 20).unwrap();
        assert!(report.class.is_exponential());
        assert_eq!(report.sequence.element, Word::generator(0));
    }

    #[test]
    fn product_closure_of_non_exponential_elements() {
        // under an invariant setup, products of non-exponential elements
        // stay non-exponential in word length
        let alpha = auto(&["a", "ba"]);
        let mut rng = SplitMix64::new(33);
        let pool: Vec<Word> = ["a", "b", "ab", "ba", "aab"]
            .iter()
            .map(|s| b2().parse_word(s).unwrap())
            .collect();
        for _ in 0..10 {
            let x = &pool[rng.below(pool.len())];
            let y = &pool[rng.below(pool.len())];
            let rx = classify_element(&alpha, x, DEFAULT_HORIZON, Metric::Word);
            let ry = classify_element(&alpha, y, DEFAULT_HORIZON, Metric::Word);
            assert!(!rx.class.is_exponential());
            assert!(!ry.class.is_exponential());
            let rxy = classify_element(&alpha, &x.concat(y), DEFAULT_HORIZON, Metric::Word);
            assert!(!rxy.class.is_exponential());
        }
    }
}
