//! Splittings of a free group preserved by an automorphism, and the
//! peripheral structure of maximal polynomially growing subgroups built
//! from them.
//!
//! For an HNN-type splitting `G = H * <s>` with alpha(H) = H and
//! alpha(s) = s h^-1, the context carries: the maximal polynomially
//! growing subgroup A0 of H fixed by alpha, its twisted companion B0
//! (fixed by conjugation by th in the mapping torus, equivalently
//! alpha(B0) = h B0 h^-1), and the solution set K of the membership
//! equation k^-1 h^-1 alpha(k) in A0. Elements split into syllables
//! s a s^-1, s a, a s^-1, a (kinds 1 to 4) whose admissibility decides
//! polynomial growth.
//!
//! The A0 and B0 searches are bounded and radius-stamped: they enumerate
//! non-exponential seed elements up to the radius, close them under the
//! (twisted) automorphism, and verify the result. A search result is an
//! honest under-approximation, never a proof of maximality.

use crate::autos::Automorphism;
use crate::error::{Error, Result};
use crate::growth::{classify_element, classify_element_capped, subgroup_growth};
use crate::subgroups::{
    is_malnormal_family, subgroups_conjugate, MalnormalityReport, SubgroupGraph,
};
use crate::words::{letter_gen, reduced_words, CyclicWord, FreeBasis, Metric, Word};

/// Bounds shared by every bounded search and verification pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBounds {
    pub horizon: usize,
    pub radius: usize,
    pub max_exp: usize,
    pub max_conj: usize,
    pub seed: u64,
}

impl Default for SearchBounds {
    fn default() -> Self {
        SearchBounds {
            horizon: 40,
            radius: 4,
            max_exp: 4,
            max_conj: 4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KStatus {
    Found {
        k0: Word,
    },
    /// No solution with |k| <= radius. Explicitly radius-relative; not a
    /// proof that the equation has no solution at all.
    EmptyWithin {
        radius: usize,
    },
}

impl KStatus {
    pub fn is_found(&self) -> bool {
        matches!(self, KStatus::Found { .. })
    }
}

#[derive(Debug, Clone)]
pub struct HnnContext {
    pub basis: FreeBasis,
    pub h_letters: Vec<usize>,
    pub stable: usize,
    pub alpha: Automorphism,
    /// h with alpha(s) = s h^-1.
    pub h: Word,
    pub a0: SubgroupGraph,
    /// Radius stamp of the A0 search; absent when A0 was supplied.
    pub a0_radius: Option<usize>,
    pub b0: SubgroupGraph,
    pub b0_radius: Option<usize>,
    pub k_status: KStatus,
    pub k_radius: usize,
}

impl HnnContext {
    pub fn h_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.basis.len()];
        for &g in &self.h_letters {
            mask[g] = true;
        }
        mask
    }

    pub fn stable_word(&self) -> Word {
        Word::generator(self.stable)
    }
}

fn factor_mask(n: usize, letters: &[usize]) -> Vec<bool> {
    let mut mask = vec![false; n];
    for &g in letters {
        mask[g] = true;
    }
    mask
}

/// Check that alpha restricts to an automorphism of the free factor
/// spanned by `letters`.
fn check_factor_preserved(alpha: &Automorphism, letters: &[usize], what: &str) -> Result<()> {
    let n = alpha.basis().len();
    let mask = factor_mask(n, letters);
    for &g in letters {
        if !alpha.image_of(g).supported_by(&mask) {
            return Err(Error::Normalization(format!(
                "image of generator '{}' leaves the {what} factor",
                alpha.basis().name(g)
            )));
        }
    }
    let images: Vec<Word> = letters.iter().map(|&g| alpha.image_of(g).clone()).collect();
    let folded = SubgroupGraph::fold(n, &images);
    for &g in letters {
        if !folded.member(&Word::generator(g)) {
            return Err(Error::Normalization(format!(
                "restriction to the {what} factor is not surjective: generator '{}' is missing",
                alpha.basis().name(g)
            )));
        }
    }
    Ok(())
}

/// Word size budget for seed filtering: an iterate that outgrows this is
/// conclusively exponential long before the full budget would be.
const SEED_VALUE_CAP: usize = 4_000;
/// Budget for the completeness sample; reaching it from a short seed
/// within the horizon is itself conclusive exponential growth.
const COMPLETENESS_VALUE_CAP: usize = 20_000;

/// Close a subgroup under the automorphism and its inverse. Returns the
/// fixed closure, or None when the closure outgrows the budget.
fn invariant_closure(
    alpha: &Automorphism,
    alpha_inv: &Automorphism,
    mut c: SubgroupGraph,
) -> Option<SubgroupGraph> {
    const MAX_ITERS: usize = 12;
    const LENGTH_CAP: usize = 512;
    for _ in 0..MAX_ITERS {
        let fwd = alpha.image_subgroup(&c);
        let bwd = alpha_inv.image_subgroup(&c);
        if fwd == c && bwd == c {
            return Some(c);
        }
        c = c.join(&fwd).join(&bwd);
        let total: usize = c.free_basis().iter().map(|w| w.len()).sum();
        if total > LENGTH_CAP {
            return None;
        }
    }
    let fwd = alpha.image_subgroup(&c);
    if fwd == c {
        Some(c)
    } else {
        None
    }
}

/// Bounded search for the maximal subgroup of the factor that is fixed by
/// `twist` and polynomially growing. Seeds are the non-exponential
/// elements up to the radius; each seed is closed under the twist and the
/// survivors are joined greedily, re-verifying after every join.
fn find_max_fixed_poly_subgroup(
    twist: &Automorphism,
    h_letters: &[usize],
    bounds: &SearchBounds,
) -> SubgroupGraph {
    let n = twist.basis().len();
    let whole_gens: Vec<Word> = h_letters.iter().map(|&g| Word::generator(g)).collect();
    let whole = SubgroupGraph::fold(n, &whole_gens);
    if twist.image_subgroup(&whole) == whole {
        if let Ok(report) = subgroup_growth(twist, &whole, bounds.horizon) {
            if !report.class.is_exponential() && !report.class.is_inconclusive() {
                return whole;
            }
        }
    }
    let twist_inv = twist.invert();
    let mut survivors: Vec<SubgroupGraph> = Vec::new();
    let mut seen_seeds: std::collections::HashSet<SubgroupGraph> = std::collections::HashSet::new();
    for w in reduced_words(h_letters, bounds.radius) {
        let report =
            classify_element_capped(twist, &w, bounds.horizon, Metric::Conjugacy, SEED_VALUE_CAP);
        if report.class.is_exponential() || report.class.is_inconclusive() {
            continue;
        }
        // a fixed polynomial subgroup containing w also contains
        // w * twist(w); an exponential product rules the seed out before
        // the expensive closure
        let product = w.concat(&twist.apply(&w));
        if !product.is_empty() {
            let report = classify_element_capped(
                twist,
                &product,
                bounds.horizon,
                Metric::Conjugacy,
                SEED_VALUE_CAP,
            );
            if report.class.is_exponential() || report.class.is_inconclusive() {
                continue;
            }
        }
        let seed = SubgroupGraph::fold(n, &[w]);
        if !seen_seeds.insert(seed.clone()) {
            continue;
        }
        if let Some(closed) = invariant_closure(twist, &twist_inv, seed) {
            if let Ok(report) = subgroup_growth(twist, &closed, bounds.horizon) {
                if !report.class.is_exponential() && !report.class.is_inconclusive() {
                    survivors.push(closed);
                }
            }
        }
    }
    let mut acc = SubgroupGraph::trivial(n);
    for cand in survivors {
        if cand.free_basis().iter().all(|w| acc.member(w)) {
            continue;
        }
        let joined = acc.join(&cand);
        if let Some(closed) = invariant_closure(twist, &twist_inv, joined) {
            if let Ok(report) = subgroup_growth(twist, &closed, bounds.horizon) {
                if !report.class.is_exponential() && !report.class.is_inconclusive() {
                    acc = closed;
                }
            }
        }
    }
    acc
}

/// k' = k^-1 h^-1 alpha(k).
pub fn k_prime(ctx: &HnnContext, k: &Word) -> Result<Word> {
    if !k.supported_by(&ctx.h_mask()) {
        return Err(Error::Domain("k is not an element of the factor".into()));
    }
    Ok(k.inverse()
        .concat(&ctx.h.inverse())
        .concat(&ctx.alpha.apply(k)))
}

fn solve_k(
    alpha: &Automorphism,
    h: &Word,
    a0: &SubgroupGraph,
    h_letters: &[usize],
    radius: usize,
) -> KStatus {
    let check = |k: &Word| {
        let kp = k.inverse().concat(&h.inverse()).concat(&alpha.apply(k));
        a0.member(&kp)
    };
    if check(&Word::empty()) {
        return KStatus::Found { k0: Word::empty() };
    }
    for k in reduced_words(h_letters, radius) {
        if check(&k) {
            return KStatus::Found { k0: k };
        }
    }
    KStatus::EmptyWithin { radius }
}

/// Re-run the bounded solution search on a resolved context.
pub fn solve_k_status(ctx: &HnnContext, radius: usize) -> KStatus {
    solve_k(&ctx.alpha, &ctx.h, &ctx.a0, &ctx.h_letters, radius)
}

/// All solutions of the membership equation with |k| <= radius, in
/// shortlex order (the identity first when it solves).
pub fn k_solutions(ctx: &HnnContext, radius: usize) -> Vec<Word> {
    let check = |k: &Word| {
        let kp = k
            .inverse()
            .concat(&ctx.h.inverse())
            .concat(&ctx.alpha.apply(k));
        ctx.a0.member(&kp)
    };
    let mut out = Vec::new();
    if check(&Word::empty()) {
        out.push(Word::empty());
    }
    for k in reduced_words(&ctx.h_letters, radius) {
        if check(&k) {
            out.push(k);
        }
    }
    out
}

/// Verify that the solution set within the radius is exactly one left
/// coset of A0, namely k0 * A0.
pub fn verify_k_coset(ctx: &HnnContext, radius: usize) -> Result<usize> {
    let solutions = k_solutions(ctx, radius);
    match &ctx.k_status {
        KStatus::EmptyWithin { .. } => {
            if solutions.is_empty() {
                Ok(0)
            } else {
                Err(Error::Inconsistency(
                    "solutions appeared below a radius that reported empty".into(),
                ))
            }
        }
        KStatus::Found { k0 } => {
            for k in &solutions {
                if !ctx.a0.member(&k0.inverse().concat(k)) {
                    return Err(Error::Inconsistency(format!(
                        "solution {} falls outside the coset of the least solution",
                        ctx.basis.render(k)
                    )));
                }
            }
            Ok(solutions.len())
        }
    }
}

pub fn build_hnn_context(
    basis: &FreeBasis,
    h_letters: &[usize],
    stable: usize,
    alpha: &Automorphism,
    a0_override: Option<SubgroupGraph>,
    bounds: &SearchBounds,
) -> Result<HnnContext> {
    let n = basis.len();
    if h_letters.is_empty() {
        return Err(Error::Normalization("empty factor".into()));
    }
    if h_letters.contains(&stable) {
        return Err(Error::Normalization(
            "stable letter lies in the factor".into(),
        ));
    }
    check_factor_preserved(alpha, h_letters, "HNN")?;
    let mask = factor_mask(n, h_letters);

    // alpha(s) must read s h^-1 with h in the factor
    let s_image = alpha.image_of(stable);
    let first = s_image.letters().first().copied();
    if first != Some((stable + 1) as i32) {
        return Err(Error::Normalization(
            "image of the stable letter does not start with the stable letter".into(),
        ));
    }
    let rest = Word::reduce(s_image.letters()[1..].to_vec());
    if !rest.supported_by(&mask) {
        return Err(Error::Normalization(
            "image of the stable letter is not of the form s * h^-1 with h in the factor".into(),
        ));
    }
    let h = rest.inverse();

    let (a0, a0_radius) = match a0_override {
        Some(candidate) => {
            if !candidate.free_basis().iter().all(|w| w.supported_by(&mask)) {
                return Err(Error::Verification(
                    "supplied A0 is not inside the factor".into(),
                ));
            }
            if alpha.image_subgroup(&candidate) != candidate {
                return Err(Error::Verification("supplied A0 is not invariant".into()));
            }
            let report = subgroup_growth(alpha, &candidate, bounds.horizon)?;
            if report.class.is_exponential() || report.class.is_inconclusive() {
                return Err(Error::Verification(
                    "supplied A0 has an exponentially growing generator".into(),
                ));
            }
            (candidate, None)
        }
        None => (
            find_max_fixed_poly_subgroup(alpha, h_letters, bounds),
            Some(bounds.radius),
        ),
    };

    let k_status = solve_k(alpha, &h, &a0, h_letters, bounds.radius);

    let (b0, b0_radius) = match &k_status {
        KStatus::Found { k0 } => {
            let gens: Vec<Word> = a0
                .free_basis()
                .iter()
                .map(|x| x.conjugated(&k0.inverse()))
                .collect();
            let b0 = SubgroupGraph::fold(n, &gens);
            (b0, None)
        }
        KStatus::EmptyWithin { .. } => {
            let beta = alpha.postconjugated(&h);
            let b0 = find_max_fixed_poly_subgroup(&beta, h_letters, bounds);
            (b0, Some(bounds.radius))
        }
    };
    // orientation check, membership both ways: alpha(B0) = h B0 h^-1
    let image = alpha.image_subgroup(&b0);
    let twisted = b0.conjugated(&h.inverse());
    if image != twisted {
        return Err(Error::Inconsistency(
            "B0 fails its defining conjugation relation".into(),
        ));
    }

    Ok(HnnContext {
        basis: basis.clone(),
        h_letters: h_letters.to_vec(),
        stable,
        alpha: alpha.clone(),
        h,
        a0,
        a0_radius,
        b0,
        b0_radius,
        k_status,
        k_radius: bounds.radius,
    })
}

/// Recompute B0 from a resolved context (the corollary route when K was
/// solved, the twisted bounded search otherwise).
pub fn compute_b0(ctx: &HnnContext, bounds: &SearchBounds) -> SubgroupGraph {
    match &ctx.k_status {
        KStatus::Found { k0 } => {
            let gens: Vec<Word> = ctx
                .a0
                .free_basis()
                .iter()
                .map(|x| x.conjugated(&k0.inverse()))
                .collect();
            SubgroupGraph::fold(ctx.basis.len(), &gens)
        }
        KStatus::EmptyWithin { .. } => {
            let beta = ctx.alpha.postconjugated(&ctx.h);
            find_max_fixed_poly_subgroup(&beta, &ctx.h_letters, bounds)
        }
    }
}

// ---------------------------------------------------------------------------
// Syllables
// ---------------------------------------------------------------------------

/// kind 1 = s a s^-1, kind 2 = s a, kind 3 = a s^-1, kind 4 = a.
#[derive(Debug, Clone, PartialEq)]
pub struct Syllable {
    pub kind: u8,
    pub content: Word,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyllableDecomposition {
    pub syllables: Vec<Syllable>,
    /// The cyclically conjugated (and possibly inverted) word that was
    /// decomposed: normalized = conjugator^-1 * g^(+-1) * conjugator.
    pub normalized: Word,
    pub conjugator: Word,
    pub inverted: bool,
}

/// Elements of the factor and powers of the stable letter are routed to
/// their own analyses rather than forced through syllables.
#[derive(Debug, Clone, PartialEq)]
pub enum DecomposeOutcome {
    InFactor { core: Word, conjugator: Word },
    StablePower { exponent: i64, conjugator: Word },
    Syllables(SyllableDecomposition),
}

pub fn syllable_decompose(ctx: &HnnContext, g: &Word) -> DecomposeOutcome {
    let mask = ctx.h_mask();
    let s_pos = (ctx.stable + 1) as i32;
    let (core, d1) = g.cyclic_reduce();
    if core.supported_by(&mask) {
        return DecomposeOutcome::InFactor {
            core,
            conjugator: d1,
        };
    }
    if core.letters().iter().all(|&l| letter_gen(l) == ctx.stable) {
        let exponent: i64 = core
            .letters()
            .iter()
            .map(|&l| if l > 0 { 1 } else { -1 })
            .sum();
        return DecomposeOutcome::StablePower {
            exponent,
            conjugator: d1,
        };
    }

    let in_normal_position = |w: &Word| -> bool {
        w.letters().first() == Some(&s_pos)
            && w.letters()
                .last()
                .is_some_and(|&l| letter_gen(l) != ctx.stable)
    };
    let try_rotations = |c0: &Word| -> Option<(Word, usize)> {
        let ls = c0.letters();
        let len = ls.len();
        let mut best: Option<(Word, usize)> = None;
        for r in 0..len {
            if ls[r] != s_pos {
                continue;
            }
            let prev = ls[(r + len - 1) % len];
            if letter_gen(prev) == ctx.stable {
                continue;
            }
            let mut rotated = ls[r..].to_vec();
            rotated.extend_from_slice(&ls[..r]);
            let rotated = Word::reduce(rotated);
            if best
                .as_ref()
                .is_none_or(|(b, _)| Word::shortlex_cmp(&rotated, b) == std::cmp::Ordering::Less)
            {
                best = Some((rotated, r));
            }
        }
        best
    };

    // a word handed over in normal position is decomposed as written;
    // otherwise rotate (and possibly invert) into the least normal
    // position
    let (normalized, conjugator, inverted) = if d1.is_empty() && in_normal_position(&core) {
        (core, Word::empty(), false)
    } else {
        match try_rotations(&core) {
            Some((rot, r)) => {
                let prefix = Word::reduce(core.letters()[..r].to_vec());
                (rot, d1.concat(&prefix), false)
            }
            None => {
                let c0 = core.inverse();
                let (rot, r) = try_rotations(&c0)
                    .expect("a cyclic word with both letter kinds admits a normal position");
                let prefix = Word::reduce(c0.letters()[..r].to_vec());
                (rot, d1.concat(&prefix), true)
            }
        }
    };

    // parse: at an s-first position the lookahead after the content
    // decides kind 1 (closing s^-1) against kind 2; at a content-first
    // position it decides kind 3 against kind 4
    let ls = normalized.letters();
    let mut syllables = Vec::new();
    let mut i = 0;
    let mut s_first = true;
    while i < ls.len() {
        if s_first {
            debug_assert_eq!(ls[i], s_pos);
            i += 1;
            let start = i;
            while i < ls.len() && letter_gen(ls[i]) != ctx.stable {
                i += 1;
            }
            let content = Word::reduce(ls[start..i].to_vec());
            if i < ls.len() && ls[i] == -s_pos {
                i += 1;
                syllables.push(Syllable { kind: 1, content });
                s_first = false;
            } else {
                syllables.push(Syllable { kind: 2, content });
                s_first = true;
            }
        } else {
            let start = i;
            while i < ls.len() && letter_gen(ls[i]) != ctx.stable {
                i += 1;
            }
            let content = Word::reduce(ls[start..i].to_vec());
            if i < ls.len() && ls[i] == -s_pos {
                i += 1;
                syllables.push(Syllable { kind: 3, content });
                s_first = false;
            } else {
                debug_assert!(!content.is_empty());
                syllables.push(Syllable { kind: 4, content });
                s_first = true;
            }
        }
    }
    debug_assert_eq!(reassemble(&syllables, ctx.stable), normalized);

    DecomposeOutcome::Syllables(SyllableDecomposition {
        syllables,
        normalized,
        conjugator,
        inverted,
    })
}

/// Concatenation of the syllables as written.
pub fn reassemble(syllables: &[Syllable], stable: usize) -> Word {
    let s = Word::generator(stable);
    let mut acc = Word::empty();
    for syl in syllables {
        let piece = match syl.kind {
            1 => s.concat(&syl.content).concat(&s.inverse()),
            2 => s.concat(&syl.content),
            3 => syl.content.concat(&s.inverse()),
            4 => syl.content.clone(),
            _ => unreachable!("syllable kinds are 1..=4"),
        };
        acc = acc.concat(&piece);
    }
    acc
}

/// Admissibility: kind 1 needs content in B0; kind 2 needs content in
/// k0 * A0; kind 3 needs content in A0 * k0^-1; kind 4 needs content in
/// A0. Kinds 2 and 3 are never admissible while K is unresolved.
pub fn is_admissible(ctx: &HnnContext, syl: &Syllable) -> bool {
    match syl.kind {
        1 => ctx.b0.member(&syl.content),
        2 => match &ctx.k_status {
            KStatus::Found { k0 } => ctx.a0.member(&k0.inverse().concat(&syl.content)),
            KStatus::EmptyWithin { .. } => false,
        },
        3 => match &ctx.k_status {
            KStatus::Found { k0 } => ctx.a0.member(&syl.content.concat(k0)),
            KStatus::EmptyWithin { .. } => false,
        },
        4 => ctx.a0.member(&syl.content),
        _ => unreachable!("syllable kinds are 1..=4"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyVerdict {
    pub poly: bool,
    pub evidence: String,
}

/// Does `g` grow polynomially in conjugacy length? Factor elements are
/// delegated to the factor's peripheral structure, stable powers to the
/// membership of h in A0, and everything else to syllable admissibility.
pub fn is_polynomial_element(
    ctx: &HnnContext,
    h_structure: &PeripheralStructure,
    g: &Word,
) -> PolyVerdict {
    match syllable_decompose(ctx, g) {
        DecomposeOutcome::InFactor { core, .. } => {
            if core.is_empty() {
                return PolyVerdict {
                    poly: true,
                    evidence: "identity element".into(),
                };
            }
            for (idx, entry) in h_structure.entries.iter().enumerate() {
                if entry.graph.conjugate_into(&core).is_some() {
                    return PolyVerdict {
                        poly: true,
                        evidence: format!("factor element conjugate into entry {idx}"),
                    };
                }
            }
            PolyVerdict {
                poly: false,
                evidence: "factor element not conjugate into any peripheral entry".into(),
            }
        }
        DecomposeOutcome::StablePower { exponent, .. } => {
            if ctx.a0.member(&ctx.h) {
                PolyVerdict {
                    poly: true,
                    evidence: format!("stable power s^{exponent} with h in A0"),
                }
            } else {
                PolyVerdict {
                    poly: false,
                    evidence: format!("stable power s^{exponent} with h outside A0"),
                }
            }
        }
        DecomposeOutcome::Syllables(dec) => {
            for (idx, syl) in dec.syllables.iter().enumerate() {
                if !is_admissible(ctx, syl) {
                    return PolyVerdict {
                        poly: false,
                        evidence: format!("syllable {idx} of kind {} is not admissible", syl.kind),
                    };
                }
            }
            PolyVerdict {
                poly: true,
                evidence: format!("all {} syllables admissible", dec.syllables.len()),
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Peripheral structures
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct StructureEntry {
    pub name: Option<String>,
    pub graph: SubgroupGraph,
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwinningReport {
    pub max_exp: usize,
    pub max_conj: usize,
    /// (i, j, exponent, conjugator) for the first twinned pair, if any.
    pub violation: Option<(usize, usize, usize, Word)>,
}

#[derive(Debug, Clone)]
pub struct PeripheralStructure {
    pub entries: Vec<StructureEntry>,
    pub malnormality: MalnormalityReport,
    pub twinning: TwinningReport,
}

impl PeripheralStructure {
    pub fn graphs(&self) -> Vec<&SubgroupGraph> {
        self.entries.iter().map(|e| &e.graph).collect()
    }
}

/// A conjugate representative of the subgroup fixed by the n-th power:
/// the shortlex-least x with alpha^n(G^x) = G^x, within the bound.
pub fn preserved_conjugate_at(
    g: &SubgroupGraph,
    alpha: &Automorphism,
    n: usize,
    max_conj: usize,
) -> Option<Word> {
    let all_gens: Vec<usize> = (0..alpha.basis().len()).collect();
    let mut conjugators = vec![Word::empty()];
    conjugators.extend(reduced_words(&all_gens, max_conj));
    for x in conjugators {
        let rep = g.conjugated(&x);
        if alpha.power_image_subgroup(&rep, n as u64) == rep {
            return Some(x);
        }
    }
    None
}

/// Twinning at the level of conjugacy classes, within bounds. Two
/// mechanisms are checked: a common power fixing conjugate
/// representatives of both classes exactly, and a single conjugator
/// carrying both given representatives simultaneously.
pub fn twinned_classes(
    a: &SubgroupGraph,
    b: &SubgroupGraph,
    alpha: &Automorphism,
    max_exp: usize,
    max_conj: usize,
) -> Option<(usize, Word)> {
    for n in 1..=max_exp {
        if preserved_conjugate_at(a, alpha, n, max_conj).is_some()
            && preserved_conjugate_at(b, alpha, n, max_conj).is_some()
        {
            return Some((n, Word::empty()));
        }
    }
    twinned(a, b, alpha, max_exp, max_conj)
}

/// The least (exponent, shortlex conjugator) with
/// alpha^n(A) = g^-1 A g and alpha^n(B) = g^-1 B g simultaneously.
pub fn twinned(
    a: &SubgroupGraph,
    b: &SubgroupGraph,
    alpha: &Automorphism,
    max_exp: usize,
    max_conj: usize,
) -> Option<(usize, Word)> {
    let all_gens: Vec<usize> = (0..alpha.basis().len()).collect();
    let mut conjugators = vec![Word::empty()];
    conjugators.extend(reduced_words(&all_gens, max_conj));
    let pre: Vec<(Word, SubgroupGraph, SubgroupGraph)> = conjugators
        .into_iter()
        .map(|g| {
            let ag = a.conjugated(&g);
            let bg = b.conjugated(&g);
            (g, ag, bg)
        })
        .collect();
    let mut ai = a.clone();
    let mut bi = b.clone();
    for n in 1..=max_exp {
        ai = alpha.image_subgroup(&ai);
        bi = alpha.image_subgroup(&bi);
        for (g, ag, bg) in &pre {
            if &ai == ag && &bi == bg {
                return Some((n, g.clone()));
            }
        }
    }
    None
}

/// Shared assembly: attach exact malnormality and bounded no-twinning
/// reports, failing when either is violated.
fn assemble_structure(
    alpha: &Automorphism,
    entries: Vec<StructureEntry>,
    bounds: &SearchBounds,
) -> Result<PeripheralStructure> {
    let graphs: Vec<&SubgroupGraph> = entries.iter().map(|e| &e.graph).collect();
    let malnormality = is_malnormal_family(&graphs);
    if !malnormality.malnormal {
        let w = malnormality.witness.as_ref().unwrap();
        return Err(Error::Verification(format!(
            "structure is not a malnormal family: entries {} and {} share a conjugate",
            w.i, w.j
        )));
    }
    let mut twinning = TwinningReport {
        max_exp: bounds.max_exp,
        max_conj: bounds.max_conj,
        violation: None,
    };
    'outer: for i in 0..entries.len() {
        for j in 0..entries.len() {
            if i == j {
                continue;
            }
            if let Some((n, g)) = twinned_classes(
                &entries[i].graph,
                &entries[j].graph,
                alpha,
                bounds.max_exp,
                bounds.max_conj,
            ) {
                twinning.violation = Some((i, j, n, g));
                break 'outer;
            }
        }
    }
    if let Some((i, j, n, _)) = &twinning.violation {
        return Err(Error::Verification(format!(
            "entries {i} and {j} are twinned at exponent {n}"
        )));
    }
    Ok(PeripheralStructure {
        entries,
        malnormality,
        twinning,
    })
}

/// Build a candidate structure from user-supplied subgroups, verifying
/// malnormality and no-twinning.
pub fn candidate_structure(
    alpha: &Automorphism,
    named: &[(Option<String>, SubgroupGraph)],
    bounds: &SearchBounds,
) -> Result<PeripheralStructure> {
    let entries = named
        .iter()
        .map(|(name, graph)| StructureEntry {
            name: name.clone(),
            graph: graph.clone(),
            provenance: "candidate".into(),
        })
        .collect();
    assemble_structure(alpha, entries, bounds)
}

/// Peripheral structure of the HNN group from the factor's structure:
/// the factor entries minus the class of A0, plus the single new entry
/// <A0, s k0> when K was solved, or A0 * (s B0 s^-1) when it was not.
pub fn hnn_peripheral_structure(
    ctx: &HnnContext,
    h_structure: &PeripheralStructure,
    bounds: &SearchBounds,
) -> Result<PeripheralStructure> {
    let n = ctx.basis.len();
    let mut entries: Vec<StructureEntry> = Vec::new();
    for e in &h_structure.entries {
        if subgroups_conjugate(&e.graph, &ctx.a0).is_none() {
            entries.push(StructureEntry {
                name: e.name.clone(),
                graph: e.graph.clone(),
                provenance: "factor".into(),
            });
        }
    }
    let s = ctx.stable_word();
    let mut gens = ctx.a0.free_basis();
    let provenance = match &ctx.k_status {
        KStatus::Found { k0 } => {
            gens.push(s.concat(k0));
            "hnn-k-solved"
        }
        KStatus::EmptyWithin { .. } => {
            for b in ctx.b0.free_basis() {
                gens.push(s.concat(&b).concat(&s.inverse()));
            }
            "hnn-k-empty"
        }
    };
    let new_graph = SubgroupGraph::fold(n, &gens);
    if !new_graph.is_trivial() && !entries.iter().any(|e| e.graph == new_graph) {
        entries.push(StructureEntry {
            name: None,
            graph: new_graph,
            provenance: provenance.into(),
        });
    }
    assemble_structure(&ctx.alpha, entries, bounds)
}

#[derive(Debug, Clone)]
pub struct ProductContext {
    pub basis: FreeBasis,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub alpha: Automorphism,
}

pub fn build_product_context(
    basis: &FreeBasis,
    left: &[usize],
    right: &[usize],
    alpha: &Automorphism,
) -> Result<ProductContext> {
    if left.is_empty() || right.is_empty() {
        return Err(Error::Normalization("empty factor".into()));
    }
    if left.iter().any(|g| right.contains(g)) {
        return Err(Error::Normalization("factors overlap".into()));
    }
    for (letters, other, what) in [(left, right, "left"), (right, left, "right")] {
        if let Err(e) = check_factor_preserved(alpha, letters, what) {
            // report a conjugacy witness when the factor maps onto a
            // conjugate of the other one
            let n = basis.len();
            let image_gens: Vec<Word> =
                letters.iter().map(|&g| alpha.image_of(g).clone()).collect();
            let image = SubgroupGraph::fold(n, &image_gens);
            let other_gens: Vec<Word> = other.iter().map(|&g| Word::generator(g)).collect();
            let other_graph = SubgroupGraph::fold(n, &other_gens);
            if let Some(w) = subgroups_conjugate(&image, &other_graph) {
                return Err(Error::Normalization(format!(
                    "{what} factor maps onto a conjugate of the other factor (witness {}); pass a power of the automorphism",
                    basis.render(&w)
                )));
            }
            return Err(e);
        }
    }
    Ok(ProductContext {
        basis: basis.clone(),
        left: left.to_vec(),
        right: right.to_vec(),
        alpha: alpha.clone(),
    })
}

/// Peripheral structure of a preserved free product from the two factor
/// structures: each factor entry without a twin across the product, plus
/// the join of the unique preserved pair.
pub fn product_peripheral_structure(
    ctx: &ProductContext,
    s1: &PeripheralStructure,
    s2: &PeripheralStructure,
    bounds: &SearchBounds,
) -> Result<PeripheralStructure> {
    let alpha = &ctx.alpha;
    // the preserved member of each factor, moved onto its exactly fixed
    // conjugate representative
    let mut preserved: [Option<SubgroupGraph>; 2] = [None, None];
    for (slot, s) in [(0, s1), (1, s2)] {
        for e in &s.entries {
            if let Some(x) = preserved_conjugate_at(&e.graph, alpha, 1, bounds.max_conj) {
                if preserved[slot].is_some() {
                    return Err(Error::Inconsistency(
                        "two preserved entries in one factor".into(),
                    ));
                }
                preserved[slot] = Some(e.graph.conjugated(&x));
            }
        }
    }
    let mut entries: Vec<StructureEntry> = Vec::new();
    for (mine, others, provenance) in [(s1, s2, "left-factor"), (s2, s1, "right-factor")] {
        for e in &mine.entries {
            let has_twin = others.entries.iter().any(|f| {
                twinned_classes(&e.graph, &f.graph, alpha, bounds.max_exp, bounds.max_conj)
                    .is_some()
            });
            if !has_twin {
                entries.push(StructureEntry {
                    name: e.name.clone(),
                    graph: e.graph.clone(),
                    provenance: provenance.into(),
                });
            }
        }
    }
    let n = ctx.basis.len();
    let trivial = SubgroupGraph::trivial(n);
    let a = preserved[0].as_ref().unwrap_or(&trivial);
    let b = preserved[1].as_ref().unwrap_or(&trivial);
    let pair = a.join(b);
    if !pair.is_trivial() && !entries.iter().any(|e| e.graph == pair) {
        entries.push(StructureEntry {
            name: None,
            graph: pair,
            provenance: "preserved-pair".into(),
        });
    }
    assemble_structure(alpha, entries, bounds)
}

// ---------------------------------------------------------------------------
// Structure verification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct GrowthCheckLine {
    pub entry: usize,
    pub generator: Word,
    pub class_label: String,
}

#[derive(Debug, Clone)]
pub struct CompletenessReport {
    pub sample_length: usize,
    pub checked: usize,
    pub skipped_members: usize,
    pub failures: Vec<Word>,
}

#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub malnormality: MalnormalityReport,
    pub malnormal_ok: bool,
    pub growth_lines: Vec<GrowthCheckLine>,
    pub growth_ok: bool,
    pub twinning: TwinningReport,
    pub twinning_ok: bool,
    pub completeness: CompletenessReport,
    pub completeness_ok: bool,
    pub passed: bool,
}

/// The four checks on a candidate peripheral structure: exact
/// malnormality, non-exponential generators, pairwise no-twinning within
/// bounds, and a completeness sample (every short conjugacy class not
/// meeting an entry must classify exponential). `letters` is the support
/// of the group the structure lives in; enumeration stays inside it.
pub fn verify_peripheral_structure(
    alpha: &Automorphism,
    entries: &[StructureEntry],
    letters: &[usize],
    bounds: &SearchBounds,
) -> VerificationReport {
    let graphs: Vec<&SubgroupGraph> = entries.iter().map(|e| &e.graph).collect();
    let malnormality = is_malnormal_family(&graphs);
    let malnormal_ok = malnormality.malnormal;

    let mut growth_lines = Vec::new();
    let mut growth_ok = true;
    for (i, e) in entries.iter().enumerate() {
        for gen in e.graph.free_basis() {
            let report = classify_element(alpha, &gen, bounds.horizon, Metric::Conjugacy);
            if report.class.is_exponential() || report.class.is_inconclusive() {
                growth_ok = false;
            }
            growth_lines.push(GrowthCheckLine {
                entry: i,
                generator: gen,
                class_label: report.class.label().to_string(),
            });
        }
    }

    let mut twinning = TwinningReport {
        max_exp: bounds.max_exp,
        max_conj: bounds.max_conj,
        violation: None,
    };
    'outer: for i in 0..entries.len() {
        for j in 0..entries.len() {
            if i == j {
                continue;
            }
            if let Some((n, g)) = twinned_classes(
                &entries[i].graph,
                &entries[j].graph,
                alpha,
                bounds.max_exp,
                bounds.max_conj,
            ) {
                twinning.violation = Some((i, j, n, g));
                break 'outer;
            }
        }
    }
    let twinning_ok = twinning.violation.is_none();

    let mut seen = std::collections::HashSet::new();
    let mut completeness = CompletenessReport {
        sample_length: bounds.max_conj,
        checked: 0,
        skipped_members: 0,
        failures: Vec::new(),
    };
    for w in reduced_words(letters, bounds.max_conj) {
        if !w.is_cyclically_reduced() {
            continue;
        }
        let (cw, _) = CyclicWord::from_word(&w);
        let canon = cw.canonical();
        if !seen.insert(canon.clone()) {
            continue;
        }
        if entries
            .iter()
            .any(|e| e.graph.conjugate_into(&canon).is_some())
        {
            completeness.skipped_members += 1;
            continue;
        }
        completeness.checked += 1;
        let report = classify_element_capped(
            alpha,
            &canon,
            bounds.horizon,
            Metric::Conjugacy,
            COMPLETENESS_VALUE_CAP,
        );
        if !report.class.is_exponential() {
            completeness.failures.push(canon);
        }
    }
    let completeness_ok = completeness.failures.is_empty();

    let passed = malnormal_ok && growth_ok && twinning_ok && completeness_ok;
    VerificationReport {
        malnormality,
        malnormal_ok,
        growth_lines,
        growth_ok,
        twinning,
        twinning_ok,
        completeness,
        completeness_ok,
        passed,
    }
}
