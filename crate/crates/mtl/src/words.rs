//! Freely reduced and cyclically reduced words over a finite free basis,
//! with the word, conjugacy and tree length functions.
//!
//! A letter is a nonzero `i32`: `+(i+1)` is generator `i`, `-(i+1)` its
//! inverse. External syntax is one character per letter: a lowercase
//! letter is a generator, the corresponding uppercase letter its inverse,
//! and the empty string is the identity.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

pub type Letter = i32;

/// Generator index of a letter (0-based).
pub fn letter_gen(l: Letter) -> usize {
    debug_assert!(l != 0);
    (l.unsigned_abs() as usize) - 1
}

/// Sort key placing all positive generators (in basis order) before all
/// inverse letters (in basis order).
pub fn letter_key(l: Letter) -> (u8, usize) {
    if l > 0 {
        (0, letter_gen(l))
    } else {
        (1, letter_gen(l))
    }
}

/// An ordered alphabet of distinct single-character lowercase generator
/// names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreeBasis {
    names: Vec<char>,
}

impl FreeBasis {
    pub fn new(names: Vec<char>) -> Result<FreeBasis> {
        if names.is_empty() {
            return Err(Error::BadBasis("no generators".into()));
        }
        for (i, &c) in names.iter().enumerate() {
            if !c.is_ascii_lowercase() {
                return Err(Error::BadBasis(format!(
                    "generator '{c}' is not a lowercase ascii letter"
                )));
            }
            if names[..i].contains(&c) {
                return Err(Error::BadBasis(format!("duplicate generator '{c}'")));
            }
        }
        Ok(FreeBasis { names })
    }

    /// Parse a whitespace-separated list such as `"a b s"`.
    pub fn parse(text: &str) -> Result<FreeBasis> {
        let mut names = Vec::new();
        for tok in text.split_whitespace() {
            let mut chars = tok.chars();
            let c = chars
                .next()
                .ok_or_else(|| Error::BadBasis("empty token".into()))?;
            if chars.next().is_some() {
                return Err(Error::BadBasis(format!(
                    "generator name '{tok}' is not a single character"
                )));
            }
            names.push(c);
        }
        FreeBasis::new(names)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[char] {
        &self.names
    }

    pub fn name(&self, gen: usize) -> char {
        self.names[gen]
    }

    pub fn index_of(&self, name: char) -> Option<usize> {
        self.names.iter().position(|&c| c == name)
    }

    /// Extend with a fresh generator (used for the mapping torus letter).
    pub fn extended(&self, name: char) -> Result<FreeBasis> {
        let mut names = self.names.clone();
        if names.contains(&name) {
            return Err(Error::BadBasis(format!(
                "generator '{name}' already present"
            )));
        }
        names.push(name);
        FreeBasis::new(names)
    }

    fn letter_of_char(&self, c: char) -> Result<Letter> {
        let lower = c.to_ascii_lowercase();
        match self.index_of(lower) {
            Some(i) if c.is_ascii_lowercase() => Ok((i + 1) as Letter),
            Some(i) => Ok(-((i + 1) as Letter)),
            None => Err(Error::Alphabet { ch: c }),
        }
    }

    /// Parse external word syntax; the result is freely reduced.
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        let mut letters = Vec::with_capacity(text.len());
        for c in text.chars() {
            letters.push(self.letter_of_char(c)?);
        }
        Ok(Word::reduce(letters))
    }

    pub fn render_letter(&self, l: Letter) -> char {
        let c = self.names[letter_gen(l)];
        if l > 0 {
            c
        } else {
            c.to_ascii_uppercase()
        }
    }

    pub fn render(&self, w: &Word) -> String {
        w.letters().iter().map(|&l| self.render_letter(l)).collect()
    }
}

/// A freely reduced word. The reduction invariant is maintained by every
/// constructor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn empty() -> Word {
        Word {
            letters: Vec::new(),
        }
    }

    pub fn generator(gen: usize) -> Word {
        Word {
            letters: vec![(gen + 1) as Letter],
        }
    }

    /// Free reduction of an arbitrary letter sequence.
    pub fn reduce<I: IntoIterator<Item = Letter>>(letters: I) -> Word {
        let mut buf: Vec<Letter> = Vec::new();
        for l in letters {
            debug_assert!(l != 0);
            if buf.last().is_some_and(|&p| p == -l) {
                buf.pop();
            } else {
                buf.push(l);
            }
        }
        Word { letters: buf }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word {
            letters: self.letters.iter().rev().map(|&l| -l).collect(),
        }
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut buf = self.letters.clone();
        for &l in &other.letters {
            if buf.last().is_some_and(|&p| p == -l) {
                buf.pop();
            } else {
                buf.push(l);
            }
        }
        Word { letters: buf }
    }

    pub fn concat_all(parts: &[&Word]) -> Word {
        let mut acc = Word::empty();
        for p in parts {
            acc = acc.concat(p);
        }
        acc
    }

    /// The conjugate `g^-1 * self * g` (the global convention `x^g`).
    pub fn conjugated(&self, g: &Word) -> Word {
        g.inverse().concat(self).concat(g)
    }

    pub fn pow(&self, n: i64) -> Word {
        let base = if n >= 0 { self.clone() } else { self.inverse() };
        let mut acc = Word::empty();
        for _ in 0..n.unsigned_abs() {
            acc = acc.concat(&base);
        }
        acc
    }

    /// Whether every letter's generator lies in the given sub-basis mask.
    pub fn supported_by(&self, mask: &[bool]) -> bool {
        self.letters.iter().all(|&l| mask[letter_gen(l)])
    }

    /// Splits `self` as `d * core * d^-1` with `core` cyclically reduced.
    pub fn cyclic_reduce(&self) -> (Word, Word) {
        let ls = &self.letters;
        let mut i = 0;
        let mut j = ls.len();
        while j - i >= 2 && ls[i] == -ls[j - 1] {
            i += 1;
            j -= 1;
        }
        let core = Word {
            letters: ls[i..j].to_vec(),
        };
        let conj = Word {
            letters: ls[..i].to_vec(),
        };
        (core, conj)
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        match (self.letters.first(), self.letters.last()) {
            (Some(&f), Some(&l)) => f != -l,
            _ => true,
        }
    }

    /// Shortlex order: length first, then the positive-before-inverse
    /// letter order.
    pub fn shortlex_cmp(a: &Word, b: &Word) -> Ordering {
        a.len().cmp(&b.len()).then_with(|| {
            for (&x, &y) in a.letters.iter().zip(&b.letters) {
                let c = letter_key(x).cmp(&letter_key(y));
                if c != Ordering::Equal {
                    return c;
                }
            }
            Ordering::Equal
        })
    }
}

impl fmt::Display for Word {
    /// Debug rendering with generator indices; use `FreeBasis::render`
    /// for external syntax.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.letters)
    }
}

/// A cyclically reduced word together with the rotation index of its
/// lexicographically least rotation. Equality and hashing go through the
/// canonical rotation, so `CyclicWord` is a conjugacy class key.
#[derive(Debug, Clone)]
pub struct CyclicWord {
    core: Word,
    rotation: usize,
}

/// Booth's least rotation, linear time.
fn least_rotation(letters: &[Letter]) -> usize {
    let n = letters.len();
    if n <= 1 {
        return 0;
    }
    let key = |i: usize| letter_key(letters[i % n]);
    let mut failure = vec![usize::MAX; 2 * n];
    let mut k = 0usize;
    for j in 1..2 * n {
        let kj = key(j);
        let mut i = failure[j - k - 1];
        while i != usize::MAX && kj != key(k + i + 1) {
            if kj < key(k + i + 1) {
                k = j - i - 1;
            }
            i = failure[i];
        }
        if i == usize::MAX && kj != key(k) {
            if kj < key(k) {
                k = j;
            }
            failure[j - k] = usize::MAX;
        } else {
            failure[j - k] = i.wrapping_add(1);
        }
    }
    k % n
}

impl CyclicWord {
    /// Cyclic reduction plus canonical rotation. Returns the cyclic word
    /// and the conjugator `d` with `w = d * core * d^-1`.
    pub fn from_word(w: &Word) -> (CyclicWord, Word) {
        let (core, conj) = w.cyclic_reduce();
        let rotation = least_rotation(core.letters());
        (CyclicWord { core, rotation }, conj)
    }

    /// As `from_word`, but the conjugator `c` satisfies
    /// `w = c * canonical * c^-1` letter-exactly after reduction.
    pub fn from_word_canonical(w: &Word) -> (CyclicWord, Word) {
        let (cw, conj) = CyclicWord::from_word(w);
        let prefix = Word {
            letters: cw.core.letters()[..cw.rotation].to_vec(),
        };
        let full = conj.concat(&prefix);
        (cw, full)
    }

    pub fn core(&self) -> &Word {
        &self.core
    }

    pub fn rotation(&self) -> usize {
        self.rotation
    }

    pub fn len(&self) -> usize {
        self.core.len()
    }

    pub fn is_empty(&self) -> bool {
        self.core.is_empty()
    }

    /// The canonical rotation as a word.
    pub fn canonical(&self) -> Word {
        let ls = self.core.letters();
        let mut out = Vec::with_capacity(ls.len());
        out.extend_from_slice(&ls[self.rotation..]);
        out.extend_from_slice(&ls[..self.rotation]);
        Word { letters: out }
    }
}

impl PartialEq for CyclicWord {
    fn eq(&self, other: &Self) -> bool {
        self.canonical() == other.canonical()
    }
}

impl Eq for CyclicWord {}

impl std::hash::Hash for CyclicWord {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.canonical().hash(state);
    }
}

/// The three length functions. Tree length is parameterized by the stable
/// letter of a splitting with trivial edge stabilizers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Word,
    Conjugacy,
    Tree { stable: usize },
}

impl Metric {
    pub fn label(&self) -> &'static str {
        match self {
            Metric::Word => "word",
            Metric::Conjugacy => "conjugacy",
            Metric::Tree { .. } => "tree",
        }
    }
}

pub fn length(w: &Word, m: Metric) -> usize {
    match m {
        Metric::Word => w.len(),
        Metric::Conjugacy => w.cyclic_reduce().0.len(),
        Metric::Tree { stable } => {
            let (core, _) = w.cyclic_reduce();
            core.letters()
                .iter()
                .filter(|&&l| letter_gen(l) == stable)
                .count()
        }
    }
}

/// All freely reduced words of length 1..=max over the given generator
/// set, in shortlex order.
pub fn reduced_words(gens: &[usize], max_len: usize) -> Vec<Word> {
    let mut alphabet: Vec<Letter> = Vec::with_capacity(gens.len() * 2);
    for &g in gens {
        alphabet.push((g + 1) as Letter);
    }
    for &g in gens {
        alphabet.push(-((g + 1) as Letter));
    }
    alphabet.sort_by_key(|&l| letter_key(l));
    let mut out = Vec::new();
    let mut frontier: Vec<Vec<Letter>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &frontier {
            for &l in &alphabet {
                if w.last().is_some_and(|&p| p == -l) {
                    continue;
                }
                let mut v = w.clone();
                v.push(l);
                next.push(v);
            }
        }
        for v in &next {
            out.push(Word { letters: v.clone() });
        }
        frontier = next;
    }
    out
}

/// A random freely reduced word of exactly the given length (may be 0).
pub fn random_reduced_word(rng: &mut SplitMix64, gens: &[usize], len: usize) -> Word {
    let mut letters: Vec<Letter> = Vec::with_capacity(len);
    while letters.len() < len {
        let g = gens[rng.below(gens.len())];
        let l = if rng.below(2) == 0 {
            (g + 1) as Letter
        } else {
            -((g + 1) as Letter)
        };
        if letters.last().is_some_and(|&p| p == -l) {
            continue;
        }
        letters.push(l);
    }
    Word { letters }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis_ab() -> FreeBasis {
        FreeBasis::parse("a b").unwrap()
    }

    #[test]
    fn reduce_examples() {
        let b = basis_ab();
        // adjacent cancellation
        let w = Word::reduce(vec![1, 2, -2, 1]);
        assert_eq!(b.render(&w), "aa");
        // empty input
        assert_eq!(Word::reduce(vec![]), Word::empty());
        // cascade
        let w = Word::reduce(vec![-1, 1, -1]);
        assert_eq!(b.render(&w), "A");
    }

    #[test]
    fn reduce_is_idempotent() {
        let b = basis_ab();
        for text in ["abAB", "aA", "", "bbbaB"] {
            let w = b.parse_word(text).unwrap();
            assert_eq!(Word::reduce(w.letters().to_vec()), w);
        }
    }

    #[test]
    fn parse_rejects_unknown_letters() {
        let b = basis_ab();
        assert_eq!(b.parse_word("ac"), Err(Error::Alphabet { ch: 'c' }));
    }

    #[test]
    fn cyclic_reduce_examples() {
        let b = basis_ab();
        // explicit conjugate
        let w = b.parse_word("baB").unwrap();
        let (core, conj) = w.cyclic_reduce();
        assert_eq!(b.render(&core), "a");
        assert_eq!(b.render(&conj), "b");
        // already cyclically reduced
        let w = b.parse_word("abAB").unwrap();
        let (core, conj) = w.cyclic_reduce();
        assert_eq!(core, w);
        assert!(conj.is_empty());
        // the image of abAB under a->ab, b->a
        let w = b.parse_word("abaBAA").unwrap();
        let (core, conj) = w.cyclic_reduce();
        assert_eq!(b.render(&core), "baBA");
        assert_eq!(b.render(&conj), "a");
    }

    #[test]
    fn cyclic_reduce_round_trip() {
        let mut rng = SplitMix64::new(7);
        for _ in 0..200 {
            let len = rng.below(13);
            let w = random_reduced_word(&mut rng, &[0, 1], len);
            let (core, conj) = w.cyclic_reduce();
            let back = conj.concat(&core).concat(&conj.inverse());
            assert_eq!(back, w);
            assert!(core.is_cyclically_reduced());
        }
    }

    #[test]
    fn length_examples() {
        let b = FreeBasis::parse("a b s").unwrap();
        let w = b.parse_word("baB").unwrap();
        assert_eq!(length(&w, Metric::Conjugacy), 1);
        let w = b.parse_word("abAB").unwrap();
        assert_eq!(length(&w, Metric::Conjugacy), 4);
        let s = b.index_of('s').unwrap();
        assert_eq!(
            length(&b.parse_word("saS").unwrap(), Metric::Tree { stable: s }),
            0
        );
        assert_eq!(
            length(&b.parse_word("sa").unwrap(), Metric::Tree { stable: s }),
            1
        );
        assert_eq!(
            length(&b.parse_word("sasB").unwrap(), Metric::Tree { stable: s }),
            2
        );
    }

    #[test]
    fn length_inequalities() {
        let mut rng = SplitMix64::new(3);
        for _ in 0..200 {
            let len = rng.below(12);
            let w = random_reduced_word(&mut rng, &[0, 1], len);
            assert!(length(&w, Metric::Conjugacy) <= length(&w, Metric::Word));
        }
    }

    #[test]
    fn tree_length_never_exceeds_conjugacy_length() {
        let mut rng = SplitMix64::new(19);
        for _ in 0..200 {
            let len = rng.below(12);
            let w = random_reduced_word(&mut rng, &[0, 1], len);
            for stable in 0..2 {
                assert!(length(&w, Metric::Tree { stable }) <= length(&w, Metric::Conjugacy));
            }
        }
    }

    #[test]
    fn conjugacy_length_is_conjugation_invariant() {
        let mut rng = SplitMix64::new(11);
        for _ in 0..200 {
            let len = 1 + rng.below(12);
            let g = random_reduced_word(&mut rng, &[0, 1], len);
            let len = rng.below(12);
            let h = random_reduced_word(&mut rng, &[0, 1], len);
            let conj = g.conjugated(&h);
            assert_eq!(
                length(&g, Metric::Conjugacy),
                length(&conj, Metric::Conjugacy)
            );
        }
    }

    #[test]
    fn canonical_rotation_is_a_conjugacy_key() {
        let b = basis_ab();
        // conjugate words share the canonical form
        let mut rng = SplitMix64::new(5);
        for _ in 0..100 {
            let len = 1 + rng.below(8);
            let g = random_reduced_word(&mut rng, &[0, 1], len);
            let len = rng.below(6);
            let h = random_reduced_word(&mut rng, &[0, 1], len);
            let (c1, _) = CyclicWord::from_word(&g);
            let (c2, _) = CyclicWord::from_word(&g.conjugated(&h));
            assert_eq!(c1, c2);
        }
        // distinct classes get distinct keys, checked by brute-force
        // conjugator enumeration up to length 6
        let u = b.parse_word("ab").unwrap();
        let v = b.parse_word("ba").unwrap();
        let w = b.parse_word("aB").unwrap();
        let conjugate = |x: &Word, y: &Word| {
            reduced_words(&[0, 1], 6)
                .into_iter()
                .chain(std::iter::once(Word::empty()))
                .any(|c| &x.conjugated(&c) == y)
        };
        assert!(conjugate(&u, &v));
        assert_eq!(CyclicWord::from_word(&u).0, CyclicWord::from_word(&v).0);
        assert!(!conjugate(&u, &w));
        assert_ne!(CyclicWord::from_word(&u).0, CyclicWord::from_word(&w).0);
    }

    #[test]
    fn canonical_conjugator_round_trip() {
        let mut rng = SplitMix64::new(13);
        for _ in 0..200 {
            let len = rng.below(12);
            let w = random_reduced_word(&mut rng, &[0, 1], len);
            let (cw, conj) = CyclicWord::from_word_canonical(&w);
            let back = conj.concat(&cw.canonical()).concat(&conj.inverse());
            assert_eq!(back, w);
        }
    }

    #[test]
    fn identity_word_has_zero_lengths() {
        let e = Word::empty();
        assert_eq!(length(&e, Metric::Word), 0);
        assert_eq!(length(&e, Metric::Conjugacy), 0);
        assert_eq!(length(&e, Metric::Tree { stable: 0 }), 0);
        let (cw, _) = CyclicWord::from_word(&e);
        assert!(cw.is_empty());
    }

    #[test]
    fn booth_rotation_matches_naive_scan() {
        let naive = |letters: &[Letter]| -> usize {
            let n = letters.len();
            if n <= 1 {
                return 0;
            }
            let key = |i: usize| letter_key(letters[i % n]);
            let mut best = 0;
            for cand in 1..n {
                for k in 0..n {
                    match key(cand + k).cmp(&key(best + k)) {
                        Ordering::Less => {
                            best = cand;
                            break;
                        }
                        Ordering::Greater => break,
                        Ordering::Equal => {}
                    }
                }
            }
            best
        };
        let mut rng = SplitMix64::new(17);
        for _ in 0..300 {
            let len = rng.below(24);
            let w = random_reduced_word(&mut rng, &[0, 1], len);
            let (core, _) = w.cyclic_reduce();
            let booth = least_rotation(core.letters());
            let slow = naive(core.letters());
            // both indices must give the same rotated sequence
            let rot = |r: usize| -> Vec<Letter> {
                let ls = core.letters();
                let mut out = ls[r..].to_vec();
                out.extend_from_slice(&ls[..r]);
                out
            };
            assert_eq!(rot(booth), rot(slow), "word {:?}", core.letters());
        }
    }

    #[test]
    fn reduced_words_enumeration_is_shortlex() {
        let ws = reduced_words(&[0, 1], 2);
        // 4 words of length 1, 12 of length 2
        assert_eq!(ws.len(), 16);
        for pair in ws.windows(2) {
            assert_eq!(Word::shortlex_cmp(&pair[0], &pair[1]), Ordering::Less);
        }
        let b = basis_ab();
        assert_eq!(b.render(&ws[0]), "a");
        assert_eq!(b.render(&ws[1]), "b");
        assert_eq!(b.render(&ws[2]), "A");
        assert_eq!(b.render(&ws[3]), "B");
        assert_eq!(b.render(&ws[4]), "aa");
    }
}
