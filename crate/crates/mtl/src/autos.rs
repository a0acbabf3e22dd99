//! Automorphisms of free groups: validation by folding, cached iteration,
//! inversion through membership witnesses, subgroup images, and conjugacy
//! orbit periodicity certificates.

use std::collections::HashMap;
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::subgroups::SubgroupGraph;
use crate::words::{letter_gen, CyclicWord, FreeBasis, Word};

/// A validated automorphism. Surjectivity of the generator images is
/// checked by folding; free groups are Hopfian, so this certifies
/// bijectivity. The power cache is keyed by (generator, 2^k) and is
/// observationally transparent.
#[derive(Debug)]
pub struct Automorphism {
    basis: FreeBasis,
    images: Vec<Word>,
    cache: Mutex<HashMap<u32, Vec<Word>>>,
}

impl Clone for Automorphism {
    fn clone(&self) -> Self {
        Automorphism {
            basis: self.basis.clone(),
            images: self.images.clone(),
            cache: Mutex::new(self.cache.lock().unwrap().clone()),
        }
    }
}

impl PartialEq for Automorphism {
    fn eq(&self, other: &Self) -> bool {
        self.basis == other.basis && self.images == other.images
    }
}

impl Automorphism {
    pub fn validate(basis: FreeBasis, images: Vec<Word>) -> Result<Automorphism> {
        if images.len() != basis.len() {
            return Err(Error::Domain(format!(
                "{} images for {} generators",
                images.len(),
                basis.len()
            )));
        }
        let folded = SubgroupGraph::fold(basis.len(), &images);
        for gen in 0..basis.len() {
            if !folded.member(&Word::generator(gen)) {
                return Err(Error::NotAnAutomorphism {
                    witness: basis.name(gen),
                });
            }
        }
        Ok(Automorphism {
            basis,
            images,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn identity(basis: FreeBasis) -> Automorphism {
        let images = (0..basis.len()).map(Word::generator).collect();
        Automorphism {
            basis,
            images,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn basis(&self) -> &FreeBasis {
        &self.basis
    }

    pub fn images(&self) -> &[Word] {
        &self.images
    }

    pub fn image_of(&self, gen: usize) -> &Word {
        &self.images[gen]
    }

    fn apply_images(images: &[Word], w: &Word) -> Word {
        let mut buf: Vec<i32> = Vec::with_capacity(w.len());
        for &l in w.letters() {
            let img = &images[letter_gen(l)];
            if l > 0 {
                for &x in img.letters() {
                    if buf.last().is_some_and(|&p| p == -x) {
                        buf.pop();
                    } else {
                        buf.push(x);
                    }
                }
            } else {
                for &x in img.letters().iter().rev() {
                    let x = -x;
                    if buf.last().is_some_and(|&p| p == -x) {
                        buf.pop();
                    } else {
                        buf.push(x);
                    }
                }
            }
        }
        Word::reduce(buf)
    }

    pub fn apply(&self, w: &Word) -> Word {
        Self::apply_images(&self.images, w)
    }

    /// Images of the generators under the 2^k power, cached.
    fn level_images(&self, k: u32) -> Vec<Word> {
        if k == 0 {
            return self.images.clone();
        }
        if let Some(found) = self.cache.lock().unwrap().get(&k) {
            return found.clone();
        }
        let prev = self.level_images(k - 1);
        let squared: Vec<Word> = prev.iter().map(|w| Self::apply_images(&prev, w)).collect();
        self.cache.lock().unwrap().insert(k, squared.clone());
        squared
    }

    /// The freely reduced image of `w` under the n-th power, by binary
    /// splitting over the level cache.
    pub fn apply_power(&self, w: &Word, n: u64) -> Word {
        let mut cur = w.clone();
        let mut rem = n;
        let mut k = 0u32;
        while rem > 0 {
            if rem & 1 == 1 {
                let level = self.level_images(k);
                cur = Self::apply_images(&level, &cur);
            }
            rem >>= 1;
            k += 1;
        }
        cur
    }

    /// self after other: (self.compose(other))(x) = self(other(x)).
    pub fn compose(&self, other: &Automorphism) -> Result<Automorphism> {
        if self.basis != other.basis {
            return Err(Error::Domain("composing over different bases".into()));
        }
        let images = other.images.iter().map(|w| self.apply(w)).collect();
        Automorphism::validate(self.basis.clone(), images)
    }

    /// Postcompose with conjugation: x maps to g^-1 * self(x) * g.
    pub fn postconjugated(&self, g: &Word) -> Automorphism {
        let images = self.images.iter().map(|w| w.conjugated(g)).collect();
        Automorphism {
            basis: self.basis.clone(),
            images,
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// Inverse automorphism. Generator expressions are read off as
    /// membership witnesses in the annotated fold of the images, then
    /// verified by composition on every generator.
    pub fn invert(&self) -> Automorphism {
        let annotated = SubgroupGraph::fold_annotated(self.basis.len(), &self.images);
        let mut inverse_images = Vec::with_capacity(self.basis.len());
        for gen in 0..self.basis.len() {
            let witness = annotated
                .witness(&Word::generator(gen))
                .expect("validated automorphism images generate the whole group");
            inverse_images.push(witness);
        }
        let inv = Automorphism {
            basis: self.basis.clone(),
            images: inverse_images,
            cache: Mutex::new(HashMap::new()),
        };
        for gen in 0..self.basis.len() {
            let x = Word::generator(gen);
            assert_eq!(
                self.apply(&inv.apply(&x)),
                x,
                "inverse verification failed on a generator"
            );
            assert_eq!(inv.apply(&self.apply(&x)), x);
        }
        inv
    }

    /// The image subgroup: fold of the images of a free basis of `a`.
    pub fn image_subgroup(&self, a: &SubgroupGraph) -> SubgroupGraph {
        let gens: Vec<Word> = a.free_basis().iter().map(|w| self.apply(w)).collect();
        SubgroupGraph::fold(a.n_gens(), &gens)
    }

    /// Image under the n-th power.
    pub fn power_image_subgroup(&self, a: &SubgroupGraph, n: u64) -> SubgroupGraph {
        let gens: Vec<Word> = a
            .free_basis()
            .iter()
            .map(|w| self.apply_power(w, n))
            .collect();
        SubgroupGraph::fold(a.n_gens(), &gens)
    }

    /// Detects periodicity of the conjugacy class orbit of `g` within
    /// `bound` iterations, with word size capped to keep the scan finite
    /// on growing orbits.
    pub fn orbit_period(&self, g: &Word, bound: usize) -> Option<OrbitCertificate> {
        const ORBIT_WORD_CAP: usize = 100_000;
        let mut seen: HashMap<Word, usize> = HashMap::new();
        let mut canon_conj: Vec<Word> = Vec::new();
        let mut cur = g.clone();
        for n in 0..=bound {
            let (cw, conj) = CyclicWord::from_word_canonical(&cur);
            let canon = cw.canonical();
            if canon.len() > ORBIT_WORD_CAP {
                return None;
            }
            canon_conj.push(conj);
            if let Some(&first) = seen.get(&canon) {
                let preperiod = first;
                let period = n - first;
                let conjugators = canon_conj[first..=n].to_vec();
                let cert = OrbitCertificate {
                    preperiod,
                    period,
                    conjugators,
                };
                debug_assert!(cert.verify(self, g));
                return Some(cert);
            }
            seen.insert(canon, n);
            if n < bound {
                cur = self.apply(&cur);
            }
        }
        None
    }
}

/// Certificate that the conjugacy class orbit of an element is eventually
/// periodic: the canonical cyclic forms at `preperiod` and
/// `preperiod + period` coincide, which pins the whole tail.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitCertificate {
    pub preperiod: usize,
    pub period: usize,
    /// `conjugators[i]` carries the iterate preperiod + i onto its
    /// canonical cyclic form:
    /// `iterate = conjugators[i] * canonical * conjugators[i]^-1`.
    pub conjugators: Vec<Word>,
}

impl OrbitCertificate {
    /// The conjugator h with
    /// `iterate(preperiod + period) = h * iterate(preperiod) * h^-1`.
    pub fn closing_conjugator(&self) -> Word {
        let first = &self.conjugators[0];
        let last = &self.conjugators[self.period];
        last.concat(&first.inverse())
    }

    pub fn verify(&self, alpha: &Automorphism, g: &Word) -> bool {
        let w1 = alpha.apply_power(g, self.preperiod as u64);
        let w2 = alpha.apply_power(g, (self.preperiod + self.period) as u64);
        let (c1, _) = CyclicWord::from_word(&w1);
        let (c2, _) = CyclicWord::from_word(&w2);
        if c1 != c2 {
            return false;
        }
        let h = self.closing_conjugator();
        w2 == h.concat(&w1).concat(&h.inverse())
    }
}
