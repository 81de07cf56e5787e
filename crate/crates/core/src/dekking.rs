//! Erasure and image constructions.
//!
//! Given a morphism `g` with an infinite fixpoint `g^ω(a)`, these build new
//! morphic systems for `erase_Γ(g^ω(a))` ([`erasure_system`]) and for
//! `h(g^ω(a))` with a non-erasing `h` ([`image_system`]). The two combine
//! into [`morphic_image_pipeline`], which handles arbitrary morphic images.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::engine::{limit_shape, Caps, EngineError, LimitShape, MorphicSystem};
use crate::word::{Alphabet, Coding, Morphism, Symbol, Word, WordError};

/// Default bound on the exponent searched by [`minimal_respecting_power`].
pub const RESPECT_CAP: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DekkingError {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("no power g^r with r <= {cap} respects the erased letters")]
    RespectCapExceeded { cap: usize },
    #[error("blocks of {0:?} are undefined: only erased letters remain")]
    UndefinedBlocks(Word),
    #[error("the erased sequence is the finite word {0:?}")]
    FiniteErasure(Word),
    #[error("the image morphism erases `{0}`")]
    ErasingImage(Symbol),
    #[error("the morphism erases every letter")]
    AllErased,
    #[error("generated letter name `{0}` is ambiguous")]
    NameCollision(Symbol),
    #[error("`{0}` is not a letter of the alphabet")]
    NotInAlphabet(Symbol),
    #[error("alphabets do not match")]
    AlphabetMismatch,
}

// ---------------------------------------------------------------------------
// letter sets

type Bits = Vec<u64>;

fn bits_empty(n: usize) -> Bits {
    alloc::vec![0; n.div_ceil(64).max(1)]
}

fn bit_set(b: &mut Bits, i: usize) {
    b[i / 64] |= 1 << (i % 64);
}

fn bit_get(b: &Bits, i: usize) -> bool {
    b[i / 64] >> (i % 64) & 1 == 1
}

fn bits_union(a: &mut Bits, b: &Bits) {
    for (x, y) in a.iter_mut().zip(b) {
        *x |= y;
    }
}

fn bits_subset(a: &Bits, b: &Bits) -> bool {
    a.iter().zip(b).all(|(x, y)| x & !y == 0)
}

fn bits_ones(b: &Bits, n: usize) -> impl Iterator<Item = usize> + '_ {
    (0..n).filter(move |&i| bit_get(b, i))
}

/// For each letter, the set of letters of its image.
#[derive(Clone)]
struct SetMap {
    n: usize,
    sets: Vec<Bits>,
}

impl SetMap {
    fn of(f: &Morphism) -> SetMap {
        let n = f.source().len();
        let sets = (0..n)
            .map(|i| {
                let mut b = bits_empty(n);
                for s in f.image_at(i) {
                    bit_set(&mut b, f.source().index_of(s).expect("endomorphism"));
                }
                b
            })
            .collect();
        SetMap { n, sets }
    }

    fn image(&self, s: &Bits) -> Bits {
        let mut out = bits_empty(self.n);
        for i in bits_ones(s, self.n) {
            bits_union(&mut out, &self.sets[i]);
        }
        out
    }

    /// The set map of the composite `self ∘ inner`.
    fn after(&self, inner: &SetMap) -> SetMap {
        SetMap {
            n: self.n,
            sets: inner.sets.iter().map(|s| self.image(s)).collect(),
        }
    }

    /// `(transient, cycle)` of `S_0 = {a}`, `S_{n+1} = image(S_n)`.
    fn orbit(&self, a: usize) -> (Vec<Bits>, Vec<Bits>) {
        let mut seq = Vec::new();
        let mut seen: BTreeMap<Bits, usize> = BTreeMap::new();
        let mut cur = bits_empty(self.n);
        bit_set(&mut cur, a);
        loop {
            if let Some(&i) = seen.get(&cur) {
                let cycle = seq.split_off(i);
                return (seq, cycle);
            }
            seen.insert(cur.clone(), seq.len());
            let next = self.image(&cur);
            seq.push(cur);
            cur = next;
        }
    }
}

fn to_bits(alpha: &Alphabet, set: &BTreeSet<Symbol>) -> Result<Bits, DekkingError> {
    let mut b = bits_empty(alpha.len());
    for s in set {
        let i = alpha
            .index_of(s)
            .ok_or_else(|| DekkingError::NotInAlphabet(s.clone()))?;
        bit_set(&mut b, i);
    }
    Ok(b)
}

fn from_bits(alpha: &Alphabet, b: &Bits) -> BTreeSet<Symbol> {
    bits_ones(b, alpha.len())
        .map(|i| alpha.symbol(i).clone())
        .collect()
}

fn require_endo(f: &Morphism) -> Result<(), DekkingError> {
    if f.is_endomorphism() {
        Ok(())
    } else {
        Err(EngineError::NotEndomorphism.into())
    }
}

/// Letter sets of `f^n(a)` for `n = 0, 1, ...` as `(transient, cycle)`.
#[allow(clippy::type_complexity)]
pub fn letter_set_orbit(
    f: &Morphism,
    a: &Symbol,
) -> Result<(Vec<BTreeSet<Symbol>>, Vec<BTreeSet<Symbol>>), DekkingError> {
    require_endo(f)?;
    let ai = f
        .source()
        .index_of(a)
        .ok_or_else(|| DekkingError::NotInAlphabet(a.clone()))?;
    let (t, c) = SetMap::of(f).orbit(ai);
    let conv = |v: Vec<Bits>| v.iter().map(|b| from_bits(f.source(), b)).collect();
    Ok((conv(t), conv(c)))
}

// ---------------------------------------------------------------------------
// classification

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LetterClass {
    Dead,
    NearDead,
    Resilient,
    Resurrecting,
    Unclassified,
}

fn classify_map(map: &SetMap, gamma: &Bits) -> Vec<LetterClass> {
    let n = map.n;
    let orbits: Vec<(Vec<Bits>, Vec<Bits>)> = (0..n).map(|a| map.orbit(a)).collect();
    // the sets S_n with n > 0
    let later = |(t, c): &(Vec<Bits>, Vec<Bits>)| -> Vec<Bits> {
        if t.is_empty() {
            c.clone()
        } else {
            t[1..].iter().chain(c.iter()).cloned().collect()
        }
    };
    let all = |(t, c): &(Vec<Bits>, Vec<Bits>)| -> Vec<Bits> { t.iter().chain(c).cloned().collect() };

    let mut dead = bits_empty(n);
    for (a, orbit) in orbits.iter().enumerate() {
        if all(orbit).iter().all(|s| bits_subset(s, gamma)) {
            bit_set(&mut dead, a);
        }
    }
    (0..n)
        .map(|a| {
            let in_gamma = bit_get(gamma, a);
            let escapes = |s: &Bits| !bits_subset(s, gamma);
            if bit_get(&dead, a) {
                LetterClass::Dead
            } else if !in_gamma && later(&orbits[a]).iter().all(|s| bits_subset(s, &dead)) {
                LetterClass::NearDead
            } else if all(&orbits[a]).iter().all(escapes) {
                LetterClass::Resilient
            } else if in_gamma && later(&orbits[a]).iter().all(escapes) {
                LetterClass::Resurrecting
            } else {
                LetterClass::Unclassified
            }
        })
        .collect()
}

/// Classes of all letters with respect to `f` and `gamma`.
pub fn classify_letters(
    f: &Morphism,
    gamma: &BTreeSet<Symbol>,
) -> Result<BTreeMap<Symbol, LetterClass>, DekkingError> {
    require_endo(f)?;
    let g = to_bits(f.source(), gamma)?;
    let classes = classify_map(&SetMap::of(f), &g);
    Ok(f.source().iter().cloned().zip(classes).collect())
}

/// Least `r ≥ 1` such that `g^r` respects `gamma`, with its classes.
pub fn respecting_power(
    g: &Morphism,
    gamma: &BTreeSet<Symbol>,
    cap: usize,
) -> Result<(usize, BTreeMap<Symbol, LetterClass>), DekkingError> {
    require_endo(g)?;
    let gb = to_bits(g.source(), gamma)?;
    let base = SetMap::of(g);
    let mut power = base.clone();
    for r in 1..=cap {
        let classes = classify_map(&power, &gb);
        if classes.iter().all(|c| *c != LetterClass::Unclassified) {
            return Ok((r, g.source().iter().cloned().zip(classes).collect()));
        }
        power = base.after(&power);
    }
    Err(DekkingError::RespectCapExceeded { cap })
}

pub fn minimal_respecting_power(
    g: &Morphism,
    gamma: &BTreeSet<Symbol>,
) -> Result<usize, DekkingError> {
    respecting_power(g, gamma, RESPECT_CAP).map(|(r, _)| r)
}

// ---------------------------------------------------------------------------
// blocks

/// Joiner for block names over `alphabet`: nothing when every letter is a
/// single character, `.` otherwise.
pub fn block_joiner(alphabet: &Alphabet) -> &'static str {
    if alphabet.is_single_char() {
        ""
    } else {
        "."
    }
}

/// The letter `[w]`.
pub fn block_name(content: &Word, joiner: &str) -> Result<Symbol, WordError> {
    let mut name = String::from("[");
    for (i, s) in content.iter().enumerate() {
        if i > 0 {
            name.push_str(joiner);
        }
        name.push_str(s.name());
    }
    name.push(']');
    Symbol::new(&name)
}

/// Splits `erase_dead(w)` into blocks `w0 a1 w1 | a2 w2 | ... | ak wk` with
/// `ai ∉ gamma` and `wi ∈ gamma*`; returns the block contents.
pub fn blocks(
    w: &Word,
    gamma: &BTreeSet<Symbol>,
    dead: &BTreeSet<Symbol>,
) -> Result<Vec<Word>, DekkingError> {
    let live = w.erase(dead);
    if live.is_empty() {
        return Ok(Vec::new());
    }
    let mut out: Vec<Vec<Symbol>> = Vec::new();
    let mut lead: Vec<Symbol> = Vec::new();
    for s in live.iter() {
        if gamma.contains(s) {
            match out.last_mut() {
                Some(b) => b.push(s.clone()),
                None => lead.push(s.clone()),
            }
        } else if out.is_empty() {
            lead.push(s.clone());
            out.push(core::mem::take(&mut lead));
        } else {
            out.push(alloc::vec![s.clone()]);
        }
    }
    if out.is_empty() {
        return Err(DekkingError::UndefinedBlocks(w.clone()));
    }
    Ok(out.into_iter().map(Word::from).collect())
}

// ---------------------------------------------------------------------------
// erasure

/// Morphic system generating `erase_Γ(g^ω(a))`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErasureSystem {
    pub delta: Alphabet,
    pub xi: Morphism,
    pub rho: Coding,
    pub start: Symbol,
    /// Least `r` with `g^r` respecting the erased letters.
    pub power: usize,
    pub dead: BTreeSet<Symbol>,
    pub gamma: BTreeSet<Symbol>,
    /// Block content of every letter of `delta`.
    pub contents: BTreeMap<Symbol, Word>,
}

impl ErasureSystem {
    /// Concatenation of block contents.
    pub fn unblock(&self, w: &Word) -> Result<Word, DekkingError> {
        let mut out = Vec::new();
        for s in w {
            let c = self
                .contents
                .get(s)
                .ok_or_else(|| DekkingError::NotInAlphabet(s.clone()))?;
            out.extend_from_slice(c.letters());
        }
        Ok(Word::from(out))
    }

    pub fn as_system(&self) -> MorphicSystem {
        MorphicSystem::new(self.xi.clone(), self.rho.clone(), self.start.clone())
            .expect("constructed consistently")
    }

    /// The same system restricted to letters reachable from the start.
    pub fn pruned(&self) -> ErasureSystem {
        let seed: BTreeSet<Symbol> = [self.start.clone()].into();
        let keep = crate::engine::letter_closure(&self.xi, &seed);
        let delta = Alphabet::from_set(&keep).expect("contains the start");
        let xi = self
            .xi
            .restrict(&delta)
            .and_then(|m| m.with_target(delta.clone()))
            .expect("closed set");
        let rho = Coding::new(self.rho.as_morphism().restrict(&delta).expect("subset"))
            .expect("still a coding");
        ErasureSystem {
            delta,
            xi,
            rho,
            start: self.start.clone(),
            power: self.power,
            dead: self.dead.clone(),
            gamma: self.gamma.clone(),
            contents: self
                .contents
                .iter()
                .filter(|(k, _)| keep.contains(*k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }
}

fn alphabet_of(names: &[Symbol]) -> Result<Alphabet, DekkingError> {
    let set: BTreeSet<Symbol> = names.iter().cloned().collect();
    Alphabet::from_set(&set).map_err(DekkingError::from)
}

/// Builds the erasure system without checking the limit.
pub fn erasure_parts(
    g: &Morphism,
    gamma: &BTreeSet<Symbol>,
    a: &Symbol,
) -> Result<ErasureSystem, DekkingError> {
    require_endo(g)?;
    let sigma = g.source();
    if !sigma.contains(a) {
        return Err(DekkingError::NotInAlphabet(a.clone()));
    }
    to_bits(sigma, gamma)?;
    let (r, classes) = respecting_power(g, gamma, RESPECT_CAP)?;
    let dead: BTreeSet<Symbol> = classes
        .iter()
        .filter(|(_, c)| **c == LetterClass::Dead)
        .map(|(s, _)| s.clone())
        .collect();
    let gr = g.power(r, Caps::default().max_letters)?;
    let joiner = block_joiner(sigma);

    let mut contents: BTreeMap<Symbol, Word> = BTreeMap::new();
    let mut add = |content: Word| -> Result<Symbol, DekkingError> {
        let name = block_name(&content, joiner)?;
        match contents.get(&name) {
            Some(c) if *c != content => Err(DekkingError::NameCollision(name)),
            _ => {
                contents.insert(name.clone(), content);
                Ok(name)
            }
        }
    };
    let mut per_letter: Vec<Word> = Vec::with_capacity(sigma.len());
    for b in sigma {
        add(Word::from(alloc::vec![b.clone()]))?;
    }
    for (_, img) in gr.rules() {
        let bs = blocks(img, gamma, &dead)?;
        let names = bs.into_iter().map(&mut add).collect::<Result<Vec<_>, _>>()?;
        per_letter.push(Word::from(names));
    }

    let delta = alphabet_of(&contents.keys().cloned().collect::<Vec<_>>())?;
    let mut xi_rules = Vec::with_capacity(delta.len());
    let mut rho_rules = Vec::with_capacity(delta.len());
    for (name, content) in &contents {
        let mut img = Vec::new();
        for s in content {
            let i = sigma.index_of(s).expect("block letters come from the alphabet");
            img.extend_from_slice(per_letter[i].letters());
        }
        xi_rules.push((name.clone(), Word::from(img)));
        let shown = content
            .iter()
            .find(|s| !gamma.contains(*s))
            .unwrap_or_else(|| content.first().expect("non-empty"));
        rho_rules.push((name.clone(), shown.clone()));
    }
    let xi = Morphism::new(delta.clone(), delta.clone(), xi_rules)?;
    let rho = Coding::from_map(delta.clone(), sigma.clone(), rho_rules)?;
    let start = block_name(&Word::from(alloc::vec![a.clone()]), joiner)?;
    Ok(ErasureSystem {
        delta,
        xi,
        rho,
        start,
        power: r,
        dead,
        gamma: gamma.clone(),
        contents,
    })
}

fn limit_of(h: &Morphism, start: &Symbol) -> Result<LimitShape, EngineError> {
    let shape = limit_shape(h, &Word::from(alloc::vec![start.clone()]), Caps::default())?;
    match shape {
        LimitShape::Diverges => Err(EngineError::NoLimit),
        LimitShape::Undetermined => Err(EngineError::IterationCap {
            applications: Caps::default().max_applications,
            letters: 0,
        }),
        s => Ok(s),
    }
}

/// The morphic system associated with erasing `gamma` from `g^ω(a)`.
pub fn erasure_system(
    g: &Morphism,
    gamma: &BTreeSet<Symbol>,
    a: &Symbol,
) -> Result<ErasureSystem, DekkingError> {
    let sys = erasure_parts(g, gamma, a)?;
    if let LimitShape::Finite(w) = limit_of(&sys.xi, &sys.start)? {
        return Err(DekkingError::FiniteErasure(sys.rho.apply(&w)?));
    }
    Ok(sys)
}

// ---------------------------------------------------------------------------
// images

/// Morphic system generating `h(g^ω(a))` for a non-erasing `h`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageSystem {
    pub delta: Alphabet,
    pub xi: Morphism,
    pub rho: Coding,
    pub start: Symbol,
}

impl ImageSystem {
    pub fn as_system(&self) -> MorphicSystem {
        MorphicSystem::new(self.xi.clone(), self.rho.clone(), self.start.clone())
            .expect("constructed consistently")
    }
}

/// `g` is an endomorphism of `Σ`, `h : Σ → Γ*` non-erasing. The new
/// alphabet is `Γ ∪ {[b] : b ∈ Σ}`.
pub fn image_system(g: &Morphism, h: &Morphism, a: &Symbol) -> Result<ImageSystem, DekkingError> {
    let sys = image_parts(g, h, a)?;
    limit_of(&g.clone(), a)?;
    Ok(sys)
}

fn image_parts(g: &Morphism, h: &Morphism, a: &Symbol) -> Result<ImageSystem, DekkingError> {
    require_endo(g)?;
    if h.source() != g.source() {
        return Err(DekkingError::AlphabetMismatch);
    }
    let sigma = g.source();
    if !sigma.contains(a) {
        return Err(DekkingError::NotInAlphabet(a.clone()));
    }
    if let Some((b, _)) = h.rules().find(|(_, w)| w.is_empty()) {
        return Err(DekkingError::ErasingImage(b.clone()));
    }
    let bracket = |b: &Symbol| block_name(&Word::from(alloc::vec![b.clone()]), "");
    let bracketed = sigma.iter().map(bracket).collect::<Result<Vec<_>, _>>()?;
    let mut names: Vec<Symbol> = h.target().symbols().to_vec();
    names.extend(bracketed.iter().cloned());
    let delta = Alphabet::new(names).map_err(|e| match e {
        WordError::DuplicateSymbol(s) => DekkingError::NameCollision(s),
        e => e.into(),
    })?;

    // I(w) = [b1] tail(h(b1)) [b2] tail(h(b2)) ...
    let image_word = |w: &Word| -> Word {
        let mut out = Vec::new();
        for b in w {
            let i = sigma.index_of(b).expect("endomorphism");
            out.push(bracketed[i].clone());
            out.extend_from_slice(&h.image_at(i).letters()[1..]);
        }
        Word::from(out)
    };
    let mut xi_rules = Vec::with_capacity(delta.len());
    let mut rho_rules = Vec::with_capacity(delta.len());
    for gamma in h.target() {
        xi_rules.push((gamma.clone(), Word::empty()));
        rho_rules.push((gamma.clone(), gamma.clone()));
    }
    for (i, (_, gb)) in g.rules().enumerate() {
        xi_rules.push((bracketed[i].clone(), image_word(gb)));
        let head = h.image_at(i).first().expect("non-erasing").clone();
        rho_rules.push((bracketed[i].clone(), head));
    }
    let xi = Morphism::new(delta.clone(), delta.clone(), xi_rules)?;
    let rho = Coding::from_map(delta.clone(), h.target().clone(), rho_rules)?;
    let start = bracketed[sigma.index_of(a).expect("checked")].clone();
    Ok(ImageSystem {
        delta,
        xi,
        rho,
        start,
    })
}

/// `(Γ, g)` where `Γ` holds the erased letters of `h` and `g` is `h`
/// restricted to the other letters, so that `h(w) = g(erase_Γ(w))`.
pub fn split_erasing(h: &Morphism) -> Result<(BTreeSet<Symbol>, Morphism), DekkingError> {
    let gamma = h.erased_letters();
    let rest: BTreeSet<Symbol> = h.source().to_set().difference(&gamma).cloned().collect();
    if rest.is_empty() {
        return Err(DekkingError::AllErased);
    }
    let g = h.restrict(&Alphabet::from_set(&rest)?)?;
    Ok((gamma, g))
}

/// Result of [`morphic_image_pipeline`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PipelineOutcome {
    System(MorphicSystem),
    Finite(Word),
}

/// A morphic system for `h(c(g^ω(a)))`, where `sys = (g, c, a)` and `h` may
/// erase letters.
///
/// The coding is absorbed into `h`, the erased letters are removed with
/// [`erasure_system`] and the remaining non-erasing image is handled by
/// [`image_system`].
pub fn morphic_image_pipeline(
    sys: &MorphicSystem,
    h: &Morphism,
) -> Result<PipelineOutcome, DekkingError> {
    if h.source() != sys.c.target() {
        return Err(DekkingError::AlphabetMismatch);
    }
    let big_h = h.compose(sys.c.as_morphism())?;
    match limit_of(&sys.h, &sys.start)? {
        LimitShape::Finite(w) => return Ok(PipelineOutcome::Finite(big_h.apply(&w)?)),
        _ => {}
    }
    let (gamma, g_ne) = match split_erasing(&big_h) {
        Ok(x) => x,
        Err(DekkingError::AllErased) => return Ok(PipelineOutcome::Finite(Word::empty())),
        Err(e) => return Err(e),
    };
    if gamma.is_empty() {
        let img = image_parts(&sys.h, &big_h, &sys.start)?;
        return Ok(PipelineOutcome::System(img.as_system()));
    }
    let er = match erasure_system(&sys.h, &gamma, &sys.start) {
        Ok(er) => er.pruned(),
        Err(DekkingError::FiniteErasure(w)) => {
            return Ok(PipelineOutcome::Finite(g_ne.apply(&w)?))
        }
        Err(e) => return Err(e),
    };
    // H1 = g_ne ∘ ρ. A start letter showing an erased letter never occurs
    // in the limit; it borrows the image of its successor to stay
    // non-erasing.
    let mut rules = Vec::with_capacity(er.delta.len());
    for d in &er.delta {
        let shown = er.rho.map(d).expect("total");
        let img = if gamma.contains(shown) {
            let next = er.xi.image(d).and_then(|w| w.first()).expect("infinite erasure");
            g_ne.image(er.rho.map(next).expect("total")).expect("not erased").clone()
        } else {
            g_ne.image(shown).expect("not erased").clone()
        };
        rules.push((d.clone(), img));
    }
    let h1 = Morphism::new(er.delta.clone(), big_h.target().clone(), rules)?;
    let img = image_parts(&er.xi, &h1, &er.start)?;
    Ok(PipelineOutcome::System(img.as_system()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::fixpoint_prefix;
    use alloc::string::ToString;

    fn m(rules: &[(&str, &str)]) -> Morphism {
        Morphism::from_char_rules(rules).unwrap()
    }

    fn w(s: &str) -> Word {
        Word::from_chars(s).unwrap()
    }

    fn sym(s: &str) -> Symbol {
        Symbol::new(s).unwrap()
    }

    fn set(s: &str) -> BTreeSet<Symbol> {
        w(s).letter_set()
    }

    fn names(ws: &[Word]) -> Vec<String> {
        ws.iter().map(|c| block_name(c, "").unwrap().name().into()).collect()
    }

    fn trib() -> Morphism {
        m(&[("a", "ab"), ("b", "ac"), ("c", "a")])
    }

    #[test]
    fn orbit_examples() {
        let g2 = trib().power(2, 1000).unwrap();
        let (t, c) = letter_set_orbit(&g2, &sym("a")).unwrap();
        assert!(t.len() <= 1);
        assert_eq!(c, alloc::vec![set("abc")]);
        let (t, c) = letter_set_orbit(&m(&[("a", "ab"), ("b", "")]), &sym("b")).unwrap();
        assert_eq!(t, alloc::vec![set("b")]);
        assert_eq!(c, alloc::vec![BTreeSet::new()]);
        let (t, c) = letter_set_orbit(&m(&[("a", "a")]), &sym("a")).unwrap();
        assert!(t.is_empty());
        assert_eq!(c, alloc::vec![set("a")]);
    }

    #[test]
    fn classification_examples() {
        use LetterClass::*;
        let g2 = trib().power(2, 1000).unwrap();
        let cl = classify_letters(&g2, &set("a")).unwrap();
        assert_eq!(cl[&sym("a")], Resurrecting);
        assert_eq!(cl[&sym("b")], Resilient);
        assert_eq!(cl[&sym("c")], Resilient);
        assert_eq!(classify_letters(&trib(), &set("a")).unwrap()[&sym("c")], Unclassified);

        let five = m(&[("a", "abcde"), ("b", "cc"), ("c", "b"), ("d", "c"), ("e", "ea")]);
        let g2 = five.power(2, 1000).unwrap();
        assert_eq!(g2.image(&sym("a")).unwrap(), &w("abcdeccbcea"));
        assert_eq!(g2.image(&sym("e")).unwrap(), &w("eaabcde"));
        let cl = classify_letters(&g2, &set("be")).unwrap();
        let expect = [Resilient, Dead, Resilient, NearDead, Resurrecting];
        for (s, c) in "abcde".chars().zip(expect) {
            assert_eq!(cl[&sym(&s.to_string())], c, "letter {s}");
        }
    }

    #[test]
    fn respecting_powers() {
        assert_eq!(minimal_respecting_power(&trib(), &set("a")).unwrap(), 2);
        let five = m(&[("a", "abcde"), ("b", "cc"), ("c", "b"), ("d", "c"), ("e", "ea")]);
        assert_eq!(minimal_respecting_power(&five, &set("be")).unwrap(), 2);
        let fib = m(&[("a", "ab"), ("b", "a")]);
        assert_eq!(minimal_respecting_power(&fib, &BTreeSet::new()).unwrap(), 1);
    }

    #[test]
    fn block_examples() {
        let none = BTreeSet::new();
        assert_eq!(names(&blocks(&w("abac"), &set("a"), &none).unwrap()), ["[aba]", "[c]"]);
        assert_eq!(names(&blocks(&w("ab"), &set("a"), &none).unwrap()), ["[ab]"]);
        assert!(blocks(&w("bb"), &set("be"), &set("b")).unwrap().is_empty());
        assert!(matches!(
            blocks(&w("aa"), &set("a"), &none),
            Err(DekkingError::UndefinedBlocks(_))
        ));
    }

    #[test]
    fn block_names_use_a_separator_for_long_symbols() {
        let content = Word::from_tokens("ab c").unwrap();
        assert_eq!(block_name(&content, ".").unwrap().name(), "[ab.c]");
        assert_eq!(block_joiner(&Alphabet::from_chars("abc").unwrap()), "");
    }

    #[test]
    fn tribonacci_erasure() {
        let e = erasure_system(&trib(), &set("a"), &sym("a")).unwrap();
        assert_eq!(e.power, 2);
        let got: Vec<&str> = e.delta.iter().map(|s| s.name()).collect();
        assert_eq!(got, ["[a]", "[ab]", "[aba]", "[b]", "[c]"]);
        assert_eq!(e.start, sym("[a]"));
        assert_eq!(
            e.unblock(e.xi.image(&sym("[a]")).unwrap()).unwrap(),
            trib().power(2, 100).unwrap().image(&sym("a")).unwrap().clone()
        );
        let prefix = fixpoint_prefix(&e.as_system(), 18).unwrap();
        assert_eq!(prefix, w("bcbbcbbcbbcbcbbcbb"));
    }

    #[test]
    fn dead_start_gives_finite_erasure() {
        let g = m(&[("a", "ab"), ("b", "b")]);
        let err = erasure_system(&g, &set("ab"), &sym("a")).unwrap_err();
        assert_eq!(err, DekkingError::FiniteErasure(Word::empty()));
    }

    #[test]
    fn fibonacci_image() {
        let fib = m(&[("a", "ab"), ("b", "a")]);
        let h = m(&[("a", "bb"), ("b", "a")]);
        let img = image_system(&fib, &h, &sym("a")).unwrap();
        let x = |s: &str| img.xi.image(&sym(s)).unwrap().clone();
        assert_eq!(x("[a]"), Word::from_tokens("[a] b [b]").unwrap());
        assert_eq!(x("[b]"), Word::from_tokens("[a] b").unwrap());
        assert!(x("a").is_empty() && x("b").is_empty());
        assert_eq!(img.rho.map(&sym("[a]")), Some(&sym("b")));
        assert_eq!(img.rho.map(&sym("[b]")), Some(&sym("a")));
        assert_eq!(fixpoint_prefix(&img.as_system(), 10).unwrap(), w("bbabbbbabb"));
        assert!(matches!(
            image_system(&fib, &m(&[("a", "a"), ("b", "")]), &sym("a")),
            Err(DekkingError::ErasingImage(_))
        ));
    }

    #[test]
    fn split_examples() {
        let h = m(&[("a", "ab"), ("b", "")]);
        let (gamma, g) = split_erasing(&h).unwrap();
        assert_eq!(gamma, set("b"));
        assert_eq!(g.image(&sym("a")), Some(&w("ab")));
        assert_eq!(g.source().len(), 1);
        let fib = m(&[("a", "ab"), ("b", "a")]);
        assert_eq!(split_erasing(&fib).unwrap(), (BTreeSet::new(), fib));
        let all = Morphism::new(
            Alphabet::from_chars("a").unwrap(),
            Alphabet::from_chars("a").unwrap(),
            [(sym("a"), Word::empty())],
        )
        .unwrap();
        assert_eq!(split_erasing(&all), Err(DekkingError::AllErased));
    }

    #[test]
    fn pipeline_erasing_tribonacci() {
        let sys = MorphicSystem::pure(trib(), sym("a")).unwrap();
        let abc = trib().source().clone();
        let h = Morphism::new(
            abc.clone(),
            abc,
            [(sym("a"), Word::empty()), (sym("b"), w("b")), (sym("c"), w("c"))],
        )
        .unwrap();
        let PipelineOutcome::System(out) = morphic_image_pipeline(&sys, &h).unwrap() else {
            panic!("expected an infinite image");
        };
        assert_eq!(fixpoint_prefix(&out, 18).unwrap(), w("bcbbcbbcbbcbcbbcbb"));
    }
}
