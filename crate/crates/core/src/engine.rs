//! Limits of iterated morphisms.
//!
//! [`limit_shape`] decides, for an endomorphism `h` and a start word `w`,
//! whether `h^n(w)` converges letterwise and what the limit looks like. It
//! does not require `h` to be prolongable on `w`. The procedure works on the
//! *first block* of a word: the shortest prefix that contains a non-mortal
//! letter. The first block of `h(w)` is determined by the first block of `w`,
//! so its orbit is eventually periodic; a cycle of length greater than one
//! means the limit does not exist. Once the first block is a fixed point
//! `B` with `h(B) = B v`, either `v` keeps growing (the limit is
//! `lim h^n(B)`) or `h^n(B)` settles on a finite word that can be peeled off
//! and the analysis restarts on what follows.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use thiserror::Error;

use crate::word::{Coding, Morphism, Symbol, Word, WordError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error("morphism must map an alphabet to itself")]
    NotEndomorphism,
    #[error("coding source must equal the morphism alphabet")]
    CodingMismatch,
    #[error("start symbol `{0}` is not in the alphabet")]
    UnknownStart(Symbol),
    #[error("start word is empty")]
    EmptyStart,
    #[error("the limit is the finite word {0:?}")]
    FiniteLimit(Word),
    #[error("the iterates do not converge")]
    NoLimit,
    #[error("gave up after {applications} applications ({letters} letters)")]
    IterationCap { applications: usize, letters: usize },
}

/// Guards against runaway iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    pub max_applications: usize,
    pub max_letters: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_applications: 10_000,
            max_letters: 1 << 24,
        }
    }
}

/// Letters `a` with `h^k(a) = ε` for some `k`.
pub fn mortal_letters(h: &Morphism) -> BTreeSet<Symbol> {
    let mut mortal = BTreeSet::new();
    loop {
        let before = mortal.len();
        for (a, img) in h.rules() {
            if !mortal.contains(a) && img.iter().all(|b| mortal.contains(b)) {
                mortal.insert(a.clone());
            }
        }
        if mortal.len() == before {
            return mortal;
        }
    }
}

/// `h(a) = a z` with `z` non-empty.
pub fn is_prolongable(h: &Morphism, a: &Symbol) -> bool {
    match h.image(a) {
        Some(img) => img.len() > 1 && img.first() == Some(a),
        None => false,
    }
}

/// Outcome of [`limit_status`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LimitStatus {
    Infinite,
    Finite(Word),
    Diverges,
    /// The caps ran out before the question was settled.
    Undetermined,
}

/// Structure of `lim h^n(w)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LimitShape {
    Finite(Word),
    Diverges,
    /// `prefix · lim h^n(seed)` where `h(seed) = seed v` and `v` contains a
    /// non-mortal letter.
    Growing { prefix: Word, seed: Word },
    /// `prefix · period^ω`.
    Periodic { prefix: Word, period: Word },
    Undetermined,
}

impl LimitShape {
    pub fn status(&self) -> LimitStatus {
        match self {
            LimitShape::Finite(w) => LimitStatus::Finite(w.clone()),
            LimitShape::Diverges => LimitStatus::Diverges,
            LimitShape::Growing { .. } | LimitShape::Periodic { .. } => LimitStatus::Infinite,
            LimitShape::Undetermined => LimitStatus::Undetermined,
        }
    }
}

pub fn limit_status(h: &Morphism, start: &Word) -> Result<LimitStatus, EngineError> {
    Ok(limit_shape(h, start, Caps::default())?.status())
}

fn check_endo(h: &Morphism) -> Result<(), EngineError> {
    if h.is_endomorphism() {
        Ok(())
    } else {
        Err(EngineError::NotEndomorphism)
    }
}

fn first_block(w: &[Symbol], mortal: &BTreeSet<Symbol>) -> Option<usize> {
    w.iter().position(|s| !mortal.contains(s)).map(|i| i + 1)
}

struct Iter<'a> {
    h: &'a Morphism,
    caps: Caps,
    applications: usize,
}

impl Iter<'_> {
    fn apply(&mut self, w: &[Symbol]) -> Result<Vec<Symbol>, EngineError> {
        self.applications += 1;
        if self.applications > self.caps.max_applications {
            return Err(self.cap(0));
        }
        let mut out = Vec::new();
        for a in w {
            let img = self
                .h
                .image(a)
                .ok_or_else(|| WordError::UnknownSymbol(a.clone()))?;
            out.extend_from_slice(img.letters());
            if out.len() > self.caps.max_letters {
                return Err(self.cap(out.len()));
            }
        }
        Ok(out)
    }

    fn cap(&self, letters: usize) -> EngineError {
        EngineError::IterationCap {
            applications: self.applications,
            letters,
        }
    }
}

// states longer than this are not remembered for cycle detection
const STATE_MEMO_LIMIT: usize = 1 << 12;

/// Decides the shape of `lim h^n(start)` within `caps`.
pub fn limit_shape(h: &Morphism, start: &Word, caps: Caps) -> Result<LimitShape, EngineError> {
    check_endo(h)?;
    if start.is_empty() {
        return Err(EngineError::EmptyStart);
    }
    if let Some(a) = start.iter().find(|a| !h.source().contains(a)) {
        return Err(WordError::UnknownSymbol(a.clone()).into());
    }
    match analyse(h, start, caps) {
        Err(EngineError::IterationCap { .. }) => Ok(LimitShape::Undetermined),
        other => other,
    }
}

fn analyse(h: &Morphism, start: &Word, caps: Caps) -> Result<LimitShape, EngineError> {
    let mortal = mortal_letters(h);
    let has_live = |w: &[Symbol]| w.iter().any(|s| !mortal.contains(s));
    let mut it = Iter {
        h,
        caps,
        applications: 0,
    };
    let periodic = |peeled: &[Symbol], at: usize| {
        let mut prefix = peeled[..at].to_vec();
        let mut period = peeled[at..].to_vec();
        // shortest prefix: rotate the period left-wards over matching letters
        while prefix.last().is_some() && prefix.last() == period.last() {
            prefix.pop();
            period.rotate_right(1);
        }
        LimitShape::Periodic {
            prefix: Word::from(prefix),
            period: Word::from(period),
        }
    };

    let mut peeled: Vec<Symbol> = Vec::new();
    let mut s: Vec<Symbol> = start.letters().to_vec();
    let mut seen_states: BTreeMap<Vec<Symbol>, usize> = BTreeMap::new();
    // first blocks met since the last time the next block had to be taken
    // from beyond the current block's image
    let mut seen_blocks: BTreeMap<Vec<Symbol>, usize> = BTreeMap::new();

    loop {
        let Some(bl) = first_block(&s, &mortal) else {
            return Ok(LimitShape::Finite(Word::from(peeled)));
        };
        if let Some(&at) = seen_states.get(&s) {
            return Ok(periodic(&peeled, at));
        }
        if s.len() <= STATE_MEMO_LIMIT {
            seen_states.insert(s.clone(), peeled.len());
        }
        let block = s[..bl].to_vec();
        if let Some(&at) = seen_blocks.get(&block) {
            return Ok(periodic(&peeled, at));
        }

        // orbit of the first block until it hits a fixed point or a cycle
        let mut orbit: Vec<Vec<Symbol>> = alloc::vec![block.clone()];
        let mut index: BTreeMap<Vec<Symbol>, usize> = BTreeMap::new();
        index.insert(block.clone(), 0);
        let (star, star_image) = loop {
            let last = orbit.last().expect("orbit is non-empty");
            let img = it.apply(last)?;
            let nb = img[..first_block(&img, &mortal).expect("image of a live letter is live")]
                .to_vec();
            if &nb == last {
                break (nb, img);
            }
            if index.contains_key(&nb) {
                return Ok(LimitShape::Diverges);
            }
            index.insert(nb.clone(), orbit.len());
            orbit.push(nb);
        };
        let k0 = orbit.len() - 1;
        if has_live(&star_image[star.len()..]) {
            return Ok(LimitShape::Growing {
                prefix: Word::from(peeled),
                seed: Word::from(star),
            });
        }

        // h^n(star) settles on a finite word u with h(u) = u
        let mut u = star_image;
        let mut n0 = 1;
        loop {
            let next = it.apply(&u)?;
            if next == u {
                break;
            }
            u = next;
            n0 += 1;
        }
        let k = k0 + n0;
        let mut hb = block;
        let mut rest = s[bl..].to_vec();
        for _ in 0..k {
            hb = it.apply(&hb)?;
            rest = it.apply(&rest)?;
        }
        debug_assert!(hb.starts_with(&u));
        let r = &hb[u.len()..];
        let at = peeled.len();
        peeled.extend_from_slice(&u);
        if has_live(r) {
            seen_blocks.insert(s[..bl].to_vec(), at);
        } else {
            seen_blocks.clear();
        }
        let mut next = r.to_vec();
        next.extend(rest);
        if next.len() + peeled.len() > caps.max_letters {
            return Err(it.cap(next.len()));
        }
        s = next;
    }
}

/// `c(h^ω(start))`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MorphicSystem {
    pub h: Morphism,
    pub c: Coding,
    pub start: Symbol,
}

impl MorphicSystem {
    pub fn new(h: Morphism, c: Coding, start: Symbol) -> Result<Self, EngineError> {
        check_endo(&h)?;
        if c.source() != h.source() {
            return Err(EngineError::CodingMismatch);
        }
        if !h.source().contains(&start) {
            return Err(EngineError::UnknownStart(start));
        }
        Ok(MorphicSystem { h, c, start })
    }

    /// A pure morphic system (identity coding).
    pub fn pure(h: Morphism, start: Symbol) -> Result<Self, EngineError> {
        check_endo(&h)?;
        let c = Coding::identity(h.source());
        MorphicSystem::new(h, c, start)
    }

    pub fn shape(&self) -> Result<LimitShape, EngineError> {
        limit_shape(&self.h, &Word::from(alloc::vec![self.start.clone()]), Caps::default())
    }

    pub fn stream(&self) -> Result<PrefixStream, EngineError> {
        PrefixStream::new(self)
    }
}

enum Source {
    Done,
    Growing { chunk: Vec<Symbol> },
    Periodic { period: Vec<Symbol> },
}

/// Lazily generated letters of `c(h^ω(start))`.
///
/// Letters already produced never change. Not meant for concurrent
/// expansion.
pub struct PrefixStream {
    h: Morphism,
    c: Coding,
    caps: Caps,
    applications: usize,
    raw: Vec<Symbol>,
    coded: Vec<Symbol>,
    source: Source,
    cursor: usize,
}

impl PrefixStream {
    pub fn new(sys: &MorphicSystem) -> Result<Self, EngineError> {
        PrefixStream::with_caps(sys, Caps::default())
    }

    pub fn with_caps(sys: &MorphicSystem, caps: Caps) -> Result<Self, EngineError> {
        let start = Word::from(alloc::vec![sys.start.clone()]);
        let shape = limit_shape(&sys.h, &start, caps)?;
        PrefixStream::from_shape(&sys.h, &sys.c, shape, caps)
    }

    /// Stream for a shape computed elsewhere.
    pub fn from_shape(
        h: &Morphism,
        c: &Coding,
        shape: LimitShape,
        caps: Caps,
    ) -> Result<Self, EngineError> {
        let (raw, source) = match shape {
            LimitShape::Diverges => return Err(EngineError::NoLimit),
            LimitShape::Undetermined => {
                return Err(EngineError::IterationCap {
                    applications: caps.max_applications,
                    letters: 0,
                })
            }
            LimitShape::Finite(w) => (w.into_vec(), Source::Done),
            LimitShape::Periodic { prefix, period } => {
                (prefix.into_vec(), Source::Periodic { period: period.into_vec() })
            }
            LimitShape::Growing { prefix, seed } => {
                let img = h.apply(&seed)?;
                let v = img.letters()[seed.len()..].to_vec();
                let mut raw = prefix.into_vec();
                raw.extend(img.into_vec());
                (raw, Source::Growing { chunk: v })
            }
        };
        let mut stream = PrefixStream {
            h: h.clone(),
            c: c.clone(),
            caps,
            applications: 0,
            raw: Vec::new(),
            coded: Vec::new(),
            source,
            cursor: 0,
        };
        stream.push_raw(raw)?;
        Ok(stream)
    }

    fn push_raw(&mut self, letters: Vec<Symbol>) -> Result<(), EngineError> {
        for a in &letters {
            let b = self
                .c
                .map(a)
                .ok_or_else(|| WordError::UnknownSymbol(a.clone()))?;
            self.coded.push(b.clone());
        }
        self.raw.extend(letters);
        Ok(())
    }

    /// Makes at least `n` letters available, unless the limit is shorter.
    fn fill(&mut self, n: usize) -> Result<(), EngineError> {
        while self.raw.len() < n {
            let next = match &self.source {
                Source::Done => return Ok(()),
                Source::Periodic { period } => period.clone(),
                Source::Growing { chunk } => {
                    self.applications += 1;
                    let next = self.h.apply(&Word::from(chunk.clone()))?.into_vec();
                    if self.applications > self.caps.max_applications
                        || self.raw.len() + next.len() > self.caps.max_letters
                    {
                        return Err(EngineError::IterationCap {
                            applications: self.applications,
                            letters: self.raw.len(),
                        });
                    }
                    self.source = Source::Growing { chunk: next.clone() };
                    next
                }
            };
            self.push_raw(next)?;
        }
        Ok(())
    }

    /// Whether the limit is a finite word.
    pub fn is_finite(&self) -> bool {
        matches!(self.source, Source::Done)
    }

    /// The `i`-th letter of the coded sequence, or `None` past the end of a
    /// finite limit.
    pub fn get(&mut self, i: usize) -> Result<Option<Symbol>, EngineError> {
        self.fill(i + 1)?;
        Ok(self.coded.get(i).cloned())
    }

    /// Up to `n` letters of the coded sequence (fewer only if the limit is
    /// finite).
    pub fn prefix(&mut self, n: usize) -> Result<Word, EngineError> {
        self.fill(n)?;
        Ok(Word::from(self.coded[..n.min(self.coded.len())].to_vec()))
    }

    /// Up to `n` letters of `h^ω(start)` before coding.
    pub fn uncoded_prefix(&mut self, n: usize) -> Result<Word, EngineError> {
        self.fill(n)?;
        Ok(Word::from(self.raw[..n.min(self.raw.len())].to_vec()))
    }

    /// Next coded letter at the internal cursor.
    pub fn next_letter(&mut self) -> Result<Option<Symbol>, EngineError> {
        let out = self.get(self.cursor)?;
        if out.is_some() {
            self.cursor += 1;
        }
        Ok(out)
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn rewind(&mut self) {
        self.cursor = 0;
    }
}

/// The first `n` letters of `c(h^ω(start))`.
pub fn fixpoint_prefix(sys: &MorphicSystem, n: usize) -> Result<Word, EngineError> {
    let mut stream = sys.stream()?;
    let w = stream.prefix(n)?;
    if w.len() < n {
        return Err(EngineError::FiniteLimit(w));
    }
    Ok(w)
}

/// Closure of `letters` under `b ↦ letters(h(b))`, including `letters`.
pub fn letter_closure(h: &Morphism, letters: &BTreeSet<Symbol>) -> BTreeSet<Symbol> {
    let mut out = letters.clone();
    let mut todo: Vec<Symbol> = letters.iter().cloned().collect();
    while let Some(b) = todo.pop() {
        if let Some(img) = h.image(&b) {
            for c in img {
                if out.insert(c.clone()) {
                    todo.push(c.clone());
                }
            }
        }
    }
    out
}

/// The letters occurring in `h^ω(a)`.
///
/// For a prolongable start this is the closure of `{a}`. For other starts
/// the start letter itself may never occur in the limit, so the set is read
/// off the limit's shape instead.
pub fn fixpoint_letters(h: &Morphism, a: &Symbol) -> Result<BTreeSet<Symbol>, EngineError> {
    let start = Word::from(alloc::vec![a.clone()]);
    if !h.source().contains(a) {
        return Err(EngineError::UnknownStart(a.clone()));
    }
    match limit_shape(h, &start, Caps::default())? {
        LimitShape::Finite(w) => Err(EngineError::FiniteLimit(w)),
        LimitShape::Diverges => Err(EngineError::NoLimit),
        LimitShape::Undetermined => Err(EngineError::IterationCap {
            applications: Caps::default().max_applications,
            letters: 0,
        }),
        LimitShape::Periodic { prefix, period } => {
            let mut out = prefix.letter_set();
            out.extend(period.letter_set());
            Ok(out)
        }
        LimitShape::Growing { prefix, seed } => {
            let img = h.apply(&seed)?;
            let v: BTreeSet<Symbol> = img.letters()[seed.len()..].iter().cloned().collect();
            let mut out = letter_closure(h, &v);
            out.extend(prefix.letter_set());
            out.extend(seed.letter_set());
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

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

    #[test]
    fn mortal_examples() {
        assert_eq!(mortal_letters(&m(&[("a", "ab"), ("b", "")])), set("b"));
        assert!(mortal_letters(&m(&[("a", "ab"), ("b", "a")])).is_empty());
        assert_eq!(
            mortal_letters(&m(&[("a", "bc"), ("b", "c"), ("c", "")])),
            set("abc")
        );
    }

    #[test]
    fn prolongable_examples() {
        let fib = m(&[("a", "ab"), ("b", "a")]);
        assert!(is_prolongable(&fib, &sym("a")));
        assert!(!is_prolongable(&fib, &sym("b")));
        let tm = m(&[("0", "01"), ("1", "10")]);
        assert!(is_prolongable(&tm, &sym("0")));
        assert!(!is_prolongable(&m(&[("a", "a")]), &sym("a")));
    }

    #[test]
    fn limit_status_examples() {
        let fib = m(&[("a", "ab"), ("b", "a")]);
        assert_eq!(limit_status(&fib, &w("a")).unwrap(), LimitStatus::Infinite);
        assert_eq!(
            limit_status(&m(&[("a", "ab"), ("b", "")]), &w("a")).unwrap(),
            LimitStatus::Finite(w("ab"))
        );
        assert_eq!(
            limit_status(&m(&[("a", "ba"), ("b", "ab")]), &w("a")).unwrap(),
            LimitStatus::Diverges
        );
        // Fibonacci from b converges too: b, a, ab, ...
        assert_eq!(limit_status(&fib, &w("b")).unwrap(), LimitStatus::Infinite);
    }

    #[test]
    fn non_growing_first_block_is_peeled() {
        // h^n(b) = a^n b
        let h = m(&[("a", "a"), ("b", "ab")]);
        assert_eq!(
            limit_shape(&h, &w("b"), Caps::default()).unwrap(),
            LimitShape::Periodic { prefix: Word::empty(), period: w("a") }
        );
        // h^n(b) = a^n b c^n: each peel leaves a longer tail behind, so the
        // analysis never sees a repeated state
        let h = m(&[("a", "a"), ("b", "abc"), ("c", "c")]);
        assert_eq!(limit_status(&h, &w("b")).unwrap(), LimitStatus::Undetermined);
        // h^n(b) = a^n b c: the tail stays put and the state repeats
        let h = m(&[("a", "a"), ("b", "abc"), ("c", "")]);
        assert_eq!(limit_status(&h, &w("b")).unwrap(), LimitStatus::Infinite);
        // mortal tail behind a stable block, then a fresh start
        let h = m(&[("x", "xc"), ("c", ""), ("y", "xy")]);
        let sys = MorphicSystem::pure(h, sym("y")).unwrap();
        assert_eq!(fixpoint_prefix(&sys, 6).unwrap(), w("xcxcxc"));
    }

    #[test]
    fn prefix_examples() {
        let fib = MorphicSystem::pure(m(&[("a", "ab"), ("b", "a")]), sym("a")).unwrap();
        assert_eq!(fixpoint_prefix(&fib, 20).unwrap(), w("abaababaabaababaabab"));
        let tm = MorphicSystem::pure(m(&[("0", "01"), ("1", "10")]), sym("0")).unwrap();
        assert_eq!(fixpoint_prefix(&tm, 16).unwrap(), w("0110100110010110"));
        let trib =
            MorphicSystem::pure(m(&[("a", "ab"), ("b", "ac"), ("c", "a")]), sym("a")).unwrap();
        assert_eq!(fixpoint_prefix(&trib, 14).unwrap(), w("abacabaabacaba"));
    }

    #[test]
    fn prefix_errors() {
        let fin = MorphicSystem::pure(m(&[("a", "ab"), ("b", "")]), sym("a")).unwrap();
        assert_eq!(fixpoint_prefix(&fin, 5), Err(EngineError::FiniteLimit(w("ab"))));
        let div = MorphicSystem::pure(m(&[("a", "ba"), ("b", "ab")]), sym("a")).unwrap();
        assert_eq!(fixpoint_prefix(&div, 5), Err(EngineError::NoLimit));
    }

    #[test]
    fn coding_is_applied() {
        let h = m(&[("a", "ab"), ("b", "a")]);
        let ab = h.source().clone();
        let c = Coding::from_map(
            ab.clone(),
            ab,
            [(sym("a"), sym("b")), (sym("b"), sym("a"))],
        )
        .unwrap();
        let sys = MorphicSystem::new(h, c, sym("a")).unwrap();
        assert_eq!(fixpoint_prefix(&sys, 8).unwrap(), w("babbabab"));
    }

    #[test]
    fn stream_cursor() {
        let fib = MorphicSystem::pure(m(&[("a", "ab"), ("b", "a")]), sym("a")).unwrap();
        let mut s = fib.stream().unwrap();
        let got: Word = (0..8).map(|_| s.next_letter().unwrap().unwrap()).collect();
        assert_eq!(got, w("abaababa"));
        assert_eq!(s.cursor(), 8);
    }

    #[test]
    fn fixpoint_letter_examples() {
        let trib = m(&[("a", "ab"), ("b", "ac"), ("c", "a")]);
        assert_eq!(fixpoint_letters(&trib, &sym("a")).unwrap(), set("abc"));
        let h = m(&[("a", "aa"), ("b", "b")]);
        assert_eq!(fixpoint_letters(&h, &sym("a")).unwrap(), set("a"));
        let fib = m(&[("a", "ab"), ("b", "a")]);
        assert_eq!(fixpoint_letters(&fib, &sym("a")).unwrap(), set("ab"));
        // the start letter need not occur in the limit
        let h = m(&[("s", "ab"), ("a", "aab"), ("b", "b")]);
        assert_eq!(fixpoint_letters(&h, &sym("s")).unwrap(), set("ab"));
    }
}
