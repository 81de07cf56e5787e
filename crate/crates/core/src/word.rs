//! Symbols, alphabets, finite words, morphisms and codings.
//!
//! Symbols are named text tokens rather than integers so that generated
//! alphabets (block letters, annotated letters, product states) keep a
//! readable name. Everything here is an immutable value: operations return
//! fresh words and morphisms.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::hash::{Hash, Hasher};

use thiserror::Error;

/// Characters that may never appear in a symbol name because the spec-file
/// grammar uses them as punctuation.
pub const PUNCTUATION: &[char] = &[';', '{', '}', '=', ':', '/', '#'];

/// Characters reserved for generated names (block letters, annotations,
/// product states). User-facing front ends should reject them in input.
pub const RESERVED: &[char] = &['[', ']', '(', ')', '|'];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordError {
    #[error("invalid symbol name {0:?}")]
    InvalidSymbol(String),
    #[error("an alphabet must contain at least one symbol")]
    EmptyAlphabet,
    #[error("duplicate symbol `{0}`")]
    DuplicateSymbol(Symbol),
    #[error("symbol `{0}` is not in the alphabet")]
    UnknownSymbol(Symbol),
    #[error("no rule for symbol `{0}`")]
    MissingRule(Symbol),
    #[error("more than one rule for symbol `{0}`")]
    DuplicateRule(Symbol),
    #[error("rule for `{rule}` uses `{letter}`, which is not in the target alphabet")]
    ForeignLetter { rule: Symbol, letter: Symbol },
    #[error("alphabets do not match")]
    AlphabetMismatch,
    #[error("rule for `{0}` does not have length 1")]
    NotACoding(Symbol),
    #[error("word grew past {limit} letters")]
    TooLong { limit: usize },
}

/// A letter, identified by its name.
#[derive(Clone)]
pub struct Symbol(Arc<str>);

impl Symbol {
    /// Creates a symbol, rejecting empty names, whitespace, grammar
    /// punctuation and the `->` arrow.
    pub fn new(name: &str) -> Result<Self, WordError> {
        if name.is_empty()
            || name.chars().any(|c| c.is_whitespace() || PUNCTUATION.contains(&c))
            || name.contains("->")
        {
            return Err(WordError::InvalidSymbol(name.into()));
        }
        Ok(Symbol(Arc::from(name)))
    }

    /// Like [`Symbol::new`] but additionally rejects the characters reserved
    /// for generated names.
    pub fn user(name: &str) -> Result<Self, WordError> {
        if name.chars().any(|c| RESERVED.contains(&c)) {
            return Err(WordError::InvalidSymbol(name.into()));
        }
        Symbol::new(name)
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    /// Number of characters in the name.
    pub fn width(&self) -> usize {
        self.0.chars().count()
    }
}

impl PartialEq for Symbol {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl Eq for Symbol {}

impl PartialOrd for Symbol {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Symbol {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }
}

impl Hash for Symbol {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash(state)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A finite, non-empty, sorted set of symbols.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Alphabet(Arc<[Symbol]>);

impl Alphabet {
    /// Builds an alphabet; duplicates are an error.
    pub fn new<I: IntoIterator<Item = Symbol>>(symbols: I) -> Result<Self, WordError> {
        let mut v: Vec<Symbol> = symbols.into_iter().collect();
        v.sort();
        for pair in v.windows(2) {
            if pair[0] == pair[1] {
                return Err(WordError::DuplicateSymbol(pair[0].clone()));
            }
        }
        if v.is_empty() {
            return Err(WordError::EmptyAlphabet);
        }
        Ok(Alphabet(v.into()))
    }

    /// Builds an alphabet from a set (duplicates are impossible).
    pub fn from_set(set: &BTreeSet<Symbol>) -> Result<Self, WordError> {
        if set.is_empty() {
            return Err(WordError::EmptyAlphabet);
        }
        Ok(Alphabet(set.iter().cloned().collect::<Vec<_>>().into()))
    }

    /// One symbol per character of `letters`.
    pub fn from_chars(letters: &str) -> Result<Self, WordError> {
        let mut buf = [0u8; 4];
        let syms = letters
            .chars()
            .map(|c| Symbol::new(c.encode_utf8(&mut buf)))
            .collect::<Result<Vec<_>, _>>()?;
        Alphabet::new(syms)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Symbol> {
        self.0.iter()
    }

    pub fn index_of(&self, s: &Symbol) -> Option<usize> {
        self.0.binary_search(s).ok()
    }

    pub fn contains(&self, s: &Symbol) -> bool {
        self.index_of(s).is_some()
    }

    pub fn symbol(&self, index: usize) -> &Symbol {
        &self.0[index]
    }

    pub fn to_set(&self) -> BTreeSet<Symbol> {
        self.0.iter().cloned().collect()
    }

    /// True when every name is a single character.
    pub fn is_single_char(&self) -> bool {
        self.0.iter().all(|s| s.width() == 1)
    }
}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.0.iter()).finish()
    }
}

impl<'a> IntoIterator for &'a Alphabet {
    type Item = &'a Symbol;
    type IntoIter = core::slice::Iter<'a, Symbol>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// A finite word, possibly empty.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(Vec<Symbol>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// One symbol per character, e.g. `Word::from_chars("abaab")`.
    pub fn from_chars(letters: &str) -> Result<Self, WordError> {
        let mut buf = [0u8; 4];
        letters
            .chars()
            .map(|c| Symbol::new(c.encode_utf8(&mut buf)))
            .collect::<Result<Vec<_>, _>>()
            .map(Word)
    }

    /// Whitespace-separated symbol names.
    pub fn from_tokens(text: &str) -> Result<Self, WordError> {
        text.split_whitespace()
            .map(Symbol::new)
            .collect::<Result<Vec<_>, _>>()
            .map(Word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Symbol] {
        &self.0
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Symbol> {
        self.0.iter()
    }

    pub fn first(&self) -> Option<&Symbol> {
        self.0.first()
    }

    pub fn into_vec(self) -> Vec<Symbol> {
        self.0
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// The first `n` letters (or the whole word if shorter).
    pub fn prefix(&self, n: usize) -> Word {
        Word(self.0[..n.min(self.len())].to_vec())
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.0.starts_with(&self.0)
    }

    /// The set of letters occurring in the word.
    pub fn letter_set(&self) -> BTreeSet<Symbol> {
        self.0.iter().cloned().collect()
    }

    /// `|w|_a`, the number of positions holding `a`.
    pub fn occurrences(&self, a: &Symbol) -> usize {
        self.0.iter().filter(|s| *s == a).count()
    }

    /// Removes every occurrence of the letters in `gamma`.
    pub fn erase(&self, gamma: &BTreeSet<Symbol>) -> Word {
        Word(self.0.iter().filter(|s| !gamma.contains(*s)).cloned().collect())
    }

    /// Names concatenated without separator; handy for single-character
    /// alphabets.
    pub fn compact(&self) -> String {
        self.0.iter().map(|s| s.name()).collect()
    }

    /// Names separated by single spaces.
    pub fn spaced(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(s.name());
        }
        out
    }
}

impl From<Vec<Symbol>> for Word {
    fn from(v: Vec<Symbol>) -> Self {
        Word(v)
    }
}

impl FromIterator<Symbol> for Word {
    fn from_iter<I: IntoIterator<Item = Symbol>>(iter: I) -> Self {
        Word(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a Word {
    type Item = &'a Symbol;
    type IntoIter = core::slice::Iter<'a, Symbol>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.iter().all(|s| s.width() == 1) {
            f.write_str(&self.compact())
        } else {
            f.write_str(&self.spaced())
        }
    }
}

/// Length profile of a morphism.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Uniformity {
    pub non_erasing: bool,
    pub uniform_k: Option<usize>,
    pub is_coding: bool,
}

/// A map `h : Σ → Γ*`, extended to words by concatenation.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Morphism {
    source: Alphabet,
    target: Alphabet,
    // indexed by the position of the letter in `source`
    rules: Arc<[Word]>,
}

impl Morphism {
    pub fn new<I>(source: Alphabet, target: Alphabet, rules: I) -> Result<Self, WordError>
    where
        I: IntoIterator<Item = (Symbol, Word)>,
    {
        let mut slots: Vec<Option<Word>> = alloc::vec![None; source.len()];
        for (sym, image) in rules {
            let i = source
                .index_of(&sym)
                .ok_or_else(|| WordError::UnknownSymbol(sym.clone()))?;
            if let Some(letter) = image.iter().find(|l| !target.contains(l)) {
                return Err(WordError::ForeignLetter {
                    rule: sym,
                    letter: letter.clone(),
                });
            }
            if slots[i].is_some() {
                return Err(WordError::DuplicateRule(sym));
            }
            slots[i] = Some(image);
        }
        let rules = slots
            .into_iter()
            .enumerate()
            .map(|(i, w)| w.ok_or_else(|| WordError::MissingRule(source.symbol(i).clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Morphism {
            source,
            target,
            rules: rules.into(),
        })
    }

    /// Endomorphism over single-character letters from `(letter, image)`
    /// pairs, e.g. `[("a", "ab"), ("b", "a")]`.
    pub fn from_char_rules(rules: &[(&str, &str)]) -> Result<Self, WordError> {
        let mut letters = BTreeSet::new();
        let mut parsed = Vec::new();
        for (a, img) in rules {
            let a = Symbol::new(a)?;
            let img = Word::from_chars(img)?;
            letters.insert(a.clone());
            letters.extend(img.iter().cloned());
            parsed.push((a, img));
        }
        let alphabet = Alphabet::from_set(&letters)?;
        Morphism::new(alphabet.clone(), alphabet, parsed)
    }

    pub fn identity(alphabet: &Alphabet) -> Self {
        let rules: Vec<Word> = alphabet.iter().map(|s| Word(alloc::vec![s.clone()])).collect();
        Morphism {
            source: alphabet.clone(),
            target: alphabet.clone(),
            rules: rules.into(),
        }
    }

    pub fn source(&self) -> &Alphabet {
        &self.source
    }

    pub fn target(&self) -> &Alphabet {
        &self.target
    }

    pub fn is_endomorphism(&self) -> bool {
        self.source == self.target
    }

    pub fn image(&self, a: &Symbol) -> Option<&Word> {
        self.source.index_of(a).map(|i| &self.rules[i])
    }

    /// Image of the `index`-th source letter.
    pub fn image_at(&self, index: usize) -> &Word {
        &self.rules[index]
    }

    /// `(letter, image)` pairs in alphabet order.
    pub fn rules(&self) -> impl Iterator<Item = (&Symbol, &Word)> {
        self.source.iter().zip(self.rules.iter())
    }

    /// `h(w)`: concatenation of the images of the letters of `w`.
    pub fn apply(&self, w: &Word) -> Result<Word, WordError> {
        let mut out = Vec::new();
        for a in w {
            let i = self
                .source
                .index_of(a)
                .ok_or_else(|| WordError::UnknownSymbol(a.clone()))?;
            out.extend_from_slice(&self.rules[i].0);
        }
        Ok(Word(out))
    }

    /// Like [`Morphism::apply`] but fails once the result exceeds `limit`.
    pub fn apply_bounded(&self, w: &Word, limit: usize) -> Result<Word, WordError> {
        let mut out = Vec::new();
        for a in w {
            let i = self
                .source
                .index_of(a)
                .ok_or_else(|| WordError::UnknownSymbol(a.clone()))?;
            out.extend_from_slice(&self.rules[i].0);
            if out.len() > limit {
                return Err(WordError::TooLong { limit });
            }
        }
        Ok(Word(out))
    }

    /// `self ∘ inner`: the rule for `a` is `self(inner(a))`.
    pub fn compose(&self, inner: &Morphism) -> Result<Morphism, WordError> {
        if inner.target != self.source {
            return Err(WordError::AlphabetMismatch);
        }
        let rules = inner
            .rules
            .iter()
            .map(|w| self.apply(w))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Morphism {
            source: inner.source.clone(),
            target: self.target.clone(),
            rules: rules.into(),
        })
    }

    /// `h^r` for an endomorphism, failing when an image exceeds `limit`.
    pub fn power(&self, r: usize, limit: usize) -> Result<Morphism, WordError> {
        if !self.is_endomorphism() {
            return Err(WordError::AlphabetMismatch);
        }
        let mut rules: Vec<Word> = self
            .source
            .iter()
            .map(|s| Word(alloc::vec![s.clone()]))
            .collect();
        for _ in 0..r {
            rules = rules
                .iter()
                .map(|w| self.apply_bounded(w, limit))
                .collect::<Result<Vec<_>, _>>()?;
        }
        Ok(Morphism {
            source: self.source.clone(),
            target: self.target.clone(),
            rules: rules.into(),
        })
    }

    /// Restriction to the letters of `letters` (a subset of the source).
    pub fn restrict(&self, letters: &Alphabet) -> Result<Morphism, WordError> {
        let rules = letters
            .iter()
            .map(|s| {
                self.image(s)
                    .cloned()
                    .ok_or_else(|| WordError::UnknownSymbol(s.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Morphism {
            source: letters.clone(),
            target: self.target.clone(),
            rules: rules.into(),
        })
    }

    /// Same rules with the target alphabet replaced; every image must stay
    /// inside the new target.
    pub fn with_target(&self, target: Alphabet) -> Result<Morphism, WordError> {
        Morphism::new(
            self.source.clone(),
            target,
            self.rules().map(|(s, w)| (s.clone(), w.clone())),
        )
    }

    /// Letters mapped to the empty word.
    pub fn erased_letters(&self) -> BTreeSet<Symbol> {
        self.rules()
            .filter(|(_, w)| w.is_empty())
            .map(|(s, _)| s.clone())
            .collect()
    }

    pub fn classify_uniformity(&self) -> Uniformity {
        let non_erasing = self.rules.iter().all(|w| !w.is_empty());
        let first = self.rules[0].len();
        let uniform_k = self.rules.iter().all(|w| w.len() == first).then_some(first);
        Uniformity {
            non_erasing,
            uniform_k,
            is_coding: uniform_k == Some(1),
        }
    }

    pub fn is_non_erasing(&self) -> bool {
        self.rules.iter().all(|w| !w.is_empty())
    }
}

impl fmt::Debug for Morphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for (s, w) in self.rules() {
            m.entry(s, w);
        }
        m.finish()
    }
}

/// A 1-uniform morphism.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Coding(Morphism);

impl Coding {
    pub fn new(m: Morphism) -> Result<Self, WordError> {
        if let Some((s, _)) = m.rules().find(|(_, w)| w.len() != 1) {
            return Err(WordError::NotACoding(s.clone()));
        }
        Ok(Coding(m))
    }

    pub fn identity(alphabet: &Alphabet) -> Self {
        Coding(Morphism::identity(alphabet))
    }

    /// Coding from a total letter-to-letter map.
    pub fn from_map<I>(source: Alphabet, target: Alphabet, map: I) -> Result<Self, WordError>
    where
        I: IntoIterator<Item = (Symbol, Symbol)>,
    {
        Morphism::new(
            source,
            target,
            map.into_iter().map(|(a, b)| (a, Word(alloc::vec![b]))),
        )
        .map(Coding)
    }

    pub fn as_morphism(&self) -> &Morphism {
        &self.0
    }

    pub fn into_morphism(self) -> Morphism {
        self.0
    }

    pub fn source(&self) -> &Alphabet {
        self.0.source()
    }

    pub fn target(&self) -> &Alphabet {
        self.0.target()
    }

    pub fn map(&self, a: &Symbol) -> Option<&Symbol> {
        self.0.image(a).map(|w| &w.0[0])
    }

    pub fn map_at(&self, index: usize) -> &Symbol {
        &self.0.rules[index].0[0]
    }

    pub fn apply(&self, w: &Word) -> Result<Word, WordError> {
        self.0.apply(w)
    }

    pub fn is_identity(&self) -> bool {
        self.0.source == self.0.target && self.0.rules().all(|(s, w)| &w.0[0] == s)
    }

    /// `self ∘ inner`, again a coding.
    pub fn compose(&self, inner: &Coding) -> Result<Coding, WordError> {
        self.0.compose(&inner.0).map(Coding)
    }
}

impl fmt::Debug for Coding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}
