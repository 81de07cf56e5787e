//! Deterministic finite-state transducers without final states.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::engine::{EngineError, PrefixStream};
use crate::word::{Alphabet, Coding, Morphism, Symbol, Word, WordError};

/// Idle input letters tolerated by [`transduce_prefix`] before giving up.
pub const IDLE_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransducerError {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("unknown state `{0}`")]
    UnknownState(Symbol),
    #[error("transition table is not total; missing {}", fmt_pairs(.0))]
    MissingTransitions(Vec<(Symbol, Symbol)>),
    #[error("two transitions for state `{0}` on `{1}`")]
    DuplicateTransition(Symbol, Symbol),
    #[error("alphabets do not match")]
    AlphabetMismatch,
    #[error("generated state name `{0}` is ambiguous")]
    NameCollision(Symbol),
    #[error("output stalled: {produced} letters after reading {consumed} input letters")]
    InsufficientOutput { consumed: usize, produced: usize },
}

fn fmt_pairs(pairs: &[(Symbol, Symbol)]) -> String {
    let parts: Vec<String> = pairs.iter().map(|(q, a)| format!("({q}, {a})")).collect();
    parts.join(", ")
}

/// Output and final state of a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunResult {
    pub output: Word,
    pub end_state: Symbol,
}

/// A transition as `(state, input letter, next state, output)`.
pub type Transition = (Symbol, Symbol, Symbol, Word);

#[derive(Clone, PartialEq, Eq)]
pub struct Transducer {
    input: Alphabet,
    output: Alphabet,
    states: Alphabet,
    start: usize,
    // both indexed by state * |input| + letter
    delta: Vec<usize>,
    lambda: Vec<Word>,
}

impl Transducer {
    pub fn new<I>(
        input: Alphabet,
        output: Alphabet,
        states: Alphabet,
        start: Symbol,
        transitions: I,
    ) -> Result<Self, TransducerError>
    where
        I: IntoIterator<Item = Transition>,
    {
        let start_i = states
            .index_of(&start)
            .ok_or(TransducerError::UnknownState(start))?;
        let n = input.len();
        let mut slots: Vec<Option<(usize, Word)>> = alloc::vec![None; n * states.len()];
        for (q, a, q2, out) in transitions {
            let qi = states
                .index_of(&q)
                .ok_or_else(|| TransducerError::UnknownState(q.clone()))?;
            let ai = input
                .index_of(&a)
                .ok_or_else(|| WordError::UnknownSymbol(a.clone()))?;
            let q2i = states
                .index_of(&q2)
                .ok_or_else(|| TransducerError::UnknownState(q2.clone()))?;
            if let Some(b) = out.iter().find(|b| !output.contains(b)) {
                return Err(WordError::ForeignLetter {
                    rule: a,
                    letter: b.clone(),
                }
                .into());
            }
            let slot = &mut slots[qi * n + ai];
            if slot.is_some() {
                return Err(TransducerError::DuplicateTransition(q, a));
            }
            *slot = Some((q2i, out));
        }
        let missing: Vec<(Symbol, Symbol)> = slots
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_none())
            .map(|(i, _)| (states.symbol(i / n).clone(), input.symbol(i % n).clone()))
            .collect();
        if !missing.is_empty() {
            return Err(TransducerError::MissingTransitions(missing));
        }
        let (delta, lambda) = slots.into_iter().map(|s| s.expect("checked")).unzip();
        Ok(Transducer {
            input,
            output,
            states,
            start: start_i,
            delta,
            lambda,
        })
    }

    pub fn input(&self) -> &Alphabet {
        &self.input
    }

    pub fn output(&self) -> &Alphabet {
        &self.output
    }

    pub fn states(&self) -> &Alphabet {
        &self.states
    }

    pub fn start(&self) -> &Symbol {
        self.states.symbol(self.start)
    }

    pub fn start_index(&self) -> usize {
        self.start
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    /// Next state by index.
    pub fn delta_at(&self, q: usize, a: usize) -> usize {
        self.delta[q * self.input.len() + a]
    }

    /// Output by index.
    pub fn lambda_at(&self, q: usize, a: usize) -> &Word {
        &self.lambda[q * self.input.len() + a]
    }

    pub fn delta(&self, q: &Symbol, a: &Symbol) -> Result<&Symbol, TransducerError> {
        let (qi, ai) = self.indices(q, a)?;
        Ok(self.states.symbol(self.delta_at(qi, ai)))
    }

    pub fn lambda(&self, q: &Symbol, a: &Symbol) -> Result<&Word, TransducerError> {
        let (qi, ai) = self.indices(q, a)?;
        Ok(self.lambda_at(qi, ai))
    }

    fn indices(&self, q: &Symbol, a: &Symbol) -> Result<(usize, usize), TransducerError> {
        let qi = self
            .states
            .index_of(q)
            .ok_or_else(|| TransducerError::UnknownState(q.clone()))?;
        let ai = self
            .input
            .index_of(a)
            .ok_or_else(|| WordError::UnknownSymbol(a.clone()))?;
        Ok((qi, ai))
    }

    /// All transitions in state-major, letter-minor order.
    pub fn transitions(&self) -> impl Iterator<Item = Transition> + '_ {
        let n = self.input.len();
        (0..self.delta.len()).map(move |i| {
            (
                self.states.symbol(i / n).clone(),
                self.input.symbol(i % n).clone(),
                self.states.symbol(self.delta[i]).clone(),
                self.lambda[i].clone(),
            )
        })
    }

    /// Runs by index, appending to `out`; returns the end state.
    pub fn run_at(&self, q: usize, w: &Word, out: &mut Vec<Symbol>) -> Result<usize, TransducerError> {
        let mut q = q;
        for a in w {
            let ai = self
                .input
                .index_of(a)
                .ok_or_else(|| WordError::UnknownSymbol(a.clone()))?;
            out.extend_from_slice(self.lambda_at(q, ai).letters());
            q = self.delta_at(q, ai);
        }
        Ok(q)
    }

    /// `(λ*(q, w), δ*(q, w))`.
    pub fn run(&self, q: &Symbol, w: &Word) -> Result<RunResult, TransducerError> {
        let qi = self
            .states
            .index_of(q)
            .ok_or_else(|| TransducerError::UnknownState(q.clone()))?;
        let mut out = Vec::new();
        let end = self.run_at(qi, w, &mut out)?;
        Ok(RunResult {
            output: Word::from(out),
            end_state: self.states.symbol(end).clone(),
        })
    }

    /// Output from the start state.
    pub fn apply(&self, w: &Word) -> Result<Word, TransducerError> {
        let mut out = Vec::new();
        self.run_at(self.start, w, &mut out)?;
        Ok(Word::from(out))
    }

    /// The one-state transducer computing `h`.
    pub fn from_morphism(h: &Morphism) -> Transducer {
        Transducer {
            input: h.source().clone(),
            output: h.target().clone(),
            states: Alphabet::new([Symbol::new("q0").expect("valid name")]).expect("one state"),
            start: 0,
            delta: alloc::vec![0; h.source().len()],
            lambda: h.rules().map(|(_, w)| w.clone()).collect(),
        }
    }

    /// `λ(q, a) ≠ ε` for every state and letter.
    pub fn is_non_erasing(&self) -> bool {
        self.lambda.iter().all(|w| !w.is_empty())
    }

    /// The machine that first applies the coding `c` and then runs `self`.
    /// It has the same states, so no product is formed.
    pub fn precompose_coding(&self, c: &Coding) -> Result<Transducer, TransducerError> {
        if c.target() != &self.input {
            return Err(TransducerError::AlphabetMismatch);
        }
        let n = c.source().len();
        let mut delta = Vec::with_capacity(n * self.states.len());
        let mut lambda = Vec::with_capacity(n * self.states.len());
        for q in 0..self.states.len() {
            for a in 0..n {
                let b = self.input.index_of(c.map_at(a)).expect("coding target checked");
                delta.push(self.delta_at(q, b));
                lambda.push(self.lambda_at(q, b).clone());
            }
        }
        Ok(Transducer {
            input: c.source().clone(),
            output: self.output.clone(),
            states: self.states.clone(),
            start: self.start,
            delta,
            lambda,
        })
    }
}

impl fmt::Debug for Transducer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut l = f.debug_list();
        for (q, a, q2, out) in self.transitions() {
            l.entry(&format_args!("{q} {a} -> {q2} / {out}"));
        }
        l.finish()
    }
}

/// The composed machine `outer ∘ inner`: run `inner`, feed its output to
/// `outer`. States are all pairs, named `(qInner|qOuter)`.
pub fn compose(outer: &Transducer, inner: &Transducer) -> Result<Transducer, TransducerError> {
    if inner.output != outer.input {
        return Err(TransducerError::AlphabetMismatch);
    }
    let na = inner.states.len();
    let nb = outer.states.len();
    let name = |i: usize, j: usize| {
        Symbol::new(&format!("({}|{})", inner.states.symbol(i), outer.states.symbol(j)))
    };
    let mut names = Vec::with_capacity(na * nb);
    for i in 0..na {
        for j in 0..nb {
            names.push(name(i, j)?);
        }
    }
    let states = Alphabet::new(names.iter().cloned()).map_err(|e| match e {
        WordError::DuplicateSymbol(s) => TransducerError::NameCollision(s),
        other => other.into(),
    })?;
    let pair_index = |i: usize, j: usize| states.index_of(&names[i * nb + j]).expect("present");

    let n = inner.input.len();
    let mut delta = alloc::vec![0; states.len() * n];
    let mut lambda = alloc::vec![Word::empty(); states.len() * n];
    for i in 0..na {
        for j in 0..nb {
            let q = pair_index(i, j);
            for a in 0..n {
                let mid = inner.lambda_at(i, a);
                let mut out = Vec::new();
                let j2 = outer.run_at(j, mid, &mut out)?;
                delta[q * n + a] = pair_index(inner.delta_at(i, a), j2);
                lambda[q * n + a] = Word::from(out);
            }
        }
    }
    Ok(Transducer {
        input: inner.input.clone(),
        output: outer.output.clone(),
        start: pair_index(inner.start, outer.start),
        states,
        delta,
        lambda,
    })
}

/// The first `n` letters of `M(x)`, where `x` is read from `stream`
/// starting at its cursor.
pub fn transduce_prefix(
    m: &Transducer,
    stream: &mut PrefixStream,
    n: usize,
) -> Result<Word, TransducerError> {
    let mut out: Vec<Symbol> = Vec::with_capacity(n);
    let mut q = m.start;
    let mut consumed = 0;
    let mut idle = 0;
    while out.len() < n {
        let Some(a) = stream.next_letter()? else {
            return Err(TransducerError::InsufficientOutput {
                consumed,
                produced: out.len(),
            });
        };
        consumed += 1;
        let ai = m
            .input
            .index_of(&a)
            .ok_or_else(|| WordError::UnknownSymbol(a.clone()))?;
        let piece = m.lambda_at(q, ai);
        if piece.is_empty() {
            idle += 1;
            if idle >= IDLE_CAP {
                return Err(TransducerError::InsufficientOutput {
                    consumed,
                    produced: out.len(),
                });
            }
        } else {
            idle = 0;
        }
        out.extend_from_slice(piece.letters());
        q = m.delta_at(q, ai);
    }
    out.truncate(n);
    Ok(Word::from(out))
}
