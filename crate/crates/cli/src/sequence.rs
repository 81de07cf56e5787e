//! Named sequences: systems and pipelines, built either as morphic systems
//! or by brute force.

use std::collections::BTreeSet;

use morphic_core::annotate::{transduct_system, AnnotateError, TransductOutcome};
use morphic_core::dekking::{morphic_image_pipeline, DekkingError, PipelineOutcome};
use morphic_core::engine::{is_prolongable, Caps, EngineError, PrefixStream};
use morphic_core::transducer::TransducerError;
use morphic_core::word::WordError;
use morphic_core::{Alphabet, Morphism, MorphicSystem, Symbol, Word};
use thiserror::Error;

use crate::spec::{SpecFile, Step};

#[derive(Debug, Error)]
pub enum SequenceError {
    #[error("no system or pipeline named `{0}`")]
    Unknown(String),
    #[error("`{0}` is not a letter of the sequence")]
    NotALetter(Symbol),
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Transducer(#[from] TransducerError),
    #[error(transparent)]
    Dekking(#[from] DekkingError),
    #[error(transparent)]
    Annotate(#[from] AnnotateError),
}

/// An infinite sequence given by a system, or a finite word.
#[derive(Debug, Clone)]
pub enum Sequence {
    System(MorphicSystem),
    Finite(Word),
}

impl Sequence {
    /// Up to `n` letters; fewer only for a finite sequence.
    pub fn prefix(&self, n: usize, caps: Caps) -> Result<Word, SequenceError> {
        match self {
            Sequence::Finite(w) => Ok(w.prefix(n)),
            Sequence::System(sys) => Ok(PrefixStream::with_caps(sys, caps)?.prefix(n)?),
        }
    }
}

/// Identity on `alphabet` except that `letters` are sent to the empty word.
/// The target is the set of surviving letters (all of `alphabet` if none
/// survive).
pub fn erasing_morphism(alphabet: &Alphabet, letters: &[Symbol]) -> Result<Morphism, SequenceError> {
    if let Some(s) = letters.iter().find(|s| !alphabet.contains(s)) {
        return Err(SequenceError::NotALetter(s.clone()));
    }
    let gamma: BTreeSet<&Symbol> = letters.iter().collect();
    let kept: BTreeSet<Symbol> = alphabet.iter().filter(|s| !gamma.contains(s)).cloned().collect();
    let target = if kept.is_empty() {
        alphabet.clone()
    } else {
        Alphabet::from_set(&kept)?
    };
    let rules = alphabet.iter().map(|s| {
        let img = if gamma.contains(s) {
            Word::empty()
        } else {
            Word::from(vec![s.clone()])
        };
        (s.clone(), img)
    });
    Ok(Morphism::new(alphabet.clone(), target, rules)?)
}

fn step_system(spec: &SpecFile, sys: &MorphicSystem, step: &Step) -> Result<Sequence, SequenceError> {
    let image = |h: &Morphism| -> Result<Sequence, SequenceError> {
        Ok(match morphic_image_pipeline(sys, h)? {
            PipelineOutcome::System(s) => Sequence::System(s),
            PipelineOutcome::Finite(w) => Sequence::Finite(w),
        })
    };
    match step {
        Step::Erase(letters) => image(&erasing_morphism(sys.c.target(), letters)?),
        Step::Apply(m) => image(spec.morphism(m).expect("resolved")),
        Step::Transduce(t) => {
            let t = spec.transducer(t).expect("resolved");
            Ok(match transduct_system(t, sys)? {
                TransductOutcome::System(ts) => Sequence::System(ts.flattened),
                TransductOutcome::Finite(w) => Sequence::Finite(w),
            })
        }
    }
}

fn step_word(spec: &SpecFile, w: &Word, step: &Step) -> Result<Word, SequenceError> {
    match step {
        Step::Erase(letters) => {
            let gamma: BTreeSet<Symbol> = letters.iter().cloned().collect();
            Ok(w.erase(&gamma))
        }
        Step::Apply(m) => Ok(spec.morphism(m).expect("resolved").apply(w)?),
        Step::Transduce(t) => Ok(spec.transducer(t).expect("resolved").apply(w)?),
    }
}

/// The named system, or the pipeline built step by step as morphic systems.
pub fn construct(spec: &SpecFile, name: &str) -> Result<Sequence, SequenceError> {
    if let Some(sys) = spec.system(name) {
        return Ok(Sequence::System(sys));
    }
    let p = spec
        .pipelines
        .get(name)
        .ok_or_else(|| SequenceError::Unknown(name.into()))?;
    let mut seq = Sequence::System(spec.system(&p.system).expect("resolved"));
    for step in &p.steps {
        seq = match &seq {
            Sequence::System(sys) => step_system(spec, sys, step)?,
            Sequence::Finite(w) => Sequence::Finite(step_word(spec, w, step)?),
        };
    }
    Ok(seq)
}

/// `c(h^k(a))` for the least `k` giving `n` letters, iterating `h` by hand
/// when the start letter is prolongable.
fn direct_base(sys: &MorphicSystem, n: usize, caps: Caps) -> Result<Word, SequenceError> {
    if !is_prolongable(&sys.h, &sys.start) {
        return Ok(PrefixStream::with_caps(sys, caps)?.prefix(n)?);
    }
    let mut x = Word::from(vec![sys.start.clone()]);
    while x.len() < n {
        let next = sys.h.apply_bounded(&x, caps.max_letters)?;
        if next.len() == x.len() {
            break;
        }
        x = next;
    }
    Ok(sys.c.apply(&x.prefix(n))?)
}

/// Up to `n` letters of the named sequence, computed by generating the
/// underlying system directly and applying each pipeline step to the
/// resulting word.
pub fn direct_prefix(spec: &SpecFile, name: &str, n: usize, caps: Caps) -> Result<Word, SequenceError> {
    if let Some(sys) = spec.system(name) {
        return direct_base(&sys, n, caps);
    }
    let p = spec
        .pipelines
        .get(name)
        .ok_or_else(|| SequenceError::Unknown(name.into()))?;
    let sys = spec.system(&p.system).expect("resolved");
    let mut len = n.max(16);
    loop {
        let base = direct_base(&sys, len, caps)?;
        let mut w = base.clone();
        for step in &p.steps {
            w = step_word(spec, &w, step)?;
        }
        // a short base means the underlying sequence is finite
        if w.len() >= n || base.len() < len {
            return Ok(w.prefix(n));
        }
        if len >= caps.max_letters {
            return Err(EngineError::IterationCap {
                applications: 0,
                letters: len,
            }
            .into());
        }
        len = (len * 2).min(caps.max_letters);
    }
}
