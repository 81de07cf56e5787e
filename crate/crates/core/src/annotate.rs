//! Transducts of morphic sequences.
//!
//! For a transducer `M` and a morphism `h`, every letter of `h^ω(x1)` is
//! annotated with enough information about the prefix before it to recover
//! the state `M` is in when it reads that letter. The annotation of a prefix
//! `w` is `Θ(w) = (τ_w, τ_{h(w)}, ..., τ_{h^{n+p-1}(w)})`, where `τ_w` is the
//! state transformation of `w` and `(n, p)` are the preperiod and period of
//! `i ↦ (τ_{h^i(a)})_a`. Annotations live in a finite set, and the annotated
//! morphism `h̄` generates the annotated sequence.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::dekking::{morphic_image_pipeline, DekkingError, PipelineOutcome};
use crate::engine::{limit_shape, Caps, EngineError, LimitShape, MorphicSystem};
use crate::transducer::{Transducer, TransducerError};
use crate::word::{Alphabet, Coding, Morphism, Symbol, Word, WordError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnnotateError {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Transducer(#[from] TransducerError),
    #[error(transparent)]
    Dekking(#[from] DekkingError),
    #[error("transducer input alphabet differs from the morphism alphabet")]
    AlphabetMismatch,
    #[error("generated letter name `{0}` is ambiguous")]
    NameCollision(Symbol),
}

fn collision(e: WordError) -> AnnotateError {
    match e {
        WordError::DuplicateSymbol(s) => AnnotateError::NameCollision(s),
        e => e.into(),
    }
}

/// A total map `Q → Q`, stored by state index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateMap(pub Vec<usize>);

impl StateMap {
    pub fn identity(states: usize) -> Self {
        StateMap((0..states).collect())
    }

    pub fn get(&self, q: usize) -> usize {
        self.0[q]
    }

    /// `next ∘ self`: first `self`, then `next`.
    pub fn then(&self, next: &StateMap) -> StateMap {
        StateMap(self.0.iter().map(|&q| next.0[q]).collect())
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &q)| i == q)
    }

    /// Images of the states in order, e.g. `[t,s]`.
    pub fn render(&self, states: &Alphabet) -> String {
        let parts: Vec<&str> = self.0.iter().map(|&q| states.symbol(q).name()).collect();
        format!("[{}]", parts.join(","))
    }
}

fn letter_taus(m: &Transducer) -> Vec<StateMap> {
    (0..m.input().len())
        .map(|a| StateMap((0..m.state_count()).map(|q| m.delta_at(q, a)).collect()))
        .collect()
}

/// `τ_w : q ↦ δ*(q, w)`.
pub fn tau(m: &Transducer, w: &Word) -> Result<StateMap, AnnotateError> {
    let taus = letter_taus(m);
    let mut acc = StateMap::identity(m.state_count());
    for a in w {
        let i = m
            .input()
            .index_of(a)
            .ok_or_else(|| WordError::UnknownSymbol(a.clone()))?;
        acc = acc.then(&taus[i]);
    }
    Ok(acc)
}

fn check_pair(m: &Transducer, h: &Morphism) -> Result<(), AnnotateError> {
    if !h.is_endomorphism() {
        return Err(EngineError::NotEndomorphism.into());
    }
    if m.input() != h.source() {
        return Err(AnnotateError::AlphabetMismatch);
    }
    Ok(())
}

/// `T_0 = (τ_a)_a`, `T_{i+1} = H(T_i)`; returns the orbit up to the first
/// repeat together with `(n, p)`.
fn tau_orbit(m: &Transducer, h: &Morphism) -> (Vec<Vec<StateMap>>, usize, usize) {
    let idx: Vec<Vec<usize>> = h
        .rules()
        .map(|(_, w)| w.iter().map(|s| h.source().index_of(s).expect("endomorphism")).collect())
        .collect();
    let step = |t: &Vec<StateMap>| -> Vec<StateMap> {
        idx.iter()
            .map(|img| {
                img.iter()
                    .fold(StateMap::identity(m.state_count()), |acc, &j| acc.then(&t[j]))
            })
            .collect()
    };
    let mut orbit: Vec<Vec<StateMap>> = Vec::new();
    let mut seen: BTreeMap<Vec<StateMap>, usize> = BTreeMap::new();
    let mut cur = letter_taus(m);
    loop {
        if let Some(&n) = seen.get(&cur) {
            let p = orbit.len() - n;
            return (orbit, n, p);
        }
        seen.insert(cur.clone(), orbit.len());
        let next = step(&cur);
        orbit.push(cur);
        cur = next;
    }
}

/// Preperiod `n` and period `p` of `i ↦ (τ_{h^i(a)})_a`.
pub fn orbit_period(m: &Transducer, h: &Morphism) -> Result<(usize, usize), AnnotateError> {
    check_pair(m, h)?;
    let (_, n, p) = tau_orbit(m, h);
    Ok((n, p))
}

/// `Θ(w)`, a tuple of `n + p` state maps.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ThetaValue(pub Vec<StateMap>);

impl ThetaValue {
    pub fn entries(&self) -> &[StateMap] {
        &self.0
    }

    /// e.g. `([t,s] [s,t] [t,s])`.
    pub fn render(&self, states: &Alphabet) -> String {
        let parts: Vec<String> = self.0.iter().map(|f| f.render(states)).collect();
        format!("({})", parts.join(" "))
    }
}

/// `Θ(wu)` from `Θ(w)` and `Θ(u)`: entrywise, `x_i` then `y_i`.
pub fn theta_concat(x: &ThetaValue, y: &ThetaValue) -> ThetaValue {
    ThetaValue(x.0.iter().zip(&y.0).map(|(a, b)| a.then(b)).collect())
}

/// Everything needed to compute annotations for a fixed `(M, h)`.
#[derive(Debug, Clone)]
pub struct AnnotationContext {
    pub transducer: Transducer,
    pub morphism: Morphism,
    pub n: usize,
    pub p: usize,
    letter_theta: Vec<ThetaValue>,
}

impl AnnotationContext {
    pub fn new(m: &Transducer, h: &Morphism) -> Result<Self, AnnotateError> {
        check_pair(m, h)?;
        let (orbit, n, p) = tau_orbit(m, h);
        let letter_theta = (0..h.source().len())
            .map(|a| ThetaValue(orbit[..n + p].iter().map(|t| t[a].clone()).collect()))
            .collect();
        Ok(AnnotationContext {
            transducer: m.clone(),
            morphism: h.clone(),
            n,
            p,
            letter_theta,
        })
    }

    /// `Θ(ε)`.
    pub fn theta_empty(&self) -> ThetaValue {
        ThetaValue(alloc::vec![StateMap::identity(self.transducer.state_count()); self.n + self.p])
    }

    pub fn theta_letter(&self, a: &Symbol) -> Option<&ThetaValue> {
        self.morphism.source().index_of(a).map(|i| &self.letter_theta[i])
    }

    /// `Θ(w)`, folded from the letter values.
    pub fn theta(&self, w: &Word) -> Result<ThetaValue, AnnotateError> {
        let mut acc = self.theta_empty();
        for a in w {
            let t = self
                .theta_letter(a)
                .ok_or_else(|| WordError::UnknownSymbol(a.clone()))?;
            acc = theta_concat(&acc, t);
        }
        Ok(acc)
    }

    /// `Θ(h(w))` from `Θ(w)`: drop the first entry and repeat entry `n`.
    pub fn theta_step(&self, x: &ThetaValue) -> ThetaValue {
        let mut v: Vec<StateMap> = x.0[1..].to_vec();
        v.push(x.0[self.n].clone());
        ThetaValue(v)
    }

    /// The reachable part of `h̄` from `(x1, Θ(ε))`.
    pub fn annotate(&self, x1: &Symbol) -> Result<AnnotatedMorphism, AnnotateError> {
        let h = &self.morphism;
        let sigma = h.source();
        if !sigma.contains(x1) {
            return Err(EngineError::UnknownStart(x1.clone()).into());
        }
        let mut legend: Vec<ThetaValue> = Vec::new();
        let mut index: BTreeMap<ThetaValue, usize> = BTreeMap::new();
        let mut intern = |t: ThetaValue| -> usize {
            *index.entry(t.clone()).or_insert_with(|| {
                legend.push(t);
                legend.len() - 1
            })
        };
        let name = |s: &Symbol, i: usize| Symbol::new(&format!("({s}|{i})"));

        let start_theta = intern(self.theta_empty());
        let mut rules: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
        let mut queue: VecDeque<(usize, usize)> = VecDeque::new();
        let start = (sigma.index_of(x1).expect("checked"), start_theta);
        queue.push_back(start);
        let mut thetas: Vec<ThetaValue> = alloc::vec![self.theta_empty()];
        while let Some((s, ti)) = queue.pop_front() {
            if rules.contains_key(&(s, ti)) {
                continue;
            }
            let mut cur = self.theta_step(&thetas[ti]);
            let mut img = Vec::new();
            for b in h.image_at(s) {
                let bi = sigma.index_of(b).expect("endomorphism");
                let k = intern(cur.clone());
                if k == thetas.len() {
                    thetas.push(cur.clone());
                }
                img.push((bi, k));
                cur = theta_concat(&cur, &self.letter_theta[bi]);
            }
            for &l in &img {
                if !rules.contains_key(&l) {
                    queue.push_back(l);
                }
            }
            rules.insert((s, ti), img);
        }

        let mut named: BTreeMap<(usize, usize), Symbol> = BTreeMap::new();
        for &(s, t) in rules.keys() {
            named.insert((s, t), name(sigma.symbol(s), t)?);
        }
        let alphabet = Alphabet::new(named.values().cloned()).map_err(collision)?;
        let morphism = Morphism::new(
            alphabet.clone(),
            alphabet.clone(),
            rules.iter().map(|(k, img)| {
                (
                    named[k].clone(),
                    img.iter().map(|l| named[l].clone()).collect::<Word>(),
                )
            }),
        )?;
        let base = named
            .iter()
            .map(|(&(s, _), n)| (n.clone(), sigma.symbol(s).clone()))
            .collect();
        let theta_index = named.iter().map(|(&(_, t), n)| (n.clone(), t)).collect();
        Ok(AnnotatedMorphism {
            morphism,
            start: named[&start].clone(),
            base,
            theta_index,
            legend,
        })
    }

    /// `(σ, Θ(w)) ↦ (σ, τ_w(q0))`.
    pub fn state_coding(&self, ann: &AnnotatedMorphism) -> Result<Coding, AnnotateError> {
        let m = &self.transducer;
        let pairs = pair_alphabet(m)?;
        let q0 = m.start_index();
        let map = ann.morphism.source().iter().map(|s| {
            let theta = &ann.legend[ann.theta_index[s]];
            let q = theta.0[0].get(q0);
            (s.clone(), pair_name(&ann.base[s], m.states().symbol(q)))
        });
        let map: Vec<(Symbol, Result<Symbol, WordError>)> = map.collect();
        let map = map
            .into_iter()
            .map(|(s, p)| p.map(|p| (s, p)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Coding::from_map(ann.morphism.source().clone(), pairs, map)?)
    }
}

/// The reachable annotated morphism and its bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedMorphism {
    pub morphism: Morphism,
    pub start: Symbol,
    /// Underlying letter of each annotated letter.
    pub base: BTreeMap<Symbol, Symbol>,
    /// Index into `legend` of each annotated letter.
    pub theta_index: BTreeMap<Symbol, usize>,
    /// Annotation values in discovery order; index 0 is `Θ(ε)`.
    pub legend: Vec<ThetaValue>,
}

impl AnnotatedMorphism {
    /// Projection to the underlying letters.
    pub fn drop_annotations(&self, w: &Word) -> Result<Word, AnnotateError> {
        w.iter()
            .map(|s| {
                self.base
                    .get(s)
                    .cloned()
                    .ok_or_else(|| WordError::UnknownSymbol(s.clone()).into())
            })
            .collect()
    }
}

pub fn annotate_morphism(
    m: &Transducer,
    h: &Morphism,
    x1: &Symbol,
) -> Result<AnnotatedMorphism, AnnotateError> {
    AnnotationContext::new(m, h)?.annotate(x1)
}

/// Name of the pair letter `(σ, q)`.
pub fn pair_name(sigma: &Symbol, q: &Symbol) -> Result<Symbol, WordError> {
    Symbol::new(&format!("({sigma},{q})"))
}

/// All letters `(σ, q)` for `σ` in the input alphabet and `q` a state.
pub fn pair_alphabet(m: &Transducer) -> Result<Alphabet, AnnotateError> {
    let mut names = Vec::new();
    for s in m.input() {
        for q in m.states() {
            names.push(pair_name(s, q)?);
        }
    }
    Alphabet::new(names).map_err(collision)
}

/// `(σ, q) ↦ λ(q, σ)`.
pub fn output_morphism(m: &Transducer) -> Result<Morphism, AnnotateError> {
    let pairs = pair_alphabet(m)?;
    let mut rules = Vec::new();
    for (ai, s) in m.input().iter().enumerate() {
        for (qi, q) in m.states().iter().enumerate() {
            rules.push((pair_name(s, q)?, m.lambda_at(qi, ai).clone()));
        }
    }
    Ok(Morphism::new(pairs, m.output().clone(), rules)?)
}

/// All the pieces realising `M(c(h^ω(x1)))` as a morphic sequence.
#[derive(Debug, Clone)]
pub struct TransductSystem {
    /// Context for `M ∘ c` and `h`.
    pub context: AnnotationContext,
    pub annotated: AnnotatedMorphism,
    pub state_coding: Coding,
    pub output: Morphism,
    /// A single morphic system generating the transduct.
    pub flattened: MorphicSystem,
}

impl TransductSystem {
    /// The annotated system `(h̄, state coding, start)`, generating `z`.
    pub fn annotated_system(&self) -> MorphicSystem {
        MorphicSystem::new(
            self.annotated.morphism.clone(),
            self.state_coding.clone(),
            self.annotated.start.clone(),
        )
        .expect("constructed consistently")
    }
}

#[derive(Debug, Clone)]
pub enum TransductOutcome {
    System(TransductSystem),
    Finite(Word),
}

/// `M(x)` for the sequence `x` generated by `sys`, as a morphic system when
/// it is infinite.
pub fn transduct_system(
    m: &Transducer,
    sys: &MorphicSystem,
) -> Result<TransductOutcome, AnnotateError> {
    let mc = m.precompose_coding(&sys.c)?;
    let start = Word::from(alloc::vec![sys.start.clone()]);
    match limit_shape(&sys.h, &start, Caps::default())? {
        LimitShape::Finite(w) => return Ok(TransductOutcome::Finite(mc.apply(&w)?)),
        LimitShape::Diverges => return Err(EngineError::NoLimit.into()),
        LimitShape::Undetermined => {
            return Err(EngineError::IterationCap {
                applications: Caps::default().max_applications,
                letters: 0,
            }
            .into())
        }
        _ => {}
    }
    let context = AnnotationContext::new(&mc, &sys.h)?;
    let annotated = context.annotate(&sys.start)?;
    let state_coding = context.state_coding(&annotated)?;
    let output = output_morphism(&mc)?;
    let z = MorphicSystem::new(
        annotated.morphism.clone(),
        state_coding.clone(),
        annotated.start.clone(),
    )?;
    let flattened = match morphic_image_pipeline(&z, &output)? {
        PipelineOutcome::System(s) => s,
        PipelineOutcome::Finite(w) => return Ok(TransductOutcome::Finite(w)),
    };
    Ok(TransductOutcome::System(TransductSystem {
        context,
        annotated,
        state_coding,
        output,
        flattened,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::fixpoint_prefix;

    fn sym(s: &str) -> Symbol {
        Symbol::new(s).unwrap()
    }

    fn w(s: &str) -> Word {
        Word::from_chars(s).unwrap()
    }

    fn doubling() -> Transducer {
        let ab = Alphabet::from_chars("ab").unwrap();
        let st = Alphabet::from_chars("st").unwrap();
        let t = ["a", "b"].into_iter().flat_map(|a| {
            [
                (sym("s"), sym(a), sym("t"), w(&format!("{a}{a}"))),
                (sym("t"), sym(a), sym("s"), w(a)),
            ]
        });
        Transducer::new(ab.clone(), ab, st, sym("s"), t).unwrap()
    }

    fn fib() -> Morphism {
        Morphism::from_char_rules(&[("a", "ab"), ("b", "a")]).unwrap()
    }

    const NU: [usize; 2] = [1, 0];
    const ID: [usize; 2] = [0, 1];

    fn theta(entries: &[[usize; 2]]) -> ThetaValue {
        ThetaValue(entries.iter().map(|e| StateMap(e.to_vec())).collect())
    }

    #[test]
    fn tau_examples() {
        let d = doubling();
        assert_eq!(tau(&d, &w("a")).unwrap(), StateMap(NU.to_vec()));
        assert_eq!(tau(&d, &w("ab")).unwrap(), StateMap(ID.to_vec()));
        assert!(tau(&d, &Word::empty()).unwrap().is_identity());
    }

    #[test]
    fn fibonacci_doubling_thetas() {
        let ctx = AnnotationContext::new(&doubling(), &fib()).unwrap();
        assert_eq!((ctx.n, ctx.p), (0, 3));
        assert_eq!(ctx.theta(&w("a")).unwrap(), theta(&[NU, ID, NU]));
        assert_eq!(ctx.theta(&w("b")).unwrap(), theta(&[NU, NU, ID]));
        assert_eq!(ctx.theta_empty(), theta(&[ID, ID, ID]));
        assert_eq!(ctx.theta(&w("ab")).unwrap(), theta(&[ID, NU, NU]));
        let ta = ctx.theta(&w("a")).unwrap();
        assert_eq!(ctx.theta_step(&ta), ctx.theta(&w("ab")).unwrap());
    }

    #[test]
    fn fibonacci_doubling_annotation() {
        let ann = annotate_morphism(&doubling(), &fib(), &sym("a")).unwrap();
        assert_eq!(ann.morphism.source().len(), 8);
        let rules = [
            ("(a|0)", "(a|0) (b|1)"),
            ("(a|1)", "(a|2) (b|3)"),
            ("(a|2)", "(a|3) (b|2)"),
            ("(a|3)", "(a|1) (b|0)"),
            ("(b|0)", "(a|0)"),
            ("(b|1)", "(a|2)"),
            ("(b|2)", "(a|3)"),
            ("(b|3)", "(a|1)"),
        ];
        for (l, r) in rules {
            assert_eq!(ann.morphism.image(&sym(l)).unwrap(), &Word::from_tokens(r).unwrap());
        }
        assert_eq!(ann.start, sym("(a|0)"));
        let img = ann.morphism.image(&sym("(a|0)")).unwrap();
        assert_eq!(ann.drop_annotations(img).unwrap(), w("ab"));
    }

    #[test]
    fn state_coding_and_z() {
        let ctx = AnnotationContext::new(&doubling(), &fib()).unwrap();
        let ann = ctx.annotate(&sym("a")).unwrap();
        let c = ctx.state_coding(&ann).unwrap();
        for (l, p) in [("(a|0)", "(a,s)"), ("(a|1)", "(a,t)"), ("(a|2)", "(a,s)"), ("(a|3)", "(a,t)")] {
            assert_eq!(c.map(&sym(l)), Some(&sym(p)));
        }
        let z = MorphicSystem::new(ann.morphism.clone(), c, ann.start.clone()).unwrap();
        let got = fixpoint_prefix(&z, 10).unwrap();
        let want = "(a,s) (b,t) (a,s) (a,t) (b,s) (a,t) (b,s) (a,t) (a,s) (b,t)";
        assert_eq!(got, Word::from_tokens(want).unwrap());
    }

    #[test]
    fn output_morphism_examples() {
        let out = output_morphism(&doubling()).unwrap();
        assert_eq!(out.image(&sym("(a,s)")), Some(&w("aa")));
        assert_eq!(out.image(&sym("(b,t)")), Some(&w("b")));
    }

    #[test]
    fn identity_transducer_is_trivial() {
        let id = Transducer::from_morphism(&Morphism::identity(fib().source()));
        assert_eq!(orbit_period(&id, &fib()).unwrap(), (0, 1));
        let ann = annotate_morphism(&id, &fib(), &sym("a")).unwrap();
        assert_eq!(ann.legend.len(), 1);
        assert_eq!(ann.morphism.source().len(), 2);
    }

    #[test]
    fn transduct_of_fibonacci() {
        let sys = MorphicSystem::pure(fib(), sym("a")).unwrap();
        let TransductOutcome::System(t) = transduct_system(&doubling(), &sys).unwrap() else {
            panic!("infinite transduct expected");
        };
        let got = fixpoint_prefix(&t.flattened, 12).unwrap();
        assert_eq!(got, w("aabaaabbabba"));
    }
}
