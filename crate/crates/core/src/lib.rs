//! Morphic sequences and their closure under finite-state transduction.
//!
//! The crate is `no_std` and only needs `alloc`. Modules, bottom-up:
//!
//! * [`word`]: symbols, alphabets, words, morphisms, codings.
//! * [`engine`]: limits of iterated morphisms and lazy prefix generation.
//! * [`transducer`]: deterministic finite-state transducers.
//! * [`dekking`]: erasure and image constructions for morphic sequences.
//! * [`annotate`]: the annotated morphism that realises a transduct as a
//!   morphic sequence.
//! * [`spectral`]: incidence matrices, characteristic polynomials, Perron
//!   roots and the independence test.
//! * [`periodicity`]: bounded detection of eventual periodicity.

#![no_std]

extern crate alloc;

pub mod annotate;
pub mod dekking;
pub mod engine;
pub mod periodicity;
pub mod spectral;
pub mod transducer;
pub mod word;

pub use engine::{LimitShape, LimitStatus, MorphicSystem, PrefixStream};
pub use transducer::Transducer;
pub use word::{Alphabet, Coding, Morphism, Symbol, Word};
