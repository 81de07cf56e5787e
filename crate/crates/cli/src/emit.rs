//! Writing declarations back out in the spec-file format.

use std::fmt::Write;

use morphic_core::annotate::{AnnotatedMorphism, TransductSystem};
use morphic_core::dekking::ErasureSystem;
use morphic_core::{Alphabet, Coding, Morphism, MorphicSystem, Transducer, Word};

use crate::spec::{
    CodingDecl, MorphismDecl, PipelineDecl, SpecFile, Step, SystemDecl, TransducerDecl,
};

fn spaced(w: &Word) -> String {
    w.spaced()
}

fn names(a: &Alphabet) -> String {
    a.iter().map(|s| s.name()).collect::<Vec<_>>().join(" ")
}

/// The whole file: alphabets, morphisms, codings, transducers, systems and
/// pipelines, each sorted by name.
pub fn emit_spec(spec: &SpecFile) -> String {
    let mut out = String::new();
    for (name, a) in &spec.alphabets {
        writeln!(out, "alphabet {name} = {} ;", names(a)).unwrap();
    }
    for (name, d) in &spec.morphisms {
        rules(&mut out, "morphism", name, &d.source, &d.target, &d.morphism);
    }
    for (name, d) in &spec.codings {
        rules(&mut out, "coding", name, &d.source, &d.target, d.coding.as_morphism());
    }
    for (name, d) in &spec.transducers {
        let t = &d.transducer;
        writeln!(out, "transducer {name} {{").unwrap();
        writeln!(out, "  input = {} ;", d.input).unwrap();
        writeln!(out, "  output = {} ;", d.output).unwrap();
        writeln!(out, "  states = {} ;", names(t.states())).unwrap();
        writeln!(out, "  start = {} ;", t.start()).unwrap();
        for (q, a, q2, w) in t.transitions() {
            let sep = if w.is_empty() { "" } else { " " };
            writeln!(out, "  {q} {a} -> {q2} /{sep}{} ;", spaced(&w)).unwrap();
        }
        out.push_str("}\n");
    }
    for (name, d) in &spec.systems {
        write!(out, "system {name} {{ morphism = {} ;", d.morphism).unwrap();
        if let Some(c) = &d.coding {
            write!(out, " coding = {c} ;").unwrap();
        }
        writeln!(out, " start = {} ; }}", d.start).unwrap();
    }
    for (name, d) in &spec.pipelines {
        write!(out, "pipeline {name} {{ system = {} ;", d.system).unwrap();
        for step in &d.steps {
            match step {
                Step::Erase(syms) => {
                    let list: Vec<&str> = syms.iter().map(|s| s.name()).collect();
                    write!(out, " erase = {} ;", list.join(" ")).unwrap();
                }
                Step::Apply(m) => write!(out, " apply = {m} ;").unwrap(),
                Step::Transduce(t) => write!(out, " transduce = {t} ;").unwrap(),
            }
        }
        out.push_str(" }\n");
    }
    out
}

fn rules(out: &mut String, kw: &str, name: &str, source: &str, target: &str, m: &Morphism) {
    writeln!(out, "{kw} {name} : {source} -> {target} {{").unwrap();
    for (a, w) in m.rules() {
        let sep = if w.is_empty() { "" } else { " " };
        writeln!(out, "  {a} ->{sep}{} ;", spaced(w)).unwrap();
    }
    out.push_str("}\n");
}

/// `# `-prefixed lines followed by the declarations.
pub fn with_comments(comments: &[String], spec: &SpecFile) -> String {
    let mut out = String::new();
    for c in comments {
        for line in c.lines() {
            writeln!(out, "# {line}").unwrap();
        }
    }
    out.push_str(&emit_spec(spec));
    out
}

/// Reuses an alphabet already in `spec` with the same letters, otherwise
/// adds it under `name`.
pub fn add_alphabet(spec: &mut SpecFile, name: &str, a: &Alphabet) -> String {
    if let Some((n, _)) = spec.alphabets.iter().find(|(_, b)| *b == a) {
        return n.clone();
    }
    let mut candidate = name.to_string();
    let mut k = 2;
    while spec.alphabets.contains_key(&candidate) {
        candidate = format!("{name}{k}");
        k += 1;
    }
    spec.alphabets.insert(candidate.clone(), a.clone());
    candidate
}

pub fn add_morphism(spec: &mut SpecFile, name: &str, m: &Morphism) {
    let source = add_alphabet(spec, &format!("{name}_src"), m.source());
    let target = add_alphabet(spec, &format!("{name}_tgt"), m.target());
    spec.morphisms.insert(
        name.into(),
        MorphismDecl {
            source,
            target,
            morphism: m.clone(),
        },
    );
}

pub fn add_coding(spec: &mut SpecFile, name: &str, c: &Coding) {
    let source = add_alphabet(spec, &format!("{name}_src"), c.source());
    let target = add_alphabet(spec, &format!("{name}_tgt"), c.target());
    spec.codings.insert(
        name.into(),
        CodingDecl {
            source,
            target,
            coding: c.clone(),
        },
    );
}

pub fn add_transducer(spec: &mut SpecFile, name: &str, t: &Transducer) {
    let input = add_alphabet(spec, &format!("{name}_in"), t.input());
    let output = add_alphabet(spec, &format!("{name}_out"), t.output());
    spec.transducers.insert(
        name.into(),
        TransducerDecl {
            input,
            output,
            transducer: t.clone(),
        },
    );
}

/// Adds `name_h`, `name_c` (unless the coding is the identity) and the
/// system `name`.
pub fn add_system(spec: &mut SpecFile, name: &str, sys: &MorphicSystem) {
    let h = format!("{name}_h");
    add_morphism(spec, &h, &sys.h);
    let coding = if sys.c.is_identity() {
        None
    } else {
        let c = format!("{name}_c");
        add_coding(spec, &c, &sys.c);
        Some(c)
    };
    spec.systems.insert(
        name.into(),
        SystemDecl {
            morphism: h,
            coding,
            start: sys.start.clone(),
        },
    );
}

pub fn add_pipeline(spec: &mut SpecFile, name: &str, p: &PipelineDecl) {
    spec.pipelines.insert(name.into(), p.clone());
}

/// A single system with no commentary.
pub fn emit_system(name: &str, sys: &MorphicSystem) -> String {
    let mut spec = SpecFile::default();
    add_system(&mut spec, name, sys);
    emit_spec(&spec)
}

pub fn erasure_comments(e: &ErasureSystem) -> Vec<String> {
    let list = |s: &std::collections::BTreeSet<morphic_core::Symbol>| {
        if s.is_empty() {
            "none".to_string()
        } else {
            s.iter().map(|x| x.name()).collect::<Vec<_>>().join(" ")
        }
    };
    let mut out = vec![
        format!("erased letters: {}", list(&e.gamma)),
        format!("respecting power: {}", e.power),
        format!("dead letters: {}", list(&e.dead)),
    ];
    for (d, w) in &e.contents {
        out.push(format!("block {d} = {}", spaced(w)));
    }
    out
}

pub fn emit_erasure(name: &str, e: &ErasureSystem) -> String {
    let mut spec = SpecFile::default();
    add_system(&mut spec, name, &e.as_system());
    with_comments(&erasure_comments(e), &spec)
}

/// Which annotation value every index in a letter name `(σ|i)` stands for.
pub fn legend(ann: &AnnotatedMorphism, states: &Alphabet) -> Vec<String> {
    let mut out = vec!["annotation legend:".to_string()];
    for (i, t) in ann.legend.iter().enumerate() {
        out.push(format!("  {i} = {}", t.render(states)));
    }
    out
}

pub fn emit_annotation(name: &str, ann: &AnnotatedMorphism, z: &MorphicSystem, states: &Alphabet) -> String {
    let mut spec = SpecFile::default();
    add_system(&mut spec, name, z);
    debug_assert_eq!(z.h, ann.morphism);
    with_comments(&legend(ann, states), &spec)
}

/// The annotated system `z`, the output morphism and the flattened system
/// `name`.
pub fn emit_transduct(name: &str, t: &TransductSystem) -> String {
    let mut spec = SpecFile::default();
    let z = format!("{name}_z");
    add_system(&mut spec, &z, &t.annotated_system());
    add_morphism(&mut spec, &format!("{name}_out"), &t.output);
    add_system(&mut spec, name, &t.flattened);
    let mut comments = vec![format!(
        "annotation orbit: preperiod {}, period {}",
        t.context.n, t.context.p
    )];
    comments.extend(legend(&t.annotated, t.context.transducer.states()));
    comments.push(format!("{name} = {name}_out applied to {z}, as one system"));
    with_comments(&comments, &spec)
}

pub fn emit_transducer(name: &str, t: &Transducer) -> String {
    let mut spec = SpecFile::default();
    add_transducer(&mut spec, name, t);
    emit_spec(&spec)
}
