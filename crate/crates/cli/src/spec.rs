//! The spec-file format.
//!
//! ```text
//! # comment
//! alphabet S = a b ;
//! morphism fib : S -> S { a -> a b ; b -> a ; }
//! coding c : S -> S { a -> b ; b -> a ; }
//! transducer m { input = S ; output = S ; states = s t ; start = s ;
//!                s a -> t / a a ; s b -> t / b b ; t a -> s / a ; t b -> s / b ; }
//! system x { morphism = fib ; coding = c ; start = a ; }
//! pipeline p { system = x ; erase = a ; apply = fib ; transduce = m ; }
//! ```
//!
//! Whitespace is insignificant. A rule with nothing after `->` (or `/`)
//! has the empty word as its image. The coding of a system is optional.

use std::collections::BTreeMap;
use std::fmt;

use morphic_core::transducer::TransducerError;
use morphic_core::word::WordError;
use morphic_core::{Alphabet, Coding, Morphism, MorphicSystem, Symbol, Transducer, Word};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("{line}:{column}: expected {expected}, found {found}")]
    Syntax {
        line: usize,
        column: usize,
        expected: String,
        found: String,
    },
    #[error("{line}:{column}: {message}")]
    Invalid {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{line}:{column}: {kind} `{name}` is declared twice")]
    Duplicate {
        line: usize,
        column: usize,
        kind: &'static str,
        name: String,
    },
    #[error("{line}:{column}: no {kind} named `{name}`")]
    Unresolved {
        line: usize,
        column: usize,
        kind: &'static str,
        name: String,
    },
}

/// A source position, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MorphismDecl {
    pub source: String,
    pub target: String,
    pub morphism: Morphism,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodingDecl {
    pub source: String,
    pub target: String,
    pub coding: Coding,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransducerDecl {
    pub input: String,
    pub output: String,
    pub transducer: Transducer,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemDecl {
    pub morphism: String,
    pub coding: Option<String>,
    pub start: Symbol,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    /// Delete these letters.
    Erase(Vec<Symbol>),
    /// Apply the named morphism.
    Apply(String),
    /// Run the named transducer.
    Transduce(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineDecl {
    pub system: String,
    pub steps: Vec<Step>,
}

/// All declarations of a file, one namespace per kind.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SpecFile {
    pub alphabets: BTreeMap<String, Alphabet>,
    pub morphisms: BTreeMap<String, MorphismDecl>,
    pub codings: BTreeMap<String, CodingDecl>,
    pub transducers: BTreeMap<String, TransducerDecl>,
    pub systems: BTreeMap<String, SystemDecl>,
    pub pipelines: BTreeMap<String, PipelineDecl>,
}

impl SpecFile {
    pub fn morphism(&self, name: &str) -> Option<&Morphism> {
        self.morphisms.get(name).map(|d| &d.morphism)
    }

    pub fn coding(&self, name: &str) -> Option<&Coding> {
        self.codings.get(name).map(|d| &d.coding)
    }

    pub fn transducer(&self, name: &str) -> Option<&Transducer> {
        self.transducers.get(name).map(|d| &d.transducer)
    }

    /// The named system with its morphism and coding looked up.
    pub fn system(&self, name: &str) -> Option<MorphicSystem> {
        let d = self.systems.get(name)?;
        let h = self.morphism(&d.morphism)?.clone();
        let c = match &d.coding {
            Some(c) => self.coding(c)?.clone(),
            None => Coding::identity(h.source()),
        };
        MorphicSystem::new(h, c, d.start.clone()).ok()
    }
}

// ---------------------------------------------------------------------------
// lexing

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Punct(char),
    Arrow,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Word(w) => write!(f, "`{w}`"),
            Tok::Punct(c) => write!(f, "`{c}`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

const PUNCT: &[char] = &[';', '{', '}', '=', ':', '/'];

fn lex(text: &str) -> Vec<(Tok, Pos)> {
    let mut out = Vec::new();
    for (li, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let pos = Pos {
                line: li + 1,
                column: i + 1,
            };
            let c = chars[i];
            if c.is_whitespace() {
                i += 1;
            } else if PUNCT.contains(&c) {
                out.push((Tok::Punct(c), pos));
                i += 1;
            } else if c == '-' && chars.get(i + 1) == Some(&'>') {
                out.push((Tok::Arrow, pos));
                i += 2;
            } else {
                let start = i;
                while i < chars.len()
                    && !chars[i].is_whitespace()
                    && !PUNCT.contains(&chars[i])
                    && !(chars[i] == '-' && chars.get(i + 1) == Some(&'>'))
                {
                    i += 1;
                }
                out.push((Tok::Word(chars[start..i].iter().collect()), pos));
            }
        }
    }
    let end = Pos {
        line: text.lines().count().max(1),
        column: text.lines().last().map_or(1, |l| l.chars().count() + 1),
    };
    out.push((Tok::Eof, end));
    out
}

// ---------------------------------------------------------------------------
// parsing

#[derive(Debug, Clone)]
struct Name {
    text: String,
    pos: Pos,
}

#[derive(Debug)]
struct RawRule {
    lhs: Vec<Name>,
    rhs_state: Option<Name>,
    rhs: Vec<Name>,
}

#[derive(Debug)]
enum Raw {
    Alphabet(Name, Vec<Name>),
    Morphism {
        name: Name,
        source: Name,
        target: Name,
        rules: Vec<RawRule>,
        coding: bool,
    },
    Transducer {
        name: Name,
        fields: Vec<(Name, Vec<Name>)>,
        rules: Vec<RawRule>,
    },
    Block {
        kind: &'static str,
        name: Name,
        fields: Vec<(Name, Vec<Name>)>,
    },
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn error(&self, expected: &str) -> SpecError {
        let Pos { line, column } = self.pos();
        SpecError::Syntax {
            line,
            column,
            expected: expected.into(),
            found: self.peek().to_string(),
        }
    }

    fn punct(&mut self, c: char) -> Result<(), SpecError> {
        if *self.peek() == Tok::Punct(c) {
            self.at += 1;
            Ok(())
        } else {
            Err(self.error(&format!("`{c}`")))
        }
    }

    fn arrow(&mut self) -> Result<(), SpecError> {
        if *self.peek() == Tok::Arrow {
            self.at += 1;
            Ok(())
        } else {
            Err(self.error("`->`"))
        }
    }

    fn name(&mut self, what: &str) -> Result<Name, SpecError> {
        match self.peek().clone() {
            Tok::Word(text) => {
                let pos = self.pos();
                self.at += 1;
                Ok(Name { text, pos })
            }
            _ => Err(self.error(what)),
        }
    }

    fn names(&mut self) -> Vec<Name> {
        let mut out = Vec::new();
        while let Tok::Word(text) = self.peek().clone() {
            out.push(Name {
                text,
                pos: self.pos(),
            });
            self.at += 1;
        }
        out
    }

    fn file(&mut self) -> Result<Vec<Raw>, SpecError> {
        let mut decls = Vec::new();
        while *self.peek() != Tok::Eof {
            let kw = self.name("a declaration keyword")?;
            decls.push(match kw.text.as_str() {
                "alphabet" => {
                    let name = self.name("an alphabet name")?;
                    self.punct('=')?;
                    let syms = self.names();
                    self.punct(';')?;
                    Raw::Alphabet(name, syms)
                }
                "morphism" | "coding" => {
                    let name = self.name("a name")?;
                    self.punct(':')?;
                    let source = self.name("an alphabet name")?;
                    self.arrow()?;
                    let target = self.name("an alphabet name")?;
                    self.punct('{')?;
                    let mut rules = Vec::new();
                    while *self.peek() != Tok::Punct('}') {
                        let lhs = vec![self.name("a symbol or `}`")?];
                        self.arrow()?;
                        let rhs = self.names();
                        self.punct(';')?;
                        rules.push(RawRule {
                            lhs,
                            rhs_state: None,
                            rhs,
                        });
                    }
                    self.punct('}')?;
                    Raw::Morphism {
                        name,
                        source,
                        target,
                        rules,
                        coding: kw.text == "coding",
                    }
                }
                "transducer" => {
                    let name = self.name("a transducer name")?;
                    self.punct('{')?;
                    let mut fields = Vec::new();
                    let mut rules = Vec::new();
                    while *self.peek() != Tok::Punct('}') {
                        let first = self.name("a field, a transition or `}`")?;
                        if *self.peek() == Tok::Punct('=') {
                            self.at += 1;
                            let vals = self.names();
                            self.punct(';')?;
                            fields.push((first, vals));
                            continue;
                        }
                        let letter = self.name("an input symbol or `=`")?;
                        self.arrow()?;
                        let to = self.name("a state")?;
                        self.punct('/')?;
                        let out = self.names();
                        self.punct(';')?;
                        rules.push(RawRule {
                            lhs: vec![first, letter],
                            rhs_state: Some(to),
                            rhs: out,
                        });
                    }
                    self.punct('}')?;
                    Raw::Transducer {
                        name,
                        fields,
                        rules,
                    }
                }
                "system" | "pipeline" => {
                    let name = self.name("a name")?;
                    self.punct('{')?;
                    let mut fields = Vec::new();
                    while *self.peek() != Tok::Punct('}') {
                        let key = self.name("a field or `}`")?;
                        self.punct('=')?;
                        let vals = self.names();
                        // the last field may omit its `;`
                        if *self.peek() != Tok::Punct('}') {
                            self.punct(';')?;
                        }
                        fields.push((key, vals));
                    }
                    self.punct('}')?;
                    Raw::Block {
                        kind: if kw.text == "system" { "system" } else { "pipeline" },
                        name,
                        fields,
                    }
                }
                _ => {
                    self.at -= 1;
                    return Err(self.error(
                        "`alphabet`, `morphism`, `coding`, `transducer`, `system` or `pipeline`",
                    ));
                }
            });
        }
        Ok(decls)
    }
}

// ---------------------------------------------------------------------------
// resolution

fn invalid(pos: Pos, message: impl fmt::Display) -> SpecError {
    SpecError::Invalid {
        line: pos.line,
        column: pos.column,
        message: message.to_string(),
    }
}

fn symbol(n: &Name) -> Result<Symbol, SpecError> {
    Symbol::new(&n.text).map_err(|e| invalid(n.pos, e))
}

fn word(ns: &[Name]) -> Result<Word, SpecError> {
    ns.iter().map(symbol).collect()
}

fn insert<T>(
    map: &mut BTreeMap<String, T>,
    kind: &'static str,
    name: &Name,
    value: T,
) -> Result<(), SpecError> {
    if map.contains_key(&name.text) {
        return Err(SpecError::Duplicate {
            line: name.pos.line,
            column: name.pos.column,
            kind,
            name: name.text.clone(),
        });
    }
    map.insert(name.text.clone(), value);
    Ok(())
}

fn lookup<'a, T>(
    map: &'a BTreeMap<String, T>,
    kind: &'static str,
    name: &Name,
) -> Result<&'a T, SpecError> {
    map.get(&name.text).ok_or_else(|| SpecError::Unresolved {
        line: name.pos.line,
        column: name.pos.column,
        kind,
        name: name.text.clone(),
    })
}

fn alphabet_field<'a>(
    fields: &'a [(Name, Vec<Name>)],
    key: &str,
    owner: &Name,
) -> Result<&'a [Name], SpecError> {
    let mut found = fields.iter().filter(|(k, _)| k.text == key);
    match (found.next(), found.next()) {
        (Some((_, v)), None) => Ok(v),
        (Some(_), Some((k, _))) => Err(invalid(k.pos, format!("field `{key}` given twice"))),
        (None, _) => Err(invalid(owner.pos, format!("missing field `{key}`"))),
    }
}

fn single<'a>(vals: &'a [Name], key: &Name) -> Result<&'a Name, SpecError> {
    match vals {
        [one] => Ok(one),
        _ => Err(invalid(key.pos, format!("field `{}` takes exactly one name", key.text))),
    }
}

fn check_fields(fields: &[(Name, Vec<Name>)], allowed: &[&str]) -> Result<(), SpecError> {
    match fields.iter().find(|(k, _)| !allowed.contains(&k.text.as_str())) {
        Some((k, _)) => Err(invalid(
            k.pos,
            format!("unknown field `{}`; expected one of {}", k.text, allowed.join(", ")),
        )),
        None => Ok(()),
    }
}

/// Parses and resolves a spec file.
pub fn parse_spec(text: &str) -> Result<SpecFile, SpecError> {
    let raw = Parser {
        toks: lex(text),
        at: 0,
    }
    .file()?;
    let mut spec = SpecFile::default();

    for d in &raw {
        if let Raw::Alphabet(name, syms) = d {
            let set = syms.iter().map(symbol).collect::<Result<Vec<_>, _>>()?;
            let a = Alphabet::new(set).map_err(|e| invalid(name.pos, e))?;
            insert(&mut spec.alphabets, "alphabet", name, a)?;
        }
    }
    for d in &raw {
        match d {
            Raw::Morphism {
                name,
                source,
                target,
                rules,
                coding,
            } => {
                let s = lookup(&spec.alphabets, "alphabet", source)?.clone();
                let t = lookup(&spec.alphabets, "alphabet", target)?.clone();
                let pairs = rules
                    .iter()
                    .map(|r| Ok((symbol(&r.lhs[0])?, word(&r.rhs)?)))
                    .collect::<Result<Vec<_>, SpecError>>()?;
                let m = Morphism::new(s, t, pairs).map_err(|e: WordError| invalid(name.pos, e))?;
                if *coding {
                    let c = Coding::new(m).map_err(|e| invalid(name.pos, e))?;
                    let decl = CodingDecl {
                        source: source.text.clone(),
                        target: target.text.clone(),
                        coding: c,
                    };
                    insert(&mut spec.codings, "coding", name, decl)?;
                } else {
                    let decl = MorphismDecl {
                        source: source.text.clone(),
                        target: target.text.clone(),
                        morphism: m,
                    };
                    insert(&mut spec.morphisms, "morphism", name, decl)?;
                }
            }
            Raw::Transducer {
                name,
                fields,
                rules,
            } => {
                check_fields(fields, &["input", "output", "states", "start"])?;
                let field = |k: &str| alphabet_field(fields, k, name);
                let key = |k: &str| {
                    fields
                        .iter()
                        .find(|(n, _)| n.text == k)
                        .map(|(n, _)| n.clone())
                        .expect("checked present")
                };
                let input_name = single(field("input")?, &key("input"))?;
                let output_name = single(field("output")?, &key("output"))?;
                let input = lookup(&spec.alphabets, "alphabet", input_name)?.clone();
                let output = lookup(&spec.alphabets, "alphabet", output_name)?.clone();
                let states = field("states")?
                    .iter()
                    .map(symbol)
                    .collect::<Result<Vec<_>, _>>()?;
                let states = Alphabet::new(states).map_err(|e| invalid(key("states").pos, e))?;
                let start = symbol(single(field("start")?, &key("start"))?)?;
                let mut transitions = Vec::with_capacity(rules.len());
                for r in rules {
                    let to = r.rhs_state.as_ref().expect("transducer rule");
                    transitions.push((symbol(&r.lhs[0])?, symbol(&r.lhs[1])?, symbol(to)?, word(&r.rhs)?));
                }
                let t = Transducer::new(input, output, states, start, transitions)
                    .map_err(|e: TransducerError| invalid(name.pos, e))?;
                let decl = TransducerDecl {
                    input: input_name.text.clone(),
                    output: output_name.text.clone(),
                    transducer: t,
                };
                insert(&mut spec.transducers, "transducer", name, decl)?;
            }
            _ => {}
        }
    }
    for d in &raw {
        if let Raw::Block {
            kind: "system",
            name,
            fields,
        } = d
        {
            check_fields(fields, &["morphism", "coding", "start"])?;
            let get = |k: &str| -> Result<Option<&Name>, SpecError> {
                match fields.iter().find(|(n, _)| n.text == k) {
                    Some((key, vals)) => single(vals, key).map(Some),
                    None => Ok(None),
                }
            };
            let m = get("morphism")?.ok_or_else(|| invalid(name.pos, "missing field `morphism`"))?;
            lookup(&spec.morphisms, "morphism", m)?;
            let c = get("coding")?;
            if let Some(c) = c {
                lookup(&spec.codings, "coding", c)?;
            }
            let start = get("start")?.ok_or_else(|| invalid(name.pos, "missing field `start`"))?;
            let decl = SystemDecl {
                morphism: m.text.clone(),
                coding: c.map(|c| c.text.clone()),
                start: symbol(start)?,
            };
            let h = &spec.morphisms[&decl.morphism].morphism;
            let coding = match &decl.coding {
                Some(c) => spec.codings[c].coding.clone(),
                None => Coding::identity(h.source()),
            };
            MorphicSystem::new(h.clone(), coding, decl.start.clone())
                .map_err(|e| invalid(name.pos, e))?;
            insert(&mut spec.systems, "system", name, decl)?;
        }
    }
    for d in &raw {
        if let Raw::Block {
            kind: "pipeline",
            name,
            fields,
        } = d
        {
            check_fields(fields, &["system", "erase", "apply", "transduce"])?;
            let mut system = None;
            let mut steps = Vec::new();
            for (key, vals) in fields {
                match key.text.as_str() {
                    "system" => {
                        if system.is_some() {
                            return Err(invalid(key.pos, "field `system` given twice"));
                        }
                        let s = single(vals, key)?;
                        lookup(&spec.systems, "system", s)?;
                        system = Some(s.text.clone());
                    }
                    "erase" => {
                        let syms = vals.iter().map(symbol).collect::<Result<Vec<_>, _>>()?;
                        steps.push(Step::Erase(syms));
                    }
                    "apply" => {
                        let m = single(vals, key)?;
                        lookup(&spec.morphisms, "morphism", m)?;
                        steps.push(Step::Apply(m.text.clone()));
                    }
                    _ => {
                        let t = single(vals, key)?;
                        lookup(&spec.transducers, "transducer", t)?;
                        steps.push(Step::Transduce(t.text.clone()));
                    }
                }
            }
            let system = system.ok_or_else(|| invalid(name.pos, "missing field `system`"))?;
            insert(&mut spec.pipelines, "pipeline", name, PipelineDecl { system, steps })?;
        }
    }
    Ok(spec)
}
