//! The `morphic` command line.
//!
//! Exit codes: 0 success, 1 mismatch or negative verdict, 2 usage or input
//! error.

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use morphic_core::annotate::{
    transduct_system, AnnotateError, AnnotationContext, TransductOutcome,
};
use morphic_core::dekking::{erasure_system, image_system, DekkingError};
use morphic_core::engine::Caps;
use morphic_core::periodicity::{detect_eventual_period, PeriodVerdict, PeriodicityError};
use morphic_core::spectral::{
    char_poly, dominant_eigenvalue, incidence_matrix, multiplicative_independence,
    substitutivity_report_tol, Independence, SpectralError, SubstitutivityReport,
};
use morphic_core::transducer::{compose, TransducerError};
use morphic_core::{Morphism, MorphicSystem, Word};
use thiserror::Error;

use crate::emit;
use crate::sequence::{construct, direct_prefix, erasing_morphism, Sequence, SequenceError};
use crate::spec::{parse_spec, SpecError, SpecFile};

pub const OBSTRUCTION_VERDICT: &str =
    "no common non-erasing transducts except eventually periodic (verdict at bounds)";

const LINE_WIDTH: usize = 64;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: io::Error,
    },
    #[error("{path}:{source}")]
    Spec {
        path: PathBuf,
        source: SpecError,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Periodicity(#[from] PeriodicityError),
    #[error(transparent)]
    Transducer(#[from] TransducerError),
    #[error(transparent)]
    Dekking(#[from] DekkingError),
    #[error(transparent)]
    Annotate(#[from] AnnotateError),
    #[error("writing output: {0}")]
    Output(#[from] io::Error),
}

#[derive(Debug, Parser)]
#[command(name = "morphic", version, about = "Morphic sequences, their erasures, images and transducts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct SpecArg {
    /// Spec file with the declarations.
    #[arg(long)]
    pub spec: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print a prefix of a system or pipeline.
    Generate {
        #[command(flatten)]
        spec: SpecArg,
        /// System or pipeline name; `direct:NAME` computes by brute force.
        #[arg(long)]
        system: String,
        #[arg(long)]
        length: usize,
        /// Largest number of letters held while generating.
        #[arg(long, default_value_t = Caps::default().max_letters)]
        cap: usize,
    },
    /// Compose two transducers (`outer` reads what `inner` writes).
    Compose {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long)]
        outer: String,
        #[arg(long)]
        inner: String,
        #[arg(long, default_value = "composed")]
        name: String,
    },
    /// Build a morphic system and print it as declarations.
    #[command(subcommand)]
    Construct(Construct),
    #[command(subcommand)]
    Analyze(Analyze),
    /// Compare two sequences letter by letter.
    Compare {
        #[command(flatten)]
        spec: SpecArg,
        /// System or pipeline name, or `direct:NAME`.
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
        #[arg(long)]
        length: usize,
        #[arg(long, default_value_t = Caps::default().max_letters)]
        cap: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum Construct {
    /// Delete letters from the sequence of a system.
    Erase {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long)]
        system: String,
        /// Letters to delete.
        #[arg(long, num_args = 1.., required = true)]
        letters: Vec<String>,
        #[arg(long, default_value = "erased")]
        name: String,
    },
    /// Apply a morphism to the sequence of a system.
    Image {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long)]
        system: String,
        #[arg(long)]
        morphism: String,
        #[arg(long, default_value = "image")]
        name: String,
    },
    /// Annotate the morphism of a system with transducer state data.
    Annotate {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long)]
        system: String,
        #[arg(long)]
        transducer: String,
        #[arg(long, default_value = "annotated")]
        name: String,
    },
    /// Run a transducer over the sequence of a system.
    Transduct {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long)]
        system: String,
        #[arg(long)]
        transducer: String,
        #[arg(long, default_value = "transduct")]
        name: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum Analyze {
    /// Characteristic polynomial and dominant eigenvalue of a morphism.
    Spectrum {
        #[command(flatten)]
        spec: SpecArg,
        /// Morphism name, or a system name (its morphism is used).
        #[arg(long)]
        morphism: String,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Growth rate of a system and whether every letter occurs.
    Substitutive {
        #[command(flatten)]
        spec: SpecArg,
        /// System or pipeline name.
        #[arg(long)]
        system: String,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Bounded search for `alpha^k = beta^l`.
    Independence {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 64)]
        max_exp: u32,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
    /// Look for an eventual period in a prefix.
    Period {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long)]
        system: String,
        #[arg(long, default_value_t = 4096)]
        length: usize,
        #[arg(long, default_value_t = 64)]
        max_preperiod: usize,
        #[arg(long, default_value_t = 512)]
        max_period: usize,
    },
    /// Whether two sequences can share non-periodic transducts.
    Obstruction {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
        /// Transducer applied to the left sequence first.
        #[arg(long)]
        left_transducer: Option<String>,
        #[arg(long)]
        right_transducer: Option<String>,
        #[arg(long, default_value_t = 64)]
        max_exp: u32,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match execute(&cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn load(spec: &SpecArg) -> Result<SpecFile, AppError> {
    let path = &spec.spec;
    let text = std::fs::read_to_string(path).map_err(|source| AppError::Io {
        path: path.clone(),
        source,
    })?;
    parse_spec(&text).map_err(|source| AppError::Spec {
        path: path.clone(),
        source,
    })
}

fn system(spec: &SpecFile, name: &str) -> Result<MorphicSystem, AppError> {
    spec.system(name)
        .ok_or_else(|| AppError::Usage(format!("no system named `{name}`")))
}

fn morphism<'a>(spec: &'a SpecFile, name: &str) -> Result<&'a Morphism, AppError> {
    spec.morphism(name)
        .ok_or_else(|| AppError::Usage(format!("no morphism named `{name}`")))
}

fn transducer<'a>(
    spec: &'a SpecFile,
    name: &str,
) -> Result<&'a morphic_core::Transducer, AppError> {
    spec.transducer(name)
        .ok_or_else(|| AppError::Usage(format!("no transducer named `{name}`")))
}

fn caps(cap: usize) -> Caps {
    Caps {
        max_letters: cap,
        ..Caps::default()
    }
}

/// Prefix of a named sequence; `direct:NAME` bypasses the constructions.
fn prefix(spec: &SpecFile, name: &str, n: usize, caps: Caps) -> Result<Word, AppError> {
    match name.strip_prefix("direct:") {
        Some(rest) => Ok(direct_prefix(spec, rest, n, caps)?),
        None => Ok(construct(spec, name)?.prefix(n, caps)?),
    }
}

fn print_wrapped(out: &mut dyn Write, w: &Word) -> io::Result<()> {
    for line in w.letters().chunks(LINE_WIDTH) {
        let names: Vec<&str> = line.iter().map(|s| s.name()).collect();
        writeln!(out, "{}", names.join(" "))?;
    }
    Ok(())
}

fn infinite_system(seq: Sequence, what: &str) -> Result<MorphicSystem, AppError> {
    match seq {
        Sequence::System(s) => Ok(s),
        Sequence::Finite(w) => Err(AppError::Usage(format!(
            "{what} is the finite word `{}`",
            w.spaced()
        ))),
    }
}

fn execute(cmd: &Command, out: &mut dyn Write) -> Result<i32, AppError> {
    match cmd {
        Command::Generate {
            spec,
            system,
            length,
            cap,
        } => {
            let spec = load(spec)?;
            let w = prefix(&spec, system, *length, caps(*cap))?;
            print_wrapped(out, &w)?;
            Ok(0)
        }
        Command::Compose {
            spec,
            outer,
            inner,
            name,
        } => {
            let spec = load(spec)?;
            let t = compose(transducer(&spec, outer)?, transducer(&spec, inner)?)?;
            write!(out, "{}", emit::emit_transducer(name, &t))?;
            Ok(0)
        }
        Command::Construct(c) => construct_command(c, out),
        Command::Analyze(a) => analyze(a, out),
        Command::Compare {
            spec,
            left,
            right,
            length,
            cap,
        } => {
            let spec = load(spec)?;
            let l = prefix(&spec, left, *length, caps(*cap))?;
            let r = prefix(&spec, right, *length, caps(*cap))?;
            let end = |w: &Word, i: usize| {
                w.letters()
                    .get(i)
                    .map_or_else(|| "<end>".to_string(), |s| s.name().to_string())
            };
            let first = (0..l.len().max(r.len())).find(|&i| l.letters().get(i) != r.letters().get(i));
            match first {
                None if l.len() == *length => {
                    writeln!(out, "equal through {length}")?;
                    Ok(0)
                }
                None => {
                    writeln!(out, "equal through {} (both sequences end there)", l.len())?;
                    Ok(0)
                }
                Some(i) => {
                    writeln!(out, "mismatch at index {i}: left {}, right {}", end(&l, i), end(&r, i))?;
                    Ok(1)
                }
            }
        }
    }
}

fn construct_command(c: &Construct, out: &mut dyn Write) -> Result<i32, AppError> {
    match c {
        Construct::Erase {
            spec,
            system: name,
            letters,
            name: out_name,
        } => {
            let spec = load(spec)?;
            let sys = system(&spec, name)?;
            let letters = letters
                .iter()
                .map(|l| morphic_core::Symbol::new(l).map_err(|e| AppError::Usage(e.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            if sys.c.is_identity() {
                let gamma = letters.iter().cloned().collect();
                match erasure_system(&sys.h, &gamma, &sys.start) {
                    Ok(e) => write!(out, "{}", emit::emit_erasure(out_name, &e))?,
                    Err(DekkingError::FiniteErasure(w)) => writeln!(out, "# finite: {}", w.spaced())?,
                    Err(e) => return Err(e.into()),
                }
            } else {
                let h = erasing_morphism(sys.c.target(), &letters)?;
                emit_image(out, out_name, &sys, &h)?;
            }
            Ok(0)
        }
        Construct::Image {
            spec,
            system: name,
            morphism: m,
            name: out_name,
        } => {
            let spec = load(spec)?;
            let sys = system(&spec, name)?;
            let h = morphism(&spec, m)?;
            if sys.c.is_identity() && h.is_non_erasing() && h.source() == sys.h.source() {
                let img = image_system(&sys.h, h, &sys.start)?;
                write!(out, "{}", emit::emit_system(out_name, &img.as_system()))?;
            } else {
                emit_image(out, out_name, &sys, h)?;
            }
            Ok(0)
        }
        Construct::Annotate {
            spec,
            system: name,
            transducer: t,
            name: out_name,
        } => {
            let spec = load(spec)?;
            let sys = system(&spec, name)?;
            let m = transducer(&spec, t)?.precompose_coding(&sys.c)?;
            let ctx = AnnotationContext::new(&m, &sys.h)?;
            let ann = ctx.annotate(&sys.start)?;
            let z = MorphicSystem::new(ann.morphism.clone(), ctx.state_coding(&ann)?, ann.start.clone())
                .map_err(AnnotateError::from)?;
            write!(out, "{}", emit::emit_annotation(out_name, &ann, &z, m.states()))?;
            Ok(0)
        }
        Construct::Transduct {
            spec,
            system: name,
            transducer: t,
            name: out_name,
        } => {
            let spec = load(spec)?;
            let sys = system(&spec, name)?;
            match transduct_system(transducer(&spec, t)?, &sys)? {
                TransductOutcome::System(ts) => write!(out, "{}", emit::emit_transduct(out_name, &ts))?,
                TransductOutcome::Finite(w) => writeln!(out, "# finite: {}", w.spaced())?,
            }
            Ok(0)
        }
    }
}

fn emit_image(out: &mut dyn Write, name: &str, sys: &MorphicSystem, h: &Morphism) -> Result<(), AppError> {
    use morphic_core::dekking::{morphic_image_pipeline, PipelineOutcome};
    match morphic_image_pipeline(sys, h)? {
        PipelineOutcome::System(s) => write!(out, "{}", emit::emit_system(name, &s))?,
        PipelineOutcome::Finite(w) => writeln!(out, "# finite: {}", w.spaced())?,
    }
    Ok(())
}

fn letters(set: &std::collections::BTreeSet<morphic_core::Symbol>) -> String {
    set.iter().map(|s| s.name()).collect::<Vec<_>>().join(" ")
}

fn report_lines(out: &mut dyn Write, label: &str, r: &SubstitutivityReport) -> io::Result<()> {
    writeln!(out, "{label}alpha: {:.12} (tol {:e})", r.alpha, r.tol)?;
    writeln!(out, "{label}letters in the fixpoint: {}", letters(&r.restricted_alphabet))?;
    writeln!(out, "{label}restricted char poly: {}", r.restricted_char_poly)?;
    let every = if r.condition_ii_ok { "yes" } else { "no" };
    writeln!(out, "{label}every letter occurs: {every}")?;
    writeln!(out, "{label}full alphabet alpha: {:.12}", r.full_alphabet_alpha)?;
    let perron = if r.perron_verified { "verified (primitive matrix)" } else { "not verified" };
    writeln!(out, "{label}perron number: {perron}")
}

fn independence_line(alpha: f64, beta: f64, i: Independence) -> String {
    match i {
        Independence::Dependent(k, l) => format!("dependent: {alpha}^{k} = {beta}^{l}"),
        Independence::IndependentUpTo(n) => format!("independent up to exponent {n}"),
    }
}

fn analyze(a: &Analyze, out: &mut dyn Write) -> Result<i32, AppError> {
    match a {
        Analyze::Spectrum { spec, morphism: m, tol } => {
            let spec = load(spec)?;
            let h = match spec.morphism(m) {
                Some(h) => h.clone(),
                None => system(&spec, m)
                    .map_err(|_| AppError::Usage(format!("no morphism or system named `{m}`")))?
                    .h,
            };
            let mat = incidence_matrix(&h)?;
            let names: Vec<&str> = h.source().iter().map(|s| s.name()).collect();
            writeln!(out, "alphabet: {}", names.join(" "))?;
            writeln!(out, "char poly: {}", char_poly(&mat))?;
            let rho = dominant_eigenvalue(&mat, *tol)?;
            writeln!(out, "dominant eigenvalue: {rho:.12} (tol {tol:e})")?;
            Ok(0)
        }
        Analyze::Substitutive { spec, system: name, tol } => {
            let spec = load(spec)?;
            let sys = infinite_system(construct(&spec, name)?, name)?;
            report_lines(out, "", &substitutivity_report_tol(&sys, *tol)?)?;
            Ok(0)
        }
        Analyze::Independence {
            alpha,
            beta,
            max_exp,
            tol,
        } => {
            let i = multiplicative_independence(*alpha, *beta, *max_exp, *tol)?;
            writeln!(out, "{}", independence_line(*alpha, *beta, i))?;
            Ok(match i {
                Independence::Dependent(..) => 1,
                Independence::IndependentUpTo(_) => 0,
            })
        }
        Analyze::Period {
            spec,
            system: name,
            length,
            max_preperiod,
            max_period,
        } => {
            let spec = load(spec)?;
            let w = prefix(&spec, name, *length, Caps::default())?;
            match detect_eventual_period(&w, *max_preperiod, *max_period)? {
                PeriodVerdict::Found { preperiod, period } => {
                    writeln!(
                        out,
                        "eventually periodic: preperiod {preperiod}, period {period} (first {} letters)",
                        w.len()
                    )?;
                    Ok(0)
                }
                PeriodVerdict::NoneFound {
                    max_preperiod,
                    max_period,
                } => {
                    writeln!(
                        out,
                        "no eventual period found: preperiod <= {max_preperiod}, period <= {max_period} (first {} letters)",
                        w.len()
                    )?;
                    Ok(1)
                }
            }
        }
        Analyze::Obstruction {
            spec,
            left,
            right,
            left_transducer,
            right_transducer,
            max_exp,
            tol,
        } => {
            let spec = load(spec)?;
            let side = |name: &str, t: &Option<String>| -> Result<SubstitutivityReport, AppError> {
                let mut sys = infinite_system(construct(&spec, name)?, name)?;
                if let Some(t) = t {
                    sys = match transduct_system(transducer(&spec, t)?, &sys)? {
                        TransductOutcome::System(ts) => ts.flattened,
                        TransductOutcome::Finite(w) => {
                            return Err(AppError::Usage(format!(
                                "the transduct of `{name}` is the finite word `{}`",
                                w.spaced()
                            )))
                        }
                    };
                }
                Ok(substitutivity_report_tol(&sys, 1e-9)?)
            };
            let l = side(left, left_transducer)?;
            let r = side(right, right_transducer)?;
            report_lines(out, "left ", &l)?;
            report_lines(out, "right ", &r)?;
            match multiplicative_independence(l.alpha, r.alpha, *max_exp, *tol) {
                Ok(i @ Independence::IndependentUpTo(_)) => {
                    writeln!(out, "{}", independence_line(l.alpha, r.alpha, i))?;
                    writeln!(out, "verdict: {OBSTRUCTION_VERDICT}")?;
                    Ok(0)
                }
                Ok(i) => {
                    writeln!(out, "{}", independence_line(l.alpha, r.alpha, i))?;
                    writeln!(out, "verdict: inconclusive, the growth rates are dependent")?;
                    Ok(1)
                }
                Err(SpectralError::DomainError(what)) => {
                    writeln!(out, "verdict: inconclusive, {what} is not greater than 1")?;
                    Ok(1)
                }
                Err(e) => Err(e.into()),
            }
        }
    }
}

/// Reads `path` and parses it, for callers outside the command surface.
pub fn load_spec(path: &Path) -> Result<SpecFile, AppError> {
    load(&SpecArg {
        spec: path.to_path_buf(),
    })
}
