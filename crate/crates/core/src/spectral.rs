//! Incidence matrices and their spectra.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::annotate::AnnotatedMorphism;
use crate::engine::{fixpoint_letters, EngineError, MorphicSystem};
use crate::word::{Alphabet, Morphism, Symbol, WordError};

/// Tolerance for user-facing results.
pub const TOL: f64 = 1e-9;
/// Tolerance used inside consistency checks.
pub const INTERNAL_TOL: f64 = 1e-12;

const MAX_SQUARINGS: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("no convergence after {0} squarings")]
    ConvergenceFailure(usize),
    #[error("{0} must be greater than 1")]
    DomainError(String),
    #[error("matrix shapes or embedding do not fit")]
    ShapeMismatch,
}

/// `m[i][j]` = number of occurrences of letter `i` in `h(j)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceMatrix {
    pub index: Alphabet,
    pub entries: Vec<Vec<BigUint>>,
}

pub fn incidence_matrix(h: &Morphism) -> Result<IncidenceMatrix, SpectralError> {
    if !h.is_endomorphism() {
        return Err(EngineError::NotEndomorphism.into());
    }
    let n = h.source().len();
    let mut entries = alloc::vec![alloc::vec![BigUint::zero(); n]; n];
    for (j, (_, img)) in h.rules().enumerate() {
        for s in img {
            let i = h.source().index_of(s).expect("endomorphism");
            entries[i][j] += 1u32;
        }
    }
    Ok(IncidenceMatrix {
        index: h.source().clone(),
        entries,
    })
}

impl IncidenceMatrix {
    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: usize, j: usize) -> &BigUint {
        &self.entries[i][j]
    }

    pub fn column_sums(&self) -> Vec<BigUint> {
        (0..self.dim())
            .map(|j| self.entries.iter().map(|row| &row[j]).sum())
            .collect()
    }

    /// Exact product `self · other`.
    pub fn mul(&self, other: &IncidenceMatrix) -> Result<IncidenceMatrix, SpectralError> {
        let n = self.dim();
        if other.dim() != n {
            return Err(SpectralError::ShapeMismatch);
        }
        let mut entries = alloc::vec![alloc::vec![BigUint::zero(); n]; n];
        for (i, row) in entries.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                for k in 0..n {
                    *cell += &self.entries[i][k] * &other.entries[k][j];
                }
            }
        }
        Ok(IncidenceMatrix {
            index: self.index.clone(),
            entries,
        })
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        self.entries
            .iter()
            .map(|row| row.iter().map(|x| x.to_f64().unwrap_or(f64::INFINITY)).collect())
            .collect()
    }

    /// Boolean pattern of the matrix is primitive (some power is positive),
    /// checked at Wielandt's bound `(n-1)^2 + 1`.
    pub fn is_primitive(&self) -> bool {
        let n = self.dim();
        let pattern: Vec<Vec<bool>> = self
            .entries
            .iter()
            .map(|row| row.iter().map(|x| !x.is_zero()).collect())
            .collect();
        let mul = |a: &Vec<Vec<bool>>, b: &Vec<Vec<bool>>| -> Vec<Vec<bool>> {
            (0..n)
                .map(|i| (0..n).map(|j| (0..n).any(|k| a[i][k] && b[k][j])).collect())
                .collect()
        };
        // P^e by binary powering
        let mut e = (n - 1) * (n - 1) + 1;
        let mut base = pattern;
        let mut acc: Option<Vec<Vec<bool>>> = None;
        while e > 0 {
            if e & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => mul(&a, &base),
                });
            }
            e >>= 1;
            if e > 0 {
                base = mul(&base, &base);
            }
        }
        acc.map(|a| a.iter().all(|row| row.iter().all(|&x| x)))
            .unwrap_or(false)
    }
}

/// A monic integer polynomial, coefficients from degree 0 upwards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharPoly {
    pub coeffs: Vec<BigInt>,
}

impl CharPoly {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `x^k · self`.
    pub fn shift(&self, k: usize) -> CharPoly {
        let mut coeffs = alloc::vec![BigInt::zero(); k];
        coeffs.extend(self.coeffs.iter().cloned());
        CharPoly { coeffs }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c.to_f64().unwrap_or(f64::NAN))
    }

    /// Largest absolute coefficient, as a scale for residuals.
    pub fn scale(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|c| c.abs().to_f64().unwrap_or(f64::INFINITY))
            .fold(1.0, f64::max)
    }
}

impl fmt::Display for CharPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    f.write_str("-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let coef = if mag.is_one() && k > 0 {
                String::new()
            } else {
                format!("{mag}")
            };
            match k {
                0 => write!(f, "{mag}")?,
                1 => write!(f, "{coef}x")?,
                _ => write!(f, "{coef}x^{k}")?,
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

/// `det(xI − M)` by the Faddeev–LeVerrier recurrence over the integers.
pub fn char_poly(m: &IncidenceMatrix) -> CharPoly {
    let n = m.dim();
    let a: Vec<Vec<BigInt>> = m
        .entries
        .iter()
        .map(|row| row.iter().map(|x| BigInt::from(x.clone())).collect())
        .collect();
    let mut coeffs = alloc::vec![BigInt::zero(); n + 1];
    coeffs[n] = BigInt::one();
    // mk = A·M_{k-1} + c_{n-k+1}·I, c_{n-k} = -tr(A·M_k)/k
    let mut mk = alloc::vec![alloc::vec![BigInt::zero(); n]; n];
    for k in 1..=n {
        let mut next = alloc::vec![alloc::vec![BigInt::zero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut s = BigInt::zero();
                for l in 0..n {
                    if !a[i][l].is_zero() && !mk[l][j].is_zero() {
                        s += &a[i][l] * &mk[l][j];
                    }
                }
                next[i][j] = s;
            }
            next[i][i] += &coeffs[n - k + 1];
        }
        mk = next;
        let mut tr = BigInt::zero();
        for i in 0..n {
            for l in 0..n {
                if !a[i][l].is_zero() && !mk[l][i].is_zero() {
                    tr += &a[i][l] * &mk[l][i];
                }
            }
        }
        coeffs[n - k] = -(tr / BigInt::from(k));
    }
    CharPoly { coeffs }
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut out = alloc::vec![alloc::vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let x = a[i][k];
            if x == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i][j] += x * b[k][j];
            }
        }
    }
    out
}

fn normalise(p: &mut [Vec<f64>]) {
    let max = p
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, &x| m.max(x));
    if max > 0.0 {
        for row in p.iter_mut() {
            for x in row.iter_mut() {
                *x /= max;
            }
        }
    }
}

fn total(p: &[Vec<f64>]) -> f64 {
    p.iter().flat_map(|r| r.iter()).sum()
}

/// Squares `B = M + I` until the growth estimate settles; returns the
/// estimate of `ρ(M)` and the last normalised power.
fn squarings(m: &IncidenceMatrix, tol: f64) -> Result<(f64, Vec<Vec<f64>>), SpectralError> {
    let n = m.dim();
    if n == 0 {
        return Ok((0.0, Vec::new()));
    }
    let mut b = m.to_f64();
    for (i, row) in b.iter_mut().enumerate() {
        row[i] += 1.0;
    }
    let mut p = b.clone();
    normalise(&mut p);
    let mut prev = f64::NAN;
    for k in 1..=MAX_SQUARINGS {
        p = mat_mul(&p, &p);
        normalise(&mut p);
        let est = total(&mat_mul(&p, &b)) / total(&p);
        if k >= 3 && (est - prev).abs() < tol / 10.0 * est.max(1.0) {
            return Ok((est - 1.0, p));
        }
        prev = est;
    }
    Err(SpectralError::ConvergenceFailure(MAX_SQUARINGS))
}

/// The Perron root of a non-negative matrix.
pub fn dominant_eigenvalue(m: &IncidenceMatrix, tol: f64) -> Result<f64, SpectralError> {
    squarings(m, tol).map(|(r, _)| r.max(0.0))
}

/// `|char(M)(ρ)| / scale`, a sanity measure for a computed root.
pub fn char_poly_residual(m: &IncidenceMatrix, root: f64) -> f64 {
    let cp = char_poly(m);
    cp.eval(root).abs() / (cp.scale() * root.abs().max(1.0).powi(cp.degree() as i32))
}

/// A non-negative eigenvector for the Perron root, normalised to sum 1.
pub fn perron_vector(m: &IncidenceMatrix, tol: f64) -> Result<Vec<f64>, SpectralError> {
    let (_, mut p) = squarings(m, tol)?;
    for _ in 0..4 {
        p = mat_mul(&p, &p);
        normalise(&mut p);
    }
    let mut v: Vec<f64> = p.iter().map(|row| row.iter().sum()).collect();
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        for x in v.iter_mut() {
            *x /= s;
        }
    }
    Ok(v)
}

/// Growth data of a morphic system.
#[derive(Debug, Clone, PartialEq)]
pub struct SubstitutivityReport {
    /// Perron root of `h` restricted to the letters of the fixpoint.
    pub alpha: f64,
    pub tol: f64,
    /// Every letter of the alphabet occurs in the fixpoint.
    pub condition_ii_ok: bool,
    pub restricted_alphabet: BTreeSet<Symbol>,
    pub restricted_char_poly: CharPoly,
    /// Perron root of the unrestricted matrix.
    pub full_alphabet_alpha: f64,
    /// The restricted matrix is primitive and `alpha > 1`, so `alpha` is a
    /// Perron number.
    pub perron_verified: bool,
}

pub fn substitutivity_report(sys: &MorphicSystem) -> Result<SubstitutivityReport, SpectralError> {
    substitutivity_report_tol(sys, TOL)
}

pub fn substitutivity_report_tol(
    sys: &MorphicSystem,
    tol: f64,
) -> Result<SubstitutivityReport, SpectralError> {
    let letters = fixpoint_letters(&sys.h, &sys.start)?;
    let sub = Alphabet::from_set(&letters)?;
    let restricted = sys.h.restrict(&sub)?.with_target(sub.clone())?;
    let rm = incidence_matrix(&restricted)?;
    let alpha = dominant_eigenvalue(&rm, tol)?;
    let full_alphabet_alpha = dominant_eigenvalue(&incidence_matrix(&sys.h)?, tol)?;
    Ok(SubstitutivityReport {
        alpha,
        tol,
        condition_ii_ok: letters.len() == sys.h.source().len(),
        restricted_alphabet: letters,
        restricted_char_poly: char_poly(&rm),
        full_alphabet_alpha,
        perron_verified: rm.is_primitive() && alpha > 1.0 + tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Independence {
    /// `α^k = β^ℓ` within tolerance.
    Dependent(u32, u32),
    /// No relation with exponents up to the bound.
    IndependentUpTo(u32),
}

/// Bounded search for `k log α = ℓ log β` with `1 ≤ k, ℓ ≤ max_exp`.
pub fn multiplicative_independence(
    alpha: f64,
    beta: f64,
    max_exp: u32,
    tol: f64,
) -> Result<Independence, SpectralError> {
    if !(alpha > 1.0) {
        return Err(SpectralError::DomainError(format!("alpha = {alpha}")));
    }
    if !(beta > 1.0) {
        return Err(SpectralError::DomainError(format!("beta = {beta}")));
    }
    let (la, lb) = (libm::log(alpha), libm::log(beta));
    for k in 1..=max_exp {
        for l in 1..=max_exp {
            if (k as f64 * la - l as f64 * lb).abs() < tol {
                return Ok(Independence::Dependent(k, l));
            }
        }
    }
    Ok(Independence::IndependentUpTo(max_exp))
}

/// `N` extends `M` by zero columns: `embedding[i]` is the row/column of `N`
/// playing the part of index `i` of `M`. Checks that every other column of
/// `N` is zero and that `char(N) = x^{dim N − dim M} · char(M)`.
pub fn verify_zero_column_extension(
    m: &IncidenceMatrix,
    n: &IncidenceMatrix,
    embedding: &[usize],
) -> Result<bool, SpectralError> {
    if embedding.len() != m.dim() || n.dim() < m.dim() {
        return Err(SpectralError::ShapeMismatch);
    }
    let image: BTreeSet<usize> = embedding.iter().copied().collect();
    if image.len() != embedding.len() || image.iter().any(|&i| i >= n.dim()) {
        return Err(SpectralError::ShapeMismatch);
    }
    let zero_columns = (0..n.dim())
        .filter(|j| !image.contains(j))
        .all(|j| n.entries.iter().all(|row| row[j].is_zero()));
    Ok(zero_columns && char_poly(n) == char_poly(m).shift(n.dim() - m.dim()))
}

/// For every annotated letter `(b, a)` and every letter `b'`, the number of
/// `b'` in `h(b)` equals the number of letters over `b'` in `h̄(b, a)`.
pub fn verify_annotation_rowsum(h: &Morphism, hbar: &AnnotatedMorphism) -> bool {
    hbar.morphism.rules().all(|(l, img)| {
        let Some(base) = hbar.base.get(l) else {
            return false;
        };
        let Some(himg) = h.image(base) else {
            return false;
        };
        let Ok(dropped) = hbar.drop_annotations(img) else {
            return false;
        };
        h.target()
            .iter()
            .all(|b| himg.occurrences(b) == dropped.occurrences(b))
    })
}

/// Numbers behind [`eigen_lift_project_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct LiftProject {
    pub rho_h: f64,
    pub rho_hbar: f64,
    /// `‖M w − ρ w‖ / ‖w‖` for the projected Perron vector `w` of `h̄`.
    pub residual: f64,
}

/// Compares `h` (restricted to the letters under `h̄`) with its annotation.
pub fn eigen_lift_project(
    h: &Morphism,
    hbar: &AnnotatedMorphism,
    tol: f64,
) -> Result<LiftProject, SpectralError> {
    let bases: BTreeSet<Symbol> = hbar.base.values().cloned().collect();
    let sub = Alphabet::from_set(&bases)?;
    let hr = h.restrict(&sub)?.with_target(sub.clone())?;
    let mh = incidence_matrix(&hr)?;
    let mbar = incidence_matrix(&hbar.morphism)?;
    let rho_h = dominant_eigenvalue(&mh, tol)?;
    let rho_hbar = dominant_eigenvalue(&mbar, tol)?;
    let v = perron_vector(&mbar, tol)?;
    let mut w = alloc::vec![0.0; sub.len()];
    for (i, l) in hbar.morphism.source().iter().enumerate() {
        w[sub.index_of(&hbar.base[l]).expect("base present")] += v[i];
    }
    let mf = mh.to_f64();
    let mut err = 0.0;
    for (i, row) in mf.iter().enumerate() {
        let mw: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum();
        err += (mw - rho_hbar * w[i]) * (mw - rho_hbar * w[i]);
    }
    let norm = libm::sqrt(w.iter().map(|x| x * x).sum());
    Ok(LiftProject {
        rho_h,
        rho_hbar,
        residual: libm::sqrt(err) / norm,
    })
}

pub fn eigen_lift_project_check(
    h: &Morphism,
    hbar: &AnnotatedMorphism,
    tol: f64,
) -> Result<bool, SpectralError> {
    let r = eigen_lift_project(h, hbar, INTERNAL_TOL)?;
    Ok((r.rho_h - r.rho_hbar).abs() < tol && r.residual < tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn m(rules: &[(&str, &str)]) -> Morphism {
        Morphism::from_char_rules(rules).unwrap()
    }

    fn rows(mat: &IncidenceMatrix) -> Vec<Vec<u32>> {
        mat.entries
            .iter()
            .map(|r| r.iter().map(|x| x.to_u32().unwrap()).collect())
            .collect()
    }

    fn fib() -> Morphism {
        m(&[("a", "ab"), ("b", "a")])
    }

    fn trib() -> Morphism {
        m(&[("a", "ab"), ("b", "ac"), ("c", "a")])
    }

    #[test]
    fn incidence_examples() {
        assert_eq!(rows(&incidence_matrix(&fib()).unwrap()), [[1, 1], [1, 0]]);
        let tm = m(&[("0", "01"), ("1", "10")]);
        assert_eq!(rows(&incidence_matrix(&tm).unwrap()), [[1, 1], [1, 1]]);
        assert_eq!(
            rows(&incidence_matrix(&trib()).unwrap()),
            [[1, 1, 1], [1, 0, 0], [0, 1, 0]]
        );
    }

    #[test]
    fn char_poly_examples() {
        let cp = char_poly(&incidence_matrix(&fib()).unwrap());
        assert_eq!(cp.to_string(), "x^2 - x - 1");
        let cp = char_poly(&incidence_matrix(&trib()).unwrap());
        assert_eq!(cp.to_string(), "x^3 - x^2 - x - 1");
        let zero = IncidenceMatrix {
            index: Alphabet::from_chars("abc").unwrap(),
            entries: alloc::vec![alloc::vec![BigUint::zero(); 3]; 3],
        };
        assert_eq!(char_poly(&zero).to_string(), "x^3");
    }

    #[test]
    fn eigenvalue_examples() {
        let tm = m(&[("0", "01"), ("1", "10")]);
        let r = dominant_eigenvalue(&incidence_matrix(&tm).unwrap(), TOL).unwrap();
        assert!((r - 2.0).abs() < TOL);
        let phi = (1.0 + libm::sqrt(5.0)) / 2.0;
        let r = dominant_eigenvalue(&incidence_matrix(&fib()).unwrap(), TOL).unwrap();
        assert!((r - phi).abs() < TOL);
    }

    #[test]
    fn imprimitive_and_defective_matrices() {
        // period-2 permutation: eigenvalues ±1
        let swap = m(&[("a", "b"), ("b", "a")]);
        let r = dominant_eigenvalue(&incidence_matrix(&swap).unwrap(), INTERNAL_TOL).unwrap();
        assert!((r - 1.0).abs() < 1e-10);
        // Jordan block at 1
        let j = m(&[("a", "ab"), ("b", "b")]);
        let r = dominant_eigenvalue(&incidence_matrix(&j).unwrap(), INTERNAL_TOL).unwrap();
        assert!((r - 1.0).abs() < 1e-10, "{r}");
    }

    #[test]
    fn report_with_padding_letters() {
        let h = m(&[("a", "ab"), ("b", "a"), ("d", "ddde"), ("e", "d")]);
        let sys = MorphicSystem::pure(h, Symbol::new("a").unwrap()).unwrap();
        let rep = substitutivity_report(&sys).unwrap();
        assert!(!rep.condition_ii_ok);
        assert!((rep.alpha - (1.0 + libm::sqrt(5.0)) / 2.0).abs() < TOL);
        assert!((rep.full_alphabet_alpha - (3.0 + libm::sqrt(13.0)) / 2.0).abs() < TOL);
        assert!(rep.perron_verified);
    }

    #[test]
    fn independence_examples() {
        use Independence::*;
        assert_eq!(multiplicative_independence(2.0, 8.0, 64, 1e-7).unwrap(), Dependent(3, 1));
        assert_eq!(multiplicative_independence(4.0, 8.0, 64, 1e-7).unwrap(), Dependent(3, 2));
        let phi = (1.0 + libm::sqrt(5.0)) / 2.0;
        assert_eq!(
            multiplicative_independence(phi, 2.0, 64, 1e-7).unwrap(),
            IndependentUpTo(64)
        );
        assert!(matches!(
            multiplicative_independence(1.0, 2.0, 64, 1e-7),
            Err(SpectralError::DomainError(_))
        ));
    }

    #[test]
    fn zero_column_extension() {
        let a = incidence_matrix(&fib()).unwrap();
        assert!(verify_zero_column_extension(&a, &a, &[0, 1]).unwrap());
        // new index 2 with a nilpotent, non-zero column
        let mut entries = alloc::vec![alloc::vec![BigUint::zero(); 4]; 4];
        for i in 0..2 {
            for j in 0..2 {
                entries[i][j] = a.entries[i][j].clone();
            }
        }
        let padded = IncidenceMatrix {
            index: Alphabet::from_chars("abcd").unwrap(),
            entries: entries.clone(),
        };
        assert!(verify_zero_column_extension(&a, &padded, &[0, 1]).unwrap());
        entries[2][3] = BigUint::one();
        let bad = IncidenceMatrix {
            index: Alphabet::from_chars("abcd").unwrap(),
            entries,
        };
        assert!(!verify_zero_column_extension(&a, &bad, &[0, 1]).unwrap());
        assert_eq!(
            verify_zero_column_extension(&a, &bad, &[0, 0]),
            Err(SpectralError::ShapeMismatch)
        );
    }

    #[test]
    fn primitivity() {
        assert!(incidence_matrix(&fib()).unwrap().is_primitive());
        assert!(!incidence_matrix(&m(&[("a", "b"), ("b", "a")])).unwrap().is_primitive());
    }
}
