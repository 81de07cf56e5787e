// Shared generators and brute-force oracles for integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use morphic_core::{Alphabet, Morphism, Symbol, Transducer, Word};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn sym(s: &str) -> Symbol {
    Symbol::new(s).unwrap()
}

pub fn w(s: &str) -> Word {
    Word::from_chars(s).unwrap()
}

pub fn alphabet(k: usize) -> Alphabet {
    Alphabet::from_chars(&"abcde"[..k]).unwrap()
}

pub fn random_word(rng: &mut ChaCha8Rng, sigma: &Alphabet, min: usize, max: usize) -> Word {
    let len = rng.gen_range(min..=max);
    (0..len)
        .map(|_| sigma.symbol(rng.gen_range(0..sigma.len())).clone())
        .collect()
}

pub fn random_morphism(
    rng: &mut ChaCha8Rng,
    source: &Alphabet,
    target: &Alphabet,
    min: usize,
    max: usize,
) -> Morphism {
    let rules: Vec<(Symbol, Word)> = source
        .iter()
        .map(|s| (s.clone(), random_word(rng, target, min, max)))
        .collect();
    Morphism::new(source.clone(), target.clone(), rules).unwrap()
}

/// An endomorphism prolongable on `a` (the first letter); other images may
/// be empty when `min == 0`.
pub fn random_prolongable(rng: &mut ChaCha8Rng, k: usize, min: usize, max: usize) -> Morphism {
    let sigma = alphabet(k);
    let a = sigma.symbol(0).clone();
    let rules: Vec<(Symbol, Word)> = sigma
        .iter()
        .map(|s| {
            if *s == a {
                let tail = random_word(rng, &sigma, 1, max.max(1));
                (s.clone(), Word::from(vec![a.clone()]).concat(&tail))
            } else {
                (s.clone(), random_word(rng, &sigma, min, max))
            }
        })
        .collect();
    Morphism::new(sigma.clone(), sigma, rules).unwrap()
}

pub fn random_transducer(
    rng: &mut ChaCha8Rng,
    input: &Alphabet,
    output: &Alphabet,
    states: usize,
    min_out: usize,
    max_out: usize,
) -> Transducer {
    let names: Vec<Symbol> = (0..states).map(|i| sym(&format!("q{i}"))).collect();
    let qs = Alphabet::new(names.clone()).unwrap();
    let mut t = Vec::new();
    for q in &names {
        for a in input {
            let q2 = names[rng.gen_range(0..states)].clone();
            t.push((q.clone(), a.clone(), q2, random_word(rng, output, min_out, max_out)));
        }
    }
    Transducer::new(input.clone(), output.clone(), qs, names[0].clone(), t).unwrap()
}

/// `h^k(a)` for a prolongable `h`, long enough that `keep` of it has at
/// least `n` letters. `None` when the letter budget or the iteration cap
/// runs out first.
pub fn iterate_until(
    h: &Morphism,
    a: &Symbol,
    n: usize,
    budget: usize,
    keep: impl Fn(&Word) -> usize,
) -> Option<Word> {
    let mut x = Word::from(vec![a.clone()]);
    for _ in 0..1000 {
        if keep(&x) >= n {
            return Some(x);
        }
        let next = h.apply(&x).unwrap();
        if next.len() > budget || next.len() == x.len() {
            return None;
        }
        x = next;
    }
    None
}

pub fn fixpoint_oracle(h: &Morphism, a: &Symbol, n: usize) -> Option<Word> {
    iterate_until(h, a, n, 1 << 22, |x| x.len()).map(|x| x.prefix(n))
}

pub fn erase_oracle(g: &Morphism, a: &Symbol, gamma: &BTreeSet<Symbol>, n: usize) -> Option<Word> {
    iterate_until(g, a, n, 1 << 22, |x| x.erase(gamma).len()).map(|x| x.erase(gamma).prefix(n))
}

/// Runs `m` letter by letter, tracking the state by hand.
pub fn transduce_oracle(m: &Transducer, x: &Word) -> Word {
    let mut q = m.start().clone();
    let mut out = Vec::new();
    for a in x {
        out.extend(m.lambda(&q, a).unwrap().iter().cloned());
        q = m.delta(&q, a).unwrap().clone();
    }
    Word::from(out)
}

/// `det(x·I − M)` at an integer point, by cofactor expansion.
pub fn det_shifted(m: &[Vec<i128>], x: i128) -> i128 {
    let n = m.len();
    let a: Vec<Vec<i128>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { x - m[i][j] } else { -m[i][j] })
                .collect()
        })
        .collect();
    cofactor(&a)
}

fn cofactor(a: &[Vec<i128>]) -> i128 {
    let n = a.len();
    if n == 0 {
        return 1;
    }
    let mut total = 0;
    for j in 0..n {
        if a[0][j] == 0 {
            continue;
        }
        let minor: Vec<Vec<i128>> = a[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, v)| *v).collect())
            .collect();
        let sign = if j % 2 == 0 { 1 } else { -1 };
        total += sign * a[0][j] * cofactor(&minor);
    }
    total
}

/// Largest real root of a monic polynomial (coefficients low degree
/// first) on `[lo, hi]`, by bisection on the last sign change.
pub fn largest_root(coeffs: &[f64], lo: f64, hi: f64) -> f64 {
    let f = |x: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
    let steps = 10_000;
    let mut right = hi;
    let mut left = hi;
    for i in (0..steps).rev() {
        let x = lo + (hi - lo) * i as f64 / steps as f64;
        if f(x) == 0.0 {
            return x;
        }
        if f(x).signum() != f(right).signum() {
            left = x;
            break;
        }
        right = x;
    }
    let (mut a, mut b) = (left, right);
    for _ in 0..200 {
        let mid = (a + b) / 2.0;
        if f(mid).signum() == f(a).signum() {
            a = mid;
        } else {
            b = mid;
        }
    }
    (a + b) / 2.0
}
