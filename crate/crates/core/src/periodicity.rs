//! Eventual periodicity of finite prefixes.
//!
//! The verdict only speaks about the supplied prefix. It says nothing
//! certain about the infinite word the prefix came from.

use thiserror::Error;

use crate::word::Word;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PeriodicityError {
    #[error("prefix of length {len} is too short; need at least {needed}")]
    InsufficientPrefix { len: usize, needed: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeriodVerdict {
    /// `x[i] = x[i+period]` for all `preperiod ≤ i < N − period`, with the
    /// smallest preperiod and, for it, the smallest period.
    Found { preperiod: usize, period: usize },
    /// Nothing within the caps.
    NoneFound { max_preperiod: usize, max_period: usize },
}

/// Searches preperiods `0..=max_preperiod` and periods `1..=max_period`.
pub fn detect_eventual_period(
    prefix: &Word,
    max_preperiod: usize,
    max_period: usize,
) -> Result<PeriodVerdict, PeriodicityError> {
    let x = prefix.letters();
    let needed = max_preperiod + 2 * max_period;
    if x.len() < needed || max_period == 0 {
        return Err(PeriodicityError::InsufficientPrefix {
            len: x.len(),
            needed: needed.max(1),
        });
    }
    // for each period, the least preperiod that works: one past the last
    // mismatch of x[i] against x[i+p]
    let mut best: Option<(usize, usize)> = None;
    for p in 1..=max_period {
        let start = (0..x.len() - p)
            .rev()
            .find(|&i| x[i] != x[i + p])
            .map_or(0, |i| i + 1);
        if start <= max_preperiod && best.is_none_or(|(n, _)| start < n) {
            best = Some((start, p));
        }
    }
    Ok(match best {
        Some((preperiod, period)) => PeriodVerdict::Found { preperiod, period },
        None => PeriodVerdict::NoneFound {
            max_preperiod,
            max_period,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::String;

    fn w(s: &str) -> Word {
        Word::from_chars(s).unwrap()
    }

    #[test]
    fn constant_word() {
        let v = detect_eventual_period(&w(&"a".repeat(64)), 4, 4).unwrap();
        assert_eq!(v, PeriodVerdict::Found { preperiod: 0, period: 1 });
    }

    #[test]
    fn preperiodic_word() {
        let mut s = String::from("a");
        s.push_str(&"bc".repeat(40));
        let v = detect_eventual_period(&w(&s), 8, 8).unwrap();
        assert_eq!(v, PeriodVerdict::Found { preperiod: 1, period: 2 });
    }

    #[test]
    fn smallest_preperiod_wins() {
        // period 3 from the start beats period 1 from position 5
        let v = detect_eventual_period(&w("abcabcccccccccc"), 8, 3).unwrap();
        assert_eq!(v, PeriodVerdict::Found { preperiod: 5, period: 1 });
        let v = detect_eventual_period(&w("abcabcabcabc"), 2, 3).unwrap();
        assert_eq!(v, PeriodVerdict::Found { preperiod: 0, period: 3 });
    }

    #[test]
    fn short_prefix_is_rejected() {
        assert_eq!(
            detect_eventual_period(&w("abab"), 2, 2),
            Err(PeriodicityError::InsufficientPrefix { len: 4, needed: 6 })
        );
    }
}
