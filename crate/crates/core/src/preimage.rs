//! Preimages of the block `0^(m+1)`.
//!
//! An `n`-step preimage of `0^(m+1)` is a word of length `p = (n+1)(m+1)`
//! whose light cone forces a block of `m + 1` empty sites after `n` steps.
//! These are exactly the m-admissible words: every prefix has
//! `sum xi(a_i) > 0` with `xi(0) = 1`, `xi(1) = -m`. Counting them by number
//! of ones is a ballot problem, so the probability of the block at time `t`
//! under a Bernoulli initial condition follows from [`path_count`].
//!
//! [`enumerate_preimages_bruteforce`] finds the preimage set by running the
//! dynamics on every word and serves as the oracle for the other routes.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{BinaryString, OpenEvolver};
use crate::numeric::{bernoulli_weight, binomial, binomial_pmf, CompensatedSum};

/// Default bound on the word length scanned by the brute-force oracle.
pub const DEFAULT_ORACLE_MAX_LEN: usize = 24;

/// Words longer than this are weighted through the saddle-point binomial.
const LOG_SPACE_THRESHOLD: u64 = 60;

/// Step weights of the admissibility walk: `xi(x) = 1 - (m + 1) x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdmissibilityWeight {
    m: u32,
}

impl AdmissibilityWeight {
    pub fn new(m: u32) -> Self {
        assert!(m >= 1, "maximum speed must be at least 1");
        Self { m }
    }

    #[inline]
    pub fn of(&self, symbol: u8) -> i64 {
        1 - (self.m as i64 + 1) * symbol as i64
    }
}

/// Length of an `n`-step preimage of `0^(m+1)`.
pub fn preimage_length(m: u32, n_steps: usize) -> usize {
    (n_steps + 1) * (m as usize + 1)
}

/// True iff every prefix of `word` has a strictly positive weight sum.
pub fn is_admissible(word: &BinaryString, m: u32) -> bool {
    is_admissible_symbols(word.symbols(), m)
}

fn is_admissible_symbols(symbols: &[u8], m: u32) -> bool {
    let xi = AdmissibilityWeight::new(m);
    let mut capital = 0i64;
    symbols.iter().all(|&s| {
        capital += xi.of(s);
        capital > 0
    })
}

/// Preimage counts of `0^(m+1)` grouped by number of ones.
///
/// Only classes with a positive count appear in `by_ones`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "PreimageCountRepr", try_from = "PreimageCountRepr")]
pub struct PreimageCount {
    pub m: u32,
    pub n_steps: usize,
    pub by_ones: BTreeMap<usize, BigUint>,
    pub total: BigUint,
}

impl PreimageCount {
    fn from_classes(m: u32, n_steps: usize, by_ones: BTreeMap<usize, BigUint>) -> Self {
        let total = by_ones.values().sum();
        Self {
            m,
            n_steps,
            by_ones,
            total,
        }
    }

    fn from_word_indices(m: u32, n_steps: usize, words: &[u64]) -> Self {
        let mut by_ones: BTreeMap<usize, BigUint> = BTreeMap::new();
        for w in words {
            *by_ones.entry(w.count_ones() as usize).or_default() += 1u32;
        }
        Self::from_classes(m, n_steps, by_ones)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("counts serialize to JSON")
    }
}

/// Wire form: counts as decimal strings so they survive any JSON reader.
#[derive(Serialize, Deserialize)]
struct PreimageCountRepr {
    m: u32,
    n_steps: usize,
    by_ones: BTreeMap<String, String>,
    total: String,
}

impl From<PreimageCount> for PreimageCountRepr {
    fn from(c: PreimageCount) -> Self {
        Self {
            m: c.m,
            n_steps: c.n_steps,
            by_ones: c
                .by_ones
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
            total: c.total.to_string(),
        }
    }
}

impl TryFrom<PreimageCountRepr> for PreimageCount {
    type Error = Error;

    fn try_from(r: PreimageCountRepr) -> Result<Self> {
        let parse_big = |s: &str| {
            s.parse::<BigUint>()
                .map_err(|e| Error::Parse(format!("count {s:?}: {e}")))
        };
        let by_ones = r
            .by_ones
            .iter()
            .map(|(k, v)| {
                let ones = k
                    .parse::<usize>()
                    .map_err(|e| Error::Parse(format!("class {k:?}: {e}")))?;
                Ok((ones, parse_big(v)?))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;
        let count = Self::from_classes(r.m, r.n_steps, by_ones);
        if count.total != parse_big(&r.total)? {
            return Err(Error::Parse(
                "total does not equal the sum of classes".into(),
            ));
        }
        Ok(count)
    }
}

/// Brute-force oracle with the default length cap.
pub fn enumerate_preimages_bruteforce(m: u32, n_steps: usize) -> Result<PreimageCount> {
    enumerate_preimages_bruteforce_capped(m, n_steps, DEFAULT_ORACLE_MAX_LEN)
}

pub fn enumerate_preimages_bruteforce_capped(
    m: u32,
    n_steps: usize,
    max_len: usize,
) -> Result<PreimageCount> {
    let words = preimage_set_bruteforce(m, n_steps, max_len)?;
    Ok(PreimageCount::from_word_indices(m, n_steps, &words))
}

/// Indices (see [`BinaryString::from_index`]) of every word of length
/// `(n+1)(m+1)` whose `n`-step open evolution determines `0^(m+1)`, sorted.
pub fn preimage_set_bruteforce(m: u32, n_steps: usize, max_len: usize) -> Result<Vec<u64>> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "maximum speed must be at least 1".into(),
        ));
    }
    let len = preimage_length(m, n_steps);
    if len > max_len.min(40) {
        return Err(Error::ResourceLimit(format!(
            "exhaustive scan of 2^{len} words exceeds the limit of 2^{}",
            max_len.min(40)
        )));
    }
    let mu = m as usize;
    let target = mu * n_steps..len - n_steps;
    let words = (0..1u64 << len)
        .into_par_iter()
        .map_init(
            || (OpenEvolver::new(mu, len), Vec::with_capacity(len)),
            |(evolver, row), index| {
                row.clear();
                row.extend((0..len).map(|i| Some((index >> i & 1) as u8)));
                for _ in 0..n_steps {
                    evolver.advance(row);
                }
                row[target.clone()]
                    .iter()
                    .all(|&c| c == Some(0))
                    .then_some(index)
            },
        )
        .flatten()
        .collect();
    Ok(words)
}

/// Indices of all m-admissible words of length `len`, sorted.
pub fn admissible_set(m: u32, len: usize) -> Vec<u64> {
    assert!(len <= 40, "word space too large to scan");
    let mut symbols = vec![0u8; len];
    (0..1u64 << len)
        .filter(|&index| {
            for (i, s) in symbols.iter_mut().enumerate() {
                *s = (index >> i & 1) as u8;
            }
            is_admissible_symbols(&symbols, m)
        })
        .collect()
}

/// Preimage counts from the ballot formula; no enumeration.
pub fn count_admissible(m: u32, n_steps: usize) -> PreimageCount {
    let len = preimage_length(m, n_steps) as u64;
    let by_ones = (0..=len)
        .filter_map(|ones| {
            let count = path_count(len - ones, ones, m);
            (!count.is_zero()).then_some((ones as usize, count))
        })
        .collect();
    PreimageCount::from_classes(m, n_steps, by_ones)
}

/// Number of words with `n0` zeros and `n1` ones whose prefixes all have
/// positive weight, i.e. lattice paths from the origin to `(n0, n1)` that
/// stay strictly below the line `x = m y`:
/// `(n0 - m n1) / (n0 + n1) * C(n0 + n1, n1)`, zero when `n0 <= m n1`.
///
/// # Panics
///
/// If `n0 + n1 == 0`, or if the final division leaves a remainder.
pub fn path_count(n0: u64, n1: u64, m: u32) -> BigUint {
    let len = n0 + n1;
    assert!(len >= 1, "path must have at least one step");
    let surplus = match n0.checked_sub(m as u64 * n1) {
        Some(s) if s > 0 => s,
        _ => return BigUint::zero(),
    };
    let (quotient, remainder) =
        (binomial(len, n1) * BigUint::from(surplus)).div_rem(&BigUint::from(len));
    assert!(
        remainder.is_zero(),
        "ballot count for ({n0}, {n1}, m={m}) is not integral"
    );
    quotient
}

/// Probability that a Bernoulli(ρ) word is a `t`-step preimage of
/// `0^(m+1)`, summed over admissible words grouped by number of ones.
pub fn preimage_probability(m: u32, t: usize, rho: f64) -> f64 {
    assert!((0.0..=1.0).contains(&rho), "density outside [0, 1]");
    if rho == 0.0 {
        return 1.0;
    }
    if rho == 1.0 {
        return 0.0;
    }
    let len = preimage_length(m, t) as u64;
    // n1 < len / (m + 1) = t + 1
    let classes = 0..=t as u64;
    if len <= LOG_SPACE_THRESHOLD {
        classes
            .map(|n1| {
                let count = path_count(len - n1, n1, m)
                    .to_f64()
                    .unwrap_or(f64::INFINITY);
                count * bernoulli_weight(rho, n1, len - n1)
            })
            .sum()
    } else {
        // path_count(n0, n1) = (n0 - m n1) / len * C(len, n1)
        classes
            .map(|n1| {
                let surplus = (len - n1 - m as u64 * n1) as f64;
                surplus / len as f64 * binomial_pmf(n1, len, rho)
            })
            .collect::<CompensatedSum>()
            .value()
    }
}

/// [`preimage_probability`] in exact rational arithmetic.
pub fn preimage_probability_exact(m: u32, t: usize, rho: &BigRational) -> BigRational {
    let len = preimage_length(m, t) as u64;
    let vacancy = BigRational::one() - rho;
    (0..=t as u64)
        .map(|n1| {
            let count = BigRational::from_integer(path_count(len - n1, n1, m).into());
            count
                * num_traits::pow(rho.clone(), n1 as usize)
                * num_traits::pow(vacancy.clone(), (len - n1) as usize)
        })
        .fold(BigRational::zero(), |acc, term| acc + term)
}
