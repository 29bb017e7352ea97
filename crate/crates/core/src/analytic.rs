//! Closed-form flow of the model started from a Bernoulli(ρ) configuration.
//!
//! The flow at time `t` is `1 - ρ - P_t`, where `P_t` is the probability of
//! the block `0^(m+1)`. With `T = t + 1` and `M = m + 1`,
//!
//! ```text
//! P_t = sum_{j=1..T} (j / T) C(M T, T - j) ρ^(T-j) (1-ρ)^(m T + j)
//! ```
//!
//! Each term is `(j / T)` times a binomial probability. Small sums are
//! evaluated directly; once `M T` exceeds 60 the binomial factor comes from a
//! saddle-point expansion evaluated in log space, since the coefficient and the
//! powers alone span hundreds of orders of magnitude.
//! An exact-rational path exists for verification.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::{
    binomial, binomial_f64, binomial_pmf, ln_factorial, log_sum_exp, CompensatedSum,
};

const LOG_SPACE_THRESHOLD: u64 = 60;

/// Time at which the flow is evaluated: a finite step or the steady state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Horizon {
    Finite(usize),
    Infinite,
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Finite(t) => write!(f, "{t}"),
            Horizon::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Horizon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Horizon::Infinite),
            other => other
                .parse()
                .map(Horizon::Finite)
                .map_err(|e| Error::Parse(format!("time {other:?}: {e}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NumericMode {
    #[default]
    Float,
    Exact,
}

impl fmt::Display for NumericMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NumericMode::Float => "float",
            NumericMode::Exact => "exact",
        })
    }
}

impl FromStr for NumericMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "float" => Ok(NumericMode::Float),
            "exact" => Ok(NumericMode::Exact),
            other => Err(Error::Parse(format!("unknown numeric mode {other:?}"))),
        }
    }
}

fn check_density(rho: f64) {
    assert!((0.0..=1.0).contains(&rho), "density {rho} outside [0, 1]");
}

/// Probability of `0^(m+1)` at time `t`.
pub fn exact_block_prob(m: u32, t: usize, rho: f64) -> f64 {
    assert!(m >= 1, "maximum speed must be at least 1");
    check_density(rho);
    if rho == 0.0 {
        return 1.0;
    }
    if rho == 1.0 {
        return 0.0;
    }
    let big_t = t as u64 + 1;
    let m = m as u64;
    let len = (m + 1) * big_t;
    let terms = (1..=big_t).map(|j| {
        let weight = j as f64 / big_t as f64;
        if len <= LOG_SPACE_THRESHOLD {
            weight
                * binomial_f64(len, big_t - j)
                * rho.powi((big_t - j) as i32)
                * (1.0 - rho).powi((m * big_t + j) as i32)
        } else {
            weight * binomial_pmf(big_t - j, len, rho)
        }
    });
    terms.collect::<CompensatedSum>().value()
}

/// [`exact_block_prob`] in exact rational arithmetic.
pub fn exact_block_prob_rational(m: u32, t: usize, rho: &BigRational) -> BigRational {
    assert!(m >= 1, "maximum speed must be at least 1");
    let big_t = t as u64 + 1;
    let m = m as u64;
    let len = (m + 1) * big_t;
    let vacancy = BigRational::one() - rho;
    (1..=big_t)
        .map(|j| {
            BigRational::new(j.into(), big_t.into())
                * BigRational::from_integer(binomial(len, big_t - j).into())
                * num_traits::pow(rho.clone(), (big_t - j) as usize)
                * num_traits::pow(vacancy.clone(), (m * big_t + j) as usize)
        })
        .fold(BigRational::zero(), |acc, x| acc + x)
}

/// Flow at time `t`: `1 - ρ - P_t`.
pub fn exact_flow(m: u32, t: usize, rho: f64) -> f64 {
    1.0 - rho - exact_block_prob(m, t, rho)
}

pub fn exact_flow_rational(m: u32, t: usize, rho: &BigRational) -> BigRational {
    BigRational::one() - rho - exact_block_prob_rational(m, t, rho)
}

/// `P_t` through the terminating series
/// `2F1(2, -t; 2 + m + m t; 1 - 1/ρ)` and its factorial prefactor.
///
/// The series is summed term by term from the ratio recurrence; with
/// `1 - 1/ρ <= 0` every term is non-negative, so the sum is taken in log
/// space without cancellation.
pub fn hypergeometric_block_prob(m: u32, t: usize, rho: f64) -> Result<f64> {
    assert!(m >= 1, "maximum speed must be at least 1");
    check_density(rho);
    if rho == 0.0 {
        return Err(Error::Domain(
            "series argument 1 - 1/rho is singular at rho = 0; use exact_flow".into(),
        ));
    }
    if rho == 1.0 {
        return Ok(0.0);
    }
    let (m, t) = (m as u64, t as u64);
    let lower = 2 + m + m * t;
    let ln_prefactor = (1 + m + m * t) as f64 * (1.0 - rho).ln()
        + t as f64 * rho.ln()
        + ln_factorial(1 + m + t + m * t)
        - ((1 + m + m * t) as f64).ln()
        - ln_factorial(1 + t)
        - ln_factorial(m + m * t);

    let ln_abs_z = (1.0 / rho - 1.0).ln();
    let mut log_terms = Vec::with_capacity(t as usize + 1);
    let mut ln_term = 0.0;
    log_terms.push(ln_term);
    for k in 0..t {
        // term_{k+1} / term_k = (2 + k)(k - t) z / ((lower + k)(k + 1)), z < 0
        ln_term += ((2 + k) as f64).ln() + ((t - k) as f64).ln() + ln_abs_z
            - ((lower + k) as f64).ln()
            - ((k + 1) as f64).ln();
        log_terms.push(ln_term);
    }
    Ok((ln_prefactor + log_sum_exp(&log_terms)).exp())
}

/// Flow through the hypergeometric form; undefined at ρ = 0.
pub fn flow_hypergeometric(m: u32, t: usize, rho: f64) -> Result<f64> {
    Ok(1.0 - rho - hypergeometric_block_prob(m, t, rho)?)
}

/// `lim P_t = max(1 - (m+1) ρ, 0)`.
pub fn steady_state_block_prob(m: u32, rho: f64) -> f64 {
    check_density(rho);
    (1.0 - (m as f64 + 1.0) * rho).max(0.0)
}

/// `m ρ` below the critical density `1/(m+1)`, `1 - ρ` above it.
pub fn steady_state_flow(m: u32, rho: f64) -> f64 {
    check_density(rho);
    if (m as f64 + 1.0) * rho < 1.0 {
        m as f64 * rho
    } else {
        1.0 - rho
    }
}

pub fn steady_state_block_prob_rational(m: u32, rho: &BigRational) -> BigRational {
    let v = BigRational::one() - BigRational::from_integer((m + 1).into()) * rho;
    if v > BigRational::zero() {
        v
    } else {
        BigRational::zero()
    }
}

pub fn steady_state_flow_rational(m: u32, rho: &BigRational) -> BigRational {
    BigRational::one() - rho - steady_state_block_prob_rational(m, rho)
}

/// Large-`t` approximation of `P_t` from the normal limit of the binomial
/// terms, with the sum over `j` replaced by an integral over `[1, T]`.
pub fn approx_block_prob_large_t(m: u32, t: usize, rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Domain(format!(
            "normal approximation needs 0 < rho < 1, got {rho}"
        )));
    }
    if t == 0 {
        return Err(Error::Domain("normal approximation needs t >= 1".into()));
    }
    let big_t = t as f64 + 1.0;
    let big_m = m as f64 + 1.0;
    let spread = big_m * rho * (1.0 - rho);
    let scale = (2.0 * spread * big_t).sqrt();
    let upper = 1.0 - big_t + big_m * rho * big_t;
    let lower = big_m * rho * big_t;

    let gaussian = (spread / (2.0 * std::f64::consts::PI * big_t)).sqrt()
        * ((-upper * upper / (2.0 * spread * big_t)).exp()
            - (-big_m * rho * big_t / (2.0 * (1.0 - rho))).exp());
    let error_fn =
        0.5 * (1.0 - big_m * rho) * (libm::erf(lower / scale) - libm::erf(upper / scale));
    Ok(gaussian + error_fn)
}

/// One point of a tabulated fundamental diagram.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticPoint {
    pub m: u32,
    pub t: Horizon,
    pub rho: f64,
    pub p_block: f64,
    pub flow: f64,
    /// Present when computed in exact mode.
    pub exact: Option<ExactValues>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactValues {
    pub rho: BigRational,
    pub p_block: BigRational,
    pub flow: BigRational,
}

impl AnalyticPoint {
    /// `T = t + 1`; `None` in the steady state.
    pub fn big_t(&self) -> Option<usize> {
        match self.t {
            Horizon::Finite(t) => Some(t + 1),
            Horizon::Infinite => None,
        }
    }

    /// `M = m + 1`.
    pub fn big_m(&self) -> u32 {
        self.m + 1
    }

    pub fn evaluate(m: u32, t: Horizon, rho: f64) -> Self {
        let p_block = match t {
            Horizon::Finite(t) => exact_block_prob(m, t, rho),
            Horizon::Infinite => steady_state_block_prob(m, rho),
        };
        let flow = match t {
            Horizon::Finite(_) => 1.0 - rho - p_block,
            Horizon::Infinite => steady_state_flow(m, rho),
        };
        Self {
            m,
            t,
            rho,
            p_block,
            flow,
            exact: None,
        }
    }

    pub fn evaluate_exact(m: u32, t: Horizon, rho: &BigRational) -> Self {
        let p_block = match t {
            Horizon::Finite(t) => exact_block_prob_rational(m, t, rho),
            Horizon::Infinite => steady_state_block_prob_rational(m, rho),
        };
        let flow = BigRational::one() - rho - &p_block;
        let to_f64 = |q: &BigRational| q.to_f64().unwrap_or(f64::NAN);
        Self {
            m,
            t,
            rho: to_f64(rho),
            p_block: to_f64(&p_block),
            flow: to_f64(&flow),
            exact: Some(ExactValues {
                rho: rho.clone(),
                p_block,
                flow,
            }),
        }
    }
}

/// Flow and block probability over a density grid at one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticSeries {
    pub m: u32,
    pub t: Horizon,
    pub mode: NumericMode,
    pub points: Vec<AnalyticPoint>,
}

impl AnalyticSeries {
    /// CSV with `rho,p_block,flow` columns (plus rational columns in exact
    /// mode) after `#` comment lines recording `m`, `t` and the mode.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "# m={}", self.m)?;
        writeln!(out, "# t={}", self.t)?;
        writeln!(out, "# mode={}", self.mode)?;
        match self.mode {
            NumericMode::Float => writeln!(out, "rho,p_block,flow")?,
            NumericMode::Exact => writeln!(out, "rho,p_block,flow,p_block_exact,flow_exact")?,
        }
        for p in &self.points {
            write!(out, "{},{},{}", p.rho, p.p_block, p.flow)?;
            if let Some(exact) = &p.exact {
                write!(out, ",{},{}", exact.p_block, exact.flow)?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Tabulates the flow over `grid`; finite horizons use the exact sum,
/// `Horizon::Infinite` the steady-state branches.
pub fn fundamental_diagram(m: u32, t: Horizon, grid: &[f64]) -> AnalyticSeries {
    let points = grid
        .par_iter()
        .map(|&rho| AnalyticPoint::evaluate(m, t, rho))
        .collect();
    AnalyticSeries {
        m,
        t,
        mode: NumericMode::Float,
        points,
    }
}

pub fn fundamental_diagram_exact(m: u32, t: Horizon, grid: &[BigRational]) -> AnalyticSeries {
    let points = grid
        .par_iter()
        .map(|rho| AnalyticPoint::evaluate_exact(m, t, rho))
        .collect();
    AnalyticSeries {
        m,
        t,
        mode: NumericMode::Exact,
        points,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn block_prob_examples() {
        for m in 1..=3 {
            for rho in [0.1f64, 0.5, 0.77] {
                let expected = (1.0 - rho).powi(m as i32 + 1);
                assert!((exact_block_prob(m, 0, rho) - expected).abs() < 1e-15);
            }
        }
        assert!((exact_block_prob(1, 1, 0.5) - 0.1875).abs() < 1e-15);
        assert_eq!(exact_block_prob_rational(1, 1, &q(1, 2)), q(3, 16));
        // near-critical sharpening: well below the t = 0 value (2/3)^3
        let p = exact_block_prob(2, 100, 1.0 / 3.0);
        assert!(p > 0.0 && p < 0.05, "{p}");
    }

    #[test]
    fn flow_examples() {
        assert!((exact_flow(1, 1, 0.5) - 0.3125).abs() < 1e-15);
        assert_eq!(exact_flow_rational(1, 1, &q(1, 2)), q(5, 16));
        for (m, t) in [(1, 0), (2, 7), (3, 100)] {
            assert_eq!(exact_flow(m, t, 0.0), 0.0);
            assert_eq!(exact_flow(m, t, 1.0), 0.0);
        }
    }

    #[test]
    fn hypergeometric_examples() {
        assert!((flow_hypergeometric(1, 1, 0.5).unwrap() - 0.3125).abs() < 1e-14);
        assert_eq!(flow_hypergeometric(2, 5, 1.0).unwrap(), 0.0);
        let a = flow_hypergeometric(2, 10, 0.3).unwrap();
        let b = exact_flow(2, 10, 0.3);
        assert!((a - b).abs() <= 1e-10 * b.abs());
        assert!(matches!(
            flow_hypergeometric(2, 10, 0.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn steady_state_examples() {
        assert!((steady_state_block_prob(2, 0.2) - 0.4).abs() < 1e-15);
        assert_eq!(steady_state_block_prob(2, 1.0 / 3.0), 0.0);
        assert_eq!(steady_state_block_prob(3, 0.0), 1.0);
        assert!((steady_state_flow(2, 0.2) - 0.4).abs() < 1e-15);
        assert_eq!(steady_state_flow(2, 0.5), 0.5);
        let third = 1.0 / 3.0;
        assert!((steady_state_flow(2, third) - 2.0 / 3.0).abs() < 1e-15);
        assert!((2.0 * third - (1.0 - third)).abs() < 1e-15);
        assert_eq!(steady_state_flow_rational(2, &q(1, 3)), q(2, 3));
        assert_eq!(steady_state_block_prob_rational(2, &q(1, 5)), q(2, 5));
    }

    #[test]
    fn approximation_examples() {
        let a = approx_block_prob_large_t(2, 2000, 0.2).unwrap();
        assert!((a - 0.4).abs() < 0.01, "{a}");
        let a = approx_block_prob_large_t(2, 2000, 0.5).unwrap();
        assert!(a.abs() < 0.01, "{a}");
        let a = approx_block_prob_large_t(2, 500, 0.3).unwrap();
        assert!((a - exact_block_prob(2, 500, 0.3)).abs() < 0.02, "{a}");
        assert!(approx_block_prob_large_t(2, 10, 0.0).is_err());
        assert!(approx_block_prob_large_t(2, 10, 1.0).is_err());
        assert!(approx_block_prob_large_t(2, 0, 0.5).is_err());
    }

    #[test]
    fn diagram_examples() {
        let d = fundamental_diagram(2, Horizon::Infinite, &[0.0, 1.0 / 3.0, 1.0]);
        let flows: Vec<f64> = d.points.iter().map(|p| p.flow).collect();
        assert_eq!(flows[0], 0.0);
        assert!((flows[1] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(flows[2], 0.0);
        let d = fundamental_diagram(1, Horizon::Infinite, &[0.25]);
        assert_eq!(d.points[0].flow, 0.25);
        assert!(fundamental_diagram(3, Horizon::Finite(4), &[])
            .points
            .is_empty());
    }

    #[test]
    fn derived_accessors() {
        let p = AnalyticPoint::evaluate(2, Horizon::Finite(9), 0.4);
        assert_eq!((p.big_t(), p.big_m()), (Some(10), 3));
        assert_eq!(
            AnalyticPoint::evaluate(2, Horizon::Infinite, 0.4).big_t(),
            None
        );
    }

    #[test]
    fn exact_mode_csv() {
        let d = fundamental_diagram_exact(1, Horizon::Finite(1), &[q(1, 2)]);
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "# m=1\n# t=1\n# mode=exact\nrho,p_block,flow,p_block_exact,flow_exact\n0.5,0.1875,0.3125,3/16,5/16\n"
        );
    }

    #[test]
    fn horizon_parsing() {
        assert_eq!("inf".parse::<Horizon>().unwrap(), Horizon::Infinite);
        assert_eq!("12".parse::<Horizon>().unwrap(), Horizon::Finite(12));
        assert!("-1".parse::<Horizon>().is_err());
        assert_eq!(Horizon::Infinite.to_string(), "inf");
    }
}
