//! Self-verification suite: each check runs one route of the theory against
//! an independent one and reports pass or fail.
//!
//! The update function is injectable so the harness itself can be tested
//! against a deliberately broken rule.

use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_rational::BigRational;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{
    approx_block_prob_large_t, exact_block_prob, exact_block_prob_rational, exact_flow,
    flow_hypergeometric, steady_state_block_prob, steady_state_flow,
};
use crate::lattice::{
    init_fixed_count_with, iterate_open, local_rule, rng_for, step, step_local, BinaryString,
    Configuration,
};
use crate::measure::{block_count, block_frequency, flow, velocity_histogram};
use crate::preimage::{
    admissible_set, is_admissible, path_count, preimage_length, preimage_probability,
    preimage_probability_exact, preimage_set_bruteforce,
};

pub type StepFn = fn(&Configuration, u32) -> Configuration;

type Check<'a> = (&'static str, Box<dyn Fn() -> Outcome + Sync + 'a>);

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    /// Lower exhaustive bounds and smaller simulations.
    pub quick: bool,
    pub seed: u64,
    /// Update rule under test; [`step`] unless a test substitutes one.
    pub stepper: StepFn,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            quick: false,
            seed: 1999,
            stepper: step,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub quick: bool,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "[{tag}] {}: {}", c.name, c.detail)?;
        }
        let passed = self.checks.iter().filter(|c| c.passed).count();
        write!(f, "{passed}/{} checks passed", self.checks.len())
    }
}

type Outcome = Result<String, String>;

struct Budget {
    exhaustive_ring: usize,
    random_rings: usize,
    oracle_len: usize,
    lemma_len: usize,
    hyper_t: usize,
    mc_lattice: usize,
    mc_steps: usize,
    mc_replicas: usize,
}

impl Budget {
    fn for_options(opts: &VerifyOptions) -> Self {
        if opts.quick {
            Self {
                exhaustive_ring: 10,
                random_rings: 100,
                oracle_len: 12,
                lemma_len: 12,
                hyper_t: 20,
                mc_lattice: 20_000,
                mc_steps: 30,
                mc_replicas: 16,
            }
        } else {
            Self {
                exhaustive_ring: 14,
                random_rings: 1000,
                oracle_len: 20,
                lemma_len: 16,
                hyper_t: 50,
                mc_lattice: 100_000,
                mc_steps: 100,
                mc_replicas: 32,
            }
        }
    }
}

/// Runs every check. A panic inside a check is reported as its failure.
pub fn run_suite(opts: &VerifyOptions) -> Report {
    let budget = Budget::for_options(opts);
    let checks: Vec<Check<'_>> = vec![
        (
            "conservation",
            Box::new(|| check_conservation(opts, &budget)),
        ),
        (
            "rule-equivalence",
            Box::new(|| check_rule_equivalence(opts, &budget)),
        ),
        ("rule-184", Box::new(check_rule_184)),
        ("light-cone", Box::new(|| check_light_cone(opts))),
        (
            "flow-identity",
            Box::new(|| check_flow_identity(opts, &budget)),
        ),
        (
            "preimage-oracle",
            Box::new(|| check_preimage_oracle(&budget)),
        ),
        ("lemma-shrinkage", Box::new(|| check_lemma(&budget))),
        ("ballot-counts", Box::new(|| check_ballot_counts(&budget))),
        ("preimage-probability", Box::new(check_probability_routes)),
        ("hypergeometric", Box::new(|| check_hypergeometric(&budget))),
        ("steady-state-limit", Box::new(check_limit)),
        ("monotone-in-time", Box::new(check_monotone)),
        ("monte-carlo", Box::new(|| check_monte_carlo(opts, &budget))),
    ];
    let checks = checks
        .into_iter()
        .map(|(name, check)| {
            let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
                let msg = panic
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panicked".into());
                Err(format!("panic: {msg}"))
            });
            let (passed, detail) = match outcome {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            CheckResult {
                name,
                passed,
                detail,
            }
        })
        .collect();
    Report {
        quick: opts.quick,
        seed: opts.seed,
        checks,
    }
}

fn random_ring(len: usize, rng: &mut impl Rng) -> Configuration {
    let cars = rng.gen_range(0..=len);
    init_fixed_count_with(len, cars, rng).expect("cars <= len")
}

fn exhaustive_rings(max_len: usize) -> impl Iterator<Item = Configuration> {
    (1..=max_len).flat_map(|len| {
        (0..1u64 << len).map(move |bits| {
            let cells: Vec<u8> = (0..len).map(|i| (bits >> i & 1) as u8).collect();
            Configuration::from_cells(&cells).expect("non-empty")
        })
    })
}

fn check_conservation(opts: &VerifyOptions, budget: &Budget) -> Outcome {
    let mut rng = rng_for(opts.seed, 1);
    let mut checked = 0;
    for len in [12, 256] {
        for m in 1..=3 {
            for _ in 0..budget.random_rings / 4 {
                let mut config = random_ring(len, &mut rng);
                let cars = config.car_count();
                for t in 1..=10 {
                    config = (opts.stepper)(&config, m);
                    if config.car_count() != cars {
                        return Err(format!(
                            "m={m} L={len}: {cars} cars became {} at t={t}",
                            config.car_count()
                        ));
                    }
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} rings x 10 steps"))
}

fn check_rule_equivalence(opts: &VerifyOptions, budget: &Budget) -> Outcome {
    let mut checked = 0usize;
    for config in exhaustive_rings(budget.exhaustive_ring) {
        for m in 1..=3 {
            let a = (opts.stepper)(&config, m);
            let b = step_local(&config, m);
            if a != b {
                return Err(format!("m={m} {config}: car rule {a}, local rule {b}"));
            }
            checked += 1;
        }
    }
    let mut rng = rng_for(opts.seed, 2);
    for i in 0..budget.random_rings {
        let config = random_ring(256, &mut rng);
        let m = 1 + (i % 3) as u32;
        if (opts.stepper)(&config, m) != step_local(&config, m) {
            return Err(format!("m={m}: random L=256 ring #{i} differs"));
        }
        checked += 1;
    }
    Ok(format!(
        "{checked} comparisons (all rings L <= {}, {} random L=256)",
        budget.exhaustive_ring, budget.random_rings
    ))
}

fn check_rule_184() -> Outcome {
    for code in 0..8u8 {
        let window = [code >> 2 & 1, code >> 1 & 1, code & 1];
        if local_rule(&window, 1) != 184 >> code & 1 {
            return Err(format!("window {window:?} disagrees with rule 184"));
        }
    }
    Ok("all 8 windows match 10111000".into())
}

fn check_light_cone(opts: &VerifyOptions) -> Outcome {
    let fixture: BinaryString = "101110100".parse().expect("literal");
    let image = iterate_open(&fixture, 2, 2).map_err(|e| e.to_string())?;
    if image.to_string() != "100" {
        return Err(format!("101110100 evolved to {image}, expected 100"));
    }
    let mut rng = rng_for(opts.seed, 3);
    let mut checked = 0;
    for m in 1..=3u32 {
        for t in 0..=4usize {
            for _ in 0..20 {
                let len = (m as usize + 1) * t + rng.gen_range(1..8);
                let symbols: Vec<u8> = (0..len).map(|_| rng.gen_range(0..=1)).collect();
                let word = BinaryString::new(symbols.clone()).expect("non-empty");
                let open = iterate_open(&word, m, t).map_err(|e| e.to_string())?;
                // embed in a larger random ring and evolve periodically
                let pad = rng.gen_range(t + 1..3 * t + 6);
                let mut cells = symbols;
                cells.extend((0..pad + m as usize * t).map(|_| rng.gen_range(0..=1u8)));
                let mut ring = Configuration::from_cells(&cells).expect("non-empty");
                for _ in 0..t {
                    ring = (opts.stepper)(&ring, m);
                }
                let expected: Vec<u8> = (m as usize * t..len - t)
                    .map(|i| ring.get(i) as u8)
                    .collect();
                if open.symbols() != expected.as_slice() {
                    return Err(format!(
                        "m={m} t={t} word {word}: open {open}, ring {expected:?}"
                    ));
                }
                checked += 1;
            }
        }
    }
    Ok(format!(
        "fixture 101110100 -> 100; {checked} random words match ring evolution"
    ))
}

fn check_flow_identity(opts: &VerifyOptions, budget: &Budget) -> Outcome {
    let mut rng = rng_for(opts.seed, 4);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for m in 1..=3u32 {
        let zeros = BinaryString::zeros(m as usize + 1).expect("non-empty");
        for len in [12, 256] {
            for i in 0..budget.random_rings {
                let mut config = random_ring(len, &mut rng);
                for _ in 0..i % 5 {
                    config = (opts.stepper)(&config, m);
                }
                let lhs = flow(&config, m);
                let rhs = 1.0 - config.density() - block_frequency(&config, &zeros);
                worst = worst.max((lhs - rhs).abs());
                if (lhs - rhs).abs() > 1e-12 {
                    return Err(format!("m={m} {config:?}: flow {lhs} vs {rhs}"));
                }
                if lhs < 0.0
                    || lhs > (m as f64 * config.density()).min(1.0 - config.density()) + 1e-12
                {
                    return Err(format!("m={m} {config:?}: flow {lhs} outside bounds"));
                }
                let hist = velocity_histogram(&config, m);
                if hist.counts.iter().sum::<u64>() != hist.cars {
                    return Err("histogram does not sum to car count".into());
                }
                consistency_conditions(&config, m)?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} rings, max deviation {worst:.1e}"))
}

/// `#(10^(n-1)1) + #(10^n) = #(10^(n-1))` and `#(10^n) = #(0^n) - #(0^(n+1))`.
fn consistency_conditions(config: &Configuration, m: u32) -> Result<(), String> {
    let count = |s: String| block_count(config, &s.parse().expect("binary literal"));
    for n in 1..=m as usize + 1 {
        if n + 1 > config.len() {
            break;
        }
        let z = |k: usize| "0".repeat(k);
        if n >= 2
            && count(format!("1{}1", z(n - 1))) + count(format!("1{}", z(n)))
                != count(format!("1{}", z(n - 1)))
        {
            return Err(format!("{config:?}: consistency fails for 10^{n}"));
        }
        if count(format!("1{}", z(n))) != count(z(n)) - count(z(n + 1)) {
            return Err(format!("{config:?}: 10^{n} != 0^{n} - 0^{}", n + 1));
        }
    }
    Ok(())
}

fn oracle_cases(max_len: usize) -> Vec<(u32, usize)> {
    (1..=max_len as u32)
        .flat_map(|m| (0..max_len).map(move |n| (m, n)))
        .filter(|&(m, n)| preimage_length(m, n) <= max_len)
        .collect()
}

fn check_preimage_oracle(budget: &Budget) -> Outcome {
    let cases = oracle_cases(budget.oracle_len);
    for &(m, n) in &cases {
        let oracle = preimage_set_bruteforce(m, n, budget.oracle_len).map_err(|e| e.to_string())?;
        let admissible = admissible_set(m, preimage_length(m, n));
        if oracle != admissible {
            return Err(format!(
                "m={m} n={n}: {} preimages vs {} admissible words",
                oracle.len(),
                admissible.len()
            ));
        }
    }
    Ok(format!(
        "set equality for {} (m, n) pairs with p <= {}",
        cases.len(),
        budget.oracle_len
    ))
}

fn check_lemma(budget: &Budget) -> Outcome {
    let mut checked = 0usize;
    for m in 1..=3u32 {
        for len in m as usize + 2..=budget.lemma_len {
            for index in admissible_set(m, len) {
                let word = BinaryString::from_index(index, len).expect("len <= 64");
                let next = iterate_open(&word, m, 1).map_err(|e| e.to_string())?;
                if !is_admissible(&next, m) {
                    return Err(format!(
                        "m={m}: {word} is admissible but its image {next} is not"
                    ));
                }
                checked += 1;
            }
        }
    }
    Ok(format!(
        "{checked} admissible words keep admissibility after one step"
    ))
}

fn check_ballot_counts(budget: &Budget) -> Outcome {
    let mut checked = 0;
    for (m, n) in oracle_cases(budget.oracle_len.min(16)) {
        let len = preimage_length(m, n);
        let mut by_ones = vec![0u64; len + 1];
        for w in preimage_set_bruteforce(m, n, len).map_err(|e| e.to_string())? {
            by_ones[w.count_ones() as usize] += 1;
        }
        for (n1, &count) in by_ones.iter().enumerate() {
            let n1 = n1 as u64;
            // path_count asserts that its division is exact
            if path_count(len as u64 - n1, n1, m) != count.into() {
                return Err(format!("m={m} n={n} n1={n1}: {count} preimages"));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} (n0, n1) classes match the ballot count"))
}

fn check_probability_routes() -> Outcome {
    let mut worst = 0.0f64;
    for m in 1..=3u32 {
        for t in 0..20usize {
            if preimage_length(m, t) > 20 {
                break;
            }
            for rho in [0.1, 0.3, 1.0 / 3.0, 0.5, 0.9] {
                let d = (preimage_probability(m, t, rho) - exact_block_prob(m, t, rho)).abs();
                worst = worst.max(d);
                if d > 1e-12 {
                    return Err(format!("m={m} t={t} rho={rho}: routes differ by {d:e}"));
                }
            }
            for (num, den) in [(1, 10), (1, 3), (1, 2)] {
                let rho = BigRational::new(num.into(), den.into());
                if preimage_probability_exact(m, t, &rho) != exact_block_prob_rational(m, t, &rho) {
                    return Err(format!("m={m} t={t} rho={rho}: exact routes differ"));
                }
            }
        }
    }
    Ok(format!(
        "float max deviation {worst:.1e}; rational routes identical"
    ))
}

fn check_hypergeometric(budget: &Budget) -> Outcome {
    let mut worst = 0.0f64;
    for m in 1..=3u32 {
        for t in 0..=budget.hyper_t {
            for k in 1..=20 {
                let rho = k as f64 * 0.05;
                let a = exact_flow(m, t, rho);
                let b = flow_hypergeometric(m, t, rho).map_err(|e| e.to_string())?;
                let rel = if a == b {
                    0.0
                } else {
                    (a - b).abs() / a.abs().max(b.abs())
                };
                worst = worst.max(rel);
                if rel > 1e-10 {
                    return Err(format!("m={m} t={t} rho={rho}: {a} vs {b}"));
                }
            }
        }
    }
    Ok(format!(
        "max relative deviation {worst:.1e} for t <= {}",
        budget.hyper_t
    ))
}

fn check_limit() -> Outcome {
    let mut worst_limit = 0.0f64;
    let mut worst_approx = 0.0f64;
    for m in 1..=2u32 {
        for rho in [0.1, 0.2, 0.5, 0.8] {
            if (rho - 1.0 / (m as f64 + 1.0)).abs() < 0.05 {
                continue;
            }
            let limit = steady_state_block_prob(m, rho);
            let d = (exact_block_prob(m, 2000, rho) - limit).abs();
            worst_limit = worst_limit.max(d);
            let approx = approx_block_prob_large_t(m, 500, rho).map_err(|e| e.to_string())?;
            let e = (approx - exact_block_prob(m, 500, rho)).abs();
            worst_approx = worst_approx.max(e);
            if d > 0.02 || e > 0.02 {
                return Err(format!(
                    "m={m} rho={rho}: limit gap {d:e}, approximation gap {e:e}"
                ));
            }
        }
    }
    Ok(format!(
        "t=2000 limit gap {worst_limit:.1e}; t=500 approximation gap {worst_approx:.1e}"
    ))
}

fn check_monotone() -> Outcome {
    let times = [0usize, 1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000];
    for m in 1..=3u32 {
        for k in 0..=100 {
            let rho = k as f64 / 100.0;
            let mut prev = f64::INFINITY;
            for &t in &times {
                let p = exact_block_prob(m, t, rho);
                if !(0.0..=1.0 + 1e-12).contains(&p) || p > prev + 1e-12 {
                    return Err(format!("m={m} rho={rho} t={t}: P={p} after {prev}"));
                }
                let f = exact_flow(m, t, rho);
                if f < -1e-12 || f > steady_state_flow(m, rho) + 1e-12 {
                    return Err(format!("m={m} rho={rho} t={t}: flow {f} outside bounds"));
                }
                prev = p;
            }
        }
    }
    Ok("P non-increasing in t and flow within min(m rho, 1 - rho) on a 101-point grid".into())
}

fn check_monte_carlo(opts: &VerifyOptions, budget: &Budget) -> Outcome {
    let m = 2;
    let len = budget.mc_lattice;
    let mut worst = 0.0f64;
    for (k, rho) in [0.3, 1.0 / 3.0, 0.35].into_iter().enumerate() {
        let cars = (rho * len as f64).round() as usize;
        let density = cars as f64 / len as f64;
        let series: Vec<Vec<f64>> = (0..budget.mc_replicas)
            .into_par_iter()
            .map(|r| {
                let mut rng = rng_for(opts.seed, (k * 10_000 + r) as u64);
                let mut config = init_fixed_count_with(len, cars, &mut rng).expect("cars <= len");
                let mut out = vec![flow(&config, m)];
                for _ in 0..budget.mc_steps {
                    config = (opts.stepper)(&config, m);
                    out.push(flow(&config, m));
                }
                out
            })
            .collect();
        for t in 0..=budget.mc_steps {
            let values: Vec<f64> = series.iter().map(|s| s[t]).collect();
            let est = crate::simulate::Estimate::from_values(&values);
            let theory = exact_flow(m, t, density);
            let z = (est.mean - theory).abs() / est.stderr.max(1e-15);
            worst = worst.max(z);
            if z > 3.0 {
                return Err(format!(
                    "rho={density} t={t}: simulated {} +- {} vs exact {theory}",
                    est.mean, est.stderr
                ));
            }
        }
    }
    Ok(format!(
        "L={len}, {} replicas, t <= {}: max deviation {worst:.2} standard errors",
        budget.mc_replicas, budget.mc_steps
    ))
}
