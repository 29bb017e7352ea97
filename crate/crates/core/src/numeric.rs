//! Small numeric helpers shared by the combinatorics and analytic modules.

use num_bigint::BigUint;
use num_traits::One;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        iter.into_iter().for_each(|x| acc.add(x));
        acc
    }
}

/// `ln(sum(exp(x)))`, compensated. `-inf` terms are skipped; an empty or
/// all-`-inf` input gives `-inf`.
pub fn log_sum_exp(log_terms: &[f64]) -> f64 {
    let max = log_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let scaled: CompensatedSum = log_terms.iter().map(|&l| (l - max).exp()).collect();
    max + scaled.value().ln()
}

pub fn ln_factorial(n: u64) -> f64 {
    libm::lgamma(n as f64 + 1.0)
}

/// Binomial coefficient as a double, by the multiplicative formula.
pub fn binomial_f64(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Exact binomial coefficient.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::default();
    }
    let k = k.min(n - k);
    // each partial product is itself a binomial coefficient, so the division is exact
    (0..k).fold(BigUint::one(), |acc, i| acc * (n - i) / (i + 1))
}

/// `ln(n!) - ln(sqrt(2 pi n) (n/e)^n)`, the Stirling remainder.
fn stirling_error(n: u64) -> f64 {
    #[allow(clippy::excessive_precision)]
    const SMALL: [f64; 16] = [
        0.0,
        0.081_061_466_795_327_258_22,
        0.041_340_695_955_409_294_09,
        0.027_677_925_684_998_339_15,
        0.020_790_672_103_765_093_11,
        0.016_644_691_189_821_192_16,
        0.013_876_128_823_070_747_99,
        0.011_896_709_945_891_770_10,
        0.010_411_265_261_972_096_50,
        0.009_255_462_182_712_732_918,
        0.008_330_563_433_362_871_256,
        0.007_573_675_487_951_840_795,
        0.006_942_840_107_209_529_866,
        0.006_408_994_188_004_207_068,
        0.005_951_370_112_758_847_736,
        0.005_554_733_551_962_801_371,
    ];
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n < 16 {
        return SMALL[n as usize];
    }
    let n = n as f64;
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x / np) + np - x`, series-expanded when `x` is near `np`.
fn binomial_deviance(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let next = s + ej / (2 * j + 1) as f64;
            if next == s {
                return next;
            }
            s = next;
        }
        s
    } else {
        x * (x / np).ln() + np - x
    }
}

/// Binomial probability `C(n, k) p^k (1-p)^(n-k)` by the saddle-point
/// expansion, accurate to a few ulps without forming the coefficient.
pub fn binomial_pmf(k: u64, n: u64, p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p));
    if k > n {
        return 0.0;
    }
    let q = 1.0 - p;
    if p == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if q == 0.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    let nf = n as f64;
    if k == 0 {
        let lc = if p < 0.1 {
            -binomial_deviance(nf, nf * q) - nf * p
        } else {
            nf * q.ln()
        };
        return lc.exp();
    }
    if k == n {
        let lc = if q < 0.1 {
            -binomial_deviance(nf, nf * p) - nf * q
        } else {
            nf * p.ln()
        };
        return lc.exp();
    }
    let kf = k as f64;
    let lc = stirling_error(n)
        - stirling_error(k)
        - stirling_error(n - k)
        - binomial_deviance(kf, nf * p)
        - binomial_deviance(nf - kf, nf * q);
    let lf = (2.0 * std::f64::consts::PI).ln() + kf.ln() + (-kf / nf).ln_1p();
    (lc - 0.5 * lf).exp()
}

/// `x^k (1-x)^j` with `0^0 = 1`.
pub fn bernoulli_weight(x: f64, ones: u64, zeros: u64) -> f64 {
    pow_u64(x, ones) * pow_u64(1.0 - x, zeros)
}

fn pow_u64(x: f64, k: u64) -> f64 {
    match i32::try_from(k) {
        Ok(k) => x.powi(k),
        Err(_) => x.powf(k as f64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut naive = 0.0;
        let mut acc = CompensatedSum::new();
        for x in [1.0, 1e100, 1.0, -1e100] {
            naive += x;
            acc.add(x);
        }
        assert_eq!(naive, 0.0);
        assert_eq!(acc.value(), 2.0);
    }

    #[test]
    fn log_sum_exp_matches_direct() {
        let terms = [0.1f64.ln(), 0.2f64.ln(), 0.3f64.ln(), f64::NEG_INFINITY];
        assert!((log_sum_exp(&terms).exp() - 0.6).abs() < 1e-15);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[-1000.0, -1000.0]) - (-1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(10, 3), BigUint::from(120u32));
        assert_eq!(binomial(3, 5), BigUint::default());
        assert_eq!(binomial(0, 0), BigUint::one());
        assert_eq!(binomial_f64(10, 3), 120.0);
        assert_eq!(
            binomial(100, 50).to_string(),
            "100891344545564193334812497256"
        );
    }

    #[test]
    fn pmf_matches_exact_products() {
        for n in [1u64, 2, 5, 17, 40, 90] {
            for p in [0.01, 0.05, 0.3, 0.5, 0.77, 0.95] {
                let mut total = CompensatedSum::new();
                for k in 0..=n {
                    let direct = binomial_f64(n, k) * bernoulli_weight(p, k, n - k);
                    let pmf = binomial_pmf(k, n, p);
                    total.add(pmf);
                    assert!(
                        (pmf - direct).abs() <= 1e-12 * direct.max(1e-300),
                        "n={n} k={k} p={p}: {pmf} vs {direct}"
                    );
                }
                assert!((total.value() - 1.0).abs() < 1e-14);
            }
        }
        assert_eq!(binomial_pmf(0, 10, 0.0), 1.0);
        assert_eq!(binomial_pmf(10, 10, 1.0), 1.0);
        assert_eq!(binomial_pmf(3, 10, 1.0), 0.0);
        assert_eq!(binomial_pmf(11, 10, 0.5), 0.0);
    }

    #[test]
    fn stirling_table_is_continuous_with_series() {
        for n in 12..40u64 {
            let direct = ln_factorial(n) - (n as f64 + 0.5) * (n as f64).ln() + n as f64
                - (2.0 * std::f64::consts::PI).sqrt().ln();
            assert!((stirling_error(n) - direct).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn weight_handles_zero_powers() {
        assert_eq!(bernoulli_weight(0.0, 0, 3), 1.0);
        assert_eq!(bernoulli_weight(1.0, 2, 0), 1.0);
        assert_eq!(bernoulli_weight(1.0, 2, 1), 0.0);
        assert!((bernoulli_weight(0.5, 1, 3) - 1.0 / 16.0).abs() < 1e-16);
    }
}
