use fi_traffic::analytic::{
    exact_block_prob, exact_block_prob_rational, exact_flow, flow_hypergeometric,
    steady_state_block_prob, steady_state_flow,
};
use fi_traffic::preimage::{preimage_length, preimage_probability, preimage_probability_exact};
use fi_traffic::BigRational;

/// Independent oracle: weight every word of length (t+1)(m+1) that passes the
/// prefix test, summing directly over the word space.
fn enumerated_block_prob(m: u32, t: usize, rho: f64) -> f64 {
    let len = preimage_length(m, t);
    let mut total = 0.0;
    for index in 0u64..1 << len {
        let mut capital = 0i64;
        let mut ok = true;
        for i in 0..len {
            capital += if index >> i & 1 == 1 { -(m as i64) } else { 1 };
            if capital <= 0 {
                ok = false;
                break;
            }
        }
        if ok {
            let ones = index.count_ones() as i32;
            total += rho.powi(ones) * (1.0 - rho).powi(len as i32 - ones);
        }
    }
    total
}

const DENSITIES: [f64; 5] = [0.1, 0.3, 1.0 / 3.0, 0.5, 0.9];

#[test]
fn closed_form_matches_path_sum_and_enumeration() {
    for m in 1..=3u32 {
        for t in 0..20 {
            if preimage_length(m, t) > 20 {
                break;
            }
            for rho in DENSITIES {
                let a = exact_block_prob(m, t, rho);
                let b = preimage_probability(m, t, rho);
                assert!((a - b).abs() <= 1e-12, "m={m} t={t} rho={rho}: {a} vs {b}");
                if preimage_length(m, t) <= 16 {
                    let c = enumerated_block_prob(m, t, rho);
                    assert!((a - c).abs() <= 1e-12, "m={m} t={t} rho={rho}: {a} vs {c}");
                }
            }
        }
    }
}

#[test]
fn rational_routes_agree_exactly() {
    for m in 1..=3u32 {
        for t in 0..=6 {
            for (n, d) in [(1, 10), (1, 3), (1, 2), (7, 9)] {
                let rho = BigRational::new(n.into(), d.into());
                assert_eq!(
                    exact_block_prob_rational(m, t, &rho),
                    preimage_probability_exact(m, t, &rho)
                );
            }
        }
    }
}

#[test]
fn hypergeometric_form_matches() {
    for m in 1..=3u32 {
        for t in 0..=50 {
            for k in 1..=20 {
                let rho = k as f64 * 0.05;
                let a = exact_flow(m, t, rho);
                let b = flow_hypergeometric(m, t, rho).unwrap();
                assert!(
                    (a - b).abs() <= 1e-10 * a.abs().max(b.abs()),
                    "m={m} t={t} rho={rho}"
                );
            }
        }
    }
}

#[test]
fn converges_to_steady_state() {
    let schedule = [10, 50, 100, 500, 1000, 2000];
    for m in 1..=3u32 {
        let critical = 1.0 / (m as f64 + 1.0);
        for k in 1..20 {
            let rho = k as f64 * 0.05;
            if (rho - critical).abs() < 0.05 {
                continue;
            }
            let limit = steady_state_block_prob(m, rho);
            let gaps: Vec<f64> = schedule
                .iter()
                .map(|&t| (exact_block_prob(m, t, rho) - limit).abs())
                .collect();
            assert!(gaps[5] <= 0.02, "m={m} rho={rho}: {gaps:?}");
            for w in gaps.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "m={m} rho={rho}: {gaps:?}");
            }
        }
    }
}

#[test]
fn flow_is_bounded_and_grows_in_time() {
    for m in 1..=3u32 {
        for k in 0..=100 {
            let rho = k as f64 / 100.0;
            let bound = (m as f64 * rho).min(1.0 - rho);
            assert!((steady_state_flow(m, rho) - bound).abs() < 1e-15);
            let mut prev = -1.0;
            for t in [0, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233, 377, 610] {
                let f = exact_flow(m, t, rho);
                assert!(
                    f >= -1e-12 && f <= bound + 1e-12,
                    "m={m} rho={rho} t={t}: {f}"
                );
                assert!(f >= prev - 1e-12, "m={m} rho={rho} t={t}");
                prev = f;
            }
        }
    }
}

#[test]
fn curves_at_one_five_and_hundred_steps_are_ordered() {
    for k in 1..1000 {
        let rho = k as f64 / 1000.0;
        let (a, b, c) = (
            exact_block_prob(2, 1, rho),
            exact_block_prob(2, 5, rho),
            exact_block_prob(2, 100, rho),
        );
        assert!(a >= b && b >= c, "rho={rho}: {a} {b} {c}");
    }
}
