//! Log-space binomial probabilities.
//!
//! Everything runs through `ln_gamma`; direct factorials overflow long before
//! the spectrogram entry counts seen here (n is in the hundreds of thousands
//! for full-size inputs). The survival function sums tail terms with a
//! multiplicative term recurrence, switching to the complement below the mode
//! so both branches work with strictly decreasing terms.

/// Natural log of the gamma function (Lanczos approximation, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEFFS: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // Reflection formula keeps the approximation in its accurate range.
        let pi = std::f64::consts::PI;
        return pi.ln() - (pi * x).sin().abs().ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + G + 0.5;
    let mut a = COEFFS[0];
    for (i, &c) in COEFFS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// `ln C(n, k)`.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    assert!(k <= n, "ln_choose: k > n");
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// `ln P(K = k)` for `K ~ Binomial(n, p)`.
pub fn log_pmf(k: u64, n: u64, p: f64) -> f64 {
    assert!(k <= n && p > 0.0 && p < 1.0, "log_pmf domain");
    ln_choose(n, k) + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()
}

/// `ln P(K >= k)` for `K ~ Binomial(n, p)`. Finite for all `0 <= k <= n`.
pub fn log_survival(k: u64, n: u64, p: f64) -> f64 {
    assert!(k <= n && p > 0.0 && p < 1.0, "log_survival domain");
    if k == 0 {
        return 0.0;
    }
    let q = 1.0 - p;
    if k as f64 > n as f64 * p {
        // Upper tail: terms t_i = pmf(i) decrease for i >= k. Accumulate the
        // ratio sum R = sum_i t_i / t_k in linear space.
        let base = log_pmf(k, n, p);
        let mut ratio_sum = 1.0f64;
        let mut term = 1.0f64;
        for i in k..n {
            term *= (n - i) as f64 / (i + 1) as f64 * (p / q);
            ratio_sum += term;
            if term < ratio_sum * 1e-17 {
                break;
            }
        }
        base + ratio_sum.ln()
    } else {
        // At or below the mean: the complement P(K <= k-1) is comfortably
        // below 1, so evaluate it in linear space and use log1p.
        let base = log_pmf(k - 1, n, p);
        let mut ratio_sum = 1.0f64;
        let mut term = 1.0f64;
        for i in (1..k).rev() {
            term *= i as f64 / (n - i + 1) as f64 * (q / p);
            ratio_sum += term;
            if term < ratio_sum * 1e-17 {
                break;
            }
        }
        let lower_tail = (base + ratio_sum.ln()).exp();
        (-lower_tail).ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_small_integers() {
        // ln((n-1)!) for n = 1..10.
        let mut fact = 1.0f64;
        for n in 1u32..10 {
            assert!((ln_gamma(n as f64) - fact.ln()).abs() < 1e-12, "n={n}");
            fact *= n as f64;
        }
    }

    #[test]
    fn ln_gamma_half() {
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-12);
    }

    #[test]
    fn pmf_hand_case() {
        // Binomial(4, 1/2) at k = 2: 6/16.
        let lp = log_pmf(2, 4, 0.5);
        assert!((lp - (6.0f64 / 16.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn survival_hand_case() {
        // P(K >= 2) for Binomial(4, 1/2) = 11/16 by enumerating 16 outcomes.
        let ls = log_survival(2, 4, 0.5);
        assert!((ls - (11.0f64 / 16.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn survival_boundaries() {
        assert_eq!(log_survival(0, 100, 0.01), 0.0);
        // k = n: survival is the single term p^n.
        let ls = log_survival(50, 50, 0.25);
        assert!((ls - 50.0 * 0.25f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn survival_monotone_in_k() {
        for &(n, p) in &[(40u64, 0.3), (1000, 0.01), (317, 0.5)] {
            let mut prev = log_survival(0, n, p);
            for k in 1..=n {
                let cur = log_survival(k, n, p);
                assert!(
                    cur <= prev + 1e-12,
                    "survival must not increase: n={n} p={p} k={k} {cur} > {prev}"
                );
                prev = cur;
            }
        }
    }

    #[test]
    fn large_n_stays_finite() {
        let n = 320_825u64;
        let p = 0.01;
        for k in [0u64, 1, 3208, 10_000, 320_825] {
            assert!(log_pmf(k, n, p).is_finite());
            assert!(log_survival(k, n, p).is_finite());
        }
    }

    #[test]
    fn large_n_pmf_matches_local_limit_law() {
        // At the mode of Binomial(n, 1-z) with full-size spectrogram counts,
        // pmf ~ 1/sqrt(2*pi*n*z*(1-z)); Stirling-based sanity oracle at 1%.
        let n = 320_825u64; // 1025 x 313 entries
        let z = 0.99;
        let k = (((n + 1) as f64) * (1.0 - z)).floor() as u64; // 3208
        let lp = log_pmf(k, n, 1.0 - z);
        let stirling = -0.5 * (2.0 * std::f64::consts::PI * n as f64 * z * (1.0 - z)).ln();
        assert!(
            (lp - stirling).abs() / stirling.abs() < 0.01,
            "log_pmf {lp} vs local-limit {stirling}"
        );
    }
}
