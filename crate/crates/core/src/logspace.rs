//! Log-domain arithmetic for sums that overflow f64.

use statrs::function::gamma::ln_gamma;

/// ln(e^a + e^b), safe for widely separated magnitudes.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// ln(sum_i e^{x_i}); empty input yields -inf.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + xs.iter().map(|x| (x - hi).exp()).sum::<f64>().ln()
}

/// ln C(n, k). Direct log-summation for small k (exact to a few ulp even
/// for huge n, where the log-gamma difference cancels badly), log-gamma
/// otherwise.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    assert!(k <= n, "ln_binomial: k={k} > n={n}");
    let k = k.min(n - k);
    if k <= 1024 {
        (0..k)
            .map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln())
            .sum()
    } else {
        ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
    }
}

/// ln(1 - e^{x}) for x < 0, accurate in both tails.
pub fn ln_one_minus_exp(x: f64) -> f64 {
    assert!(x < 0.0, "ln_one_minus_exp needs a negative argument, got {x}");
    if x < -std::f64::consts::LN_2 {
        (-x.exp()).ln_1p()
    } else {
        (-x.exp_m1()).ln()
    }
}
