//! Scalar special functions shared by the analysis modules.

use statrs::function::{erf, gamma};

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`.
pub fn q_func(x: f64) -> f64 {
    0.5 * erf::erfc(x / std::f64::consts::SQRT_2)
}

/// Inverse of [`q_func`] for `p` in `(0, 1)`.
pub fn q_inv(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    let mut x = std::f64::consts::SQRT_2 * erf::erfc_inv(2.0 * p);
    // one Newton step on log Q to polish the tail
    if x.is_finite() && x > 0.0 {
        let q = q_func(x);
        if q > 0.0 {
            let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
            let step = (q.ln() - p.ln()) * q / pdf;
            if step.is_finite() {
                x += step;
            }
        }
    }
    x
}

/// Binary entropy in bits.
pub fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Inverse of the binary entropy on `[0, 0.5]`.
pub fn h2_inv(h: f64) -> f64 {
    let h = h.clamp(0.0, 1.0);
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h2(mid) < h {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Poisson upper tail `phi(lambda; t) = 1 - sum_{i<=t} lambda^i e^-lambda / i!`,
/// evaluated as the regularized lower incomplete gamma `P(t + 1, lambda)`.
pub fn poisson_tail(lambda: f64, t: u32) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    gamma::gamma_lr(t as f64 + 1.0, lambda).clamp(0.0, 1.0)
}

/// Natural log of `n!`.
pub fn ln_factorial(n: u32) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// `log(sum(exp(x)))` over a slice, robust to large magnitudes.
pub fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut max = f64::NEG_INFINITY;
    let mut acc = 0.0;
    for x in xs {
        if x == f64::NEG_INFINITY {
            continue;
        }
        if x > max {
            acc = acc * (max - x).exp() + 1.0;
            max = x;
        } else {
            acc += (x - max).exp();
        }
    }
    if max == f64::NEG_INFINITY {
        max
    } else {
        max + acc.ln()
    }
}

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Composite Simpson rule on `[a, b]` with `n` (even) sub-intervals.
pub(crate) fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + (n % 2);
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}
