//! The J-function of the consistent-Gaussian LLR model.
//!
//! For `L ~ N(s^2/2, s^2)`, `J(s) = 1 - E[log2(1 + e^-L)]`. Values are
//! tabulated once by quadrature on a uniform grid in `s` and interpolated
//! linearly in `s^2`, which reproduces the small-`s` behaviour
//! `J(s) ~ s^2 / (8 ln 2)`. Near `J = 1` the table of `ln(1 - J)` is used so
//! that the complement keeps full relative precision. The inverses invert
//! exactly the same interpolants.

use crate::error::{Error, Result};
use crate::special::simpson;
use std::sync::OnceLock;

const STEP: f64 = 0.01;
const SIGMA_MAX: f64 = 30.0;
/// Grid index where evaluation switches from the `J` table to the `ln(1 - J)` table.
const SWITCH: usize = 300;

struct Table {
    s2: Vec<f64>,
    j: Vec<f64>,
    lc: Vec<f64>,
}

/// `E[log2(1 + exp(-L))]` for `L ~ N(s^2/2, s^2)`, by direct quadrature.
pub(crate) fn complement_by_quadrature(sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 1.0;
    }
    let mu = 0.5 * sigma * sigma;
    let lo = (-0.5 * sigma - 12.0).min(-10.0);
    let hz = (0.15 / sigma).min(0.02);
    let n = ((10.0 - lo) / hz).ceil() as usize;
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let f = |z: f64| {
        let l = mu + sigma * z;
        let sp = if l > 0.0 { (-l).exp().ln_1p() } else { -l + l.exp().ln_1p() };
        norm * (-0.5 * z * z).exp() * sp
    };
    simpson(f, lo, 10.0, n) / std::f64::consts::LN_2
}

fn table() -> &'static Table {
    static TABLE: OnceLock<Table> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = (SIGMA_MAX / STEP).round() as usize + 1;
        let mut s2 = Vec::with_capacity(n);
        let mut j = Vec::with_capacity(n);
        let mut lc = Vec::with_capacity(n);
        for k in 0..n {
            let s = k as f64 * STEP;
            let c = complement_by_quadrature(s).min(1.0);
            s2.push(s * s);
            j.push(1.0 - c);
            lc.push(c.ln());
        }
        j[0] = 0.0;
        lc[0] = 0.0;
        Table { s2, j, lc }
    })
}

#[inline]
fn lerp(x0: f64, x1: f64, y0: f64, y1: f64, x: f64) -> f64 {
    y0 + (x - x0) / (x1 - x0) * (y1 - y0)
}

/// Grid segment `k..k+1` containing `sigma`, clamped to the last segment.
#[inline]
fn segment(sigma: f64) -> usize {
    let last = table().s2.len() - 2;
    ((sigma / STEP) as usize).min(last)
}

/// `ln(1 - J(sigma))`; extrapolated linearly in `sigma^2` beyond the table.
#[inline]
fn ln_complement(sigma: f64) -> f64 {
    let t = table();
    let k = segment(sigma);
    lerp(t.s2[k], t.s2[k + 1], t.lc[k], t.lc[k + 1], sigma * sigma)
}

/// Mutual information of a consistent Gaussian LLR with standard deviation `sigma`.
#[inline]
pub fn j(sigma: f64) -> f64 {
    let sigma = sigma.abs();
    let k = segment(sigma);
    if k < SWITCH {
        let t = table();
        lerp(t.s2[k], t.s2[k + 1], t.j[k], t.j[k + 1], sigma * sigma)
    } else {
        -ln_complement(sigma).exp_m1()
    }
}

/// `1 - J(sigma)` with full relative precision near `J = 1`.
#[inline]
pub fn j_complement(sigma: f64) -> f64 {
    let sigma = sigma.abs();
    let k = segment(sigma);
    if k < SWITCH {
        let t = table();
        1.0 - lerp(t.s2[k], t.s2[k + 1], t.j[k], t.j[k + 1], sigma * sigma)
    } else {
        ln_complement(sigma).exp()
    }
}

/// Inverse of [`j`] for `mi` in `[0, 1)`.
pub fn j_inv(mi: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&mi) {
        return Err(Error::invalid(format!("mutual information {mi} outside [0, 1)")));
    }
    Ok(j_inv_unchecked(mi))
}

/// Inverse of [`j_complement`] for `c = 1 - I` in `(0, 1]`.
pub fn j_inv_complement(c: f64) -> Result<f64> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::invalid(format!("complementary mutual information {c} outside (0, 1]")));
    }
    Ok(j_inv_complement_unchecked(c))
}

#[inline]
pub(crate) fn j_inv_unchecked(mi: f64) -> f64 {
    let t = table();
    if mi <= 0.0 {
        return 0.0;
    }
    if mi >= t.j[SWITCH] {
        return j_inv_complement_unchecked(1.0 - mi);
    }
    let k = t.j[..=SWITCH].partition_point(|&v| v <= mi).saturating_sub(1).min(SWITCH - 1);
    lerp(t.j[k], t.j[k + 1], t.s2[k], t.s2[k + 1], mi).max(0.0).sqrt()
}

#[inline]
pub(crate) fn j_inv_complement_unchecked(c: f64) -> f64 {
    let t = table();
    if c >= 1.0 {
        return 0.0;
    }
    if c >= 1.0 - t.j[SWITCH] {
        let mi = 1.0 - c;
        let k = t.j[..=SWITCH].partition_point(|&v| v <= mi).saturating_sub(1).min(SWITCH - 1);
        return lerp(t.j[k], t.j[k + 1], t.s2[k], t.s2[k + 1], mi).max(0.0).sqrt();
    }
    let l = c.max(f64::MIN_POSITIVE).ln();
    // lc is decreasing; find the segment with lc[k] >= l > lc[k + 1]
    let last = t.lc.len() - 2;
    let k = (SWITCH + t.lc[SWITCH..].partition_point(|&v| v >= l)).saturating_sub(1).min(last);
    lerp(t.lc[k], t.lc[k + 1], t.s2[k], t.s2[k + 1], l).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn end_points() {
        assert_eq!(j(0.0), 0.0);
        assert_eq!(j_inv(0.0).unwrap(), 0.0);
        assert!(j_complement(25.0) < 1e-20 && j(25.0) <= 1.0);
        assert!(j(60.0) <= 1.0);
        assert!(j_inv(1.0).is_err());
        assert!(j_inv(-0.1).is_err());
        assert!(j_inv_complement(0.0).is_err());
    }

    #[test]
    fn matches_independent_quadrature() {
        // trapezoid rule in the LLR domain on a fine grid, no shared code
        fn oracle(s: f64) -> f64 {
            let mu = 0.5 * s * s;
            let lo = mu - 14.0 * s;
            let hi = mu + 14.0 * s;
            let n = 200_000;
            let h = (hi - lo) / n as f64;
            let mut acc = 0.0;
            for i in 0..=n {
                let l = lo + i as f64 * h;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                let dens = (-(l - mu).powi(2) / (2.0 * s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
                let sp = if l > 0.0 { (-l).exp().ln_1p() } else { -l + l.exp().ln_1p() };
                acc += w * dens * sp;
            }
            1.0 - acc * h / std::f64::consts::LN_2
        }
        for k in 1..=20 {
            let s = 0.35 * k as f64;
            assert!((j(s) - oracle(s)).abs() < 1e-4, "s = {s}");
        }
    }

    #[test]
    fn small_sigma_law() {
        for s in [1e-3, 1e-2, 0.05] {
            let approx = s * s / (8.0 * std::f64::consts::LN_2);
            assert!((j(s) / approx - 1.0).abs() < 2e-2, "{s}");
        }
    }

    proptest! {
        #[test]
        fn round_trip(s in 0.01f64..10.0) {
            prop_assert!((j_inv(j(s)).unwrap() - s).abs() < 1e-6);
            prop_assert!((j_inv_complement(j_complement(s)).unwrap() - s).abs() < 1e-6);
        }

        #[test]
        fn strictly_increasing(a in 0.0f64..20.0, d in 1e-3f64..1.0) {
            prop_assert!(j(a + d) >= j(a));
            if a < 5.0 {
                prop_assert!(j(a + d) > j(a));
            }
            prop_assert!(j_complement(a + d) < j_complement(a));
        }

        #[test]
        fn complement_consistent(s in 0.0f64..6.0) {
            prop_assert!((j(s) + j_complement(s) - 1.0).abs() < 1e-12);
        }
    }
}
