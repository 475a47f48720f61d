use super::Pam;
use crate::error::{Error, Result};
use crate::special::h2;

const QUAD_POINTS: usize = 320;

/// Mutual information of each PAM label bit, `1 - E[log2(1 + e^{-L})]` with
/// `L` the exact LLR signed towards the transmitted bit. Simpson quadrature
/// over the Gaussian noise on `[-10, 10]` standard deviations.
pub(super) fn pam_bit_mi(pam: &Pam, sigma2: f64) -> Vec<f64> {
    let order = pam.order();
    let bits = pam.bits();
    let sigma = sigma2.sqrt();
    let n = QUAD_POINTS;
    let h = 20.0 / n as f64;
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let mut loss = vec![0.0; bits];
    let mut llr = [0.0f64; 8];
    for i in 0..=n {
        let z = -10.0 + i as f64 * h;
        let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        let w = w * h / 3.0 * norm * (-0.5 * z * z).exp();
        for k in 0..order {
            pam.llrs(pam.levels()[k] + sigma * z, sigma2, &mut llr[..bits]);
            for j in 0..bits {
                let sign = if pam.label_bit(k, j) == 0 { 1.0 } else { -1.0 };
                loss[j] += w * softplus_log2(-sign * llr[j]);
            }
        }
    }
    loss.iter().map(|l| (1.0 - l / order as f64).clamp(0.0, 1.0)).collect()
}

/// `log2(1 + e^x)` without overflow.
#[inline]
pub(crate) fn softplus_log2(x: f64) -> f64 {
    let v = if x > 30.0 { x + (-x).exp().ln_1p() } else { x.exp().ln_1p() };
    v / std::f64::consts::LN_2
}

/// `C / (1 - h2(target_ber))`: the rate achievable when a residual bit error
/// rate `target_ber` is tolerated.
pub fn ber_constrained_bicm_capacity(
    c: &super::Constellation,
    snr_db: f64,
    target_ber: f64,
) -> Result<f64> {
    if !(target_ber > 0.0 && target_ber < 0.5) {
        return Err(Error::invalid(format!("target BER must lie in (0, 0.5), got {target_ber}")));
    }
    Ok(c.bicm_capacity(snr_db) / (1.0 - h2(target_ber)))
}

/// Capacity of the BSC with the averaged crossover probability, in bits per
/// coded bit.
pub fn bsc_capacity_avg(p: &[f64]) -> Result<f64> {
    if p.is_empty() {
        return Err(Error::invalid("empty crossover vector"));
    }
    if let Some(bad) = p.iter().find(|&&x| !(0.0..=0.5).contains(&x)) {
        return Err(Error::invalid(format!("crossover probability {bad} outside [0, 0.5]")));
    }
    let mean = p.iter().sum::<f64>() / p.len() as f64;
    Ok(1.0 - h2(mean))
}

fn bisect_increasing(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    if f(lo) > target || f(hi) < target {
        return Err(Error::Bracket { lo_db: lo, hi_db: hi });
    }
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// SNR (dB) at which the BICM capacity equals `rate * m` bits per symbol.
pub fn snr_for_bicm_rate(c: &super::Constellation, rate: f64) -> Result<f64> {
    let target = rate * c.m() as f64;
    bisect_increasing(|s| c.bicm_capacity(s), target, -20.0, 60.0)
}

/// SNR (dB) at which `1 - h2(p_mean)` equals `rate`.
pub fn snr_for_bsc_rate(c: &super::Constellation, rate: f64) -> Result<f64> {
    bisect_increasing(
        |s| {
            let p = c.bit_crossover_probs(s);
            bsc_capacity_avg(&p).unwrap_or(0.0)
        },
        rate,
        -20.0,
        60.0,
    )
}

#[cfg(test)]
mod tests {
    use super::super::{build_constellation, Labeling};
    use super::*;
    use crate::special::db_to_lin;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn capacity_limits_and_monotonicity() {
        for order in [2, 4, 8] {
            let c = build_constellation(order, Labeling::Gray).unwrap();
            assert!((c.bicm_capacity(60.0) - c.m() as f64).abs() < 1e-6);
            let mut prev = 0.0;
            for i in 0..=40 {
                let cap = c.bicm_capacity(0.5 * i as f64);
                assert!(cap >= prev - 1e-12);
                prev = cap;
            }
        }
    }

    #[test]
    fn qpsk_capacity_matches_monte_carlo() {
        // Bit LLRs of Gray QPSK are N(2 rho, 4 rho); for a symmetric LLR the
        // bit MI is 1 - E[h2(1 / (1 + e^|L|))], a low-variance estimator.
        let c = build_constellation(2, Labeling::Gray).unwrap();
        for snr in [-2.0, 1.5, 6.0] {
            let rho = db_to_lin(snr);
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let n = 8_000_000;
            let mut acc = 0.0;
            let mut acc2 = 0.0;
            for _ in 0..n {
                let z: f64 = StandardNormal.sample(&mut rng);
                let l: f64 = 2.0 * rho + (4.0 * rho).sqrt() * z;
                let v = h2(1.0 / (1.0 + l.abs().exp()));
                acc += v;
                acc2 += v * v;
            }
            let mean = acc / n as f64;
            let se = 4.0 * ((acc2 / n as f64 - mean * mean) / n as f64).sqrt();
            let mc = 4.0 * (1.0 - mean);
            let quad = c.bicm_capacity(snr);
            assert!(se < 5e-4, "{se}");
            assert!((mc - quad).abs() < 1e-3 && (mc - quad).abs() < 4.0 * se + 1e-5, "{snr}: {mc} {quad} {se}");
        }
    }

    #[test]
    fn ber_constrained_capacity() {
        let c = build_constellation(4, Labeling::Gray).unwrap();
        assert!(ber_constrained_bicm_capacity(&c, 10.0, 0.0).is_err());
        assert!(ber_constrained_bicm_capacity(&c, 10.0, 0.5).is_err());
        let base = c.bicm_capacity(10.0);
        let constrained = ber_constrained_bicm_capacity(&c, 10.0, 1e-2).unwrap();
        assert!((constrained - base / (1.0 - h2(1e-2))).abs() < 1e-12);
    }

    #[test]
    fn bsc_capacity() {
        assert_eq!(bsc_capacity_avg(&[0.0, 0.0]).unwrap(), 1.0);
        assert!(bsc_capacity_avg(&[0.5]).unwrap().abs() < 1e-15);
        assert!(bsc_capacity_avg(&[0.6]).is_err());
        assert!(bsc_capacity_avg(&[-0.1]).is_err());
        // averaged BSC is worse than the sum of parallel BSCs
        let p = [0.01, 0.05, 0.2];
        let avg = bsc_capacity_avg(&p).unwrap();
        let parallel = p.iter().map(|&x| 1.0 - h2(x)).sum::<f64>() / 3.0;
        assert!(avg < parallel);
    }

    #[test]
    fn rate_inversions() {
        let c = build_constellation(8, Labeling::Gray).unwrap();
        let s = snr_for_bicm_rate(&c, 0.75).unwrap();
        assert!((c.bicm_capacity(s) - 9.0).abs() < 1e-4);
        let s = snr_for_bsc_rate(&c, 0.75).unwrap();
        assert!((bsc_capacity_avg(&c.bit_crossover_probs(s)).unwrap() - 0.75).abs() < 1e-5);
    }
}
