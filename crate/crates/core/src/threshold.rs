//! Decoding-threshold search by bisection over SNR.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Search {
    pub target_ber: f64,
    pub lo_db: f64,
    pub hi_db: f64,
    pub tol_db: f64,
    /// Number of interior grid points sampled before bisecting; bisection
    /// then runs on the highest failing-to-passing grid interval.
    pub scan: usize,
}

impl Default for Search {
    fn default() -> Self {
        Search { target_ber: 1e-5, lo_db: -5.0, hi_db: 30.0, tol_db: 0.01, scan: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Threshold {
    pub snr_db: f64,
    /// Every `(snr_db, ber)` pair evaluated, in evaluation order.
    pub samples: Vec<(f64, f64)>,
    /// False when the sampled BER was seen to increase with SNR.
    pub monotone: bool,
}

/// Smallest SNR at which `ber(snr_db) <= target`, to within `tol_db`.
///
/// The end points must bracket the crossing, otherwise [`Error::Bracket`] is
/// returned. If the samples reveal a non-monotone curve a warning is logged
/// and the upper end of the widest crossing seen is returned.
pub fn threshold<F>(mut ber: F, search: &Search) -> Result<Threshold>
where
    F: FnMut(f64) -> Result<f64>,
{
    let Search { target_ber, lo_db, hi_db, tol_db, scan } = *search;
    if !(lo_db < hi_db) || !(tol_db > 0.0) || !(target_ber > 0.0 && target_ber < 1.0) {
        return Err(Error::invalid("threshold search needs lo < hi, tol > 0 and 0 < target < 1"));
    }
    let mut samples = Vec::new();
    let mut eval = |x: f64, samples: &mut Vec<(f64, f64)>| -> Result<bool> {
        let y = ber(x)?;
        samples.push((x, y));
        Ok(y <= target_ber)
    };
    if eval(lo_db, &mut samples)? || !eval(hi_db, &mut samples)? {
        return Err(Error::Bracket { lo_db, hi_db });
    }
    let (mut lo, mut hi) = (lo_db, hi_db);
    if scan > 0 {
        let grid: Vec<f64> = (1..=scan).map(|k| lo_db + (hi_db - lo_db) * k as f64 / (scan + 1) as f64).collect();
        let mut pass = Vec::with_capacity(scan);
        for &x in &grid {
            pass.push(eval(x, &mut samples)?);
        }
        if let Some(k) = pass.iter().rposition(|&p| !p) {
            lo = grid[k];
            hi = grid.get(k + 1).copied().unwrap_or(hi_db);
        } else {
            hi = grid[0];
        }
    }
    while hi - lo > tol_db {
        let mid = 0.5 * (lo + hi);
        if eval(mid, &mut samples)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut sorted = samples.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let monotone = sorted.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-9) + 1e-300);
    let mut snr_db = 0.5 * (lo + hi);
    if !monotone {
        let last_fail = sorted.iter().filter(|s| s.1 > target_ber).map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
        log::warn!("BER is not monotone in SNR over [{lo_db}, {hi_db}] dB; using the highest crossing");
        if last_fail > snr_db {
            let next_pass = sorted.iter().filter(|s| s.0 > last_fail).map(|s| s.0).fold(f64::INFINITY, f64::min);
            snr_db = 0.5 * (last_fail + next_pass);
        }
    }
    Ok(Threshold { snr_db, samples, monotone })
}
