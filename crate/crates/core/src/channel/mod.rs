//! Polarization-multiplexed square QAM with per-dimension Gray labels.
//!
//! A PM-`order²`-QAM symbol is the Cartesian product of four identical
//! `order`-PAM constellations (in-phase/quadrature of both polarizations). All
//! statistics therefore factorize per real dimension, which is what the bit
//! channel computations below exploit.
//!
//! Conventions used throughout the crate:
//! * `snr_db` is the per-polarization Es/N0 of the discrete AWGN channel; the
//!   noise variance per real dimension is `1 / (2 rho)`.
//! * A positive LLR means bit value 0 is more likely.
//! * Bit `i` of a 4D label lives in dimension `i / b` (order xI, xQ, yI, yQ) at
//!   label position `i % b`, where `b = log2(order)` and position 0 is the
//!   most significant (best protected) Gray bit.

mod bitchannel;
mod scrambler;

pub use bitchannel::{
    ber_constrained_bicm_capacity, bsc_capacity_avg, snr_for_bicm_rate, snr_for_bsc_rate,
};
pub use scrambler::Scrambler;

use crate::error::{Error, Result};
use crate::special::{db_to_lin, log_sum_exp};
use std::io::Write;

/// One real dimension of the constellation: Gray-labeled `order`-PAM with
/// average energy 1/2.
#[derive(Debug, Clone)]
pub struct Pam {
    bits: usize,
    /// Amplitudes in decreasing order.
    levels: Vec<f64>,
    /// Gray label of each level, most significant bit first.
    labels: Vec<u32>,
}

impl Pam {
    fn new(order: usize) -> Self {
        let bits = order.trailing_zeros() as usize;
        let scale = (3.0 / (2.0 * ((order * order) as f64 - 1.0))).sqrt();
        let levels = (0..order)
            .map(|k| (order as f64 - 1.0 - 2.0 * k as f64) * scale)
            .collect();
        let labels = (0..order as u32).map(|k| k ^ (k >> 1)).collect();
        Pam { bits, levels, labels }
    }

    pub fn order(&self) -> usize {
        self.levels.len()
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Value of label bit `j` (0 = most significant) of level `k`.
    #[inline]
    pub fn label_bit(&self, k: usize, j: usize) -> u8 {
        ((self.labels[k] >> (self.bits - 1 - j)) & 1) as u8
    }

    /// Level index whose label equals the given bits (MSB first).
    pub fn level_of(&self, bits: &[u8]) -> usize {
        let label = bits.iter().fold(0u32, |acc, &b| (acc << 1) | (b as u32 & 1));
        // inverse Gray code
        let mut k = label;
        let mut shift = label >> 1;
        while shift != 0 {
            k ^= shift;
            shift >>= 1;
        }
        k as usize
    }

    /// Nearest level to `r`.
    #[inline]
    pub fn detect(&self, r: f64) -> usize {
        let order = self.levels.len();
        let step = if order > 1 { self.levels[0] - self.levels[1] } else { 1.0 };
        let idx = ((self.levels[0] - r) / step + 0.5).floor();
        idx.clamp(0.0, (order - 1) as f64) as usize
    }

    /// Exact LLRs of all label bits for a received real sample, with noise
    /// variance `sigma2` per dimension.
    pub fn llrs(&self, r: f64, sigma2: f64, out: &mut [f64]) {
        let order = self.levels.len();
        let mut metric = [0.0f64; 64];
        for k in 0..order {
            let d = r - self.levels[k];
            metric[k] = -d * d / (2.0 * sigma2);
        }
        for (j, o) in out.iter_mut().enumerate().take(self.bits) {
            let zero = (0..order).filter(|&k| self.label_bit(k, j) == 0).map(|k| metric[k]);
            let one = (0..order).filter(|&k| self.label_bit(k, j) == 1).map(|k| metric[k]);
            *o = log_sum_exp(zero) - log_sum_exp(one);
        }
    }

    /// Probability that hard detection flips label bit `j`, noise std `sigma`.
    fn crossover(&self, j: usize, sigma: f64) -> f64 {
        let order = self.levels.len();
        let mut total = 0.0;
        for k in 0..order {
            for kk in 0..order {
                if self.label_bit(k, j) == self.label_bit(kk, j) {
                    continue;
                }
                total += self.region_prob(k, kk, sigma);
            }
        }
        total / order as f64
    }

    /// Probability that level `sent` is detected as `det`.
    fn region_prob(&self, sent: usize, det: usize, sigma: f64) -> f64 {
        use crate::special::q_func;
        let x = self.levels[sent];
        let order = self.levels.len();
        // detection region of `det` is (lo, hi]
        let hi = if det == 0 { f64::INFINITY } else { 0.5 * (self.levels[det - 1] + self.levels[det]) };
        let lo = if det + 1 == order { f64::NEG_INFINITY } else { 0.5 * (self.levels[det] + self.levels[det + 1]) };
        if lo >= x {
            q_func((lo - x) / sigma) - q_func((hi - x) / sigma)
        } else if hi <= x {
            q_func((x - hi) / sigma) - q_func((x - lo) / sigma)
        } else {
            1.0 - q_func((hi - x) / sigma) - q_func((x - lo) / sigma)
        }
    }
}

/// Labeling rule. Only Gray labeling is supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Labeling {
    Gray,
}

/// PM square-QAM constellation with `2^m` points in two complex dimensions.
#[derive(Debug, Clone)]
pub struct Constellation {
    pam: Pam,
    m: usize,
}

/// Per-modulation-bit channel qualities at one SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelProfile {
    pub snr_db: f64,
    /// Hard-detection crossover probability of each modulation bit.
    pub p: Vec<f64>,
    /// Mutual information `I(b_i; r)` of each modulation bit, in bits.
    pub mi: Vec<f64>,
}

impl ChannelProfile {
    /// Average crossover probability over the `m` bits.
    pub fn p_mean(&self) -> f64 {
        self.p.iter().sum::<f64>() / self.p.len() as f64
    }

    pub fn m(&self) -> usize {
        self.p.len()
    }
}

/// Builds PM-`order²`-QAM (order 2 is PM-QPSK) with Gray labels.
pub fn build_constellation(order_per_dim: usize, labeling: Labeling) -> Result<Constellation> {
    let Labeling::Gray = labeling;
    if order_per_dim < 2 || !order_per_dim.is_power_of_two() || order_per_dim > 64 {
        return Err(Error::invalid(format!(
            "PAM order per dimension must be a power of two in [2, 64], got {order_per_dim}"
        )));
    }
    let pam = Pam::new(order_per_dim);
    let m = 4 * pam.bits;
    Ok(Constellation { pam, m })
}

impl Constellation {
    /// Bits per 4D symbol.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn pam(&self) -> &Pam {
        &self.pam
    }

    pub fn bits_per_dim(&self) -> usize {
        self.pam.bits
    }

    pub fn num_points(&self) -> usize {
        1usize << self.m
    }

    /// Human-readable name such as `PM-64-QAM`.
    pub fn name(&self) -> String {
        match self.pam.order() {
            2 => "PM-QPSK".to_string(),
            o => format!("PM-{}-QAM", o * o),
        }
    }

    /// Noise variance per real dimension at the given SNR.
    pub fn sigma2(snr_db: f64) -> f64 {
        1.0 / (2.0 * db_to_lin(snr_db))
    }

    /// Point `index` as (xI, xQ, yI, yQ); bits of `index` are the label, MSB
    /// first (label bit 0 is bit `m - 1` of the index).
    pub fn point(&self, index: usize) -> [f64; 4] {
        let label = self.label(index);
        self.map(&label)
    }

    /// Label bits of point `index`.
    pub fn label(&self, index: usize) -> Vec<u8> {
        (0..self.m).map(|i| ((index >> (self.m - 1 - i)) & 1) as u8).collect()
    }

    /// Maps `m` label bits to a 4D point.
    pub fn map(&self, bits: &[u8]) -> [f64; 4] {
        let b = self.pam.bits;
        let mut out = [0.0; 4];
        for (d, o) in out.iter_mut().enumerate() {
            *o = self.pam.levels[self.pam.level_of(&bits[d * b..(d + 1) * b])];
        }
        out
    }

    /// Minimum-distance detection, returning the label bits.
    pub fn hard_detect(&self, r: &[f64; 4], out: &mut [u8]) {
        let b = self.pam.bits;
        for d in 0..4 {
            let k = self.pam.detect(r[d]);
            for j in 0..b {
                out[d * b + j] = self.pam.label_bit(k, j);
            }
        }
    }

    /// Exact bitwise LLRs of a received 4D sample.
    pub fn llr(&self, r: &[f64; 4], snr_db: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        self.llr_into(r, Self::sigma2(snr_db), &mut out);
        out
    }

    pub fn llr_into(&self, r: &[f64; 4], sigma2: f64, out: &mut [f64]) {
        let b = self.pam.bits;
        for d in 0..4 {
            self.pam.llrs(r[d], sigma2, &mut out[d * b..(d + 1) * b]);
        }
    }

    /// Protection level of each modulation bit (its Gray label position).
    pub fn protection_levels(&self) -> Vec<usize> {
        (0..self.m).map(|i| i % self.pam.bits).collect()
    }

    pub fn num_protection_levels(&self) -> usize {
        self.pam.bits
    }

    /// Hard-detection crossover probability of each modulation bit.
    pub fn bit_crossover_probs(&self, snr_db: f64) -> Vec<f64> {
        let sigma = Self::sigma2(snr_db).sqrt();
        let per_dim: Vec<f64> = (0..self.pam.bits).map(|j| self.pam.crossover(j, sigma)).collect();
        (0..self.m).map(|i| per_dim[i % self.pam.bits]).collect()
    }

    /// Mutual information of each modulation bit under exact LLRs.
    pub fn bit_mutual_info(&self, snr_db: f64) -> Vec<f64> {
        let per_dim = bitchannel::pam_bit_mi(&self.pam, Self::sigma2(snr_db));
        (0..self.m).map(|i| per_dim[i % self.pam.bits]).collect()
    }

    pub fn profile(&self, snr_db: f64) -> ChannelProfile {
        ChannelProfile {
            snr_db,
            p: self.bit_crossover_probs(snr_db),
            mi: self.bit_mutual_info(snr_db),
        }
    }

    /// BICM capacity `sum_i I(b_i; r)` in bits per 4D symbol.
    pub fn bicm_capacity(&self, snr_db: f64) -> f64 {
        self.bit_mutual_info(snr_db).iter().sum()
    }

    /// Writes one line per point: index, four coordinates, label bits.
    pub fn dump<W: Write>(&self, mut w: W) -> Result<()> {
        for idx in 0..self.num_points() {
            let p = self.point(idx);
            let label: String = self.label(idx).iter().map(|b| char::from(b'0' + b)).collect();
            writeln!(w, "{idx} {:.12} {:.12} {:.12} {:.12} {label}", p[0], p[1], p[2], p[3])?;
        }
        Ok(())
    }
}
