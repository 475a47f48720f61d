//! Protograph EXIT analysis of windowed BP decoding with per-column channel
//! mixtures.
//!
//! Every message is summarized by the standard deviation `s` of a consistent
//! Gaussian LLR. The channel seen by protograph column `j` is the mixture
//! `{(a_ij, I_i)}` of the bit channels of the modulation; each branch is
//! propagated through the variable-node update on its own and the branches
//! are then merged back into a single Gaussian (see [`MixtureRule`]).

mod jfun;

pub use jfun::{j, j_complement, j_inv, j_inv_complement};

use crate::bitmapper::BitMapperMatrix;
use crate::channel::ChannelProfile;
use crate::error::{Error, Result};
use crate::scldpc::BaseMatrix;
use crate::special::{q_func, q_inv};
use crate::window::Schedule;
use jfun::{j_inv_complement_unchecked, j_inv_unchecked};

/// Largest tracked message standard deviation (BER far below 1e-300).
const SIGMA_CAP: f64 = 75.0;

/// Channel of one protograph column: `(weight, bit-channel MI)` branches.
pub type ColumnMixture = Vec<(f64, f64)>;

/// Per-column channel mixtures induced by allocation `a` on the bit channels
/// of `profile`. Branches with equal MI (same protection level) are merged and
/// zero-weight branches dropped.
pub fn channel_mi_per_column(a: &BitMapperMatrix, profile: &ChannelProfile) -> Result<Vec<ColumnMixture>> {
    if a.m() != profile.mi.len() {
        return Err(Error::invalid(format!(
            "mapper has {} rows but the constellation has {} bits",
            a.m(),
            profile.mi.len()
        )));
    }
    let mut out = Vec::with_capacity(a.n_cols());
    for j in 0..a.n_cols() {
        let col = a.column(j);
        let s: f64 = col.iter().sum();
        if (s - 1.0).abs() > crate::bitmapper::COLUMN_TOL || col.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::invalid(format!("mapper column {j} is not stochastic")));
        }
        let mut mix: ColumnMixture = Vec::new();
        for (w, &mi) in col.iter().zip(&profile.mi) {
            if *w <= 0.0 {
                continue;
            }
            match mix.iter_mut().find(|(_, m)| *m == mi) {
                Some(b) => b.0 += w,
                None => mix.push((*w, mi)),
            }
        }
        out.push(mix);
    }
    Ok(out)
}

/// Mutual information of a column mixture (expectation over branches).
pub fn mixture_mi(mix: &[(f64, f64)]) -> f64 {
    mix.iter().map(|(w, mi)| w * mi).sum()
}

/// How the per-branch variable-to-check messages are merged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MixtureRule {
    /// Average the branch error probabilities `Q(s_i / 2)` and map back.
    #[default]
    ErrorProbability,
    /// Average the branch mutual informations `J(s_i)` and map back.
    MutualInformation,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PexitConfig {
    pub window: Option<usize>,
    pub l_max: usize,
    #[serde(default)]
    pub rule: MixtureRule,
    /// Tailbiting only: decoding starts this many positions later.
    #[serde(default)]
    pub start: usize,
}

impl Default for PexitConfig {
    fn default() -> Self {
        PexitConfig { window: Some(5), l_max: 10, rule: MixtureRule::default(), start: 0 }
    }
}

/// BER of the targeted position after one window step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowRecord {
    pub window: usize,
    pub position: usize,
    pub ber: f64,
}

#[derive(Debug, Clone)]
pub struct PexitResult {
    pub trajectory: Vec<WindowRecord>,
    /// Final predicted BER of every spatial position.
    pub position_ber: Vec<f64>,
    /// Average of `position_ber`.
    pub ber: f64,
}

impl PexitResult {
    /// Line-delimited `(window, position, ber)` records.
    pub fn trajectory_text(&self) -> String {
        self.trajectory.iter().map(|r| format!("{} {} {:e}\n", r.window, r.position, r.ber)).collect()
    }
}

struct Edge {
    row: usize,
    col: usize,
    mult: f64,
}

/// Runs the windowed P-EXIT recursion on `base` with column channels `channel`.
pub fn pexit_window_run(base: &BaseMatrix, channel: &[ColumnMixture], cfg: &PexitConfig) -> Result<PexitResult> {
    if channel.len() != base.cols() {
        return Err(Error::invalid(format!("{} column channels for {} base columns", channel.len(), base.cols())));
    }
    if cfg.l_max == 0 {
        return Err(Error::invalid("l_max must be positive"));
    }
    let schedule = Schedule::new(base.t_len(), base.memory(), cfg.window, base.mode())?.shifted(cfg.start, base.mode())?;

    // branch channel std-devs per column
    let mut branches: Vec<Vec<(f64, f64)>> = Vec::with_capacity(channel.len());
    for (c, mix) in channel.iter().enumerate() {
        let wsum: f64 = mix.iter().map(|b| b.0).sum();
        if mix.is_empty() || (wsum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("channel mixture of column {c} does not sum to one")));
        }
        let mut bs = Vec::with_capacity(mix.len());
        for &(w, mi) in mix {
            // a saturated channel reads as mutual information exactly 1
            let sigma = if mi >= 1.0 { SIGMA_CAP } else { j_inv(mi)?.min(SIGMA_CAP) };
            bs.push((w, sigma * sigma));
        }
        branches.push(bs);
    }

    let edges: Vec<Edge> =
        base.nonzeros().into_iter().map(|(row, col, p)| Edge { row, col, mult: p as f64 }).collect();
    let mut row_edges = vec![Vec::new(); base.rows()];
    let mut col_edges = vec![Vec::new(); base.cols()];
    for (e, ed) in edges.iter().enumerate() {
        row_edges[ed.row].push(e);
        col_edges[ed.col].push(e);
    }
    let kc = base.k_cols();
    let jr = base.j_rows();

    let mut v2c = vec![0.0f64; edges.len()];
    let mut c2v = vec![0.0f64; edges.len()];
    let mut x = vec![0.0f64; edges.len()];
    let mut tmp: Vec<f64> = Vec::new();

    let merge = |bs: &[(f64, f64)], extra: f64, tmp: &mut Vec<f64>| -> f64 {
        if bs.len() == 1 {
            return (bs[0].1 + extra).sqrt().min(SIGMA_CAP);
        }
        tmp.clear();
        tmp.extend(bs.iter().map(|&(_, s2)| (s2 + extra).sqrt()));
        match cfg.rule {
            MixtureRule::ErrorProbability => {
                let p: f64 = bs.iter().zip(tmp.iter()).map(|(b, s)| b.0 * q_func(0.5 * s)).sum();
                if p >= 0.5 {
                    0.0
                } else if p <= 0.0 {
                    SIGMA_CAP
                } else {
                    (2.0 * q_inv(p)).min(SIGMA_CAP)
                }
            }
            MixtureRule::MutualInformation => {
                let c: f64 = bs.iter().zip(tmp.iter()).map(|(b, s)| b.0 * j_complement(*s)).sum();
                j_inv_complement_unchecked(c.max(1e-300)).min(SIGMA_CAP)
            }
        }
    };

    let var_update = |c: usize, v2c: &mut [f64], c2v: &[f64], tmp: &mut Vec<f64>| {
        let total: f64 = col_edges[c].iter().map(|&e| edges[e].mult * c2v[e] * c2v[e]).sum();
        for &e in &col_edges[c] {
            let extra = (total - c2v[e] * c2v[e]).max(0.0);
            v2c[e] = merge(&branches[c], extra, tmp);
        }
    };

    let col_ber = |c: usize, c2v: &[f64]| -> f64 {
        let total: f64 = col_edges[c].iter().map(|&e| edges[e].mult * c2v[e] * c2v[e]).sum();
        branches[c].iter().map(|&(w, s2)| w * q_func(0.5 * (s2 + total).sqrt())).sum()
    };

    for c in 0..base.cols() {
        var_update(c, &mut v2c, &c2v, &mut tmp);
    }

    let t_len = base.t_len();
    let mut position_ber = vec![0.0; t_len];
    let mut trajectory = Vec::with_capacity(t_len);
    for (k, step) in schedule.steps.iter().enumerate() {
        for _ in 0..cfg.l_max {
            for &pos in &step.rows {
                for r in pos * jr..(pos + 1) * jr {
                    check_update(&row_edges[r], &edges, &v2c, &mut c2v, &mut x);
                }
            }
            for &pos in &step.cols {
                for c in pos * kc..(pos + 1) * kc {
                    var_update(c, &mut v2c, &c2v, &mut tmp);
                }
            }
        }
        for &pos in &step.targets {
            let ber = (pos * kc..(pos + 1) * kc).map(|c| col_ber(c, &c2v)).sum::<f64>() / kc as f64;
            position_ber[pos] = ber;
            trajectory.push(WindowRecord { window: k, position: pos, ber });
        }
    }
    let ber = position_ber.iter().sum::<f64>() / t_len as f64;
    Ok(PexitResult { trajectory, position_ber, ber })
}

fn check_update(row: &[usize], edges: &[Edge], v2c: &[f64], c2v: &mut [f64], x: &mut [f64]) {
    let mut total = 0.0;
    for &e in row {
        let xe = j_inv_unchecked(j_complement(v2c[e]));
        x[e] = xe * xe;
        total += edges[e].mult * x[e];
    }
    for &e in row {
        let s = (total - x[e]).max(0.0).sqrt();
        c2v[e] = j_inv_complement_unchecked(j(s).max(1e-300)).min(SIGMA_CAP);
    }
}

/// Predicted BER of a base matrix over a constellation profile with mapper `a`.
pub fn predicted_ber(base: &BaseMatrix, a: &BitMapperMatrix, profile: &ChannelProfile, cfg: &PexitConfig) -> Result<f64> {
    let mix = channel_mi_per_column(a, profile)?;
    Ok(pexit_window_run(base, &mix, cfg)?.ber)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitmapper::{BitMapperMatrix, Family};
    use crate::channel::{build_constellation, Labeling};
    use crate::scldpc::{build_base_matrix, presets};
    use crate::Mode;

    fn qpsk_profile(snr: f64) -> ChannelProfile {
        build_constellation(2, Labeling::Gray).unwrap().profile(snr)
    }

    #[test]
    fn mixtures() {
        let c = build_constellation(4, Labeling::Gray).unwrap();
        let prof = c.profile(8.0);
        let u = BitMapperMatrix::uniform(8, 5, Family::Scldpc);
        let mix = channel_mi_per_column(&u, &prof).unwrap();
        assert!(mix.iter().all(|m| m == &mix[0]));
        assert_eq!(mix[0].len(), 2);
        let avg: f64 = prof.mi.iter().sum::<f64>() / 8.0;
        assert!((mixture_mi(&mix[0]) - avg).abs() < 1e-12);

        let best = (0..8).max_by(|&a, &b| prof.mi[a].total_cmp(&prof.mi[b])).unwrap();
        let mut data = vec![0.0; 8];
        data[best] = 1.0;
        let one = BitMapperMatrix::new(8, 1, data, Family::Scldpc).unwrap();
        let m1 = channel_mi_per_column(&one, &prof).unwrap();
        assert!(mixture_mi(&m1[0]) > mixture_mi(&mix[0]));

        let q = build_constellation(2, Labeling::Gray).unwrap().profile(1.0);
        let single = channel_mi_per_column(&BitMapperMatrix::uniform(4, 3, Family::Scldpc), &q).unwrap();
        assert!(single.iter().all(|m| m.len() == 1 && (m[0].0 - 1.0).abs() < 1e-12));

        let bad = BitMapperMatrix::uniform(4, 3, Family::Scldpc);
        assert!(channel_mi_per_column(&bad, &prof).is_err());
    }

    #[test]
    fn high_snr_decodes_everywhere() {
        let base = build_base_matrix(&presets::regular_3_6_ms1(), 12, Mode::Tailbiting).unwrap();
        let a = BitMapperMatrix::uniform(4, base.cols(), Family::Scldpc);
        let cfg = PexitConfig { window: Some(5), l_max: 5, rule: MixtureRule::default(), start: 0 };
        let r = pexit_window_run(&base, &channel_mi_per_column(&a, &qpsk_profile(20.0)).unwrap(), &cfg).unwrap();
        assert!(r.position_ber.iter().all(|&b| b < 1e-30), "{:?}", r.position_ber);
        assert!(pexit_window_run(&base, &channel_mi_per_column(&a, &qpsk_profile(12.0)).unwrap(), &PexitConfig { window: Some(12), ..cfg }).is_err());
    }

    #[test]
    fn degradation_is_monotone() {
        let base = build_base_matrix(&presets::regular_3_6_ms1(), 10, Mode::Terminated).unwrap();
        let cfg = PexitConfig { window: Some(4), l_max: 5, rule: MixtureRule::default(), start: 0 };
        let mut last = 0.0;
        for snr in [3.0, 2.0, 1.5, 1.0, 0.5, 0.0] {
            let a = BitMapperMatrix::uniform(4, base.cols(), Family::Scldpc);
            let ber = predicted_ber(&base, &a, &qpsk_profile(snr), &cfg).unwrap();
            assert!(ber >= last, "{snr}: {ber} < {last}");
            last = ber;
        }
    }

    #[test]
    fn uniform_single_level_equals_scalar_channel() {
        let base = build_base_matrix(&presets::regular_3_6_ms1(), 8, Mode::Tailbiting).unwrap();
        let prof = qpsk_profile(1.2);
        let cfg = PexitConfig { window: Some(4), l_max: 6, rule: MixtureRule::default(), start: 0 };
        let a = BitMapperMatrix::uniform(4, base.cols(), Family::Scldpc);
        let mixed = pexit_window_run(&base, &channel_mi_per_column(&a, &prof).unwrap(), &cfg).unwrap();
        let scalar = vec![vec![(1.0, prof.mi[0])]; base.cols()];
        let plain = pexit_window_run(&base, &scalar, &cfg).unwrap();
        assert_eq!(mixed.position_ber, plain.position_ber);
    }

    #[test]
    fn trajectory_export() {
        let base = build_base_matrix(&presets::regular_3_6_ms1(), 6, Mode::Terminated).unwrap();
        let a = BitMapperMatrix::uniform(4, base.cols(), Family::Scldpc);
        let cfg = PexitConfig { window: Some(3), l_max: 2, rule: MixtureRule::default(), start: 0 };
        let r = predicted_ber(&base, &a, &qpsk_profile(2.0), &cfg).unwrap();
        assert!(r > 0.0);
        let full = pexit_window_run(&base, &channel_mi_per_column(&a, &qpsk_profile(2.0)).unwrap(), &cfg).unwrap();
        assert_eq!(full.trajectory_text().lines().count(), 6);
    }
}
