//! Monte Carlo bit error rates of the finite-length decoders over the AWGN
//! channel or the fiber link.
//!
//! Every frame transmits the all-zero codeword through a fresh symmetrizing
//! scrambler, so the modulation sees uniform bits. Frame `f` of point `p`
//! draws from ChaCha stream `(p << 32) | f` of the configured seed, which makes
//! the counts independent of the worker count.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::bitmapper::{index_assignment, round_to_finite, BitMapperMatrix};
use crate::channel::Constellation;
use crate::error::{Error, Result};
use crate::fiber::{self, FiberLinkParams, Link};
use crate::scgldpc::{GldpcGraph, HddConfig, HddDecoder};
use crate::scldpc::{BpConfig, BpDecoder, LiftedCode};
use crate::special::lin_to_db;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopRule {
    /// Stop once this many bit errors have been counted.
    pub min_errors: u64,
    pub max_frames: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule { min_errors: 100, max_frames: 1000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub stop: StopRule,
    /// Frames decoded between two checks of the stop rule.
    pub batch: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { stop: StopRule::default(), batch: 8, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Channel {
    Awgn { snr_db: f64 },
    Fiber(FiberLinkParams),
}

impl Channel {
    /// Abscissa of a BER curve: SNR in dB, or the number of spans.
    pub fn x(&self) -> f64 {
        match self {
            Channel::Awgn { snr_db } => *snr_db,
            Channel::Fiber(p) => p.n_spans as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BerPoint {
    pub x: f64,
    pub frames: u64,
    pub bits: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    /// Error rate, or the 95% upper bound `3 / bits` when no error was seen.
    pub ber: f64,
    pub std_err: f64,
    pub upper_bound: bool,
    /// Mean demodulator SNR in dB (measured on the fiber link).
    pub snr_db: f64,
}

impl BerPoint {
    fn from_counts(x: f64, frames: u64, bits: u64, bit_errors: u64, frame_errors: u64, snr_db: f64) -> Self {
        let n = bits.max(1) as f64;
        let p = bit_errors as f64 / n;
        let upper_bound = bit_errors == 0;
        BerPoint {
            x,
            frames,
            bits,
            bit_errors,
            frame_errors,
            ber: if upper_bound { 3.0 / n } else { p },
            std_err: (p * (1.0 - p) / n).sqrt(),
            upper_bound,
            snr_db,
        }
    }
}

/// Where the coded bits go: entry `k * m + i` is the coded bit sent on
/// modulation bit `i` of symbol `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolLayout {
    m: usize,
    coded: Vec<u32>,
}

impl SymbolLayout {
    /// Consecutive coded bits fill consecutive symbols.
    pub fn sequential(n: usize, m: usize) -> Result<Self> {
        if m == 0 || n % m != 0 {
            return Err(Error::invalid(format!("{n} coded bits do not fill symbols of {m} bits")));
        }
        Ok(SymbolLayout { m, coded: (0..n as u32).collect() })
    }

    /// Finite-length mapper from an allocation matrix whose column `j` holds
    /// coded bits `j * bits_per_column ..`. Columns are rounded separately;
    /// if that leaves some modulation bits with more coded bits than others,
    /// the surplus (taken from the last columns) moves to the short ones.
    pub fn from_mapper(a: &BitMapperMatrix, bits_per_column: usize) -> Result<Self> {
        let m = a.m();
        let n = a.n_cols() * bits_per_column;
        if n % m != 0 {
            return Err(Error::invalid(format!("{n} coded bits do not fill symbols of {m} bits")));
        }
        let per_bit = n / m;
        let assign = index_assignment(&round_to_finite(a, bits_per_column));
        let mut lists: Vec<Vec<u32>> = vec![Vec::with_capacity(per_bit); m];
        for (j, col) in assign.iter().enumerate() {
            for (u, &i) in col.iter().enumerate() {
                lists[i].push((j * bits_per_column + u) as u32);
            }
        }
        let mut spill = Vec::new();
        for l in lists.iter_mut() {
            while l.len() > per_bit {
                spill.push(l.pop().unwrap_or_default());
            }
        }
        spill.sort_unstable();
        let mut spill = spill.into_iter();
        for l in lists.iter_mut() {
            while l.len() < per_bit {
                l.push(spill.next().ok_or_else(|| Error::invalid("inconsistent rounding"))?);
            }
        }
        let coded = (0..per_bit).flat_map(|k| lists.iter().map(move |l| l[k])).collect();
        Ok(SymbolLayout { m, coded })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_symbols(&self) -> usize {
        self.coded.len() / self.m
    }

    pub fn n_bits(&self) -> usize {
        self.coded.len()
    }

    pub fn coded_bit(&self, symbol: usize, i: usize) -> usize {
        self.coded[symbol * self.m + i] as usize
    }
}

/// Transmission of scrambled all-zero frames; reused across frames.
struct Transmitter<'a> {
    c: &'a Constellation,
    layout: &'a SymbolLayout,
    channel: &'a Channel,
    link: Option<Link>,
}

/// Received symbols of one frame together with the scrambler and the noise
/// variance the demodulator assumes.
struct Received {
    scrambler: Vec<u8>,
    symbols: Vec<[f64; 4]>,
    sigma2: f64,
}

impl<'a> Transmitter<'a> {
    fn new(c: &'a Constellation, layout: &'a SymbolLayout, channel: &'a Channel) -> Result<Self> {
        if c.m() != layout.m() {
            return Err(Error::invalid(format!("layout has {} bits per symbol, constellation {}", layout.m(), c.m())));
        }
        let link = match channel {
            Channel::Awgn { snr_db } if !snr_db.is_finite() => return Err(Error::invalid("SNR must be finite")),
            Channel::Awgn { .. } => None,
            Channel::Fiber(p) => Some(Link::new(p.clone(), layout.n_symbols())?),
        };
        Ok(Transmitter { c, layout, channel, link })
    }

    fn frame(&self, rng: &mut ChaCha8Rng) -> Result<Received> {
        let (m, ns) = (self.layout.m(), self.layout.n_symbols());
        let scrambler: Vec<u8> = (0..self.layout.n_bits()).map(|_| rng.random::<bool>() as u8).collect();
        let mut bits = vec![0u8; m];
        let tx: Vec<[f64; 4]> = (0..ns)
            .map(|k| {
                for (i, b) in bits.iter_mut().enumerate() {
                    *b = scrambler[self.layout.coded_bit(k, i)];
                }
                self.c.map(&bits)
            })
            .collect();
        match (self.channel, &self.link) {
            (Channel::Awgn { snr_db }, _) => {
                let sigma2 = Constellation::sigma2(*snr_db);
                let sd = sigma2.sqrt();
                let symbols = tx
                    .iter()
                    .map(|s| {
                        let mut r = *s;
                        r.iter_mut().for_each(|v| *v += sd * rng.sample::<f64, _>(StandardNormal));
                        r
                    })
                    .collect();
                Ok(Received { scrambler, symbols, sigma2 })
            }
            (Channel::Fiber(_), Some(link)) => {
                let mut field = link.shape(&tx)?;
                link.propagate(&mut field, rng)?;
                let mut symbols = link.equalize_and_sample(&field)?;
                // ideal carrier recovery, then AWGN demodulation at the measured SNR
                let h = fiber::fit_gain(&tx, &symbols)?;
                for r in symbols.iter_mut() {
                    for (p, g) in h.iter().enumerate() {
                        let v = Complex64::new(r[2 * p], r[2 * p + 1]) / g;
                        r[2 * p] = v.re;
                        r[2 * p + 1] = v.im;
                    }
                }
                let snr = fiber::measured_snr(&tx, &symbols)?;
                Ok(Received { scrambler, symbols, sigma2: 1.0 / (2.0 * snr) })
            }
            (Channel::Fiber(_), None) => Err(Error::invalid("fiber link not initialized")),
        }
    }
}

fn frame_rng(seed: u64, point: u64, frame: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((point << 32) | frame);
    rng
}

/// Runs frames in batches until the stop rule fires. `run` returns the bit
/// errors of a frame and the demodulator noise variance.
fn monte_carlo<S, I, F>(x: f64, n_bits: usize, cfg: &SimConfig, point: u64, init: I, run: F) -> Result<BerPoint>
where
    I: Fn() -> Result<S> + Sync + Send,
    F: Fn(&mut S, &mut ChaCha8Rng) -> Result<(u64, f64)> + Sync + Send,
{
    if cfg.batch == 0 || cfg.stop.max_frames == 0 {
        return Err(Error::invalid("batch size and frame cap must be positive"));
    }
    let (mut frames, mut errors, mut frame_errors, mut sigma2_sum) = (0u64, 0u64, 0u64, 0.0);
    while frames < cfg.stop.max_frames && errors < cfg.stop.min_errors {
        let count = (cfg.batch as u64).min(cfg.stop.max_frames - frames);
        let out: Vec<Result<(u64, f64)>> = (frames..frames + count)
            .into_par_iter()
            .map_init(
                || init(),
                |state, f| {
                    let state = state.as_mut().map_err(|e| Error::invalid(e.to_string()))?;
                    run(state, &mut frame_rng(cfg.seed, point, f))
                },
            )
            .collect();
        for r in out {
            let (e, s2) = r?;
            errors += e;
            frame_errors += (e > 0) as u64;
            sigma2_sum += s2;
        }
        frames += count;
        log::debug!("point {point} (x = {x}): {errors} errors in {frames} frames");
    }
    let snr_db = lin_to_db(1.0 / (2.0 * sigma2_sum / frames as f64));
    Ok(BerPoint::from_counts(x, frames, frames * n_bits as u64, errors, frame_errors, snr_db))
}

/// BER of windowed BP on an SC-LDPC code.
pub fn simulate_scldpc(
    code: &LiftedCode,
    bp: BpConfig,
    c: &Constellation,
    layout: &SymbolLayout,
    channel: &Channel,
    cfg: &SimConfig,
    point: u64,
) -> Result<BerPoint> {
    if layout.n_bits() != code.n() {
        return Err(Error::invalid(format!("layout covers {} bits, code has {}", layout.n_bits(), code.n())));
    }
    BpDecoder::new(code, bp)?;
    let tx = Transmitter::new(c, layout, channel)?;
    let m = c.m();
    monte_carlo(
        channel.x(),
        code.n(),
        cfg,
        point,
        || Ok((BpDecoder::new(code, bp)?, vec![0.0; code.n()], vec![0.0; m])),
        |(dec, llr, out), rng| {
            let rx = tx.frame(rng)?;
            for (k, r) in rx.symbols.iter().enumerate() {
                c.llr_into(r, rx.sigma2, out);
                for (i, &l) in out.iter().enumerate() {
                    let v = layout.coded_bit(k, i);
                    llr[v] = if rx.scrambler[v] == 1 { -l } else { l };
                }
            }
            let dec_out = dec.decode(llr)?;
            Ok((dec_out.bits.iter().map(|&b| b as u64).sum(), rx.sigma2))
        },
    )
}

/// BER of windowed iterative hard-decision decoding on an SC-GLDPC code.
pub fn simulate_scgldpc(
    graph: &GldpcGraph,
    hdd: HddConfig,
    c: &Constellation,
    layout: &SymbolLayout,
    channel: &Channel,
    cfg: &SimConfig,
    point: u64,
) -> Result<BerPoint> {
    let n = graph.num_vns();
    if layout.n_bits() != n {
        return Err(Error::invalid(format!("layout covers {} bits, graph has {n} VNs", layout.n_bits())));
    }
    HddDecoder::new(graph, hdd)?;
    let tx = Transmitter::new(c, layout, channel)?;
    let m = c.m();
    monte_carlo(
        channel.x(),
        n,
        cfg,
        point,
        || Ok((HddDecoder::new(graph, hdd)?, vec![0u8; n], vec![0u8; m])),
        |(dec, y, det), rng| {
            let rx = tx.frame(rng)?;
            for (k, r) in rx.symbols.iter().enumerate() {
                c.hard_detect(r, det);
                for (i, &b) in det.iter().enumerate() {
                    let v = layout.coded_bit(k, i);
                    y[v] = b ^ rx.scrambler[v];
                }
            }
            let out = dec.decode(y)?;
            Ok((out.bits.iter().map(|&b| b as u64).sum(), rx.sigma2))
        },
    )
}

/// Abscissa at which a BER curve (sorted by `x`, falling) first drops below
/// `target`, interpolating `log10(BER)` linearly between the two points that
/// straddle it. Upper-bound points count as passing.
pub fn crossing(points: &[BerPoint], target: f64) -> Option<f64> {
    let k = points.iter().position(|p| p.ber <= target || p.upper_bound)?;
    if k == 0 {
        return None;
    }
    let (a, b) = (&points[k - 1], &points[k]);
    let (la, lb) = (a.ber.log10(), b.ber.max(1e-300).log10());
    let t = target.log10();
    if la <= lb {
        return Some(b.x);
    }
    Some(a.x + (b.x - a.x) * ((la - t) / (la - lb)).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bch::BchCode;
    use crate::bitmapper::Family;
    use crate::channel::{build_constellation, Labeling};
    use crate::scgldpc::sample_graph;
    use crate::scldpc::{build_base_matrix, lift, presets};
    use crate::Mode;

    #[test]
    fn sequential_layout() {
        let l = SymbolLayout::sequential(12, 4).unwrap();
        assert_eq!((l.n_symbols(), l.coded_bit(2, 3)), (3, 11));
        assert!(SymbolLayout::sequential(10, 4).is_err());
    }

    #[test]
    fn mapper_layout_is_a_balanced_permutation() {
        // all of column 0 on bit 0 and the rest spread
        let a = BitMapperMatrix::new(2, 3, vec![1.0, 0.25, 0.25, 0.0, 0.75, 0.75], Family::Scgldpc).unwrap();
        let l = SymbolLayout::from_mapper(&a, 4).unwrap();
        let mut seen: Vec<usize> = (0..6).flat_map(|k| (0..2).map(move |i| (k, i))).map(|(k, i)| l.coded_bit(k, i)).collect();
        assert!((0..4).all(|u| (0..6).any(|k| l.coded_bit(k, 0) == u)));
        seen.sort_unstable();
        assert_eq!(seen, (0..12).collect::<Vec<_>>());
        // uniform allocation reproduces per-column alternation
        let u = SymbolLayout::from_mapper(&BitMapperMatrix::uniform(4, 5, Family::Scldpc), 8).unwrap();
        for k in 0..u.n_symbols() {
            let col: Vec<usize> = (0..4).map(|i| u.coded_bit(k, i) / 8).collect();
            assert!(col.iter().all(|&c| c == col[0]));
        }
    }

    #[test]
    fn zero_error_points_report_a_bound() {
        let p = BerPoint::from_counts(3.0, 10, 1000, 0, 0, 3.0);
        assert!(p.upper_bound && p.ber == 3e-3);
        let q = BerPoint::from_counts(2.0, 10, 1000, 50, 4, 2.0);
        assert!(!q.upper_bound && q.ber == 0.05);
        // the bound counts as passing
        assert_eq!(crossing(&[q, p], 1e-3), Some(3.0));
    }

    #[test]
    fn crossing_interpolates_in_log_domain() {
        let a = BerPoint::from_counts(1.0, 1, 1000, 100, 1, 1.0);
        let b = BerPoint::from_counts(2.0, 1, 1000, 1, 1, 2.0);
        let x = crossing(&[a.clone(), b.clone()], 1e-2).unwrap();
        assert!((x - 1.5).abs() < 1e-12);
        assert_eq!(crossing(&[b.clone()], 1e-2), None);
        assert_eq!(crossing(&[a], 1e-3), None);
    }

    #[test]
    fn scldpc_waterfall_and_determinism() {
        let base = build_base_matrix(&presets::regular_3_6_ms1(), 8, Mode::Terminated).unwrap();
        let code = lift(&base, 100, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let c = build_constellation(2, Labeling::Gray).unwrap();
        let layout = SymbolLayout::sequential(code.n(), c.m()).unwrap();
        let bp = BpConfig { window: Some(4), l_max: 10, early_stop: true };
        let cfg = SimConfig { stop: StopRule { min_errors: 50, max_frames: 16 }, batch: 4, seed: 7 };
        let low = simulate_scldpc(&code, bp, &c, &layout, &Channel::Awgn { snr_db: -2.0 }, &cfg, 0).unwrap();
        let high = simulate_scldpc(&code, bp, &c, &layout, &Channel::Awgn { snr_db: 4.0 }, &cfg, 1).unwrap();
        assert!(low.ber > 1e-2, "{low:?}");
        assert!(high.upper_bound && high.frames == 16, "{high:?}");
        let again = simulate_scldpc(&code, bp, &c, &layout, &Channel::Awgn { snr_db: -2.0 }, &cfg, 0).unwrap();
        assert_eq!(again, low);
        assert!((low.snr_db + 2.0).abs() < 1e-9);
    }

    #[test]
    fn gldpc_corrects_light_noise() {
        let b = BchCode::new(7, 3, 43).unwrap();
        let g = sample_graph(&b, 4, 8, 2, Mode::Tailbiting, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let c = build_constellation(2, Labeling::Gray).unwrap();
        let layout = SymbolLayout::sequential(g.num_vns(), c.m()).unwrap();
        let cfg = SimConfig { stop: StopRule { min_errors: 100, max_frames: 8 }, batch: 4, seed: 3 };
        let hdd = HddConfig { window: Some(4), ..Default::default() };
        let clean = simulate_scgldpc(&g, hdd, &c, &layout, &Channel::Awgn { snr_db: 9.0 }, &cfg, 0).unwrap();
        assert!(clean.upper_bound, "{clean:?}");
        let noisy = simulate_scgldpc(&g, hdd, &c, &layout, &Channel::Awgn { snr_db: 2.0 }, &cfg, 0).unwrap();
        assert!(noisy.ber > 1e-2);
        assert!(simulate_scgldpc(&g, hdd, &c, &SymbolLayout::sequential(8, 4).unwrap(), &Channel::Awgn { snr_db: 2.0 }, &cfg, 0).is_err());
    }
}
