//! Extrinsic iterative hard-decision decoding with component BDD.

use super::{GldpcGraph, KNOWN};
use crate::bch::Bdd;
use crate::error::{Error, Result};
use crate::window::Schedule;

/// How a CN turns the BDD result into the message on each edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CnRule {
    /// The message on edge `e` is bit `e` of the BDD output for the incoming
    /// vector with entry `e` replaced by the channel observation of its VN.
    /// On failure the channel bit is returned.
    #[default]
    ChannelExtrinsic,
    /// One BDD of the incoming vector; its bits on success, the incoming bits
    /// echoed back on failure.
    PassThrough,
}

impl std::str::FromStr for CnRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "channel-extrinsic" => Ok(CnRule::ChannelExtrinsic),
            "pass-through" => Ok(CnRule::PassThrough),
            other => Err(Error::invalid(format!("unknown CN rule `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HddConfig {
    pub window: Option<usize>,
    pub l_max: usize,
    pub rule: CnRule,
}

impl Default for HddConfig {
    fn default() -> Self {
        HddConfig { window: Some(5), l_max: 10, rule: CnRule::ChannelExtrinsic }
    }
}

#[derive(Debug, Clone)]
pub struct HddOutput {
    pub bits: Vec<u8>,
}

pub struct HddDecoder<'a> {
    graph: &'a GldpcGraph,
    cfg: HddConfig,
    schedule: Schedule,
    v2c: Vec<u8>,
    c2v: Vec<u8>,
    cand: Vec<u8>,
    support: Vec<usize>,
}

impl<'a> HddDecoder<'a> {
    pub fn new(graph: &'a GldpcGraph, cfg: HddConfig) -> Result<Self> {
        if cfg.l_max == 0 {
            return Err(Error::invalid("l_max must be positive"));
        }
        let schedule = Schedule::new(graph.t_len(), graph.coupling_width() - 1, cfg.window, graph.mode())?;
        let e = 2 * graph.num_vns();
        Ok(HddDecoder {
            graph,
            cfg,
            schedule,
            v2c: vec![0; e],
            c2v: vec![0; e],
            cand: vec![0; graph.code().n()],
            support: Vec::new(),
        })
    }

    pub fn config(&self) -> &HddConfig {
        &self.cfg
    }

    /// Decodes hard channel bits `y` (one per VN).
    pub fn decode(&mut self, y: &[u8]) -> Result<HddOutput> {
        let g = self.graph;
        if y.len() != g.num_vns() {
            return Err(Error::invalid(format!("expected {} channel bits, got {}", g.num_vns(), y.len())));
        }
        for (v, &b) in y.iter().enumerate() {
            let b = b & 1;
            self.v2c[2 * v] = b;
            self.v2c[2 * v + 1] = b;
            self.c2v[2 * v] = b;
            self.c2v[2 * v + 1] = b;
        }
        let mut bits = y.iter().map(|b| b & 1).collect::<Vec<u8>>();
        let steps = std::mem::take(&mut self.schedule.steps);
        for step in &steps {
            for _ in 0..self.cfg.l_max {
                for &pos in &step.rows {
                    for cn in g.cns_at(pos) {
                        self.check_update(cn, y);
                    }
                }
                for &pos in &step.cols {
                    for v in g.vns_at(pos) {
                        self.v2c[2 * v] = self.c2v[2 * v + 1];
                        self.v2c[2 * v + 1] = self.c2v[2 * v];
                    }
                }
            }
            for &pos in &step.targets {
                for v in g.vns_at(pos) {
                    bits[v] = self.decision(v, y[v] & 1);
                }
            }
        }
        self.schedule.steps = steps;
        Ok(HddOutput { bits })
    }

    /// Agreeing messages win; otherwise the channel bit is inverted.
    fn decision(&self, v: usize, y: u8) -> u8 {
        let (a, b) = (self.c2v[2 * v], self.c2v[2 * v + 1]);
        if a == b {
            a
        } else {
            1 - y
        }
    }

    /// Messages leaving CN `cn`, exposed for tests.
    pub(crate) fn check_update(&mut self, cn: usize, y: &[u8]) {
        let g = self.graph;
        let code = g.code();
        let sockets = g.cn_sockets(cn);
        self.support.clear();
        for (slot, &e) in sockets.iter().enumerate() {
            let b = if e == KNOWN { 0 } else { self.v2c[e as usize] };
            self.cand[slot] = b;
            if b == 1 {
                self.support.push(slot);
            }
        }
        let syn = code.syndromes_from_support(&self.support);
        let full = code.decode_syndrome(&syn);
        let flipped = |flips: &[usize], slot: usize| flips.binary_search(&slot).is_ok();
        for (slot, &e) in sockets.iter().enumerate() {
            if e == KNOWN {
                continue;
            }
            let own = self.cand[slot];
            let out = match self.cfg.rule {
                CnRule::PassThrough => match &full {
                    Bdd::Decoded { flips } => own ^ flipped(flips, slot) as u8,
                    Bdd::Failure => own,
                },
                CnRule::ChannelExtrinsic => {
                    let yb = y[e as usize / 2] & 1;
                    match &full {
                        Bdd::Decoded { flips } if own == yb => own ^ flipped(flips, slot) as u8,
                        Bdd::Failure if own == yb => yb,
                        // one position away from a vector within distance
                        // t - 1 (or containing the position in its flips):
                        // the same codeword is still the unique one in range
                        Bdd::Decoded { flips } if flipped(flips, slot) || flips.len() < code.t() => {
                            own ^ flipped(flips, slot) as u8
                        }
                        _ => {
                            let mut s2 = syn.clone();
                            code.add_position(&mut s2, slot);
                            match code.decode_syndrome(&s2) {
                                Bdd::Decoded { flips } => yb ^ flipped(&flips, slot) as u8,
                                Bdd::Failure => yb,
                            }
                        }
                    }
                }
            };
            self.c2v[e as usize] = out;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::sample_graph;
    use super::*;
    use crate::bch::BchCode;
    use crate::Mode;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn graph(mode: Mode, seed: u64) -> GldpcGraph {
        let b = BchCode::new(7, 3, 43).unwrap();
        sample_graph(&b, 4, 8, 2, mode, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    #[test]
    fn error_free_input_stays_clean() {
        for rule in [CnRule::ChannelExtrinsic, CnRule::PassThrough] {
            let g = graph(Mode::Terminated, 1);
            let mut d = HddDecoder::new(&g, HddConfig { window: Some(3), l_max: 1, rule }).unwrap();
            let out = d.decode(&vec![0; g.num_vns()]).unwrap();
            assert!(out.bits.iter().all(|&b| b == 0));
        }
    }

    #[test]
    fn single_error_corrected_in_one_iteration() {
        let g = graph(Mode::Tailbiting, 2);
        for rule in [CnRule::ChannelExtrinsic, CnRule::PassThrough] {
            let mut y = vec![0; g.num_vns()];
            y[100] = 1;
            let mut d = HddDecoder::new(&g, HddConfig { window: None, l_max: 1, rule }).unwrap();
            assert!(d.decode(&y).unwrap().bits.iter().all(|&b| b == 0));
        }
    }

    #[test]
    fn rejects_bad_input() {
        let g = graph(Mode::Tailbiting, 2);
        let mut d = HddDecoder::new(&g, HddConfig::default()).unwrap();
        assert!(d.decode(&[0; 3]).is_err());
        assert!(HddDecoder::new(&g, HddConfig { l_max: 0, ..Default::default() }).is_err());
        assert!(HddDecoder::new(&g, HddConfig { window: Some(8), ..Default::default() }).is_err());
    }

    #[test]
    fn corrects_sparse_errors_deterministically() {
        let g = graph(Mode::Terminated, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let y: Vec<u8> = (0..g.num_vns()).map(|_| rng.random_bool(0.01) as u8).collect();
        assert!(y.iter().any(|&b| b == 1));
        let cfg = HddConfig { window: Some(4), l_max: 10, rule: CnRule::ChannelExtrinsic };
        let a = HddDecoder::new(&g, cfg).unwrap().decode(&y).unwrap();
        let b = HddDecoder::new(&g, cfg).unwrap().decode(&y).unwrap();
        assert_eq!(a.bits, b.bits);
        assert!(a.bits.iter().all(|&b| b == 0));
        let zero = vec![0; g.num_vns()];
        assert!(g.position_error_rates(&a.bits, &zero).unwrap().iter().all(|&r| r == 0.0));
    }

    #[test]
    fn agreeing_messages_decide() {
        let g = graph(Mode::Tailbiting, 4);
        let mut d = HddDecoder::new(&g, HddConfig::default()).unwrap();
        for v in 0..g.num_vns() {
            d.c2v[2 * v] = (v % 3 == 0) as u8;
            d.c2v[2 * v + 1] = (v % 3 == 0) as u8;
            assert_eq!(d.decision(v, 0), (v % 3 == 0) as u8);
            assert_eq!(d.decision(v, 1), (v % 3 == 0) as u8);
        }
        d.c2v[0] = 0;
        d.c2v[1] = 1;
        assert_eq!(d.decision(0, 1), 0);
        assert_eq!(d.decision(0, 0), 1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn channel_extrinsic_messages_ignore_own_input(seed in any::<u64>(), p in 0.0f64..0.08) {
            let g = graph(Mode::Terminated, 5);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let y: Vec<u8> = (0..g.num_vns()).map(|_| rng.random_bool(p) as u8).collect();
            let mut d = HddDecoder::new(&g, HddConfig::default()).unwrap();
            for (e, m) in d.v2c.iter_mut().enumerate() {
                *m = y[e / 2] ^ rng.random_bool(p) as u8;
            }
            let cn = rng.random_range(0..g.num_cns());
            d.check_update(cn, &y);
            let before = d.c2v.clone();
            for &e in g.cn_sockets(cn) {
                if e == KNOWN {
                    continue;
                }
                d.v2c[e as usize] ^= 1;
                d.check_update(cn, &y);
                d.v2c[e as usize] ^= 1;
                prop_assert_eq!(d.c2v[e as usize], before[e as usize]);
            }
        }
    }
}
