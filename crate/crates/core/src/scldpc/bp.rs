use super::LiftedCode;
use crate::error::{Error, Result};
use crate::window::Schedule;

/// Magnitude bound applied to every message.
pub const LLR_CLIP: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BpConfig {
    /// Window size `W`; `None` runs flooding BP on the whole graph.
    pub window: Option<usize>,
    /// Iterations per window position (or in total for full BP).
    pub l_max: usize,
    /// Leave a window early once all of its checks are satisfied.
    pub early_stop: bool,
}

#[derive(Debug, Clone)]
pub struct BpOutput {
    pub bits: Vec<u8>,
    /// Total number of flooding iterations executed over all windows.
    pub iterations: usize,
}

/// Sum-product decoder with a flooding schedule inside a sliding window.
///
/// A decoder owns its message memory and is reused across frames.
pub struct BpDecoder<'a> {
    code: &'a LiftedCode,
    schedule: Schedule,
    cfg: BpConfig,
    v2c: Vec<f64>,
    c2v: Vec<f64>,
    app: Vec<f64>,
    scratch: Vec<f64>,
}

/// `phi(x) = -ln tanh(x / 2)`, its own inverse on `(0, inf)`.
#[inline]
fn phi(x: f64) -> f64 {
    let x = x.clamp(1e-12, 60.0);
    let e = (-x).exp();
    (2.0 * e / (1.0 - e)).ln_1p()
}

impl<'a> BpDecoder<'a> {
    pub fn new(code: &'a LiftedCode, cfg: BpConfig) -> Result<Self> {
        if cfg.l_max == 0 {
            return Err(Error::invalid("l_max must be positive"));
        }
        let schedule = Schedule::new(code.t_len(), code.memory(), cfg.window, code.mode())?;
        let e = code.num_edges();
        Ok(BpDecoder {
            code,
            schedule,
            cfg,
            v2c: vec![0.0; e],
            c2v: vec![0.0; e],
            app: vec![0.0; code.n()],
            scratch: Vec::new(),
        })
    }

    pub fn config(&self) -> &BpConfig {
        &self.cfg
    }

    /// Decodes channel LLRs (positive favours bit 0) into hard decisions.
    pub fn decode(&mut self, llr: &[f64]) -> Result<BpOutput> {
        let code = self.code;
        if llr.len() != code.n() {
            return Err(Error::invalid(format!("expected {} LLRs, got {}", code.n(), llr.len())));
        }
        if let Some(bad) = llr.iter().find(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("non-finite channel LLR {bad}")));
        }
        for v in 0..code.n() {
            let l = llr[v].clamp(-LLR_CLIP, LLR_CLIP);
            self.app[v] = l;
            for &e in code.var_edge_ids(v) {
                self.v2c[e as usize] = l;
            }
        }
        self.c2v.iter_mut().for_each(|m| *m = 0.0);

        let mut bits = vec![0u8; code.n()];
        let mut iterations = 0;
        let steps = std::mem::take(&mut self.schedule.steps);
        for step in &steps {
            for _ in 0..self.cfg.l_max {
                iterations += 1;
                for &pos in &step.rows {
                    for c in code.checks_at(pos) {
                        self.check_update(c);
                    }
                }
                for &pos in &step.cols {
                    for v in code.vars_at(pos) {
                        self.var_update(v, llr[v]);
                    }
                }
                if self.cfg.early_stop && self.window_satisfied(&step.rows) {
                    break;
                }
            }
            for &pos in &step.targets {
                for v in code.vars_at(pos) {
                    let total = self.total(v, llr[v]);
                    bits[v] = (total < 0.0) as u8;
                }
            }
        }
        self.schedule.steps = steps;
        Ok(BpOutput { bits, iterations })
    }

    #[inline]
    fn check_update(&mut self, c: usize) {
        let edges = self.code.check_edges(c);
        self.scratch.clear();
        let mut sum = 0.0;
        let mut neg = false;
        for e in edges.clone() {
            let m = self.v2c[e];
            neg ^= m < 0.0;
            let a = phi(m.abs());
            sum += a;
            self.scratch.push(a);
        }
        for (k, e) in edges.enumerate() {
            let mag = phi((sum - self.scratch[k]).max(0.0)).min(LLR_CLIP);
            let s = neg ^ (self.v2c[e] < 0.0);
            self.c2v[e] = if s { -mag } else { mag };
        }
    }

    #[inline]
    fn total(&self, v: usize, ch: f64) -> f64 {
        let mut total = ch.clamp(-LLR_CLIP, LLR_CLIP);
        for &e in self.code.var_edge_ids(v) {
            total += self.c2v[e as usize];
        }
        total
    }

    #[inline]
    fn var_update(&mut self, v: usize, ch: f64) {
        let total = self.total(v, ch);
        self.app[v] = total;
        for &e in self.code.var_edge_ids(v) {
            let e = e as usize;
            self.v2c[e] = (total - self.c2v[e]).clamp(-LLR_CLIP, LLR_CLIP);
        }
    }

    fn window_satisfied(&self, rows: &[usize]) -> bool {
        rows.iter().all(|&pos| {
            self.code.checks_at(pos).all(|c| {
                self.code.check_vars(c).iter().fold(false, |acc, &v| acc ^ (self.app[v as usize] < 0.0)) == false
            })
        })
    }
}
