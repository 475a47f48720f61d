//! Sliding-window schedule shared by the finite-length decoders and the
//! density-evolution analyses.
//!
//! Spatial positions are 0-based. A chain of length `T` with coupling memory
//! `ms` has variable positions `0..T` and check positions `0..T+ms`
//! (terminated) or `0..T` (tailbiting, indices modulo `T`); the variables at
//! position `j` connect to the checks at positions `j..=j+ms`.
//!
//! Window step `k` targets position `t_k` (`k` for terminated chains,
//! `ms + k mod T` for tailbiting chains). It updates the checks at positions
//! `t_k..t_k+W` and the not-yet-decided variables at positions `t_k..t_k+W`;
//! after `l_max` iterations the targeted position is decided and the window
//! slides by one. Decided variables keep their last outgoing messages, which is
//! what lets a tailbiting window wrap around onto already decoded positions.
//!
//! The decision steps are preceded by `W-1` warm-up steps with no targets, as
//! if the window slid in from the left: on a terminated chain they cover
//! positions `0..k` for `k = 1..W`, on a tailbiting chain they are full windows
//! ending just before `t_0 + k`. Every position is therefore processed in `W`
//! consecutive windows before it is decided.

use crate::error::{Error, Result};
use crate::Mode;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowStep {
    /// Positions decided at the end of this step.
    pub targets: Vec<usize>,
    /// Check positions updated during this step.
    pub rows: Vec<usize>,
    /// Variable positions updated during this step.
    pub cols: Vec<usize>,
}

/// Full schedule for a chain: `W-1` warm-up steps followed by `T` decision
/// steps, or a single step covering the whole graph when `window` is `None`.
#[derive(Debug, Clone)]
pub struct Schedule {
    pub steps: Vec<WindowStep>,
    pub t_len: usize,
    pub n_rows: usize,
}

impl Schedule {
    pub fn new(t_len: usize, memory: usize, window: Option<usize>, mode: Mode) -> Result<Self> {
        if t_len == 0 {
            return Err(Error::invalid("spatial length must be positive"));
        }
        let n_rows = match mode {
            Mode::Terminated => t_len + memory,
            Mode::Tailbiting => t_len,
        };
        let Some(w) = window else {
            return Ok(Schedule {
                steps: vec![WindowStep {
                    targets: (0..t_len).collect(),
                    rows: (0..n_rows).collect(),
                    cols: (0..t_len).collect(),
                }],
                t_len,
                n_rows,
            });
        };
        if w == 0 || w >= t_len {
            return Err(Error::invalid(format!(
                "window size must satisfy 1 <= W < T (W = {w}, T = {t_len}); use full decoding instead"
            )));
        }
        let mut decided = vec![false; t_len];
        let mut steps = Vec::with_capacity(t_len + w - 1);
        for k in 1..w {
            let span: Vec<usize> = match mode {
                Mode::Terminated => (0..k).collect(),
                Mode::Tailbiting => {
                    let t0 = memory % t_len;
                    (0..w).map(|d| (t0 + 2 * t_len + d + k - w) % t_len).collect()
                }
            };
            steps.push(WindowStep { targets: vec![], rows: span.clone(), cols: span });
        }
        for k in 0..t_len {
            let (target, rows, cols): (usize, Vec<usize>, Vec<usize>) = match mode {
                Mode::Terminated => {
                    let t = k;
                    (t, (t..(t + w).min(n_rows)).collect(), (t..(t + w).min(t_len)).collect())
                }
                Mode::Tailbiting => {
                    let t = (memory + k) % t_len;
                    let span: Vec<usize> = (0..w).map(|d| (t + d) % t_len).collect();
                    (t, span.clone(), span)
                }
            };
            let cols = cols.into_iter().filter(|&c| !decided[c]).collect();
            decided[target] = true;
            steps.push(WindowStep { targets: vec![target], rows, cols });
        }
        Ok(Schedule { steps, t_len, n_rows })
    }

    /// Moves every position of a tailbiting schedule by `offset` (mod `T`),
    /// so that decoding starts `offset` positions later along the ring.
    pub fn shifted(mut self, offset: usize, mode: Mode) -> Result<Self> {
        if offset % self.t_len == 0 {
            return Ok(self);
        }
        if mode == Mode::Terminated {
            return Err(Error::invalid("only tailbiting schedules can be shifted"));
        }
        let t = self.t_len;
        for st in &mut self.steps {
            for p in st.targets.iter_mut().chain(st.rows.iter_mut()).chain(st.cols.iter_mut()) {
                *p = (*p + offset) % t;
            }
        }
        Ok(self)
    }
}
