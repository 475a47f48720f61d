//! Density evolution for iterative hard-decision decoding of SC-GLDPC
//! ensembles over per-position binary symmetric channels.
//!
//! VN positions are `0..T`, CN positions `0..T+w-1` (terminated) or `0..T`
//! (tailbiting, indices modulo `T`). VN position `j` attaches to the CN
//! positions `j..j+w`. For each CN position `c` the recursion keeps
//! `a_c = f11(x_c)` and `b_c = f01(x_c)` with `x_c` the average message error
//! probability of the VN positions `c-w+1..=c`; a VN position combines the
//! forward averages `a_bar`, `b_bar` with its crossover probability.
//!
//! Only the high-rate scaling limits of `f11` and `f01` are implemented.

use crate::bch::BchCode;
use crate::bitmapper::{effective_eps, BitMapperMatrix};
use crate::channel::ChannelProfile;
use crate::error::{Error, Result};
use crate::exit::WindowRecord;
use crate::special::poisson_tail;
use crate::window::Schedule;
use crate::Mode;

/// Component-code parameters entering the recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    /// Unshortened length `2^nu - 1`.
    pub n_full: usize,
    pub s: usize,
    pub t: u32,
}

impl From<&BchCode> for Component {
    fn from(c: &BchCode) -> Self {
        Component { n_full: (1usize << c.nu()) - 1, s: c.s(), t: c.t() as u32 }
    }
}

impl Component {
    pub fn new(nu: u32, t: u32, s: usize) -> Result<Self> {
        let c = BchCode::new(nu, t as usize, s)?;
        Ok(Component::from(&c))
    }

    fn lambda(&self, x: f64) -> f64 {
        x * (self.n_full - self.s) as f64
    }
}

fn check_x(x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::invalid(format!("message error probability {x} outside [0, 1]")));
    }
    Ok(())
}

/// Probability that an outgoing message is wrong given the own bit is wrong.
pub fn f11(x: f64, code: &Component) -> Result<f64> {
    check_x(x)?;
    Ok(f11_unchecked(x, code))
}

/// Probability that an outgoing message is wrong given the own bit is right.
pub fn f01(x: f64, code: &Component) -> Result<f64> {
    check_x(x)?;
    Ok(f01_unchecked(x, code))
}

fn f11_unchecked(x: f64, code: &Component) -> f64 {
    poisson_tail(code.lambda(x), code.t - 1)
}

fn f01_unchecked(x: f64, code: &Component) -> f64 {
    let fact: f64 = (1..code.t).map(|k| k as f64).product();
    (poisson_tail(code.lambda(x), code.t) / (code.n_full as f64 * fact)).min(1.0)
}

/// `f(x; p) = p f11(x) + (1 - p) f01(x)`.
pub fn f_bsc(x: f64, p: f64, code: &Component) -> Result<f64> {
    check_x(x)?;
    Ok(p * f11_unchecked(x, code) + (1.0 - p) * f01_unchecked(x, code))
}

#[derive(Debug, Clone)]
pub struct HddDeState {
    /// Message error probability per VN position.
    pub q: Vec<f64>,
    /// `f11` per CN position.
    pub a: Vec<f64>,
    /// `f01` per CN position.
    pub b: Vec<f64>,
    pub eps: Vec<f64>,
    pub l: usize,
    pub w: usize,
    pub mode: Mode,
}

impl HddDeState {
    /// Messages start as the channel observations: `q = eps`, `a = 1`, `b = 0`.
    pub fn new(eps: &[f64], w: usize, mode: Mode) -> Result<Self> {
        let t_len = eps.len();
        if t_len == 0 || w == 0 {
            return Err(Error::invalid("need T >= 1 and w >= 1"));
        }
        if mode == Mode::Tailbiting && w > t_len {
            return Err(Error::invalid(format!("coupling width {w} exceeds T = {t_len}")));
        }
        if let Some(e) = eps.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(Error::invalid(format!("crossover probability {e} outside [0, 1]")));
        }
        let n_cn = match mode {
            Mode::Terminated => t_len + w - 1,
            Mode::Tailbiting => t_len,
        };
        Ok(HddDeState { q: eps.to_vec(), a: vec![1.0; n_cn], b: vec![0.0; n_cn], eps: eps.to_vec(), l: 0, w, mode })
    }

    pub fn t_len(&self) -> usize {
        self.q.len()
    }

    fn q_at(&self, j: isize) -> f64 {
        let t = self.t_len() as isize;
        match self.mode {
            Mode::Terminated => {
                if j < 0 || j >= t {
                    0.0
                } else {
                    self.q[j as usize]
                }
            }
            Mode::Tailbiting => self.q[j.rem_euclid(t) as usize],
        }
    }

    fn update_cn(&mut self, c: usize, code: &Component) {
        let w = self.w;
        let x = (0..w).map(|k| self.q_at(c as isize - k as isize)).sum::<f64>() / w as f64;
        self.a[c] = f11_unchecked(x, code);
        self.b[c] = f01_unchecked(x, code);
    }

    fn bars(&self, j: usize) -> (f64, f64) {
        let n_cn = self.a.len();
        let w = self.w;
        let (mut sa, mut sb) = (0.0, 0.0);
        for k in 0..w {
            let c = (j + k) % n_cn;
            sa += self.a[c];
            sb += self.b[c];
        }
        (sa / w as f64, sb / w as f64)
    }

    fn update_vn(&mut self, j: usize) {
        let (ab, bb) = self.bars(j);
        let e = self.eps[j];
        self.q[j] = e * ab + (1.0 - e) * bb;
    }

    /// Decision error probability at VN position `j`.
    pub fn position_ber(&self, j: usize) -> f64 {
        let (ab, bb) = self.bars(j);
        let e = self.eps[j];
        e * ab * ab + (1.0 - e) * (1.0 - (1.0 - bb) * (1.0 - bb))
    }
}

/// One synchronous iteration over the whole chain.
pub fn de_step(state: &mut HddDeState, code: &Component) {
    for c in 0..state.a.len() {
        state.update_cn(c, code);
    }
    for j in 0..state.t_len() {
        state.update_vn(j);
    }
    state.l += 1;
}

/// Per-position decision error probabilities and their average.
pub fn de_ber(state: &HddDeState) -> (Vec<f64>, f64) {
    let pe: Vec<f64> = (0..state.t_len()).map(|j| state.position_ber(j)).collect();
    let avg = pe.iter().sum::<f64>() / pe.len() as f64;
    (pe, avg)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HddDeConfig {
    /// Window size `W`; `None` runs the recursion on the whole chain.
    pub window: Option<usize>,
    pub l_max: usize,
    /// Tailbiting only: decoding starts this many positions later.
    #[serde(default)]
    pub start: usize,
}

impl Default for HddDeConfig {
    fn default() -> Self {
        HddDeConfig { window: Some(5), l_max: 10, start: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct HddDeResult {
    pub trajectory: Vec<WindowRecord>,
    pub position_ber: Vec<f64>,
    pub ber: f64,
}

impl HddDeResult {
    pub fn trajectory_text(&self) -> String {
        self.trajectory.iter().map(|r| format!("{} {} {:e}\n", r.window, r.position, r.ber)).collect()
    }
}

/// Max-norm of `q` below which iterations inside a window stop.
pub const CONVERGED: f64 = 1e-12;

/// Runs the recursion under the sliding-window schedule shared with the
/// finite-length decoder (coupling memory `w - 1`).
pub fn hdd_de_window_run(code: &Component, eps: &[f64], w: usize, mode: Mode, cfg: &HddDeConfig) -> Result<HddDeResult> {
    if cfg.l_max == 0 {
        return Err(Error::invalid("l_max must be positive"));
    }
    let mut st = HddDeState::new(eps, w, mode)?;
    let t_len = eps.len();
    let schedule = Schedule::new(t_len, w - 1, cfg.window, mode)?.shifted(cfg.start, mode)?;
    let mut position_ber = vec![0.0; t_len];
    let mut trajectory = Vec::with_capacity(t_len);
    for (k, step) in schedule.steps.iter().enumerate() {
        for _ in 0..cfg.l_max {
            if step.cols.iter().all(|&j| st.q[j] < CONVERGED) && step.rows.iter().all(|&c| st.a[c] < CONVERGED) {
                break;
            }
            for &c in &step.rows {
                st.update_cn(c, code);
            }
            for &j in &step.cols {
                st.update_vn(j);
            }
            st.l += 1;
        }
        for &j in &step.targets {
            let ber = st.position_ber(j);
            position_ber[j] = ber;
            trajectory.push(WindowRecord { window: k, position: j, ber });
        }
    }
    let ber = position_ber.iter().sum::<f64>() / t_len as f64;
    Ok(HddDeResult { trajectory, position_ber, ber })
}

/// Predicted BER for mapper `a` at the channel `profile`.
pub fn predicted_ber(code: &Component, w: usize, mode: Mode, a: &BitMapperMatrix, profile: &ChannelProfile, cfg: &HddDeConfig) -> Result<f64> {
    let eps = effective_eps(a, profile)?;
    Ok(hdd_de_window_run(code, &eps, w, mode, cfg)?.ber)
}
