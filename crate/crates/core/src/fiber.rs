//! Single-channel dual-polarization fiber link: RRC pulse shaping, Manakov
//! split-step propagation over amplified spans, EDFA noise, chromatic
//! dispersion equalization and matched filtering.
//!
//! Signals are complex envelopes in sqrt(W), sampled at
//! `samples_per_symbol * symbol_rate`. A block is treated as one period of a
//! circular signal, so every filter is an exact frequency-domain product.
//!
//! Sign convention: the fiber applies `exp(-i 2 beta2 pi^2 f^2 z)` and the Kerr
//! term rotates by `-(8/9) gamma |A|^2 z`, which makes the equalizer
//! `H(f) = exp(i 2 beta2 pi^2 f^2 N_sp L_sp)` the exact inverse of the link
//! dispersion.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::special::{db_to_lin, lin_to_db};

/// Planck's constant in J s.
pub const PLANCK: f64 = 6.626_070_15e-34;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FiberLinkParams {
    /// Attenuation in dB/km.
    pub alpha_db_km: f64,
    /// Group velocity dispersion in ps^2/km.
    pub beta2_ps2_km: f64,
    /// Kerr nonlinearity in 1/(W km).
    pub gamma: f64,
    pub span_length_km: f64,
    pub n_spans: usize,
    /// Spontaneous emission factor.
    pub nsp: f64,
    pub carrier_freq_hz: f64,
    pub planck: f64,
    pub symbol_rate: f64,
    pub rolloff: f64,
    /// Launch power per polarization.
    pub launch_power_dbm: f64,
    pub samples_per_symbol: usize,
    pub step_size_km: f64,
    /// Add EDFA noise (switch off for deterministic checks).
    pub noise: bool,
}

impl Default for FiberLinkParams {
    fn default() -> Self {
        FiberLinkParams {
            alpha_db_km: 0.25,
            beta2_ps2_km: -21.668,
            gamma: 1.4,
            span_length_km: 70.0,
            n_spans: 10,
            nsp: 1.622,
            carrier_freq_hz: 1.934e14,
            planck: PLANCK,
            symbol_rate: 40e9,
            rolloff: 0.25,
            launch_power_dbm: -2.5,
            samples_per_symbol: 2,
            step_size_km: 0.1,
            noise: true,
        }
    }
}

impl FiberLinkParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("attenuation", self.alpha_db_km),
            ("span length", self.span_length_km),
            ("spontaneous emission factor", self.nsp),
            ("carrier frequency", self.carrier_freq_hz),
            ("Planck constant", self.planck),
            ("symbol rate", self.symbol_rate),
            ("step size", self.step_size_km),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) || !self.beta2_ps2_km.is_finite() || !self.launch_power_dbm.is_finite() {
            return Err(Error::invalid("gamma, beta2 and launch power must be finite (gamma non-negative)"));
        }
        if !(0.0..=1.0).contains(&self.rolloff) {
            return Err(Error::invalid(format!("roll-off {} outside [0, 1]", self.rolloff)));
        }
        if self.samples_per_symbol < 2 {
            return Err(Error::invalid("at least two samples per symbol are needed"));
        }
        if self.n_spans == 0 {
            return Err(Error::invalid("the link needs at least one span"));
        }
        self.steps_per_span()?;
        Ok(())
    }

    /// Attenuation in 1/km (power).
    pub fn alpha_per_km(&self) -> f64 {
        self.alpha_db_km * std::f64::consts::LN_10 / 10.0
    }

    pub fn beta2_s2_km(&self) -> f64 {
        self.beta2_ps2_km * 1e-24
    }

    pub fn launch_power_w(&self) -> f64 {
        db_to_lin(self.launch_power_dbm) * 1e-3
    }

    pub fn sample_rate(&self) -> f64 {
        self.samples_per_symbol as f64 * self.symbol_rate
    }

    pub fn link_length_km(&self) -> f64 {
        self.n_spans as f64 * self.span_length_km
    }

    fn steps_per_span(&self) -> Result<usize> {
        let ratio = self.span_length_km / self.step_size_km;
        let n = ratio.round();
        if n < 1.0 || (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::invalid(format!(
                "step size {} km does not divide the span length {} km",
                self.step_size_km, self.span_length_km
            )));
        }
        Ok(n as usize)
    }

    /// Two-sided EDFA noise PSD per polarization in W/Hz.
    pub fn edfa_noise_psd(&self) -> f64 {
        (self.alpha_per_km() * self.span_length_km).exp_m1() * self.planck * self.carrier_freq_hz * self.nsp
    }

    /// Linear-regime SNR `P / (N_sp N_EDFA R_s)` (linear scale).
    pub fn linear_snr(&self) -> f64 {
        self.launch_power_w() / (self.n_spans as f64 * self.edfa_noise_psd() * self.symbol_rate)
    }

    pub fn linear_snr_db(&self) -> f64 {
        lin_to_db(self.linear_snr())
    }
}

/// Dual-polarization sample stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
}

impl Field {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Mean power per polarization.
    pub fn mean_power(&self) -> f64 {
        let e: f64 = self.x.iter().chain(&self.y).map(|c| c.norm_sqr()).sum();
        e / (2 * self.len()).max(1) as f64
    }

    /// Raw dump: little-endian f64, interleaved xI, xQ, yI, yQ.
    pub fn dump<W: Write>(&self, mut w: W) -> Result<()> {
        for (a, b) in self.x.iter().zip(&self.y) {
            for v in [a.re, a.im, b.re, b.im] {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }
}

/// Raised-cosine spectrum with unit passband, `f` in units of the symbol rate.
pub fn raised_cosine(f: f64, rolloff: f64) -> f64 {
    let f = f.abs();
    let lo = (1.0 - rolloff) / 2.0;
    let hi = (1.0 + rolloff) / 2.0;
    if f <= lo {
        1.0
    } else if f > hi {
        0.0
    } else {
        0.5 * (1.0 + (PI / rolloff * (f - lo)).cos())
    }
}

/// Precomputed link for blocks of a fixed number of symbols.
pub struct Link {
    params: FiberLinkParams,
    n_symbols: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// Frequency of each FFT bin in Hz.
    freqs: Vec<f64>,
    rrc: Vec<f64>,
    steps: usize,
}

impl Link {
    pub fn new(params: FiberLinkParams, n_symbols: usize) -> Result<Self> {
        params.validate()?;
        if n_symbols == 0 {
            return Err(Error::invalid("a block needs at least one symbol"));
        }
        let n = n_symbols * params.samples_per_symbol;
        let mut planner = FftPlanner::new();
        let fs = params.sample_rate();
        let freqs: Vec<f64> = (0..n).map(|k| if 2 * k < n { k as f64 } else { k as f64 - n as f64 } * fs / n as f64).collect();
        let rrc = freqs.iter().map(|f| raised_cosine(f / params.symbol_rate, params.rolloff).sqrt()).collect();
        let steps = params.steps_per_span()?;
        Ok(Link { fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n), freqs, rrc, steps, n_symbols, params })
    }

    pub fn params(&self) -> &FiberLinkParams {
        &self.params
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    pub fn n_samples(&self) -> usize {
        self.freqs.len()
    }

    /// Pulse-shaped launch signal for unit-energy 4D symbols
    /// `(xI, xQ, yI, yQ)`, scaled to the launch power.
    pub fn shape(&self, symbols: &[[f64; 4]]) -> Result<Field> {
        if symbols.len() != self.n_symbols {
            return Err(Error::invalid(format!("expected {} symbols, got {}", self.n_symbols, symbols.len())));
        }
        let sps = self.params.samples_per_symbol;
        let n = self.n_samples();
        let amp = self.params.launch_power_w().sqrt();
        let mut x = vec![Complex64::default(); n];
        let mut y = vec![Complex64::default(); n];
        for (k, s) in symbols.iter().enumerate() {
            x[k * sps] = Complex64::new(s[0], s[1]) * amp;
            y[k * sps] = Complex64::new(s[2], s[3]) * amp;
        }
        // sps * sqrt(RC) keeps the mean sample power equal to the symbol energy
        let gain = sps as f64 / n as f64;
        for v in [&mut x, &mut y] {
            self.filter(v, |i| Complex64::from(self.rrc[i] * gain));
        }
        Ok(Field { x, y })
    }

    fn filter(&self, v: &mut [Complex64], h: impl Fn(usize) -> Complex64) {
        self.fwd.process(v);
        for (i, c) in v.iter_mut().enumerate() {
            *c *= h(i);
        }
        self.inv.process(v);
    }

    /// Linear operator over `z` km, including the `1/N` of the inverse FFT.
    fn linear_factors(&self, z: f64) -> Vec<Complex64> {
        let n = self.n_samples() as f64;
        let b2 = self.params.beta2_s2_km();
        let loss = (-self.params.alpha_per_km() * z / 2.0).exp() / n;
        self.freqs.iter().map(|f| Complex64::from_polar(loss, -2.0 * b2 * PI * PI * f * f * z)).collect()
    }

    fn nonlinear(&self, field: &mut Field, h: f64) {
        let g = -8.0 / 9.0 * self.params.gamma * h;
        if g == 0.0 {
            return;
        }
        for (a, b) in field.x.iter_mut().zip(field.y.iter_mut()) {
            let rot = Complex64::from_polar(1.0, g * (a.norm_sqr() + b.norm_sqr()));
            *a *= rot;
            *b *= rot;
        }
    }

    /// One span of symmetric split-step propagation without amplification.
    pub fn fiber_span(&self, field: &mut Field) -> Result<()> {
        if field.len() != self.n_samples() || field.y.len() != self.n_samples() {
            return Err(Error::invalid(format!("expected {} samples per polarization", self.n_samples())));
        }
        let h = self.params.span_length_km / self.steps as f64;
        let half = self.linear_factors(h / 2.0);
        let full = self.linear_factors(h);
        let lin = |v: &mut Vec<Complex64>, f: &[Complex64]| self.filter(v, |i| f[i]);
        // adjacent linear half steps merge into full steps
        lin(&mut field.x, &half);
        lin(&mut field.y, &half);
        for s in 0..self.steps {
            self.nonlinear(field, h);
            let f = if s + 1 == self.steps { &half } else { &full };
            lin(&mut field.x, f);
            lin(&mut field.y, f);
        }
        Ok(())
    }

    /// Propagates over all spans; each span ends with an EDFA that restores
    /// the launch power and adds its noise.
    pub fn propagate<R: Rng + ?Sized>(&self, field: &mut Field, rng: &mut R) -> Result<()> {
        let p = &self.params;
        let gain = (p.alpha_per_km() * p.span_length_km / 2.0).exp();
        let sigma = (p.edfa_noise_psd() * p.sample_rate() / 2.0).sqrt();
        for _ in 0..p.n_spans {
            self.fiber_span(field)?;
            for v in field.x.iter_mut().chain(field.y.iter_mut()) {
                *v *= gain;
                if p.noise {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    *v += Complex64::new(re, im) * sigma;
                }
            }
        }
        Ok(())
    }

    /// Dispersion compensation `H(f)`, matched filter and symbol-rate
    /// sampling; symbols are scaled back to unit energy.
    pub fn equalize_and_sample(&self, field: &Field) -> Result<Vec<[f64; 4]>> {
        let n = self.n_samples();
        if field.len() != n || field.y.len() != n {
            return Err(Error::invalid(format!("expected {n} samples per polarization")));
        }
        let p = &self.params;
        let z = p.link_length_km();
        let b2 = p.beta2_s2_km();
        let scale = 1.0 / (n as f64 * p.launch_power_w().sqrt());
        let h: Vec<Complex64> = self
            .freqs
            .iter()
            .zip(&self.rrc)
            .map(|(f, r)| Complex64::from_polar(r * scale, 2.0 * b2 * PI * PI * f * f * z))
            .collect();
        let (mut x, mut y) = (field.x.clone(), field.y.clone());
        self.filter(&mut x, |i| h[i]);
        self.filter(&mut y, |i| h[i]);
        let sps = p.samples_per_symbol;
        Ok((0..self.n_symbols).map(|k| [x[k * sps].re, x[k * sps].im, y[k * sps].re, y[k * sps].im]).collect())
    }
}

/// Launch, propagate and return the received sample stream.
pub fn propagate<R: Rng + ?Sized>(symbols: &[[f64; 4]], params: &FiberLinkParams, rng: &mut R) -> Result<Field> {
    let link = Link::new(params.clone(), symbols.len())?;
    let mut field = link.shape(symbols)?;
    link.propagate(&mut field, rng)?;
    Ok(field)
}

pub fn equalize_and_sample(field: &Field, params: &FiberLinkParams) -> Result<Vec<[f64; 4]>> {
    let sps = params.samples_per_symbol.max(1);
    if field.len() % sps != 0 {
        return Err(Error::invalid("sample count is not a multiple of the oversampling factor"));
    }
    Link::new(params.clone(), field.len() / sps)?.equalize_and_sample(field)
}

/// Least-squares complex gain per polarization from known symbols (ideal
/// carrier recovery).
pub fn fit_gain(tx: &[[f64; 4]], rx: &[[f64; 4]]) -> Result<[Complex64; 2]> {
    if tx.len() != rx.len() || tx.is_empty() {
        return Err(Error::invalid("transmitted and received blocks must be non-empty and equally long"));
    }
    let mut h = [Complex64::default(); 2];
    for (p, g) in h.iter_mut().enumerate() {
        let (mut num, mut es) = (Complex64::default(), 0.0);
        for (s, r) in tx.iter().zip(rx) {
            let s = Complex64::new(s[2 * p], s[2 * p + 1]);
            num += Complex64::new(r[2 * p], r[2 * p + 1]) * s.conj();
            es += s.norm_sqr();
        }
        *g = num / es;
    }
    Ok(h)
}

/// Pilot-based SNR estimate (linear): after the fitted gain of [`fit_gain`]
/// is applied to the transmitted symbols, the residual counts as noise.
pub fn measured_snr(tx: &[[f64; 4]], rx: &[[f64; 4]]) -> Result<f64> {
    let h = fit_gain(tx, rx)?;
    let (mut sig, mut err) = (0.0, 0.0);
    for (p, g) in h.iter().enumerate() {
        for (s, r) in tx.iter().zip(rx) {
            let s = Complex64::new(s[2 * p], s[2 * p + 1]);
            sig += (g * s).norm_sqr();
            err += (Complex64::new(r[2 * p], r[2 * p + 1]) - g * s).norm_sqr();
        }
    }
    Ok(sig / err)
}
