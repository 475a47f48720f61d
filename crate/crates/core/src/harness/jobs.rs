use std::time::Instant;

use super::{Analysis, ExperimentConfig, JobKind, MapperKind, ResultRecord};
use crate::bitmapper::{buffer_requirement, BitMapperMatrix};
use crate::error::{Error, Result};
use crate::fiber::FiberLinkParams;
use crate::sim::Channel;
use crate::Mode;

/// A mapper produced by a job, with its optimizer trace if it has one.
#[derive(Debug, Clone)]
pub struct MapperOutput {
    pub label: String,
    pub mapper: BitMapperMatrix,
    pub trace: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct JobOutput {
    pub records: Vec<ResultRecord>,
    pub mappers: Vec<MapperOutput>,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    hash: String,
    out: JobOutput,
}

impl Ctx<'_> {
    fn push(&mut self, metric: &str, mode: Mode, t_len: usize, mapper: &str, x: f64, y: f64, started: Instant) {
        self.out.records.push(ResultRecord {
            job_id: self.cfg.name.clone(),
            config_hash: self.hash.clone(),
            metric: metric.into(),
            mode,
            t_len,
            mapper: mapper.into(),
            x,
            y,
            std_err: 0.0,
            counts: None,
            upper_bound: false,
            status: "ok".into(),
            wall_time_s: started.elapsed().as_secs_f64(),
        });
    }

    fn fail(&mut self, metric: &str, mode: Mode, t_len: usize, mapper: &str, err: Error, started: Instant) {
        log::warn!("{metric} at T = {t_len} ({mode}, {mapper}) failed: {err}");
        self.push(metric, mode, t_len, mapper, t_len as f64, f64::NAN, started);
        if let Some(r) = self.out.records.last_mut() {
            r.status = format!("failed: {err}");
        }
    }

    fn keep_mapper(&mut self, mode: Mode, t_len: usize, kind: MapperKind, a: &BitMapperMatrix, trace: Option<String>) {
        self.out.mappers.push(MapperOutput { label: format!("{mode}-T{t_len}-{kind}"), mapper: a.clone(), trace });
    }
}

/// Runs the job of `cfg`. Failing sub-jobs (one `(T, mode)` pair or one
/// mapper) produce a failure record and the job carries on.
pub fn run(cfg: &ExperimentConfig) -> Result<JobOutput> {
    if cfg.t_list.is_empty() || cfg.modes.is_empty() {
        return Err(Error::invalid("t_list and modes must not be empty"));
    }
    let mut ctx = Ctx { cfg, hash: cfg.hash(), out: JobOutput::default() };
    for &t_len in &cfg.t_list {
        for &mode in &cfg.modes {
            let started = Instant::now();
            let analysis = match Analysis::new(cfg, t_len, mode) {
                Ok(a) => a,
                Err(e) => {
                    ctx.fail("setup", mode, t_len, "", e, started);
                    continue;
                }
            };
            ctx.push("rate", mode, t_len, "", t_len as f64, analysis.rate(), started);
            match cfg.job {
                JobKind::Threshold => thresholds(&mut ctx, &analysis, t_len, mode),
                JobKind::Optimize | JobKind::GainSweep => gain(&mut ctx, &analysis, t_len, mode),
                JobKind::CapacityGap => gap(&mut ctx, &analysis, t_len, mode),
                JobKind::SimulateAwgn | JobKind::SimulateFiber => simulate(&mut ctx, &analysis, t_len, mode),
            }
        }
    }
    Ok(ctx.out)
}

/// Rates and graph statistics for every `(T, mode)` of `cfg`.
pub fn inspect(cfg: &ExperimentConfig) -> Result<Vec<serde_json::Value>> {
    let mut out = Vec::new();
    for &t_len in &cfg.t_list {
        for &mode in &cfg.modes {
            out.push(Analysis::new(cfg, t_len, mode)?.inspect(cfg)?);
        }
    }
    Ok(out)
}

fn thresholds(ctx: &mut Ctx, an: &Analysis, t_len: usize, mode: Mode) {
    for &kind in &ctx.cfg.mappers {
        let started = Instant::now();
        let res = an.mapper(kind, ctx.cfg).and_then(|(a, opt)| match opt {
            Some(r) => Ok((a, r.best_threshold, Some(r.trace_text()))),
            None => an.threshold(&a).map(|t| (a, t, None)),
        });
        match res {
            Ok((a, thr, trace)) => {
                ctx.push("threshold_db", mode, t_len, &kind.to_string(), t_len as f64, thr, started);
                if kind == MapperKind::Optimized {
                    ctx.keep_mapper(mode, t_len, kind, &a, trace);
                }
            }
            Err(e) => ctx.fail("threshold_db", mode, t_len, &kind.to_string(), e, started),
        }
    }
}

fn gain(ctx: &mut Ctx, an: &Analysis, t_len: usize, mode: Mode) {
    let started = Instant::now();
    match an.optimize(&ctx.cfg.optimizer) {
        Ok(r) => {
            let x = t_len as f64;
            ctx.push("threshold_db", mode, t_len, "baseline", x, r.baseline_threshold, started);
            ctx.push("threshold_db", mode, t_len, "optimized", x, r.best_threshold, started);
            ctx.push("gain_db", mode, t_len, "optimized", x, r.gain_db(), started);
            match buffer_requirement(&r.best, an.cols_per_position()) {
                Ok(b) => ctx.push("buffer_positions", mode, t_len, "optimized", x, b, started),
                Err(e) => ctx.fail("buffer_positions", mode, t_len, "optimized", e, started),
            }
            if ctx.cfg.job == JobKind::Optimize {
                ctx.keep_mapper(mode, t_len, MapperKind::Optimized, &r.best, Some(r.trace_text()));
            }
        }
        Err(e) => ctx.fail("gain_db", mode, t_len, "optimized", e, started),
    }
}

fn gap(ctx: &mut Ctx, an: &Analysis, t_len: usize, mode: Mode) {
    let started = Instant::now();
    let cap = match an.capacity_snr_db() {
        Ok(c) => c,
        Err(e) => return ctx.fail("capacity_snr_db", mode, t_len, "", e, started),
    };
    let x = t_len as f64;
    ctx.push("capacity_snr_db", mode, t_len, "", x, cap, started);
    let mut kinds = vec![MapperKind::Baseline];
    if ctx.cfg.gap_optimized {
        kinds.push(MapperKind::Optimized);
    }
    for kind in kinds {
        let started = Instant::now();
        let thr = match kind {
            MapperKind::Optimized => an.optimize(&ctx.cfg.optimizer).map(|r| r.best_threshold),
            _ => an.threshold(&an.baseline()),
        };
        match thr {
            Ok(thr) => {
                ctx.push("threshold_db", mode, t_len, &kind.to_string(), x, thr, started);
                ctx.push("gap_db", mode, t_len, &kind.to_string(), x, thr - cap, started);
            }
            Err(e) => ctx.fail("gap_db", mode, t_len, &kind.to_string(), e, started),
        }
    }
}

fn simulate(ctx: &mut Ctx, an: &Analysis, t_len: usize, mode: Mode) {
    let cfg = ctx.cfg;
    let channels: Vec<Channel> = match cfg.job {
        JobKind::SimulateFiber => {
            cfg.spans.iter().map(|&n| Channel::Fiber(FiberLinkParams { n_spans: n, ..cfg.fiber.clone() })).collect()
        }
        _ => cfg.snr_db.iter().map(|&s| Channel::Awgn { snr_db: s }).collect(),
    };
    for &kind in &cfg.mappers {
        let started = Instant::now();
        let label = kind.to_string();
        let res = an.mapper(kind, cfg).and_then(|(a, opt)| {
            if let Some(r) = &opt {
                ctx.keep_mapper(mode, t_len, kind, &a, Some(r.trace_text()));
            }
            an.simulate(&a, &channels, cfg)
        });
        match res {
            Ok(points) => {
                for p in points {
                    ctx.push("ber", mode, t_len, &label, p.x, p.ber, started);
                    if let Some(r) = ctx.out.records.last_mut() {
                        r.std_err = p.std_err;
                        r.counts = Some([p.bit_errors, p.bits, p.frames]);
                        r.upper_bound = p.upper_bound;
                    }
                    if cfg.job == JobKind::SimulateFiber {
                        ctx.push("snr_db", mode, t_len, &label, p.x, p.snr_db, started);
                    }
                }
            }
            Err(e) => ctx.fail("ber", mode, t_len, &label, e, started),
        }
    }
}
