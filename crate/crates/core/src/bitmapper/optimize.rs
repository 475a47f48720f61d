//! Differential evolution (rand/1/bin) over level matrices.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{repair_weighted, BitMapperMatrix, Family, Levels};
use crate::error::{Error, Result};
use crate::threshold::{threshold, Search};

/// Quantity minimized by [`optimize`]: a threshold in dB.
pub trait Objective: Sync {
    /// Threshold of `a`, or `None` when it certainly exceeds `cap`.
    /// `cap = inf` asks for the threshold unconditionally.
    fn threshold_below(&self, a: &BitMapperMatrix, cap: f64) -> Result<Option<f64>>;
}

impl<F> Objective for F
where
    F: Fn(&BitMapperMatrix) -> Result<f64> + Sync,
{
    fn threshold_below(&self, a: &BitMapperMatrix, cap: f64) -> Result<Option<f64>> {
        let t = self(a)?;
        Ok((t <= cap).then_some(t))
    }
}

/// Threshold of an SNR-to-BER analysis `ber(a, snr_db)`. A trial that has to
/// beat a known threshold is first checked at that SNR alone, so rejected
/// candidates cost one evaluation instead of a bisection.
pub struct BerThreshold<F> {
    pub ber: F,
    pub search: Search,
}

impl<F> Objective for BerThreshold<F>
where
    F: Fn(&BitMapperMatrix, f64) -> Result<f64> + Sync,
{
    fn threshold_below(&self, a: &BitMapperMatrix, cap: f64) -> Result<Option<f64>> {
        let mut search = self.search;
        if cap < search.hi_db {
            if (self.ber)(a, cap)? > search.target_ber {
                return Ok(None);
            }
            search.hi_db = cap;
        }
        let t = threshold(|s| (self.ber)(a, s), &search)?;
        Ok(Some(t.snr_db.min(cap)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub population: usize,
    /// Mutation factor `F`.
    pub f: f64,
    /// Crossover rate `CR`.
    pub cr: f64,
    pub generations: usize,
    pub seed: u64,
    /// Optimize only the first `P` columns; the rest follow `tail`.
    #[serde(default)]
    pub optimize_prefix: Option<usize>,
    #[serde(default)]
    pub tail: Tail,
}

/// Columns behind an optimized prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tail {
    /// Every tail column is `1/m`.
    #[default]
    Uniform,
    /// All tail columns equal one optimized column, which takes up the
    /// balance of the prefix.
    Shared,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig { population: 30, f: 0.7, cr: 0.9, generations: 150, seed: 1, optimize_prefix: None, tail: Tail::Uniform }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<()> {
        if self.population < 4 {
            return Err(Error::invalid("population must be at least 4"));
        }
        if !(self.f > 0.0 && self.f <= 2.0) {
            return Err(Error::invalid("mutation factor must lie in (0, 2]"));
        }
        if !(0.0..=1.0).contains(&self.cr) {
            return Err(Error::invalid("crossover rate must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// One line of the optimization trace.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TraceRecord {
    pub generation: usize,
    pub best: f64,
    /// Mean over the finite thresholds of the population.
    pub mean: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizeResult {
    pub best: BitMapperMatrix,
    pub best_threshold: f64,
    pub baseline_threshold: f64,
    pub trace: Vec<TraceRecord>,
}

impl OptimizeResult {
    pub fn gain_db(&self) -> f64 {
        self.baseline_threshold - self.best_threshold
    }

    pub fn trace_text(&self) -> String {
        self.trace.iter().map(|r| format!("{} {} {}\n", r.generation, r.best, r.mean)).collect()
    }
}

/// Minimizes `objective` (a threshold in dB) over row-balanced mappers with
/// the given protection levels. The uniform mapper is always a member of the
/// initial population, so the result is never worse than the baseline.
/// Objective errors count as infeasible (`+inf`).
pub fn optimize<O: Objective>(objective: O, levels: &Levels, n_cols: usize, family: Family, cfg: &OptimizerConfig) -> Result<OptimizeResult> {
    cfg.validate()?;
    let n_levels = levels.num_levels();
    let p = cfg.optimize_prefix.unwrap_or(n_cols).min(n_cols);
    if p == 0 {
        return Err(Error::invalid("optimized prefix must hold at least one column"));
    }
    // free columns: the prefix, plus the shared tail column if there is one
    let shared = cfg.tail == Tail::Shared && p < n_cols;
    let q = p + shared as usize;
    let mut weights = vec![1.0; p];
    if shared {
        weights.push((n_cols - p) as f64);
    }
    let uniform = vec![1.0 / n_levels as f64; n_levels * q];
    // free block -> full level matrix -> mapper
    let build = |x: &[f64]| -> Result<BitMapperMatrix> {
        let mut full = vec![1.0 / n_levels as f64; n_levels * n_cols];
        for l in 0..n_levels {
            full[l * n_cols..l * n_cols + p].copy_from_slice(&x[l * q..l * q + p]);
            if shared {
                full[l * n_cols + p..(l + 1) * n_cols].fill(x[l * q + p]);
            }
        }
        levels.expand(&full, n_cols, family)
    };
    // threshold of `x` if it is at most `cap`, +inf otherwise
    let score = |x: &[f64], cap: f64| -> f64 {
        match build(x).and_then(|a| objective.threshold_below(&a, cap)) {
            Ok(Some(t)) if t.is_finite() => t,
            Ok(_) => f64::INFINITY,
            Err(e) => {
                log::debug!("candidate rejected: {e}");
                f64::INFINITY
            }
        }
    };

    let baseline_threshold = score(&uniform, f64::INFINITY);
    if !baseline_threshold.is_finite() {
        return Err(Error::invalid("objective fails on the baseline mapper"));
    }
    if n_levels == 1 {
        // every mapper induces the same channels
        return Ok(OptimizeResult {
            best: build(&uniform)?,
            best_threshold: baseline_threshold,
            baseline_threshold,
            trace: vec![TraceRecord { generation: 0, best: baseline_threshold, mean: baseline_threshold }],
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dim = n_levels * q;
    let mut pop: Vec<Vec<f64>> = vec![uniform.clone()];
    while pop.len() < cfg.population {
        let mut x: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
        repair_weighted(&mut x, n_levels, &weights);
        pop.push(x);
    }
    let mut fit: Vec<f64> = std::iter::once(baseline_threshold).chain(pop[1..].par_iter().map(|x| score(x, f64::INFINITY)).collect::<Vec<_>>()).collect();
    let mut trace = vec![record(0, &fit)];

    for gen in 1..=cfg.generations {
        let trials: Vec<Vec<f64>> = (0..pop.len())
            .map(|i| {
                let (r1, r2, r3) = distinct3(&mut rng, pop.len(), i);
                let jr = rng.random_range(0..dim);
                let mut u = pop[i].clone();
                for d in 0..dim {
                    if d == jr || rng.random::<f64>() < cfg.cr {
                        u[d] = pop[r1][d] + cfg.f * (pop[r2][d] - pop[r3][d]);
                    }
                }
                repair_weighted(&mut u, n_levels, &weights);
                u
            })
            .collect();
        // identical trials inside a generation are scored once, against the
        // loosest cap among them
        let mut memo: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut unique: Vec<(usize, f64)> = Vec::new();
        let slot: Vec<usize> = trials
            .iter()
            .enumerate()
            .map(|(i, u)| {
                let key: Vec<u64> = u.iter().map(|v| v.to_bits()).collect();
                let k = *memo.entry(key).or_insert_with(|| {
                    unique.push((i, fit[i]));
                    unique.len() - 1
                });
                unique[k].1 = unique[k].1.max(fit[i]);
                k
            })
            .collect();
        let scores: Vec<f64> = unique.par_iter().map(|&(i, cap)| score(&trials[i], cap)).collect();
        for (i, u) in trials.into_iter().enumerate() {
            let s = scores[slot[i]];
            if s <= fit[i] {
                pop[i] = u;
                fit[i] = s;
            }
        }
        let rec = record(gen, &fit);
        log::info!("generation {gen}: best {:.4} dB, mean {:.4} dB", rec.best, rec.mean);
        trace.push(rec);
    }
    let bi = (0..pop.len()).min_by(|&a, &b| fit[a].total_cmp(&fit[b])).unwrap_or(0);
    Ok(OptimizeResult { best: build(&pop[bi])?, best_threshold: fit[bi], baseline_threshold, trace })
}

fn record(generation: usize, fit: &[f64]) -> TraceRecord {
    let finite: Vec<f64> = fit.iter().copied().filter(|f| f.is_finite()).collect();
    let best = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = if finite.is_empty() { f64::INFINITY } else { finite.iter().sum::<f64>() / finite.len() as f64 };
    TraceRecord { generation, best, mean }
}

fn distinct3(rng: &mut ChaCha8Rng, n: usize, not: usize) -> (usize, usize, usize) {
    let mut pick = |taken: &[usize]| loop {
        let r = rng.random_range(0..n);
        if r != not && !taken.contains(&r) {
            break r;
        }
    };
    let a = pick(&[]);
    let b = pick(&[a]);
    let c = pick(&[a, b]);
    (a, b, c)
}

#[cfg(test)]
mod tests {
    use super::*;

    // toy objective: threshold falls as level 0 moves into column 0
    fn toy(levels: &Levels) -> impl Fn(&BitMapperMatrix) -> Result<f64> + Sync + '_ {
        move |a: &BitMapperMatrix| {
            let x = levels.collapse(a);
            Ok(5.0 - x[0])
        }
    }

    #[test]
    fn never_worse_than_baseline_and_improves() {
        let lv = Levels::new(vec![0, 1, 0, 1]).unwrap();
        let cfg = OptimizerConfig { population: 12, generations: 40, seed: 3, ..Default::default() };
        let r = optimize(toy(&lv), &lv, 4, Family::Scgldpc, &cfg).unwrap();
        assert!(r.best_threshold <= r.baseline_threshold);
        assert!((r.baseline_threshold - 4.5).abs() < 1e-12);
        // level 0 fills column 0 completely at the optimum
        assert!(r.gain_db() > 0.45, "{}", r.gain_db());
        assert_eq!(r.trace.len(), 41);
        assert!(r.trace.windows(2).all(|w| w[1].best <= w[0].best));
        assert_eq!(r.trace_text().lines().count(), 41);
        // deterministic given the seed
        let again = optimize(toy(&lv), &lv, 4, Family::Scgldpc, &cfg).unwrap();
        assert_eq!(again.best, r.best);
    }

    #[test]
    fn capped_threshold_search() {
        let lv = Levels::new(vec![0, 1, 0, 1]).unwrap();
        // passes once the SNR reaches 5 - x_00
        let obj = BerThreshold {
            ber: |a: &BitMapperMatrix, s: f64| Ok(if s >= 5.0 - lv.collapse(a)[0] { 1e-9 } else { 0.1 }),
            search: Search { lo_db: 0.0, hi_db: 10.0, tol_db: 0.001, ..Default::default() },
        };
        let u = BitMapperMatrix::uniform(4, 4, Family::Scgldpc);
        assert_eq!(obj.threshold_below(&u, 4.4).unwrap(), None);
        let t = obj.threshold_below(&u, 4.6).unwrap().unwrap();
        assert!((t - 4.5).abs() <= 0.001 && t <= 4.6);
        let full = obj.threshold_below(&u, f64::INFINITY).unwrap().unwrap();
        assert!((full - 4.5).abs() <= 0.001);
        let cfg = OptimizerConfig { population: 12, generations: 40, seed: 3, ..Default::default() };
        let r = optimize(obj, &lv, 4, Family::Scgldpc, &cfg).unwrap();
        assert!(r.gain_db() > 0.45, "{}", r.gain_db());
        assert!(r.trace.windows(2).all(|w| w[1].best <= w[0].best));
    }

    #[test]
    fn single_level_has_nothing_to_optimize() {
        let lv = Levels::new(vec![0; 4]).unwrap();
        let r = optimize(|_: &BitMapperMatrix| Ok(1.5), &lv, 6, Family::Scldpc, &OptimizerConfig::default()).unwrap();
        assert_eq!(r.gain_db(), 0.0);
    }

    #[test]
    fn infeasible_candidates_and_bad_config() {
        let lv = Levels::new(vec![0, 1]).unwrap();
        // anything but the baseline fails
        let obj = |a: &BitMapperMatrix| -> Result<f64> {
            if (a.get(0, 0) - 0.5).abs() < 1e-12 {
                Ok(2.0)
            } else {
                Err(Error::Bracket { lo_db: 0.0, hi_db: 1.0 })
            }
        };
        let cfg = OptimizerConfig { population: 5, generations: 3, ..Default::default() };
        let r = optimize(obj, &lv, 3, Family::Scgldpc, &cfg).unwrap();
        assert_eq!(r.best_threshold, 2.0);
        assert!(optimize(obj, &lv, 3, Family::Scgldpc, &OptimizerConfig { population: 3, ..cfg }).is_err());
        assert!(optimize(obj, &lv, 3, Family::Scgldpc, &OptimizerConfig { f: 0.0, ..cfg }).is_err());
        assert!(optimize(obj, &lv, 3, Family::Scgldpc, &OptimizerConfig { cr: 1.5, ..cfg }).is_err());
    }

    #[test]
    fn prefix_keeps_tail_uniform() {
        let lv = Levels::new(vec![0, 1]).unwrap();
        let cfg = OptimizerConfig { population: 8, generations: 10, optimize_prefix: Some(2), ..Default::default() };
        let r = optimize(toy(&lv), &lv, 5, Family::Scgldpc, &cfg).unwrap();
        for j in 2..5 {
            assert_eq!(r.best.column(j), vec![0.5, 0.5]);
        }
    }

    #[test]
    fn shared_tail_balances_the_prefix() {
        let lv = Levels::new(vec![0, 1]).unwrap();
        let cfg = OptimizerConfig { population: 8, generations: 30, optimize_prefix: Some(1), tail: Tail::Shared, ..Default::default() };
        let r = optimize(toy(&lv), &lv, 5, Family::Scgldpc, &cfg).unwrap();
        // level 0 fills column 0; the four tail columns give up a quarter each
        assert!(r.gain_db() > 0.45, "{}", r.gain_db());
        let x = lv.collapse(&r.best);
        for j in 2..5 {
            assert!((x[j] - x[1]).abs() < 1e-12);
        }
        assert!((x[..5].iter().sum::<f64>() - 2.5).abs() < 1e-9);
    }
}
