//! Bit-mapper allocation matrices: effective channels, optimization by
//! differential evolution, rounding to a finite-length mapper and the
//! buffering it implies.
//!
//! The optimizer works on a level matrix `X` with one row per protection
//! level: `x_lj` is the share of column `j` carried by the bits of level `l`,
//! split evenly among those bits. Besides being column-stochastic, `X` is kept
//! row-balanced (every level carries `n_cols / L` columns' worth of bits in
//! total) so the mapper fills complete symbols.

mod finite;
mod matrix;
mod optimize;

pub use finite::{buffer_requirement, index_assignment, round_to_finite};
pub use matrix::{BitMapperMatrix, Family, COLUMN_TOL};
pub use optimize::{optimize, BerThreshold, Objective, OptimizeResult, OptimizerConfig, Tail, TraceRecord};

use crate::channel::ChannelProfile;
use crate::error::{Error, Result};

/// The sequential mapper at the DE level: every entry `1/m`.
pub fn baseline_mapper(m: usize, n_cols: usize, family: Family) -> BitMapperMatrix {
    BitMapperMatrix::uniform(m, n_cols, family)
}

/// Per-column crossover probabilities `eps_j = sum_i a_ij p_i`.
pub fn effective_eps(a: &BitMapperMatrix, profile: &ChannelProfile) -> Result<Vec<f64>> {
    if a.m() != profile.p.len() {
        return Err(Error::invalid(format!("mapper has {} rows, channel has {} bits", a.m(), profile.p.len())));
    }
    Ok((0..a.n_cols()).map(|j| (0..a.m()).map(|i| a.get(i, j) * profile.p[i]).sum()).collect())
}

/// Assignment of modulation bits to protection levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Levels {
    of_bit: Vec<usize>,
    count: Vec<usize>,
}

impl Levels {
    /// `of_bit[i]` is the level of modulation bit `i`.
    pub fn new(of_bit: Vec<usize>) -> Result<Self> {
        let n_levels = of_bit.iter().max().map_or(0, |&l| l + 1);
        let mut count = vec![0; n_levels];
        for &l in &of_bit {
            count[l] += 1;
        }
        if of_bit.is_empty() || count.contains(&0) {
            return Err(Error::invalid("protection levels must be numbered 0..L without gaps"));
        }
        Ok(Levels { of_bit, count })
    }

    pub fn num_levels(&self) -> usize {
        self.count.len()
    }

    pub fn m(&self) -> usize {
        self.of_bit.len()
    }

    pub fn of_bit(&self) -> &[usize] {
        &self.of_bit
    }

    /// Expands a row-major `L x n_cols` level matrix to a bit mapper.
    pub fn expand(&self, x: &[f64], n_cols: usize, family: Family) -> Result<BitMapperMatrix> {
        let l = self.num_levels();
        if x.len() != l * n_cols {
            return Err(Error::invalid(format!("level matrix needs {} entries, got {}", l * n_cols, x.len())));
        }
        let mut data = Vec::with_capacity(self.m() * n_cols);
        for &lv in &self.of_bit {
            let c = self.count[lv] as f64;
            data.extend(x[lv * n_cols..(lv + 1) * n_cols].iter().map(|v| v / c));
        }
        BitMapperMatrix::new(self.m(), n_cols, data, family)
    }

    /// Level matrix of a bit mapper (sums over the bits of each level).
    pub fn collapse(&self, a: &BitMapperMatrix) -> Vec<f64> {
        let n = a.n_cols();
        let mut x = vec![0.0; self.num_levels() * n];
        for (i, &lv) in self.of_bit.iter().enumerate() {
            for j in 0..n {
                x[lv * n + j] += a.get(i, j);
            }
        }
        x
    }
}

/// Tolerance of the repaired constraints.
pub const REPAIR_TOL: f64 = 1e-10;

/// Projects a row-major `L x n` level matrix onto the feasible set.
/// Negatives (and NaNs) become zero and columns are renormalized; then mass
/// moves from levels above their row target `n / L` to levels below it,
/// proportionally to the donor row. Feasible input is returned unchanged.
pub fn repair(x: &mut [f64], n_levels: usize, n: usize) {
    repair_weighted(x, n_levels, &vec![1.0; n]);
}

/// [`repair`] for columns that stand for `weights[j]` mapper columns each;
/// row sums and targets are weighted accordingly.
pub fn repair_weighted(x: &mut [f64], n_levels: usize, weights: &[f64]) {
    let n = weights.len();
    debug_assert_eq!(x.len(), n_levels * n);
    let total: f64 = weights.iter().sum();
    let row_target = total / n_levels as f64;
    let row_sum = |x: &[f64], l: usize| x[l * n..(l + 1) * n].iter().zip(weights).map(|(v, w)| v * w).sum::<f64>();
    let feasible = |x: &[f64]| {
        x.iter().all(|v| (0.0..=1.0).contains(v))
            && (0..n).all(|j| ((0..n_levels).map(|l| x[l * n + j]).sum::<f64>() - 1.0).abs() <= REPAIR_TOL)
            && (0..n_levels).all(|l| (row_sum(x, l) - row_target).abs() <= REPAIR_TOL * total)
    };
    if feasible(x) {
        return;
    }
    for v in x.iter_mut() {
        if !(*v > 0.0) || !v.is_finite() {
            *v = 0.0;
        }
    }
    for j in 0..n {
        let s: f64 = (0..n_levels).map(|l| x[l * n + j]).sum();
        for l in 0..n_levels {
            x[l * n + j] = if s > 0.0 { x[l * n + j] / s } else { 1.0 / n_levels as f64 };
        }
    }
    for _ in 0..2 * n_levels {
        let sums: Vec<f64> = (0..n_levels).map(|l| row_sum(x, l)).collect();
        let (hi, lo) = (argmax(&sums), argmax(&sums.iter().map(|s| -s).collect::<Vec<_>>()));
        let amount = (sums[hi] - row_target).min(row_target - sums[lo]);
        if amount <= 0.0 {
            break;
        }
        let scale = amount / sums[hi];
        for j in 0..n {
            let d = x[hi * n + j] * scale;
            x[hi * n + j] -= d;
            x[lo * n + j] += d;
        }
    }
    for v in x.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
}

fn argmax(v: &[f64]) -> usize {
    (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b]).then(b.cmp(&a))).unwrap_or(0)
}
