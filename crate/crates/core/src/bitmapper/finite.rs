//! Finite-length mappers and their buffering cost.

use super::BitMapperMatrix;
use crate::error::{Error, Result};

/// Integer allocation `round(bits_per_column * A)` with exact column sums
/// (largest-remainder rounding). Entry `[j][i]` counts the coded bits of
/// column `j` sent on modulation bit `i`.
pub fn round_to_finite(a: &BitMapperMatrix, bits_per_column: usize) -> Vec<Vec<usize>> {
    let m = a.m();
    (0..a.n_cols())
        .map(|j| {
            let exact: Vec<f64> = (0..m).map(|i| a.get(i, j) * bits_per_column as f64).collect();
            let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
            let assigned: usize = counts.iter().sum();
            let mut order: Vec<usize> = (0..m).collect();
            // largest fractional part first, ties to the lower bit index
            order.sort_by(|&x, &y| (exact[y] - exact[y].floor()).total_cmp(&(exact[x] - exact[x].floor())).then(x.cmp(&y)));
            for &i in order.iter().take(bits_per_column.saturating_sub(assigned)) {
                counts[i] += 1;
            }
            counts
        })
        .collect()
}

/// Modulation bit of every coded bit, column by column: the coded bits of a
/// column are handed to the modulation bits in index order.
pub fn index_assignment(counts: &[Vec<usize>]) -> Vec<Vec<usize>> {
    counts
        .iter()
        .map(|col| col.iter().enumerate().flat_map(|(i, &c)| std::iter::repeat_n(i, c)).collect())
        .collect()
}

/// Largest number of spatial positions' worth of coded bits waiting for a
/// symbol to complete, when the encoder emits one position (`cols_per_position`
/// columns) at a time and a symbol leaves once all `m` of its bits exist.
pub fn buffer_requirement(a: &BitMapperMatrix, cols_per_position: usize) -> Result<f64> {
    let (m, n) = (a.m(), a.n_cols());
    if cols_per_position == 0 || n % cols_per_position != 0 {
        return Err(Error::invalid(format!("{n} columns do not split into positions of {cols_per_position}")));
    }
    let mut cum = vec![0.0f64; m];
    let mut worst: f64 = 0.0;
    for pos in 0..n / cols_per_position {
        for j in pos * cols_per_position..(pos + 1) * cols_per_position {
            for (i, c) in cum.iter_mut().enumerate() {
                *c += a.get(i, j);
            }
        }
        let symbols = cum.iter().copied().fold(f64::INFINITY, f64::min);
        let waiting: f64 = cum.iter().map(|c| c - symbols).sum();
        worst = worst.max(waiting / cols_per_position as f64);
    }
    // clean rounding noise from the running sums
    Ok((worst * 1e9).round() / 1e9)
}
