//! Protograph-based spatially-coupled LDPC codes.
//!
//! A code is described by component blocks `P_0..P_ms` (each `J' x K'`) that
//! are placed along a band diagonal to form the base matrix of a terminated or
//! tailbiting chain of spatial length `T`. Lifting replaces each base entry
//! `p` by an `M x M` binary matrix with `p` ones per row and column.

mod bp;
mod encode;
mod lift;
mod sparse_io;

pub use bp::{BpConfig, BpDecoder, BpOutput};
pub use encode::Encoder;
pub use lift::{lift, LiftedCode};
pub use sparse_io::{read_sparse, write_base, write_lifted, SparseText};

use crate::error::{Error, Result};
use crate::Mode;

/// Base (protograph adjacency) matrix of an SC-LDPC chain.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<u32>,
    blocks: Vec<Vec<Vec<u32>>>,
    t_len: usize,
    mode: Mode,
    j_rows: usize,
    k_cols: usize,
}

/// Assembles the chain from `P_0..P_ms`.
pub fn build_base_matrix(blocks: &[Vec<Vec<u32>>], t_len: usize, mode: Mode) -> Result<BaseMatrix> {
    let first = blocks.first().ok_or_else(|| Error::invalid("at least one component block is required"))?;
    let j_rows = first.len();
    let k_cols = first.first().map_or(0, Vec::len);
    if j_rows == 0 || k_cols == 0 {
        return Err(Error::invalid("component blocks must be non-empty"));
    }
    for (i, b) in blocks.iter().enumerate() {
        if b.len() != j_rows || b.iter().any(|r| r.len() != k_cols) {
            return Err(Error::invalid(format!("block P_{i} is not {j_rows}x{k_cols}")));
        }
    }
    let memory = blocks.len() - 1;
    if t_len == 0 {
        return Err(Error::invalid("spatial length must be positive"));
    }
    if mode == Mode::Tailbiting && t_len <= memory {
        return Err(Error::invalid(format!("tailbiting chains need T > m_s (T = {t_len}, m_s = {memory})")));
    }
    // the uncoupled sum must be regular
    let sum: Vec<Vec<u32>> = (0..j_rows)
        .map(|r| (0..k_cols).map(|c| blocks.iter().map(|b| b[r][c]).sum()).collect())
        .collect();
    let col_w: Vec<u32> = (0..k_cols).map(|c| (0..j_rows).map(|r| sum[r][c]).sum()).collect();
    let row_w: Vec<u32> = sum.iter().map(|r| r.iter().sum()).collect();
    if col_w.iter().any(|&w| w != col_w[0]) || row_w.iter().any(|&w| w != row_w[0]) || col_w[0] == 0 {
        return Err(Error::invalid("sum of component blocks is not regular"));
    }

    let rows = match mode {
        Mode::Terminated => (t_len + memory) * j_rows,
        Mode::Tailbiting => t_len * j_rows,
    };
    let cols = t_len * k_cols;
    let mut entries = vec![0u32; rows * cols];
    for t in 0..t_len {
        for (i, block) in blocks.iter().enumerate() {
            let rb = match mode {
                Mode::Terminated => t + i,
                Mode::Tailbiting => (t + i) % t_len,
            };
            for r in 0..j_rows {
                for c in 0..k_cols {
                    entries[(rb * j_rows + r) * cols + t * k_cols + c] += block[r][c];
                }
            }
        }
    }
    Ok(BaseMatrix { rows, cols, entries, blocks: blocks.to_vec(), t_len, mode, j_rows, k_cols })
}

impl BaseMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u32 {
        self.entries[r * self.cols + c]
    }

    pub fn t_len(&self) -> usize {
        self.t_len
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Rows per spatial position (`J'`).
    pub fn j_rows(&self) -> usize {
        self.j_rows
    }

    /// Columns per spatial position (`K'`).
    pub fn k_cols(&self) -> usize {
        self.k_cols
    }

    /// Coupling memory `m_s`.
    pub fn memory(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn blocks(&self) -> &[Vec<Vec<u32>>] {
        &self.blocks
    }

    pub fn max_entry(&self) -> u32 {
        self.entries.iter().copied().max().unwrap_or(0)
    }

    /// `1 - rows / cols`, i.e. `1 - J'/K' - m_s J'/(T K')` when terminated.
    pub fn design_rate(&self) -> f64 {
        1.0 - self.rows as f64 / self.cols as f64
    }

    /// Check-node degree of each base row.
    pub fn row_degrees(&self) -> Vec<u32> {
        (0..self.rows).map(|r| (0..self.cols).map(|c| self.get(r, c)).sum()).collect()
    }

    pub fn col_degrees(&self) -> Vec<u32> {
        (0..self.cols).map(|c| (0..self.rows).map(|r| self.get(r, c)).sum()).collect()
    }

    /// Nonzero entries `(row, col, multiplicity)` in row-major order.
    pub fn nonzeros(&self) -> Vec<(usize, usize, u32)> {
        let mut out = Vec::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                let p = self.get(r, c);
                if p > 0 {
                    out.push((r, c, p));
                }
            }
        }
        out
    }

    /// Spatial position of a base column.
    pub fn col_position(&self, c: usize) -> usize {
        c / self.k_cols
    }

    pub fn row_position(&self, r: usize) -> usize {
        r / self.j_rows
    }
}

/// Component blocks of the codes used in the examples and experiments.
pub mod presets {
    /// `(3,6)` chain with `P_0 = P_1 = P_2 = (1, 1)`.
    pub fn regular_3_6_ms2() -> Vec<Vec<Vec<u32>>> {
        vec![vec![vec![1, 1]]; 3]
    }

    /// `(3,6)` chain with `P_0 = (2, 2)`, `P_1 = (1, 1)`, suited to windowed decoding.
    pub fn regular_3_6_ms1() -> Vec<Vec<Vec<u32>>> {
        vec![vec![vec![2, 2]], vec![vec![1, 1]]]
    }

    /// Rate-3/4 chain with `P_0 = (1, 2, 1, 2)`, `P_1 = (3, 2, 3, 2)`.
    pub fn rate_three_quarters() -> Vec<Vec<Vec<u32>>> {
        vec![vec![vec![1, 2, 1, 2]], vec![vec![3, 2, 3, 2]]]
    }
}
