use super::BaseMatrix;
use crate::error::{Error, Result};
use crate::Mode;
use rand::seq::SliceRandom;
use rand::Rng;

/// Lifted parity-check matrix in compressed sparse form.
///
/// Variable `c * M + u` is copy `u` of base column `c`; check `r * M + u` is
/// copy `u` of base row `r`. Edges are numbered in check-major order.
#[derive(Debug, Clone)]
pub struct LiftedCode {
    lifting: usize,
    base_rows: usize,
    base_cols: usize,
    k_cols: usize,
    j_rows: usize,
    t_len: usize,
    memory: usize,
    mode: Mode,
    check_ptr: Vec<u32>,
    edge_var: Vec<u32>,
    var_ptr: Vec<u32>,
    var_edges: Vec<u32>,
}

/// Replaces each base entry `p` with the sum of `p` pairwise-disjoint random
/// `M x M` permutation matrices.
pub fn lift<R: Rng + ?Sized>(base: &BaseMatrix, m: usize, rng: &mut R) -> Result<LiftedCode> {
    if m == 0 || (m as u32) < base.max_entry() {
        return Err(Error::invalid(format!(
            "lifting factor {m} is smaller than the largest base entry {}",
            base.max_entry()
        )));
    }
    let n_checks = base.rows() * m;
    let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); n_checks];
    for (r, c, p) in base.nonzeros() {
        let perms = disjoint_permutations(m, p as usize, rng);
        for perm in &perms {
            for (u, &row) in perm.iter().enumerate() {
                adjacency[r * m + row as usize].push((c * m + u) as u32);
            }
        }
    }
    Ok(LiftedCode::from_adjacency(base, m, adjacency))
}

fn disjoint_permutations<R: Rng + ?Sized>(m: usize, count: usize, rng: &mut R) -> Vec<Vec<u32>> {
    let mut perms: Vec<Vec<u32>> = Vec::with_capacity(count);
    while perms.len() < count {
        let mut perm: Vec<u32> = (0..m as u32).collect();
        perm.shuffle(rng);
        let clash = |perms: &[Vec<u32>], u: usize, x: u32| perms.iter().any(|q| q[u] == x);
        let mut ok = true;
        for u in 0..m {
            if !clash(&perms, u, perm[u]) {
                continue;
            }
            let mut fixed = false;
            for _ in 0..64 * m.max(4) {
                let v = rng.random_range(0..m);
                if !clash(&perms, u, perm[v]) && !clash(&perms, v, perm[u]) {
                    perm.swap(u, v);
                    fixed = true;
                    break;
                }
            }
            if !fixed {
                ok = false;
                break;
            }
        }
        if ok {
            perms.push(perm);
        }
    }
    perms
}

impl LiftedCode {
    pub(crate) fn from_adjacency(base: &BaseMatrix, m: usize, mut adjacency: Vec<Vec<u32>>) -> Self {
        let n_vars = base.cols() * m;
        let mut check_ptr = Vec::with_capacity(adjacency.len() + 1);
        let mut edge_var = Vec::new();
        check_ptr.push(0u32);
        for row in adjacency.iter_mut() {
            row.sort_unstable();
            edge_var.extend_from_slice(row);
            check_ptr.push(edge_var.len() as u32);
        }
        let mut deg = vec![0u32; n_vars + 1];
        for &v in &edge_var {
            deg[v as usize + 1] += 1;
        }
        for i in 0..n_vars {
            deg[i + 1] += deg[i];
        }
        let var_ptr = deg.clone();
        let mut fill = deg;
        let mut var_edges = vec![0u32; edge_var.len()];
        for (e, &v) in edge_var.iter().enumerate() {
            var_edges[fill[v as usize] as usize] = e as u32;
            fill[v as usize] += 1;
        }
        LiftedCode {
            lifting: m,
            base_rows: base.rows(),
            base_cols: base.cols(),
            k_cols: base.k_cols(),
            j_rows: base.j_rows(),
            t_len: base.t_len(),
            memory: base.memory(),
            mode: base.mode(),
            check_ptr,
            edge_var,
            var_ptr,
            var_edges,
        }
    }

    pub fn lifting_factor(&self) -> usize {
        self.lifting
    }

    /// Code length `n_C`.
    pub fn n(&self) -> usize {
        self.base_cols * self.lifting
    }

    /// Number of parity checks `r_C`.
    pub fn r(&self) -> usize {
        self.base_rows * self.lifting
    }

    pub fn num_edges(&self) -> usize {
        self.edge_var.len()
    }

    pub fn t_len(&self) -> usize {
        self.t_len
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn k_cols(&self) -> usize {
        self.k_cols
    }

    pub fn j_rows(&self) -> usize {
        self.j_rows
    }

    pub fn base_cols(&self) -> usize {
        self.base_cols
    }

    /// Base column a coded bit originates from.
    #[inline]
    pub fn column_origin(&self, var: usize) -> usize {
        var / self.lifting
    }

    /// Spatial position of a coded bit.
    #[inline]
    pub fn var_position(&self, var: usize) -> usize {
        var / (self.lifting * self.k_cols)
    }

    /// Coded bits at a spatial position.
    pub fn vars_at(&self, pos: usize) -> std::ops::Range<usize> {
        let w = self.lifting * self.k_cols;
        pos * w..(pos + 1) * w
    }

    /// Checks at a spatial position.
    pub fn checks_at(&self, pos: usize) -> std::ops::Range<usize> {
        let w = self.lifting * self.j_rows;
        pos * w..(pos + 1) * w
    }

    /// Variables participating in check `c`.
    #[inline]
    pub fn check_vars(&self, c: usize) -> &[u32] {
        &self.edge_var[self.check_ptr[c] as usize..self.check_ptr[c + 1] as usize]
    }

    #[inline]
    pub(crate) fn check_edges(&self, c: usize) -> std::ops::Range<usize> {
        self.check_ptr[c] as usize..self.check_ptr[c + 1] as usize
    }

    #[inline]
    pub(crate) fn var_edge_ids(&self, v: usize) -> &[u32] {
        &self.var_edges[self.var_ptr[v] as usize..self.var_ptr[v + 1] as usize]
    }

    pub fn var_degree(&self, v: usize) -> usize {
        (self.var_ptr[v + 1] - self.var_ptr[v]) as usize
    }

    /// `H c^T`, one entry per check.
    pub fn syndrome(&self, word: &[u8]) -> Vec<u8> {
        (0..self.r())
            .map(|c| self.check_vars(c).iter().fold(0u8, |acc, &v| acc ^ (word[v as usize] & 1)))
            .collect()
    }

    pub fn is_codeword(&self, word: &[u8]) -> bool {
        self.syndrome(word).iter().all(|&s| s == 0)
    }

    /// Number of ones in the `M x M` block replacing base entry `(r, c)`, per
    /// block row.
    pub fn block_row_weights(&self, r: usize, c: usize) -> Vec<usize> {
        let m = self.lifting;
        (0..m)
            .map(|u| self.check_vars(r * m + u).iter().filter(|&&v| v as usize / m == c).count())
            .collect()
    }

    pub fn block_col_weights(&self, r: usize, c: usize) -> Vec<usize> {
        let m = self.lifting;
        let mut w = vec![0usize; m];
        for u in 0..m {
            for &v in self.check_vars(r * m + u) {
                if v as usize / m == c {
                    w[v as usize % m] += 1;
                }
            }
        }
        w
    }
}
