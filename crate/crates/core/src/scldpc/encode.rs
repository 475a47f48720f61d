use super::LiftedCode;

/// Systematic encoder from a reduced row-echelon form of `H`.
///
/// Dense GF(2) elimination, intended for small codes and for validating the
/// simulation path (which transmits the all-zero codeword). A rank-deficient
/// `H` simply yields more information positions: `k = n - rank(H)`.
#[derive(Debug, Clone)]
pub struct Encoder {
    n: usize,
    /// Reduced rows restricted to the information columns, one per pivot.
    rows: Vec<Vec<u64>>,
    pivots: Vec<usize>,
    info_cols: Vec<usize>,
}

impl Encoder {
    pub fn new(code: &LiftedCode) -> Self {
        let n = code.n();
        let words = n.div_ceil(64);
        let mut mat: Vec<Vec<u64>> = (0..code.r())
            .map(|c| {
                let mut row = vec![0u64; words];
                for &v in code.check_vars(c) {
                    row[v as usize / 64] ^= 1 << (v % 64);
                }
                row
            })
            .collect();
        let mut pivots = Vec::new();
        let mut rank = 0;
        for col in 0..n {
            let (w, bit) = (col / 64, 1u64 << (col % 64));
            let Some(p) = (rank..mat.len()).find(|&r| mat[r][w] & bit != 0) else {
                continue;
            };
            mat.swap(rank, p);
            let pivot_row = mat[rank].clone();
            for (r, row) in mat.iter_mut().enumerate() {
                if r != rank && row[w] & bit != 0 {
                    row.iter_mut().zip(&pivot_row).for_each(|(a, b)| *a ^= b);
                }
            }
            pivots.push(col);
            rank += 1;
            if rank == mat.len() {
                break;
            }
        }
        mat.truncate(rank);
        let mut is_pivot = vec![false; n];
        pivots.iter().for_each(|&p| is_pivot[p] = true);
        let info_cols: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
        Encoder { n, rows: mat, pivots, info_cols }
    }

    /// Code dimension `n - rank(H)`.
    pub fn k(&self) -> usize {
        self.info_cols.len()
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn info_positions(&self) -> &[usize] {
        &self.info_cols
    }

    pub fn encode(&self, info: &[u8]) -> crate::Result<Vec<u8>> {
        if info.len() != self.k() {
            return Err(crate::Error::invalid(format!(
                "expected {} information bits, got {}",
                self.k(),
                info.len()
            )));
        }
        let mut word = vec![0u8; self.n];
        for (&c, &b) in self.info_cols.iter().zip(info) {
            word[c] = b & 1;
        }
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            let mut acc = 0u8;
            for &c in &self.info_cols {
                if word[c] == 1 && row[c / 64] >> (c % 64) & 1 == 1 {
                    acc ^= 1;
                }
            }
            word[p] = acc;
        }
        Ok(word)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{build_base_matrix, lift, presets};
    use super::*;
    use crate::Mode;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent rank by elimination over rows of a `Vec<Vec<u8>>`.
    fn rank_oracle(code: &LiftedCode) -> usize {
        let n = code.n();
        let mut rows: Vec<Vec<u8>> = (0..code.r())
            .map(|c| {
                let mut r = vec![0u8; n];
                code.check_vars(c).iter().for_each(|&v| r[v as usize] = 1);
                r
            })
            .collect();
        let mut rank = 0;
        for col in 0..n {
            if let Some(p) = (rank..rows.len()).find(|&r| rows[r][col] == 1) {
                rows.swap(rank, p);
                for r in 0..rows.len() {
                    if r != rank && rows[r][col] == 1 {
                        let pivot = rows[rank].clone();
                        rows[r].iter_mut().zip(&pivot).for_each(|(a, b)| *a ^= b);
                    }
                }
                rank += 1;
            }
        }
        rank
    }

    #[test]
    fn encodes_codewords() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for mode in [Mode::Terminated, Mode::Tailbiting] {
            let b = build_base_matrix(&presets::regular_3_6_ms1(), 6, mode).unwrap();
            let code = lift(&b, 8, &mut rng).unwrap();
            let enc = Encoder::new(&code);
            assert_eq!(enc.k(), code.n() - rank_oracle(&code));
            assert!(enc.k() >= code.n() - code.r());
            let zero = enc.encode(&vec![0; enc.k()]).unwrap();
            assert!(zero.iter().all(|&b| b == 0));
            for _ in 0..20 {
                let info: Vec<u8> = (0..enc.k()).map(|_| rng.random::<bool>() as u8).collect();
                let word = enc.encode(&info).unwrap();
                assert!(code.is_codeword(&word));
            }
            assert!(enc.encode(&[1]).is_err());
        }
    }
}
