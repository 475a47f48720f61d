//! Shortened primitive binary BCH codes with bounded-distance decoding.
//!
//! A word of length `n` holds the coefficients of `c(x)` with index `i`
//! carrying `x^i`. Parity sits at `0..nu*t`, information above it. The code is
//! shortened by fixing the top `s` information coefficients to zero and not
//! transmitting them, so decoding never touches positions `n..2^nu-1`.

mod gf;

pub use gf::{Field, PRIMITIVE_POLYS};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BchCode {
    nu: u32,
    t: usize,
    s: usize,
    n: usize,
    k: usize,
    field: Field,
    /// Generator coefficients, `generator[i]` multiplies `x^i`.
    generator: Vec<u8>,
}

/// Result of bounded-distance decoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Bdd {
    /// A codeword within distance `t` was found; `flips` lists the positions
    /// to invert (empty for a codeword input). This may be a miscorrection.
    Decoded { flips: Vec<usize> },
    Failure,
}

impl BchCode {
    pub fn new(nu: u32, t: usize, s: usize) -> Result<Self> {
        if t == 0 {
            return Err(Error::invalid("BCH correction capability must be positive"));
        }
        let field = Field::new(nu)?;
        let n_full = field.order();
        let parity = nu as usize * t;
        if n_full < parity + 1 + s {
            return Err(Error::invalid(format!(
                "BCH(nu={nu}, t={t}, s={s}) has no information bits left"
            )));
        }
        let generator = generator_poly(&field, t);
        if generator.len() - 1 != parity {
            return Err(Error::invalid(format!(
                "generator degree {} differs from nu*t = {parity} for nu={nu}, t={t}",
                generator.len() - 1
            )));
        }
        Ok(BchCode { nu, t, s, n: n_full - s, k: n_full - parity - s, field, generator })
    }

    pub fn nu(&self) -> u32 {
        self.nu
    }
    pub fn t(&self) -> usize {
        self.t
    }
    pub fn s(&self) -> usize {
        self.s
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn parity_len(&self) -> usize {
        self.n - self.k
    }
    pub fn generator(&self) -> &[u8] {
        &self.generator
    }
    pub fn field(&self) -> &Field {
        &self.field
    }

    /// Rate `k/n` of the component code.
    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    /// Systematic encoding of `k` information bits (stored at `n-k..n`).
    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.k {
            return Err(Error::invalid(format!("expected {} information bits, got {}", self.k, info.len())));
        }
        let r = self.parity_len();
        let mut word = vec![0u8; self.n];
        for (i, &b) in info.iter().enumerate() {
            word[r + i] = b & 1;
        }
        // remainder of x^r m(x) modulo g(x), long division from the top
        let mut rem = word.clone();
        for i in (r..self.n).rev() {
            if rem[i] == 1 {
                for (j, &g) in self.generator.iter().enumerate() {
                    rem[i - r + j] ^= g;
                }
            }
        }
        word[..r].copy_from_slice(&rem[..r]);
        Ok(word)
    }

    /// Syndromes `S_1..S_2t` of a received word.
    pub fn syndromes(&self, word: &[u8]) -> Result<Vec<u32>> {
        if word.len() != self.n {
            return Err(Error::invalid(format!("expected {} bits, got {}", self.n, word.len())));
        }
        let support: Vec<usize> = (0..self.n).filter(|&i| word[i] & 1 == 1).collect();
        Ok(self.syndromes_from_support(&support))
    }

    /// Syndromes of the word whose ones are at `support`.
    pub fn syndromes_from_support(&self, support: &[usize]) -> Vec<u32> {
        let mut s = vec![0u32; 2 * self.t];
        for &i in support {
            self.add_position(&mut s, i);
        }
        s
    }

    /// Toggles position `i` in a syndrome vector.
    pub fn add_position(&self, syn: &mut [u32], i: usize) {
        let order = self.field.order();
        let step = i % order;
        let mut e = 0usize;
        for sj in syn.iter_mut() {
            e += step;
            if e >= order {
                e -= order;
            }
            *sj ^= self.field.alpha_pow(e);
        }
    }

    /// Bounded-distance decoding of a hard-decision word.
    pub fn bdd_decode(&self, word: &[u8]) -> Result<Bdd> {
        let syn = self.syndromes(word)?;
        Ok(self.decode_syndrome(&syn))
    }

    /// Decodes in place; returns the number of flips, or `None` on failure.
    pub fn correct(&self, word: &mut [u8]) -> Result<Option<usize>> {
        match self.bdd_decode(word)? {
            Bdd::Decoded { flips } => {
                for &i in &flips {
                    word[i] ^= 1;
                }
                Ok(Some(flips.len()))
            }
            Bdd::Failure => Ok(None),
        }
    }

    /// Berlekamp-Massey followed by a Chien search over the `n` transmitted
    /// positions.
    pub fn decode_syndrome(&self, syn: &[u32]) -> Bdd {
        debug_assert_eq!(syn.len(), 2 * self.t);
        if syn.iter().all(|&x| x == 0) {
            return Bdd::Decoded { flips: Vec::new() };
        }
        let f = &self.field;
        let two_t = 2 * self.t;
        let mut c = vec![0u32; two_t + 1];
        let mut b = vec![0u32; two_t + 1];
        c[0] = 1;
        b[0] = 1;
        let mut l = 0usize;
        let mut m = 1usize;
        let mut bd = 1u32;
        for r in 0..two_t {
            let mut d = syn[r];
            for i in 1..=l {
                d ^= f.mul(c[i], syn[r - i]);
            }
            if d == 0 {
                m += 1;
                continue;
            }
            let coef = f.div(d, bd);
            if 2 * l <= r {
                let prev = c.clone();
                for i in 0..=two_t - m {
                    c[i + m] ^= f.mul(coef, b[i]);
                }
                l = r + 1 - l;
                b = prev;
                bd = d;
                m = 1;
            } else {
                for i in 0..=two_t - m {
                    c[i + m] ^= f.mul(coef, b[i]);
                }
                m += 1;
            }
        }
        if l > self.t || c[l] == 0 {
            return Bdd::Failure;
        }
        // error at position i iff Lambda(alpha^-i) = 0
        let order = f.order();
        let logs: Vec<Option<u32>> = c[..=l].iter().map(|&x| (x != 0).then(|| f.log(x))).collect();
        let mut flips = Vec::with_capacity(l);
        for i in 0..self.n {
            let inv = (order - i % order) % order;
            let mut acc = 0u32;
            for (j, lg) in logs.iter().enumerate() {
                if let Some(lg) = lg {
                    acc ^= f.alpha_pow(*lg as usize + j * inv);
                }
            }
            if acc == 0 {
                flips.push(i);
                if flips.len() > l {
                    return Bdd::Failure;
                }
            }
        }
        if flips.len() != l {
            return Bdd::Failure;
        }
        Bdd::Decoded { flips }
    }
}

/// Product of the distinct minimal polynomials of `alpha^1..alpha^2t`.
fn generator_poly(f: &Field, t: usize) -> Vec<u8> {
    let order = f.order();
    let mut used = vec![false; order];
    let mut g: Vec<u32> = vec![1];
    for i in 1..=2 * t {
        let i = i % order;
        if used[i] {
            continue;
        }
        // cyclotomic coset of i
        let mut j = i;
        loop {
            used[j] = true;
            // multiply g by (x + alpha^j)
            let root = f.alpha_pow(j);
            let mut next = vec![0u32; g.len() + 1];
            for (d, &coef) in g.iter().enumerate() {
                next[d + 1] ^= coef;
                next[d] ^= f.mul(coef, root);
            }
            g = next;
            j = (2 * j) % order;
            if j == i {
                break;
            }
        }
    }
    g.into_iter()
        .map(|c| {
            assert!(c <= 1, "generator coefficient outside GF(2)");
            c as u8
        })
        .collect()
}
