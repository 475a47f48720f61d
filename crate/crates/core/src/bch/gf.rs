use crate::error::{Error, Result};

/// Primitive polynomials used for GF(2^nu), bit `i` holding the coefficient of `x^i`.
pub const PRIMITIVE_POLYS: [(u32, u32); 14] = [
    (3, 0xB),
    (4, 0x13),
    (5, 0x25),
    (6, 0x43),
    (7, 0x89),
    (8, 0x11D),
    (9, 0x211),
    (10, 0x409),
    (11, 0x805),
    (12, 0x1053),
    (13, 0x201B),
    (14, 0x4443),
    (15, 0x8003),
    (16, 0x1100B),
];

/// GF(2^nu) with log/antilog tables. Element `0` has no logarithm.
#[derive(Debug, Clone)]
pub struct Field {
    nu: u32,
    order: usize,
    exp: Vec<u32>,
    log: Vec<u32>,
}

impl Field {
    pub fn new(nu: u32) -> Result<Self> {
        let poly = PRIMITIVE_POLYS
            .iter()
            .find(|(n, _)| *n == nu)
            .map(|p| p.1)
            .ok_or_else(|| Error::invalid(format!("field degree {nu} not supported (3..=16)")))?;
        let order = (1usize << nu) - 1;
        let mut exp = vec![0u32; 2 * order];
        let mut log = vec![0u32; order + 1];
        let mut x = 1u32;
        for (i, slot) in exp.iter_mut().take(order).enumerate() {
            *slot = x;
            if i > 0 && x == 1 {
                return Err(Error::invalid(format!("polynomial {poly:#x} is not primitive")));
            }
            log[x as usize] = i as u32;
            x <<= 1;
            if x & (1 << nu) != 0 {
                x ^= poly;
            }
        }
        for i in order..2 * order {
            exp[i] = exp[i - order];
        }
        let f = Field { nu, order, exp, log };
        f.self_test()?;
        Ok(f)
    }

    /// Every nonzero element satisfies `x^(2^nu - 1) = 1` and the
    /// antilog table visits every nonzero element once.
    fn self_test(&self) -> Result<()> {
        let mut seen = vec![false; self.order + 1];
        for i in 0..self.order {
            let v = self.exp[i] as usize;
            if v == 0 || seen[v] {
                return Err(Error::invalid("field tables are not a permutation"));
            }
            seen[v] = true;
        }
        for x in 1..=self.order as u32 {
            if self.pow(x, self.order as u64) != 1 {
                return Err(Error::invalid(format!("element {x} fails x^n = 1")));
            }
        }
        Ok(())
    }

    pub fn nu(&self) -> u32 {
        self.nu
    }

    /// Multiplicative order `2^nu - 1`.
    pub fn order(&self) -> usize {
        self.order
    }

    /// `alpha^i` for any `i`.
    #[inline]
    pub fn alpha_pow(&self, i: usize) -> u32 {
        self.exp[i % self.order]
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            0
        } else {
            self.exp[(self.log[a as usize] + self.log[b as usize]) as usize]
        }
    }

    #[inline]
    pub fn div(&self, a: u32, b: u32) -> u32 {
        assert!(b != 0, "division by zero in GF(2^m)");
        if a == 0 {
            0
        } else {
            self.exp[(self.log[a as usize] as usize + self.order - self.log[b as usize] as usize) % self.order]
        }
    }

    #[inline]
    pub fn log(&self, a: u32) -> u32 {
        debug_assert!(a != 0);
        self.log[a as usize]
    }

    pub fn pow(&self, mut base: u32, mut e: u64) -> u32 {
        let mut acc = 1u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_tabulated_fields_pass_self_test() {
        for nu in 3..=16 {
            let f = Field::new(nu).unwrap();
            assert_eq!(f.order(), (1 << nu) - 1);
        }
        assert!(Field::new(2).is_err());
        assert!(Field::new(17).is_err());
    }

    #[test]
    fn arithmetic() {
        let f = Field::new(5).unwrap();
        for a in 1..32 {
            assert_eq!(f.div(f.mul(a, 7), 7), a);
            assert_eq!(f.mul(a, 1), a);
        }
        // x^5 = x^2 + 1 in GF(32)
        assert_eq!(f.alpha_pow(5), 0b00101);
    }
}
