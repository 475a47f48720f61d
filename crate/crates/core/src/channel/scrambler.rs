use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Symmetrizing scrambler: i.i.d. uniform bits XORed onto the modulation bits
/// before mapping and removed again at the receiver.
#[derive(Debug, Clone)]
pub struct Scrambler {
    rng: ChaCha8Rng,
}

impl Scrambler {
    pub fn new(seed: u64) -> Self {
        Scrambler { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Draws the next `n` scrambler bits.
    pub fn draw(&mut self, n: usize) -> Vec<u8> {
        (0..n).map(|_| self.rng.random::<bool>() as u8).collect()
    }

    pub fn symmetrize(bits: &mut [u8], scrambler: &[u8]) -> Result<()> {
        check_len(bits.len(), scrambler.len())?;
        bits.iter_mut().zip(scrambler).for_each(|(b, d)| *b ^= d);
        Ok(())
    }

    pub fn desymmetrize_bits(bits: &mut [u8], scrambler: &[u8]) -> Result<()> {
        Self::symmetrize(bits, scrambler)
    }

    /// Multiplies each LLR by `(-1)^d`.
    pub fn desymmetrize_llrs(llrs: &mut [f64], scrambler: &[u8]) -> Result<()> {
        check_len(llrs.len(), scrambler.len())?;
        llrs.iter_mut().zip(scrambler).for_each(|(l, &d)| {
            if d == 1 {
                *l = -*l;
            }
        });
        Ok(())
    }
}

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::invalid(format!("length mismatch: {a} bits vs {b} scrambler bits")));
    }
    Ok(())
}
