//! Halton low-discrepancy points in the unit cube.

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

#[derive(Debug, Clone)]
pub struct Halton {
    dim: usize,
    index: u64,
}

impl Halton {
    /// `seed` offsets the starting index so different seeds give disjoint
    /// stretches of the sequence.
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim <= PRIMES.len(), "Halton supports up to 8 dimensions");
        Halton {
            dim,
            index: 1 + seed.wrapping_mul(1_000_003),
        }
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        let i = self.index;
        self.index += 1;
        PRIMES[..self.dim].iter().map(|&b| radical_inverse(i, b)).collect()
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let inv = 1.0 / base as f64;
    while i > 0 {
        f *= inv;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}
