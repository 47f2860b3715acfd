//! Seeded random number generation.
//!
//! Every estimator takes a 64-bit seed and derives per-shard streams from it,
//! so parallel runs reduce deterministically.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::fmat::FMat;

/// Root generator for a seed.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `index` under the given seed.
pub fn shard(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1));
    rng
}

/// Standard normal via Box-Muller.
pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Haar-distributed orthogonal matrix from the QR factorization of a
/// Gaussian matrix.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> FMat {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| gaussian(rng)).collect())
        .collect();
    FMat::from_rows(&rows).qr_orthogonal()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_streams() {
        let a: Vec<f64> = {
            let mut r = shard(7, 3);
            (0..5).map(|_| gaussian(&mut r)).collect()
        };
        let b: Vec<f64> = {
            let mut r = shard(7, 3);
            (0..5).map(|_| gaussian(&mut r)).collect()
        };
        assert_eq!(a, b);
        let c: Vec<f64> = {
            let mut r = shard(7, 4);
            (0..5).map(|_| gaussian(&mut r)).collect()
        };
        assert_ne!(a, c);
    }

    #[test]
    fn orthogonal_sample() {
        let mut rng = seeded(11);
        let q = random_orthogonal(&mut rng, 4);
        let qtq = q.transpose().matmul(&q);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((qtq.get(i, j) - expect).abs() < 1e-10);
            }
        }
    }
}
