//! Seeded randomness for reproducible test instances.
//!
//! The generator is ChaCha20 (counter-based stream cipher, `rand_chacha`),
//! seeded from a `u64` with `SeedableRng::seed_from_u64`. The same seed yields
//! the same stream on every platform.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::linalg::{CMat, C64};

pub type Rng = ChaCha20Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Standard normal sample (Box-Muller).
pub fn normal(rng: &mut Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn complex_normal(rng: &mut Rng) -> C64 {
    C64::new(normal(rng), normal(rng)) / std::f64::consts::SQRT_2
}

pub fn uniform(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}

pub fn below(rng: &mut Rng, n: usize) -> usize {
    rng.gen_range(0..n)
}

/// Hermitian matrix with Gaussian entries, scaled so its entries are O(1/√dim).
pub fn random_hermitian(dim: usize, rng: &mut Rng) -> CMat {
    let a = CMat::from_fn(dim, dim, |_, _| complex_normal(rng));
    (&a + &a.adjoint()).scale_real(0.5 / (dim as f64).sqrt())
}

/// Random Hermitian matrix on a local Fock space of `k` modes that commutes
/// with the parity: entries between basis states of different parity vanish.
pub fn random_even_hermitian(k: usize, rng: &mut Rng) -> CMat {
    let h = random_hermitian(1 << k, rng);
    CMat::from_fn(1 << k, 1 << k, |i, j| {
        if (i ^ j).count_ones() % 2 == 0 {
            h[(i, j)]
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Normalized Gaussian state vector.
pub fn random_state(dim: usize, rng: &mut Rng) -> Vec<C64> {
    let v: Vec<C64> = (0..dim).map(|_| complex_normal(rng)).collect();
    let n = crate::linalg::vec_norm(&v);
    v.into_iter().map(|x| x / n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = seeded(7);
        let mut b = seeded(7);
        for _ in 0..16 {
            assert_eq!(normal(&mut a).to_bits(), normal(&mut b).to_bits());
        }
    }

    #[test]
    fn even_hermitian_is_hermitian_and_even() {
        let h = random_even_hermitian(3, &mut seeded(1));
        assert!(h.is_hermitian(0.0));
        assert_eq!(h[(0, 1)], C64::new(0.0, 0.0));
    }
}
