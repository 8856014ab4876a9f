//! Ancestral sampling along the star graph: the root first, then each leaf
//! independently given the root.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::counts::CountTable;
use crate::error::{domain, Result};
use crate::model::ModelSpec;

/// Draws `n` observations and tabulates them. Output is a pure function of
/// `(spec, n, seed, include_root)`.
pub fn sample(spec: &ModelSpec, n: u64, seed: u64, include_root: bool) -> Result<CountTable> {
    if n == 0 {
        return domain("sample size must be at least 1");
    }
    let q = spec.leaves();
    let agree = (1.0 + spec.rho()) / 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; 1usize << (q + 1)];
    for _ in 0..n {
        let root = rng.random_bool(0.5);
        let mut cell = usize::from(root) << q;
        for bit in 0..q {
            let level = if rng.random_bool(agree) { root } else { !root };
            cell |= usize::from(level) << bit;
        }
        counts[cell] += 1;
    }
    let table = CountTable::from_integers(q, true, &counts)?;
    Ok(if include_root {
        table
    } else {
        table.leaf_margin()
    })
}

/// Seed for replicate `replicate` of simulation cell `cell`, independent of
/// the order in which replicates run.
pub fn derive_seed(master: u64, cell: u64, replicate: u64) -> u64 {
    let mut z = master;
    for word in [cell, replicate] {
        z = splitmix64(z ^ splitmix64(word));
    }
    z
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dependence::csd;

    #[test]
    fn deterministic_per_seed() {
        let s = ModelSpec::from_rho(3, 0.4).unwrap();
        assert_eq!(
            sample(&s, 500, 7, true).unwrap(),
            sample(&s, 500, 7, true).unwrap()
        );
        assert_ne!(
            sample(&s, 500, 7, true).unwrap(),
            sample(&s, 500, 8, true).unwrap()
        );
    }

    #[test]
    fn totals_and_shape() {
        let s = ModelSpec::from_rho(3, 0.4).unwrap();
        let t = sample(&s, 1234, 1, false).unwrap();
        assert_eq!(t.total(), 1234.0);
        assert_eq!(t.counts().len(), 8);
        assert!(!t.root_observed());
        assert!(sample(&s, 0, 1, true).is_err());
    }

    #[test]
    fn independence_gives_small_csd() {
        let s = ModelSpec::from_rho(3, 0.0).unwrap();
        let t = sample(&s, 10_000, 99, false).unwrap();
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            assert!(csd(&t.pair_margin(a, b).unwrap()).unwrap().abs() < 0.1);
        }
    }

    #[test]
    fn leaf_root_csd_converges() {
        let s = ModelSpec::from_rho(4, 0.6).unwrap();
        let t = sample(&s, 100_000, 2024, true).unwrap();
        for q in 0..4 {
            let c = csd(&t.pair_margin(q, 4).unwrap()).unwrap();
            assert!((c - 0.6).abs() < 0.02, "leaf {q}: {c}");
        }
    }

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(1, 0, 0);
        assert_ne!(a, derive_seed(1, 0, 1));
        assert_ne!(a, derive_seed(1, 1, 0));
        assert_ne!(a, derive_seed(2, 0, 0));
        assert_eq!(a, derive_seed(1, 0, 0));
    }
}
