//! Memoryless sampling and small statistics helpers for Monte Carlo runs.

use alloc::vec::Vec;

use rand::Rng;

use crate::gf::Symbol;
use crate::rng::{Seed, StreamRng};
use crate::types::{CondPmf, JointPmf, Pmf};

/// Inverse-CDF draw of one symbol. Consumes exactly one `f64` from `rng`.
pub fn sample_index(p: &Pmf, rng: &mut StreamRng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &x) in p.probs().iter().enumerate() {
        if x <= 0.0 {
            continue;
        }
        acc += x;
        last = i;
        if u < acc {
            return i;
        }
    }
    // rounding left a sliver above the cumulative sum
    last
}

pub fn sample_source_with(p: &Pmf, n: usize, rng: &mut StreamRng) -> Vec<Symbol> {
    (0..n).map(|_| sample_index(p, rng) as Symbol).collect()
}

/// `n` i.i.d. draws from `p`.
pub fn sample_source(p: &Pmf, n: usize, seed: Seed) -> Vec<Symbol> {
    sample_source_with(p, n, &mut seed.rng())
}

/// One output per input, `y_i ~ ch(. | x_i)`.
pub fn sample_channel(ch: &CondPmf, inputs: &[Symbol], seed: Seed) -> Vec<Symbol> {
    let mut rng = seed.rng();
    inputs.iter().map(|&x| sample_index(ch.row(x as usize), &mut rng) as Symbol).collect()
}

/// `n` i.i.d. draws of a joint variable, returned one sequence per axis.
pub fn sample_joint(j: &JointPmf, n: usize, seed: Seed) -> Vec<Vec<Symbol>> {
    let flat = sample_source_with(j.flat(), n, &mut seed.rng());
    let mut out = alloc::vec![Vec::with_capacity(n); j.dims().len()];
    for &s in &flat {
        for (axis, c) in j.coords(s as usize).into_iter().enumerate() {
            out[axis].push(c as Symbol);
        }
    }
    out
}

/// Wilson score interval for `k` successes in `n` trials at normal quantile `z`.
pub fn wilson(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * libm::sqrt(p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)) / denom;
    // the bounds touch 0 and 1 exactly at k = 0 and k = n
    let lo = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_mass_is_constant() {
        let s = sample_source(&Pmf::point(3, 2), 50, Seed(1));
        assert!(s.iter().all(|&x| x == 2));
    }

    #[test]
    fn bernoulli_mean_within_three_sigma() {
        let n = 100_000;
        let s = sample_source(&Pmf::bernoulli(0.3).unwrap(), n, Seed(9));
        let mean = s.iter().map(|&x| x as f64).sum::<f64>() / n as f64;
        let sigma = libm::sqrt(0.3 * 0.7 / n as f64);
        assert!((mean - 0.3).abs() < 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn dsbs_marginals_are_fair() {
        let n = 100_000;
        let j = CondPmf::bsc(0.11).unwrap().joint_with(&Pmf::uniform(2)).unwrap();
        let s = sample_joint(&j, n, Seed(4));
        let sigma = libm::sqrt(0.25 / n as f64);
        for axis in &s {
            let mean = axis.iter().map(|&x| x as f64).sum::<f64>() / n as f64;
            assert!((mean - 0.5).abs() < 3.0 * sigma);
        }
        let flips = s[0].iter().zip(&s[1]).filter(|(a, b)| a != b).count() as f64 / n as f64;
        assert!((flips - 0.11).abs() < 3.0 * libm::sqrt(0.11 * 0.89 / n as f64));
    }

    #[test]
    fn channel_follows_rows() {
        let ch = CondPmf::deterministic(3, |v| (v + 1) % 3, 3);
        assert_eq!(sample_channel(&ch, &[0, 1, 2, 2], Seed(0)), alloc::vec![1, 2, 0, 0]);
    }

    #[test]
    fn wilson_known_values() {
        // k = 0: upper end z^2 / (n + z^2)
        let (lo, hi) = wilson(0, 100, Z95);
        assert!(lo.abs() < 1e-15);
        assert!((hi - Z95 * Z95 / (100.0 + Z95 * Z95)).abs() < 1e-12);
        let (lo, hi) = wilson(50, 100, Z95);
        assert!((lo + hi - 1.0).abs() < 1e-12);
        assert!(lo < 0.5 && hi > 0.5);
    }
}
