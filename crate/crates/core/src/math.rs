//! Small numeric helpers shared by the diagnostics and the types toolkit.

use alloc::vec::Vec;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub(crate) fn binomial_big(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

pub(crate) fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

/// Nearest `f64` to a big rational, robust to numerators and denominators far
/// outside the `f64` range.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let neg = r.is_negative();
    let n = r.numer().abs().to_biguint().unwrap_or_default();
    let d = r.denom().to_biguint().unwrap_or_default();
    let shift = n.bits() as i64 - d.bits() as i64;
    // scale so the quotient carries ~64 significant bits
    let (num, den) = if shift < 64 {
        (n << ((64 - shift) as usize), d)
    } else {
        (n, d << ((shift - 64) as usize))
    };
    let q = (num / den).to_f64().unwrap_or(f64::INFINITY);
    let v = q * libm::exp2((shift - 64) as f64);
    if neg {
        -v
    } else {
        v
    }
}

pub(crate) fn big_pow(base: &BigRational, exp: u64) -> BigRational {
    let mut result = BigRational::one();
    let mut b = base.clone();
    let mut e = exp;
    while e > 0 {
        if e & 1 == 1 {
            result *= &b;
        }
        e >>= 1;
        if e > 0 {
            b = &b * &b;
        }
    }
    result
}

/// Sum of signed terms given in the log domain, `Σ sign_i · exp(log_i)`.
///
/// The terms are rescaled by the largest magnitude and accumulated with
/// Neumaier compensation. `cancellation` is `Σ|t_i| / |Σ t_i|`, the factor by
/// which rounding error is amplified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLogSum {
    pub value: f64,
    pub cancellation: f64,
}

impl SignedLogSum {
    pub fn from_terms(terms: &[(bool, f64)]) -> SignedLogSum {
        let max = terms
            .iter()
            .map(|t| t.1)
            .fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return SignedLogSum { value: 0.0, cancellation: 1.0 };
        }
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        let mut abs = 0.0f64;
        let mut scaled: Vec<f64> = terms
            .iter()
            .map(|&(neg, l)| {
                let m = libm::exp(l - max);
                if neg {
                    -m
                } else {
                    m
                }
            })
            .collect();
        // largest magnitudes first keeps the compensation effective
        scaled.sort_by(|a, b| b.abs().partial_cmp(&a.abs()).unwrap_or(core::cmp::Ordering::Equal));
        for x in scaled {
            abs += x.abs();
            let t = sum + x;
            if sum.abs() >= x.abs() {
                comp += (sum - t) + x;
            } else {
                comp += (x - t) + sum;
            }
            sum = t;
        }
        let total = sum + comp;
        let cancellation = if total == 0.0 { f64::INFINITY } else { abs / total.abs() };
        SignedLogSum { value: total * libm::exp(max), cancellation }
    }
}

/// Natural-log binary entropy.
pub fn binary_entropy_nats(theta: f64) -> f64 {
    let term = |p: f64| if p <= 0.0 { 0.0 } else { -p * libm::log(p) };
    term(theta) + term(1.0 - theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    #[test]
    fn binomials() {
        assert_eq!(binomial_big(10, 3), BigUint::from(120u32));
        assert_eq!(binomial_big(60, 30), BigUint::from(118_264_581_564_861_424u64));
        assert_eq!(binomial_big(3, 5), BigUint::from(0u32));
        assert!((ln_binomial(10, 3) - libm::log(120.0)).abs() < 1e-12);
    }

    #[test]
    fn huge_rational_to_float() {
        let big = BigInt::from(3u32).pow(2000u32);
        let r = BigRational::new(big.clone(), big.clone() * BigInt::from(4u32));
        assert_eq!(rational_to_f64(&r), 0.25);
        let r = BigRational::new(BigInt::from(1u32), BigInt::from(3u32));
        assert!((rational_to_f64(&r) - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn signed_sum_cancellation_is_reported() {
        let s = SignedLogSum::from_terms(&[(false, 0.0), (true, libm::log(0.5))]);
        assert!((s.value - 0.5).abs() < 1e-15);
        assert!((s.cancellation - 3.0).abs() < 1e-12);
        let s = SignedLogSum::from_terms(&[(false, 0.0), (true, 0.0)]);
        assert_eq!(s.value, 0.0);
        assert!(s.cancellation.is_infinite());
    }
}
