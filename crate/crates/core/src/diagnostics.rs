//! Collision diagnostics of matrix ensembles.
//!
//! For the sparse ensemble, the probability that a fixed vector of weight `w`
//! is annihilated is the return probability of a random walk on GF(q)^l that
//! takes `w * tau` uniform nonzero single-coordinate steps:
//!
//! ```text
//! p_w = q^-l * sum_{k=0..l} (1 - qk/((q-1)l))^(w tau) * C(l,k) * (q-1)^k
//! ```
//!
//! From the per-weight table follow the spectrum `S_w = C(n,w)(q-1)^w p_w` and
//! the hash-property constants
//!
//! ```text
//! alpha = |Im| * max_{w > xi l} p_w        beta = sum_{1 <= w <= xi l} S_w
//! ```
//!
//! where `|Im|` is `q^l / 2` for GF(2) with even column weight and `q^l`
//! otherwise. Sums alternate in sign, so every quantity is computed with exact
//! rationals when the sizes allow it and in the log domain with compensated
//! summation otherwise.
//!
//! The second half of the module checks the collision-sum inequality and the
//! collision-resistance and saturation bounds against exhaustively enumerated
//! ensembles.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::ensemble::{EnsembleKind, EnsembleParams, ExactEnsemble};
use crate::gf::{FieldSpec, Symbol};
use crate::math::{self, SignedLogSum};

/// Largest `l` handled exactly.
pub const EXACT_MAX_L: usize = 64;
/// Largest exponent `w * tau` handled exactly.
pub const EXACT_MAX_EXPONENT: u64 = 4096;
/// Cancellation factor above which a float result is flagged.
pub const CANCELLATION_WARN: f64 = 1e6;
/// Default cap on raw outcomes for exhaustive ensembles.
pub const ENUMERATION_BUDGET: u128 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagError {
    #[error("exact arithmetic needs l <= {EXACT_MAX_L} and w*tau <= {EXACT_MAX_EXPONENT}; use float mode")]
    ExactTooLarge,
    #[error("weight must be at least 1")]
    ZeroWeight,
    #[error("row count must be at least 1")]
    NoRows,
    #[error("weight {w} exceeds length {n}")]
    WeightTooLarge { w: usize, n: usize },
    #[error("{0}")]
    Domain(&'static str),
    #[error("walk state space q^l = {required} exceeds budget {budget}")]
    BudgetExceeded { required: u128, budget: u128 },
    #[error("outcome counts overflow 128 bits")]
    Overflow,
    #[error("the set T must be nonempty")]
    EmptySet,
}

/// Arithmetic mode for the closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Arith {
    /// Exact when within the size limits, float otherwise.
    #[default]
    Auto,
    Exact,
    Float,
}

/// A probability-like value with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Value {
    pub value: f64,
    pub exact: Option<BigRational>,
    /// `sum |terms| / |sum|`; 1 for exact values.
    pub cancellation: f64,
}

impl Value {
    fn exact(r: BigRational) -> Value {
        Value { value: math::rational_to_f64(&r), exact: Some(r), cancellation: 1.0 }
    }

    fn float(s: SignedLogSum) -> Value {
        Value { value: s.value.max(0.0), exact: None, cancellation: s.cancellation }
    }

    /// True when float cancellation makes the value untrustworthy.
    pub fn cancellation_warning(&self) -> bool {
        self.exact.is_none() && self.cancellation > CANCELLATION_WARN
    }
}

fn ratio(n: u128, d: u128) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn ln_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return libm::log(x.to_f64().unwrap_or(f64::INFINITY));
    }
    let shift = bits - 64;
    let top = (x >> shift as usize).to_f64().unwrap_or(0.0);
    libm::log(top) + shift as f64 * core::f64::consts::LN_2
}

fn exact_allowed(l: usize, exponent: u64) -> bool {
    l <= EXACT_MAX_L && exponent <= EXACT_MAX_EXPONENT
}

/// Krawtchouk value `K_k(w) = sum_j C(w,j) C(l-w,k-j) (-1)^j (q-1)^(k-j)`.
fn krawtchouk(q: u32, l: usize, k: usize, w: usize) -> BigInt {
    let mut acc = BigInt::zero();
    for j in 0..=k.min(w) {
        if k - j > l - w {
            continue;
        }
        let mut term = BigInt::from(math::binomial_big(w as u64, j as u64))
            * BigInt::from(math::binomial_big((l - w) as u64, (k - j) as u64))
            * BigInt::from(q - 1).pow((k - j) as u32);
        if j % 2 == 1 {
            term = -term;
        }
        acc += term;
    }
    acc
}

/// `sum_k (d - qk)^m K_k(w_c) / (q^l d^m)` with `d = (q-1)l`: the probability
/// that an `m`-step nonzero walk sits at a fixed vector of weight `w_c`.
fn walk_value(q: u32, l: usize, m: u64, w_c: usize, mode: Arith) -> Result<Value, DiagError> {
    if l == 0 {
        return Err(DiagError::NoRows);
    }
    let use_exact = match mode {
        Arith::Exact if !exact_allowed(l, m) => return Err(DiagError::ExactTooLarge),
        Arith::Exact => true,
        Arith::Auto => exact_allowed(l, m),
        Arith::Float => false,
    };
    let d = (q as i64 - 1) * l as i64;
    if use_exact {
        let mut num = BigInt::zero();
        for k in 0..=l {
            let base = BigInt::from(d - q as i64 * k as i64);
            num += base.pow(m as u32) * krawtchouk(q, l, k, w_c);
        }
        let den = BigInt::from(q).pow(l as u32) * BigInt::from(d).pow(m as u32);
        return Ok(Value::exact(BigRational::new(num, den)));
    }
    let lnq = libm::log(q as f64);
    let lnd = libm::log(d as f64);
    let mut terms = Vec::with_capacity(l + 1);
    for k in 0..=l {
        let base = d - q as i64 * k as i64;
        let kr = krawtchouk(q, l, k, w_c);
        if kr.is_zero() || (base == 0 && m > 0) {
            continue;
        }
        let neg = (base < 0 && m % 2 == 1) != kr.is_negative();
        let ln_base = if m == 0 { 0.0 } else { m as f64 * (libm::log(base.unsigned_abs() as f64) - lnd) };
        terms.push((neg, ln_base + ln_biguint(kr.magnitude()) - l as f64 * lnq));
    }
    Ok(Value::float(SignedLogSum::from_terms(&terms)))
}

/// Probability that a sparse-ensemble matrix annihilates a fixed weight-`w` vector.
pub fn return_prob(q: u32, l: usize, tau: u32, w: usize, mode: Arith) -> Result<Value, DiagError> {
    if w == 0 {
        return Err(DiagError::ZeroWeight);
    }
    walk_value(q, l, w as u64 * tau as u64, 0, mode)
}

/// Closed-form `P_steps(c)` for any `c` of weight `w_c`.
pub fn walk_dist_closed(q: u32, l: usize, steps: u64, w_c: usize, mode: Arith) -> Result<Value, DiagError> {
    if w_c > l {
        return Err(DiagError::WeightTooLarge { w: w_c, n: l });
    }
    walk_value(q, l, steps, w_c, mode)
}

/// The walk distribution over all `q^l` states, by repeated convolution with
/// the one-step law. Counts are over the `((q-1)l)^steps` step sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkTable {
    pub field: FieldSpec,
    pub l: usize,
    pub steps: u64,
    pub counts: Vec<u128>,
    pub total: u128,
}

pub fn walk_dist_recursive(field: FieldSpec, l: usize, steps: u64, budget: u128) -> Result<WalkTable, DiagError> {
    if l == 0 {
        return Err(DiagError::NoRows);
    }
    let q = field.q() as usize;
    let states = (q as u128).checked_pow(l as u32).unwrap_or(u128::MAX);
    if states > budget {
        return Err(DiagError::BudgetExceeded { required: states, budget });
    }
    let per_step = ((q - 1) * l) as u128;
    let total = per_step.checked_pow(steps as u32).ok_or(DiagError::Overflow)?;
    let states = states as usize;
    let stride: Vec<usize> = (0..l).map(|r| q.pow(r as u32)).collect();
    let mut cur = vec![0u128; states];
    cur[0] = 1;
    for _ in 0..steps {
        let mut next = vec![0u128; states];
        for (s, &c) in cur.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for &st in &stride {
                let digit = (s / st) % q;
                for a in 1..q {
                    let nd = (digit + a) % q;
                    let t = s - digit * st + nd * st;
                    next[t] += c;
                }
            }
        }
        cur = next;
    }
    Ok(WalkTable { field, l, steps, counts: cur, total })
}

impl WalkTable {
    fn index(&self, c: &[Symbol]) -> usize {
        let q = self.field.q() as usize;
        c.iter().rev().fold(0, |acc, &s| acc * q + s as usize)
    }

    pub fn state(&self, index: usize) -> Vec<Symbol> {
        let q = self.field.q() as usize;
        let mut x = index;
        (0..self.l)
            .map(|_| {
                let s = (x % q) as Symbol;
                x /= q;
                s
            })
            .collect()
    }

    pub fn prob(&self, c: &[Symbol]) -> BigRational {
        ratio(self.counts[self.index(c)], self.total)
    }

    /// Probability of one vector of weight `w`, or `None` if the states of that
    /// weight disagree (they never should).
    pub fn prob_of_weight(&self, w: usize) -> Option<BigRational> {
        let mut seen: Option<u128> = None;
        for (i, &c) in self.counts.iter().enumerate() {
            if self.field.weight(&self.state(i)) == w {
                match seen {
                    None => seen = Some(c),
                    Some(s) if s != c => return None,
                    _ => {}
                }
            }
        }
        seen.map(|c| ratio(c, self.total))
    }

    /// Total mass on each weight class `0..=l`.
    pub fn mass_by_weight(&self) -> Vec<BigRational> {
        let mut acc = vec![0u128; self.l + 1];
        for (i, &c) in self.counts.iter().enumerate() {
            acc[self.field.weight(&self.state(i))] += c;
        }
        acc.into_iter().map(|c| ratio(c, self.total)).collect()
    }

    pub fn total_mass(&self) -> u128 {
        self.counts.iter().sum()
    }
}

/// `|C_w| = C(n,w) (q-1)^w`, the number of length-`n` vectors of weight `w`.
pub fn class_size(q: u32, n: usize, w: usize) -> BigUint {
    math::binomial_big(n as u64, w as u64) * BigUint::from(q - 1).pow(w as u32)
}

fn ln_class_size(q: u32, n: usize, w: usize) -> f64 {
    math::ln_binomial(n as u64, w as u64) + w as f64 * libm::log((q - 1) as f64)
}

/// Average number of weight-`w` kernel vectors, `|C_w| p_w`.
pub fn spectrum(q: u32, n: usize, l: usize, tau: u32, w: usize, mode: Arith) -> Result<Value, DiagError> {
    if w > n {
        return Err(DiagError::WeightTooLarge { w, n });
    }
    let p = return_prob(q, l, tau, w, mode)?;
    Ok(scale_by_class(q, n, w, &p))
}

fn scale_by_class(q: u32, n: usize, w: usize, p: &Value) -> Value {
    match &p.exact {
        Some(r) => Value::exact(r * BigRational::from(BigInt::from(class_size(q, n, w)))),
        None => Value {
            value: if p.value == 0.0 { 0.0 } else { libm::exp(ln_class_size(q, n, w) + libm::log(p.value)) },
            exact: None,
            cancellation: p.cancellation,
        },
    }
}

/// `|Im|` of the ensemble as a whole: the union of all images.
pub fn image_size(kind: EnsembleKind, field: FieldSpec, l: usize, tau: u32) -> BigUint {
    let full = BigUint::from(field.q()).pow(l as u32);
    match kind {
        EnsembleKind::MacKay if field.is_binary() && tau % 2 == 0 && l >= 1 => full >> 1usize,
        _ => full,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightRow {
    pub w: usize,
    pub p: Value,
    pub class_size: BigUint,
    pub spectrum: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HashDiagnostics {
    pub kind: EnsembleKind,
    pub params: EnsembleParams,
    pub alpha: Value,
    pub beta: Value,
    pub im_size: BigUint,
    /// `|Im| / q^l`.
    pub im_ratio: f64,
    pub per_weight: Vec<WeightRow>,
}

impl HashDiagnostics {
    pub fn is_exact(&self) -> bool {
        self.alpha.exact.is_some() && self.beta.exact.is_some()
    }

    pub fn cancellation_warning(&self) -> bool {
        self.per_weight.iter().any(|r| r.p.cancellation_warning())
    }

    /// Exact constants for the bound checks.
    pub fn bound(&self) -> Option<HashBound> {
        Some(HashBound {
            alpha: self.alpha.exact.clone()?,
            beta: self.beta.exact.clone()?,
            im_size: self.im_size.clone(),
            cutoff: (1..=self.params.n).take_while(|&w| w as f64 <= self.params.xi * self.params.l as f64).count(),
        })
    }
}

/// `alpha`, `beta` and the per-weight table for `kind` at `p`.
pub fn alpha_beta(kind: EnsembleKind, p: &EnsembleParams, mode: Arith) -> Result<HashDiagnostics, DiagError> {
    let EnsembleParams { field, l, n, tau, xi } = *p;
    if l == 0 {
        return Err(DiagError::NoRows);
    }
    let q = field.q();
    let im_size = image_size(kind, field, l, tau);
    let full = BigUint::from(q).pow(l as u32);
    let exact = match mode {
        Arith::Exact => true,
        Arith::Float => false,
        Arith::Auto => match kind {
            EnsembleKind::MacKay => exact_allowed(l, n as u64 * tau as u64),
            EnsembleKind::Uniform => l <= EXACT_MAX_L,
        },
    };
    let mut per_weight = Vec::with_capacity(n);
    for w in 1..=n {
        let pw = match kind {
            EnsembleKind::MacKay => return_prob(q, l, tau, w, if exact { Arith::Exact } else { Arith::Float })?,
            EnsembleKind::Uniform if exact => {
                Value::exact(BigRational::new(BigInt::one(), BigInt::from(full.clone())))
            }
            EnsembleKind::Uniform => Value {
                value: libm::exp(-(l as f64) * libm::log(q as f64)),
                exact: None,
                cancellation: 1.0,
            },
        };
        let spectrum = scale_by_class(q, n, w, &pw);
        per_weight.push(WeightRow { w, p: pw, class_size: class_size(q, n, w), spectrum });
    }
    let cutoff = xi * l as f64;
    let low = |w: usize| (w as f64) <= cutoff;
    let (alpha, beta) = if exact {
        let im = BigRational::from(BigInt::from(im_size.clone()));
        let max = per_weight
            .iter()
            .filter(|r| !low(r.w))
            .map(|r| r.p.exact.clone().expect("exact"))
            .max();
        let alpha = max.map_or_else(BigRational::zero, |m| m * im);
        let beta = per_weight
            .iter()
            .filter(|r| low(r.w))
            .map(|r| r.spectrum.exact.clone().expect("exact"))
            .fold(BigRational::zero(), |a, b| a + b);
        (Value::exact(alpha), Value::exact(beta))
    } else {
        let max = per_weight
            .iter()
            .filter(|r| !low(r.w))
            .map(|r| r.p.value)
            .fold(f64::NEG_INFINITY, f64::max);
        let alpha = if max == f64::NEG_INFINITY || max == 0.0 {
            0.0
        } else {
            libm::exp(ln_biguint(&im_size) + libm::log(max))
        };
        let beta: f64 = per_weight.iter().filter(|r| low(r.w)).map(|r| r.spectrum.value).sum();
        let c = per_weight.iter().map(|r| r.p.cancellation).fold(1.0, f64::max);
        (
            Value { value: alpha, exact: None, cancellation: c },
            Value { value: beta, exact: None, cancellation: c },
        )
    };
    let im_ratio = if kind == EnsembleKind::MacKay && field.is_binary() && tau % 2 == 0 { 0.5 } else { 1.0 };
    Ok(HashDiagnostics { kind, params: *p, alpha, beta, im_size, im_ratio, per_weight })
}

/// `h(xi R)/R + xi ln(q-1) < 1/3`, with `h` the natural-log binary entropy.
pub fn xi_feasible(q: u32, rate: f64, xi: f64) -> Result<bool, DiagError> {
    if !(xi > 0.0) {
        return Err(DiagError::Domain("xi must be positive"));
    }
    if !(rate > 0.0) {
        return Err(DiagError::Domain("rate must be positive"));
    }
    if xi * rate > 1.0 {
        return Err(DiagError::Domain("xi * rate must not exceed 1"));
    }
    let lhs = math::binary_entropy_nats(xi * rate) / rate + xi * libm::log((q - 1) as f64);
    Ok(lhs < 1.0 / 3.0)
}

/// Smallest grid value in `{0.005, 0.010, ..., 0.5}` that is feasible.
pub fn default_xi(q: u32, rate: f64) -> Option<f64> {
    (1..=100)
        .map(|i| i as f64 * 0.005)
        .find(|&xi| xi * rate <= 1.0 && xi_feasible(q, rate, xi).unwrap_or(false))
}

/// Exact hash-property constants of an ensemble.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashBound {
    pub alpha: BigRational,
    pub beta: BigRational,
    pub im_size: BigUint,
    /// Largest weight counted in `beta`; `alpha` covers the weights above.
    pub cutoff: usize,
}

impl HashBound {
    pub fn new(alpha: BigRational, beta: BigRational, im_size: BigUint, cutoff: usize) -> Self {
        HashBound { alpha, beta, im_size, cutoff }
    }

    fn im(&self) -> BigRational {
        BigRational::from(BigInt::from(self.im_size.clone()))
    }

    /// Constants for `u -> (Au, Bu)` with independent `A`, `B`.
    ///
    /// `beta = min(beta_A, beta_B)` needs both ensembles to split weights at
    /// the same cutoff. Otherwise a weight can be low for one and high for the
    /// other, and only `beta_A + beta_B` is guaranteed.
    pub fn stacked(&self, other: &HashBound) -> HashBound {
        let beta = if self.cutoff == other.cutoff {
            self.beta.clone().min(other.beta.clone())
        } else {
            &self.beta + &other.beta
        };
        HashBound {
            alpha: &self.alpha * &other.alpha,
            beta,
            im_size: &self.im_size * &other.im_size,
            cutoff: self.cutoff.max(other.cutoff),
        }
    }

    /// Constants for `(u, v) -> (Au, Bv)` with independent `A`, `B`, using
    /// `beta' = alpha_A beta_B / |Im A| + alpha_B beta_A / |Im B| + beta_A beta_B`.
    ///
    /// This form ignores pairs where exactly one of the two differences is
    /// zero, and can fail: with `beta_A = 0`, pairs `(u, v), (u, v')` still
    /// collide with probability `P(B (v - v') = 0)`. See [`HashBound::tensor`].
    pub fn tensor_as_stated(&self, other: &HashBound) -> HashBound {
        let beta = &self.alpha * &other.beta / self.im()
            + &other.alpha * &self.beta / other.im()
            + &self.beta * &other.beta;
        HashBound {
            alpha: &self.alpha * &other.alpha,
            beta,
            im_size: &self.im_size * &other.im_size,
            cutoff: self.cutoff.max(other.cutoff),
        }
    }

    /// Sound constants for `(u, v) -> (Au, Bv)`.
    ///
    /// Write `P(Ad = 0) <= a + g_A(d)` with `a = alpha_A / |Im A|`,
    /// `g_A(0) = 1`, `g_A(d) = p_{A,t(d)}` on low-weight types and 0 above.
    /// Expanding the product over pairs gives
    /// `alpha = alpha_A alpha_B + alpha_A |Im B| + alpha_B |Im A|` and
    /// `beta = beta_A + beta_B + beta_A beta_B`.
    pub fn tensor(&self, other: &HashBound) -> HashBound {
        let alpha = &self.alpha * &other.alpha + &self.alpha * other.im() + &other.alpha * self.im();
        let beta = &self.beta + &other.beta + &self.beta * &other.beta;
        HashBound { alpha, beta, im_size: &self.im_size * &other.im_size, cutoff: self.cutoff.max(other.cutoff) }
    }
}

/// An exact left-hand side against its bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundCheck {
    pub lhs: BigRational,
    pub rhs: BigRational,
}

impl BoundCheck {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }

    pub fn margin(&self) -> f64 {
        math::rational_to_f64(&(&self.rhs - &self.lhs))
    }
}

fn dedup(t: &[Vec<Symbol>]) -> Vec<Vec<Symbol>> {
    let mut v = t.to_vec();
    v.sort();
    v.dedup();
    v
}

fn difference(field: FieldSpec, u: &[Symbol], v: &[Symbol]) -> Vec<Symbol> {
    u.iter().zip(v).map(|(&a, &b)| field.sub(a, b)).collect()
}

/// Caches `P(A d = 0)` per difference vector.
struct KernelCache<'a> {
    ens: &'a ExactEnsemble,
    memo: BTreeMap<Vec<Symbol>, u128>,
}

impl<'a> KernelCache<'a> {
    fn new(ens: &'a ExactEnsemble) -> Self {
        KernelCache { ens, memo: BTreeMap::new() }
    }

    fn count(&mut self, d: Vec<Symbol>) -> u128 {
        if let Some(&c) = self.memo.get(&d) {
            return c;
        }
        let c = self.ens.annihilation_count(&d);
        self.memo.insert(d, c);
        c
    }
}

fn rhs_h4(bound: &HashBound, t: usize, t2: usize, common: usize) -> BigRational {
    let big = |x: usize| BigRational::from(BigInt::from(x));
    big(common) + big(t) * big(t2) * &bound.alpha / bound.im() + big(t.min(t2)) * &bound.beta
}

/// Exact `sum_{u in T, u' in T'} P(Au = Au')` against
/// `|T & T'| + |T||T'| alpha / |Im| + min(|T|,|T'|) beta`.
pub fn hash_sum_exhaustive(ens: &ExactEnsemble, bound: &HashBound, t: &[Vec<Symbol>], t2: &[Vec<Symbol>]) -> BoundCheck {
    let (t, t2) = (dedup(t), dedup(t2));
    let mut cache = KernelCache::new(ens);
    let mut num = 0u128;
    for u in &t {
        for v in &t2 {
            num += cache.count(difference(ens.field, u, v));
        }
    }
    let common = t.iter().filter(|u| t2.binary_search(u).is_ok()).count();
    BoundCheck { lhs: ratio(num, ens.total), rhs: rhs_h4(bound, t.len(), t2.len(), common) }
}

/// The same inequality for `(u, v) -> (Au, Bv)`.
pub fn hash_sum_tensor(
    ea: &ExactEnsemble,
    eb: &ExactEnsemble,
    bound: &HashBound,
    t: &[(Vec<Symbol>, Vec<Symbol>)],
    t2: &[(Vec<Symbol>, Vec<Symbol>)],
) -> BoundCheck {
    let dd = |s: &[(Vec<Symbol>, Vec<Symbol>)]| {
        let mut v = s.to_vec();
        v.sort();
        v.dedup();
        v
    };
    let (t, t2) = (dd(t), dd(t2));
    let (mut ca, mut cb) = (KernelCache::new(ea), KernelCache::new(eb));
    let mut lhs = BigRational::zero();
    for (u, v) in &t {
        for (u2, v2) in &t2 {
            let a = ca.count(difference(ea.field, u, u2));
            let b = cb.count(difference(eb.field, v, v2));
            lhs += ratio(a, ea.total) * ratio(b, eb.total);
        }
    }
    let common = t.iter().filter(|p| t2.binary_search(p).is_ok()).count();
    BoundCheck { lhs, rhs: rhs_h4(bound, t.len(), t2.len(), common) }
}

/// `P(exists u' in G \ {u} with Au' = Au)` against `|G| alpha / |Im| + beta`.
pub fn resistance_check(ens: &ExactEnsemble, bound: &HashBound, g: &[Vec<Symbol>], u: &[Symbol]) -> BoundCheck {
    let g = dedup(g);
    let others: Vec<Vec<Symbol>> = g
        .iter()
        .filter(|v| v.as_slice() != u)
        .map(|v| difference(ens.field, v, u))
        .collect();
    let hit: u128 = ens
        .outcomes
        .iter()
        .filter(|(a, _)| {
            others
                .iter()
                .any(|d| a.matvec(d).expect("length").iter().all(|&x| x == 0))
        })
        .map(|(_, c)| c)
        .sum();
    let big = |x: usize| BigRational::from(BigInt::from(x));
    let rhs = big(g.len()) * &bound.alpha / bound.im() + &bound.beta;
    BoundCheck { lhs: ratio(hit, ens.total), rhs }
}

/// `P(T & C_A(c) = {})` with `c` uniform on the ensemble image, against
/// `alpha - 1 + |Im| (beta + 1) / |T|`.
pub fn saturation_check(ens: &ExactEnsemble, bound: &HashBound, t: &[Vec<Symbol>]) -> Result<BoundCheck, DiagError> {
    let t = dedup(t);
    if t.is_empty() {
        return Err(DiagError::EmptySet);
    }
    // For each A, the bins reached by T are the distinct values of Au; every
    // other c in the ensemble image gives an empty intersection.
    let mut miss = BigRational::zero();
    let im = bound.im();
    for (a, c) in &ens.outcomes {
        let mut hit: Vec<Vec<Symbol>> = t.iter().map(|u| a.matvec(u).expect("length")).collect();
        hit.sort();
        hit.dedup();
        let empty = &im - BigRational::from(BigInt::from(hit.len()));
        miss += empty * ratio(*c, ens.total);
    }
    let lhs = miss / &im;
    let big = |x: usize| BigRational::from(BigInt::from(x));
    let rhs = &bound.alpha - BigRational::one() + &im * (&bound.beta + BigRational::one()) / big(t.len());
    Ok(BoundCheck { lhs, rhs })
}

/// Both collision and saturation checks for one `(G, u)` and `T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LemmaReport {
    pub resistance: BoundCheck,
    pub saturation: BoundCheck,
}

impl LemmaReport {
    pub fn holds(&self) -> bool {
        self.resistance.holds() && self.saturation.holds()
    }
}

pub fn lemma_bounds_check(
    ens: &ExactEnsemble,
    bound: &HashBound,
    g: &[Vec<Symbol>],
    u: &[Symbol],
    t: &[Vec<Symbol>],
) -> Result<LemmaReport, DiagError> {
    Ok(LemmaReport { resistance: resistance_check(ens, bound, g, u), saturation: saturation_check(ens, bound, t)? })
}

/// All vectors of GF(q)^n in lexicographic order (first coordinate slowest).
pub fn all_vectors(field: FieldSpec, n: usize) -> Vec<Vec<Symbol>> {
    let q = field.q() as usize;
    let total = q.pow(n as u32);
    (0..total)
        .map(|mut x| {
            let mut v = vec![0 as Symbol; n];
            for s in v.iter_mut().rev() {
                *s = (x % q) as Symbol;
                x /= q;
            }
            v
        })
        .collect()
}
