//! Method of types: distributions, empirical types, typical sets and the
//! `zeta`/`eta`/`lambda` slack functions. All logarithms are base 2.
//!
//! Typical sets use a strict inequality, `T_{U,gamma} = {u : D(nu_u || mu_U) < gamma}`.
//! Conditional divergence weights each row by the empirical frequency of the
//! conditioning symbol, so rows that never occur contribute nothing.

pub mod lemmas;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::gf::Symbol;
use crate::math;

/// Tolerance on the total mass of a float pmf.
pub const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TypesError {
    #[error("probability {0} is negative or not finite")]
    BadProbability(f64),
    #[error("probabilities sum to {0}, not 1")]
    NotNormalized(f64),
    #[error("empty distribution or sequence")]
    Empty,
    #[error("symbol {symbol} outside an alphabet of size {size}")]
    SymbolOutOfRange { symbol: usize, size: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("{required} sequences exceed the enumeration budget {budget}")]
    BudgetExceeded { required: u128, budget: u128 },
}

/// Exact rational for a float written in shortest decimal form, so that `0.11`
/// becomes `11/100` rather than the nearest binary fraction.
pub fn decimal_rational(x: f64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    let s = format!("{}", x);
    let (neg, s) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.as_str()),
    };
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    let digits: String = [int, frac].concat();
    let num: BigInt = digits.parse().ok()?;
    let den = BigInt::from(10u32).pow(frac.len() as u32);
    let r = BigRational::new(num, den);
    Some(if neg { -r } else { r })
}

/// A pmf over `0..len`, with an exact rational mirror when the inputs sum to
/// exactly one.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    p: Vec<f64>,
    exact: Option<Vec<BigRational>>,
}

impl Pmf {
    pub fn new(p: Vec<f64>) -> Result<Pmf, TypesError> {
        if p.is_empty() {
            return Err(TypesError::Empty);
        }
        if let Some(&bad) = p.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(TypesError::BadProbability(bad));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(TypesError::NotNormalized(sum));
        }
        let exact: Option<Vec<BigRational>> = p.iter().map(|&x| decimal_rational(x)).collect();
        let exact = exact.filter(|e| e.iter().fold(BigRational::zero(), |a, b| a + b).is_one());
        Ok(Pmf { p, exact })
    }

    pub fn from_rationals(r: Vec<BigRational>) -> Result<Pmf, TypesError> {
        if r.is_empty() {
            return Err(TypesError::Empty);
        }
        if let Some(bad) = r.iter().find(|x| *x < &BigRational::zero()) {
            return Err(TypesError::BadProbability(math::rational_to_f64(bad)));
        }
        let sum = r.iter().fold(BigRational::zero(), |a, b| a + b);
        if !sum.is_one() {
            return Err(TypesError::NotNormalized(math::rational_to_f64(&sum)));
        }
        let p = r.iter().map(math::rational_to_f64).collect();
        Ok(Pmf { p, exact: Some(r) })
    }

    pub fn uniform(k: usize) -> Pmf {
        let r = BigRational::new(BigInt::one(), BigInt::from(k));
        Pmf::from_rationals(vec![r; k]).expect("uniform is normalized")
    }

    pub fn bernoulli(theta: f64) -> Result<Pmf, TypesError> {
        let t = decimal_rational(theta).ok_or(TypesError::BadProbability(theta))?;
        Pmf::from_rationals(vec![BigRational::one() - &t, t])
    }

    /// All mass on `i`.
    pub fn point(k: usize, i: usize) -> Pmf {
        let r = (0..k)
            .map(|j| if j == i { BigRational::one() } else { BigRational::zero() })
            .collect();
        Pmf::from_rationals(r).expect("point mass is normalized")
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    pub fn exact(&self) -> Option<&[BigRational]> {
        self.exact.as_deref()
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.p[i]
    }

    pub fn entropy(&self) -> f64 {
        entropy(&self.p)
    }

    /// Probability of an i.i.d. sequence.
    pub fn seq_prob(&self, u: &[Symbol]) -> f64 {
        u.iter().map(|&s| self.p[s as usize]).product()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.p.len()).filter(|&i| self.p[i] > 0.0).collect()
    }
}

/// A joint pmf over a product alphabet, row-major (first axis slowest).
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    dims: Vec<usize>,
    pmf: Pmf,
}

impl JointPmf {
    pub fn new(dims: Vec<usize>, pmf: Pmf) -> Result<JointPmf, TypesError> {
        let size: usize = dims.iter().product();
        if size != pmf.len() {
            return Err(TypesError::Shape(format!("dims {:?} need {} entries, got {}", dims, size, pmf.len())));
        }
        Ok(JointPmf { dims, pmf })
    }

    /// Independent product of two pmfs.
    pub fn product(a: &Pmf, b: &Pmf) -> JointPmf {
        let exact = match (a.exact(), b.exact()) {
            (Some(x), Some(y)) => Some(x.iter().flat_map(|p| y.iter().map(move |q| p * q)).collect()),
            _ => None,
        };
        let p = a.probs().iter().flat_map(|&x| b.probs().iter().map(move |&y| x * y)).collect();
        JointPmf { dims: vec![a.len(), b.len()], pmf: Pmf { p, exact } }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn pmf(&self) -> &Pmf {
        &self.pmf
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.dims).fold(0, |acc, (&c, &d)| acc * d + c)
    }

    pub fn coords(&self, mut index: usize) -> Vec<usize> {
        let mut c = vec![0; self.dims.len()];
        for (slot, &d) in c.iter_mut().zip(&self.dims).rev() {
            *slot = index % d;
            index /= d;
        }
        c
    }

    pub fn prob(&self, coords: &[usize]) -> f64 {
        self.pmf.get(self.index(coords))
    }

    fn check_axes(&self, axes: &[usize]) -> Result<(), TypesError> {
        for (i, &a) in axes.iter().enumerate() {
            if a >= self.dims.len() || axes[..i].contains(&a) {
                return Err(TypesError::Shape(format!("bad axis list {:?}", axes)));
            }
        }
        Ok(())
    }

    /// Marginal on `axes`, in the given order.
    pub fn marginal(&self, axes: &[usize]) -> Result<JointPmf, TypesError> {
        self.check_axes(axes)?;
        let dims: Vec<usize> = axes.iter().map(|&a| self.dims[a]).collect();
        let size: usize = dims.iter().product();
        let mut p = vec![0.0; size];
        let mut exact = self.pmf.exact().map(|_| vec![BigRational::zero(); size]);
        let sub = JointPmf { dims: dims.clone(), pmf: Pmf { p: vec![], exact: None } };
        for i in 0..self.pmf.len() {
            let c = self.coords(i);
            let key: Vec<usize> = axes.iter().map(|&a| c[a]).collect();
            let j = sub.index(&key);
            p[j] += self.pmf.get(i);
            if let (Some(e), Some(src)) = (exact.as_mut(), self.pmf.exact()) {
                e[j] += &src[i];
            }
        }
        Ok(JointPmf { dims, pmf: Pmf { p, exact } })
    }

    /// `mu(target | given)`. Rows for zero-probability conditions are uniform.
    pub fn conditional(&self, target: &[usize], given: &[usize]) -> Result<CondPmf, TypesError> {
        let mut all = given.to_vec();
        all.extend_from_slice(target);
        let joint = self.marginal(&all)?;
        let g: usize = given.iter().map(|&a| self.dims[a]).product();
        let t: usize = target.iter().map(|&a| self.dims[a]).product();
        let mut rows = Vec::with_capacity(g);
        for v in 0..g {
            let slice = &joint.pmf.p[v * t..(v + 1) * t];
            let mass: f64 = slice.iter().sum();
            let row = match joint.pmf.exact() {
                Some(e) => {
                    let es = &e[v * t..(v + 1) * t];
                    let m = es.iter().fold(BigRational::zero(), |a, b| a + b);
                    if m.is_zero() {
                        Pmf::uniform(t)
                    } else {
                        Pmf::from_rationals(es.iter().map(|x| x / &m).collect())?
                    }
                }
                None if mass <= 0.0 => Pmf::uniform(t),
                None => {
                    let p: Vec<f64> = slice.iter().map(|x| x / mass).collect();
                    let s: f64 = p.iter().sum();
                    Pmf { p: p.iter().map(|x| x / s).collect(), exact: None }
                }
            };
            rows.push(row);
        }
        Ok(CondPmf { rows })
    }

    pub fn entropy(&self) -> f64 {
        self.pmf.entropy()
    }

    /// `H(target | given)`.
    pub fn cond_entropy(&self, target: &[usize], given: &[usize]) -> Result<f64, TypesError> {
        let mut all = given.to_vec();
        all.extend_from_slice(target);
        let h_all = self.marginal(&all)?.entropy();
        let h_given = if given.is_empty() { 0.0 } else { self.marginal(given)?.entropy() };
        Ok((h_all - h_given).max(0.0))
    }

    /// `I(a; b)`.
    pub fn mutual_information(&self, a: &[usize], b: &[usize]) -> Result<f64, TypesError> {
        let h = self.marginal(a)?.entropy();
        Ok((h - self.cond_entropy(a, b)?).max(0.0))
    }

    /// Flatten to a single-axis pmf over the product alphabet.
    pub fn flat(&self) -> &Pmf {
        &self.pmf
    }
}

/// A row-stochastic table `mu(u | v)`, one row per conditioning symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct CondPmf {
    rows: Vec<Pmf>,
}

impl CondPmf {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<CondPmf, TypesError> {
        if rows.is_empty() {
            return Err(TypesError::Empty);
        }
        let width = rows[0].len();
        let rows = rows
            .into_iter()
            .map(|r| {
                if r.len() != width {
                    return Err(TypesError::LengthMismatch(r.len(), width));
                }
                Pmf::new(r)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CondPmf { rows })
    }

    pub fn from_rows(rows: Vec<Pmf>) -> Result<CondPmf, TypesError> {
        let width = rows.first().ok_or(TypesError::Empty)?.len();
        if let Some(r) = rows.iter().find(|r| r.len() != width) {
            return Err(TypesError::LengthMismatch(r.len(), width));
        }
        Ok(CondPmf { rows })
    }

    /// The deterministic table `u = f(v)`.
    pub fn deterministic(target_size: usize, f: impl Fn(usize) -> usize, given_size: usize) -> CondPmf {
        CondPmf { rows: (0..given_size).map(|v| Pmf::point(target_size, f(v))).collect() }
    }

    /// Binary symmetric channel with crossover `p`.
    pub fn bsc(p: f64) -> Result<CondPmf, TypesError> {
        let a = Pmf::bernoulli(p)?;
        let b = Pmf::from_rationals(a.exact().expect("exact").iter().rev().cloned().collect())?;
        Ok(CondPmf { rows: vec![a, b] })
    }

    pub fn given_size(&self) -> usize {
        self.rows.len()
    }

    pub fn target_size(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, v: usize) -> &Pmf {
        &self.rows[v]
    }

    pub fn rows(&self) -> &[Pmf] {
        &self.rows
    }

    #[inline]
    pub fn prob(&self, u: usize, v: usize) -> f64 {
        self.rows[v].get(u)
    }

    /// Joint `mu(v, u) = mu(v) mu(u|v)` with axes `[given, target]`.
    pub fn joint_with(&self, given: &Pmf) -> Result<JointPmf, TypesError> {
        if given.len() != self.given_size() {
            return Err(TypesError::LengthMismatch(given.len(), self.given_size()));
        }
        let t = self.target_size();
        let p = (0..given.len())
            .flat_map(|v| (0..t).map(move |u| (v, u)))
            .map(|(v, u)| given.get(v) * self.prob(u, v))
            .collect();
        let exact = match (given.exact(), self.rows.iter().map(|r| r.exact()).collect::<Option<Vec<_>>>()) {
            (Some(g), Some(rows)) => Some(
                (0..g.len())
                    .flat_map(|v| (0..t).map(move |u| (v, u)))
                    .map(|(v, u)| &g[v] * &rows[v][u])
                    .collect(),
            ),
            _ => None,
        };
        Ok(JointPmf { dims: vec![given.len(), t], pmf: Pmf { p, exact } })
    }

    /// `prod_i mu(u_i | v_i)`.
    pub fn seq_prob(&self, u: &[Symbol], v: &[Symbol]) -> f64 {
        u.iter().zip(v).map(|(&a, &b)| self.prob(a as usize, b as usize)).product()
    }
}

fn plogp(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        -p * libm::log2(p)
    }
}

/// `H(p)` in bits.
pub fn entropy(p: &[f64]) -> f64 {
    p.iter().map(|&x| plogp(x)).sum()
}

/// `D(p || q)` in bits; `+inf` when `p` puts mass where `q` has none.
pub fn divergence(p: &[f64], q: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            d += a * libm::log2(a / b);
        }
    }
    d.max(0.0)
}

/// `H(q | p) = sum_v p(v) H(q(.|v))`.
pub fn cond_entropy(cond: &CondPmf, given: &[f64]) -> f64 {
    given.iter().zip(cond.rows()).map(|(&w, r)| if w > 0.0 { w * r.entropy() } else { 0.0 }).sum()
}

/// `D(q || q' | p) = sum_v p(v) D(q(.|v) || q'(.|v))`.
pub fn cond_divergence(q: &CondPmf, q2: &CondPmf, given: &[f64]) -> f64 {
    let mut d = 0.0;
    for (v, &w) in given.iter().enumerate() {
        if w > 0.0 {
            d += w * divergence(q.row(v).probs(), q2.row(v).probs());
        }
    }
    d
}

/// Symbol counts `n nu_u` of a sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeVector {
    counts: Vec<u32>,
}

impl TypeVector {
    pub fn from_counts(counts: Vec<u32>) -> TypeVector {
        TypeVector { counts }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn n(&self) -> usize {
        self.counts.iter().map(|&c| c as usize).sum()
    }

    pub fn nu(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    pub fn nu_exact(&self) -> Vec<BigRational> {
        let n = BigInt::from(self.n());
        self.counts.iter().map(|&c| BigRational::new(BigInt::from(c), n.clone())).collect()
    }

    /// Number of nonzero symbols, `sum_{i != 0} t(i)`.
    pub fn weight(&self) -> usize {
        self.counts.iter().skip(1).map(|&c| c as usize).sum()
    }

    /// Size of the type class, `n! / prod t(i)!`.
    pub fn class_size(&self) -> BigUint {
        multinomial(&self.counts)
    }

    /// `-(1/n) log mu(u)` for any `u` of this type.
    pub fn neg_log_prob_rate(&self, mu: &Pmf) -> f64 {
        let mut s = 0.0;
        for (i, &c) in self.counts.iter().enumerate() {
            if c > 0 {
                let p = mu.get(i);
                if p <= 0.0 {
                    return f64::INFINITY;
                }
                s -= c as f64 * libm::log2(p);
            }
        }
        s / self.n() as f64
    }
}

pub(crate) fn multinomial(counts: &[u32]) -> BigUint {
    let mut acc = BigUint::one();
    let mut total = 0u64;
    for &c in counts {
        total += c as u64;
        acc *= math::binomial_big(total, c as u64);
    }
    acc
}

fn ln_multinomial(counts: &[u32]) -> f64 {
    let n: u32 = counts.iter().sum();
    let mut s = libm::lgamma(n as f64 + 1.0);
    for &c in counts {
        s -= libm::lgamma(c as f64 + 1.0);
    }
    s
}

pub fn empirical(u: &[Symbol], alphabet: usize) -> Result<TypeVector, TypesError> {
    if u.is_empty() {
        return Err(TypesError::Empty);
    }
    let mut counts = vec![0u32; alphabet];
    for &s in u {
        let s = s as usize;
        if s >= alphabet {
            return Err(TypesError::SymbolOutOfRange { symbol: s, size: alphabet });
        }
        counts[s] += 1;
    }
    Ok(TypeVector { counts })
}

/// Joint counts of `(u_i, v_i)`, organized by the conditioning symbol `v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CondType {
    /// `joint[v][u]`.
    joint: Vec<Vec<u32>>,
    n: usize,
}

impl CondType {
    pub fn from_joint(joint: Vec<Vec<u32>>) -> CondType {
        let n = joint.iter().flatten().map(|&c| c as usize).sum();
        CondType { joint, n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn joint_counts(&self) -> &[Vec<u32>] {
        &self.joint
    }

    pub fn nu_v(&self) -> Vec<f64> {
        self.joint.iter().map(|r| r.iter().sum::<u32>() as f64 / self.n as f64).collect()
    }

    /// `nu_{u|v}(.|v)`, or `None` when `v` does not occur.
    pub fn row(&self, v: usize) -> Option<Vec<f64>> {
        let m: u32 = self.joint[v].iter().sum();
        (m > 0).then(|| self.joint[v].iter().map(|&c| c as f64 / m as f64).collect())
    }

    /// `D(nu_{u|v} || mu | nu_v)`.
    pub fn divergence_from(&self, mu: &CondPmf) -> f64 {
        let mut d = 0.0;
        for (v, r) in self.joint.iter().enumerate() {
            let m: u32 = r.iter().sum();
            if m == 0 {
                continue;
            }
            let row: Vec<f64> = r.iter().map(|&c| c as f64 / m as f64).collect();
            d += m as f64 / self.n as f64 * divergence(&row, mu.row(v).probs());
        }
        d
    }

    /// `H(nu_{u|v} | nu_v)`.
    pub fn cond_entropy(&self) -> f64 {
        let mut h = 0.0;
        for r in &self.joint {
            let m: u32 = r.iter().sum();
            if m > 0 {
                let row: Vec<f64> = r.iter().map(|&c| c as f64 / m as f64).collect();
                h += m as f64 / self.n as f64 * entropy(&row);
            }
        }
        h
    }

    /// The joint type over the product alphabet, index `u * |V| + v`.
    pub fn joint_type(&self) -> TypeVector {
        let nv = self.joint.len();
        let nu = self.joint.first().map_or(0, |r| r.len());
        let mut counts = vec![0u32; nu * nv];
        for (v, r) in self.joint.iter().enumerate() {
            for (u, &c) in r.iter().enumerate() {
                counts[u * nv + v] = c;
            }
        }
        TypeVector { counts }
    }
}

pub fn cond_empirical(u: &[Symbol], v: &[Symbol], u_size: usize, v_size: usize) -> Result<CondType, TypesError> {
    if u.len() != v.len() {
        return Err(TypesError::LengthMismatch(u.len(), v.len()));
    }
    if u.is_empty() {
        return Err(TypesError::Empty);
    }
    let mut joint = vec![vec![0u32; u_size]; v_size];
    for (&a, &b) in u.iter().zip(v) {
        let (a, b) = (a as usize, b as usize);
        if a >= u_size {
            return Err(TypesError::SymbolOutOfRange { symbol: a, size: u_size });
        }
        if b >= v_size {
            return Err(TypesError::SymbolOutOfRange { symbol: b, size: v_size });
        }
        joint[b][a] += 1;
    }
    Ok(CondType { joint, n: u.len() })
}

pub fn is_typical(u: &[Symbol], mu: &Pmf, gamma: f64) -> bool {
    match empirical(u, mu.len()) {
        Ok(t) => divergence(&t.nu(), mu.probs()) < gamma,
        Err(_) => false,
    }
}

pub fn is_cond_typical(u: &[Symbol], v: &[Symbol], mu: &CondPmf, gamma: f64) -> bool {
    match cond_empirical(u, v, mu.target_size(), mu.given_size()) {
        Ok(t) => t.divergence_from(mu) < gamma,
        Err(_) => false,
    }
}

/// `lambda_U = |U| log(n+1) / n`.
pub fn lambda(alphabet: usize, n: usize) -> f64 {
    alphabet as f64 * libm::log2((n + 1) as f64) / n as f64
}

fn continuity(gamma: f64, size: f64) -> f64 {
    let s = libm::sqrt(2.0 * gamma);
    -s * libm::log2(s / size)
}

/// `zeta_U(gamma) = gamma - sqrt(2 gamma) log(sqrt(2 gamma) / |U|)`.
pub fn zeta(alphabet: usize, gamma: f64) -> f64 {
    gamma + continuity(gamma, alphabet as f64)
}

/// `zeta_{U|V}(gamma' | gamma)`.
pub fn zeta_cond(u: usize, v: usize, gamma_p: f64, gamma: f64) -> f64 {
    gamma_p + continuity(gamma_p, (u * v) as f64) + libm::sqrt(2.0 * gamma) * libm::log2(u as f64)
}

/// `eta_U(gamma) = -sqrt(2 gamma) log(sqrt(2 gamma) / |U|) + lambda_U`.
pub fn eta(alphabet: usize, gamma: f64, n: usize) -> f64 {
    continuity(gamma, alphabet as f64) + lambda(alphabet, n)
}

/// `eta_{U|V}(gamma' | gamma)`.
pub fn eta_cond(u: usize, v: usize, gamma_p: f64, gamma: f64, n: usize) -> f64 {
    continuity(gamma_p, (u * v) as f64) + libm::sqrt(2.0 * gamma) * libm::log2(u as f64) + lambda(u * v, n)
}

/// All types of length `n` over `k` symbols, in lexicographic order of counts.
pub fn compositions(n: u32, k: usize) -> Vec<Vec<u32>> {
    fn rec(left: u32, slots: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if slots == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(left - c, slots - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k > 0 {
        rec(n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

/// Every sequence in `T_{U,gamma}`, in lexicographic order.
pub fn enumerate_typical(mu: &Pmf, n: usize, gamma: f64, budget: u128) -> Result<Vec<Vec<Symbol>>, TypesError> {
    let q = mu.len() as u128;
    let required = q.checked_pow(n as u32).unwrap_or(u128::MAX);
    if required > budget {
        return Err(TypesError::BudgetExceeded { required, budget });
    }
    let mut out = Vec::new();
    let mut u = vec![0 as Symbol; n];
    for mut x in 0..required {
        for s in u.iter_mut().rev() {
            *s = (x % q) as Symbol;
            x /= q;
        }
        if is_typical(&u, mu, gamma) {
            out.push(u.clone());
        }
    }
    Ok(out)
}

/// `|T_{U,gamma}|` by summing type-class sizes.
pub fn typical_count(mu: &Pmf, n: usize, gamma: f64) -> BigUint {
    compositions(n as u32, mu.len())
        .into_iter()
        .map(TypeVector::from_counts)
        .filter(|t| divergence(&t.nu(), mu.probs()) < gamma)
        .map(|t| t.class_size())
        .fold(BigUint::zero(), |a, b| a + b)
}

/// `mu_U(T_{U,gamma}^c)` by summing over atypical type classes.
pub fn atypical_mass(mu: &Pmf, n: usize, gamma: f64) -> f64 {
    let mut total = 0.0;
    for c in compositions(n as u32, mu.len()) {
        let t = TypeVector::from_counts(c);
        if divergence(&t.nu(), mu.probs()) < gamma {
            continue;
        }
        let r = t.neg_log_prob_rate(mu);
        if r.is_finite() {
            total += libm::exp(ln_multinomial(t.counts()) - n as f64 * r * core::f64::consts::LN_2);
        }
    }
    total
}
