//! Cosets `C_A(c) = {u : Au = c}` and exhaustive coding over them.
//!
//! [`solve_coset`] reduces a stack of constraints `A_i u = c_i` to a particular
//! solution plus a null-space basis; [`CosetDescription`] then enumerates the
//! `q^(n - rank)` members with an odometer over the basis coefficients.
//!
//! Maximum-likelihood coding scores members with a [`ScoreTable`]: per
//! position, a probability for each symbol. Scores are compared in the log
//! domain, and near-ties are settled exactly by comparing products of the
//! underlying rationals. Remaining ties go to the lexicographically smallest
//! candidate, so the winner does not depend on enumeration order or on how a
//! search is split into ranges.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::ops::Range;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::diagnostics::HashBound;
use crate::ensemble::ExactEnsemble;
use crate::gf::{FieldSpec, Symbol};
use crate::matrix::{linalg, SparseMatrix};
use crate::types::{CondPmf, Pmf};

/// Log-domain gap below which two scores are compared exactly.
const NEAR_TIE: f64 = 1e-9;
/// Divergence gap treated as a tie by minimum-divergence coding.
const DIVERGENCE_TIE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CosetError {
    #[error("the coset is empty")]
    Empty,
    #[error("coset has {required} elements, budget is {budget}; reduce n - rank")]
    BudgetExceeded { required: u128, budget: u128 },
    #[error("constraint has {got} columns, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("target has length {got}, matrix has {expected} rows")]
    TargetLength { expected: usize, got: usize },
    #[error("constraints mix different fields")]
    FieldMismatch,
    #[error("no constraints given")]
    NoConstraints,
    #[error("score table has {got} positions, expected {expected}")]
    ScoreShape { expected: usize, got: usize },
}

/// Cap on the number of coset members a search may visit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CosetBudget(pub u128);

impl Default for CosetBudget {
    fn default() -> Self {
        CosetBudget(1 << 24)
    }
}

impl CosetBudget {
    pub fn check(self, required: u128) -> Result<(), CosetError> {
        if required > self.0 {
            return Err(CosetError::BudgetExceeded { required, budget: self.0 });
        }
        Ok(())
    }
}

/// The solution set of a linear system: empty, or `u0 + span(basis)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CosetDescription {
    field: FieldSpec,
    n: usize,
    particular: Option<Vec<Symbol>>,
    basis: Vec<Vec<Symbol>>,
}

/// Solve `A_i u = c_i` for all `i` at once.
pub fn solve_coset(constraints: &[(&SparseMatrix, &[Symbol])]) -> Result<CosetDescription, CosetError> {
    let (first, _) = constraints.first().ok_or(CosetError::NoConstraints)?;
    let field = first.field();
    let n = first.cols();
    let mut rows = Vec::new();
    for (a, c) in constraints {
        if a.field() != field {
            return Err(CosetError::FieldMismatch);
        }
        if a.cols() != n {
            return Err(CosetError::Dimension { expected: n, got: a.cols() });
        }
        if c.len() != a.rows() {
            return Err(CosetError::TargetLength { expected: a.rows(), got: c.len() });
        }
        for (mut row, &t) in a.to_dense_rows().into_iter().zip(c.iter()) {
            row.push(t);
            rows.push(row);
        }
    }
    let (rows, pivots) = linalg::eliminate(field, rows, n);
    // a zero row with a nonzero right-hand side means no solution
    if rows[pivots.len()..].iter().any(|r| r[n] != 0) {
        return Ok(CosetDescription { field, n, particular: None, basis: Vec::new() });
    }
    let mut u0 = vec![0 as Symbol; n];
    for (row, &p) in rows.iter().zip(&pivots) {
        u0[p] = row[n];
    }
    let mut is_pivot = vec![false; n];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let basis = (0..n)
        .filter(|&f| !is_pivot[f])
        .map(|f| {
            let mut b = vec![0 as Symbol; n];
            b[f] = 1;
            for (row, &p) in rows.iter().zip(&pivots) {
                b[p] = field.neg(row[f]);
            }
            b
        })
        .collect();
    Ok(CosetDescription { field, n, particular: Some(u0), basis })
}

impl CosetDescription {
    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.particular.is_none()
    }

    pub fn particular(&self) -> Option<&[Symbol]> {
        self.particular.as_deref()
    }

    pub fn basis(&self) -> &[Vec<Symbol>] {
        &self.basis
    }

    /// `q^(n - rank)`, or 0 when empty; saturates at `u128::MAX`.
    pub fn size(&self) -> u128 {
        if self.is_empty() {
            return 0;
        }
        (self.field.q() as u128).checked_pow(self.basis.len() as u32).unwrap_or(u128::MAX)
    }

    /// The member with coefficient index `index` (base-q digits, first basis
    /// vector least significant).
    pub fn element(&self, index: u128) -> Option<Vec<Symbol>> {
        let mut u = self.particular.clone()?;
        let q = self.field.q() as u128;
        let mut x = index;
        for b in &self.basis {
            let d = (x % q) as Symbol;
            x /= q;
            self.field.axpy(&mut u, d, b);
        }
        Some(u)
    }

    /// Visit the members with indices in `range`, in index order.
    pub fn for_each_in(&self, range: Range<u128>, mut f: impl FnMut(&[Symbol])) {
        let end = range.end.min(self.size());
        if range.start >= end {
            return;
        }
        let q = self.field.q();
        let mut digits: Vec<u32> = {
            let mut x = range.start;
            self.basis
                .iter()
                .map(|_| {
                    let d = (x % q as u128) as u32;
                    x /= q as u128;
                    d
                })
                .collect()
        };
        let mut u = self.element(range.start).expect("nonempty");
        let mut idx = range.start;
        loop {
            f(&u);
            idx += 1;
            if idx >= end {
                break;
            }
            // odometer step; a digit wrapping from q-1 to 0 also adds its
            // basis vector once more, since q * b = 0
            for (d, b) in digits.iter_mut().zip(&self.basis) {
                self.field.axpy(&mut u, 1, b);
                *d += 1;
                if *d < q {
                    break;
                }
                *d = 0;
            }
        }
    }

    pub fn for_each(&self, f: impl FnMut(&[Symbol])) {
        self.for_each_in(0..self.size(), f)
    }

    /// All members, in enumeration order.
    pub fn collect(&self, budget: CosetBudget) -> Result<Vec<Vec<Symbol>>, CosetError> {
        budget.check(self.size())?;
        let mut out = Vec::with_capacity(self.size() as usize);
        self.for_each(|u| out.push(u.to_vec()));
        Ok(out)
    }
}

/// Per-position symbol probabilities with exact mirrors for tie detection.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    /// `class[i][s]`: class id of symbol `s` at position `i`.
    class: Vec<Vec<u32>>,
    /// `log2` of each class value (`-inf` for zero).
    log2: Vec<f64>,
    /// Exact class values, when every input was exact.
    exact: Option<Vec<BigRational>>,
}

impl ScoreTable {
    /// Build from per-position pmfs over a common alphabet.
    pub fn from_positions(positions: &[&Pmf]) -> ScoreTable {
        let all_exact = positions.iter().all(|p| p.exact().is_some());
        let mut ids_exact: BTreeMap<BigRational, u32> = BTreeMap::new();
        let mut ids_float: BTreeMap<u64, u32> = BTreeMap::new();
        let mut log2 = Vec::new();
        let mut exact = Vec::new();
        let mut class = Vec::with_capacity(positions.len());
        for p in positions {
            let row = (0..p.len())
                .map(|s| {
                    let next = log2.len() as u32;
                    let id = if all_exact {
                        let e = p.exact().expect("checked")[s].clone();
                        *ids_exact.entry(e.clone()).or_insert_with(|| {
                            exact.push(e);
                            log2.push(libm::log2(p.get(s)));
                            next
                        })
                    } else {
                        *ids_float.entry(p.get(s).to_bits()).or_insert_with(|| {
                            log2.push(libm::log2(p.get(s)));
                            next
                        })
                    };
                    id
                })
                .collect();
            class.push(row);
        }
        ScoreTable { class, log2, exact: all_exact.then_some(exact) }
    }

    /// Every position scored by the same pmf.
    pub fn iid(pmf: &Pmf, n: usize) -> ScoreTable {
        Self::from_positions(&vec![pmf; n])
    }

    /// Position `i` scored by `mu(. | context_i)`.
    pub fn conditional(cond: &CondPmf, context: &[Symbol]) -> ScoreTable {
        let rows: Vec<&Pmf> = context.iter().map(|&v| cond.row(v as usize)).collect();
        Self::from_positions(&rows)
    }

    pub fn len(&self) -> usize {
        self.class.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class.is_empty()
    }

    pub fn alphabet(&self) -> usize {
        self.class.first().map_or(0, |r| r.len())
    }

    /// `log2` of the candidate's probability.
    pub fn log2_score(&self, s: &[Symbol]) -> f64 {
        s.iter().zip(&self.class).map(|(&x, row)| self.log2[row[x as usize] as usize]).sum()
    }

    fn counts(&self, s: &[Symbol]) -> Vec<u32> {
        let mut c = vec![0u32; self.log2.len()];
        for (&x, row) in s.iter().zip(&self.class) {
            c[row[x as usize] as usize] += 1;
        }
        c
    }

    /// Compare two candidates' probabilities. `Greater` means `a` is more likely.
    pub fn compare_prob(&self, a: &[Symbol], la: f64, b: &[Symbol], lb: f64) -> Ordering {
        let (za, zb) = (la == f64::NEG_INFINITY, lb == f64::NEG_INFINITY);
        match (za, zb) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        let scale = 1f64.max(la.abs()).max(lb.abs());
        if (la - lb).abs() > NEAR_TIE * scale {
            return la.partial_cmp(&lb).unwrap_or(Ordering::Equal);
        }
        let (ca, cb) = (self.counts(a), self.counts(b));
        if ca == cb {
            return Ordering::Equal;
        }
        let Some(exact) = &self.exact else {
            return la.partial_cmp(&lb).unwrap_or(Ordering::Equal);
        };
        // compare prod p^ca against prod p^cb after cancelling common factors
        let (mut num, mut den) = (BigRational::one(), BigRational::one());
        for (k, (&x, &y)) in ca.iter().zip(&cb).enumerate() {
            if x > y {
                num *= crate::math::big_pow(&exact[k], (x - y) as u64);
            } else if y > x {
                den *= crate::math::big_pow(&exact[k], (y - x) as u64);
            }
        }
        num.cmp(&den)
    }

    /// Total order for maximum-likelihood search: higher probability first,
    /// then the lexicographically smaller key. `Less` means `a` wins.
    pub fn rank(&self, a: &Scored, b: &Scored) -> Ordering {
        match self.compare_prob(&a.symbols, a.log2, &b.symbols, b.log2) {
            Ordering::Greater => Ordering::Less,
            Ordering::Less => Ordering::Greater,
            Ordering::Equal => a.key.cmp(&b.key),
        }
    }

    /// The better of two candidates under [`ScoreTable::rank`].
    pub fn pick(&self, a: Scored, b: Scored) -> Scored {
        if self.rank(&b, &a) == Ordering::Less {
            b
        } else {
            a
        }
    }

    fn class_cmp(&self, a: u32, b: u32) -> Ordering {
        match &self.exact {
            Some(e) => e[a as usize].cmp(&e[b as usize]),
            None => self.log2[a as usize].partial_cmp(&self.log2[b as usize]).unwrap_or(Ordering::Equal),
        }
    }

    /// Maximizer over all of `alphabet^n`: the product factorizes, so each
    /// position takes its most likely symbol, smallest on ties.
    pub fn argmax_free(&self) -> Vec<Symbol> {
        self.class
            .iter()
            .map(|row| {
                let mut best = 0;
                for s in 1..row.len() {
                    if self.class_cmp(row[s], row[best]) == Ordering::Greater {
                        best = s;
                    }
                }
                best as Symbol
            })
            .collect()
    }
}

/// A scored candidate: `key` is what the caller returns and breaks ties on,
/// `symbols` is what the score table reads.
#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub key: Vec<Symbol>,
    pub symbols: Vec<Symbol>,
    pub log2: f64,
}

impl Scored {
    pub fn is_zero_prob(&self) -> bool {
        self.log2 == f64::NEG_INFINITY
    }
}

fn check_table(coset: &CosetDescription, table: &ScoreTable) -> Result<(), CosetError> {
    if table.len() != coset.n() {
        return Err(CosetError::ScoreShape { expected: coset.n(), got: table.len() });
    }
    Ok(())
}

/// Best member among indices `range` of `coset`.
pub fn ml_search_range(coset: &CosetDescription, table: &ScoreTable, range: Range<u128>) -> Option<Scored> {
    let mut best: Option<Scored> = None;
    coset.for_each_in(range, |u| {
        let l = table.log2_score(u);
        if let Some(b) = &best {
            // quick reject on a clear float gap
            let scale = 1f64.max(l.abs()).max(b.log2.abs());
            if l < b.log2 - NEAR_TIE * scale || (l == f64::NEG_INFINITY && !b.is_zero_prob()) {
                return;
            }
        }
        let cand = Scored { key: u.to_vec(), symbols: u.to_vec(), log2: l };
        best = Some(match best.take() {
            None => cand,
            Some(b) => table.pick(b, cand),
        });
    });
    best
}

/// `argmax_{u in coset} mu(u)`, ties to the lexicographically smallest `u`.
pub fn ml_code(coset: &CosetDescription, table: &ScoreTable, budget: CosetBudget) -> Result<Vec<Symbol>, CosetError> {
    ml_code_scored(coset, table, budget).map(|s| s.key)
}

pub fn ml_code_scored(coset: &CosetDescription, table: &ScoreTable, budget: CosetBudget) -> Result<Scored, CosetError> {
    if coset.is_empty() {
        return Err(CosetError::Empty);
    }
    check_table(coset, table)?;
    budget.check(coset.size())?;
    Ok(ml_search_range(coset, table, 0..coset.size()).expect("nonempty coset"))
}

/// Joint search over `cx x cy` scored by a table over pairs `x * |Y| + y`.
/// Index `i` of the product is `(i / |cy|, i % |cy|)`.
pub fn ml_product_range(
    cx: &CosetDescription,
    cy: &CosetDescription,
    table: &ScoreTable,
    y_size: usize,
    range: Range<u128>,
) -> Option<Scored> {
    let sy = cy.size();
    if sy == 0 || cx.is_empty() {
        return None;
    }
    let ys: Vec<Vec<Symbol>> = {
        let mut v = Vec::new();
        cy.for_each(|y| v.push(y.to_vec()));
        v
    };
    let first_x = range.start / sy;
    let last_x = (range.end.min(cx.size() * sy) + sy - 1) / sy;
    let mut best: Option<Scored> = None;
    let mut xi = first_x;
    cx.for_each_in(first_x..last_x, |x| {
        let lo = if xi == first_x { (range.start % sy) as usize } else { 0 };
        let hi = if (xi + 1) * sy > range.end { (range.end - xi * sy) as usize } else { sy as usize };
        for y in &ys[lo..hi] {
            let sym: Vec<Symbol> = x.iter().zip(y).map(|(&a, &b)| (a as usize * y_size + b as usize) as Symbol).collect();
            let l = table.log2_score(&sym);
            if let Some(b) = &best {
                let scale = 1f64.max(l.abs()).max(b.log2.abs());
                if l < b.log2 - NEAR_TIE * scale || (l == f64::NEG_INFINITY && !b.is_zero_prob()) {
                    continue;
                }
            }
            let mut key = x.to_vec();
            key.extend_from_slice(y);
            let cand = Scored { key, symbols: sym, log2: l };
            best = Some(match best.take() {
                None => cand,
                Some(b) => table.pick(b, cand),
            });
        }
        xi += 1;
    });
    best
}

/// `argmax_{(x, y) in cx x cy} mu_XY(x, y)`, ties to the smallest `(x, y)`.
pub fn ml_code_product(
    cx: &CosetDescription,
    cy: &CosetDescription,
    table: &ScoreTable,
    y_size: usize,
    budget: CosetBudget,
) -> Result<(Vec<Symbol>, Vec<Symbol>), CosetError> {
    if cx.is_empty() || cy.is_empty() {
        return Err(CosetError::Empty);
    }
    if table.len() != cx.n() || cx.n() != cy.n() {
        return Err(CosetError::ScoreShape { expected: cx.n(), got: table.len() });
    }
    let total = cx.size().checked_mul(cy.size()).unwrap_or(u128::MAX);
    budget.check(total)?;
    let best = ml_product_range(cx, cy, table, y_size, 0..total).expect("nonempty");
    let n = cx.n();
    Ok((best.key[..n].to_vec(), best.key[n..].to_vec()))
}

/// `argmin_{u in coset} D(nu_{u|v} || mu_{U|V} | nu_v)`, ties to the smallest
/// `u`. Candidates with the same joint type with `v` tie exactly; otherwise
/// divergences within `1e-12` are treated as equal.
pub fn md_code(
    coset: &CosetDescription,
    context: &[Symbol],
    mu: &CondPmf,
    budget: CosetBudget,
) -> Result<Vec<Symbol>, CosetError> {
    if coset.is_empty() {
        return Err(CosetError::Empty);
    }
    if context.len() != coset.n() {
        return Err(CosetError::ScoreShape { expected: coset.n(), got: context.len() });
    }
    budget.check(coset.size())?;
    let mut best: Option<(f64, Vec<Symbol>)> = None;
    coset.for_each(|u| {
        let d = crate::types::cond_empirical(u, context, mu.target_size(), mu.given_size())
            .map(|t| t.divergence_from(mu))
            .unwrap_or(f64::INFINITY);
        let better = match &best {
            None => true,
            Some((bd, bu)) => {
                if (d - bd).abs() <= DIVERGENCE_TIE || (d.is_infinite() && bd.is_infinite()) {
                    u < bu.as_slice()
                } else {
                    d < *bd
                }
            }
        };
        if better {
            best = Some((d, u.to_vec()));
        }
    });
    Ok(best.expect("nonempty").1)
}

/// Outcome of the joint-typical coding check for one context `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTypicalCheck {
    /// Exact `P_{A,c}(g_A(c|v) not in T(v))`.
    pub lhs: BigRational,
    pub rhs: f64,
    pub t_size: usize,
    pub epsilon: f64,
}

impl JointTypicalCheck {
    pub fn holds(&self) -> bool {
        crate::math::rational_to_f64(&self.lhs) <= self.rhs + 1e-12
    }
}

/// Check the ML coding bound on an enumerated ensemble.
///
/// With `l` fixed by the ensemble, `epsilon = H(U|V) - l log|U| / n`. The set
/// `T(v)` collects, in decreasing order of `mu(u|v)`, the sequences with
/// `mu(u|v) <= 2^{-n(H(U|V) - 2 epsilon)}`, stopping before the first
/// probability level that leaves the conditionally typical set at `2 epsilon`.
/// `c` is uniform on the ensemble image `|Im|`. Returns `None` when
/// `epsilon <= 0` or `T(v)` is empty.
pub fn joint_typical_check(
    ens: &ExactEnsemble,
    bound: &HashBound,
    cond: &CondPmf,
    h_cond: f64,
    v: &[Symbol],
) -> Option<JointTypicalCheck> {
    let field = ens.field;
    let n = ens.n;
    let q = field.q() as usize;
    let eps = h_cond - ens.l as f64 * libm::log2(q as f64) / n as f64;
    if eps <= 0.0 {
        return None;
    }
    let all = crate::diagnostics::all_vectors(field, n);
    let table = ScoreTable::conditional(cond, v);
    let threshold = -(n as f64) * (h_cond - 2.0 * eps);
    let mut candidates: Vec<(f64, &Vec<Symbol>)> = all
        .iter()
        .map(|u| (table.log2_score(u), u))
        .filter(|(l, _)| *l <= threshold + 1e-12 && *l > f64::NEG_INFINITY)
        .collect();
    candidates.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal).then(a.1.cmp(b.1)));
    let typical = |u: &[Symbol]| crate::types::is_cond_typical(u, v, cond, 2.0 * eps);
    let mut t_set: Vec<Vec<Symbol>> = Vec::new();
    let mut i = 0;
    while i < candidates.len() {
        // a whole probability level enters together
        let mut j = i;
        while j < candidates.len() && (candidates[j].0 - candidates[i].0).abs() <= 1e-12 {
            j += 1;
        }
        if !candidates[i..j].iter().all(|(_, u)| typical(u)) {
            break;
        }
        t_set.extend(candidates[i..j].iter().map(|(_, u)| (*u).clone()));
        i = j;
    }
    if t_set.is_empty() {
        return None;
    }
    t_set.sort();
    let im = bound.im_size.to_u128()?;
    let mut miss = BigRational::zero();
    for (a, count) in &ens.outcomes {
        // winner per reachable syndrome
        let mut winners: BTreeMap<Vec<Symbol>, Scored> = BTreeMap::new();
        for u in &all {
            let c = a.matvec(u).expect("length");
            let cand = Scored { key: u.clone(), symbols: u.clone(), log2: table.log2_score(u) };
            match winners.remove(&c) {
                None => {
                    winners.insert(c, cand);
                }
                Some(w) => {
                    winners.insert(c, table.pick(w, cand));
                }
            }
        }
        let hits = winners.values().filter(|w| t_set.binary_search(&w.key).is_ok()).count() as u128;
        let p = BigRational::new(BigInt::from(*count), BigInt::from(ens.total));
        miss += p * BigRational::new(BigInt::from(im - hits), BigInt::from(im));
    }
    let alpha = crate::math::rational_to_f64(&bound.alpha);
    let beta = crate::math::rational_to_f64(&bound.beta);
    let imf = im as f64;
    let full = libm::pow(q as f64, ens.l as f64);
    let rhs = alpha - 1.0 + imf * (beta + 1.0) / t_set.len() as f64 + libm::exp2(-(n as f64) * eps) * full / imf;
    Some(JointTypicalCheck { lhs: miss, rhs, t_size: t_set.len(), epsilon: eps })
}
