//! Brute-force cross-checks behind the `oracle` and `hash-check` commands.
//!
//! Every check compares a closed form or a fast path against exhaustive
//! enumeration on instances small enough to enumerate.

use std::fmt;

use hashprop_core::coset::{ml_code, solve_coset, CosetBudget, ScoreTable};
use hashprop_core::diagnostics::{
    all_vectors, alpha_beta, hash_sum_exhaustive, hash_sum_tensor, resistance_check, saturation_check, return_prob,
    walk_dist_closed, walk_dist_recursive, Arith, BoundCheck, HashBound, ENUMERATION_BUDGET,
};
use hashprop_core::ensemble::{generate_mackay, EnsembleKind, EnsembleParams, ExactEnsemble};
use hashprop_core::types::{enumerate_typical, lemmas, typical_count, Pmf};
use hashprop_core::{FieldSpec, Seed, SparseMatrix, Symbol};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::seq::SliceRandom;
use rand::Rng;

/// Tolerance between the closed-form walk law in floating point and the
/// exact convolution.
pub const WALK_TOL: f64 = 1e-12;

/// Largest raw outcome count `(l(q-1))^(tau n)` enumerated by the weight oracle.
pub const WEIGHT_ORACLE_BUDGET: u128 = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub cases: u64,
    pub failures: u64,
    pub detail: String,
}

impl CheckReport {
    fn new(name: &str) -> Self {
        CheckReport { name: name.into(), cases: 0, failures: 0, detail: String::new() }
    }

    fn record(&mut self, ok: bool) {
        self.cases += 1;
        self.failures += u64::from(!ok);
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.cases > 0
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{tag} {} cases={} failures={}", self.name, self.cases, self.failures)?;
        if !self.detail.is_empty() {
            write!(f, " {}", self.detail)?;
        }
        Ok(())
    }
}

fn gf(q: u32) -> FieldSpec {
    FieldSpec::new(q).expect("small prime")
}

fn ratio(a: u128, b: u128) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

/// Closed-form `p_{A,t}` against the exact frequency with which the
/// enumerated ensemble annihilates each nonzero vector.
pub fn weight_oracle() -> CheckReport {
    let mut rep = CheckReport::new("weight-closed-form-vs-ensemble");
    let mut configs = 0;
    for q in [2u32, 3] {
        for l in 1..=2usize {
            for n in 1..=3usize {
                for tau in [2u32, 4] {
                    let raw = ((l as u128) * (q as u128 - 1)).pow(tau * n as u32);
                    if raw > WEIGHT_ORACLE_BUDGET {
                        continue;
                    }
                    let field = gf(q);
                    let ens = ExactEnsemble::mackay(field, l, n, tau, WEIGHT_ORACLE_BUDGET).expect("within budget");
                    configs += 1;
                    for u in all_vectors(field, n).into_iter().skip(1) {
                        let w = field.weight(&u);
                        let closed = return_prob(q, l, tau, w, Arith::Exact).expect("exact").exact.expect("exact");
                        rep.record(closed == ratio(ens.annihilation_count(&u), ens.total));
                    }
                }
            }
        }
    }
    rep.detail = format!("configs={configs}");
    rep
}

/// Closed-form walk law against the convolution recursion.
pub fn walk_oracle() -> CheckReport {
    let mut rep = CheckReport::new("walk-closed-form-vs-recursion");
    let mut worst = 0.0f64;
    for q in [2u32, 3] {
        for l in 1..=4usize {
            for steps in 0..=8u64 {
                let t = walk_dist_recursive(gf(q), l, steps, ENUMERATION_BUDGET).expect("small");
                for w in 0..=l {
                    let exact = walk_dist_closed(q, l, steps, w, Arith::Exact).expect("exact").exact.expect("exact");
                    let float = walk_dist_closed(q, l, steps, w, Arith::Float).expect("float").value;
                    let rec = t.prob_of_weight(w);
                    let diff = rec.as_ref().and_then(|r| r.to_f64()).map_or(f64::INFINITY, |r| (r - float).abs());
                    worst = worst.max(diff);
                    rep.record(rec.as_ref() == Some(&exact) && diff <= WALK_TOL);
                }
            }
        }
    }
    rep.detail = format!("max_abs_diff={worst:e}");
    rep
}

/// Binary even-weight image and ternary full-rank draws.
pub fn image_oracle(seed: Seed) -> CheckReport {
    let mut rep = CheckReport::new("image-characterization");
    let mut rng = seed.derive(0, "image").rng();
    let field = gf(2);
    for d in 0..100u64 {
        let n = rng.gen_range(4..=12usize);
        let l = rng.gen_range(2..=n.min(6));
        let tau = if d % 2 == 0 { 2 } else { 4 };
        let p = EnsembleParams::new(field, l, n, tau, 0.5).expect("valid");
        let a = generate_mackay(&p, seed.derive(d, "binary-draw")).expect("draw");
        let even = all_vectors(field, n).iter().all(|u| field.weight(&a.matvec(u).expect("len")) % 2 == 0);
        rep.record(even);
    }
    let ternary = gf(3);
    let mut found = 0;
    for l in 1..=4usize {
        let n = l + 3;
        let p = EnsembleParams::new(ternary, l, n, 2, 0.5).expect("valid");
        let hit = (0..100u64).any(|d| {
            let a = generate_mackay(&p, seed.derive(d, "ternary-draw").derive(l as u64, "l")).expect("draw");
            a.rank_and_image().size() == Some(3u128.pow(l as u32))
        });
        found += usize::from(hit);
        rep.record(hit);
    }
    rep.detail = format!("binary_draws=100 ternary_full_rank={found}/4");
    rep
}

struct Tiny {
    ens: ExactEnsemble,
    bound: HashBound,
    label: String,
}

fn tiny_ensembles() -> Vec<Tiny> {
    let mut out = Vec::new();
    let specs: [(u32, usize, usize); 6] = [(2, 1, 2), (2, 2, 2), (2, 2, 3), (2, 1, 3), (3, 1, 2), (3, 2, 2)];
    for (q, l, n) in specs {
        let field = gf(q);
        for xi in [0.25, 0.5, 1.0] {
            let p = EnsembleParams { field, l, n, tau: 2, xi };
            let bound = alpha_beta(EnsembleKind::MacKay, &p, Arith::Exact).expect("exact").bound().expect("exact");
            let ens = ExactEnsemble::mackay(field, l, n, 2, ENUMERATION_BUDGET).expect("enumerable");
            out.push(Tiny { ens, bound, label: format!("mackay q={q} l={l} n={n} xi={xi}") });
        }
        let p = EnsembleParams { field, l, n, tau: 2, xi: 0.5 };
        let bound = alpha_beta(EnsembleKind::Uniform, &p, Arith::Exact).expect("exact").bound().expect("exact");
        let ens = ExactEnsemble::uniform(field, l, n, ENUMERATION_BUDGET).expect("enumerable");
        out.push(Tiny { ens, bound, label: format!("uniform q={q} l={l} n={n}") });
    }
    out
}

fn random_subset(all: &[Vec<Symbol>], rng: &mut impl Rng) -> Vec<Vec<Symbol>> {
    let k = rng.gen_range(1..=all.len());
    all.choose_multiple(rng, k).cloned().collect()
}

struct BoundTally {
    rep: CheckReport,
    worst: f64,
    worst_label: String,
}

impl BoundTally {
    fn new(name: &str) -> Self {
        BoundTally { rep: CheckReport::new(name), worst: f64::INFINITY, worst_label: String::new() }
    }

    fn add(&mut self, c: &BoundCheck, label: &str) {
        self.rep.record(c.holds());
        let m = c.margin();
        if m < self.worst {
            self.worst = m;
            self.worst_label = label.into();
        }
    }

    fn finish(mut self) -> CheckReport {
        self.rep.detail = format!("worst_margin={:.6} at [{}]", self.worst, self.worst_label);
        self.rep
    }
}

/// The collision inequality, the collision-resistance bound and the
/// saturation bound on exhaustively enumerated tiny ensembles, plus the
/// inequality for stacked `[A; B]` and tensor `(A, B)` constructions. The
/// last report checks [`HashBound::tensor_as_stated`], which is expected to
/// fail on some pairs.
pub fn hash_bound_suite(seed: Seed, sets_per_ensemble: usize) -> Vec<CheckReport> {
    let mut rng = seed.derive(0, "hash-check").rng();
    let tiny = tiny_ensembles();
    let mut h4 = BoundTally::new("collision-inequality");
    let mut l1 = BoundTally::new("lemma-collision-resistance");
    let mut l2 = BoundTally::new("lemma-saturation");
    let mut stacked_t = BoundTally::new("stacked-inequality");
    let mut tensor_t = BoundTally::new("tensor-inequality");
    let mut stated_t = BoundTally::new("tensor-inequality-product-beta");
    for t in &tiny {
        let all = all_vectors(t.ens.field, t.ens.n);
        for _ in 0..sets_per_ensemble {
            let a = random_subset(&all, &mut rng);
            let b = random_subset(&all, &mut rng);
            h4.add(&hash_sum_exhaustive(&t.ens, &t.bound, &a, &b), &t.label);
            let u = all.choose(&mut rng).expect("nonempty");
            l1.add(&resistance_check(&t.ens, &t.bound, &a, u), &t.label);
            l2.add(&saturation_check(&t.ens, &t.bound, &b).expect("nonempty"), &t.label);
        }
    }
    // pairs over the same field and block length
    for (i, x) in tiny.iter().enumerate() {
        for y in tiny.iter().skip(i) {
            if x.ens.field != y.ens.field || x.ens.n != y.ens.n || x.ens.total * y.ens.total > 1 << 16 {
                continue;
            }
            let label = format!("{} x {}", x.label, y.label);
            let all = all_vectors(x.ens.field, x.ens.n);
            let stacked = x.ens.stacked(&y.ens);
            let sb = x.bound.stacked(&y.bound);
            let a = random_subset(&all, &mut rng);
            let b = random_subset(&all, &mut rng);
            stacked_t.add(&hash_sum_exhaustive(&stacked, &sb, &a, &b), &label);
            let pairs: Vec<(Vec<Symbol>, Vec<Symbol>)> =
                all.iter().flat_map(|u| all.iter().map(move |v| (u.clone(), v.clone()))).collect();
            let k = rng.gen_range(1..=pairs.len().min(12));
            let pa: Vec<_> = pairs.choose_multiple(&mut rng, k).cloned().collect();
            let pb: Vec<_> = pairs.choose_multiple(&mut rng, k).cloned().collect();
            tensor_t.add(&hash_sum_tensor(&x.ens, &y.ens, &x.bound.tensor(&y.bound), &pa, &pb), &label);
            stated_t.add(&hash_sum_tensor(&x.ens, &y.ens, &x.bound.tensor_as_stated(&y.bound), &pa, &pb), &label);
        }
    }
    vec![h4.finish(), l1.finish(), l2.finish(), stacked_t.finish(), tensor_t.finish(), stated_t.finish()]
}

fn brute_force_ml(a: &SparseMatrix, c: &[Symbol], table: &ScoreTable) -> Option<Vec<Symbol>> {
    let field = a.field();
    let mut best: Option<(f64, Vec<Symbol>)> = None;
    for u in all_vectors(field, a.cols()) {
        if a.matvec(&u).expect("len") != c {
            continue;
        }
        let s = table.log2_score(&u);
        if best.as_ref().map_or(true, |(b, _)| s > *b + 1e-9 * b.abs().max(1.0)) {
            best = Some((s, u));
        }
    }
    best.map(|(_, u)| u)
}

/// ML coset search against scoring every vector of the space.
pub fn ml_oracle(seed: Seed) -> CheckReport {
    let mut rep = CheckReport::new("ml-coset-search-vs-brute-force");
    let mut rng = seed.derive(0, "ml").rng();
    for d in 0..60u64 {
        let q = if d % 3 == 0 { 3 } else { 2 };
        let field = gf(q);
        let n = rng.gen_range(2..=if q == 2 { 8 } else { 5 });
        let l = rng.gen_range(1..=n);
        let tau = if q == 2 { 2 } else { rng.gen_range(1..=3) };
        let p = EnsembleParams::new(field, l, n, tau, 0.5).expect("valid");
        let a = generate_mackay(&p, seed.derive(d, "ml-draw")).expect("draw");
        let u: Vec<Symbol> = (0..n).map(|_| rng.gen_range(0..q) as Symbol).collect();
        let c = a.matvec(&u).expect("len");
        // distinct probabilities keep float ties out of the comparison
        let mut w: Vec<f64> = (0..q).map(|i| 1.0 + i as f64 * 0.37 + rng.gen::<f64>() * 0.1).collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        let table = ScoreTable::iid(&Pmf::new(w).expect("normalized"), n);
        let coset = solve_coset(&[(&a, &c)]).expect("consistent");
        let fast = ml_code(&coset, &table, CosetBudget::default()).ok();
        let slow = brute_force_ml(&a, &c, &table);
        let ok = match (fast, slow) {
            (Some(f), Some(s)) => {
                let (sf, ss) = (table.log2_score(&f), table.log2_score(&s));
                // equal-probability sequences may differ in the last ulp; the
                // search must then return the lexicographically smallest
                a.matvec(&f).expect("len") == c && (sf - ss).abs() <= 1e-9 * ss.abs().max(1.0) && f <= s
            }
            _ => false,
        };
        rep.record(ok);
    }
    rep
}

/// Typical-set counts from type-class combinatorics against enumeration.
pub fn typical_count_oracle() -> CheckReport {
    let mut rep = CheckReport::new("typical-count-vs-enumeration");
    for q in [2usize, 3] {
        for mu in lemmas::panel(q) {
            for n in 1..=if q == 2 { 12 } else { 7 } {
                for g in [0.01, 0.05, 0.125, 0.5] {
                    let count = typical_count(&mu, n, g);
                    let listed = enumerate_typical(&mu, n, g, 1 << 20).expect("budget");
                    rep.record(count == BigUint::from(listed.len()));
                }
            }
        }
    }
    rep
}

/// Everything `oracle` runs.
pub fn oracle_suite(seed: Seed) -> Vec<CheckReport> {
    vec![weight_oracle(), walk_oracle(), image_oracle(seed), ml_oracle(seed), typical_count_oracle()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_formatting() {
        let mut r = CheckReport::new("x");
        assert!(!r.passed());
        r.record(true);
        assert_eq!(r.to_string(), "PASS x cases=1 failures=0");
        r.record(false);
        assert!(r.to_string().starts_with("FAIL"));
    }

    #[test]
    fn walk_and_weight_oracles_pass() {
        assert!(walk_oracle().passed());
        let w = weight_oracle();
        assert!(w.passed(), "{w}");
    }

    #[test]
    fn ml_oracle_passes() {
        let r = ml_oracle(Seed(5));
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn product_beta_misses_pairs_sharing_one_component() {
        let field = FieldSpec::new(2).unwrap();
        let ens = ExactEnsemble::mackay(field, 2, 2, 2, ENUMERATION_BUDGET).unwrap();
        let bound = |xi| {
            let p = EnsembleParams { field, l: 2, n: 2, tau: 2, xi };
            alpha_beta(EnsembleKind::MacKay, &p, Arith::Exact).unwrap().bound().unwrap()
        };
        let (ba, bb) = (bound(0.25), bound(1.0));
        assert_eq!(ba.beta, BigRational::from_integer(0.into()));
        // pairs with v = v' collide whenever A does, which the product form
        // never counts
        let all = all_vectors(field, 2);
        let t: Vec<_> = all.iter().map(|v| (vec![0, 0], v.clone())).collect();
        let t2: Vec<_> = all.iter().map(|v| (vec![1, 0], v.clone())).collect();
        let stated = hash_sum_tensor(&ens, &ens, &ba.tensor_as_stated(&bb), &t, &t2);
        assert_eq!(stated.lhs, BigRational::from_integer(5.into()));
        assert!(!stated.holds());
        assert!(hash_sum_tensor(&ens, &ens, &ba.tensor(&bb), &t, &t2).holds());
    }

    #[test]
    fn sound_product_bounds_hold() {
        let reps = hash_bound_suite(Seed(3), 4);
        for r in &reps[..5] {
            assert!(r.passed(), "{r}");
        }
    }
}
