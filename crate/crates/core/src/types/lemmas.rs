//! Exhaustive checks of the standard method-of-types facts.
//!
//! Each suite sweeps every block length `1..=n_max` and a fixed panel of
//! distributions. Apart from the probability identity, which is also checked
//! sequence by sequence, the predicates depend on a sequence only through its
//! type, so sweeping all types covers all sequences.
//!
//! The AEP and set-size suites use `gamma <= 1/8`; both rest on an entropy
//! continuity bound that needs `sqrt(2 gamma) <= 1/2`.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::ToPrimitive;

use super::{compositions, divergence, entropy, CondType, JointPmf, Pmf, TypeVector};
use crate::gf::Symbol;

/// Slack allowed for floating-point evaluation of identities and bounds.
pub const LEMMA_TOL: f64 = 1e-12;

/// Divergence thresholds swept by the unrestricted suites.
pub const GAMMAS: [f64; 6] = [0.01, 0.05, 0.1, 0.125, 0.3, 1.0];
/// Thresholds for the suites that need `gamma <= 1/8`.
pub const SMALL_GAMMAS: [f64; 4] = [0.01, 0.05, 0.1, 0.125];

/// Largest `alphabet^n` checked sequence by sequence.
const SEQUENCE_BUDGET: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaOutcome {
    pub name: &'static str,
    pub cases: u64,
    pub failures: u64,
    /// Smallest `bound - value` seen; negative means a violation.
    pub worst_margin: f64,
}

impl LemmaOutcome {
    fn new(name: &'static str) -> Self {
        LemmaOutcome { name, cases: 0, failures: 0, worst_margin: f64::INFINITY }
    }

    fn record(&mut self, margin: f64) {
        self.cases += 1;
        if margin < -LEMMA_TOL {
            self.failures += 1;
        }
        if margin < self.worst_margin {
            self.worst_margin = margin;
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.cases > 0
    }
}

/// Single-letter distributions exercised for an alphabet size.
pub fn panel(alphabet: usize) -> Vec<Pmf> {
    let raw: Vec<Vec<f64>> = match alphabet {
        2 => vec![vec![0.89, 0.11], vec![0.7, 0.3], vec![1.0, 0.0]],
        3 => vec![vec![0.5, 0.3, 0.2], vec![0.8, 0.15, 0.05], vec![0.6, 0.4, 0.0]],
        _ => vec![],
    };
    let mut out: Vec<Pmf> = raw.into_iter().map(|p| Pmf::new(p).expect("panel pmf")).collect();
    out.push(Pmf::uniform(alphabet));
    out
}

/// Joint distributions on `U x V` (both of size `alphabet`), row-major.
pub fn joint_panel(alphabet: usize) -> Vec<JointPmf> {
    let raw: Vec<Vec<f64>> = match alphabet {
        2 => vec![vec![0.445, 0.055, 0.055, 0.445], vec![0.4, 0.1, 0.2, 0.3]],
        3 => vec![
            vec![0.3, 0.05, 0.05, 0.05, 0.2, 0.05, 0.05, 0.05, 0.2],
            vec![0.1, 0.2, 0.0, 0.15, 0.05, 0.1, 0.0, 0.3, 0.1],
        ],
        _ => vec![],
    };
    raw.into_iter()
        .map(|p| JointPmf::new(vec![alphabet, alphabet], Pmf::new(p).expect("panel pmf")).expect("shape"))
        .collect()
}

fn types_of(n: usize, k: usize) -> impl Iterator<Item = TypeVector> {
    compositions(n as u32, k).into_iter().map(TypeVector::from_counts)
}

fn cond_type_from_joint(t: &TypeVector, alphabet: usize) -> CondType {
    // joint index is u * |V| + v
    let mut joint = vec![vec![0u32; alphabet]; alphabet];
    for (i, &c) in t.counts().iter().enumerate() {
        joint[i % alphabet][i / alphabet] = c;
    }
    CondType::from_joint(joint)
}

/// `-(1/n) log mu(u) = H(nu_u) + D(nu_u || mu)`, and its conditional form.
pub fn probability_identity(alphabet: usize, n_max: usize) -> LemmaOutcome {
    let mut out = LemmaOutcome::new("probability-identity");
    for mu in panel(alphabet).iter().filter(|m| m.probs().iter().all(|&p| p > 0.0)) {
        for n in 1..=n_max {
            let total = alphabet.checked_pow(n as u32).unwrap_or(usize::MAX);
            if total <= SEQUENCE_BUDGET {
                let mut u = vec![0 as Symbol; n];
                for mut x in 0..total {
                    for s in u.iter_mut() {
                        *s = (x % alphabet) as Symbol;
                        x /= alphabet;
                    }
                    let lhs = -libm::log2(mu.seq_prob(&u)) / n as f64;
                    let nu = super::empirical(&u, alphabet).expect("in range").nu();
                    let rhs = entropy(&nu) + divergence(&nu, mu.probs());
                    out.record(LEMMA_TOL * lhs.max(1.0) - (lhs - rhs).abs());
                }
            } else {
                for t in types_of(n, alphabet) {
                    let nu = t.nu();
                    let lhs = t.neg_log_prob_rate(mu);
                    out.record(LEMMA_TOL * lhs.max(1.0) - (lhs - entropy(&nu) - divergence(&nu, mu.probs())).abs());
                }
            }
        }
    }
    for joint in joint_panel(alphabet).iter().filter(|j| j.flat().probs().iter().all(|&p| p > 0.0)) {
        let cond = joint.conditional(&[0], &[1]).expect("axes");
        for n in 1..=n_max {
            for t in types_of(n, alphabet * alphabet) {
                let ct = cond_type_from_joint(&t, alphabet);
                let mut lhs = 0.0;
                for (v, row) in ct.joint_counts().iter().enumerate() {
                    for (u, &c) in row.iter().enumerate() {
                        lhs -= c as f64 * libm::log2(cond.prob(u, v));
                    }
                }
                lhs /= n as f64;
                let rhs = ct.cond_entropy() + ct.divergence_from(&cond);
                out.record(LEMMA_TOL * lhs.max(1.0) - (lhs - rhs).abs());
            }
        }
    }
    out
}

/// `v` typical at `gamma` and `u` conditionally typical at `gamma'` imply
/// `(u, v)` typical at `gamma + gamma'`; joint typicality implies marginal
/// typicality.
pub fn chain_typicality(alphabet: usize, n_max: usize) -> LemmaOutcome {
    let mut out = LemmaOutcome::new("chain-typicality");
    for joint in joint_panel(alphabet) {
        let mu_u = joint.marginal(&[0]).expect("axis");
        let mu_v = joint.marginal(&[1]).expect("axis");
        let cond = joint.conditional(&[0], &[1]).expect("axes");
        for n in 1..=n_max {
            for t in types_of(n, alphabet * alphabet) {
                let ct = cond_type_from_joint(&t, alphabet);
                let d_uv = divergence(&t.nu(), joint.flat().probs());
                let d_v = divergence(&ct.nu_v(), mu_v.flat().probs());
                let d_c = ct.divergence_from(&cond);
                let nu_u: Vec<f64> = (0..alphabet)
                    .map(|u| ct.joint_counts().iter().map(|r| r[u]).sum::<u32>() as f64 / n as f64)
                    .collect();
                let d_u = divergence(&nu_u, mu_u.flat().probs());
                for &g in &GAMMAS {
                    for &gp in &GAMMAS {
                        if d_v < g && d_c < gp {
                            out.record(g + gp - d_uv);
                        }
                    }
                    if d_uv < g {
                        out.record(g - d_u);
                        out.record(g - d_v);
                    }
                }
            }
        }
    }
    out
}

/// Typical sequences have every letter frequency within `sqrt(2 gamma)` and
/// never use letters outside the support.
pub fn type_deviation(alphabet: usize, n_max: usize) -> LemmaOutcome {
    let mut out = LemmaOutcome::new("type-deviation");
    for mu in panel(alphabet) {
        for n in 1..=n_max {
            for t in types_of(n, alphabet) {
                let nu = t.nu();
                let d = divergence(&nu, mu.probs());
                for &g in &GAMMAS {
                    if d < g {
                        let dev = nu.iter().zip(mu.probs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                        out.record(libm::sqrt(2.0 * g) - dev);
                        let off_support = nu.iter().zip(mu.probs()).any(|(&a, &b)| b == 0.0 && a > 0.0);
                        out.record(if off_support { -1.0 } else { 0.0 });
                    }
                }
            }
        }
    }
    out
}

/// `| -(1/n) log mu(u) - H(U) | <= zeta_U(gamma)` on `T_{U,gamma}`.
pub fn aep(alphabet: usize, n_max: usize) -> LemmaOutcome {
    let mut out = LemmaOutcome::new("aep");
    for mu in panel(alphabet) {
        let h = mu.entropy();
        for n in 1..=n_max {
            for t in types_of(n, alphabet) {
                let d = divergence(&t.nu(), mu.probs());
                let rate = t.neg_log_prob_rate(&mu);
                for &g in &SMALL_GAMMAS {
                    if d < g {
                        out.record(super::zeta(alphabet, g) - (rate - h).abs());
                    }
                }
            }
        }
    }
    out
}

/// `mu(T_{U,gamma}^c) <= 2^{-n (gamma - lambda_U)}`.
pub fn atypical_mass(alphabet: usize, n_max: usize) -> LemmaOutcome {
    let mut out = LemmaOutcome::new("atypical-mass");
    for mu in panel(alphabet) {
        for n in 1..=n_max {
            for &g in &GAMMAS {
                let tail = super::atypical_mass(&mu, n, g);
                let bound = libm::exp2(-(n as f64) * (g - super::lambda(alphabet, n)));
                out.record((bound - tail) / bound.max(1.0));
            }
        }
    }
    out
}

/// `| (1/n) log |T_{U,gamma}| - H(U) | <= eta_U(gamma)` whenever the set is nonempty.
pub fn typical_set_size(alphabet: usize, n_max: usize) -> LemmaOutcome {
    let mut out = LemmaOutcome::new("typical-set-size");
    for mu in panel(alphabet) {
        let h = mu.entropy();
        for n in 1..=n_max {
            for &g in &SMALL_GAMMAS {
                let count = super::typical_count(&mu, n, g);
                let Some(c) = count.to_f64().filter(|&c| c > 0.0) else {
                    continue;
                };
                let rate = libm::log2(c) / n as f64;
                out.record(super::eta(alphabet, g, n) - (rate - h).abs());
            }
        }
    }
    out
}

/// All six suites.
pub fn run_all(alphabet: usize, n_max: usize) -> Vec<LemmaOutcome> {
    vec![
        probability_identity(alphabet, n_max),
        chain_typicality(alphabet, n_max),
        type_deviation(alphabet, n_max),
        aep(alphabet, n_max),
        atypical_mass(alphabet, n_max),
        typical_set_size(alphabet, n_max),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_at_small_n() {
        for a in [2, 3] {
            for o in run_all(a, 6) {
                assert!(o.passed(), "{} failed for |U|={a}: {:?}", o.name, o);
            }
        }
    }

    #[test]
    fn outcome_records_violations() {
        let mut o = LemmaOutcome::new("x");
        o.record(0.5);
        o.record(-1e-3);
        assert_eq!(o.failures, 1);
        assert!(!o.passed());
        assert_eq!(o.worst_margin, -1e-3);
    }
}
