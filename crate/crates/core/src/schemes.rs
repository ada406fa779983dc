//! The six coding constructions built on ML coset coding.
//!
//! Each problem pairs a probabilistic [`Model`] with a set of epsilons. From
//! those, [`dims_for`] fixes the matrix heights, [`SchemeInstance::draw`]
//! draws the matrices and shared vectors, and the `*_encode` / `*_decode`
//! functions are the encoders and decoders as pure functions of an instance.
//! [`run_trial`] samples one block and runs a full encode/decode round,
//! checking every syndrome constraint along the way.
//!
//! Joint laws are held as a single [`JointPmf`] per problem with a fixed axis
//! layout: `[X, Y]` for SW, CH and LOSSY, `[X, Y, Z]` for WZ and OHO, and
//! `[X, Y, Z, W]` for GP. All entropies are in bits.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_rational::BigRational;
use thiserror::Error;

use crate::coset::{ml_code, ml_code_product, solve_coset, CosetBudget, CosetError, ScoreTable};
use crate::ensemble::{
    generate_mackay, generate_uniform, recommended_tau, uniform_vector, EnsembleError, EnsembleKind,
    EnsembleParams, EnsembleWarning,
};
use crate::gf::{FieldSpec, Symbol};
use crate::matrix::{MatrixError, SparseMatrix};
use crate::rng::Seed;
use crate::sim::{sample_channel, sample_joint, sample_source};
use crate::types::{zeta, CondPmf, JointPmf, Pmf, TypesError};

const X: usize = 0;
const Y: usize = 1;
const Z: usize = 2;
const W: usize = 3;

/// Entropies below this are treated as zero when deciding whether a matrix
/// is needed at all.
const ZERO_ENTROPY: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Problem {
    Sw,
    Ch,
    Gp,
    Lossy,
    Wz,
    Oho,
}

impl Problem {
    pub fn as_str(self) -> &'static str {
        match self {
            Problem::Sw => "sw",
            Problem::Ch => "channel",
            Problem::Gp => "gp",
            Problem::Lossy => "lossy",
            Problem::Wz => "wz",
            Problem::Oho => "oho",
        }
    }

    /// Whether the figure of merit is distortion rather than block error.
    pub fn is_lossy(self) -> bool {
        matches!(self, Problem::Lossy | Problem::Wz)
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Problem {
    type Err = SchemeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "sw" => Problem::Sw,
            "ch" | "channel" => Problem::Ch,
            "gp" => Problem::Gp,
            "lossy" => Problem::Lossy,
            "wz" => Problem::Wz,
            "oho" => Problem::Oho,
            _ => return Err(SchemeError::UnknownProblem(s.into())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemeError {
    #[error("unknown problem `{0}` (expected sw, channel, gp, lossy, wz or oho)")]
    UnknownProblem(String),
    #[error(transparent)]
    Types(#[from] TypesError),
    #[error(transparent)]
    Coset(#[from] CosetError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("alphabet of {role} has size {size}; coded alphabets must be prime and at most 251")]
    Alphabet { role: &'static str, size: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("dimension {which} = {value:.3} rounds below zero; raise the rate or lower its epsilon")]
    NegativeDimension { which: &'static str, value: f64 },
    #[error("epsilon {0} must be positive, got {1}")]
    NonPositiveEpsilon(&'static str, f64),
    #[error("epsilon condition violated: {0}")]
    Condition(&'static str),
    #[error("instance lacks matrix {0}")]
    MissingMatrix(&'static str),
    #[error("distortion table must be rectangular with finite nonnegative entries")]
    BadDistortion,
    #[error("sequence lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SchemeWarning {
    NonPositiveEpsilon(&'static str, f64),
    Condition(&'static str),
    Ensemble(EnsembleWarning),
}

impl fmt::Display for SchemeWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeWarning::NonPositiveEpsilon(name, v) => write!(f, "epsilon {name} = {v} is not positive"),
            SchemeWarning::Condition(c) => write!(f, "epsilon condition violated: {c}"),
            SchemeWarning::Ensemble(EnsembleWarning::OddTau(t)) => write!(f, "odd column weight tau = {t}"),
        }
    }
}

/// Whether violated epsilon conditions stop construction or only warn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Validation {
    #[default]
    Warn,
    Strict,
}

/// A per-letter distortion table `rho[x][w]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Distortion {
    table: Vec<Vec<f64>>,
}

impl Distortion {
    pub fn new(table: Vec<Vec<f64>>) -> Result<Self, SchemeError> {
        let width = table.first().map(|r| r.len()).unwrap_or(0);
        let ok = width > 0
            && table.iter().all(|r| r.len() == width && r.iter().all(|v| v.is_finite() && *v >= 0.0));
        if !ok {
            return Err(SchemeError::BadDistortion);
        }
        Ok(Distortion { table })
    }

    pub fn hamming(k: usize) -> Self {
        Distortion { table: (0..k).map(|i| (0..k).map(|j| if i == j { 0.0 } else { 1.0 }).collect()).collect() }
    }

    pub fn rows(&self) -> usize {
        self.table.len()
    }

    pub fn cols(&self) -> usize {
        self.table[0].len()
    }

    pub fn get(&self, x: usize, w: usize) -> f64 {
        self.table[x][w]
    }

    pub fn max(&self) -> f64 {
        self.table.iter().flatten().copied().fold(0.0, f64::max)
    }

    pub fn table(&self) -> &[Vec<f64>] {
        &self.table
    }
}

/// `rho_n(x, w) / n`.
pub fn distortion_of(x: &[Symbol], w: &[Symbol], rho: &Distortion) -> Result<f64, SchemeError> {
    if x.len() != w.len() {
        return Err(SchemeError::LengthMismatch(x.len(), w.len()));
    }
    if x.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = x.iter().zip(w).map(|(&a, &b)| rho.get(a as usize, b as usize)).sum();
    Ok(total / x.len() as f64)
}

/// The source/channel laws of one problem.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    /// Correlated pair `(X, Y)`, axes `[X, Y]`.
    Sw { xy: JointPmf },
    /// Input law `mu_X` and channel `mu_{Y|X}`.
    Ch { input: Pmf, channel: CondPmf },
    /// State `mu_Z`, input/auxiliary law `mu_{XW|Z}` over `x * |W| + w`, and
    /// channel `mu_{Y|XZ}` over inputs `x * |Z| + z`.
    Gp { state: Pmf, xw_given_z: CondPmf, x_size: usize, w_size: usize, channel: CondPmf },
    /// Source `mu_X`, test channel `mu_{Y|X}`, distortion on `X x Y`.
    Lossy { source: Pmf, test_channel: CondPmf, rho: Distortion },
    /// Source and side information `mu_XZ` (axes `[X, Z]`), test channel
    /// `mu_{Y|X}`, reproduction `f[y][z]` and distortion on `X x W`.
    Wz { xz: JointPmf, test_channel: CondPmf, f: Vec<Vec<Symbol>>, rho: Distortion },
    /// Correlated pair `mu_XY` (axes `[X, Y]`) and helper channel `mu_{Z|Y}`.
    Oho { xy: JointPmf, helper: CondPmf },
}

impl Model {
    pub fn problem(&self) -> Problem {
        match self {
            Model::Sw { .. } => Problem::Sw,
            Model::Ch { .. } => Problem::Ch,
            Model::Gp { .. } => Problem::Gp,
            Model::Lossy { .. } => Problem::Lossy,
            Model::Wz { .. } => Problem::Wz,
            Model::Oho { .. } => Problem::Oho,
        }
    }

    /// The full joint law in this module's axis layout.
    pub fn joint(&self) -> Result<JointPmf, SchemeError> {
        let shape = |m: &str| SchemeError::Shape(m.into());
        match self {
            Model::Sw { xy } => {
                if xy.dims().len() != 2 {
                    return Err(shape("SW joint needs axes [X, Y]"));
                }
                Ok(xy.clone())
            }
            Model::Ch { input, channel } => Ok(channel.joint_with(input)?),
            Model::Lossy { source, test_channel, rho } => {
                if rho.rows() != source.len() || rho.cols() != test_channel.target_size() {
                    return Err(shape("lossy distortion must be |X| x |Y|"));
                }
                Ok(test_channel.joint_with(source)?)
            }
            Model::Gp { state, xw_given_z, x_size, w_size, channel } => {
                let (xs, ws, zs) = (*x_size, *w_size, state.len());
                if xw_given_z.given_size() != zs || xw_given_z.target_size() != xs * ws {
                    return Err(shape("mu_{XW|Z} must have |Z| rows of |X||W| entries"));
                }
                if channel.given_size() != xs * zs {
                    return Err(shape("mu_{Y|XZ} must have |X||Z| rows"));
                }
                let ys = channel.target_size();
                build_joint(vec![xs, ys, zs, ws], |c| {
                    let (x, y, z, w) = (c[0], c[1], c[2], c[3]);
                    let parts = [(state, z), (xw_given_z.row(z), x * ws + w), (channel.row(x * zs + z), y)];
                    product_of(&parts)
                })
            }
            Model::Wz { xz, test_channel, f, rho } => {
                if xz.dims().len() != 2 || test_channel.given_size() != xz.dims()[0] {
                    return Err(shape("WZ needs mu_XZ with axes [X, Z] and mu_{Y|X} over the same X"));
                }
                let (xs, zs, ys) = (xz.dims()[0], xz.dims()[1], test_channel.target_size());
                if f.len() != ys || f.iter().any(|r| r.len() != zs) {
                    return Err(shape("f must be a |Y| x |Z| table"));
                }
                if rho.rows() != xs || f.iter().flatten().any(|&w| w as usize >= rho.cols()) {
                    return Err(shape("distortion must be |X| x |W| and cover every value of f"));
                }
                let flat = xz.flat();
                build_joint(vec![xs, ys, zs], |c| {
                    product_of(&[(flat, c[0] * zs + c[2]), (test_channel.row(c[0]), c[1])])
                })
            }
            Model::Oho { xy, helper } => {
                if xy.dims().len() != 2 || helper.given_size() != xy.dims()[1] {
                    return Err(shape("OHO needs mu_XY with axes [X, Y] and mu_{Z|Y} over the same Y"));
                }
                let (xs, ys, zs) = (xy.dims()[0], xy.dims()[1], helper.target_size());
                let flat = xy.flat();
                build_joint(vec![xs, ys, zs], |c| product_of(&[(flat, c[0] * ys + c[1]), (helper.row(c[1]), c[2])]))
            }
        }
    }
}

fn product_of(parts: &[(&Pmf, usize)]) -> (f64, Option<BigRational>) {
    let p = parts.iter().map(|(pmf, i)| pmf.get(*i)).product();
    let e = parts
        .iter()
        .map(|(pmf, i)| pmf.exact().map(|e| e[*i].clone()))
        .try_fold(BigRational::from_integer(1.into()), |acc, x| x.map(|x| acc * x));
    (p, e)
}

fn build_joint(dims: Vec<usize>, f: impl Fn(&[usize]) -> (f64, Option<BigRational>)) -> Result<JointPmf, SchemeError> {
    let size: usize = dims.iter().product();
    let mut coords = vec![0usize; dims.len()];
    let mut p = Vec::with_capacity(size);
    let mut exact = Some(Vec::with_capacity(size));
    for _ in 0..size {
        let (v, e) = f(&coords);
        p.push(v);
        match (exact.as_mut(), e) {
            (Some(list), Some(e)) => list.push(e),
            _ => exact = None,
        }
        // row-major increment
        for (c, &d) in coords.iter_mut().zip(&dims).rev() {
            *c += 1;
            if *c < d {
                break;
            }
            *c = 0;
        }
    }
    let pmf = match exact {
        Some(e) => Pmf::from_rationals(e)?,
        None => Pmf::new(p)?,
    };
    Ok(JointPmf::new(dims, pmf)?)
}

/// Epsilons of the constructions; unused ones are ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Epsilons {
    pub a: f64,
    pub b: f64,
    pub a_hat: f64,
    pub b_hat: f64,
}

impl Default for Epsilons {
    fn default() -> Self {
        Epsilons { a: 0.1, b: 0.1, a_hat: 0.1, b_hat: 0.1 }
    }
}

/// Conditional laws each coding function scores with, derived once.
#[derive(Debug, Clone, PartialEq)]
enum Laws {
    Sw { pair: Pmf, x: Pmf, y_size: usize },
    Ch { x: Pmf, x_given_y: CondPmf },
    Gp { w_given_z: CondPmf, x_given_zw: CondPmf, w_given_y: CondPmf, w_size: usize, z_size: usize },
    Lossy { y_given_x: CondPmf, y: Pmf },
    Wz { y_given_x: CondPmf, y_given_z: CondPmf },
    Oho { z_given_y: CondPmf, z: Pmf, x_given_z: CondPmf },
}

/// A validated model with its epsilons and derived laws.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeParams {
    model: Model,
    eps: Epsilons,
    joint: JointPmf,
    laws: Laws,
}

fn field_for(role: &'static str, size: usize) -> Result<FieldSpec, SchemeError> {
    let q = u32::try_from(size).map_err(|_| SchemeError::Alphabet { role, size })?;
    FieldSpec::new(q).map_err(|_| SchemeError::Alphabet { role, size })
}

impl SchemeParams {
    pub fn new(model: Model, eps: Epsilons, mode: Validation) -> Result<(Self, Vec<SchemeWarning>), SchemeError> {
        let joint = model.joint()?;
        let d = joint.dims().to_vec();
        let cond = |t: usize, g: &[usize]| joint.conditional(&[t], g);
        let marg = |a: usize| joint.marginal(&[a]).map(|m| m.flat().clone());
        let laws = match &model {
            Model::Sw { .. } => {
                if d[X] * d[Y] > 256 {
                    return Err(SchemeError::Shape("|X||Y| must fit in a symbol".into()));
                }
                Laws::Sw { pair: joint.flat().clone(), x: marg(X)?, y_size: d[Y] }
            }
            Model::Ch { .. } => Laws::Ch { x: marg(X)?, x_given_y: cond(X, &[Y])? },
            Model::Gp { .. } => {
                if d[Z] * d[W] > 256 {
                    return Err(SchemeError::Shape("|Z||W| must fit in a symbol".into()));
                }
                Laws::Gp {
                    w_given_z: cond(W, &[Z])?,
                    x_given_zw: cond(X, &[Z, W])?,
                    w_given_y: cond(W, &[Y])?,
                    w_size: d[W],
                    z_size: d[Z],
                }
            }
            Model::Lossy { .. } => Laws::Lossy { y_given_x: cond(Y, &[X])?, y: marg(Y)? },
            Model::Wz { .. } => Laws::Wz { y_given_x: cond(Y, &[X])?, y_given_z: cond(Y, &[Z])? },
            Model::Oho { .. } => Laws::Oho { z_given_y: cond(Z, &[Y])?, z: marg(Z)?, x_given_z: cond(X, &[Z])? },
        };
        let params = SchemeParams { model, eps, joint, laws };
        params.fields()?;
        let issues = params.epsilon_issues();
        if mode == Validation::Strict {
            if let Some(w) = issues.first() {
                return Err(match w {
                    SchemeWarning::NonPositiveEpsilon(n, v) => SchemeError::NonPositiveEpsilon(n, *v),
                    SchemeWarning::Condition(c) => SchemeError::Condition(c),
                    SchemeWarning::Ensemble(_) => unreachable!("not produced here"),
                });
            }
        }
        Ok((params, issues))
    }

    pub fn problem(&self) -> Problem {
        self.model.problem()
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn epsilons(&self) -> Epsilons {
        self.eps
    }

    pub fn joint(&self) -> &JointPmf {
        &self.joint
    }

    fn size(&self, axis: usize) -> usize {
        self.joint.dims()[axis]
    }

    /// `H(target | given)` in bits.
    pub fn h(&self, target: &[usize], given: &[usize]) -> f64 {
        self.joint.cond_entropy(target, given).expect("axes are fixed per problem")
    }

    /// `I(a; b)` in bits.
    pub fn mi(&self, a: usize, b: usize) -> f64 {
        self.joint.mutual_information(&[a], &[b]).expect("axes are fixed per problem")
    }

    /// GP needs the second-stage matrix only when `H(X|Z,W) > 0`.
    pub fn gp_needs_a_hat(&self) -> bool {
        self.problem() == Problem::Gp && self.h(&[X], &[Z, W]) > ZERO_ENTROPY
    }

    /// Fields of the matrices `(A, B, A_hat, B_hat)` the problem uses.
    pub fn fields(&self) -> Result<RoleFields, SchemeError> {
        let f = |role, axis| field_for(role, self.size(axis)).map(Some);
        Ok(match self.problem() {
            Problem::Sw => RoleFields {
                a: f("X", X)?,
                b: if self.size(Y) > 1 { f("Y", Y)? } else { None },
                a_hat: None,
                b_hat: None,
            },
            Problem::Ch => RoleFields { a: f("X", X)?, b: f("X", X)?, a_hat: None, b_hat: None },
            Problem::Gp => RoleFields {
                a: f("W", W)?,
                b: f("W", W)?,
                a_hat: if self.gp_needs_a_hat() { f("X", X)? } else { None },
                b_hat: None,
            },
            Problem::Lossy | Problem::Wz => RoleFields { a: f("Y", Y)?, b: f("Y", Y)?, a_hat: None, b_hat: None },
            Problem::Oho => RoleFields { a: f("Z", Z)?, b: f("Z", Z)?, a_hat: None, b_hat: f("X", X)? },
        })
    }

    fn epsilon_issues(&self) -> Vec<SchemeWarning> {
        let e = self.eps;
        let mut out = Vec::new();
        let mut positive = |name, v: f64| {
            if !(v > 0.0) {
                out.push(SchemeWarning::NonPositiveEpsilon(name, v));
            }
        };
        let log2 = |k: usize| libm::log2(k as f64);
        let mut conds: Vec<(bool, &'static str)> = Vec::new();
        match self.problem() {
            Problem::Sw => {
                positive("a", e.a);
                positive("b", e.b);
            }
            Problem::Ch => {
                positive("a", e.a);
                positive("b", e.b);
                conds.push((pinsker_ok(e.a, e.b, log2(self.size(X))), "eps_b - eps_a <= sqrt(6 (eps_b - eps_a)) log|X| < eps_a"));
            }
            Problem::Gp => {
                positive("a", e.a);
                positive("b", e.b);
                let zw = log2(self.size(Z)) + log2(self.size(W));
                conds.push((pinsker_ok(e.a, e.b, zw), "eps_b - eps_a <= sqrt(6 (eps_b - eps_a)) log|Z||W| < eps_a"));
                if self.gp_needs_a_hat() {
                    positive("a_hat", e.a_hat);
                    let yw = self.size(Y) * self.size(W);
                    conds.push((2.0 * zeta(yw, 6.0 * e.a_hat) < e.a, "2 zeta_YW(6 eps_a_hat) < eps_a"));
                }
            }
            Problem::Lossy => {
                positive("a", e.a);
                positive("b", e.b);
                conds.push((e.a + 2.0 * zeta(self.size(Y), 3.0 * e.a) < e.b, "eps_a + 2 zeta_Y(3 eps_a) < eps_b"));
            }
            Problem::Wz => {
                positive("a", e.a);
                positive("b", e.b);
                let yz = self.size(Y) * self.size(Z);
                conds.push((e.a + 2.0 * zeta(yz, 3.0 * e.a) < e.b, "eps_a + 2 zeta_YZ(3 eps_a) < eps_b"));
            }
            Problem::Oho => {
                positive("a", e.a);
                positive("b", e.b);
                positive("b_hat", e.b_hat);
                conds.push((e.b > e.a + zeta(self.size(Z), 3.0 * e.a), "eps_b > eps_a + zeta_Z(3 eps_a)"));
                let xz = self.size(X) * self.size(Z);
                conds.push((e.b_hat > 2.0 * zeta(xz, 3.0 * e.a), "eps_b_hat > 2 zeta_XZ(3 eps_a)"));
            }
        }
        out.extend(conds.into_iter().filter(|(ok, _)| !ok).map(|(_, c)| SchemeWarning::Condition(c)));
        out
    }
}

/// `d <= sqrt(6 d) L < eps_a` with `d = eps_b - eps_a`; a negative `d`
/// satisfies the left inequality and contributes nothing on the right.
fn pinsker_ok(eps_a: f64, eps_b: f64, log_size: f64) -> bool {
    let d = eps_b - eps_a;
    let mid = libm::sqrt(d.max(0.0) * 6.0) * log_size;
    d <= mid && mid < eps_a
}

/// Field of each matrix role, `None` when the role is unused.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoleFields {
    pub a: Option<FieldSpec>,
    pub b: Option<FieldSpec>,
    pub a_hat: Option<FieldSpec>,
    pub b_hat: Option<FieldSpec>,
}

/// One matrix height, before and after rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dim {
    pub real: f64,
    pub l: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimSet {
    pub n: usize,
    pub a: Option<Dim>,
    pub b: Option<Dim>,
    pub a_hat: Option<Dim>,
    pub b_hat: Option<Dim>,
}

fn round_dim(which: &'static str, real: f64, n: usize, ceil: bool) -> Result<Dim, SchemeError> {
    let r = if ceil { libm::ceil(real - 1e-9) } else { libm::round(real) };
    if r < 0.0 {
        return Err(SchemeError::NegativeDimension { which, value: real });
    }
    Ok(Dim { real, l: (r as usize).clamp(1, n) })
}

/// Matrix heights for block length `n`.
///
/// Heights are `n * rate / log|alphabet|`, rounded to nearest and clamped to
/// `[1, n]`. SW rounds up instead, so the realized rates never fall below the
/// requested `H(X|Y) + eps_a` and `H(Y|X) + eps_b`.
pub fn dims_for(params: &SchemeParams, n: usize) -> Result<DimSet, SchemeError> {
    let e = params.eps;
    let nf = n as f64;
    let lg = |axis: usize| libm::log2(params.size(axis) as f64);
    let h = |t: usize, g: &[usize]| params.h(&[t], g);
    let dim = |which, rate: f64, axis: usize, ceil: bool| round_dim(which, nf * rate / lg(axis), n, ceil);
    let mut out = DimSet { n, a: None, b: None, a_hat: None, b_hat: None };
    match params.problem() {
        Problem::Sw => {
            out.a = Some(dim("l_a", h(X, &[Y]) + e.a, X, true)?);
            if params.size(Y) > 1 {
                out.b = Some(dim("l_b", h(Y, &[X]) + e.b, Y, true)?);
            }
        }
        Problem::Ch => {
            out.a = Some(dim("l_a", h(X, &[Y]) + e.a, X, false)?);
            out.b = Some(dim("l_b", params.mi(X, Y) - e.b, X, false)?);
        }
        Problem::Gp => {
            out.a = Some(dim("l_a", h(W, &[Y]) + e.a, W, false)?);
            out.b = Some(dim("l_b", h(W, &[Z]) - h(W, &[Y]) - e.b, W, false)?);
            if params.gp_needs_a_hat() {
                out.a_hat = Some(dim("l_a_hat", h(X, &[Z, W]) - e.a_hat, X, false)?);
            }
        }
        Problem::Lossy => {
            out.a = Some(dim("l_a", h(Y, &[X]) - e.a, Y, false)?);
            out.b = Some(dim("l_b", params.mi(Y, X) + e.b, Y, false)?);
        }
        Problem::Wz => {
            out.a = Some(dim("l_a", h(Y, &[X]) - e.a, Y, false)?);
            out.b = Some(dim("l_b", h(Y, &[Z]) - h(Y, &[X]) + e.b, Y, false)?);
        }
        Problem::Oho => {
            out.b_hat = Some(dim("l_b_hat", h(X, &[Z]) + e.b_hat, X, false)?);
            out.a = Some(dim("l_a", h(Z, &[Y]) - e.a, Z, false)?);
            out.b = Some(dim("l_b", params.mi(Y, Z) + e.b, Z, false)?);
        }
    }
    Ok(out)
}

/// `R(B) = rank(B) log q / n`, in bits per symbol.
pub fn rate_of(b: &SparseMatrix) -> f64 {
    if b.cols() == 0 {
        return 0.0;
    }
    b.rank() as f64 * libm::log2(b.field().q() as f64) / b.cols() as f64
}

/// How matrices are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnsembleChoice {
    pub kind: EnsembleKind,
    /// Column weight; `None` picks the recommended weight per matrix.
    pub tau: Option<u32>,
}

impl Default for EnsembleChoice {
    fn default() -> Self {
        EnsembleChoice { kind: EnsembleKind::MacKay, tau: None }
    }
}

/// Matrices and shared vectors for one code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeInstance {
    pub problem: Problem,
    pub n: usize,
    pub a: Option<SparseMatrix>,
    pub b: Option<SparseMatrix>,
    pub a_hat: Option<SparseMatrix>,
    pub b_hat: Option<SparseMatrix>,
    /// Shared vector in the image of `A`.
    pub c: Vec<Symbol>,
    /// Shared vector in the image of `A_hat`.
    pub c_hat: Vec<Symbol>,
}

fn draw_matrix(
    field: FieldSpec,
    l: usize,
    n: usize,
    ens: EnsembleChoice,
    seed: Seed,
    warnings: &mut Vec<SchemeWarning>,
) -> Result<SparseMatrix, SchemeError> {
    if l == 0 {
        return Ok(SparseMatrix::zeros(field, 0, n)?);
    }
    Ok(match ens.kind {
        EnsembleKind::Uniform => generate_uniform(field, l, n, seed)?,
        EnsembleKind::MacKay => {
            let tau = match ens.tau {
                Some(t) => t,
                None => recommended_tau(l, l as f64 / n as f64)?,
            };
            // xi only matters for diagnostics
            let p = EnsembleParams::new(field, l, n, tau, 0.5)?;
            warnings.extend(p.validate()?.into_iter().map(SchemeWarning::Ensemble));
            generate_mackay(&p, seed)?
        }
    })
}

impl SchemeInstance {
    /// Draw every matrix the problem uses, then `c` and `c_hat` uniformly
    /// from the images of `A` and `A_hat`.
    pub fn draw(
        params: &SchemeParams,
        dims: &DimSet,
        ens: EnsembleChoice,
        seed: Seed,
    ) -> Result<(SchemeInstance, Vec<SchemeWarning>), SchemeError> {
        let fields = params.fields()?;
        let n = dims.n;
        let mut warnings = Vec::new();
        let mut draw = |field: Option<FieldSpec>, dim: Option<Dim>, tag: &str| -> Result<Option<SparseMatrix>, SchemeError> {
            match (field, dim) {
                (Some(f), Some(d)) => draw_matrix(f, d.l, n, ens, seed.derive(0, tag), &mut warnings).map(Some),
                _ => Ok(None),
            }
        };
        let a = draw(fields.a, dims.a, "A")?;
        let b = draw(fields.b, dims.b, "B")?;
        let a_hat = draw(fields.a_hat, dims.a_hat, "A_hat")?;
        let b_hat = draw(fields.b_hat, dims.b_hat, "B_hat")?;
        let image_point = |m: &Option<SparseMatrix>, tag| match m {
            Some(m) if params.problem() != Problem::Sw => crate::ensemble::sample_image_point(m, seed.derive(0, tag)),
            _ => Vec::new(),
        };
        let c = image_point(&a, "c");
        let c_hat = image_point(&a_hat, "c_hat");
        Ok((SchemeInstance { problem: params.problem(), n, a, b, a_hat, b_hat, c, c_hat }, warnings))
    }

    fn get<'a>(m: &'a Option<SparseMatrix>, name: &'static str) -> Result<&'a SparseMatrix, SchemeError> {
        m.as_ref().ok_or(SchemeError::MissingMatrix(name))
    }

    /// Nominal rates `l log|alphabet| / n` per transmitted matrix, and the
    /// realized `R(B)` where the message set is `Im B`.
    pub fn rates(&self) -> Vec<(&'static str, f64)> {
        let nominal = |m: &SparseMatrix| m.rows() as f64 * libm::log2(m.field().q() as f64) / self.n as f64;
        let mut out = Vec::new();
        match self.problem {
            Problem::Sw => {
                if let Some(a) = &self.a {
                    out.push(("rate_x", nominal(a)));
                }
                out.push(("rate_y", self.b.as_ref().map_or(0.0, nominal)));
            }
            Problem::Ch | Problem::Gp => {
                if let Some(b) = &self.b {
                    out.push(("rate_nominal", nominal(b)));
                    out.push(("rate", rate_of(b)));
                }
            }
            Problem::Lossy | Problem::Wz => {
                if let Some(b) = &self.b {
                    out.push(("rate", nominal(b)));
                }
            }
            Problem::Oho => {
                if let Some(bh) = &self.b_hat {
                    out.push(("rate_x", nominal(bh)));
                }
                if let Some(b) = &self.b {
                    out.push(("rate_y", nominal(b)));
                }
            }
        }
        out
    }
}

fn mv(m: &SparseMatrix, u: &[Symbol]) -> Result<Vec<Symbol>, SchemeError> {
    Ok(m.matvec(u)?)
}

fn ml_in(
    constraints: &[(&SparseMatrix, &[Symbol])],
    table: &ScoreTable,
    budget: CosetBudget,
) -> Result<Vec<Symbol>, SchemeError> {
    Ok(ml_code(&solve_coset(constraints)?, table, budget)?)
}

fn pairs(a: &[Symbol], b: &[Symbol], b_size: usize) -> Vec<Symbol> {
    a.iter().zip(b).map(|(&x, &y)| (x as usize * b_size + y as usize) as Symbol).collect()
}

// ---- Slepian-Wolf ----

pub fn sw_encode_x(a: &SparseMatrix, x: &[Symbol]) -> Result<Vec<Symbol>, SchemeError> {
    mv(a, x)
}

/// Empty when `Y` is trivial and there is no `B`.
pub fn sw_encode_y(b: Option<&SparseMatrix>, y: &[Symbol]) -> Result<Vec<Symbol>, SchemeError> {
    b.map_or(Ok(Vec::new()), |b| mv(b, y))
}

/// Joint ML decoding over `C_A(b_x) x C_B(b_y)`.
pub fn sw_decode(
    inst: &SchemeInstance,
    params: &SchemeParams,
    b_x: &[Symbol],
    b_y: &[Symbol],
    budget: CosetBudget,
) -> Result<(Vec<Symbol>, Vec<Symbol>), SchemeError> {
    let Laws::Sw { pair, x, y_size } = &params.laws else { unreachable!("laws match the problem") };
    let a = SchemeInstance::get(&inst.a, "A")?;
    let cx = solve_coset(&[(a, b_x)])?;
    match &inst.b {
        None => {
            let xh = ml_code(&cx, &ScoreTable::iid(x, inst.n), budget)?;
            Ok((xh, vec![0; inst.n]))
        }
        Some(b) => {
            let cy = solve_coset(&[(b, b_y)])?;
            Ok(ml_code_product(&cx, &cy, &ScoreTable::iid(pair, inst.n), *y_size, budget)?)
        }
    }
}

// ---- channel coding ----

/// `x = argmax_{C_AB(c, m)} mu_X`. An empty coset is an encoder failure.
pub fn ch_encode(inst: &SchemeInstance, params: &SchemeParams, m: &[Symbol], budget: CosetBudget) -> Result<Vec<Symbol>, SchemeError> {
    let Laws::Ch { x, .. } = &params.laws else { unreachable!("laws match the problem") };
    let (a, b) = (SchemeInstance::get(&inst.a, "A")?, SchemeInstance::get(&inst.b, "B")?);
    ml_in(&[(a, &inst.c), (b, m)], &ScoreTable::iid(x, inst.n), budget)
}

/// Decoded channel input and message `m = B x_hat`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageDecode {
    pub codeword: Vec<Symbol>,
    pub message: Vec<Symbol>,
}

/// `m = B g_A(c | y)` with `g_A` maximizing `mu_{X|Y}`.
pub fn ch_decode(inst: &SchemeInstance, params: &SchemeParams, y: &[Symbol], budget: CosetBudget) -> Result<MessageDecode, SchemeError> {
    let Laws::Ch { x_given_y, .. } = &params.laws else { unreachable!("laws match the problem") };
    let (a, b) = (SchemeInstance::get(&inst.a, "A")?, SchemeInstance::get(&inst.b, "B")?);
    let xh = ml_in(&[(a, &inst.c)], &ScoreTable::conditional(x_given_y, y), budget)?;
    Ok(MessageDecode { message: mv(b, &xh)?, codeword: xh })
}

// ---- Gel'fand-Pinsker ----

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GpEncoding {
    pub w: Vec<Symbol>,
    pub x: Vec<Symbol>,
}

/// `w = argmax_{C_AB(c, m)} mu_{W|Z}(. | z)`, then
/// `x = argmax_{C_A_hat(c_hat)} mu_{X|ZW}(. | z, w)`; without `A_hat` the
/// second search is over all of `X^n`.
pub fn gp_encode(
    inst: &SchemeInstance,
    params: &SchemeParams,
    m: &[Symbol],
    z: &[Symbol],
    budget: CosetBudget,
) -> Result<GpEncoding, SchemeError> {
    let Laws::Gp { w_given_z, x_given_zw, w_size, .. } = &params.laws else { unreachable!("laws match the problem") };
    let (a, b) = (SchemeInstance::get(&inst.a, "A")?, SchemeInstance::get(&inst.b, "B")?);
    let w = ml_in(&[(a, &inst.c), (b, m)], &ScoreTable::conditional(w_given_z, z), budget)?;
    let table = ScoreTable::conditional(x_given_zw, &pairs(z, &w, *w_size));
    let x = match &inst.a_hat {
        Some(ah) => ml_in(&[(ah, &inst.c_hat)], &table, budget)?,
        None => table.argmax_free(),
    };
    Ok(GpEncoding { w, x })
}

/// `m = B g_A(c | y)` with `g_A` maximizing `mu_{W|Y}`.
pub fn gp_decode(inst: &SchemeInstance, params: &SchemeParams, y: &[Symbol], budget: CosetBudget) -> Result<MessageDecode, SchemeError> {
    let Laws::Gp { w_given_y, .. } = &params.laws else { unreachable!("laws match the problem") };
    let (a, b) = (SchemeInstance::get(&inst.a, "A")?, SchemeInstance::get(&inst.b, "B")?);
    let wh = ml_in(&[(a, &inst.c)], &ScoreTable::conditional(w_given_y, y), budget)?;
    Ok(MessageDecode { message: mv(b, &wh)?, codeword: wh })
}

// ---- lossy and Wyner-Ziv ----

/// Quantized sequence `y = g_A(c | x)` and its codeword `b = B y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizeEncoding {
    pub y: Vec<Symbol>,
    pub b: Vec<Symbol>,
}

fn quantize(
    inst: &SchemeInstance,
    y_given_x: &CondPmf,
    x: &[Symbol],
    budget: CosetBudget,
) -> Result<QuantizeEncoding, SchemeError> {
    let (a, b) = (SchemeInstance::get(&inst.a, "A")?, SchemeInstance::get(&inst.b, "B")?);
    let y = ml_in(&[(a, &inst.c)], &ScoreTable::conditional(y_given_x, x), budget)?;
    Ok(QuantizeEncoding { b: mv(b, &y)?, y })
}

pub fn lossy_encode(inst: &SchemeInstance, params: &SchemeParams, x: &[Symbol], budget: CosetBudget) -> Result<QuantizeEncoding, SchemeError> {
    let Laws::Lossy { y_given_x, .. } = &params.laws else { unreachable!("laws match the problem") };
    quantize(inst, y_given_x, x, budget)
}

/// `y = argmax_{C_AB(c, b)} mu_Y`.
pub fn lossy_decode(inst: &SchemeInstance, params: &SchemeParams, b: &[Symbol], budget: CosetBudget) -> Result<Vec<Symbol>, SchemeError> {
    let Laws::Lossy { y, .. } = &params.laws else { unreachable!("laws match the problem") };
    let (ma, mb) = (SchemeInstance::get(&inst.a, "A")?, SchemeInstance::get(&inst.b, "B")?);
    ml_in(&[(ma, &inst.c), (mb, b)], &ScoreTable::iid(y, inst.n), budget)
}

pub fn wz_encode(inst: &SchemeInstance, params: &SchemeParams, x: &[Symbol], budget: CosetBudget) -> Result<QuantizeEncoding, SchemeError> {
    let Laws::Wz { y_given_x, .. } = &params.laws else { unreachable!("laws match the problem") };
    quantize(inst, y_given_x, x, budget)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WzDecode {
    pub y: Vec<Symbol>,
    pub w: Vec<Symbol>,
}

/// `y = argmax_{C_AB(c, b)} mu_{Y|Z}(. | z)`, then `w_i = f(y_i, z_i)`.
pub fn wz_decode(
    inst: &SchemeInstance,
    params: &SchemeParams,
    b: &[Symbol],
    z: &[Symbol],
    budget: CosetBudget,
) -> Result<WzDecode, SchemeError> {
    let Laws::Wz { y_given_z, .. } = &params.laws else { unreachable!("laws match the problem") };
    let Model::Wz { f, .. } = &params.model else { unreachable!("laws match the problem") };
    let (ma, mb) = (SchemeInstance::get(&inst.a, "A")?, SchemeInstance::get(&inst.b, "B")?);
    let y = ml_in(&[(ma, &inst.c), (mb, b)], &ScoreTable::conditional(y_given_z, z), budget)?;
    let w = y.iter().zip(z).map(|(&yi, &zi)| f[yi as usize][zi as usize]).collect();
    Ok(WzDecode { y, w })
}

// ---- one-helps-one ----

pub fn oho_encode_x(b_hat: &SparseMatrix, x: &[Symbol]) -> Result<Vec<Symbol>, SchemeError> {
    mv(b_hat, x)
}

/// Helper description `z = g_A(c | y)` under `mu_{Z|Y}`, sent as `B z`.
pub fn oho_encode_y(inst: &SchemeInstance, params: &SchemeParams, y: &[Symbol], budget: CosetBudget) -> Result<QuantizeEncoding, SchemeError> {
    let Laws::Oho { z_given_y, .. } = &params.laws else { unreachable!("laws match the problem") };
    let q = quantize(inst, z_given_y, y, budget)?;
    // the quantized sequence here is the helper's z
    Ok(q)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OhoDecode {
    pub z: Vec<Symbol>,
    pub x: Vec<Symbol>,
}

/// `z = argmax_{C_AB(c, b_y)} mu_Z`, then `x = argmax_{C_B_hat(b_x)} mu_{X|Z}(. | z)`.
pub fn oho_decode(
    inst: &SchemeInstance,
    params: &SchemeParams,
    b_x: &[Symbol],
    b_y: &[Symbol],
    budget: CosetBudget,
) -> Result<OhoDecode, SchemeError> {
    let Laws::Oho { z, x_given_z, .. } = &params.laws else { unreachable!("laws match the problem") };
    let (a, b) = (SchemeInstance::get(&inst.a, "A")?, SchemeInstance::get(&inst.b, "B")?);
    let bh = SchemeInstance::get(&inst.b_hat, "B_hat")?;
    let zh = ml_in(&[(a, &inst.c), (b, b_y)], &ScoreTable::iid(z, inst.n), budget)?;
    let xh = ml_in(&[(bh, b_x)], &ScoreTable::conditional(x_given_z, &zh), budget)?;
    Ok(OhoDecode { z: zh, x: xh })
}

// ---- one Monte Carlo round ----

/// Result of one block: `success` is exact recovery (always true for the
/// distortion problems unless the encoder failed), `violations` counts
/// syndrome equalities that failed among `checks` evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub success: bool,
    pub encoder_failure: bool,
    pub distortion: Option<f64>,
    pub checks: u32,
    pub violations: u32,
    /// Everything transmitted or reproduced, for equivalence checks.
    pub transcript: Vec<Vec<Symbol>>,
}

struct Checker {
    checks: u32,
    violations: u32,
}

impl Checker {
    fn eq(&mut self, m: &SparseMatrix, u: &[Symbol], target: &[Symbol]) -> Result<(), SchemeError> {
        self.checks += 1;
        if mv(m, u)? != target {
            self.violations += 1;
        }
        Ok(())
    }
}

fn encoder_failed(e: &SchemeError) -> bool {
    matches!(e, SchemeError::Coset(CosetError::Empty))
}

/// Sample one block from the model and run the scheme end to end.
///
/// Randomness comes from streams derived from `seed` by stage (`source`,
/// `message`, `side`, `channel`), so problems that coincide in law also
/// coincide sample for sample.
pub fn run_trial(
    params: &SchemeParams,
    inst: &SchemeInstance,
    seed: Seed,
    budget: CosetBudget,
) -> Result<TrialOutcome, SchemeError> {
    let n = inst.n;
    let mut ck = Checker { checks: 0, violations: 0 };
    let src = seed.derive(0, "source");
    let fields = params.fields()?;
    let fail = |ck: Checker, transcript| TrialOutcome {
        success: false,
        encoder_failure: true,
        distortion: None,
        checks: ck.checks,
        violations: ck.violations,
        transcript,
    };
    match (params.model(), params.problem()) {
        (_, Problem::Sw) => {
            let s = sample_joint(params.joint(), n, src);
            let a = SchemeInstance::get(&inst.a, "A")?;
            let bx = sw_encode_x(a, &s[X])?;
            let by = sw_encode_y(inst.b.as_ref(), &s[Y])?;
            let (xh, yh) = sw_decode(inst, params, &bx, &by, budget)?;
            ck.eq(a, &xh, &bx)?;
            if let Some(b) = &inst.b {
                ck.eq(b, &yh, &by)?;
            }
            let success = xh == s[X] && yh == s[Y];
            Ok(TrialOutcome { success, encoder_failure: false, distortion: None, checks: ck.checks, violations: ck.violations, transcript: vec![bx, by, xh, yh] })
        }
        (Model::Ch { channel, .. }, _) => {
            let b = SchemeInstance::get(&inst.b, "B")?;
            let a = SchemeInstance::get(&inst.a, "A")?;
            let field = fields.b.expect("CH uses B");
            let m = mv(b, &uniform_vector(field, n, &mut seed.derive(0, "message").rng()))?;
            let x = match ch_encode(inst, params, &m, budget) {
                Ok(x) => x,
                Err(e) if encoder_failed(&e) => return Ok(fail(ck, vec![m])),
                Err(e) => return Err(e),
            };
            ck.eq(a, &x, &inst.c)?;
            ck.eq(b, &x, &m)?;
            let y = sample_channel(channel, &x, seed.derive(0, "channel"));
            let d = ch_decode(inst, params, &y, budget)?;
            ck.eq(a, &d.codeword, &inst.c)?;
            let success = d.message == m;
            Ok(TrialOutcome { success, encoder_failure: false, distortion: None, checks: ck.checks, violations: ck.violations, transcript: vec![m, x, y, d.codeword, d.message] })
        }
        (Model::Gp { state, channel, .. }, _) => {
            let Laws::Gp { z_size, .. } = &params.laws else { unreachable!("laws match the problem") };
            let b = SchemeInstance::get(&inst.b, "B")?;
            let a = SchemeInstance::get(&inst.a, "A")?;
            let field = fields.b.expect("GP uses B");
            let m = mv(b, &uniform_vector(field, n, &mut seed.derive(0, "message").rng()))?;
            let z = sample_source(state, n, seed.derive(0, "side"));
            let enc = match gp_encode(inst, params, &m, &z, budget) {
                Ok(e) => e,
                Err(e) if encoder_failed(&e) => return Ok(fail(ck, vec![m])),
                Err(e) => return Err(e),
            };
            ck.eq(a, &enc.w, &inst.c)?;
            ck.eq(b, &enc.w, &m)?;
            if let Some(ah) = &inst.a_hat {
                ck.eq(ah, &enc.x, &inst.c_hat)?;
            }
            let y = sample_channel(channel, &pairs(&enc.x, &z, *z_size), seed.derive(0, "channel"));
            let d = gp_decode(inst, params, &y, budget)?;
            ck.eq(a, &d.codeword, &inst.c)?;
            let success = d.message == m;
            Ok(TrialOutcome { success, encoder_failure: false, distortion: None, checks: ck.checks, violations: ck.violations, transcript: vec![m, enc.x, y, d.codeword, d.message] })
        }
        (Model::Lossy { source, rho, .. }, _) => {
            let (a, b) = (SchemeInstance::get(&inst.a, "A")?, SchemeInstance::get(&inst.b, "B")?);
            let x = sample_source(source, n, src);
            let enc = lossy_encode(inst, params, &x, budget)?;
            ck.eq(a, &enc.y, &inst.c)?;
            let yh = lossy_decode(inst, params, &enc.b, budget)?;
            ck.eq(a, &yh, &inst.c)?;
            ck.eq(b, &yh, &enc.b)?;
            let distortion = distortion_of(&x, &yh, rho)?;
            Ok(TrialOutcome { success: true, encoder_failure: false, distortion: Some(distortion), checks: ck.checks, violations: ck.violations, transcript: vec![enc.b, yh] })
        }
        (Model::Wz { xz, f, rho, .. }, _) => {
            let (a, b) = (SchemeInstance::get(&inst.a, "A")?, SchemeInstance::get(&inst.b, "B")?);
            let s = sample_joint(xz, n, src);
            let (x, z) = (&s[0], &s[1]);
            let enc = wz_encode(inst, params, x, budget)?;
            ck.eq(a, &enc.y, &inst.c)?;
            let d = wz_decode(inst, params, &enc.b, z, budget)?;
            ck.eq(a, &d.y, &inst.c)?;
            ck.eq(b, &d.y, &enc.b)?;
            ck.checks += 1;
            if d.y.iter().zip(z).zip(&d.w).any(|((&yi, &zi), &wi)| f[yi as usize][zi as usize] != wi) {
                ck.violations += 1;
            }
            let distortion = distortion_of(x, &d.w, rho)?;
            Ok(TrialOutcome { success: true, encoder_failure: false, distortion: Some(distortion), checks: ck.checks, violations: ck.violations, transcript: vec![enc.b, d.w] })
        }
        (Model::Oho { xy, .. }, _) => {
            let (a, b) = (SchemeInstance::get(&inst.a, "A")?, SchemeInstance::get(&inst.b, "B")?);
            let bh = SchemeInstance::get(&inst.b_hat, "B_hat")?;
            let s = sample_joint(xy, n, src);
            let bx = oho_encode_x(bh, &s[X])?;
            let enc = oho_encode_y(inst, params, &s[Y], budget)?;
            ck.eq(a, &enc.y, &inst.c)?;
            let d = oho_decode(inst, params, &bx, &enc.b, budget)?;
            ck.eq(a, &d.z, &inst.c)?;
            ck.eq(b, &d.z, &enc.b)?;
            ck.eq(bh, &d.x, &bx)?;
            let success = d.x == s[X];
            Ok(TrialOutcome { success, encoder_failure: false, distortion: None, checks: ck.checks, violations: ck.violations, transcript: vec![bx, enc.b, d.x] })
        }
        _ => unreachable!("model and problem agree"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{entropy, CondPmf};

    fn dsbs(p: f64) -> JointPmf {
        CondPmf::bsc(p).unwrap().joint_with(&Pmf::uniform(2)).unwrap()
    }

    fn eps(a: f64, b: f64) -> Epsilons {
        Epsilons { a, b, a_hat: 0.1, b_hat: 0.1 }
    }

    fn h2(p: f64) -> f64 {
        entropy(&[p, 1.0 - p])
    }

    fn ch_params(p: f64, e: Epsilons) -> SchemeParams {
        let model = Model::Ch { input: Pmf::uniform(2), channel: CondPmf::bsc(p).unwrap() };
        SchemeParams::new(model, e, Validation::Warn).unwrap().0
    }

    fn identity_instance(problem: Problem, q: u32, n: usize) -> SchemeInstance {
        let f = FieldSpec::new(q).unwrap();
        SchemeInstance {
            problem,
            n,
            a: Some(SparseMatrix::identity(f, n).unwrap()),
            b: Some(SparseMatrix::identity(f, n).unwrap()),
            a_hat: None,
            b_hat: None,
            c: Vec::new(),
            c_hat: Vec::new(),
        }
    }

    #[test]
    fn problem_tags_round_trip() {
        for p in [Problem::Sw, Problem::Ch, Problem::Gp, Problem::Lossy, Problem::Wz, Problem::Oho] {
            assert_eq!(p.as_str().parse::<Problem>().unwrap(), p);
        }
        assert!("turbo".parse::<Problem>().is_err());
    }

    #[test]
    fn channel_dims_example() {
        let p = ch_params(0.11, eps(0.05, 0.05));
        let h = h2(0.11);
        assert!((h - 0.4999).abs() < 1e-3);
        for n in [8, 16, 20, 40] {
            let d = dims_for(&p, n).unwrap();
            let a = d.a.unwrap();
            assert!((a.real - n as f64 * (h + 0.05)).abs() < 1e-9);
            assert_eq!(a.l, libm::round(n as f64 * (h + 0.05)) as usize);
            let b = d.b.unwrap();
            assert!((b.real - n as f64 * (1.0 - h - 0.05)).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_source_clamps_to_one() {
        let model = Model::Lossy { source: Pmf::point(2, 0), test_channel: CondPmf::bsc(0.0).unwrap(), rho: Distortion::hamming(2) };
        let (p, _) = SchemeParams::new(model, eps(0.0, 0.0), Validation::Warn).unwrap();
        let d = dims_for(&p, 10).unwrap();
        assert_eq!(d.a.unwrap().l, 1);
        assert_eq!(d.b.unwrap().l, 1);
    }

    #[test]
    fn negative_dimension_is_an_error() {
        let p = ch_params(0.11, eps(0.1, 2.0));
        assert!(matches!(dims_for(&p, 16), Err(SchemeError::NegativeDimension { which: "l_b", .. })));
    }

    #[test]
    fn sw_rounds_up() {
        let model = Model::Sw { xy: dsbs(0.11) };
        let (p, _) = SchemeParams::new(model, eps(0.13, 0.13), Validation::Warn).unwrap();
        for n in 4..30 {
            let d = dims_for(&p, n).unwrap();
            let r = d.a.unwrap().l as f64 / n as f64;
            assert!(r >= h2(0.11) + 0.13 - 1e-9 || d.a.unwrap().l == n);
        }
    }

    #[test]
    fn strict_mode_rejects_bad_epsilons() {
        let model = Model::Ch { input: Pmf::uniform(2), channel: CondPmf::bsc(0.11).unwrap() };
        let r = SchemeParams::new(model.clone(), eps(0.1, -0.1), Validation::Strict);
        assert!(matches!(r, Err(SchemeError::NonPositiveEpsilon("b", _))));
        let (_, warns) = SchemeParams::new(model.clone(), eps(0.1, -0.1), Validation::Warn).unwrap();
        assert!(!warns.is_empty());
        // equal epsilons satisfy the channel condition
        assert!(SchemeParams::new(model, eps(0.15, 0.15), Validation::Strict).is_ok());
    }

    #[test]
    fn composite_alphabet_rejected() {
        let model = Model::Ch { input: Pmf::uniform(4), channel: CondPmf::new(vec![vec![1.0]; 4]).unwrap() };
        assert!(matches!(SchemeParams::new(model, eps(0.1, 0.1), Validation::Warn), Err(SchemeError::Alphabet { .. })));
    }

    #[test]
    fn rate_of_examples() {
        let f = FieldSpec::new(3).unwrap();
        assert!((rate_of(&SparseMatrix::identity(f, 4).unwrap()) - 4.0 * libm::log2(3.0) / 4.0).abs() < 1e-12);
        assert_eq!(rate_of(&SparseMatrix::zeros(f, 3, 5).unwrap()), 0.0);
        // even column weight over GF(2): rows sum to zero, rank at most l - 1
        let g = FieldSpec::binary();
        let m = SparseMatrix::from_rows(g, &[vec![1, 1, 0, 0], vec![1, 0, 1, 0], vec![0, 1, 1, 0]]).unwrap();
        assert_eq!(m.rank(), 2);
        assert!((rate_of(&m) - 2.0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn sw_identity_recovers_pair() {
        let model = Model::Sw { xy: dsbs(0.05) };
        let (p, _) = SchemeParams::new(model, eps(0.1, 0.1), Validation::Warn).unwrap();
        let inst = identity_instance(Problem::Sw, 2, 8);
        for t in 0..20 {
            let o = run_trial(&p, &inst, Seed(t), CosetBudget::default()).unwrap();
            assert!(o.success);
            assert_eq!(o.violations, 0);
        }
    }

    #[test]
    fn sw_single_source_when_y_trivial() {
        let xy = JointPmf::new(vec![2, 1], Pmf::bernoulli(0.1).unwrap()).unwrap();
        let (p, _) = SchemeParams::new(Model::Sw { xy }, eps(0.4, 0.1), Validation::Warn).unwrap();
        let d = dims_for(&p, 10).unwrap();
        assert!(d.b.is_none());
        let (inst, _) = SchemeInstance::draw(&p, &d, EnsembleChoice::default(), Seed(3)).unwrap();
        assert!(inst.b.is_none());
        let o = run_trial(&p, &inst, Seed(1), CosetBudget::default()).unwrap();
        assert_eq!(o.violations, 0);
    }

    #[test]
    fn noiseless_channel_round_trip() {
        let model = Model::Ch { input: Pmf::uniform(2), channel: CondPmf::bsc(0.0).unwrap() };
        let (p, _) = SchemeParams::new(model, eps(0.1, 0.1), Validation::Warn).unwrap();
        let d = dims_for(&p, 10).unwrap();
        for s in 0..10 {
            let (inst, _) = SchemeInstance::draw(&p, &d, EnsembleChoice::default(), Seed(s)).unwrap();
            let o = run_trial(&p, &inst, Seed(100 + s), CosetBudget::default()).unwrap();
            assert!(o.success || o.encoder_failure);
            assert_eq!(o.violations, 0);
        }
    }

    #[test]
    fn zero_row_message_matrix_is_rate_zero() {
        let p = ch_params(0.1, eps(0.1, 0.1));
        let f = FieldSpec::binary();
        let inst = SchemeInstance {
            problem: Problem::Ch,
            n: 6,
            a: Some(SparseMatrix::identity(f, 6).unwrap()),
            b: Some(SparseMatrix::zeros(f, 0, 6).unwrap()),
            a_hat: None,
            b_hat: None,
            c: vec![1, 0, 1, 1, 0, 0],
            c_hat: Vec::new(),
        };
        assert_eq!(rate_of(inst.b.as_ref().unwrap()), 0.0);
        let o = run_trial(&p, &inst, Seed(2), CosetBudget::default()).unwrap();
        assert!(o.success);
    }

    fn gp_as_channel(p: f64) -> SchemeParams {
        // |Z| = 1 and W = X: mu_{XW|Z} puts mass mu_X(x) on (x, x)
        let xw = CondPmf::from_rows(vec![Pmf::new(vec![0.5, 0.0, 0.0, 0.5]).unwrap()]).unwrap();
        let model = Model::Gp { state: Pmf::point(1, 0), xw_given_z: xw, x_size: 2, w_size: 2, channel: CondPmf::bsc(p).unwrap() };
        SchemeParams::new(model, eps(0.15, 0.15), Validation::Warn).unwrap().0
    }

    #[test]
    fn gp_specializes_to_channel() {
        let gp = gp_as_channel(0.11);
        let ch = ch_params(0.11, eps(0.15, 0.15));
        assert!(!gp.gp_needs_a_hat());
        let n = 12;
        let (dg, dc) = (dims_for(&gp, n).unwrap(), dims_for(&ch, n).unwrap());
        assert_eq!((dg.a.unwrap().l, dg.b.unwrap().l), (dc.a.unwrap().l, dc.b.unwrap().l));
        for s in 0..5 {
            let (ig, _) = SchemeInstance::draw(&gp, &dg, EnsembleChoice::default(), Seed(s)).unwrap();
            let (ic, _) = SchemeInstance::draw(&ch, &dc, EnsembleChoice::default(), Seed(s)).unwrap();
            assert_eq!((&ig.a, &ig.b, &ig.c), (&ic.a, &ic.b, &ic.c));
            for t in 0..10 {
                let og = run_trial(&gp, &ig, Seed(t), CosetBudget::default()).unwrap();
                let oc = run_trial(&ch, &ic, Seed(t), CosetBudget::default()).unwrap();
                assert_eq!(og, oc);
            }
        }
    }

    #[test]
    fn gp_deterministic_second_stage_forces_x() {
        let gp = gp_as_channel(0.2);
        let f = FieldSpec::binary();
        let inst = SchemeInstance {
            problem: Problem::Gp,
            n: 4,
            a: Some(SparseMatrix::from_rows(f, &[vec![1, 1, 0, 0]]).unwrap()),
            b: Some(SparseMatrix::from_rows(f, &[vec![0, 0, 1, 1]]).unwrap()),
            a_hat: None,
            b_hat: None,
            c: vec![1],
            c_hat: Vec::new(),
        };
        let e = gp_encode(&inst, &gp, &[0], &[0; 4], CosetBudget::default()).unwrap();
        assert_eq!(e.x, e.w);
    }

    fn lossy(p: f64, e: Epsilons) -> SchemeParams {
        let model = Model::Lossy { source: Pmf::uniform(2), test_channel: CondPmf::bsc(p).unwrap(), rho: Distortion::hamming(2) };
        SchemeParams::new(model, e, Validation::Warn).unwrap().0
    }

    #[test]
    fn wz_specializes_to_lossy() {
        let lp = lossy(0.25, eps(0.01, 0.1));
        let xz = JointPmf::new(vec![2, 1], Pmf::uniform(2)).unwrap();
        let wz = Model::Wz { xz, test_channel: CondPmf::bsc(0.25).unwrap(), f: vec![vec![0], vec![1]], rho: Distortion::hamming(2) };
        let (wp, _) = SchemeParams::new(wz, eps(0.01, 0.1), Validation::Warn).unwrap();
        let n = 10;
        let (dl, dw) = (dims_for(&lp, n).unwrap(), dims_for(&wp, n).unwrap());
        assert_eq!(dl, dw);
        for s in 0..5 {
            let (il, _) = SchemeInstance::draw(&lp, &dl, EnsembleChoice::default(), Seed(s)).unwrap();
            let (iw, _) = SchemeInstance::draw(&wp, &dw, EnsembleChoice::default(), Seed(s)).unwrap();
            for t in 0..10 {
                let ol = run_trial(&lp, &il, Seed(t), CosetBudget::default()).unwrap();
                let ow = run_trial(&wp, &iw, Seed(t), CosetBudget::default()).unwrap();
                // WZ additionally checks the reproduction map
                assert_eq!(ow.checks, ol.checks + 1);
                assert_eq!(TrialOutcome { checks: ol.checks, ..ow }, ol);
            }
        }
    }

    #[test]
    fn lossless_test_channel_reproduces_source() {
        let p = lossy(0.0, eps(0.01, 0.1));
        let f = FieldSpec::binary();
        let inst = SchemeInstance {
            problem: Problem::Lossy,
            n: 6,
            a: Some(SparseMatrix::zeros(f, 1, 6).unwrap()),
            b: Some(SparseMatrix::identity(f, 6).unwrap()),
            a_hat: None,
            b_hat: None,
            c: vec![0],
            c_hat: Vec::new(),
        };
        for t in 0..10 {
            let o = run_trial(&p, &inst, Seed(t), CosetBudget::default()).unwrap();
            assert_eq!(o.distortion, Some(0.0));
            assert_eq!(o.violations, 0);
        }
    }

    #[test]
    fn wz_side_information_decoder_ignores_b() {
        // Z = X exactly, Y = X, f(y, z) = z
        let xz = JointPmf::new(vec![2, 2], Pmf::new(vec![0.5, 0.0, 0.0, 0.5]).unwrap()).unwrap();
        let wz = Model::Wz { xz, test_channel: CondPmf::bsc(0.0).unwrap(), f: vec![vec![0, 1], vec![0, 1]], rho: Distortion::hamming(2) };
        let (p, _) = SchemeParams::new(wz, eps(0.01, 0.1), Validation::Warn).unwrap();
        let d = dims_for(&p, 8).unwrap();
        let (inst, _) = SchemeInstance::draw(&p, &d, EnsembleChoice::default(), Seed(5)).unwrap();
        for t in 0..10 {
            let o = run_trial(&p, &inst, Seed(t), CosetBudget::default()).unwrap();
            assert_eq!(o.distortion, Some(0.0));
            assert_eq!(o.violations, 0);
        }
    }

    #[test]
    fn distortion_examples() {
        let h = Distortion::hamming(2);
        assert_eq!(distortion_of(&[0, 1, 1, 0], &[0, 1, 1, 0], &h).unwrap(), 0.0);
        assert_eq!(distortion_of(&[0, 1, 1, 0], &[1, 1, 0, 0], &h).unwrap(), 0.5);
        let t = Distortion::new(vec![vec![0.0, 3.0], vec![3.0, 0.0]]).unwrap();
        assert_eq!(t.max(), 3.0);
        assert_eq!(distortion_of(&[0, 1, 0], &[1, 0, 1], &t).unwrap(), 3.0);
        assert!(distortion_of(&[0], &[0, 1], &h).is_err());
        assert!(Distortion::new(vec![vec![-1.0]]).is_err());
    }

    #[test]
    fn oho_full_helper_recovers_x() {
        // Z = Y exactly; identity matrices everywhere
        let xy = dsbs(0.1);
        let model = Model::Oho { xy, helper: CondPmf::bsc(0.0).unwrap() };
        let (p, _) = SchemeParams::new(model, eps(0.1, 0.1), Validation::Warn).unwrap();
        let f = FieldSpec::binary();
        let n = 8;
        let inst = SchemeInstance {
            problem: Problem::Oho,
            n,
            a: Some(SparseMatrix::zeros(f, 1, n).unwrap()),
            b: Some(SparseMatrix::identity(f, n).unwrap()),
            a_hat: None,
            b_hat: Some(SparseMatrix::identity(f, n).unwrap()),
            c: vec![0],
            c_hat: Vec::new(),
        };
        for t in 0..10 {
            let o = run_trial(&p, &inst, Seed(t), CosetBudget::default()).unwrap();
            assert!(o.success);
            assert_eq!(o.violations, 0);
        }
    }

    #[test]
    fn drawn_instances_keep_contracts() {
        let ch = ch_params(0.11, eps(0.15, 0.15));
        let oho = SchemeParams::new(
            Model::Oho { xy: dsbs(0.1), helper: CondPmf::bsc(0.1).unwrap() },
            eps(0.05, 0.15),
            Validation::Warn,
        )
        .unwrap()
        .0;
        let sw = SchemeParams::new(Model::Sw { xy: dsbs(0.05) }, eps(0.3, 0.3), Validation::Warn).unwrap().0;
        for p in [&ch, &oho, &sw] {
            let d = dims_for(p, 10).unwrap();
            for s in 0..4 {
                let (inst, _) = SchemeInstance::draw(p, &d, EnsembleChoice::default(), Seed(s)).unwrap();
                for t in 0..10 {
                    let o = run_trial(p, &inst, Seed(t), CosetBudget::default()).unwrap();
                    assert_eq!(o.violations, 0, "{:?}", p.problem());
                }
            }
        }
    }
}
