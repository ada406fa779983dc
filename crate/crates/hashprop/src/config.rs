//! TOML experiment configuration.
//!
//! Schema (every table rejects unknown keys):
//!
//! ```toml
//! name = "sw-dsbs"            # optional; output file stem, defaults to the problem tag
//! problem = "sw"              # sw | channel | gp | lossy | wz | oho
//! n = [8, 12, 16]             # block lengths
//! trials = 500                # Monte Carlo blocks per (n, draw)
//! redraws = 8                 # best-of-K code draws, default 8
//! seed = 1                    # master seed, default 0
//! out = "results"             # optional output directory
//! validation = "warn"         # warn | strict
//! record_timing = false       # adds a wall-clock column (breaks byte-identical output)
//! budget = 16777216           # coset enumeration budget, default 2^24
//!
//! [ensemble]
//! kind = "mackay"             # mackay | uniform
//! tau = 4                     # optional column weight; default picks per matrix
//!
//! [epsilons]                  # unused entries are ignored; default 0.1 each
//! a = 0.15
//! b = 0.15
//! a_hat = 0.1
//! b_hat = 0.1
//!
//! [model]                     # keys depend on the problem, see below
//! xy = [[0.445, 0.055], [0.055, 0.445]]
//! ```
//!
//! Model keys. Matrices are row-major lists; conditional tables have one row
//! per conditioning value.
//!
//! | problem | keys |
//! |---------|------|
//! | sw      | `xy` (\|X\| x \|Y\| joint) |
//! | channel | `input` (pmf on X), `channel` (rows x, pmf on Y) |
//! | gp      | `state` (pmf on Z), `xw_given_z` (rows z, entries `x*\|W\|+w`), `x_size`, `w_size`, `channel` (rows `x*\|Z\|+z`) |
//! | lossy   | `source`, `test_channel` (rows x, pmf on Y), optional `distortion` (\|X\| x \|Y\|, default Hamming) |
//! | wz      | `xz` (\|X\| x \|Z\| joint), `test_channel`, `f` (\|Y\| x \|Z\| table of reproduction letters), optional `distortion` (\|X\| x \|W\|) |
//! | oho     | `xy`, `helper` (rows y, pmf on Z) |
//!
//! Precedence: command-line flags override the file; the output directory
//! falls back to `$HASHPROP_OUT_DIR`, then `hashprop-out`.

use std::path::{Path, PathBuf};

use hashprop_core::coset::CosetBudget;
use hashprop_core::ensemble::EnsembleKind;
use hashprop_core::schemes::{Distortion, EnsembleChoice, Epsilons, Model, Problem, SchemeError, Validation};
use hashprop_core::types::{CondPmf, JointPmf, Pmf, TypesError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const OUT_DIR_ENV: &str = "HASHPROP_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "hashprop-out";
pub const DEFAULT_REDRAWS: u32 = 8;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("model: {0}")]
    Model(#[from] SchemeError),
    #[error("model: {0}")]
    Types(#[from] TypesError),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub kind: Option<String>,
    pub tau: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonSection {
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub a_hat: Option<f64>,
    pub b_hat: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub xy: Option<Vec<Vec<f64>>>,
    pub input: Option<Vec<f64>>,
    pub channel: Option<Vec<Vec<f64>>>,
    pub state: Option<Vec<f64>>,
    pub xw_given_z: Option<Vec<Vec<f64>>>,
    pub x_size: Option<usize>,
    pub w_size: Option<usize>,
    pub source: Option<Vec<f64>>,
    pub test_channel: Option<Vec<Vec<f64>>>,
    pub distortion: Option<Vec<Vec<f64>>>,
    pub xz: Option<Vec<Vec<f64>>>,
    pub f: Option<Vec<Vec<u8>>>,
    pub helper: Option<Vec<Vec<f64>>>,
}

/// The config document as written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub name: Option<String>,
    pub problem: String,
    pub n: Vec<usize>,
    pub trials: u64,
    pub redraws: Option<u32>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub validation: Option<String>,
    pub record_timing: Option<bool>,
    pub budget: Option<u64>,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub epsilons: EpsilonSection,
    pub model: ModelSection,
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub problem: Problem,
    pub n: Vec<usize>,
    pub trials: u64,
    pub redraws: u32,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub validation: Validation,
    pub record_timing: bool,
    pub budget: CosetBudget,
    pub ensemble: EnsembleChoice,
    pub epsilons: Epsilons,
    pub model: Model,
    /// The source document, echoed into the JSON summary.
    pub raw: ConfigFile,
}

fn joint(rows: Vec<Vec<f64>>, what: &str) -> Result<JointPmf, ConfigError> {
    let width = rows.first().map_or(0, Vec::len);
    if width == 0 || rows.iter().any(|r| r.len() != width) {
        return Err(invalid(format!("{what} must be a nonempty rectangular matrix")));
    }
    let dims = vec![rows.len(), width];
    Ok(JointPmf::new(dims, Pmf::new(rows.into_iter().flatten().collect())?)?)
}

fn hamming(rows: usize, cols: usize) -> Distortion {
    let t = (0..rows).map(|i| (0..cols).map(|j| if i == j { 0.0 } else { 1.0 }).collect()).collect();
    Distortion::new(t).expect("hamming table is valid")
}

fn take<T>(v: &mut Option<T>, key: &str, problem: Problem) -> Result<T, ConfigError> {
    v.take().ok_or_else(|| invalid(format!("model.{key} is required for problem {problem}")))
}

fn model_from(problem: Problem, mut m: ModelSection) -> Result<Model, ConfigError> {
    let model = match problem {
        Problem::Sw => Model::Sw { xy: joint(take(&mut m.xy, "xy", problem)?, "model.xy")? },
        Problem::Ch => Model::Ch {
            input: Pmf::new(take(&mut m.input, "input", problem)?)?,
            channel: CondPmf::new(take(&mut m.channel, "channel", problem)?)?,
        },
        Problem::Gp => Model::Gp {
            state: Pmf::new(take(&mut m.state, "state", problem)?)?,
            xw_given_z: CondPmf::new(take(&mut m.xw_given_z, "xw_given_z", problem)?)?,
            x_size: take(&mut m.x_size, "x_size", problem)?,
            w_size: take(&mut m.w_size, "w_size", problem)?,
            channel: CondPmf::new(take(&mut m.channel, "channel", problem)?)?,
        },
        Problem::Lossy => {
            let source = Pmf::new(take(&mut m.source, "source", problem)?)?;
            let test_channel = CondPmf::new(take(&mut m.test_channel, "test_channel", problem)?)?;
            let rho = match m.distortion.take() {
                Some(t) => Distortion::new(t)?,
                None => hamming(source.len(), test_channel.target_size()),
            };
            Model::Lossy { source, test_channel, rho }
        }
        Problem::Wz => {
            let xz = joint(take(&mut m.xz, "xz", problem)?, "model.xz")?;
            let test_channel = CondPmf::new(take(&mut m.test_channel, "test_channel", problem)?)?;
            let f = take(&mut m.f, "f", problem)?;
            let rho = match m.distortion.take() {
                Some(t) => Distortion::new(t)?,
                None => {
                    let w = f.iter().flatten().map(|&w| w as usize + 1).max().unwrap_or(1);
                    hamming(xz.dims()[0], w.max(xz.dims()[0]))
                }
            };
            Model::Wz { xz, test_channel, f, rho }
        }
        Problem::Oho => Model::Oho {
            xy: joint(take(&mut m.xy, "xy", problem)?, "model.xy")?,
            helper: CondPmf::new(take(&mut m.helper, "helper", problem)?)?,
        },
    };
    if m != ModelSection::default() {
        return Err(invalid(format!("model has keys that problem {problem} does not use")));
    }
    Ok(model)
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        Self::from_file(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn from_file(raw: ConfigFile) -> Result<Self, ConfigError> {
        let problem: Problem = raw.problem.parse()?;
        if raw.n.is_empty() || raw.n.contains(&0) {
            return Err(invalid("n must be a nonempty list of positive block lengths"));
        }
        if raw.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        let redraws = raw.redraws.unwrap_or(DEFAULT_REDRAWS);
        if redraws == 0 {
            return Err(invalid("redraws must be at least 1"));
        }
        let validation = match raw.validation.as_deref().unwrap_or("warn") {
            "warn" => Validation::Warn,
            "strict" => Validation::Strict,
            v => return Err(invalid(format!("validation must be warn or strict, got `{v}`"))),
        };
        let kind = match raw.ensemble.kind.as_deref().unwrap_or("mackay") {
            "mackay" => EnsembleKind::MacKay,
            "uniform" => EnsembleKind::Uniform,
            k => return Err(invalid(format!("ensemble.kind must be mackay or uniform, got `{k}`"))),
        };
        let d = Epsilons::default();
        let e = &raw.epsilons;
        let epsilons = Epsilons {
            a: e.a.unwrap_or(d.a),
            b: e.b.unwrap_or(d.b),
            a_hat: e.a_hat.unwrap_or(d.a_hat),
            b_hat: e.b_hat.unwrap_or(d.b_hat),
        };
        let model = model_from(problem, raw.model.clone())?;
        Ok(ExperimentConfig {
            name: raw.name.clone().unwrap_or_else(|| problem.as_str().into()),
            problem,
            n: raw.n.clone(),
            trials: raw.trials,
            redraws,
            seed: raw.seed.unwrap_or(0),
            out: raw.out.clone(),
            validation,
            record_timing: raw.record_timing.unwrap_or(false),
            budget: raw.budget.map_or_else(CosetBudget::default, |b| CosetBudget(b.into())),
            ensemble: EnsembleChoice { kind, tau: raw.ensemble.tau },
            epsilons,
            model,
            raw,
        })
    }

    /// Output directory: the config value, then the environment, then the default.
    pub fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SW: &str = r#"
        problem = "sw"
        n = [8, 12]
        trials = 10
        seed = 3
        [model]
        xy = [[0.445, 0.055], [0.055, 0.445]]
    "#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ExperimentConfig::from_toml_str(SW).unwrap();
        assert_eq!(c.problem, Problem::Sw);
        assert_eq!(c.name, "sw");
        assert_eq!(c.redraws, DEFAULT_REDRAWS);
        assert_eq!(c.validation, Validation::Warn);
        assert_eq!(c.ensemble, EnsembleChoice::default());
        assert_eq!(c.budget, CosetBudget::default());
        let Model::Sw { xy } = &c.model else { panic!() };
        assert!(xy.flat().exact().is_some());
    }

    #[test]
    fn unknown_keys_rejected() {
        for extra in ["colour = 1\n", "[ensemble]\nkind = \"mackay\"\nweight = 3\n"] {
            let text = format!("{extra}{SW}");
            assert!(ExperimentConfig::from_toml_str(&text).is_err(), "{extra}");
        }
        let text = SW.replace("[model]", "[model]\nhelper = [[1.0]]");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn bad_values_rejected() {
        for (from, to) in [
            ("trials = 10", "trials = 0"),
            ("n = [8, 12]", "n = []"),
            ("problem = \"sw\"", "problem = \"turbo\""),
            ("0.445, 0.055]", "0.445, 0.155]"),
        ] {
            assert!(ExperimentConfig::from_toml_str(&SW.replace(from, to)).is_err(), "{to}");
        }
    }

    #[test]
    fn every_problem_parses() {
        let docs = [
            "problem = \"channel\"\n[model]\ninput = [0.5, 0.5]\nchannel = [[0.9, 0.1], [0.1, 0.9]]\n",
            "problem = \"gp\"\n[model]\nstate = [1.0]\nxw_given_z = [[0.5, 0.0, 0.0, 0.5]]\nx_size = 2\nw_size = 2\nchannel = [[0.9, 0.1], [0.1, 0.9]]\n",
            "problem = \"lossy\"\n[model]\nsource = [0.5, 0.5]\ntest_channel = [[0.75, 0.25], [0.25, 0.75]]\n",
            "problem = \"wz\"\n[model]\nxz = [[0.5], [0.5]]\ntest_channel = [[0.75, 0.25], [0.25, 0.75]]\nf = [[0], [1]]\n",
            "problem = \"oho\"\n[model]\nxy = [[0.45, 0.05], [0.05, 0.45]]\nhelper = [[0.9, 0.1], [0.1, 0.9]]\n",
        ];
        for d in docs {
            let text = format!("n = [4]\ntrials = 1\n{d}");
            let c = ExperimentConfig::from_toml_str(&text).unwrap_or_else(|e| panic!("{d}: {e}"));
            assert_eq!(c.model.problem(), c.problem);
        }
    }
}
