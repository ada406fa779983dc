//! Command-line interface.
//!
//! Exit codes: 0 success, 1 a check failed, 2 usage or configuration error.
//! Flags given on the command line override the config file; the output
//! directory of `run` is `--out`, else the config's `out`, else
//! `$HASHPROP_OUT_DIR`, else `hashprop-out`.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use hashprop_core::diagnostics::{alpha_beta, default_xi, Arith, HashDiagnostics, Value};
use hashprop_core::ensemble::{generate, recommended_tau, EnsembleKind, EnsembleParams};
use hashprop_core::types::lemmas;
use hashprop_core::{FieldSpec, Seed};

use crate::checks::{self, CheckReport};
use crate::config::ExperimentConfig;
use crate::harness;
use crate::matrix_io;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "hashprop", version, about = "Hash-property ensembles, diagnostics and coding simulations")]
#[command(arg_required_else_help = true)]
pub struct Cli {
    /// Experiment config (TOML); used by `run`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file (`gen-matrix`, `diag`) or directory (`run`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Mackay,
    Uniform,
}

impl From<KindArg> for EnsembleKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Mackay => EnsembleKind::MacKay,
            KindArg::Uniform => EnsembleKind::Uniform,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ArithArg {
    Auto,
    Exact,
    Float,
}

impl From<ArithArg> for Arith {
    fn from(a: ArithArg) -> Self {
        match a {
            ArithArg::Auto => Arith::Auto,
            ArithArg::Exact => Arith::Exact,
            ArithArg::Float => Arith::Float,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a matrix from an ensemble and write it in the text format.
    GenMatrix {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        l: usize,
        #[arg(long)]
        n: usize,
        /// Column weight; defaults to the recommended weight for l and l/n.
        #[arg(long)]
        tau: Option<u32>,
        #[arg(long, value_enum, default_value = "mackay")]
        kind: KindArg,
    },
    /// Per-weight collision table and the hash constants alpha, beta.
    Diag {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        l: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        tau: u32,
        /// Weight cutoff fraction; defaults to the smallest feasible grid value.
        #[arg(long)]
        xi: Option<f64>,
        #[arg(long, value_enum, default_value = "mackay")]
        kind: KindArg,
        #[arg(long, value_enum, default_value = "auto")]
        arith: ArithArg,
    },
    /// Exhaustive method-of-types lemma suites.
    TypesCheck {
        /// Largest block length swept.
        #[arg(long, default_value_t = 8)]
        n: usize,
        /// Alphabet size (2 or 3).
        #[arg(long, default_value_t = 2)]
        q: usize,
    },
    /// Collision inequality and the two coset lemmas on enumerable ensembles.
    HashCheck {
        /// Random (T, T') draws per ensemble.
        #[arg(long, default_value_t = 12)]
        sets: usize,
    },
    /// Monte Carlo experiment described by --config.
    Run,
    /// Brute-force cross-checks of the closed forms and the coset search.
    Oracle,
}

fn print_reports(out: &mut dyn Write, reports: &[CheckReport]) -> std::io::Result<i32> {
    for r in reports {
        writeln!(out, "{r}")?;
    }
    Ok(if reports.iter().all(CheckReport::passed) { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn value_str(v: &Value) -> String {
    v.exact.as_ref().map_or_else(|| v.value.to_string(), ToString::to_string)
}

/// The `diag` CSV: `# key=value` header lines, then one row per weight.
pub fn diag_csv(d: &HashDiagnostics) -> String {
    let p = d.params;
    let mut s = format!(
        "# kind={} q={} l={} n={} tau={} xi={} exact={}\n# alpha={}\n# beta={}\n# im_ratio={}\n",
        match d.kind {
            EnsembleKind::MacKay => "mackay",
            EnsembleKind::Uniform => "uniform",
        },
        p.field.q(),
        p.l,
        p.n,
        p.tau,
        p.xi,
        d.is_exact(),
        value_str(&d.alpha),
        value_str(&d.beta),
        d.im_ratio,
    );
    if d.cancellation_warning() {
        s.push_str("# warning=float cancellation above threshold; rerun with --arith exact\n");
    }
    s.push_str("w,p_Aw,|C_w|,S\n");
    for r in &d.per_weight {
        s.push_str(&format!("{},{},{},{}\n", r.w, r.p.value, r.class_size, r.spectrum.value));
    }
    s
}

fn emit(text: &str, path: Option<&PathBuf>, out: &mut dyn Write) -> Result<(), String> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => out.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    }
}

fn field(q: u32) -> Result<FieldSpec, String> {
    FieldSpec::new(q).map_err(|e| e.to_string())
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, String> {
    if cli.config.is_some() && !matches!(cli.command, Command::Run) {
        return Err("--config applies only to `run`".into());
    }
    let seed = Seed(cli.seed.unwrap_or(0));
    let io = |e: std::io::Error| e.to_string();
    match &cli.command {
        Command::GenMatrix { q, l, n, tau, kind } => {
            let f = field(*q)?;
            let tau = match tau {
                Some(t) => *t,
                None => recommended_tau(*l, *l as f64 / (*n).max(1) as f64).map_err(|e| e.to_string())?,
            };
            let p = EnsembleParams::new(f, *l, *n, tau, 0.5).map_err(|e| e.to_string())?;
            for w in p.validate().map_err(|e| e.to_string())? {
                writeln!(err, "warning: {w:?}").map_err(io)?;
            }
            let m = generate((*kind).into(), &p, seed).map_err(|e| e.to_string())?;
            emit(&matrix_io::to_string(&m), cli.out.as_ref(), out)?;
            Ok(EXIT_OK)
        }
        Command::Diag { q, l, n, tau, xi, kind, arith } => {
            let f = field(*q)?;
            let xi = match xi {
                Some(x) => *x,
                None => default_xi(*q, *l as f64 / (*n).max(1) as f64)
                    .ok_or("no feasible xi on the default grid; pass --xi")?,
            };
            let p = EnsembleParams::new(f, *l, *n, *tau, xi).map_err(|e| e.to_string())?;
            let d = alpha_beta((*kind).into(), &p, (*arith).into()).map_err(|e| e.to_string())?;
            emit(&diag_csv(&d), cli.out.as_ref(), out)?;
            Ok(EXIT_OK)
        }
        Command::TypesCheck { n, q } => {
            if !matches!(q, 2 | 3) {
                return Err("types-check supports --q 2 or --q 3".into());
            }
            if *n == 0 {
                return Err("--n must be positive".into());
            }
            let mut code = EXIT_OK;
            for o in lemmas::run_all(*q, *n) {
                let tag = if o.passed() { "PASS" } else { "FAIL" };
                writeln!(out, "{tag} {} cases={} worst_margin={:e}", o.name, o.cases, o.worst_margin).map_err(io)?;
                if !o.passed() {
                    code = EXIT_CHECK_FAILED;
                }
            }
            Ok(code)
        }
        Command::HashCheck { sets } => print_reports(out, &checks::hash_bound_suite(seed, *sets)).map_err(io),
        Command::Oracle => print_reports(out, &checks::oracle_suite(seed)).map_err(io),
        Command::Run => {
            let path = cli.config.as_ref().ok_or("`run` needs --config <file>")?;
            let mut cfg = ExperimentConfig::load(path).map_err(|e| e.to_string())?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
                cfg.raw.seed = Some(s);
            }
            if let Some(o) = &cli.out {
                cfg.out = Some(o.clone());
            }
            let res = harness::run_experiment_with_threads(&cfg, cli.threads).map_err(|e| e.to_string())?;
            for w in &res.warnings {
                writeln!(err, "warning: {w}").map_err(io)?;
            }
            let files = harness::write_outputs(&res, &cfg, &cfg.out_dir()).map_err(|e| e.to_string())?;
            let lossy = cfg.problem.is_lossy();
            for r in &res.rows {
                let fig = match &r.distortion {
                    Some(d) if lossy => format!("distortion={} [{}, {}]", d.mean, d.ci_lo, d.ci_hi),
                    _ => format!("error_rate={} [{}, {}]", r.error_rate, r.ci_lo, r.ci_hi),
                };
                writeln!(out, "n={} best_draw={} {fig} violations={}", r.n, r.best_draw, r.violations).map_err(io)?;
            }
            for f in files {
                writeln!(out, "wrote {}", f.display()).map_err(io)?;
            }
            let violations: u64 = res.rows.iter().map(|r| r.violations).sum();
            Ok(if violations == 0 { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
    }
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return if code == 0 { EXIT_OK } else { EXIT_USAGE };
        }
    };
    // only `run` is parallel; the pool is built there
    let result = match cli.threads {
        Some(0) => Err("--threads must be positive".into()),
        _ => dispatch(&cli, out, err),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("hashprop").chain(args.iter().copied()), &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn no_arguments_is_usage_error() {
        let (code, _, err) = run_capture(&[]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("Usage"));
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        let (code, _, err) = run_capture(&["diag", "--bogus"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("Usage"));
    }

    #[test]
    fn diag_tiny_example() {
        let (code, out, _) = run_capture(&["diag", "--q", "2", "--l", "2", "--n", "2", "--tau", "2", "--xi", "0.5"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("alpha=1\n"));
        assert!(out.contains("beta=1\n"));
        assert!(out.contains("w,p_Aw,|C_w|,S\n"));
    }

    #[test]
    fn config_flag_rejected_outside_run() {
        let (code, _, err) = run_capture(&["oracle", "--config", "x.toml"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("--config"));
    }
}
