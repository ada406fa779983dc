//! Seeded Monte Carlo runner.
//!
//! For each block length `n` the harness draws `K` codes and runs the same
//! `trials` source/channel realizations through each of them. Seeds are
//! derived from the master seed by position, never by scheduling:
//!
//! * code `k` at length `n`: `master / (n, "code") / (k, "draw")`
//! * block `t` at length `n`: `master / (n, "block") / (t, "trial")`
//!
//! so two experiments that share a master seed see identical samples (paired
//! comparisons), and results do not depend on the thread count.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use hashprop_core::coset::{CosetBudget, CosetError};
use hashprop_core::schemes::{
    dims_for, run_trial, DimSet, SchemeError, SchemeInstance, SchemeParams, SchemeWarning, TrialOutcome,
};
use hashprop_core::sim::{wilson, Z95};
use hashprop_core::Seed;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigFile, ExperimentConfig};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(
        "coset enumeration needs {required} candidates at n = {n}, above the budget of {budget}; \
         lower n, raise the matrix heights (larger epsilons on the binning rates), or raise `budget`"
    )]
    Budget { n: usize, required: u128, budget: u128 },
    #[error("n = {n}: {source}")]
    Scheme { n: usize, source: SchemeError },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

fn scheme_err(n: usize, e: SchemeError) -> HarnessError {
    match e {
        SchemeError::Coset(CosetError::BudgetExceeded { required, budget }) => HarnessError::Budget { n, required, budget },
        source => HarnessError::Scheme { n, source },
    }
}

/// One block through one code.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub n: usize,
    pub draw: u32,
    pub trial: u64,
    pub seed: u64,
    pub success: bool,
    pub encoder_failure: bool,
    pub distortion: Option<f64>,
    pub checks: u32,
    pub violations: u32,
    pub micros: Option<u64>,
}

/// Totals for one code over all blocks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DrawStats {
    pub trials: u64,
    pub errors: u64,
    pub encoder_failures: u64,
    pub checks: u64,
    pub violations: u64,
    pub distortion_sum: f64,
    pub distortion_sq_sum: f64,
    pub distortion_count: u64,
}

impl DrawStats {
    fn from_outcomes<'a>(outcomes: impl IntoIterator<Item = &'a TrialOutcome>) -> DrawStats {
        let mut s = DrawStats {
            trials: 0,
            errors: 0,
            encoder_failures: 0,
            checks: 0,
            violations: 0,
            distortion_sum: 0.0,
            distortion_sq_sum: 0.0,
            distortion_count: 0,
        };
        for o in outcomes {
            s.trials += 1;
            s.errors += u64::from(!o.success);
            s.encoder_failures += u64::from(o.encoder_failure);
            s.checks += u64::from(o.checks);
            s.violations += u64::from(o.violations);
            if let Some(d) = o.distortion {
                s.distortion_sum += d;
                s.distortion_sq_sum += d * d;
                s.distortion_count += 1;
            }
        }
        s
    }

    pub fn error_rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.errors as f64 / self.trials as f64
        }
    }

    pub fn mean_distortion(&self) -> Option<f64> {
        (self.distortion_count > 0).then(|| self.distortion_sum / self.distortion_count as f64)
    }

    /// Normal-approximation 95% interval for the mean distortion.
    pub fn distortion_interval(&self) -> Option<(f64, f64)> {
        let mean = self.mean_distortion()?;
        let k = self.distortion_count as f64;
        let var = if self.distortion_count > 1 {
            ((self.distortion_sq_sum - k * mean * mean) / (k - 1.0)).max(0.0)
        } else {
            0.0
        };
        let half = Z95 * (var / k).sqrt();
        Some((mean - half, mean + half))
    }
}

/// Run `trials` blocks through one code. Outcomes come back in trial order.
pub fn run_block(
    params: &SchemeParams,
    inst: &SchemeInstance,
    trials: u64,
    block_seed: Seed,
    budget: CosetBudget,
    timing: bool,
) -> Result<Vec<(TrialOutcome, Option<u64>)>, SchemeError> {
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let start = timing.then(Instant::now);
            let o = run_trial(params, inst, block_seed.derive(t, "trial"), budget)?;
            Ok((o, start.map(|s| s.elapsed().as_micros() as u64)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistortionSummary {
    pub mean: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub mean_over_draws: f64,
}

/// Results at one block length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub n: usize,
    /// `(name, real-valued height, integer height)` per matrix.
    pub dims: Vec<(String, f64, usize)>,
    /// Rates of the best draw, `(name, bits per symbol)`.
    pub rates: Vec<(String, f64)>,
    pub trials: u64,
    pub redraws: u32,
    pub best_draw: u32,
    pub errors: u64,
    pub error_rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub mean_error_rate: f64,
    pub encoder_failures: u64,
    /// Summed over all draws.
    pub checks: u64,
    /// Summed over all draws.
    pub violations: u64,
    pub distortion: Option<DistortionSummary>,
    pub per_draw: Vec<DrawStats>,
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub name: String,
    pub problem: String,
    pub seed: u64,
    pub rows: Vec<SummaryRow>,
    pub records: Vec<TrialRecord>,
    pub warnings: Vec<String>,
}

fn dim_list(d: &DimSet) -> Vec<(String, f64, usize)> {
    [("l_a", d.a), ("l_b", d.b), ("l_a_hat", d.a_hat), ("l_b_hat", d.b_hat)]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k.to_string(), v.real, v.l)))
        .collect()
}

fn push_warning(list: &mut Vec<String>, w: &SchemeWarning) {
    let s = w.to_string();
    if !list.contains(&s) {
        list.push(s);
    }
}

/// Run on the current rayon pool.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, HarnessError> {
    let (params, warns) =
        SchemeParams::new(cfg.model.clone(), cfg.epsilons, cfg.validation).map_err(|e| scheme_err(0, e))?;
    let mut warnings = Vec::new();
    for w in &warns {
        push_warning(&mut warnings, w);
    }
    let master = Seed(cfg.seed);
    let lossy = cfg.problem.is_lossy();
    let mut rows = Vec::with_capacity(cfg.n.len());
    let mut records = Vec::new();
    for &n in &cfg.n {
        let start = cfg.record_timing.then(Instant::now);
        let dims = dims_for(&params, n).map_err(|e| scheme_err(n, e))?;
        let block_seed = master.derive(n as u64, "block");
        let mut draws = Vec::with_capacity(cfg.redraws as usize);
        let mut best: Option<(u32, DrawStats, Vec<(String, f64)>)> = None;
        for k in 0..cfg.redraws {
            let code_seed = master.derive(n as u64, "code").derive(u64::from(k), "draw");
            let (inst, iw) = SchemeInstance::draw(&params, &dims, cfg.ensemble, code_seed).map_err(|e| scheme_err(n, e))?;
            for w in &iw {
                push_warning(&mut warnings, w);
            }
            let out = run_block(&params, &inst, cfg.trials, block_seed, cfg.budget, cfg.record_timing)
                .map_err(|e| scheme_err(n, e))?;
            for (t, (o, micros)) in out.iter().enumerate() {
                records.push(TrialRecord {
                    n,
                    draw: k,
                    trial: t as u64,
                    seed: block_seed.derive(t as u64, "trial").0,
                    success: o.success,
                    encoder_failure: o.encoder_failure,
                    distortion: o.distortion,
                    checks: o.checks,
                    violations: o.violations,
                    micros: *micros,
                });
            }
            let stats = DrawStats::from_outcomes(out.iter().map(|(o, _)| o));
            let better = match &best {
                None => true,
                Some((_, b, _)) if lossy => stats.mean_distortion() < b.mean_distortion(),
                Some((_, b, _)) => stats.errors < b.errors,
            };
            if better {
                let rates = inst.rates().into_iter().map(|(k, v)| (k.to_string(), v)).collect();
                best = Some((k, stats.clone(), rates));
            }
            draws.push(stats);
        }
        let (best_draw, b, rates) = best.expect("at least one draw");
        let (ci_lo, ci_hi) = wilson(b.errors, b.trials, Z95);
        let k = draws.len() as f64;
        let distortion = b.mean_distortion().map(|mean| {
            let (lo, hi) = b.distortion_interval().expect("mean exists");
            let over = draws.iter().filter_map(DrawStats::mean_distortion).sum::<f64>() / k;
            DistortionSummary { mean, ci_lo: lo, ci_hi: hi, mean_over_draws: over }
        });
        rows.push(SummaryRow {
            n,
            dims: dim_list(&dims),
            rates,
            trials: cfg.trials,
            redraws: cfg.redraws,
            best_draw,
            errors: b.errors,
            error_rate: b.error_rate(),
            ci_lo,
            ci_hi,
            mean_error_rate: draws.iter().map(DrawStats::error_rate).sum::<f64>() / k,
            encoder_failures: b.encoder_failures,
            checks: draws.iter().map(|d| d.checks).sum(),
            violations: draws.iter().map(|d| d.violations).sum(),
            distortion,
            per_draw: draws,
            seconds: start.map(|s| s.elapsed().as_secs_f64()),
        });
    }
    Ok(ExperimentResult {
        name: cfg.name.clone(),
        problem: cfg.problem.as_str().into(),
        seed: cfg.seed,
        rows,
        records,
        warnings,
    })
}

/// Run on a dedicated pool of `threads` workers (`None`: rayon's default).
pub fn run_experiment_with_threads(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentResult, HarnessError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        b = b.num_threads(t);
    }
    b.build()?.install(|| run_experiment(cfg))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

/// Per-`n` summary table.
pub fn summary_csv(res: &ExperimentResult, timing: bool) -> Result<Vec<u8>, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let first = res.rows.first();
    let dim_names: Vec<String> = first.map(|r| r.dims.iter().map(|d| d.0.clone()).collect()).unwrap_or_default();
    let rate_names: Vec<String> = first.map(|r| r.rates.iter().map(|d| d.0.clone()).collect()).unwrap_or_default();
    let lossy = first.is_some_and(|r| r.distortion.is_some());
    let mut header = vec!["n".to_string()];
    header.extend(dim_names.iter().cloned());
    header.extend(rate_names.iter().cloned());
    header.extend(
        ["trials", "redraws", "best_draw", "errors", "error_rate", "ci_lo", "ci_hi", "mean_error_rate", "encoder_failures", "violations"]
            .map(String::from),
    );
    if lossy {
        header.extend(["mean_distortion", "distortion_ci_lo", "distortion_ci_hi", "mean_distortion_over_draws"].map(String::from));
    }
    if timing {
        header.push("seconds".into());
    }
    w.write_record(&header)?;
    for r in &res.rows {
        let mut rec = vec![r.n.to_string()];
        rec.extend(r.dims.iter().map(|d| d.2.to_string()));
        rec.extend(r.rates.iter().map(|d| d.1.to_string()));
        rec.extend([
            r.trials.to_string(),
            r.redraws.to_string(),
            r.best_draw.to_string(),
            r.errors.to_string(),
            r.error_rate.to_string(),
            r.ci_lo.to_string(),
            r.ci_hi.to_string(),
            r.mean_error_rate.to_string(),
            r.encoder_failures.to_string(),
            r.violations.to_string(),
        ]);
        if lossy {
            let d = r.distortion.as_ref();
            rec.extend([
                opt(d.map(|d| d.mean)),
                opt(d.map(|d| d.ci_lo)),
                opt(d.map(|d| d.ci_hi)),
                opt(d.map(|d| d.mean_over_draws)),
            ]);
        }
        if timing {
            rec.push(opt(r.seconds));
        }
        w.write_record(&rec)?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

/// One line per block.
pub fn trials_csv(res: &ExperimentResult, timing: bool) -> Result<Vec<u8>, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["n", "draw", "trial", "seed", "success", "encoder_failure", "distortion", "checks", "violations"];
    if timing {
        header.push("micros");
    }
    w.write_record(&header)?;
    for r in &res.records {
        let mut rec = vec![
            r.n.to_string(),
            r.draw.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            u8::from(r.success).to_string(),
            u8::from(r.encoder_failure).to_string(),
            opt(r.distortion),
            r.checks.to_string(),
            r.violations.to_string(),
        ];
        if timing {
            rec.push(opt(r.micros));
        }
        w.write_record(&rec)?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

#[derive(Serialize)]
struct JsonRow<'a> {
    n: usize,
    dims: BTreeMap<&'a str, (f64, usize)>,
    rates: BTreeMap<&'a str, f64>,
    best_draw: u32,
    error_rate: f64,
    ci: (f64, f64),
    mean_error_rate: f64,
    encoder_failures: u64,
    checks: u64,
    violations: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    distortion: Option<&'a DistortionSummary>,
    per_draw_error_rate: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seconds: Option<f64>,
}

#[derive(Serialize)]
struct JsonSummary<'a> {
    name: &'a str,
    problem: &'a str,
    seed: u64,
    config: &'a ConfigFile,
    warnings: &'a [String],
    rows: Vec<JsonRow<'a>>,
}

pub fn summary_json(res: &ExperimentResult, cfg: &ConfigFile) -> Result<String, HarnessError> {
    let rows = res
        .rows
        .iter()
        .map(|r| JsonRow {
            n: r.n,
            dims: r.dims.iter().map(|(k, real, l)| (k.as_str(), (*real, *l))).collect(),
            rates: r.rates.iter().map(|(k, v)| (k.as_str(), *v)).collect(),
            best_draw: r.best_draw,
            error_rate: r.error_rate,
            ci: (r.ci_lo, r.ci_hi),
            mean_error_rate: r.mean_error_rate,
            encoder_failures: r.encoder_failures,
            checks: r.checks,
            violations: r.violations,
            distortion: r.distortion.as_ref(),
            per_draw_error_rate: r.per_draw.iter().map(DrawStats::error_rate).collect(),
            seconds: r.seconds,
        })
        .collect();
    let s = JsonSummary {
        name: &res.name,
        problem: &res.problem,
        seed: res.seed,
        config: cfg,
        warnings: &res.warnings,
        rows,
    };
    Ok(serde_json::to_string_pretty(&s)? + "\n")
}

/// A gnuplot script that plots the summary CSV.
pub fn plot_script(res: &ExperimentResult, csv_name: &str) -> String {
    let lossy = res.rows.first().is_some_and(|r| r.distortion.is_some());
    let (ylabel, main, lo, hi, mean) = if lossy {
        ("mean distortion", "mean_distortion", "distortion_ci_lo", "distortion_ci_hi", "mean_distortion_over_draws")
    } else {
        ("block error rate", "error_rate", "ci_lo", "ci_hi", "mean_error_rate")
    };
    let stem = csv_name.trim_end_matches(".csv");
    format!(
        "# {problem} experiment `{name}`, master seed {seed}\n\
         set datafile separator ','\n\
         set terminal pngcairo size 800,600\n\
         set output '{stem}.png'\n\
         set xlabel 'block length n'\n\
         set ylabel '{ylabel}'\n\
         set key top right\n\
         plot '{csv_name}' using (column('n')):(column('{main}')):(column('{lo}')):(column('{hi}')) \
         with yerrorlines title 'best draw (95% CI)', \\\n     \
         '' using (column('n')):(column('{mean}')) with linespoints title 'mean over draws'\n",
        problem = res.problem,
        name = res.name,
        seed = res.seed,
    )
}

/// Write `<name>.csv`, `<name>_trials.csv`, `<name>.json` and `<name>.gp`
/// into `dir`; returns the paths written.
pub fn write_outputs(res: &ExperimentResult, cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir)?;
    let name = &res.name;
    let files = [
        (format!("{name}.csv"), summary_csv(res, cfg.record_timing)?),
        (format!("{name}_trials.csv"), trials_csv(res, cfg.record_timing)?),
        (format!("{name}.json"), summary_json(res, &cfg.raw)?.into_bytes()),
        (format!("{name}.gp"), plot_script(res, &format!("{name}.csv")).into_bytes()),
    ];
    let mut out = Vec::new();
    for (file, bytes) in files {
        let p = dir.join(file);
        fs::write(&p, bytes)?;
        out.push(p);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(extra: &str) -> ExperimentConfig {
        let text = format!(
            "problem = \"sw\"\nn = [6, 8]\ntrials = 20\nredraws = 2\nseed = 7\n{extra}\n[epsilons]\na = 0.3\nb = 0.3\n[model]\nxy = [[0.45, 0.05], [0.05, 0.45]]\n"
        );
        ExperimentConfig::from_toml_str(&text).unwrap()
    }

    #[test]
    fn rows_and_records_line_up() {
        let c = cfg("");
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert_eq!(r.records.len(), 2 * 2 * 20);
        for row in &r.rows {
            assert_eq!(row.violations, 0);
            assert!(row.ci_lo <= row.error_rate && row.error_rate <= row.ci_hi);
            assert!(row.error_rate <= row.mean_error_rate + 1e-12);
            assert_eq!(row.per_draw.len(), 2);
        }
    }

    #[test]
    fn csv_is_thread_count_independent() {
        let c = cfg("");
        let a = summary_csv(&run_experiment_with_threads(&c, Some(1)).unwrap(), false).unwrap();
        let b = summary_csv(&run_experiment_with_threads(&c, Some(3)).unwrap(), false).unwrap();
        assert_eq!(a, b);
        let header = String::from_utf8(a).unwrap();
        assert!(header.starts_with("n,l_a,l_b,rate_x,rate_y,trials,"));
        assert!(!header.contains("seconds"));
    }

    #[test]
    fn timing_column_is_opt_in() {
        let c = cfg("record_timing = true");
        let r = run_experiment(&c).unwrap();
        let s = String::from_utf8(summary_csv(&r, true).unwrap()).unwrap();
        assert!(s.lines().next().unwrap().ends_with(",seconds"));
    }

    #[test]
    fn budget_breach_aborts_with_advice() {
        let c = cfg("budget = 2");
        let e = run_experiment(&c).unwrap_err();
        assert!(matches!(e, HarnessError::Budget { .. }), "{e}");
        assert!(e.to_string().contains("raise `budget`"));
    }

    #[test]
    fn wilson_interval_for_distortion_free_rows() {
        let s = DrawStats::from_outcomes(&[]);
        assert_eq!(s.error_rate(), 0.0);
        assert!(s.mean_distortion().is_none());
    }
}
