//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 on any FAIL.

use std::time::Instant;

use hashprop::checks::{self, CheckReport};
use hashprop::config::ExperimentConfig;
use hashprop::harness::{run_experiment_with_threads, summary_csv, trials_csv, ExperimentResult};
use hashprop_core::coset::CosetBudget;
use hashprop_core::schemes::{
    dims_for, run_trial, Distortion, EnsembleChoice, Epsilons, Model, SchemeInstance, SchemeParams, TrialOutcome,
    Validation,
};
use hashprop_core::types::{lemmas, CondPmf, JointPmf, Pmf};
use hashprop_core::Seed;

const SEED: u64 = 1;

const WEIGHT_SECS: f64 = 30.0;
const WALK_SECS: f64 = 5.0;
const HASH_SECS: f64 = 120.0;
const HASH_MIN_CASES: u64 = 200;
const HASH_SETS: usize = 12;
const LEMMA_SECS: f64 = 120.0;
const LEMMA_N: usize = 12;
const MIN_TRIALS: usize = 10_000;
const EQUIV_TRIALS: u64 = 100;
const EQUIV_N: usize = 12;
const GAP: f64 = 0.15;
const DIRECTIONAL_SECS: f64 = 600.0;
/// Expected distortion 0.25 plus `3 |X| |Y| rho_max sqrt(0.01)` = 1.2.
const LOSSY_BOUND: f64 = 1.45;
/// Regression guard; seeds 1..=5 gave best-of-8 means in [0.273, 0.290].
const LOSSY_GUARD: f64 = 0.40;

const DSBS: &str = "xy = [[0.445, 0.055], [0.055, 0.445]]";
const BSC11: &str = "[[0.89, 0.11], [0.11, 0.89]]";
const BSC25: &str = "[[0.75, 0.25], [0.25, 0.75]]";

struct Line {
    id: u32,
    ok: bool,
    detail: String,
}

fn config(problem: &str, n: &str, trials: u64, eps: &str, model: &str) -> ExperimentConfig {
    let text = format!(
        "problem = \"{problem}\"\nn = {n}\ntrials = {trials}\nredraws = 8\nseed = {SEED}\n[epsilons]\n{eps}\n[model]\n{model}\n"
    );
    ExperimentConfig::from_toml_str(&text).expect("acceptance config")
}

fn run(cfg: &ExperimentConfig) -> ExperimentResult {
    run_experiment_with_threads(cfg, None).expect("experiment")
}

/// Accumulates Monte Carlo trials for the contract criterion.
#[derive(Default)]
struct Contracts {
    trials: usize,
    checks: u64,
    violations: u64,
    problems: Vec<String>,
}

impl Contracts {
    fn add(&mut self, r: &ExperimentResult) {
        self.trials += r.records.len();
        self.checks += r.records.iter().map(|t| u64::from(t.checks)).sum::<u64>();
        self.violations += r.records.iter().map(|t| u64::from(t.violations)).sum::<u64>();
        if !self.problems.contains(&r.problem) {
            self.problems.push(r.problem.clone());
        }
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

fn from_report(id: u32, r: &CheckReport, secs: f64, limit: f64) -> Line {
    Line { id, ok: r.passed() && secs < limit, detail: format!("{r} secs={secs:.2} limit={limit}") }
}

fn hash_bounds() -> Line {
    let (reps, secs) = timed(|| checks::hash_bound_suite(Seed(SEED), HASH_SETS));
    // collision inequality, collision resistance, saturation
    let core = &reps[..3];
    let cases: u64 = core.iter().map(|r| r.cases).sum();
    let ok = core.iter().all(CheckReport::passed) && cases >= HASH_MIN_CASES && secs < HASH_SECS;
    let detail = core.iter().map(|r| format!("[{r}]")).collect::<Vec<_>>().join(" ");
    Line { id: 3, ok, detail: format!("cases={cases} {detail} secs={secs:.2}") }
}

fn lemma_suites() -> Line {
    let (outs, secs) = timed(|| [2, 3].into_iter().flat_map(|a| lemmas::run_all(a, LEMMA_N)).collect::<Vec<_>>());
    let failed: Vec<_> = outs.iter().filter(|o| !o.passed()).map(|o| o.name).collect();
    let cases: u64 = outs.iter().map(|o| o.cases).sum();
    let worst = outs.iter().map(|o| o.worst_margin).fold(f64::INFINITY, f64::min);
    Line {
        id: 5,
        ok: failed.is_empty() && secs < LEMMA_SECS,
        detail: format!("suites={} cases={cases} worst_margin={worst:.3e} failed={failed:?} secs={secs:.2}", outs.len()),
    }
}

fn gp_as_channel() -> (SchemeParams, SchemeParams) {
    let eps = Epsilons { a: 0.15, b: 0.15, ..Epsilons::default() };
    let ch = Model::Ch { input: Pmf::uniform(2), channel: CondPmf::bsc(0.11).unwrap() };
    // one state value and W = X: mass mu_X(x) on (x, x)
    let xw = CondPmf::from_rows(vec![Pmf::new(vec![0.5, 0.0, 0.0, 0.5]).unwrap()]).unwrap();
    let gp = Model::Gp { state: Pmf::point(1, 0), xw_given_z: xw, x_size: 2, w_size: 2, channel: CondPmf::bsc(0.11).unwrap() };
    let p = |m| SchemeParams::new(m, eps, Validation::Warn).unwrap().0;
    (p(gp), p(ch))
}

fn wz_as_lossy() -> (SchemeParams, SchemeParams) {
    let eps = Epsilons { a: 0.01, ..Epsilons::default() };
    let test = CondPmf::bsc(0.25).unwrap();
    let lossy = Model::Lossy { source: Pmf::uniform(2), test_channel: test.clone(), rho: Distortion::hamming(2) };
    let xz = JointPmf::new(vec![2, 1], Pmf::uniform(2)).unwrap();
    let wz = Model::Wz { xz, test_channel: test, f: vec![vec![0], vec![1]], rho: Distortion::hamming(2) };
    let p = |m| SchemeParams::new(m, eps, Validation::Warn).unwrap().0;
    (p(wz), p(lossy))
}

/// Runs both parameter sets on the same draw and trial seeds; `adjust` maps
/// the specialised outcome onto the base one.
fn equivalent(
    special: &SchemeParams,
    base: &SchemeParams,
    adjust: impl Fn(TrialOutcome) -> TrialOutcome,
) -> Result<u64, String> {
    let (ds, db) = (dims_for(special, EQUIV_N).unwrap(), dims_for(base, EQUIV_N).unwrap());
    let seed = Seed(SEED);
    let (is, _) = SchemeInstance::draw(special, &ds, EnsembleChoice::default(), seed).unwrap();
    let (ib, _) = SchemeInstance::draw(base, &db, EnsembleChoice::default(), seed).unwrap();
    if (&is.a, &is.b, &is.c) != (&ib.a, &ib.b, &ib.c) {
        return Err("code draws differ".into());
    }
    for t in 0..EQUIV_TRIALS {
        let ts = seed.derive(t, "trial");
        let os = run_trial(special, &is, ts, CosetBudget::default()).map_err(|e| e.to_string())?;
        let ob = run_trial(base, &ib, ts, CosetBudget::default()).map_err(|e| e.to_string())?;
        if adjust(os) != ob {
            return Err(format!("trial {t} differs"));
        }
    }
    Ok(EQUIV_TRIALS)
}

fn specialisations() -> Line {
    let (gp, ch) = gp_as_channel();
    let (wz, lossy) = wz_as_lossy();
    let g = equivalent(&gp, &ch, |o| o);
    // the WZ decoder also checks its reproduction map
    let w = equivalent(&wz, &lossy, |o| TrialOutcome { checks: o.checks - 1, ..o });
    Line { id: 7, ok: g.is_ok() && w.is_ok(), detail: format!("gp_vs_channel={g:?} wz_vs_lossy={w:?}") }
}

fn directional(contracts: &mut Contracts) -> Line {
    let start = Instant::now();
    let sw = |e: f64| config("sw", "[16]", 500, &format!("a = {e}\nb = {e}"), DSBS);
    let ch = |e: f64| {
        config("channel", "[16]", 500, &format!("a = 0.15\nb = {e}"), &format!("input = [0.5, 0.5]\nchannel = {BSC11}"))
    };
    let oho = |e: f64| {
        config(
            "oho",
            "[16]",
            500,
            &format!("a = 0.15\nb = {e}\nb_hat = {e}"),
            &format!("{DSBS}\nhelper = [[0.95, 0.05], [0.05, 0.95]]"),
        )
    };
    // SW: 0.85 bits each (sum H(X,Y) + 0.2) against 0.675 each (sum H(X,Y) - 0.15)
    let pairs = [("sw", sw(0.35), sw(0.175)), ("channel", ch(0.15), ch(-0.15)), ("oho", oho(0.15), oho(-0.15))];
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, above, below) in pairs {
        let (ra, rb) = (run(&above), run(&below));
        contracts.add(&ra);
        contracts.add(&rb);
        let (ea, eb) = (ra.rows[0].error_rate, rb.rows[0].error_rate);
        ok &= eb - ea >= GAP;
        detail.push(format!("{name}: above={ea:.3} below={eb:.3} gap={:.3}", eb - ea));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < DIRECTIONAL_SECS;
    Line { id: 8, ok, detail: format!("{} min_gap={GAP} secs={secs:.1}", detail.join("; ")) }
}

fn lossy_distortion(contracts: &mut Contracts) -> Line {
    let cfg = config("lossy", "[16]", 1000, "a = 0.01", &format!("source = [0.5, 0.5]\ntest_channel = {BSC25}"));
    let r = run(&cfg);
    contracts.add(&r);
    let d = r.rows[0].distortion.as_ref().expect("lossy rows carry distortion").mean;
    Line {
        id: 9,
        ok: d <= LOSSY_BOUND && d <= LOSSY_GUARD,
        detail: format!("mean_distortion={d:.4} bound={LOSSY_BOUND} guard={LOSSY_GUARD}"),
    }
}

fn other_schemes(contracts: &mut Contracts) {
    let gp = config(
        "gp",
        "[12]",
        200,
        "a = 0.1\nb = 0.1",
        "state = [0.5, 0.5]\n\
         xw_given_z = [[0.45, 0.05, 0.05, 0.45], [0.05, 0.45, 0.45, 0.05]]\n\
         x_size = 2\nw_size = 2\n\
         channel = [[0.95, 0.05], [0.05, 0.95], [0.05, 0.95], [0.95, 0.05]]",
    );
    let wz = config(
        "wz",
        "[12]",
        200,
        "a = 0.01",
        &format!("xz = [[0.445, 0.055], [0.055, 0.445]]\ntest_channel = {BSC25}\nf = [[0, 0], [1, 1]]"),
    );
    contracts.add(&run(&gp));
    contracts.add(&run(&wz));
}

fn contract_line(c: &Contracts) -> Line {
    let all_six = c.problems.len() == 6;
    Line {
        id: 6,
        ok: c.violations == 0 && c.trials >= MIN_TRIALS && all_six,
        detail: format!(
            "trials={} checks={} violations={} problems={:?}",
            c.trials, c.checks, c.violations, c.problems
        ),
    }
}

fn determinism() -> Line {
    let cfg = config("sw", "[8, 12]", 200, "a = 0.2\nb = 0.2", DSBS);
    let bytes = |threads| {
        let r = run_experiment_with_threads(&cfg, Some(threads)).expect("experiment");
        (summary_csv(&r, false).unwrap(), trials_csv(&r, false).unwrap())
    };
    let one = bytes(1);
    let same = [2, 4].into_iter().all(|t| bytes(t) == one);
    Line { id: 10, ok: same, detail: format!("threads=1,2,4 summary_bytes={} trial_bytes={}", one.0.len(), one.1.len()) }
}

fn main() {
    let mut lines = Vec::new();
    let (w, secs) = timed(checks::weight_oracle);
    lines.push(from_report(1, &w, secs, WEIGHT_SECS));
    let (w, secs) = timed(checks::walk_oracle);
    lines.push(from_report(2, &w, secs, WALK_SECS));
    lines.push(hash_bounds());
    let (r, secs) = timed(|| checks::image_oracle(Seed(SEED)));
    lines.push(from_report(4, &r, secs, f64::INFINITY));
    lines.push(lemma_suites());
    let mut contracts = Contracts::default();
    let directional = directional(&mut contracts);
    let lossy = lossy_distortion(&mut contracts);
    other_schemes(&mut contracts);
    lines.push(contract_line(&contracts));
    lines.push(specialisations());
    lines.push(directional);
    lines.push(lossy);
    lines.push(determinism());
    lines.sort_by_key(|l| l.id);
    let mut failed = 0;
    for l in &lines {
        println!("{} criterion {:>2}: {}", if l.ok { "PASS" } else { "FAIL" }, l.id, l.detail);
        failed += usize::from(!l.ok);
    }
    println!("acceptance: {} passed, {failed} failed", lines.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
