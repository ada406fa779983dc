use hashprop::config::ExperimentConfig;
use hashprop::harness::{run_block, run_experiment_with_threads, summary_csv, write_outputs};
use hashprop::matrix_io;
use hashprop_core::coset::CosetBudget;
use hashprop_core::ensemble::{generate_mackay, EnsembleParams};
use hashprop_core::schemes::{Epsilons, Model, Problem, SchemeInstance, SchemeParams, Validation};
use hashprop_core::types::{CondPmf, Pmf};
use hashprop_core::{FieldSpec, Seed, SparseMatrix};

fn sw_params() -> SchemeParams {
    let xy = CondPmf::bsc(0.11).unwrap().joint_with(&Pmf::uniform(2)).unwrap();
    SchemeParams::new(Model::Sw { xy }, Epsilons::default(), Validation::Warn).unwrap().0
}

fn sw_instance(n: usize, a: SparseMatrix, b: SparseMatrix) -> SchemeInstance {
    SchemeInstance { problem: Problem::Sw, n, a: Some(a), b: Some(b), a_hat: None, b_hat: None, c: Vec::new(), c_hat: Vec::new() }
}

fn errors(out: &[(hashprop_core::schemes::TrialOutcome, Option<u64>)]) -> usize {
    out.iter().filter(|(o, _)| !o.success).count()
}

#[test]
fn identity_code_never_errs() {
    let f = FieldSpec::binary();
    let n = 10;
    let inst = sw_instance(n, SparseMatrix::identity(f, n).unwrap(), SparseMatrix::identity(f, n).unwrap());
    let out = run_block(&sw_params(), &inst, 200, Seed(4), CosetBudget::default(), false).unwrap();
    assert_eq!(errors(&out), 0);
    assert!(out.iter().all(|(o, _)| o.violations == 0));
}

#[test]
fn rate_zero_code_almost_always_errs() {
    let f = FieldSpec::binary();
    let n = 10;
    let inst = sw_instance(n, SparseMatrix::zeros(f, 0, n).unwrap(), SparseMatrix::zeros(f, 0, n).unwrap());
    let trials = 200;
    let out = run_block(&sw_params(), &inst, trials, Seed(4), CosetBudget::default(), false).unwrap();
    assert!(errors(&out) as f64 / trials as f64 >= 0.9, "errors={}", errors(&out));
}

const SW: &str = r#"
name = "sw-small"
problem = "sw"
n = [6, 8]
trials = 60
redraws = 3
seed = 11
[model]
xy = [[0.445, 0.055], [0.055, 0.445]]
"#;

#[test]
fn experiment_outputs_are_written_and_stable() {
    let cfg = ExperimentConfig::from_toml_str(SW).unwrap();
    let r = run_experiment_with_threads(&cfg, Some(2)).unwrap();
    assert_eq!(r.rows.len(), 2);
    assert_eq!(r.records.len(), 2 * 3 * 60);
    for row in &r.rows {
        assert!(row.ci_lo <= row.error_rate && row.error_rate <= row.ci_hi);
        assert!(row.best_draw < 3);
        let best = &row.per_draw[row.best_draw as usize];
        assert!(row.per_draw.iter().all(|d| d.errors >= best.errors));
    }
    let dir = tempfile::tempdir().unwrap();
    let files = write_outputs(&r, &cfg, dir.path()).unwrap();
    let names: Vec<String> = files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    assert_eq!(names, ["sw-small.csv", "sw-small_trials.csv", "sw-small.json", "sw-small.gp"]);
    let csv = std::fs::read(dir.path().join("sw-small.csv")).unwrap();
    assert_eq!(csv, summary_csv(&r, false).unwrap());
    let again = run_experiment_with_threads(&cfg, Some(1)).unwrap();
    assert_eq!(summary_csv(&again, false).unwrap(), csv);
}

#[test]
fn different_seeds_give_different_trials() {
    let a = ExperimentConfig::from_toml_str(SW).unwrap();
    let b = ExperimentConfig::from_toml_str(&SW.replace("seed = 11", "seed = 12")).unwrap();
    let (ra, rb) = (run_experiment_with_threads(&a, None).unwrap(), run_experiment_with_threads(&b, None).unwrap());
    assert_ne!(ra.records, rb.records);
}

#[test]
fn matrix_files_round_trip_on_disk() {
    let p = EnsembleParams::new(FieldSpec::new(5).unwrap(), 4, 9, 3, 0.5).unwrap();
    let m = generate_mackay(&p, Seed(8)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.txt");
    matrix_io::save(&m, &path).unwrap();
    assert_eq!(matrix_io::load(&path).unwrap(), m);
    assert!(matrix_io::load(&dir.path().join("missing.txt")).is_err());
}

#[test]
fn config_errors_are_reported() {
    assert!(ExperimentConfig::from_toml_str(&SW.replace("problem = \"sw\"", "problem = \"turbo\"")).is_err());
    assert!(ExperimentConfig::from_toml_str(&format!("{SW}\nextra = 1\n")).is_err());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.toml");
    std::fs::write(&path, SW).unwrap();
    let cfg = ExperimentConfig::load(&path).unwrap();
    assert_eq!((cfg.name.as_str(), cfg.n.as_slice(), cfg.redraws), ("sw-small", &[6, 8][..], 3));
}
