//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! German Credit criteria use five seeded runs (seeds 0..5); each seed fixes
//! the split, the model initialization and the search streams.

mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use fairsearch::confusion::ConfusionReport;
use fairsearch::generate::SearchConfig;
use fairsearch::harness::{run_generation, run_retrain, run_train, split_train_test, GenerationRun, Technique};
use fairsearch::nncore::{loss_mse, DenseNetwork, TrainConfig};
use fairsearch::perturb::{dir_fb, dir_ff, dir_tb, ground_truth};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RUN_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

const GRADIENT_TRIPLES: usize = 100;
const GRADIENT_LIMIT: Duration = Duration::from_secs(10);
const TAYLOR_CASES: usize = 1000;
const TAYLOR_TOL: f64 = 1e-9;
const DIRECTION_CASES: usize = 1000;
const DIRECTION_LIMIT: Duration = Duration::from_secs(5);
const BASELINE_ACC: f64 = 0.81;
const BASELINE_ACC_TOL: f64 = 0.05;
const BASELINE_IF: f64 = 0.74;
const BASELINE_IF_TOL: f64 = 0.08;
const TRAIN_LIMIT: Duration = Duration::from_secs(120);
const DETECTION_FACTOR: f64 = 1.5;
const DETECTION_LIMIT: Duration = Duration::from_secs(15 * 60);
const RETRAIN_FRACTION: f64 = 0.10;
const RETRAIN_IF_GAIN: f64 = 0.02;
const RETRAIN_ACC_DROP: f64 = 0.02;
const RETRAIN_LIMIT: Duration = Duration::from_secs(5 * 60);

struct Outcome {
    results: Vec<(u8, bool)>,
}

impl Outcome {
    fn record(&mut self, id: u8, pass: bool, text: String) {
        println!("criterion {id} [{}] {text}", if pass { "PASS" } else { "FAIL" });
        self.results.push((id, pass));
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ")
}

fn gradient_oracle(out: &mut Outcome) {
    let start = Instant::now();
    let check = common::gradient_check(GRADIENT_TRIPLES, 2024);
    let elapsed = start.elapsed();
    out.record(
        1,
        check.mismatches.is_empty() && check.triples >= GRADIENT_TRIPLES && elapsed < GRADIENT_LIMIT,
        format!(
            "gradient oracle: {} triples, {} coordinates, {} mismatches, {} kink redraws, {:.2?} (limit {:?})",
            check.triples,
            check.coordinates,
            check.mismatches.len(),
            check.resampled,
            elapsed,
            GRADIENT_LIMIT
        ),
    );
}

fn random_net(rng: &mut ChaCha8Rng, dim: usize) -> DenseNetwork {
    let hidden: Vec<usize> = (0..rng.gen_range(0..=5)).map(|_| rng.gen_range(1..=32)).collect();
    let mut net = DenseNetwork::initialized(dim, &hidden, rng.gen()).unwrap();
    for layer in net.layers_mut() {
        for b in &mut layer.bias {
            *b = rng.gen_range(-0.5..0.5);
        }
    }
    net
}

fn taylor_identities(out: &mut Outcome) {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (mut worst_fixed, mut worst_square) = (0.0f64, 0.0f64);
    for _ in 0..TAYLOR_CASES {
        let dim = rng.gen_range(1..=20);
        let net = random_net(&mut rng, dim);
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let v_p: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let y = if rng.gen_bool(0.5) { f64::from(rng.gen_range(0..2u8)) } else { rng.gen_range(0.0..=1.0) };
        let g = net.input_gradient(&v, y).unwrap();
        worst_fixed = worst_fixed.max((ground_truth(&v, y, &g, &net, &v).unwrap() - y).abs());
        let y_p = ground_truth(&v, y, &g, &net, &v_p).unwrap();
        let step: f64 = g.iter().zip(&v_p).zip(&v).map(|((g, p), x)| g * (p - x)).sum();
        let expanded = (loss_mse(y, net.forward(&v).unwrap()) + step).abs();
        let residual = (y_p - net.forward(&v_p).unwrap()).powi(2) - expanded;
        worst_square = worst_square.max(residual.abs());
    }
    out.record(
        2,
        worst_fixed <= TAYLOR_TOL && worst_square <= TAYLOR_TOL,
        format!(
            "Taylor identities: {TAYLOR_CASES} cases, max |gt(v,v) - y| = {worst_fixed:.2e}, max squared-candidate residual = {worst_square:.2e} (tol {TAYLOR_TOL:.0e})"
        ),
    );
}

fn direction_algebra(out: &mut Outcome) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(91);
    let mut violations = 0usize;
    for _ in 0..DIRECTION_CASES {
        let len = rng.gen_range(1..=20);
        let draw = |rng: &mut ChaCha8Rng| if rng.gen_bool(0.25) { 0.0 } else { rng.gen_range(-5.0..5.0) };
        let g: Vec<f64> = (0..len).map(|_| draw(&mut rng)).collect();
        let g_cf: Vec<f64> = (0..len).map(|_| draw(&mut rng)).collect();
        let mask: Vec<bool> = (0..len).map(|_| rng.gen_bool(0.3)).collect();
        let ff = dir_ff(&g, &g_cf, &mask).unwrap().values;
        let tb = dir_tb(&g, &g_cf, &mask).unwrap().values;
        let fb = dir_fb(&g, &g_cf, &mask).unwrap().values;
        for i in 0..len {
            let magnitudes_ok = [ff[i], tb[i], fb[i]]
                .iter()
                .all(|d| *d == 0.0 || d.abs() == g[i].abs() || d.abs() == g_cf[i].abs());
            let ok = fb[i] == -tb[i]
                && (ff[i] == 0.0 || tb[i] == 0.0)
                && (!mask[i] || (ff[i] == 0.0 && tb[i] == 0.0 && fb[i] == 0.0))
                && magnitudes_ok;
            violations += usize::from(!ok);
        }
    }
    let elapsed = start.elapsed();
    out.record(
        3,
        violations == 0 && elapsed < DIRECTION_LIMIT,
        format!("direction algebra: {DIRECTION_CASES} cases, {violations} violations, {elapsed:.2?} (limit {DIRECTION_LIMIT:?})"),
    );
}

fn partition_holds(r: &ConfusionReport) -> bool {
    let counts = r.n_tf + r.n_tb + r.n_ff + r.n_fb == r.sum
        && r.n_ff + r.n_fb == r.n_f
        && r.n_tb + r.n_fb == r.n_b
        && r.n_tb + r.n_ff + r.n_fb == r.n_f_or_b;
    let rates = match r.rates {
        Some(x) => x.acc == x.r_tf + x.r_tb && x.individual_fairness == x.r_tf + x.r_ff,
        None => r.sum == 0,
    };
    counts && rates
}

struct SeedRun {
    baseline: ConfusionReport,
    train_time: Duration,
    rf: GenerationRun,
    fgsm: ConfusionReport,
    pgd: ConfusionReport,
    generation_time: Duration,
    retrain_before: ConfusionReport,
    retrain_after: ConfusionReport,
    retrain_time: Duration,
}

fn seed_run(seed: u64) -> SeedRun {
    let (schema, data) = common::german();
    let (train_set, test_set) = split_train_test(&data, seed).unwrap();
    let train_cfg = TrainConfig {
        rng_seed: seed,
        ..TrainConfig::default()
    };
    let start = Instant::now();
    let trained = run_train(&schema, &train_set, &test_set, &train_cfg).unwrap();
    let train_time = start.elapsed();

    let search = SearchConfig {
        rng_seed: seed,
        ..SearchConfig::default()
    };
    let start = Instant::now();
    let rf = run_generation(&trained.network, &schema, &test_set, Technique::RobustFair, &search).unwrap();
    let fgsm = run_generation(&trained.network, &schema, &test_set, Technique::Fgsm, &search).unwrap();
    let pgd = run_generation(&trained.network, &schema, &test_set, Technique::Pgd, &search).unwrap();
    let generation_time = start.elapsed();

    let start = Instant::now();
    let retrained = run_retrain(
        &trained.network,
        &schema,
        &train_set,
        &test_set,
        &rf.instances,
        &rf.categories,
        RETRAIN_FRACTION,
        false,
        &train_cfg,
    )
    .unwrap();
    let retrain_time = start.elapsed();
    SeedRun {
        baseline: trained.test_report,
        train_time,
        rf,
        fgsm: fgsm.report,
        pgd: pgd.report,
        generation_time,
        retrain_before: retrained.before,
        retrain_after: retrained.after,
        retrain_time,
    }
}

fn desk_criteria(out: &mut Outcome) {
    let runs: Vec<SeedRun> = RUN_SEEDS
        .iter()
        .map(|&seed| {
            let run = seed_run(seed);
            println!(
                "  seed {seed}: baseline {:?}; RobustFair N_F|B {} N_FF {} SUM {}; FGSM N_F|B {} N_FF {}; PGD N_F|B {}; retrained ACC {:.3} IF {:.3}; {:.1?} generation",
                run.baseline.rates.map(|r| (r.acc, r.individual_fairness)),
                run.rf.report.n_f_or_b,
                run.rf.report.n_ff,
                run.rf.report.sum,
                run.fgsm.n_f_or_b,
                run.fgsm.n_ff,
                run.pgd.n_f_or_b,
                run.retrain_after.rates.map_or(f64::NAN, |r| r.acc),
                run.retrain_after.rates.map_or(f64::NAN, |r| r.individual_fairness),
                run.generation_time,
            );
            run
        })
        .collect();

    let reports: Vec<&ConfusionReport> = runs
        .iter()
        .flat_map(|r| [&r.rf.report, &r.fgsm, &r.pgd, &r.baseline, &r.retrain_after])
        .collect();
    let broken = reports.iter().filter(|r| !partition_holds(r)).count();
    out.record(
        4,
        broken == 0,
        format!("confusion partition: {} reports checked exactly, {broken} violations", reports.len()),
    );

    let rate = |r: &ConfusionReport, f: fn(&fairsearch::confusion::Rates) -> f64| r.rates.as_ref().map_or(f64::NAN, f);
    let accs: Vec<f64> = runs.iter().map(|r| rate(&r.baseline, |x| x.acc)).collect();
    let ifs: Vec<f64> = runs.iter().map(|r| rate(&r.baseline, |x| x.individual_fairness)).collect();
    let (acc, fair) = (median(accs.clone()), median(ifs.clone()));
    let slowest_train = runs.iter().map(|r| r.train_time).max().unwrap();
    out.record(
        5,
        (acc - BASELINE_ACC).abs() <= BASELINE_ACC_TOL
            && (fair - BASELINE_IF).abs() <= BASELINE_IF_TOL
            && slowest_train < TRAIN_LIMIT,
        format!(
            "baseline model: median ACC {acc:.3} (target {BASELINE_ACC} ± {BASELINE_ACC_TOL}; runs {}), median IF {fair:.3} (target {BASELINE_IF} ± {BASELINE_IF_TOL}; runs {}), slowest training {slowest_train:.2?} (limit {TRAIN_LIMIT:?})",
            fmt_list(&accs),
            fmt_list(&ifs)
        ),
    );

    let ratios = |baseline: fn(&SeedRun) -> u64| -> Vec<f64> {
        runs.iter()
            .map(|r| r.rf.report.n_f_or_b as f64 / (baseline(r) as f64).max(1.0))
            .collect()
    };
    let vs_fgsm = ratios(|r| r.fgsm.n_f_or_b);
    let vs_pgd = ratios(|r| r.pgd.n_f_or_b);
    let generation: Duration = runs.iter().map(|r| r.generation_time).sum();
    let (m_fgsm, m_pgd) = (median(vs_fgsm.clone()), median(vs_pgd.clone()));
    out.record(
        6,
        m_fgsm >= DETECTION_FACTOR && m_pgd >= DETECTION_FACTOR && generation < DETECTION_LIMIT,
        format!(
            "comparative detection: median N_F|B ratio vs FGSM {m_fgsm:.2} (runs {}), vs PGD {m_pgd:.2} (runs {}), floor {DETECTION_FACTOR}; {generation:.1?} for all runs (limit {DETECTION_LIMIT:?})",
            fmt_list(&vs_fgsm),
            fmt_list(&vs_pgd)
        ),
    );

    let rf_ff: Vec<f64> = runs.iter().map(|r| r.rf.report.n_ff as f64).collect();
    let fgsm_ff: Vec<f64> = runs.iter().map(|r| r.fgsm.n_ff as f64).collect();
    let (m_rf, m_fg) = (median(rf_ff.clone()), median(fgsm_ff.clone()));
    out.record(
        7,
        m_rf > 0.0 && m_rf >= m_fg,
        format!(
            "false-fair discovery: median RobustFair N_FF {m_rf} (runs {:?}) vs FGSM N_FF {m_fg} (runs {:?})",
            rf_ff, fgsm_ff
        ),
    );

    let if_gain: Vec<f64> = runs
        .iter()
        .map(|r| rate(&r.retrain_after, |x| x.individual_fairness) - rate(&r.retrain_before, |x| x.individual_fairness))
        .collect();
    let acc_change: Vec<f64> = runs
        .iter()
        .map(|r| rate(&r.retrain_after, |x| x.acc) - rate(&r.retrain_before, |x| x.acc))
        .collect();
    let retrain: Duration = runs.iter().map(|r| r.retrain_time).sum();
    let (m_gain, m_acc) = (median(if_gain.clone()), median(acc_change.clone()));
    out.record(
        8,
        m_gain >= RETRAIN_IF_GAIN && m_acc >= -RETRAIN_ACC_DROP && retrain < RETRAIN_LIMIT,
        format!(
            "retraining direction: median IF change {m_gain:+.3} (need ≥ +{RETRAIN_IF_GAIN}; runs {}), median ACC change {m_acc:+.3} (need ≥ -{RETRAIN_ACC_DROP}; runs {}), {retrain:.1?} for all retrains (limit {RETRAIN_LIMIT:?})",
            fmt_list(&if_gain),
            fmt_list(&acc_change)
        ),
    );
}

fn fairsearch(args: &[&str]) -> bool {
    let out = Command::new(env!("CARGO_BIN_EXE_fairsearch")).args(args).output().unwrap();
    if !out.status.success() {
        println!("  command {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    }
    out.status.success()
}

/// Run every command twice into separate directories and list the report
/// files that differ.
fn determinism(out: &mut Outcome) {
    let tmp = tempfile::TempDir::new().unwrap();
    let (data, schema) = common::german_paths();
    let (data, schema) = (data.to_str().unwrap().to_owned(), schema.to_str().unwrap().to_owned());
    let search = ["--seeds", "20", "--rng-seed", "3"];
    let mut compared = 0;
    let mut differing = Vec::new();
    for copy in ["a", "b"] {
        let dir = tmp.path().join(copy);
        let p = |name: &str| dir.join(name).to_str().unwrap().to_owned();
        let model = p("train/model.json");
        let mut ok = fairsearch(&["train", "--dataset", &data, "--schema", &schema, "--rng-seed", "3", "--out", &p("train")]);
        for technique in ["robustfair", "fgsm", "pgd"] {
            let mut args = vec!["generate", "--dataset", &data, "--schema", &schema, "--model", &model, "--technique", technique];
            let out_dir = p(technique);
            args.extend(search);
            args.extend(["--out", &out_dir]);
            ok &= fairsearch(&args);
        }
        let meta = p("robustfair/instances.meta.json");
        ok &= fairsearch(&[
            "retrain", "--dataset", &data, "--schema", &schema, "--model", &model, "--instances", &meta, "--out", &p("retrain"),
        ]);
        ok &= fairsearch(&["report", "--schema", &schema, "--model", &model, "--instances", &meta, "--out", &p("report")]);
        let mut sweep = vec!["sweep", "--dataset", &data, "--schema", &schema, "--model", &model, "--seeds-grid", "10,20"];
        let sweep_dir = p("sweep");
        sweep.extend(["--rng-seed", "3", "--out", &sweep_dir]);
        ok &= fairsearch(&sweep);
        if !ok {
            differing.push(format!("{copy}: command failed"));
        }
    }
    let files = [
        "train/model.json",
        "train/report.json",
        "train/report.csv",
        "robustfair/report.json",
        "robustfair/report.csv",
        "robustfair/instances.csv",
        "robustfair/instances.meta.json",
        "fgsm/report.json",
        "fgsm/instances.csv",
        "pgd/report.json",
        "pgd/instances.csv",
        "retrain/model.json",
        "retrain/retrain_report.json",
        "retrain/retrain_report.csv",
        "report/report.json",
        "sweep/sweep.csv",
    ];
    for f in files {
        compared += 1;
        let read = |copy: &str| fs::read(tmp.path().join(copy).join(Path::new(f))).ok();
        let (a, b) = (read("a"), read("b"));
        if a.is_none() || a != b {
            differing.push(f.to_owned());
        }
    }
    out.record(
        9,
        differing.is_empty(),
        format!("determinism: {compared} output files from train/generate/retrain/report/sweep repeated twice, differing: {differing:?}"),
    );
}

fn main() -> ExitCode {
    let mut out = Outcome { results: Vec::new() };
    gradient_oracle(&mut out);
    taylor_identities(&mut out);
    direction_algebra(&mut out);
    desk_criteria(&mut out);
    determinism(&mut out);
    out.results.sort_by_key(|r| r.0);
    let failed: Vec<u8> = out.results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    println!(
        "acceptance: {} of {} criteria pass{}",
        out.results.len() - failed.len(),
        out.results.len(),
        if failed.is_empty() { String::new() } else { format!("; failing: {failed:?}") }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
