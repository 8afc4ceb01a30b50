//! End-to-end commands: train a baseline, generate and classify adversarial
//! instances, retrain on detected defects, and sweep search parameters.
//!
//! The `run_*` functions work in memory and are what the acceptance tests
//! drive; the `cmd_*` functions wrap them with file I/O for the CLI.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::confusion::{tally, Classifier, ConfusionReport, FairnessCategory};
use crate::data::{kmeans_seeds, load_dataset, DatasetSchema, GeneratedInstance, Instance, Provenance, SimilarPopulation};
use crate::error::{Error, Result};
use crate::generate::{sample_with_replacement, stream_rng, Generator, SearchConfig, SearchStats};
use crate::io;
use crate::nncore::{load_model, save_model, train, DenseNetwork, TrainConfig, DEFAULT_THRESHOLD};
use crate::perturb::binarize_ground_truth;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const TEST_FRACTION: f64 = 0.2;
pub const DEFAULT_RETRAIN_FRACTION: f64 = 0.10;

const STAGE_SPLIT: u64 = 10;
const STAGE_SEEDS: u64 = 11;
const STAGE_CLASSIFY: u64 = 12;
const STAGE_RETRAIN: u64 = 13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Technique {
    RobustFair,
    Fgsm,
    Pgd,
}

impl std::fmt::Display for Technique {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Technique::RobustFair => "robustfair",
            Technique::Fgsm => "fgsm",
            Technique::Pgd => "pgd",
        })
    }
}

/// Seeded 80/20 split; returns `(train, test)`.
pub fn split_train_test(data: &[Instance], rng_seed: u64) -> Result<(Vec<Instance>, Vec<Instance>)> {
    if data.len() < 2 {
        return Err(Error::Config("need at least two rows to split".into()));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut stream_rng(rng_seed, STAGE_SPLIT, 0));
    let n_test = ((data.len() as f64 * TEST_FRACTION).round() as usize).clamp(1, data.len() - 1);
    let test = order[..n_test].iter().map(|&i| data[i].clone()).collect();
    let train = order[n_test..].iter().map(|&i| data[i].clone()).collect();
    Ok((train, test))
}

/// Classify `(features, label)` pairs against their similar sub-populations.
/// Capped populations draw instance `i`'s members from a stream keyed by
/// `rng_seed` and `i`.
pub fn classify_all<'a, I>(
    net: &DenseNetwork,
    population: &SimilarPopulation,
    instances: I,
    rng_seed: u64,
) -> Result<Vec<FairnessCategory>>
where
    I: IntoIterator<Item = (&'a [f64], u8)>,
{
    let mut classifier = Classifier::new(net, population, DEFAULT_THRESHOLD)?;
    Ok(instances
        .into_iter()
        .enumerate()
        .map(|(i, (v, y))| {
            let mut rng = stream_rng(rng_seed, STAGE_CLASSIFY, i as u64);
            classifier.classify(v, y, &mut rng)
        })
        .collect())
}

/// Confusion report of `net` on labeled data (ACC, IF and the four rates).
pub fn evaluate(net: &DenseNetwork, schema: &DatasetSchema, data: &[Instance], cap: usize, rng_seed: u64) -> Result<ConfusionReport> {
    let population = SimilarPopulation::new(schema, cap)?;
    let categories = classify_all(
        net,
        &population,
        data.iter().map(|d| (d.features.as_slice(), binarize_ground_truth(d.label))),
        rng_seed,
    )?;
    Ok(tally(&categories))
}

fn as_pairs(data: &[Instance]) -> Vec<(&[f64], f64)> {
    data.iter().map(|d| (d.features.as_slice(), d.label)).collect()
}

#[derive(Clone, Debug)]
pub struct TrainRun {
    pub network: DenseNetwork,
    pub final_loss: f64,
    pub test_report: ConfusionReport,
}

/// Train the default six-layer classifier on `train_set` and evaluate it on
/// `test_set`.
pub fn run_train(schema: &DatasetSchema, train_set: &[Instance], test_set: &[Instance], cfg: &TrainConfig) -> Result<TrainRun> {
    let net = DenseNetwork::fcnn6(schema.feature_dim(), cfg.rng_seed)?;
    let outcome = train(net, &as_pairs(train_set), cfg)?;
    let test_report = evaluate(&outcome.network, schema, test_set, crate::data::DEFAULT_COUNTERPART_CAP, cfg.rng_seed)?;
    Ok(TrainRun {
        network: outcome.network,
        final_loss: outcome.final_loss,
        test_report,
    })
}

#[derive(Clone, Debug)]
pub struct GenerationRun {
    pub technique: Technique,
    pub instances: Vec<GeneratedInstance>,
    pub categories: Vec<FairnessCategory>,
    pub report: ConfusionReport,
    pub stats: SearchStats,
}

/// Generate with `technique` from `test_set` and classify every emission
/// against its (approximated or carried-over) label.
pub fn run_generation(
    net: &DenseNetwork,
    schema: &DatasetSchema,
    test_set: &[Instance],
    technique: Technique,
    cfg: &SearchConfig,
) -> Result<GenerationRun> {
    let generator = Generator::new(net, schema, cfg)?;
    let mut rng = stream_rng(cfg.rng_seed, STAGE_SEEDS, 0);
    let (instances, stats) = match technique {
        Technique::RobustFair => {
            let seeds = kmeans_seeds(test_set, cfg.clusters, cfg.n_seeds, &mut rng)?;
            let out = generator.robustfair(&seeds)?;
            let stats = out.stats();
            (out.into_instances(), stats)
        }
        Technique::Pgd => {
            let seeds = kmeans_seeds(test_set, cfg.clusters, cfg.n_seeds, &mut rng)?;
            let out = generator.pgd(&seeds)?;
            (out.instances, out.stats)
        }
        Technique::Fgsm => {
            let samples = sample_with_replacement(test_set, cfg.n_seeds * cfg.pgd_steps, &mut rng)?;
            let out = generator.fgsm(&samples, cfg.pgd_eps)?;
            (out.instances, out.stats)
        }
    };
    let categories = classify_generated(net, generator.population(), &instances, cfg.rng_seed)?;
    let report = tally(&categories);
    Ok(GenerationRun {
        technique,
        instances,
        categories,
        report,
        stats,
    })
}

pub fn classify_generated(
    net: &DenseNetwork,
    population: &SimilarPopulation,
    instances: &[GeneratedInstance],
    rng_seed: u64,
) -> Result<Vec<FairnessCategory>> {
    classify_all(
        net,
        population,
        instances
            .iter()
            .map(|g| (g.features.as_slice(), binarize_ground_truth(g.approx_label))),
        rng_seed,
    )
}

#[derive(Clone, Debug)]
pub struct RetrainRun {
    pub network: DenseNetwork,
    pub before: ConfusionReport,
    pub after: ConfusionReport,
    pub detected: usize,
    pub sampled: usize,
}

/// Pick `fraction` of the false-or-biased instances (uniformly, or per
/// category when `stratified`), labeled by their binarized ground truth.
pub fn sample_detected(
    instances: &[GeneratedInstance],
    categories: &[FairnessCategory],
    fraction: f64,
    stratified: bool,
    rng_seed: u64,
) -> Result<Vec<Instance>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!("fraction {fraction} must lie in (0, 1]")));
    }
    if instances.len() != categories.len() {
        return Err(Error::Shape {
            expected: instances.len(),
            actual: categories.len(),
        });
    }
    let take = |n: usize| ((n as f64 * fraction).round() as usize).clamp(1, n);
    let mut rng = stream_rng(rng_seed, STAGE_RETRAIN, 0);
    let groups: Vec<Vec<usize>> = if stratified {
        [FairnessCategory::TB, FairnessCategory::FF, FairnessCategory::FB]
            .iter()
            .map(|c| (0..categories.len()).filter(|&i| categories[i] == *c).collect())
            .collect()
    } else {
        vec![(0..categories.len()).filter(|&i| categories[i].is_defect()).collect()]
    };
    if groups.iter().all(|g| g.is_empty()) {
        return Err(Error::Config("no false or biased instances to retrain on".into()));
    }
    let mut chosen = Vec::new();
    for group in groups.iter().filter(|g| !g.is_empty()) {
        let mut picks: Vec<usize> = index::sample(&mut rng, group.len(), take(group.len()))
            .into_iter()
            .map(|k| group[k])
            .collect();
        picks.sort_unstable();
        chosen.extend(picks);
    }
    chosen.sort_unstable();
    Ok(chosen
        .into_iter()
        .map(|i| {
            let g = &instances[i];
            Instance::new(g.features.clone(), f64::from(binarize_ground_truth(g.approx_label)))
        })
        .collect())
}

/// Retrain from scratch on `train_set` plus the sampled defects and compare
/// `baseline` with the retrained model on the untouched `test_set`.
#[allow(clippy::too_many_arguments)]
pub fn run_retrain(
    baseline: &DenseNetwork,
    schema: &DatasetSchema,
    train_set: &[Instance],
    test_set: &[Instance],
    instances: &[GeneratedInstance],
    categories: &[FairnessCategory],
    fraction: f64,
    stratified: bool,
    cfg: &TrainConfig,
) -> Result<RetrainRun> {
    let sampled = sample_detected(instances, categories, fraction, stratified, cfg.rng_seed)?;
    let detected = categories.iter().filter(|c| c.is_defect()).count();
    let mut augmented = train_set.to_vec();
    augmented.extend(sampled.iter().cloned());
    let net = DenseNetwork::fcnn6(schema.feature_dim(), cfg.rng_seed)?;
    let outcome = train(net, &as_pairs(&augmented), cfg)?;
    let cap = crate::data::DEFAULT_COUNTERPART_CAP;
    Ok(RetrainRun {
        before: evaluate(baseline, schema, test_set, cap, cfg.rng_seed)?,
        after: evaluate(&outcome.network, schema, test_set, cap, cfg.rng_seed)?,
        network: outcome.network,
        detected,
        sampled: sampled.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n_seeds: usize,
    pub global_iter: usize,
    pub local_iter: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub point: SweepPoint,
    pub report: ConfusionReport,
    pub truncated: bool,
}

pub fn run_sweep(
    net: &DenseNetwork,
    schema: &DatasetSchema,
    test_set: &[Instance],
    technique: Technique,
    base: &SearchConfig,
    grid: &[SweepPoint],
) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    grid.iter()
        .map(|p| {
            let cfg = SearchConfig {
                n_seeds: p.n_seeds,
                global_iter: p.global_iter,
                local_iter: p.local_iter,
                ..base.clone()
            };
            let run = run_generation(net, schema, test_set, technique, &cfg)?;
            Ok(SweepRow {
                point: p.clone(),
                report: run.report,
                truncated: run.stats.truncated,
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("n_seeds,global_iter,local_iter,N_F,N_B,N_F|B,SUM,truncated\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.point.n_seeds,
            r.point.global_iter,
            r.point.local_iter,
            r.report.n_f,
            r.report.n_b,
            r.report.n_f_or_b,
            r.report.sum,
            r.truncated
        );
    }
    out
}

/// Everything needed to reproduce a command's outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub dataset: PathBuf,
    pub schema: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub technique: Option<Technique>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fraction: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub inputs: Vec<PathBuf>,
    pub output_dir: PathBuf,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(command: &str, dataset: &Path, schema: &Path, output_dir: &Path) -> Self {
        RunManifest {
            tool: "fairsearch".into(),
            version: TOOL_VERSION.into(),
            command: command.into(),
            dataset: dataset.to_path_buf(),
            schema: schema.to_path_buf(),
            model: None,
            technique: None,
            search: None,
            train: None,
            fraction: None,
            inputs: Vec::new(),
            output_dir: output_dir.to_path_buf(),
            timestamp: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    fn check_paths(&self) -> Result<()> {
        let paths = [Some(&self.dataset), Some(&self.schema), self.model.as_ref()];
        for p in paths.into_iter().flatten().chain(&self.inputs) {
            if !p.exists() {
                return Err(Error::MissingFile(p.clone()));
            }
        }
        Ok(())
    }

    fn write(&self) -> Result<()> {
        io::write_json(&self.output_dir.join("manifest.json"), self)
    }
}

fn write_report(dir: &Path, report: &ConfusionReport) -> Result<()> {
    io::write_json(&dir.join("report.json"), report)?;
    io::write_atomic(&dir.join("report.csv"), report.to_csv().as_bytes())
}

fn load_split(dataset: &Path, schema_path: &Path, split_seed: u64) -> Result<(DatasetSchema, Vec<Instance>, Vec<Instance>)> {
    let schema = DatasetSchema::load(schema_path)?;
    let data = load_dataset(dataset, &schema)?;
    let (train_set, test_set) = split_train_test(&data, split_seed)?;
    Ok((schema, train_set, test_set))
}

/// Model plus the config that trained it; a model without one is rejected.
fn load_trained(model: &Path) -> Result<(DenseNetwork, TrainConfig)> {
    let (net, cfg) = load_model(model)?;
    let cfg = cfg.ok_or_else(|| Error::Config(format!("{} carries no training config", model.display())))?;
    Ok((net, cfg))
}

#[derive(Clone, Debug)]
pub struct TrainArgs {
    pub dataset: PathBuf,
    pub schema: PathBuf,
    pub out: PathBuf,
    pub train: TrainConfig,
}

/// Writes `model.json`, `report.json`, `report.csv` and `manifest.json`.
pub fn cmd_train(args: &TrainArgs) -> Result<TrainRun> {
    let mut manifest = RunManifest::new("train", &args.dataset, &args.schema, &args.out);
    manifest.train = Some(args.train.clone());
    manifest.check_paths()?;
    let (schema, train_set, test_set) = load_split(&args.dataset, &args.schema, args.train.rng_seed)?;
    let run = run_train(&schema, &train_set, &test_set, &args.train)?;
    save_model(&args.out.join("model.json"), &run.network, Some(&args.train))?;
    write_report(&args.out, &run.test_report)?;
    manifest.write()?;
    Ok(run)
}

#[derive(Clone, Debug)]
pub struct GenerateArgs {
    pub dataset: PathBuf,
    pub schema: PathBuf,
    pub model: PathBuf,
    pub technique: Technique,
    pub search: SearchConfig,
    pub out: PathBuf,
}

#[derive(Serialize, Deserialize)]
struct MetaEntry {
    features: Vec<f64>,
    approx_label: f64,
    label: u8,
    category: FairnessCategory,
    provenance: Provenance,
}

#[derive(Deserialize)]
struct MetaFile {
    technique: Technique,
    classification_seed: u64,
    counterpart_cap: usize,
    instances: Vec<MetaEntry>,
}

/// Instances as stored in a sidecar file.
#[derive(Clone, Debug)]
pub struct InstanceFile {
    pub technique: Technique,
    pub classification_seed: u64,
    pub counterpart_cap: usize,
    pub instances: Vec<GeneratedInstance>,
    pub categories: Vec<FairnessCategory>,
}

pub fn read_instances(path: &Path) -> Result<InstanceFile> {
    let file: MetaFile = io::read_json(path)?;
    let (instances, categories) = file
        .instances
        .into_iter()
        .map(|e| {
            (
                GeneratedInstance {
                    features: e.features,
                    approx_label: e.approx_label,
                    provenance: e.provenance,
                },
                e.category,
            )
        })
        .unzip();
    Ok(InstanceFile {
        technique: file.technique,
        classification_seed: file.classification_seed,
        counterpart_cap: file.counterpart_cap,
        instances,
        categories,
    })
}

fn write_instances(dir: &Path, schema: &DatasetSchema, run: &GenerationRun, cfg: &SearchConfig) -> Result<()> {
    let meta_path = dir.join("instances.meta.json");
    io::write_atomic_with(&meta_path, |out| {
        let json_err = |e| Error::Json {
            path: meta_path.clone(),
            source: e,
        };
        write!(
            out,
            "{{\"technique\":\"{}\",\"classification_seed\":{},\"counterpart_cap\":{},\"instances\":[",
            run.technique, cfg.rng_seed, cfg.counterpart_cap
        )
        .map_err(|e| Error::io(&meta_path, e))?;
        for (i, (g, c)) in run.instances.iter().zip(&run.categories).enumerate() {
            if i > 0 {
                out.write_all(b",\n").map_err(|e| Error::io(&meta_path, e))?;
            }
            let entry = MetaEntry {
                features: g.features.clone(),
                approx_label: g.approx_label,
                label: binarize_ground_truth(g.approx_label),
                category: *c,
                provenance: g.provenance,
            };
            serde_json::to_writer(&mut *out, &entry).map_err(json_err)?;
        }
        out.write_all(b"]}\n").map_err(|e| Error::io(&meta_path, e))
    })?;

    let csv_path = dir.join("instances.csv");
    io::write_atomic_with(&csv_path, |out| {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e| Error::Csv {
            path: csv_path.clone(),
            source: e,
        };
        let mut header: Vec<String> = schema.features().map(|a| a.name.clone()).collect();
        header.push(schema.label().name.clone());
        header.extend(["category", "phase", "direction", "seed_id", "iteration"].map(String::from));
        w.write_record(&header).map_err(csv_err)?;
        for (g, c) in run.instances.iter().zip(&run.categories) {
            let mut row = schema.decode_features(&g.features);
            row.push(schema.decode_label(binarize_ground_truth(g.approx_label)));
            row.push(format!("{c:?}"));
            row.push(format!("{:?}", g.provenance.phase).to_lowercase());
            row.push(format!("{:?}", g.provenance.direction));
            row.push(g.provenance.seed_id.to_string());
            row.push(g.provenance.iteration.to_string());
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(&csv_path, e))
    })
}

/// Writes `instances.csv`, `instances.meta.json`, `report.json`,
/// `report.csv`, `stats.json` and `manifest.json`.
pub fn cmd_generate(args: &GenerateArgs) -> Result<GenerationRun> {
    let mut manifest = RunManifest::new("generate", &args.dataset, &args.schema, &args.out);
    manifest.model = Some(args.model.clone());
    manifest.technique = Some(args.technique);
    manifest.search = Some(args.search.clone());
    manifest.check_paths()?;
    let (net, train_cfg) = load_trained(&args.model)?;
    let (schema, _, test_set) = load_split(&args.dataset, &args.schema, train_cfg.rng_seed)?;
    let run = run_generation(&net, &schema, &test_set, args.technique, &args.search)?;
    write_instances(&args.out, &schema, &run, &args.search)?;
    write_report(&args.out, &run.report)?;
    io::write_json(&args.out.join("stats.json"), &run.stats)?;
    manifest.write()?;
    Ok(run)
}

#[derive(Clone, Debug)]
pub struct ReportArgs {
    pub schema: PathBuf,
    pub model: PathBuf,
    pub instances: PathBuf,
    pub out: PathBuf,
}

/// Re-classify a written instance file and write its report.
pub fn cmd_report(args: &ReportArgs) -> Result<ConfusionReport> {
    let (net, _) = load_trained(&args.model)?;
    let schema = DatasetSchema::load(&args.schema)?;
    let file = read_instances(&args.instances)?;
    let population = SimilarPopulation::new(&schema, file.counterpart_cap)?;
    let categories = classify_generated(&net, &population, &file.instances, file.classification_seed)?;
    let report = tally(&categories);
    write_report(&args.out, &report)?;
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct RetrainArgs {
    pub dataset: PathBuf,
    pub schema: PathBuf,
    pub model: PathBuf,
    pub instances: Vec<PathBuf>,
    pub fraction: f64,
    pub stratified: bool,
    pub out: PathBuf,
}

#[derive(Serialize)]
struct RetrainReport<'a> {
    technique: String,
    detected: usize,
    sampled: usize,
    baseline: &'a ConfusionReport,
    retrained: &'a ConfusionReport,
}

fn retrain_table(technique: &str, before: &ConfusionReport, after: &ConfusionReport) -> String {
    let mut out = format!("metric,BL,Re-{technique}\n");
    let pick = |r: &ConfusionReport| r.rates.map(|r| [r.acc, r.individual_fairness, r.r_tf, r.r_tb, r.r_ff, r.r_fb]);
    let (b, a) = (pick(before), pick(after));
    for (i, name) in ["ACC", "IF", "R_TF", "R_TB", "R_FF", "R_FB"].iter().enumerate() {
        let cell = |r: Option<[f64; 6]>| r.map(|r| r[i].to_string()).unwrap_or_default();
        let _ = writeln!(out, "{name},{},{}", cell(b), cell(a));
    }
    out
}

/// Writes the retrained `model.json`, `retrain_report.json`,
/// `retrain_report.csv` and `manifest.json`.
pub fn cmd_retrain(args: &RetrainArgs) -> Result<RetrainRun> {
    if args.instances.is_empty() {
        return Err(Error::Config("no adversarial instance files given".into()));
    }
    if !(args.fraction > 0.0 && args.fraction <= 1.0) {
        return Err(Error::Config(format!("fraction {} must lie in (0, 1]", args.fraction)));
    }
    let mut manifest = RunManifest::new("retrain", &args.dataset, &args.schema, &args.out);
    manifest.model = Some(args.model.clone());
    manifest.fraction = Some(args.fraction);
    manifest.inputs = args.instances.clone();
    manifest.check_paths()?;
    let (net, train_cfg) = load_trained(&args.model)?;
    manifest.train = Some(train_cfg.clone());
    let (schema, train_set, test_set) = load_split(&args.dataset, &args.schema, train_cfg.rng_seed)?;

    let mut instances = Vec::new();
    let mut categories = Vec::new();
    let mut techniques = Vec::new();
    for path in &args.instances {
        let file = read_instances(path)?;
        techniques.push(file.technique.to_string());
        instances.extend(file.instances);
        categories.extend(file.categories);
    }
    if instances.is_empty() {
        return Err(Error::Config("adversarial instance files are empty".into()));
    }
    let run = run_retrain(
        &net,
        &schema,
        &train_set,
        &test_set,
        &instances,
        &categories,
        args.fraction,
        args.stratified,
        &train_cfg,
    )?;
    let technique = techniques.join("+");
    save_model(&args.out.join("model.json"), &run.network, Some(&train_cfg))?;
    io::write_json(
        &args.out.join("retrain_report.json"),
        &RetrainReport {
            technique: technique.clone(),
            detected: run.detected,
            sampled: run.sampled,
            baseline: &run.before,
            retrained: &run.after,
        },
    )?;
    io::write_atomic(
        &args.out.join("retrain_report.csv"),
        retrain_table(&technique, &run.before, &run.after).as_bytes(),
    )?;
    manifest.write()?;
    Ok(run)
}

#[derive(Clone, Debug)]
pub struct SweepArgs {
    pub dataset: PathBuf,
    pub schema: PathBuf,
    pub model: PathBuf,
    pub technique: Technique,
    pub search: SearchConfig,
    pub grid: Vec<SweepPoint>,
    pub out: PathBuf,
}

/// Writes `sweep.csv` and `manifest.json`.
pub fn cmd_sweep(args: &SweepArgs) -> Result<Vec<SweepRow>> {
    if args.grid.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    let mut manifest = RunManifest::new("sweep", &args.dataset, &args.schema, &args.out);
    manifest.model = Some(args.model.clone());
    manifest.technique = Some(args.technique);
    manifest.search = Some(args.search.clone());
    manifest.check_paths()?;
    let (net, train_cfg) = load_trained(&args.model)?;
    let (schema, _, test_set) = load_split(&args.dataset, &args.schema, train_cfg.rng_seed)?;
    let rows = run_sweep(&net, &schema, &test_set, args.technique, &args.search, &args.grid)?;
    io::write_atomic(&args.out.join("sweep.csv"), sweep_csv(&rows).as_bytes())?;
    manifest.write()?;
    Ok(rows)
}

/// Cartesian grid of seed counts and iteration counts (global = local).
pub fn sweep_grid(seeds: &[usize], iterations: &[usize]) -> Vec<SweepPoint> {
    seeds
        .iter()
        .flat_map(|&n| {
            iterations.iter().map(move |&it| SweepPoint {
                n_seeds: n,
                global_iter: it,
                local_iter: it,
            })
        })
        .collect()
}
