use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fairsearch::confusion::ConfusionReport;
use fairsearch::generate::{SearchConfig, DEFAULT_MAX_POOL};
use fairsearch::harness::{self, Technique, DEFAULT_RETRAIN_FRACTION};
use fairsearch::nncore::{Optimizer, TrainConfig};
use fairsearch::Error;

#[derive(Parser)]
#[command(name = "fairsearch", version, about = "Accurate-fairness adversarial testing for tabular classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a baseline classifier on an 80/20 split and report test metrics.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate adversarial instances and classify them.
    Generate {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value = "robustfair")]
        technique: TechniqueArg,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Retrain on a sample of detected false or biased instances.
    Retrain {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        model: PathBuf,
        /// `instances.meta.json` files written by `generate`.
        #[arg(long = "instances", required = true)]
        instances: Vec<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_RETRAIN_FRACTION)]
        fraction: f64,
        /// Sample the fraction separately within TB, FF and FB.
        #[arg(long)]
        stratified: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run generation over a grid of seed and iteration counts.
    Sweep {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value = "robustfair")]
        technique: TechniqueArg,
        #[command(flatten)]
        search: SearchArgs,
        /// Seed counts, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = [100, 200, 300, 400, 500])]
        seeds_grid: Vec<usize>,
        /// Global and local iteration counts, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = [5])]
        iter_grid: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute the report of a written instance file.
    Report {
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        instances: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    schema: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, default_value_t = TrainConfig::default().epochs)]
    epochs: usize,
    #[arg(long, default_value_t = TrainConfig::default().batch_size)]
    batch_size: usize,
    #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
    lr: f64,
    #[arg(long, value_enum, default_value = "adam")]
    optimizer: OptimizerArg,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long = "seeds", default_value_t = SearchConfig::default().n_seeds)]
    n_seeds: usize,
    #[arg(long, default_value_t = SearchConfig::default().global_iter)]
    global_iter: usize,
    #[arg(long, default_value_t = SearchConfig::default().local_iter)]
    local_iter: usize,
    #[arg(long, default_value_t = SearchConfig::default().step)]
    step: f64,
    #[arg(long, default_value_t = SearchConfig::default().pgd_eps)]
    eps: f64,
    #[arg(long, default_value_t = SearchConfig::default().pgd_alpha)]
    alpha: f64,
    #[arg(long, default_value_t = SearchConfig::default().pgd_steps)]
    pgd_steps: usize,
    #[arg(long, default_value_t = SearchConfig::default().clusters)]
    clusters: usize,
    #[arg(long, default_value_t = SearchConfig::default().counterpart_cap)]
    counterpart_cap: usize,
    /// Cap on each global round's pool (sweeps default to 50000).
    #[arg(long)]
    max_pool: Option<usize>,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
}

impl SearchArgs {
    fn config(&self, default_pool: Option<usize>) -> SearchConfig {
        SearchConfig {
            n_seeds: self.n_seeds,
            global_iter: self.global_iter,
            local_iter: self.local_iter,
            step: self.step,
            pgd_eps: self.eps,
            pgd_alpha: self.alpha,
            pgd_steps: self.pgd_steps,
            rng_seed: self.rng_seed,
            clusters: self.clusters,
            counterpart_cap: self.counterpart_cap,
            max_pool: self.max_pool.or(default_pool),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TechniqueArg {
    Robustfair,
    Fgsm,
    Pgd,
}

impl From<TechniqueArg> for Technique {
    fn from(t: TechniqueArg) -> Self {
        match t {
            TechniqueArg::Robustfair => Technique::RobustFair,
            TechniqueArg::Fgsm => Technique::Fgsm,
            TechniqueArg::Pgd => Technique::Pgd,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OptimizerArg {
    Sgd,
    Adam,
}

fn print_report(label: &str, r: &ConfusionReport) {
    println!(
        "{label}: N_F={} N_B={} N_F|B={} N_TF={} N_TB={} N_FF={} N_FB={} SUM={}",
        r.n_f, r.n_b, r.n_f_or_b, r.n_tf, r.n_tb, r.n_ff, r.n_fb, r.sum
    );
    if let Some(x) = r.rates {
        println!(
            "{label}: ACC={:.4} IF={:.4} R_TF={:.4} R_TB={:.4} R_FF={:.4} R_FB={:.4}",
            x.acc, x.individual_fairness, x.r_tf, x.r_tb, x.r_ff, x.r_fb
        );
    }
}

fn warn_local_iter(search: &SearchConfig, schema: &std::path::Path) {
    if let Ok(s) = fairsearch::data::DatasetSchema::load(schema) {
        let non_sensitive = s.sensitive_mask().iter().filter(|m| !**m).count();
        if search.local_iter > non_sensitive {
            eprintln!(
                "warning: local iterations clamped from {} to {non_sensitive} non-sensitive attributes",
                search.local_iter
            );
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Train { data, train, out } => {
            let run = harness::cmd_train(&harness::TrainArgs {
                dataset: data.dataset,
                schema: data.schema,
                out,
                train: TrainConfig {
                    epochs: train.epochs,
                    batch_size: train.batch_size,
                    learning_rate: train.lr,
                    optimizer: match train.optimizer {
                        OptimizerArg::Sgd => Optimizer::Sgd,
                        OptimizerArg::Adam => Optimizer::Adam,
                    },
                    rng_seed: train.rng_seed,
                },
            })?;
            println!("final training loss: {:.6}", run.final_loss);
            print_report("test", &run.test_report);
        }
        Command::Generate {
            data,
            model,
            technique,
            search,
            out,
        } => {
            let search = search.config(None);
            warn_local_iter(&search, &data.schema);
            let run = harness::cmd_generate(&harness::GenerateArgs {
                dataset: data.dataset,
                schema: data.schema,
                model,
                technique: technique.into(),
                search,
                out,
            })?;
            println!(
                "{}: {} instances, {} gradient evaluations",
                run.technique, run.stats.emitted, run.stats.gradient_evaluations
            );
            print_report("generated", &run.report);
        }
        Command::Retrain {
            data,
            model,
            instances,
            fraction,
            stratified,
            out,
        } => {
            let run = harness::cmd_retrain(&harness::RetrainArgs {
                dataset: data.dataset,
                schema: data.schema,
                model,
                instances,
                fraction,
                stratified,
                out,
            })?;
            println!("retrained on {} of {} detected instances", run.sampled, run.detected);
            print_report("baseline", &run.before);
            print_report("retrained", &run.after);
        }
        Command::Sweep {
            data,
            model,
            technique,
            search,
            seeds_grid,
            iter_grid,
            out,
        } => {
            let rows = harness::cmd_sweep(&harness::SweepArgs {
                dataset: data.dataset,
                schema: data.schema,
                model,
                technique: technique.into(),
                search: search.config(Some(DEFAULT_MAX_POOL)),
                grid: harness::sweep_grid(&seeds_grid, &iter_grid),
                out,
            })?;
            print!("{}", harness::sweep_csv(&rows));
        }
        Command::Report {
            schema,
            model,
            instances,
            out,
        } => {
            let report = harness::cmd_report(&harness::ReportArgs {
                schema,
                model,
                instances,
                out,
            })?;
            print_report("report", &report);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
