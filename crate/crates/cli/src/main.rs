//! `caution` — experiment runner and verification CLI.
//!
//! Exit statuses: 0 success / all checks pass, 1 verification failure,
//! 2 usage or config error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use caution_core::harness::{
    load_config, read_results, run_simulation, summarize, write_results, OutputFormat,
};
use caution_core::predictor::{
    load_predictor, read_jsonl, rerank, save_predictor, train_predictor, uncertainty_score,
    RerankerConfig, TrainConfig,
};
use caution_core::rewards::fit_normalizer;
use caution_core::verify::{run_verification, VerifyLevel, VerifyOptions};

#[derive(Parser)]
#[command(
    name = "caution",
    about = "Pessimistic Best-of-N selection experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Fast,
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo experiment described by a TOML config.
    Simulate {
        /// Experiment config file.
        #[arg(long)]
        config: PathBuf,
        /// Output path; defaults to results.<format> under the output
        /// directory ($CAUTION_OUT_DIR or the working directory).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        /// Worker threads; defaults to $CAUTION_WORKERS or all cores.
        #[arg(long)]
        workers: Option<usize>,
        /// Override the config's trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the built-in verification suite against the closed-form targets.
    Verify {
        #[arg(long, value_enum, default_value = "full")]
        level: LevelArg,
        /// Worker threads; defaults to $CAUTION_WORKERS or all cores.
        #[arg(long)]
        workers: Option<usize>,
        /// Test hook: corrupt one oracle to exercise the failure path.
        #[arg(long, hide = true)]
        corrupt_oracle: bool,
    },
    /// Train a feature predictor on a JSONL dataset.
    TrainPredictor {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 64)]
        hidden: usize,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        #[arg(long, default_value_t = 5)]
        epochs: usize,
        #[arg(long, default_value_t = 8)]
        batch_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Disable the linear projection head on the output.
        #[arg(long)]
        no_projection: bool,
    },
    /// Rerank scored slates with a trained predictor's uncertainty.
    Rerank {
        /// JSONL slate records with proxy_score set; records sharing a
        /// slate_id form one slate (records without one form a single slate).
        #[arg(long)]
        slates: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        lambda: f64,
        /// JSONL records used to fit the z-score normalizers; defaults to
        /// the slate records themselves.
        #[arg(long)]
        calibration: Option<PathBuf>,
    },
    /// Summarize a results CSV.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn install_workers(workers: Option<usize>) -> anyhow::Result<()> {
    let count = match workers {
        Some(w) => Some(w),
        None => match std::env::var("CAUTION_WORKERS") {
            Ok(v) => Some(v.parse::<usize>().map_err(|_| {
                anyhow::anyhow!("CAUTION_WORKERS must be a positive integer, got {v:?}")
            })?),
            Err(_) => None,
        },
    };
    if let Some(count) = count {
        if count == 0 {
            anyhow::bail!("worker count must be >= 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(count)
            .build_global()?;
    }
    Ok(())
}

fn out_dir() -> PathBuf {
    std::env::var_os("CAUTION_OUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn run(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Simulate {
            config,
            out,
            format,
            workers,
            trials,
            seed,
        } => {
            install_workers(workers)?;
            let mut cfg = load_config(&config)?;
            if let Some(trials) = trials {
                cfg.trials = trials;
            }
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            cfg.validate()?;
            let (format, ext) = match format {
                FormatArg::Csv => (OutputFormat::Csv, "csv"),
                FormatArg::Json => (OutputFormat::Json, "json"),
            };
            let out = out.unwrap_or_else(|| out_dir().join(format!("results.{ext}")));
            let rows = run_simulation(&cfg)?;
            write_results(&rows, &out, format)?;
            println!("{}", summarize(&rows)?);
            println!("wrote {} rows to {}", rows.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            level,
            workers,
            corrupt_oracle,
        } => {
            install_workers(workers)?;
            let level = match level {
                LevelArg::Fast => VerifyLevel::Fast,
                LevelArg::Full => VerifyLevel::Full,
            };
            let report = run_verification(
                level,
                VerifyOptions {
                    corrupt_gaussian_max_oracle: corrupt_oracle,
                },
            );
            print!("{}", report.render());
            Ok(if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::TrainPredictor {
            data,
            out,
            hidden,
            lr,
            epochs,
            batch_size,
            seed,
            no_projection,
        } => {
            let records = read_jsonl(&data)?;
            let cfg = TrainConfig {
                hidden,
                lr,
                epochs,
                batch_size,
                seed,
                use_projection: !no_projection,
            };
            let (model, trace) = train_predictor(&records, &cfg)?;
            save_predictor(&model, &out)?;
            for (epoch, loss) in trace.iter().enumerate() {
                println!("epoch {epoch}: loss {loss:.6e}");
            }
            println!(
                "trained on {} records ({} parameters), saved to {}",
                records.len(),
                model.parameter_count(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Rerank {
            slates,
            model,
            lambda,
            calibration,
        } => {
            let records = read_jsonl(&slates)?;
            let model = load_predictor(&model)?;
            let calib = match &calibration {
                Some(path) => read_jsonl(path)?,
                None => records.clone(),
            };
            let mut proxies = Vec::new();
            let mut alphas = Vec::new();
            for r in &calib {
                if let Some(p) = r.proxy_score {
                    proxies.push(p);
                }
                alphas.push(uncertainty_score(&model, r)?);
            }
            let cfg = RerankerConfig {
                lambda,
                reward_normalizer: fit_normalizer(&proxies)?,
                uncertainty_normalizer: fit_normalizer(&alphas)?,
            };
            for (slate_id, slate) in group_slates(&records) {
                let outcome = rerank(&slate, &model, &cfg)?;
                let chosen = &slate[outcome.chosen_index];
                println!(
                    "slate {}: chose {} (position {}, score {:.6})",
                    slate_id,
                    chosen.id,
                    outcome.chosen_index,
                    outcome.lcb_score.unwrap_or(f64::NAN)
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { input } => {
            let rows = read_results(Path::new(&input))?;
            println!("{}", summarize(&rows)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Group records by slate_id, preserving first-appearance order; records
/// without a slate_id share the "default" slate.
fn group_slates(
    records: &[caution_core::predictor::FeatureRecord],
) -> Vec<(String, Vec<caution_core::predictor::FeatureRecord>)> {
    let mut groups: Vec<(String, Vec<caution_core::predictor::FeatureRecord>)> = Vec::new();
    for r in records {
        let key = r.slate_id.clone().unwrap_or_else(|| "default".to_string());
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(r.clone()),
            None => groups.push((key, vec![r.clone()])),
        }
    }
    groups
}
