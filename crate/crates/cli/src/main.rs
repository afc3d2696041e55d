//! `kwmix`: train, evaluate and sweep kernel-warped mixup from the command line.
//!
//! Exit codes: 0 on success, 2 for usage errors (bad flags, overrides or
//! configuration), 1 for runtime failures.

mod demo;
mod overrides;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use kwmix::harness::{
    evaluate, grid_search, load_dataset, prepare_splits, run_experiment, write_json,
    ExperimentConfig, Predictions, Task, Timing,
};
use kwmix::model::Checkpoint;

#[derive(Debug, Parser)]
#[command(name = "kwmix", version, about = "Kernel-warped mixup experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment configuration (JSON). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration field, e.g. `--set mixup.alpha=0.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Run this single seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory. Nothing is written outside it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train and evaluate every configured seed.
    Train {
        #[command(flatten)]
        common: Common,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Evaluate a checkpoint on its seed's test split.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Sweep (tau_max, tau_std) with kernel-warped mixup.
    Grid {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        tau_max_list: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        tau_std_list: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Histograms of warped Beta(alpha, alpha) coefficients.
    WarpDemo {
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 50)]
        bins: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Warping parameters; `inf` is accepted.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        tau_list: Vec<f64>,
        /// Kernel mode: tau from (tau_max, tau_std) at each normalized distance.
        #[arg(long, requires_all = ["tau_std", "distance_list"])]
        tau_max: Option<f64>,
        #[arg(long, requires = "tau_max")]
        tau_std: Option<f64>,
        #[arg(long, value_delimiter = ',', num_args = 1.., requires = "tau_max")]
        distance_list: Vec<f64>,
        /// Also report the KS distance to Beta(b, b) for this b.
        #[arg(long)]
        compare_shape: Option<f64>,
        #[arg(long, default_value = "warp-demo")]
        out: PathBuf,
    },
    /// Recompute metrics from an exported predictions file.
    Metrics {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Errors caused by the caller's input.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(e: impl std::fmt::Display) -> anyhow::Error {
    UsageError(e.to_string()).into()
}

fn exit_code(e: &anyhow::Error) -> u8 {
    let caller_fault = e.chain().any(|c| {
        c.is::<UsageError>()
            || c.downcast_ref::<kwmix::Error>()
                .is_some_and(kwmix::Error::is_usage)
    });
    if caller_fault {
        2
    } else {
        1
    }
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let base = match &common.config {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| usage(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", p.display())))?
        }
        None => ExperimentConfig::default(),
    };
    let mut cfg: ExperimentConfig =
        overrides::apply(&base, &common.overrides).map_err(|e| usage(format!("{e:#}")))?;
    if let Some(s) = common.seed {
        cfg.seeds = vec![s];
    }
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

fn out_dir(common: &Common, cfg: &ExperimentConfig, verb: &str) -> Result<PathBuf> {
    let dir = common
        .out
        .clone()
        .unwrap_or_else(|| cfg.output_dir.join(format!("{}-{verb}", cfg.name)));
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    Ok(dir)
}

fn save_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    write_json(&dir.join(name), value).with_context(|| format!("writing {name}"))
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn primary_metric(cfg: &ExperimentConfig) -> &'static str {
    match cfg.data.task() {
        Task::Regression => "rmse",
        Task::Classification => "nll",
    }
}

fn cmd_train(common: &Common, jobs: usize) -> Result<()> {
    let cfg = load_config(common)?;
    let dir = out_dir(common, &cfg, "train")?;
    let start = Instant::now();
    let dataset = load_dataset(&cfg.data, None)?;
    log::info!(
        "{}: {} rows, {} features",
        dataset.name,
        dataset.len(),
        dataset.dim()
    );
    let (report, runs) = run_experiment(&cfg, &dataset, jobs)?;
    save_json(&dir, "config.json", &cfg)?;
    for r in &runs {
        let sd = dir.join(format!("seed-{}", r.seed));
        fs::create_dir_all(&sd)?;
        Checkpoint::new(r.model.clone(), Some(r.seed)).save(&sd.join("checkpoint.json"))?;
        r.trace.write_csv(&sd.join("trace.csv"))?;
        save_json(&sd, "metrics.json", &r.metrics)?;
        r.predictions.save(&sd.join("predictions.json"))?;
    }
    save_json(&dir, "report.json", &report)?;
    save_json(
        &dir,
        "timing.json",
        &Timing {
            duration_secs: start.elapsed().as_secs_f64(),
        },
    )?;
    for (k, a) in &report.aggregate {
        println!("{k:<12} {:.6} ± {:.6} (n = {})", a.mean, a.std, a.count);
    }
    log::info!("wrote {}", dir.display());
    Ok(())
}

fn cmd_eval(common: &Common, checkpoint: &Path) -> Result<()> {
    let ck = Checkpoint::load(checkpoint).map_err(|e| match e {
        kwmix::Error::MissingFile(_) => usage(e),
        e => anyhow::Error::from(e).context(format!("loading {}", checkpoint.display())),
    })?;
    let cfg = load_config(common)?;
    let seed = common.seed.or(ck.seed).unwrap_or(cfg.seeds[0]);
    let dir = out_dir(common, &cfg, "eval")?;
    let dataset = load_dataset(&cfg.data, None)?;
    let splits = prepare_splits(&cfg, &dataset, seed)?;
    let (report, preds) = evaluate(&ck.model, &splits, &cfg.eval, seed)?;
    save_json(&dir, "metrics.json", &report)?;
    preds.save(&dir.join("predictions.json"))?;
    print_json(&report)
}

fn cmd_grid(common: &Common, tau_max: &[f64], tau_std: &[f64], jobs: usize) -> Result<()> {
    let cfg = load_config(common)?;
    let dir = out_dir(common, &cfg, "grid")?;
    let start = Instant::now();
    let dataset = load_dataset(&cfg.data, None)?;
    let grid = grid_search(&cfg, &dataset, tau_max, tau_std, &cfg.seeds, jobs)?;
    save_json(&dir, "config.json", &cfg)?;
    save_json(&dir, "grid.json", &grid)?;
    grid.write_long_csv(&dir.join("grid.csv"))?;
    save_json(
        &dir,
        "timing.json",
        &Timing {
            duration_secs: start.elapsed().as_secs_f64(),
        },
    )?;
    let metric = primary_metric(&cfg);
    println!(
        "{:>12} {:>12} {:>14} {:>12}",
        "tau_max", "tau_std", metric, "std"
    );
    for c in grid.ranked(metric) {
        let a = c.aggregate[metric];
        println!(
            "{:>12} {:>12} {:>14.6} {:>12.6}",
            c.tau_max, c.tau_std, a.mean, a.std
        );
    }
    let failed = grid.cells.iter().filter(|c| c.failed()).count();
    if failed > 0 {
        log::warn!(
            "{failed} of {} cells had failed seeds; see grid.json",
            grid.cells.len()
        );
    }
    Ok(())
}

fn cmd_metrics(predictions: &Path, out: Option<&Path>) -> Result<()> {
    let preds = Predictions::load(predictions).map_err(|e| match e {
        kwmix::Error::MissingFile(_) => usage(e),
        e => anyhow::Error::from(e).context(format!("reading {}", predictions.display())),
    })?;
    let report = preds.metrics()?;
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        save_json(dir, "metrics.json", &report)?;
    }
    print_json(&report)
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Train { common, jobs } => cmd_train(&common, jobs),
        Command::Eval { common, checkpoint } => cmd_eval(&common, &checkpoint),
        Command::Grid {
            common,
            tau_max_list,
            tau_std_list,
            jobs,
        } => cmd_grid(&common, &tau_max_list, &tau_std_list, jobs),
        Command::WarpDemo {
            alpha,
            samples,
            bins,
            seed,
            tau_list,
            tau_max,
            tau_std,
            distance_list,
            compare_shape,
            out,
        } => {
            let taus = if tau_list.is_empty() && tau_max.is_none() {
                vec![0.5, 1.0, 2.0]
            } else {
                tau_list
            };
            let cfg = demo::DemoConfig {
                alpha,
                samples,
                bins,
                seed,
                taus,
                kernel: tau_max.zip(tau_std).map(|(m, s)| (m, s, distance_list)),
                compare_shape,
            };
            let (summary, hists) =
                demo::run(&cfg).map_err(|e| match e.downcast::<kwmix::Error>() {
                    Ok(k) => k.into(),
                    Err(e) => usage(e),
                })?;
            fs::create_dir_all(&out)?;
            demo::write_density_csv(&out.join("density.csv"), &hists, samples)?;
            save_json(&out, "summary.json", &summary)?;
            print_json(&summary)
        }
        Command::Metrics { predictions, out } => cmd_metrics(&predictions, out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
