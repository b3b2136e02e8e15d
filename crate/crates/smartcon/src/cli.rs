//! Command-line orchestration: dataset generation, training, closed-loop
//! evaluation, UE sweeps, and the gradient self-check.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
use crate::config::{load_config, RunConfig};
use crate::dataset::{read_dataset, write_dataset};
use crate::error::{Error, Result};
use crate::gan::{check_gradients, train, TrainOptions};
use crate::persist::write_atomic;
use crate::sim::{generate_dataset, metrics_csv, run_sim, run_sweep, PolicyKind};

#[derive(Debug, Parser)]
#[command(
    name = "smartcon",
    about = "NB-IoT link-configuration workbench: bandit traces, adversarial point-process training, closed-loop evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolicyArg {
    Static,
    Threshold,
    Mab,
    Smartcon,
}

impl From<PolicyArg> for PolicyKind {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Static => PolicyKind::StaticFifo,
            PolicyArg::Threshold => PolicyKind::ThresholdLa,
            PolicyArg::Mab => PolicyKind::Mab,
            PolicyArg::Smartcon => PolicyKind::SmartCon,
        }
    }
}

#[derive(Debug, Args)]
struct ConfigArg {
    /// Configuration file (key = value lines); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> Result<RunConfig> {
        match &self.config {
            Some(path) => load_config(path),
            None => Ok(RunConfig::default()),
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run bandit episodes and write the training dataset.
    GenDataset {
        #[command(flatten)]
        config: ConfigArg,
        /// Output dataset path.
        #[arg(long)]
        out: PathBuf,
        /// Number of independent episodes.
        #[arg(long, default_value_t = 1)]
        episodes: u32,
        /// Master seed.
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Train the generator/discriminator pair on a dataset.
    Train {
        #[command(flatten)]
        config: ConfigArg,
        /// Input dataset path.
        #[arg(long)]
        dataset: PathBuf,
        /// Output checkpoint path.
        #[arg(long)]
        out: PathBuf,
        /// Training epochs.
        #[arg(long, default_value_t = 200)]
        epochs: u32,
        /// Master seed.
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Run one policy through the closed loop and write a metrics CSV.
    Eval {
        #[command(flatten)]
        config: ConfigArg,
        /// Link-adaptation policy.
        #[arg(long, value_enum)]
        policy: PolicyArg,
        /// Trained checkpoint (required for smartcon).
        #[arg(long)]
        model: Option<PathBuf>,
        /// Training dataset; enables the retraining-trigger probe.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Output metrics CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Master seed.
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Evaluate one policy across a range of UE counts.
    Sweep {
        #[command(flatten)]
        config: ConfigArg,
        /// UE range, inclusive, as `low..high`.
        #[arg(long)]
        ues: String,
        /// Step between UE counts.
        #[arg(long, default_value_t = 10)]
        step: u32,
        #[arg(long, value_enum)]
        policy: PolicyArg,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Output metrics CSV path (one row per UE count).
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Check analytic BPTT gradients against central finite differences.
    CheckGrads {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Independent random draws.
        #[arg(long, default_value_t = 20)]
        seeds: u32,
    },
}

fn load_model(
    path: &Option<PathBuf>,
    cfg: &RunConfig,
    policy: PolicyArg,
) -> Result<Option<Checkpoint>> {
    match (path, matches!(policy, PolicyArg::Smartcon)) {
        (Some(p), _) => {
            let ckpt = load_checkpoint(p)?;
            if ckpt.hidden() != cfg.gan.hidden {
                return Err(Error::CheckpointDim(format!(
                    "checkpoint H={} but config gan.hidden={}",
                    ckpt.hidden(),
                    cfg.gan.hidden
                )));
            }
            Ok(Some(ckpt))
        }
        (None, true) => Err(Error::Cli(
            "--model is required for the smartcon policy".into(),
        )),
        (None, false) => Ok(None),
    }
}

fn parse_ue_range(spec: &str, step: u32) -> Result<Vec<u32>> {
    let (lo, hi) = spec
        .split_once("..")
        .ok_or_else(|| Error::Cli(format!("bad UE range `{spec}` (expected low..high)")))?;
    let lo: u32 = lo
        .trim()
        .parse()
        .map_err(|_| Error::Cli(format!("bad UE range start `{lo}`")))?;
    let hi: u32 = hi
        .trim()
        .parse()
        .map_err(|_| Error::Cli(format!("bad UE range end `{hi}`")))?;
    if lo < 1 || hi < lo || step < 1 {
        return Err(Error::Cli(format!(
            "bad UE range {lo}..{hi} with step {step}"
        )));
    }
    Ok((lo..=hi).step_by(step as usize).collect())
}

fn run_command(command: Command) -> Result<()> {
    match command {
        Command::GenDataset {
            config,
            out,
            episodes,
            seed,
        } => {
            let cfg = config.load()?;
            let records = generate_dataset(&cfg, episodes, seed)?;
            write_dataset(&out, &records)?;
            eprintln!(
                "wrote {} records from {episodes} episode(s) to {}",
                records.len(),
                out.display()
            );
            if records.len() < cfg.retrain.record_threshold {
                eprintln!(
                    "note: {} records is below the retraining threshold of {} (retrain.record_threshold)",
                    records.len(),
                    cfg.retrain.record_threshold
                );
            }
            Ok(())
        }
        Command::Train {
            config,
            dataset,
            out,
            epochs,
            seed,
        } => {
            let cfg = config.load()?;
            let records = read_dataset(&dataset)?;
            let opts = TrainOptions {
                epochs,
                learning_rate: cfg.gan.learning_rate,
                seed,
            };
            let (generator, discriminator, report) = train(&records, &cfg.gan, &opts)?;
            if let Some((gen_loss, disc_obj)) = report.epoch_losses.last() {
                eprintln!(
                    "epoch {epochs}: generator loss {gen_loss:.4}, discriminator objective {disc_obj:.4} ({} sequences, {} skipped steps)",
                    report.sequences, report.skipped_steps
                );
            }
            save_checkpoint(
                &out,
                &Checkpoint {
                    generator,
                    discriminator,
                },
            )?;
            eprintln!("wrote checkpoint to {}", out.display());
            Ok(())
        }
        Command::Eval {
            config,
            policy,
            model,
            dataset,
            out,
            seed,
        } => {
            let mut cfg = config.load()?;
            cfg.sim.seed = seed;
            let ckpt = load_model(&model, &cfg, policy)?;
            let plr_col: Option<Vec<f64>> = match &dataset {
                Some(p) => Some(read_dataset(p)?.iter().map(|r| r.plr).collect()),
                None => None,
            };
            let outcome = run_sim(policy.into(), &cfg, ckpt.as_ref(), plr_col.as_deref())?;
            if outcome.report.retrain_signals > 0 {
                eprintln!(
                    "retraining signalled {} time(s) over the run",
                    outcome.report.retrain_signals
                );
            }
            write_atomic(&out, metrics_csv(&[outcome.report]).as_bytes())?;
            eprintln!("wrote metrics to {}", out.display());
            Ok(())
        }
        Command::Sweep {
            config,
            ues,
            step,
            policy,
            model,
            out,
            seed,
        } => {
            let cfg = config.load()?;
            let counts = parse_ue_range(&ues, step)?;
            let ckpt = load_model(&model, &cfg, policy)?;
            let reports = run_sweep(policy.into(), &cfg, ckpt.as_ref(), &counts, seed)?;
            write_atomic(&out, metrics_csv(&reports).as_bytes())?;
            eprintln!("wrote {} sweep rows to {}", reports.len(), out.display());
            Ok(())
        }
        Command::CheckGrads { seed, seeds } => {
            let report = check_gradients(seed, seeds, 4, 3);
            for tc in &report.tensor_checks {
                eprintln!("{:<8} max rel err {:.3e}", tc.name, tc.max_rel_err);
            }
            if report.passes(1e-4) {
                eprintln!(
                    "gradients OK: {} seeds, max rel err {:.3e}",
                    report.seeds, report.max_rel_err
                );
                Ok(())
            } else {
                Err(Error::Cli(format!(
                    "gradient check failed: max rel err {:.3e} >= 1e-4",
                    report.max_rel_err
                )))
            }
        }
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version as "errors" with success status
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run_command(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
