//! Command-line front end. Every subcommand prints its JSON result to
//! stdout and, given `--out` (or `SPURIOUSNESS_OUT`), also writes files
//! into that directory.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use spuriousness::blackwell::blackwell_sufficient;
use spuriousness::disentangler::TrainingSchedule;
use spuriousness::dist::load_joint_pmf;
use spuriousness::estimation::{spuriousness_pipeline, Discretizer, PipelineConfig};
use spuriousness::experiment::{run_sweep, ExperimentConfig};
use spuriousness::pid::{pid_decompose, Algorithm, SolverConfig};
use spuriousness::synth::{apply_variant, generate_dataset, write_dataset, write_labels, write_mask, write_matrix};
use spuriousness::synth::{Balance, Preset, VariantTag};
use spuriousness::table::{load_labels, load_matrix};

/// Exit status when a sweep finished with failed rows.
const PARTIAL_FAILURE: u8 = 2;

#[derive(Parser)]
#[command(name = "spuriousness", version, about = "Measure dataset spuriousness as unique information")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Seed for every random choice.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, env = "SPURIOUSNESS_OUT")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolverArgs {
    /// Stopping threshold on the duality gap, in bits.
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::BarrierNewton)]
    algorithm: AlgorithmArg,
    /// Report information in nats instead of bits.
    #[arg(long)]
    nats: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    FrankWolfe,
    BarrierNewton,
}

#[derive(Clone, Copy, ValueEnum)]
enum DiscretizerArg {
    PcaKmeans,
    Dec,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    WaterbirdLike,
    Dominoes1,
    Dominoes2,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Unbalanced,
    Balanced,
    Addition,
    Concatenation,
}

#[derive(Clone, Copy, ValueEnum)]
enum BalanceArg {
    None,
    Weighted,
}

impl From<DiscretizerArg> for Discretizer {
    fn from(d: DiscretizerArg) -> Self {
        match d {
            DiscretizerArg::PcaKmeans => Discretizer::PcaKmeans,
            DiscretizerArg::Dec => Discretizer::Dec,
        }
    }
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::WaterbirdLike => Preset::WaterbirdLike,
            PresetArg::Dominoes1 => Preset::Dominoes1,
            PresetArg::Dominoes2 => Preset::Dominoes2,
        }
    }
}

impl From<VariantArg> for VariantTag {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Unbalanced => VariantTag::Unbalanced,
            VariantArg::Balanced => VariantTag::Balanced,
            VariantArg::Addition => VariantTag::Addition,
            VariantArg::Concatenation => VariantTag::Concatenation,
        }
    }
}

impl From<BalanceArg> for Balance {
    fn from(b: BalanceArg) -> Self {
        match b {
            BalanceArg::None => Balance::None,
            BalanceArg::Weighted => Balance::Weighted,
        }
    }
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            algorithm: match self.algorithm {
                AlgorithmArg::FrankWolfe => Algorithm::FrankWolfe,
                AlgorithmArg::BarrierNewton => Algorithm::BarrierNewton,
            },
            ..SolverConfig::default().with_tolerance(self.tolerance)
        }
    }

    fn scale(&self) -> f64 {
        if self.nats {
            std::f64::consts::LN_2
        } else {
            1.0
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Decompose a joint pmf given as `y,f,b,p` CSV.
    Pid {
        #[arg(long)]
        joint: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Search for a garbling certifying that F is Blackwell sufficient for B.
    Blackwell {
        #[arg(long)]
        joint: PathBuf,
        /// ℓ1 residual accepted as an exact garbling.
        #[arg(long, default_value_t = spuriousness::blackwell::EXACT_TOL)]
        tolerance: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Discretize foreground and background features and decompose.
    #[command(alias = "pid-pipeline")]
    Disentangle {
        /// Foreground feature matrix, one sample per row.
        #[arg(long)]
        fg: PathBuf,
        #[arg(long)]
        bg: PathBuf,
        /// Label column.
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, value_enum, default_value_t = DiscretizerArg::PcaKmeans)]
        discretizer: DiscretizerArg,
        #[arg(long, default_value_t = 10)]
        kf: usize,
        #[arg(long, default_value_t = 10)]
        kb: usize,
        /// Additive histogram smoothing.
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        /// Clustering-loss weight of the autoencoder discretizer.
        #[arg(long, default_value_t = TrainingSchedule::default().gamma)]
        gamma: f64,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Generate a synthetic grouped dataset and its test split.
    Synth {
        #[arg(long, value_enum, default_value_t = PresetArg::Dominoes1)]
        preset: PresetArg,
        #[arg(long, value_enum, default_value_t = VariantArg::Unbalanced)]
        variant: VariantArg,
        /// Pixel noise standard deviation.
        #[arg(long, default_value_t = 0.15)]
        sigma: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Run every (variant, seed) pair of an experiment.
    Sweep {
        /// Flat JSON experiment configuration; flags override its values.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        preset: Option<PresetArg>,
        #[arg(long, value_enum, value_delimiter = ',')]
        variants: Option<Vec<VariantArg>>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, value_enum)]
        discretizer: Option<DiscretizerArg>,
        #[arg(long)]
        kf: Option<usize>,
        #[arg(long)]
        kb: Option<usize>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        tolerance: Option<f64>,
        /// Probe loss weighting.
        #[arg(long, value_enum)]
        balance: Option<BalanceArg>,
        /// Output directory.
        #[arg(long, env = "SPURIOUSNESS_OUT")]
        out: Option<PathBuf>,
    },
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>, file: &str) -> Result<()> {
    let json = serde_json::to_string_pretty(value)?;
    println!("{json}");
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        std::fs::write(dir.join(file), json + "\n")?;
    }
    Ok(())
}

fn create(dir: &Path, name: &str) -> Result<std::fs::File> {
    let path = dir.join(name);
    std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Pid { joint, solver, common } => {
            let joint = load_joint_pmf(&joint).with_context(|| format!("reading {}", joint.display()))?;
            let result = pid_decompose(&joint, &solver.config())?;
            emit(&result.report_scaled(solver.scale()), common.out.as_deref(), "pid.json")?;
        }
        Command::Blackwell {
            joint,
            tolerance,
            common,
        } => {
            let joint = load_joint_pmf(&joint).with_context(|| format!("reading {}", joint.display()))?;
            emit(&blackwell_sufficient(&joint, tolerance)?, common.out.as_deref(), "blackwell.json")?;
        }
        Command::Disentangle {
            fg,
            bg,
            labels,
            discretizer,
            kf,
            kb,
            epsilon,
            gamma,
            solver,
            common,
        } => {
            let read = |p: &PathBuf| load_matrix(p).with_context(|| format!("reading {}", p.display()));
            let (fg, bg) = (read(&fg)?, read(&bg)?);
            let labels = load_labels(&labels).with_context(|| format!("reading {}", labels.display()))?;
            let config = PipelineConfig {
                discretizer: discretizer.into(),
                kf,
                kb,
                epsilon,
                schedule: TrainingSchedule {
                    gamma,
                    ..TrainingSchedule::default()
                },
                solver: solver.config(),
                seed: common.seed,
                ..PipelineConfig::default()
            };
            let result = spuriousness_pipeline(&fg, &bg, &labels, &config)?;
            emit(&result.report_scaled(solver.scale()), common.out.as_deref(), "pid.json")?;
        }
        Command::Synth {
            preset,
            variant,
            sigma,
            common,
        } => {
            let Some(dir) = common.out else {
                bail!("synth needs an output directory (--out or SPURIOUSNESS_OUT)");
            };
            let (preset, variant): (Preset, VariantTag) = (preset.into(), variant.into());
            std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            let base = generate_dataset(&preset.train(), sigma, common.seed)?;
            let train = apply_variant(&base, variant, common.seed)?;
            let test = generate_dataset(&preset.test(), sigma, common.seed.wrapping_add(1))?;
            let test = match variant {
                VariantTag::Addition | VariantTag::Concatenation => apply_variant(&test, variant, common.seed)?,
                _ => test,
            };
            write_dataset(&train, create(&dir, "train.csv")?)?;
            write_dataset(&test, create(&dir, "test.csv")?)?;
            write_mask(&train, create(&dir, "mask.csv")?)?;
            write_matrix(&train.foreground(), create(&dir, "fg.csv")?)?;
            write_matrix(&train.background(), create(&dir, "bg.csv")?)?;
            write_labels(&train.labels(), create(&dir, "labels.csv")?)?;
            #[derive(Serialize)]
            struct Written {
                preset: Preset,
                variant: VariantTag,
                train_groups: [usize; 4],
                test_groups: [usize; 4],
                directory: PathBuf,
            }
            emit(
                &Written {
                    preset,
                    variant,
                    train_groups: train.group_counts(),
                    test_groups: test.group_counts(),
                    directory: dir,
                },
                None,
                "",
            )?;
        }
        Command::Sweep {
            config,
            preset,
            variants,
            seeds,
            sigma,
            discretizer,
            kf,
            kb,
            gamma,
            tolerance,
            balance,
            out,
        } => {
            let mut cfg = match &config {
                Some(path) => ExperimentConfig::load(path).with_context(|| format!("reading {}", path.display()))?,
                None => ExperimentConfig::default(),
            };
            if let Some(p) = preset {
                cfg.preset = p.into();
            }
            if let Some(v) = variants {
                cfg.variants = v.into_iter().map(Into::into).collect();
            }
            if let Some(s) = seeds {
                cfg.seeds = s;
            }
            cfg.sigma = sigma.unwrap_or(cfg.sigma);
            cfg.discretizer = discretizer.map_or(cfg.discretizer, Into::into);
            cfg.kf = kf.unwrap_or(cfg.kf);
            cfg.kb = kb.unwrap_or(cfg.kb);
            cfg.gamma = gamma.unwrap_or(cfg.gamma);
            cfg.tolerance = tolerance.unwrap_or(cfg.tolerance);
            cfg.balance = balance.map_or(cfg.balance, Into::into);
            if out.is_some() {
                cfg.out = out;
            }
            let table = run_sweep(&cfg)?;
            if let Some(dir) = &cfg.out {
                table.write_to(dir)?;
            } else {
                table.write_csv(std::io::stderr())?;
            }
            println!("{}", serde_json::to_string_pretty(&table.summary())?);
            if !table.all_succeeded() {
                return Ok(ExitCode::from(PARTIAL_FAILURE));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
