//! Sweeps over dataset variants and seeds: generate, mitigate, measure,
//! probe. Every row depends only on the configuration, its variant and its
//! seed, so any row can be rerun in isolation.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disentangler::TrainingSchedule;
use crate::error::{Error, Result};
use crate::estimation::{spuriousness_pipeline, Discretizer, PipelineConfig};
use crate::pid::SolverConfig;
use crate::synth::{
    apply_variant, generate_with_style, group_accuracies, train_probe, Balance, Preset, ProbeConfig, Style,
    VariantTag,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub variants: Vec<VariantTag>,
    pub seeds: Vec<u64>,
    pub sigma: f64,
    pub discretizer: Discretizer,
    pub kf: usize,
    pub kb: usize,
    pub gamma: f64,
    pub epsilon: f64,
    pub tolerance: f64,
    pub probe_epochs: usize,
    pub probe_learning_rate: f64,
    pub balance: Balance,
    /// Directory receiving `sweep.csv` and `summary.json`.
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let probe = ProbeConfig::default();
        Self {
            preset: Preset::Dominoes1,
            variants: VariantTag::ALL.to_vec(),
            seeds: vec![0],
            sigma: 0.15,
            discretizer: Discretizer::PcaKmeans,
            kf: 10,
            kb: 10,
            gamma: TrainingSchedule::default().gamma,
            epsilon: 0.0,
            tolerance: SolverConfig::default().tolerance,
            probe_epochs: probe.epochs,
            probe_learning_rate: probe.learning_rate,
            balance: probe.balance,
            out: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.variants.is_empty() {
            return Err(Error::InvalidArgument("variant list is empty".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidArgument("seed list is empty".into()));
        }
        if self.kf == 0 || self.kb == 0 {
            return Err(Error::InvalidArgument("cluster counts must be >= 1".into()));
        }
        if !(self.sigma >= 0.0) || !(self.gamma >= 0.0) {
            return Err(Error::InvalidArgument("sigma and gamma must be >= 0".into()));
        }
        self.solver().validate()
    }

    fn solver(&self) -> SolverConfig {
        SolverConfig::default().with_tolerance(self.tolerance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub variant: VariantTag,
    pub seed: u64,
    pub uni_b: f64,
    pub uni_f: f64,
    pub redundancy: f64,
    pub synergy: f64,
    pub worst_group_acc: f64,
    pub mean_acc: f64,
}

/// Independent seeds for each stage of a row.
struct StageSeeds {
    train: u64,
    test: u64,
    variant: u64,
    pipeline: u64,
    probe: u64,
}

impl StageSeeds {
    fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            train: rng.gen(),
            test: rng.gen(),
            variant: rng.gen(),
            pipeline: rng.gen(),
            probe: rng.gen(),
        }
    }
}

/// One `(variant, seed)` run. The training data depends on the seed only,
/// so all variants of a seed share their base data. The minority group is
/// taken from the preset's original training counts.
pub fn run_row(config: &ExperimentConfig, variant: VariantTag, seed: u64) -> Result<SweepRow> {
    let seeds = StageSeeds::new(seed);
    let style = Style::default();
    let train_spec = config.preset.train();
    let base = generate_with_style(&train_spec, config.sigma, seeds.train, style)?;
    let train = apply_variant(&base, variant, seeds.variant)?;
    let test = generate_with_style(&config.preset.test(), config.sigma, seeds.test, style)?;
    let test = match variant {
        VariantTag::Addition | VariantTag::Concatenation => apply_variant(&test, variant, seeds.variant)?,
        VariantTag::Unbalanced | VariantTag::Balanced => test,
    };

    let pipeline = PipelineConfig {
        discretizer: config.discretizer,
        kf: config.kf,
        kb: config.kb,
        epsilon: config.epsilon,
        schedule: TrainingSchedule {
            gamma: config.gamma,
            ..TrainingSchedule::default()
        },
        solver: config.solver(),
        seed: seeds.pipeline,
        ..PipelineConfig::default()
    };
    let pid = spuriousness_pipeline(&train.foreground(), &train.background(), &train.labels(), &pipeline)?;

    let probe = train_probe(
        &train,
        &ProbeConfig {
            epochs: config.probe_epochs,
            learning_rate: config.probe_learning_rate,
            balance: config.balance,
            seed: seeds.probe,
            ..ProbeConfig::default()
        },
    )?;
    let acc = group_accuracies(&probe, &test, &train_spec)?;
    Ok(SweepRow {
        variant,
        seed,
        uni_b: pid.uni_b_given_f,
        uni_f: pid.uni_f_given_b,
        redundancy: pid.redundancy,
        synergy: pid.synergy,
        worst_group_acc: acc.worst_group,
        mean_acc: acc.mean,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RowStatus {
    pub variant: VariantTag,
    pub seed: u64,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct VariantMeans {
    pub runs: usize,
    pub uni_b: f64,
    pub uni_f: f64,
    pub redundancy: f64,
    pub synergy: f64,
    pub worst_group_acc: f64,
    pub mean_acc: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub preset: Preset,
    pub all_succeeded: bool,
    pub rows: Vec<RowStatus>,
    /// Means over the successful rows of each variant.
    pub means: BTreeMap<String, VariantMeans>,
}

#[derive(Debug)]
pub struct SweepTable {
    pub preset: Preset,
    /// In `(variant, seed)` order of the configuration.
    pub outcomes: Vec<(VariantTag, u64, Result<SweepRow>)>,
}

/// Runs every `(variant, seed)` pair; rows run in parallel and failures are
/// recorded per row.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepTable> {
    config.validate()?;
    let jobs: Vec<(VariantTag, u64)> = config
        .variants
        .iter()
        .flat_map(|&v| config.seeds.iter().map(move |&s| (v, s)))
        .collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(v, s)| (v, s, run_row(config, v, s)))
        .collect();
    Ok(SweepTable {
        preset: config.preset,
        outcomes,
    })
}

impl SweepTable {
    pub fn rows(&self) -> impl Iterator<Item = &SweepRow> {
        self.outcomes.iter().filter_map(|(_, _, r)| r.as_ref().ok())
    }

    pub fn all_succeeded(&self) -> bool {
        self.outcomes.iter().all(|(_, _, r)| r.is_ok())
    }

    pub fn summary(&self) -> SweepSummary {
        let mut means: BTreeMap<String, VariantMeans> = BTreeMap::new();
        for row in self.rows() {
            let m = means.entry(row.variant.to_string()).or_default();
            m.runs += 1;
            m.uni_b += row.uni_b;
            m.uni_f += row.uni_f;
            m.redundancy += row.redundancy;
            m.synergy += row.synergy;
            m.worst_group_acc += row.worst_group_acc;
            m.mean_acc += row.mean_acc;
        }
        for m in means.values_mut() {
            let n = m.runs as f64;
            for v in [
                &mut m.uni_b,
                &mut m.uni_f,
                &mut m.redundancy,
                &mut m.synergy,
                &mut m.worst_group_acc,
                &mut m.mean_acc,
            ] {
                *v /= n;
            }
        }
        SweepSummary {
            preset: self.preset,
            all_succeeded: self.all_succeeded(),
            rows: self
                .outcomes
                .iter()
                .map(|(variant, seed, r)| RowStatus {
                    variant: *variant,
                    seed: *seed,
                    ok: r.is_ok(),
                    error: r.as_ref().err().map(ToString::to_string),
                })
                .collect(),
            means,
        }
    }

    /// One line per successful row.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in self.rows() {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `sweep.csv` and `summary.json` into `dir`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        self.write_csv(std::fs::File::create(dir.join("sweep.csv"))?)?;
        let summary = serde_json::to_string_pretty(&self.summary())?;
        std::fs::write(dir.join("summary.json"), summary + "\n")?;
        Ok(())
    }
}
