use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ecgweak::classifier::{ActiveConfig, TrainConfig};
use ecgweak::labelmodel::FitConfig;
use ecgweak::lfs::LfConfig;
use ecgweak::pipeline::PreprocessConfig;
use ecgweak::signal::{FiducialConfig, RansacConfig};
use ecgweak::synth::{CorpusConfig, SynthConfig};
use ecgweak::Execution;

#[derive(Debug, Parser)]
#[command(
    name = "ecgweak",
    version,
    about = "Weakly supervised PVC detection pipeline"
)]
pub struct Cli {
    /// Run every data-parallel loop on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

impl Cli {
    pub fn exec(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus in the CSV record format plus its split file.
    Synth(SynthArgs),
    /// Filter, baseline and segment records, and locate per-beat fiducials.
    Preprocess(PreprocessArgs),
    /// Apply the LFs, fit the label model on DS1 and write ProbLabels.
    Label(LabelArgs),
    /// Train the end model on DS1 from ProbLabels or annotations.
    Train(TrainArgs),
    /// Score models and label baselines on DS2.
    Evaluate(EvaluateArgs),
    /// Run the uncertainty-sampling baseline over several seeds.
    Active(ActiveArgs),
}

#[derive(Debug, Args)]
pub struct SplitArg {
    /// DS1/DS2 list file; defaults to the bundled MIT-BIH split.
    #[arg(long)]
    pub split: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub patients: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.1)]
    pub patient_jitter: f64,
    #[arg(long, default_value_t = 2000)]
    pub n_beats: usize,
    #[arg(long, default_value_t = 360.0)]
    pub fs_hz: f64,
    #[arg(long, default_value_t = 0.08)]
    pub pvc_rate: f64,
    #[arg(long, default_value_t = 800.0)]
    pub rr_mean_ms: f64,
    #[arg(long, default_value_t = 40.0)]
    pub rr_std_ms: f64,
    #[arg(long, default_value_t = 3.0)]
    pub pvc_prematurity_sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub qrs_height_mv: f64,
    #[arg(long, default_value_t = 30.0)]
    pub qrs_width_ms: f64,
    #[arg(long, default_value_t = 1.3)]
    pub pvc_height_scale: f64,
    #[arg(long, default_value_t = 1.4)]
    pub pvc_width_scale: f64,
    #[arg(long, default_value_t = 0.3)]
    pub pvc_inverted_prob: f64,
    #[arg(long, default_value_t = 0.15)]
    pub morphology_jitter: f64,
    #[arg(long, default_value_t = 0.02)]
    pub noise_std_mv: f64,
    #[arg(long, default_value_t = 0.3)]
    pub drift_amp_mv: f64,
    #[arg(long, default_value_t = 0.15)]
    pub drift_freq_hz: f64,
}

impl SynthArgs {
    pub fn corpus(&self) -> CorpusConfig {
        let mut base = SynthConfig {
            fs_hz: self.fs_hz,
            n_beats: self.n_beats,
            pvc_rate: self.pvc_rate,
            rr_mean_ms: self.rr_mean_ms,
            rr_std_ms: self.rr_std_ms,
            pvc_prematurity_sigma: self.pvc_prematurity_sigma,
            morphology_jitter: self.morphology_jitter,
            noise_std_mv: self.noise_std_mv,
            ..SynthConfig::default()
        };
        base.qrs.normal_height_mv = self.qrs_height_mv;
        base.qrs.normal_width_ms = self.qrs_width_ms;
        base.qrs.pvc_height_scale = self.pvc_height_scale;
        base.qrs.pvc_width_scale = self.pvc_width_scale;
        base.qrs.pvc_inverted_prob = self.pvc_inverted_prob;
        base.drift.amp_mv = self.drift_amp_mv;
        base.drift.freq_hz = self.drift_freq_hz;
        CorpusConfig {
            n_patients: self.patients,
            base,
            patient_jitter: self.patient_jitter,
            root_seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InputFormat {
    /// `.hea` headers, picking up `.dat` and annotation files.
    Wfdb,
    /// `name.csv` records with optional `name.ann.csv` annotations.
    Csv,
    /// Both kinds.
    Auto,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    pub format: InputFormat,
    /// WFDB channel to keep.
    #[arg(long, default_value_t = 0)]
    pub channel: usize,
    /// WFDB annotator extension.
    #[arg(long, default_value = "atr")]
    pub annotator: String,
    #[arg(long, default_value_t = 4)]
    pub filter_order: usize,
    #[arg(long, default_value_t = 0.5)]
    pub cutoff_hz: f64,
    #[arg(long, default_value_t = 500)]
    pub ransac_iterations: usize,
    #[arg(long, default_value_t = 0.1)]
    pub ransac_tol_mv: f64,
    #[arg(long, default_value_t = 0.5)]
    pub ransac_min_inliers: f64,
    #[arg(long, default_value_t = 50.0)]
    pub r_search_ms: f64,
    #[arg(long, default_value_t = 150.0)]
    pub qrs_window_ms: f64,
    #[arg(long, default_value_t = 80.0)]
    pub t_start_ms: f64,
    #[arg(long, default_value_t = 400.0)]
    pub t_end_ms: f64,
    #[arg(long, default_value_t = 0.05)]
    pub t_min_prominence_mv: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl PreprocessArgs {
    pub fn config(&self) -> PreprocessConfig {
        PreprocessConfig {
            filter_order: self.filter_order,
            cutoff_hz: self.cutoff_hz,
            ransac: RansacConfig {
                iterations: self.ransac_iterations,
                inlier_tol_mv: self.ransac_tol_mv,
                min_inlier_fraction: self.ransac_min_inliers,
                ..RansacConfig::default()
            },
            fiducials: FiducialConfig {
                r_search_ms: self.r_search_ms,
                qrs_window_ms: self.qrs_window_ms,
                t_start_ms: self.t_start_ms,
                t_end_ms: self.t_end_ms,
                t_min_prominence_mv: self.t_min_prominence_mv,
            },
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    /// Output directory of `preprocess`.
    #[arg(long)]
    pub processed: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub split: SplitArg,
    /// Write one LF matrix and ProbLabels file per patient instead of one
    /// pooled file each.
    #[arg(long)]
    pub per_patient: bool,
    /// Sets all four threshold multipliers at once.
    #[arg(long)]
    pub k_sigma: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub k_early: f64,
    #[arg(long, default_value_t = 2.0)]
    pub k_tall: f64,
    #[arg(long, default_value_t = 2.0)]
    pub k_wide: f64,
    #[arg(long, default_value_t = 2.0)]
    pub k_deep_inverted: f64,
    #[arg(long, default_value_t = 1.0)]
    pub neg_band_sigma: f64,
    #[arg(long, default_value_t = 0.5)]
    pub support_fraction: f64,
    #[arg(long, default_value_t = 0.05)]
    pub step_size: f64,
    #[arg(long, default_value_t = 500)]
    pub iterations: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub l2: f64,
    #[arg(long, default_value_t = 0.7)]
    pub init_acc: f64,
    #[arg(long, default_value_t = 0.0)]
    pub init_lab: f64,
    /// Plain gradient descent instead of the Fisher-preconditioned step.
    #[arg(long)]
    pub no_precondition: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl LabelArgs {
    pub fn lf_config(&self) -> LfConfig {
        let k = |v: f64| self.k_sigma.unwrap_or(v);
        LfConfig {
            k_early: k(self.k_early),
            k_tall: k(self.k_tall),
            k_wide: k(self.k_wide),
            k_deep_inverted: k(self.k_deep_inverted),
            neg_band_sigma: self.neg_band_sigma,
            support_fraction: self.support_fraction,
        }
    }

    pub fn fit_config(&self, exec: Execution) -> FitConfig {
        FitConfig {
            step_size: self.step_size,
            iterations: self.iterations,
            l2_strength: self.l2,
            init_acc: self.init_acc,
            init_lab: self.init_lab,
            seed: self.seed,
            precondition: !self.no_precondition,
            exec,
        }
    }
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 25)]
    pub epochs: usize,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub step_size: f64,
    #[arg(long, default_value_t = 32)]
    pub hidden: usize,
    #[arg(long, default_value_t = 0.3)]
    pub val_fraction: f64,
    #[arg(long, default_value_t = 0.05)]
    pub max_val_fpr: f64,
    /// Resampled waveform length of each beat vector.
    #[arg(long, default_value_t = 128)]
    pub beat_len: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl ModelArgs {
    pub fn train_config(&self, oversample: bool, exec: Execution) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            step_size: self.step_size,
            hidden: self.hidden,
            seed: self.seed,
            val_fraction: self.val_fraction,
            max_val_fpr: self.max_val_fpr,
            oversample,
            exec,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Targets from the label model's ProbLabels.
    Weak,
    /// Targets from the annotations.
    Full,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub processed: PathBuf,
    /// Output directory of `label`; required in weak mode.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Weak)]
    pub mode: Mode,
    #[command(flatten)]
    pub split: SplitArg,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Train on the beats as they are, without balancing the classes.
    #[arg(long)]
    pub no_oversample: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub processed: PathBuf,
    /// Model files written by `train`; repeatable. Each is reported under
    /// its file stem.
    #[arg(long = "model")]
    pub models: Vec<PathBuf>,
    /// Output directory of `label`; adds ProbLabels and majority-vote rows.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub split: SplitArg,
    #[arg(long, default_value_t = 128)]
    pub beat_len: usize,
}

#[derive(Debug, Args)]
pub struct ActiveArgs {
    #[arg(long)]
    pub processed: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub split: SplitArg,
    /// Number of independent seed-set initializations.
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    #[arg(long, default_value_t = 100)]
    pub seed_size: usize,
    #[arg(long, default_value_t = 100)]
    pub query_size: usize,
    #[arg(long, default_value_t = 4000)]
    pub budget: usize,
    #[arg(long)]
    pub warm_start: bool,
    /// Balance each round's labeled set before training.
    #[arg(long)]
    pub oversample: bool,
    #[command(flatten)]
    pub model: ModelArgs,
}

impl ActiveArgs {
    /// Run `r` uses seed `r` for both the seed set and training.
    pub fn config(&self, r: u64, exec: Execution) -> ActiveConfig {
        let mut train = self.model.train_config(self.oversample, exec);
        train.seed = self.model.seed.wrapping_add(r);
        ActiveConfig {
            seed_size: self.seed_size,
            query_size: self.query_size,
            budget: self.budget,
            seed: r,
            warm_start: self.warm_start,
            train,
        }
    }
}
