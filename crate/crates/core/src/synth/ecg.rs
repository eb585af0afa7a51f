use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::ingest::{
    write_csv_record, BeatAnnotation, BeatClass, BeatCodeMap, EcgRecord, SplitLists,
};
use crate::par::{self, Execution};
use crate::seed;
use crate::signal::Polarity;
use crate::{Error, Result};

const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QrsConfig {
    pub normal_height_mv: f64,
    /// Full width at half maximum of the QRS bump.
    pub normal_width_ms: f64,
    pub pvc_height_scale: f64,
    pub pvc_width_scale: f64,
    pub pvc_inverted_prob: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TWaveConfig {
    pub offset_ms: f64,
    pub height_mv: f64,
    pub width_ms: f64,
    pub discordant_for_pvc: bool,
    /// Discordant PVC T waves are this many times taller than normal ones.
    pub pvc_height_scale: f64,
    /// Probability that an upright PVC's T wave is nevertheless concordant.
    pub pvc_concordant_prob: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftConfig {
    pub amp_mv: f64,
    pub freq_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub fs_hz: f64,
    pub n_beats: usize,
    pub pvc_rate: f64,
    pub rr_mean_ms: f64,
    pub rr_std_ms: f64,
    pub qrs: QrsConfig,
    /// PVC pre-RR intervals are centred this many `rr_std_ms` below the mean.
    pub pvc_prematurity_sigma: f64,
    pub t_wave: TWaveConfig,
    /// Relative beat-to-beat spread of QRS height and width (Gaussian,
    /// truncated at two standard deviations).
    pub morphology_jitter: f64,
    pub noise_std_mv: f64,
    pub drift: DriftConfig,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            fs_hz: 360.0,
            n_beats: 2000,
            pvc_rate: 0.08,
            rr_mean_ms: 800.0,
            rr_std_ms: 40.0,
            qrs: QrsConfig {
                normal_height_mv: 1.0,
                normal_width_ms: 30.0,
                pvc_height_scale: 1.3,
                pvc_width_scale: 1.4,
                pvc_inverted_prob: 0.3,
            },
            pvc_prematurity_sigma: 3.0,
            t_wave: TWaveConfig {
                offset_ms: 250.0,
                height_mv: 0.3,
                width_ms: 100.0,
                discordant_for_pvc: true,
                pvc_height_scale: 2.0,
                pvc_concordant_prob: 0.4,
            },
            morphology_jitter: 0.15,
            noise_std_mv: 0.02,
            drift: DriftConfig {
                amp_mv: 0.3,
                freq_hz: 0.15,
            },
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("fs_hz", self.fs_hz),
            ("rr_mean_ms", self.rr_mean_ms),
            ("normal_height_mv", self.qrs.normal_height_mv),
            ("normal_width_ms", self.qrs.normal_width_ms),
            ("pvc_height_scale", self.qrs.pvc_height_scale),
            ("pvc_width_scale", self.qrs.pvc_width_scale),
            ("t_wave.width_ms", self.t_wave.width_ms),
            ("t_wave.pvc_height_scale", self.t_wave.pvc_height_scale),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        let non_negative = [
            ("rr_std_ms", self.rr_std_ms),
            ("noise_std_mv", self.noise_std_mv),
            ("morphology_jitter", self.morphology_jitter),
            ("t_wave.height_mv", self.t_wave.height_mv),
            ("drift.amp_mv", self.drift.amp_mv),
            ("drift.freq_hz", self.drift.freq_hz),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        for (name, p) in [
            ("pvc_rate", self.pvc_rate),
            ("pvc_inverted_prob", self.qrs.pvc_inverted_prob),
            (
                "t_wave.pvc_concordant_prob",
                self.t_wave.pvc_concordant_prob,
            ),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must lie in [0, 1], got {p}"
                )));
            }
        }
        if self.n_beats == 0 {
            return Err(Error::InvalidArgument("n_beats must be positive".into()));
        }
        Ok(())
    }
}

/// Ground truth for one generated beat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedBeat {
    pub r_index: usize,
    pub label: BeatClass,
    pub qrs_polarity: Polarity,
    /// Bump amplitude, always positive.
    pub qrs_height_mv: f64,
    pub qrs_width_ms: f64,
    pub t_index: usize,
    pub t_polarity: Polarity,
    pub t_height_mv: f64,
    /// Interval from the previous R wave (from the record start for the
    /// first beat).
    pub pre_rr_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthRecord {
    pub record: EcgRecord,
    pub planted: Vec<PlantedBeat>,
}

const MIN_RR_MS: f64 = 200.0;

fn add_bump(x: &mut [f64], center: usize, amplitude: f64, fwhm_samples: f64) {
    let sigma = fwhm_samples / FWHM_PER_SIGMA;
    let reach = (6.0 * sigma).ceil() as usize;
    let lo = center.saturating_sub(reach);
    let hi = (center + reach + 1).min(x.len());
    let inv = 1.0 / (2.0 * sigma * sigma);
    for (i, v) in x.iter_mut().enumerate().take(hi).skip(lo) {
        let d = i as f64 - center as f64;
        *v += amplitude * (-d * d * inv).exp();
    }
}

/// Generates one record. Beat placement and morphology, and additive
/// noise, come from independent streams derived from `config.seed`.
pub fn generate(config: &SynthConfig) -> Result<SynthRecord> {
    config.validate()?;
    let fs = config.fs_hz;
    let ms = |v: f64| v * fs / 1000.0;
    let mut beat_rng = seed::rng(seed::derive(config.seed, &["synth", "beats"]));
    let mut noise_rng = seed::rng(seed::derive(config.seed, &["synth", "noise"]));
    let unit = Normal::new(0.0, 1.0).expect("unit normal");

    let q = &config.qrs;
    let mut planted = Vec::with_capacity(config.n_beats);
    let mut t_ms = 0.0;
    for _ in 0..config.n_beats {
        let is_pvc = beat_rng.random_bool(config.pvc_rate);
        let rr_center = if is_pvc {
            config.rr_mean_ms - config.pvc_prematurity_sigma * config.rr_std_ms
        } else {
            config.rr_mean_ms
        };
        let rr = (rr_center + config.rr_std_ms * unit.sample(&mut beat_rng)).max(MIN_RR_MS);
        let inverted = is_pvc && beat_rng.random_bool(q.pvc_inverted_prob);
        let (h_scale, w_scale) = if is_pvc {
            (q.pvc_height_scale, q.pvc_width_scale)
        } else {
            (1.0, 1.0)
        };
        let jitter = |rng: &mut rand_chacha::ChaCha8Rng| {
            let z: f64 = unit.sample(rng);
            (1.0 + config.morphology_jitter * z.clamp(-2.0, 2.0)).max(0.5)
        };
        let height = q.normal_height_mv * h_scale * jitter(&mut beat_rng);
        let width = q.normal_width_ms * w_scale * jitter(&mut beat_rng);

        let prev_r = planted.last().map(|b: &PlantedBeat| b.r_index);
        t_ms += rr;
        let mut r_index = ms(t_ms).round() as usize;
        if let Some(p) = prev_r {
            r_index = r_index.max(p + 1);
        }
        let pre_rr_ms = match prev_r {
            Some(p) => (r_index - p) as f64 * 1000.0 / fs,
            None => r_index as f64 * 1000.0 / fs,
        };
        let qrs_polarity = if inverted {
            Polarity::Down
        } else {
            Polarity::Up
        };
        let flip = |p: Polarity| match p {
            Polarity::Up => Polarity::Down,
            Polarity::Down => Polarity::Up,
        };
        let concordant = !is_pvc
            || !config.t_wave.discordant_for_pvc
            || (!inverted && beat_rng.random_bool(config.t_wave.pvc_concordant_prob));
        let t_polarity = if concordant {
            qrs_polarity
        } else {
            flip(qrs_polarity)
        };
        planted.push(PlantedBeat {
            r_index,
            label: if is_pvc {
                BeatClass::Pvc
            } else {
                BeatClass::Other
            },
            qrs_polarity,
            qrs_height_mv: height,
            qrs_width_ms: width,
            t_index: r_index + ms(config.t_wave.offset_ms).round() as usize,
            t_polarity,
            t_height_mv: config.t_wave.height_mv
                * if is_pvc && !concordant {
                    config.t_wave.pvc_height_scale
                } else {
                    1.0
                },
            pre_rr_ms,
        });
    }

    let last_r = planted.last().map_or(0, |b| b.r_index);
    let len = last_r + ms(config.rr_mean_ms).round() as usize + 1;
    let mut x = vec![0.0; len];
    for b in &planted {
        add_bump(
            &mut x,
            b.r_index,
            b.qrs_height_mv * b.qrs_polarity.sign(),
            ms(b.qrs_width_ms),
        );
        if b.t_height_mv > 0.0 && b.t_index < len {
            add_bump(
                &mut x,
                b.t_index,
                b.t_height_mv * b.t_polarity.sign(),
                ms(config.t_wave.width_ms),
            );
        }
    }
    if config.noise_std_mv > 0.0 {
        let noise = Normal::new(0.0, config.noise_std_mv).expect("noise std checked");
        for v in x.iter_mut() {
            *v += noise.sample(&mut noise_rng);
        }
    }
    if config.drift.amp_mv > 0.0 {
        let w = 2.0 * std::f64::consts::PI * config.drift.freq_hz / fs;
        for (i, v) in x.iter_mut().enumerate() {
            *v += config.drift.amp_mv * (w * i as f64).sin();
        }
    }

    let annotations = planted
        .iter()
        .map(|b| BeatAnnotation {
            sample_index: b.r_index,
            symbol_code: if b.label == BeatClass::Pvc { 5 } else { 1 },
            label: b.label,
        })
        .collect();
    Ok(SynthRecord {
        record: EcgRecord {
            record_name: format!("synth{}", config.seed),
            samples: x,
            sampling_rate_hz: fs,
            channel_description: "synthetic".into(),
            annotations: Some(annotations),
        },
        planted,
    })
}

/// A set of synthetic patients sharing a base configuration, each with its
/// own derived seed and mildly perturbed rhythm and morphology.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub n_patients: usize,
    pub base: SynthConfig,
    /// Relative per-patient spread of RR mean, QRS height and QRS width.
    pub patient_jitter: f64,
    pub root_seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            n_patients: 20,
            base: SynthConfig::default(),
            patient_jitter: 0.1,
            root_seed: 0,
        }
    }
}

impl CorpusConfig {
    pub fn record_name(&self, i: usize) -> String {
        format!("s{:03}", i + 1)
    }

    /// Inter-patient split of the corpus: even-indexed patients (`s001`,
    /// `s003`, ...) form DS1, the others DS2.
    pub fn split_lists(&self) -> SplitLists {
        let (ds1, ds2): (Vec<usize>, Vec<usize>) = (0..self.n_patients).partition(|i| i % 2 == 0);
        SplitLists {
            version: 1,
            ds1: ds1.into_iter().map(|i| self.record_name(i)).collect(),
            ds2: ds2.into_iter().map(|i| self.record_name(i)).collect(),
        }
    }

    /// Configuration of patient `i`.
    pub fn patient_config(&self, i: usize) -> SynthConfig {
        let name = self.record_name(i);
        let mut rng = seed::rng(seed::derive(self.root_seed, &["corpus", &name]));
        let unit = Normal::new(0.0, 1.0).expect("unit normal");
        let mut scale = || (1.0 + self.patient_jitter * unit.sample(&mut rng)).clamp(0.5, 1.5);
        let mut c = self.base;
        c.rr_mean_ms *= scale();
        c.qrs.normal_height_mv *= scale();
        c.qrs.normal_width_ms *= scale();
        c.seed = seed::derive(self.root_seed, &["record", &name]);
        c
    }
}

pub fn generate_corpus(config: &CorpusConfig, exec: Execution) -> Result<Vec<SynthRecord>> {
    par::map_range(exec, config.n_patients, |i| {
        let mut rec = generate(&config.patient_config(i))?;
        rec.record.record_name = config.record_name(i);
        Ok(rec)
    })
    .into_iter()
    .collect()
}

/// Writes each record in the CSV record format, returning the paths.
pub fn write_corpus(
    dir: &Path,
    records: &[SynthRecord],
    codes: &BeatCodeMap,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    records
        .iter()
        .map(|r| {
            let path = dir.join(format!("{}.csv", r.record.record_name));
            write_csv_record(&path, &r.record, codes)?;
            Ok(path)
        })
        .collect()
}
