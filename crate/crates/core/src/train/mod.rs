//! Objective, augmentation, synthetic data and the training loop.

mod augment;
mod config;
mod loss;
mod optim;
mod synth;

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::audio_io::{
    read_contour_csv, read_wav, resample_linear, AudioBuffer, PitchContour, CANONICAL_SAMPLE_RATE,
};
use crate::decode::DecoderConfig;
use crate::dsp::{Stft, StftConfig};
use crate::error::{Error, Result};
use crate::grid::PitchGrid;
use crate::metrics::{align, rpa};
use crate::model::{backward, forward, Mode, ModelParams, BN_MOMENTUM};
use crate::pipeline::{AnalysisConfig, NeuralEstimator};

pub use augment::{
    augment, augment_with, background_noise, mix_at_snr, snr_gamma, AugmentConfig, AugmentDraw,
    Mixed, NoiseBank,
};
pub use config::TrainConfig;
pub use loss::{loss_ce, loss_cents, loss_total, FrameTargets, LossOutput, TotalLoss};
pub use optim::Adam;
pub use synth::{
    random_spec, synth_corpus, synth_example, SynthOutput, SynthRanges, SynthSpec, Trajectory,
};

/// A fixed-length training segment with per-frame supervision.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainExample {
    pub audio: AudioBuffer,
    /// True frequency per analysis frame; meaningful where `voiced` is set.
    pub f0_hz: Vec<f64>,
    pub voiced: Vec<bool>,
}

impl TrainExample {
    pub fn targets(&self, grid: &PitchGrid) -> Result<FrameTargets> {
        let f0 = self
            .f0_hz
            .iter()
            .zip(&self.voiced)
            .map(|(&f, &v)| v.then_some(f))
            .collect();
        FrameTargets::from_f0(f0, grid)
    }
}

/// One recording and its reference contour.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusItem {
    pub name: String,
    pub audio: AudioBuffer,
    pub truth: PitchContour,
}

impl CorpusItem {
    /// Brings the audio to the analysis rate and checks that the reference
    /// contour uses the analysis hop.
    pub fn new(
        name: impl Into<String>,
        audio: AudioBuffer,
        truth: PitchContour,
        analysis: &AnalysisConfig,
    ) -> Result<Self> {
        let name = name.into();
        let sr = analysis.stft.sample_rate;
        let audio = if audio.sample_rate_hz() == sr {
            audio
        } else {
            resample_linear(&audio, sr)?
        };
        let hop = analysis.hop_seconds();
        if (truth.hop_seconds() - hop).abs() > 1e-9 {
            return Err(Error::Alignment(format!(
                "{name}: reference hop {} s differs from analysis hop {hop} s",
                truth.hop_seconds()
            )));
        }
        Ok(Self { name, audio, truth })
    }

    fn voiced_frames(&self) -> Vec<usize> {
        self.truth
            .frames()
            .iter()
            .enumerate()
            .filter(|(_, f)| f.voiced && f.f0_hz.is_some())
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub items: Vec<CorpusItem>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn from_synth(
        outputs: impl IntoIterator<Item = SynthOutput>,
        analysis: &AnalysisConfig,
    ) -> Result<Self> {
        let items = outputs
            .into_iter()
            .enumerate()
            .map(|(i, o)| CorpusItem::new(format!("synth_{i:05}"), o.audio, o.truth, analysis))
            .collect::<Result<_>>()?;
        Ok(Self { items })
    }

    /// Loads every `wav_path,csv_path` pair of a manifest. Relative paths are
    /// resolved against the manifest's directory.
    pub fn from_manifest(path: impl AsRef<Path>, analysis: &AnalysisConfig) -> Result<Self> {
        let items = read_manifest(path)?
            .into_iter()
            .map(|(wav, csv)| {
                CorpusItem::new(
                    wav.display().to_string(),
                    read_wav(&wav)?,
                    read_contour_csv(&csv)?,
                    analysis,
                )
            })
            .collect::<Result<_>>()?;
        Ok(Self { items })
    }
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<(PathBuf, PathBuf)>> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new(""));
    let text = fs::read_to_string(path)?;
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (wav, csv) = line.split_once(',').ok_or_else(|| {
            Error::Format(format!(
                "{}:{}: expected `wav_path,csv_path`",
                path.display(),
                n + 1
            ))
        })?;
        pairs.push((base.join(wav.trim()), base.join(csv.trim())));
    }
    Ok(pairs)
}

pub fn write_manifest(path: impl AsRef<Path>, pairs: &[(String, String)]) -> Result<()> {
    let mut text = String::new();
    for (wav, csv) in pairs {
        text.push_str(&format!("{wav},{csv}\n"));
    }
    fs::write(path, text)?;
    Ok(())
}

/// Every `.wav` file in `dir`, in path order, at the canonical rate.
pub fn load_noise_dir(dir: impl AsRef<Path>) -> Result<NoiseBank> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir.as_ref())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav")))
        .collect();
    paths.sort();
    let clips = paths
        .iter()
        .map(|p| {
            let a = read_wav(p)?;
            if a.sample_rate_hz() == CANONICAL_SAMPLE_RATE {
                Ok(a)
            } else {
                resample_linear(&a, CANONICAL_SAMPLE_RATE)
            }
        })
        .filter(|a| !matches!(a, Ok(a) if a.is_empty()))
        .collect::<Result<_>>()?;
    NoiseBank::new(clips)
}

/// Cuts `seconds` of audio so that analysis frame `center` of the source
/// becomes the middle frame of the segment. Analysis frames of the segment
/// line up with source frames; anything outside the source is silence with
/// unvoiced truth.
pub fn extract_segment(
    item: &CorpusItem,
    center: usize,
    seconds: f64,
    cfg: &StftConfig,
) -> Result<TrainExample> {
    let len = (seconds * cfg.sample_rate as f64).round() as usize;
    let frames = cfg.frame_count(len);
    if frames == 0 {
        return Err(Error::InputTooShort {
            needed: cfg.window_len,
            got: len,
        });
    }
    let first = center as isize - (frames / 2) as isize;
    let start = first * cfg.hop as isize;
    let src = item.audio.samples();
    let samples = (0..len as isize)
        .map(|i| {
            let j = start + i;
            if j >= 0 && (j as usize) < src.len() {
                src[j as usize]
            } else {
                0.0
            }
        })
        .collect();
    let truth = item.truth.frames();
    let (f0_hz, voiced) = (0..frames as isize)
        .map(|j| {
            let m = first + j;
            match (m >= 0).then(|| truth.get(m as usize)).flatten() {
                Some(fr) if fr.voiced => match fr.f0_hz {
                    Some(f) => (f, true),
                    None => (0.0, false),
                },
                _ => (0.0, false),
            }
        })
        .unzip();
    Ok(TrainExample {
        audio: AudioBuffer::new(samples, cfg.sample_rate)?,
        f0_hz,
        voiced,
    })
}

/// Mean losses of one epoch, plus validation accuracy when available.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub steps: usize,
    pub loss: f64,
    pub ce: f64,
    pub cents: f64,
    pub val_rpa: Option<f64>,
}

pub fn write_loss_csv(path: impl AsRef<Path>, log: &[EpochLog]) -> Result<()> {
    let mut text = String::from("epoch,steps,loss,ce,cents,val_rpa\n");
    for e in log {
        let val = e.val_rpa.map(|v| format!("{v:.6}")).unwrap_or_default();
        text.push_str(&format!(
            "{},{},{:.9},{:.9},{:.9},{val}\n",
            e.epoch, e.steps, e.loss, e.ce, e.cents
        ));
    }
    fs::write(path, text)?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams<f32>,
    pub log: Vec<EpochLog>,
    /// Epoch whose weights were returned (differs from the last one when
    /// early stopping restored the best validation checkpoint).
    pub best_epoch: usize,
}

/// Mean RPA of `params` over a corpus, each file weighted equally.
pub fn validation_rpa(
    params: &ModelParams<f32>,
    corpus: &Corpus,
    analysis: &AnalysisConfig,
) -> Result<f64> {
    let est = NeuralEstimator::new(params.clone(), analysis, DecoderConfig::default())?;
    let mut scores = Vec::new();
    for item in &corpus.items {
        let pred = est.analyze(&item.audio)?;
        if let Ok(v) = rpa(&align(&pred, &item.truth)?) {
            scores.push(v);
        }
    }
    if scores.is_empty() {
        return Err(Error::UndefinedMetric(
            "validation corpus has no voiced frames".into(),
        ));
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Trains from a fixed seed. Each epoch visits every corpus item once in a
/// shuffled order, taking one segment centered on a random voiced frame,
/// augmenting it and grouping segments into minibatches. `on_epoch` sees each
/// log entry as it is produced.
pub fn train_loop(
    corpus: &Corpus,
    cfg: &TrainConfig,
    analysis: &AnalysisConfig,
    noise: &NoiseBank,
    validation: Option<&Corpus>,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    analysis.validate()?;
    if corpus.is_empty() {
        return Err(Error::Argument("training corpus is empty".into()));
    }
    let stft_cfg = &analysis.stft;
    let stft = Stft::new(stft_cfg.clone())?;
    let grid = &analysis.grid;
    let voiced: Vec<Vec<usize>> = corpus.items.iter().map(CorpusItem::voiced_frames).collect();
    let usable: Vec<usize> = (0..corpus.len())
        .filter(|&i| !voiced[i].is_empty())
        .collect();
    if usable.is_empty() {
        return Err(Error::Argument("no corpus item has voiced frames".into()));
    }
    for i in (0..corpus.len()).filter(|i| voiced[*i].is_empty()) {
        log::warn!("{}: no voiced frames, skipped", corpus.items[i].name);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = ModelParams::<f32>::init(analysis.arch(), rng.random());
    let mut opt = Adam::new(&params, cfg.lr);
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, ModelParams<f32>)> = None;
    let mut since_best = 0;

    for epoch in 1..=cfg.epochs {
        let mut order = usable.clone();
        order.shuffle(&mut rng);
        let (mut sum, mut sum_ce, mut sum_cents, mut steps) = (0.0, 0.0, 0.0, 0usize);
        for chunk in order.chunks(cfg.batch) {
            let mut inputs = Vec::with_capacity(chunk.len());
            let mut targets = FrameTargets {
                f0_hz: Vec::new(),
                bins: Vec::new(),
            };
            for &i in chunk {
                let centers = &voiced[i];
                let center = centers[rng.random_range(0..centers.len())];
                let ex = extract_segment(&corpus.items[i], center, cfg.segment_seconds, stft_cfg)?;
                let keep_clean =
                    cfg.clean_fraction > 0.0 && rng.random::<f64>() < cfg.clean_fraction;
                let audio = if cfg.augment && !keep_clean {
                    match augment(&ex.audio, &cfg.augment_config(), noise, &mut rng) {
                        Ok(a) => a,
                        Err(Error::SkipExample(why)) => {
                            log::debug!("{}: {why}", corpus.items[i].name);
                            continue;
                        }
                        Err(e) => return Err(e),
                    }
                } else {
                    ex.audio.clone()
                };
                let spec = stft.spectrogram(&audio)?;
                inputs.push(spec.to_tensor::<f32>());
                targets.extend(&ex.targets(grid)?);
            }
            if targets.voiced_count() == 0 {
                continue;
            }
            let (z, cache) = forward(&params, &inputs, Mode::Train)?;
            let out = loss_total(&z, &targets, grid, cfg.lambda)?;
            let diverged = |loss| Error::Divergence {
                epoch,
                step: opt.steps() as usize + 1,
                loss,
            };
            if !out.value.is_finite() {
                return Err(diverged(out.value));
            }
            let grads = backward(&params, &cache, &out.dz)?;
            if !grads.is_finite() {
                return Err(diverged(f64::NAN));
            }
            opt.update(&mut params, &grads)?;
            params.update_running_stats(&cache, BN_MOMENTUM)?;
            sum += out.value;
            sum_ce += out.ce;
            sum_cents += out.cents;
            steps += 1;
        }
        if steps == 0 {
            return Err(Error::Argument(
                "epoch produced no trainable batches".into(),
            ));
        }
        let val_rpa = validation
            .map(|v| validation_rpa(&params, v, analysis))
            .transpose()?;
        let entry = EpochLog {
            epoch,
            steps,
            loss: sum / steps as f64,
            ce: sum_ce / steps as f64,
            cents: sum_cents / steps as f64,
            val_rpa,
        };
        on_epoch(&entry);
        log.push(entry);
        if let Some(v) = val_rpa {
            if best.as_ref().is_none_or(|(b, _, _)| v > *b) {
                best = Some((v, epoch, params.clone()));
                since_best = 0;
            } else {
                since_best += 1;
                if cfg.patience > 0 && since_best >= cfg.patience {
                    log::info!("validation RPA has not improved for {since_best} epochs, stopping");
                    break;
                }
            }
        }
    }
    let last = log.last().map_or(0, |e| e.epoch);
    let (params, best_epoch) = match best {
        Some((_, epoch, p)) if cfg.patience > 0 => (p, epoch),
        _ => (params, last),
    };
    Ok(TrainOutcome {
        params,
        log,
        best_epoch,
    })
}
