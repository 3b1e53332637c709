//! Audio in, pitch contour out: resample, log spectrogram, network, decoder.

use crate::audio_io::{mean_square, resample_linear, AudioBuffer, ContourFrame, PitchContour};
use crate::decode::{decode_contour, DecoderConfig};
use crate::dsp::{Stft, StftConfig};
use crate::error::{Error, Result};
use crate::grid::PitchGrid;
use crate::metrics::Estimator;
use crate::model::{forward, ArchConfig, Logits, Mode, ModelParams};

/// Frame RMS (full scale 1.0) under which a frame counts as silent.
pub const SILENCE_RMS: f64 = 1e-5;

/// Spectral front end and pitch grid shared by training and inference.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnalysisConfig {
    pub stft: StftConfig,
    pub grid: PitchGrid,
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        self.stft.validate()
    }

    pub fn arch(&self) -> ArchConfig {
        ArchConfig {
            band_bins: self.stft.band_bins(),
            pitch_bins: self.grid.bins(),
        }
    }

    pub fn hop_seconds(&self) -> f64 {
        self.stft.hop_seconds()
    }
}

#[derive(Debug, Clone)]
pub struct NeuralEstimator {
    params: ModelParams<f32>,
    stft: Stft,
    grid: PitchGrid,
    decoder: DecoderConfig,
}

impl NeuralEstimator {
    pub fn new(
        params: ModelParams<f32>,
        analysis: &AnalysisConfig,
        decoder: DecoderConfig,
    ) -> Result<Self> {
        let (have, want) = (params.arch(), analysis.arch());
        if have != want {
            return Err(Error::Shape(format!(
                "weights expect {} spectral and {} pitch bins, configuration gives {} and {}",
                have.band_bins, have.pitch_bins, want.band_bins, want.pitch_bins
            )));
        }
        decoder.validate(analysis.grid.bins())?;
        Ok(Self {
            params,
            stft: Stft::new(analysis.stft.clone())?,
            grid: analysis.grid.clone(),
            decoder,
        })
    }

    pub fn with_defaults(params: ModelParams<f32>) -> Result<Self> {
        Self::new(params, &AnalysisConfig::default(), DecoderConfig::default())
    }

    pub fn params(&self) -> &ModelParams<f32> {
        &self.params
    }

    pub fn stft_config(&self) -> &StftConfig {
        self.stft.config()
    }

    pub fn grid(&self) -> &PitchGrid {
        &self.grid
    }

    pub fn decoder(&self) -> &DecoderConfig {
        &self.decoder
    }

    fn prepare(&self, audio: &AudioBuffer) -> Result<Option<AudioBuffer>> {
        let sr = self.stft.config().sample_rate;
        let audio = if audio.sample_rate_hz() == sr {
            audio.clone()
        } else {
            resample_linear(audio, sr)?
        };
        Ok((audio.len() >= self.stft.config().window_len).then_some(audio))
    }

    /// Eval-mode logits, one row per analysis frame. Inputs shorter than one
    /// window give zero rows.
    pub fn logits(&self, audio: &AudioBuffer) -> Result<Logits<f32>> {
        let Some(audio) = self.prepare(audio)? else {
            return Ok(Logits::zeros(0, self.grid.bins()));
        };
        let spec = self.stft.spectrogram(&audio)?;
        let (z, _) = forward(&self.params, &[spec.to_tensor::<f32>()], Mode::Eval)?;
        Ok(z)
    }

    /// Decoded contour. Frames whose RMS is below [`SILENCE_RMS`] are
    /// reported unvoiced with no pitch.
    pub fn analyze(&self, audio: &AudioBuffer) -> Result<PitchContour> {
        let Some(audio) = self.prepare(audio)? else {
            return Ok(PitchContour::empty(self.stft.config().hop_seconds()));
        };
        let spec = self.stft.spectrogram(&audio)?;
        let (z, _) = forward(&self.params, &[spec.to_tensor::<f32>()], Mode::Eval)?;
        let contour = decode_contour(
            &z,
            &self.grid,
            &self.decoder,
            self.stft.config().hop_seconds(),
        )?;
        let cfg = self.stft.config();
        let s = audio.samples();
        let frames = contour
            .frames()
            .iter()
            .enumerate()
            .map(|(m, f)| {
                let start = m * cfg.hop;
                let rms = mean_square(&s[start..start + cfg.window_len]).sqrt();
                if rms < SILENCE_RMS {
                    ContourFrame {
                        f0_hz: None,
                        confidence: 0.0,
                        voiced: false,
                    }
                } else {
                    *f
                }
            })
            .collect();
        PitchContour::new(contour.hop_seconds(), frames)
    }
}

impl Estimator for NeuralEstimator {
    fn estimate(&self, audio: &AudioBuffer) -> Result<PitchContour> {
        self.analyze(audio)
    }
}
