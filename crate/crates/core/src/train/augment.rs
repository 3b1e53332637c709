//! Random gain plus background noise mixed at a random SNR.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::audio_io::{mean_square, AudioBuffer};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentConfig {
    pub gain_db: (f64, f64),
    pub snr_db: (f64, f64),
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            gain_db: (-6.0, 6.0),
            snr_db: (10.0, 30.0),
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("gain_db", self.gain_db), ("snr_db", self.snr_db)] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Argument(format!(
                    "{name} range [{lo}, {hi}] is not ordered"
                )));
            }
        }
        Ok(())
    }
}

/// Environmental noise recordings to draw excerpts from. Empty means
/// Gaussian noise only.
#[derive(Debug, Clone, Default)]
pub struct NoiseBank {
    clips: Vec<AudioBuffer>,
}

impl NoiseBank {
    pub fn new(clips: Vec<AudioBuffer>) -> Result<Self> {
        if clips.iter().any(|c| c.is_empty()) {
            return Err(Error::Argument("noise clip is empty".into()));
        }
        Ok(Self { clips })
    }

    pub fn is_empty(&self) -> bool {
        self.clips.is_empty()
    }

    pub fn len(&self) -> usize {
        self.clips.len()
    }

    /// A random excerpt of `len` samples from a random clip, wrapping around
    /// clips shorter than `len`.
    pub fn excerpt<R: Rng>(&self, len: usize, rng: &mut R) -> Option<Vec<f64>> {
        if self.clips.is_empty() {
            return None;
        }
        let clip = &self.clips[rng.random_range(0..self.clips.len())];
        let s = clip.samples();
        let start = rng.random_range(0..s.len());
        Some((0..len).map(|i| s[(start + i) % s.len()] as f64).collect())
    }
}

/// `sqrt(alpha) * env + sqrt(1 - alpha) * gauss`; `alpha` is forced to 0
/// when the bank is empty.
pub fn background_noise<R: Rng>(len: usize, bank: &NoiseBank, alpha: f64, rng: &mut R) -> Vec<f64> {
    let env = bank.excerpt(len, rng);
    let alpha = if env.is_some() { alpha } else { 0.0 };
    let (wa, wg) = (alpha.sqrt(), (1.0 - alpha).sqrt());
    (0..len)
        .map(|i| {
            let g: f64 = rng.sample(StandardNormal);
            wa * env.as_ref().map_or(0.0, |e| e[i]) + wg * g
        })
        .collect()
}

/// Noise scale giving `10 log10(p_signal / (gamma^2 p_noise)) = snr_db`.
pub fn snr_gamma(p_signal: f64, p_noise: f64, snr_db: f64) -> f64 {
    (p_signal / (p_noise * 10f64.powf(snr_db / 10.0))).sqrt()
}

/// Result of mixing noise into a signal.
#[derive(Debug, Clone)]
pub struct Mixed {
    pub samples: Vec<f32>,
    /// SNR of the mix before clamping, in dB.
    pub measured_snr_db: f64,
}

/// Adds `noise` scaled to hit `snr_db` and clamps to `[-1, 1]`. An infinite
/// SNR or silent noise leaves the signal untouched.
pub fn mix_at_snr(signal: &[f32], noise: &[f64], snr_db: f64) -> Result<Mixed> {
    if noise.len() != signal.len() {
        return Err(Error::Shape(format!(
            "noise has {} samples, signal {}",
            noise.len(),
            signal.len()
        )));
    }
    let p_sig = mean_square(signal);
    if p_sig == 0.0 {
        return Err(Error::SkipExample("silent segment".into()));
    }
    let p_noise = noise.iter().map(|v| v * v).sum::<f64>() / noise.len() as f64;
    if snr_db == f64::INFINITY || p_noise == 0.0 {
        return Ok(Mixed {
            samples: signal.iter().map(|s| s.clamp(-1.0, 1.0)).collect(),
            measured_snr_db: f64::INFINITY,
        });
    }
    let gamma = snr_gamma(p_sig, p_noise, snr_db);
    let mut added = 0.0;
    let samples = signal
        .iter()
        .zip(noise)
        .map(|(&s, &n)| {
            let scaled = gamma * n;
            added += scaled * scaled;
            (s as f64 + scaled).clamp(-1.0, 1.0) as f32
        })
        .collect();
    let p_added = added / noise.len() as f64;
    Ok(Mixed {
        samples,
        measured_snr_db: 10.0 * (p_sig / p_added).log10(),
    })
}

/// The random quantities drawn for one augmentation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentDraw {
    pub gain_db: f64,
    pub snr_db: f64,
    pub alpha: f64,
}

impl AugmentDraw {
    pub fn sample<R: Rng>(cfg: &AugmentConfig, rng: &mut R) -> Self {
        let uniform = |rng: &mut R, (lo, hi): (f64, f64)| {
            if lo == hi {
                lo
            } else {
                rng.random_range(lo..hi)
            }
        };
        Self {
            gain_db: uniform(rng, cfg.gain_db),
            snr_db: uniform(rng, cfg.snr_db),
            alpha: rng.random_range(0.0..1.0),
        }
    }
}

/// Applies an already drawn gain/SNR/mixing triple.
pub fn augment_with<R: Rng>(
    x: &AudioBuffer,
    draw: &AugmentDraw,
    bank: &NoiseBank,
    rng: &mut R,
) -> Result<Mixed> {
    if x.mean_power() == 0.0 {
        return Err(Error::SkipExample("silent segment".into()));
    }
    let g = 10f64.powf(draw.gain_db / 20.0);
    let scaled: Vec<f32> = x.samples().iter().map(|&s| (s as f64 * g) as f32).collect();
    let noise = background_noise(scaled.len(), bank, draw.alpha, rng);
    mix_at_snr(&scaled, &noise, draw.snr_db)
}

pub fn augment<R: Rng>(
    x: &AudioBuffer,
    cfg: &AugmentConfig,
    bank: &NoiseBank,
    rng: &mut R,
) -> Result<AudioBuffer> {
    let draw = AugmentDraw::sample(cfg, rng);
    let mixed = augment_with(x, &draw, bank, rng)?;
    AudioBuffer::new(mixed.samples, x.sample_rate_hz())
}
