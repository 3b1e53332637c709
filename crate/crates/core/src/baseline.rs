//! Model-free pitch estimator: normalized autocorrelation per analysis frame.

use crate::audio_io::{resample_linear, AudioBuffer, ContourFrame, PitchContour};
use crate::dsp::StftConfig;
use crate::error::Result;
use crate::metrics::Estimator;

#[derive(Debug, Clone, PartialEq)]
pub struct AcfEstimator {
    /// Framing and pitch range; the spectral fields are unused.
    pub frames: StftConfig,
    pub voicing_threshold: f64,
}

impl Default for AcfEstimator {
    fn default() -> Self {
        Self {
            frames: StftConfig::default(),
            voicing_threshold: 0.9,
        }
    }
}

/// Normalized autocorrelation `r(lag)` of one frame for every lag in
/// `lo..=hi`. Entries for lags with no overlapping energy are 0.
pub fn normalized_acf(x: &[f64], lo: usize, hi: usize) -> Vec<f64> {
    let n = x.len();
    (lo..=hi)
        .map(|lag| {
            if lag >= n {
                return 0.0;
            }
            let (a, b) = (&x[..n - lag], &x[lag..]);
            let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
            for (&u, &v) in a.iter().zip(b) {
                xy += u * v;
                xx += u * u;
                yy += v * v;
            }
            if xx == 0.0 || yy == 0.0 {
                0.0
            } else {
                xy / (xx * yy).sqrt()
            }
        })
        .collect()
}

impl AcfEstimator {
    fn lag_range(&self) -> (usize, usize) {
        let sr = self.frames.sample_rate as f64;
        (
            (sr / self.frames.f_max).ceil() as usize,
            (sr / self.frames.f_min).floor() as usize,
        )
    }

    /// Estimate for one frame of samples.
    pub fn frame(&self, x: &[f64]) -> ContourFrame {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let x: Vec<f64> = x.iter().map(|v| v - mean).collect();
        if x.iter().all(|&v| v == 0.0) {
            return ContourFrame::unvoiced();
        }
        let (lo, hi) = self.lag_range();
        // one extra lag on each side for the local-maximum test
        let r = normalized_acf(&x, lo - 1, hi + 1);
        let peaks: Vec<usize> = (1..r.len() - 1)
            .filter(|&i| r[i] > 0.0 && r[i] >= r[i - 1] && r[i] >= r[i + 1])
            .collect();
        let Some(best) = peaks.iter().map(|&i| r[i]).reduce(f64::max) else {
            return ContourFrame {
                f0_hz: None,
                confidence: 0.0,
                voiced: false,
            };
        };
        // the shortest lag close to the best peak avoids sub-octave picks
        let i = peaks.into_iter().find(|&i| r[i] >= 0.9 * best).unwrap();
        let (a, b, c) = (r[i - 1], r[i], r[i + 1]);
        let denom = a - 2.0 * b + c;
        let shift = if denom < 0.0 {
            (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        let lag = (lo + i - 1) as f64 + shift;
        let f0 = (self.frames.sample_rate as f64 / lag).clamp(self.frames.f_min, self.frames.f_max);
        let confidence = b.clamp(0.0, 1.0);
        ContourFrame {
            f0_hz: Some(f0),
            confidence,
            voiced: confidence >= self.voicing_threshold,
        }
    }

    pub fn analyze(&self, audio: &AudioBuffer) -> Result<PitchContour> {
        self.frames.validate()?;
        let sr = self.frames.sample_rate;
        let audio = if audio.sample_rate_hz() == sr {
            audio.clone()
        } else {
            resample_linear(audio, sr)?
        };
        let s = audio.samples();
        let (n, hop) = (self.frames.window_len, self.frames.hop);
        let frames = (0..self.frames.frame_count(s.len()))
            .map(|m| {
                let x: Vec<f64> = s[m * hop..m * hop + n].iter().map(|&v| v as f64).collect();
                self.frame(&x)
            })
            .collect();
        PitchContour::new(self.frames.hop_seconds(), frames)
    }
}

impl Estimator for AcfEstimator {
    fn estimate(&self, audio: &AudioBuffer) -> Result<PitchContour> {
        self.analyze(audio)
    }
}
