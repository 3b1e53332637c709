//! Spectral front-end: Hann-windowed STFT magnitude, band selection to the
//! pitch range, and log compression.
//!
//! Frames are left-aligned with no center padding: frame `m` covers samples
//! `[m*hop, m*hop + window_len)`. A trailing partial frame is dropped.

pub mod fft;

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::audio_io::AudioBuffer;
use crate::error::{Error, Result};
use crate::grid::{F_MAX_HZ, F_MIN_HZ};
use crate::tensor::Tensor;

pub use fft::{ComplexFft, RealFft};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StftConfig {
    pub window_len: usize,
    pub hop: usize,
    pub sample_rate: u32,
    pub f_min: f64,
    pub f_max: f64,
    pub epsilon: f64,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            window_len: 1024,
            hop: 256,
            sample_rate: 16_000,
            f_min: F_MIN_HZ,
            f_max: F_MAX_HZ,
            epsilon: 1e-8,
        }
    }
}

impl StftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_len < 2 || !self.window_len.is_power_of_two() {
            return Err(Error::Argument(format!(
                "window length {} must be a power of two",
                self.window_len
            )));
        }
        if self.hop == 0 || self.window_len % self.hop != 0 {
            return Err(Error::Argument(format!(
                "hop {} must divide window length {}",
                self.hop, self.window_len
            )));
        }
        let nyquist = self.sample_rate as f64 / 2.0;
        if !(self.f_min > 0.0 && self.f_min < self.f_max && self.f_max < nyquist) {
            return Err(Error::Argument(format!(
                "need 0 < f_min < f_max < {nyquist}, got {}..{}",
                self.f_min, self.f_max
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Argument("epsilon must be positive".into()));
        }
        Ok(())
    }

    /// Number of non-negative frequency bins, `N/2 + 1`.
    pub fn full_bins(&self) -> usize {
        self.window_len / 2 + 1
    }

    pub fn bin_hz(&self) -> f64 {
        self.sample_rate as f64 / self.window_len as f64
    }

    pub fn k_min(&self) -> usize {
        (self.f_min * self.window_len as f64 / self.sample_rate as f64).round() as usize
    }

    pub fn k_max(&self) -> usize {
        (self.f_max * self.window_len as f64 / self.sample_rate as f64).round() as usize
    }

    /// Retained band width `k_max - k_min + 1`.
    pub fn band_bins(&self) -> usize {
        self.k_max() - self.k_min() + 1
    }

    pub fn hop_seconds(&self) -> f64 {
        self.hop as f64 / self.sample_rate as f64
    }

    /// Frames produced for a signal of `len` samples.
    pub fn frame_count(&self, len: usize) -> usize {
        if len < self.window_len {
            0
        } else {
            (len - self.window_len) / self.hop + 1
        }
    }
}

/// Periodic Hann window, `w[n] = 0.5 (1 - cos(2 pi n / N))`.
pub fn hann_window(len: usize) -> Result<Vec<f64>> {
    if len < 2 {
        return Err(Error::Argument(format!("window length {len} < 2")));
    }
    Ok((0..len)
        .map(|n| 0.5 * (1.0 - (2.0 * PI * n as f64 / len as f64).cos()))
        .collect())
}

/// Log-magnitude spectrogram restricted to the pitch band.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    values: Tensor<f64>,
    frame_times: Vec<f64>,
    config: StftConfig,
}

impl Spectrogram {
    /// `T x K` values.
    pub fn values(&self) -> &Tensor<f64> {
        &self.values
    }

    pub fn frames(&self) -> usize {
        self.values.rows()
    }

    pub fn bins(&self) -> usize {
        self.values.cols()
    }

    pub fn frame_times(&self) -> &[f64] {
        &self.frame_times
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    /// Values cast to the network's working precision.
    pub fn to_tensor<T: num_traits::Float + Default>(&self) -> Tensor<T> {
        self.values
            .map(|&v| T::from(v).expect("finite spectrogram value"))
    }
}

/// Reusable STFT state: window, FFT plan and scratch buffers.
#[derive(Debug, Clone)]
pub struct Stft {
    cfg: StftConfig,
    window: Vec<f64>,
    fft: RealFft,
}

impl Stft {
    pub fn new(cfg: StftConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            window: hann_window(cfg.window_len)?,
            fft: RealFft::new(cfg.window_len)?,
            cfg,
        })
    }

    pub fn config(&self) -> &StftConfig {
        &self.cfg
    }

    fn check_input(&self, buf: &AudioBuffer) -> Result<()> {
        if buf.sample_rate_hz() != self.cfg.sample_rate {
            return Err(Error::Argument(format!(
                "audio is {} Hz, analysis expects {} Hz",
                buf.sample_rate_hz(),
                self.cfg.sample_rate
            )));
        }
        if buf.len() < self.cfg.window_len {
            return Err(Error::InputTooShort {
                needed: self.cfg.window_len,
                got: buf.len(),
            });
        }
        Ok(())
    }

    /// Calls `f(m, spectrum)` for every frame with the full `N/2+1` spectrum.
    fn for_each_frame(&self, x: &[f32], mut f: impl FnMut(usize, &[Complex64])) {
        let n = self.cfg.window_len;
        let mut frame = vec![0.0f64; n];
        let mut scratch = self.fft.make_scratch();
        let mut spec = vec![Complex64::default(); self.fft.output_len()];
        for m in 0..self.cfg.frame_count(x.len()) {
            let start = m * self.cfg.hop;
            for ((dst, &s), &w) in frame.iter_mut().zip(&x[start..start + n]).zip(&self.window) {
                *dst = s as f64 * w;
            }
            self.fft.process(&frame, &mut scratch, &mut spec);
            f(m, &spec);
        }
    }

    /// `T x (N/2+1)` magnitude matrix.
    pub fn magnitude(&self, buf: &AudioBuffer) -> Result<Tensor<f64>> {
        self.check_input(buf)?;
        let bins = self.cfg.full_bins();
        let t = self.cfg.frame_count(buf.len());
        let mut out = Tensor::zeros(&[t, bins]);
        self.for_each_frame(buf.samples(), |m, spec| {
            for (dst, c) in out.row_mut(m).iter_mut().zip(spec) {
                *dst = c.norm();
            }
        });
        Ok(out)
    }

    /// Fused magnitude, band selection and log compression. Bit-identical to
    /// composing [`stft_magnitude`], [`band_select`] and [`log_compress`].
    pub fn spectrogram(&self, buf: &AudioBuffer) -> Result<Spectrogram> {
        self.check_input(buf)?;
        let (k0, k1) = (self.cfg.k_min(), self.cfg.k_max());
        let t = self.cfg.frame_count(buf.len());
        let mut values = Tensor::zeros(&[t, k1 - k0 + 1]);
        let eps = self.cfg.epsilon;
        self.for_each_frame(buf.samples(), |m, spec| {
            for (dst, c) in values.row_mut(m).iter_mut().zip(&spec[k0..=k1]) {
                *dst = (c.norm() + eps).ln();
            }
        });
        Ok(Spectrogram {
            frame_times: frame_times(t, &self.cfg),
            values,
            config: self.cfg,
        })
    }
}

fn frame_times(t: usize, cfg: &StftConfig) -> Vec<f64> {
    (0..t)
        .map(|m| (m * cfg.hop) as f64 / cfg.sample_rate as f64)
        .collect()
}

pub fn stft_magnitude(buf: &AudioBuffer, cfg: &StftConfig) -> Result<Tensor<f64>> {
    Stft::new(*cfg)?.magnitude(buf)
}

/// Keeps columns `k_min..=k_max` of a full `N/2+1` magnitude matrix.
pub fn band_select(full: &Tensor<f64>, cfg: &StftConfig) -> Result<Tensor<f64>> {
    if full.shape().len() != 2 || full.cols() != cfg.full_bins() {
        return Err(Error::Shape(format!(
            "expected {} columns, got shape {:?}",
            cfg.full_bins(),
            full.shape()
        )));
    }
    let (k0, k1) = (cfg.k_min(), cfg.k_max());
    let t = full.rows();
    let data = (0..t)
        .flat_map(|m| full.row(m)[k0..=k1].iter().copied())
        .collect();
    Tensor::from_vec(&[t, k1 - k0 + 1], data)
}

/// `S = ln(mag + eps)`.
pub fn log_compress(mag: &Tensor<f64>, cfg: &StftConfig) -> Result<Spectrogram> {
    if mag.shape().len() != 2 {
        return Err(Error::Shape(format!(
            "expected a matrix, got {:?}",
            mag.shape()
        )));
    }
    if let Some(v) = mag.data().iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::Domain(format!("magnitude {v} is negative")));
    }
    let eps = cfg.epsilon;
    Ok(Spectrogram {
        values: mag.map(|&v| (v + eps).ln()),
        frame_times: frame_times(mag.rows(), cfg),
        config: *cfg,
    })
}

/// Full front-end on one buffer.
pub fn compute_spectrogram(buf: &AudioBuffer, cfg: &StftConfig) -> Result<Spectrogram> {
    Stft::new(*cfg)?.spectrogram(buf)
}
