//! Audio and contour IO.
//!
//! WAV input is restricted to mono PCM16 or IEEE float32. Contours are stored
//! as plain CSV (`time_sec,f0_hz,confidence,voiced`) so golden files stay
//! diff-able.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{F_MAX_HZ, F_MIN_HZ};

/// Canonical analysis rate.
pub const CANONICAL_SAMPLE_RATE: u32 = 16_000;
/// Canonical contour hop (256 samples at 16 kHz).
pub const CANONICAL_HOP_SECONDS: f64 = 0.016;

const CONTOUR_HEADER: [&str; 4] = ["time_sec", "f0_hz", "confidence", "voiced"];

/// Mono audio with samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f32>,
    sample_rate_hz: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f32>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::Argument("sample rate must be positive".into()));
        }
        if let Some((i, s)) = samples
            .iter()
            .enumerate()
            .find(|(_, s)| !s.is_finite() || s.abs() > 1.0)
        {
            return Err(Error::Domain(format!(
                "sample {i} = {s} is not a finite value in [-1, 1]"
            )));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    /// Builds a buffer by clamping every sample into `[-1, 1]`. Non-finite
    /// samples are still rejected.
    pub fn from_clamped(samples: Vec<f32>, sample_rate_hz: u32) -> Result<Self> {
        Self::new(
            samples.into_iter().map(|s| s.clamp(-1.0, 1.0)).collect(),
            sample_rate_hz,
        )
    }

    pub fn silence(len: usize, sample_rate_hz: u32) -> Self {
        Self {
            samples: vec![0.0; len],
            sample_rate_hz: sample_rate_hz.max(1),
        }
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    /// Mean square over all samples, 0 for an empty buffer.
    pub fn mean_power(&self) -> f64 {
        mean_square(&self.samples)
    }
}

pub(crate) fn mean_square(x: &[f32]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>() / x.len() as f64
}

/// One analysis frame of a contour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourFrame {
    pub f0_hz: Option<f64>,
    pub confidence: f64,
    pub voiced: bool,
}

impl ContourFrame {
    pub fn voiced(f0_hz: f64, confidence: f64) -> Self {
        Self {
            f0_hz: Some(f0_hz),
            confidence,
            voiced: true,
        }
    }

    pub fn unvoiced() -> Self {
        Self {
            f0_hz: None,
            confidence: 0.0,
            voiced: false,
        }
    }
}

/// Uniformly spaced per-frame pitch track. Frame `i` is stamped at
/// `i * hop_seconds`.
#[derive(Debug, Clone, PartialEq)]
pub struct PitchContour {
    hop_seconds: f64,
    frames: Vec<ContourFrame>,
}

impl PitchContour {
    pub fn new(hop_seconds: f64, frames: Vec<ContourFrame>) -> Result<Self> {
        if !(hop_seconds.is_finite() && hop_seconds > 0.0) {
            return Err(Error::Argument(format!(
                "hop must be positive, got {hop_seconds}"
            )));
        }
        for (i, fr) in frames.iter().enumerate() {
            if !(0.0..=1.0).contains(&fr.confidence) {
                return Err(Error::Domain(format!(
                    "frame {i}: confidence {} outside [0, 1]",
                    fr.confidence
                )));
            }
            if let Some(f0) = fr.f0_hz {
                if !(f0.is_finite() && f0 > 0.0) {
                    return Err(Error::Domain(format!("frame {i}: f0 {f0} is not positive")));
                }
            }
            if fr.voiced {
                match fr.f0_hz {
                    Some(f0) if (F_MIN_HZ - 1e-6..=F_MAX_HZ + 1e-6).contains(&f0) => {}
                    other => {
                        return Err(Error::Domain(format!(
                            "frame {i}: voiced frame needs f0 in [{F_MIN_HZ}, {F_MAX_HZ}], got {other:?}"
                        )))
                    }
                }
            }
        }
        Ok(Self {
            hop_seconds,
            frames,
        })
    }

    pub fn empty(hop_seconds: f64) -> Self {
        Self {
            hop_seconds,
            frames: Vec::new(),
        }
    }

    pub fn hop_seconds(&self) -> f64 {
        self.hop_seconds
    }

    pub fn frames(&self) -> &[ContourFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn time_of(&self, frame: usize) -> f64 {
        frame as f64 * self.hop_seconds
    }

    pub fn voiced_fraction(&self) -> f64 {
        if self.frames.is_empty() {
            return 0.0;
        }
        self.frames.iter().filter(|f| f.voiced).count() as f64 / self.frames.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavFormat {
    Pcm16,
    Float32,
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let path = path.as_ref();
    let reader = hound::WavReader::open(path).map_err(|e| map_hound(e, path))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::Unsupported(format!(
            "{}: {} channels, only mono input is accepted",
            path.display(),
            spec.channels
        )));
    }
    let samples: Vec<f32> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f32 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| map_hound(e, path))?,
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| map_hound(e, path))?,
        (fmt, bits) => {
            return Err(Error::Unsupported(format!(
                "{}: {bits}-bit {fmt:?} samples, expected PCM16 or float32",
                path.display()
            )))
        }
    };
    AudioBuffer::new(samples, spec.sample_rate)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn write_wav(buf: &AudioBuffer, path: impl AsRef<Path>, format: WavFormat) -> Result<()> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: buf.sample_rate_hz,
        bits_per_sample: match format {
            WavFormat::Pcm16 => 16,
            WavFormat::Float32 => 32,
        },
        sample_format: match format {
            WavFormat::Pcm16 => hound::SampleFormat::Int,
            WavFormat::Float32 => hound::SampleFormat::Float,
        },
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| map_hound(e, path))?;
    for &s in &buf.samples {
        let res = match format {
            WavFormat::Pcm16 => {
                writer.write_sample((s * 32768.0).round().clamp(-32768.0, 32767.0) as i16)
            }
            WavFormat::Float32 => writer.write_sample(s),
        };
        res.map_err(|e| map_hound(e, path))?;
    }
    writer.finalize().map_err(|e| map_hound(e, path))
}

fn map_hound(e: hound::Error, path: &Path) -> Error {
    match e {
        hound::Error::IoError(io) if io.kind() != std::io::ErrorKind::UnexpectedEof => {
            Error::Io(io)
        }
        hound::Error::Unsupported => {
            Error::Unsupported(format!("{}: unsupported WAV encoding", path.display()))
        }
        other => Error::Format(format!("{}: {other}", path.display())),
    }
}

/// Linear-interpolation resampler. Output sample `i` sits at input position
/// `i * src / target`; positions past the last input sample hold its value.
pub fn resample_linear(buf: &AudioBuffer, target_hz: u32) -> Result<AudioBuffer> {
    if target_hz == 0 {
        return Err(Error::Argument("target rate must be positive".into()));
    }
    if buf.is_empty() {
        return Err(Error::Argument("cannot resample an empty buffer".into()));
    }
    if target_hz == buf.sample_rate_hz {
        return Ok(buf.clone());
    }
    let src = &buf.samples;
    let ratio = buf.sample_rate_hz as f64 / target_hz as f64;
    let out_len = ((src.len() as f64 / ratio).round() as usize).max(1);
    let last = src.len() - 1;
    let out = (0..out_len)
        .map(|i| {
            let pos = i as f64 * ratio;
            let i0 = (pos.floor() as usize).min(last);
            let i1 = (i0 + 1).min(last);
            let frac = pos - i0 as f64;
            let v = src[i0] as f64 + (src[i1] as f64 - src[i0] as f64) * frac.min(1.0);
            v as f32
        })
        .collect();
    AudioBuffer::new(out, target_hz)
}

pub fn write_contour_csv(contour: &PitchContour, path: impl AsRef<Path>) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    write_contour(contour, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_contour<W: Write>(contour: &PitchContour, w: &mut W) -> Result<()> {
    writeln!(w, "{}", CONTOUR_HEADER.join(","))?;
    for (i, fr) in contour.frames.iter().enumerate() {
        // shortest round-trip formatting keeps pitch and confidence exact
        let f0 = fr.f0_hz.map(|f| f.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{:.6},{},{},{}",
            contour.time_of(i),
            f0,
            fr.confidence,
            u8::from(fr.voiced)
        )?;
    }
    Ok(())
}

/// Reads a contour CSV. The hop is inferred from the first two timestamps;
/// files with fewer than two rows get the canonical 16 ms hop.
pub fn read_contour_csv(path: impl AsRef<Path>) -> Result<PitchContour> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_contour(&text).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_contour(text: &str) -> Result<PitchContour> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("missing header".into()))?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let mut cols = [0usize; 4];
    for (slot, want) in cols.iter_mut().zip(CONTOUR_HEADER) {
        *slot = names
            .iter()
            .position(|n| *n == want)
            .ok_or_else(|| Error::Format(format!("missing column `{want}`")))?;
    }
    let mut times = Vec::new();
    let mut frames = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != names.len() {
            return Err(Error::Format(format!(
                "row {}: expected {} fields, found {}",
                lineno + 1,
                names.len(),
                fields.len()
            )));
        }
        let num = |idx: usize| -> Result<f64> {
            fields[idx].parse::<f64>().map_err(|_| {
                Error::Format(format!("row {}: bad number `{}`", lineno + 1, fields[idx]))
            })
        };
        times.push(num(cols[0])?);
        let f0 = if fields[cols[1]].is_empty() {
            None
        } else {
            Some(num(cols[1])?)
        };
        let voiced = match fields[cols[3]] {
            "1" => true,
            "0" => false,
            other => {
                return Err(Error::Format(format!(
                    "row {}: voiced must be 0 or 1, got `{other}`",
                    lineno + 1
                )))
            }
        };
        frames.push(ContourFrame {
            f0_hz: f0,
            confidence: num(cols[2])?,
            voiced,
        });
    }
    let hop = if times.len() >= 2 {
        times[1] - times[0]
    } else {
        CANONICAL_HOP_SECONDS
    };
    if !(hop > 0.0) {
        return Err(Error::Format(format!(
            "non-increasing timestamps (hop {hop})"
        )));
    }
    for (i, t) in times.iter().enumerate() {
        if (t - i as f64 * hop).abs() > 1e-5 + 1e-6 * i as f64 {
            return Err(Error::Format(format!(
                "row {}: timestamp {t} breaks uniform hop {hop}",
                i + 1
            )));
        }
    }
    PitchContour::new(hop, frames).map_err(|e| Error::Format(e.to_string()))
}
