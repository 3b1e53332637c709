//! Harmonic test signals with exactly known pitch.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::audio_io::{AudioBuffer, ContourFrame, PitchContour, CANONICAL_SAMPLE_RATE};
use crate::dsp::StftConfig;
use crate::error::{Error, Result};
use crate::grid::{cents_to_ratio, F_MAX_HZ, F_MIN_HZ};

const PEAK: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Trajectory {
    Constant {
        f0_hz: f64,
    },
    /// Linear in Hz from `from_hz` at t = 0 to `to_hz` at the end.
    Glide {
        from_hz: f64,
        to_hz: f64,
    },
    Vibrato {
        center_hz: f64,
        rate_hz: f64,
        depth_cents: f64,
    },
}

impl Trajectory {
    pub fn f0_at(&self, t: f64, duration_s: f64) -> f64 {
        match *self {
            Trajectory::Constant { f0_hz } => f0_hz,
            Trajectory::Glide { from_hz, to_hz } => {
                let u = if duration_s > 0.0 {
                    (t / duration_s).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                from_hz + (to_hz - from_hz) * u
            }
            Trajectory::Vibrato {
                center_hz,
                rate_hz,
                depth_cents,
            } => center_hz * cents_to_ratio(depth_cents * (TAU * rate_hz * t).sin()),
        }
    }

    /// Lowest and highest frequency the trajectory can reach.
    pub fn range(&self) -> (f64, f64) {
        match *self {
            Trajectory::Constant { f0_hz } => (f0_hz, f0_hz),
            Trajectory::Glide { from_hz, to_hz } => (from_hz.min(to_hz), from_hz.max(to_hz)),
            Trajectory::Vibrato {
                center_hz,
                depth_cents,
                ..
            } => {
                let r = cents_to_ratio(depth_cents.abs());
                (center_hz / r, center_hz * r)
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Trajectory::Constant { .. } => "constant",
            Trajectory::Glide { .. } => "glide",
            Trajectory::Vibrato { .. } => "vibrato",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub trajectory: Trajectory,
    pub harmonics: usize,
    /// Harmonic `h` has amplitude `h^-rolloff`.
    pub rolloff: f64,
    pub duration_s: f64,
    /// Drives the random starting phase of each harmonic.
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.trajectory.range();
        if !(lo.is_finite() && hi.is_finite()) || lo < F_MIN_HZ || hi > F_MAX_HZ {
            return Err(Error::Argument(format!(
                "trajectory spans [{lo:.3}, {hi:.3}] Hz, outside [{F_MIN_HZ}, {F_MAX_HZ}]"
            )));
        }
        if self.harmonics == 0 {
            return Err(Error::Argument("need at least one harmonic".into()));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(Error::Argument(format!(
                "duration {} must be positive",
                self.duration_s
            )));
        }
        if !self.rolloff.is_finite() {
            return Err(Error::Argument("rolloff must be finite".into()));
        }
        Ok(())
    }
}

/// A generated signal with its frame-level ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub audio: AudioBuffer,
    pub truth: PitchContour,
}

/// Sums harmonics of a phase-continuous fundamental, peak-normalized to 0.9.
/// Harmonics that would reach the Nyquist frequency are left out. Ground
/// truth for analysis frame `m` is the instantaneous F0 at the frame center.
pub fn synth_example(spec: &SynthSpec) -> Result<SynthOutput> {
    spec.validate()?;
    let cfg = StftConfig::default();
    let fs = CANONICAL_SAMPLE_RATE as f64;
    let len = (spec.duration_s * fs).round() as usize;
    let nyquist = fs / 2.0;
    let f_peak = spec.trajectory.range().1;
    let harmonics = (1..=spec.harmonics)
        .filter(|&h| h == 1 || h as f64 * f_peak < nyquist)
        .collect::<Vec<_>>();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let phase0: Vec<f64> = harmonics
        .iter()
        .map(|_| rng.random_range(0.0..1.0))
        .collect();
    let amps: Vec<f64> = harmonics
        .iter()
        .map(|&h| (h as f64).powf(-spec.rolloff))
        .collect();

    let mut signal = Vec::with_capacity(len);
    let mut phi = 0.0f64;
    for n in 0..len {
        let mut v = 0.0;
        for ((&h, &a), &p0) in harmonics.iter().zip(&amps).zip(&phase0) {
            v += a * (TAU * (h as f64 * phi + p0)).sin();
        }
        signal.push(v);
        phi += spec.trajectory.f0_at(n as f64 / fs, spec.duration_s) / fs;
        phi -= phi.floor();
    }
    let peak = signal.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if peak > 0.0 { PEAK / peak } else { 0.0 };
    let samples = signal.iter().map(|v| (v * scale) as f32).collect();
    let audio = AudioBuffer::new(samples, CANONICAL_SAMPLE_RATE)?;

    let frames = (0..cfg.frame_count(len))
        .map(|m| {
            let center = (m * cfg.hop + cfg.window_len / 2) as f64 / fs;
            let f0 = spec.trajectory.f0_at(center, spec.duration_s);
            ContourFrame::voiced(f0.clamp(F_MIN_HZ, F_MAX_HZ), 1.0)
        })
        .collect();
    let truth = PitchContour::new(cfg.hop_seconds(), frames)?;
    Ok(SynthOutput { audio, truth })
}

/// Distribution the corpus generator draws specs from.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthRanges {
    pub f0_hz: (f64, f64),
    pub harmonics: (usize, usize),
    pub rolloff: (f64, f64),
    pub duration_s: f64,
    pub vibrato_rate_hz: (f64, f64),
    pub vibrato_depth_cents: (f64, f64),
}

impl Default for SynthRanges {
    fn default() -> Self {
        Self {
            f0_hz: (100.0, 1000.0),
            harmonics: (3, 10),
            rolloff: (0.5, 1.5),
            duration_s: 1.0,
            vibrato_rate_hz: (3.0, 8.0),
            vibrato_depth_cents: (10.0, 100.0),
        }
    }
}

impl SynthRanges {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.f0_hz;
        if !(lo >= F_MIN_HZ && hi <= F_MAX_HZ && lo < hi) {
            return Err(Error::Argument(format!(
                "f0 range [{lo}, {hi}] must be ordered and inside [{F_MIN_HZ}, {F_MAX_HZ}]"
            )));
        }
        let (h0, h1) = self.harmonics;
        if h0 == 0 || h0 > h1 {
            return Err(Error::Argument(format!(
                "harmonic range [{h0}, {h1}] is invalid"
            )));
        }
        let ordered = |(a, b): (f64, f64)| a.is_finite() && b.is_finite() && a <= b;
        if !ordered(self.rolloff)
            || !ordered(self.vibrato_rate_hz)
            || !ordered(self.vibrato_depth_cents)
        {
            return Err(Error::Argument("parameter ranges must be ordered".into()));
        }
        if !(self.duration_s > 0.0) {
            return Err(Error::Argument("duration must be positive".into()));
        }
        Ok(())
    }
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

fn log_uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    uniform(rng, (lo.ln(), hi.ln())).exp()
}

/// Draws a spec with a uniformly chosen trajectory kind. Pitches are
/// log-uniform and every trajectory stays inside `ranges.f0_hz`.
pub fn random_spec<R: Rng>(ranges: &SynthRanges, rng: &mut R) -> SynthSpec {
    let trajectory = match rng.random_range(0..3) {
        0 => Trajectory::Constant {
            f0_hz: log_uniform(rng, ranges.f0_hz),
        },
        1 => Trajectory::Glide {
            from_hz: log_uniform(rng, ranges.f0_hz),
            to_hz: log_uniform(rng, ranges.f0_hz),
        },
        _ => {
            let depth = uniform(rng, ranges.vibrato_depth_cents);
            let r = cents_to_ratio(depth);
            let span = (ranges.f0_hz.0 * r, ranges.f0_hz.1 / r);
            let center = if span.0 < span.1 {
                log_uniform(rng, span)
            } else {
                (ranges.f0_hz.0 * ranges.f0_hz.1).sqrt()
            };
            let depth = if span.0 < span.1 { depth } else { 0.0 };
            Trajectory::Vibrato {
                center_hz: center,
                rate_hz: uniform(rng, ranges.vibrato_rate_hz),
                depth_cents: depth,
            }
        }
    };
    SynthSpec {
        trajectory,
        harmonics: rng.random_range(ranges.harmonics.0..=ranges.harmonics.1),
        rolloff: uniform(rng, ranges.rolloff),
        duration_s: ranges.duration_s,
        seed: rng.random(),
    }
}

/// `count` examples from one master seed.
pub fn synth_corpus(
    ranges: &SynthRanges,
    count: usize,
    seed: u64,
) -> Result<Vec<(SynthSpec, SynthOutput)>> {
    ranges.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let spec = random_spec(ranges, &mut rng);
            synth_example(&spec).map(|out| (spec, out))
        })
        .collect()
}
