//! Pitch and voicing accuracy: RPA, RCA, cents accuracy, voicing
//! precision/recall, octave and gross-error accuracy, and their harmonic mean.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::audio_io::{AudioBuffer, PitchContour};
use crate::error::{Error, Result};
use crate::train::{background_noise, mix_at_snr, NoiseBank};

/// Anything that turns audio into a pitch contour.
pub trait Estimator {
    fn estimate(&self, audio: &AudioBuffer) -> Result<PitchContour>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignedFrame {
    pub f_true: Option<f64>,
    pub f_pred: Option<f64>,
    pub voiced_true: bool,
    pub voiced_pred: bool,
}

impl AlignedFrame {
    /// Signed pitch error in cents for frames with both frequencies.
    pub fn cents(&self) -> Option<f64> {
        match (self.f_pred, self.f_true) {
            (Some(p), Some(t)) => Some(1200.0 * (p / t).log2()),
            _ => None,
        }
    }

    fn scored(&self) -> bool {
        self.voiced_true && self.f_true.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AlignedFrames {
    pub frames: Vec<AlignedFrame>,
}

impl AlignedFrames {
    pub fn new(frames: Vec<AlignedFrame>) -> Result<Self> {
        for (i, f) in frames.iter().enumerate() {
            for v in [f.f_true, f.f_pred].into_iter().flatten() {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Domain(format!(
                        "frame {i}: frequency {v} must be positive"
                    )));
                }
            }
        }
        Ok(Self { frames })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Number of reference-voiced frames, `N`.
    pub fn voiced_count(&self) -> usize {
        self.frames.iter().filter(|f| f.scored()).count()
    }

    fn voiced(&self) -> impl Iterator<Item = &AlignedFrame> {
        self.frames.iter().filter(|f| f.scored())
    }

    fn require_voiced(&self, metric: &str) -> Result<usize> {
        match self.voiced_count() {
            0 => Err(Error::UndefinedMetric(format!(
                "{metric}: no voiced reference frames"
            ))),
            n => Ok(n),
        }
    }
}

/// Pairs frame `i` with frame `i`, truncating to the shorter contour.
pub fn align(pred: &PitchContour, truth: &PitchContour) -> Result<AlignedFrames> {
    if (pred.hop_seconds() - truth.hop_seconds()).abs() > 1e-9 {
        return Err(Error::Alignment(format!(
            "hop {} s vs reference hop {} s",
            pred.hop_seconds(),
            truth.hop_seconds()
        )));
    }
    let frames = pred
        .frames()
        .iter()
        .zip(truth.frames())
        .map(|(p, t)| AlignedFrame {
            f_true: t.f0_hz,
            f_pred: p.f0_hz,
            voiced_true: t.voiced,
            voiced_pred: p.voiced,
        })
        .collect();
    AlignedFrames::new(frames)
}

/// Fraction of voiced frames within 50 cents (strict); missing predictions
/// count as misses.
pub fn rpa(a: &AlignedFrames) -> Result<f64> {
    let n = a.require_voiced("RPA")?;
    let hits = a
        .voiced()
        .filter(|f| f.cents().is_some_and(|c| c.abs() < 50.0))
        .count();
    Ok(hits as f64 / n as f64)
}

/// Folds a cent difference into `[-600, 600)`.
pub fn fold_octave(cents: f64) -> f64 {
    (cents + 600.0).rem_euclid(1200.0) - 600.0
}

/// RPA with errors folded modulo one octave.
pub fn rca(a: &AlignedFrames) -> Result<f64> {
    let n = a.require_voiced("RCA")?;
    let hits = a
        .voiced()
        .filter(|f| f.cents().is_some_and(|c| fold_octave(c).abs() < 50.0))
        .count();
    Ok(hits as f64 / n as f64)
}

/// `exp(-mean|cents| / 500)` and the number of voiced frames excluded for
/// lacking a prediction.
pub fn cents_accuracy_detail(a: &AlignedFrames) -> Result<(f64, usize)> {
    let n = a.require_voiced("CA")?;
    let errs: Vec<f64> = a.voiced().filter_map(|f| f.cents()).map(f64::abs).collect();
    if errs.is_empty() {
        return Err(Error::UndefinedMetric(
            "CA: no voiced frame has a prediction".into(),
        ));
    }
    let mean = errs.iter().sum::<f64>() / errs.len() as f64;
    Ok(((-mean / 500.0).exp(), n - errs.len()))
}

pub fn cents_accuracy(a: &AlignedFrames) -> Result<f64> {
    cents_accuracy_detail(a).map(|(ca, _)| ca)
}

/// Voicing precision, recall and F1 over the voicing flags. Components with
/// a zero denominator are `UndefinedMetric`.
pub fn voicing_pr(a: &AlignedFrames) -> (Result<f64>, Result<f64>, Result<f64>) {
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for f in &a.frames {
        match (f.voiced_pred, f.voiced_true) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            _ => {}
        }
    }
    let p = if tp + fp == 0 {
        Err(Error::UndefinedMetric(
            "precision: no predicted voiced frames".into(),
        ))
    } else {
        Ok(tp as f64 / (tp + fp) as f64)
    };
    let r = if tp + fn_ == 0 {
        Err(Error::UndefinedMetric(
            "recall: no voiced reference frames".into(),
        ))
    } else {
        Ok(tp as f64 / (tp + fn_) as f64)
    };
    let f1 = match (&p, &r) {
        (Ok(p), Ok(r)) if p + r > 0.0 => Ok(2.0 * p * r / (p + r)),
        (Ok(_), Ok(_)) => Ok(0.0),
        _ => Err(Error::UndefinedMetric(
            "F1: precision or recall undefined".into(),
        )),
    };
    (p, r, f1)
}

pub fn is_octave_error(f: &AlignedFrame) -> bool {
    match (f.f_pred, f.f_true, f.cents()) {
        (Some(p), Some(t), Some(c)) => {
            (p / t - 1.0).abs() > 0.4 || (1100.0..=1300.0).contains(&c.abs())
        }
        _ => false,
    }
}

/// `exp(-10 * octave_errors / N)`; missing predictions are not octave errors.
pub fn octave_accuracy(a: &AlignedFrames) -> Result<f64> {
    let n = a.require_voiced("OA")?;
    let errors = a.voiced().filter(|f| is_octave_error(f)).count();
    Ok((-10.0 * errors as f64 / n as f64).exp())
}

pub fn is_gross_error(f: &AlignedFrame) -> bool {
    f.cents().is_none_or(|c| c.abs() >= 200.0)
}

/// `exp(-5 * gross_errors / N)`; missing predictions are gross errors.
pub fn gross_error_accuracy(a: &AlignedFrames) -> Result<f64> {
    let n = a.require_voiced("GEA")?;
    let errors = a.voiced().filter(|f| is_gross_error(f)).count();
    Ok((-5.0 * errors as f64 / n as f64).exp())
}

/// `k / sum(1 / c_i)`, zero when any component is zero.
pub fn harmonic_mean(components: &[f64]) -> f64 {
    if components.is_empty() || components.iter().any(|&c| c <= 0.0) {
        return 0.0;
    }
    components.len() as f64 / components.iter().map(|c| 1.0 / c).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub rpa: f64,
    pub ca: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub oa: f64,
    pub gea: f64,
    pub rca: f64,
    pub hm: f64,
}

impl EvalReport {
    pub const NAMES: [&'static str; 9] = [
        "rpa",
        "ca",
        "precision",
        "recall",
        "f1",
        "oa",
        "gea",
        "rca",
        "hm",
    ];

    pub fn values(&self) -> [f64; 9] {
        [
            self.rpa,
            self.ca,
            self.precision,
            self.recall,
            self.f1,
            self.oa,
            self.gea,
            self.rca,
            self.hm,
        ]
    }

    fn from_components(
        rpa: f64,
        ca: f64,
        precision: f64,
        recall: f64,
        f1: f64,
        oa: f64,
        gea: f64,
        rca: f64,
    ) -> Self {
        Self {
            rpa,
            ca,
            precision,
            recall,
            f1,
            oa,
            gea,
            rca,
            hm: harmonic_mean(&[rpa, ca, precision, recall, oa, gea]),
        }
    }

    /// Every metric; fails if any is undefined.
    pub fn compute(a: &AlignedFrames) -> Result<Self> {
        let (p, r, f1) = voicing_pr(a);
        Ok(Self::from_components(
            rpa(a)?,
            cents_accuracy(a)?,
            p?,
            r?,
            f1?,
            octave_accuracy(a)?,
            gross_error_accuracy(a)?,
            rca(a)?,
        ))
    }

    /// Like [`EvalReport::compute`] but scores undefined precision or CA
    /// (nothing predicted) as 0. Fails only without voiced reference frames.
    pub fn compute_lenient(a: &AlignedFrames) -> Result<Self> {
        a.require_voiced("report")?;
        let (p, r, _) = voicing_pr(a);
        let (p, r) = (p.unwrap_or(0.0), r?);
        let f1 = if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        };
        Ok(Self::from_components(
            rpa(a)?,
            cents_accuracy(a).unwrap_or(0.0),
            p,
            r,
            f1,
            octave_accuracy(a)?,
            gross_error_accuracy(a)?,
            rca(a)?,
        ))
    }

    /// Arithmetic mean of each metric; HM is recomputed from the averaged
    /// components.
    pub fn mean(reports: &[EvalReport]) -> Result<Self> {
        if reports.is_empty() {
            return Err(Error::UndefinedMetric("no reports to average".into()));
        }
        let n = reports.len() as f64;
        let avg = |f: fn(&EvalReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        Ok(Self::from_components(
            avg(|r| r.rpa),
            avg(|r| r.ca),
            avg(|r| r.precision),
            avg(|r| r.recall),
            avg(|r| r.f1),
            avg(|r| r.oa),
            avg(|r| r.gea),
            avg(|r| r.rca),
        ))
    }

    /// `metric,value` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("metric,value\n");
        for (name, v) in Self::NAMES.iter().zip(self.values()) {
            s.push_str(&format!("{name},{v:.6}\n"));
        }
        s
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10} {:>8}", "metric", "value")?;
        for (name, v) in Self::NAMES.iter().zip(self.values()) {
            writeln!(f, "{:<10} {:>8.4}", name, v)?;
        }
        Ok(())
    }
}

/// Per-file reports averaged across files. Files without voiced reference
/// frames are skipped.
pub fn evaluate<E: Estimator + ?Sized>(
    est: &E,
    files: &[(AudioBuffer, PitchContour)],
) -> Result<EvalReport> {
    let mut reports = Vec::with_capacity(files.len());
    for (i, (audio, truth)) in files.iter().enumerate() {
        let pred = est.estimate(audio)?;
        match EvalReport::compute_lenient(&align(&pred, truth)?) {
            Ok(r) => reports.push(r),
            Err(Error::UndefinedMetric(m)) => log::warn!("file {i}: {m}, skipped"),
            Err(e) => return Err(e),
        }
    }
    EvalReport::mean(&reports)
}

/// Mixes noise into every clean file at `snr_db` and evaluates. The noise
/// for file `i` is drawn from a generator seeded by `seed` and `i`, so each
/// file's mixture does not depend on the others. Silent files are skipped.
pub fn evaluate_noisy<E: Estimator + ?Sized>(
    est: &E,
    files: &[(AudioBuffer, PitchContour)],
    noise: &NoiseBank,
    snr_db: f64,
    seed: u64,
) -> Result<EvalReport> {
    let noisy = noisy_copies(files, noise, snr_db, seed)?;
    evaluate(est, &noisy)
}

/// The mixtures [`evaluate_noisy`] scores, paired with their measured SNR.
pub fn noisy_copies(
    files: &[(AudioBuffer, PitchContour)],
    noise: &NoiseBank,
    snr_db: f64,
    seed: u64,
) -> Result<Vec<(AudioBuffer, PitchContour)>> {
    if files.is_empty() {
        return Err(Error::Argument("no files to evaluate".into()));
    }
    let mut out = Vec::with_capacity(files.len());
    for (i, (audio, truth)) in files.iter().enumerate() {
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let alpha = if noise.is_empty() {
            0.0
        } else {
            rand::Rng::random_range(&mut rng, 0.0..1.0)
        };
        let n = background_noise(audio.len(), noise, alpha, &mut rng);
        match mix_at_snr(audio.samples(), &n, snr_db) {
            Ok(m) => out.push((
                AudioBuffer::new(m.samples, audio.sample_rate_hz())?,
                truth.clone(),
            )),
            Err(Error::SkipExample(why)) => log::warn!("file {i}: {why}, skipped"),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
