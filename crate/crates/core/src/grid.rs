//! Log-spaced pitch bins and cents arithmetic.

use crate::error::{Error, Result};

pub const F_MIN_HZ: f64 = 46.875;
pub const F_MAX_HZ: f64 = 2093.75;
pub const DEFAULT_BINS: usize = 200;

/// `bins` centers spaced evenly in log2 frequency between `f_min` and `f_max`
/// (both inclusive).
#[derive(Debug, Clone, PartialEq)]
pub struct PitchGrid {
    f_min: f64,
    f_max: f64,
    log2_step: f64,
    centers: Vec<f64>,
    log_centers: Vec<f64>,
}

impl Default for PitchGrid {
    fn default() -> Self {
        Self::new(DEFAULT_BINS, F_MIN_HZ, F_MAX_HZ).expect("default grid is valid")
    }
}

impl PitchGrid {
    pub fn new(bins: usize, f_min: f64, f_max: f64) -> Result<Self> {
        if bins < 2 {
            return Err(Error::Argument(format!("need at least 2 bins, got {bins}")));
        }
        if !(f_min > 0.0 && f_max > f_min && f_max.is_finite()) {
            return Err(Error::Argument(format!(
                "need 0 < f_min < f_max, got {f_min}..{f_max}"
            )));
        }
        let log2_step = (f_max / f_min).log2() / (bins - 1) as f64;
        let mut centers: Vec<f64> = (0..bins)
            .map(|b| f_min * (b as f64 * log2_step).exp2())
            .collect();
        // pin the endpoints so they are exact, not just close
        centers[0] = f_min;
        centers[bins - 1] = f_max;
        let log_centers = centers.iter().map(|f| f.ln()).collect();
        Ok(Self {
            f_min,
            f_max,
            log2_step,
            centers,
            log_centers,
        })
    }

    pub fn bins(&self) -> usize {
        self.centers.len()
    }

    pub fn f_min(&self) -> f64 {
        self.f_min
    }

    pub fn f_max(&self) -> f64 {
        self.f_max
    }

    /// Spacing between neighbouring bins in octaves.
    pub fn log2_step(&self) -> f64 {
        self.log2_step
    }

    pub fn cents_per_bin(&self) -> f64 {
        1200.0 * self.log2_step
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// Natural log of every bin center.
    pub fn log_centers(&self) -> &[f64] {
        &self.log_centers
    }

    pub fn bin_center(&self, b: usize) -> Result<f64> {
        self.centers.get(b).copied().ok_or(Error::Index {
            index: b,
            len: self.centers.len(),
        })
    }

    /// Nearest bin in log2 space, clamped to the grid. Ties round away from
    /// zero.
    pub fn freq_to_bin(&self, f_hz: f64) -> Result<usize> {
        if !(f_hz > 0.0 && f_hz.is_finite()) {
            return Err(Error::Domain(format!(
                "frequency must be positive, got {f_hz}"
            )));
        }
        let pos = (f_hz / self.f_min).log2() / self.log2_step;
        let b = pos.round();
        Ok(b.clamp(0.0, (self.bins() - 1) as f64) as usize)
    }
}

/// Signed distance in cents from `f_true` to `f_pred`.
pub fn cents_error(f_pred: f64, f_true: f64) -> Result<f64> {
    if !(f_pred > 0.0 && f_true > 0.0) {
        return Err(Error::Domain(format!(
            "cents need positive frequencies, got {f_pred} and {f_true}"
        )));
    }
    Ok(1200.0 * (f_pred / f_true).log2())
}

pub fn cents_to_ratio(cents: f64) -> f64 {
    (cents / 1200.0).exp2()
}
