//! Cross-entropy over pitch bins plus an L1 penalty on the expected
//! log-frequency, both averaged over voiced frames only.

use crate::decode::softmax_into;
use crate::error::{Error, Result};
use crate::grid::PitchGrid;
use crate::model::{Logits, Real};
use crate::tensor::Tensor;

/// Scalar loss and its gradient with respect to the logits.
#[derive(Debug, Clone)]
pub struct LossOutput<T> {
    pub value: f64,
    pub dz: Logits<T>,
}

/// Per-frame supervision. `None` marks frames excluded from the loss.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTargets {
    pub f0_hz: Vec<Option<f64>>,
    pub bins: Vec<Option<usize>>,
}

impl FrameTargets {
    /// Target bins are the nearest grid bins to each voiced frequency.
    pub fn from_f0(f0_hz: Vec<Option<f64>>, grid: &PitchGrid) -> Result<Self> {
        let bins = f0_hz
            .iter()
            .map(|f| f.map(|f| grid.freq_to_bin(f)).transpose())
            .collect::<Result<_>>()?;
        Ok(Self { f0_hz, bins })
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn voiced_count(&self) -> usize {
        self.bins.iter().filter(|b| b.is_some()).count()
    }

    pub fn extend(&mut self, other: &FrameTargets) {
        self.f0_hz.extend_from_slice(&other.f0_hz);
        self.bins.extend_from_slice(&other.bins);
    }
}

fn check_rows<T>(z: &Logits<T>, n: usize) -> Result<()> {
    if z.frames() != n {
        return Err(Error::Shape(format!(
            "{} logit rows but {n} targets",
            z.frames()
        )));
    }
    Ok(())
}

fn to_logits<T: Real>(rows: usize, bins: usize, data: Vec<f64>) -> Logits<T> {
    let data = data.into_iter().map(T::lit).collect();
    Logits::new(Tensor::from_vec(&[rows, bins], data).expect("sized buffer")).expect("rank 2")
}

pub fn loss_ce<T: Real>(z: &Logits<T>, targets: &[Option<usize>]) -> Result<LossOutput<T>> {
    check_rows(z, targets.len())?;
    let bins = z.bins();
    let voiced = targets.iter().filter(|t| t.is_some()).count();
    if voiced == 0 {
        return Err(Error::EmptyBatch);
    }
    let inv_n = 1.0 / voiced as f64;
    let mut dz = vec![0.0; z.frames() * bins];
    let mut p = vec![0.0; bins];
    let mut total = 0.0;
    for (m, t) in targets.iter().enumerate() {
        let Some(y) = *t else { continue };
        if y >= bins {
            return Err(Error::Index {
                index: y,
                len: bins,
            });
        }
        softmax_into(z.row(m), &mut p);
        // log-softmax directly, so a vanishing probability does not give -inf
        let row = z.row(m);
        let max = row
            .iter()
            .map(|v| v.to_f64().unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        let lse = max
            + row
                .iter()
                .map(|v| (v.to_f64().unwrap() - max).exp())
                .sum::<f64>()
                .ln();
        total += lse - row[y].to_f64().unwrap();
        let g = &mut dz[m * bins..(m + 1) * bins];
        for (gb, &pb) in g.iter_mut().zip(&p) {
            *gb = pb * inv_n;
        }
        g[y] -= inv_n;
    }
    Ok(LossOutput {
        value: total * inv_n,
        dz: to_logits(z.frames(), bins, dz),
    })
}

pub fn loss_cents<T: Real>(
    z: &Logits<T>,
    f_true: &[Option<f64>],
    grid: &PitchGrid,
) -> Result<LossOutput<T>> {
    check_rows(z, f_true.len())?;
    let bins = z.bins();
    if bins != grid.bins() {
        return Err(Error::Shape(format!(
            "logits have {bins} bins, grid has {}",
            grid.bins()
        )));
    }
    let voiced = f_true.iter().filter(|f| f.is_some()).count();
    if voiced == 0 {
        return Err(Error::EmptyBatch);
    }
    let inv_n = 1.0 / voiced as f64;
    let log_f = grid.log_centers();
    let mut dz = vec![0.0; z.frames() * bins];
    let mut p = vec![0.0; bins];
    let mut total = 0.0;
    for (m, f) in f_true.iter().enumerate() {
        let Some(f) = *f else { continue };
        if !(f > 0.0 && f.is_finite()) {
            return Err(Error::Domain(format!(
                "frame {m}: target frequency {f} must be positive"
            )));
        }
        softmax_into(z.row(m), &mut p);
        let expected: f64 = p.iter().zip(log_f).map(|(a, b)| a * b).sum();
        let r = expected - f.ln();
        total += r.abs();
        let sign = if r > 0.0 {
            1.0
        } else if r < 0.0 {
            -1.0
        } else {
            0.0
        };
        let scale = sign * inv_n;
        for ((g, &pb), &lb) in dz[m * bins..(m + 1) * bins].iter_mut().zip(&p).zip(log_f) {
            *g = scale * pb * (lb - expected);
        }
    }
    Ok(LossOutput {
        value: total * inv_n,
        dz: to_logits(z.frames(), bins, dz),
    })
}

/// `ce + lambda * cents`, with both components reported.
#[derive(Debug, Clone)]
pub struct TotalLoss<T> {
    pub value: f64,
    pub ce: f64,
    pub cents: f64,
    pub dz: Logits<T>,
}

pub fn loss_total<T: Real>(
    z: &Logits<T>,
    targets: &FrameTargets,
    grid: &PitchGrid,
    lambda: f64,
) -> Result<TotalLoss<T>> {
    let ce = loss_ce(z, &targets.bins)?;
    let cents = loss_cents(z, &targets.f0_hz, grid)?;
    let mut dz = ce.dz;
    let l = T::lit(lambda);
    for (a, &b) in dz
        .tensor_mut()
        .data_mut()
        .iter_mut()
        .zip(cents.dz.tensor().data())
    {
        *a += l * b;
    }
    Ok(TotalLoss {
        value: ce.value + lambda * cents.value,
        ce: ce.value,
        cents: cents.value,
        dz,
    })
}
