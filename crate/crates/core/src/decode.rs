//! Logits to pitch: softmax, then a probability-weighted mean of bin centers
//! in a window around the most likely bin.

use crate::audio_io::{ContourFrame, PitchContour};
use crate::error::{Error, Result};
use crate::grid::PitchGrid;
use crate::model::{Logits, Real};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderConfig {
    /// Bins on each side of the argmax included in the estimate.
    pub half_width: usize,
    pub voicing_threshold: f64,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self {
            half_width: 9,
            voicing_threshold: 0.9,
        }
    }
}

impl DecoderConfig {
    pub fn validate(&self, bins: usize) -> Result<()> {
        if self.half_width < 1 || self.half_width >= bins {
            return Err(Error::Argument(format!(
                "window half-width must be in [1, {bins}), got {}",
                self.half_width
            )));
        }
        if !(self.voicing_threshold > 0.0 && self.voicing_threshold < 1.0) {
            return Err(Error::Argument(format!(
                "voicing threshold must be in (0, 1), got {}",
                self.voicing_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameEstimate {
    pub f0_hz: f64,
    pub confidence: f64,
    pub voiced: bool,
}

/// Row-wise softmax in `f64`, stabilized by subtracting each row's maximum.
pub fn softmax_rows<T: Real>(z: &Logits<T>) -> Tensor<f64> {
    let bins = z.bins();
    let mut out = Tensor::zeros(&[z.frames(), bins]);
    for m in 0..z.frames() {
        softmax_into(z.row(m), out.row_mut(m));
    }
    out
}

pub(crate) fn softmax_into<T: Real>(row: &[T], out: &mut [f64]) {
    let max = row
        .iter()
        .map(|v| v.to_f64().unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, v) in out.iter_mut().zip(row) {
        *o = (v.to_f64().unwrap() - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Window `[lo, hi]` (inclusive) around `center`, clipped to the grid.
pub fn window_bounds(center: usize, half_width: usize, bins: usize) -> (usize, usize) {
    (
        center.saturating_sub(half_width),
        (center + half_width).min(bins - 1),
    )
}

pub fn decode_frame(probs: &[f64], grid: &PitchGrid, cfg: &DecoderConfig) -> FrameEstimate {
    debug_assert_eq!(probs.len(), grid.bins());
    let peak = argmax(probs);
    let (lo, hi) = window_bounds(peak, cfg.half_width, probs.len());
    let window = &probs[lo..=hi];
    let mass: f64 = window.iter().sum();
    let f0_hz = if mass > 0.0 {
        window
            .iter()
            .zip(&grid.centers()[lo..=hi])
            .map(|(p, f)| p * f)
            .sum::<f64>()
            / mass
    } else {
        grid.centers()[peak]
    };
    let confidence = mass.clamp(0.0, 1.0);
    FrameEstimate {
        f0_hz,
        confidence,
        voiced: confidence >= cfg.voicing_threshold,
    }
}

/// Decodes every frame independently. Unvoiced frames keep their raw pitch
/// estimate so pitch metrics can be scored separately from voicing.
pub fn decode_contour<T: Real>(
    z: &Logits<T>,
    grid: &PitchGrid,
    cfg: &DecoderConfig,
    hop_seconds: f64,
) -> Result<PitchContour> {
    if z.bins() != grid.bins() {
        return Err(Error::Shape(format!(
            "logits have {} bins, grid has {}",
            z.bins(),
            grid.bins()
        )));
    }
    cfg.validate(grid.bins())?;
    let probs = softmax_rows(z);
    let frames = (0..z.frames())
        .map(|m| {
            let e = decode_frame(probs.row(m), grid, cfg);
            ContourFrame {
                f0_hz: Some(e.f0_hz),
                confidence: e.confidence,
                voiced: e.voiced,
            }
        })
        .collect();
    PitchContour::new(hop_seconds, frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn logits(rows: Vec<Vec<f64>>) -> Logits<f64> {
        let b = rows[0].len();
        let t = rows.len();
        Logits::new(Tensor::from_vec(&[t, b], rows.concat()).unwrap()).unwrap()
    }

    #[test]
    fn softmax_examples() {
        let p = softmax_rows(&logits(vec![vec![0.0; 200]]));
        assert!(p.data().iter().all(|&v| (v - 0.005).abs() < 1e-15));
        let mut row = vec![0.0; 200];
        row[17] = 50.0;
        let p = softmax_rows(&logits(vec![row.clone()]));
        assert!(p.row(0)[17] >= 1.0 - 1e-15);
        let shifted: Vec<f64> = row.iter().map(|v| v + 123.0).collect();
        let q = softmax_rows(&logits(vec![shifted]));
        for (a, b) in p.data().iter().zip(q.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_handles_huge_logits() {
        let mut row = vec![-1e4; 200];
        row[3] = 1e4;
        let p = softmax_rows(&logits(vec![row]));
        assert!(p.data().iter().all(|v| v.is_finite()));
        assert_eq!(p.row(0)[3], 1.0);
    }

    #[test]
    fn delta_distribution_decodes_to_center() {
        let grid = PitchGrid::default();
        let cfg = DecoderConfig::default();
        for b in [0, 5, 100, 199] {
            let mut p = vec![0.0; 200];
            p[b] = 1.0;
            let e = decode_frame(&p, &grid, &cfg);
            assert_eq!(e.f0_hz, grid.centers()[b]);
            assert_eq!(e.confidence, 1.0);
            assert!(e.voiced);
        }
    }

    #[test]
    fn uniform_row_confidence() {
        // every bin ties, so the argmax is bin 0 and the window is clipped
        let e = decode_frame(
            &[0.005; 200],
            &PitchGrid::default(),
            &DecoderConfig::default(),
        );
        assert!((e.confidence - 10.0 / 200.0).abs() < 1e-12);
        assert!(!e.voiced);
        // a full 19-bin window of uniform mass around an interior peak
        let mut p = vec![0.005; 200];
        p[100] += 1e-12;
        let e = decode_frame(&p, &PitchGrid::default(), &DecoderConfig::default());
        assert!((e.confidence - 19.0 / 200.0).abs() < 1e-9);
    }

    #[test]
    fn two_bin_weighted_mean() {
        let grid = PitchGrid::default();
        let mut p = vec![0.0; 200];
        p[100] = 0.9;
        p[101] = 0.1;
        let e = decode_frame(&p, &grid, &DecoderConfig::default());
        let want = 0.9 * grid.centers()[100] + 0.1 * grid.centers()[101];
        assert!((e.f0_hz - want).abs() < 1e-9);
    }

    #[test]
    fn ties_go_to_lowest_bin() {
        let mut p = vec![0.0; 200];
        p[40] = 0.5;
        p[160] = 0.5;
        assert_eq!(argmax(&p), 40);
        let e = decode_frame(&p, &PitchGrid::default(), &DecoderConfig::default());
        assert_eq!(e.confidence, 0.5);
    }

    #[test]
    fn edge_window_is_clipped() {
        assert_eq!(window_bounds(2, 9, 200), (0, 11));
        assert_eq!(window_bounds(195, 9, 200), (186, 199));
        let grid = PitchGrid::default();
        let mut p = vec![0.0; 200];
        p[0] = 0.6;
        p[1] = 0.4;
        let e = decode_frame(&p, &grid, &DecoderConfig::default());
        let want = 0.6 * grid.centers()[0] + 0.4 * grid.centers()[1];
        assert!((e.f0_hz - want).abs() < 1e-9);
    }

    #[test]
    fn contour_examples() {
        let grid = PitchGrid::default();
        let cfg = DecoderConfig::default();
        let empty = Logits::<f64>::zeros(0, 200);
        assert!(decode_contour(&empty, &grid, &cfg, 0.016)
            .unwrap()
            .is_empty());
        let mut row = vec![0.0; 200];
        row[80] = 12.0;
        row[81] = 11.0;
        let c = decode_contour(&logits(vec![row; 5]), &grid, &cfg, 0.016).unwrap();
        assert_eq!(c.len(), 5);
        assert!(c.frames().windows(2).all(|w| w[0] == w[1]));
        assert!(matches!(
            decode_contour(&Logits::<f64>::zeros(2, 100), &grid, &cfg, 0.016),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn config_validation() {
        let bad = DecoderConfig {
            half_width: 0,
            ..Default::default()
        };
        assert!(bad.validate(200).is_err());
        let bad = DecoderConfig {
            voicing_threshold: 1.0,
            ..Default::default()
        };
        assert!(bad.validate(200).is_err());
    }

    fn prob_row() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-8.0f64..8.0, 200).prop_map(|z| {
            let mut out = vec![0.0; 200];
            softmax_into(&z, &mut out);
            out
        })
    }

    proptest! {
        #[test]
        fn estimate_within_window_span(p in prob_row()) {
            let grid = PitchGrid::default();
            let e = decode_frame(&p, &grid, &DecoderConfig::default());
            let b = argmax(&p);
            let (lo, hi) = window_bounds(b, 9, 200);
            prop_assert!(e.f0_hz >= grid.centers()[lo] * (1.0 - 1e-12));
            prop_assert!(e.f0_hz <= grid.centers()[hi] * (1.0 + 1e-12));
            prop_assert!((0.0..=1.0).contains(&e.confidence));
        }

        #[test]
        fn softmax_rows_sum_to_one(z in prop::collection::vec(-50.0f64..50.0, 200)) {
            let p = softmax_rows(&logits(vec![z]));
            let s: f64 = p.data().iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-9);
            prop_assert!(p.data().iter().all(|&v| v >= 0.0));
        }

        #[test]
        fn frame_permutation_commutes(rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 200), 2..6)) {
            let grid = PitchGrid::default();
            let cfg = DecoderConfig::default();
            let fwd = decode_contour(&logits(rows.clone()), &grid, &cfg, 0.016).unwrap();
            let mut rev_rows = rows;
            rev_rows.reverse();
            let rev = decode_contour(&logits(rev_rows), &grid, &cfg, 0.016).unwrap();
            let mut back: Vec<_> = rev.frames().to_vec();
            back.reverse();
            prop_assert_eq!(fwd.frames(), &back[..]);
        }

        #[test]
        fn moving_mass_into_window_never_lowers_confidence(p in prob_row(), share in 0.0f64..1.0) {
            let cfg = DecoderConfig::default();
            let grid = PitchGrid::default();
            let before = decode_frame(&p, &grid, &cfg);
            let b = argmax(&p);
            let (lo, hi) = window_bounds(b, 9, 200);
            let mut q = p.clone();
            let mut moved = 0.0;
            for (i, v) in q.iter_mut().enumerate() {
                if i < lo || i > hi {
                    moved += *v * share;
                    *v *= 1.0 - share;
                }
            }
            q[b] += moved;
            let after = decode_frame(&q, &grid, &cfg);
            prop_assert!(after.confidence >= before.confidence - 1e-12);
        }
    }
}
