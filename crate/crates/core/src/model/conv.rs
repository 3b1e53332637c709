//! 5x5 stride-1 "same" convolution over a `[channels][time][freq]` map,
//! lowered to GEMM through im2col. The time axis is processed in chunks so
//! the column buffer stays small for long inputs; chunk order is fixed, so
//! results do not depend on input length.

use super::real::{gemm, Real, Strided};

pub const KERNEL: usize = 5;
const PAD: usize = KERNEL / 2;
const TAPS: usize = KERNEL * KERNEL;
/// Upper bound on column-buffer elements per chunk.
const COL_BUDGET: usize = 1 << 20;

#[derive(Debug, Clone, Copy)]
pub(crate) struct ConvShape {
    pub cin: usize,
    pub cout: usize,
    pub time: usize,
    pub freq: usize,
}

impl ConvShape {
    fn rows_per_chunk(&self) -> usize {
        (COL_BUDGET / (self.cin * TAPS * self.freq)).clamp(1, self.time.max(1))
    }

    fn plane(&self) -> usize {
        self.time * self.freq
    }
}

/// Fills `col[(ci*25 + kt*5 + kf)][(t - t0)*F + f] = x[ci][t + kt - 2][f + kf - 2]`.
fn im2col<T: Real>(x: &[T], s: &ConvShape, t0: usize, t1: usize, col: &mut [T]) {
    let f_len = s.freq;
    let width = (t1 - t0) * f_len;
    for ci in 0..s.cin {
        let plane = &x[ci * s.plane()..(ci + 1) * s.plane()];
        for kt in 0..KERNEL {
            for kf in 0..KERNEL {
                let r = ci * TAPS + kt * KERNEL + kf;
                let dst_row = &mut col[r * width..(r + 1) * width];
                // valid output f range where f + kf - PAD in [0, F)
                let lo = PAD.saturating_sub(kf);
                let hi = (f_len + PAD).saturating_sub(kf).min(f_len);
                for t in t0..t1 {
                    let dst = &mut dst_row[(t - t0) * f_len..(t - t0 + 1) * f_len];
                    let ts = t as isize + kt as isize - PAD as isize;
                    if ts < 0 || ts >= s.time as isize || lo >= hi {
                        dst.fill(T::zero());
                        continue;
                    }
                    let src = &plane[ts as usize * f_len..(ts as usize + 1) * f_len];
                    dst[..lo].fill(T::zero());
                    dst[hi..].fill(T::zero());
                    dst[lo..hi].copy_from_slice(&src[lo + kf - PAD..hi + kf - PAD]);
                }
            }
        }
    }
}

/// Scatter-adds a column buffer back onto `dx`; adjoint of [`im2col`].
fn col2im_add<T: Real>(col: &[T], s: &ConvShape, t0: usize, t1: usize, dx: &mut [T]) {
    let f_len = s.freq;
    let width = (t1 - t0) * f_len;
    let plane_len = s.plane();
    for ci in 0..s.cin {
        let plane = &mut dx[ci * plane_len..(ci + 1) * plane_len];
        for kt in 0..KERNEL {
            for kf in 0..KERNEL {
                let r = ci * TAPS + kt * KERNEL + kf;
                let src_row = &col[r * width..(r + 1) * width];
                let lo = PAD.saturating_sub(kf);
                let hi = (f_len + PAD).saturating_sub(kf).min(f_len);
                if lo >= hi {
                    continue;
                }
                for t in t0..t1 {
                    let ts = t as isize + kt as isize - PAD as isize;
                    if ts < 0 || ts >= s.time as isize {
                        continue;
                    }
                    let src = &src_row[(t - t0) * f_len..(t - t0 + 1) * f_len];
                    let dst = &mut plane[ts as usize * f_len..(ts as usize + 1) * f_len];
                    for (d, &v) in dst[lo + kf - PAD..hi + kf - PAD]
                        .iter_mut()
                        .zip(&src[lo..hi])
                    {
                        *d += v;
                    }
                }
            }
        }
    }
}

/// `out[co] = bias[co] + sum_ci w[co][ci] * x[ci]`.
pub(crate) fn forward<T: Real>(
    x: &[T],
    s: &ConvShape,
    weight: &[T],
    bias: &[T],
    out: &mut [T],
    col: &mut Vec<T>,
) {
    let k = s.cin * TAPS;
    let plane = s.plane();
    debug_assert_eq!(x.len(), s.cin * plane);
    debug_assert_eq!(out.len(), s.cout * plane);
    let rows = s.rows_per_chunk();
    let mut t0 = 0;
    while t0 < s.time {
        let t1 = (t0 + rows).min(s.time);
        let width = (t1 - t0) * s.freq;
        col.resize(k * width, T::zero());
        im2col(x, s, t0, t1, &mut col[..k * width]);
        gemm(
            s.cout,
            k,
            width,
            T::one(),
            Strided::row_major(weight, k),
            Strided::row_major(&col[..k * width], width),
            T::zero(),
            &mut out[t0 * s.freq..],
            plane,
        );
        t0 = t1;
    }
    for (co, &b) in bias.iter().enumerate() {
        for v in &mut out[co * plane..(co + 1) * plane] {
            *v += b;
        }
    }
}

/// Accumulates weight and bias gradients into `dw`/`db`; writes the input
/// gradient into `dx` (overwriting) when requested.
#[allow(clippy::too_many_arguments)]
pub(crate) fn backward<T: Real>(
    x: &[T],
    s: &ConvShape,
    weight: &[T],
    dy: &[T],
    dw: &mut [T],
    db: &mut [T],
    mut dx: Option<&mut [T]>,
    col: &mut Vec<T>,
) {
    let k = s.cin * TAPS;
    let plane = s.plane();
    for (co, g) in db.iter_mut().enumerate() {
        *g += dy[co * plane..(co + 1) * plane].iter().copied().sum::<T>();
    }
    if let Some(dx) = dx.as_deref_mut() {
        dx.fill(T::zero());
    }
    let rows = s.rows_per_chunk();
    let mut t0 = 0;
    while t0 < s.time {
        let t1 = (t0 + rows).min(s.time);
        let width = (t1 - t0) * s.freq;
        col.resize(k * width, T::zero());
        im2col(x, s, t0, t1, &mut col[..k * width]);
        let dy_chunk = &dy[t0 * s.freq..];
        // dw[co][r] += sum_p dy[co][p] * col[r][p]
        gemm(
            s.cout,
            width,
            k,
            T::one(),
            Strided::with_strides(dy_chunk, plane, 1),
            Strided::transposed(&col[..k * width], width),
            T::one(),
            dw,
            k,
        );
        if let Some(dx) = dx.as_deref_mut() {
            // dcol[r][p] = sum_co w[co][r] * dy[co][p]
            gemm(
                k,
                s.cout,
                width,
                T::one(),
                Strided::transposed(weight, k),
                Strided::with_strides(dy_chunk, plane, 1),
                T::zero(),
                &mut col[..k * width],
                width,
            );
            col2im_add(&col[..k * width], s, t0, t1, dx);
        }
        t0 = t1;
    }
}
