//! Radix-2 FFT for real input.
//!
//! An `n`-point real transform is computed as an `n/2`-point complex
//! transform over the even/odd interleaved samples, followed by the usual
//! split step that separates the two half-length spectra.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Iterative decimation-in-time complex FFT of a fixed power-of-two size.
#[derive(Debug, Clone)]
pub struct ComplexFft {
    n: usize,
    bitrev: Vec<usize>,
    twiddles: Vec<Complex64>,
}

impl ComplexFft {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::Argument(format!(
                "FFT size {n} is not a power of two"
            )));
        }
        let bits = n.trailing_zeros();
        let bitrev = (0..n)
            .map(|i| {
                if bits == 0 {
                    0
                } else {
                    i.reverse_bits() >> (usize::BITS - bits)
                }
            })
            .collect();
        let twiddles = (0..n / 2)
            .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / n as f64))
            .collect();
        Ok(Self {
            n,
            bitrev,
            twiddles,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In-place forward transform (`e^{-j...}` convention, no scaling).
    pub fn process(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.n, "buffer length must match FFT size");
        for i in 0..self.n {
            let j = self.bitrev[i];
            if i < j {
                data.swap(i, j);
            }
        }
        let mut half = 1;
        while half < self.n {
            let stride = self.n / (2 * half);
            for start in (0..self.n).step_by(2 * half) {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let a = data[start + k];
                    let b = data[start + k + half] * w;
                    data[start + k] = a + b;
                    data[start + k + half] = a - b;
                }
            }
            half *= 2;
        }
    }
}

/// Forward FFT of a real sequence, producing the `n/2 + 1` non-negative
/// frequency bins.
#[derive(Debug, Clone)]
pub struct RealFft {
    n: usize,
    inner: ComplexFft,
    split: Vec<Complex64>,
}

impl RealFft {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::Argument(format!(
                "real FFT size {n} must be a power of two >= 2"
            )));
        }
        let inner = ComplexFft::new(n / 2)?;
        let split = (0..=n / 2)
            .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / n as f64))
            .collect();
        Ok(Self { n, inner, split })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn output_len(&self) -> usize {
        self.n / 2 + 1
    }

    pub fn make_scratch(&self) -> Vec<Complex64> {
        vec![Complex64::new(0.0, 0.0); self.n / 2]
    }

    /// `input.len() == n`, `output.len() == n/2 + 1`, `scratch.len() == n/2`.
    pub fn process(&self, input: &[f64], scratch: &mut [Complex64], output: &mut [Complex64]) {
        let m = self.n / 2;
        assert_eq!(input.len(), self.n);
        assert_eq!(scratch.len(), m);
        assert_eq!(output.len(), m + 1);
        for (z, pair) in scratch.iter_mut().zip(input.chunks_exact(2)) {
            *z = Complex64::new(pair[0], pair[1]);
        }
        self.inner.process(scratch);
        for k in 0..=m {
            let zk = scratch[k % m];
            let zc = scratch[(m - k) % m].conj();
            let even = (zk + zc) * 0.5;
            let odd = (zk - zc) * Complex64::new(0.0, -0.5);
            output[k] = even + self.split[k] * odd;
        }
    }
}
