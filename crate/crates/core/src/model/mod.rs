//! Compact pitch CNN.
//!
//! The log spectrogram is treated as a one-channel `T x K` image and passed
//! through five 5x5 convolutions (channels 1 -> 8 -> 16 -> 32 -> 64 -> 1),
//! each followed by batch normalization and ReLU. The resulting single
//! `T x K` map is projected per frame onto the pitch bins by a dense
//! `B x K` matrix plus bias, giving raw logits.

mod conv;
mod io;
mod real;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub use conv::KERNEL;
pub use io::{load_params, params_checksum, read_params, save_params, write_params};
pub use real::Real;

use conv::ConvShape;
use real::{gemm, Strided};

/// Feature maps per layer, input included.
pub const CHANNELS: [usize; 6] = [1, 8, 16, 32, 64, 1];
pub const LAYERS: usize = CHANNELS.len() - 1;
pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArchConfig {
    /// Spectral bins per frame (`K`).
    pub band_bins: usize,
    /// Output pitch bins (`B`).
    pub pitch_bins: usize,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            band_bins: 132,
            pitch_bins: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer<T> {
    /// `[out, in, 5, 5]`
    pub weight: Tensor<T>,
    /// `[out]`
    pub bias: Tensor<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm<T> {
    pub gamma: Tensor<T>,
    pub beta: Tensor<T>,
    pub running_mean: Tensor<T>,
    pub running_var: Tensor<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection<T> {
    /// `[B, K]`
    pub weight: Tensor<T>,
    /// `[B]`
    pub bias: Tensor<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub conv: Vec<ConvLayer<T>>,
    pub bn: Vec<BatchNorm<T>>,
    pub proj: Projection<T>,
}

/// Per-tensor parameter counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamBreakdown {
    pub conv_kernels: usize,
    pub conv_biases: usize,
    pub bn_affine: usize,
    pub projection_weight: usize,
    pub projection_bias: usize,
}

impl ParamBreakdown {
    pub fn conv_stack(&self) -> usize {
        self.conv_kernels + self.conv_biases
    }

    pub fn projection(&self) -> usize {
        self.projection_weight + self.projection_bias
    }

    pub fn total(&self) -> usize {
        self.conv_stack() + self.bn_affine + self.projection()
    }
}

impl<T: Real> ModelParams<T> {
    /// Uniform `+-sqrt(6 / fan_in)` kernels, zero biases, identity batch norm.
    pub fn init(arch: ArchConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut uniform = |shape: &[usize], fan_in: usize| {
            let bound = (6.0 / fan_in as f64).sqrt();
            let n: usize = shape.iter().product();
            let data = (0..n)
                .map(|_| T::lit(rng.random_range(-bound..bound)))
                .collect();
            Tensor::from_vec(shape, data).expect("consistent shape")
        };
        let conv = (0..LAYERS)
            .map(|l| {
                let (cin, cout) = (CHANNELS[l], CHANNELS[l + 1]);
                ConvLayer {
                    weight: uniform(&[cout, cin, KERNEL, KERNEL], cin * KERNEL * KERNEL),
                    bias: Tensor::zeros(&[cout]),
                }
            })
            .collect();
        let proj_weight = uniform(&[arch.pitch_bins, arch.band_bins], arch.band_bins);
        let bn = (0..LAYERS)
            .map(|l| {
                let c = CHANNELS[l + 1];
                BatchNorm {
                    gamma: Tensor::filled(&[c], T::one()),
                    beta: Tensor::zeros(&[c]),
                    running_mean: Tensor::zeros(&[c]),
                    running_var: Tensor::filled(&[c], T::one()),
                }
            })
            .collect();
        Self {
            conv,
            bn,
            proj: Projection {
                weight: proj_weight,
                bias: Tensor::zeros(&[arch.pitch_bins]),
            },
        }
    }

    pub fn arch(&self) -> ArchConfig {
        ArchConfig {
            band_bins: self.proj.weight.cols(),
            pitch_bins: self.proj.weight.rows(),
        }
    }

    pub fn breakdown(&self) -> ParamBreakdown {
        ParamBreakdown {
            conv_kernels: self.conv.iter().map(|c| c.weight.len()).sum(),
            conv_biases: self.conv.iter().map(|c| c.bias.len()).sum(),
            bn_affine: self.bn.iter().map(|b| b.gamma.len() + b.beta.len()).sum(),
            projection_weight: self.proj.weight.len(),
            projection_bias: self.proj.bias.len(),
        }
    }

    /// Trainable scalars; running statistics are excluded.
    pub fn count_params(&self) -> usize {
        self.breakdown().total()
    }

    /// Names of the trainable tensors, in the order used by [`Gradients`].
    pub fn trainable_names() -> Vec<String> {
        let mut names = Vec::new();
        for l in 0..LAYERS {
            names.push(format!("conv{l}.weight"));
            names.push(format!("conv{l}.bias"));
            names.push(format!("bn{l}.gamma"));
            names.push(format!("bn{l}.beta"));
        }
        names.push("proj.weight".into());
        names.push("proj.bias".into());
        names
    }

    pub fn trainable(&self) -> Vec<&Tensor<T>> {
        let mut out = Vec::new();
        for (c, b) in self.conv.iter().zip(&self.bn) {
            out.extend([&c.weight, &c.bias, &b.gamma, &b.beta]);
        }
        out.extend([&self.proj.weight, &self.proj.bias]);
        out
    }

    pub fn trainable_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out = Vec::new();
        for (c, b) in self.conv.iter_mut().zip(self.bn.iter_mut()) {
            out.push(&mut c.weight);
            out.push(&mut c.bias);
            out.push(&mut b.gamma);
            out.push(&mut b.beta);
        }
        out.push(&mut self.proj.weight);
        out.push(&mut self.proj.bias);
        out
    }

    /// Every tensor with its persisted name, running statistics included.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor<T>)> {
        let mut out = Vec::new();
        for (l, (c, b)) in self.conv.iter().zip(&self.bn).enumerate() {
            out.push((format!("conv{l}.weight"), &c.weight));
            out.push((format!("conv{l}.bias"), &c.bias));
            out.push((format!("bn{l}.gamma"), &b.gamma));
            out.push((format!("bn{l}.beta"), &b.beta));
            out.push((format!("bn{l}.running_mean"), &b.running_mean));
            out.push((format!("bn{l}.running_var"), &b.running_var));
        }
        out.push(("proj.weight".into(), &self.proj.weight));
        out.push(("proj.bias".into(), &self.proj.bias));
        out
    }

    pub fn cast<U: Real>(&self) -> ModelParams<U> {
        let c = |t: &Tensor<T>| t.map(|v| U::from_f64(v.to_f64().unwrap()).unwrap());
        ModelParams {
            conv: self
                .conv
                .iter()
                .map(|l| ConvLayer {
                    weight: c(&l.weight),
                    bias: c(&l.bias),
                })
                .collect(),
            bn: self
                .bn
                .iter()
                .map(|b| BatchNorm {
                    gamma: c(&b.gamma),
                    beta: c(&b.beta),
                    running_mean: c(&b.running_mean),
                    running_var: c(&b.running_var),
                })
                .collect(),
            proj: Projection {
                weight: c(&self.proj.weight),
                bias: c(&self.proj.bias),
            },
        }
    }

    /// Checks tensor shapes against the channel plan and each other.
    pub fn validate(&self) -> Result<()> {
        if self.conv.len() != LAYERS || self.bn.len() != LAYERS {
            return Err(Error::Shape(format!(
                "expected {LAYERS} conv/bn layers, found {}/{}",
                self.conv.len(),
                self.bn.len()
            )));
        }
        for l in 0..LAYERS {
            let (cin, cout) = (CHANNELS[l], CHANNELS[l + 1]);
            expect_shape(
                &format!("conv{l}.weight"),
                &self.conv[l].weight,
                &[cout, cin, KERNEL, KERNEL],
            )?;
            expect_shape(&format!("conv{l}.bias"), &self.conv[l].bias, &[cout])?;
            let bn = &self.bn[l];
            for (name, t) in [
                ("gamma", &bn.gamma),
                ("beta", &bn.beta),
                ("running_mean", &bn.running_mean),
                ("running_var", &bn.running_var),
            ] {
                expect_shape(&format!("bn{l}.{name}"), t, &[cout])?;
            }
            if bn.running_var.data().iter().any(|v| !(*v > T::zero())) {
                return Err(Error::Domain(format!("bn{l}.running_var must be positive")));
            }
        }
        let w = &self.proj.weight;
        if w.shape().len() != 2 {
            return Err(Error::Shape(format!(
                "proj.weight must be rank 2, got {:?}",
                w.shape()
            )));
        }
        expect_shape("proj.bias", &self.proj.bias, &[w.rows()])?;
        let all_finite = self
            .named_tensors()
            .iter()
            .all(|(_, t)| t.data().iter().all(|v| v.is_finite()));
        if !all_finite {
            return Err(Error::Domain("non-finite parameter".into()));
        }
        Ok(())
    }

    /// Blends the batch statistics of a train-mode forward into the running
    /// estimates (`momentum` weight on the new batch, unbiased variance).
    pub fn update_running_stats(&mut self, cache: &ForwardCache<T>, momentum: f64) -> Result<()> {
        if cache.layers.len() != LAYERS {
            return Err(Error::State(
                "cache is not from a train-mode forward".into(),
            ));
        }
        let m = T::lit(momentum);
        let keep = T::one() - m;
        for (bn, lc) in self.bn.iter_mut().zip(&cache.layers) {
            let n = lc.count as f64;
            let unbias = if n > 1.0 { n / (n - 1.0) } else { 1.0 };
            for c in 0..lc.mean.len() {
                let rm = &mut bn.running_mean.data_mut()[c];
                *rm = keep * *rm + m * lc.mean[c];
                let rv = &mut bn.running_var.data_mut()[c];
                *rv = keep * *rv + m * lc.var[c] * T::lit(unbias);
            }
        }
        Ok(())
    }
}

fn expect_shape<T>(name: &str, t: &Tensor<T>, want: &[usize]) -> Result<()> {
    if t.shape() != want {
        return Err(Error::Shape(format!(
            "{name}: expected {want:?}, found {:?}",
            t.shape()
        )));
    }
    Ok(())
}

pub fn init_params(seed: u64) -> ModelParams<f32> {
    ModelParams::init(ArchConfig::default(), seed)
}

pub fn count_params<T: Real>(p: &ModelParams<T>) -> usize {
    p.count_params()
}

/// Per-frame pitch-bin scores, `T x B`.
#[derive(Debug, Clone, PartialEq)]
pub struct Logits<T>(Tensor<T>);

impl<T: Copy + Default> Logits<T> {
    pub fn zeros(frames: usize, bins: usize) -> Self {
        Self(Tensor::zeros(&[frames, bins]))
    }
}

impl<T> Logits<T> {
    pub fn new(z: Tensor<T>) -> Result<Self> {
        if z.shape().len() != 2 {
            return Err(Error::Shape(format!(
                "logits must be rank 2, got {:?}",
                z.shape()
            )));
        }
        Ok(Self(z))
    }

    pub fn frames(&self) -> usize {
        self.0.rows()
    }

    pub fn bins(&self) -> usize {
        self.0.cols()
    }

    pub fn row(&self, m: usize) -> &[T] {
        self.0.row(m)
    }

    pub fn row_mut(&mut self, m: usize) -> &mut [T] {
        self.0.row_mut(m)
    }

    pub fn tensor(&self) -> &Tensor<T> {
        &self.0
    }

    pub fn tensor_mut(&mut self) -> &mut Tensor<T> {
        &mut self.0
    }

    pub fn into_tensor(self) -> Tensor<T> {
        self.0
    }
}

/// Gradients of every trainable tensor, ordered as
/// [`ModelParams::trainable_names`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub tensors: Vec<Tensor<T>>,
}

impl<T: Real> Gradients<T> {
    pub fn zeros_like(p: &ModelParams<T>) -> Self {
        Self {
            tensors: p
                .trainable()
                .iter()
                .map(|t| Tensor::zeros(t.shape()))
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors
            .iter()
            .all(|t| t.data().iter().all(|v| v.is_finite()))
    }
}

#[derive(Debug, Clone)]
struct LayerCache<T> {
    /// Layer input per batch item, `[cin][T][K]`.
    inputs: Vec<Vec<T>>,
    /// Pre-normalization conv output per item, `[cout][T][K]`.
    pre_norm: Vec<Vec<T>>,
    mean: Vec<T>,
    var: Vec<T>,
    inv_std: Vec<T>,
    count: usize,
}

/// Intermediates retained by a train-mode forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    mode: Mode,
    frames: Vec<usize>,
    band_bins: usize,
    layers: Vec<LayerCache<T>>,
    /// Final single-channel map per item, `T x K`.
    features: Vec<Vec<T>>,
}

impl<T> ForwardCache<T> {
    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Frames contributed by each batch item, in logit row order.
    pub fn frames_per_item(&self) -> &[usize] {
        &self.frames
    }
}

fn check_batch<T: Real>(p: &ModelParams<T>, batch: &[Tensor<T>]) -> Result<usize> {
    let k = p.arch().band_bins;
    for (i, s) in batch.iter().enumerate() {
        if s.shape().len() != 2 || s.cols() != k {
            return Err(Error::Shape(format!(
                "item {i}: expected T x {k} spectrogram, got {:?}",
                s.shape()
            )));
        }
    }
    Ok(k)
}

/// Runs the network on a batch of `T_i x K` spectrograms. Logit rows are the
/// items' frames concatenated in batch order. In [`Mode::Train`] batch
/// normalization uses statistics over every frame and bin of the batch and
/// the returned cache supports [`backward`]; running statistics are not
/// touched (see [`ModelParams::update_running_stats`]).
pub fn forward<T: Real>(
    p: &ModelParams<T>,
    batch: &[Tensor<T>],
    mode: Mode,
) -> Result<(Logits<T>, ForwardCache<T>)> {
    let k = check_batch(p, batch)?;
    let frames: Vec<usize> = batch.iter().map(|s| s.rows()).collect();
    let total: usize = frames.iter().sum();
    if mode == Mode::Train && total == 0 {
        return Err(Error::EmptyBatch);
    }
    let mut col = Vec::new();
    let mut acts: Vec<Vec<T>> = batch.iter().map(|s| s.data().to_vec()).collect();
    let mut layers = Vec::new();
    for l in 0..LAYERS {
        let (cin, cout) = (CHANNELS[l], CHANNELS[l + 1]);
        let mut pre: Vec<Vec<T>> = Vec::with_capacity(batch.len());
        for (x, &t) in acts.iter().zip(&frames) {
            let shape = ConvShape {
                cin,
                cout,
                time: t,
                freq: k,
            };
            let mut out = vec![T::zero(); cout * t * k];
            conv::forward(
                x,
                &shape,
                p.conv[l].weight.data(),
                p.conv[l].bias.data(),
                &mut out,
                &mut col,
            );
            pre.push(out);
        }
        let bn = &p.bn[l];
        let count = total * k;
        let (mean, var) = match mode {
            Mode::Train => batch_stats(&pre, &frames, cout, k),
            Mode::Eval => (
                bn.running_mean.data().to_vec(),
                bn.running_var.data().to_vec(),
            ),
        };
        let inv_std: Vec<T> = var
            .iter()
            .map(|&v| T::one() / (v + T::lit(BN_EPS)).sqrt())
            .collect();
        let next: Vec<Vec<T>> = pre
            .iter()
            .zip(&frames)
            .map(|(z, &t)| {
                let plane = t * k;
                let mut a = z.clone();
                for c in 0..cout {
                    let (g, b, mu, is) =
                        (bn.gamma.data()[c], bn.beta.data()[c], mean[c], inv_std[c]);
                    for v in &mut a[c * plane..(c + 1) * plane] {
                        let y = g * ((*v - mu) * is) + b;
                        *v = if y > T::zero() { y } else { T::zero() };
                    }
                }
                a
            })
            .collect();
        if mode == Mode::Train {
            layers.push(LayerCache {
                inputs: std::mem::replace(&mut acts, next),
                pre_norm: pre,
                mean,
                var,
                inv_std,
                count,
            });
        } else {
            acts = next;
        }
    }
    let logits = project(p, &acts, &frames, k);
    let cache = ForwardCache {
        mode,
        frames,
        band_bins: k,
        layers,
        features: if mode == Mode::Train {
            acts
        } else {
            Vec::new()
        },
    };
    Ok((logits, cache))
}

/// Eval-mode conv stack output (before the projection), `T x K`.
pub fn feature_map<T: Real>(p: &ModelParams<T>, input: &Tensor<T>) -> Result<Tensor<T>> {
    let k = check_batch(p, std::slice::from_ref(input))?;
    let t = input.rows();
    let mut col = Vec::new();
    let mut a = input.data().to_vec();
    for l in 0..LAYERS {
        let (cin, cout) = (CHANNELS[l], CHANNELS[l + 1]);
        let shape = ConvShape {
            cin,
            cout,
            time: t,
            freq: k,
        };
        let mut out = vec![T::zero(); cout * t * k];
        conv::forward(
            &a,
            &shape,
            p.conv[l].weight.data(),
            p.conv[l].bias.data(),
            &mut out,
            &mut col,
        );
        let bn = &p.bn[l];
        let plane = t * k;
        for c in 0..cout {
            let is = T::one() / (bn.running_var.data()[c] + T::lit(BN_EPS)).sqrt();
            let (g, b, mu) = (
                bn.gamma.data()[c],
                bn.beta.data()[c],
                bn.running_mean.data()[c],
            );
            for v in &mut out[c * plane..(c + 1) * plane] {
                let y = g * ((*v - mu) * is) + b;
                *v = if y > T::zero() { y } else { T::zero() };
            }
        }
        a = out;
    }
    Tensor::from_vec(&[t, k], a)
}

/// Mean and biased variance per channel over every item, frame and bin.
fn batch_stats<T: Real>(
    pre: &[Vec<T>],
    frames: &[usize],
    channels: usize,
    k: usize,
) -> (Vec<T>, Vec<T>) {
    let n: usize = frames.iter().sum::<usize>() * k;
    let mut mean = vec![T::zero(); channels];
    let mut var = vec![T::zero(); channels];
    for c in 0..channels {
        let mut sum = 0.0f64;
        for (z, &t) in pre.iter().zip(frames) {
            let plane = t * k;
            sum += z[c * plane..(c + 1) * plane]
                .iter()
                .map(|v| v.to_f64().unwrap())
                .sum::<f64>();
        }
        let mu = sum / n as f64;
        let mut sq = 0.0f64;
        for (z, &t) in pre.iter().zip(frames) {
            let plane = t * k;
            sq += z[c * plane..(c + 1) * plane]
                .iter()
                .map(|v| {
                    let d = v.to_f64().unwrap() - mu;
                    d * d
                })
                .sum::<f64>();
        }
        mean[c] = T::lit(mu);
        var[c] = T::lit(sq / n as f64);
    }
    (mean, var)
}

fn project<T: Real>(p: &ModelParams<T>, feats: &[Vec<T>], frames: &[usize], k: usize) -> Logits<T> {
    let bins = p.arch().pitch_bins;
    let total: usize = frames.iter().sum();
    let mut z = Tensor::zeros(&[total, bins]);
    let mut row = 0;
    for (h, &t) in feats.iter().zip(frames) {
        let out = &mut z.data_mut()[row * bins..(row + t) * bins];
        for r in out.chunks_exact_mut(bins) {
            r.copy_from_slice(p.proj.bias.data());
        }
        gemm(
            t,
            k,
            bins,
            T::one(),
            Strided::row_major(h, k),
            Strided::transposed(p.proj.weight.data(), k),
            T::one(),
            out,
            bins,
        );
        row += t;
    }
    Logits(z)
}

/// Exact gradients of a scalar loss whose logit gradient is `dz`, through the
/// projection, ReLU, batch normalization (batch statistics) and convolutions.
pub fn backward<T: Real>(
    p: &ModelParams<T>,
    cache: &ForwardCache<T>,
    dz: &Logits<T>,
) -> Result<Gradients<T>> {
    if cache.mode != Mode::Train || cache.layers.len() != LAYERS {
        return Err(Error::State(
            "backward needs a train-mode forward cache".into(),
        ));
    }
    let k = cache.band_bins;
    let bins = p.arch().pitch_bins;
    let total: usize = cache.frames.iter().sum();
    if k != p.arch().band_bins || dz.frames() != total || dz.bins() != bins {
        return Err(Error::State(format!(
            "cache/gradient mismatch: cache has {total} frames x {k} bins, dZ is {} x {}, params expect {} bins",
            dz.frames(),
            dz.bins(),
            p.arch().band_bins
        )));
    }
    for (l, lc) in cache.layers.iter().enumerate() {
        if lc.mean.len() != CHANNELS[l + 1] {
            return Err(Error::State(format!(
                "layer {l}: cached channel count differs"
            )));
        }
    }

    let mut grads = Gradients::zeros_like(p);
    let n_tensors = grads.tensors.len();
    let mut da: Vec<Vec<T>> = Vec::with_capacity(cache.frames.len());
    {
        let (head, tail) = grads.tensors.split_at_mut(n_tensors - 1);
        let dwp = head.last_mut().unwrap();
        let dbp = &mut tail[0];
        let mut row = 0;
        for (h, &t) in cache.features.iter().zip(&cache.frames) {
            let dz_rows = &dz.tensor().data()[row * bins..(row + t) * bins];
            // dWp[b][k] += sum_t dz[t][b] h[t][k]
            gemm(
                bins,
                t,
                k,
                T::one(),
                Strided::transposed(dz_rows, bins),
                Strided::row_major(h, k),
                T::one(),
                dwp.data_mut(),
                k,
            );
            for r in dz_rows.chunks_exact(bins) {
                for (g, &v) in dbp.data_mut().iter_mut().zip(r) {
                    *g += v;
                }
            }
            let mut dh = vec![T::zero(); t * k];
            gemm(
                t,
                bins,
                k,
                T::one(),
                Strided::row_major(dz_rows, bins),
                Strided::row_major(p.proj.weight.data(), k),
                T::zero(),
                &mut dh,
                k,
            );
            da.push(dh);
            row += t;
        }
    }

    let mut col = Vec::new();
    for l in (0..LAYERS).rev() {
        let lc = &cache.layers[l];
        let (cin, cout) = (CHANNELS[l], CHANNELS[l + 1]);
        let bn = &p.bn[l];
        // ReLU mask and batch-norm reduction sums
        let mut sum_dy = vec![0.0f64; cout];
        let mut sum_dy_xhat = vec![0.0f64; cout];
        for ((g, z), &t) in da.iter_mut().zip(&lc.pre_norm).zip(&cache.frames) {
            let plane = t * k;
            for c in 0..cout {
                let (gam, bet, mu, is) = (
                    bn.gamma.data()[c],
                    bn.beta.data()[c],
                    lc.mean[c],
                    lc.inv_std[c],
                );
                let (mut s1, mut s2) = (0.0f64, 0.0f64);
                for (gv, &zv) in g[c * plane..(c + 1) * plane]
                    .iter_mut()
                    .zip(&z[c * plane..(c + 1) * plane])
                {
                    let xhat = (zv - mu) * is;
                    if gam * xhat + bet <= T::zero() {
                        *gv = T::zero();
                    }
                    let dyv = gv.to_f64().unwrap();
                    s1 += dyv;
                    s2 += dyv * xhat.to_f64().unwrap();
                }
                sum_dy[c] += s1;
                sum_dy_xhat[c] += s2;
            }
        }
        {
            let gamma_grad = &mut grads.tensors[4 * l + 2];
            for c in 0..cout {
                gamma_grad.data_mut()[c] = T::lit(sum_dy_xhat[c]);
            }
            let beta_grad = &mut grads.tensors[4 * l + 3];
            for c in 0..cout {
                beta_grad.data_mut()[c] = T::lit(sum_dy[c]);
            }
        }
        let n = lc.count as f64;
        for ((g, z), &t) in da.iter_mut().zip(&lc.pre_norm).zip(&cache.frames) {
            let plane = t * k;
            for c in 0..cout {
                let scale = bn.gamma.data()[c] * lc.inv_std[c];
                let mean_dy = T::lit(sum_dy[c] / n);
                let mean_dy_xhat = T::lit(sum_dy_xhat[c] / n);
                let (mu, is) = (lc.mean[c], lc.inv_std[c]);
                for (gv, &zv) in g[c * plane..(c + 1) * plane]
                    .iter_mut()
                    .zip(&z[c * plane..(c + 1) * plane])
                {
                    let xhat = (zv - mu) * is;
                    *gv = scale * (*gv - mean_dy - xhat * mean_dy_xhat);
                }
            }
        }
        let mut next = Vec::with_capacity(da.len());
        let (w_idx, b_idx) = (4 * l, 4 * l + 1);
        for ((x, dy), &t) in lc.inputs.iter().zip(&da).zip(&cache.frames) {
            let shape = ConvShape {
                cin,
                cout,
                time: t,
                freq: k,
            };
            let mut dx = if l > 0 {
                vec![T::zero(); cin * t * k]
            } else {
                Vec::new()
            };
            let (lo, hi) = grads.tensors.split_at_mut(b_idx);
            conv::backward(
                x,
                &shape,
                p.conv[l].weight.data(),
                dy,
                lo[w_idx].data_mut(),
                hi[0].data_mut(),
                if l > 0 { Some(&mut dx) } else { None },
                &mut col,
            );
            next.push(dx);
        }
        da = next;
    }
    Ok(grads)
}
