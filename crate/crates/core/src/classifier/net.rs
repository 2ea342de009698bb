use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::config::CompactCnnConfig;
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Batch-norm behaviour: batch statistics while training, running statistics
/// in eval mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForwardMode {
    Train,
    Eval,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Param {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
    pub trainable: bool,
}

/// Gradients of the trainable parameters, in parameter order.
#[derive(Debug, Clone, PartialEq)]
pub struct GradStore {
    pub entries: Vec<(String, Vec<f64>)>,
}

impl GradStore {
    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, g)| g.as_slice())
    }
}

/// The network: parameters held in f64 plus the architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct Cnn {
    pub(crate) config: CompactCnnConfig,
    pub(crate) params: Vec<Param>,
}

// Parameter slots per block: conv weight, bn gamma, bn beta, running mean, running var.
const PER_BLOCK: usize = 5;

fn gemm(m: usize, k: usize, n: usize, a: &[f64], a_t: bool, b: &[f64], b_t: bool, c: &mut [f64], beta: f64) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    let (rsa, csa) = if a_t { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_t { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: slice lengths are checked above and the strides address exactly
    // those row-major (or transposed) layouts.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

#[derive(Debug, Clone, Copy)]
struct ConvGeom {
    cin: usize,
    h: usize,
    w: usize,
    sh: usize,
    sw: usize,
    ho: usize,
    wo: usize,
}

impl ConvGeom {
    fn p(&self) -> usize {
        self.ho * self.wo
    }
}

// 3×3, padding 1. col is [cin·9 × ho·wo].
fn im2col(x: &[f64], g: &ConvGeom, col: &mut [f64]) {
    let p = g.p();
    for c in 0..g.cin {
        let plane = &x[c * g.h * g.w..(c + 1) * g.h * g.w];
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &mut col[(c * 9 + ky * 3 + kx) * p..(c * 9 + ky * 3 + kx + 1) * p];
                for oy in 0..g.ho {
                    let iy = (oy * g.sh + ky) as isize - 1;
                    let dst = &mut row[oy * g.wo..(oy + 1) * g.wo];
                    if iy < 0 || iy >= g.h as isize {
                        dst.fill(0.0);
                        continue;
                    }
                    let src = &plane[iy as usize * g.w..(iy as usize + 1) * g.w];
                    for (ox, d) in dst.iter_mut().enumerate() {
                        let ix = (ox * g.sw + kx) as isize - 1;
                        *d = if ix < 0 || ix >= g.w as isize { 0.0 } else { src[ix as usize] };
                    }
                }
            }
        }
    }
}

fn col2im(col: &[f64], g: &ConvGeom, dx: &mut [f64]) {
    let p = g.p();
    for c in 0..g.cin {
        let plane = &mut dx[c * g.h * g.w..(c + 1) * g.h * g.w];
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &col[(c * 9 + ky * 3 + kx) * p..(c * 9 + ky * 3 + kx + 1) * p];
                for oy in 0..g.ho {
                    let iy = (oy * g.sh + ky) as isize - 1;
                    if iy < 0 || iy >= g.h as isize {
                        continue;
                    }
                    let base = iy as usize * g.w;
                    for ox in 0..g.wo {
                        let ix = (ox * g.sw + kx) as isize - 1;
                        if ix >= 0 && ix < g.w as isize {
                            plane[base + ix as usize] += row[oy * g.wo + ox];
                        }
                    }
                }
            }
        }
    }
}

// 2×2 max-pool, floor. Returns pooled values and the winning index into the
// conv plane for each output.
fn maxpool(x: &[f64], h: usize, w: usize, out: &mut [f64], arg: &mut [u32]) {
    let (ph, pw) = (h / 2, w / 2);
    for oy in 0..ph {
        for ox in 0..pw {
            let i0 = 2 * oy * w + 2 * ox;
            let mut best = i0;
            for cand in [i0 + 1, i0 + w, i0 + w + 1] {
                if x[cand] > x[best] {
                    best = cand;
                }
            }
            out[oy * pw + ox] = x[best];
            arg[oy * pw + ox] = best as u32;
        }
    }
}

struct BlockCache {
    geom: ConvGeom,
    input: Vec<f64>,
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
    arg: Vec<u32>,
    batch_mean: Vec<f64>,
    batch_var: Vec<f64>,
}

pub(crate) struct TrainCache {
    n: usize,
    blocks: Vec<BlockCache>,
    feat: Vec<f64>,
    last_p: usize,
}

impl Cnn {
    /// Fresh network with He-normal conv and linear weights, unit batch-norm
    /// scale and zero shifts.
    pub fn new(config: CompactCnnConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::new();
        let mut c_in = config.in_channels;
        for (i, b) in config.blocks.iter().enumerate() {
            let fan_in = c_in * 9;
            let he = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
            let c = b.out_channels;
            params.push(Param {
                name: format!("block{i}.conv.weight"),
                shape: vec![c, c_in, 3, 3],
                data: (0..c * fan_in).map(|_| he.sample(&mut rng)).collect(),
                trainable: true,
            });
            for (suffix, v, t) in [
                ("bn.weight", 1.0, true),
                ("bn.bias", 0.0, true),
                ("bn.running_mean", 0.0, false),
                ("bn.running_var", 1.0, false),
            ] {
                params.push(Param {
                    name: format!("block{i}.{suffix}"),
                    shape: vec![c],
                    data: vec![v; c],
                    trainable: t,
                });
            }
            c_in = c;
        }
        let k = config.num_classes;
        let he = Normal::new(0.0, (2.0 / c_in as f64).sqrt()).expect("positive std");
        params.push(Param {
            name: "head.weight".into(),
            shape: vec![k, c_in],
            data: (0..k * c_in).map(|_| he.sample(&mut rng)).collect(),
            trainable: true,
        });
        params.push(Param {
            name: "head.bias".into(),
            shape: vec![k],
            data: vec![0.0; k],
            trainable: true,
        });
        Ok(Self { config, params })
    }

    pub fn config(&self) -> &CompactCnnConfig {
        &self.config
    }

    pub fn num_classes(&self) -> usize {
        self.config.num_classes
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().filter(|p| p.trainable).map(|p| p.data.len()).sum()
    }

    /// Names of all parameters and buffers, in storage order.
    pub fn param_names(&self) -> Vec<&str> {
        self.params.iter().map(|p| p.name.as_str()).collect()
    }

    pub fn param(&self, name: &str) -> Option<&[f64]> {
        self.params.iter().find(|p| p.name == name).map(|p| p.data.as_slice())
    }

    pub fn param_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        self.params
            .iter_mut()
            .find(|p| p.name == name)
            .map(|p| p.data.as_mut_slice())
    }

    fn head_index(&self) -> usize {
        self.config.blocks.len() * PER_BLOCK
    }

    fn check_batch(&self, input: &Tensor) -> Result<(usize, usize, usize)> {
        let s = input.shape();
        if s.len() != 4 || s[1] != self.config.in_channels || s[0] == 0 {
            return Err(Error::param(format!(
                "expected [N, {}, H, W] input, got {s:?}",
                self.config.in_channels
            )));
        }
        self.config.block_shapes(s[2], s[3])?;
        Ok((s[0], s[2], s[3]))
    }

    /// Logits `[N × classes]` for a batch `[N × C × H × W]`. Eval mode treats
    /// each item independently, so results do not depend on batch composition.
    pub fn forward(&self, input: &Tensor, mode: ForwardMode) -> Result<Tensor> {
        match mode {
            ForwardMode::Train => Ok(self.forward_train(input)?.0),
            ForwardMode::Eval => self.forward_eval(input),
        }
    }

    /// Logits for a single `[C × H × W]` input.
    pub fn forward_one(&self, input: &Tensor) -> Result<Vec<f64>> {
        let mut shape = vec![1];
        shape.extend_from_slice(input.shape());
        let batch = Tensor::new(shape, input.data().to_vec())?;
        Ok(self.forward_eval(&batch)?.into_data())
    }

    fn forward_eval(&self, input: &Tensor) -> Result<Tensor> {
        let (n, h0, w0) = self.check_batch(input)?;
        let shapes = self.config.block_shapes(h0, w0)?;
        let k = self.num_classes();
        let per_item = input.len() / n;
        let mut logits = vec![0.0; n * k];
        for item in 0..n {
            let mut x = input.data()[item * per_item..(item + 1) * per_item].to_vec();
            let (mut h, mut w, mut cin) = (h0, w0, self.config.in_channels);
            for (bi, (b, &(ho, wo, ph, pw))) in self.config.blocks.iter().zip(&shapes).enumerate() {
                let g = ConvGeom { cin, h, w, sh: b.stride[0], sw: b.stride[1], ho, wo };
                let c = b.out_channels;
                let p = g.p();
                let mut col = vec![0.0; cin * 9 * p];
                im2col(&x, &g, &mut col);
                let mut z = vec![0.0; c * p];
                let base = bi * PER_BLOCK;
                gemm(c, cin * 9, p, &self.params[base].data, false, &col, false, &mut z, 0.0);
                let (gamma, beta) = (&self.params[base + 1].data, &self.params[base + 2].data);
                let (rm, rv) = (&self.params[base + 3].data, &self.params[base + 4].data);
                let mut pooled = vec![0.0; c * ph * pw];
                let mut arg = vec![0u32; ph * pw];
                for ch in 0..c {
                    let s = gamma[ch] / (rv[ch] + self.config.bn_eps).sqrt();
                    let t = beta[ch] - rm[ch] * s;
                    let plane = &mut z[ch * p..(ch + 1) * p];
                    for v in plane.iter_mut() {
                        *v = (*v * s + t).max(0.0);
                    }
                    maxpool(plane, ho, wo, &mut pooled[ch * ph * pw..(ch + 1) * ph * pw], &mut arg);
                }
                x = pooled;
                h = ph;
                w = pw;
                cin = c;
            }
            let p = h * w;
            let feat: Vec<f64> = (0..cin).map(|ch| x[ch * p..(ch + 1) * p].iter().sum::<f64>() / p as f64).collect();
            let hi = self.head_index();
            let (wt, bias) = (&self.params[hi].data, &self.params[hi + 1].data);
            for j in 0..k {
                let row = &wt[j * cin..(j + 1) * cin];
                logits[item * k + j] = bias[j] + row.iter().zip(&feat).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        Tensor::new(vec![n, k], logits)
    }

    pub(crate) fn forward_train(&self, input: &Tensor) -> Result<(Tensor, TrainCache)> {
        let (n, h0, w0) = self.check_batch(input)?;
        let shapes = self.config.block_shapes(h0, w0)?;
        let mut x = input.data().to_vec();
        let (mut h, mut w, mut cin) = (h0, w0, self.config.in_channels);
        let mut caches = Vec::with_capacity(shapes.len());
        for (bi, (b, &(ho, wo, ph, pw))) in self.config.blocks.iter().zip(&shapes).enumerate() {
            let g = ConvGeom { cin, h, w, sh: b.stride[0], sw: b.stride[1], ho, wo };
            let c = b.out_channels;
            let p = g.p();
            let base = bi * PER_BLOCK;
            let in_sz = cin * h * w;
            let mut z = vec![0.0; n * c * p];
            let mut col = vec![0.0; cin * 9 * p];
            for item in 0..n {
                im2col(&x[item * in_sz..(item + 1) * in_sz], &g, &mut col);
                gemm(c, cin * 9, p, &self.params[base].data, false, &col, false, &mut z[item * c * p..(item + 1) * c * p], 0.0);
            }
            let m = (n * p) as f64;
            let mut mean = vec![0.0; c];
            let mut var = vec![0.0; c];
            for ch in 0..c {
                let mut s = 0.0;
                for item in 0..n {
                    s += z[(item * c + ch) * p..(item * c + ch + 1) * p].iter().sum::<f64>();
                }
                let mu = s / m;
                let mut q = 0.0;
                for item in 0..n {
                    q += z[(item * c + ch) * p..(item * c + ch + 1) * p]
                        .iter()
                        .map(|v| (v - mu) * (v - mu))
                        .sum::<f64>();
                }
                mean[ch] = mu;
                var[ch] = q / m;
            }
            let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + self.config.bn_eps).sqrt()).collect();
            let (gamma, beta) = (&self.params[base + 1].data, &self.params[base + 2].data);
            let mut xhat = z;
            let mut act = vec![0.0; n * c * p];
            for item in 0..n {
                for ch in 0..c {
                    let off = (item * c + ch) * p;
                    for i in off..off + p {
                        let xh = (xhat[i] - mean[ch]) * inv_std[ch];
                        xhat[i] = xh;
                        act[i] = (gamma[ch] * xh + beta[ch]).max(0.0);
                    }
                }
            }
            let pp = ph * pw;
            let mut pooled = vec![0.0; n * c * pp];
            let mut arg = vec![0u32; n * c * pp];
            for plane in 0..n * c {
                maxpool(
                    &act[plane * p..(plane + 1) * p],
                    ho,
                    wo,
                    &mut pooled[plane * pp..(plane + 1) * pp],
                    &mut arg[plane * pp..(plane + 1) * pp],
                );
            }
            caches.push(BlockCache {
                geom: g,
                input: std::mem::replace(&mut x, pooled),
                xhat,
                inv_std,
                arg,
                batch_mean: mean,
                batch_var: var,
            });
            h = ph;
            w = pw;
            cin = c;
        }
        let p = h * w;
        let feat: Vec<f64> = (0..n * cin).map(|i| x[i * p..(i + 1) * p].iter().sum::<f64>() / p as f64).collect();
        let k = self.num_classes();
        let hi = self.head_index();
        let mut logits = vec![0.0; n * k];
        for item in 0..n {
            logits[item * k..(item + 1) * k].copy_from_slice(&self.params[hi + 1].data);
        }
        // logits += feat[n×c] · Wᵀ
        gemm(n, cin, k, &feat, false, &self.params[hi].data, true, &mut logits, 1.0);
        Ok((
            Tensor::new(vec![n, k], logits)?,
            TrainCache {
                n,
                blocks: caches,
                feat,
                last_p: p,
            },
        ))
    }

    /// Gradients of all trainable parameters given `dlogits` `[N × classes]`.
    pub(crate) fn backward(&self, cache: &TrainCache, dlogits: &[f64]) -> GradStore {
        let n = cache.n;
        let k = self.num_classes();
        let hi = self.head_index();
        let c_last = cache.feat.len() / n;
        let mut grads: Vec<Vec<f64>> = self.params.iter().map(|p| vec![0.0; p.data.len()]).collect();

        // head: logits = feat·Wᵀ + b
        gemm(k, n, c_last, dlogits, true, &cache.feat, false, &mut grads[hi], 0.0);
        for item in 0..n {
            for j in 0..k {
                grads[hi + 1][j] += dlogits[item * k + j];
            }
        }
        let mut dfeat = vec![0.0; n * c_last];
        gemm(n, k, c_last, dlogits, false, &self.params[hi].data, false, &mut dfeat, 0.0);
        let p = cache.last_p;
        let mut dx: Vec<f64> = dfeat
            .iter()
            .flat_map(|&d| std::iter::repeat_n(d / p as f64, p))
            .collect();

        for (bi, bc) in cache.blocks.iter().enumerate().rev() {
            let base = bi * PER_BLOCK;
            let g = bc.geom;
            let c = self.config.blocks[bi].out_channels;
            let p = g.p();
            let pp = (g.ho / 2) * (g.wo / 2);
            // unpool into the ReLU output, then ReLU and batch-norm backward
            let mut dz = vec![0.0; n * c * p];
            for plane in 0..n * c {
                for o in 0..pp {
                    dz[plane * p + bc.arg[plane * pp + o] as usize] += dx[plane * pp + o];
                }
            }
            let (gamma, beta) = (&self.params[base + 1].data, &self.params[base + 2].data);
            let m = (n * p) as f64;
            for ch in 0..c {
                let mut dgamma = 0.0;
                let mut dbeta = 0.0;
                for item in 0..n {
                    let off = (item * c + ch) * p;
                    for i in off..off + p {
                        let xh = bc.xhat[i];
                        if gamma[ch] * xh + beta[ch] <= 0.0 {
                            dz[i] = 0.0;
                        }
                        dgamma += dz[i] * xh;
                        dbeta += dz[i];
                    }
                }
                grads[base + 1][ch] = dgamma;
                grads[base + 2][ch] = dbeta;
                let s = gamma[ch] * bc.inv_std[ch] / m;
                for item in 0..n {
                    let off = (item * c + ch) * p;
                    for i in off..off + p {
                        dz[i] = s * (m * dz[i] - dbeta - bc.xhat[i] * dgamma);
                    }
                }
            }
            // conv backward
            let cin9 = g.cin * 9;
            let in_sz = g.cin * g.h * g.w;
            let need_dx = bi > 0;
            let mut col = vec![0.0; cin9 * p];
            let mut dcol = vec![0.0; cin9 * p];
            let mut dinput = if need_dx { vec![0.0; n * in_sz] } else { Vec::new() };
            for item in 0..n {
                im2col(&bc.input[item * in_sz..(item + 1) * in_sz], &g, &mut col);
                let dzi = &dz[item * c * p..(item + 1) * c * p];
                gemm(c, p, cin9, dzi, false, &col, true, &mut grads[base], 1.0);
                if need_dx {
                    gemm(cin9, c, p, &self.params[base].data, true, dzi, false, &mut dcol, 0.0);
                    col2im(&dcol, &g, &mut dinput[item * in_sz..(item + 1) * in_sz]);
                }
            }
            dx = dinput;
        }
        GradStore {
            entries: self
                .params
                .iter()
                .zip(grads)
                .filter(|(p, _)| p.trainable)
                .map(|(p, g)| (p.name.clone(), g))
                .collect(),
        }
    }

    /// Folds the batch statistics of a training forward pass into the running
    /// estimates (unbiased variance).
    pub(crate) fn update_running_stats(&mut self, cache: &TrainCache) {
        let mom = self.config.bn_momentum;
        for (bi, bc) in cache.blocks.iter().enumerate() {
            let base = bi * PER_BLOCK;
            let m = (cache.n * bc.geom.p()) as f64;
            let corr = if m > 1.0 { m / (m - 1.0) } else { 1.0 };
            for ch in 0..bc.batch_mean.len() {
                let rm = &mut self.params[base + 3].data[ch];
                *rm = (1.0 - mom) * *rm + mom * bc.batch_mean[ch];
                let rv = &mut self.params[base + 4].data[ch];
                *rv = (1.0 - mom) * *rv + mom * bc.batch_var[ch] * corr;
            }
        }
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|&l| (l - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::config::BlockConfig;

    #[test]
    fn im2col_matches_direct_conv() {
        // Oracle: naive 3×3 convolution with zero padding and stride.
        let g = ConvGeom { cin: 2, h: 5, w: 7, sh: 1, sw: 2, ho: 5, wo: 4 };
        let x: Vec<f64> = (0..70).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let wt: Vec<f64> = (0..18).map(|i| ((i * 5) % 7) as f64 - 3.0).collect();
        let mut col = vec![0.0; 18 * g.p()];
        im2col(&x, &g, &mut col);
        let mut out = vec![0.0; g.p()];
        gemm(1, 18, g.p(), &wt, false, &col, false, &mut out, 0.0);
        for oy in 0..g.ho {
            for ox in 0..g.wo {
                let mut acc = 0.0;
                for c in 0..2 {
                    for ky in 0..3 {
                        for kx in 0..3 {
                            let iy = (oy + ky) as isize - 1;
                            let ix = (ox * 2 + kx) as isize - 1;
                            if (0..5).contains(&iy) && (0..7).contains(&ix) {
                                acc += wt[c * 9 + ky * 3 + kx] * x[c * 35 + iy as usize * 7 + ix as usize];
                            }
                        }
                    }
                }
                assert_eq!(out[oy * g.wo + ox], acc);
            }
        }
    }

    #[test]
    fn col2im_is_adjoint() {
        // <im2col(x), y> == <x, col2im(y)>
        let g = ConvGeom { cin: 3, h: 6, w: 5, sh: 2, sw: 1, ho: 3, wo: 5 };
        let x: Vec<f64> = (0..90).map(|i| (i as f64 * 0.37).sin()).collect();
        let y: Vec<f64> = (0..27 * g.p()).map(|i| (i as f64 * 0.11).cos()).collect();
        let mut col = vec![0.0; 27 * g.p()];
        im2col(&x, &g, &mut col);
        let mut back = vec![0.0; 90];
        col2im(&y, &g, &mut back);
        let lhs: f64 = col.iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(&back).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn zero_input_finite_logits() {
        let net = Cnn::new(CompactCnnConfig::with_classes(5), 1).unwrap();
        let x = Tensor::zeros(vec![2, 3, 33, 40]);
        let l = net.forward(&x, ForwardMode::Eval).unwrap();
        assert!(l.data().iter().all(|v| v.is_finite()));
        let l = net.forward(&x, ForwardMode::Train).unwrap();
        assert!(l.data().iter().all(|v| v.is_finite()));
        let s: f64 = softmax(&l.data()[..5]).iter().sum();
        assert!((s - 1.0).abs() < 1e-6);
    }

    #[test]
    fn undersized_rejected() {
        let net = Cnn::new(CompactCnnConfig::with_classes(3), 1).unwrap();
        assert!(net.forward(&Tensor::zeros(vec![1, 3, 15, 40]), ForwardMode::Eval).is_err());
        assert!(net.forward(&Tensor::zeros(vec![1, 2, 33, 40]), ForwardMode::Eval).is_err());
    }

    #[test]
    fn train_and_eval_agree_when_stats_match() {
        // With running stats set to a single item's batch statistics, eval
        // output equals train output for that item.
        let cfg = CompactCnnConfig {
            blocks: vec![BlockConfig::new(4)],
            ..CompactCnnConfig::with_classes(3)
        };
        let mut net = Cnn::new(cfg, 4).unwrap();
        net.config.bn_momentum = 1.0;
        let x = Tensor::new(vec![1, 3, 6, 6], (0..108).map(|i| (i as f64 * 0.3).sin()).collect()).unwrap();
        let (lt, cache) = net.forward_train(&x).unwrap();
        net.update_running_stats(&cache);
        // undo Bessel's correction
        let m = 36.0;
        for v in net.param_mut("block0.bn.running_var").unwrap() {
            *v *= (m - 1.0) / m;
        }
        let le = net.forward(&x, ForwardMode::Eval).unwrap();
        for (a, b) in lt.data().iter().zip(le.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn parameter_inventory() {
        let net = Cnn::new(CompactCnnConfig::default(), 0).unwrap();
        assert_eq!(net.param_count(), net.config().param_count());
        assert_eq!(net.param_names().len(), 4 * 5 + 2);
        assert!(net.param("block3.bn.running_var").is_some());
    }
}
