use alloc::vec;
use alloc::vec::Vec;

use super::conv::{conv3d_backward, conv3d_forward, Conv3dLayer, Padding};
use super::pool::{maxpool3d_backward, maxpool3d_forward, PoolIndices};
use super::relu::{relu_backward, relu_forward};
use super::sgd::sgd_momentum_step;
use super::tensor::VolumeTensor;
use crate::error::{config_err, invalid, Result};
use crate::rng;

/// Number of regression targets (derived covariates) the head emits.
pub const HEAD_OUTPUTS: usize = 123;
/// Intensity channel + tissue-label channel.
pub const INPUT_CHANNELS: usize = 2;
/// Spatial edge of the last block's output, which the head kernel spans.
pub const FEATURE_EDGE: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncoderConfig {
    /// Input edge `S`; must equal `6 * 2^n` for `n` = number of blocks.
    pub input_size: usize,
    /// Output channels of each block.
    pub channel_schedule: Vec<usize>,
    /// Edge of the in-block convolution kernels (odd).
    pub kernel: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self { input_size: 24, channel_schedule: vec![4, 4], kernel: 3 }
    }
}

impl EncoderConfig {
    /// Config with the smallest block count that brings `input_size` down to 6,
    /// every block using `channels` output channels.
    pub fn uniform(input_size: usize, channels: usize) -> Self {
        let mut n = 0;
        while FEATURE_EDGE << n < input_size {
            n += 1;
        }
        Self { input_size, channel_schedule: vec![channels; n.max(1)], kernel: 3 }
    }

    pub fn n_blocks(&self) -> usize {
        self.channel_schedule.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.channel_schedule.is_empty() {
            return Err(config_err!("encoder needs at least one block"));
        }
        if self.channel_schedule.contains(&0) {
            return Err(config_err!("block channel counts must be positive"));
        }
        if self.kernel.is_multiple_of(2) {
            return Err(config_err!("encoder kernel must be odd, got {}", self.kernel));
        }
        let n = self.n_blocks();
        if n >= usize::BITS as usize - 3 || FEATURE_EDGE << n != self.input_size {
            return Err(config_err!("input size {} is not 6 * 2^{n} for {n} blocks", self.input_size));
        }
        Ok(())
    }

    /// Spatial edge of block `k`'s pooled output (`k` counts from 1).
    pub fn block_edge(&self, k: usize) -> usize {
        self.input_size >> k
    }

    /// Length of the feature vector at `scale`.
    pub fn feature_len(&self, scale: FeatureScale) -> Result<usize> {
        let (block, _) = self.resolve_scale(scale)?;
        Ok(self.channel_schedule[block - 1] * scale.0.pow(3))
    }

    /// Block whose output is read for `scale`, and whether one extra pool follows.
    fn resolve_scale(&self, scale: FeatureScale) -> Result<(usize, bool)> {
        let n = self.n_blocks();
        if let Some(k) = (1..=n).find(|&k| self.block_edge(k) == scale.0) {
            return Ok((k, false));
        }
        if scale.0 * 2 == self.block_edge(n) {
            return Ok((n, true));
        }
        Err(invalid!("feature scale {0}^3 is not reachable from input size {1}", scale.0, self.input_size))
    }
}

/// Spatial edge of an extracted feature map: 6 for the 6³ map, 3 for the
/// additionally pooled 3³ map, or any intermediate block edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureScale(pub usize);

impl FeatureScale {
    pub const SIX: Self = Self(6);
    pub const THREE: Self = Self(3);
}

#[derive(Debug, Clone)]
struct BlockCache {
    input: VolumeTensor,
    z1: VolumeTensor,
    a1: VolumeTensor,
    z2: VolumeTensor,
    pool: PoolIndices,
}

/// Everything backward needs from one sample's forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    blocks: Vec<BlockCache>,
    head_input: VolumeTensor,
}

/// Per-layer `(weight, bias)` gradients in model layer order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrads {
    pub layers: Vec<(Vec<f64>, Vec<f64>)>,
}

impl ModelGrads {
    pub fn zeros_like(model: &EncoderModel) -> Self {
        Self { layers: model.layers.iter().map(|l| (vec![0.0; l.weight.len()], vec![0.0; l.bias.len()])).collect() }
    }

    pub fn add_assign(&mut self, other: &ModelGrads) {
        for ((w, b), (ow, ob)) in self.layers.iter_mut().zip(&other.layers) {
            for (a, x) in w.iter_mut().zip(ow) {
                *a += x;
            }
            for (a, x) in b.iter_mut().zip(ob) {
                *a += x;
            }
        }
    }
}

/// Conv/ReLU/pool encoder with its momentum buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderModel {
    config: EncoderConfig,
    /// `block0.conv1, block0.conv2, block1.conv1, ..., head`.
    layers: Vec<Conv3dLayer>,
    velocity: Vec<(Vec<f64>, Vec<f64>)>,
}

impl EncoderModel {
    /// Glorot-uniform weights and zero biases, drawn from `seed`.
    pub fn new(config: EncoderConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = rng::stream(seed, rng::streams::ENCODER_INIT);
        let layers = Self::shapes(&config)
            .into_iter()
            .map(|(o, i, k, p)| Conv3dLayer::glorot(o, i, k, p, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::assemble(config, layers))
    }

    /// All weights and biases zero.
    pub fn zeros(config: EncoderConfig) -> Result<Self> {
        config.validate()?;
        let layers = Self::shapes(&config)
            .into_iter()
            .map(|(o, i, k, p)| Conv3dLayer::zeros(o, i, k, p))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::assemble(config, layers))
    }

    /// Rebuilds a model from explicit layers and momentum buffers, checking
    /// every shape against `config`.
    pub fn from_parts(
        config: EncoderConfig,
        layers: Vec<Conv3dLayer>,
        velocity: Vec<(Vec<f64>, Vec<f64>)>,
    ) -> Result<Self> {
        config.validate()?;
        let shapes = Self::shapes(&config);
        if layers.len() != shapes.len() || velocity.len() != shapes.len() {
            return Err(invalid!(
                "expected {} layers and buffers, got {} and {}",
                shapes.len(),
                layers.len(),
                velocity.len()
            ));
        }
        for (i, ((l, v), (o, inp, k, p))) in layers.iter().zip(&velocity).zip(&shapes).enumerate() {
            if (l.out_channels(), l.in_channels(), l.kernel(), l.padding()) != (*o, *inp, *k, *p) {
                return Err(invalid!("layer {i} shape does not match the config"));
            }
            if v.0.len() != l.weight.len() || v.1.len() != l.bias.len() {
                return Err(invalid!("layer {i} momentum buffer has the wrong size"));
            }
        }
        Ok(Self { config, layers, velocity })
    }

    /// `(out_ch, in_ch, kernel, padding)` per layer.
    pub fn shapes(config: &EncoderConfig) -> Vec<(usize, usize, usize, Padding)> {
        let mut shapes = Vec::new();
        let mut in_ch = INPUT_CHANNELS;
        for &c in &config.channel_schedule {
            shapes.push((c, in_ch, config.kernel, Padding::Same));
            shapes.push((c, c, config.kernel, Padding::Same));
            in_ch = c;
        }
        shapes.push((HEAD_OUTPUTS, in_ch, FEATURE_EDGE, Padding::Valid));
        shapes
    }

    fn assemble(config: EncoderConfig, layers: Vec<Conv3dLayer>) -> Self {
        let velocity = layers.iter().map(|l| (vec![0.0; l.weight.len()], vec![0.0; l.bias.len()])).collect();
        Self { config, layers, velocity }
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn layers(&self) -> &[Conv3dLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Conv3dLayer] {
        &mut self.layers
    }

    pub fn velocity(&self) -> &[(Vec<f64>, Vec<f64>)] {
        &self.velocity
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    fn check_input(&self, x: &VolumeTensor) -> Result<()> {
        let s = self.config.input_size;
        if x.dims() != [INPUT_CHANNELS, s, s, s] {
            return Err(invalid!("encoder expects input {:?}, got {:?}", [INPUT_CHANNELS, s, s, s], x.dims()));
        }
        Ok(())
    }

    fn run_block(&self, b: usize, input: &VolumeTensor) -> Result<(VolumeTensor, BlockCache)> {
        let z1 = conv3d_forward(input, &self.layers[2 * b])?;
        let a1 = VolumeTensor::from_raw(z1.dims(), relu_forward(z1.data()));
        let z2 = conv3d_forward(&a1, &self.layers[2 * b + 1])?;
        let a2 = VolumeTensor::from_raw(z2.dims(), relu_forward(z2.data()));
        let (pooled, pool) = maxpool3d_forward(&a2)?;
        Ok((pooled, BlockCache { input: input.clone(), z1, a1, z2, pool }))
    }

    /// Forward pass of one sample: the 123 head outputs and the activation cache.
    pub fn forward_sample(&self, x: &VolumeTensor) -> Result<(Vec<f64>, ForwardCache)> {
        self.check_input(x)?;
        let mut blocks = Vec::with_capacity(self.config.n_blocks());
        let mut h = x.clone();
        for b in 0..self.config.n_blocks() {
            let (next, cache) = self.run_block(b, &h)?;
            blocks.push(cache);
            h = next;
        }
        let out = conv3d_forward(&h, self.layers.last().expect("head layer"))?;
        Ok((out.into_data(), ForwardCache { blocks, head_input: h }))
    }

    /// Forward pass of a batch, one prediction vector and cache per sample.
    pub fn forward(&self, batch: &[VolumeTensor]) -> Result<(Vec<Vec<f64>>, Vec<ForwardCache>)> {
        let mut preds = Vec::with_capacity(batch.len());
        let mut caches = Vec::with_capacity(batch.len());
        for x in batch {
            let (p, c) = self.forward_sample(x)?;
            preds.push(p);
            caches.push(c);
        }
        Ok((preds, caches))
    }

    /// Predictions only; no cache is retained.
    pub fn predict(&self, x: &VolumeTensor) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut h = x.clone();
        for b in 0..self.config.n_blocks() {
            h = self.run_block(b, &h)?.0;
        }
        Ok(conv3d_forward(&h, self.layers.last().expect("head layer"))?.into_data())
    }

    /// Parameter gradients for one sample given `d loss / d prediction`.
    pub fn backward_sample(&self, cache: &ForwardCache, grad_pred: &[f64]) -> Result<ModelGrads> {
        if grad_pred.len() != HEAD_OUTPUTS {
            return Err(invalid!("expected {HEAD_OUTPUTS} output gradients, got {}", grad_pred.len()));
        }
        let n = self.config.n_blocks();
        let mut grads = vec![(Vec::new(), Vec::new()); self.layers.len()];
        let head = self.layers.last().expect("head layer");
        let g_out = VolumeTensor::from_raw([HEAD_OUTPUTS, 1, 1, 1], grad_pred.to_vec());
        let hg = conv3d_backward(&g_out, &cache.head_input, head, true)?;
        grads[2 * n] = (hg.weight, hg.bias);
        let mut g = hg.input.expect("requested input gradient");
        for b in (0..n).rev() {
            let bc = &cache.blocks[b];
            let g_a2 = maxpool3d_backward(&g, &bc.pool)?;
            let g_z2 = VolumeTensor::from_raw(bc.z2.dims(), relu_backward(g_a2.data(), bc.z2.data())?);
            let c2 = conv3d_backward(&g_z2, &bc.a1, &self.layers[2 * b + 1], true)?;
            grads[2 * b + 1] = (c2.weight, c2.bias);
            let g_a1 = c2.input.expect("requested input gradient");
            let g_z1 = VolumeTensor::from_raw(bc.z1.dims(), relu_backward(g_a1.data(), bc.z1.data())?);
            let c1 = conv3d_backward(&g_z1, &bc.input, &self.layers[2 * b], b > 0)?;
            grads[2 * b] = (c1.weight, c1.bias);
            if b > 0 {
                g = c1.input.expect("requested input gradient");
            }
        }
        Ok(ModelGrads { layers: grads })
    }

    /// One momentum-SGD update of every layer.
    pub fn apply_sgd(&mut self, grads: &ModelGrads, lr: f64, momentum: f64) -> Result<()> {
        if grads.layers.len() != self.layers.len() {
            return Err(invalid!("gradient has {} layers, model has {}", grads.layers.len(), self.layers.len()));
        }
        for ((layer, vel), (gw, gb)) in self.layers.iter_mut().zip(&mut self.velocity).zip(&grads.layers) {
            sgd_momentum_step(&mut layer.weight, gw, &mut vel.0, lr, momentum)?;
            sgd_momentum_step(&mut layer.bias, gb, &mut vel.1, lr, momentum)?;
        }
        Ok(())
    }

    /// Flattened (channel-major, then z, y, x) feature map at `scale`.
    pub fn extract_features(&self, x: &VolumeTensor, scale: FeatureScale) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let (block, extra_pool) = self.config.resolve_scale(scale)?;
        let mut h = x.clone();
        for b in 0..block {
            h = self.run_block(b, &h)?.0;
        }
        if extra_pool {
            h = maxpool3d_forward(&h)?.0;
        }
        Ok(h.into_data())
    }
}
