use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{shape_err, Error, Result};
use crate::math;
use crate::numerics::{axpy, Matrix, Rng};

/// Output branch selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Head {
    Target,
    Source,
    Ssl,
}

impl Head {
    pub fn name(self) -> &'static str {
        match self {
            Head::Target => "target",
            Head::Source => "source",
            Head::Ssl => "ssl",
        }
    }

    pub fn parse(tag: &str) -> Result<Self> {
        match tag {
            "target" => Ok(Head::Target),
            "source" => Ok(Head::Source),
            "ssl" => Ok(Head::Ssl),
            other => Err(Error::Usage(format!("unknown head `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

/// `y = W x + b` with `W` stored `out×in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl Affine {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            weight: Matrix::zeros(output, input),
            bias: vec![0.0; output],
        }
    }

    pub fn uniform(input: usize, output: usize, scale: f64, rng: &mut Rng) -> Self {
        Self {
            weight: Matrix::from_fn(output, input, |_, _| rng.uniform(-scale, scale)),
            bias: vec![0.0; output],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.rows()
    }

    /// Applies the map to every row of `x` (`T×in` → `T×out`).
    pub fn apply(&self, x: &Matrix) -> Matrix {
        let mut y = x.matmul_t(&self.weight).expect("affine input width");
        for t in 0..y.rows() {
            axpy(1.0, &self.bias, y.row_mut(t));
        }
        y
    }

    /// Accumulates parameter gradients for upstream `dy` and returns `∂/∂x`
    /// when `want_input` is set.
    fn backward(&self, x: &Matrix, dy: &Matrix, grad: &mut Affine, want_input: bool) -> Option<Matrix> {
        let dw = dy.t_matmul(x).expect("affine backward");
        axpy(1.0, dw.data(), grad.weight.data_mut());
        axpy(1.0, &dy.column_sums(), &mut grad.bias);
        want_input.then(|| dy.matmul(&self.weight).expect("affine backward"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub affine: Affine,
    pub activation: Activation,
}

/// Architecture hyperparameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelConfig {
    pub feature_dim: usize,
    pub context_radius: usize,
    pub hidden: Vec<usize>,
    /// Target vocabulary size including blank.
    pub target_vocab: usize,
    /// Output size of the source branch, blank included.
    pub source_vocab: usize,
    pub ssl_clusters: usize,
}

impl ModelConfig {
    pub fn new(feature_dim: usize, target_vocab: usize, source_vocab: usize, ssl_clusters: usize) -> Self {
        Self {
            feature_dim,
            context_radius: 2,
            hidden: vec![64, 64, 64],
            target_vocab,
            source_vocab,
            ssl_clusters,
        }
    }

    pub fn stacked_dim(&self) -> usize {
        (2 * self.context_radius + 1) * self.feature_dim
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_vocab < 2 || self.source_vocab < 2 {
            return Err(Error::Config("vocabularies need a blank and at least one token".into()));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) || self.feature_dim == 0 {
            return Err(Error::Config("encoder widths must be positive".into()));
        }
        if self.ssl_clusters == 0 {
            return Err(Error::Config("ssl head needs at least one cluster".into()));
        }
        Ok(())
    }
}

/// Shared context-stacking encoder with target, source and self-supervised heads.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub feature_dim: usize,
    pub context_radius: usize,
    pub encoder: Vec<Layer>,
    pub head_target: Affine,
    pub head_source: Affine,
    pub head_ssl: Affine,
}

/// Intermediate values kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub stacked: Matrix,
    /// Post-activation output of every encoder layer.
    pub layers: Vec<Matrix>,
}

/// Per-layer encoder outputs for one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerActivations {
    pub labels: Vec<String>,
    pub layers: Vec<Matrix>,
}

impl ModelParams {
    /// Fresh parameters: encoder He-uniform, heads uniform in `±1/√fan_in`.
    pub fn init(config: &ModelConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let mut encoder = Vec::with_capacity(config.hidden.len());
        let mut width = config.stacked_dim();
        for &h in &config.hidden {
            let scale = math::sqrt(6.0 / width as f64);
            encoder.push(Layer {
                affine: Affine::uniform(width, h, scale, rng),
                activation: Activation::Relu,
            });
            width = h;
        }
        let head_scale = 1.0 / math::sqrt(width as f64);
        Ok(Self {
            feature_dim: config.feature_dim,
            context_radius: config.context_radius,
            encoder,
            head_target: Affine::uniform(width, config.target_vocab, head_scale, rng),
            head_source: Affine::uniform(width, config.source_vocab, head_scale, rng),
            head_ssl: Affine::uniform(width, config.ssl_clusters, head_scale, rng),
        })
    }

    pub fn zeros(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut encoder = Vec::new();
        let mut width = config.stacked_dim();
        for &h in &config.hidden {
            encoder.push(Layer {
                affine: Affine::zeros(width, h),
                activation: Activation::Relu,
            });
            width = h;
        }
        Ok(Self {
            feature_dim: config.feature_dim,
            context_radius: config.context_radius,
            encoder,
            head_target: Affine::zeros(width, config.target_vocab),
            head_source: Affine::zeros(width, config.source_vocab),
            head_ssl: Affine::zeros(width, config.ssl_clusters),
        })
    }

    /// Same shapes, all zeros; used as a gradient accumulator.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.fill(0.0);
        z
    }

    pub fn fill(&mut self, value: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x = value);
        }
    }

    pub fn config(&self) -> ModelConfig {
        ModelConfig {
            feature_dim: self.feature_dim,
            context_radius: self.context_radius,
            hidden: self.encoder.iter().map(|l| l.affine.output_dim()).collect(),
            target_vocab: self.head_target.output_dim(),
            source_vocab: self.head_source.output_dim(),
            ssl_clusters: self.head_ssl.output_dim(),
        }
    }

    pub fn head(&self, head: Head) -> &Affine {
        match head {
            Head::Target => &self.head_target,
            Head::Source => &self.head_source,
            Head::Ssl => &self.head_ssl,
        }
    }

    pub fn head_mut(&mut self, head: Head) -> &mut Affine {
        match head {
            Head::Target => &mut self.head_target,
            Head::Source => &mut self.head_source,
            Head::Ssl => &mut self.head_ssl,
        }
    }

    /// Tensor names in canonical order.
    pub fn tensor_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for i in 0..self.encoder.len() {
            names.push(format!("encoder.{i}.weight"));
            names.push(format!("encoder.{i}.bias"));
        }
        for h in [Head::Target, Head::Source, Head::Ssl] {
            names.push(format!("head.{}.weight", h.name()));
            names.push(format!("head.{}.bias", h.name()));
        }
        names
    }

    /// Flat views of every tensor, in [`Self::tensor_names`] order.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for l in &self.encoder {
            out.push(l.affine.weight.data());
            out.push(&l.affine.bias);
        }
        for a in [&self.head_target, &self.head_source, &self.head_ssl] {
            out.push(a.weight.data());
            out.push(&a.bias);
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for l in &mut self.encoder {
            out.push(l.affine.weight.data_mut());
            out.push(&mut l.affine.bias);
        }
        for a in [&mut self.head_target, &mut self.head_source, &mut self.head_ssl] {
            out.push(a.weight.data_mut());
            out.push(&mut a.bias);
        }
        out
    }

    /// Which tensors belong to a given head (`Some`) or the encoder (`None`).
    pub fn tensor_owners(&self) -> Vec<Option<Head>> {
        let mut out = vec![None; 2 * self.encoder.len()];
        for h in [Head::Target, Head::Source, Head::Ssl] {
            out.push(Some(h));
            out.push(Some(h));
        }
        out
    }

    pub fn tensor_sizes(&self) -> Vec<usize> {
        self.tensors().iter().map(|t| t.len()).collect()
    }

    pub fn num_params(&self) -> usize {
        self.tensor_sizes().iter().sum()
    }

    /// All parameters concatenated in canonical order.
    pub fn flatten(&self) -> Vec<f64> {
        self.tensors().concat()
    }

    pub fn unflatten(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(shape_err("unflatten", format!("{}", self.num_params()), format!("{}", flat.len())));
        }
        let mut offset = 0;
        for t in self.tensors_mut() {
            t.copy_from_slice(&flat[offset..offset + t.len()]);
            offset += t.len();
        }
        Ok(())
    }

    pub fn same_shape(&self, other: &ModelParams) -> bool {
        self.feature_dim == other.feature_dim
            && self.context_radius == other.context_radius
            && self.tensor_sizes() == other.tensor_sizes()
            && self.config() == other.config()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    /// `self += k·other`
    pub fn add_scaled(&mut self, other: &ModelParams, k: f64) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            axpy(k, b, a);
        }
    }

    /// Context-stacked input: row `t` concatenates frames `t−r..=t+r`,
    /// replicating the edge frames at the boundaries.
    pub fn stack_context(&self, frames: &Matrix) -> Result<Matrix> {
        if frames.cols() != self.feature_dim {
            return Err(shape_err(
                "forward",
                format!("{} features", self.feature_dim),
                format!("{}", frames.cols()),
            ));
        }
        let t_len = frames.rows();
        let r = self.context_radius as isize;
        let d = self.feature_dim;
        let width = (2 * self.context_radius + 1) * d;
        let mut out = Matrix::zeros(t_len, width);
        if t_len == 0 {
            return Ok(out);
        }
        for t in 0..t_len {
            let row = out.row_mut(t);
            for (slot, o) in (-r..=r).enumerate() {
                let src = (t as isize + o).clamp(0, t_len as isize - 1) as usize;
                row[slot * d..(slot + 1) * d].copy_from_slice(frames.row(src));
            }
        }
        Ok(out)
    }

    /// Runs the shared encoder, keeping intermediates for backpropagation.
    pub fn encode(&self, frames: &Matrix) -> Result<ForwardCache> {
        let stacked = self.stack_context(frames)?;
        let mut layers: Vec<Matrix> = Vec::with_capacity(self.encoder.len());
        for layer in &self.encoder {
            let input = layers.last().unwrap_or(&stacked);
            let mut y = layer.affine.apply(input);
            if layer.activation == Activation::Relu {
                y.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
            }
            layers.push(y);
        }
        Ok(ForwardCache { stacked, layers })
    }

    pub fn head_logits(&self, cache: &ForwardCache, head: Head) -> Matrix {
        self.head(head).apply(cache.layers.last().unwrap_or(&cache.stacked))
    }

    /// Logits of the chosen branch (`T×V`) and the per-layer activations.
    pub fn forward(&self, frames: &Matrix, head: Head) -> Result<(Matrix, LayerActivations)> {
        let cache = self.encode(frames)?;
        let logits = self.head_logits(&cache, head);
        let labels = (0..cache.layers.len()).map(|i| format!("encoder.{i}")).collect();
        Ok((
            logits,
            LayerActivations {
                labels,
                layers: cache.layers,
            },
        ))
    }

    /// Accumulates `∂loss/∂θ` into `grads` given `∂loss/∂logits` for `head`.
    ///
    /// With `encoder_frozen` only the head's gradient is formed.
    pub fn backward(&self, cache: &ForwardCache, head: Head, dlogits: &Matrix, grads: &mut ModelParams, encoder_frozen: bool) {
        let top = cache.layers.last().unwrap_or(&cache.stacked);
        let mut upstream = self
            .head(head)
            .backward(top, dlogits, grads.head_mut(head), !encoder_frozen);
        if encoder_frozen {
            return;
        }
        for i in (0..self.encoder.len()).rev() {
            let Some(mut dy) = upstream.take() else { break };
            let layer = &self.encoder[i];
            if layer.activation == Activation::Relu {
                for (g, &y) in dy.data_mut().iter_mut().zip(cache.layers[i].data()) {
                    if y <= 0.0 {
                        *g = 0.0;
                    }
                }
            }
            let input = if i == 0 { &cache.stacked } else { &cache.layers[i - 1] };
            upstream = layer
                .affine
                .backward(input, &dy, &mut grads.encoder[i].affine, i > 0);
        }
    }

    /// Hash of ReLU on/off states, for finite-difference kink detection.
    pub fn activation_signature(cache: &ForwardCache) -> u64 {
        let mut h: u64 = 0xCBF2_9CE4_8422_2325;
        for layer in &cache.layers {
            for &v in layer.data() {
                h ^= u64::from(v > 0.0);
                h = h.wrapping_mul(0x0100_0000_01B3);
            }
        }
        h
    }

    /// Re-draws one head: weights uniform in `±scale`, biases zero.
    pub fn reinit_head(&mut self, head: Head, rng: &mut Rng, scale: f64) {
        let a = self.head_mut(head);
        let (out, inp) = (a.output_dim(), a.input_dim());
        *a = Affine::uniform(inp, out, scale, rng);
    }

    /// Replaces a head with a copy of another (shapes must agree).
    pub fn copy_head(&mut self, from: Head, to: Head) -> Result<()> {
        let src = self.head(from).clone();
        let dst = self.head(to);
        if src.weight.shape() != dst.weight.shape() {
            return Err(shape_err(
                "copy_head",
                format!("{:?}", dst.weight.shape()),
                format!("{:?}", src.weight.shape()),
            ));
        }
        *self.head_mut(to) = src;
        Ok(())
    }
}

/// Functional form of [`ModelParams::reinit_head`].
pub fn reinit_head(params: &ModelParams, head: Head, rng: &mut Rng, scale: f64) -> ModelParams {
    let mut p = params.clone();
    p.reinit_head(head, rng, scale);
    p
}
