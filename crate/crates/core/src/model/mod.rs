//! The β-VAE: encoder `input → 64 → 32 → 16 → (μ, log σ²)` and decoder
//! `z → 16 → 32 → 64 → heads`, with ReLU hidden layers. The output heads
//! follow the feature layout: a softmax per one-hot group, a sigmoid per
//! boolean and a linear unit per continuous value.
//!
//! Training minimizes `L_rec + β · L_KL` averaged over the batch, with
//! gradients computed by an explicit backward pass through this fixed graph.

mod checkpoint;
mod train;

use std::ops::Range;
use std::sync::Arc;

use ndarray::{s, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::Layout;
use crate::error::{Error, Result};
use crate::nn::{
    self, boolean_logit_grad, boolean_loss, categorical_logit_grad, categorical_loss,
    continuous_grad, continuous_loss, DenseLayer, GaussianParams, GradBlock, LossBreakdown,
};
use crate::rng::{stream_rng, Stream};

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use train::{train, train_on, TrainReport};

/// Architecture and optimization settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub encoder_hidden: Vec<usize>,
    pub latent_dim: usize,
    pub decoder_hidden: Vec<usize>,
    pub beta: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            encoder_hidden: vec![64, 32, 16],
            latent_dim: 8,
            decoder_hidden: vec![16, 32, 64],
            beta: 0.0,
            learning_rate: 1e-3,
            batch_size: 2048,
            epochs: 100,
            seed: 1,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad("beta must be finite and >= 0");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if self.batch_size == 0 || self.latent_dim == 0 {
            return bad("batch size and latent dimension must be positive");
        }
        if self
            .encoder_hidden
            .iter()
            .chain(&self.decoder_hidden)
            .any(|&h| h == 0)
        {
            return bad("hidden layer sizes must be positive");
        }
        Ok(())
    }
}

/// All trainable parameters. Also used as the gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct VaeParams {
    pub encoder: Vec<DenseLayer>,
    pub mu_head: DenseLayer,
    pub logvar_head: DenseLayer,
    pub decoder: Vec<DenseLayer>,
    pub output: DenseLayer,
}

impl VaeParams {
    fn layers(&self) -> Vec<(String, &DenseLayer)> {
        let mut out: Vec<(String, &DenseLayer)> = Vec::new();
        out.extend(
            self.encoder
                .iter()
                .enumerate()
                .map(|(i, l)| (format!("encoder.{i}"), l)),
        );
        out.push(("mu_head".into(), &self.mu_head));
        out.push(("logvar_head".into(), &self.logvar_head));
        out.extend(
            self.decoder
                .iter()
                .enumerate()
                .map(|(i, l)| (format!("decoder.{i}"), l)),
        );
        out.push(("output".into(), &self.output));
        out
    }

    fn layers_mut(&mut self) -> Vec<&mut DenseLayer> {
        let mut out: Vec<&mut DenseLayer> = self.encoder.iter_mut().collect();
        out.push(&mut self.mu_head);
        out.push(&mut self.logvar_head);
        out.extend(self.decoder.iter_mut());
        out.push(&mut self.output);
        out
    }

    /// Named flat parameter blocks (`<layer>.weight`, `<layer>.bias`) in a
    /// fixed order.
    pub fn blocks(&self) -> Vec<(String, &[f64])> {
        self.layers()
            .into_iter()
            .flat_map(|(name, l)| {
                [
                    (
                        format!("{name}.weight"),
                        l.weights.as_slice().expect("standard layout"),
                    ),
                    (
                        format!("{name}.bias"),
                        l.bias.as_slice().expect("standard layout"),
                    ),
                ]
            })
            .collect()
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers_mut()
            .into_iter()
            .flat_map(|l| {
                [
                    l.weights.as_slice_mut().expect("standard layout"),
                    l.bias.as_slice_mut().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn grad_blocks(&self) -> Vec<GradBlock> {
        self.blocks()
            .into_iter()
            .map(|(name, v)| GradBlock {
                name,
                values: v.to_vec(),
            })
            .collect()
    }

    pub fn zeros_like(&self) -> VaeParams {
        let z = |l: &DenseLayer| DenseLayer::zeros(l.input_size(), l.output_size());
        VaeParams {
            encoder: self.encoder.iter().map(z).collect(),
            mu_head: z(&self.mu_head),
            logvar_head: z(&self.logvar_head),
            decoder: self.decoder.iter().map(z).collect(),
            output: z(&self.output),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers().iter().all(|(_, l)| l.is_finite())
    }

    pub fn num_parameters(&self) -> usize {
        self.blocks().iter().map(|(_, b)| b.len()).sum()
    }
}

/// A β-VAE bound to a feature layout.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaVae {
    layout: Arc<Layout>,
    latent_dim: usize,
    pub params: VaeParams,
}

/// Activations recorded by [`BetaVae::forward_train`] for the backward pass.
#[derive(Debug, Clone)]
pub struct TrainForward {
    pub loss: LossBreakdown,
    encoder_acts: Vec<Array2<f64>>,
    mu: Array2<f64>,
    logvar: Array2<f64>,
    noise: Array2<f64>,
    z: Array2<f64>,
    decoder_acts: Vec<Array2<f64>>,
    output: Array2<f64>,
}

/// Decoder output for one latent vector, in layout order.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub values: Vec<f64>,
    pub layout: Arc<Layout>,
}

impl Reconstruction {
    pub fn categorical(&self, group: usize) -> &[f64] {
        &self.values[self.layout.group_ranges()[group].clone()]
    }

    pub fn boolean(&self) -> &[f64] {
        &self.values[self.layout.boolean_range()]
    }

    pub fn continuous(&self) -> &[f64] {
        &self.values[self.layout.continuous_range()]
    }
}

fn chain_sizes(input: usize, hidden: &[usize]) -> Vec<(usize, usize)> {
    let mut sizes = Vec::with_capacity(hidden.len());
    let mut prev = input;
    for &h in hidden {
        sizes.push((prev, h));
        prev = h;
    }
    sizes
}

fn relu_backward(grad: &mut Array2<f64>, act: &Array2<f64>) {
    ndarray::Zip::from(grad).and(act).for_each(|g, &a| {
        if a <= 0.0 {
            *g = 0.0;
        }
    });
}

impl BetaVae {
    /// Randomly initialized model; weights come from the run's init stream.
    pub fn new(layout: Arc<Layout>, config: &ModelConfig) -> Result<BetaVae> {
        config.validate()?;
        let mut rng = stream_rng(config.seed, Stream::Init);
        let width = layout.width();
        if width == 0 {
            return Err(Error::Config("layout has zero width".into()));
        }
        let encoder: Vec<DenseLayer> = chain_sizes(width, &config.encoder_hidden)
            .into_iter()
            .map(|(i, o)| DenseLayer::init(i, o, &mut rng))
            .collect();
        let enc_out = config.encoder_hidden.last().copied().unwrap_or(width);
        let mu_head = DenseLayer::init(enc_out, config.latent_dim, &mut rng);
        let logvar_head = DenseLayer::init(enc_out, config.latent_dim, &mut rng);
        let decoder: Vec<DenseLayer> = chain_sizes(config.latent_dim, &config.decoder_hidden)
            .into_iter()
            .map(|(i, o)| DenseLayer::init(i, o, &mut rng))
            .collect();
        let dec_out = config
            .decoder_hidden
            .last()
            .copied()
            .unwrap_or(config.latent_dim);
        let output = DenseLayer::init(dec_out, width, &mut rng);
        Ok(BetaVae {
            layout,
            latent_dim: config.latent_dim,
            params: VaeParams {
                encoder,
                mu_head,
                logvar_head,
                decoder,
                output,
            },
        })
    }

    /// Reassembles a model from parameters, checking every shape.
    pub fn from_params(layout: Arc<Layout>, params: VaeParams) -> Result<BetaVae> {
        let latent_dim = params.mu_head.output_size();
        let mut expect_in = layout.width();
        for (i, l) in params.encoder.iter().enumerate() {
            if l.input_size() != expect_in {
                return Err(Error::Shape(format!(
                    "encoder.{i} input size {}",
                    l.input_size()
                )));
            }
            expect_in = l.output_size();
        }
        for head in [&params.mu_head, &params.logvar_head] {
            if head.input_size() != expect_in || head.output_size() != latent_dim {
                return Err(Error::Shape("latent head shape".into()));
            }
        }
        expect_in = latent_dim;
        for (i, l) in params.decoder.iter().enumerate() {
            if l.input_size() != expect_in {
                return Err(Error::Shape(format!(
                    "decoder.{i} input size {}",
                    l.input_size()
                )));
            }
            expect_in = l.output_size();
        }
        if params.output.input_size() != expect_in || params.output.output_size() != layout.width()
        {
            return Err(Error::Shape(format!(
                "output head is {}x{}, layout width is {}",
                params.output.output_size(),
                params.output.input_size(),
                layout.width()
            )));
        }
        Ok(BetaVae {
            layout,
            latent_dim,
            params,
        })
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn input_width(&self) -> usize {
        self.layout.width()
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    /// Sets both latent heads to zero so every input maps to `N(0, I)`.
    pub fn zero_latent_heads(&mut self) {
        for head in [&mut self.params.mu_head, &mut self.params.logvar_head] {
            head.weights.fill(0.0);
            head.bias.fill(0.0);
        }
    }

    fn check_width(&self, cols: usize) -> Result<()> {
        if cols != self.input_width() {
            return Err(Error::Shape(format!(
                "input width {cols}, model expects {}",
                self.input_width()
            )));
        }
        Ok(())
    }

    fn encode_hidden(&self, x: ArrayView2<f64>) -> Vec<Array2<f64>> {
        let mut acts: Vec<Array2<f64>> = Vec::with_capacity(self.params.encoder.len());
        for layer in &self.params.encoder {
            let mut h = match acts.last() {
                Some(prev) => layer.affine(prev.view()),
                None => layer.affine(x),
            };
            nn::relu_in_place(&mut h);
            acts.push(h);
        }
        acts
    }

    /// Posterior parameters for every row of `x`.
    pub fn encode_batch(&self, x: ArrayView2<f64>) -> Result<(Array2<f64>, Array2<f64>)> {
        self.check_width(x.ncols())?;
        let acts = self.encode_hidden(x);
        let last = acts.last().map(|a| a.view()).unwrap_or(x);
        Ok((
            self.params.mu_head.affine(last),
            self.params.logvar_head.affine(last),
        ))
    }

    pub fn encode(&self, x: &[f64]) -> Result<GaussianParams> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("contiguous slice");
        let (mu, logvar) = self.encode_batch(view)?;
        Ok(GaussianParams {
            mu: mu.into_raw_vec_and_offset().0,
            logvar: logvar.into_raw_vec_and_offset().0,
        })
    }

    fn decode_hidden(&self, z: ArrayView2<f64>) -> Vec<Array2<f64>> {
        let mut acts: Vec<Array2<f64>> = Vec::with_capacity(self.params.decoder.len());
        for layer in &self.params.decoder {
            let mut h = match acts.last() {
                Some(prev) => layer.affine(prev.view()),
                None => layer.affine(z),
            };
            nn::relu_in_place(&mut h);
            acts.push(h);
        }
        acts
    }

    fn activate_output(&self, out: &mut Array2<f64>) {
        nn::softmax_groups_in_place(out, &self.layout.group_ranges());
        out.slice_mut(s![.., self.layout.boolean_range()])
            .mapv_inplace(nn::sigmoid);
    }

    /// Activated decoder heads for every row of `z`.
    pub fn decode_batch(&self, z: ArrayView2<f64>) -> Result<Array2<f64>> {
        if z.ncols() != self.latent_dim {
            return Err(Error::Shape(format!(
                "latent width {}, model expects {}",
                z.ncols(),
                self.latent_dim
            )));
        }
        let acts = self.decode_hidden(z);
        let last = acts.last().map(|a| a.view()).unwrap_or(z);
        let mut out = self.params.output.affine(last);
        self.activate_output(&mut out);
        Ok(out)
    }

    pub fn decode(&self, z: &[f64]) -> Result<Reconstruction> {
        let view = ArrayView2::from_shape((1, z.len()), z).expect("contiguous slice");
        let out = self.decode_batch(view)?;
        Ok(Reconstruction {
            values: out.into_raw_vec_and_offset().0,
            layout: Arc::clone(&self.layout),
        })
    }

    /// Batch-mean reconstruction components `(cat, bool, cont)`.
    pub fn reconstruction_terms(
        &self,
        x: ArrayView2<f64>,
        out: ArrayView2<f64>,
    ) -> (f64, f64, f64) {
        let groups = self.layout.group_ranges();
        let b = self.layout.boolean_range();
        let c = self.layout.continuous_range();
        (
            categorical_loss(x, out, &groups),
            boolean_loss(x.slice(s![.., b.clone()]), out.slice(s![.., b])),
            continuous_loss(x.slice(s![.., c.clone()]), out.slice(s![.., c])),
        )
    }

    /// Forward pass with explicit reparameterization noise (rows × latent),
    /// recording everything the backward pass needs.
    pub fn forward_train(
        &self,
        x: ArrayView2<f64>,
        noise: ArrayView2<f64>,
        beta: f64,
    ) -> Result<TrainForward> {
        self.check_width(x.ncols())?;
        if noise.dim() != (x.nrows(), self.latent_dim) {
            return Err(Error::Shape(format!(
                "noise is {:?}, expected ({}, {})",
                noise.dim(),
                x.nrows(),
                self.latent_dim
            )));
        }
        let encoder_acts = self.encode_hidden(x);
        let last = encoder_acts.last().map(|a| a.view()).unwrap_or(x);
        let mu = self.params.mu_head.affine(last);
        let logvar = self.params.logvar_head.affine(last);
        let sigma = logvar.mapv(|lv| (0.5 * lv).exp());
        let z = &mu + &(&sigma * &noise);

        let decoder_acts = self.decode_hidden(z.view());
        let last = decoder_acts.last().map(|a| a.view()).unwrap_or(z.view());
        let mut output = self.params.output.affine(last);
        self.activate_output(&mut output);

        let (l_cat, l_bool, l_cont) = self.reconstruction_terms(x, output.view());
        let n = x.nrows().max(1) as f64;
        let kl_sum: f64 = ndarray::Zip::from(&mu)
            .and(&logvar)
            .fold(0.0, |acc, &m, &lv| acc + (m * m + lv.exp() - 1.0 - lv));
        let l_kl = 0.5 * kl_sum / n;
        Ok(TrainForward {
            loss: LossBreakdown::new(l_cat, l_bool, l_cont, l_kl, beta),
            encoder_acts,
            mu,
            logvar,
            noise: noise.to_owned(),
            z,
            decoder_acts,
            output,
        })
    }

    /// Exact gradient of the batch-mean objective `L_rec + β · L_KL`,
    /// including the pathwise term through the reparameterization. With
    /// `beta == 0` the KL branch is skipped entirely.
    pub fn backward(&self, fwd: &TrainForward, x: ArrayView2<f64>, beta: f64) -> VaeParams {
        let p = &self.params;
        let mut grads = p.zeros_like();
        let n = x.nrows().max(1) as f64;
        let scale = 1.0 / n;

        // Output heads.
        let mut d_out =
            categorical_logit_grad(x, fwd.output.view(), &self.layout.group_ranges(), scale);
        let b = self.layout.boolean_range();
        d_out
            .slice_mut(s![.., b.clone()])
            .assign(&boolean_logit_grad(
                x.slice(s![.., b.clone()]),
                fwd.output.slice(s![.., b]),
                scale,
            ));
        let c = self.layout.continuous_range();
        d_out.slice_mut(s![.., c.clone()]).assign(&continuous_grad(
            x.slice(s![.., c.clone()]),
            fwd.output.slice(s![.., c]),
            scale,
        ));

        // Decoder.
        let dec_input = |i: usize| {
            if i == 0 {
                fwd.z.view()
            } else {
                fwd.decoder_acts[i - 1].view()
            }
        };
        let out_input = fwd
            .decoder_acts
            .last()
            .map(|a| a.view())
            .unwrap_or(fwd.z.view());
        let mut d_h = p
            .output
            .backward(out_input, d_out.view(), &mut grads.output, true)
            .expect("input grad requested");
        for i in (0..p.decoder.len()).rev() {
            relu_backward(&mut d_h, &fwd.decoder_acts[i]);
            d_h = p.decoder[i]
                .backward(dec_input(i), d_h.view(), &mut grads.decoder[i], true)
                .expect("input grad requested");
        }
        let d_z = d_h;

        // Reparameterization and KL.
        let sigma = fwd.logvar.mapv(|lv| (0.5 * lv).exp());
        let mut d_mu = d_z.clone();
        let mut d_logvar = &d_z * &sigma * &fwd.noise * 0.5;
        if beta != 0.0 {
            let k = beta * scale;
            d_mu.zip_mut_with(&fwd.mu, |g, &m| *g += k * m);
            d_logvar.zip_mut_with(&fwd.logvar, |g, &lv| *g += k * 0.5 * (lv.exp() - 1.0));
        }

        // Latent heads and encoder.
        let enc_input = |i: usize| {
            if i == 0 {
                x
            } else {
                fwd.encoder_acts[i - 1].view()
            }
        };
        let head_input = fwd.encoder_acts.last().map(|a| a.view()).unwrap_or(x);
        let need = !p.encoder.is_empty();
        let d_from_mu = p
            .mu_head
            .backward(head_input, d_mu.view(), &mut grads.mu_head, need);
        let d_from_lv =
            p.logvar_head
                .backward(head_input, d_logvar.view(), &mut grads.logvar_head, need);
        if let (Some(a), Some(bv)) = (d_from_mu, d_from_lv) {
            let mut d_h = a + bv;
            for i in (0..p.encoder.len()).rev() {
                relu_backward(&mut d_h, &fwd.encoder_acts[i]);
                let r =
                    p.encoder[i].backward(enc_input(i), d_h.view(), &mut grads.encoder[i], i > 0);
                match r {
                    Some(next) => d_h = next,
                    None => break,
                }
            }
        }
        grads
    }

    /// Loss and gradient in one call.
    pub fn loss_and_gradient(
        &self,
        x: ArrayView2<f64>,
        noise: ArrayView2<f64>,
        beta: f64,
    ) -> Result<(LossBreakdown, VaeParams)> {
        let fwd = self.forward_train(x, noise, beta)?;
        let grads = self.backward(&fwd, x, beta);
        Ok((fwd.loss, grads))
    }

    /// Per-row reconstruction error `L_cat + L_bool + L_cont` of `out`
    /// against `x` (each row scored with `n = 1`).
    pub fn per_sample_reconstruction(&self, x: ArrayView2<f64>, out: ArrayView2<f64>) -> Vec<f64> {
        x.axis_iter(Axis(0))
            .zip(out.axis_iter(Axis(0)))
            .map(|(xr, or)| {
                let xr = xr.insert_axis(Axis(0));
                let or = or.insert_axis(Axis(0));
                let (a, b, c) = self.reconstruction_terms(xr, or);
                a + b + c
            })
            .collect()
    }

    pub fn group_ranges(&self) -> Vec<Range<usize>> {
        self.layout.group_ranges()
    }
}
