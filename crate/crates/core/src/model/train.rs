use std::sync::Arc;
use std::time::Instant;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{BetaVae, Checkpoint, ModelConfig};
use crate::dataset::{EncodedArchive, Layout, PreprocessorManifest};
use crate::error::{Error, Result};
use crate::nn::{AdamConfig, AdamState, LossBreakdown};
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Sample-weighted mean loss per epoch.
    pub epochs: Vec<LossBreakdown>,
    pub wall_clock_secs: f64,
    pub checkpoint_digest: String,
}

/// Trains on the archive's normal training rows.
pub fn train(archive: &EncodedArchive, config: &ModelConfig) -> Result<(BetaVae, TrainReport)> {
    if archive.train.is_empty() {
        return Err(Error::EmptyTrain);
    }
    train_on(
        archive.train.features.view(),
        Arc::clone(archive.preprocessor.layout()),
        config,
        Some(archive.preprocessor.manifest()),
    )
}

/// Minibatch Adam on the rows of `x`. Batches follow a per-epoch seeded
/// shuffle; the last partial batch is kept.
pub fn train_on(
    x: ArrayView2<f64>,
    layout: Arc<Layout>,
    config: &ModelConfig,
    manifest: Option<PreprocessorManifest>,
) -> Result<(BetaVae, TrainReport)> {
    let started = Instant::now();
    let mut model = BetaVae::new(layout, config)?;
    if x.nrows() == 0 {
        return Err(Error::EmptyTrain);
    }
    if x.ncols() != model.input_width() {
        return Err(Error::Shape(format!(
            "training data width {}, layout width {}",
            x.ncols(),
            model.input_width()
        )));
    }

    let block_lens: Vec<usize> = model.params.blocks().iter().map(|(_, b)| b.len()).collect();
    let mut adam = AdamState::new(
        AdamConfig {
            lr: config.learning_rate,
            ..AdamConfig::default()
        },
        &block_lens,
    );
    let mut shuffle_rng = stream_rng(config.seed, Stream::Shuffle);
    let mut noise_rng = stream_rng(config.seed, Stream::TrainNoise);
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    let n_total = x.nrows() as f64;
    let latent = model.latent_dim();
    let mut history = Vec::with_capacity(config.epochs);
    let mut step = 0usize;

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut acc = [0.0f64; 5];
        for idx in order.chunks(config.batch_size) {
            let batch = x.select(Axis(0), idx);
            let noise = Array2::from_shape_simple_fn((idx.len(), latent), || {
                noise_rng.sample::<f64, _>(StandardNormal)
            });
            let fwd = model.forward_train(batch.view(), noise.view(), config.beta)?;
            if !fwd.loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    step,
                    loss: fwd.loss.total,
                });
            }
            let grads = model.backward(&fwd, batch.view(), config.beta);
            adam.step(&mut model.params.blocks_mut(), &grads.grad_blocks())?;
            let w = idx.len() as f64;
            let l = fwd.loss;
            for (a, v) in acc
                .iter_mut()
                .zip([l.l_cat, l.l_bool, l.l_cont, l.l_kl, l.total])
            {
                *a += v * w;
            }
            step += 1;
        }
        let mean = LossBreakdown::new(
            acc[0] / n_total,
            acc[1] / n_total,
            acc[2] / n_total,
            acc[3] / n_total,
            config.beta,
        );
        log::info!(
            "epoch {}/{}: total {:.6} (rec {:.6}, kl {:.6})",
            epoch + 1,
            config.epochs,
            mean.total,
            mean.l_rec,
            mean.l_kl
        );
        history.push(mean);
    }
    if !model.params.is_finite() {
        return Err(Error::NonFiniteLoss {
            epoch: config.epochs,
            step,
            loss: f64::NAN,
        });
    }

    let checkpoint = Checkpoint {
        model,
        config: config.clone(),
        manifest,
    };
    let checkpoint_digest = checkpoint.digest()?;
    Ok((
        checkpoint.model,
        TrainReport {
            epochs: history,
            wall_clock_secs: started.elapsed().as_secs_f64(),
            checkpoint_digest,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::Distribution;

    fn toy(n: usize, seed: u64) -> (Array2<f64>, Arc<Layout>) {
        let layout = Arc::new(Layout::from_sizes(&[3, 2], 2, 3));
        let mut rng = stream_rng(seed, Stream::Init);
        let mut x = Array2::zeros((n, layout.width()));
        for mut row in x.rows_mut() {
            let a = rng.random_range(0..3);
            let b = rng.random_range(0..2);
            row[a] = 1.0;
            row[3 + b] = 1.0;
            row[5] = f64::from(u8::from(a == 0));
            row[6] = f64::from(u8::from(rng.random_bool(0.3)));
            let t: f64 = StandardNormal.sample(&mut rng);
            row[7] = t;
            row[8] = 0.5 * t + 0.1;
            row[9] = if b == 1 { 1.0 } else { -1.0 };
        }
        (x, layout)
    }

    fn cfg(epochs: usize) -> ModelConfig {
        ModelConfig {
            encoder_hidden: vec![16, 8],
            latent_dim: 2,
            decoder_hidden: vec![8, 16],
            batch_size: 32,
            epochs,
            seed: 5,
            beta: 1e-3,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn zero_epochs_returns_initial_model() {
        let (x, layout) = toy(50, 1);
        let (model, report) = train_on(x.view(), Arc::clone(&layout), &cfg(0), None).unwrap();
        assert!(report.epochs.is_empty());
        assert_eq!(model, BetaVae::new(layout, &cfg(0)).unwrap());
    }

    #[test]
    fn loss_decreases_and_runs_are_reproducible() {
        let (x, layout) = toy(300, 2);
        let (m1, r1) = train_on(x.view(), Arc::clone(&layout), &cfg(30), None).unwrap();
        let (m2, r2) = train_on(x.view(), layout, &cfg(30), None).unwrap();
        assert_eq!(r1.epochs.len(), 30);
        assert!(r1.epochs.last().unwrap().total < r1.epochs[0].total);
        assert_eq!(r1.checkpoint_digest, r2.checkpoint_digest);
        assert_eq!(m1, m2);
    }

    #[test]
    fn divergence_is_reported() {
        let (x, layout) = toy(64, 3);
        let mut c = cfg(3);
        c.learning_rate = 1e12;
        c.beta = 1.0;
        match train_on(x.view(), layout, &c, None) {
            Err(Error::NonFiniteLoss { .. }) | Err(Error::NonFiniteGradient(_)) => {}
            other => panic!("expected divergence error, got {:?}", other.map(|r| r.1)),
        }
    }

    #[test]
    fn empty_and_mismatched_inputs() {
        let (x, layout) = toy(10, 4);
        assert!(train_on(
            x.slice(ndarray::s![0..0, ..]),
            Arc::clone(&layout),
            &cfg(1),
            None
        )
        .is_err());
        assert!(train_on(x.slice(ndarray::s![.., 0..5]), layout, &cfg(1), None).is_err());
    }
}
