#![allow(dead_code)]

use std::sync::Arc;

use betavae_ids::dataset::Layout;
use betavae_ids::model::{BetaVae, ModelConfig};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Input width 12: one-hot groups of 3 and 2, three booleans, four reals.
pub fn tiny_layout() -> Arc<Layout> {
    Arc::new(Layout::from_sizes(&[3, 2], 3, 4))
}

pub fn tiny_model(seed: u64) -> BetaVae {
    let cfg = ModelConfig {
        encoder_hidden: vec![7, 5],
        latent_dim: 2,
        decoder_hidden: vec![5, 7],
        seed,
        ..ModelConfig::default()
    };
    BetaVae::new(tiny_layout(), &cfg).unwrap()
}

/// Random rows that respect the layout: valid one-hot blocks (occasionally
/// all-zero), 0/1 booleans, standard-normal reals.
pub fn random_batch(layout: &Layout, rows: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let mut x = Array2::zeros((rows, layout.width()));
    for mut row in x.rows_mut() {
        for g in layout.group_ranges() {
            if rng.random_bool(0.9) {
                let j = rng.random_range(g.clone());
                row[j] = 1.0;
            }
        }
        for b in layout.boolean_range() {
            row[b] = f64::from(u8::from(rng.random_bool(0.5)));
        }
        for c in layout.continuous_range() {
            row[c] = rng.sample(StandardNormal);
        }
    }
    x
}

pub fn normal_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.sample(StandardNormal))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Largest relative error between the analytic gradient and a central
/// finite difference, over every parameter of the model.
pub fn max_gradient_error(
    model: &BetaVae,
    x: &Array2<f64>,
    noise: &Array2<f64>,
    beta: f64,
    h: f64,
) -> (f64, String) {
    let (_, grads) = model
        .loss_and_gradient(x.view(), noise.view(), beta)
        .unwrap();
    let analytic = grads.grad_blocks();
    let mut probe = model.clone();
    let mut worst = (0.0f64, String::new());
    for (b, block) in analytic.iter().enumerate() {
        for i in 0..block.values.len() {
            let original = probe.params.blocks_mut()[b][i];
            probe.params.blocks_mut()[b][i] = original + h;
            let up = probe
                .forward_train(x.view(), noise.view(), beta)
                .unwrap()
                .loss
                .total;
            probe.params.blocks_mut()[b][i] = original - h;
            let down = probe
                .forward_train(x.view(), noise.view(), beta)
                .unwrap()
                .loss
                .total;
            probe.params.blocks_mut()[b][i] = original;
            let numeric = (up - down) / (2.0 * h);
            let a = block.values[i];
            let denom = a.abs().max(numeric.abs());
            let rel = if denom == 0.0 {
                0.0
            } else {
                (a - numeric).abs() / denom
            };
            if rel > worst.0 {
                worst = (
                    rel,
                    format!("{}[{i}]: analytic {a:e}, numeric {numeric:e}", block.name),
                );
            }
        }
    }
    worst
}
