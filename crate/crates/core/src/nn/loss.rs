//! Reconstruction losses. Each is averaged over the rows of the batch and
//! summed over the features of its type; gradient helpers return the
//! derivative w.r.t. the pre-activation (logit) of the matching head,
//! multiplied by `scale` (normally `1 / n`).

use std::ops::Range;

use ndarray::{Array2, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

/// Probabilities are clamped to `[LOG_CLAMP, 1]` (categorical) or
/// `[LOG_CLAMP, 1 - LOG_CLAMP]` (boolean) before taking logs.
pub const LOG_CLAMP: f64 = 1e-7;

/// Components of the training objective for one batch.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub l_cat: f64,
    pub l_bool: f64,
    pub l_cont: f64,
    pub l_rec: f64,
    pub l_kl: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn new(l_cat: f64, l_bool: f64, l_cont: f64, l_kl: f64, beta: f64) -> LossBreakdown {
        let l_rec = l_cat + l_bool + l_cont;
        LossBreakdown {
            l_cat,
            l_bool,
            l_cont,
            l_rec,
            l_kl,
            total: l_rec + beta * l_kl,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.total.is_finite() && self.l_rec.is_finite() && self.l_kl.is_finite()
    }
}

fn rows(a: &ArrayView2<f64>) -> f64 {
    a.nrows().max(1) as f64
}

/// Categorical cross-entropy summed over the one-hot `groups`.
pub fn categorical_loss(
    target: ArrayView2<f64>,
    probs: ArrayView2<f64>,
    groups: &[Range<usize>],
) -> f64 {
    let mut sum = 0.0;
    for (x, p) in target.rows().into_iter().zip(probs.rows()) {
        for g in groups {
            for j in g.clone() {
                if x[j] != 0.0 {
                    sum -= x[j] * p[j].max(LOG_CLAMP).ln();
                }
            }
        }
    }
    sum / rows(&target)
}

/// Gradient of [`categorical_loss`] w.r.t. the softmax logits.
///
/// Within a group, with `U` the unclamped entries and `s = sum_{k in U} x_k`,
/// the derivative is `p_j * s - [j in U] * x_j`.
pub fn categorical_logit_grad(
    target: ArrayView2<f64>,
    probs: ArrayView2<f64>,
    groups: &[Range<usize>],
    scale: f64,
) -> Array2<f64> {
    let mut grad = Array2::zeros(probs.raw_dim());
    for ((x, p), mut d) in target
        .rows()
        .into_iter()
        .zip(probs.rows())
        .zip(grad.rows_mut())
    {
        for g in groups {
            let s: f64 = g.clone().filter(|&j| p[j] > LOG_CLAMP).map(|j| x[j]).sum();
            for j in g.clone() {
                let own = if p[j] > LOG_CLAMP { x[j] } else { 0.0 };
                d[j] = scale * (p[j] * s - own);
            }
        }
    }
    grad
}

fn clamp_bool(p: f64) -> f64 {
    p.clamp(LOG_CLAMP, 1.0 - LOG_CLAMP)
}

/// Binary cross-entropy summed over boolean columns.
pub fn boolean_loss(target: ArrayView2<f64>, probs: ArrayView2<f64>) -> f64 {
    let mut sum = 0.0;
    Zip::from(&target).and(&probs).for_each(|&x, &p| {
        let c = clamp_bool(p);
        sum -= x * c.ln() + (1.0 - x) * (1.0 - c).ln();
    });
    sum / rows(&target)
}

/// Gradient of [`boolean_loss`] w.r.t. the sigmoid logits: `p - x` where the
/// clamp is inactive, zero where it is.
pub fn boolean_logit_grad(
    target: ArrayView2<f64>,
    probs: ArrayView2<f64>,
    scale: f64,
) -> Array2<f64> {
    Zip::from(&target).and(&probs).map_collect(|&x, &p| {
        if p > LOG_CLAMP && p < 1.0 - LOG_CLAMP {
            scale * (p - x)
        } else {
            0.0
        }
    })
}

/// Squared error summed over continuous columns.
pub fn continuous_loss(target: ArrayView2<f64>, pred: ArrayView2<f64>) -> f64 {
    let mut sum = 0.0;
    Zip::from(&target)
        .and(&pred)
        .for_each(|&x, &y| sum += (x - y) * (x - y));
    sum / rows(&target)
}

pub fn continuous_grad(target: ArrayView2<f64>, pred: ArrayView2<f64>, scale: f64) -> Array2<f64> {
    Zip::from(&target)
        .and(&pred)
        .map_collect(|&x, &y| scale * 2.0 * (y - x))
}
