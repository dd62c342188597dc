use std::ops::Range;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use crate::error::{Error, Result};

/// Affine layer `y = W x + b` with `W` stored out × in.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Activation {
    Relu,
    Linear,
    Sigmoid,
    /// Independent softmax over each range of the output.
    SoftmaxGroups(Vec<Range<usize>>),
}

impl DenseLayer {
    pub fn zeros(input: usize, output: usize) -> DenseLayer {
        DenseLayer {
            weights: Array2::zeros((output, input)),
            bias: Array1::zeros(output),
        }
    }

    /// Uniform fan-in initialization, `U(-1/sqrt(in), 1/sqrt(in))` for
    /// weights and bias alike.
    pub fn init<R: Rng + ?Sized>(input: usize, output: usize, rng: &mut R) -> DenseLayer {
        let bound = 1.0 / (input as f64).sqrt();
        let mut draw = || rng.random_range(-bound..bound);
        let weights = Array2::from_shape_simple_fn((output, input), &mut draw);
        let bias = Array1::from_shape_simple_fn(output, &mut draw);
        DenseLayer { weights, bias }
    }

    pub fn input_size(&self) -> usize {
        self.weights.ncols()
    }

    pub fn output_size(&self) -> usize {
        self.weights.nrows()
    }

    /// Pre-activations for a batch (rows are samples).
    /// `input · Wᵀ + b`, always in row-major layout.
    pub fn affine(&self, input: ArrayView2<f64>) -> Array2<f64> {
        let mut out = input.dot(&self.weights.t());
        // a single-column input counts as column-major, and so does the product
        if !out.is_standard_layout() {
            out = out.as_standard_layout().into_owned();
        }
        out += &self.bias;
        out
    }

    /// Accumulates parameter gradients for upstream gradient `grad_out`
    /// (w.r.t. pre-activations) and returns the gradient w.r.t. the input.
    pub(crate) fn backward(
        &self,
        input: ArrayView2<f64>,
        grad_out: ArrayView2<f64>,
        grad: &mut DenseLayer,
        need_input_grad: bool,
    ) -> Option<Array2<f64>> {
        grad.weights += &grad_out.t().dot(&input);
        grad.bias += &grad_out.sum_axis(Axis(0));
        need_input_grad.then(|| grad_out.dot(&self.weights))
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }
}

/// Forward pass of a single vector through one layer.
pub fn dense_forward(
    layer: &DenseLayer,
    input: &[f64],
    activation: &Activation,
) -> Result<Vec<f64>> {
    if input.len() != layer.input_size() {
        return Err(Error::Shape(format!(
            "layer expects {} inputs, got {}",
            layer.input_size(),
            input.len()
        )));
    }
    let x = ArrayView2::from_shape((1, input.len()), input).expect("contiguous slice");
    let mut y = layer.affine(x);
    match activation {
        Activation::Relu => relu_in_place(&mut y),
        Activation::Linear => {}
        Activation::Sigmoid => y.mapv_inplace(sigmoid),
        Activation::SoftmaxGroups(groups) => {
            if let Some(bad) = groups.iter().find(|g| g.end > y.ncols()) {
                return Err(Error::Shape(format!(
                    "softmax group {bad:?} exceeds output width {}",
                    y.ncols()
                )));
            }
            softmax_groups_in_place(&mut y, groups);
        }
    }
    Ok(y.into_raw_vec_and_offset().0)
}

pub fn relu_in_place(a: &mut Array2<f64>) {
    a.mapv_inplace(|v| v.max(0.0));
}

pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Row-wise softmax over each column range, max-shifted.
pub fn softmax_groups_in_place(a: &mut Array2<f64>, groups: &[Range<usize>]) {
    for mut row in a.rows_mut() {
        let row = row.as_slice_mut().expect("standard layout");
        for g in groups {
            let block = &mut row[g.clone()];
            let max = block.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for v in block.iter_mut() {
                *v = (*v - max).exp();
                sum += *v;
            }
            for v in block.iter_mut() {
                *v /= sum;
            }
        }
    }
}
