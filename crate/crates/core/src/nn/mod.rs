//! Dense-network numerics for the fixed β-VAE topology: affine layers and
//! activations, the mixed-type reconstruction losses with their gradients,
//! the Gaussian KL term and reparameterization, and Adam.

mod adam;
mod gaussian;
mod layer;
mod loss;

pub use adam::{AdamConfig, AdamState, GradBlock};
pub use gaussian::{kl_divergence, reparameterize, GaussianParams};
pub use layer::{
    dense_forward, relu_in_place, sigmoid, softmax_groups_in_place, Activation, DenseLayer,
};
pub use loss::{
    boolean_logit_grad, boolean_loss, categorical_logit_grad, categorical_loss, continuous_grad,
    continuous_loss, LossBreakdown, LOG_CLAMP,
};
