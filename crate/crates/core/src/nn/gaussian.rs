use serde::{Deserialize, Serialize};

/// Diagonal Gaussian posterior: mean and log-variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub mu: Vec<f64>,
    pub logvar: Vec<f64>,
}

impl GaussianParams {
    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

/// `z = mu + exp(logvar / 2) * noise`.
pub fn reparameterize(g: &GaussianParams, noise: &[f64]) -> Vec<f64> {
    assert_eq!(
        noise.len(),
        g.dim(),
        "noise length must equal latent dimension"
    );
    g.mu.iter()
        .zip(&g.logvar)
        .zip(noise)
        .map(|((m, lv), e)| m + (0.5 * lv).exp() * e)
        .collect()
}

/// KL divergence from `N(mu, diag(exp(logvar)))` to `N(0, I)`.
pub fn kl_divergence(g: &GaussianParams) -> f64 {
    0.5 * g
        .mu
        .iter()
        .zip(&g.logvar)
        .map(|(m, lv)| m * m + lv.exp() - 1.0 - lv)
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g(mu: &[f64], logvar: &[f64]) -> GaussianParams {
        GaussianParams {
            mu: mu.to_vec(),
            logvar: logvar.to_vec(),
        }
    }

    #[test]
    fn reparameterize_examples() {
        let p = g(&[0.3, -1.0], &[0.7, -2.0]);
        assert_eq!(reparameterize(&p, &[0.0, 0.0]), p.mu);
        let unit = g(&[1.0, 2.0], &[0.0, 0.0]);
        assert_eq!(reparameterize(&unit, &[0.5, -0.25]), [1.5, 1.75]);
        // exp(ln 2) = 2
        let z = reparameterize(&g(&[0.0], &[2.0 * std::f64::consts::LN_2]), &[1.0]);
        assert!((z[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(&g(&[0.0; 4], &[0.0; 4])), 0.0);
        // 0.5 * (1 + 1 - 1 - 0)
        assert_eq!(kl_divergence(&g(&[1.0], &[0.0])), 0.5);
    }

    proptest! {
        #[test]
        fn kl_is_non_negative(
            mu in prop::collection::vec(-5.0f64..5.0, 1..10),
            seed in prop::collection::vec(-5.0f64..5.0, 10),
        ) {
            let logvar = seed[..mu.len()].to_vec();
            let kl = kl_divergence(&GaussianParams { mu: mu.clone(), logvar: logvar.clone() });
            prop_assert!(kl >= 0.0);
            if mu.iter().chain(&logvar).any(|v| v.abs() > 1e-3) {
                prop_assert!(kl > 0.0);
            }
        }
    }
}
