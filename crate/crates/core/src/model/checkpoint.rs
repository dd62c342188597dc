use std::path::Path;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{BetaVae, ModelConfig, VaeParams};
use crate::container;
use crate::dataset::{Layout, PreprocessorManifest};
use crate::error::{Error, Result};
use crate::nn::DenseLayer;
use crate::Conventions;

const MAGIC: &[u8; 8] = b"BVIDSCKP";
const VERSION: u32 = 1;

/// A trained model with everything needed to score new data.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: BetaVae,
    pub config: ModelConfig,
    pub manifest: Option<PreprocessorManifest>,
}

#[derive(Serialize, Deserialize)]
struct LayerShape {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    layout: Layout,
    manifest: Option<PreprocessorManifest>,
    conventions: Conventions,
    layers: Vec<LayerShape>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        if !self.model.params.is_finite() {
            return Err(Error::Format(
                "refusing to save non-finite parameters".into(),
            ));
        }
        let layers = self
            .model
            .params
            .layers()
            .into_iter()
            .map(|(name, l)| LayerShape {
                name,
                rows: l.output_size(),
                cols: l.input_size(),
            })
            .collect();
        let header = Header {
            config: self.config.clone(),
            layout: (**self.model.layout()).clone(),
            manifest: self.manifest.clone(),
            conventions: Conventions::default(),
            layers,
        };
        let blocks = self.model.params.blocks();
        let payload = blocks.iter().flat_map(|(_, b)| b.iter().copied());
        container::encode(MAGIC, VERSION, &header, payload)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
        let decoded: container::Decoded<Header> = container::decode(bytes, MAGIC, VERSION)?;
        let header = decoded.header;
        if header.conventions != Conventions::default() {
            return Err(Error::Format(
                "checkpoint was written under different loss/encoding conventions".into(),
            ));
        }
        let mut values = decoded.payload.into_iter();
        let mut layers = Vec::with_capacity(header.layers.len());
        for shape in &header.layers {
            let w: Vec<f64> = values.by_ref().take(shape.rows * shape.cols).collect();
            let b: Vec<f64> = values.by_ref().take(shape.rows).collect();
            if w.len() != shape.rows * shape.cols || b.len() != shape.rows {
                return Err(Error::Format(format!("layer {} is truncated", shape.name)));
            }
            layers.push((
                shape.name.as_str(),
                DenseLayer {
                    weights: Array2::from_shape_vec((shape.rows, shape.cols), w)
                        .map_err(|e| Error::Format(e.to_string()))?,
                    bias: Array1::from(b),
                },
            ));
        }
        if values.next().is_some() {
            return Err(Error::Format("trailing parameter data".into()));
        }
        let n_enc = header.config.encoder_hidden.len();
        let n_dec = header.config.decoder_hidden.len();
        if layers.len() != n_enc + n_dec + 3 {
            return Err(Error::Format(format!(
                "{} layers for a {n_enc}/{n_dec} hidden-layer configuration",
                layers.len()
            )));
        }
        let mut it = layers.into_iter().map(|(_, l)| l);
        let encoder = it.by_ref().take(n_enc).collect();
        let mu_head = it.next().unwrap();
        let logvar_head = it.next().unwrap();
        let decoder = it.by_ref().take(n_dec).collect();
        let output = it.next().unwrap();
        let model = BetaVae::from_params(
            Arc::new(header.layout),
            VaeParams {
                encoder,
                mu_head,
                logvar_head,
                decoder,
                output,
            },
        )?;
        Ok(Checkpoint {
            model,
            config: header.config,
            manifest: header.manifest,
        })
    }

    /// Hex SHA-256 of the serialized checkpoint.
    pub fn digest(&self) -> Result<String> {
        Ok(container::trailing_digest(&self.to_bytes()?))
    }
}

/// Writes a checkpoint file and returns its digest.
pub fn save_checkpoint(checkpoint: &Checkpoint, path: impl AsRef<Path>) -> Result<String> {
    let bytes = checkpoint.to_bytes()?;
    std::fs::write(path, &bytes)?;
    Ok(container::trailing_digest(&bytes))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    Checkpoint::from_bytes(&std::fs::read(path)?)
}
