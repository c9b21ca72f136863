use serde::{Deserialize, Serialize};

use crate::diffcore::Activation;
use crate::error::{Error, Result};

/// Temporal encoder `φ` producing one feature vector per joint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncoderKind {
    /// Dense stack over each joint's flattened history.
    #[default]
    Mlp,
    /// Gated recurrent cell run over frames, per joint.
    Gru,
    /// Graph convolution over joints with a learned adjacency.
    Gcn,
}

/// One decoder for all frames, or separate history and future decoders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderMode {
    Shared,
    #[default]
    Decoupled,
}

/// Architecture of a [`super::Td2ipModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Observed frames `T_p`.
    pub history: usize,
    /// Predicted frames `T_f`.
    pub future: usize,
    pub joints: usize,
    /// Embedding hidden width `D_h`.
    pub embed_hidden: usize,
    /// Embedding output width `D_e`.
    pub embed_dim: usize,
    /// Per-joint feature width `F` of the encoder output.
    pub feature_dim: usize,
    pub encoder: EncoderKind,
    /// Dense or graph layers for the mlp and gcn encoders; the gru encoder is a single cell.
    pub encoder_layers: usize,
    pub decoder_mode: DecoderMode,
    pub activation: Activation,
    pub residual_last_frame: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            history: 10,
            future: 25,
            joints: 22,
            embed_hidden: 32,
            embed_dim: 16,
            feature_dim: 32,
            encoder: EncoderKind::Mlp,
            encoder_layers: 2,
            decoder_mode: DecoderMode::Decoupled,
            activation: Activation::Relu,
            residual_last_frame: true,
        }
    }
}

impl ModelConfig {
    pub fn total_frames(&self) -> usize {
        self.history + self.future
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("history", self.history),
            ("future", self.future),
            ("joints", self.joints),
            ("embed_hidden", self.embed_hidden),
            ("embed_dim", self.embed_dim),
            ("feature_dim", self.feature_dim),
            ("encoder_layers", self.encoder_layers),
        ];
        for (name, v) in dims {
            if v == 0 {
                return Err(Error::Config(format!("model.{name} must be at least 1")));
            }
        }
        Ok(())
    }
}
