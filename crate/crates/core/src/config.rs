//! JSON run configuration: one file drives training, evaluation and ablation.
//!
//! ```json
//! {
//!   "seed": 7,
//!   "data":  { "history": 10, "future": 10, "joints": 8, "fps": 25, "stride": 10, "normalize": true },
//!   "model": { "embed_hidden": 32, "embed_dim": 16, "feature_dim": 32, "encoder": "mlp",
//!              "encoder_layers": 2, "decoder_mode": "decoupled", "activation": "relu",
//!              "residual_last_frame": true },
//!   "train": { "epochs": 50, "batch_size": 16, "learning_rate": 0.001, "optimizer": "adam",
//!              "loss_terms": ["forward", "reverse"], "squared_loss": true,
//!              "clip_grad_norm": null, "ablation_seeds": 3 },
//!   "eval":  { "horizons_ms": [80, 160, 320, 400], "all_frames_average": false }
//! }
//! ```
//!
//! Every section and key is optional; unknown keys are rejected.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::WindowSpec;
use crate::diffcore::Activation;
use crate::error::{Error, Result};
use crate::metrics::HorizonSpec;
use crate::model::{DecoderMode, EncoderKind, ModelConfig};
use crate::training::{EvalSpec, LossTerm, OptimizerKind, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    pub history: usize,
    pub future: usize,
    pub joints: usize,
    pub fps: f64,
    /// Window stride in frames; defaults to `future`.
    pub stride: Option<usize>,
    pub normalize: bool,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            history: 10,
            future: 25,
            joints: 22,
            fps: 25.0,
            stride: None,
            normalize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub embed_hidden: usize,
    pub embed_dim: usize,
    pub feature_dim: usize,
    pub encoder: EncoderKind,
    pub encoder_layers: usize,
    pub decoder_mode: DecoderMode,
    pub activation: Activation,
    pub residual_last_frame: bool,
}

impl Default for ModelSection {
    fn default() -> Self {
        let m = ModelConfig::default();
        ModelSection {
            embed_hidden: m.embed_hidden,
            embed_dim: m.embed_dim,
            feature_dim: m.feature_dim,
            encoder: m.encoder,
            encoder_layers: m.encoder_layers,
            decoder_mode: m.decoder_mode,
            activation: m.activation,
            residual_last_frame: m.residual_last_frame,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub loss_terms: Vec<LossTerm>,
    pub squared_loss: bool,
    pub clip_grad_norm: Option<f64>,
    /// Seeds per variant in an ablation: `seed, seed+1, …`.
    pub ablation_seeds: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSection {
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            optimizer: t.optimizer,
            loss_terms: t.loss_terms,
            squared_loss: t.squared_loss,
            clip_grad_norm: t.clip_grad_norm,
            ablation_seeds: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub horizons_ms: Vec<f64>,
    pub all_frames_average: bool,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            horizons_ms: HorizonSpec::default().horizons_ms,
            all_frames_average: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub data: DataSection,
    pub model: ModelSection,
    pub train: TrainSection,
    pub eval: EvalSection,
}

impl RunConfig {
    /// Parses and validates.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Every field filled in, defaults included.
    pub fn to_json(&self) -> String {
        let mut resolved = self.clone();
        resolved.data.stride = Some(self.stride());
        serde_json::to_string_pretty(&resolved).expect("config serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn stride(&self) -> usize {
        self.data.stride.unwrap_or(self.data.future)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("data.history", self.data.history),
            ("data.future", self.data.future),
            ("data.joints", self.data.joints),
            ("data.stride", self.stride()),
            ("model.embed_hidden", self.model.embed_hidden),
            ("model.embed_dim", self.model.embed_dim),
            ("model.feature_dim", self.model.feature_dim),
            ("model.encoder_layers", self.model.encoder_layers),
            ("train.epochs", self.train.epochs),
            ("train.batch_size", self.train.batch_size),
            ("train.ablation_seeds", self.train.ablation_seeds),
        ];
        for (field, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{field} must be at least 1")));
            }
        }
        if !(self.data.fps > 0.0 && self.data.fps.is_finite()) {
            return Err(Error::Config(format!("data.fps must be positive, got {}", self.data.fps)));
        }
        self.train_config().validate()?;
        self.model_config().validate()?;
        if self.eval.horizons_ms.is_empty() && !self.eval.all_frames_average {
            return Err(Error::Config("eval.horizons_ms must not be empty".into()));
        }
        self.horizon_spec()
            .frames(self.data.future)
            .map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("eval.horizons_ms: {msg}")),
                other => other,
            })?;
        Ok(())
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            history: self.data.history,
            future: self.data.future,
            joints: self.data.joints,
            embed_hidden: self.model.embed_hidden,
            embed_dim: self.model.embed_dim,
            feature_dim: self.model.feature_dim,
            encoder: self.model.encoder,
            encoder_layers: self.model.encoder_layers,
            decoder_mode: self.model.decoder_mode,
            activation: self.model.activation,
            residual_last_frame: self.model.residual_last_frame,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.train.epochs,
            batch_size: self.train.batch_size,
            learning_rate: self.train.learning_rate,
            optimizer: self.train.optimizer,
            loss_terms: self.train.loss_terms.clone(),
            squared_loss: self.train.squared_loss,
            clip_grad_norm: self.train.clip_grad_norm,
            seed: self.seed,
        }
    }

    pub fn window_spec(&self) -> WindowSpec {
        WindowSpec {
            history: self.data.history,
            future: self.data.future,
            stride: self.stride(),
            normalize: self.data.normalize,
        }
    }

    pub fn horizon_spec(&self) -> HorizonSpec {
        HorizonSpec {
            horizons_ms: self.eval.horizons_ms.clone(),
            fps: self.data.fps,
        }
    }

    pub fn eval_spec(&self) -> EvalSpec {
        EvalSpec {
            horizons: self.horizon_spec(),
            all_frames_average: self.eval.all_frames_average,
        }
    }

    /// `seed, seed+1, …` for the configured number of ablation seeds.
    pub fn ablation_seeds(&self) -> Vec<u64> {
        (0..self.train.ablation_seeds as u64).map(|i| self.seed.wrapping_add(i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_the_default() {
        let cfg = RunConfig::from_json("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.stride(), 25);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = RunConfig::from_json(r#"{"train": {"epoch": 3}}"#).unwrap_err().to_string();
        assert!(err.contains("epoch"), "{err}");
    }

    #[test]
    fn horizon_beyond_future_names_field() {
        let err = RunConfig::from_json(r#"{"data": {"future": 10}}"#).unwrap_err().to_string();
        assert!(err.contains("eval.horizons_ms") && err.contains("560 ms"), "{err}");
    }

    #[test]
    fn zero_epochs_named() {
        let err = RunConfig::from_json(r#"{"train": {"epochs": 0}}"#).unwrap_err().to_string();
        assert!(err.contains("train.epochs"), "{err}");
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg = RunConfig::from_json(r#"{"seed": 3, "data": {"future": 25, "stride": null}}"#).unwrap();
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back.stride(), 25);
        assert_eq!(back.model_config(), cfg.model_config());
        assert_eq!(back.train_config(), cfg.train_config());
        assert_eq!(back.seed, 3);
    }
}
