#![allow(dead_code)]

use rand::Rng as _;
use td2ip_core::data::{Batch, TrainSample};
use td2ip_core::model::{DecoderMode, EncoderKind, ModelConfig};
use td2ip_core::{rng, Activation, Tensor};

pub const ENCODERS: [EncoderKind; 3] = [EncoderKind::Mlp, EncoderKind::Gru, EncoderKind::Gcn];
pub const MODES: [DecoderMode; 2] = [DecoderMode::Shared, DecoderMode::Decoupled];

/// T_p=4, T_f=3, J=3 toy model.
pub fn toy_config(encoder: EncoderKind, mode: DecoderMode, activation: Activation) -> ModelConfig {
    ModelConfig {
        history: 4,
        future: 3,
        joints: 3,
        embed_hidden: 5,
        embed_dim: 4,
        feature_dim: 6,
        encoder,
        encoder_layers: 2,
        decoder_mode: mode,
        activation,
        residual_last_frame: true,
    }
}

pub fn random_tensor(shape: &[usize], seed: u64, name: &str) -> Tensor {
    let mut r = rng::stream(seed, name);
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap()
}

pub fn random_samples(n: usize, cfg: &ModelConfig, seed: u64) -> Vec<TrainSample> {
    (0..n)
        .map(|i| {
            TrainSample::new(
                random_tensor(&[cfg.history, cfg.joints, 3], seed, &format!("x/{i}")),
                random_tensor(&[cfg.future, cfg.joints, 3], seed, &format!("y/{i}")),
            )
            .unwrap()
        })
        .collect()
}

pub fn random_batch(n: usize, cfg: &ModelConfig, seed: u64) -> Batch {
    Batch::from_samples(&random_samples(n, cfg, seed)).unwrap()
}
