//! Benchmark fixtures shared by the criterion targets in `benches/`.

use td2ip_core::data::{Batch, TrainSample};
use td2ip_core::metrics::linalg::SquareMatrix;
use td2ip_core::model::ModelConfig;
use td2ip_core::Tensor;

/// Deterministic pseudo-random values in `[-1, 1)` without pulling in an RNG.
pub fn filled(shape: &[usize], salt: u64) -> Tensor {
    let n: usize = shape.iter().product();
    let mut state = salt.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1);
    let data = (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 52) as f64 - 1.0
        })
        .collect();
    Tensor::new(shape.to_vec(), data).expect("shape matches data")
}

pub fn batch(cfg: &ModelConfig, n: usize) -> Batch {
    let samples: Vec<TrainSample> = (0..n)
        .map(|i| {
            TrainSample::new(
                filled(&[cfg.history, cfg.joints, 3], 2 * i as u64),
                filled(&[cfg.future, cfg.joints, 3], 2 * i as u64 + 1),
            )
            .expect("consistent sample")
        })
        .collect();
    Batch::from_samples(&samples).expect("consistent batch")
}

/// `BᵀB / n`, symmetric positive semi-definite.
pub fn psd(n: usize) -> SquareMatrix {
    let b = filled(&[n, n], 7);
    let mut m = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let v: f64 = (0..n).map(|k| b.at(&[k, i]) * b.at(&[k, j])).sum();
            m.set(i, j, v / n as f64);
        }
    }
    m
}
