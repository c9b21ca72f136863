use serde::{Deserialize, Serialize};

use super::TrainSample;
use crate::diffcore::Tensor;

const STD_FLOOR: f64 = 1e-8;

/// Per-axis (x, y, z) mean and standard deviation of training history frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

impl NormStats {
    pub fn identity() -> Self {
        NormStats {
            mean: [0.0; 3],
            std: [1.0; 3],
        }
    }

    /// Statistics over the `X` frames of `samples` only.
    pub fn from_histories(samples: &[TrainSample]) -> Self {
        let mut sum = [0.0; 3];
        let mut count = 0usize;
        for s in samples {
            for p in s.x.data().chunks(3) {
                for a in 0..3 {
                    sum[a] += p[a];
                }
                count += 1;
            }
        }
        if count == 0 {
            return Self::identity();
        }
        let mean = sum.map(|v| v / count as f64);
        let mut var = [0.0; 3];
        for s in samples {
            for p in s.x.data().chunks(3) {
                for a in 0..3 {
                    var[a] += (p[a] - mean[a]).powi(2);
                }
            }
        }
        let std = var.map(|v| (v / count as f64).sqrt().max(STD_FLOOR));
        NormStats { mean, std }
    }

    pub fn normalize(&self, t: &Tensor) -> Tensor {
        self.apply(t, |v, a| (v - self.mean[a]) / self.std[a])
    }

    pub fn denormalize(&self, t: &Tensor) -> Tensor {
        self.apply(t, |v, a| v * self.std[a] + self.mean[a])
    }

    fn apply(&self, t: &Tensor, f: impl Fn(f64, usize) -> f64) -> Tensor {
        assert_eq!(t.shape().last(), Some(&3), "coordinates must be the trailing axis");
        let data = t.data().iter().enumerate().map(|(i, &v)| f(v, i % 3)).collect();
        Tensor::new(t.shape().to_vec(), data).expect("shape preserved")
    }

    pub fn normalize_sample(&self, s: &TrainSample) -> TrainSample {
        TrainSample {
            x: self.normalize(&s.x),
            y: self.normalize(&s.y),
            x_r: self.normalize(&s.x_r),
            y_r: self.normalize(&s.y_r),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(x: Tensor) -> TrainSample {
        TrainSample::new(x.clone(), x).unwrap()
    }

    #[test]
    fn constant_data_normalizes_to_zero() {
        let s = sample(Tensor::full([4, 2, 3], 7.5));
        let stats = NormStats::from_histories(std::slice::from_ref(&s));
        assert_eq!(stats.std, [1e-8; 3]);
        assert!(stats.normalize(&s.x).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn round_trip_identity() {
        let x = Tensor::new([2, 2, 3], (0..12).map(|i| (i * i) as f64 * 13.7 - 40.0).collect()).unwrap();
        let stats = NormStats::from_histories(&[sample(x.clone())]);
        let back = stats.denormalize(&stats.normalize(&x));
        assert!(back.max_abs_diff(&x) <= 1e-9);
    }

    #[test]
    fn only_histories_contribute() {
        let x = Tensor::zeros([1, 1, 3]);
        let y = Tensor::full([1, 1, 3], 1000.0);
        let s = TrainSample::new(x, y).unwrap();
        let stats = NormStats::from_histories(&[s]);
        assert_eq!(stats.mean, [0.0; 3]);
    }
}
