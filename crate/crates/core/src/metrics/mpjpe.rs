use serde::{Deserialize, Serialize};

use crate::diffcore::Tensor;
use crate::error::{Error, Result};

/// Prediction horizons in milliseconds and the frame rate used to map them
/// onto future frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonSpec {
    pub horizons_ms: Vec<f64>,
    pub fps: f64,
}

impl Default for HorizonSpec {
    fn default() -> Self {
        HorizonSpec {
            horizons_ms: vec![80.0, 160.0, 320.0, 400.0, 560.0, 1000.0],
            fps: 25.0,
        }
    }
}

impl HorizonSpec {
    /// 1-based future frame of every horizon, checked against `future` frames.
    pub fn frames(&self, future: usize) -> Result<Vec<usize>> {
        self.horizons_ms
            .iter()
            .map(|&ms| {
                let f = horizon_to_frame(ms, self.fps)?;
                if f > future {
                    Err(Error::Config(format!(
                        "horizon {} ms maps to future frame {f} at {} fps, beyond the {future} predicted frames",
                        format_ms(ms),
                        self.fps
                    )))
                } else {
                    Ok(f)
                }
            })
            .collect()
    }
}

/// JSON key for a horizon: integral values print without a fraction.
pub fn format_ms(ms: f64) -> String {
    if ms.fract() == 0.0 {
        format!("{}", ms as i64)
    } else {
        format!("{ms}")
    }
}

/// `round(ms·fps/1000)`, at least 1.
pub fn horizon_to_frame(ms: f64, fps: f64) -> Result<usize> {
    if !(ms > 0.0 && ms.is_finite() && fps > 0.0 && fps.is_finite()) {
        return Err(Error::Config(format!(
            "horizon needs ms > 0 and fps > 0 (got {ms}, {fps})"
        )));
    }
    Ok(((ms * fps / 1000.0).round() as usize).max(1))
}

fn check_pair(preds: &Tensor, gts: &Tensor) -> Result<()> {
    let s = preds.shape();
    if s != gts.shape() || s.len() != 4 || s[3] != 3 {
        return Err(Error::dim(
            "mpjpe",
            format!(
                "predictions {:?} and ground truth {:?} must both be N×T_f×J×3",
                s,
                gts.shape()
            ),
        ));
    }
    Ok(())
}

/// Mean Euclidean joint error at 1-based future frame `t`, averaged over
/// samples and joints.
pub fn mpjpe_at_frame(preds: &Tensor, gts: &Tensor, t: usize) -> Result<f64> {
    check_pair(preds, gts)?;
    let s = preds.shape();
    let (n, tf, j) = (s[0], s[1], s[2]);
    if t == 0 || t > tf {
        return Err(Error::dim(
            "mpjpe",
            format!("frame {t} outside 1..={tf}"),
        ));
    }
    let frame = j * 3;
    let mut total = 0.0;
    for i in 0..n {
        let base = (i * tf + t - 1) * frame;
        let p = &preds.data()[base..base + frame];
        let g = &gts.data()[base..base + frame];
        for (a, b) in p.chunks(3).zip(g.chunks(3)) {
            total += ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
        }
    }
    Ok(total / (n * j) as f64)
}

/// Arithmetic mean of [`mpjpe_at_frame`] over the listed horizons.
pub fn mpjpe_average(preds: &Tensor, gts: &Tensor, spec: &HorizonSpec) -> Result<f64> {
    check_pair(preds, gts)?;
    let frames = spec.frames(preds.shape()[1])?;
    if frames.is_empty() {
        return Err(Error::Config("no horizons configured".into()));
    }
    let mut sum = 0.0;
    for &f in &frames {
        sum += mpjpe_at_frame(preds, gts, f)?;
    }
    Ok(sum / frames.len() as f64)
}

/// Mean of [`mpjpe_at_frame`] over every predicted frame.
pub fn mpjpe_all_frames(preds: &Tensor, gts: &Tensor) -> Result<f64> {
    check_pair(preds, gts)?;
    let tf = preds.shape()[1];
    let mut sum = 0.0;
    for f in 1..=tf {
        sum += mpjpe_at_frame(preds, gts, f)?;
    }
    Ok(sum / tf as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizon_mapping() {
        assert_eq!(horizon_to_frame(80.0, 25.0).unwrap(), 2);
        assert_eq!(horizon_to_frame(1000.0, 25.0).unwrap(), 25);
        assert_eq!(horizon_to_frame(10.0, 25.0).unwrap(), 1);
        assert!(horizon_to_frame(0.0, 25.0).is_err());
    }

    #[test]
    fn horizon_beyond_future_is_config_error() {
        let spec = HorizonSpec::default();
        let err = spec.frames(10).unwrap_err().to_string();
        assert!(err.contains("560 ms"), "{err}");
        assert_eq!(spec.frames(25).unwrap(), vec![2, 4, 8, 10, 14, 25]);
    }

    #[test]
    fn three_four_five() {
        let g = Tensor::zeros([2, 3, 4, 3]);
        let p = Tensor::new([2, 3, 4, 3], g.data().chunks(3).flat_map(|_| [3.0, 4.0, 0.0]).collect()).unwrap();
        for t in 1..=3 {
            assert_eq!(mpjpe_at_frame(&p, &g, t).unwrap(), 5.0);
        }
        assert_eq!(mpjpe_at_frame(&g, &g, 1).unwrap(), 0.0);
        assert!(mpjpe_at_frame(&p, &g, 4).is_err());
    }

    #[test]
    fn average_of_two_horizons() {
        // frame 1 error 4, frame 2 error 6
        let g = Tensor::zeros([1, 2, 1, 3]);
        let p = Tensor::new([1, 2, 1, 3], vec![4.0, 0.0, 0.0, 0.0, 6.0, 0.0]).unwrap();
        let spec = HorizonSpec {
            horizons_ms: vec![40.0, 80.0],
            fps: 25.0,
        };
        assert_eq!(mpjpe_average(&p, &g, &spec).unwrap(), 5.0);
        assert_eq!(mpjpe_all_frames(&p, &g).unwrap(), 5.0);
    }
}
