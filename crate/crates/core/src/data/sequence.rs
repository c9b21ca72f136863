use crate::diffcore::Tensor;
use crate::error::{Error, Result};

/// `T × J × 3` joint coordinates in millimeters at a fixed frame rate.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionSequence {
    frames: Tensor,
    fps: f64,
}

impl MotionSequence {
    pub fn new(frames: Tensor, fps: f64) -> Result<Self> {
        let s = frames.shape();
        if s.len() != 3 || s[2] != 3 || s[0] == 0 || s[1] == 0 {
            return Err(Error::dim(
                "motion_sequence",
                format!("expected T×J×3 with T, J ≥ 1, got {:?}", s),
            ));
        }
        if !frames.is_finite() {
            return Err(Error::NonFinite {
                context: "motion sequence coordinates".into(),
            });
        }
        if !(fps > 0.0 && fps.is_finite()) {
            return Err(Error::Contract(format!("fps must be positive, got {fps}")));
        }
        Ok(MotionSequence { frames, fps })
    }

    pub fn frames(&self) -> &Tensor {
        &self.frames
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn num_frames(&self) -> usize {
        self.frames.shape()[0]
    }

    pub fn num_joints(&self) -> usize {
        self.frames.shape()[1]
    }
}
