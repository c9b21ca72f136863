use super::{split_sequences, window_split, MotionSequence, NormStats, TrainSample};
use crate::error::{Error, Result};

/// Windowed train/validation samples, already normalized with `stats`.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub train: Vec<TrainSample>,
    pub val: Vec<TrainSample>,
    pub stats: NormStats,
}

/// How sequences become samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSpec {
    pub history: usize,
    pub future: usize,
    pub stride: usize,
    pub normalize: bool,
}

impl Dataset {
    /// Splits whole sequences 80/20 by index, windows each side, and
    /// normalizes both with statistics of the training histories.
    pub fn from_sequences(seqs: &[MotionSequence], spec: WindowSpec) -> Result<Self> {
        if let Some(first) = seqs.first() {
            if let Some(bad) = seqs.iter().find(|s| s.num_joints() != first.num_joints()) {
                return Err(Error::dim(
                    "dataset",
                    format!(
                        "sequences mix {} and {} joints",
                        first.num_joints(),
                        bad.num_joints()
                    ),
                ));
            }
        }
        let (train_seqs, val_seqs) = split_sequences(seqs, 0.8);
        let windows = |set: &[MotionSequence]| -> Result<Vec<TrainSample>> {
            let mut out = Vec::new();
            for s in set {
                out.extend(window_split(s, spec.history, spec.future, spec.stride)?);
            }
            Ok(out)
        };
        let train = windows(&train_seqs)?;
        let val = windows(&val_seqs)?;
        if train.is_empty() {
            return Err(Error::InsufficientData(format!(
                "no training windows of {} frames in {} sequences",
                spec.history + spec.future,
                train_seqs.len()
            )));
        }
        let stats = if spec.normalize {
            NormStats::from_histories(&train)
        } else {
            NormStats::identity()
        };
        Ok(Dataset {
            train: train.iter().map(|s| stats.normalize_sample(s)).collect(),
            val: val.iter().map(|s| stats.normalize_sample(s)).collect(),
            stats,
        })
    }
}
