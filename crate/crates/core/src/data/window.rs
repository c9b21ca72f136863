use super::MotionSequence;
use crate::diffcore::Tensor;
use crate::error::{Error, Result};

/// One history/future window plus its time-reversed counterpart.
///
/// Shapes: `x` is `T_p×J×3`, `y` is `T_f×J×3`, `x_r` is `T_p×J×3` and
/// `y_r` is `T×J×3` with `T = T_p + T_f`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSample {
    pub x: Tensor,
    pub y: Tensor,
    pub x_r: Tensor,
    pub y_r: Tensor,
}

impl TrainSample {
    pub fn new(x: Tensor, y: Tensor) -> Result<Self> {
        let (x_r, y_r) = make_inverse_sample(&x, &y)?;
        Ok(TrainSample { x, y, x_r, y_r })
    }

    pub fn history_len(&self) -> usize {
        self.x.shape()[0]
    }

    pub fn future_len(&self) -> usize {
        self.y.shape()[0]
    }

    /// Full window `[X; Y]`.
    pub fn full(&self) -> Tensor {
        self.x.concat(&self.y, 0).expect("history and future share joint layout")
    }
}

/// Builds the reversed pair: `P = [X; Y]`, `Y_r` is `P` read backwards in
/// time and `X_r` is the first `T_p` frames of `Y_r`.
pub fn make_inverse_sample(x: &Tensor, y: &Tensor) -> Result<(Tensor, Tensor)> {
    let (xs, ys) = (x.shape(), y.shape());
    if xs.len() != 3 || ys.len() != 3 || xs[1..] != ys[1..] || xs[2] != 3 {
        return Err(Error::dim(
            "make_inverse_sample",
            format!("history {:?} and future {:?} must be T×J×3 with equal J", xs, ys),
        ));
    }
    let (tp, tf) = (xs[0], ys[0]);
    let frame = xs[1] * 3;
    let total = tp + tf;
    let source = |t: usize| -> &[f64] {
        if t < tp {
            &x.data()[t * frame..(t + 1) * frame]
        } else {
            &y.data()[(t - tp) * frame..(t - tp + 1) * frame]
        }
    };
    let mut reversed = Vec::with_capacity(total * frame);
    for t in 0..total {
        reversed.extend_from_slice(source(total - 1 - t));
    }
    let y_r = Tensor::new([total, xs[1], 3], reversed)?;
    let x_r = Tensor::new([tp, xs[1], 3], y_r.data()[..tp * frame].to_vec())?;
    Ok((x_r, y_r))
}

/// Cuts windows of `history + future` frames starting at `0, stride, 2·stride, …`.
/// A sequence shorter than one window yields no samples.
pub fn window_split(
    seq: &MotionSequence,
    history: usize,
    future: usize,
    stride: usize,
) -> Result<Vec<TrainSample>> {
    if history == 0 || future == 0 || stride == 0 {
        return Err(Error::Contract(format!(
            "window_split needs T_p, T_f, stride ≥ 1 (got {history}, {future}, {stride})"
        )));
    }
    let total = history + future;
    let frames = seq.frames();
    let t = seq.num_frames();
    if t < total {
        return Ok(Vec::new());
    }
    (0..=t - total)
        .step_by(stride)
        .map(|start| {
            TrainSample::new(
                frames.slice(0, start, history)?,
                frames.slice(0, start + history, future)?,
            )
        })
        .collect()
}

/// Splits sequences 80/20 by index, whole sequences only.
pub fn split_sequences<T: Clone>(items: &[T], train_fraction: f64) -> (Vec<T>, Vec<T>) {
    let n = items.len();
    let mut n_train = (train_fraction * n as f64).round() as usize;
    if n >= 2 {
        n_train = n_train.clamp(1, n - 1);
    } else {
        n_train = n;
    }
    (items[..n_train].to_vec(), items[n_train..].to_vec())
}

/// Samples stacked along a leading batch axis.
#[derive(Debug, Clone)]
pub struct Batch {
    pub x: Tensor,
    pub y: Tensor,
    pub x_r: Tensor,
    pub y_r: Tensor,
}

impl Batch {
    pub fn from_samples<'a>(samples: impl IntoIterator<Item = &'a TrainSample>) -> Result<Self> {
        let samples: Vec<&TrainSample> = samples.into_iter().collect();
        let stack = |f: fn(&TrainSample) -> &Tensor| -> Result<Tensor> {
            Tensor::stack(&samples.iter().map(|s| f(s)).collect::<Vec<_>>())
        };
        Ok(Batch {
            x: stack(|s| &s.x)?,
            y: stack(|s| &s.y)?,
            x_r: stack(|s| &s.x_r)?,
            y_r: stack(|s| &s.y_r)?,
        })
    }

    pub fn len(&self) -> usize {
        self.x.shape()[0]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Forward-direction target `[X; Y]`.
    pub fn y_f(&self) -> Tensor {
        self.x.concat(&self.y, 1).expect("batch halves share layout")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Frames whose every coordinate equals the frame label.
    fn labeled(labels: &[f64], joints: usize) -> Tensor {
        let data = labels.iter().flat_map(|&l| std::iter::repeat_n(l, joints * 3)).collect();
        Tensor::new([labels.len(), joints, 3], data).unwrap()
    }

    fn labels_of(t: &Tensor) -> Vec<f64> {
        let frame = t.shape()[1] * 3;
        t.data().chunks(frame).map(|f| f[0]).collect()
    }

    #[test]
    fn inverse_of_labeled_window() {
        let (x_r, y_r) =
            make_inverse_sample(&labeled(&[0., 1., 2.], 2), &labeled(&[3., 4.], 2)).unwrap();
        assert_eq!(labels_of(&x_r), vec![4., 3., 2.]);
        assert_eq!(labels_of(&y_r), vec![4., 3., 2., 1., 0.]);
    }

    #[test]
    fn reapplying_inverse_recovers_original_order() {
        let x = labeled(&[0., 1., 2.], 1);
        let y = labeled(&[3., 4., 5., 6.], 1);
        let (_, y_r) = make_inverse_sample(&x, &y).unwrap();
        let again_x = y_r.slice(0, 0, 3).unwrap();
        let again_y = y_r.slice(0, 3, 4).unwrap();
        let (_, back) = make_inverse_sample(&again_x, &again_y).unwrap();
        assert_eq!(labels_of(&back), vec![0., 1., 2., 3., 4., 5., 6.]);
    }

    #[test]
    fn inverse_rejects_joint_mismatch() {
        assert!(make_inverse_sample(&labeled(&[0.], 2), &labeled(&[1.], 3)).is_err());
    }

    fn seq(t: usize) -> MotionSequence {
        let labels: Vec<f64> = (0..t).map(|i| i as f64).collect();
        MotionSequence::new(labeled(&labels, 1), 25.0).unwrap()
    }

    #[test]
    fn window_counts() {
        assert_eq!(window_split(&seq(5), 3, 2, 1).unwrap().len(), 1);
        let w = window_split(&seq(7), 3, 2, 2).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(labels_of(&w[1].x), vec![2., 3., 4.]);
        assert_eq!(labels_of(&w[1].y), vec![5., 6.]);
        assert!(window_split(&seq(4), 3, 2, 1).unwrap().is_empty());
        assert!(window_split(&seq(4), 3, 0, 1).is_err());
    }

    #[test]
    fn split_is_by_index() {
        let items: Vec<usize> = (0..10).collect();
        let (train, val) = split_sequences(&items, 0.8);
        assert_eq!(train, (0..8).collect::<Vec<_>>());
        assert_eq!(val, vec![8, 9]);
        let (train, val) = split_sequences(&items[..2], 0.8);
        assert_eq!((train.len(), val.len()), (1, 1));
    }
}
