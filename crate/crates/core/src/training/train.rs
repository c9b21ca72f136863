use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::loss::{loss_forward, loss_reverse, loss_total};
use super::optim::{Optimizer, OptimizerKind};
use crate::data::{Batch, Dataset, NormStats, TrainSample};
use crate::diffcore::{Tape, Tensor};
use crate::error::{Error, Result};
use crate::metrics::{
    fid, format_ms, mpjpe_all_frames, mpjpe_at_frame, EvalReport, HorizonSpec,
};
use crate::model::{ModelConfig, Td2ipModel};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossTerm {
    /// `L_f` on `[X; Y]`.
    Forward,
    /// `L_r` on the time-reversed window.
    Reverse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub loss_terms: Vec<LossTerm>,
    /// Squared joint error in the losses; `false` uses the Euclidean norm.
    pub squared_loss: bool,
    /// Global gradient-norm clip; off when `None`.
    pub clip_grad_norm: Option<f64>,
    /// Taken from the run seed, never from the `train` section.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 16,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::Adam,
            loss_terms: vec![LossTerm::Forward, LossTerm::Reverse],
            squared_loss: true,
            clip_grad_norm: None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn uses(&self, term: LossTerm) -> bool {
        self.loss_terms.contains(&term)
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("train.epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("train.batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "train.learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.loss_terms.is_empty() {
            return Err(Error::Config("train.loss_terms must not be empty".into()));
        }
        if let Some(c) = self.clip_grad_norm {
            if c.is_nan() || c <= 0.0 {
                return Err(Error::Config(format!("train.clip_grad_norm must be positive, got {c}")));
            }
        }
        Ok(())
    }
}

/// Which horizons to score and how to average them.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSpec {
    pub horizons: HorizonSpec,
    /// Average over every predicted frame instead of the listed horizons.
    pub all_frames_average: bool,
}

/// Loss values of one batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLosses {
    pub loss_f: Option<f64>,
    pub loss_r: Option<f64>,
    pub loss_total: f64,
}

/// Per-epoch summary; epoch 0 describes the untrained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss_f: Option<f64>,
    pub loss_r: Option<f64>,
    pub loss_total: f64,
    pub val_mpjpe: Option<f64>,
}

fn batch_losses(
    model: &Td2ipModel,
    batch: &Batch,
    cfg: &TrainConfig,
    tape: &mut Tape,
) -> Result<(crate::model::ParamVars, Option<crate::diffcore::Var>, Option<crate::diffcore::Var>, crate::diffcore::Var)> {
    let p = model.bind(tape);
    let lf = if cfg.uses(LossTerm::Forward) {
        let pred = model.forward_on(tape, &p, &batch.x)?;
        let target = tape.constant(batch.y_f());
        Some(loss_forward(tape, pred, target, cfg.squared_loss)?)
    } else {
        None
    };
    let lr = if cfg.uses(LossTerm::Reverse) {
        let pred = model.forward_inverse_on(tape, &p, &batch.x_r)?;
        let target = tape.constant(batch.y_r.clone());
        Some(loss_reverse(tape, pred, target, cfg.squared_loss)?)
    } else {
        None
    };
    let total = loss_total(tape, lf, lr)?;
    Ok((p, lf, lr, total))
}

/// One gradient step on the batch-mean loss. Forward and reverse passes
/// share every parameter and contribute to the same update.
pub fn train_step(
    model: &mut Td2ipModel,
    batch: &Batch,
    cfg: &TrainConfig,
    optimizer: &mut Optimizer,
) -> Result<StepLosses> {
    let mut tape = Tape::new();
    let (p, lf, lr, total) = batch_losses(model, batch, cfg, &mut tape)?;
    let losses = StepLosses {
        loss_f: lf.map(|v| tape.value(v).item()),
        loss_r: lr.map(|v| tape.value(v).item()),
        loss_total: tape.value(total).item(),
    };
    if !losses.loss_total.is_finite() {
        let detail = tape
            .first_non_finite()
            .map(|(id, op)| format!(" (first at node {id}, {op})"))
            .unwrap_or_default();
        return Err(Error::NonFinite {
            context: format!("training loss{detail}"),
        });
    }
    let mut grads = tape.backward(total)?;
    let mut g: Vec<Tensor> = p
        .vars()
        .iter()
        .zip(model.params().values())
        .map(|(&v, t)| grads.take(v).unwrap_or_else(|| Tensor::zeros(t.shape().to_vec())))
        .collect();
    if let Some(max_norm) = cfg.clip_grad_norm {
        let norm = g
            .iter()
            .flat_map(|t| t.data())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        if norm > max_norm {
            let s = max_norm / norm;
            g.iter_mut().for_each(|t| t.data_mut().iter_mut().for_each(|v| *v *= s));
        }
    }
    optimizer.step(model, &g)?;
    Ok(losses)
}

const EVAL_CHUNK: usize = 256;

/// Mean losses over `samples` without updating the model.
pub fn evaluate_losses(model: &Td2ipModel, samples: &[TrainSample], cfg: &TrainConfig) -> Result<StepLosses> {
    let mut acc = LossAccumulator::default();
    for chunk in samples.chunks(EVAL_CHUNK) {
        let batch = Batch::from_samples(chunk)?;
        let mut tape = Tape::new();
        let (_, lf, lr, total) = batch_losses(model, &batch, cfg, &mut tape)?;
        acc.add(
            chunk.len(),
            &StepLosses {
                loss_f: lf.map(|v| tape.value(v).item()),
                loss_r: lr.map(|v| tape.value(v).item()),
                loss_total: tape.value(total).item(),
            },
        );
    }
    Ok(acc.mean())
}

#[derive(Default)]
struct LossAccumulator {
    n: usize,
    f: Option<f64>,
    r: Option<f64>,
    total: f64,
}

impl LossAccumulator {
    fn add(&mut self, n: usize, l: &StepLosses) {
        let w = n as f64;
        self.n += n;
        if let Some(v) = l.loss_f {
            *self.f.get_or_insert(0.0) += w * v;
        }
        if let Some(v) = l.loss_r {
            *self.r.get_or_insert(0.0) += w * v;
        }
        self.total += w * l.loss_total;
    }

    fn mean(&self) -> StepLosses {
        let n = self.n.max(1) as f64;
        StepLosses {
            loss_f: self.f.map(|v| v / n),
            loss_r: self.r.map(|v| v / n),
            loss_total: self.total / n,
        }
    }
}

/// Future-frame predictions and ground truth in millimeters, `N×T_f×J×3`.
pub fn predict_future_mm(
    model: &Td2ipModel,
    samples: &[TrainSample],
    stats: &NormStats,
) -> Result<(Tensor, Tensor)> {
    let cfg = model.config();
    let mut preds = Vec::with_capacity(samples.len());
    let mut gts = Vec::with_capacity(samples.len());
    for chunk in samples.chunks(EVAL_CHUNK) {
        let batch = Batch::from_samples(chunk)?;
        let out = model.forward(&batch.x)?;
        let fut = out.slice(1, cfg.history, cfg.future)?;
        preds.push(stats.denormalize(&fut));
        gts.push(stats.denormalize(&batch.y));
    }
    let cat = |parts: Vec<Tensor>| -> Result<Tensor> {
        let mut it = parts.into_iter();
        let first = it
            .next()
            .ok_or_else(|| Error::InsufficientData("no samples to evaluate".into()))?;
        it.try_fold(first, |acc, t| acc.concat(&t, 0))
    };
    Ok((cat(preds)?, cat(gts)?))
}

/// Per-horizon MPJPE (mm) and their average.
pub fn evaluate_mpjpe(
    model: &Td2ipModel,
    samples: &[TrainSample],
    stats: &NormStats,
    spec: &EvalSpec,
) -> Result<(Vec<(f64, f64)>, f64)> {
    let frames = spec.horizons.frames(model.config().future)?;
    let (preds, gts) = predict_future_mm(model, samples, stats)?;
    let per: Vec<(f64, f64)> = spec
        .horizons
        .horizons_ms
        .iter()
        .zip(&frames)
        .map(|(&ms, &f)| Ok((ms, mpjpe_at_frame(&preds, &gts, f)?)))
        .collect::<Result<_>>()?;
    let avg = if spec.all_frames_average {
        mpjpe_all_frames(&preds, &gts)?
    } else if per.is_empty() {
        return Err(Error::Config("no horizons configured".into()));
    } else {
        per.iter().map(|(_, v)| v).sum::<f64>() / per.len() as f64
    };
    Ok((per, avg))
}

/// Encoder features of the last `T_p` frames of the predicted and of the
/// ground-truth trajectories, each `N × (J·F)`.
pub fn trajectory_features(model: &Td2ipModel, samples: &[TrainSample]) -> Result<(Tensor, Tensor)> {
    let cfg = model.config();
    let (tp, total) = (cfg.history, cfg.total_frames());
    let mut pred_feats = Vec::new();
    let mut gt_feats = Vec::new();
    for chunk in samples.chunks(EVAL_CHUNK) {
        let batch = Batch::from_samples(chunk)?;
        let out = model.forward(&batch.x)?;
        let fut = out.slice(1, tp, cfg.future)?;
        let pred_traj = batch.x.concat(&fut, 1)?.slice(1, total - tp, tp)?;
        let gt_traj = batch.y_f().slice(1, total - tp, tp)?;
        pred_feats.push(model.features(&pred_traj)?);
        gt_feats.push(model.features(&gt_traj)?);
    }
    let cat = |parts: Vec<Tensor>| -> Result<Tensor> {
        let mut it = parts.into_iter();
        let first = it
            .next()
            .ok_or_else(|| Error::InsufficientData("no samples for features".into()))?;
        it.try_fold(first, |acc, t| acc.concat(&t, 0))
    };
    Ok((cat(pred_feats)?, cat(gt_feats)?))
}

/// Full evaluation report over `samples`. FID is omitted with fewer than two samples.
pub fn evaluate_report(
    model: &Td2ipModel,
    samples: &[TrainSample],
    stats: &NormStats,
    spec: &EvalSpec,
    with_fid: bool,
) -> Result<EvalReport> {
    let (per, avg) = evaluate_mpjpe(model, samples, stats, spec)?;
    let fid_value = if with_fid && samples.len() >= 2 {
        let (pred, gt) = trajectory_features(model, samples)?;
        Some(fid(&pred, &gt)?)
    } else {
        None
    };
    Ok(EvalReport {
        mpjpe_ms: per.into_iter().map(|(ms, v)| (format_ms(ms), v)).collect(),
        mpjpe_avg: avg,
        fid: fid_value,
        param_count: model.param_count(),
    })
}

/// A trained model and its loss curve.
#[derive(Debug, Clone)]
pub struct TrainingRun {
    pub model: Td2ipModel,
    pub logs: Vec<EpochLog>,
}

impl TrainingRun {
    pub fn initial_loss(&self) -> f64 {
        self.logs[0].loss_total
    }

    pub fn final_loss(&self) -> f64 {
        self.logs.last().expect("at least one epoch").loss_total
    }
}

/// Trains from a fresh initialization seeded by `cfg.seed`.
///
/// Epoch 0 records the untrained model's mean training losses; every later
/// epoch records the mean batch losses seen while training, then the
/// validation MPJPE after the epoch.
pub fn run_training(
    data: &Dataset,
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
    eval: &EvalSpec,
) -> Result<TrainingRun> {
    cfg.validate()?;
    if data.train.is_empty() {
        return Err(Error::InsufficientData("empty training split".into()));
    }
    let mut model = Td2ipModel::init(model_cfg.clone(), cfg.seed)?;
    let mut optimizer = Optimizer::new(cfg.optimizer, cfg.learning_rate);
    let val_mpjpe = |m: &Td2ipModel| -> Result<Option<f64>> {
        if data.val.is_empty() {
            Ok(None)
        } else {
            Ok(Some(evaluate_mpjpe(m, &data.val, &data.stats, eval)?.1))
        }
    };

    let initial = evaluate_losses(&model, &data.train, cfg)?;
    let mut logs = vec![EpochLog {
        epoch: 0,
        loss_f: initial.loss_f,
        loss_r: initial.loss_r,
        loss_total: initial.loss_total,
        val_mpjpe: val_mpjpe(&model)?,
    }];

    let mut order: Vec<usize> = (0..data.train.len()).collect();
    for epoch in 1..=cfg.epochs {
        let mut rng = rng::stream(cfg.seed, &format!("shuffle/{epoch}"));
        order.sort_unstable();
        order.shuffle(&mut rng);
        let mut acc = LossAccumulator::default();
        for idx in order.chunks(cfg.batch_size) {
            let batch = Batch::from_samples(idx.iter().map(|&i| &data.train[i]))?;
            let l = train_step(&mut model, &batch, cfg, &mut optimizer)?;
            acc.add(idx.len(), &l);
        }
        let mean = acc.mean();
        logs.push(EpochLog {
            epoch,
            loss_f: mean.loss_f,
            loss_r: mean.loss_r,
            loss_total: mean.loss_total,
            val_mpjpe: val_mpjpe(&model)?,
        });
    }
    Ok(TrainingRun { model, logs })
}

/// `epoch,loss_f,loss_r,loss_total,val_mpjpe`, absent values as empty fields.
pub fn epoch_csv(logs: &[EpochLog]) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = String::from("epoch,loss_f,loss_r,loss_total,val_mpjpe\n");
    for l in logs {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            l.epoch,
            opt(l.loss_f),
            opt(l.loss_r),
            l.loss_total,
            opt(l.val_mpjpe)
        );
    }
    out
}

pub fn write_epoch_csv(path: impl AsRef<Path>, logs: &[EpochLog]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, epoch_csv(logs)).map_err(|e| Error::io(path, e))
}
