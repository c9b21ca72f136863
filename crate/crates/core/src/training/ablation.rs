//! The five loss/decoder combinations and a multi-seed comparison across them.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::train::{evaluate_report, run_training, EvalSpec, LossTerm, TrainConfig, TrainingRun};
use crate::data::Dataset;
use crate::error::Result;
use crate::model::{DecoderMode, ModelConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct AblationVariant {
    pub name: &'static str,
    pub label: &'static str,
    pub forward: bool,
    pub reverse: bool,
    pub decoupled: bool,
}

/// Table order: `L_f`, `L_f+TDD`, `L_f+L_r`, `L_r+TDD`, `L_f+L_r+TDD`.
pub const ABLATION_VARIANTS: [AblationVariant; 5] = [
    AblationVariant { name: "lf", label: "Lf", forward: true, reverse: false, decoupled: false },
    AblationVariant { name: "lf_tdd", label: "Lf+TDD", forward: true, reverse: false, decoupled: true },
    AblationVariant { name: "lf_lr", label: "Lf+Lr", forward: true, reverse: true, decoupled: false },
    AblationVariant { name: "lr_tdd", label: "Lr+TDD", forward: false, reverse: true, decoupled: true },
    AblationVariant { name: "lf_lr_tdd", label: "Lf+Lr+TDD", forward: true, reverse: true, decoupled: true },
];

impl AblationVariant {
    pub fn by_name(name: &str) -> Option<AblationVariant> {
        ABLATION_VARIANTS.iter().copied().find(|v| v.name == name)
    }

    pub fn loss_terms(&self) -> Vec<LossTerm> {
        let mut terms = Vec::new();
        if self.forward {
            terms.push(LossTerm::Forward);
        }
        if self.reverse {
            terms.push(LossTerm::Reverse);
        }
        terms
    }

    pub fn model_config(&self, base: &ModelConfig) -> ModelConfig {
        ModelConfig {
            decoder_mode: if self.decoupled { DecoderMode::Decoupled } else { DecoderMode::Shared },
            ..base.clone()
        }
    }

    pub fn train_config(&self, base: &TrainConfig, seed: u64) -> TrainConfig {
        TrainConfig {
            loss_terms: self.loss_terms(),
            seed,
            ..base.clone()
        }
    }
}

/// One trained variant at one seed.
#[derive(Debug, Clone)]
pub struct AblationRun {
    pub variant: AblationVariant,
    pub seed: u64,
    pub run: TrainingRun,
    pub val_mpjpe_avg: f64,
}

/// Aggregate over seeds for one variant.
#[derive(Debug, Clone, Serialize)]
pub struct AblationRow {
    pub variant: String,
    pub label: String,
    pub loss_forward: bool,
    pub loss_reverse: bool,
    pub tdd: bool,
    pub param_count: usize,
    pub seeds: Vec<u64>,
    pub mpjpe_avg_per_seed: Vec<f64>,
    pub mpjpe_avg_mean: f64,
    /// Sample standard deviation; zero for a single seed.
    pub mpjpe_avg_std: f64,
}

pub fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Trains every `(variant, seed)` pair, in parallel when `parallel` is set.
/// Results come back in variant-major, seed-minor order either way.
pub fn ablation_runs(
    data: &Dataset,
    variants: &[AblationVariant],
    base_model: &ModelConfig,
    base_train: &TrainConfig,
    eval: &EvalSpec,
    seeds: &[u64],
    parallel: bool,
) -> Result<Vec<AblationRun>> {
    let jobs: Vec<(AblationVariant, u64)> = variants
        .iter()
        .flat_map(|&v| seeds.iter().map(move |&s| (v, s)))
        .collect();
    let job = |&(variant, seed): &(AblationVariant, u64)| -> Result<AblationRun> {
        let run = run_training(
            data,
            &variant.model_config(base_model),
            &variant.train_config(base_train, seed),
            eval,
        )?;
        let val_mpjpe_avg = if data.val.is_empty() {
            f64::NAN
        } else {
            evaluate_report(&run.model, &data.val, &data.stats, eval, false)?.mpjpe_avg
        };
        Ok(AblationRun { variant, seed, run, val_mpjpe_avg })
    };
    if parallel {
        jobs.par_iter().map(job).collect()
    } else {
        jobs.iter().map(job).collect()
    }
}

pub fn summarize(runs: &[AblationRun], variants: &[AblationVariant]) -> Vec<AblationRow> {
    variants
        .iter()
        .map(|v| {
            let mine: Vec<&AblationRun> = runs.iter().filter(|r| r.variant == *v).collect();
            let per_seed: Vec<f64> = mine.iter().map(|r| r.val_mpjpe_avg).collect();
            let (mean, std) = mean_and_std(&per_seed);
            AblationRow {
                variant: v.name.to_string(),
                label: v.label.to_string(),
                loss_forward: v.forward,
                loss_reverse: v.reverse,
                tdd: v.decoupled,
                param_count: mine.first().map(|r| r.run.model.param_count()).unwrap_or(0),
                seeds: mine.iter().map(|r| r.seed).collect(),
                mpjpe_avg_per_seed: per_seed,
                mpjpe_avg_mean: mean,
                mpjpe_avg_std: std,
            }
        })
        .collect()
}

/// Plain-text comparison table, one line per variant.
pub fn format_table(rows: &[AblationRow]) -> String {
    let tick = |b: bool| if b { "✓" } else { " " };
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<10} {:^3} {:^3} {:^3} {:>10} {:>24}",
        "variant", "Lf", "Lr", "TDD", "params", "avg MPJPE (mm)"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<10} {:^3} {:^3} {:^3} {:>10} {:>24}",
            r.label,
            tick(r.loss_forward),
            tick(r.loss_reverse),
            tick(r.tdd),
            r.param_count,
            format!("{:.4} ± {:.4}", r.mpjpe_avg_mean, r.mpjpe_avg_std)
        );
    }
    out
}
