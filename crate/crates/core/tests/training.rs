mod common;

use common::{random_samples, toy_config, ENCODERS};
use td2ip_core::data::{synth_generate, Batch, Dataset, Pattern, SynthConfig, WindowSpec};
use td2ip_core::metrics::HorizonSpec;
use td2ip_core::model::{DecoderMode, ModelConfig, Td2ipModel};
use td2ip_core::training::{
    epoch_csv, evaluate_losses, evaluate_report, run_training, train_step, EvalSpec, LossTerm, Optimizer,
    OptimizerKind, TrainConfig,
};
use td2ip_core::{Activation, Error, Tensor};

fn small_dataset(seed: u64) -> (Dataset, ModelConfig) {
    let seqs = synth_generate(seed, 10, 24, 4, 25.0, Pattern::Mixed, &SynthConfig::default()).unwrap();
    let spec = WindowSpec { history: 6, future: 4, stride: 4, normalize: true };
    let data = Dataset::from_sequences(&seqs, spec).unwrap();
    let cfg = ModelConfig {
        history: 6,
        future: 4,
        joints: 4,
        embed_hidden: 8,
        embed_dim: 6,
        feature_dim: 8,
        ..ModelConfig::default()
    };
    (data, cfg)
}

fn eval_spec() -> EvalSpec {
    EvalSpec {
        horizons: HorizonSpec { horizons_ms: vec![40.0, 80.0, 160.0], fps: 25.0 },
        all_frames_average: false,
    }
}

fn train_cfg(epochs: usize, seed: u64) -> TrainConfig {
    TrainConfig { epochs, batch_size: 8, learning_rate: 3e-3, seed, ..TrainConfig::default() }
}

#[test]
fn total_loss_is_sum_of_terms_every_epoch() {
    let (data, cfg) = small_dataset(1);
    let run = run_training(&data, &cfg, &train_cfg(5, 3), &eval_spec()).unwrap();
    assert_eq!(run.logs.len(), 6);
    for log in &run.logs {
        let (f, r) = (log.loss_f.unwrap(), log.loss_r.unwrap());
        assert!((log.loss_total - (f + r)).abs() <= 1e-12, "{log:?}");
    }
}

#[test]
fn single_term_runs_log_only_that_term() {
    let (data, cfg) = small_dataset(1);
    let tc = TrainConfig { loss_terms: vec![LossTerm::Reverse], ..train_cfg(2, 3) };
    let run = run_training(&data, &cfg, &tc, &eval_spec()).unwrap();
    for log in &run.logs {
        assert!(log.loss_f.is_none());
        assert_eq!(log.loss_r, Some(log.loss_total));
    }
    let csv = epoch_csv(&run.logs);
    assert!(csv.starts_with("epoch,loss_f,loss_r,loss_total,val_mpjpe\n"));
    assert!(csv.lines().nth(1).unwrap().starts_with("0,,"));
}

#[test]
fn training_is_deterministic() {
    let (data, cfg) = small_dataset(2);
    let a = run_training(&data, &cfg, &train_cfg(3, 9), &eval_spec()).unwrap();
    let b = run_training(&data, &cfg, &train_cfg(3, 9), &eval_spec()).unwrap();
    assert_eq!(a.logs, b.logs);
    assert_eq!(a.model, b.model);
    let c = run_training(&data, &cfg, &train_cfg(3, 10), &eval_spec()).unwrap();
    assert_ne!(a.logs, c.logs);
}

#[test]
fn training_reduces_loss() {
    let (data, cfg) = small_dataset(3);
    let run = run_training(&data, &cfg, &train_cfg(30, 1), &eval_spec()).unwrap();
    assert!(run.final_loss() < 0.6 * run.initial_loss(), "{:?}", run.logs);
}

#[test]
fn final_validation_log_matches_fresh_evaluation() {
    let (data, cfg) = small_dataset(4);
    let run = run_training(&data, &cfg, &train_cfg(2, 1), &eval_spec()).unwrap();
    let report = evaluate_report(&run.model, &data.val, &data.stats, &eval_spec(), true).unwrap();
    assert!((report.mpjpe_avg - run.logs.last().unwrap().val_mpjpe.unwrap()).abs() <= 1e-9);
    assert_eq!(report.mpjpe_ms.keys().collect::<Vec<_>>(), ["40", "80", "160"]);
    assert!(report.fid.unwrap() >= 0.0);
}

#[test]
fn batch_order_does_not_change_the_step() {
    for encoder in ENCODERS {
        let cfg = toy_config(encoder, DecoderMode::Decoupled, Activation::Tanh);
        let samples = random_samples(4, &cfg, 3);
        let reversed: Vec<_> = samples.iter().rev().cloned().collect();
        let tc = TrainConfig { optimizer: OptimizerKind::Sgd, learning_rate: 0.1, ..TrainConfig::default() };

        let mut a = Td2ipModel::init(cfg.clone(), 1).unwrap();
        let mut b = a.clone();
        let la = train_step(&mut a, &Batch::from_samples(&samples).unwrap(), &tc, &mut Optimizer::new(tc.optimizer, tc.learning_rate)).unwrap();
        let lb = train_step(&mut b, &Batch::from_samples(&reversed).unwrap(), &tc, &mut Optimizer::new(tc.optimizer, tc.learning_rate)).unwrap();
        assert!((la.loss_total - lb.loss_total).abs() <= 1e-12);
        for ((name, pa), pb) in a.params().iter().zip(b.params().values()) {
            assert!(pa.max_abs_diff(pb) <= 1e-12, "{encoder:?} {name}");
        }
    }
}

#[test]
fn inactive_term_is_not_computed() {
    let cfg = toy_config(ENCODERS[0], DecoderMode::Decoupled, Activation::Tanh);
    let samples = random_samples(2, &cfg, 5);
    let model = Td2ipModel::init(cfg, 1).unwrap();
    let both = evaluate_losses(&model, &samples, &TrainConfig::default()).unwrap();
    let fwd = evaluate_losses(&model, &samples, &TrainConfig { loss_terms: vec![LossTerm::Forward], ..TrainConfig::default() }).unwrap();
    assert_eq!(fwd.loss_r, None);
    assert_eq!(fwd.loss_f, both.loss_f);
    assert_eq!(fwd.loss_total, both.loss_f.unwrap());
}

#[test]
fn non_finite_input_aborts_training() {
    let cfg = toy_config(ENCODERS[0], DecoderMode::Shared, Activation::Tanh);
    let mut samples = random_samples(2, &cfg, 5);
    let mut x = samples[0].x.clone();
    x.data_mut()[0] = f64::NAN;
    samples[0] = td2ip_core::data::TrainSample::new(x, samples[0].y.clone()).unwrap();
    let mut model = Td2ipModel::init(cfg, 1).unwrap();
    let tc = TrainConfig::default();
    let err = train_step(&mut model, &Batch::from_samples(&samples).unwrap(), &tc, &mut Optimizer::new(tc.optimizer, tc.learning_rate)).unwrap_err();
    assert!(matches!(err, Error::NonFinite { .. }), "{err}");
}

#[test]
fn normalization_uses_training_histories() {
    let (data, _) = small_dataset(6);
    // normalized training histories have zero mean per axis
    let mut sums = [0.0; 3];
    let mut count = 0usize;
    for s in &data.train {
        for p in s.x.data().chunks(3) {
            for a in 0..3 {
                sums[a] += p[a];
            }
            count += 1;
        }
    }
    for s in sums {
        assert!((s / count as f64).abs() < 1e-9);
    }
    let round = data.stats.denormalize(&data.stats.normalize(&Tensor::full([2, 1, 3], 123.0)));
    assert!(round.data().iter().all(|v| (v - 123.0).abs() < 1e-9));
}
