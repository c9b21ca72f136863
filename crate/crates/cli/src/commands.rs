use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use td2ip_core::config::RunConfig;
use td2ip_core::data::{
    load_msq, save_msq, synth_generate, Dataset, MotionSequence, NormStats, Pattern, SynthConfig, TrainSample,
    WindowSpec,
};
use td2ip_core::metrics::{fid, pca_project_2d, read_feature_csv, write_feature_csv, write_points_csv, EvalReport};
use td2ip_core::model::{load_tdw, save_tdw, ModelConfig, Td2ipModel};
use td2ip_core::training::{
    ablation_runs, evaluate_report, format_table, run_training, summarize, trajectory_features, write_epoch_csv,
    AblationRow, ABLATION_VARIANTS,
};
use td2ip_core::Tensor;

use crate::error::CliError;
use crate::rundir;
use crate::{AblateArgs, EvalArgs, FidArgs, GenArgs, ProjectArgs, TrainArgs};

pub const NORM_MEAN: &str = "norm.mean";
pub const NORM_STD: &str = "norm.std";
const CONFIG_USED: &str = "config.used.json";

type CliResult<T> = Result<T, CliError>;

/// Contents of `manifest.json` written next to generated sequences.
#[derive(Debug, Clone, Serialize)]
pub struct GenManifest {
    pub files: Vec<String>,
    pub seed: u64,
    pub sequences: usize,
    pub frames: usize,
    pub joints: usize,
    pub fps: f64,
    pub pattern: String,
    pub generator: SynthConfig,
}

pub fn cmd_gen(a: &GenArgs) -> CliResult<GenManifest> {
    if !(a.fps > 0.0 && a.fps.is_finite()) {
        return Err(CliError::Usage(format!("--fps must be positive, got {}", a.fps)));
    }
    let pattern: Pattern = a.pattern.parse().map_err(CliError::Usage)?;
    let synth = SynthConfig::default();
    let seqs = synth_generate(
        a.seed,
        a.sequences as usize,
        a.frames as usize,
        a.joints as usize,
        a.fps,
        pattern,
        &synth,
    )?;
    rundir::prepare(&a.out, a.force)?;
    let mut files = Vec::with_capacity(seqs.len());
    for (i, s) in seqs.iter().enumerate() {
        let name = format!("seq_{i:04}.msq");
        save_msq(s, a.out.join(&name))?;
        files.push(name);
    }
    let manifest = GenManifest {
        files,
        seed: a.seed,
        sequences: a.sequences as usize,
        frames: a.frames as usize,
        joints: a.joints as usize,
        fps: a.fps,
        pattern: a.pattern.clone(),
        generator: synth,
    };
    write_json(&a.out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// All `*.msq` files of `dir` in file-name order.
pub fn load_sequences(dir: &Path) -> CliResult<Vec<MotionSequence>> {
    if !dir.is_dir() {
        return Err(CliError::Usage(format!("data directory {} does not exist", dir.display())));
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "msq"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Usage(format!("no .msq files in {}", dir.display())));
    }
    paths.iter().map(|p| load_msq(p).map_err(CliError::from)).collect()
}

fn check_data(cfg: &RunConfig, seqs: &[MotionSequence], data_dir: &Path) -> CliResult<()> {
    for s in seqs {
        if s.num_joints() != cfg.data.joints {
            return Err(CliError::Usage(format!(
                "data in {} has {} joints but config data.joints is {}",
                data_dir.display(),
                s.num_joints(),
                cfg.data.joints
            )));
        }
        if (s.fps() - cfg.data.fps).abs() > 1e-9 * cfg.data.fps {
            return Err(CliError::Usage(format!(
                "data in {} is sampled at {} fps but config data.fps is {}",
                data_dir.display(),
                s.fps(),
                cfg.data.fps
            )));
        }
    }
    Ok(())
}

fn load_dataset(cfg: &RunConfig, data_dir: &Path) -> CliResult<(Dataset, Vec<MotionSequence>)> {
    let seqs = load_sequences(data_dir)?;
    check_data(cfg, &seqs, data_dir)?;
    let data = Dataset::from_sequences(&seqs, cfg.window_spec())?;
    if data.val.is_empty() {
        return Err(CliError::Usage(format!(
            "{} yields no validation windows; add sequences or shorten the window",
            data_dir.display()
        )));
    }
    Ok((data, seqs))
}

/// Validation windows normalized with `stats` (as stored in a weights file).
fn validation_samples(cfg: &RunConfig, seqs: &[MotionSequence], stats: &NormStats, data_dir: &Path) -> CliResult<Vec<TrainSample>> {
    let raw = Dataset::from_sequences(seqs, WindowSpec { normalize: false, ..cfg.window_spec() })?;
    if raw.val.is_empty() {
        return Err(CliError::Usage(format!("{} yields no validation windows", data_dir.display())));
    }
    Ok(raw.val.iter().map(|s| stats.normalize_sample(s)).collect())
}

fn load_config(path: &Path) -> CliResult<RunConfig> {
    if !path.is_file() {
        return Err(CliError::Usage(format!("config file {} does not exist", path.display())));
    }
    Ok(RunConfig::load(path)?)
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable") + "\n";
    fs::write(path, text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

pub fn weights_file(run_dir: &Path) -> PathBuf {
    run_dir.join("weights.tdw")
}

fn save_weights(path: &Path, model: &Td2ipModel, stats: &NormStats) -> CliResult<()> {
    let mean = Tensor::new([3], stats.mean.to_vec())?;
    let std = Tensor::new([3], stats.std.to_vec())?;
    let arrays = model
        .params()
        .iter()
        .map(|(k, v)| (k.as_str(), v))
        .chain([(NORM_MEAN, &mean), (NORM_STD, &std)]);
    Ok(save_tdw(path, arrays)?)
}

fn load_weights(path: &Path, model_cfg: &ModelConfig, config_path: &Path) -> CliResult<(Td2ipModel, NormStats)> {
    let mut arrays = load_tdw(path)?;
    let mut take = |name: &str| -> CliResult<[f64; 3]> {
        let i = arrays
            .iter()
            .position(|(n, _)| n == name)
            .ok_or_else(|| CliError::Usage(format!("{} has no {name} array", path.display())))?;
        let (_, t) = arrays.remove(i);
        t.data()
            .try_into()
            .map_err(|_| CliError::Usage(format!("{} array {name} must hold 3 values", path.display())))
    };
    let stats = NormStats { mean: take(NORM_MEAN)?, std: take(NORM_STD)? };
    let model = Td2ipModel::from_arrays(model_cfg.clone(), arrays).map_err(|e| {
        CliError::Usage(format!(
            "weights {} do not match config {}: {e}",
            path.display(),
            config_path.display()
        ))
    })?;
    Ok((model, stats))
}

pub fn cmd_train(a: &TrainArgs) -> CliResult<EvalReport> {
    let cfg = load_config(&a.config)?;
    let (data, seqs) = load_dataset(&cfg, &a.data)?;
    rundir::prepare(&a.out, a.force)?;
    cfg.save(a.out.join(CONFIG_USED))?;

    let run = run_training(&data, &cfg.model_config(), &cfg.train_config(), &cfg.eval_spec())?;
    let weights = weights_file(&a.out);
    save_weights(&weights, &run.model, &data.stats)?;
    write_epoch_csv(a.out.join("epochs.csv"), &run.logs)?;

    // Score what was persisted, so `eval` on the weights file reproduces it.
    let (saved, stats) = load_weights(&weights, &cfg.model_config(), &a.config)?;
    let val = validation_samples(&cfg, &seqs, &stats, &a.data)?;
    let report = evaluate_report(&saved, &val, &stats, &cfg.eval_spec(), true)?;
    report.save(a.out.join("report.json"))?;
    eprintln!(
        "trained {} epochs: loss {:.6} -> {:.6}, val MPJPE {:.3} mm",
        cfg.train.epochs,
        run.initial_loss(),
        run.final_loss(),
        report.mpjpe_avg
    );
    Ok(report)
}

pub fn cmd_eval(a: &EvalArgs) -> CliResult<EvalReport> {
    let config_path = match &a.config {
        Some(p) => p.clone(),
        None => a.weights.parent().unwrap_or(Path::new(".")).join(CONFIG_USED),
    };
    let cfg = load_config(&config_path)?;
    if !a.weights.is_file() {
        return Err(CliError::Usage(format!("weights file {} does not exist", a.weights.display())));
    }
    let (model, stats) = load_weights(&a.weights, &cfg.model_config(), &config_path)?;

    let seqs = load_sequences(&a.data)?;
    if let Some(s) = seqs.iter().find(|s| s.num_joints() != model.config().joints) {
        return Err(CliError::Usage(format!(
            "data in {} has {} joints but weights {} expect {}",
            a.data.display(),
            s.num_joints(),
            a.weights.display(),
            model.config().joints
        )));
    }
    check_data(&cfg, &seqs, &a.data)?;
    let val = validation_samples(&cfg, &seqs, &stats, &a.data)?;

    let report = evaluate_report(&model, &val, &stats, &cfg.eval_spec(), true)?;
    report.save(&a.report)?;
    if let Some(dir) = &a.features_out {
        fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))?;
        let (pred, gt) = trajectory_features(&model, &val)?;
        write_feature_csv(dir.join("pred_features.csv"), &pred)?;
        write_feature_csv(dir.join("gt_features.csv"), &gt)?;
    }
    Ok(report)
}

/// Text table and per-variant rows of an ablation.
#[derive(Debug, Clone)]
pub struct AblationOutput {
    pub table: String,
    pub rows: Vec<AblationRow>,
}

pub fn cmd_ablate(a: &AblateArgs) -> CliResult<AblationOutput> {
    let cfg = load_config(&a.config)?;
    let (data, _) = load_dataset(&cfg, &a.data)?;
    rundir::prepare(&a.out, a.force)?;
    cfg.save(a.out.join(CONFIG_USED))?;

    let seeds = cfg.ablation_seeds();
    let runs = ablation_runs(
        &data,
        &ABLATION_VARIANTS,
        &cfg.model_config(),
        &cfg.train_config(),
        &cfg.eval_spec(),
        &seeds,
        a.parallel,
    )?;
    for r in &runs {
        let dir = a.out.join(r.variant.name).join(format!("seed_{}", r.seed));
        fs::create_dir_all(&dir).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))?;
        write_epoch_csv(dir.join("epochs.csv"), &r.run.logs)?;
        save_weights(&weights_file(&dir), &r.run.model, &data.stats)?;
    }
    let rows = summarize(&runs, &ABLATION_VARIANTS);
    let table = format_table(&rows);
    fs::write(a.out.join("ablation.txt"), &table)
        .map_err(|e| CliError::Usage(format!("cannot write ablation.txt: {e}")))?;
    write_json(&a.out.join("ablation.json"), &rows)?;
    Ok(AblationOutput { table, rows })
}

pub fn cmd_fid(a: &FidArgs) -> CliResult<f64> {
    let fa = read_feature_csv(&a.features_a)?;
    let fb = read_feature_csv(&a.features_b)?;
    Ok(fid(&fa, &fb)?)
}

pub fn cmd_project(a: &ProjectArgs) -> CliResult<()> {
    let f = read_feature_csv(&a.features)?;
    let points = pca_project_2d(&f)?;
    Ok(write_points_csv(&a.out, &points)?)
}
