use super::*;
use crate::diffcore::{grad_check, Activation};

fn small(encoder: EncoderKind, mode: DecoderMode) -> ModelConfig {
    ModelConfig {
        history: 4,
        future: 3,
        joints: 3,
        embed_hidden: 5,
        embed_dim: 4,
        feature_dim: 6,
        encoder,
        encoder_layers: 2,
        decoder_mode: mode,
        activation: Activation::Tanh,
        residual_last_frame: true,
    }
}

fn random_tensor(shape: &[usize], seed: u64) -> Tensor {
    let mut r = rng::stream(seed, "test-data");
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Every coordinate of frame `t` equals `t`.
fn labeled_history(frames: &[usize], joints: usize) -> Tensor {
    let data = frames
        .iter()
        .flat_map(|&t| std::iter::repeat_n(t as f64, joints * 3))
        .collect();
    Tensor::new([frames.len(), joints, 3], data).unwrap()
}

fn zero_where(model: &mut Td2ipModel, pred: impl Fn(&str) -> bool) {
    for (name, t) in model.params_mut() {
        if pred(name) {
            t.data_mut().iter_mut().for_each(|v| *v = 0.0);
        }
    }
}

#[test]
fn init_is_deterministic_with_zero_biases() {
    let cfg = small(EncoderKind::Gcn, DecoderMode::Decoupled);
    let a = Td2ipModel::init(cfg.clone(), 9).unwrap();
    let b = Td2ipModel::init(cfg.clone(), 9).unwrap();
    assert_eq!(a, b);
    let c = Td2ipModel::init(cfg, 10).unwrap();
    assert_ne!(a, c);
    for (name, t) in a.params() {
        if name.ends_with(".b") {
            assert!(t.data().iter().all(|&v| v == 0.0), "{name}");
        } else {
            let bound = (6.0 / (t.shape()[0] + t.shape()[1]) as f64).sqrt();
            assert!(t.data().iter().all(|v| v.abs() <= bound), "{name}");
        }
    }
}

#[test]
fn mlp_param_count_matches_closed_form() {
    let cfg = ModelConfig {
        history: 10,
        future: 10,
        joints: 8,
        encoder_layers: 3,
        ..ModelConfig::default()
    };
    let (dh, de, f, tp, tf) = (32, 16, 32, 10, 10);
    let embed = dh * 3 + dh + de * dh + de;
    let enc = (tp * de * f + f) + 2 * (f * f + f);
    let dec = |frames: usize| (f * f + f) + (frames * 3 * f + frames * 3);
    let decoupled = Td2ipModel::init(cfg.clone(), 0).unwrap();
    assert_eq!(decoupled.param_count(), embed + enc + dec(tp) + dec(tf));
    let shared = Td2ipModel::init(
        ModelConfig {
            decoder_mode: DecoderMode::Shared,
            ..cfg
        },
        0,
    )
    .unwrap();
    assert_eq!(shared.param_count(), embed + enc + dec(tp + tf));
}

#[test]
fn shared_layers_start_identical_across_modes() {
    let a = Td2ipModel::init(small(EncoderKind::Mlp, DecoderMode::Shared), 3).unwrap();
    let b = Td2ipModel::init(small(EncoderKind::Mlp, DecoderMode::Decoupled), 3).unwrap();
    for (name, t) in a.params() {
        if !name.starts_with("dec.") {
            assert_eq!(Some(t), b.param(name), "{name}");
        }
    }
}

#[test]
fn init_rejects_zero_dims() {
    let cfg = ModelConfig {
        feature_dim: 0,
        ..ModelConfig::default()
    };
    assert!(matches!(Td2ipModel::init(cfg, 0), Err(Error::Config(_))));
}

fn embed_value(model: &Td2ipModel, x: &Tensor) -> Tensor {
    let mut tape = Tape::new();
    let p = model.bind(&mut tape);
    let batched = x.reshape([1, x.shape()[0], x.shape()[1], 3]).unwrap();
    let xv = tape.constant(batched);
    let e = model.embed(&mut tape, &p, xv).unwrap();
    tape.value(e).clone()
}

#[test]
fn embed_zero_weights_gives_output_bias() {
    let mut model = Td2ipModel::init(small(EncoderKind::Mlp, DecoderMode::Shared), 1).unwrap();
    zero_where(&mut model, |n| n.starts_with("embed.") && n.ends_with(".w"));
    model.param_mut("embed.1.b").unwrap().data_mut().fill(0.7);
    let d = [0.5, -1.0, 2.0, 3.5];
    model.param_mut("embed.2.b").unwrap().data_mut().copy_from_slice(&d);
    let out = embed_value(&model, &random_tensor(&[4, 3, 3], 2));
    for chunk in out.data().chunks(4) {
        assert_eq!(chunk, &d);
    }
}

#[test]
fn embed_relu_identity_case() {
    let cfg = ModelConfig {
        history: 1,
        joints: 1,
        embed_hidden: 3,
        embed_dim: 3,
        activation: Activation::Relu,
        ..small(EncoderKind::Mlp, DecoderMode::Shared)
    };
    let mut model = Td2ipModel::init(cfg, 0).unwrap();
    *model.param_mut("embed.1.w").unwrap() = Tensor::eye(3);
    *model.param_mut("embed.2.w").unwrap() = Tensor::eye(3);
    let x = Tensor::new([1, 1, 3], vec![-1.0, 2.0, -3.0]).unwrap();
    assert_eq!(embed_value(&model, &x).data(), &[0.0, 2.0, 0.0]);
}

#[test]
fn embed_gradient_matches_finite_differences() {
    let model = Td2ipModel::init(small(EncoderKind::Mlp, DecoderMode::Shared), 4).unwrap();
    let x = random_tensor(&[2, 4, 3, 3], 5);
    let names: Vec<&String> = model.params().keys().collect();
    let w1_idx = names.iter().position(|n| *n == "embed.1.w").unwrap();
    let report = grad_check(
        |tape, vars| {
            let mut all: Vec<Var> = model.params().values().map(|t| tape.constant(t.clone())).collect();
            all[w1_idx] = vars[0];
            let p = model.bind_values(&all)?;
            let xv = tape.constant(x.clone());
            let e = model.embed(tape, &p, xv)?;
            let sq = tape.mul(e, e)?;
            Ok(tape.sum(sq))
        },
        &[model.param("embed.1.w").unwrap().clone()],
        1e-5,
    )
    .unwrap();
    assert!(report.max_rel_error < 1e-6, "{report:?}");
}

fn encode_value(model: &Td2ipModel, embedded: &Tensor) -> Tensor {
    let mut tape = Tape::new();
    let p = model.bind(&mut tape);
    let ev = tape.constant(embedded.clone());
    let m = model.encode(&mut tape, &p, ev).unwrap();
    tape.value(m).clone()
}

#[test]
fn gru_on_zero_input_matches_scalar_recurrence() {
    let cfg = small(EncoderKind::Gru, DecoderMode::Decoupled);
    let mut model = Td2ipModel::init(cfg.clone(), 6).unwrap();
    let f = cfg.feature_dim;
    for (k, gate) in ["z", "r", "n"].iter().enumerate() {
        let b: Vec<f64> = (0..f).map(|i| 0.1 * (i as f64 + 1.0) * (k as f64 - 1.0) + 0.05).collect();
        model.param_mut(&format!("enc.gru.in_{gate}.b")).unwrap().data_mut().copy_from_slice(&b);
    }
    let out = encode_value(&model, &Tensor::zeros([2, cfg.history, cfg.joints, cfg.embed_dim]));

    // Hand recurrence with x = 0: each gate only sees its bias and h·Uᵀ.
    let u = |g: &str| model.param(&format!("enc.gru.rec_{g}.w")).unwrap().clone();
    let b = |g: &str| model.param(&format!("enc.gru.in_{g}.b")).unwrap().clone();
    let (uz, ur, un) = (u("z"), u("r"), u("n"));
    let (bz, br, bn) = (b("z"), b("r"), b("n"));
    let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
    let mut h = vec![0.0; f];
    for _ in 0..cfg.history {
        let lin = |m: &Tensor, i: usize| (0..f).map(|k| m.at(&[i, k]) * h[k]).sum::<f64>();
        let next: Vec<f64> = (0..f)
            .map(|i| {
                let z = sig(bz.data()[i] + lin(&uz, i));
                let r = sig(br.data()[i] + lin(&ur, i));
                let n = (bn.data()[i] + r * lin(&un, i)).tanh();
                (1.0 - z) * n + z * h[i]
            })
            .collect();
        h = next;
    }
    for row in out.data().chunks(f) {
        for (a, e) in row.iter().zip(&h) {
            assert!((a - e).abs() < 1e-12);
        }
    }
}

#[test]
fn gcn_identity_adjacency_is_per_joint_dense() {
    let cfg = ModelConfig {
        encoder_layers: 1,
        ..small(EncoderKind::Gcn, DecoderMode::Decoupled)
    };
    let mut model = Td2ipModel::init(cfg.clone(), 2).unwrap();
    *model.param_mut("enc.gcn.adj").unwrap() = Tensor::eye(cfg.joints);
    let e = random_tensor(&[2, cfg.history, cfg.joints, cfg.embed_dim], 8);
    let m = encode_value(&model, &e);

    let w = model.param("enc.gcn.0.w").unwrap();
    let flat = cfg.history * cfg.embed_dim;
    for n in 0..2 {
        for j in 0..cfg.joints {
            let traj: Vec<f64> = (0..cfg.history)
                .flat_map(|t| (0..cfg.embed_dim).map(move |d| (t, d)))
                .map(|(t, d)| e.at(&[n, t, j, d]))
                .collect();
            for o in 0..cfg.feature_dim {
                let pre: f64 = (0..flat).map(|i| w.at(&[o, i]) * traj[i]).sum();
                let got = m.at(&[n * cfg.joints + j, o]);
                assert!((got - pre.tanh()).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn order_sensitive_encoders() {
    for kind in [EncoderKind::Gru, EncoderKind::Gcn, EncoderKind::Mlp] {
        let cfg = small(kind, DecoderMode::Decoupled);
        let model = Td2ipModel::init(cfg.clone(), 12).unwrap();
        let e = random_tensor(&[1, cfg.history, cfg.joints, cfg.embed_dim], 13);
        let permuted = e.flip(1).unwrap();
        let a = encode_value(&model, &e);
        let b = encode_value(&model, &permuted);
        assert!(a.max_abs_diff(&b) > 1e-6, "{kind:?}");
    }
}

#[test]
fn decoded_shapes() {
    let x = random_tensor(&[2, 4, 3, 3], 1);
    for mode in [DecoderMode::Shared, DecoderMode::Decoupled] {
        let model = Td2ipModel::init(small(EncoderKind::Mlp, mode), 1).unwrap();
        let mut tape = Tape::new();
        let p = model.bind(&mut tape);
        let xv = tape.constant(x.clone());
        let e = model.embed(&mut tape, &p, xv).unwrap();
        let m = model.encode(&mut tape, &p, e).unwrap();
        let last = x.slice(1, 3, 1).unwrap().reshape([2, 3, 3]).unwrap();
        match model.decode(&mut tape, &p, m, &last).unwrap() {
            Decoded::Shared(out) => assert_eq!(tape.value(out).shape(), &[2, 7, 3, 3]),
            Decoded::Decoupled { hist, fut } => {
                assert_eq!(tape.value(hist).shape(), &[2, 4, 3, 3]);
                assert_eq!(tape.value(fut).shape(), &[2, 3, 3, 3]);
            }
        }
        assert_eq!(model.forward(&x).unwrap().shape(), &[2, 7, 3, 3]);
        assert_eq!(model.forward(&x.index_first(0)).unwrap().shape(), &[7, 3, 3]);
    }
}

#[test]
fn decode_rejects_wrong_width() {
    let model = Td2ipModel::init(small(EncoderKind::Mlp, DecoderMode::Shared), 1).unwrap();
    let mut tape = Tape::new();
    let p = model.bind(&mut tape);
    let m = tape.constant(Tensor::zeros([3, 5]));
    let err = model.decode(&mut tape, &p, m, &Tensor::zeros([1, 3, 3]));
    assert!(matches!(err, Err(Error::Dimension { .. })));
}

#[test]
fn residual_with_zero_decoders_tiles_last_frame() {
    for mode in [DecoderMode::Shared, DecoderMode::Decoupled] {
        let mut model = Td2ipModel::init(small(EncoderKind::Gru, mode), 3).unwrap();
        zero_where(&mut model, |n| n.starts_with("dec."));
        let x = random_tensor(&[4, 3, 3], 4);
        let out = model.forward(&x).unwrap();
        let last = x.index_first(3);
        for t in 0..7 {
            assert_eq!(out.index_first(t), last);
        }
    }
}

#[test]
fn inverse_anchor_is_original_frame_t_minus_tp() {
    // Labeled window 0..7 with T_p = 4: X_r = [6, 5, 4, 3] so the anchor is frame 3.
    let mut model = Td2ipModel::init(small(EncoderKind::Mlp, DecoderMode::Decoupled), 3).unwrap();
    zero_where(&mut model, |n| n.starts_with("dec."));
    let (x_r, _) = crate::data::make_inverse_sample(
        &labeled_history(&[0, 1, 2, 3], 3),
        &labeled_history(&[4, 5, 6], 3),
    )
    .unwrap();
    let out = model.forward_inverse(&x_r).unwrap();
    assert!(out.data().iter().all(|&v| v == 3.0));
}

#[test]
fn forward_inverse_is_forward() {
    let model = Td2ipModel::init(small(EncoderKind::Gcn, DecoderMode::Decoupled), 5).unwrap();
    let x_r = random_tensor(&[2, 4, 3, 3], 6);
    assert_eq!(model.forward_inverse(&x_r).unwrap(), model.forward(&x_r).unwrap());
}

#[test]
fn future_decoder_only_moves_future_slice() {
    let model = Td2ipModel::init(small(EncoderKind::Mlp, DecoderMode::Decoupled), 5).unwrap();
    let x = random_tensor(&[2, 4, 3, 3], 7);
    let base = model.forward(&x).unwrap();

    let mut fut = model.clone();
    fut.param_mut("dec.fut.1.w").unwrap().data_mut()[0] += 0.5;
    let moved = fut.forward(&x).unwrap();
    assert_eq!(base.slice(1, 0, 4).unwrap(), moved.slice(1, 0, 4).unwrap());
    assert!(base.slice(1, 4, 3).unwrap().max_abs_diff(&moved.slice(1, 4, 3).unwrap()) > 0.0);

    let mut hist = model.clone();
    hist.param_mut("dec.hist.0.w").unwrap().data_mut()[1] += 0.5;
    let moved = hist.forward(&x).unwrap();
    assert_eq!(base.slice(1, 4, 3).unwrap(), moved.slice(1, 4, 3).unwrap());
    assert!(base.slice(1, 0, 4).unwrap().max_abs_diff(&moved.slice(1, 0, 4).unwrap()) > 0.0);
}

#[test]
fn from_arrays_validates_shapes() {
    let model = Td2ipModel::init(small(EncoderKind::Mlp, DecoderMode::Decoupled), 5).unwrap();
    let arrays: Vec<(String, Tensor)> = model.params().iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    let back = Td2ipModel::from_arrays(model.config().clone(), arrays.clone()).unwrap();
    assert_eq!(back, model);

    let other = ModelConfig {
        joints: 4,
        ..model.config().clone()
    };
    // mlp weights are joint-agnostic, so a J mismatch is only caught by the config
    assert!(Td2ipModel::from_arrays(other, arrays.clone()).is_ok());
    let wider = ModelConfig {
        feature_dim: 7,
        ..model.config().clone()
    };
    assert!(matches!(Td2ipModel::from_arrays(wider, arrays), Err(Error::Dimension { .. })));
}
