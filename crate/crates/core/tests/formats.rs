use proptest::prelude::*;
use td2ip_core::data::{load_msq, parse_msq, save_msq, write_msq, MotionSequence};
use td2ip_core::model::{parse_tdw, write_tdw, Td2ipModel, ModelConfig, EncoderKind, load_tdw, save_tdw};
use td2ip_core::Tensor;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * a.abs().max(1.0)
}

fn value() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e4f64..1e4,
        -1e-3f64..1e-3,
        Just(0.0),
        (-1e20f64..1e20),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn msq_round_trip(t in 1usize..6, j in 1usize..4, fps in 1.0f64..120.0, seed in prop::collection::vec(value(), 72)) {
        let data: Vec<f64> = seed.into_iter().cycle().take(t * j * 3).collect();
        let seq = MotionSequence::new(Tensor::new([t, j, 3], data).unwrap(), fps).unwrap();
        let back = parse_msq(&write_msq(&seq), "mem").unwrap();
        prop_assert_eq!(back.frames().shape(), seq.frames().shape());
        prop_assert!(close(back.fps(), seq.fps()));
        for (a, b) in seq.frames().data().iter().zip(back.frames().data()) {
            prop_assert!(close(*a, *b), "{} vs {}", a, b);
        }
    }

    #[test]
    fn tdw_round_trip(shape in prop::collection::vec(1usize..4, 1..4), vals in prop::collection::vec(value(), 27)) {
        let n: usize = shape.iter().product();
        let t = Tensor::new(shape.clone(), vals.into_iter().cycle().take(n).collect()).unwrap();
        let back = parse_tdw(&write_tdw([("w", &t)]), "mem").unwrap();
        prop_assert_eq!(back.len(), 1);
        prop_assert_eq!(&back[0].0, "w");
        prop_assert_eq!(back[0].1.shape(), t.shape());
        for (a, b) in t.data().iter().zip(back[0].1.data()) {
            prop_assert!(close(*a, *b), "{} vs {}", a, b);
        }
    }
}

#[test]
fn model_weights_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    for encoder in [EncoderKind::Mlp, EncoderKind::Gru, EncoderKind::Gcn] {
        let cfg = ModelConfig { joints: 5, history: 4, future: 6, encoder, ..ModelConfig::default() };
        let model = Td2ipModel::init(cfg.clone(), 3).unwrap();
        let path = dir.path().join(format!("{encoder:?}.tdw"));
        save_tdw(&path, model.params().iter().map(|(k, v)| (k.as_str(), v))).unwrap();
        let back = Td2ipModel::from_arrays(cfg, load_tdw(&path).unwrap()).unwrap();
        for ((name, a), b) in model.params().iter().zip(back.params().values()) {
            assert!(a.max_abs_diff(b) <= 1e-6, "{name}");
        }
    }
}

#[test]
fn msq_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let seq = MotionSequence::new(Tensor::new([2, 1, 3], vec![1.5, -2.25, 1e-7, 123456.789, 0.0, -3.0]).unwrap(), 25.0).unwrap();
    let path = dir.path().join("s.msq");
    save_msq(&seq, &path).unwrap();
    let back = load_msq(&path).unwrap();
    for (a, b) in seq.frames().data().iter().zip(back.frames().data()) {
        assert!(close(*a, *b));
    }
}
