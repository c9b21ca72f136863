use std::f64::consts::TAU;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::MotionSequence;
use crate::diffcore::Tensor;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pattern {
    Wave,
    Walk,
    #[default]
    Mixed,
}

impl std::str::FromStr for Pattern {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "wave" => Ok(Pattern::Wave),
            "walk" => Ok(Pattern::Walk),
            "mixed" => Ok(Pattern::Mixed),
            other => Err(format!("unknown pattern {other:?} (expected wave, walk or mixed)")),
        }
    }
}

/// Ranges the per-sequence oscillator parameters are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    /// Oscillation amplitude per joint and axis, millimeters.
    pub amplitude_mm: (f64, f64),
    /// Angular frequency, radians per second.
    pub omega: (f64, f64),
    /// Base pose coordinates are uniform in `[-spread, spread]`.
    pub base_spread_mm: f64,
    /// Root drift speed for walking sequences, millimeters per frame.
    pub drift_mm_per_frame: (f64, f64),
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            amplitude_mm: (10.0, 60.0),
            omega: (1.5, 6.0),
            base_spread_mm: 400.0,
            drift_mm_per_frame: (2.0, 8.0),
        }
    }
}

fn uniform(rng: &mut rng::Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..hi)
    }
}

/// Seeded sinusoid-plus-drift skeletons.
///
/// Joint `j`, axis `a` of sequence `i` follows
/// `base + A·sin(ω·t/fps + φ)`, plus `t·d` for walking sequences, where `d`
/// is a horizontal drift vector. `Mixed` alternates wave (even index) and
/// walk (odd index).
pub fn synth_generate(
    seed: u64,
    n_sequences: usize,
    frames: usize,
    joints: usize,
    fps: f64,
    pattern: Pattern,
    cfg: &SynthConfig,
) -> Result<Vec<MotionSequence>> {
    if n_sequences == 0 || frames == 0 || joints == 0 {
        return Err(Error::Contract(format!(
            "synthetic generation needs positive counts (sequences={n_sequences}, frames={frames}, joints={joints})"
        )));
    }
    (0..n_sequences)
        .map(|i| {
            let mut rng = rng::stream(seed, &format!("datagen/{i}"));
            let walking = match pattern {
                Pattern::Wave => false,
                Pattern::Walk => true,
                Pattern::Mixed => i % 2 == 1,
            };
            let channels = joints * 3;
            let mut base = Vec::with_capacity(channels);
            let mut osc = Vec::with_capacity(channels);
            for _ in 0..channels {
                base.push(uniform(&mut rng, (-cfg.base_spread_mm, cfg.base_spread_mm)));
                let amp = uniform(&mut rng, cfg.amplitude_mm);
                let omega = uniform(&mut rng, cfg.omega);
                let phase = uniform(&mut rng, (0.0, TAU));
                osc.push((amp, omega, phase));
            }
            let speed = uniform(&mut rng, cfg.drift_mm_per_frame);
            let heading = uniform(&mut rng, (0.0, TAU));
            let drift = if walking {
                [speed * heading.cos(), 0.0, speed * heading.sin()]
            } else {
                [0.0; 3]
            };

            let mut data = Vec::with_capacity(frames * channels);
            for t in 0..frames {
                let time = t as f64 / fps;
                for (c, (&b, &(amp, omega, phase))) in base.iter().zip(&osc).enumerate() {
                    data.push(b + amp * (omega * time + phase).sin() + t as f64 * drift[c % 3]);
                }
            }
            MotionSequence::new(Tensor::new([frames, joints, 3], data)?, fps)
        })
        .collect()
}
