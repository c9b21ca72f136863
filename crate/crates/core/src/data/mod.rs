//! Motion sequences, their on-disk format, and the samples cut from them.

mod dataset;
mod msq;
mod normalize;
mod sequence;
mod synth;
mod window;

pub use dataset::{Dataset, WindowSpec};
pub use msq::{load_msq, parse_msq, save_msq, write_msq};
pub(crate) use msq::format_sig9;
pub use normalize::NormStats;
pub use sequence::MotionSequence;
pub use synth::{synth_generate, Pattern, SynthConfig};
pub use window::{make_inverse_sample, split_sequences, window_split, Batch, TrainSample};
