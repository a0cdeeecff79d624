//! Base variables `Ū` with `I(Ū;X) = 0` and `H(Y|Ū,X) = 0`.

pub mod frl;
pub mod sfrl;

pub use frl::{interval_atlas, synthesize_frl, synthesize_frl_with_atlas, IntervalAtlas};
pub use sfrl::{synthesize_sfrl, SamplingConfig, MIN_SAMPLE_BUDGET};
