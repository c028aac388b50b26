pub mod dag;
pub mod fusion;

pub use dag::{depth, GateDag};
pub use fusion::{fuse, model_fusion_speedup, FusionReport, SpeedupError, DEFAULT_FUSE_WIDTH, MAX_FUSE_WIDTH};
