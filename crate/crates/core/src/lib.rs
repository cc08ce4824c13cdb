//! Symbolic choreography toolchain for small serial arms.
//!
//! A score is a line-oriented document of frames. Each frame carries a symbol
//! per servo (a quantized joint-angle bin), a per-servo motion flag
//! (dynamic or hold) and a duration. The pipeline is
//!
//! ```text
//! notation::parse_score -> decoder::decode_score -> trajectory::plan
//!     -> kinesim::trace -> lightpaint::render
//! ```
//!
//! with [`protocol`] carrying compiled command streams to a hardware bridge.

/// Bundled scores.
pub mod assets {
    /// The single all-dynamic frame `S=ABHHAD`, two seconds.
    pub const SINGLE_FRAME: &str = include_str!("../assets/single_frame.ropera");
    /// Twelve-frame demonstration score.
    pub const DEMO_SCORE: &str = include_str!("../assets/demo.ropera");
}

pub mod cli;
pub mod decoder;
pub mod kinesim;
pub mod lightpaint;
pub mod notation;
pub mod protocol;
pub mod trajectory;
pub mod vocabulary;

pub use decoder::{decode_frame, decode_score, CouplingModel, JointTargets};
pub use kinesim::{fk, trace, CartesianTrace, KinematicChain};
pub use lightpaint::{render, Palette, RenderConfig, Rgb};
pub use notation::{
    default_codebook, parse_score, serialize_score, Codebook, Frame, MotionFlag, ParseError, Score,
    Symbol,
};
pub use trajectory::{metrics, plan, MotionMetrics, ProfileConfig, ProfileKind, SampledTrajectory};
pub use vocabulary::{builtin_vocabulary, remap_score, PosturePrimitive, RemapRule, RemapSpec};
