//! Frame, sequence and mask data model plus the on-disk formats.

mod detection;
mod embedding;
mod frame;
pub mod io;
mod rational;
mod sequence;

pub use detection::{Detection, DetectionSet, FrameDetections};
pub use embedding::EmbeddingSet;
pub use frame::{Frame, OcclusionMask, Rect};

/// BT.601 luma of an RGB triple.
pub fn frame_luma(rgb: [u8; 3]) -> u8 {
    frame::luma(rgb[0], rgb[1], rgb[2])
}
pub use rational::Rational;
pub use sequence::FrameSequence;
