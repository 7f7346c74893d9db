//! Curation and evaluation toolkit for painting-process videos.
//!
//! The crate is organised around [`FrameSequence`]: the curation pipeline
//! ([`curate`]) turns raw tutorial frames into a short sequence of clean
//! keyframes, and the metric stack ([`pdp`], [`eval`]) scores generated
//! sequences against ground truth using pluggable distance [`backends`].
//! [`synth`] produces deterministic painting-process fixtures so that all of
//! the above can be exercised without real footage.

pub mod backends;
pub mod curate;
pub mod error;
pub mod eval;
pub mod media;
pub mod pdp;
pub mod plot;
pub mod synth;

pub use backends::{Backend, EmbeddingMode, FrameDistance};
pub use error::{Error, Result};
pub use media::{
    DetectionSet, EmbeddingSet, Frame, FrameSequence, OcclusionMask, Rational, Rect,
};
pub use pdp::{DistanceProfile, PdpConfig, PdpResult};
