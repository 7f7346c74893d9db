//! Dataset curation: turn a raw painting tutorial into a handful of clean
//! keyframes.
//!
//! Stages run in this order: temporal trim on the first/last hand
//! detection, canvas localisation (detector box or gradient split), fixed
//! length segmentation, masked median per segment with fill from the
//! previous segment, then overlay removal. [`run_pipeline`] wires them
//! together; each stage is also usable on its own.

mod canvas;
mod config;
mod median;
mod overlay;
mod pipeline;
mod segments;
mod trim;

pub use canvas::{canvas_from_split, locate_canvas_detector, locate_canvas_gradient};
pub use config::{CanvasMode, PipelineConfig};
pub use median::{masked_median, partial_median, PartialMedian, SegmentMedianState};
pub use overlay::{remove_overlays, ExternalInpainter};
pub use pipeline::{run_pipeline, CanvasChoice, Manifest, PipelineOutput, SegmentReport};
pub use segments::{partition_segments, Segment};
pub use trim::trim_temporal;

use crate::error::{Error, Result};
use crate::media::FrameSequence;

/// Frames in reverse order. Timestamps are rebuilt from zero so the gaps
/// between neighbouring frames are preserved.
pub fn reverse_sequence(seq: &FrameSequence) -> Result<FrameSequence> {
    let last = seq.last().ok_or(Error::NoFrames)?.timestamp;
    let frames = seq
        .frames()
        .iter()
        .rev()
        .map(|f| {
            let t = last.checked_sub(f.timestamp).expect("timestamps increase");
            f.clone().with_timestamp(t)
        })
        .collect();
    FrameSequence::new(frames, seq.nominal_fps())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::{Frame, Rational};

    fn seq(levels: &[u8], times: &[u64]) -> FrameSequence {
        let frames = levels
            .iter()
            .zip(times)
            .map(|(&l, &t)| Frame::filled(2, 1, 1, l).unwrap().with_timestamp(Rational::integer(t)))
            .collect();
        FrameSequence::new(frames, Rational::integer(1)).unwrap()
    }

    #[test]
    fn reverse_orders_and_keeps_gaps() {
        let s = seq(&[1, 2, 3], &[0, 1, 3]);
        let r = reverse_sequence(&s).unwrap();
        let levels: Vec<u8> = r.frames().iter().map(|f| f.data()[0]).collect();
        assert_eq!(levels, vec![3, 2, 1]);
        let times: Vec<Rational> = r.frames().iter().map(|f| f.timestamp).collect();
        assert_eq!(times, vec![Rational::integer(0), Rational::integer(2), Rational::integer(3)]);
        assert_eq!(reverse_sequence(&r).unwrap(), s);
    }

    #[test]
    fn reverse_single_and_empty() {
        let s = seq(&[7], &[0]);
        assert_eq!(reverse_sequence(&s).unwrap(), s);
        let empty = FrameSequence::new(vec![], Rational::integer(1)).unwrap();
        assert!(reverse_sequence(&empty).is_err());
    }
}
