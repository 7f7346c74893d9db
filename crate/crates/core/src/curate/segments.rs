use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::PipelineConfig;
use crate::error::{Error, Result};
use crate::media::{FrameSequence, Rational};

/// One fixed-length window of the video and the frames sampled from it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub index: usize,
    /// Start time relative to the first frame.
    pub start: Rational,
    /// Frames whose timestamps fall inside the window.
    pub frames: Range<usize>,
    /// Sampled frame indices, increasing and distinct.
    pub samples: Vec<usize>,
}

/// Splits `seq` into `ceil(duration / segment_seconds)` windows and samples
/// up to `samples_per_segment` frames from each at `sample_fps`. Each sample
/// time maps to the latest frame at or before it; the trailing partial
/// window keeps whatever samples fit.
pub fn partition_segments(seq: &FrameSequence, cfg: &PipelineConfig) -> Result<Vec<Segment>> {
    cfg.validate()?;
    let origin = seq.first().ok_or(Error::NoFrames)?.timestamp;
    let duration = seq.duration();
    let count = (duration / cfg.segment_seconds).ceil_u64() as usize;
    let rel: Vec<Rational> = seq
        .frames()
        .iter()
        .map(|f| f.timestamp.checked_sub(origin).expect("timestamps increase"))
        .collect();
    let period = cfg.sample_fps.recip();
    let mut segments = Vec::with_capacity(count);
    for index in 0..count {
        let start = Rational::integer(index as u64) * cfg.segment_seconds;
        let end = start + cfg.segment_seconds;
        let stop = end.min(duration);
        let frames = rel.partition_point(|&t| t < start)..rel.partition_point(|&t| t < end);
        let mut samples: Vec<usize> = Vec::with_capacity(cfg.samples_per_segment);
        for j in 0..cfg.samples_per_segment {
            let t = start + Rational::integer(j as u64) * period;
            if t >= stop {
                break;
            }
            let idx = rel.partition_point(|&ts| ts <= t).saturating_sub(1);
            if samples.last() != Some(&idx) {
                samples.push(idx);
            }
        }
        segments.push(Segment {
            index,
            start,
            frames,
            samples,
        });
    }
    Ok(segments)
}
