use super::{Frame, Rational};
use crate::error::{Error, Result};

/// Ordered frames sharing one shape, with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameSequence {
    frames: Vec<Frame>,
    nominal_fps: Rational,
}

impl FrameSequence {
    /// Validates shape consistency and timestamp ordering.
    pub fn new(frames: Vec<Frame>, nominal_fps: Rational) -> Result<Self> {
        if nominal_fps.is_zero() {
            return Err(Error::Config("fps must be positive".into()));
        }
        if let Some(first) = frames.first() {
            for (i, f) in frames.iter().enumerate().skip(1) {
                if !f.same_shape(first) {
                    return Err(Error::Structure(format!(
                        "frame {i} is {}x{}x{}, frame 0 is {}x{}x{}",
                        f.width(),
                        f.height(),
                        f.channels(),
                        first.width(),
                        first.height(),
                        first.channels()
                    )));
                }
            }
        }
        for (i, w) in frames.windows(2).enumerate() {
            if w[1].timestamp <= w[0].timestamp {
                return Err(Error::Structure(format!(
                    "timestamps not strictly increasing at frame {}",
                    i + 1
                )));
            }
        }
        Ok(FrameSequence {
            frames,
            nominal_fps,
        })
    }

    /// Assigns timestamps `i / fps` and validates.
    pub fn at_fps(frames: Vec<Frame>, fps: Rational) -> Result<Self> {
        if fps.is_zero() {
            return Err(Error::Config("fps must be positive".into()));
        }
        let period = fps.recip();
        let frames = frames
            .into_iter()
            .enumerate()
            .map(|(i, f)| f.with_timestamp(Rational::integer(i as u64) * period))
            .collect();
        FrameSequence::new(frames, fps)
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn nominal_fps(&self) -> Rational {
        self.nominal_fps
    }

    pub fn first(&self) -> Option<&Frame> {
        self.frames.first()
    }

    pub fn last(&self) -> Option<&Frame> {
        self.frames.last()
    }

    pub fn get(&self, index: usize) -> Option<&Frame> {
        self.frames.get(index)
    }

    /// `(width, height, channels)` of the frames, `None` when empty.
    pub fn shape(&self) -> Option<(u32, u32, u8)> {
        self.first().map(|f| (f.width(), f.height(), f.channels()))
    }

    /// Span covered by the frames: `len / fps` for uniformly sampled input.
    pub fn duration(&self) -> Rational {
        match (self.first(), self.last()) {
            (Some(a), Some(b)) => {
                b.timestamp.checked_sub(a.timestamp).unwrap_or(Rational::ZERO)
                    + self.nominal_fps.recip()
            }
            _ => Rational::ZERO,
        }
    }

    /// Subsequence `[start, end]` (inclusive) with timestamps shifted so the
    /// first kept frame is at zero.
    pub fn slice_inclusive(&self, start: usize, end: usize) -> Result<FrameSequence> {
        if start > end || end >= self.len() {
            return Err(Error::Range(format!(
                "frame range {start}..={end} outside sequence of {}",
                self.len()
            )));
        }
        let origin = self.frames[start].timestamp;
        let frames = self.frames[start..=end]
            .iter()
            .map(|f| {
                let t = f.timestamp.checked_sub(origin).expect("timestamps increase");
                f.clone().with_timestamp(t)
            })
            .collect();
        FrameSequence::new(frames, self.nominal_fps)
    }

    pub fn map_frames<F>(&self, f: F) -> Result<FrameSequence>
    where
        F: Fn(&Frame) -> Result<Frame>,
    {
        let frames = self
            .frames
            .iter()
            .map(|fr| f(fr).map(|out| out.with_timestamp(fr.timestamp)))
            .collect::<Result<Vec<_>>>()?;
        FrameSequence::new(frames, self.nominal_fps)
    }
}
