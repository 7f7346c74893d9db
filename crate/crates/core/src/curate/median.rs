use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::media::{Frame, OcclusionMask};

/// Running result threaded through the segments of one video.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentMedianState {
    pub current_median: Frame,
    /// `true` where the pixel holds real sample data (now or from an earlier
    /// segment), `false` where it is still the white initial canvas.
    pub filled: Vec<bool>,
}

impl SegmentMedianState {
    /// White canvas with nothing filled.
    pub fn blank(width: u32, height: u32, channels: u8) -> Result<Self> {
        let current_median = Frame::filled(width, height, channels, 255)?;
        let filled = vec![false; current_median.pixel_count()];
        Ok(SegmentMedianState {
            current_median,
            filled,
        })
    }

    pub fn filled_count(&self) -> usize {
        self.filled.iter().filter(|&&f| f).count()
    }
}

/// Median of one segment before any fill from earlier segments.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialMedian {
    /// Lower median of the unoccluded samples; 0 where `covered` is false.
    pub values: Frame,
    /// Whether at least one sample saw the pixel unoccluded.
    pub covered: Vec<bool>,
}

/// Per-pixel, per-channel lower median over the samples that are not
/// occluded at that pixel. Rows are processed in parallel.
pub fn partial_median(samples: &[&Frame], masks: &[&OcclusionMask]) -> Result<PartialMedian> {
    let first = *samples.first().ok_or(Error::NoFrames)?;
    if masks.len() != samples.len() {
        return Err(Error::Structure(format!(
            "{} samples but {} masks",
            samples.len(),
            masks.len()
        )));
    }
    for (i, (s, m)) in samples.iter().zip(masks).enumerate() {
        if !s.same_shape(first) || !m.matches(first) {
            return Err(Error::Structure(format!("sample {i} does not match sample 0")));
        }
    }
    let (w, c) = (first.width() as usize, first.channels() as usize);
    let mut values = vec![0u8; first.data().len()];
    let mut covered = vec![false; first.pixel_count()];
    values
        .par_chunks_mut(w * c)
        .zip(covered.par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, (row, cov_row))| {
            let mut buf: Vec<u8> = Vec::with_capacity(samples.len());
            for x in 0..w {
                let p = y * w + x;
                let live: Vec<&Frame> = samples
                    .iter()
                    .zip(masks)
                    .filter(|(_, m)| !m.bits()[p])
                    .map(|(s, _)| *s)
                    .collect();
                if live.is_empty() {
                    continue;
                }
                cov_row[x] = true;
                for ch in 0..c {
                    buf.clear();
                    buf.extend(live.iter().map(|s| s.data()[p * c + ch]));
                    buf.sort_unstable();
                    row[x * c + ch] = buf[(buf.len() - 1) / 2];
                }
            }
        });
    Ok(PartialMedian {
        values: Frame::new(first.width(), first.height(), first.channels(), values)?,
        covered,
    })
}

impl PartialMedian {
    /// Pixels no sample covered take the prior median and its filled bit.
    pub fn fill_from(&self, prior: &SegmentMedianState) -> Result<SegmentMedianState> {
        if !prior.current_median.same_shape(&self.values) {
            return Err(Error::Structure("prior state shape differs from samples".into()));
        }
        let c = self.values.channels() as usize;
        let mut out = self.values.clone();
        let mut filled = prior.filled.clone();
        for (p, &cov) in self.covered.iter().enumerate() {
            if cov {
                filled[p] = true;
            } else {
                out.data_mut()[p * c..(p + 1) * c]
                    .copy_from_slice(&prior.current_median.data()[p * c..(p + 1) * c]);
            }
        }
        Ok(SegmentMedianState {
            current_median: out,
            filled,
        })
    }

    pub fn covered_count(&self) -> usize {
        self.covered.iter().filter(|&&c| c).count()
    }
}

/// Masked median of one segment, filling fully occluded pixels from `prior`.
pub fn masked_median(
    samples: &[&Frame],
    masks: &[&OcclusionMask],
    prior: &SegmentMedianState,
) -> Result<SegmentMedianState> {
    partial_median(samples, masks)?.fill_from(prior)
}
