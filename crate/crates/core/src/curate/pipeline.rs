use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    canvas_from_split, locate_canvas_detector, locate_canvas_gradient, partial_median,
    partition_segments, remove_overlays, reverse_sequence, trim_temporal, CanvasMode,
    ExternalInpainter, PartialMedian, PipelineConfig, Segment, SegmentMedianState,
};
use crate::error::{Error, Result};
use crate::media::{DetectionSet, Frame, FrameSequence, OcclusionMask, Rational, Rect};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum CanvasChoice {
    Detector { rect: Rect },
    GradientSplit { split_column: usize, rect: Rect },
    Full { rect: Rect },
}

impl CanvasChoice {
    pub fn rect(&self) -> Rect {
        match self {
            CanvasChoice::Detector { rect }
            | CanvasChoice::GradientSplit { rect, .. }
            | CanvasChoice::Full { rect } => *rect,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub index: usize,
    pub start: Rational,
    /// Sampled frame indices in the untrimmed source video.
    pub samples: Vec<usize>,
    /// Pixels with at least one unoccluded sample in this segment.
    pub from_samples: usize,
    /// Pixels copied from the previous segment's result that hold real data.
    pub inherited: usize,
    /// Pixels still showing the white initial canvas.
    pub never_filled: usize,
    pub overlay_boxes: Vec<Rect>,
}

/// Everything needed to reproduce or audit a curation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: PipelineConfig,
    pub source_frames: usize,
    pub trim: (usize, usize),
    pub trimmed_duration: Rational,
    pub canvas: CanvasChoice,
    /// How the segment count is rounded from duration / segment length.
    pub segment_count_rule: String,
    pub segments: Vec<SegmentReport>,
    pub keyframes: usize,
    pub reversed: bool,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub keyframes: FrameSequence,
    pub manifest: Manifest,
}

fn locate_canvas(
    trimmed: &FrameSequence,
    det: &DetectionSet,
    cfg: &PipelineConfig,
) -> Result<CanvasChoice> {
    let (w, h, _) = trimmed.shape().ok_or(Error::NoFrames)?;
    let gradient = || -> Result<CanvasChoice> {
        let split = locate_canvas_gradient(trimmed, cfg.search_band)?;
        Ok(CanvasChoice::GradientSplit {
            split_column: split,
            rect: canvas_from_split(split, w, h)?,
        })
    };
    match cfg.canvas_mode {
        CanvasMode::Full => Ok(CanvasChoice::Full {
            rect: Rect::full(w, h),
        }),
        CanvasMode::GradientSplit => gradient(),
        CanvasMode::Detector => {
            match locate_canvas_detector(det, &cfg.canvas_label, cfg.detection_threshold) {
                Some(rect) => Ok(CanvasChoice::Detector { rect }),
                None => gradient(),
            }
        }
    }
}

fn occlusion_masks(
    video: &FrameSequence,
    det: &DetectionSet,
    masks: Option<&[OcclusionMask]>,
    cfg: &PipelineConfig,
) -> Result<Vec<OcclusionMask>> {
    let (w, h, _) = video.shape().ok_or(Error::NoFrames)?;
    match masks {
        Some(masks) => {
            if masks.len() != video.len() {
                return Err(Error::Structure(format!(
                    "{} masks for {} frames",
                    masks.len(),
                    video.len()
                )));
            }
            if let Some(i) = masks.iter().position(|m| m.width() != w || m.height() != h) {
                return Err(Error::stage(
                    "masks",
                    Some(i),
                    Error::Structure("mask size differs from frame".into()),
                ));
            }
            Ok(masks.to_vec())
        }
        None => Ok((0..video.len())
            .map(|i| {
                let boxes: Vec<Rect> = det
                    .for_frame(i)
                    .iter()
                    .filter(|d| {
                        d.score >= cfg.detection_threshold
                            && cfg.occluder_labels.contains(&d.label)
                    })
                    .map(|d| d.bbox)
                    .collect();
                OcclusionMask::from_boxes(w, h, &boxes)
            })
            .collect()),
    }
}

fn overlay_boxes(det: &DetectionSet, source_samples: &[usize], canvas: Rect, cfg: &PipelineConfig) -> Vec<Rect> {
    let mut boxes: Vec<Rect> = source_samples
        .iter()
        .flat_map(|&i| det.for_frame(i))
        .filter(|d| {
            d.score >= cfg.detection_threshold && cfg.overlay_labels.contains(&d.label)
        })
        .filter_map(|d| d.bbox.intersect(&canvas))
        .map(|b| b.relative_to(canvas.x0, canvas.y0))
        .collect();
    boxes.sort_by_key(|b| (b.y0, b.x0, b.y1, b.x1));
    boxes.dedup();
    boxes
}

/// Runs the full curation chain and returns one keyframe per segment.
///
/// `masks` are per source frame; without them, boxes of the configured
/// occluder labels are used as rectangular masks. With an `inpainter`,
/// overlay removal goes through the external hook in `workdir` instead of
/// the built-in diffusion fill.
pub fn run_pipeline(
    video: &FrameSequence,
    det: &DetectionSet,
    masks: Option<&[OcclusionMask]>,
    cfg: &PipelineConfig,
    inpainter: Option<(&ExternalInpainter, &Path)>,
) -> Result<PipelineOutput> {
    cfg.validate().map_err(|e| Error::stage("config", None, e))?;
    let (w, h, channels) = video.shape().ok_or_else(|| Error::stage("load", None, Error::NoFrames))?;
    det.validate_bounds(w, h, video.len())
        .map_err(|e| Error::stage("detections", None, e))?;

    let (start, end) = trim_temporal(det, &cfg.trim_label, cfg.detection_threshold)
        .map_err(|e| Error::stage("trim", None, e))?;
    let trimmed = video
        .slice_inclusive(start, end)
        .map_err(|e| Error::stage("trim", Some(start), e))?;

    let canvas = locate_canvas(&trimmed, det, cfg).map_err(|e| Error::stage("canvas", None, e))?;
    let rect = canvas.rect();
    let cropped = trimmed
        .map_frames(|f| f.crop(rect))
        .map_err(|e| Error::stage("crop", Some(start), e))?;
    let all_masks = occlusion_masks(video, det, masks, cfg)?;
    let crop_masks: Vec<OcclusionMask> = all_masks[start..=end]
        .iter()
        .enumerate()
        .map(|(i, m)| m.crop(rect).map_err(|e| Error::stage("masks", Some(start + i), e)))
        .collect::<Result<_>>()?;

    let segments: Vec<Segment> =
        partition_segments(&cropped, cfg).map_err(|e| Error::stage("partition", None, e))?;

    // per-segment medians are independent; the fill chain below is not
    let partials: Vec<PartialMedian> = segments
        .par_iter()
        .map(|seg| {
            let frames: Vec<&Frame> = seg.samples.iter().map(|&i| &cropped.frames()[i]).collect();
            let ms: Vec<&OcclusionMask> = seg.samples.iter().map(|&i| &crop_masks[i]).collect();
            partial_median(&frames, &ms)
                .map_err(|e| Error::stage("median", seg.samples.first().map(|i| i + start), e))
        })
        .collect::<Result<_>>()?;

    let mut state = SegmentMedianState::blank(rect.width(), rect.height(), channels)
        .map_err(|e| Error::stage("median", None, e))?;
    let mut medians = Vec::with_capacity(segments.len());
    let mut reports = Vec::with_capacity(segments.len());
    for (seg, partial) in segments.iter().zip(&partials) {
        let next = partial
            .fill_from(&state)
            .map_err(|e| Error::stage("median", None, e))?;
        let from_samples = partial.covered_count();
        let filled = next.filled_count();
        let source_samples: Vec<usize> = seg.samples.iter().map(|i| i + start).collect();
        reports.push(SegmentReport {
            index: seg.index,
            start: seg.start,
            overlay_boxes: overlay_boxes(det, &source_samples, rect, cfg),
            samples: source_samples,
            from_samples,
            inherited: filled - from_samples,
            never_filled: next.filled.len() - filled,
        });
        medians.push(next.current_median.clone().with_timestamp(seg.start));
        state = next;
    }

    let cleaned: Vec<Frame> = match inpainter {
        Some((hook, workdir)) => {
            let items: Vec<(Frame, Vec<Rect>)> = medians
                .into_iter()
                .zip(&reports)
                .map(|(f, r)| (f, r.overlay_boxes.clone()))
                .collect();
            hook.inpaint_batch(workdir, &items)
                .map_err(|e| Error::stage("overlay", None, e))?
                .into_iter()
                .zip(&reports)
                .map(|(f, r)| f.with_timestamp(r.start))
                .collect()
        }
        None => medians
            .par_iter()
            .zip(&reports)
            .map(|(f, r)| {
                remove_overlays(f, &r.overlay_boxes).map_err(|e| Error::stage("overlay", None, e))
            })
            .collect::<Result<_>>()?,
    };

    let mut keyframes = FrameSequence::new(cleaned, cfg.segment_seconds.recip())
        .map_err(|e| Error::stage("emit", None, e))?;
    if cfg.reverse {
        keyframes = reverse_sequence(&keyframes).map_err(|e| Error::stage("reverse", None, e))?;
    }
    let manifest = Manifest {
        config: cfg.clone(),
        source_frames: video.len(),
        trim: (start, end),
        trimmed_duration: trimmed.duration(),
        canvas,
        segment_count_rule: "ceil".into(),
        keyframes: keyframes.len(),
        segments: reports,
        reversed: cfg.reverse,
    };
    Ok(PipelineOutput {
        keyframes,
        manifest,
    })
}
