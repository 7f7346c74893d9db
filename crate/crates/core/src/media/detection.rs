use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Rect;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Detection {
    pub label: String,
    #[serde(rename = "box")]
    pub bbox: Rect,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameDetections {
    pub index: usize,
    pub detections: Vec<Detection>,
}

/// Externally produced labelled boxes, keyed by frame index. Frames without
/// an entry have no detections.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionSet {
    frames: Vec<FrameDetections>,
}

impl DetectionSet {
    /// Merges duplicate indices and sorts by frame index.
    pub fn new(frames: Vec<FrameDetections>) -> Result<Self> {
        let mut by_index: BTreeMap<usize, Vec<Detection>> = BTreeMap::new();
        for fd in frames {
            for d in &fd.detections {
                if !(0.0..=1.0).contains(&d.score) || d.score.is_nan() {
                    return Err(Error::Format(format!(
                        "frame {}: score {} outside [0, 1]",
                        fd.index, d.score
                    )));
                }
                if d.bbox.x0 >= d.bbox.x1 || d.bbox.y0 >= d.bbox.y1 {
                    return Err(Error::Format(format!(
                        "frame {}: degenerate box {:?}",
                        fd.index,
                        <[u32; 4]>::from(d.bbox)
                    )));
                }
            }
            by_index.entry(fd.index).or_default().extend(fd.detections);
        }
        Ok(DetectionSet {
            frames: by_index
                .into_iter()
                .map(|(index, detections)| FrameDetections { index, detections })
                .collect(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: DetectionSet =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("detections: {e}")))?;
        DetectionSet::new(raw.frames)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("detections serialise")
    }

    pub fn frames(&self) -> &[FrameDetections] {
        &self.frames
    }

    pub fn for_frame(&self, index: usize) -> &[Detection] {
        self.frames
            .binary_search_by_key(&index, |f| f.index)
            .map(|i| self.frames[i].detections.as_slice())
            .unwrap_or(&[])
    }

    /// Detections with `label` scoring at least `threshold`, as
    /// `(frame_index, detection)` in frame order.
    pub fn matching<'a>(
        &'a self,
        label: &'a str,
        threshold: f64,
    ) -> impl Iterator<Item = (usize, &'a Detection)> + 'a {
        self.frames.iter().flat_map(move |f| {
            f.detections
                .iter()
                .filter(move |d| d.label == label && d.score >= threshold)
                .map(move |d| (f.index, d))
        })
    }

    /// Checks every box lies inside a `width × height` frame and every index
    /// is below `frame_count`.
    pub fn validate_bounds(&self, width: u32, height: u32, frame_count: usize) -> Result<()> {
        for f in &self.frames {
            if f.index >= frame_count {
                return Err(Error::Range(format!(
                    "detection for frame {} but sequence has {frame_count} frames",
                    f.index
                )));
            }
            for d in &f.detections {
                if !d.bbox.is_valid_within(width, height) {
                    return Err(Error::Range(format!(
                        "frame {}: box {:?} outside {width}x{height}",
                        f.index,
                        <[u32; 4]>::from(d.bbox)
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"{"frames":[{"index":0,"detections":[{"label":"hand","box":[1,2,10,20],"score":0.93}]}]}"#;

    #[test]
    fn parses_documented_shape() {
        let set = DetectionSet::from_json(DOC).unwrap();
        let d = &set.for_frame(0)[0];
        assert_eq!(d.label, "hand");
        assert_eq!(d.bbox, Rect::new(1, 2, 10, 20));
        assert_eq!(d.score, 0.93);
        assert!(set.for_frame(1).is_empty());
        let again = DetectionSet::from_json(&set.to_json()).unwrap();
        assert_eq!(again, set);
    }

    #[test]
    fn rejects_bad_scores_and_boxes() {
        let bad_score = DOC.replace("0.93", "1.5");
        assert!(DetectionSet::from_json(&bad_score).is_err());
        let bad_box = DOC.replace("[1,2,10,20]", "[10,2,1,20]");
        assert!(DetectionSet::from_json(&bad_box).is_err());
        let extra = DOC.replace("\"score\"", "\"colour\":1,\"score\"");
        assert!(DetectionSet::from_json(&extra).is_err());
    }

    #[test]
    fn bounds_check() {
        let set = DetectionSet::from_json(DOC).unwrap();
        assert!(set.validate_bounds(10, 20, 1).is_ok());
        assert!(set.validate_bounds(9, 20, 1).is_err());
        assert!(set.validate_bounds(10, 20, 0).is_err());
    }
}
