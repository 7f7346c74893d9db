use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::media::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CanvasMode {
    /// Detector box when available, otherwise the gradient split.
    #[default]
    Detector,
    GradientSplit,
    /// Keep the whole frame.
    Full,
}

impl std::str::FromStr for CanvasMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "detector" => Ok(CanvasMode::Detector),
            "gradient-split" | "gradient" => Ok(CanvasMode::GradientSplit),
            "full" => Ok(CanvasMode::Full),
            other => Err(Error::Config(format!("unknown canvas mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub segment_seconds: Rational,
    pub sample_fps: Rational,
    pub samples_per_segment: usize,
    pub trim_label: String,
    pub canvas_label: String,
    pub canvas_mode: CanvasMode,
    pub detection_threshold: f64,
    /// Fractions of the frame width searched for the gradient split.
    pub search_band: (f64, f64),
    /// Labels whose boxes become occlusion masks when no mask files exist.
    pub occluder_labels: Vec<String>,
    /// Labels removed by inpainting after the median.
    pub overlay_labels: Vec<String>,
    pub reverse: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            segment_seconds: Rational::integer(10),
            sample_fps: Rational::integer(3),
            samples_per_segment: 30,
            trim_label: "hand".into(),
            canvas_label: "canvas".into(),
            canvas_mode: CanvasMode::Detector,
            detection_threshold: 0.35,
            search_band: (0.2, 0.8),
            occluder_labels: vec!["hand".into(), "brush".into()],
            overlay_labels: vec!["logo".into(), "text".into()],
            reverse: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.segment_seconds.is_zero() {
            return Err(Error::Config("segment_seconds must be positive".into()));
        }
        if self.sample_fps.is_zero() {
            return Err(Error::Config("sample_fps must be positive".into()));
        }
        if self.samples_per_segment == 0 {
            return Err(Error::Config("samples_per_segment must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.detection_threshold) {
            return Err(Error::Config("detection_threshold must lie in [0, 1]".into()));
        }
        let (lo, hi) = self.search_band;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo >= hi {
            return Err(Error::Config(format!("invalid search band ({lo}, {hi})")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_consistent() {
        let c = PipelineConfig::default();
        c.validate().unwrap();
        assert_eq!(
            (c.segment_seconds * c.sample_fps).floor_u64() as usize,
            c.samples_per_segment
        );
    }

    #[test]
    fn json_rejects_unknown_keys() {
        let c: PipelineConfig = serde_json::from_str(r#"{"sample_fps": "5/2"}"#).unwrap();
        assert_eq!(c.sample_fps, Rational::new(5, 2));
        assert_eq!(c.samples_per_segment, 30);
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"segment_secs": 5}"#).is_err());
    }

    #[test]
    fn validation() {
        let mut c = PipelineConfig::default();
        c.samples_per_segment = 0;
        assert!(c.validate().is_err());
        let mut c = PipelineConfig::default();
        c.search_band = (0.8, 0.2);
        assert!(c.validate().is_err());
        let mut c = PipelineConfig::default();
        c.segment_seconds = Rational::ZERO;
        assert!(c.validate().is_err());
    }
}
