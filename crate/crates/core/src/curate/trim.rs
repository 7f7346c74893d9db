use crate::error::{Error, Result};
use crate::media::DetectionSet;

/// Inclusive frame range between the first and last detection of `label`
/// scoring at least `threshold`.
pub fn trim_temporal(det: &DetectionSet, label: &str, threshold: f64) -> Result<(usize, usize)> {
    let mut hits = det.matching(label, threshold).map(|(i, _)| i);
    let first = hits.next().ok_or_else(|| Error::LabelNotDetected(label.to_string()))?;
    let last = hits.last().unwrap_or(first);
    Ok((first, last))
}
