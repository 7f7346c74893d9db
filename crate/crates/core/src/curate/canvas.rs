use crate::error::{Error, Result};
use crate::media::{DetectionSet, FrameSequence, Rect};

const MAX_GRADIENT_FRAMES: usize = 16;

/// Highest-scoring `label` box in the temporally median frame among those
/// with a qualifying detection. `None` tells the caller to fall back.
pub fn locate_canvas_detector(det: &DetectionSet, label: &str, threshold: f64) -> Option<Rect> {
    let mut frames: Vec<usize> = det.matching(label, threshold).map(|(i, _)| i).collect();
    frames.dedup();
    let median_frame = *frames.get(frames.len().checked_sub(1)? / 2)?;
    det.for_frame(median_frame)
        .iter()
        .filter(|d| d.label == label && d.score >= threshold)
        .fold(None::<&crate::media::Detection>, |best, d| match best {
            Some(b) if b.score >= d.score => Some(b),
            _ => Some(d),
        })
        .map(|d| d.bbox)
}

/// Up to `max` indices spread evenly over `0..n`, endpoints included.
fn spread(n: usize, max: usize) -> Vec<usize> {
    let m = n.min(max);
    if m <= 1 {
        return vec![0];
    }
    (0..m).map(|k| (k * (n - 1) + (m - 1) / 2) / (m - 1)).collect()
}

/// Column `x` maximising the summed absolute luma step between columns `x`
/// and `x + 1`, searched within `band` (fractions of the width). Ties go to
/// the leftmost column.
pub fn locate_canvas_gradient(seq: &FrameSequence, band: (f64, f64)) -> Result<usize> {
    let (w, h, _) = seq.shape().ok_or(Error::NoFrames)?;
    if w < 4 {
        return Err(Error::Structure(format!("frame width {w} too small for a gradient split")));
    }
    let lo = (band.0 * w as f64).floor() as usize;
    let hi = ((band.1 * w as f64).ceil() as usize).min(w as usize - 1);
    if lo >= hi {
        return Err(Error::Config(format!("search band {band:?} is empty for width {w}")));
    }
    let mut gradient = vec![0u64; w as usize - 1];
    for idx in spread(seq.len(), MAX_GRADIENT_FRAMES) {
        let g = seq.frames()[idx].to_grayscale();
        for y in 0..h as usize {
            let row = &g.data()[y * w as usize..(y + 1) * w as usize];
            for (acc, pair) in gradient.iter_mut().zip(row.windows(2)) {
                *acc += pair[0].abs_diff(pair[1]) as u64;
            }
        }
    }
    let mut best = lo;
    for x in lo..hi {
        if gradient[x] > gradient[best] {
            best = x;
        }
    }
    Ok(best)
}

/// Canvas region to the right of a split column.
pub fn canvas_from_split(split: usize, width: u32, height: u32) -> Result<Rect> {
    let x0 = split as u32 + 1;
    if x0 >= width {
        return Err(Error::Range(format!("split column {split} leaves no canvas")));
    }
    Ok(Rect::new(x0, 0, width, height))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::{Detection, Frame, FrameDetections, Rational};

    fn step_frame(w: u32, h: u32, edge: u32) -> Frame {
        let data = (0..h).flat_map(|_| (0..w).map(move |x| if x <= edge { 0 } else { 255 })).collect();
        Frame::new(w, h, 1, data).unwrap()
    }

    fn one(f: Frame) -> FrameSequence {
        FrameSequence::at_fps(vec![f], Rational::integer(1)).unwrap()
    }

    #[test]
    fn single_step_edge() {
        let s = one(step_frame(32, 8, 15));
        assert_eq!(locate_canvas_gradient(&s, (0.2, 0.8)).unwrap(), 15);
        assert_eq!(canvas_from_split(15, 32, 8).unwrap(), Rect::new(16, 0, 32, 8));
    }

    #[test]
    fn uniform_frame_takes_leftmost_band_column() {
        let s = one(Frame::filled(40, 4, 3, 120).unwrap());
        assert_eq!(locate_canvas_gradient(&s, (0.2, 0.8)).unwrap(), 8);
    }

    #[test]
    fn strongest_of_two_edges() {
        // weak edge 0→40 at x=10, strong edge 40→240 at x=20
        let w = 32;
        let data: Vec<u8> = (0..4)
            .flat_map(|_| (0..w).map(|x| if x <= 10 { 0 } else if x <= 20 { 40 } else { 240 }))
            .collect();
        let f = Frame::new(w, 4, 1, data.clone()).unwrap();
        // brute force column sums
        let mut sums = vec![0u32; w as usize - 1];
        for y in 0..4 {
            for x in 0..w as usize - 1 {
                let a = data[y * w as usize + x] as i32;
                let b = data[y * w as usize + x + 1] as i32;
                sums[x] += (a - b).unsigned_abs();
            }
        }
        let oracle = (6..26).max_by_key(|&x| (sums[x], std::cmp::Reverse(x))).unwrap();
        assert_eq!(oracle, 20);
        assert_eq!(locate_canvas_gradient(&one(f), (0.2, 0.8)).unwrap(), 20);
    }

    #[test]
    fn edges_outside_band_ignored() {
        let s = one(step_frame(40, 4, 2));
        assert_eq!(locate_canvas_gradient(&s, (0.2, 0.8)).unwrap(), 8);
    }

    #[test]
    fn too_narrow() {
        let s = one(Frame::filled(3, 3, 1, 0).unwrap());
        assert!(locate_canvas_gradient(&s, (0.2, 0.8)).is_err());
    }

    #[test]
    fn spread_indices() {
        assert_eq!(spread(1, 16), vec![0]);
        assert_eq!(spread(5, 16), vec![0, 1, 2, 3, 4]);
        let s = spread(100, 16);
        assert_eq!(s.len(), 16);
        assert_eq!((s[0], s[15]), (0, 99));
    }

    fn canvas_det(frames: &[(usize, &[(f64, [u32; 4])])]) -> DetectionSet {
        DetectionSet::new(
            frames
                .iter()
                .map(|(index, boxes)| FrameDetections {
                    index: *index,
                    detections: boxes
                        .iter()
                        .map(|&(score, b)| Detection {
                            label: "canvas".into(),
                            bbox: b.into(),
                            score,
                        })
                        .collect(),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn detector_choices() {
        let d = canvas_det(&[(0, &[(0.9, [1, 1, 5, 5])])]);
        assert_eq!(locate_canvas_detector(&d, "canvas", 0.35), Some(Rect::new(1, 1, 5, 5)));
        let d = canvas_det(&[(0, &[(0.6, [1, 1, 5, 5]), (0.8, [2, 2, 9, 9])])]);
        assert_eq!(locate_canvas_detector(&d, "canvas", 0.35), Some(Rect::new(2, 2, 9, 9)));
        let d = canvas_det(&[]);
        assert_eq!(locate_canvas_detector(&d, "canvas", 0.35), None);
        // median of frames {0, 4, 9} is 4
        let d = canvas_det(&[
            (0, &[(0.9, [0, 0, 2, 2])]),
            (4, &[(0.5, [1, 1, 3, 3])]),
            (9, &[(0.9, [0, 0, 4, 4])]),
        ]);
        assert_eq!(locate_canvas_detector(&d, "canvas", 0.35), Some(Rect::new(1, 1, 3, 3)));
    }
}
