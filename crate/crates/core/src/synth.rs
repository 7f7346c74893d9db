//! Deterministic painting-process fixtures.
//!
//! A [`RevealScript`] turns a target image into a sequence that starts from
//! a white canvas and ends exactly on the target. An optional occluder, a
//! solid square that follows a scripted path, stands in for the artist's
//! hand; its exact masks and detection boxes come back alongside the frames.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::media::{Detection, DetectionSet, Frame, FrameDetections, FrameSequence, OcclusionMask, Rational, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RevealOrder {
    #[default]
    Raster,
    RandomPatch,
    CoarseToFine,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Occluder {
    pub size: u32,
    #[serde(default = "default_occluder_color")]
    pub color: [u8; 3],
    /// Top-left corner per frame.
    pub trajectory: Vec<(u32, u32)>,
}

fn default_occluder_color() -> [u8; 3] {
    [255, 0, 255]
}

#[derive(Debug, Clone, PartialEq)]
pub struct RevealScript {
    pub target: Frame,
    pub order: RevealOrder,
    pub steps: usize,
    pub seed: u64,
    pub fps: Rational,
    /// Tile edge for [`RevealOrder::RandomPatch`].
    pub patch_size: u32,
    pub occluder: Option<Occluder>,
}

impl RevealScript {
    pub fn new(target: Frame, order: RevealOrder, steps: usize, seed: u64) -> Self {
        RevealScript {
            target,
            order,
            steps,
            seed,
            fps: Rational::integer(3),
            patch_size: 4,
            occluder: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        if self.fps.is_zero() {
            return Err(Error::Config("fps must be positive".into()));
        }
        if self.patch_size == 0 {
            return Err(Error::Config("patch_size must be positive".into()));
        }
        if let Some(o) = &self.occluder {
            if o.size == 0 {
                return Err(Error::Config("occluder size must be positive".into()));
            }
            if o.trajectory.len() != self.steps {
                return Err(Error::Config(format!(
                    "occluder trajectory has {} positions for {} steps",
                    o.trajectory.len(),
                    self.steps
                )));
            }
        }
        Ok(())
    }
}

/// Smooth procedural RGB image: a random linear colour ramp with a few
/// soft-edged discs. Channel values stay within `[16, 239]`.
pub fn procedural_target(width: u32, height: u32, seed: u64) -> Result<Frame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base: [f64; 3] = std::array::from_fn(|_| rng.gen_range(40.0..200.0));
    let gx: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-60.0..60.0));
    let gy: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-60.0..60.0));
    let discs: Vec<(f64, f64, f64, [f64; 3])> = (0..rng.gen_range(2..5))
        .map(|_| {
            (
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.1..0.35),
                std::array::from_fn(|_| rng.gen_range(16.0..239.0)),
            )
        })
        .collect();
    let mut data = Vec::with_capacity(width as usize * height as usize * 3);
    for y in 0..height {
        let v = (y as f64 + 0.5) / height as f64;
        for x in 0..width {
            let u = (x as f64 + 0.5) / width as f64;
            let mut px: [f64; 3] = std::array::from_fn(|c| base[c] + gx[c] * (u - 0.5) + gy[c] * (v - 0.5));
            for &(cx, cy, r, col) in &discs {
                let d = ((u - cx).powi(2) + (v - cy).powi(2)).sqrt();
                let a = ((r - d) / 0.05).clamp(0.0, 1.0);
                for c in 0..3 {
                    px[c] = px[c] * (1.0 - a) + col[c] * a;
                }
            }
            data.extend(px.iter().map(|&p| p.round().clamp(16.0, 239.0) as u8));
        }
    }
    Frame::new(width, height, 3, data)
}

/// Number of units revealed by frame `i` of `steps`, rounding to nearest.
fn revealed(i: usize, steps: usize, total: usize) -> usize {
    ((i + 1) * total + steps / 2) / steps
}

fn copy_pixel(dst: &mut Frame, src: &Frame, x: u32, y: u32) {
    dst.pixel_mut(x, y).copy_from_slice(src.pixel(x, y));
}

/// Target averaged over aligned `block × block` tiles, rounded per channel.
fn block_mean(target: &Frame, block: u32) -> Frame {
    if block <= 1 {
        return target.clone();
    }
    let (w, h, c) = (target.width(), target.height(), target.channels() as usize);
    let mut out = target.clone();
    for by in (0..h).step_by(block as usize) {
        for bx in (0..w).step_by(block as usize) {
            let (x1, y1) = ((bx + block).min(w), (by + block).min(h));
            let mut sum = vec![0u64; c];
            for y in by..y1 {
                for x in bx..x1 {
                    for (s, &v) in sum.iter_mut().zip(target.pixel(x, y)) {
                        *s += v as u64;
                    }
                }
            }
            let n = ((x1 - bx) * (y1 - by)) as f64;
            let mean: Vec<u8> = sum.iter().map(|&s| (s as f64 / n).round() as u8).collect();
            for y in by..y1 {
                for x in bx..x1 {
                    out.pixel_mut(x, y).copy_from_slice(&mean);
                }
            }
        }
    }
    out
}

fn tiles(w: u32, h: u32, size: u32) -> Vec<Rect> {
    let mut out = Vec::new();
    for y in (0..h).step_by(size as usize) {
        for x in (0..w).step_by(size as usize) {
            out.push(Rect::new(x, y, (x + size).min(w), (y + size).min(h)));
        }
    }
    out
}

/// Frame `i` reveals a growing, seeded subset of the target over white; the
/// last frame is the target byte for byte.
///
/// Coarse-to-fine spends the first half of the steps uncovering coarse
/// block averages tile by tile, then halves the block size until the full
/// resolution target remains. Tiles are nested, so every step can only
/// reduce the squared error to the target.
pub fn generate_process(script: &RevealScript) -> Result<FrameSequence> {
    script.validate()?;
    let target = &script.target;
    let (w, h) = (target.width(), target.height());
    let white = Frame::filled(w, h, target.channels(), 255)?;
    let steps = script.steps;
    let mut rng = ChaCha8Rng::seed_from_u64(script.seed);
    let frames: Vec<Frame> = match script.order {
        RevealOrder::Raster => {
            let total = target.pixel_count();
            (0..steps)
                .map(|i| {
                    let mut f = white.clone();
                    for p in 0..revealed(i, steps, total) {
                        copy_pixel(&mut f, target, p as u32 % w, p as u32 / w);
                    }
                    f
                })
                .collect()
        }
        RevealOrder::RandomPatch => {
            let mut order = tiles(w, h, script.patch_size);
            order.shuffle(&mut rng);
            (0..steps)
                .map(|i| {
                    let mut f = white.clone();
                    for t in &order[..revealed(i, steps, order.len())] {
                        for y in t.y0..t.y1 {
                            for x in t.x0..t.x1 {
                                copy_pixel(&mut f, target, x, y);
                            }
                        }
                    }
                    f
                })
                .collect()
        }
        RevealOrder::CoarseToFine => {
            let mut coarsest = 1u32;
            while coarsest * 8 <= w.min(h) {
                coarsest *= 2;
            }
            let levels: Vec<u32> =
                std::iter::successors(Some(coarsest), |&b| (b > 1).then_some(b / 2)).collect();
            let blurred: Vec<Frame> = levels.iter().map(|&b| block_mean(target, b)).collect();
            let mut order = tiles(w, h, coarsest);
            order.shuffle(&mut rng);
            let reveal_steps = steps / 2;
            let refine_steps = steps - reveal_steps;
            (0..steps)
                .map(|i| {
                    if i < reveal_steps {
                        let mut f = white.clone();
                        for t in &order[..revealed(i, reveal_steps, order.len())] {
                            for y in t.y0..t.y1 {
                                for x in t.x0..t.x1 {
                                    copy_pixel(&mut f, &blurred[0], x, y);
                                }
                            }
                        }
                        f
                    } else {
                        let k = i - reveal_steps;
                        let level = revealed(k, refine_steps, levels.len()).max(1) - 1;
                        blurred[level].clone()
                    }
                })
                .collect()
        }
    };
    FrameSequence::at_fps(frames, script.fps)
}

/// Stamps the script's occluder onto each frame. Returns the occluded
/// frames, exact masks and `"hand"` boxes with score 1. Without an occluder
/// the input comes back unchanged with clear masks and no detections.
pub fn overlay_occluder(
    seq: &FrameSequence,
    script: &RevealScript,
) -> Result<(FrameSequence, Vec<OcclusionMask>, DetectionSet)> {
    let (w, h, c) = seq.shape().ok_or(Error::NoFrames)?;
    let Some(occ) = &script.occluder else {
        return Ok((seq.clone(), vec![OcclusionMask::clear(w, h); seq.len()], DetectionSet::default()));
    };
    if occ.trajectory.len() != seq.len() {
        return Err(Error::Config(format!(
            "occluder trajectory has {} positions for {} frames",
            occ.trajectory.len(),
            seq.len()
        )));
    }
    let (sw, sh) = (occ.size.min(w), occ.size.min(h));
    let colour: Vec<u8> = if c == 3 {
        occ.color.to_vec()
    } else {
        vec![crate::media::frame_luma(occ.color)]
    };
    let mut frames = Vec::with_capacity(seq.len());
    let mut masks = Vec::with_capacity(seq.len());
    let mut dets = Vec::with_capacity(seq.len());
    for (i, (f, &(px, py))) in seq.frames().iter().zip(&occ.trajectory).enumerate() {
        let x0 = px.min(w - sw);
        let y0 = py.min(h - sh);
        let rect = Rect::new(x0, y0, x0 + sw, y0 + sh);
        let mut out = f.clone();
        for y in rect.y0..rect.y1 {
            for x in rect.x0..rect.x1 {
                out.pixel_mut(x, y).copy_from_slice(&colour);
            }
        }
        frames.push(out);
        masks.push(OcclusionMask::from_boxes(w, h, &[rect]));
        dets.push(FrameDetections {
            index: i,
            detections: vec![Detection {
                label: "hand".into(),
                bbox: rect,
                score: 1.0,
            }],
        });
    }
    Ok((FrameSequence::new(frames, seq.nominal_fps())?, masks, DetectionSet::new(dets)?))
}

/// Deterministic wandering path: random-walk steps of up to `jump` pixels,
/// reflected at the borders.
pub fn wander_trajectory(width: u32, height: u32, size: u32, steps: usize, jump: u32, seed: u64) -> Vec<(u32, u32)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let max_x = width.saturating_sub(size) as i64;
    let max_y = height.saturating_sub(size) as i64;
    let mut x = rng.gen_range(0..=max_x);
    let mut y = rng.gen_range(0..=max_y);
    let j = jump as i64;
    let reflect = |v: i64, max: i64| {
        if max == 0 {
            0
        } else {
            let period = 2 * max;
            let m = v.rem_euclid(period);
            if m > max {
                period - m
            } else {
                m
            }
        }
    };
    (0..steps)
        .map(|_| {
            let pos = (x as u32, y as u32);
            x = reflect(x + rng.gen_range(-j..=j), max_x);
            y = reflect(y + rng.gen_range(-j..=j), max_y);
            pos
        })
        .collect()
}
