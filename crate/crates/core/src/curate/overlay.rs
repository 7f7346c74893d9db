use std::path::Path;
use std::process::Command;

use crate::error::{Error, Result};
use crate::media::io::{read_image, write_png};
use crate::media::{Frame, OcclusionMask, Rect};

const MAX_SWEEPS: usize = 500;
const CONVERGED: f64 = 0.5;

/// Fills every pixel inside `boxes` by harmonic diffusion from the
/// surrounding pixels; pixels outside are returned untouched.
///
/// Hole pixels start from the mean of the row and column linear
/// interpolations between the nearest known pixels, then Gauss-Seidel
/// sweeps replace each with the average of its in-frame 4-neighbours until
/// the largest update drops below half a grey level or 500 sweeps pass.
pub fn remove_overlays(frame: &Frame, boxes: &[Rect]) -> Result<Frame> {
    let (w, h) = (frame.width(), frame.height());
    if let Some(b) = boxes.iter().find(|b| !b.is_valid_within(w, h)) {
        return Err(Error::Range(format!(
            "overlay box {:?} outside {w}x{h} frame",
            <[u32; 4]>::from(*b)
        )));
    }
    if boxes.is_empty() {
        return Ok(frame.clone());
    }
    let hole = OcclusionMask::from_boxes(w, h, boxes);
    if hole.count_occluded() == frame.pixel_count() {
        return Err(Error::NothingToFill);
    }
    diffuse(frame, &hole)
}

fn diffuse(frame: &Frame, hole: &OcclusionMask) -> Result<Frame> {
    let (w, h) = (frame.width() as usize, frame.height() as usize);
    let c = frame.channels() as usize;
    let is_hole = |x: usize, y: usize| hole.bits()[y * w + x];
    let mut buf: Vec<f64> = frame.data().iter().map(|&v| v as f64).collect();

    let known: Vec<usize> = (0..w * h).filter(|&p| !hole.bits()[p]).collect();
    let global: Vec<f64> = (0..c)
        .map(|ch| known.iter().map(|&p| buf[p * c + ch]).sum::<f64>() / known.len() as f64)
        .collect();

    let holes: Vec<(usize, usize)> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .filter(|&(x, y)| is_hole(x, y))
        .collect();

    // initial guess
    let lerp = |a: Option<(usize, f64)>, b: Option<(usize, f64)>, at: usize| match (a, b) {
        (Some((ia, va)), Some((ib, vb))) => Some(va + (vb - va) * (at - ia) as f64 / (ib - ia) as f64),
        (Some((_, v)), None) | (None, Some((_, v))) => Some(v),
        (None, None) => None,
    };
    let init: Vec<f64> = holes
        .iter()
        .flat_map(|&(x, y)| {
            let left = (0..x).rev().find(|&i| !is_hole(i, y));
            let right = (x + 1..w).find(|&i| !is_hole(i, y));
            let up = (0..y).rev().find(|&j| !is_hole(x, j));
            let down = (y + 1..h).find(|&j| !is_hole(x, j));
            let buf = &buf;
            let global = &global;
            (0..c).map(move |ch| {
                let at = |xx: usize, yy: usize| buf[(yy * w + xx) * c + ch];
                let row = lerp(left.map(|i| (i, at(i, y))), right.map(|i| (i, at(i, y))), x);
                let col = lerp(up.map(|j| (j, at(x, j))), down.map(|j| (j, at(x, j))), y);
                match (row, col) {
                    (Some(a), Some(b)) => (a + b) * 0.5,
                    (Some(a), None) | (None, Some(a)) => a,
                    (None, None) => global[ch],
                }
            })
        })
        .collect();
    for (k, &(x, y)) in holes.iter().enumerate() {
        let p = (y * w + x) * c;
        buf[p..p + c].copy_from_slice(&init[k * c..(k + 1) * c]);
    }

    for _ in 0..MAX_SWEEPS {
        let mut max_change: f64 = 0.0;
        for &(x, y) in &holes {
            let mut nbrs = [0usize; 4];
            let mut n = 0;
            if x > 0 {
                nbrs[n] = y * w + x - 1;
                n += 1;
            }
            if x + 1 < w {
                nbrs[n] = y * w + x + 1;
                n += 1;
            }
            if y > 0 {
                nbrs[n] = (y - 1) * w + x;
                n += 1;
            }
            if y + 1 < h {
                nbrs[n] = (y + 1) * w + x;
                n += 1;
            }
            let p = (y * w + x) * c;
            for ch in 0..c {
                let avg = nbrs[..n].iter().map(|&q| buf[q * c + ch]).sum::<f64>() / n as f64;
                max_change = max_change.max((avg - buf[p + ch]).abs());
                buf[p + ch] = avg;
            }
        }
        if max_change < CONVERGED {
            break;
        }
    }

    let data = buf.iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect();
    Frame::new(frame.width(), frame.height(), frame.channels(), data)
        .map(|f| f.with_timestamp(frame.timestamp))
}

/// Delegates overlay removal to an external program by file exchange.
///
/// For every frame with boxes the hook writes `overlay_in_%06d.png` and
/// `overlay_mask_%06d.png` (255 = fill) into a work directory, runs the
/// command once, and reads back `overlay_out_%06d.png`. Arguments equal to
/// `{dir}` are replaced by the work directory, which is also exported as
/// `PB_OVERLAY_DIR`. Only masked pixels are taken from the returned images.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalInpainter {
    pub program: String,
    pub args: Vec<String>,
}

impl ExternalInpainter {
    /// Splits a command line on whitespace.
    pub fn parse(command: &str) -> Result<Self> {
        let mut parts = command.split_whitespace().map(str::to_string);
        let program = parts
            .next()
            .ok_or_else(|| Error::Config("empty inpainter command".into()))?;
        Ok(ExternalInpainter {
            program,
            args: parts.collect(),
        })
    }

    pub fn inpaint_batch(&self, workdir: &Path, items: &[(Frame, Vec<Rect>)]) -> Result<Vec<Frame>> {
        let mut pending = Vec::new();
        for (i, (frame, boxes)) in items.iter().enumerate() {
            if boxes.is_empty() {
                continue;
            }
            let (w, h) = (frame.width(), frame.height());
            if let Some(b) = boxes.iter().find(|b| !b.is_valid_within(w, h)) {
                return Err(Error::Range(format!("overlay box {:?} outside frame", <[u32; 4]>::from(*b))));
            }
            let mask = OcclusionMask::from_boxes(w, h, boxes);
            write_png(&workdir.join(format!("overlay_in_{i:06}.png")), frame)?;
            write_png(&workdir.join(format!("overlay_mask_{i:06}.png")), &mask.to_gray())?;
            pending.push((i, mask));
        }
        if pending.is_empty() {
            return Ok(items.iter().map(|(f, _)| f.clone()).collect());
        }
        let dir = workdir.to_string_lossy().into_owned();
        let args: Vec<String> = self
            .args
            .iter()
            .map(|a| if a == "{dir}" { dir.clone() } else { a.clone() })
            .collect();
        let status = Command::new(&self.program)
            .args(&args)
            .env("PB_OVERLAY_DIR", &dir)
            .status()
            .map_err(|e| Error::External(format!("{}: {e}", self.program)))?;
        if !status.success() {
            return Err(Error::External(format!("{} exited with {status}", self.program)));
        }
        let mut out: Vec<Frame> = items.iter().map(|(f, _)| f.clone()).collect();
        for (i, mask) in pending {
            let path = workdir.join(format!("overlay_out_{i:06}.png"));
            let filled = read_image(&path).map_err(|reason| Error::Load {
                index: i,
                path: path.clone(),
                reason,
            })?;
            let original = &items[i].0;
            if !filled.same_shape(original) {
                return Err(Error::Structure(format!("{} has the wrong shape", path.display())));
            }
            let c = original.channels() as usize;
            let target = out[i].data_mut();
            for (p, &m) in mask.bits().iter().enumerate() {
                if m {
                    target[p * c..(p + 1) * c].copy_from_slice(&filled.data()[p * c..(p + 1) * c]);
                }
            }
        }
        Ok(out)
    }
}
