use serde::{Deserialize, Serialize};

use super::Rational;
use crate::error::{Error, Result};

/// Half-open pixel rectangle `[x0, x1) × [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "[u32; 4]", from = "[u32; 4]")]
pub struct Rect {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl Rect {
    pub const fn new(x0: u32, y0: u32, x1: u32, y1: u32) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    pub const fn full(width: u32, height: u32) -> Self {
        Rect::new(0, 0, width, height)
    }

    pub fn width(&self) -> u32 {
        self.x1.saturating_sub(self.x0)
    }

    pub fn height(&self) -> u32 {
        self.y1.saturating_sub(self.y0)
    }

    pub fn area(&self) -> u64 {
        self.width() as u64 * self.height() as u64
    }

    pub fn is_valid_within(&self, width: u32, height: u32) -> bool {
        self.x0 < self.x1 && self.y0 < self.y1 && self.x1 <= width && self.y1 <= height
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    /// Intersection with `other`, `None` when empty.
    pub fn intersect(&self, other: &Rect) -> Option<Rect> {
        let r = Rect::new(
            self.x0.max(other.x0),
            self.y0.max(other.y0),
            self.x1.min(other.x1),
            self.y1.min(other.y1),
        );
        (r.x0 < r.x1 && r.y0 < r.y1).then_some(r)
    }

    /// Shift into the coordinate system whose origin is `(ox, oy)`.
    /// The rectangle must lie at or beyond the origin.
    pub fn relative_to(&self, ox: u32, oy: u32) -> Rect {
        Rect::new(self.x0 - ox, self.y0 - oy, self.x1 - ox, self.y1 - oy)
    }
}

impl From<Rect> for [u32; 4] {
    fn from(r: Rect) -> Self {
        [r.x0, r.y0, r.x1, r.y1]
    }
}

impl From<[u32; 4]> for Rect {
    fn from(a: [u32; 4]) -> Self {
        Rect::new(a[0], a[1], a[2], a[3])
    }
}

/// An 8-bit raster frame, row-major and channel-interleaved.
#[derive(Clone, PartialEq, Eq)]
pub struct Frame {
    width: u32,
    height: u32,
    channels: u8,
    data: Vec<u8>,
    pub timestamp: Rational,
}

impl std::fmt::Debug for Frame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Frame")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("channels", &self.channels)
            .field("timestamp", &self.timestamp)
            .finish_non_exhaustive()
    }
}

impl Frame {
    pub fn new(width: u32, height: u32, channels: u8, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Structure(format!(
                "frame dimensions must be positive, got {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::Structure(format!(
                "frames have 1 or 3 channels, got {channels}"
            )));
        }
        let expected = width as usize * height as usize * channels as usize;
        if data.len() != expected {
            return Err(Error::Structure(format!(
                "frame data has {} samples, expected {expected}",
                data.len()
            )));
        }
        Ok(Frame {
            width,
            height,
            channels,
            data,
            timestamp: Rational::ZERO,
        })
    }

    /// Frame with every sample set to `value`.
    pub fn filled(width: u32, height: u32, channels: u8, value: u8) -> Result<Self> {
        let n = width as usize * height as usize * channels as usize;
        Frame::new(width, height, channels, vec![value; n])
    }

    /// RGB frame with every pixel set to `rgb`.
    pub fn solid_rgb(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self> {
        let data = rgb
            .iter()
            .copied()
            .cycle()
            .take(width as usize * height as usize * 3)
            .collect();
        Frame::new(width, height, 3, data)
    }

    pub fn with_timestamp(mut self, timestamp: Rational) -> Self {
        self.timestamp = timestamp;
        self
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn same_shape(&self, other: &Frame) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * self.channels as usize
    }

    pub fn pixel(&self, x: u32, y: u32) -> &[u8] {
        let o = self.offset(x, y);
        &self.data[o..o + self.channels as usize]
    }

    pub fn pixel_mut(&mut self, x: u32, y: u32) -> &mut [u8] {
        let o = self.offset(x, y);
        let c = self.channels as usize;
        &mut self.data[o..o + c]
    }

    /// BT.601 luma, rounded. One-channel frames are returned unchanged.
    pub fn to_grayscale(&self) -> Frame {
        if self.channels == 1 {
            return self.clone();
        }
        let data = self
            .data
            .chunks_exact(3)
            .map(|p| luma(p[0], p[1], p[2]))
            .collect();
        Frame {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
            timestamp: self.timestamp,
        }
    }

    pub fn crop(&self, rect: Rect) -> Result<Frame> {
        if !rect.is_valid_within(self.width, self.height) {
            return Err(Error::Range(format!(
                "crop box {:?} outside {}x{} frame",
                <[u32; 4]>::from(rect),
                self.width,
                self.height
            )));
        }
        let c = self.channels as usize;
        let row_len = rect.width() as usize * c;
        let mut data = Vec::with_capacity(row_len * rect.height() as usize);
        for y in rect.y0..rect.y1 {
            let start = self.offset(rect.x0, y);
            data.extend_from_slice(&self.data[start..start + row_len]);
        }
        Ok(Frame {
            width: rect.width(),
            height: rect.height(),
            channels: self.channels,
            data,
            timestamp: self.timestamp,
        })
    }

    /// Bilinear resampling with pixel-centre alignment. Returns a clone when
    /// the size already matches.
    pub fn resize_bilinear(&self, width: u32, height: u32) -> Result<Frame> {
        if width == 0 || height == 0 {
            return Err(Error::Structure("resize target must be nonempty".into()));
        }
        if width == self.width && height == self.height {
            return Ok(self.clone());
        }
        let c = self.channels as usize;
        let sx = self.width as f64 / width as f64;
        let sy = self.height as f64 / height as f64;
        let mut data = Vec::with_capacity(width as usize * height as usize * c);
        for y in 0..height {
            let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, (self.height - 1) as f64);
            let y0 = fy.floor() as u32;
            let y1 = (y0 + 1).min(self.height - 1);
            let wy = fy - y0 as f64;
            for x in 0..width {
                let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, (self.width - 1) as f64);
                let x0 = fx.floor() as u32;
                let x1 = (x0 + 1).min(self.width - 1);
                let wx = fx - x0 as f64;
                for ch in 0..c {
                    let p00 = self.pixel(x0, y0)[ch] as f64;
                    let p10 = self.pixel(x1, y0)[ch] as f64;
                    let p01 = self.pixel(x0, y1)[ch] as f64;
                    let p11 = self.pixel(x1, y1)[ch] as f64;
                    let top = p00 + (p10 - p00) * wx;
                    let bottom = p01 + (p11 - p01) * wx;
                    let v = top + (bottom - top) * wy;
                    data.push(v.round().clamp(0.0, 255.0) as u8);
                }
            }
        }
        Frame::new(width, height, self.channels, data).map(|f| f.with_timestamp(self.timestamp))
    }

    /// Samples scaled to `[0, 1]`.
    pub fn to_unit(&self) -> Vec<f64> {
        self.data.iter().map(|&v| v as f64 / 255.0).collect()
    }
}

pub(crate) fn luma(r: u8, g: u8, b: u8) -> u8 {
    (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64)
        .round()
        .clamp(0.0, 255.0) as u8
}

/// Per-pixel exclusion map; `true` marks an occluded pixel.
#[derive(Clone, PartialEq, Eq)]
pub struct OcclusionMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl std::fmt::Debug for OcclusionMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OcclusionMask")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("occluded", &self.count_occluded())
            .finish()
    }
}

impl OcclusionMask {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width as usize * height as usize {
            return Err(Error::Structure(format!(
                "mask has {} bits, expected {}x{}",
                bits.len(),
                width,
                height
            )));
        }
        Ok(OcclusionMask {
            width,
            height,
            bits,
        })
    }

    pub fn clear(width: u32, height: u32) -> Self {
        OcclusionMask {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    /// Mask with every pixel inside one of `boxes` marked occluded. Boxes are
    /// clipped to the mask.
    pub fn from_boxes(width: u32, height: u32, boxes: &[Rect]) -> Self {
        let mut mask = OcclusionMask::clear(width, height);
        let bounds = Rect::full(width, height);
        for b in boxes.iter().filter_map(|b| b.intersect(&bounds)) {
            for y in b.y0..b.y1 {
                for x in b.x0..b.x1 {
                    mask.set(x, y, true);
                }
            }
        }
        mask
    }

    /// Threshold a one-channel frame: samples ≥ 128 are occluded.
    pub fn from_gray(frame: &Frame) -> Result<Self> {
        if frame.channels() != 1 {
            return Err(Error::Structure("mask images must have one channel".into()));
        }
        Ok(OcclusionMask {
            width: frame.width(),
            height: frame.height(),
            bits: frame.data().iter().map(|&v| v >= 128).collect(),
        })
    }

    /// 0 = keep, 255 = occluded.
    pub fn to_gray(&self) -> Frame {
        let data = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        Frame::new(self.width, self.height, 1, data).expect("mask dimensions are valid")
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        self.bits[y as usize * self.width as usize + x as usize] = value;
    }

    pub fn count_occluded(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn matches(&self, frame: &Frame) -> bool {
        self.width == frame.width() && self.height == frame.height()
    }

    pub fn crop(&self, rect: Rect) -> Result<OcclusionMask> {
        if !rect.is_valid_within(self.width, self.height) {
            return Err(Error::Range(format!(
                "crop box {:?} outside {}x{} mask",
                <[u32; 4]>::from(rect),
                self.width,
                self.height
            )));
        }
        let mut bits = Vec::with_capacity(rect.area() as usize);
        for y in rect.y0..rect.y1 {
            let row = y as usize * self.width as usize;
            bits.extend_from_slice(&self.bits[row + rect.x0 as usize..row + rect.x1 as usize]);
        }
        OcclusionMask::new(rect.width(), rect.height(), bits)
    }

    /// Pixelwise OR.
    pub fn union(&self, other: &OcclusionMask) -> Result<OcclusionMask> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::Structure("mask dimensions differ".into()));
        }
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| *a || *b).collect();
        OcclusionMask::new(self.width, self.height, bits)
    }
}
