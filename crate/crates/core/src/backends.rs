//! Perceptual distance functions between frames, plus the embedding
//! distances used when features are computed out of process.
//!
//! Frame backends resize mismatched inputs to the smaller of the two sizes
//! before comparing, so sequences of different resolutions can be scored
//! against each other.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::media::Frame;

/// A distance between two frames. Implementations must return finite,
/// nonnegative, symmetric values that are zero for identical inputs.
pub trait FrameDistance: Sync {
    fn id(&self) -> &str;
    fn distance(&self, a: &Frame, b: &Frame) -> Result<f64>;
}

/// Built-in frame backends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    PixelMse,
    Ssim,
    GramTexture,
}

impl Backend {
    pub const ALL: [Backend; 3] = [Backend::PixelMse, Backend::Ssim, Backend::GramTexture];

    pub fn name(&self) -> &'static str {
        match self {
            Backend::PixelMse => "mse",
            Backend::Ssim => "ssim",
            Backend::GramTexture => "gram",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mse" | "pixel-mse" => Ok(Backend::PixelMse),
            "ssim" => Ok(Backend::Ssim),
            "gram" | "gram-texture" => Ok(Backend::GramTexture),
            other => Err(Error::Config(format!(
                "unknown backend {other:?} (expected mse, ssim or gram)"
            ))),
        }
    }
}

impl FrameDistance for Backend {
    fn id(&self) -> &str {
        self.name()
    }

    fn distance(&self, a: &Frame, b: &Frame) -> Result<f64> {
        match self {
            Backend::PixelMse => mse_distance(a, b),
            Backend::Ssim => ssim_distance(a, b),
            Backend::GramTexture => gram_texture_distance(a, b),
        }
    }
}

/// Bilinearly resizes whichever input is larger so both share the smaller
/// width and height.
pub fn to_common_size(a: &Frame, b: &Frame) -> Result<(Frame, Frame)> {
    let w = a.width().min(b.width());
    let h = a.height().min(b.height());
    Ok((a.resize_bilinear(w, h)?, b.resize_bilinear(w, h)?))
}

/// Mean squared difference on the `[0, 1]` scale.
pub fn mse_distance(a: &Frame, b: &Frame) -> Result<f64> {
    if a.channels() != b.channels() {
        return Err(Error::Structure(format!(
            "channel mismatch: {} vs {}",
            a.channels(),
            b.channels()
        )));
    }
    let (a, b) = to_common_size(a, b)?;
    let sum: u64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = x.abs_diff(y) as u64;
            d * d
        })
        .sum();
    Ok(sum as f64 / (a.data().len() as f64 * 255.0 * 255.0))
}

pub const SSIM_WINDOW: u32 = 8;
const SSIM_C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
const SSIM_C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);

fn ssim_block(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
        cov += (x - ma) * (y - mb);
    }
    va /= n;
    vb /= n;
    cov /= n;
    ((2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2))
        / ((ma * ma + mb * mb + SSIM_C1) * (va + vb + SSIM_C2))
}

/// `1 − SSIM` over non-overlapping 8×8 luma windows, clamped to `[0, 1]`.
/// Frames smaller than one window use global statistics.
pub fn ssim_distance(a: &Frame, b: &Frame) -> Result<f64> {
    let (a, b) = to_common_size(&a.to_grayscale(), &b.to_grayscale())?;
    let (w, h) = (a.width(), a.height());
    let av: Vec<f64> = a.data().iter().map(|&v| v as f64).collect();
    let bv: Vec<f64> = b.data().iter().map(|&v| v as f64).collect();
    let ssim = if w < SSIM_WINDOW || h < SSIM_WINDOW {
        ssim_block(&av, &bv)
    } else {
        let (nx, ny) = (w / SSIM_WINDOW, h / SSIM_WINDOW);
        let win = (SSIM_WINDOW * SSIM_WINDOW) as usize;
        let mut wa = Vec::with_capacity(win);
        let mut wb = Vec::with_capacity(win);
        let mut total = 0.0;
        for by in 0..ny {
            for bx in 0..nx {
                wa.clear();
                wb.clear();
                for y in by * SSIM_WINDOW..(by + 1) * SSIM_WINDOW {
                    let row = (y * w) as usize;
                    let x0 = row + (bx * SSIM_WINDOW) as usize;
                    let x1 = x0 + SSIM_WINDOW as usize;
                    wa.extend_from_slice(&av[x0..x1]);
                    wb.extend_from_slice(&bv[x0..x1]);
                }
                total += ssim_block(&wa, &wb);
            }
        }
        total / (nx * ny) as f64
    };
    Ok((1.0 - ssim).clamp(0.0, 1.0))
}

pub const GRAM_SIZE: u32 = 64;

const GRADIENT_KERNELS: [[[f64; 3]; 3]; 4] = [
    [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]],
    [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]],
    [[0.0, 1.0, 2.0], [-1.0, 0.0, 1.0], [-2.0, -1.0, 0.0]],
    [[-2.0, -1.0, 0.0], [-1.0, 0.0, 1.0], [0.0, 1.0, 2.0]],
];

/// 4×4 Gram matrix of the horizontal, vertical and two diagonal gradient
/// responses of a 64×64 luma thumbnail, averaged over interior pixels.
pub fn gradient_gram(frame: &Frame) -> Result<[[f64; 4]; 4]> {
    let g = frame.to_grayscale().resize_bilinear(GRAM_SIZE, GRAM_SIZE)?;
    let lum: Vec<f64> = g.data().iter().map(|&v| v as f64 / 255.0).collect();
    let px = |x: u32, y: u32| lum[(y * GRAM_SIZE + x) as usize];
    let mut gram = [[0.0; 4]; 4];
    let mut count = 0usize;
    for y in 1..GRAM_SIZE - 1 {
        for x in 1..GRAM_SIZE - 1 {
            let mut v = [0.0; 4];
            for (k, kernel) in GRADIENT_KERNELS.iter().enumerate() {
                for (dy, row) in kernel.iter().enumerate() {
                    for (dx, &c) in row.iter().enumerate() {
                        v[k] += c * px(x + dx as u32 - 1, y + dy as u32 - 1);
                    }
                }
            }
            for i in 0..4 {
                for j in 0..4 {
                    gram[i][j] += v[i] * v[j];
                }
            }
            count += 1;
        }
    }
    for row in &mut gram {
        for v in row.iter_mut() {
            *v /= count as f64;
        }
    }
    Ok(gram)
}

fn frobenius(m: &[[f64; 4]; 4]) -> f64 {
    m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

/// Texture distance: Frobenius distance between gradient Gram matrices,
/// normalised by their mean norm and squashed with `x / (1 + x)`.
pub fn gram_texture_distance(a: &Frame, b: &Frame) -> Result<f64> {
    let ga = gradient_gram(a)?;
    let gb = gradient_gram(b)?;
    let mut diff = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            diff[i][j] = ga[i][j] - gb[i][j];
        }
    }
    let scale = 0.5 * (frobenius(&ga) + frobenius(&gb));
    let x = if scale > 0.0 { frobenius(&diff) / scale } else { 0.0 };
    Ok(x / (1.0 + x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingMode {
    /// `(1 − cos) / 2`, mapping similarity `[−1, 1]` onto distance `[0, 1]`.
    #[default]
    Cosine,
    L2,
}

impl FromStr for EmbeddingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(EmbeddingMode::Cosine),
            "l2" => Ok(EmbeddingMode::L2),
            other => Err(Error::Config(format!("unknown embedding mode {other:?}"))),
        }
    }
}

pub fn embedding_distance(a: &[f64], b: &[f64], mode: EmbeddingMode) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Structure(format!(
            "embedding length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a == b && a.iter().any(|&x| x != 0.0) {
        return Ok(0.0);
    }
    match mode {
        EmbeddingMode::L2 => Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()),
        EmbeddingMode::Cosine => {
            let na = a.iter().map(|x| x * x).sum::<f64>();
            let nb = b.iter().map(|x| x * x).sum::<f64>();
            if na == 0.0 || nb == 0.0 {
                return Err(Error::Numerical("cosine distance of a zero vector".into()));
            }
            let cos = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb).sqrt();
            Ok(((1.0 - cos.clamp(-1.0, 1.0)) / 2.0).clamp(0.0, 1.0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::EmbeddingSet;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_frame(rng: &mut ChaCha8Rng, w: u32, h: u32, c: u8) -> Frame {
        let data = (0..w * h * c as u32).map(|_| rng.gen()).collect();
        Frame::new(w, h, c, data).unwrap()
    }

    fn mse_oracle(a: &Frame, b: &Frame) -> f64 {
        let mut acc = 0.0;
        let mut n = 0usize;
        for y in 0..a.height() {
            for x in 0..a.width() {
                for ch in 0..a.channels() as usize {
                    let d = a.pixel(x, y)[ch] as f64 / 255.0 - b.pixel(x, y)[ch] as f64 / 255.0;
                    acc += d * d;
                    n += 1;
                }
            }
        }
        acc / n as f64
    }

    #[test]
    fn mse_examples() {
        let black = Frame::filled(4, 4, 3, 0).unwrap();
        let white = Frame::filled(4, 4, 3, 255).unwrap();
        let gray = Frame::filled(4, 4, 3, 128).unwrap();
        assert_eq!(mse_distance(&black, &black).unwrap(), 0.0);
        assert_eq!(mse_distance(&black, &white).unwrap(), 1.0);
        let expected = (128.0f64 / 255.0).powi(2);
        assert!((mse_distance(&black, &gray).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.251965).abs() < 1e-6);
        assert!(mse_distance(&black, &Frame::filled(4, 4, 1, 0).unwrap()).is_err());
    }

    #[test]
    fn mse_matches_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let a = random_frame(&mut rng, 8, 8, 3);
            let b = random_frame(&mut rng, 8, 8, 3);
            assert!((mse_distance(&a, &b).unwrap() - mse_oracle(&a, &b)).abs() < 1e-12);
        }
    }

    #[test]
    fn mismatched_sizes_resize_to_smaller() {
        let a = Frame::filled(16, 8, 3, 10).unwrap();
        let b = Frame::filled(8, 16, 3, 10).unwrap();
        assert_eq!(mse_distance(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn ssim_constant_images_closed_form() {
        let black = Frame::filled(16, 16, 1, 0).unwrap();
        let white = Frame::filled(16, 16, 1, 255).unwrap();
        // zero variance: SSIM = C1 / (255² + C1)
        let expected = 1.0 - SSIM_C1 / (255.0 * 255.0 + SSIM_C1);
        assert!((ssim_distance(&black, &white).unwrap() - expected).abs() < 1e-12);
        assert_eq!(ssim_distance(&white, &white).unwrap(), 0.0);
    }

    #[test]
    fn ssim_small_noise_is_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_frame(&mut rng, 16, 16, 1);
        let data = a
            .data()
            .iter()
            .map(|&v| {
                let step: i16 = if rng.gen() { 1 } else { -1 };
                (v as i16 + step).clamp(0, 255) as u8
            })
            .collect();
        let b = Frame::new(16, 16, 1, data).unwrap();
        let d = ssim_distance(&a, &b).unwrap();
        assert!(d > 0.0 && d < 0.01, "{d}");
    }

    #[test]
    fn ssim_tiny_frames_use_global_stats() {
        let a = Frame::new(2, 2, 1, vec![0, 50, 100, 150]).unwrap();
        let b = Frame::new(2, 2, 1, vec![150, 100, 50, 0]).unwrap();
        let d = ssim_distance(&a, &b).unwrap();
        assert!(d > 0.5 && d <= 1.0);
    }

    fn gram_oracle(frame: &Frame) -> [[f64; 4]; 4] {
        // direct per-pixel accumulation using explicit offsets
        let g = frame.to_grayscale().resize_bilinear(64, 64).unwrap();
        let p = |x: i64, y: i64| g.data()[(y * 64 + x) as usize] as f64 / 255.0;
        let mut vs = Vec::new();
        for y in 1..63i64 {
            for x in 1..63i64 {
                let h = (p(x + 1, y - 1) + 2.0 * p(x + 1, y) + p(x + 1, y + 1))
                    - (p(x - 1, y - 1) + 2.0 * p(x - 1, y) + p(x - 1, y + 1));
                let v = (p(x - 1, y + 1) + 2.0 * p(x, y + 1) + p(x + 1, y + 1))
                    - (p(x - 1, y - 1) + 2.0 * p(x, y - 1) + p(x + 1, y - 1));
                let d1 = (p(x, y - 1) + 2.0 * p(x + 1, y - 1) + p(x + 1, y))
                    - (p(x - 1, y) + 2.0 * p(x - 1, y + 1) + p(x, y + 1));
                let d2 = (p(x + 1, y) + p(x, y + 1) + 2.0 * p(x + 1, y + 1))
                    - (2.0 * p(x - 1, y - 1) + p(x, y - 1) + p(x - 1, y));
                vs.push([h, v, d1, d2]);
            }
        }
        let mut gram = [[0.0; 4]; 4];
        for v in &vs {
            for i in 0..4 {
                for j in 0..4 {
                    gram[i][j] += v[i] * v[j] / vs.len() as f64;
                }
            }
        }
        gram
    }

    #[test]
    fn gram_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_frame(&mut rng, 64, 64, 3);
        let a = gradient_gram(&f).unwrap();
        let b = gram_oracle(&f);
        for i in 0..4 {
            for j in 0..4 {
                assert!((a[i][j] - b[i][j]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn gram_flat_vs_checkerboard() {
        let flat = Frame::filled(64, 64, 1, 128).unwrap();
        // single-pixel checks cancel in every 3x3 kernel, so use 4px cells
        let data = (0..64 * 64).map(|i| if (i % 64 / 4 + i / 64 / 4) % 2 == 0 { 0 } else { 255 }).collect();
        let checker = Frame::new(64, 64, 1, data).unwrap();
        // flat Gram is zero, so x = ‖G‖ / (‖G‖/2) = 2 and d = 2/3
        let d = gram_texture_distance(&flat, &checker).unwrap();
        assert!(d > 0.5);
        assert!((d - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(gram_texture_distance(&checker, &checker).unwrap(), 0.0);
        assert_eq!(d, gram_texture_distance(&checker, &flat).unwrap());
    }

    #[test]
    fn backend_axioms_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let a = random_frame(&mut rng, 24, 20, 3);
            let b = random_frame(&mut rng, 24, 20, 3);
            for backend in Backend::ALL {
                let ab = backend.distance(&a, &b).unwrap();
                let ba = backend.distance(&b, &a).unwrap();
                assert_eq!(backend.distance(&a, &a).unwrap(), 0.0, "{backend}");
                assert!(ab >= 0.0 && ab.is_finite());
                assert!((ab - ba).abs() < 1e-12, "{backend} not symmetric");
            }
        }
    }

    #[test]
    fn cosine_endpoints() {
        let e = [1.0, 2.0, -0.5];
        let neg: Vec<f64> = e.iter().map(|v| -v).collect();
        assert_eq!(embedding_distance(&e, &e, EmbeddingMode::Cosine).unwrap(), 0.0);
        assert_eq!(embedding_distance(&e, &neg, EmbeddingMode::Cosine).unwrap(), 1.0);
        let d = embedding_distance(&[1.0, 0.0], &[0.0, 1.0], EmbeddingMode::Cosine).unwrap();
        assert_eq!(d, 0.5);
        assert!(embedding_distance(&[0.0, 0.0], &[0.0, 1.0], EmbeddingMode::Cosine).is_err());
        assert!(embedding_distance(&[1.0], &[0.0, 1.0], EmbeddingMode::L2).is_err());
        assert_eq!(embedding_distance(&[0.0, 0.0], &[3.0, 4.0], EmbeddingMode::L2).unwrap(), 5.0);
    }

    #[test]
    fn cosine_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let a: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let s: f64 = rng.gen_range(0.01..100.0);
            let scaled: Vec<f64> = a.iter().map(|v| v * s).collect();
            let d0 = embedding_distance(&a, &b, EmbeddingMode::Cosine).unwrap();
            let d1 = embedding_distance(&scaled, &b, EmbeddingMode::Cosine).unwrap();
            assert!((d0 - d1).abs() < 1e-12);
        }
    }

    #[test]
    fn embedding_lookup() {
        let es = EmbeddingSet::new("m", 2, vec![vec![1.0, 2.0]]).unwrap();
        assert_eq!(es.get(0).unwrap(), &[1.0, 2.0]);
        assert!(es.get(1).is_err());
    }
}
