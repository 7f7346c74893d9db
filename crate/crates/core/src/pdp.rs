//! Perceptual distance profiles.
//!
//! A profile records, for every frame of a sequence, its distance to the
//! final ground-truth frame. Two profiles are compared by resampling both
//! onto a shared `[0, 1]` time axis and taking the L2 norm of their
//! difference, which makes the score independent of frame counts.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backends::{embedding_distance, EmbeddingMode, FrameDistance};
use crate::error::{Error, Result};
use crate::media::{EmbeddingSet, Frame, FrameSequence};

pub const DEFAULT_POINTS: usize = 200;

/// Denominators smaller than this are replaced by 1 when normalising.
pub const NORMALIZE_EPS: f64 = 1e-8;

/// Distances over a normalised time axis.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceProfile {
    values: Vec<f64>,
    axis: Vec<f64>,
}

impl DistanceProfile {
    /// Profile over `linspace(0, 1, values.len())`.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let axis = linspace(0.0, 1.0, values.len());
        DistanceProfile::with_axis(values, axis)
    }

    pub fn with_axis(values: Vec<f64>, axis: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::NoFrames);
        }
        if values.len() != axis.len() {
            return Err(Error::Structure(format!(
                "profile has {} values but {} axis points",
                values.len(),
                axis.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("profile values must be finite".into()));
        }
        if axis[0] != 0.0 || (axis.len() > 1 && *axis.last().unwrap() != 1.0) {
            return Err(Error::Structure("profile axis must run from 0 to 1".into()));
        }
        if axis.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Structure("profile axis must be strictly increasing".into()));
        }
        Ok(DistanceProfile { values, axis })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("profiles are nonempty")
    }

    /// `t,value` CSV with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value\n");
        for (t, v) in self.axis.iter().zip(&self.values) {
            writeln!(out, "{t:.12e},{v:.12e}").unwrap();
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == "t,value" => {}
            Some((i, h)) => {
                return Err(Error::Format(format!("row {}: expected header t,value, got {h:?}", i + 1)))
            }
            None => return Err(Error::Format("empty profile CSV".into())),
        }
        let mut axis = Vec::new();
        let mut values = Vec::new();
        for (i, line) in lines {
            let row = i + 1;
            let (t, v) = line
                .split_once(',')
                .ok_or_else(|| Error::Format(format!("row {row}: expected two columns")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("row {row}: {e}")))
            };
            axis.push(parse(t)?);
            values.push(parse(v)?);
        }
        if values.is_empty() {
            return Err(Error::Format("profile CSV has no rows".into()));
        }
        DistanceProfile::with_axis(values, axis).map_err(|e| Error::Format(e.to_string()))
    }
}

/// `n` evenly spaced points from `start` to `end` inclusive. A single point
/// is `[start]`.
pub fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (end - start) / (n - 1) as f64;
            let mut v: Vec<f64> = (0..n).map(|i| start + step * i as f64).collect();
            v[n - 1] = end;
            v
        }
    }
}

/// Piecewise-linear interpolation of `(xs, ys)` at `at`, clamping outside
/// the sample range. `xs` must be strictly increasing.
pub fn interpolate(xs: &[f64], ys: &[f64], at: &[f64]) -> Vec<f64> {
    if xs.len() == 1 {
        return vec![ys[0]; at.len()];
    }
    let last = xs.len() - 1;
    at.iter()
        .map(|&t| {
            if t <= xs[0] {
                return ys[0];
            }
            if t >= xs[last] {
                return ys[last];
            }
            // first index with xs[i] > t
            let hi = xs.partition_point(|&x| x <= t);
            let lo = hi - 1;
            if xs[lo] == t {
                return ys[lo];
            }
            let w = (t - xs[lo]) / (xs[hi] - xs[lo]);
            ys[lo] + (ys[hi] - ys[lo]) * w
        })
        .collect()
}

/// Trapezoidal integral of `ys` over `xs`.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| (x[1] - x[0]) * (y[0] + y[1]) * 0.5)
        .sum()
}

/// Distance of each frame of `seq` to `target`, evaluated in parallel.
pub fn compute_profile(
    seq: &FrameSequence,
    target: &Frame,
    backend: &dyn FrameDistance,
) -> Result<DistanceProfile> {
    if seq.is_empty() {
        return Err(Error::NoFrames);
    }
    let values = seq
        .frames()
        .par_iter()
        .enumerate()
        .map(|(index, f)| {
            backend.distance(f, target).map_err(|e| Error::Backend {
                index,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    DistanceProfile::new(values)
}

/// Profile from precomputed per-frame embeddings against `target`.
pub fn embedding_profile(
    es: &EmbeddingSet,
    target: &[f64],
    mode: EmbeddingMode,
) -> Result<DistanceProfile> {
    if es.is_empty() {
        return Err(Error::NoFrames);
    }
    let values = es
        .vectors()
        .iter()
        .enumerate()
        .map(|(index, v)| {
            embedding_distance(v, target, mode).map_err(|e| Error::Backend {
                index,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    DistanceProfile::new(values)
}

/// Parses an externally scored `index,distance` CSV (optional header) into a
/// profile. Indices must cover `0..n` exactly once.
pub fn profile_from_scores(text: &str) -> Result<DistanceProfile> {
    let mut rows: Vec<(usize, f64)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with("index")) {
            continue;
        }
        let row = i + 1;
        let (idx, d) = line
            .split_once(',')
            .ok_or_else(|| Error::Format(format!("row {row}: expected index,distance")))?;
        let idx: usize = idx
            .trim()
            .parse()
            .map_err(|e| Error::Format(format!("row {row}: {e}")))?;
        let d: f64 = d
            .trim()
            .parse()
            .map_err(|e| Error::Format(format!("row {row}: {e}")))?;
        if !d.is_finite() || d < 0.0 {
            return Err(Error::Format(format!("row {row}: distance must be finite and ≥ 0")));
        }
        rows.push((idx, d));
    }
    rows.sort_by_key(|r| r.0);
    if rows.iter().enumerate().any(|(i, r)| r.0 != i) {
        return Err(Error::Format("score indices must be 0..n without gaps".into()));
    }
    DistanceProfile::new(rows.into_iter().map(|r| r.1).collect())
}

/// Linear remap so the first value becomes 1 and the last 0. A near-zero
/// span leaves the scale at 1, so constant profiles map to zeros.
pub fn normalize_profile(p: &DistanceProfile) -> DistanceProfile {
    let start = p.first();
    let end = p.last();
    let mut denom = start - end;
    if denom.abs() < NORMALIZE_EPS {
        denom = 1.0;
    }
    DistanceProfile {
        values: p.values.iter().map(|v| (v - end) / denom).collect(),
        axis: p.axis.clone(),
    }
}

/// Piecewise-linear resampling onto `linspace(0, 1, n_points)`.
pub fn resample(p: &DistanceProfile, n_points: usize) -> Result<DistanceProfile> {
    if n_points < 2 {
        return Err(Error::Config(format!("n_points must be ≥ 2, got {n_points}")));
    }
    let axis = linspace(0.0, 1.0, n_points);
    let mut values = interpolate(&p.axis, &p.values, &axis);
    if p.len() > 1 {
        values[0] = p.first();
        values[n_points - 1] = p.last();
    }
    Ok(DistanceProfile { values, axis })
}

/// L2 distance between two curves sampled on the same axis.
pub fn l2_between(a: &DistanceProfile, b: &DistanceProfile) -> Result<f64> {
    if a.axis != b.axis {
        return Err(Error::Structure("curves are on different axes".into()));
    }
    let sq: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| (x - y) * (x - y)).collect();
    Ok(trapezoid(&a.axis, &sq).max(0.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdpConfig {
    pub n_points: usize,
    /// Selects which pair of curves is kept in [`PdpResult::curves`].
    pub normalize: bool,
}

impl Default for PdpConfig {
    fn default() -> Self {
        PdpConfig {
            n_points: DEFAULT_POINTS,
            normalize: false,
        }
    }
}

impl PdpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_points < 2 {
            return Err(Error::Config(format!("n_points must be ≥ 2, got {}", self.n_points)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdpResult {
    /// Score on raw profiles.
    pub pdp: f64,
    /// Score after remapping each profile to run from 1 to 0.
    pub pdp_norm: f64,
    /// Raw distance of the last generated frame to the target.
    pub final_distance: f64,
    /// Raw (unresampled) profiles.
    pub gt_profile: DistanceProfile,
    pub gen_profile: DistanceProfile,
    /// Resampled ground-truth and generated curves, normalised when the
    /// config asks for it.
    pub curves: (DistanceProfile, DistanceProfile),
}

impl PdpResult {
    /// The score selected by `normalize`.
    pub fn score(&self, normalize: bool) -> f64 {
        if normalize {
            self.pdp_norm
        } else {
            self.pdp
        }
    }
}

/// Scores two raw profiles measured against the same target.
pub fn pdp_from_profiles(
    gt: DistanceProfile,
    gen: DistanceProfile,
    cfg: &PdpConfig,
) -> Result<PdpResult> {
    cfg.validate()?;
    let raw = (resample(&gt, cfg.n_points)?, resample(&gen, cfg.n_points)?);
    let norm = (
        resample(&normalize_profile(&gt), cfg.n_points)?,
        resample(&normalize_profile(&gen), cfg.n_points)?,
    );
    let pdp = l2_between(&raw.0, &raw.1)?;
    let pdp_norm = l2_between(&norm.0, &norm.1)?;
    Ok(PdpResult {
        pdp,
        pdp_norm,
        final_distance: gen.last(),
        gt_profile: gt,
        gen_profile: gen,
        curves: if cfg.normalize { norm } else { raw },
    })
}

/// Both sequences are profiled against the last ground-truth frame.
pub fn pdp_score(
    gt: &FrameSequence,
    gen: &FrameSequence,
    backend: &dyn FrameDistance,
    cfg: &PdpConfig,
) -> Result<PdpResult> {
    let target = gt.last().ok_or(Error::NoFrames)?;
    if gen.is_empty() {
        return Err(Error::NoFrames);
    }
    let (p_gt, p_gen) = rayon::join(
        || compute_profile(gt, target, backend),
        || compute_profile(gen, target, backend),
    );
    pdp_from_profiles(p_gt?, p_gen?, cfg)
}

/// Embedding-driven variant: the target is the last ground-truth vector.
pub fn pdp_score_embeddings(
    gt: &EmbeddingSet,
    gen: &EmbeddingSet,
    mode: EmbeddingMode,
    cfg: &PdpConfig,
) -> Result<PdpResult> {
    if gt.dimension() != gen.dimension() {
        return Err(Error::Structure(format!(
            "embedding dimensions differ: {} vs {}",
            gt.dimension(),
            gen.dimension()
        )));
    }
    let target = gt.vectors().last().ok_or(Error::NoFrames)?;
    let p_gt = embedding_profile(gt, target, mode)?;
    let p_gen = embedding_profile(gen, target, mode)?;
    pdp_from_profiles(p_gt, p_gen, cfg)
}

/// Pointwise mean of profiles after resampling each to `n_points`.
pub fn mean_profile(profiles: &[DistanceProfile], n_points: usize) -> Result<DistanceProfile> {
    if profiles.is_empty() {
        return Err(Error::NoFrames);
    }
    let mut acc = vec![0.0; n_points];
    for p in profiles {
        let r = resample(p, n_points)?;
        for (a, v) in acc.iter_mut().zip(r.values) {
            *a += v;
        }
    }
    let k = profiles.len() as f64;
    DistanceProfile::new(acc.into_iter().map(|v| v / k).collect())
}
