//! Frame matching, per-video and cross-video aggregation, and the Fréchet
//! distance between Gaussian fits of embedding populations.

use std::collections::BTreeMap;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backends::FrameDistance;
use crate::error::{Error, Result};
use crate::media::{EmbeddingSet, FrameSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlignmentMode {
    /// Each generated frame independently takes its closest ground-truth frame.
    Nearest,
    /// Ground-truth indices must be non-decreasing across generated frames.
    #[default]
    Monotone,
}

impl FromStr for AlignmentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest" => Ok(AlignmentMode::Nearest),
            "monotone" => Ok(AlignmentMode::Monotone),
            other => Err(Error::Config(format!("unknown alignment mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentResult {
    /// `(gen_index, gt_index)`, one per generated frame in order.
    pub matches: Vec<(usize, usize)>,
    pub per_frame_distances: Vec<f64>,
}

impl AlignmentResult {
    pub fn total(&self) -> f64 {
        self.per_frame_distances.iter().sum()
    }
}

/// Rectangular table of distances, `rows × cols`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceTable {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DistanceTable {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::NoFrames);
        }
        if values.len() != rows * cols {
            return Err(Error::Structure(format!(
                "table has {} values, expected {rows}x{cols}",
                values.len()
            )));
        }
        Ok(DistanceTable { rows, cols, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }
}

/// Distances from every generated frame (rows) to every ground-truth frame
/// (columns), computed in parallel.
pub fn distance_table(
    gen: &FrameSequence,
    gt: &FrameSequence,
    backend: &dyn FrameDistance,
) -> Result<DistanceTable> {
    if gen.is_empty() || gt.is_empty() {
        return Err(Error::NoFrames);
    }
    let cols = gt.len();
    let values = (0..gen.len() * cols)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / cols, k % cols);
            backend
                .distance(&gen.frames()[i], &gt.frames()[j])
                .map_err(|e| Error::Backend {
                    index: i,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    DistanceTable::new(gen.len(), cols, values)
}

fn argmin(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x < xs[best] {
            best = i;
        }
    }
    best
}

/// Matches rows to columns. Ties go to the lowest column index.
pub fn align_table(table: &DistanceTable, mode: AlignmentMode) -> AlignmentResult {
    let cols: Vec<usize> = match mode {
        AlignmentMode::Nearest => (0..table.rows).map(|i| argmin(table.row(i))).collect(),
        AlignmentMode::Monotone => monotone_assignment(table),
    };
    let matches: Vec<(usize, usize)> = cols.into_iter().enumerate().collect();
    let per_frame_distances = matches.iter().map(|&(i, j)| table.get(i, j)).collect();
    AlignmentResult {
        matches,
        per_frame_distances,
    }
}

/// Minimum-cost map from rows to columns with non-decreasing column index.
///
/// `cost[i][j]` is the best total over rows `0..=i` with row `i` on column
/// `j`; the recurrence takes a running prefix minimum over the previous row.
fn monotone_assignment(table: &DistanceTable) -> Vec<usize> {
    let (n, m) = (table.rows, table.cols);
    let mut cost = vec![0.0; n * m];
    cost[..m].copy_from_slice(table.row(0));
    for i in 1..n {
        let mut best_prev = f64::INFINITY;
        for j in 0..m {
            best_prev = best_prev.min(cost[(i - 1) * m + j]);
            cost[i * m + j] = table.get(i, j) + best_prev;
        }
    }
    let mut out = vec![0; n];
    let mut limit = m;
    for i in (0..n).rev() {
        let j = argmin(&cost[i * m..i * m + limit]);
        out[i] = j;
        limit = j + 1;
    }
    out
}

pub fn align_frames(
    gen: &FrameSequence,
    gt: &FrameSequence,
    backend: &dyn FrameDistance,
    mode: AlignmentMode,
) -> Result<AlignmentResult> {
    Ok(align_table(&distance_table(gen, gt, backend)?, mode))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoScore {
    pub metric_id: String,
    pub value: f64,
    pub frame_count: usize,
}

impl VideoScore {
    pub fn from_alignment(metric_id: impl Into<String>, a: &AlignmentResult) -> Self {
        let n = a.per_frame_distances.len();
        VideoScore {
            metric_id: metric_id.into(),
            value: a.total() / n as f64,
            frame_count: n,
        }
    }
}

pub fn score_video(
    gen: &FrameSequence,
    gt: &FrameSequence,
    backend: &dyn FrameDistance,
    mode: AlignmentMode,
) -> Result<VideoScore> {
    let a = align_frames(gen, gt, backend, mode)?;
    Ok(VideoScore::from_alignment(backend.id(), &a))
}

/// Unweighted mean over videos; frame counts play no part.
pub fn aggregate(scores: &[VideoScore]) -> Result<f64> {
    let first = scores.first().ok_or_else(|| Error::Config("no scores to aggregate".into()))?;
    if let Some(s) = scores.iter().find(|s| s.metric_id != first.metric_id) {
        return Err(Error::Config(format!(
            "cannot aggregate metric {:?} with {:?}",
            s.metric_id, first.metric_id
        )));
    }
    Ok(scores.iter().map(|s| s.value).sum::<f64>() / scores.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStats {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub count: usize,
}

/// Sample mean and unbiased (n − 1) covariance.
pub fn gaussian_stats(es: &EmbeddingSet) -> Result<GaussianStats> {
    let n = es.len();
    if n < 2 {
        return Err(Error::Config(format!(
            "need at least 2 embeddings for covariance, got {n}"
        )));
    }
    let d = es.dimension();
    let data = DMatrix::from_fn(n, d, |i, j| es.vectors()[i][j]);
    let mean: DVector<f64> = data.row_mean().transpose();
    let mut centered = data;
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let mut covariance = centered.transpose() * &centered / (n - 1) as f64;
    covariance = (&covariance + covariance.transpose()) * 0.5;
    Ok(GaussianStats {
        mean,
        covariance,
        count: n,
    })
}

/// Eigenvalues below this are treated as a failed decomposition rather than
/// rounding noise.
pub const EIGEN_NEGATIVE_TOLERANCE: f64 = -1e-6;
const EIGEN_MAX_ITER: usize = 10_000;

fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym
        .try_symmetric_eigen(f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or_else(|| Error::Numerical("eigendecomposition did not converge".into()))?;
    Ok((eig.eigenvalues, eig.eigenvectors))
}

fn clamp_eigenvalues(values: &DVector<f64>, what: &str) -> Result<DVector<f64>> {
    if let Some(v) = values.iter().find(|&&v| v < EIGEN_NEGATIVE_TOLERANCE) {
        return Err(Error::Numerical(format!("{what} has eigenvalue {v:e}")));
    }
    Ok(values.map(|v| v.max(0.0)))
}

/// Squared Fréchet (2-Wasserstein) distance between two Gaussians:
/// `‖μa − μb‖² + tr(Σa + Σb − 2 (Σa Σb)^½)`.
///
/// The trace of the cross term is evaluated as `tr((Σa^½ Σb Σa^½)^½)`, which
/// has the same spectrum but is symmetric positive semidefinite.
pub fn frechet_distance(a: &GaussianStats, b: &GaussianStats) -> Result<f64> {
    let d = a.mean.len();
    if b.mean.len() != d || a.covariance.nrows() != d || b.covariance.nrows() != d {
        return Err(Error::Structure(format!(
            "dimension mismatch: {} vs {}",
            d,
            b.mean.len()
        )));
    }
    let (va, vecs) = symmetric_eigenvalues(&a.covariance)?;
    let va = clamp_eigenvalues(&va, "first covariance")?;
    let sqrt_a = &vecs * DMatrix::from_diagonal(&va.map(f64::sqrt)) * vecs.transpose();
    let inner = &sqrt_a * &b.covariance * &sqrt_a;
    let (vi, _) = symmetric_eigenvalues(&inner)?;
    let vi = clamp_eigenvalues(&vi, "covariance product")?;
    let cross: f64 = vi.iter().map(|v| v.sqrt()).sum();
    let mean_term = (&a.mean - &b.mean).norm_squared();
    let value = mean_term + a.covariance.trace() + b.covariance.trace() - 2.0 * cross;
    if !value.is_finite() {
        return Err(Error::Numerical("non-finite Fréchet distance".into()));
    }
    Ok(value.max(0.0))
}

/// Per-video metric values plus their cross-video means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoReport {
    pub id: String,
    pub metrics: BTreeMap<String, f64>,
    /// Ground-truth index matched to each generated frame.
    #[serde(default)]
    pub matches: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub videos: Vec<VideoReport>,
    pub aggregate: BTreeMap<String, f64>,
    pub fid: Option<f64>,
}

impl EvalReport {
    /// Builds the aggregate block as the unweighted mean of each metric over
    /// the videos that report it.
    pub fn new(videos: Vec<VideoReport>, fid: Option<f64>) -> Result<Self> {
        let mut by_metric: BTreeMap<String, Vec<VideoScore>> = BTreeMap::new();
        for v in &videos {
            for (k, &value) in &v.metrics {
                by_metric.entry(k.clone()).or_default().push(VideoScore {
                    metric_id: k.clone(),
                    value,
                    frame_count: 0,
                });
            }
        }
        let aggregate = by_metric
            .into_iter()
            .map(|(k, scores)| aggregate(&scores).map(|v| (k, v)))
            .collect::<Result<_>>()?;
        Ok(EvalReport {
            videos,
            aggregate,
            fid,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}
