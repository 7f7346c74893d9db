use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use pb_core::eval::{align_frames, frechet_distance, gaussian_stats, AlignmentMode, EvalReport, VideoReport};
use pb_core::media::io;
use pb_core::pdp::pdp_score;
use pb_core::{Backend, EmbeddingSet, FrameDistance, PdpConfig, Rational};

use crate::failure::{display_paths, require_exists, write_text, Failure};

const RAW_EXTENSION: &str = "pbseq";
const EMBEDDINGS_FILE: &str = "embeddings.txt";

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Directory of ground-truth videos (frame directories or `.pbseq` files).
    #[arg(long)]
    gt: PathBuf,
    /// Directory of generated videos, paired with `--gt` by name.
    #[arg(long)]
    gen: PathBuf,
    #[arg(long, default_value = "mse")]
    backend: Backend,
    #[arg(long, default_value = "monotone")]
    mode: AlignmentMode,
    #[arg(long)]
    fps: Option<Rational>,
    #[arg(long, default_value_t = pb_core::pdp::DEFAULT_POINTS)]
    n_points: usize,
    /// Report path; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Videos under `root` keyed by name.
fn discover(root: &Path) -> Result<BTreeMap<String, PathBuf>, Failure> {
    require_exists(root, "video root")?;
    let entries = std::fs::read_dir(root).map_err(|e| Failure::input(format!("{}: {e}", root.display())))?;
    let mut out = BTreeMap::new();
    for entry in entries {
        let path = entry.map_err(|e| Failure::runtime(format!("{}: {e}", root.display())))?.path();
        let name = if path.is_dir() {
            path.file_name().and_then(|n| n.to_str()).map(str::to_string)
        } else if path.extension().and_then(|e| e.to_str()) == Some(RAW_EXTENSION) {
            path.file_stem().and_then(|n| n.to_str()).map(str::to_string)
        } else {
            None
        };
        if let Some(name) = name {
            out.insert(name, path);
        }
    }
    Ok(out)
}

fn embeddings_path(video: &Path) -> PathBuf {
    if video.is_dir() {
        video.join(EMBEDDINGS_FILE)
    } else {
        video.with_extension(EMBEDDINGS_FILE)
    }
}

/// Pools per-video embeddings when every video on both sides has them.
fn pooled_fid(pairs: &[(String, PathBuf, PathBuf)]) -> Result<Option<f64>, Failure> {
    let paths: Vec<(PathBuf, PathBuf)> = pairs
        .iter()
        .map(|(_, gt, gen)| (embeddings_path(gt), embeddings_path(gen)))
        .collect();
    let present: Vec<bool> = paths.iter().flat_map(|(a, b)| [a.exists(), b.exists()]).collect();
    if !present.iter().any(|&p| p) {
        return Ok(None);
    }
    let missing: Vec<PathBuf> = paths
        .iter()
        .flat_map(|(a, b)| [a, b])
        .filter(|p| !p.exists())
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(Failure::input(format!(
            "embeddings missing for some videos: {}",
            display_paths(&missing)
        )));
    }
    let load = |pick: fn(&(PathBuf, PathBuf)) -> &PathBuf| -> Result<EmbeddingSet, Failure> {
        let sets = paths
            .iter()
            .map(|p| io::load_embeddings(pick(p)))
            .collect::<pb_core::Result<Vec<_>>>()?;
        Ok(EmbeddingSet::pooled(&sets)?)
    };
    let gt = gaussian_stats(&load(|p| &p.0)?)?;
    let gen = gaussian_stats(&load(|p| &p.1)?)?;
    Ok(Some(frechet_distance(&gt, &gen)?))
}

fn evaluate(id: &str, gt: &Path, gen: &Path, args: &Args, cfg: &PdpConfig) -> Result<VideoReport, Failure> {
    let gt = io::load_sequence(gt, args.fps)?;
    let gen = io::load_sequence(gen, args.fps)?;
    let (aligned, pdp) = rayon::join(
        || align_frames(&gen, &gt, &args.backend, args.mode),
        || pdp_score(&gt, &gen, &args.backend, cfg),
    );
    let (aligned, pdp) = (aligned?, pdp?);
    let mean = aligned.total() / aligned.per_frame_distances.len() as f64;
    let metrics = [
        (args.backend.id().to_string(), mean),
        ("pdp".to_string(), pdp.pdp),
        ("pdp_norm".to_string(), pdp.pdp_norm),
        ("final_distance".to_string(), pdp.final_distance),
    ];
    Ok(VideoReport {
        id: id.to_string(),
        metrics: metrics.into_iter().collect(),
        matches: aligned.matches.iter().map(|&(_, g)| g).collect(),
    })
}

pub fn run(args: Args) -> Result<(), Failure> {
    let cfg = PdpConfig {
        n_points: args.n_points,
        normalize: false,
    };
    cfg.validate()?;
    let gt = discover(&args.gt)?;
    let gen = discover(&args.gen)?;
    let gt_only: Vec<&String> = gt.keys().filter(|k| !gen.contains_key(*k)).collect();
    let gen_only: Vec<&String> = gen.keys().filter(|k| !gt.contains_key(*k)).collect();
    if !gt_only.is_empty() || !gen_only.is_empty() {
        return Err(Failure::input(format!(
            "unpaired videos: gt only {gt_only:?}; gen only {gen_only:?}"
        )));
    }
    if gt.is_empty() {
        return Err(Failure::input(format!("no videos under {}", args.gt.display())));
    }
    let pairs: Vec<(String, PathBuf, PathBuf)> = gt
        .into_iter()
        .map(|(id, p)| {
            let q = gen[&id].clone();
            (id, p, q)
        })
        .collect();

    let videos = pairs
        .par_iter()
        .map(|(id, a, b)| evaluate(id, a, b, &args, &cfg).map_err(|f| f.context(format!("video {id}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let fid = pooled_fid(&pairs)?;
    let report = EvalReport::new(videos, fid)?;
    let json = report.to_json();
    match &args.out {
        Some(p) => write_text(p, &json)?,
        None => println!("{json}"),
    }
    Ok(())
}
