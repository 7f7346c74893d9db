use std::path::PathBuf;

use pb_core::curate::{run_pipeline, CanvasMode, ExternalInpainter, PipelineConfig};
use pb_core::media::io;
use pb_core::Rational;

use crate::failure::{ensure_dir, read_json_file, require_exists, write_text, Failure};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Frame directory or raw sequence file.
    #[arg(long)]
    frames: PathBuf,
    /// Detection JSON for the source frames.
    #[arg(long)]
    detections: PathBuf,
    /// Directory of per-frame masks; boxes of occluder labels otherwise.
    #[arg(long)]
    masks: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Pipeline config JSON. Flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Frame rate, overriding any sidecar.
    #[arg(long)]
    fps: Option<Rational>,
    #[arg(long)]
    reverse: bool,
    #[arg(long)]
    canvas_mode: Option<CanvasMode>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    segment_seconds: Option<Rational>,
    /// External inpainting command; `{dir}` is replaced with the exchange
    /// directory.
    #[arg(long)]
    inpainter: Option<String>,
}

pub fn run(args: Args) -> Result<(), Failure> {
    require_exists(&args.frames, "frames")?;
    require_exists(&args.detections, "detections")?;
    if let Some(m) = &args.masks {
        require_exists(m, "masks")?;
    }
    let mut cfg: PipelineConfig = match &args.config {
        Some(p) => read_json_file(p, "config")?,
        None => PipelineConfig::default(),
    };
    if args.reverse {
        cfg.reverse = true;
    }
    if let Some(mode) = args.canvas_mode {
        cfg.canvas_mode = mode;
    }
    if let Some(t) = args.threshold {
        cfg.detection_threshold = t;
    }
    if let Some(s) = args.segment_seconds {
        cfg.segment_seconds = s;
    }
    cfg.validate()?;
    let inpainter = args.inpainter.as_deref().map(ExternalInpainter::parse).transpose()?;

    let video = io::load_sequence(&args.frames, args.fps).map_err(|e| Failure::from(e).context("stage load"))?;
    let det = io::load_detections(&args.detections).map_err(|e| Failure::from(e).context("stage detections"))?;
    let masks = args
        .masks
        .as_deref()
        .map(io::load_masks)
        .transpose()
        .map_err(|e| Failure::from(e).context("stage masks"))?;

    ensure_dir(&args.out)?;
    let workdir = args.out.join("inpaint");
    let out = run_pipeline(
        &video,
        &det,
        masks.as_deref(),
        &cfg,
        inpainter.as_ref().map(|i| (i, workdir.as_path())),
    )?;

    io::save_frame_dir(&args.out.join("keyframes"), &out.keyframes)?;
    let manifest = serde_json::to_string_pretty(&out.manifest).map_err(Failure::runtime)?;
    write_text(&args.out.join("manifest.json"), &manifest)?;
    println!(
        "{} keyframes from frames {}..={} -> {}",
        out.keyframes.len(),
        out.manifest.trim.0,
        out.manifest.trim.1,
        args.out.display()
    );
    Ok(())
}
