use std::path::{Path, PathBuf};

use serde::Deserialize;

use pb_core::media::io;
use pb_core::synth::{generate_process, overlay_occluder, procedural_target, wander_trajectory, Occluder, RevealOrder, RevealScript};
use pb_core::Rational;

use crate::failure::{ensure_dir, read_json_file, Failure};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Script JSON.
    #[arg(long)]
    script: PathBuf,
    /// Output directory for `frames/`, and `masks/` plus `detections.json`
    /// when the script has an occluder.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScriptFile {
    /// Target image, relative to the script. Procedural when absent.
    target: Option<PathBuf>,
    width: Option<u32>,
    height: Option<u32>,
    steps: usize,
    #[serde(default)]
    order: RevealOrder,
    seed: u64,
    fps: Option<Rational>,
    patch_size: Option<u32>,
    occluder: Option<OccluderFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OccluderFile {
    size: u32,
    color: Option<[u8; 3]>,
    /// Explicit top-left corners, one per step. A seeded random walk
    /// otherwise.
    trajectory: Option<Vec<(u32, u32)>>,
    /// Largest per-step move of the random walk.
    jump: Option<u32>,
}

fn build_script(file: ScriptFile, base: &Path) -> Result<RevealScript, Failure> {
    let target = match &file.target {
        Some(rel) => {
            let path = base.join(rel);
            let frame = io::read_image(&path).map_err(|e| Failure::input(format!("target: {}: {e}", path.display())))?;
            if file.width.is_some_and(|w| w != frame.width()) || file.height.is_some_and(|h| h != frame.height()) {
                return Err(Failure::input("width/height: disagree with the target image"));
            }
            frame
        }
        None => {
            let (Some(w), Some(h)) = (file.width, file.height) else {
                return Err(Failure::input("width/height: required without a target image"));
            };
            procedural_target(w, h, file.seed)?
        }
    };
    let (w, h) = (target.width(), target.height());
    let mut script = RevealScript::new(target, file.order, file.steps, file.seed);
    if let Some(fps) = file.fps {
        script.fps = fps;
    }
    if let Some(p) = file.patch_size {
        script.patch_size = p;
    }
    if let Some(o) = file.occluder {
        if o.size == 0 || o.size > w.min(h) {
            return Err(Failure::input(format!("occluder.size: {} does not fit a {w}x{h} frame", o.size)));
        }
        let trajectory = match o.trajectory {
            Some(t) => t,
            None => wander_trajectory(w, h, o.size, file.steps, o.jump.unwrap_or(o.size / 2).max(1), file.seed),
        };
        let mut occ = Occluder {
            size: o.size,
            color: [255, 0, 255],
            trajectory,
        };
        if let Some(c) = o.color {
            occ.color = c;
        }
        script.occluder = Some(occ);
    }
    script.validate()?;
    Ok(script)
}

pub fn run(args: Args) -> Result<(), Failure> {
    let file: ScriptFile = read_json_file(&args.script, "script")?;
    let base = args.script.parent().unwrap_or(Path::new("."));
    let script = build_script(file, base)?;
    let process = generate_process(&script)?;
    ensure_dir(&args.out)?;
    if script.occluder.is_some() {
        let (frames, masks, det) = overlay_occluder(&process, &script)?;
        io::save_frame_dir(&args.out.join("frames"), &frames)?;
        io::save_masks(&args.out.join("masks"), &masks)?;
        io::save_detections(&args.out.join("detections.json"), &det)?;
    } else {
        io::save_frame_dir(&args.out.join("frames"), &process)?;
    }
    println!("{} frames -> {}", process.len(), args.out.display());
    Ok(())
}
