use std::path::{Path, PathBuf};

use rayon::prelude::*;

use pb_core::media::io;
use pb_core::pdp::{mean_profile, pdp_from_profiles, pdp_score, pdp_score_embeddings, profile_from_scores};
use pb_core::plot::{render_svg, unit_range, PlotOptions, Series};
use pb_core::{Backend, DistanceProfile, EmbeddingMode, PdpConfig, PdpResult, Rational};

use crate::failure::{ensure_dir, require_exists, write_text, Failure};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Ground-truth frame directory or raw sequence.
    #[arg(long, requires = "gen")]
    gt: Option<PathBuf>,
    /// Generated frame directory or raw sequence.
    #[arg(long, requires = "gt")]
    gen: Option<PathBuf>,
    /// Precomputed ground-truth embeddings.
    #[arg(long, requires = "gen_embeddings", conflicts_with_all = ["gt", "gt_scores"])]
    gt_embeddings: Option<PathBuf>,
    /// Precomputed generated-video embeddings.
    #[arg(long, requires = "gt_embeddings")]
    gen_embeddings: Option<PathBuf>,
    /// Precomputed `index,distance` CSV for the ground truth.
    #[arg(long, requires = "gen_scores", conflicts_with_all = ["gt"])]
    gt_scores: Option<PathBuf>,
    /// Precomputed scores for the generated video.
    #[arg(long, requires = "gt_scores")]
    gen_scores: Option<PathBuf>,
    /// File of `gt gen` path pairs, one per line; paths are relative to the
    /// list. The input kind follows the extension: `.txt` embeddings,
    /// `.csv` scores, anything else frames.
    #[arg(long, conflicts_with_all = ["gt", "gt_embeddings", "gt_scores"])]
    batch: Option<PathBuf>,
    /// Frame distance: mse, ssim or gram.
    #[arg(long, default_value = "mse")]
    backend: Backend,
    /// cosine or l2.
    #[arg(long, default_value = "cosine")]
    embedding_mode: EmbeddingMode,
    /// Frame rate for frame directories without a sidecar.
    #[arg(long)]
    fps: Option<Rational>,
    #[arg(long, default_value_t = pb_core::pdp::DEFAULT_POINTS)]
    n_points: usize,
    /// Emit normalised curves in CSVs and plots.
    #[arg(long)]
    normalize: bool,
    /// Directory for profile CSVs.
    #[arg(long)]
    out: Option<PathBuf>,
    /// SVG chart of the curves.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Debug, Clone)]
enum Source {
    Frames(PathBuf),
    Embeddings(PathBuf),
    Scores(PathBuf),
}

impl Source {
    fn guess(path: PathBuf) -> Source {
        match path.extension().and_then(|e| e.to_str()) {
            Some("txt") => Source::Embeddings(path),
            Some("csv") => Source::Scores(path),
            _ => Source::Frames(path),
        }
    }

    fn path(&self) -> &Path {
        match self {
            Source::Frames(p) | Source::Embeddings(p) | Source::Scores(p) => p,
        }
    }
}

struct Scored {
    label: String,
    result: PdpResult,
}

fn score_pair(gt: &Source, gen: &Source, args: &Args, cfg: &PdpConfig) -> Result<PdpResult, Failure> {
    for s in [gt, gen] {
        require_exists(s.path(), "input")?;
    }
    let r = match (gt, gen) {
        (Source::Frames(a), Source::Frames(b)) => {
            let a = io::load_sequence(a, args.fps)?;
            let b = io::load_sequence(b, args.fps)?;
            pdp_score(&a, &b, &args.backend, cfg)?
        }
        (Source::Embeddings(a), Source::Embeddings(b)) => {
            pdp_score_embeddings(&io::load_embeddings(a)?, &io::load_embeddings(b)?, args.embedding_mode, cfg)?
        }
        (Source::Scores(a), Source::Scores(b)) => {
            let load = |p: &Path| -> Result<DistanceProfile, Failure> {
                profile_from_scores(&io::read_text(p)?)
                    .map_err(|e| Failure::from(e).context(p.display()))
            };
            pdp_from_profiles(load(a)?, load(b)?, cfg)?
        }
        _ => {
            return Err(Failure::input(format!(
                "{} and {} are different kinds of input",
                gt.path().display(),
                gen.path().display()
            )))
        }
    };
    Ok(r)
}

fn read_batch(list: &Path) -> Result<Vec<(Source, Source)>, Failure> {
    require_exists(list, "batch list")?;
    let base = list.parent().unwrap_or(Path::new("."));
    let text = io::read_text(list)?;
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [gt, gen] = parts[..] else {
            return Err(Failure::input(format!(
                "{} row {}: expected two paths",
                list.display(),
                i + 1
            )));
        };
        pairs.push((Source::guess(base.join(gt)), Source::guess(base.join(gen))));
    }
    if pairs.is_empty() {
        return Err(Failure::input(format!("{}: no pairs", list.display())));
    }
    Ok(pairs)
}

fn metric_label(args: &Args, kind: &Source) -> String {
    match kind {
        Source::Frames(_) => args.backend.name().to_string(),
        Source::Embeddings(_) => format!("embedding ({:?})", args.embedding_mode).to_lowercase(),
        Source::Scores(_) => "score".to_string(),
    }
}

fn write_profiles(dir: &Path, prefix: &str, r: &PdpResult) -> Result<(), Failure> {
    write_text(&dir.join(format!("{prefix}gt_profile.csv")), &r.gt_profile.to_csv())?;
    write_text(&dir.join(format!("{prefix}gen_profile.csv")), &r.gen_profile.to_csv())?;
    write_text(&dir.join(format!("{prefix}gt_curve.csv")), &r.curves.0.to_csv())?;
    write_text(&dir.join(format!("{prefix}gen_curve.csv")), &r.curves.1.to_csv())
}

fn plot_options(args: &Args, y_label: String, s: &[Series]) -> PlotOptions {
    PlotOptions {
        y_label,
        y_range: args.normalize.then(|| unit_range(s)),
        ..PlotOptions::default()
    }
}

fn series(label: &str, profile: &DistanceProfile, emphasis: bool) -> Series {
    Series {
        label: label.to_string(),
        profile: profile.clone(),
        emphasis,
    }
}

pub fn run(args: Args) -> Result<(), Failure> {
    let cfg = PdpConfig {
        n_points: args.n_points,
        normalize: args.normalize,
    };
    cfg.validate()?;
    let pairs = if let Some(list) = &args.batch {
        read_batch(list)?
    } else if let (Some(a), Some(b)) = (&args.gt, &args.gen) {
        vec![(Source::Frames(a.clone()), Source::Frames(b.clone()))]
    } else if let (Some(a), Some(b)) = (&args.gt_embeddings, &args.gen_embeddings) {
        vec![(Source::Embeddings(a.clone()), Source::Embeddings(b.clone()))]
    } else if let (Some(a), Some(b)) = (&args.gt_scores, &args.gen_scores) {
        vec![(Source::Scores(a.clone()), Source::Scores(b.clone()))]
    } else {
        return Err(Failure::input(
            "give --gt/--gen, --gt-embeddings/--gen-embeddings, --gt-scores/--gen-scores or --batch",
        ));
    };

    let scored: Vec<Scored> = pairs
        .par_iter()
        .map(|(gt, gen)| {
            let label = gen.path().display().to_string();
            score_pair(gt, gen, &args, &cfg)
                .map(|result| Scored { label: label.clone(), result })
                .map_err(|f| f.context(&label))
        })
        .collect::<Result<_, _>>()?;
    let y_label = metric_label(&args, &pairs[0].0);

    if args.batch.is_none() {
        let r = &scored[0].result;
        println!("pdp {:?}", r.pdp);
        println!("pdp_norm {:?}", r.pdp_norm);
        println!("final_distance {:?}", r.final_distance);
        if let Some(dir) = &args.out {
            ensure_dir(dir)?;
            write_profiles(dir, "", r)?;
        }
        if let Some(svg) = &args.plot {
            let s = [series("ground truth", &r.curves.0, false), series("generated", &r.curves.1, false)];
            write_text(svg, &render_svg(&s, &plot_options(&args, y_label, &s)))?;
        }
        return Ok(());
    }

    println!("pair\tpdp\tpdp_norm\tfinal_distance\tgen");
    let k = scored.len() as f64;
    let mut mean = [0.0; 3];
    for (i, s) in scored.iter().enumerate() {
        let r = &s.result;
        println!("{}\t{:?}\t{:?}\t{:?}\t{}", i + 1, r.pdp, r.pdp_norm, r.final_distance, s.label);
        mean[0] += r.pdp / k;
        mean[1] += r.pdp_norm / k;
        mean[2] += r.final_distance / k;
    }
    println!("mean\t{:?}\t{:?}\t{:?}\t-", mean[0], mean[1], mean[2]);

    let gt_curves: Vec<DistanceProfile> = scored.iter().map(|s| s.result.curves.0.clone()).collect();
    let gen_curves: Vec<DistanceProfile> = scored.iter().map(|s| s.result.curves.1.clone()).collect();
    let mean_gt = mean_profile(&gt_curves, args.n_points)?;
    let mean_gen = mean_profile(&gen_curves, args.n_points)?;
    if let Some(dir) = &args.out {
        ensure_dir(dir)?;
        for (i, s) in scored.iter().enumerate() {
            write_profiles(dir, &format!("pair_{:03}_", i + 1), &s.result)?;
        }
        write_text(&dir.join("mean_gt_curve.csv"), &mean_gt.to_csv())?;
        write_text(&dir.join("mean_gen_curve.csv"), &mean_gen.to_csv())?;
    }
    if let Some(svg) = &args.plot {
        let mut s: Vec<Series> = gen_curves
            .iter()
            .enumerate()
            .map(|(i, c)| series(&format!("generated {}", i + 1), c, false))
            .collect();
        s.push(series("mean ground truth", &mean_gt, false));
        s.push(series("mean generated", &mean_gen, true));
        write_text(svg, &render_svg(&s, &plot_options(&args, y_label, &s)))?;
    }
    Ok(())
}
