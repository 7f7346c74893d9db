use std::path::PathBuf;

use pb_core::media::io;
use pb_core::pdp::{mean_profile, normalize_profile};
use pb_core::plot::{render_svg, unit_range, PlotOptions, Series};
use pb_core::DistanceProfile;

use crate::failure::{require_exists, write_text, Failure};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Profile CSV (`t,value`); repeat to overlay several.
    #[arg(long = "csv", required = true)]
    csvs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Add the pointwise mean of all profiles.
    #[arg(long)]
    mean: bool,
    /// Remap every profile to run from 1 to 0 and fix the y axis to [0, 1].
    #[arg(long)]
    normalize: bool,
    #[arg(long, default_value_t = 640)]
    width: u32,
    #[arg(long, default_value_t = 400)]
    height: u32,
    #[arg(long, default_value = "Time")]
    x_label: String,
    /// Usually the backend id the profiles were measured with.
    #[arg(long, default_value = "distance")]
    y_label: String,
    #[arg(long)]
    title: Option<String>,
    /// Legend entries, in CSV order; file stems by default.
    #[arg(long = "label")]
    labels: Vec<String>,
    /// Resolution of the mean curve.
    #[arg(long, default_value_t = pb_core::pdp::DEFAULT_POINTS)]
    n_points: usize,
}

pub fn run(args: Args) -> Result<(), Failure> {
    if !args.labels.is_empty() && args.labels.len() != args.csvs.len() {
        return Err(Failure::input(format!(
            "{} labels for {} CSVs",
            args.labels.len(),
            args.csvs.len()
        )));
    }
    if args.width < 200 || args.height < 150 {
        return Err(Failure::input("plot must be at least 200x150"));
    }
    let mut series = Vec::new();
    for (i, path) in args.csvs.iter().enumerate() {
        require_exists(path, "profile CSV")?;
        let mut profile = DistanceProfile::from_csv(&io::read_text(path)?)
            .map_err(|e| Failure::from(e).context(path.display()))?;
        if args.normalize {
            profile = normalize_profile(&profile);
        }
        let label = match args.labels.get(i) {
            Some(l) => l.clone(),
            None => path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        };
        series.push(Series {
            label,
            profile,
            emphasis: false,
        });
    }
    if args.mean {
        let profiles: Vec<DistanceProfile> = series.iter().map(|s| s.profile.clone()).collect();
        series.push(Series {
            label: "mean".into(),
            profile: mean_profile(&profiles, args.n_points)?,
            emphasis: true,
        });
    }
    let opts = PlotOptions {
        width: args.width,
        height: args.height,
        x_label: args.x_label,
        y_label: args.y_label,
        title: args.title,
        y_range: args.normalize.then(|| unit_range(&series)),
        ..PlotOptions::default()
    };
    write_text(&args.out, &render_svg(&series, &opts))?;
    println!("{} curves -> {}", series.len(), args.out.display());
    Ok(())
}
