//! Minimal SVG line charts for distance profiles.

use std::fmt::Write as _;

use crate::pdp::DistanceProfile;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct PlotOptions {
    pub width: u32,
    pub height: u32,
    pub x_label: String,
    pub y_label: String,
    pub title: Option<String>,
    /// Fixed y range; derived from the data when `None`.
    pub y_range: Option<(f64, f64)>,
    pub margin_left: f64,
    pub margin_right: f64,
    pub margin_top: f64,
    pub margin_bottom: f64,
}

impl Default for PlotOptions {
    fn default() -> Self {
        PlotOptions {
            width: 640,
            height: 400,
            x_label: "Time".into(),
            y_label: "Perceptual distance".into(),
            title: None,
            y_range: None,
            margin_left: 70.0,
            margin_right: 20.0,
            margin_top: 30.0,
            margin_bottom: 50.0,
        }
    }
}

impl PlotOptions {
    pub fn plot_left(&self) -> f64 {
        self.margin_left
    }

    pub fn plot_right(&self) -> f64 {
        self.width as f64 - self.margin_right
    }

    pub fn plot_top(&self) -> f64 {
        self.margin_top
    }

    pub fn plot_bottom(&self) -> f64 {
        self.height as f64 - self.margin_bottom
    }
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub profile: DistanceProfile,
    /// Drawn thicker and dashed, e.g. for a mean curve.
    pub emphasis: bool,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn data_range(series: &[Series]) -> (f64, f64) {
    let (lo, hi) = series
        .iter()
        .flat_map(|s| s.profile.values())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let lo = lo.min(0.0);
    let hi = if hi > lo { hi } else { lo + 1.0 };
    (lo, hi)
}

/// `[0, 1]` widened to cover any values outside it.
pub fn unit_range(series: &[Series]) -> (f64, f64) {
    series
        .iter()
        .flat_map(|s| s.profile.values())
        .fold((0.0, 1.0), |(lo, hi): (f64, f64), &v| (lo.min(v), hi.max(v)))
}

/// One `<polyline>` per series over `t ∈ [0, 1]`, with axes, ticks and a
/// legend drawn from `<line>` and `<text>` elements.
pub fn render_svg(series: &[Series], opts: &PlotOptions) -> String {
    let (y0, y1) = opts.y_range.unwrap_or_else(|| data_range(series));
    let (l, r, t, b) = (opts.plot_left(), opts.plot_right(), opts.plot_top(), opts.plot_bottom());
    let sx = |x: f64| l + x * (r - l);
    let sy = |y: f64| b - (y - y0) / (y1 - y0) * (b - t);

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = opts.width,
        h = opts.height
    )
    .unwrap();
    writeln!(svg, r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#, opts.width, opts.height).unwrap();
    if let Some(title) = &opts.title {
        writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"#,
            (l + r) / 2.0,
            t - 10.0,
            escape(title)
        )
        .unwrap();
    }
    // axes
    writeln!(svg, r#"<line x1="{l:.2}" y1="{b:.2}" x2="{r:.2}" y2="{b:.2}" stroke="black"/>"#).unwrap();
    writeln!(svg, r#"<line x1="{l:.2}" y1="{t:.2}" x2="{l:.2}" y2="{b:.2}" stroke="black"/>"#).unwrap();
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (x, y) = (sx(f), sy(y0 + f * (y1 - y0)));
        writeln!(svg, r#"<line x1="{x:.2}" y1="{b:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, b + 5.0).unwrap();
        writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="11">{f:.2}</text>"#,
            b + 18.0
        )
        .unwrap();
        writeln!(svg, r#"<line x1="{:.2}" y1="{y:.2}" x2="{l:.2}" y2="{y:.2}" stroke="black"/>"#, l - 5.0).unwrap();
        writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{:.3}</text>"#,
            l - 8.0,
            y + 4.0,
            y0 + f * (y1 - y0)
        )
        .unwrap();
    }
    writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{}</text>"#,
        (l + r) / 2.0,
        opts.height as f64 - 10.0,
        escape(&opts.x_label)
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="15" y="{:.2}" text-anchor="middle" font-size="12" transform="rotate(-90 15 {:.2})">{}</text>"#,
        (t + b) / 2.0,
        (t + b) / 2.0,
        escape(&opts.y_label)
    )
    .unwrap();

    for (i, s) in series.iter().enumerate() {
        let colour = if s.emphasis { "black" } else { PALETTE[i % PALETTE.len()] };
        let style = if s.emphasis {
            r#" stroke-width="2.5" stroke-dasharray="6 3""#
        } else {
            r#" stroke-width="1.5""#
        };
        let points: Vec<String> = s
            .profile
            .axis()
            .iter()
            .zip(s.profile.values())
            .map(|(&x, &y)| format!("{:.3},{:.3}", sx(x), sy(y)))
            .collect();
        writeln!(
            svg,
            r#"<polyline fill="none" stroke="{colour}"{style} points="{}"/>"#,
            points.join(" ")
        )
        .unwrap();
        let ly = t + 14.0 + 16.0 * i as f64;
        writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{colour}"{style}/>"#,
            r - 150.0,
            r - 130.0
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
            r - 125.0,
            ly + 4.0,
            escape(&s.label)
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}
