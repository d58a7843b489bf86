//! Scatter plots of the index plane with the decision line and margins.

use std::fmt::Write as _;
use std::path::Path;

use crate::ada::Category;
use crate::error::{Error, Result};
use crate::svm::SvmModel;

use super::{CohortReport, ReportEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotFormat {
    Svg,
    Csv,
}

impl std::str::FromStr for PlotFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "svg" => Ok(PlotFormat::Svg),
            "csv" => Ok(PlotFormat::Csv),
            _ => Err(Error::Input(format!(
                "unknown plot format `{s}` (expected svg or csv)"
            ))),
        }
    }
}

pub fn emit_plot(report: &CohortReport, path: impl AsRef<Path>, format: PlotFormat) -> Result<()> {
    let text = match format {
        PlotFormat::Svg => render_svg(report)?,
        PlotFormat::Csv => render_plot_csv(report)?,
    };
    let path = path.as_ref();
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// One row per record: `patient_id,A,alpha,category,predicted,distance`.
pub fn render_plot_csv(report: &CohortReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Pipeline(format!("csv write failed: {e}"));
    w.write_record([
        "patient_id",
        "A",
        "alpha",
        "category",
        "predicted",
        "distance",
    ])
    .map_err(csv_err)?;
    for e in &report.entries {
        w.write_record([
            e.patient_id.clone(),
            e.params.a.to_string(),
            e.params.alpha.to_string(),
            e.category.as_str().to_string(),
            i8::from(e.predicted).to_string(),
            e.signed_distance.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Pipeline(format!("csv write failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;

fn color(category: Category) -> &'static str {
    match category {
        Category::Ngt => "#2ca02c",
        Category::Ifg => "#1f77b4",
        Category::Igt => "#ff7f0e",
        Category::IfgIgt => "#9467bd",
        Category::T2dm => "#d62728",
    }
}

/// Data-space rectangle `[x0, x1] × [y0, y1]` with `x = A`, `y = α`.
#[derive(Debug, Clone, Copy)]
struct Frame {
    x: [f64; 2],
    y: [f64; 2],
}

impl Frame {
    fn around(points: &[&ReportEntry]) -> Self {
        let span = |vals: Vec<f64>| {
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let pad = if hi > lo {
                0.05 * (hi - lo)
            } else {
                0.05 * lo.abs().max(1e-3)
            };
            [lo - pad, hi + pad]
        };
        Self {
            x: span(points.iter().map(|e| e.params.a).collect()),
            y: span(points.iter().map(|e| e.params.alpha).collect()),
        }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x[0]) / (self.x[1] - self.x[0]) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y[0]) / (self.y[1] - self.y[0]) * (HEIGHT - TOP - BOTTOM)
    }

    /// Endpoints of `{score = level}` clipped to the frame, in data units.
    fn clip_level(&self, model: &SvmModel, level: f64) -> Option<[[f64; 2]; 2]> {
        // score = p·A + q·α - r0 with the scaling folded in.
        let s = &model.scaling;
        let p = model.w[0] / s.scale[0];
        let q = model.w[1] / s.scale[1];
        let r = level - model.b + p * s.shift[0] + q * s.shift[1];
        let mut hits: Vec<[f64; 2]> = Vec::new();
        let inside = |v: f64, r: [f64; 2]| v >= r[0] && v <= r[1];
        if q != 0.0 {
            for x in self.x {
                let y = (r - p * x) / q;
                if inside(y, self.y) {
                    hits.push([x, y]);
                }
            }
        }
        if p != 0.0 {
            for y in self.y {
                let x = (r - q * y) / p;
                if inside(x, self.x) {
                    hits.push([x, y]);
                }
            }
        }
        hits.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        hits.dedup_by(|a, b| self.px(a[0]) == self.px(b[0]) && self.py(a[1]) == self.py(b[1]));
        (hits.len() >= 2).then(|| [hits[0], hits[hits.len() - 1]])
    }
}

fn ticks(range: [f64; 2]) -> Vec<f64> {
    (0..=4)
        .map(|k| range[0] + (range[1] - range[0]) * k as f64 / 4.0)
        .collect()
}

/// Evaluated records colored by category, the decision line (solid) and the
/// margin lines at score ±1 (dashed). Each line carries its data-space
/// endpoints in `data-a1`, `data-alpha1`, `data-a2`, `data-alpha2`.
pub fn render_svg(report: &CohortReport) -> Result<String> {
    let points: Vec<&ReportEntry> = report.entries.iter().filter(|e| e.evaluated).collect();
    if points.is_empty() {
        return Err(Error::Pipeline(
            "nothing to plot: no evaluated records".into(),
        ));
    }
    let frame = Frame::around(&points);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let (x0, x1, y0, y1) = (
        frame.px(frame.x[0]),
        frame.px(frame.x[1]),
        frame.py(frame.y[0]),
        frame.py(frame.y[1]),
    );
    let _ = writeln!(
        s,
        r#"<rect class="frame" x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y0 - y1
    );
    for t in ticks(frame.x) {
        let x = frame.px(t);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
            y0 + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{t:.1}</text>"#,
            y0 + 20.0
        );
    }
    for t in ticks(frame.y) {
        let y = frame.py(t);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="black"/>"#,
            x0 - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{t:.4}</text>"#,
            x0 - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">A (mg/dl)</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">alpha (1/min)</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );

    let _ = writeln!(
        s,
        r#"<clipPath id="plot-area"><rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}"/></clipPath>"#,
        x1 - x0,
        y0 - y1
    );
    let _ = writeln!(s, r#"<g class="points" clip-path="url(#plot-area)">"#);
    for e in &points {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}" fill-opacity="0.7" data-category="{}"/>"#,
            frame.px(e.params.a),
            frame.py(e.params.alpha),
            color(e.category),
            e.category
        );
    }
    let _ = writeln!(s, "</g>");

    for (class, level, dash) in [
        ("margin", -1.0, true),
        ("decision", 0.0, false),
        ("margin", 1.0, true),
    ] {
        if let Some([a, b]) = frame.clip_level(&report.model, level) {
            let _ = writeln!(
                s,
                r#"<line class="{class}" data-level="{level}" data-a1="{}" data-alpha1="{}" data-a2="{}" data-alpha2="{}" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="{}"{}/>"#,
                a[0],
                a[1],
                b[0],
                b[1],
                frame.px(a[0]),
                frame.py(a[1]),
                frame.px(b[0]),
                frame.py(b[1]),
                if dash { 1 } else { 2 },
                if dash {
                    r#" stroke-dasharray="6 4""#
                } else {
                    ""
                }
            );
        }
    }

    let _ = writeln!(s, r#"<g class="legend">"#);
    let legend_x = WIDTH - RIGHT + 20.0;
    for (k, c) in report.aggregates.accuracy.per_category.iter().enumerate() {
        let y = TOP + 10.0 + 20.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<circle cx="{legend_x:.2}" cy="{y:.2}" r="5" fill="{}"/><text x="{:.2}" y="{:.2}">{} (n={})</text>"#,
            color(c.category),
            legend_x + 12.0,
            y + 4.0,
            c.category,
            c.total
        );
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    Ok(s)
}
