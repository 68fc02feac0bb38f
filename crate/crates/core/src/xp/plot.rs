use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scheme::Scheme;

use super::{RunInfo, SweepRow};

/// Which probability runs along the x axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PlotAxis {
    /// x = p1 at a fixed p2.
    #[value(name = "vary_p1")]
    VaryP1,
    /// x = p2 at a fixed p1.
    #[value(name = "vary_p2")]
    VaryP2,
    /// x = p1 = p2.
    #[value(name = "diagonal")]
    Diagonal,
}

impl PlotAxis {
    fn name(self) -> &'static str {
        match self {
            PlotAxis::VaryP1 => "vary_p1",
            PlotAxis::VaryP2 => "vary_p2",
            PlotAxis::Diagonal => "diagonal",
        }
    }

    fn x(self, row: &SweepRow) -> f64 {
        match self {
            PlotAxis::VaryP1 | PlotAxis::Diagonal => row.p1,
            PlotAxis::VaryP2 => row.p2,
        }
    }

    fn label(self) -> &'static str {
        match self {
            PlotAxis::VaryP1 => "p1",
            PlotAxis::VaryP2 => "p2",
            PlotAxis::Diagonal => "p1 = p2",
        }
    }

    /// Picks the axis a row set supports, preferring the diagonal.
    pub fn detect(rows: &[SweepRow]) -> Option<PlotAxis> {
        [PlotAxis::Diagonal, PlotAxis::VaryP2, PlotAxis::VaryP1]
            .into_iter()
            .find(|axis| axis.check(rows).is_ok())
    }

    fn check(self, rows: &[SweepRow]) -> Result<String> {
        let first = rows.first().ok_or(Error::EmptyRows)?;
        let ok = match self {
            PlotAxis::VaryP1 => rows.iter().all(|r| r.p2 == first.p2),
            PlotAxis::VaryP2 => rows.iter().all(|r| r.p1 == first.p1),
            PlotAxis::Diagonal => rows.iter().all(|r| r.p1 == r.p2),
        };
        if !ok {
            return Err(Error::MixedFixedParameter { axis: self.name() });
        }
        Ok(match self {
            PlotAxis::VaryP1 => format!("p2 = {}", first.p2),
            PlotAxis::VaryP2 => format!("p1 = {}", first.p1),
            PlotAxis::Diagonal => "p1 = p2".to_string(),
        })
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 70.0;

fn color(scheme: Scheme) -> &'static str {
    match scheme {
        Scheme::SingleNonArq => "#2ca02c",
        Scheme::SingleArq => "#9467bd",
        Scheme::TwoNonArq => "#d62728",
        Scheme::TwoArq => "#1f77b4",
    }
}

/// Step from {1, 2, 5} × 10^k giving roughly `target` ticks over `span`.
fn nice_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let base = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * base)
        .find(|step| *step >= raw)
        .unwrap_or(10.0 * base)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Self-contained SVG line chart: per scheme, the closed-form curve and the
/// simulated points with ±1 standard-error bars.
pub fn render_svg(rows: &[SweepRow], axis: PlotAxis, info: &RunInfo) -> Result<String> {
    let fixed = axis.check(rows)?;

    let mut schemes: Vec<Scheme> = rows.iter().map(|r| r.scheme).collect();
    schemes.sort();
    schemes.dedup();

    let usable: Vec<&SweepRow> = rows.iter().filter(|r| r.analytic_aoi.is_finite()).collect();
    let xs = usable.iter().map(|r| axis.x(r));
    let x_min = xs.clone().fold(f64::INFINITY, f64::min);
    let x_max = xs.fold(f64::NEG_INFINITY, f64::max);
    let (x_lo, x_hi) = if x_min.is_finite() && x_max > x_min {
        (x_min, x_max)
    } else if x_min.is_finite() {
        (x_min - 0.05, x_min + 0.05)
    } else {
        (0.0, 1.0)
    };
    let y_top = usable
        .iter()
        .flat_map(|r| {
            let bar = if r.sim_std_error.is_finite() {
                r.sim_std_error
            } else {
                0.0
            };
            [r.analytic_aoi, r.sim_aoi + bar]
        })
        .filter(|v| v.is_finite())
        .fold(1.0, f64::max);
    let y_step = nice_step(y_top, 6.0);
    let y_hi = (y_top / y_step).ceil() * y_step;

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let py = |y: f64| TOP + plot_h - y / y_hi * plot_h;

    let mut svg = String::new();
    let w = &mut svg;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        w,
        "<title>Average AoI versus {}</title>",
        escape(axis.label())
    );
    let meta = serde_json::to_string(info).expect("run info serializes");
    let _ = writeln!(w, "<desc>{}</desc>", escape(&meta));
    let _ = writeln!(
        w,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );

    // Grid and ticks.
    let _ = writeln!(w, r##"<g class="axes" stroke="#cccccc" stroke-width="1">"##);
    let x_step = nice_step(x_hi - x_lo, 8.0);
    let mut tick = (x_lo / x_step).ceil();
    while tick * x_step <= x_hi + 1e-9 {
        let x = tick * x_step;
        let _ = writeln!(
            w,
            r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}"/>"#,
            px(x),
            TOP,
            TOP + plot_h
        );
        tick += 1.0;
    }
    let mut y = 0.0;
    while y <= y_hi + 1e-9 {
        let _ = writeln!(
            w,
            r#"<line x1="{0:.2}" y1="{1:.2}" x2="{2:.2}" y2="{1:.2}"/>"#,
            LEFT,
            py(y),
            LEFT + plot_w
        );
        y += y_step;
    }
    let _ = writeln!(w, "</g>");
    let _ = writeln!(
        w,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );

    let _ = writeln!(w, r#"<g class="tick-labels">"#);
    let mut tick = (x_lo / x_step).ceil();
    while tick * x_step <= x_hi + 1e-9 {
        let x = tick * x_step;
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{:.2}</text>"#,
            px(x),
            TOP + plot_h + 18.0,
            x
        );
        tick += 1.0;
    }
    let mut y = 0.0;
    while y <= y_hi + 1e-9 {
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            py(y) + 4.0,
            y
        );
        y += y_step;
    }
    let _ = writeln!(w, "</g>");
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{} ({})</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - BOTTOM + 38.0,
        escape(axis.label()),
        escape(&fixed)
    );
    let _ = writeln!(
        w,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">Average AoI (slots)</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    // Series.
    let mut legend = Vec::new();
    for &scheme in &schemes {
        let mut points: Vec<&SweepRow> = usable
            .iter()
            .copied()
            .filter(|r| r.scheme == scheme)
            .collect();
        points.sort_by(|a, b| axis.x(a).total_cmp(&axis.x(b)));
        let c = color(scheme);

        let path: Vec<String> = points
            .iter()
            .map(|r| format!("{:.2},{:.2}", px(axis.x(r)), py(r.analytic_aoi)))
            .collect();
        let _ = writeln!(
            w,
            r#"<g class="series" data-series="{scheme}/analytic"><polyline fill="none" stroke="{c}" stroke-width="2" points="{}"/></g>"#,
            path.join(" ")
        );

        let _ = writeln!(
            w,
            r#"<g class="series" data-series="{scheme}/sim" stroke="{c}" fill="{c}">"#
        );
        for r in points.iter().filter(|r| r.sim_aoi.is_finite()) {
            let (x, yc) = (px(axis.x(r)), py(r.sim_aoi));
            if r.sim_std_error.is_finite() && r.sim_std_error > 0.0 {
                let _ = writeln!(
                    w,
                    r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}"/>"#,
                    py(r.sim_aoi - r.sim_std_error),
                    py(r.sim_aoi + r.sim_std_error)
                );
            }
            let _ = writeln!(
                w,
                r#"<rect x="{:.2}" y="{:.2}" width="7" height="7" fill="none" stroke-width="1.5"/>"#,
                x - 3.5,
                yc - 3.5
            );
        }
        let _ = writeln!(w, "</g>");
        legend.push((format!("{scheme} analytic"), c, false));
        legend.push((format!("{scheme} simulated"), c, true));
    }

    let _ = writeln!(w, r#"<g class="legend">"#);
    for (i, (label, c, marker)) in legend.iter().enumerate() {
        let lx = WIDTH - RIGHT + 15.0;
        let ly = TOP + 10.0 + 20.0 * i as f64;
        if *marker {
            let _ = writeln!(
                w,
                r#"<rect x="{:.2}" y="{:.2}" width="7" height="7" fill="none" stroke="{c}" stroke-width="1.5"/>"#,
                lx + 8.5,
                ly - 3.5
            );
        } else {
            let _ = writeln!(
                w,
                r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{c}" stroke-width="2"/>"#,
                lx + 24.0
            );
        }
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 30.0,
            ly + 4.0,
            escape(label)
        );
    }
    let _ = writeln!(w, "</g>");

    let _ = writeln!(
        w,
        r##"<text x="{LEFT}" y="{:.2}" font-size="9" fill="#555555">{} | rng {} | seed {} | horizon {}</text>"##,
        HEIGHT - 8.0,
        escape(&info.tool_version),
        escape(&info.rng),
        info.base_seed,
        info.horizon
    );
    let _ = writeln!(w, "</svg>");
    Ok(svg)
}

pub fn emit_plot(
    rows: &[SweepRow],
    axis: PlotAxis,
    info: &RunInfo,
    destination: &Path,
) -> Result<()> {
    let svg = render_svg(rows, axis, info)?;
    fs::write(destination, svg)?;
    Ok(())
}
