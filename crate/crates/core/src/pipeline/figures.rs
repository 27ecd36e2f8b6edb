//! Figure data series (histogram, scatter, per-quantile estimate bands) and
//! a thin deterministic SVG emitter. No layout engine: fixed panel geometry,
//! values formatted with fixed precision, identical input gives identical
//! bytes.

use std::fmt::Write as _;

use crate::hurdle::QuantileTableRow;

/// Display caps per variable; values beyond the cap are omitted from the
/// histograms as outliers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariableSpec {
    pub name: &'static str,
    pub cap: f64,
    pub integer: bool,
}

pub const CITATION_CAP: f64 = 2000.0;
pub const GROWTH_RATIO_CAP: f64 = 10.0;
pub const AUTHORS_CAP: f64 = 30.0;
pub const REFERENCES_CAP: f64 = 300.0;
pub const JIF_CAP: f64 = 30.0;

pub const FIGURE_VARIABLES: [VariableSpec; 5] = [
    VariableSpec { name: "citations", cap: CITATION_CAP, integer: true },
    VariableSpec { name: "growth_ratio", cap: GROWTH_RATIO_CAP, integer: false },
    VariableSpec { name: "authors", cap: AUTHORS_CAP, integer: true },
    VariableSpec { name: "references", cap: REFERENCES_CAP, integer: true },
    VariableSpec { name: "jif", cap: JIF_CAP, integer: false },
];

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
}

/// Equal-width bins over `[0, cap]`; integer variables get integer widths.
/// Bins are half-open except the last, which includes the cap.
pub fn histogram(values: &[f64], spec: &VariableSpec) -> Vec<HistogramBin> {
    let width = if spec.integer {
        (spec.cap / 50.0).round().max(1.0)
    } else {
        spec.cap / 50.0
    };
    let n_bins = (spec.cap / width).ceil() as usize;
    let mut bins: Vec<HistogramBin> = (0..n_bins)
        .map(|i| HistogramBin {
            lo: i as f64 * width,
            hi: ((i + 1) as f64 * width).min(spec.cap),
            count: 0,
        })
        .collect();
    for &v in values {
        if v < 0.0 || v > spec.cap {
            continue; // outliers omitted
        }
        let idx = ((v / width) as usize).min(n_bins - 1);
        bins[idx].count += 1;
    }
    bins
}

pub fn histogram_csv(bins: &[HistogramBin]) -> String {
    let mut out = String::from("bin_lo\tbin_hi\tcount\n");
    for b in bins {
        let _ = writeln!(out, "{}\t{}\t{}", b.lo, b.hi, b.count);
    }
    out
}

pub fn scatter_csv(variable: &str, points: &[(f64, u64)]) -> String {
    let mut out = format!("{variable}\tcitations\n");
    for (x, y) in points {
        let _ = writeln!(out, "{x}\t{y}");
    }
    out
}

const PANEL_W: f64 = 270.0;
const PANEL_H: f64 = 210.0;
const MARGIN_L: f64 = 46.0;
const MARGIN_B: f64 = 34.0;
const MARGIN_T: f64 = 24.0;
const MARGIN_R: f64 = 12.0;

struct Panel {
    origin_x: f64,
    origin_y: f64,
}

impl Panel {
    fn plot_w(&self) -> f64 {
        PANEL_W - MARGIN_L - MARGIN_R
    }

    fn plot_h(&self) -> f64 {
        PANEL_H - MARGIN_T - MARGIN_B
    }

    fn x(&self, frac: f64) -> f64 {
        self.origin_x + MARGIN_L + frac * self.plot_w()
    }

    fn y(&self, frac: f64) -> f64 {
        self.origin_y + PANEL_H - MARGIN_B - frac * self.plot_h()
    }
}

fn svg_open(width: f64, height: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"sans-serif\" font-size=\"10\">\n"
    )
}

fn panel_frame(svg: &mut String, p: &Panel, title: &str) {
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\">{}</text>",
        p.origin_x + MARGIN_L,
        p.origin_y + 14.0,
        title
    );
    let _ = writeln!(
        svg,
        "<path d=\"M {:.1} {:.1} L {:.1} {:.1} L {:.1} {:.1}\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>",
        p.x(0.0),
        p.y(1.0),
        p.x(0.0),
        p.y(0.0),
        p.x(1.0),
        p.y(0.0),
    );
}

fn axis_labels(svg: &mut String, p: &Panel, x_lo: &str, x_hi: &str, y_lo: &str, y_hi: &str) {
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
        p.x(0.0),
        p.origin_y + PANEL_H - 18.0,
        x_lo
    );
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
        p.x(1.0),
        p.origin_y + PANEL_H - 18.0,
        x_hi
    );
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
        p.x(0.0) - 4.0,
        p.y(0.0) + 3.0,
        y_lo
    );
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
        p.x(0.0) - 4.0,
        p.y(1.0) + 3.0,
        y_hi
    );
}

/// One panel per variable; the citations panel uses a log-10 count axis
/// (drawn as `log10(1 + count)`), the rest are linear.
pub fn histograms_svg(
    discipline_label: &str,
    panels: &[(VariableSpec, Vec<HistogramBin>)],
) -> String {
    let cols = panels.len().clamp(1, 3);
    let rows = panels.len().div_ceil(cols);
    let mut svg = svg_open(cols as f64 * PANEL_W, rows as f64 * PANEL_H + 18.0);
    let _ = writeln!(
        svg,
        "<text x=\"6\" y=\"12\" font-size=\"12\">{discipline_label}</text>"
    );
    for (i, (spec, bins)) in panels.iter().enumerate() {
        let p = Panel {
            origin_x: (i % cols) as f64 * PANEL_W,
            origin_y: (i / cols) as f64 * PANEL_H + 18.0,
        };
        let log_y = spec.name == "citations";
        let transform = |c: u64| {
            if log_y {
                (1.0 + c as f64).log10()
            } else {
                c as f64
            }
        };
        let max_y = bins.iter().map(|b| transform(b.count)).fold(0.0, f64::max);
        panel_frame(&mut svg, &p, spec.name);
        if max_y > 0.0 {
            for b in bins {
                let h = transform(b.count) / max_y;
                if h <= 0.0 {
                    continue;
                }
                let x0 = p.x(b.lo / spec.cap);
                let x1 = p.x(b.hi / spec.cap);
                let _ = writeln!(
                    svg,
                    "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#47a3ff\" stroke=\"white\" stroke-width=\"0.4\"/>",
                    x0,
                    p.y(h),
                    (x1 - x0).max(0.1),
                    p.y(0.0) - p.y(h),
                );
            }
        }
        let max_label = bins.iter().map(|b| b.count).max().unwrap_or(0);
        axis_labels(
            &mut svg,
            &p,
            "0",
            &format!("{}", spec.cap),
            "0",
            &format!("{max_label}{}", if log_y { " (log)" } else { "" }),
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Log-log scatter of each covariate against citations; non-positive values
/// cannot sit on log axes and are skipped (the CSV keeps them).
pub fn scatter_svg(discipline_label: &str, panels: &[(VariableSpec, Vec<(f64, u64)>)]) -> String {
    let cols = panels.len().clamp(1, 2);
    let rows = panels.len().div_ceil(cols);
    let mut svg = svg_open(cols as f64 * PANEL_W, rows as f64 * PANEL_H + 18.0);
    let _ = writeln!(
        svg,
        "<text x=\"6\" y=\"12\" font-size=\"12\">{discipline_label}</text>"
    );
    for (i, (spec, points)) in panels.iter().enumerate() {
        let p = Panel {
            origin_x: (i % cols) as f64 * PANEL_W,
            origin_y: (i / cols) as f64 * PANEL_H + 18.0,
        };
        panel_frame(&mut svg, &p, &format!("citations vs {}", spec.name));
        let drawable: Vec<(f64, f64)> = points
            .iter()
            .filter(|(x, y)| *x > 0.0 && *y > 0)
            .map(|(x, y)| (x.log10(), (*y as f64).log10()))
            .collect();
        if drawable.is_empty() {
            continue;
        }
        let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in &drawable {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
        let x_span = (x_max - x_min).max(1e-9);
        let y_span = (y_max - y_min).max(1e-9);
        // stride keeps big corpora from bloating the file
        let stride = (drawable.len() / 2000).max(1);
        for (j, &(x, y)) in drawable.iter().enumerate() {
            if j % stride != 0 {
                continue;
            }
            let _ = writeln!(
                svg,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"1.4\" fill=\"#47a3ff\" fill-opacity=\"0.5\"/>",
                p.x((x - x_min) / x_span),
                p.y((y - y_min) / y_span),
            );
        }
        axis_labels(
            &mut svg,
            &p,
            &format!("{:.2}", 10f64.powf(x_min)),
            &format!("{:.2}", 10f64.powf(x_max)),
            &format!("{:.2}", 10f64.powf(y_min)),
            &format!("{:.2}", 10f64.powf(y_max)),
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Posterior mean with 2.5%/97.5% band across quantiles, one panel per
/// explanatory variable. Intercept rows are not plotted.
pub fn quantile_svg(discipline_label: &str, rows: &[QuantileTableRow]) -> String {
    let mut variables: Vec<String> = Vec::new();
    for r in rows {
        if r.variable != "(Intercept)" && !variables.contains(&r.variable) {
            variables.push(r.variable.clone());
        }
    }
    let cols = variables.len().clamp(1, 2);
    let n_rows = variables.len().div_ceil(cols).max(1);
    let mut svg = svg_open(cols as f64 * PANEL_W, n_rows as f64 * PANEL_H + 18.0);
    let _ = writeln!(
        svg,
        "<text x=\"6\" y=\"12\" font-size=\"12\">{discipline_label}</text>"
    );
    for (i, var) in variables.iter().enumerate() {
        let p = Panel {
            origin_x: (i % cols) as f64 * PANEL_W,
            origin_y: (i / cols) as f64 * PANEL_H + 18.0,
        };
        panel_frame(&mut svg, &p, var);
        let series: Vec<&QuantileTableRow> =
            rows.iter().filter(|r| &r.variable == var).collect();
        if series.is_empty() {
            continue;
        }
        let y_min = series.iter().map(|r| r.lower).fold(f64::INFINITY, f64::min);
        let y_max = series
            .iter()
            .map(|r| r.upper)
            .fold(f64::NEG_INFINITY, f64::max);
        let span = (y_max - y_min).max(1e-9);
        let fx = |q: f64| p.x((q - 0.1) / 0.8);
        let fy = |v: f64| p.y((v - y_min) / span);

        let mut band = String::new();
        for r in &series {
            let _ = write!(band, "{:.2},{:.2} ", fx(r.quantile), fy(r.upper));
        }
        for r in series.iter().rev() {
            let _ = write!(band, "{:.2},{:.2} ", fx(r.quantile), fy(r.lower));
        }
        let _ = writeln!(
            svg,
            "<polygon points=\"{}\" fill=\"#47a3ff\" fill-opacity=\"0.25\"/>",
            band.trim_end()
        );
        let mut line = String::new();
        for r in &series {
            let _ = write!(line, "{:.2},{:.2} ", fx(r.quantile), fy(r.mean));
        }
        let _ = writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f5fbf\" stroke-width=\"1.5\"/>",
            line.trim_end()
        );
        if y_min < 0.0 && y_max > 0.0 {
            let _ = writeln!(
                svg,
                "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#888888\" stroke-dasharray=\"3 2\" stroke-width=\"0.8\"/>",
                p.x(0.0),
                fy(0.0),
                p.x(1.0),
                fy(0.0),
            );
        }
        axis_labels(
            &mut svg,
            &p,
            "0.1",
            "0.9",
            &format!("{y_min:.3}"),
            &format!("{y_max:.3}"),
        );
    }
    svg.push_str("</svg>\n");
    svg
}
