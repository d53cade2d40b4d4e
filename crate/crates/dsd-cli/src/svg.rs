//! Deterministic SVG charts: stacked bars and lines over categorical x-axes.
//! Coordinates are emitted at fixed precision and every element in stored
//! order, so identical specs render byte-identical documents.

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 78.0;
const MARGIN_RIGHT: f64 = 190.0;
const MARGIN_TOP: f64 = 46.0;
const MARGIN_BOTTOM: f64 = 52.0;

const PALETTE: [&str; 8] = [
    "#4878cf", "#ee854a", "#6acc65", "#d65f5f", "#956cb4", "#8c613c", "#dc7ec0", "#797979",
];

/// How the series are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartKind {
    /// Positive values stack above the zero line, negatives below.
    StackedBar,
    /// One polyline per series over the category centers.
    Line,
}

/// One named series; `values` align with the chart's `x_labels`.
#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
}

/// Chart description passed to [`emit_svg`].
#[derive(Debug, Clone)]
pub struct ChartSpec {
    pub title: String,
    pub y_label: String,
    pub x_labels: Vec<String>,
    pub series: Vec<Series>,
    pub kind: ChartKind,
}

fn fmt(v: f64) -> String {
    format!("{:.2}", v)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Tick step as 1, 2 or 5 times a power of ten, targeting ~6 intervals.
fn nice_step(range: f64) -> f64 {
    let raw = range / 6.0;
    let mag = 10f64.powf(raw.abs().log10().floor());
    let norm = raw / mag;
    let step = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    step * mag
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 {
        0
    } else {
        (-step.log10().floor()) as usize
    };
    format!("{v:.decimals$}")
}

/// Data range per chart kind: stacked bars span the stacked extents.
fn value_range(spec: &ChartSpec) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    match spec.kind {
        ChartKind::StackedBar => {
            for x in 0..spec.x_labels.len() {
                let mut up = 0.0;
                let mut down = 0.0;
                for s in &spec.series {
                    let v = s.values.get(x).copied().unwrap_or(0.0);
                    if v >= 0.0 {
                        up += v;
                    } else {
                        down += v;
                    }
                }
                hi = hi.max(up);
                lo = lo.min(down);
            }
            hi = hi.max(0.0);
            lo = lo.min(0.0);
        }
        ChartKind::Line => {
            for s in &spec.series {
                for &v in &s.values {
                    hi = hi.max(v);
                    lo = lo.min(v);
                }
            }
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        // widen a degenerate range so the scale stays usable
        return (lo - 1.0, hi + 1.0);
    }
    (lo, hi)
}

/// Render the chart as a standalone SVG 1.1 document.
pub fn emit_svg(spec: &ChartSpec) -> String {
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x0 = MARGIN_LEFT;
    let y0 = MARGIN_TOP;

    let mut doc = String::new();
    doc.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
        WIDTH as i64, HEIGHT as i64, WIDTH as i64, HEIGHT as i64
    ));
    doc.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    doc.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\" font-weight=\"bold\">{}</text>\n",
        fmt(x0 + plot_w / 2.0),
        escape(&spec.title)
    ));
    doc.push_str(&format!(
        "<text x=\"16\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        fmt(y0 + plot_h / 2.0),
        fmt(y0 + plot_h / 2.0),
        escape(&spec.y_label)
    ));

    let has_data =
        !spec.x_labels.is_empty() && spec.series.iter().any(|s| !s.values.is_empty());
    let (lo, hi) = if has_data {
        value_range(spec)
    } else {
        (0.0, 1.0)
    };
    let step = nice_step(hi - lo);
    let tick_lo = (lo / step).floor() * step;
    let tick_hi = (hi / step).ceil() * step;
    let scale_y = |v: f64| y0 + plot_h - (v - tick_lo) / (tick_hi - tick_lo) * plot_h;

    // Horizontal grid and tick labels.
    let mut tick = tick_lo;
    while tick <= tick_hi + step * 1e-9 {
        let y = scale_y(tick);
        doc.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n",
            fmt(x0),
            fmt(y),
            fmt(x0 + plot_w),
            fmt(y)
        ));
        doc.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            fmt(x0 - 6.0),
            fmt(y + 4.0),
            tick_label(tick, step)
        ));
        tick += step;
    }

    // Axes; the zero line gets emphasis when it sits inside the range.
    doc.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\" stroke-width=\"1\"/>\n",
        fmt(x0),
        fmt(y0),
        fmt(x0),
        fmt(y0 + plot_h)
    ));
    doc.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\" stroke-width=\"1\"/>\n",
        fmt(x0),
        fmt(y0 + plot_h),
        fmt(x0 + plot_w),
        fmt(y0 + plot_h)
    ));
    if tick_lo < 0.0 && tick_hi > 0.0 {
        let y = scale_y(0.0);
        doc.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#555555\" stroke-width=\"1\"/>\n",
            fmt(x0),
            fmt(y),
            fmt(x0 + plot_w),
            fmt(y)
        ));
    }

    if !has_data {
        doc.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\" fill=\"#888888\">no data</text>\n",
            fmt(x0 + plot_w / 2.0),
            fmt(y0 + plot_h / 2.0)
        ));
        doc.push_str("</svg>\n");
        return doc;
    }

    let band = plot_w / spec.x_labels.len() as f64;
    for (i, label) in spec.x_labels.iter().enumerate() {
        doc.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            fmt(x0 + (i as f64 + 0.5) * band),
            fmt(y0 + plot_h + 16.0),
            escape(label)
        ));
    }

    match spec.kind {
        ChartKind::StackedBar => {
            let bar_w = band * 0.6;
            for (i, _) in spec.x_labels.iter().enumerate() {
                let cx = x0 + (i as f64 + 0.5) * band;
                let mut up = 0.0;
                let mut down = 0.0;
                for (si, s) in spec.series.iter().enumerate() {
                    let v = s.values.get(i).copied().unwrap_or(0.0);
                    if v == 0.0 {
                        continue;
                    }
                    let (from, to) = if v >= 0.0 {
                        let seg = (up, up + v);
                        up += v;
                        seg
                    } else {
                        let seg = (down + v, down);
                        down += v;
                        seg
                    };
                    let y_top = scale_y(to);
                    let y_bot = scale_y(from);
                    doc.push_str(&format!(
                        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>\n",
                        fmt(cx - bar_w / 2.0),
                        fmt(y_top),
                        fmt(bar_w),
                        fmt(y_bot - y_top),
                        PALETTE[si % PALETTE.len()]
                    ));
                }
            }
        }
        ChartKind::Line => {
            for (si, s) in spec.series.iter().enumerate() {
                let points: Vec<String> = s
                    .values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| {
                        format!(
                            "{},{}",
                            fmt(x0 + (i as f64 + 0.5) * band),
                            fmt(scale_y(*v))
                        )
                    })
                    .collect();
                doc.push_str(&format!(
                    "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n",
                    PALETTE[si % PALETTE.len()],
                    points.join(" ")
                ));
            }
        }
    }

    // Legend.
    let legend_x = x0 + plot_w + 16.0;
    for (si, s) in spec.series.iter().enumerate() {
        let y = y0 + 10.0 + si as f64 * 18.0;
        doc.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{}\"/>\n",
            fmt(legend_x),
            fmt(y - 10.0),
            PALETTE[si % PALETTE.len()]
        ));
        doc.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            fmt(legend_x + 18.0),
            fmt(y),
            escape(&s.name)
        ));
    }

    doc.push_str("</svg>\n");
    doc
}
