//! Static SVG line chart of error against restart cycle, log scale on the
//! vertical axis. Pure string assembly — the chart has no interactive parts
//! and no external assets.

/// One labeled polyline: `(cycle, error)` points.
pub(crate) struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 190.0; // room for the legend
const MARGIN_TOP: f64 = 42.0;
const MARGIN_BOTTOM: f64 = 52.0;

/// Errors below this floor are clamped so log scaling stays finite; a true
/// zero (exact convergence) plots on the floor line.
const ERROR_FLOOR: f64 = 1e-17;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

/// Renders the chart. Series with no points are skipped; an all-empty input
/// still yields a well-formed (blank) chart.
pub(crate) fn line_chart(title: &str, series: &[Series]) -> String {
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;

    // Data ranges: cycles on x (linear), log10(error) on y.
    let mut x_max = 1.0f64;
    let mut log_min = f64::INFINITY;
    let mut log_max = f64::NEG_INFINITY;
    for s in series {
        for &(x, y) in &s.points {
            x_max = x_max.max(x);
            let l = y.max(ERROR_FLOOR).log10();
            log_min = log_min.min(l);
            log_max = log_max.max(l);
        }
    }
    if !log_min.is_finite() {
        log_min = -16.0;
        log_max = 0.0;
    }
    // Snap the vertical range to whole decades so gridline labels are exact.
    let dec_min = log_min.floor();
    let dec_max = (log_max.ceil()).max(dec_min + 1.0);

    let x_of = |cycle: f64| {
        let span = (x_max - 1.0).max(1.0);
        MARGIN_LEFT + (cycle - 1.0) / span * plot_w
    };
    let y_of = |err: f64| {
        let l = err.max(ERROR_FLOOR).log10().clamp(dec_min, dec_max);
        MARGIN_TOP + (dec_max - l) / (dec_max - dec_min) * plot_h
    };

    let mut out = String::with_capacity(16 * 1024);
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    out.push_str(&format!(
        "  <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    out.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        escape(title)
    ));

    // Horizontal decade gridlines and y labels.
    let mut dec = dec_min;
    while dec <= dec_max + 0.5 {
        let y = y_of(10f64.powf(dec));
        out.push_str(&format!(
            "  <line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" \
             stroke=\"#dddddd\"/>\n",
            MARGIN_LEFT,
            MARGIN_LEFT + plot_w
        ));
        out.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">1e{}</text>\n",
            MARGIN_LEFT - 8.0,
            y + 4.0,
            dec as i64
        ));
        dec += 1.0;
    }

    // Integer x ticks, thinned to at most 12.
    let cycles = x_max.round() as usize;
    let step = (cycles.max(1) + 11) / 12;
    let mut c = 1usize;
    while c <= cycles.max(1) {
        let x = x_of(c as f64);
        out.push_str(&format!(
            "  <line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" \
             stroke=\"#dddddd\"/>\n",
            MARGIN_TOP,
            MARGIN_TOP + plot_h
        ));
        out.push_str(&format!(
            "  <text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{c}</text>\n",
            MARGIN_TOP + plot_h + 18.0
        ));
        c += step.max(1);
    }

    // Axes on top of the grid.
    out.push_str(&format!(
        "  <rect x=\"{:.1}\" y=\"{:.1}\" width=\"{plot_w:.1}\" height=\"{plot_h:.1}\" \
         fill=\"none\" stroke=\"#333333\"/>\n",
        MARGIN_LEFT, MARGIN_TOP
    ));
    out.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">restart cycle</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 14.0
    ));
    out.push_str(&format!(
        "  <text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" \
         transform=\"rotate(-90 18 {:.1})\">relative error</text>\n",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    ));

    // Polylines and legend.
    let legend_x = MARGIN_LEFT + plot_w + 16.0;
    let mut legend_y = MARGIN_TOP + 10.0;
    for (i, s) in series.iter().filter(|s| !s.points.is_empty()).enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.1},{:.1}", x_of(x), y_of(y)))
            .collect();
        out.push_str(&format!(
            "  <polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\"/>\n",
            pts.join(" ")
        ));
        for p in &pts {
            let mut halves = p.split(',');
            let (x, y) = (halves.next().unwrap(), halves.next().unwrap());
            out.push_str(&format!(
                "  <circle cx=\"{x}\" cy=\"{y}\" r=\"2.4\" fill=\"{color}\"/>\n"
            ));
        }
        out.push_str(&format!(
            "  <line x1=\"{legend_x:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" \
             stroke=\"{color}\" stroke-width=\"1.6\"/>\n",
            legend_y - 4.0,
            legend_x + 22.0,
            legend_y - 4.0
        ));
        out.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{legend_y:.1}\">{}</text>\n",
            legend_x + 28.0,
            escape(&s.label)
        ));
        legend_y += 18.0;
    }

    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_is_well_formed() {
        let series = [
            Series {
                label: "classical/bcirc m=5".into(),
                points: vec![(1.0, 1.0), (2.0, 1e-4), (3.0, 1e-9), (4.0, 1e-13)],
            },
            Series {
                label: "global & <odd>".into(),
                points: vec![(1.0, 1.0), (2.0, 1e-3), (3.0, 1e-8)],
            },
        ];
        let svg = line_chart("relative error per restart cycle", &series);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("&amp; &lt;odd&gt;"));
        // Every decade between the extremes gets a gridline label.
        for dec in ["1e0", "1e-13"] {
            assert!(svg.contains(dec), "missing label {dec}");
        }
    }

    #[test]
    fn empty_input_still_renders() {
        let svg = line_chart("empty", &[]);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 0);
    }

    #[test]
    fn zero_error_clamps_to_floor() {
        let series = [Series {
            label: "exact".into(),
            points: vec![(1.0, 0.0)],
        }];
        let svg = line_chart("floor", &series);
        assert!(svg.contains("<polyline"));
        // No NaN / infinity may leak into coordinates.
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }
}
