//! Static SVG rendering of the envelope plot: gray replicate step curves,
//! the observed process in red, and the p-value annotated.

use std::fmt::Write;

use crate::engine::TraceRow;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 25.0;
const MARGIN_TOP: f64 = 45.0;
const MARGIN_BOTTOM: f64 = 55.0;

struct Scale {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Scale {
    fn x(&self, v: f64) -> f64 {
        let span = (self.x_max - self.x_min).max(f64::MIN_POSITIVE);
        MARGIN_LEFT + (v - self.x_min) / span * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        let span = (self.y_max - self.y_min).max(f64::MIN_POSITIVE);
        HEIGHT - MARGIN_BOTTOM - (v - self.y_min) / span * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn step_path(keys: &[f64], cums: &[f64], scale: &Scale) -> String {
    // right-continuous step function, zero left of the first key
    let mut d = String::new();
    let _ = write!(
        d,
        "M {:.2} {:.2} L {:.2} {:.2}",
        scale.x(scale.x_min),
        scale.y(0.0),
        scale.x(keys[0]),
        scale.y(0.0)
    );
    for (k, c) in keys.iter().zip(cums) {
        let _ = write!(d, " L {:.2} {:.2}", scale.x(*k), scale.y(*c));
        let _ = write!(d, " H {:.2}", scale.x(*k));
    }
    // hold the last value to the right edge
    let _ = write!(d, " H {:.2}", scale.x(scale.x_max));
    d
}

/// Renders the long-format envelope table to a standalone SVG document.
/// Replicate id 0 is drawn last, in red, over the gray replicate curves.
pub fn render_envelope(rows: &[TraceRow], p_value: f64, statistic: &str, x_label: &str) -> String {
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min: f64 = 0.0;
    let mut y_max: f64 = 0.0;
    for r in rows {
        x_min = x_min.min(r.key);
        x_max = x_max.max(r.key);
        y_min = y_min.min(r.cum);
        y_max = y_max.max(r.cum);
    }
    let pad = 0.05 * (y_max - y_min).max(1e-12);
    let scale = Scale {
        x_min,
        x_max,
        y_min: y_min - pad,
        y_max: y_max + pad,
    };

    // group rows by replicate id (envelope emits them grouped)
    let mut traces: Vec<(usize, Vec<f64>, Vec<f64>)> = Vec::new();
    for r in rows {
        match traces.last_mut() {
            Some((id, keys, cums)) if *id == r.replicate_id => {
                keys.push(r.key);
                cums.push(r.cum);
            }
            _ => traces.push((r.replicate_id, vec![r.key], vec![r.cum])),
        }
    }

    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    );
    let _ = write!(
        svg,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    );

    // replicate envelope first, observed curve on top
    for (id, keys, cums) in traces.iter().filter(|(id, _, _)| *id != 0) {
        let _ = id;
        let _ = write!(
            svg,
            "<path d=\"{}\" fill=\"none\" stroke=\"#bdbdbd\" stroke-width=\"1\" stroke-opacity=\"0.55\"/>\n",
            step_path(keys, cums, &scale)
        );
    }
    if let Some((_, keys, cums)) = traces.iter().find(|(id, _, _)| *id == 0) {
        let _ = write!(
            svg,
            "<path d=\"{}\" fill=\"none\" stroke=\"#c62828\" stroke-width=\"2\"/>\n",
            step_path(keys, cums, &scale)
        );
    }

    // axes
    let x0 = MARGIN_LEFT;
    let x1 = WIDTH - MARGIN_RIGHT;
    let y0 = HEIGHT - MARGIN_BOTTOM;
    let y1 = MARGIN_TOP;
    let _ = write!(
        svg,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n"
    );
    let zero_y = scale.y(0.0);
    let _ = write!(
        svg,
        "<line x1=\"{x0}\" y1=\"{zero_y:.2}\" x2=\"{x1}\" y2=\"{zero_y:.2}\" stroke=\"#888888\" stroke-dasharray=\"4 4\" stroke-width=\"0.7\"/>\n"
    );

    let _ = write!(
        svg,
        "<text x=\"{x0}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{:.4}</text>\n",
        y0 + 18.0,
        x_min
    );
    let _ = write!(
        svg,
        "<text x=\"{x1}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{:.4}</text>\n",
        y0 + 18.0,
        x_max
    );
    let _ = write!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">{:.3}</text>\n",
        x0 - 6.0,
        scale.y(scale.y_min) + 4.0,
        scale.y_min
    );
    let _ = write!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">{:.3}</text>\n",
        x0 - 6.0,
        scale.y(scale.y_max) + 4.0,
        scale.y_max
    );
    let _ = write!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
        (x0 + x1) / 2.0,
        HEIGHT - 14.0,
        x_label
    );
    let _ = write!(
        svg,
        "<text x=\"18\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 {})\" text-anchor=\"middle\">W(t)</text>\n",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    let _ = write!(
        svg,
        "<text x=\"{x1}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"end\">{} p = {}</text>\n",
        y1 - 12.0,
        statistic,
        p_value
    );
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_observed_and_replicates() {
        let rows = vec![
            TraceRow {
                replicate_id: 0,
                key: 0.0,
                cum: -0.4,
            },
            TraceRow {
                replicate_id: 0,
                key: 1.0,
                cum: 0.0,
            },
            TraceRow {
                replicate_id: 1,
                key: 0.0,
                cum: 0.2,
            },
            TraceRow {
                replicate_id: 1,
                key: 1.0,
                cum: 0.0,
            },
        ];
        let svg = render_envelope(&rows, 0.042, "ks", "fitted values");
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("#c62828"));
        assert!(svg.contains("#bdbdbd"));
        assert!(svg.contains("p = 0.042"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
