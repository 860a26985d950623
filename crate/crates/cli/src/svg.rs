//! Single-series SVG polyline plots, optionally with a straight reference
//! line through the origin.

use std::fmt::Write as _;
use std::path::Path;

pub struct PlotSpec<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub xs: &'a [f64],
    pub ys: &'a [f64],
    /// Slope of a dashed `y = slope * x` reference line.
    pub reference_slope: Option<f64>,
}

const W: f64 = 800.0;
const H: f64 = 560.0;
const MARGIN: f64 = 64.0;

pub fn write_polyline_plot(path: &Path, spec: &PlotSpec<'_>) -> std::io::Result<()> {
    assert_eq!(spec.xs.len(), spec.ys.len());
    let x_min = spec.xs.iter().cloned().fold(f64::INFINITY, f64::min).min(0.0);
    let x_max = spec.xs.iter().cloned().fold(0.0f64, f64::max).max(1e-9);
    let mut y_max = spec.ys.iter().cloned().fold(0.0f64, f64::max);
    if let Some(slope) = spec.reference_slope {
        y_max = y_max.max(slope * x_max);
    }
    let y_max = y_max.max(1e-9);
    let y_min = 0.0f64;

    let sx = (W - 2.0 * MARGIN) / (x_max - x_min);
    let sy = (H - 2.0 * MARGIN) / (y_max - y_min);
    let px = |x: f64| MARGIN + (x - x_min) * sx;
    let py = |y: f64| H - MARGIN - (y - y_min) * sy;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    );
    let _ = writeln!(svg, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"28\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>",
        W / 2.0,
        spec.title
    );
    // axes
    let _ = writeln!(
        svg,
        "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>",
        px(x_min),
        py(y_min),
        px(x_max),
        py(y_min)
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>",
        px(x_min),
        py(y_min),
        px(x_min),
        py(y_max)
    );
    for (label, x, y, anchor) in [
        (format!("{x_min:.0}"), px(x_min), py(y_min) + 18.0, "middle"),
        (format!("{x_max:.0}"), px(x_max), py(y_min) + 18.0, "middle"),
        (format!("{y_max:.3}"), px(x_min) - 6.0, py(y_max) + 4.0, "end"),
    ] {
        let _ = writeln!(
            svg,
            "<text x=\"{x:.1}\" y=\"{y:.1}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"{anchor}\">{label}</text>"
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>",
        W / 2.0,
        H - 18.0,
        spec.x_label
    );
    let _ = writeln!(
        svg,
        "<text x=\"20\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 20 {:.1})\">{}</text>",
        H / 2.0,
        H / 2.0,
        spec.y_label
    );
    if let Some(slope) = spec.reference_slope {
        let _ = writeln!(
            svg,
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"gray\" stroke-dasharray=\"6 4\"/>",
            px(0.0),
            py(0.0),
            px(x_max),
            py(slope * x_max)
        );
    }
    let mut points = String::new();
    for (x, y) in spec.xs.iter().zip(spec.ys) {
        let _ = write!(points, "{:.2},{:.2} ", px(*x), py(*y));
    }
    let _ = writeln!(
        svg,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.2\"/>",
        points.trim_end()
    );
    let _ = writeln!(svg, "</svg>");
    std::fs::write(path, svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_wellformed_svg() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plot.svg");
        let xs: Vec<f64> = (0..100).map(|k| k as f64 / 10.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x * 0.8).collect();
        write_polyline_plot(
            &path,
            &PlotSpec {
                title: "test",
                x_label: "x",
                y_label: "F",
                xs: &xs,
                ys: &ys,
                reference_slope: Some(0.83),
            },
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("<svg"));
        assert!(text.contains("polyline"));
        assert!(text.contains("stroke-dasharray"));
        assert!(text.trim_end().ends_with("</svg>"));
    }
}
