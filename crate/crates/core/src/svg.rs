//! Minimal SVG line plots: one `<polyline>` per series, plain axes.

use std::fmt::Write as _;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone)]
struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

/// Data-space plot with y pointing up. Coordinates are written as given
/// after a uniform scale, so aspect ratio is preserved.
#[derive(Debug, Clone)]
pub struct SvgPlot {
    title: String,
    x_label: String,
    y_label: String,
    width: f64,
    height: f64,
    series: Vec<Series>,
}

impl SvgPlot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            width: 640.0,
            height: 640.0,
            series: Vec::new(),
        }
    }

    pub fn add_polyline(&mut self, label: &str, points: Vec<(f64, f64)>) -> &mut Self {
        self.series.push(Series {
            label: label.to_string(),
            points,
        });
        self
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let pts = self.series.iter().flat_map(|s| s.points.iter());
        let (mut x0, mut x1, mut y0, mut y1) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for &(x, y) in pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if x1 - x0 < 1e-12 {
            x1 = x0 + 1.0;
        }
        if y1 - y0 < 1e-12 {
            y1 = y0 + 1.0;
        }
        (x0, x1, y0, y1)
    }

    pub fn render(&self) -> String {
        let margin = 60.0;
        let (x0, x1, y0, y1) = self.bounds();
        let scale = ((self.width - 2.0 * margin) / (x1 - x0)).min((self.height - 2.0 * margin) / (y1 - y0));
        let map = |x: f64, y: f64| (margin + (x - x0) * scale, self.height - margin - (y - y0) * scale);

        let mut out = String::new();
        let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
            w = self.width,
            h = self.height
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
            self.width / 2.0,
            escape(&self.title)
        );

        let (ax, ay) = map(x0, y0);
        let (bx, _) = map(x1, y0);
        let (_, by) = map(x0, y1);
        let _ = writeln!(out, r#"<line x1="{ax:.2}" y1="{ay:.2}" x2="{bx:.2}" y2="{ay:.2}" stroke="black"/>"#);
        let _ = writeln!(out, r#"<line x1="{ax:.2}" y1="{ay:.2}" x2="{ax:.2}" y2="{by:.2}" stroke="black"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
            (ax + bx) / 2.0,
            ay + 36.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">{}</text>"#,
            ax - 36.0,
            (ay + by) / 2.0,
            ax - 36.0,
            (ay + by) / 2.0,
            escape(&self.y_label)
        );
        for (label, v, (px, py)) in [
            ("x", x0, (ax, ay + 16.0)),
            ("x", x1, (bx, ay + 16.0)),
            ("y", y1, (ax - 6.0, by + 4.0)),
        ] {
            let anchor = if label == "y" { "end" } else { "middle" };
            let _ = writeln!(
                out,
                r#"<text x="{px:.2}" y="{py:.2}" font-family="sans-serif" font-size="10" text-anchor="{anchor}">{v:.4}</text>"#
            );
        }

        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let pts: Vec<String> = s
                .points
                .iter()
                .map(|&(x, y)| {
                    let (px, py) = map(x, y);
                    format!("{px:.2},{py:.2}")
                })
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"><title>{}</title></polyline>"#,
                pts.join(" "),
                escape(&s.label)
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
                self.width - margin - 120.0,
                margin + 14.0 * i as f64,
                escape(&s.label)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
