//! Minimal log-log line plots written as SVG text.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 130.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 45.0;

pub struct Series {
    pub label: String,
    pub color: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

impl Series {
    pub fn new(label: &str, color: &str, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.to_string(),
            color: color.to_string(),
            points,
            dashed: false,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

pub struct LogLogPlot {
    pub title: &'static str,
    pub x_label: &'static str,
    pub series: Vec<Series>,
}

fn positive(p: &(f64, f64)) -> bool {
    p.0 > 0.0 && p.1 > 0.0 && p.0.is_finite() && p.1.is_finite()
}

/// Decade-aligned `log10` bounds of the positive values.
fn decade_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        let l = v.log10();
        (lo.min(l), hi.max(l))
    });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let (lo, hi) = (lo.floor(), hi.ceil());
    if lo == hi {
        (lo, lo + 1.0)
    } else {
        (lo, hi)
    }
}

impl LogLogPlot {
    pub fn render(&self) -> String {
        let pts = || self.series.iter().flat_map(|s| s.points.iter().filter(|p| positive(p)));
        let (x0, x1) = decade_range(pts().map(|p| p.0));
        let (y0, y1) = decade_range(pts().map(|p| p.1));
        let pw = WIDTH - MARGIN_L - MARGIN_R;
        let ph = HEIGHT - MARGIN_T - MARGIN_B;
        let sx = |x: f64| MARGIN_L + (x.log10() - x0) / (x1 - x0) * pw;
        let sy = |y: f64| MARGIN_T + (y1 - y.log10()) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="18" text-anchor="middle" font-size="13">{}</text>"#,
            MARGIN_L + pw / 2.0,
            self.title
        );
        let _ = writeln!(
            s,
            r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        // Decade ticks; y labels are thinned to at most ~10.
        for e in x0 as i32..=x1 as i32 {
            let x = MARGIN_L + (e as f64 - x0) / (x1 - x0) * pw;
            let _ = writeln!(
                s,
                r##"<line x1="{x:.1}" y1="{MARGIN_T}" x2="{x:.1}" y2="{:.1}" stroke="#dddddd"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">1e{e}</text>"##,
                MARGIN_T + ph,
                MARGIN_T + ph + 15.0
            );
        }
        let step = ((y1 - y0) / 10.0).ceil().max(1.0) as usize;
        for e in (y0 as i32..=y1 as i32).step_by(step) {
            let y = MARGIN_T + (y1 - e as f64) / (y1 - y0) * ph;
            let _ = writeln!(
                s,
                r##"<line x1="{MARGIN_L}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#dddddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">1e{e}</text>"##,
                MARGIN_L + pw,
                MARGIN_L - 5.0,
                y + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            MARGIN_L + pw / 2.0,
            HEIGHT - 8.0,
            self.x_label
        );

        for (k, series) in self.series.iter().enumerate() {
            // Non-positive values (clamped estimators) break the line.
            for run in series.points.split(|p| !positive(p)).filter(|r| !r.is_empty()) {
                let path: Vec<String> = run.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
                let dash = if series.dashed { r#" stroke-dasharray="5,3""# } else { "" };
                let _ = writeln!(
                    s,
                    r#"<polyline fill="none" stroke="{}" stroke-width="1.3"{dash} points="{}"/>"#,
                    series.color,
                    path.join(" ")
                );
            }
            let ly = MARGIN_T + 12.0 + 16.0 * k as f64;
            let lx = MARGIN_L + pw + 10.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
                lx + 20.0,
                series.color,
                lx + 25.0,
                ly + 4.0,
                series.label
            );
        }
        s.push_str("</svg>\n");
        s
    }
}
