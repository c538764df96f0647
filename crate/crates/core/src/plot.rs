//! Minimal SVG and CSV emitters for margin scatters and bound curves, with
//! a logarithmic horizontal axis.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const PAD: f64 = 60.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Points,
    Line,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<[f64; 2]>,
    pub style: Style,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<[f64; 2]>, style: Style) -> Self {
        Self { name: name.into(), points, style }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Plot {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), log_y: false, series: Vec::new() }
    }

    pub fn log_y(mut self, on: bool) -> Self {
        self.log_y = on;
        self
    }

    pub fn with(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    fn visible(&self, p: &[f64; 2]) -> bool {
        p[0] > 0.0 && p[0].is_finite() && p[1].is_finite() && (!self.log_y || p[1] > 0.0)
    }

    fn ty(&self, y: f64) -> f64 {
        if self.log_y {
            y.log10()
        } else {
            y
        }
    }

    /// SVG document; points with nonpositive x (or y on a log axis) are dropped.
    pub fn to_svg(&self) -> String {
        let pts = self.series.iter().flat_map(|s| s.points.iter()).filter(|p| self.visible(p));
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in pts {
            let (x, y) = (p[0].log10(), self.ty(p[1]));
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 - x0 < 1e-12 {
            x1 = x0 + 1.0;
        }
        if y1 - y0 < 1e-12 {
            y1 = y0 + 1.0;
        }
        let sx = |x: f64| PAD + (x.log10() - x0) / (x1 - x0) * (WIDTH - 2.0 * PAD);
        let sy = |y: f64| HEIGHT - PAD - (self.ty(y) - y0) / (y1 - y0) * (HEIGHT - 2.0 * PAD);
        let mut out = String::new();
        let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#);
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(&self.title));
        let (l, r, t, b) = (PAD, WIDTH - PAD, PAD, HEIGHT - PAD);
        let _ = writeln!(out, r#"<path d="M{l} {t} L{l} {b} L{r} {b}" fill="none" stroke="black"/>"#);
        for k in x0.floor() as i64..=x1.ceil() as i64 {
            let x = k as f64;
            if x < x0 - 1e-9 || x > x1 + 1e-9 {
                continue;
            }
            let px = PAD + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * PAD);
            let _ = writeln!(out, r#"<line x1="{px:.2}" y1="{b}" x2="{px:.2}" y2="{}" stroke="black"/>"#, b + 5.0);
            let _ = writeln!(out, r#"<text x="{px:.2}" y="{}" text-anchor="middle">1e{k}</text>"#, b + 18.0);
        }
        for (i, y) in [y0, 0.5 * (y0 + y1), y1].iter().enumerate() {
            let py = HEIGHT - PAD - (i as f64) * 0.5 * (HEIGHT - 2.0 * PAD);
            let label = if self.log_y { format!("1e{y:.1}") } else { format!("{y:.3e}") };
            let _ = writeln!(out, r#"<text x="{}" y="{py:.2}" text-anchor="end">{label}</text>"#, l - 6.0);
        }
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 12.0, escape(&self.x_label));
        let _ = writeln!(
            out,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&self.y_label)
        );
        for (i, s) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let visible: Vec<&[f64; 2]> = s.points.iter().filter(|p| self.visible(p)).collect();
            match s.style {
                Style::Points => {
                    for p in visible {
                        let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="1.5" fill="{color}" fill-opacity="0.5"/>"#, sx(p[0]), sy(p[1]));
                    }
                }
                Style::Line => {
                    let d: Vec<String> = visible
                        .iter()
                        .enumerate()
                        .map(|(k, p)| format!("{}{:.2} {:.2}", if k == 0 { "M" } else { "L" }, sx(p[0]), sy(p[1])))
                        .collect();
                    let _ = writeln!(out, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, d.join(" "));
                }
            }
            let ly = PAD + 16.0 * i as f64;
            let _ = writeln!(out, r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/>"#, r - 150.0, ly - 9.0);
            let _ = writeln!(out, r#"<text x="{}" y="{ly}">{}</text>"#, r - 135.0, escape(&s.name));
        }
        out.push_str("</svg>\n");
        out
    }

    /// `series,x,y` rows for every point, including ones the SVG drops.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("series,x,y\n");
        for s in &self.series {
            for p in &s.points {
                let _ = writeln!(out, "{},{:?},{:?}", s.name.replace(',', ";"), p[0], p[1]);
            }
        }
        out
    }
}
