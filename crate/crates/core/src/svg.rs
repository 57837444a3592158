//! Minimal static SVG charts. Output depends only on the input numbers.

use std::fmt::Write as _;

const W: f64 = 480.0;
const H: f64 = 320.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 45.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Markers,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub err: Option<Vec<f64>>,
    pub style: Style,
}

impl Series {
    pub fn line(name: &str, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            points,
            err: None,
            style: Style::Line,
        }
    }

    pub fn markers(name: &str, points: Vec<(f64, f64)>, err: Option<Vec<f64>>) -> Self {
        Self {
            name: name.into(),
            points,
            err,
            style: Style::Markers,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LinePlot {
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
    pub series: Vec<Series>,
}

fn c(x: f64) -> String {
    format!("{x:.2}")
}

fn tick(x: f64) -> String {
    let s = format!("{x:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64>, ys: impl Iterator<Item = f64>) -> Self {
        let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
        for x in xs.filter(|x| x.is_finite()) {
            x0 = x0.min(x);
            x1 = x1.max(x);
        }
        let (mut y0, mut y1) = (0.0f64, 0.0f64);
        for y in ys.filter(|y| y.is_finite()) {
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1) = (0.0, 1.0);
        }
        if x1 == x0 {
            x1 = x0 + 1.0;
        }
        if y1 == y0 {
            y1 = y0 + 1.0;
        }
        let pad = 0.05 * (y1 - y0);
        Self {
            x0,
            x1,
            y0: y0 - pad,
            y1: y1 + pad,
        }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }

    fn axes(&self, s: &mut String, title: &str, xlabel: &str, ylabel: &str, xticks: bool) {
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="18" text-anchor="middle" font-size="13">{}</text>"#, c(W / 2.0), escape(title));
        let (l, r, t, b) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
        let _ = writeln!(s, r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#, c(r - l), c(b - t));
        if self.y0 < 0.0 && self.y1 > 0.0 {
            let y = self.py(0.0);
            let _ = writeln!(s, r##"<line x1="{l}" y1="{}" x2="{r}" y2="{}" stroke="#999" stroke-dasharray="3,3"/>"##, c(y), c(y));
        }
        for i in 0..=4 {
            let yv = self.y0 + (self.y1 - self.y0) * i as f64 / 4.0;
            let y = self.py(yv);
            let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, c(l - 4.0), c(y + 4.0), tick(yv));
            if xticks {
                let xv = self.x0 + (self.x1 - self.x0) * i as f64 / 4.0;
                let x = self.px(xv);
                let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, c(x), c(b + 14.0), tick(xv));
            }
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, c((l + r) / 2.0), c(H - 8.0), escape(xlabel));
        let _ = writeln!(
            s,
            r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
            c((t + b) / 2.0),
            c((t + b) / 2.0),
            escape(ylabel)
        );
    }
}

impl LinePlot {
    pub fn new(title: &str, xlabel: &str, ylabel: &str) -> Self {
        Self {
            title: title.into(),
            xlabel: xlabel.into(),
            ylabel: ylabel.into(),
            series: Vec::new(),
        }
    }

    pub fn push(&mut self, s: Series) {
        self.series.push(s);
    }

    pub fn render(&self) -> String {
        let xs = self.series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
        let ys = self.series.iter().flat_map(|s| {
            s.points.iter().enumerate().flat_map(move |(i, p)| {
                let e = s.err.as_ref().map_or(0.0, |e| e[i]);
                [p.1 - e, p.1 + e]
            })
        });
        let f = Frame::new(xs, ys);
        let mut s = String::new();
        f.axes(&mut s, &self.title, &self.xlabel, &self.ylabel, true);
        for (k, series) in self.series.iter().enumerate() {
            let color = COLORS[(k / 2 + k % 2 * 3) % COLORS.len()];
            match series.style {
                Style::Line => {
                    let pts: Vec<String> = series.points.iter().map(|&(x, y)| format!("{},{}", c(f.px(x)), c(f.py(y)))).collect();
                    let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, pts.join(" "));
                }
                Style::Markers => {
                    for (i, &(x, y)) in series.points.iter().enumerate() {
                        let (px, py) = (f.px(x), f.py(y));
                        if let Some(e) = &series.err {
                            let _ = writeln!(
                                s,
                                r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}"/>"#,
                                c(px),
                                c(f.py(y - e[i])),
                                c(px),
                                c(f.py(y + e[i]))
                            );
                        }
                        let _ = writeln!(s, r#"<circle cx="{}" cy="{}" r="3" fill="{color}"/>"#, c(px), c(py));
                    }
                }
            }
            let ly = TOP + 14.0 + 13.0 * k as f64;
            let _ = writeln!(s, r#"<text x="{}" y="{}" fill="{color}">{}</text>"#, c(LEFT + 6.0), c(ly), escape(&series.name));
        }
        s.push_str("</svg>\n");
        s
    }
}

#[derive(Debug, Clone)]
pub struct BarGroup {
    pub label: String,
    pub model: f64,
    pub data: f64,
    pub err: f64,
}

/// Model/data bar pairs per category.
#[derive(Debug, Clone)]
pub struct BarPlot {
    pub title: String,
    pub ylabel: String,
    pub groups: Vec<BarGroup>,
}

impl BarPlot {
    pub fn render(&self) -> String {
        let n = self.groups.len().max(1) as f64;
        let ys = self
            .groups
            .iter()
            .flat_map(|g| [g.model, g.data - g.err, g.data + g.err]);
        let f = Frame::new([0.0, n].into_iter(), ys);
        let mut s = String::new();
        f.axes(&mut s, &self.title, "(dt1, dt2) ms", &self.ylabel, false);
        let slot = (W - LEFT - RIGHT) / n;
        let bw = slot * 0.35;
        let zero = f.py(0.0);
        for (i, g) in self.groups.iter().enumerate() {
            let x = LEFT + slot * i as f64 + slot * 0.15;
            for (j, (v, color)) in [(g.model, COLORS[0]), (g.data, COLORS[1])].into_iter().enumerate() {
                let y = f.py(v);
                let (top, h) = if y < zero { (y, zero - y) } else { (zero, y - zero) };
                let bx = x + j as f64 * bw;
                let _ = writeln!(s, r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{color}"/>"#, c(bx), c(top), c(bw), c(h));
            }
            let ex = x + 1.5 * bw;
            let _ = writeln!(
                s,
                r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
                c(ex),
                c(f.py(g.data - g.err)),
                c(ex),
                c(f.py(g.data + g.err))
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
                c(x + bw),
                c(H - BOTTOM + 14.0),
                escape(&g.label)
            );
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" fill="{}">model</text>"#, c(LEFT + 6.0), c(TOP + 14.0), COLORS[0]);
        let _ = writeln!(s, r#"<text x="{}" y="{}" fill="{}">data</text>"#, c(LEFT + 6.0), c(TOP + 27.0), COLORS[1]);
        s.push_str("</svg>\n");
        s
    }
}

/// Histogram of `values` with `bins` equal-width bins.
pub fn histogram(title: &str, xlabel: &str, values: &[f64], bins: usize) -> String {
    let bins = bins.max(1);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo.is_finite() && hi > lo { (lo, hi) } else { (0.0, 1.0) };
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let f = Frame::new([lo, hi].into_iter(), counts.iter().map(|&n| n as f64));
    let mut s = String::new();
    f.axes(&mut s, title, xlabel, "count", true);
    for (k, &n) in counts.iter().enumerate() {
        let x0 = f.px(lo + width * k as f64);
        let x1 = f.px(lo + width * (k + 1) as f64);
        let y = f.py(n as f64);
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}" stroke="white"/>"#,
            c(x0),
            c(y),
            c(x1 - x0),
            c(f.py(0.0) - y),
            COLORS[0]
        );
    }
    s.push_str("</svg>\n");
    s
}
