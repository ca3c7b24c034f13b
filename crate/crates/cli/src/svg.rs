//! Minimal self-contained SVG 1.1 figures: line plots with shaded bands and
//! heat maps. Output is a pure function of the data, so figures are as
//! reproducible as the CSVs they mirror.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

#[derive(Clone, Debug)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub color: String,
    pub dashed: bool,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>, color: &str) -> Self {
        Self { name: name.into(), points, color: color.into(), dashed: false }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

/// Shaded region between `lower` and `upper`, sampled at the same abscissae.
#[derive(Clone, Debug)]
pub struct Band {
    pub name: String,
    pub x: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub color: String,
}

#[derive(Clone, Debug, Default)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub bands: Vec<Band>,
}

pub fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Roughly five round tick positions covering `[lo, hi]`.
pub fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) || !span.is_finite() {
        return vec![lo];
    }
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        escape(title)
    );
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }

    fn axes(&self, out: &mut String, x_label: &str, y_label: &str) {
        let (l, r, t, b) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
        let _ = writeln!(out, r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#, r - l, b - t);
        for x in ticks(self.x0, self.x1) {
            let p = self.px(x);
            let _ = writeln!(out, r#"<line x1="{p:.2}" y1="{b}" x2="{p:.2}" y2="{}" stroke="black"/>"#, b + 5.0);
            let _ = writeln!(out, r#"<text x="{p:.2}" y="{}" text-anchor="middle">{}</text>"#, b + 19.0, fmt_tick(x));
        }
        for y in ticks(self.y0, self.y1) {
            let p = self.py(y);
            let _ = writeln!(out, r#"<line x1="{}" y1="{p:.2}" x2="{l}" y2="{p:.2}" stroke="black"/>"#, l - 5.0);
            let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, l - 8.0, p + 4.0, fmt_tick(y));
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{}" text-anchor="middle" class="x-label">{}</text>"#,
            (l + r) / 2.0,
            HEIGHT - 18.0,
            escape(x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})" class="y-label">{}</text>"#,
            (t + b) / 2.0,
            (t + b) / 2.0,
            escape(y_label)
        );
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi - lo <= 1e-12 * lo.abs().max(hi.abs()).max(1e-300) {
        let d = lo.abs().max(1.0) * 0.5;
        return (lo - d, hi + d);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

impl LinePlot {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), ..Default::default() }
    }

    pub fn render(&self) -> String {
        let finite = |&(x, y): &(f64, f64)| x.is_finite() && y.is_finite();
        let mut xs: Vec<f64> = Vec::new();
        let mut ys: Vec<f64> = Vec::new();
        for s in &self.series {
            for p in s.points.iter().filter(|p| finite(p)) {
                xs.push(p.0);
                ys.push(p.1);
            }
        }
        for b in &self.bands {
            for ((x, lo), hi) in b.x.iter().zip(&b.lower).zip(&b.upper) {
                if x.is_finite() && lo.is_finite() && hi.is_finite() {
                    xs.push(*x);
                    ys.extend([*lo, *hi]);
                }
            }
        }
        let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
        let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (x0, x1) = if xs.is_empty() { (0.0, 1.0) } else { (min(&xs), max(&xs)) };
        let (x0, x1) = if x1 > x0 { (x0, x1) } else { padded(x0, x1) };
        let (y0, y1) = if ys.is_empty() { (0.0, 1.0) } else { padded(min(&ys), max(&ys)) };
        let frame = Frame { x0, x1, y0, y1 };

        let mut out = String::new();
        header(&mut out, &self.title);
        for b in &self.bands {
            let pts: Vec<(f64, f64, f64)> = b
                .x
                .iter()
                .zip(&b.lower)
                .zip(&b.upper)
                .filter(|((x, l), u)| x.is_finite() && l.is_finite() && u.is_finite())
                .map(|((x, l), u)| (*x, *l, *u))
                .collect();
            let mut poly = String::new();
            for (x, _, u) in &pts {
                let _ = write!(poly, "{:.2},{:.2} ", frame.px(*x), frame.py(*u));
            }
            for (x, l, _) in pts.iter().rev() {
                let _ = write!(poly, "{:.2},{:.2} ", frame.px(*x), frame.py(*l));
            }
            let _ = writeln!(
                out,
                r#"<polygon points="{}" fill="{}" fill-opacity="0.25" stroke="none"><title>{}</title></polygon>"#,
                poly.trim_end(),
                b.color,
                escape(&b.name)
            );
        }
        for s in &self.series {
            let mut pts = String::new();
            for (x, y) in s.points.iter().filter(|p| finite(p)) {
                let _ = write!(pts, "{:.2},{:.2} ", frame.px(*x), frame.py(*y));
            }
            let dash = if s.dashed { r#" stroke-dasharray="6,4""# } else { "" };
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.8"{dash}><title>{}</title></polyline>"#,
                pts.trim_end(),
                s.color,
                escape(&s.name)
            );
        }
        frame.axes(&mut out, &self.x_label, &self.y_label);
        self.legend(&mut out);
        out.push_str("</svg>\n");
        out
    }

    fn legend(&self, out: &mut String) {
        let x = WIDTH - RIGHT + 12.0;
        let mut y = TOP + 12.0;
        for b in &self.bands {
            let _ = writeln!(
                out,
                r#"<rect x="{x}" y="{}" width="22" height="10" fill="{}" fill-opacity="0.25"/>"#,
                y - 8.0,
                b.color
            );
            let _ = writeln!(out, r#"<text x="{}" y="{:.1}">{}</text>"#, x + 28.0, y + 1.0, escape(&b.name));
            y += 18.0;
        }
        for s in &self.series {
            let dash = if s.dashed { r#" stroke-dasharray="6,4""# } else { "" };
            let _ = writeln!(
                out,
                r#"<line x1="{x}" y1="{:.1}" x2="{}" y2="{:.1}" stroke="{}" stroke-width="1.8"{dash}/>"#,
                y - 3.0,
                x + 22.0,
                y - 3.0,
                s.color
            );
            let _ = writeln!(out, r#"<text x="{}" y="{:.1}">{}</text>"#, x + 28.0, y + 1.0, escape(&s.name));
            y += 18.0;
        }
    }
}

fn colormap(t: f64) -> String {
    // viridis anchors
    const STOPS: [(f64, f64, f64); 5] =
        [(68.0, 1.0, 84.0), (59.0, 82.0, 139.0), (33.0, 145.0, 140.0), (94.0, 201.0, 98.0), (253.0, 231.0, 37.0)];
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let s = t * (STOPS.len() - 1) as f64;
    let i = (s.floor() as usize).min(STOPS.len() - 2);
    let f = s - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |p: f64, q: f64| (p + f * (q - p)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Heat map of `values[j * xs.len() + i]` at `(xs[i], ys[j])` on a uniform
/// grid; values above `clip` are drawn in the top colour.
pub fn heat_map(title: &str, x_label: &str, y_label: &str, xs: &[f64], ys: &[f64], values: &[f64], clip: f64) -> String {
    assert_eq!(values.len(), xs.len() * ys.len(), "value grid does not match axes");
    let hx = if xs.len() > 1 { xs[1] - xs[0] } else { 1.0 };
    let hy = if ys.len() > 1 { ys[1] - ys[0] } else { 1.0 };
    let frame = Frame {
        x0: xs[0] - hx / 2.0,
        x1: xs[xs.len() - 1] + hx / 2.0,
        y0: ys[0] - hy / 2.0,
        y1: ys[ys.len() - 1] + hy / 2.0,
    };
    let lo = values.iter().copied().filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max).min(clip);
    let scale = if hi > lo { hi - lo } else { 1.0 };

    let mut out = String::new();
    header(&mut out, title);
    let w = (frame.px(frame.x0 + hx) - frame.px(frame.x0)).abs();
    let h = (frame.py(frame.y0 + hy) - frame.py(frame.y0)).abs();
    let _ = writeln!(out, r#"<g shape-rendering="crispEdges">"#);
    for (j, y) in ys.iter().enumerate() {
        for (i, x) in xs.iter().enumerate() {
            let v = values[j * xs.len() + i];
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                frame.px(x - hx / 2.0),
                frame.py(y + hy / 2.0),
                w + 0.05,
                h + 0.05,
                colormap((v - lo) / scale)
            );
        }
    }
    let _ = writeln!(out, "</g>");
    frame.axes(&mut out, x_label, y_label);
    // colour bar
    let bx = WIDTH - RIGHT + 20.0;
    let steps = 32;
    let bh = (HEIGHT - TOP - BOTTOM) / steps as f64;
    for k in 0..steps {
        let t = 1.0 - (k as f64 + 0.5) / steps as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{bx}" y="{:.2}" width="18" height="{:.2}" fill="{}"/>"#,
            TOP + k as f64 * bh,
            bh + 0.05,
            colormap(t)
        );
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, bx + 24.0, TOP + 10.0, fmt_tick(hi));
    let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, bx + 24.0, HEIGHT - BOTTOM, fmt_tick(lo));
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round() {
        assert_eq!(ticks(0.0, 10.0), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        let t = ticks(-0.013, 0.021);
        assert!(t.len() >= 3 && t.len() <= 7);
        assert_eq!(ticks(1.0, 1.0), vec![1.0]);
    }

    #[test]
    fn colormap_endpoints() {
        assert_eq!(colormap(0.0), "#440154");
        assert_eq!(colormap(1.0), "#fde725");
        assert_eq!(colormap(f64::NAN), "#440154");
    }

    #[test]
    fn plot_has_one_polyline_per_series() {
        let mut p = LinePlot::new("a < b", "T", "response");
        p.series.push(Series::new("one", vec![(0.0, 1.0), (1.0, 2.0)], PALETTE[0]));
        p.series.push(Series::new("two", vec![(0.0, f64::NAN), (1.0, 0.5)], PALETTE[1]).dashed());
        p.bands.push(Band {
            name: "band".into(),
            x: vec![0.0, 1.0],
            lower: vec![0.5, 1.5],
            upper: vec![1.5, 2.5],
            color: PALETTE[0].into(),
        });
        let s = p.render();
        assert_eq!(s.matches("<polyline").count(), 2);
        assert_eq!(s.matches("<polygon").count(), 1);
        assert!(s.contains("a &lt; b"));
        assert!(s.trim_end().ends_with("</svg>"));
    }
}
