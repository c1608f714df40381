//! Minimal static SVG charts: axes, line segments, point clouds, polylines.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl Window {
    /// Bounding box of `points` padded by `pad` of its extent on each side.
    pub fn around(points: impl IntoIterator<Item = (f64, f64)>, pad: f64) -> Self {
        let mut x = (f64::INFINITY, f64::NEG_INFINITY);
        let mut y = x;
        for (a, b) in points {
            x = (x.0.min(a), x.1.max(a));
            y = (y.0.min(b), y.1.max(b));
        }
        if !x.0.is_finite() {
            return Window { x: (0.0, 1.0), y: (0.0, 1.0) };
        }
        let widen = |(lo, hi): (f64, f64)| {
            let span = (hi - lo).max(1e-3);
            (lo - pad * span, hi + pad * span)
        };
        Window { x: widen(x), y: widen(y) }
    }
}

enum Mark {
    Segment { from: (f64, f64), to: (f64, f64), color: String, width: f64 },
    Dots { points: Vec<(f64, f64)>, color: String, radius: f64 },
    Line { points: Vec<(f64, f64)>, color: String, dashed: bool },
}

pub struct Chart {
    title: String,
    x_label: String,
    y_label: String,
    window: Window,
    marks: Vec<Mark>,
    legend: Vec<(String, String)>,
}

impl Chart {
    pub fn new(title: &str, x_label: &str, y_label: &str, window: Window) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            window,
            marks: Vec::new(),
            legend: Vec::new(),
        }
    }

    pub fn segment(&mut self, from: (f64, f64), to: (f64, f64), color: &str, width: f64) -> &mut Self {
        self.marks.push(Mark::Segment { from, to, color: color.into(), width });
        self
    }

    pub fn dots(&mut self, points: Vec<(f64, f64)>, color: &str, radius: f64) -> &mut Self {
        self.marks.push(Mark::Dots { points, color: color.into(), radius });
        self
    }

    pub fn line(&mut self, points: Vec<(f64, f64)>, color: &str, dashed: bool) -> &mut Self {
        self.marks.push(Mark::Line { points, color: color.into(), dashed });
        self
    }

    pub fn legend(&mut self, label: &str, color: &str) -> &mut Self {
        self.legend.push((label.into(), color.into()));
        self
    }

    fn px(&self, (x, y): (f64, f64)) -> (f64, f64) {
        let Window { x: (x0, x1), y: (y0, y1) } = self.window;
        (
            MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN),
            H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN),
        )
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(&self.title));
        let (l, r, t, b) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
        let _ = writeln!(s, r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#, r - l, b - t);

        for i in 0..=5 {
            let f = i as f64 / 5.0;
            let xv = self.window.x.0 + f * (self.window.x.1 - self.window.x.0);
            let yv = self.window.y.0 + f * (self.window.y.1 - self.window.y.0);
            let xp = l + f * (r - l);
            let yp = b - f * (b - t);
            let _ = writeln!(s, r#"<line x1="{xp:.2}" y1="{b}" x2="{xp:.2}" y2="{}" stroke="black"/>"#, b + 5.0);
            let _ = writeln!(s, r#"<text x="{xp:.2}" y="{}" text-anchor="middle">{xv:.3}</text>"#, b + 18.0);
            let _ = writeln!(s, r#"<line x1="{}" y1="{yp:.2}" x2="{l}" y2="{yp:.2}" stroke="black"/>"#, l - 5.0);
            let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{yv:.3}</text>"#, l - 8.0, yp + 4.0);
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 15.0, escape(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            escape(&self.y_label)
        );

        let _ = writeln!(s, r#"<g>"#);
        for m in &self.marks {
            match m {
                Mark::Segment { from, to, color, width } => {
                    let (a, b2) = (self.px(*from), self.px(*to));
                    let _ = writeln!(
                        s,
                        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="{width}" stroke-linecap="round"/>"#,
                        a.0, a.1, b2.0, b2.1
                    );
                }
                Mark::Dots { points, color, radius } => {
                    for p in points {
                        let q = self.px(*p);
                        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="{radius}" fill="{color}"/>"#, q.0, q.1);
                    }
                }
                Mark::Line { points, color, dashed } => {
                    let pts: Vec<String> = points
                        .iter()
                        .map(|p| {
                            let q = self.px(*p);
                            format!("{:.2},{:.2}", q.0, q.1)
                        })
                        .collect();
                    let dash = if *dashed { r#" stroke-dasharray="6 4""# } else { "" };
                    let _ = writeln!(
                        s,
                        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                        pts.join(" ")
                    );
                }
            }
        }
        let _ = writeln!(s, "</g>");

        for (i, (label, color)) in self.legend.iter().enumerate() {
            let y = t + 16.0 + 16.0 * i as f64;
            let _ = writeln!(s, r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/>"#, r - 170.0, y - 9.0);
            let _ = writeln!(s, r#"<text x="{}" y="{y}">{}</text>"#, r - 155.0, escape(label));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_pads_each_side() {
        let w = Window::around([(0.2, 0.5), (0.4, 0.9)], 0.1);
        assert!((w.x.0 - 0.18).abs() < 1e-12 && (w.x.1 - 0.42).abs() < 1e-12);
        assert!((w.y.0 - 0.46).abs() < 1e-12 && (w.y.1 - 0.94).abs() < 1e-12);
        assert_eq!(Window::around([], 0.1).x, (0.0, 1.0));
    }

    #[test]
    fn renders_well_formed_document() {
        let mut c = Chart::new("a < b", "x", "y", Window { x: (0.0, 1.0), y: (0.0, 1.0) });
        c.segment((0.0, 0.0), (1.0, 1.0), "black", 2.0)
            .dots(vec![(0.5, 0.5)], "red", 3.0)
            .line(vec![(0.0, 1.0), (1.0, 0.0)], "blue", true)
            .legend("set", "black");
        let out = c.render();
        assert!(out.starts_with("<svg") && out.trim_end().ends_with("</svg>"));
        assert!(out.contains("a &lt; b"));
        assert_eq!(out.matches("<circle").count(), 1);
    }
}
