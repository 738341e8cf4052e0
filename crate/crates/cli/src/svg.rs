//! Static SVG 1.1 plots of point clouds and trajectories projected to a
//! plane spanned by two real coordinates.

use std::fmt::Write as _;

use spirallab_core::PointCn;

use crate::inputs::usage;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const PAD: f64 = 48.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#7f7f7f"];

#[derive(Debug, Clone, Copy, PartialEq)]
struct Axis {
    index: usize,
    imag: bool,
}

impl Axis {
    fn parse(text: &str, dim: usize) -> anyhow::Result<Self> {
        let t = text.trim();
        let (imag, rest) = if let Some(r) = t.strip_prefix("re") {
            (false, r)
        } else if let Some(r) = t.strip_prefix("im") {
            (true, r)
        } else {
            return Err(usage(format!("--proj: `{t}` should look like re1 or im2")));
        };
        let k: usize = rest
            .parse()
            .map_err(|_| usage(format!("--proj: bad coordinate `{t}`")))?;
        if k == 0 || k > dim {
            return Err(usage(format!("--proj: `{t}` is outside C^{dim}")));
        }
        Ok(Self { index: k - 1, imag })
    }

    fn get(&self, p: &PointCn) -> f64 {
        let c = p[self.index];
        if self.imag {
            c.im
        } else {
            c.re
        }
    }

    fn label(&self) -> String {
        format!("{} z{}", if self.imag { "Im" } else { "Re" }, self.index + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    x: Axis,
    y: Axis,
}

impl Projection {
    /// Defaults to `(Re z₁, Re z₂)`, or `(Re z₁, Im z₁)` in one variable.
    pub fn parse(text: Option<&str>, dim: usize) -> anyhow::Result<Self> {
        let default = if dim >= 2 { "re1,re2" } else { "re1,im1" };
        let text = text.unwrap_or(default);
        let parts: Vec<&str> = text.split(',').collect();
        if parts.len() != 2 {
            return Err(usage("--proj takes two coordinates, e.g. re1,re2"));
        }
        Ok(Self {
            x: Axis::parse(parts[0], dim)?,
            y: Axis::parse(parts[1], dim)?,
        })
    }

    fn apply(&self, p: &PointCn) -> (f64, f64) {
        (self.x.get(p), self.y.get(p))
    }
}

enum Layer {
    Polyline { points: Vec<(f64, f64)>, color: usize },
    Scatter { points: Vec<(f64, f64)>, color: usize, radius: f64 },
}

pub struct Plot {
    title: String,
    proj: Projection,
    layers: Vec<Layer>,
    legend: Vec<(String, usize)>,
}

impl Plot {
    pub fn new(title: impl Into<String>, proj: Projection) -> Self {
        Self {
            title: title.into(),
            proj,
            layers: Vec::new(),
            legend: Vec::new(),
        }
    }

    pub fn polyline(&mut self, points: &[PointCn], color: usize) {
        let pts: Vec<_> = points.iter().map(|p| self.proj.apply(p)).filter(finite).collect();
        if pts.len() >= 2 {
            self.layers.push(Layer::Polyline { points: pts, color });
        }
    }

    pub fn scatter(&mut self, points: &[PointCn], color: usize, radius: f64) {
        let pts: Vec<_> = points.iter().map(|p| self.proj.apply(p)).filter(finite).collect();
        if !pts.is_empty() {
            self.layers.push(Layer::Scatter { points: pts, color, radius });
        }
    }

    pub fn legend(&mut self, text: impl Into<String>, color: usize) {
        self.legend.push((text.into(), color));
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for layer in &self.layers {
            let pts = match layer {
                Layer::Polyline { points, .. } | Layer::Scatter { points, .. } => points,
            };
            for &(x, y) in pts {
                b = (b.0.min(x), b.1.max(x), b.2.min(y), b.3.max(y));
            }
        }
        if !b.0.is_finite() {
            return (-1.0, 1.0, -1.0, 1.0);
        }
        let span = (b.1 - b.0).max(b.3 - b.2).max(1e-9);
        let (cx, cy) = (0.5 * (b.0 + b.1), 0.5 * (b.2 + b.3));
        let half = 0.55 * span;
        (cx - half, cx + half, cy - half, cy + half)
    }

    pub fn render(&self) -> String {
        let (x0, x1, y0, y1) = self.bounds();
        let side = (WIDTH - 2.0 * PAD).min(HEIGHT - 2.0 * PAD);
        let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * side;
        let sy = |y: f64| PAD + (y1 - y) / (y1 - y0) * side;
        let mut s = String::new();
        let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r##"<rect x="{PAD}" y="{PAD}" width="{side}" height="{side}" fill="none" stroke="#444"/>"##
        );
        let _ = writeln!(
            s,
            r#"<text x="{PAD}" y="{:.1}" font-family="sans-serif" font-size="14">{}</text>"#,
            PAD - 16.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">{} [{:.3}, {:.3}]</text>"#,
            PAD + side / 2.0,
            PAD + side + 30.0,
            self.proj.x.label(),
            x0,
            x1
        );
        let _ = writeln!(
            s,
            r#"<text x="14" y="{:.1}" font-family="sans-serif" font-size="12" transform="rotate(-90 14 {:.1})" text-anchor="middle">{} [{:.3}, {:.3}]</text>"#,
            PAD + side / 2.0,
            PAD + side / 2.0,
            self.proj.y.label(),
            y0,
            y1
        );
        for layer in &self.layers {
            match layer {
                Layer::Polyline { points, color } => {
                    let path: Vec<String> = points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
                    let _ = writeln!(
                        s,
                        r#"<polyline fill="none" stroke="{}" stroke-width="1.2" points="{}"/>"#,
                        PALETTE[color % PALETTE.len()],
                        path.join(" ")
                    );
                }
                Layer::Scatter { points, color, radius } => {
                    let _ = writeln!(s, r#"<g fill="{}">"#, PALETTE[color % PALETTE.len()]);
                    for &(x, y) in points {
                        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="{radius}"/>"#, sx(x), sy(y));
                    }
                    let _ = writeln!(s, "</g>");
                }
            }
        }
        for (i, (text, color)) in self.legend.iter().enumerate() {
            let y = PAD + 14.0 + 16.0 * i as f64;
            let x = PAD + side + 12.0;
            let _ = writeln!(
                s,
                r#"<rect x="{x}" y="{:.1}" width="10" height="10" fill="{}"/>"#,
                y - 9.0,
                PALETTE[color % PALETTE.len()]
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{y:.1}" font-family="sans-serif" font-size="11">{}</text>"#,
                x + 14.0,
                escape(text)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn finite(p: &(f64, f64)) -> bool {
    p.0.is_finite() && p.1.is_finite()
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
