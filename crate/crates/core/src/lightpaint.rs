//! Long-exposure style SVG rendering of marker traces.
//!
//! Every marker path is drawn as a stack of translucent polylines, widest
//! first, so the core of the trail reads brighter than its halo. Runs of
//! stationary samples (dwells) get a round glow whose opacity compounds with
//! the run length, the way a still light source saturates film.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::kinesim::CartesianTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rgb {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl Rgb {
    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Rgb { r, g, b }
    }
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:02X}{:02X}{:02X}", self.r, self.g, self.b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("expected a #RRGGBB color, got {0:?}")]
pub struct BadColor(pub String);

impl FromStr for Rgb {
    type Err = BadColor;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || BadColor(s.to_string());
        let hex = s.strip_prefix('#').ok_or_else(bad)?;
        if hex.len() != 6 || !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(bad());
        }
        let byte = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).map_err(|_| bad());
        Ok(Rgb::new(byte(0)?, byte(2)?, byte(4)?))
    }
}

/// Ordered named colors; names are unique.
#[derive(Debug, Clone, PartialEq)]
pub struct Palette {
    colors: Vec<(String, Rgb)>,
}

impl Default for Palette {
    /// Costume colors: peony pink, celadon green, ivory white, ink blue.
    fn default() -> Self {
        Palette {
            colors: vec![
                ("peony_pink".into(), Rgb::new(0xE8, 0x85, 0x9B)),
                ("celadon_green".into(), Rgb::new(0x9F, 0xD3, 0xC7)),
                ("ivory_white".into(), Rgb::new(0xF8, 0xF4, 0xE3)),
                ("ink_blue".into(), Rgb::new(0x2B, 0x45, 0x70)),
            ],
        }
    }
}

impl Palette {
    pub fn empty() -> Self {
        Palette { colors: Vec::new() }
    }

    /// Adds a color; returns false if the name is taken.
    pub fn insert(&mut self, name: &str, rgb: Rgb) -> bool {
        if self.get(name).is_some() {
            return false;
        }
        self.colors.push((name.to_string(), rgb));
        true
    }

    pub fn get(&self, name: &str) -> Option<Rgb> {
        self.colors.iter().find(|(n, _)| n == name).map(|(_, c)| *c)
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.colors.iter().map(|(n, _)| n.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Rgb)> {
        self.colors.iter().map(|(n, c)| (n.as_str(), *c))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Plane {
    XY,
    #[default]
    XZ,
    YZ,
}

impl Plane {
    fn project(self, p: [f64; 3]) -> (f64, f64) {
        match self {
            Plane::XY => (p[0], p[1]),
            Plane::XZ => (p[0], p[2]),
            Plane::YZ => (p[1], p[2]),
        }
    }
}

impl FromStr for Plane {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "xy" => Ok(Plane::XY),
            "xz" => Ok(Plane::XZ),
            "yz" => Ok(Plane::YZ),
            _ => Err(format!("unknown plane {s:?} (expected xy, xz or yz)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderConfig {
    pub plane: Plane,
    pub width: u32,
    pub height: u32,
    /// Blank border kept around the fitted drawing, px.
    pub margin: f64,
    /// Width of the innermost trail stroke, px.
    pub stroke_width: f64,
    /// Stroke opacity of each pass.
    pub opacity: f64,
    /// Number of stacked strokes per trail.
    pub passes: u32,
    /// Palette color name per marker, cycled; empty means palette order.
    pub marker_colors: Vec<String>,
    /// Recorded in the metadata comment.
    pub title: Option<String>,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            plane: Plane::XZ,
            width: 800,
            height: 600,
            margin: 24.0,
            stroke_width: 1.5,
            opacity: 0.25,
            passes: 3,
            marker_colors: Vec::new(),
            title: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RenderError {
    #[error("trace has no samples or no markers")]
    EmptyTrace,
    #[error("invalid render config: {0}")]
    BadConfig(String),
    #[error("color {0:?} is not in the palette")]
    UnknownColor(String),
}

impl RenderConfig {
    fn validate(&self) -> Result<(), RenderError> {
        let bad = |m: &str| Err(RenderError::BadConfig(m.to_string()));
        if self.width == 0 || self.height == 0 {
            return bad("canvas must have positive size");
        }
        if !(self.margin.is_finite() && self.margin >= 0.0)
            || 2.0 * self.margin >= self.width.min(self.height) as f64
        {
            return bad("margin must leave room to draw");
        }
        if !(self.stroke_width.is_finite() && self.stroke_width > 0.0) {
            return bad("stroke width must be positive");
        }
        if !(self.opacity > 0.0 && self.opacity <= 1.0) {
            return bad("opacity must be in (0, 1]");
        }
        if self.passes == 0 {
            return bad("at least one pass");
        }
        Ok(())
    }

    /// Short stable digest of the configuration and palette.
    fn digest(&self, palette: &Palette) -> String {
        let text = format!("{self:?}|{palette:?}");
        let hash = Sha256::digest(text.as_bytes());
        hash[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Fixed two-decimal coordinate text; never prints `-0.00`.
fn coord(v: f64) -> String {
    let s = format!("{:.2}", v + 0.0);
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

/// Affine map from the projected bounding box into the canvas margins,
/// uniform scale, centered, with +v pointing up.
struct Fit {
    u0: f64,
    v0: f64,
    scale: f64,
    cx: f64,
    cy: f64,
}

impl Fit {
    fn new(points: impl Iterator<Item = (f64, f64)>, cfg: &RenderConfig) -> Self {
        let (mut umin, mut umax, mut vmin, mut vmax) = (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        for (u, v) in points {
            umin = umin.min(u);
            umax = umax.max(u);
            vmin = vmin.min(v);
            vmax = vmax.max(v);
        }
        let avail_w = cfg.width as f64 - 2.0 * cfg.margin;
        let avail_h = cfg.height as f64 - 2.0 * cfg.margin;
        let du = umax - umin;
        let dv = vmax - vmin;
        let scale = match (du > 0.0, dv > 0.0) {
            (true, true) => (avail_w / du).min(avail_h / dv),
            (true, false) => avail_w / du,
            (false, true) => avail_h / dv,
            (false, false) => 1.0,
        };
        Fit {
            u0: (umin + umax) / 2.0,
            v0: (vmin + vmax) / 2.0,
            scale,
            cx: cfg.width as f64 / 2.0,
            cy: cfg.height as f64 / 2.0,
        }
    }

    fn apply(&self, (u, v): (f64, f64)) -> (String, String) {
        let x = self.cx + (u - self.u0) * self.scale;
        let y = self.cy - (v - self.v0) * self.scale;
        (coord(x), coord(y))
    }
}

fn comment_safe(text: &str) -> String {
    let mut s = text.replace(['\n', '\r'], " ");
    while s.contains("--") {
        s = s.replace("--", "- -");
    }
    s
}

/// Renders every marker path of `trace` to an SVG document.
///
/// Output is a pure function of the inputs, byte for byte. Each trail
/// polyline carries one vertex per trace sample.
pub fn render(
    trace: &CartesianTrace,
    palette: &Palette,
    config: &RenderConfig,
) -> Result<Vec<u8>, RenderError> {
    config.validate()?;
    let markers = trace.marker_names.len();
    if trace.is_empty() || markers == 0 {
        return Err(RenderError::EmptyTrace);
    }
    let colors: Vec<(String, Rgb)> = if config.marker_colors.is_empty() {
        palette.iter().map(|(n, c)| (n.to_string(), c)).collect()
    } else {
        config
            .marker_colors
            .iter()
            .map(|n| {
                palette
                    .get(n)
                    .map(|c| (n.clone(), c))
                    .ok_or_else(|| RenderError::UnknownColor(n.clone()))
            })
            .collect::<Result<_, _>>()?
    };
    if colors.is_empty() {
        return Err(RenderError::BadConfig("palette is empty".into()));
    }

    let fit = Fit::new(
        trace
            .positions
            .iter()
            .flatten()
            .map(|p| config.plane.project(*p)),
        config,
    );

    let mut svg = String::new();
    let (w, h) = (config.width, config.height);
    svg.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(svg, "<!-- ropera light painting");
    if let Some(title) = &config.title {
        let _ = writeln!(svg, "title: {}", comment_safe(title));
    }
    let _ = writeln!(svg, "plane: {:?}", config.plane);
    let _ = writeln!(svg, "samples: {}", trace.len());
    let _ = writeln!(
        svg,
        "markers: {}",
        comment_safe(&trace.marker_names.join(" "))
    );
    let _ = writeln!(svg, "config: {}", config.digest(palette));
    svg.push_str("-->\n");
    let _ = writeln!(svg, "<rect width=\"{w}\" height=\"{h}\" fill=\"#000000\"/>");

    for m in 0..markers {
        let (color_name, rgb) = &colors[m % colors.len()];
        let pts: Vec<(String, String)> = trace
            .positions
            .iter()
            .map(|sample| fit.apply(config.plane.project(sample[m])))
            .collect();
        let points = pts
            .iter()
            .map(|(x, y)| format!("{x},{y}"))
            .collect::<Vec<_>>()
            .join(" ");
        let _ = writeln!(
            svg,
            "<g id=\"trail-{}\" data-color=\"{color_name}\" stroke=\"{rgb}\" fill=\"none\" stroke-linecap=\"round\" stroke-linejoin=\"round\">",
            m
        );
        for pass in 0..config.passes {
            let width = config.stroke_width * (config.passes - pass) as f64;
            let _ = writeln!(
                svg,
                "<polyline stroke-width=\"{}\" stroke-opacity=\"{:.3}\" points=\"{points}\"/>",
                coord(width),
                config.opacity
            );
        }
        let glow_width = coord(config.stroke_width * (config.passes + 1) as f64);
        let mut k = 0;
        while k < pts.len() {
            let run = pts[k..].iter().take_while(|p| **p == pts[k]).count();
            if run >= 2 || pts.len() == 1 {
                let alpha = 1.0 - (1.0 - config.opacity).powi(run.min(i32::MAX as usize) as i32);
                let (x, y) = &pts[k];
                let _ = writeln!(
                    svg,
                    "<path d=\"M{x} {y}h0\" stroke-width=\"{glow_width}\" stroke-opacity=\"{alpha:.3}\"/>"
                );
            }
            k += run;
        }
        svg.push_str("</g>\n");
    }
    svg.push_str("</svg>\n");
    Ok(svg.into_bytes())
}
