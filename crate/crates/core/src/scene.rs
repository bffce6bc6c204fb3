//! Resolution-independent scene graph, SVG rendering and bounding-box geometry.
//!
//! Angles for arcs and wedges are in degrees, measured clockwise from twelve
//! o'clock, so `0` points up and `90` points right. The same convention is
//! used by dial hands and pie wedges.
//!
//! Text extent is not measured from font metrics. A text primitive of
//! `n` glyphs at font size `s` occupies `TEXT_WIDTH_FACTOR * s * n` by
//! `TEXT_HEIGHT_FACTOR * s` canvas units, with its `y` coordinate at the top
//! of that box.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Glyph width as a fraction of font size.
pub const TEXT_WIDTH_FACTOR: f64 = 0.6;
/// Line height as a fraction of font size.
pub const TEXT_HEIGHT_FACTOR: f64 = 1.0;

pub const DEFAULT_WIDTH: u32 = 640;
pub const DEFAULT_HEIGHT: u32 = 480;
const MIN_CANVAS: u32 = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("invalid scene: primitives {indices:?}: {reasons}")]
    InvalidScene { indices: Vec<usize>, reasons: String },
    #[error("canvas {width}x{height} is smaller than {MIN_CANVAS}x{MIN_CANVAS}")]
    CanvasTooSmall { width: u32, height: u32 },
    #[error("unknown role `{0}`")]
    UnknownRole(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    pub const WHITE: Rgb = Rgb(255, 255, 255);
    pub const BLACK: Rgb = Rgb(0, 0, 0);

    fn hex(self) -> String {
        format!("#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }
}

/// The closed 16-colour vocabulary used for every colour that a question can ask about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PaletteColor {
    Black,
    White,
    Gray,
    Red,
    Orange,
    Yellow,
    Green,
    Olive,
    Teal,
    Cyan,
    Lightblue,
    Blue,
    Navy,
    Purple,
    Pink,
    Brown,
}

impl PaletteColor {
    pub const ALL: [PaletteColor; 16] = [
        PaletteColor::Black,
        PaletteColor::White,
        PaletteColor::Gray,
        PaletteColor::Red,
        PaletteColor::Orange,
        PaletteColor::Yellow,
        PaletteColor::Green,
        PaletteColor::Olive,
        PaletteColor::Teal,
        PaletteColor::Cyan,
        PaletteColor::Lightblue,
        PaletteColor::Blue,
        PaletteColor::Navy,
        PaletteColor::Purple,
        PaletteColor::Pink,
        PaletteColor::Brown,
    ];

    /// Colours that read well as fills on a white background.
    pub const FILLS: [PaletteColor; 12] = [
        PaletteColor::Red,
        PaletteColor::Orange,
        PaletteColor::Yellow,
        PaletteColor::Green,
        PaletteColor::Olive,
        PaletteColor::Teal,
        PaletteColor::Cyan,
        PaletteColor::Lightblue,
        PaletteColor::Blue,
        PaletteColor::Purple,
        PaletteColor::Pink,
        PaletteColor::Brown,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PaletteColor::Black => "black",
            PaletteColor::White => "white",
            PaletteColor::Gray => "gray",
            PaletteColor::Red => "red",
            PaletteColor::Orange => "orange",
            PaletteColor::Yellow => "yellow",
            PaletteColor::Green => "green",
            PaletteColor::Olive => "olive",
            PaletteColor::Teal => "teal",
            PaletteColor::Cyan => "cyan",
            PaletteColor::Lightblue => "lightblue",
            PaletteColor::Blue => "blue",
            PaletteColor::Navy => "navy",
            PaletteColor::Purple => "purple",
            PaletteColor::Pink => "pink",
            PaletteColor::Brown => "brown",
        }
    }

    pub fn rgb(self) -> Rgb {
        match self {
            PaletteColor::Black => Rgb(0, 0, 0),
            PaletteColor::White => Rgb(255, 255, 255),
            PaletteColor::Gray => Rgb(128, 128, 128),
            PaletteColor::Red => Rgb(220, 20, 60),
            PaletteColor::Orange => Rgb(255, 140, 0),
            PaletteColor::Yellow => Rgb(255, 215, 0),
            PaletteColor::Green => Rgb(34, 139, 34),
            PaletteColor::Olive => Rgb(128, 128, 0),
            PaletteColor::Teal => Rgb(0, 128, 128),
            PaletteColor::Cyan => Rgb(0, 206, 209),
            PaletteColor::Lightblue => Rgb(173, 216, 230),
            PaletteColor::Blue => Rgb(30, 90, 220),
            PaletteColor::Navy => Rgb(0, 0, 128),
            PaletteColor::Purple => Rgb(128, 0, 128),
            PaletteColor::Pink => Rgb(255, 105, 180),
            PaletteColor::Brown => Rgb(139, 69, 19),
        }
    }

    pub fn from_name(name: &str) -> Option<PaletteColor> {
        let name = name.trim().to_ascii_lowercase();
        PaletteColor::ALL.into_iter().find(|c| c.name() == name)
    }
}

impl From<PaletteColor> for Rgb {
    fn from(c: PaletteColor) -> Rgb {
        c.rgb()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Canvas {
    pub width: u32,
    pub height: u32,
    pub background: Rgb,
}

impl Canvas {
    pub fn new(width: u32, height: u32, background: Rgb) -> Result<Canvas, SceneError> {
        if width < MIN_CANVAS || height < MIN_CANVAS {
            return Err(SceneError::CanvasTooSmall { width, height });
        }
        Ok(Canvas { width, height, background })
    }

    pub fn area(&self) -> f64 {
        f64::from(self.width) * f64::from(self.height)
    }

    pub fn bounds(&self) -> BBox {
        BBox::new(0.0, 0.0, f64::from(self.width), f64::from(self.height))
    }
}

impl Default for Canvas {
    fn default() -> Canvas {
        Canvas { width: DEFAULT_WIDTH, height: DEFAULT_HEIGHT, background: Rgb::WHITE }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextAnchor {
    #[default]
    Start,
    Middle,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimitiveKind {
    Line,
    Polyline,
    Rectangle,
    Circle,
    Arc,
    Wedge,
    Text,
    Polygon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Line { x1: f64, y1: f64, x2: f64, y2: f64 },
    Polyline { points: Vec<(f64, f64)> },
    Rectangle { x: f64, y: f64, width: f64, height: f64 },
    Circle { cx: f64, cy: f64, r: f64 },
    Arc { cx: f64, cy: f64, r: f64, start: f64, sweep: f64 },
    Wedge { cx: f64, cy: f64, r: f64, start: f64, sweep: f64 },
    Text { x: f64, y: f64, content: String, anchor: TextAnchor },
    Polygon { points: Vec<(f64, f64)> },
}

impl Shape {
    pub fn kind(&self) -> PrimitiveKind {
        match self {
            Shape::Line { .. } => PrimitiveKind::Line,
            Shape::Polyline { .. } => PrimitiveKind::Polyline,
            Shape::Rectangle { .. } => PrimitiveKind::Rectangle,
            Shape::Circle { .. } => PrimitiveKind::Circle,
            Shape::Arc { .. } => PrimitiveKind::Arc,
            Shape::Wedge { .. } => PrimitiveKind::Wedge,
            Shape::Text { .. } => PrimitiveKind::Text,
            Shape::Polygon { .. } => PrimitiveKind::Polygon,
        }
    }

    fn coordinates(&self) -> Vec<f64> {
        match self {
            Shape::Line { x1, y1, x2, y2 } => vec![*x1, *y1, *x2, *y2],
            Shape::Polyline { points } | Shape::Polygon { points } => points.iter().flat_map(|&(x, y)| [x, y]).collect(),
            Shape::Rectangle { x, y, width, height } => vec![*x, *y, *width, *height],
            Shape::Circle { cx, cy, r } => vec![*cx, *cy, *r],
            Shape::Arc { cx, cy, r, start, sweep } | Shape::Wedge { cx, cy, r, start, sweep } => {
                vec![*cx, *cy, *r, *start, *sweep]
            }
            Shape::Text { x, y, .. } => vec![*x, *y],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StyleSpec {
    pub stroke: Option<Rgb>,
    pub stroke_width: f64,
    pub fill: Option<Rgb>,
    pub font_size: Option<f64>,
    pub dash: Option<Vec<f64>>,
    /// Draw an arrowhead at the end of a line or polyline.
    #[serde(default)]
    pub arrow: bool,
}

impl StyleSpec {
    pub fn stroke(color: impl Into<Rgb>, width: f64) -> StyleSpec {
        StyleSpec { stroke: Some(color.into()), stroke_width: width, ..StyleSpec::default() }
    }

    pub fn fill(color: impl Into<Rgb>) -> StyleSpec {
        StyleSpec { fill: Some(color.into()), ..StyleSpec::default() }
    }

    pub fn filled_outline(fill: impl Into<Rgb>, stroke: impl Into<Rgb>, width: f64) -> StyleSpec {
        StyleSpec { stroke: Some(stroke.into()), stroke_width: width, fill: Some(fill.into()), ..StyleSpec::default() }
    }

    pub fn text(color: impl Into<Rgb>, font_size: f64) -> StyleSpec {
        StyleSpec { fill: Some(color.into()), font_size: Some(font_size), ..StyleSpec::default() }
    }

    pub fn dashed(mut self, pattern: &[f64]) -> StyleSpec {
        self.dash = Some(pattern.to_vec());
        self
    }

    pub fn with_arrow(mut self) -> StyleSpec {
        self.arrow = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    pub shape: Shape,
    pub style: StyleSpec,
    pub z: i32,
}

impl Primitive {
    pub fn new(shape: Shape, style: StyleSpec) -> Primitive {
        Primitive { shape, style, z: 0 }
    }

    pub fn at_z(mut self, z: i32) -> Primitive {
        self.z = z;
        self
    }

    pub fn line(x1: f64, y1: f64, x2: f64, y2: f64, style: StyleSpec) -> Primitive {
        Primitive::new(Shape::Line { x1, y1, x2, y2 }, style)
    }

    pub fn rect(x: f64, y: f64, width: f64, height: f64, style: StyleSpec) -> Primitive {
        Primitive::new(Shape::Rectangle { x, y, width, height }, style)
    }

    pub fn circle(cx: f64, cy: f64, r: f64, style: StyleSpec) -> Primitive {
        Primitive::new(Shape::Circle { cx, cy, r }, style)
    }

    pub fn text(x: f64, y: f64, content: impl Into<String>, anchor: TextAnchor, style: StyleSpec) -> Primitive {
        Primitive::new(Shape::Text { x, y, content: content.into(), anchor }, style)
    }

    pub fn polygon(points: Vec<(f64, f64)>, style: StyleSpec) -> Primitive {
        Primitive::new(Shape::Polygon { points }, style)
    }

    pub fn polyline(points: Vec<(f64, f64)>, style: StyleSpec) -> Primitive {
        Primitive::new(Shape::Polyline { points }, style)
    }

    pub fn kind(&self) -> PrimitiveKind {
        self.shape.kind()
    }

    pub fn font_size(&self) -> Option<f64> {
        match self.shape {
            Shape::Text { .. } => self.style.font_size,
            _ => None,
        }
    }

    /// Checks the per-primitive invariants, returning a description of the first violation.
    pub fn check(&self) -> Result<(), String> {
        if self.shape.coordinates().iter().any(|v| !v.is_finite()) {
            return Err("non-finite coordinate".into());
        }
        if !self.style.stroke_width.is_finite() || self.style.stroke_width < 0.0 {
            return Err("stroke width must be finite and non-negative".into());
        }
        match &self.shape {
            Shape::Text { content, .. } => {
                if content.is_empty() {
                    return Err("empty text".into());
                }
                match self.style.font_size {
                    Some(s) if s > 0.0 && s.is_finite() => {}
                    _ => return Err("text needs a positive font size".into()),
                }
                return Ok(());
            }
            Shape::Arc { r, sweep, .. } | Shape::Wedge { r, sweep, .. } => {
                if !(*sweep > 0.0 && *sweep <= 360.0) {
                    return Err(format!("sweep {sweep} outside (0, 360]"));
                }
                if *r < 0.0 {
                    return Err("negative radius".into());
                }
            }
            Shape::Circle { r, .. } if *r < 0.0 => return Err("negative radius".into()),
            Shape::Rectangle { width, height, .. } if *width < 0.0 || *height < 0.0 => {
                return Err("negative rectangle extent".into());
            }
            Shape::Polyline { points } if points.len() < 2 => {
                return Err("polyline needs at least 2 points".into());
            }
            Shape::Polygon { points } if points.len() < 3 => {
                return Err("polygon needs at least 3 points".into());
            }
            _ => {}
        }
        if self.style.stroke.is_none() && self.style.fill.is_none() {
            return Err("shape has neither stroke nor fill".into());
        }
        Ok(())
    }

    pub fn bounding_box(&self) -> BBox {
        bounding_box(self)
    }
}

/// Point on a circle at `angle` degrees clockwise from twelve o'clock.
pub fn polar(cx: f64, cy: f64, r: f64, angle: f64) -> (f64, f64) {
    let t = angle.to_radians();
    (cx + r * t.sin(), cy - r * t.cos())
}

/// Extent in canvas units of `content` at `font_size` under the glyph heuristic.
pub fn text_extent(content: &str, font_size: f64) -> (f64, f64) {
    let glyphs = content.chars().count() as f64;
    (TEXT_WIDTH_FACTOR * font_size * glyphs, TEXT_HEIGHT_FACTOR * font_size)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> BBox {
        BBox { x_min, y_min, x_max, y_max }
    }

    fn from_points(points: impl IntoIterator<Item = (f64, f64)>) -> BBox {
        let mut b = BBox::new(f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for (x, y) in points {
            b.x_min = b.x_min.min(x);
            b.y_min = b.y_min.min(y);
            b.x_max = b.x_max.max(x);
            b.y_max = b.y_max.max(y);
        }
        b
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    pub fn contains(&self, other: &BBox) -> bool {
        other.x_min >= self.x_min && other.y_min >= self.y_min && other.x_max <= self.x_max && other.y_max <= self.y_max
    }

    /// Intersection with positive area, if any.
    pub fn intersection(&self, other: &BBox) -> Option<BBox> {
        let b =
            BBox::new(self.x_min.max(other.x_min), self.y_min.max(other.y_min), self.x_max.min(other.x_max), self.y_max.min(other.y_max));
        (b.width() > 0.0 && b.height() > 0.0).then_some(b)
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox::new(self.x_min.min(other.x_min), self.y_min.min(other.y_min), self.x_max.max(other.x_max), self.y_max.max(other.y_max))
    }

    pub fn inflate(&self, by: f64) -> BBox {
        BBox::new(self.x_min - by, self.y_min - by, self.x_max + by, self.y_max + by)
    }
}

fn arc_points(cx: f64, cy: f64, r: f64, start: f64, sweep: f64) -> Vec<(f64, f64)> {
    if sweep >= 360.0 {
        return vec![(cx - r, cy - r), (cx + r, cy + r)];
    }
    let mut pts = vec![polar(cx, cy, r, start), polar(cx, cy, r, start + sweep)];
    // Cardinal extremes lying inside the swept interval.
    let first = (start / 90.0).ceil() as i64;
    let last = ((start + sweep) / 90.0).floor() as i64;
    for k in first..=last {
        pts.push(polar(cx, cy, r, k as f64 * 90.0));
    }
    pts
}

/// Axis-aligned box containing all geometry of `p`. Stroke width is not included.
pub fn bounding_box(p: &Primitive) -> BBox {
    match &p.shape {
        Shape::Line { x1, y1, x2, y2 } => BBox::from_points([(*x1, *y1), (*x2, *y2)]),
        Shape::Polyline { points } | Shape::Polygon { points } => BBox::from_points(points.iter().copied()),
        Shape::Rectangle { x, y, width, height } => BBox::new(*x, *y, x + width, y + height),
        Shape::Circle { cx, cy, r } => BBox::new(cx - r, cy - r, cx + r, cy + r),
        Shape::Arc { cx, cy, r, start, sweep } => BBox::from_points(arc_points(*cx, *cy, *r, *start, *sweep)),
        Shape::Wedge { cx, cy, r, start, sweep } => {
            let mut pts = arc_points(*cx, *cy, *r, *start, *sweep);
            pts.push((*cx, *cy));
            BBox::from_points(pts)
        }
        Shape::Text { x, y, content, anchor } => {
            let (w, h) = text_extent(content, p.style.font_size.unwrap_or(0.0));
            let x_min = match anchor {
                TextAnchor::Start => *x,
                TextAnchor::Middle => x - w / 2.0,
                TextAnchor::End => x - w,
            };
            BBox::new(x_min, *y, x_min + w, y + h)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneGraph {
    pub canvas: Canvas,
    pub primitives: Vec<Primitive>,
    pub labels: BTreeMap<String, Vec<usize>>,
}

impl SceneGraph {
    pub fn empty(canvas: Canvas) -> SceneGraph {
        SceneGraph { canvas, primitives: Vec::new(), labels: BTreeMap::new() }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let mut indices = Vec::new();
        let mut reasons = Vec::new();
        for (i, p) in self.primitives.iter().enumerate() {
            if let Err(why) = p.check() {
                indices.push(i);
                reasons.push(format!("#{i}: {why}"));
            }
        }
        for w in self.primitives.windows(2).enumerate() {
            let (i, pair) = w;
            if pair[0].z > pair[1].z {
                indices.push(i + 1);
                reasons.push(format!("#{}: out of z order", i + 1));
            }
        }
        for (role, idx) in &self.labels {
            for &i in idx {
                if i >= self.primitives.len() {
                    indices.push(i);
                    reasons.push(format!("role `{role}` references missing primitive {i}"));
                }
            }
        }
        if indices.is_empty() {
            Ok(())
        } else {
            indices.sort_unstable();
            indices.dedup();
            Err(SceneError::InvalidScene { indices, reasons: reasons.join("; ") })
        }
    }

    pub fn role(&self, role: &str) -> Result<&[usize], SceneError> {
        self.labels.get(role).map(Vec::as_slice).ok_or_else(|| SceneError::UnknownRole(role.to_string()))
    }

    pub fn role_primitives(&self, role: &str) -> impl Iterator<Item = &Primitive> {
        self.labels.get(role).into_iter().flatten().map(move |&i| &self.primitives[i])
    }

    /// Roles each primitive belongs to, in role-name order.
    fn roles_by_primitive(&self) -> Vec<Vec<&str>> {
        let mut out = vec![Vec::new(); self.primitives.len()];
        for (role, idx) in &self.labels {
            for &i in idx {
                if let Some(slot) = out.get_mut(i) {
                    slot.push(role.as_str());
                }
            }
        }
        out
    }
}

/// Accumulates primitives with role tags, then sorts them stably by z.
#[derive(Debug, Clone)]
pub struct SceneBuilder {
    canvas: Canvas,
    primitives: Vec<Primitive>,
    roles: Vec<(String, usize)>,
}

impl SceneBuilder {
    pub fn new(canvas: Canvas) -> SceneBuilder {
        SceneBuilder { canvas, primitives: Vec::new(), roles: Vec::new() }
    }

    pub fn canvas(&self) -> Canvas {
        self.canvas
    }

    pub fn push(&mut self, p: Primitive) -> usize {
        self.primitives.push(p);
        self.primitives.len() - 1
    }

    pub fn push_role(&mut self, role: &str, p: Primitive) -> usize {
        let i = self.push(p);
        self.tag(role, i);
        i
    }

    pub fn tag(&mut self, role: &str, index: usize) {
        self.roles.push((role.to_string(), index));
    }

    /// Registers a role even when no primitive carries it yet.
    pub fn declare_role(&mut self, role: &str) {
        self.roles.push((role.to_string(), usize::MAX));
    }

    pub fn finish(self) -> Result<SceneGraph, SceneError> {
        let mut order: Vec<usize> = (0..self.primitives.len()).collect();
        order.sort_by_key(|&i| self.primitives[i].z);
        let mut remap = vec![0usize; order.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = new;
        }
        let mut slots: Vec<Option<Primitive>> = self.primitives.into_iter().map(Some).collect();
        let primitives = order.iter().map(|&i| slots[i].take().expect("each index once")).collect();
        let mut labels: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (role, i) in self.roles {
            let entry = labels.entry(role).or_default();
            if i != usize::MAX {
                entry.push(remap[i]);
            }
        }
        for idx in labels.values_mut() {
            idx.sort_unstable();
            idx.dedup();
        }
        let scene = SceneGraph { canvas: self.canvas, primitives, labels };
        scene.validate()?;
        Ok(scene)
    }
}

fn num(v: f64) -> String {
    let r = (v * 100.0).round() / 100.0;
    let r = if r == 0.0 { 0.0 } else { r };
    let s = format!("{r:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

fn paint_attrs(style: &StyleSpec, closed: bool) -> String {
    let mut s = String::new();
    match (closed, style.fill) {
        (true, Some(c)) => write!(s, " fill=\"{}\"", c.hex()).unwrap(),
        _ => s.push_str(" fill=\"none\""),
    }
    if let Some(c) = style.stroke {
        write!(s, " stroke=\"{}\" stroke-width=\"{}\"", c.hex(), num(style.stroke_width)).unwrap();
    }
    if let Some(dash) = &style.dash {
        let d: Vec<String> = dash.iter().map(|v| num(*v)).collect();
        write!(s, " stroke-dasharray=\"{}\"", d.join(" ")).unwrap();
    }
    if style.arrow {
        s.push_str(" marker-end=\"url(#arrow)\"");
    }
    s
}

fn arc_path(cx: f64, cy: f64, r: f64, start: f64, sweep: f64, wedge: bool) -> String {
    let (x0, y0) = polar(cx, cy, r, start);
    let (x1, y1) = polar(cx, cy, r, start + sweep);
    let large = u8::from(sweep > 180.0);
    if wedge {
        format!("M {} {} L {} {} A {} {} 0 {} 1 {} {} Z", num(cx), num(cy), num(x0), num(y0), num(r), num(r), large, num(x1), num(y1))
    } else {
        format!("M {} {} A {} {} 0 {} 1 {} {}", num(x0), num(y0), num(r), num(r), large, num(x1), num(y1))
    }
}

fn points_attr(points: &[(f64, f64)]) -> String {
    points.iter().map(|&(x, y)| format!("{},{}", num(x), num(y))).collect::<Vec<_>>().join(" ")
}

/// Serializes the scene as a standalone SVG 1.1 document.
///
/// Output is a pure function of the scene: coordinates are printed with at
/// most two decimals and attributes in a fixed order.
pub fn render_svg(scene: &SceneGraph) -> Result<Vec<u8>, SceneError> {
    scene.validate()?;
    let c = &scene.canvas;
    let roles = scene.roles_by_primitive();
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">",
        w = c.width,
        h = c.height
    )
    .unwrap();
    if scene.primitives.iter().any(|p| p.style.arrow) {
        out.push_str(
            "<defs><marker id=\"arrow\" viewBox=\"0 0 10 10\" refX=\"10\" refY=\"5\" markerWidth=\"6\" markerHeight=\"6\" orient=\"auto-start-reverse\"><path d=\"M 0 0 L 10 5 L 0 10 z\" fill=\"#333333\"/></marker></defs>\n",
        );
    }
    writeln!(out, "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"{}\"/>", c.width, c.height, c.background.hex()).unwrap();
    for (i, p) in scene.primitives.iter().enumerate() {
        let class = if roles[i].is_empty() { String::new() } else { format!(" class=\"{}\"", escape(&roles[i].join(" "))) };
        let style = &p.style;
        match &p.shape {
            Shape::Line { x1, y1, x2, y2 } => writeln!(
                out,
                "<line{class} x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"{}/>",
                num(*x1),
                num(*y1),
                num(*x2),
                num(*y2),
                paint_attrs(style, false)
            ),
            Shape::Polyline { points } => writeln!(
                out,
                "<polyline{class} points=\"{}\"{}/>",
                points_attr(points),
                paint_attrs(style, false)
            ),
            Shape::Polygon { points } => writeln!(
                out,
                "<polygon{class} points=\"{}\"{}/>",
                points_attr(points),
                paint_attrs(style, true)
            ),
            Shape::Rectangle { x, y, width, height } => writeln!(
                out,
                "<rect{class} x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\"{}/>",
                num(*x),
                num(*y),
                num(*width),
                num(*height),
                paint_attrs(style, true)
            ),
            Shape::Circle { cx, cy, r } => writeln!(
                out,
                "<circle{class} cx=\"{}\" cy=\"{}\" r=\"{}\"{}/>",
                num(*cx),
                num(*cy),
                num(*r),
                paint_attrs(style, true)
            ),
            Shape::Arc { cx, cy, r, sweep, .. } | Shape::Wedge { cx, cy, r, sweep, .. } if *sweep >= 360.0 => {
                let closed = matches!(p.shape, Shape::Wedge { .. });
                writeln!(
                    out,
                    "<circle{class} cx=\"{}\" cy=\"{}\" r=\"{}\"{}/>",
                    num(*cx),
                    num(*cy),
                    num(*r),
                    paint_attrs(style, closed)
                )
            }
            Shape::Arc { cx, cy, r, start, sweep } => writeln!(
                out,
                "<path{class} d=\"{}\"{}/>",
                arc_path(*cx, *cy, *r, *start, *sweep, false),
                paint_attrs(style, false)
            ),
            Shape::Wedge { cx, cy, r, start, sweep } => writeln!(
                out,
                "<path{class} d=\"{}\"{}/>",
                arc_path(*cx, *cy, *r, *start, *sweep, true),
                paint_attrs(style, true)
            ),
            Shape::Text { x, y, content, anchor } => {
                let size = style.font_size.unwrap_or(12.0);
                let anchor = match anchor {
                    TextAnchor::Start => "start",
                    TextAnchor::Middle => "middle",
                    TextAnchor::End => "end",
                };
                let fill = style.fill.unwrap_or(Rgb::BLACK).hex();
                writeln!(
                    out,
                    "<text{class} x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"{}\" text-anchor=\"{anchor}\" fill=\"{fill}\">{}</text>",
                    num(*x),
                    num(y + 0.8 * size),
                    num(size),
                    escape(content)
                )
            }
        }
        .unwrap();
    }
    out.push_str("</svg>\n");
    Ok(out.into_bytes())
}

/// All pairs among primitives carrying any of `roles` whose boxes intersect
/// with positive area, as `(i, j, area)` with `i < j`, ordered by `(i, j)`.
pub fn overlap_pairs(scene: &SceneGraph, roles: &[&str]) -> Result<Vec<(usize, usize, f64)>, SceneError> {
    let mut selected = Vec::new();
    for role in roles {
        selected.extend_from_slice(scene.role(role)?);
    }
    selected.sort_unstable();
    selected.dedup();
    let boxes: Vec<BBox> = selected.iter().map(|&i| scene.primitives[i].bounding_box()).collect();
    let mut out = Vec::new();
    for a in 0..selected.len() {
        for b in a + 1..selected.len() {
            if let Some(inter) = boxes[a].intersection(&boxes[b]) {
                out.push((selected[a], selected[b], inter.area()));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rect(x: f64, y: f64, w: f64, h: f64) -> Primitive {
        Primitive::rect(x, y, w, h, StyleSpec::fill(PaletteColor::Red))
    }

    fn two_rect_scene(a: Primitive, b: Primitive) -> SceneGraph {
        let mut sb = SceneBuilder::new(Canvas::default());
        sb.push_role("box", a);
        sb.push_role("box", b);
        sb.finish().unwrap()
    }

    #[test]
    fn empty_scene_has_only_background() {
        let svg = String::from_utf8(render_svg(&SceneGraph::empty(Canvas::default())).unwrap()).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let rects: Vec<_> = doc.descendants().filter(|n| n.has_tag_name("rect")).collect();
        assert_eq!(rects.len(), 1);
        assert_eq!(rects[0].attribute("width"), Some("640"));
        assert_eq!(rects[0].attribute("fill"), Some("#ffffff"));
    }

    #[test]
    fn circle_round_trips_through_svg() {
        let mut sb = SceneBuilder::new(Canvas::default());
        sb.push(Primitive::circle(100.0, 100.0, 10.0, StyleSpec::stroke(PaletteColor::Black, 1.0)));
        let svg = String::from_utf8(render_svg(&sb.finish().unwrap()).unwrap()).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let c = doc.descendants().find(|n| n.has_tag_name("circle")).unwrap();
        assert_eq!(c.attribute("cx"), Some("100"));
        assert_eq!(c.attribute("cy"), Some("100"));
        assert_eq!(c.attribute("r"), Some("10"));
    }

    #[test]
    fn render_is_deterministic_and_in_z_order() {
        let mut sb = SceneBuilder::new(Canvas::default());
        sb.push(rect(0.0, 0.0, 5.0, 5.0).at_z(3));
        sb.push(Primitive::circle(50.0, 50.0, 4.0, StyleSpec::fill(PaletteColor::Blue)).at_z(-1));
        sb.push(Primitive::text(10.0, 10.0, "a<b", TextAnchor::Start, StyleSpec::text(Rgb::BLACK, 12.0)));
        let scene = sb.finish().unwrap();
        let a = render_svg(&scene).unwrap();
        assert_eq!(a, render_svg(&scene).unwrap());
        let svg = String::from_utf8(a).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let tags: Vec<_> = doc.root_element().children().filter(|n| n.is_element()).map(|n| n.tag_name().name()).collect();
        assert_eq!(tags, ["rect", "circle", "text", "rect"]);
        assert!(svg.contains("a&lt;b"));
    }

    #[test]
    fn invalid_primitives_are_listed() {
        let scene = SceneGraph {
            canvas: Canvas::default(),
            primitives: vec![
                rect(0.0, 0.0, 1.0, 1.0),
                Primitive::text(0.0, 0.0, "", TextAnchor::Start, StyleSpec::text(Rgb::BLACK, 10.0)),
                Primitive::new(Shape::Wedge { cx: 0.0, cy: 0.0, r: 5.0, start: 0.0, sweep: 0.0 }, StyleSpec::fill(Rgb::BLACK)),
                Primitive::circle(f64::NAN, 0.0, 1.0, StyleSpec::fill(Rgb::BLACK)),
            ],
            labels: BTreeMap::new(),
        };
        match render_svg(&scene) {
            Err(SceneError::InvalidScene { indices, .. }) => assert_eq!(indices, vec![1, 2, 3]),
            other => panic!("expected InvalidScene, got {other:?}"),
        }
    }

    #[test]
    fn bbox_examples() {
        let c = Primitive::circle(100.0, 100.0, 10.0, StyleSpec::fill(Rgb::BLACK));
        assert_eq!(c.bounding_box(), BBox::new(90.0, 90.0, 110.0, 110.0));
        let l = Primitive::line(0.0, 0.0, 10.0, 20.0, StyleSpec::stroke(Rgb::BLACK, 1.0));
        assert_eq!(l.bounding_box(), BBox::new(0.0, 0.0, 10.0, 20.0));
        // 0.6 * 10 * 2 glyphs wide, 1.0 * 10 tall.
        let t = Primitive::text(0.0, 0.0, "AB", TextAnchor::Start, StyleSpec::text(Rgb::BLACK, 10.0));
        let b = t.bounding_box();
        assert!((b.x_max - 12.0).abs() < 1e-12 && (b.y_max - 10.0).abs() < 1e-12);
        assert_eq!((b.x_min, b.y_min), (0.0, 0.0));
    }

    #[test]
    fn wedge_bbox_includes_center_and_extremes() {
        let w = Primitive::new(Shape::Wedge { cx: 0.0, cy: 0.0, r: 10.0, start: 45.0, sweep: 90.0 }, StyleSpec::fill(Rgb::BLACK));
        let b = w.bounding_box();
        assert!((b.x_max - 10.0).abs() < 1e-9);
        assert!(b.x_min.abs() < 1e-9);
    }

    #[test]
    fn overlap_examples() {
        let disjoint = two_rect_scene(rect(0.0, 0.0, 10.0, 10.0), rect(20.0, 20.0, 10.0, 10.0));
        assert!(overlap_pairs(&disjoint, &["box"]).unwrap().is_empty());
        let same = two_rect_scene(rect(0.0, 0.0, 10.0, 10.0), rect(0.0, 0.0, 10.0, 10.0));
        assert_eq!(overlap_pairs(&same, &["box"]).unwrap(), vec![(0, 1, 100.0)]);
        // [5,10] x [5,10] = 25
        let partial = two_rect_scene(rect(0.0, 0.0, 10.0, 10.0), rect(5.0, 5.0, 10.0, 10.0));
        assert_eq!(overlap_pairs(&partial, &["box"]).unwrap(), vec![(0, 1, 25.0)]);
        assert_eq!(overlap_pairs(&partial, &["nope"]), Err(SceneError::UnknownRole("nope".into())));
    }

    #[test]
    fn builder_remaps_labels_after_sort() {
        let mut sb = SceneBuilder::new(Canvas::default());
        sb.push_role("top", rect(0.0, 0.0, 1.0, 1.0).at_z(10));
        sb.push_role("bottom", rect(0.0, 0.0, 1.0, 1.0).at_z(0));
        sb.declare_role("unused");
        let s = sb.finish().unwrap();
        assert_eq!(s.role("top").unwrap(), &[1]);
        assert_eq!(s.role("bottom").unwrap(), &[0]);
        assert!(s.role("unused").unwrap().is_empty());
    }

    #[test]
    fn small_canvas_rejected() {
        assert!(Canvas::new(63, 100, Rgb::WHITE).is_err());
        assert!(Canvas::new(64, 64, Rgb::WHITE).is_ok());
    }

    fn arb_primitive() -> impl Strategy<Value = Primitive> {
        let coord = -500.0f64..500.0;
        prop_oneof![
            (coord.clone(), coord.clone(), coord.clone(), coord.clone()).prop_map(|(a, b, c, d)| Primitive::line(
                a,
                b,
                c,
                d,
                StyleSpec::stroke(Rgb::BLACK, 1.0)
            )),
            (coord.clone(), coord.clone(), 0.0f64..100.0, 0.0f64..100.0).prop_map(|(x, y, w, h)| rect(x, y, w, h)),
            (coord.clone(), coord.clone(), 0.0f64..100.0, -720.0f64..720.0, 0.01f64..=360.0).prop_map(|(cx, cy, r, start, sweep)| {
                Primitive::new(Shape::Wedge { cx, cy, r, start, sweep }, StyleSpec::fill(Rgb::BLACK))
            }),
            (coord.clone(), coord.clone(), 0.0f64..100.0, -720.0f64..720.0, 0.01f64..=360.0).prop_map(|(cx, cy, r, start, sweep)| {
                Primitive::new(Shape::Arc { cx, cy, r, start, sweep }, StyleSpec::stroke(Rgb::BLACK, 1.0))
            }),
            proptest::collection::vec((coord.clone(), coord), 3..8).prop_map(|pts| Primitive::polygon(pts, StyleSpec::fill(Rgb::BLACK))),
        ]
    }

    fn sample_geometry(p: &Primitive) -> Vec<(f64, f64)> {
        match &p.shape {
            Shape::Line { x1, y1, x2, y2 } => (0..=20)
                .map(|k| {
                    let t = k as f64 / 20.0;
                    (x1 + t * (x2 - x1), y1 + t * (y2 - y1))
                })
                .collect(),
            Shape::Rectangle { x, y, width, height } => vec![(*x, *y), (x + width, y + height)],
            Shape::Arc { cx, cy, r, start, sweep } | Shape::Wedge { cx, cy, r, start, sweep } => {
                (0..=200).map(|k| polar(*cx, *cy, *r, start + sweep * k as f64 / 200.0)).collect()
            }
            Shape::Polygon { points } | Shape::Polyline { points } => points.clone(),
            Shape::Circle { cx, cy, r } => (0..36).map(|k| polar(*cx, *cy, *r, k as f64 * 10.0)).collect(),
            Shape::Text { x, y, .. } => vec![(*x, *y)],
        }
    }

    /// Coordinates on the 0.1-unit sampling grid, so box edges fall between samples.
    fn tenths(lo: u32, hi: u32) -> impl Strategy<Value = f64> {
        (lo..hi).prop_map(|v| f64::from(v) / 10.0)
    }

    proptest! {
        #[test]
        fn bbox_contains_geometry(p in arb_primitive()) {
            let b = p.bounding_box().inflate(1e-9);
            for (x, y) in sample_geometry(&p) {
                prop_assert!(b.contains_point(x, y), "{:?} outside {:?}", (x, y), b);
            }
        }

        #[test]
        fn overlap_matches_pixel_grid(
            x0 in tenths(0, 600), y0 in tenths(0, 600), w0 in tenths(200, 600), h0 in tenths(200, 600),
            x1 in tenths(0, 600), y1 in tenths(0, 600), w1 in tenths(200, 600), h1 in tenths(200, 600),
        ) {
            let scene = two_rect_scene(rect(x0, y0, w0, h0), rect(x1, y1, w1, h1));
            let pairs = overlap_pairs(&scene, &["box"]).unwrap();
            // Brute-force estimate on a 0.1-unit grid of sample points.
            let step = 0.1;
            let mut hits = 0usize;
            let (lo_x, hi_x) = (x0.min(x1), (x0 + w0).max(x1 + w1));
            let (lo_y, hi_y) = (y0.min(y1), (y0 + h0).max(y1 + h1));
            let mut x = lo_x + step / 2.0;
            while x < hi_x {
                let mut y = lo_y + step / 2.0;
                while y < hi_y {
                    let in0 = x >= x0 && x < x0 + w0 && y >= y0 && y < y0 + h0;
                    let in1 = x >= x1 && x < x1 + w1 && y >= y1 && y < y1 + h1;
                    if in0 && in1 { hits += 1; }
                    y += step;
                }
                x += step;
            }
            let estimate = hits as f64 * step * step;
            let reported = pairs.first().map(|p| p.2).unwrap_or(0.0);
            prop_assert!((reported - estimate).abs() <= 0.02 * estimate + 1e-6, "{} vs {}", reported, estimate);
        }
    }
}
