//! Visual puzzles: next-panel pattern induction with four options, and
//! spot-the-difference image pairs.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::record::{AnswerKind, Draft, Query};
use crate::scene::{Canvas, PaletteColor, Primitive, Rgb, SceneBuilder, SceneGraph, StyleSpec, TextAnchor};
use crate::synth::{self, choice_letter, format_number, number_word, pick, GenError, LayoutParams, SeededRng};

pub const OPTION_COUNT: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Glyph {
    Arrow,
    Circle,
    Square,
    Triangle,
}

impl Glyph {
    pub const ALL: [Glyph; 4] = [Glyph::Arrow, Glyph::Circle, Glyph::Square, Glyph::Triangle];

    pub fn name(self) -> &'static str {
        match self {
            Glyph::Arrow => "arrow",
            Glyph::Circle => "circle",
            Glyph::Square => "square",
            Glyph::Triangle => "triangle",
        }
    }
}

const GLYPH_COLORS: [PaletteColor; 6] =
    [PaletteColor::Red, PaletteColor::Blue, PaletteColor::Green, PaletteColor::Orange, PaletteColor::Purple, PaletteColor::Teal];

/// One puzzle panel: `count` copies of a glyph, rotated clockwise by
/// `rotation` degrees and drawn at `size` (fraction of the panel).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub glyph: Glyph,
    pub count: u32,
    pub rotation: f64,
    pub size: f64,
    pub color: PaletteColor,
}

impl Panel {
    fn same(&self, other: &Panel) -> bool {
        self.differing_attributes(other).is_empty()
    }

    pub fn differing_attributes(&self, other: &Panel) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.glyph != other.glyph {
            out.push("glyph");
        }
        if self.count != other.count {
            out.push("count");
        }
        if (self.rotation - other.rotation).rem_euclid(360.0).min((other.rotation - self.rotation).rem_euclid(360.0)) > 1e-9 {
            out.push("rotation");
        }
        if (self.size - other.size).abs() > 1e-9 {
            out.push("size");
        }
        if self.color != other.color {
            out.push("color");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Transform {
    Rotate { degrees: f64 },
    Count { step: u32 },
    Scale { factor: f64 },
    ColorCycle { colors: Vec<PaletteColor> },
}

impl Transform {
    pub fn apply(&self, p: &Panel) -> Panel {
        let mut next = p.clone();
        match self {
            Transform::Rotate { degrees } => next.rotation = (p.rotation + degrees).rem_euclid(360.0),
            Transform::Count { step } => next.count = p.count + step,
            Transform::Scale { factor } => next.size = p.size * factor,
            Transform::ColorCycle { colors } => {
                let k = colors.iter().position(|c| *c == p.color).unwrap_or(0);
                next.color = colors[(k + 1) % colors.len()];
            }
        }
        next
    }

    fn describe(&self) -> String {
        match self {
            Transform::Rotate { degrees } => format!("rotates the arrow {} degrees clockwise", format_number(*degrees)),
            Transform::Count { step } => format!("adds {} more shape{}", number_word(*step as usize), if *step == 1 { "" } else { "s" }),
            Transform::Scale { factor } if *factor > 1.0 => format!("enlarges the shape by a factor of {}", format_number(*factor)),
            Transform::Scale { factor } => format!("shrinks the shape by a factor of {}", format_number(*factor)),
            Transform::ColorCycle { colors } => {
                format!("cycles the color through {}", colors.iter().map(|c| c.name()).collect::<Vec<_>>().join(", "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternRule {
    pub base_shape: Glyph,
    pub transform_per_step: Transform,
    pub first: Panel,
    pub steps_shown: usize,
    pub options: Vec<Panel>,
    pub correct: usize,
}

impl PatternRule {
    pub fn shown(&self) -> Vec<Panel> {
        let mut out = vec![self.first.clone()];
        while out.len() < self.steps_shown {
            let next = self.transform_per_step.apply(out.last().unwrap());
            out.push(next);
        }
        out
    }

    pub fn check(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::InvalidSpec(m.to_string()));
        if !(3..=4).contains(&self.steps_shown) {
            return bad("steps_shown must be 3 or 4");
        }
        if self.options.len() != OPTION_COUNT || self.correct >= OPTION_COUNT {
            return bad("need four options with a valid correct index");
        }
        let expected = self.transform_per_step.apply(self.shown().last().unwrap());
        if !self.options[self.correct].same(&expected) {
            return bad("correct option does not follow the rule");
        }
        for (i, o) in self.options.iter().enumerate() {
            if i != self.correct && o.differing_attributes(&expected).len() != 1 {
                return bad("distractor must differ in exactly one attribute");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffKind {
    ColorSwap,
    ShapeSwap,
    CountChange,
    PositionShift,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    /// (row, col) in the panel grid.
    pub cell: (u32, u32),
    pub glyph: Glyph,
    pub color: PaletteColor,
    pub count: u32,
    /// Horizontal shift as a fraction of the cell width.
    pub shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Difference {
    pub kind: DiffKind,
    pub cell: (u32, u32),
    pub descriptor: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffPairSpec {
    pub grid: (u32, u32),
    pub base_panel: Vec<Item>,
    pub variant_panel: Vec<Item>,
    pub diff_manifest: Vec<Difference>,
}

impl DiffPairSpec {
    pub fn check(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::InvalidSpec(m.to_string()));
        let d = self.diff_manifest.len();
        if !(1..=3).contains(&d) {
            return bad("between one and three differences");
        }
        let cells: BTreeSet<(u32, u32)> = self.diff_manifest.iter().map(|x| x.cell).collect();
        if cells.len() != d {
            return bad("differences must sit in distinct cells");
        }
        if self.base_panel.len() != self.variant_panel.len() {
            return bad("panels must hold the same items");
        }
        let changed: BTreeSet<(u32, u32)> =
            self.base_panel.iter().zip(&self.variant_panel).filter(|(a, b)| a != b).map(|(a, _)| a.cell).collect();
        if changed != cells {
            return bad("manifest does not match the changed items");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PuzzleKind {
    Induction,
    Comparison,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PuzzleSpec {
    Induction(PatternRule),
    Comparison(DiffPairSpec),
}

impl PuzzleSpec {
    pub fn check(&self) -> Result<(), GenError> {
        match self {
            PuzzleSpec::Induction(r) => r.check(),
            PuzzleSpec::Comparison(c) => c.check(),
        }
    }

    pub fn subtype(&self) -> &'static str {
        match self {
            PuzzleSpec::Induction(_) => "induction",
            PuzzleSpec::Comparison(_) => "comparison",
        }
    }
}

fn other_color(rng: &mut SeededRng, not: PaletteColor) -> PaletteColor {
    let pool: Vec<PaletteColor> = GLYPH_COLORS.iter().copied().filter(|c| *c != not).collect();
    *pick(rng, &pool)
}

fn other_glyph(rng: &mut SeededRng, not: Glyph, allow_arrow: bool) -> Glyph {
    let pool: Vec<Glyph> = Glyph::ALL.iter().copied().filter(|g| *g != not && (allow_arrow || *g != Glyph::Arrow)).collect();
    *pick(rng, &pool)
}

fn sample_rule(rng: &mut SeededRng) -> PatternRule {
    let steps_shown = rng.gen_range(3..=4);
    let color = *pick(rng, &GLYPH_COLORS);
    let (base_shape, transform, first) = match rng.gen_range(0..4) {
        0 => {
            let degrees = *pick(rng, &[45.0, 90.0]);
            let k = rng.gen_range(0..(360.0 / degrees) as u32);
            (
                Glyph::Arrow,
                Transform::Rotate { degrees },
                Panel { glyph: Glyph::Arrow, count: 1, rotation: degrees * f64::from(k), size: 0.6, color },
            )
        }
        1 => {
            let g = *pick(rng, &[Glyph::Circle, Glyph::Square, Glyph::Triangle]);
            let step = rng.gen_range(1..=2);
            (g, Transform::Count { step }, Panel { glyph: g, count: rng.gen_range(1..=2), rotation: 0.0, size: 0.2, color })
        }
        2 => {
            let g = *pick(rng, &[Glyph::Circle, Glyph::Square, Glyph::Triangle]);
            let grow = rng.gen_bool(0.5);
            let (factor, size) = if grow { (1.25, 0.35) } else { (0.8, 0.85) };
            (g, Transform::Scale { factor }, Panel { glyph: g, count: 1, rotation: 0.0, size, color })
        }
        _ => {
            let g = *pick(rng, &[Glyph::Circle, Glyph::Square, Glyph::Triangle]);
            let mut colors = GLYPH_COLORS.to_vec();
            colors.shuffle(rng);
            colors.truncate(3);
            (g, Transform::ColorCycle { colors: colors.clone() }, Panel { glyph: g, count: 1, rotation: 0.0, size: 0.55, color: colors[0] })
        }
    };
    let mut rule = PatternRule { base_shape, transform_per_step: transform, first, steps_shown, options: vec![], correct: 0 };
    let answer = rule.transform_per_step.apply(rule.shown().last().unwrap());

    // One-attribute mutations, the rule's own attribute first.
    let mut candidates: Vec<Panel> = Vec::new();
    let mutate = |f: &dyn Fn(&mut Panel)| {
        let mut p = answer.clone();
        f(&mut p);
        p
    };
    match &rule.transform_per_step {
        Transform::Rotate { degrees } => {
            candidates.push(mutate(&|p| p.rotation = (p.rotation - degrees).rem_euclid(360.0)));
            candidates.push(mutate(&|p| p.rotation = (p.rotation + 180.0).rem_euclid(360.0)));
        }
        Transform::Count { step } => {
            candidates.push(mutate(&|p| p.count -= step));
            candidates.push(mutate(&|p| p.count += 1));
        }
        Transform::Scale { factor } => {
            candidates.push(mutate(&|p| p.size /= factor));
            candidates.push(mutate(&|p| p.size *= factor));
        }
        Transform::ColorCycle { colors } => {
            for c in colors {
                candidates.push(mutate(&|p| p.color = *c));
            }
        }
    }
    let c = other_color(rng, answer.color);
    candidates.push(mutate(&|p| p.color = c));
    let g = other_glyph(rng, answer.glyph, false);
    candidates.push(mutate(&|p| p.glyph = g));
    let mut options = vec![answer.clone()];
    for cand in candidates {
        if options.len() == OPTION_COUNT {
            break;
        }
        if cand.differing_attributes(&answer).len() == 1 && !options.iter().any(|o| o.same(&cand)) {
            options.push(cand);
        }
    }
    options.shuffle(rng);
    rule.correct = options.iter().position(|o| o.same(&answer)).unwrap();
    rule.options = options;
    rule
}

const POSITIONS: [[&str; 3]; 3] =
    [["top left", "top center", "top right"], ["middle left", "center", "middle right"], ["bottom left", "bottom center", "bottom right"]];

fn plural(glyph: Glyph, n: u32) -> String {
    if n == 1 {
        glyph.name().to_string()
    } else {
        format!("{}s", glyph.name())
    }
}

fn sample_diff(rng: &mut SeededRng) -> DiffPairSpec {
    let grid = (3, 3);
    let mut cells: Vec<(u32, u32)> = (0..3).flat_map(|r| (0..3).map(move |c| (r, c))).collect();
    cells.shuffle(rng);
    cells.truncate(rng.gen_range(5..=7));
    cells.sort_unstable();
    let base: Vec<Item> = cells
        .iter()
        .map(|&cell| Item {
            cell,
            glyph: *pick(rng, &[Glyph::Circle, Glyph::Square, Glyph::Triangle]),
            color: *pick(rng, &GLYPH_COLORS),
            count: rng.gen_range(1..=3),
            shift: 0.0,
        })
        .collect();
    let d = rng.gen_range(1..=3);
    let mut order: Vec<usize> = (0..base.len()).collect();
    order.shuffle(rng);
    let mut variant = base.clone();
    let mut manifest = Vec::new();
    for &i in &order[..d] {
        let b = &base[i];
        let v = &mut variant[i];
        let pos = POSITIONS[b.cell.0 as usize][b.cell.1 as usize];
        let kind = *pick(rng, &[DiffKind::ColorSwap, DiffKind::ShapeSwap, DiffKind::CountChange, DiffKind::PositionShift]);
        let what = format!("{} {}", b.color.name(), plural(b.glyph, b.count));
        let descriptor = match kind {
            DiffKind::ColorSwap => {
                v.color = other_color(rng, b.color);
                format!("the {what} in the {pos} turned {}", v.color.name())
            }
            DiffKind::ShapeSwap => {
                v.glyph = other_glyph(rng, b.glyph, false);
                format!("the {what} in the {pos} became {}", plural(v.glyph, v.count))
            }
            DiffKind::CountChange => {
                v.count = if b.count == 1 || (b.count < 4 && rng.gen_bool(0.5)) { b.count + 1 } else { b.count - 1 };
                format!("the number of {} {} in the {pos} changed from {} to {}", b.color.name(), plural(b.glyph, 2), b.count, v.count)
            }
            DiffKind::PositionShift => {
                v.shift = if rng.gen_bool(0.5) { 0.22 } else { -0.22 };
                format!("the {what} in the {pos} moved {}", if v.shift > 0.0 { "right" } else { "left" })
            }
        };
        manifest.push(Difference { kind, cell: b.cell, descriptor });
    }
    manifest.sort_by_key(|m| m.cell);
    DiffPairSpec { grid, base_panel: base, variant_panel: variant, diff_manifest: manifest }
}

pub fn sample_puzzle(seed: u64, kind: Option<PuzzleKind>) -> PuzzleSpec {
    let mut rng = synth::rng(seed, "puzzle");
    let kind = kind.unwrap_or_else(|| *pick(&mut rng, &[PuzzleKind::Induction, PuzzleKind::Comparison]));
    match kind {
        PuzzleKind::Induction => PuzzleSpec::Induction(sample_rule(&mut rng)),
        PuzzleKind::Comparison => PuzzleSpec::Comparison(sample_diff(&mut rng)),
    }
}

const INK: Rgb = Rgb(40, 40, 40);

/// Glyph outline centred at (cx, cy) with half-extent `r`.
fn glyph_primitive(glyph: Glyph, cx: f64, cy: f64, r: f64, rotation: f64, color: PaletteColor) -> Primitive {
    let style = StyleSpec::filled_outline(color, INK, 1.0);
    let rot = |pts: &[(f64, f64)]| -> Vec<(f64, f64)> {
        let (s, c) = rotation.to_radians().sin_cos();
        pts.iter().map(|(x, y)| (cx + r * (x * c - y * s), cy + r * (x * s + y * c))).collect()
    };
    match glyph {
        Glyph::Circle => Primitive::circle(cx, cy, r, style),
        Glyph::Square => Primitive::polygon(rot(&[(-0.8, -0.8), (0.8, -0.8), (0.8, 0.8), (-0.8, 0.8)]), style),
        Glyph::Triangle => Primitive::polygon(rot(&[(0.0, -1.0), (0.87, 0.5), (-0.87, 0.5)]), style),
        // Points up at rotation 0.
        Glyph::Arrow => Primitive::polygon(
            rot(&[(0.0, -1.0), (0.6, -0.3), (0.25, -0.3), (0.25, 1.0), (-0.25, 1.0), (-0.25, -0.3), (-0.6, -0.3)]),
            style,
        ),
    }
}

struct Group {
    glyph: Glyph,
    count: u32,
    color: PaletteColor,
    rotation: f64,
    radius: f64,
}

/// Copies of a glyph arranged in a near-square grid inside the square box at
/// `(x, y)` with side `w`.
fn draw_group(sb: &mut SceneBuilder, tag: &str, g: &Group, x: f64, y: f64, w: f64) {
    let Group { glyph, count, color, rotation, radius: r } = *g;
    let cols = (f64::from(count)).sqrt().ceil() as u32;
    let rows = count.div_ceil(cols);
    let pitch = w / f64::from(cols.max(rows));
    for k in 0..count {
        let (row, col) = (k / cols, k % cols);
        let in_row = if row == rows - 1 { count - row * cols } else { cols };
        let cx = x + w / 2.0 + (f64::from(col) - f64::from(in_row - 1) / 2.0) * pitch;
        let cy = y + w / 2.0 + (f64::from(row) - f64::from(rows - 1) / 2.0) * pitch;
        let i = sb.push_role("glyph", glyph_primitive(glyph, cx, cy, r.min(pitch * 0.4), rotation, color).at_z(2));
        sb.tag(tag, i);
    }
}

fn panel_group(p: &Panel, w: f64) -> Group {
    Group { glyph: p.glyph, count: p.count, color: p.color, rotation: p.rotation, radius: p.size * w / 2.0 }
}

fn build_induction_scene(rule: &PatternRule, font: f64) -> Result<SceneGraph, GenError> {
    let mut sb = SceneBuilder::new(Canvas { width: 800, height: 480, background: Rgb::WHITE });
    let shown = rule.shown();
    let w = 130.0;
    let gap = 20.0;
    let n_top = shown.len() + 1;
    let x0 = (800.0 - (n_top as f64 * w + (n_top - 1) as f64 * gap)) / 2.0;
    let frame = StyleSpec::filled_outline(Rgb(248, 248, 248), INK, 1.5);
    for (k, p) in shown.iter().enumerate() {
        let x = x0 + k as f64 * (w + gap);
        sb.push_role("panel", Primitive::rect(x, 40.0, w, w, frame.clone()));
        draw_group(&mut sb, &format!("panel:{k}"), &panel_group(p, w), x, 40.0, w);
    }
    let qx = x0 + shown.len() as f64 * (w + gap);
    sb.push_role("panel", Primitive::rect(qx, 40.0, w, w, frame.clone().dashed(&[6.0, 4.0])));
    sb.push_role(
        "question_mark",
        Primitive::text(qx + w / 2.0, 40.0 + w / 2.0 - font * 1.5, "?", TextAnchor::Middle, StyleSpec::text(INK, font * 3.0)),
    );
    let ox0 = (800.0 - (OPTION_COUNT as f64 * w + (OPTION_COUNT - 1) as f64 * gap)) / 2.0;
    let oy = 40.0 + w + 60.0;
    for (k, p) in rule.options.iter().enumerate() {
        let x = ox0 + k as f64 * (w + gap);
        sb.push_role("option", Primitive::rect(x, oy, w, w, frame.clone()));
        draw_group(&mut sb, &format!("option:{k}"), &panel_group(p, w), x, oy, w);
        sb.push_role(
            "option_label",
            Primitive::text(x + w / 2.0, oy + w + 8.0, choice_letter(k).to_string(), TextAnchor::Middle, StyleSpec::text(INK, font * 1.2)),
        );
    }
    Ok(sb.finish()?)
}

pub const DIFF_CELL: f64 = 110.0;

fn build_diff_scene(spec: &DiffPairSpec, font: f64) -> Result<SceneGraph, GenError> {
    let (rows, cols) = (f64::from(spec.grid.0), f64::from(spec.grid.1));
    let panel_w = cols * DIFF_CELL;
    let gap = 60.0;
    let width = (2.0 * panel_w + gap + 80.0) as u32;
    let height = (rows * DIFF_CELL + 120.0) as u32;
    let mut sb = SceneBuilder::new(Canvas { width, height, background: Rgb::WHITE });
    for (side, (items, x0)) in [(&spec.base_panel, 40.0), (&spec.variant_panel, 40.0 + panel_w + gap)].into_iter().enumerate() {
        let name = if side == 0 { "Image 1" } else { "Image 2" };
        sb.push_role("title", Primitive::text(x0 + panel_w / 2.0, 20.0, name, TextAnchor::Middle, StyleSpec::text(INK, font * 1.2)));
        let y0 = 60.0;
        sb.push_role("panel", Primitive::rect(x0, y0, panel_w, rows * DIFF_CELL, StyleSpec::filled_outline(Rgb(250, 250, 250), INK, 1.5)));
        for it in items {
            let x = x0 + f64::from(it.cell.1) * DIFF_CELL + it.shift * DIFF_CELL;
            let y = y0 + f64::from(it.cell.0) * DIFF_CELL;
            let tag = format!("{}:{}:{}", if side == 0 { "left" } else { "right" }, it.cell.0, it.cell.1);
            let g = Group { glyph: it.glyph, count: it.count, color: it.color, rotation: 0.0, radius: 20.0 };
            draw_group(&mut sb, &tag, &g, x + 15.0, y + 15.0, DIFF_CELL - 30.0);
        }
    }
    Ok(sb.finish()?)
}

pub fn build_puzzle_scene(spec: &PuzzleSpec, layout: &LayoutParams) -> Result<SceneGraph, GenError> {
    spec.check()?;
    match spec {
        PuzzleSpec::Induction(r) => build_induction_scene(r, layout.font_size),
        PuzzleSpec::Comparison(c) => build_diff_scene(c, layout.font_size),
    }
}

/// Cells whose rendered primitives differ between the two panels, found by
/// comparing glyph geometry after removing the panel offset.
pub fn diff_rendered_cells(scene: &SceneGraph, spec: &DiffPairSpec) -> Vec<(u32, u32)> {
    let offset = f64::from(spec.grid.1) * DIFF_CELL + 60.0;
    let cell = |side: &str, r: u32, c: u32| -> Vec<&Primitive> {
        scene.labels.get(&format!("{side}:{r}:{c}")).map(|ix| ix.iter().map(|&i| &scene.primitives[i]).collect()).unwrap_or_default()
    };
    let same = |a: &Primitive, b: &Primitive| {
        let (ba, bb) = (a.bounding_box(), b.bounding_box());
        a.kind() == b.kind()
            && a.style == b.style
            && (ba.x_min + offset - bb.x_min).abs() < 1e-6
            && (ba.x_max + offset - bb.x_max).abs() < 1e-6
            && (ba.y_min - bb.y_min).abs() < 1e-6
            && (ba.y_max - bb.y_max).abs() < 1e-6
    };
    let mut out = Vec::new();
    for r in 0..spec.grid.0 {
        for c in 0..spec.grid.1 {
            let (left, right) = (cell("left", r, c), cell("right", r, c));
            if left.len() != right.len() || left.iter().zip(&right).any(|(a, b)| !same(a, b)) {
                out.push((r, c));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "ask", rename_all = "snake_case")]
pub enum PuzzleQuery {
    NextPanel,
    DiffCount,
    DiffDescribe,
}

fn panel_words(p: &Panel) -> String {
    let mut s = format!("{} {} {}", number_word(p.count as usize), p.color.name(), plural(p.glyph, p.count));
    if p.glyph == Glyph::Arrow {
        s.push_str(&format!(" at {} degrees", format_number(p.rotation)));
    }
    s
}

pub fn puzzle_questions(spec: &PuzzleSpec) -> Vec<Draft> {
    match spec {
        PuzzleSpec::Induction(rule) => {
            let shown = rule.shown();
            let letter = choice_letter(rule.correct).to_string();
            let answer = &rule.options[rule.correct];
            vec![Draft::new(
                format!(
                    "The first {} panels follow a pattern. Which option (A, B, C, or D) should fill the empty panel?",
                    number_word(shown.len())
                ),
                letter.clone(),
                AnswerKind::Choice,
                "induction",
                Query::Puzzle(PuzzleQuery::NextPanel),
            )
            .with_rationale(format!(
                "Each step {}: {}. The next panel should show {}, which is option {letter}.",
                rule.transform_per_step.describe(),
                shown.iter().map(panel_words).collect::<Vec<_>>().join(", then "),
                panel_words(answer)
            ))]
        }
        PuzzleSpec::Comparison(c) => {
            let descriptors: Vec<String> = c.diff_manifest.iter().map(|d| d.descriptor.clone()).collect();
            vec![
                Draft::new(
                    "How many differences are there between Image 1 and Image 2?",
                    descriptors.len().to_string(),
                    AnswerKind::Numeric,
                    "comparison",
                    Query::Puzzle(PuzzleQuery::DiffCount),
                ),
                Draft::new(
                    "Describe one difference between Image 1 and Image 2.",
                    descriptors[0].clone(),
                    AnswerKind::Phrase,
                    "comparison",
                    Query::Puzzle(PuzzleQuery::DiffDescribe),
                )
                .with_alternates(descriptors.iter().skip(1).cloned()),
            ]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule_with(transform: Transform, first: Panel) -> PatternRule {
        PatternRule { base_shape: first.glyph, transform_per_step: transform, first, steps_shown: 3, options: vec![], correct: 0 }
    }

    #[test]
    fn rotation_rule_application() {
        let r = rule_with(
            Transform::Rotate { degrees: 90.0 },
            Panel { glyph: Glyph::Arrow, count: 1, rotation: 0.0, size: 0.6, color: PaletteColor::Red },
        );
        let shown: Vec<f64> = r.shown().iter().map(|p| p.rotation).collect();
        assert_eq!(shown, vec![0.0, 90.0, 180.0]);
        assert_eq!(r.transform_per_step.apply(r.shown().last().unwrap()).rotation, 270.0);
    }

    #[test]
    fn count_rule_application() {
        let r = rule_with(
            Transform::Count { step: 1 },
            Panel { glyph: Glyph::Circle, count: 2, rotation: 0.0, size: 0.2, color: PaletteColor::Blue },
        );
        let shown: Vec<u32> = r.shown().iter().map(|p| p.count).collect();
        assert_eq!(shown, vec![2, 3, 4]);
        assert_eq!(r.transform_per_step.apply(r.shown().last().unwrap()).count, 5);
    }

    #[test]
    fn sampled_rules_have_one_correct_option() {
        for seed in 0..300 {
            if let PuzzleSpec::Induction(r) = sample_puzzle(seed, Some(PuzzleKind::Induction)) {
                r.check().unwrap();
                let expected = r.transform_per_step.apply(r.shown().last().unwrap());
                let matching = r.options.iter().filter(|o| o.same(&expected)).count();
                assert_eq!(matching, 1);
                let q = &puzzle_questions(&PuzzleSpec::Induction(r.clone()))[0];
                assert_eq!(q.answer, choice_letter(r.correct).to_string());
            }
        }
    }

    #[test]
    fn correct_index_two_is_c() {
        let mut r = match sample_puzzle(5, Some(PuzzleKind::Induction)) {
            PuzzleSpec::Induction(r) => r,
            _ => unreachable!(),
        };
        let answer = r.options[r.correct].clone();
        r.options.swap(r.correct, 2);
        r.correct = 2;
        assert_eq!(r.options[2], answer);
        assert_eq!(puzzle_questions(&PuzzleSpec::Induction(r))[0].answer, "C");
    }

    #[test]
    fn comparison_manifest_matches_rendered_diff() {
        for seed in 0..200 {
            let spec = sample_puzzle(seed, Some(PuzzleKind::Comparison));
            let PuzzleSpec::Comparison(c) = &spec else { unreachable!() };
            c.check().unwrap();
            let scene = build_puzzle_scene(&spec, &LayoutParams::default()).unwrap();
            let cells: Vec<(u32, u32)> = c.diff_manifest.iter().map(|d| d.cell).collect();
            assert_eq!(diff_rendered_cells(&scene, c), cells, "seed {seed}");
            let qs = puzzle_questions(&spec);
            assert_eq!(qs[0].answer, c.diff_manifest.len().to_string());
            let all: Vec<&str> = std::iter::once(qs[1].answer.as_str()).chain(qs[1].alternates.iter().map(String::as_str)).collect();
            assert_eq!(all, c.diff_manifest.iter().map(|d| d.descriptor.as_str()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn all_difference_counts_occur() {
        let mut seen = BTreeSet::new();
        for seed in 0..100 {
            if let PuzzleSpec::Comparison(c) = sample_puzzle(seed, Some(PuzzleKind::Comparison)) {
                seen.insert(c.diff_manifest.len());
            }
        }
        assert_eq!(seen, [1, 2, 3].into());
    }

    #[test]
    fn induction_scene_has_four_options() {
        let spec = sample_puzzle(3, Some(PuzzleKind::Induction));
        let scene = build_puzzle_scene(&spec, &LayoutParams::default()).unwrap();
        assert_eq!(scene.role("option").unwrap().len(), 4);
        assert_eq!(scene.role("option_label").unwrap().len(), 4);
    }
}
