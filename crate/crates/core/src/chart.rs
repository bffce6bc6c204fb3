//! Line, bar, pie, table and composite charts with their five question types.
//!
//! Value-to-pixel mapping for bar and line charts: a value `v` is drawn at
//! height `v / axis_max * plot_height`, where `axis_max` is
//! [`value_axis_max`] of the largest value in the chart and `plot_height` is
//! the length of the vertical axis line.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::keywords::{KeywordLibrary, Topic, UnitClass};
use crate::record::{AnswerKind, Draft, Query};
use crate::scene::{polar, text_extent, Canvas, PaletteColor, Primitive, Rgb, SceneBuilder, SceneGraph, Shape, StyleSpec, TextAnchor};
use crate::synth::{self, format_number, ordinal, pick, pick_distinct, GenError, LayoutParams, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartKind {
    Line,
    Bar,
    Pie,
    Table,
    Composite,
}

impl ChartKind {
    pub const ALL: [ChartKind; 5] = [ChartKind::Line, ChartKind::Bar, ChartKind::Pie, ChartKind::Table, ChartKind::Composite];

    pub fn tag(self) -> &'static str {
        match self {
            ChartKind::Line => "line",
            ChartKind::Bar => "bar",
            ChartKind::Pie => "pie",
            ChartKind::Table => "table",
            ChartKind::Composite => "composite",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ChartKind::Line => "line chart",
            ChartKind::Bar => "bar chart",
            ChartKind::Pie => "pie chart",
            ChartKind::Table => "table",
            ChartKind::Composite => "composite chart",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LegendPosition {
    Top,
    Right,
    Bottom,
}

impl LegendPosition {
    pub fn name(self) -> &'static str {
        match self {
            LegendPosition::Top => "top",
            LegendPosition::Right => "right",
            LegendPosition::Bottom => "bottom",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub values: Vec<f64>,
}

/// Simulated data plus plotting parameters for one chart image.
///
/// `categories` are shared by every series: x-axis ticks for bar and line
/// charts, segments for a pie, data columns for a table (whose rows are the
/// series).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartSpec {
    pub kind: ChartKind,
    pub topic: String,
    pub unit: String,
    pub categories: Vec<String>,
    pub series: Vec<Series>,
    /// (category axis, value axis)
    pub axis_labels: (String, String),
    pub legend_position: LegendPosition,
    pub palette_assignment: BTreeMap<String, PaletteColor>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub subcharts: Vec<ChartSpec>,
}

impl ChartSpec {
    pub fn check(&self) -> Result<(), GenError> {
        let bad = |m: String| Err(GenError::InvalidSpec(m));
        if self.topic.trim().is_empty() {
            return bad("empty topic".into());
        }
        if self.kind == ChartKind::Composite {
            if !(2..=4).contains(&self.subcharts.len()) {
                return bad(format!("composite needs 2-4 subcharts, has {}", self.subcharts.len()));
            }
            for sub in &self.subcharts {
                if sub.kind == ChartKind::Composite {
                    return bad("nested composite".into());
                }
                sub.check()?;
            }
            return Ok(());
        }
        if !self.subcharts.is_empty() {
            return bad("only composite charts have subcharts".into());
        }
        if self.series.is_empty() {
            return bad("no series".into());
        }
        for s in &self.series {
            if s.values.len() != self.categories.len() {
                return bad(format!("series `{}` has {} values for {} categories", s.label, s.values.len(), self.categories.len()));
            }
            if s.values.iter().any(|v| !v.is_finite()) {
                return bad("non-finite value".into());
            }
        }
        match self.kind {
            ChartKind::Pie => {
                if self.series.len() != 1 || self.categories.len() < 2 {
                    return bad("pie needs one series of at least two categories".into());
                }
                let vals = &self.series[0].values;
                if vals.iter().any(|&v| v <= 0.0) {
                    return bad("pie values must be positive".into());
                }
                let sum: f64 = vals.iter().sum();
                if (sum - 100.0).abs() > 0.01 {
                    return bad(format!("pie percentages sum to {sum}"));
                }
                for c in &self.categories {
                    if !self.palette_assignment.contains_key(c) {
                        return bad(format!("no colour for segment `{c}`"));
                    }
                }
            }
            ChartKind::Line | ChartKind::Bar => {
                if self.categories.len() < 3 {
                    return bad("bar and line charts need at least 3 categories".into());
                }
                for s in &self.series {
                    if !self.palette_assignment.contains_key(&s.label) {
                        return bad(format!("no colour for series `{}`", s.label));
                    }
                    if s.values.iter().any(|&v| v < 0.0) {
                        return bad("negative value".into());
                    }
                }
            }
            ChartKind::Table => {
                if self.categories.is_empty() {
                    return bad("table without columns".into());
                }
            }
            ChartKind::Composite => unreachable!(),
        }
        Ok(())
    }

    /// The chart a subchart index refers to.
    pub fn part(&self, sub: Option<usize>) -> Option<&ChartSpec> {
        match sub {
            None => Some(self),
            Some(k) => self.subcharts.get(k),
        }
    }

    fn fingerprint(&self) -> u64 {
        let mut h = synth::fnv(&self.topic);
        for s in &self.series {
            for v in &s.values {
                h = synth::mix(h, v.to_bits());
            }
        }
        for sub in &self.subcharts {
            h = synth::mix(h, sub.fingerprint());
        }
        h
    }
}

const YEAR_AXIS: &str = "Year";

fn time_categories(rng: &mut SeededRng, n: usize) -> (String, Vec<String>) {
    match rng.gen_range(0..3) {
        0 => {
            let start = rng.gen_range(2012..=2020);
            (YEAR_AXIS.into(), (0..n).map(|k| (start + k as i32).to_string()).collect())
        }
        1 if n <= 4 => ("Quarter".into(), (1..=n).map(|k| format!("Q{k}")).collect()),
        _ => {
            const MONTHS: [&str; 12] = ["Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"];
            let start = rng.gen_range(0..=12 - n);
            ("Month".into(), MONTHS[start..start + n].iter().map(|s| s.to_string()).collect())
        }
    }
}

const REGIONS: [&str; 5] = ["North", "South", "East", "West", "Central"];

const PIE_SETS: [[&str; 5]; 4] = [
    REGIONS,
    ["Online", "Retail", "Wholesale", "Export", "Direct"],
    ["Residential", "Commercial", "Industrial", "Transport", "Public"],
    ["Product A", "Product B", "Product C", "Product D", "Product E"],
];

const SERIES_SETS: [&[&str]; 6] = [
    &["Company A", "Company B", "Company C"],
    &["Urban", "Rural", "Suburban"],
    &["Domestic", "International"],
    &["Online", "In-store"],
    &["Plan", "Actual"],
    &["Team Red", "Team Blue", "Team Green", "Team Gold"],
];

const ROW_SETS: [&[&str]; 3] = [
    &["North", "South", "East", "West"],
    &["Product A", "Product B", "Product C", "Product D"],
    &["Team Red", "Team Blue", "Team Green", "Team Gold"],
];

/// Distinct integers drawn from the topic's magnitude class.
fn distinct_values(rng: &mut SeededRng, class: UnitClass, n: usize) -> Vec<f64> {
    let (lo, hi) = class.range();
    let mut out: Vec<f64> = Vec::with_capacity(n);
    while out.len() < n {
        let v = rng.gen_range(lo..=hi) as f64;
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

/// Four distinct positive integer percentages summing to 100, each at least 5.
fn pie_percentages(rng: &mut SeededRng, n: usize) -> Vec<f64> {
    loop {
        let mut cuts: Vec<i64> = (0..n - 1).map(|_| rng.gen_range(1..100)).collect();
        cuts.sort_unstable();
        let mut parts = Vec::with_capacity(n);
        let mut prev = 0;
        for c in cuts.iter().copied().chain(std::iter::once(100)) {
            parts.push(c - prev);
            prev = c;
        }
        let mut sorted = parts.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() == n && parts.iter().all(|&p| p >= 5) {
            return parts.into_iter().map(|p| p as f64).collect();
        }
    }
}

fn assign_colors(rng: &mut SeededRng, labels: &[String]) -> BTreeMap<String, PaletteColor> {
    let colors = pick_distinct(rng, &PaletteColor::FILLS, labels.len());
    labels.iter().cloned().zip(colors).collect()
}

fn sample_simple(rng: &mut SeededRng, kind: ChartKind, topic: &Topic) -> ChartSpec {
    let legend_position = *pick(rng, &[LegendPosition::Top, LegendPosition::Right, LegendPosition::Bottom]);
    match kind {
        ChartKind::Pie => {
            let set = pick(rng, &PIE_SETS);
            let categories: Vec<String> = pick_distinct(rng, set, 4).into_iter().map(String::from).collect();
            let palette_assignment = assign_colors(rng, &categories);
            ChartSpec {
                kind,
                topic: topic.name.clone(),
                unit: "%".into(),
                series: vec![Series { label: topic.name.clone(), values: pie_percentages(rng, 4) }],
                categories,
                axis_labels: (String::new(), "%".into()),
                legend_position: if legend_position == LegendPosition::Top { LegendPosition::Right } else { legend_position },
                palette_assignment,
                subcharts: vec![],
            }
        }
        ChartKind::Line | ChartKind::Bar => {
            let n = rng.gen_range(if kind == ChartKind::Line { 4..=6 } else { 3..=5 });
            let (axis, categories) = if kind == ChartKind::Bar && rng.gen_bool(0.3) {
                let mut c: Vec<String> = pick_distinct(rng, &REGIONS, n.min(5)).into_iter().map(String::from).collect();
                c.sort_by_key(|r| REGIONS.iter().position(|x| x == r));
                ("Region".to_string(), c)
            } else {
                time_categories(rng, n)
            };
            let set = pick(rng, &SERIES_SETS);
            let ns = rng.gen_range(1..=set.len().min(3));
            let labels: Vec<String> = set[..ns].iter().map(|s| s.to_string()).collect();
            let series = labels
                .iter()
                .map(|l| Series { label: l.clone(), values: distinct_values(rng, topic.unit_class, categories.len()) })
                .collect();
            let palette_assignment = assign_colors(rng, &labels);
            ChartSpec {
                kind,
                topic: topic.name.clone(),
                unit: topic.unit.clone(),
                categories,
                series,
                axis_labels: (axis, topic.unit.clone()),
                legend_position,
                palette_assignment,
                subcharts: vec![],
            }
        }
        ChartKind::Table => {
            let cols = rng.gen_range(3..=5);
            let (axis, categories) = time_categories(rng, cols);
            let rows = rng.gen_range(2..=4);
            let set = pick(rng, &ROW_SETS);
            let series =
                set[..rows].iter().map(|l| Series { label: l.to_string(), values: distinct_values(rng, topic.unit_class, cols) }).collect();
            ChartSpec {
                kind,
                topic: topic.name.clone(),
                unit: topic.unit.clone(),
                categories,
                series,
                axis_labels: (axis, topic.unit.clone()),
                legend_position: LegendPosition::Right,
                palette_assignment: BTreeMap::new(),
                subcharts: vec![],
            }
        }
        ChartKind::Composite => unreachable!("composites are assembled from simple charts"),
    }
}

/// Samples a chart spec; `kind = None` draws the kind uniformly from all five.
pub fn sample_chart_spec(seed: u64, kind: Option<ChartKind>, library: &KeywordLibrary) -> ChartSpec {
    assert!(!library.is_empty(), "keyword library must not be empty");
    let mut rng = synth::rng(seed, "chart");
    let kind = kind.unwrap_or_else(|| *pick(&mut rng, &ChartKind::ALL));
    let topic = pick(&mut rng, &library.topics).clone();
    if kind != ChartKind::Composite {
        return sample_simple(&mut rng, kind, &topic);
    }
    let n = rng.gen_range(2..=4);
    let same_domain: Vec<&Topic> = library.topics.iter().filter(|t| t.domain == topic.domain && t.name != topic.name).collect();
    let pool: Vec<&Topic> = if same_domain.len() >= n { same_domain } else { library.topics.iter().collect() };
    let sub_topics = pick_distinct(&mut rng, &pool, n);
    let subcharts = sub_topics
        .into_iter()
        .map(|t| {
            let k = *pick(&mut rng, &[ChartKind::Line, ChartKind::Bar, ChartKind::Pie]);
            let mut spec = sample_simple(&mut rng, k, t);
            if spec.kind == ChartKind::Line {
                spec.categories.truncate(5);
                for s in &mut spec.series {
                    s.values.truncate(5);
                }
            }
            spec.legend_position = LegendPosition::Bottom;
            spec
        })
        .collect();
    ChartSpec {
        kind,
        topic: format!("{} Overview", topic.name),
        unit: topic.unit.clone(),
        categories: vec![],
        series: vec![],
        axis_labels: (String::new(), String::new()),
        legend_position: LegendPosition::Bottom,
        palette_assignment: BTreeMap::new(),
        subcharts,
    }
}

/// Smallest "nice" number of the form m·10^k not below `max_value`.
pub fn value_axis_max(max_value: f64) -> f64 {
    if max_value <= 0.0 {
        return 1.0;
    }
    let exp = max_value.log10().floor();
    let base = 10f64.powf(exp);
    for m in [1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0] {
        let candidate = m * base;
        if candidate >= max_value - 1e-9 {
            return candidate;
        }
    }
    10.0 * base
}

pub const VALUE_TICKS: usize = 5;

#[derive(Debug, Clone, Copy)]
struct Frame {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

const PAD: f64 = 8.0;
const TEXT_COLOR: Rgb = Rgb(34, 34, 34);
const AXIS_COLOR: Rgb = Rgb(60, 60, 60);
const GRID_COLOR: Rgb = Rgb(225, 225, 225);

fn overflow(what: &str, need: f64, have: f64) -> GenError {
    GenError::LayoutOverflow(format!("{what} needs {need:.1} units, {have:.1} available"))
}

fn text_width(s: &str, font: f64) -> f64 {
    text_extent(s, font).0
}

fn text(sb: &mut SceneBuilder, role: &str, x: f64, y: f64, s: &str, anchor: TextAnchor, font: f64) -> usize {
    sb.push_role(role, Primitive::text(x, y, s, anchor, StyleSpec::text(TEXT_COLOR, font)).at_z(5))
}

/// Draws a title centred at the top of the frame; returns the y below it.
fn draw_title(sb: &mut SceneBuilder, title: &str, frame: Frame, font: f64) -> Result<f64, GenError> {
    let w = text_width(title, font);
    if w > frame.w - 2.0 * PAD {
        return Err(overflow("title", w, frame.w - 2.0 * PAD));
    }
    text(sb, "title", frame.x + frame.w / 2.0, frame.y + PAD, title, TextAnchor::Middle, font);
    Ok(frame.y + PAD + font + 6.0)
}

fn legend_entry_width(label: &str, font: f64) -> f64 {
    font + 4.0 + text_width(label, font) + 12.0
}

/// Horizontal legend row centred in the frame at `y`.
fn draw_legend_row(sb: &mut SceneBuilder, entries: &[(String, PaletteColor)], frame: Frame, y: f64, font: f64) -> Result<(), GenError> {
    let total: f64 = entries.iter().map(|(l, _)| legend_entry_width(l, font)).sum::<f64>() - 12.0;
    if total > frame.w - 2.0 * PAD {
        return Err(overflow("legend", total, frame.w - 2.0 * PAD));
    }
    let mut x = frame.x + (frame.w - total) / 2.0;
    for (label, color) in entries {
        sb.push_role("legend", Primitive::rect(x, y, font, font, StyleSpec::fill(*color)).at_z(4));
        text(sb, "legend", x + font + 4.0, y, label, TextAnchor::Start, font);
        x += legend_entry_width(label, font);
    }
    Ok(())
}

/// Vertical legend column with its left edge at `x`.
fn draw_legend_column(sb: &mut SceneBuilder, entries: &[(String, PaletteColor)], x: f64, y: f64, font: f64) {
    for (k, (label, color)) in entries.iter().enumerate() {
        let yy = y + k as f64 * (font + 6.0);
        sb.push_role("legend", Primitive::rect(x, yy, font, font, StyleSpec::fill(*color)).at_z(4));
        text(sb, "legend", x + font + 4.0, yy, label, TextAnchor::Start, font);
    }
}

fn legend_entries(spec: &ChartSpec) -> Vec<(String, PaletteColor)> {
    let labels: Vec<&String> = match spec.kind {
        ChartKind::Pie => spec.categories.iter().collect(),
        _ => spec.series.iter().map(|s| &s.label).collect(),
    };
    labels.into_iter().map(|l| (l.clone(), spec.palette_assignment.get(l).copied().unwrap_or(PaletteColor::Gray))).collect()
}

fn draw_axis_chart(sb: &mut SceneBuilder, spec: &ChartSpec, frame: Frame, font: f64) -> Result<(), GenError> {
    let mut top = draw_title(sb, &spec.topic, frame, font * 1.2)?;
    let entries = legend_entries(spec);
    let legend_w = entries.iter().map(|(l, _)| legend_entry_width(l, font)).fold(0.0, f64::max);
    let mut bottom = frame.y + frame.h - PAD;
    match spec.legend_position {
        LegendPosition::Top => {
            draw_legend_row(sb, &entries, frame, top, font)?;
            top += font + 8.0;
        }
        LegendPosition::Bottom => {
            bottom -= font;
            draw_legend_row(sb, &entries, frame, bottom, font)?;
            bottom -= 8.0;
        }
        LegendPosition::Right => {}
    }
    // Category axis title and tick labels.
    let axis_title_y = bottom - font;
    let tick_label_y = axis_title_y - 4.0 - font;
    let plot_bottom = tick_label_y - 6.0;

    let max_value = spec.series.iter().flat_map(|s| s.values.iter().copied()).fold(0.0, f64::max);
    let axis_max = value_axis_max(max_value);
    let tick_labels: Vec<String> = (0..=VALUE_TICKS).map(|k| format_number(axis_max * k as f64 / VALUE_TICKS as f64)).collect();
    let tick_w = tick_labels.iter().map(|t| text_width(t, font)).fold(0.0, f64::max);
    let plot_left = frame.x + PAD + tick_w + 6.0;
    let mut plot_right = frame.x + frame.w - PAD;
    if spec.legend_position == LegendPosition::Right {
        plot_right -= legend_w + 10.0;
    }
    // Value-axis unit label above the plot.
    let unit_label_y = top;
    let plot_top = top + font + 4.0 + font / 2.0;
    let plot_w = plot_right - plot_left;
    let plot_h = plot_bottom - plot_top;
    if plot_w < 60.0 {
        return Err(overflow("plot width", 60.0, plot_w));
    }
    if plot_h < 60.0 {
        return Err(overflow("plot height", 60.0, plot_h));
    }
    if spec.legend_position == LegendPosition::Right {
        draw_legend_column(sb, &entries, plot_right + 10.0, plot_top, font);
        let needed = entries.len() as f64 * (font + 6.0);
        if needed > plot_h {
            return Err(overflow("legend column", needed, plot_h));
        }
    }
    let unit_w = text_width(&spec.axis_labels.1, font);
    if plot_left + unit_w > frame.x + frame.w - PAD {
        return Err(overflow("axis label", unit_w, frame.w));
    }
    text(sb, "axis_label", plot_left, unit_label_y, &spec.axis_labels.1, TextAnchor::Start, font);

    let n = spec.categories.len();
    let slot = plot_w / n as f64;
    for (i, cat) in spec.categories.iter().enumerate() {
        let w = text_width(cat, font);
        if w > slot - 2.0 {
            return Err(overflow("category label", w, slot - 2.0));
        }
        let cx = plot_left + slot * (i as f64 + 0.5);
        text(sb, "tick_label", cx, tick_label_y, cat, TextAnchor::Middle, font);
        sb.push_role("axis", Primitive::line(cx, plot_bottom, cx, plot_bottom + 4.0, StyleSpec::stroke(AXIS_COLOR, 1.0)));
    }
    let cat_title_w = text_width(&spec.axis_labels.0, font);
    if cat_title_w > plot_w {
        return Err(overflow("category axis title", cat_title_w, plot_w));
    }
    text(sb, "axis_label", plot_left + plot_w / 2.0, axis_title_y, &spec.axis_labels.0, TextAnchor::Middle, font);

    for (k, label) in tick_labels.iter().enumerate() {
        let y = plot_bottom - plot_h * k as f64 / VALUE_TICKS as f64;
        text(sb, "tick_label", plot_left - 6.0, y - font / 2.0, label, TextAnchor::End, font);
        if k > 0 {
            sb.push_role("grid", Primitive::line(plot_left, y, plot_right, y, StyleSpec::stroke(GRID_COLOR, 1.0)).at_z(-1));
        }
    }
    sb.push_role("axis", Primitive::line(plot_left, plot_top, plot_left, plot_bottom, StyleSpec::stroke(AXIS_COLOR, 1.5)).at_z(2));
    sb.push_role("axis", Primitive::line(plot_left, plot_bottom, plot_right, plot_bottom, StyleSpec::stroke(AXIS_COLOR, 1.5)).at_z(2));

    let height = |v: f64| v / axis_max * plot_h;
    let ns = spec.series.len();
    match spec.kind {
        ChartKind::Bar => {
            let group = slot * 0.7;
            let bw = group / ns as f64;
            for (s, series) in spec.series.iter().enumerate() {
                let color = spec.palette_assignment[&series.label];
                for (i, &v) in series.values.iter().enumerate() {
                    let x = plot_left + slot * i as f64 + slot * 0.15 + bw * s as f64;
                    let h = height(v);
                    sb.push_role("data_marks", Primitive::rect(x, plot_bottom - h, bw, h, StyleSpec::fill(color)).at_z(1));
                }
            }
        }
        ChartKind::Line => {
            for series in &spec.series {
                let color = spec.palette_assignment[&series.label];
                let pts: Vec<(f64, f64)> = series
                    .values
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| (plot_left + slot * (i as f64 + 0.5), plot_bottom - height(v)))
                    .collect();
                sb.push_role("data_marks", Primitive::polyline(pts.clone(), StyleSpec::stroke(color, 2.5)).at_z(1));
                for (x, y) in pts {
                    sb.push_role("data_marks", Primitive::circle(x, y, 3.5, StyleSpec::fill(color)).at_z(2));
                }
            }
        }
        _ => unreachable!(),
    }
    Ok(())
}

fn draw_pie(sb: &mut SceneBuilder, spec: &ChartSpec, frame: Frame, font: f64) -> Result<(), GenError> {
    let top = draw_title(sb, &spec.topic, frame, font * 1.2)?;
    let entries = legend_entries(spec);
    let mut area = Frame { x: frame.x + PAD, y: top + 4.0, w: frame.w - 2.0 * PAD, h: frame.y + frame.h - PAD - top - 4.0 };
    match spec.legend_position {
        LegendPosition::Right => {
            let lw = entries.iter().map(|(l, _)| legend_entry_width(l, font)).fold(0.0, f64::max);
            area.w -= lw + 10.0;
            let lh = entries.len() as f64 * (font + 6.0);
            draw_legend_column(sb, &entries, area.x + area.w + 10.0, area.y + (area.h - lh).max(0.0) / 2.0, font);
        }
        _ => {
            area.h -= font + 8.0;
            draw_legend_row(sb, &entries, frame, area.y + area.h + 8.0, font)?;
        }
    }
    let r = area.w.min(area.h) / 2.0 - 4.0;
    let min_r = 6.0 * font;
    if r < min_r {
        return Err(overflow("pie radius", min_r, r));
    }
    let (cx, cy) = (area.x + area.w / 2.0, area.y + area.h / 2.0);
    let mut start = 0.0;
    for (cat, &pct) in spec.categories.iter().zip(&spec.series[0].values) {
        let sweep = 3.6 * pct;
        let color = spec.palette_assignment[cat];
        sb.push_role(
            "data_marks",
            Primitive::new(Shape::Wedge { cx, cy, r, start, sweep }, StyleSpec::filled_outline(color, Rgb::WHITE, 1.5)).at_z(1),
        );
        let (lx, ly) = polar(cx, cy, r * 0.65, start + sweep / 2.0);
        text(sb, "label", lx, ly - font / 2.0, &format!("{}%", format_number(pct)), TextAnchor::Middle, font);
        start += sweep;
    }
    sb.declare_role("axis");
    Ok(())
}

fn draw_table(sb: &mut SceneBuilder, spec: &ChartSpec, frame: Frame, font: f64) -> Result<(), GenError> {
    let top = draw_title(sb, &spec.topic, frame, font * 1.2)?;
    let corner = spec.axis_labels.0.clone();
    let head_w =
        spec.series.iter().map(|s| text_width(&s.label, font)).chain(std::iter::once(text_width(&corner, font))).fold(0.0, f64::max) + 16.0;
    let col_ws: Vec<f64> = spec
        .categories
        .iter()
        .enumerate()
        .map(|(c, h)| {
            spec.series
                .iter()
                .map(|s| text_width(&format_number(s.values[c]), font))
                .chain(std::iter::once(text_width(h, font)))
                .fold(0.0, f64::max)
                + 16.0
        })
        .collect();
    let total_w = head_w + col_ws.iter().sum::<f64>();
    if total_w > frame.w - 2.0 * PAD {
        return Err(overflow("table width", total_w, frame.w - 2.0 * PAD));
    }
    let row_h = font * 1.8;
    let rows = spec.series.len() + 1;
    let total_h = row_h * rows as f64;
    let unit_y = top + 4.0;
    let y0 = unit_y + font + 8.0;
    if y0 + total_h > frame.y + frame.h - PAD {
        return Err(overflow("table height", total_h, frame.y + frame.h - PAD - y0));
    }
    let x0 = frame.x + (frame.w - total_w) / 2.0;
    text(sb, "axis_label", x0, unit_y, &format!("Unit: {}", spec.unit), TextAnchor::Start, font);
    sb.push_role("header_bg", Primitive::rect(x0, y0, total_w, row_h, StyleSpec::fill(Rgb(230, 236, 245))).at_z(-1));
    let text_dy = (row_h - font) / 2.0;
    text(sb, "header", x0 + 8.0, y0 + text_dy, &corner, TextAnchor::Start, font);
    let mut col_x = vec![x0 + head_w];
    for w in &col_ws {
        col_x.push(col_x.last().unwrap() + w);
    }
    for (c, h) in spec.categories.iter().enumerate() {
        text(sb, "header", col_x[c] + col_ws[c] / 2.0, y0 + text_dy, h, TextAnchor::Middle, font);
    }
    for (r, s) in spec.series.iter().enumerate() {
        let y = y0 + row_h * (r + 1) as f64;
        text(sb, "row_header", x0 + 8.0, y + text_dy, &s.label, TextAnchor::Start, font);
        for (c, v) in s.values.iter().enumerate() {
            text(sb, "cell", col_x[c] + col_ws[c] / 2.0, y + text_dy, &format_number(*v), TextAnchor::Middle, font);
        }
    }
    let grid = StyleSpec::stroke(AXIS_COLOR, 1.0);
    for r in 0..=rows {
        let y = y0 + row_h * r as f64;
        sb.push_role("grid", Primitive::line(x0, y, x0 + total_w, y, grid.clone()).at_z(3));
    }
    sb.push_role("grid", Primitive::line(x0, y0, x0, y0 + total_h, grid.clone()).at_z(3));
    for x in &col_x {
        sb.push_role("grid", Primitive::line(*x, y0, *x, y0 + total_h, grid.clone()).at_z(3));
    }
    sb.declare_role("axis");
    sb.declare_role("legend");
    sb.declare_role("data_marks");
    Ok(())
}

fn draw_simple(sb: &mut SceneBuilder, spec: &ChartSpec, frame: Frame, font: f64) -> Result<(), GenError> {
    match spec.kind {
        ChartKind::Line | ChartKind::Bar => draw_axis_chart(sb, spec, frame, font),
        ChartKind::Pie => draw_pie(sb, spec, frame, font),
        ChartKind::Table => draw_table(sb, spec, frame, font),
        ChartKind::Composite => unreachable!(),
    }
}

/// Canvas used for a chart spec.
pub fn chart_canvas(spec: &ChartSpec) -> Canvas {
    match (spec.kind, spec.subcharts.len()) {
        (ChartKind::Composite, 4) => Canvas { width: 960, height: 720, background: Rgb::WHITE },
        (ChartKind::Composite, _) => Canvas { width: 960, height: 480, background: Rgb::WHITE },
        _ => Canvas::default(),
    }
}

pub fn build_chart_scene(spec: &ChartSpec, layout: &LayoutParams) -> Result<SceneGraph, GenError> {
    spec.check()?;
    let canvas = chart_canvas(spec);
    let mut sb = SceneBuilder::new(canvas);
    for role in ["title", "legend", "axis", "data_marks"] {
        sb.declare_role(role);
    }
    let font = layout.font_size;
    let full = Frame { x: 0.0, y: 0.0, w: f64::from(canvas.width), h: f64::from(canvas.height) };
    if spec.kind != ChartKind::Composite {
        draw_simple(&mut sb, spec, full, font)?;
    } else {
        let top = draw_title(&mut sb, &spec.topic, full, font * 1.3)?;
        let n = spec.subcharts.len();
        let (cols, rows) = if n == 4 { (2, 2) } else { (n, 1) };
        let cw = full.w / cols as f64;
        let ch = (full.h - top) / rows as f64;
        for (k, sub) in spec.subcharts.iter().enumerate() {
            let frame = Frame { x: cw * (k % cols) as f64, y: top + ch * (k / cols) as f64, w: cw, h: ch };
            draw_simple(&mut sb, sub, frame, font)?;
        }
    }
    Ok(sb.finish()?)
}

/// What a chart question asks; `sub` selects a subchart of a composite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "ask", rename_all = "snake_case")]
pub enum ChartQuery {
    Title { sub: Option<usize> },
    AxisUnit { sub: Option<usize> },
    Caption,
    CategoryCount { sub: Option<usize> },
    RowCount,
    SubchartCount,
    LegendPosition { sub: Option<usize> },
    ArgMax { sub: Option<usize>, series: usize },
    SeriesColor { sub: Option<usize>, series: usize },
    CategoryColor { sub: Option<usize>, category: usize },
    Value { sub: Option<usize>, series: usize, category: usize },
    Range { sub: Option<usize>, series: usize },
    Total { sub: Option<usize>, series: usize },
    Change { sub: Option<usize>, series: usize },
    PairSum { sub: Option<usize>, series: usize, a: usize, b: usize },
    ColumnHeader { column: usize },
    ColumnSum { column: usize },
}

fn q(query: ChartQuery) -> Query {
    Query::Chart(query)
}

fn num_draft(question: String, value: f64, qtype: &str, query: ChartQuery) -> Draft {
    Draft::new(question, format_number(value), AnswerKind::Numeric, qtype, q(query))
}

fn listing(spec: &ChartSpec, series: usize) -> String {
    spec.categories
        .iter()
        .zip(&spec.series[series].values)
        .map(|(c, v)| format!("{} ({c})", format_number(*v)))
        .collect::<Vec<_>>()
        .join(", ")
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

fn caption(spec: &ChartSpec) -> String {
    match spec.kind {
        ChartKind::Pie => format!(
            "A pie chart titled '{}' showing the shares of {}.",
            spec.topic,
            spec.categories
                .iter()
                .zip(&spec.series[0].values)
                .map(|(c, v)| format!("{c} ({}%)", format_number(*v)))
                .collect::<Vec<_>>()
                .join(", ")
        ),
        ChartKind::Table => format!(
            "A table titled '{}' listing {} for {} across {} columns from {} to {}.",
            spec.topic,
            spec.unit,
            spec.series.iter().map(|s| s.label.as_str()).collect::<Vec<_>>().join(", "),
            spec.categories.len(),
            spec.categories[0],
            spec.categories[spec.categories.len() - 1]
        ),
        ChartKind::Composite => format!(
            "A composite chart titled '{}' containing {} subcharts: {}.",
            spec.topic,
            spec.subcharts.len(),
            spec.subcharts.iter().map(|s| format!("a {} of {}", s.kind.display_name(), s.topic)).collect::<Vec<_>>().join(", ")
        ),
        ChartKind::Line | ChartKind::Bar => format!(
            "A {} titled '{}' comparing {} in {} across {} {}s from {} to {}.",
            spec.kind.display_name(),
            spec.topic,
            spec.series.iter().map(|s| s.label.as_str()).collect::<Vec<_>>().join(", "),
            spec.unit,
            spec.categories.len(),
            spec.axis_labels.0.to_lowercase(),
            spec.categories[0],
            spec.categories[spec.categories.len() - 1]
        ),
    }
}

/// Perception, extraction and math questions about one non-composite chart.
/// Each inner list holds one question type, preferred variant first.
fn part_questions(spec: &ChartSpec, sub: Option<usize>, variant: u64) -> [Vec<Draft>; 3] {
    let prefix = sub.map(|k| format!("In the {} subchart, ", ordinal(k + 1))).unwrap_or_default();
    let cap = |s: String| {
        if prefix.is_empty() {
            let mut c = s.chars();
            c.next().map(|f| f.to_uppercase().collect::<String>() + c.as_str()).unwrap_or_default()
        } else {
            format!("{prefix}{s}")
        }
    };
    let ns = spec.series.len();
    let n = spec.categories.len();
    let s = (variant % ns as u64) as usize;
    let c = ((variant / 7) % n as u64) as usize;
    let series = &spec.series[s];
    let (mut perception, mut extraction, mut math) = (Vec::new(), Vec::new(), Vec::new());
    match spec.kind {
        ChartKind::Pie => {
            let values = &series.values;
            let (hi, lo) = (argmax(values), argmin(values));
            perception.push(Draft::new(
                cap("which category has the largest share?".into()),
                spec.categories[hi].clone(),
                AnswerKind::Phrase,
                "perception",
                q(ChartQuery::ArgMax { sub, series: 0 }),
            ));
            perception.push(num_draft(
                cap("how many segments does the pie chart have?".into()),
                n as f64,
                "perception",
                ChartQuery::CategoryCount { sub },
            ));
            perception.push(Draft::new(
                cap(format!("what color is the {} segment?", spec.categories[c])),
                spec.palette_assignment[&spec.categories[c]].name(),
                AnswerKind::Phrase,
                "perception",
                q(ChartQuery::CategoryColor { sub, category: c }),
            ));
            extraction.push(num_draft(
                cap(format!("what percentage does {} account for?", spec.categories[c])),
                values[c],
                "data_extraction",
                ChartQuery::Value { sub, series: 0, category: c },
            ));
            math.push(
                num_draft(
                    cap("what is the difference between the largest and smallest categories?".into()),
                    values[hi] - values[lo],
                    "math_reasoning",
                    ChartQuery::Range { sub, series: 0 },
                )
                .with_rationale(format!(
                    "The segments are {}. The largest category is {} with {}% and the smallest is {} with {}%, so the difference is {} - {} = {}.",
                    spec.categories.iter().zip(values).map(|(c, v)| format!("{c} {}%", format_number(*v))).collect::<Vec<_>>().join(", "),
                    spec.categories[hi],
                    format_number(values[hi]),
                    spec.categories[lo],
                    format_number(values[lo]),
                    format_number(values[hi]),
                    format_number(values[lo]),
                    format_number(values[hi] - values[lo])
                )),
            );
            let b = (c + 1) % n;
            math.push(
                num_draft(
                    cap(format!("what is the combined share of {} and {}?", spec.categories[c], spec.categories[b])),
                    values[c] + values[b],
                    "math_reasoning",
                    ChartQuery::PairSum { sub, series: 0, a: c, b },
                )
                .with_rationale(format!(
                    "{} accounts for {}% and {} accounts for {}%, so together they make up {} + {} = {}%.",
                    spec.categories[c],
                    format_number(values[c]),
                    spec.categories[b],
                    format_number(values[b]),
                    format_number(values[c]),
                    format_number(values[b]),
                    format_number(values[c] + values[b])
                )),
            );
        }
        ChartKind::Line | ChartKind::Bar => {
            let values = &series.values;
            let axis = spec.axis_labels.0.to_lowercase();
            let (hi, lo) = (argmax(values), argmin(values));
            let mark = if spec.kind == ChartKind::Bar { "bar" } else { "line" };
            perception.push(Draft::new(
                cap(format!("which {axis} has the highest value for {}?", series.label)),
                spec.categories[hi].clone(),
                AnswerKind::Phrase,
                "perception",
                q(ChartQuery::ArgMax { sub, series: s }),
            ));
            perception.push(num_draft(
                cap(format!("how many {axis}s are shown on the horizontal axis?")),
                n as f64,
                "perception",
                ChartQuery::CategoryCount { sub },
            ));
            perception.push(Draft::new(
                cap(format!("what color is the {mark} representing {}?", series.label)),
                spec.palette_assignment[&series.label].name(),
                AnswerKind::Phrase,
                "perception",
                q(ChartQuery::SeriesColor { sub, series: s }),
            ));
            if sub.is_none() {
                perception.push(Draft::new(
                    "Where is the legend located?",
                    spec.legend_position.name(),
                    AnswerKind::Phrase,
                    "perception",
                    q(ChartQuery::LegendPosition { sub }),
                ));
            }
            extraction.push(num_draft(
                cap(format!("what is the value of {} in {}?", series.label, spec.categories[c])),
                values[c],
                "data_extraction",
                ChartQuery::Value { sub, series: s, category: c },
            ));
            let list = listing(spec, s);
            let range = num_draft(
                cap(format!("what is the difference between the highest and lowest values of {}?", series.label)),
                values[hi] - values[lo],
                "math_reasoning",
                ChartQuery::Range { sub, series: s },
            )
            .with_rationale(format!(
                "The values of {} are {list}. The highest is {} in {} and the lowest is {} in {}, so the difference is {} - {} = {}.",
                series.label,
                format_number(values[hi]),
                spec.categories[hi],
                format_number(values[lo]),
                spec.categories[lo],
                format_number(values[hi]),
                format_number(values[lo]),
                format_number(values[hi] - values[lo])
            ));
            let total: f64 = values.iter().sum();
            let total_q = num_draft(
                cap(format!("what is the total of {} across all {axis}s?", series.label)),
                total,
                "math_reasoning",
                ChartQuery::Total { sub, series: s },
            )
            .with_rationale(format!(
                "The values of {} are {list}. Adding them gives {} = {}.",
                series.label,
                values.iter().map(|v| format_number(*v)).collect::<Vec<_>>().join(" + "),
                format_number(total)
            ));
            let change = values[n - 1] - values[0];
            let change_q = num_draft(
                cap(format!("by how much did {} change from {} to {}?", series.label, spec.categories[0], spec.categories[n - 1])),
                change,
                "math_reasoning",
                ChartQuery::Change { sub, series: s },
            )
            .with_rationale(format!(
                "{} is {} in {} and {} in {}, so the change is {} - {} = {}.",
                series.label,
                format_number(values[0]),
                spec.categories[0],
                format_number(values[n - 1]),
                spec.categories[n - 1],
                format_number(values[n - 1]),
                format_number(values[0]),
                format_number(change)
            ));
            match (spec.kind, variant % 3) {
                (ChartKind::Line, 0) => math.extend([change_q, range, total_q]),
                (_, 1) => math.extend([total_q, range]),
                _ => math.extend([range, total_q]),
            }
        }
        ChartKind::Table | ChartKind::Composite => unreachable!(),
    }
    let rot = (variant % perception.len() as u64) as usize;
    perception.rotate_left(rot);
    [perception, extraction, math]
}

fn table_questions(spec: &ChartSpec, variant: u64) -> Vec<Vec<Draft>> {
    let n = spec.categories.len();
    let rows = spec.series.len();
    let c = ((variant / 7) % n as u64) as usize;
    let r = (variant % rows as u64) as usize;
    let ocr = vec![
        Draft::new("What is the title of this table?", spec.topic.clone(), AnswerKind::Phrase, "ocr", q(ChartQuery::Title { sub: None })),
        Draft::new(
            "What is the header of the last column?",
            spec.categories[n - 1].clone(),
            AnswerKind::Phrase,
            "ocr",
            q(ChartQuery::ColumnHeader { column: n - 1 }),
        ),
    ];
    let perception = vec![
        num_draft(
            "How many rows of data does the table contain, excluding the header row?".into(),
            rows as f64,
            "perception",
            ChartQuery::RowCount,
        ),
        num_draft(
            format!("How many {} columns does the table contain?", spec.axis_labels.0.to_lowercase()),
            n as f64,
            "perception",
            ChartQuery::CategoryCount { sub: None },
        ),
    ];
    let extraction = vec![num_draft(
        format!("What is the value for {} in {}?", spec.series[r].label, spec.categories[c]),
        spec.series[r].values[c],
        "data_extraction",
        ChartQuery::Value { sub: None, series: r, category: c },
    )];
    let col: Vec<f64> = spec.series.iter().map(|s| s.values[c]).collect();
    let sum: f64 = col.iter().sum();
    let math = vec![num_draft(
        format!("What is the sum of the values in the {} column?", spec.categories[c]),
        sum,
        "math_reasoning",
        ChartQuery::ColumnSum { column: c },
    )
    .with_rationale(format!(
        "The {} column contains {}. Their sum is {} = {}.",
        spec.categories[c],
        spec.series.iter().map(|s| format!("{} for {}", format_number(s.values[c]), s.label)).collect::<Vec<_>>().join(", "),
        col.iter().map(|v| format_number(*v)).collect::<Vec<_>>().join(" + "),
        format_number(sum)
    ))];
    let caption =
        vec![Draft::new("Describe this table in one sentence.", caption(spec), AnswerKind::Sentence, "caption", q(ChartQuery::Caption))];
    let mut ocr = ocr;
    ocr.rotate_left((variant % 2) as usize);
    vec![ocr, caption, perception, extraction, math]
}

/// All questions for a chart spec, grouped by type in the order
/// OCR, caption, perception, data extraction, math reasoning.
pub fn chart_question_groups(spec: &ChartSpec) -> Vec<Vec<Draft>> {
    let variant = spec.fingerprint();
    match spec.kind {
        ChartKind::Table => table_questions(spec, variant),
        ChartKind::Composite => {
            let k = (variant % spec.subcharts.len() as u64) as usize;
            let sub = &spec.subcharts[k];
            let [mut perception, extraction, math] = part_questions(sub, Some(k), variant >> 8);
            perception.insert(
                0,
                num_draft(
                    "How many subcharts does this figure contain?".into(),
                    spec.subcharts.len() as f64,
                    "perception",
                    ChartQuery::SubchartCount,
                ),
            );
            let ocr = vec![
                Draft::new(
                    format!("What is the title of the {} subchart?", ordinal(k + 1)),
                    sub.topic.clone(),
                    AnswerKind::Phrase,
                    "ocr",
                    q(ChartQuery::Title { sub: Some(k) }),
                ),
                Draft::new(
                    "What is the overall title of this figure?",
                    spec.topic.clone(),
                    AnswerKind::Phrase,
                    "ocr",
                    q(ChartQuery::Title { sub: None }),
                ),
            ];
            let caption = vec![Draft::new(
                "Describe this figure in one sentence.",
                caption(spec),
                AnswerKind::Sentence,
                "caption",
                q(ChartQuery::Caption),
            )];
            vec![ocr, caption, perception, extraction, math]
        }
        _ => {
            let [perception, extraction, math] = part_questions(spec, None, variant);
            let mut ocr = vec![Draft::new(
                "What is the title of this chart?",
                spec.topic.clone(),
                AnswerKind::Phrase,
                "ocr",
                q(ChartQuery::Title { sub: None }),
            )];
            if spec.kind != ChartKind::Pie {
                ocr.push(Draft::new(
                    "What unit is shown on the vertical axis?",
                    spec.unit.clone(),
                    AnswerKind::Phrase,
                    "ocr",
                    q(ChartQuery::AxisUnit { sub: None }),
                ));
                ocr.rotate_left((variant % 2) as usize);
            }
            let caption = vec![Draft::new(
                "Describe this chart in one sentence.",
                caption(spec),
                AnswerKind::Sentence,
                "caption",
                q(ChartQuery::Caption),
            )];
            vec![ocr, caption, perception, extraction, math]
        }
    }
}

/// Questions in round-robin type order: the first five cover all five types.
pub fn chart_questions(spec: &ChartSpec) -> Vec<Draft> {
    interleave(chart_question_groups(spec))
}

/// Takes the first of each group, then the second of each, and so on.
pub(crate) fn interleave(groups: Vec<Vec<Draft>>) -> Vec<Draft> {
    let mut iters: Vec<_> = groups.into_iter().map(|g| g.into_iter()).collect();
    let mut out = Vec::new();
    loop {
        let before = out.len();
        for it in &mut iters {
            if let Some(d) = it.next() {
                out.push(d);
            }
        }
        if out.len() == before {
            return out;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::BBox;
    use std::collections::BTreeSet;

    fn lib() -> KeywordLibrary {
        KeywordLibrary::builtin()
    }

    pub(crate) fn pie_40_30_20_10() -> ChartSpec {
        let cats: Vec<String> = ["North", "South", "East", "West"].iter().map(|s| s.to_string()).collect();
        let palette = cats.iter().cloned().zip(PaletteColor::FILLS).collect();
        ChartSpec {
            kind: ChartKind::Pie,
            topic: "Energy consumption".into(),
            unit: "%".into(),
            categories: cats,
            series: vec![Series { label: "Energy consumption".into(), values: vec![40.0, 30.0, 20.0, 10.0] }],
            axis_labels: (String::new(), "%".into()),
            legend_position: LegendPosition::Right,
            palette_assignment: palette,
            subcharts: vec![],
        }
    }

    fn bar_spec(values: &[f64]) -> ChartSpec {
        let cats: Vec<String> = ["A", "B", "C"].iter().map(|s| s.to_string()).collect();
        ChartSpec {
            kind: ChartKind::Bar,
            topic: "Export volume".into(),
            unit: "million USD".into(),
            categories: cats,
            series: vec![Series { label: "Company A".into(), values: values.to_vec() }],
            axis_labels: ("Category".into(), "million USD".into()),
            legend_position: LegendPosition::Top,
            palette_assignment: [("Company A".to_string(), PaletteColor::Blue)].into_iter().collect(),
            subcharts: vec![],
        }
    }

    #[test]
    fn sampled_specs_are_valid_and_deterministic() {
        let lib = lib();
        for seed in 0..300 {
            let s = sample_chart_spec(seed, None, &lib);
            s.check().unwrap();
            assert_eq!(s, sample_chart_spec(seed, None, &lib));
        }
    }

    #[test]
    fn pie_has_four_categories_summing_to_100() {
        let s = sample_chart_spec(11, Some(ChartKind::Pie), &lib());
        assert_eq!(s.categories.len(), 4);
        assert!((s.series[0].values.iter().sum::<f64>() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn unset_kind_covers_all_five_kinds() {
        let lib = lib();
        let mut counts: BTreeMap<ChartKind, usize> = BTreeMap::new();
        for seed in 0..1000 {
            *counts.entry(sample_chart_spec(seed, None, &lib).kind).or_default() += 1;
        }
        assert_eq!(counts.len(), 5);
        for (k, c) in counts {
            assert!(c >= 100, "{k:?} drawn {c} times");
        }
    }

    #[test]
    fn values_stay_in_unit_ranges() {
        let lib = lib();
        for seed in 0..200 {
            let s = sample_chart_spec(seed, Some(ChartKind::Bar), &lib);
            let topic = lib.topics.iter().find(|t| t.name == s.topic).unwrap();
            let (lo, hi) = topic.unit_class.range();
            for v in s.series.iter().flat_map(|x| &x.values) {
                assert!(*v >= lo as f64 && *v <= hi as f64);
            }
        }
    }

    #[test]
    fn pie_wedge_sweeps_are_proportional() {
        let scene = build_chart_scene(&pie_40_30_20_10(), &LayoutParams::default()).unwrap();
        let sweeps: Vec<f64> = scene
            .role_primitives("data_marks")
            .filter_map(|p| match p.shape {
                Shape::Wedge { sweep, .. } => Some(sweep),
                _ => None,
            })
            .collect();
        let expected = [144.0, 108.0, 72.0, 36.0];
        assert_eq!(sweeps.len(), 4);
        for (a, b) in sweeps.iter().zip(expected) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!((sweeps.iter().sum::<f64>() - 360.0).abs() < 0.05);
    }

    #[test]
    fn sampled_pies_keep_full_circle() {
        let lib = lib();
        for seed in 0..100 {
            let s = sample_chart_spec(seed, Some(ChartKind::Pie), &lib);
            let scene = build_chart_scene(&s, &LayoutParams::default()).unwrap();
            let total: f64 = scene
                .role_primitives("data_marks")
                .filter_map(|p| match p.shape {
                    Shape::Wedge { sweep, .. } => Some(sweep),
                    _ => None,
                })
                .sum();
            assert!((total - 360.0).abs() <= 0.05);
        }
    }

    #[test]
    fn bar_heights_follow_documented_mapping() {
        let values = [57.0, 23.0, 41.0];
        let scene = build_chart_scene(&bar_spec(&values), &LayoutParams::default()).unwrap();
        // Plot height is the length of the vertical axis line.
        let plot_h = scene
            .role_primitives("axis")
            .filter_map(|p| match p.shape {
                Shape::Line { x1, y1, x2, y2 } if x1 == x2 && (y2 - y1).abs() > 10.0 => Some((y2 - y1).abs()),
                _ => None,
            })
            .next()
            .unwrap();
        let axis_max = value_axis_max(57.0);
        assert_eq!(axis_max, 60.0);
        let heights: Vec<f64> = scene
            .role_primitives("data_marks")
            .map(|p| match p.shape {
                Shape::Rectangle { height, .. } => height,
                _ => panic!("bar chart marks are rectangles"),
            })
            .collect();
        assert_eq!(heights.len(), 3);
        for (h, v) in heights.iter().zip(values) {
            assert!((h - v / axis_max * plot_h).abs() <= 0.5);
        }
    }

    #[test]
    fn table_has_one_text_per_cell() {
        let lib = lib();
        let spec = (0..500)
            .map(|seed| sample_chart_spec(seed, Some(ChartKind::Table), &lib))
            .find(|s| s.series.len() == 3 && s.categories.len() == 4)
            .expect("a 3x4 table among 500 seeds");
        let scene = build_chart_scene(&spec, &LayoutParams::default()).unwrap();
        assert_eq!(scene.role("cell").unwrap().len(), 12);
        assert!(!scene.role("grid").unwrap().is_empty());
    }

    #[test]
    fn every_sampled_chart_renders_with_required_roles() {
        let lib = lib();
        for seed in 0..200 {
            let spec = sample_chart_spec(seed, None, &lib);
            let scene = (0..3)
                .find_map(|k| build_chart_scene(&spec, &LayoutParams { font_size: 14.0 - 3.0 * k as f64 }).ok())
                .unwrap_or_else(|| panic!("seed {seed} never fits"));
            for role in ["title", "legend", "axis", "data_marks"] {
                assert!(scene.labels.contains_key(role), "seed {seed} lacks {role}");
            }
            let bounds = scene.canvas.bounds().inflate(1e-6);
            for p in &scene.primitives {
                let b: BBox = p.bounding_box();
                assert!(bounds.contains(&b), "seed {seed}: {p:?} leaves canvas");
            }
        }
    }

    #[test]
    fn long_title_overflows() {
        let mut spec = bar_spec(&[1.0, 2.0, 3.0]);
        spec.topic = "x".repeat(200);
        assert!(matches!(build_chart_scene(&spec, &LayoutParams::default()), Err(GenError::LayoutOverflow(_))));
    }

    #[test]
    fn pie_range_question_matches_worked_example() {
        let drafts = chart_questions(&pie_40_30_20_10());
        let d = drafts.iter().find(|d| d.question.contains("difference between the largest and smallest categories")).unwrap();
        assert_eq!(d.answer, "30");
        let r = d.rationale.as_deref().unwrap();
        assert!(r.contains("40") && r.contains("10"));
    }

    #[test]
    fn extraction_and_title_questions() {
        let spec = bar_spec(&[12.0, 57.0, 33.0]);
        let all: Vec<Draft> = chart_question_groups(&spec).into_iter().flatten().collect();
        let title = all.iter().find(|d| matches!(d.query, Query::Chart(ChartQuery::Title { sub: None }))).unwrap();
        assert_eq!(title.answer, spec.topic);
        // Walk variants until the extraction lands on category B.
        let mut found = false;
        for topic in ["a", "b", "c", "d", "e", "f", "g", "h", "i", "j", "k", "l", "m", "n"] {
            let mut s = spec.clone();
            s.topic = format!("Export volume {topic}");
            for d in chart_questions(&s) {
                if let Query::Chart(ChartQuery::Value { category: 1, .. }) = d.query {
                    assert_eq!(d.answer, "57");
                    found = true;
                }
            }
        }
        assert!(found);
    }

    #[test]
    fn first_five_questions_cover_all_types() {
        let lib = lib();
        for seed in 0..200 {
            let spec = sample_chart_spec(seed, None, &lib);
            let drafts = chart_questions(&spec);
            let types: BTreeSet<&str> = drafts[..5].iter().map(|d| d.question_type.as_str()).collect();
            assert_eq!(types.len(), 5, "seed {seed}");
            for d in drafts.iter().filter(|d| d.question_type == "math_reasoning") {
                assert!(d.rationale.is_some());
            }
        }
    }
}
