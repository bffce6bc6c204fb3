//! Answer verification. Each query is re-derived from the scenario spec by an
//! oracle written apart from the question generators, then compared with the
//! stored answer after canonicalization.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chart::{ChartKind, ChartQuery, ChartSpec};
use crate::diagram::{FlowQuery, FlowSpec, StepShape, TreeNode, TreeQuery, TreeSpec};
use crate::gauge::{DialFamily, DialQuery, DialSpec, Reading};
use crate::instruct::{canonicalize, ScenarioSpec, GENERATORS};
use crate::layout::{FloorPlanSpec, LayoutQuery};
use crate::map::{MapQuery, RoadMapSpec};
use crate::puzzle::{Glyph, Panel, PatternRule, PuzzleQuery, PuzzleSpec, Transform};
use crate::record::{split_sequence, AnswerKind, InstructionRecord, Query};
use crate::synth::format_number;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Ok,
    Mismatch { expected: String, got: String },
}

#[derive(Debug, Error, PartialEq)]
pub enum VerifyError {
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("record comes from {record} but the spec belongs to {spec}")]
    GeneratorMismatch { record: String, spec: String },
    #[error("query does not apply to this spec: {0}")]
    Inapplicable(String),
}

/// What the oracle accepts.
#[derive(Debug, Clone, PartialEq)]
enum Expected {
    /// Any of these strings; a stored "a or b" answer must have every part in the set.
    OneOf(Vec<String>),
    Number(f64),
    /// Fragments a free-form sentence must mention.
    Mentions(Vec<String>),
    Sequence(Vec<String>),
}

impl Expected {
    fn describe(&self) -> String {
        match self {
            Expected::OneOf(v) => v.join(" | "),
            Expected::Number(x) => format_number(*x),
            Expected::Mentions(v) => format!("mentions {}", v.join(", ")),
            Expected::Sequence(v) => v.join(", "),
        }
    }

    fn accepts(&self, answer: &str, kind: AnswerKind) -> bool {
        match self {
            Expected::OneOf(set) => {
                let set: BTreeSet<String> = set.iter().map(|s| canonicalize(s, kind)).collect();
                answer.split(" or ").all(|part| set.contains(&canonicalize(part, kind)))
            }
            Expected::Number(x) => canonicalize(answer, AnswerKind::Numeric) == format_number(*x),
            Expected::Mentions(frags) => {
                let a = answer.to_lowercase();
                !a.trim().is_empty() && frags.iter().all(|f| a.contains(&f.to_lowercase()))
            }
            Expected::Sequence(names) => {
                let got = split_sequence(answer);
                got.len() == names.len() && got.iter().zip(names).all(|(g, n)| g.eq_ignore_ascii_case(n))
            }
        }
    }
}

fn yes_no(b: bool) -> Expected {
    Expected::OneOf(vec![if b { "Yes" } else { "No" }.to_string()])
}

fn one(s: impl Into<String>) -> Expected {
    Expected::OneOf(vec![s.into()])
}

fn inapplicable(what: impl Into<String>) -> VerifyError {
    VerifyError::Inapplicable(what.into())
}

pub fn verify_record(record: &InstructionRecord, spec: &ScenarioSpec) -> Result<Verdict, VerifyError> {
    let generator = record.provenance.generator.as_str();
    if !GENERATORS.contains(&generator) {
        return Err(VerifyError::UnknownGenerator(generator.to_string()));
    }
    if generator != spec.generator() {
        return Err(VerifyError::GeneratorMismatch { record: generator.to_string(), spec: spec.generator().to_string() });
    }
    let expected = match (&record.provenance.query, spec) {
        (Query::Chart(q), ScenarioSpec::Chart(s)) => chart_oracle(s, q)?,
        (Query::Map(q), ScenarioSpec::Map(s)) => map_oracle(s, q)?,
        (Query::Dial(q), ScenarioSpec::Dial(s)) => dial_oracle(s, q)?,
        (Query::Tree(q), ScenarioSpec::Tree(s)) => tree_oracle(s, q)?,
        (Query::Flow(q), ScenarioSpec::Flow(s)) => flow_oracle(s, q)?,
        (Query::Puzzle(q), ScenarioSpec::Puzzle(s)) => puzzle_oracle(s, q)?,
        (Query::Layout(q), ScenarioSpec::Layout(s)) => layout_oracle(s, q)?,
        (q, _) => return Err(inapplicable(format!("{q:?}"))),
    };
    Ok(if expected.accepts(&record.answer, record.answer_kind) {
        Verdict::Ok
    } else {
        Verdict::Mismatch { expected: expected.describe(), got: record.answer.clone() }
    })
}

fn chart_part(spec: &ChartSpec, sub: Option<usize>) -> Result<&ChartSpec, VerifyError> {
    match sub {
        None => Ok(spec),
        Some(k) => spec.subcharts.get(k).ok_or_else(|| inapplicable(format!("no subchart {k}"))),
    }
}

fn series_values(spec: &ChartSpec, series: usize) -> Result<&[f64], VerifyError> {
    spec.series.get(series).map(|s| s.values.as_slice()).ok_or_else(|| inapplicable(format!("no series {series}")))
}

fn chart_oracle(spec: &ChartSpec, q: &ChartQuery) -> Result<Expected, VerifyError> {
    Ok(match q {
        ChartQuery::Title { sub } => one(chart_part(spec, *sub)?.topic.clone()),
        ChartQuery::AxisUnit { sub } => one(chart_part(spec, *sub)?.unit.clone()),
        ChartQuery::Caption => {
            let mut frags = vec![spec.topic.clone()];
            match spec.kind {
                ChartKind::Composite => frags.extend(spec.subcharts.iter().map(|s| s.topic.clone())),
                ChartKind::Pie => frags.extend(spec.categories.iter().cloned()),
                _ => frags.extend(spec.series.iter().map(|s| s.label.clone())),
            }
            Expected::Mentions(frags)
        }
        ChartQuery::CategoryCount { sub } => Expected::Number(chart_part(spec, *sub)?.categories.len() as f64),
        ChartQuery::RowCount => Expected::Number(spec.series.len() as f64),
        ChartQuery::SubchartCount => Expected::Number(spec.subcharts.len() as f64),
        ChartQuery::LegendPosition { sub } => {
            let pos = serde_json::to_value(chart_part(spec, *sub)?.legend_position).map_err(|e| inapplicable(e.to_string()))?;
            one(pos.as_str().unwrap_or_default())
        }
        ChartQuery::ArgMax { sub, series } => {
            let part = chart_part(spec, *sub)?;
            let values = series_values(part, *series)?;
            let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Expected::OneOf(part.categories.iter().zip(values).filter(|(_, v)| **v == best).map(|(c, _)| c.clone()).collect())
        }
        ChartQuery::SeriesColor { sub, series } => {
            let part = chart_part(spec, *sub)?;
            let label = &part.series.get(*series).ok_or_else(|| inapplicable("series"))?.label;
            one(part.palette_assignment.get(label).ok_or_else(|| inapplicable("series color"))?.name())
        }
        ChartQuery::CategoryColor { sub, category } => {
            let part = chart_part(spec, *sub)?;
            let cat = part.categories.get(*category).ok_or_else(|| inapplicable("category"))?;
            one(part.palette_assignment.get(cat).ok_or_else(|| inapplicable("category color"))?.name())
        }
        ChartQuery::Value { sub, series, category } => {
            let values = series_values(chart_part(spec, *sub)?, *series)?;
            Expected::Number(*values.get(*category).ok_or_else(|| inapplicable("category"))?)
        }
        ChartQuery::Range { sub, series } => {
            let values = series_values(chart_part(spec, *sub)?, *series)?;
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            Expected::Number(hi - lo)
        }
        ChartQuery::Total { sub, series } => Expected::Number(series_values(chart_part(spec, *sub)?, *series)?.iter().sum()),
        ChartQuery::Change { sub, series } => {
            let values = series_values(chart_part(spec, *sub)?, *series)?;
            Expected::Number(values[values.len() - 1] - values[0])
        }
        ChartQuery::PairSum { sub, series, a, b } => {
            let values = series_values(chart_part(spec, *sub)?, *series)?;
            let get = |i: usize| values.get(i).copied().ok_or_else(|| inapplicable("category"));
            Expected::Number(get(*a)? + get(*b)?)
        }
        ChartQuery::ColumnHeader { column } => one(spec.categories.get(*column).ok_or_else(|| inapplicable("column"))?.clone()),
        ChartQuery::ColumnSum { column } => {
            let mut total = 0.0;
            for s in &spec.series {
                total += s.values.get(*column).ok_or_else(|| inapplicable("column"))?;
            }
            Expected::Number(total)
        }
    })
}

fn map_oracle(spec: &RoadMapSpec, q: &MapQuery) -> Result<Expected, VerifyError> {
    let cells = &spec.gold.cells;
    let mut seen = BTreeSet::new();
    for (k, c) in cells.iter().enumerate() {
        let stepped = k == 0 || (c.0 - cells[k - 1].0).abs() + (c.1 - cells[k - 1].1).abs() == 1;
        if !spec.network.contains(c) || !seen.insert(*c) || !stepped {
            return Err(inapplicable("gold path is not a self-avoiding road walk"));
        }
    }
    let degree =
        |c: &(i32, i32)| [(-1, 0), (1, 0), (0, -1), (0, 1)].iter().filter(|(dr, dc)| spec.network.contains(&(c.0 + dr, c.1 + dc))).count();
    let names: BTreeMap<(i32, i32), &str> = spec.landmark_names.iter().map(|(c, n)| (*c, n.as_str())).collect();
    Ok(match q {
        MapQuery::Route => {
            let last = cells.len() - 1;
            let mut seq = Vec::new();
            for (k, c) in cells.iter().enumerate() {
                if k == 0 || k == last || degree(c) >= 3 {
                    seq.push(names.get(c).ok_or_else(|| inapplicable("unnamed landmark on route"))?.to_string());
                }
            }
            Expected::Sequence(seq)
        }
        MapQuery::IntersectionCount => Expected::Number(cells.iter().filter(|c| degree(c) >= 3).count() as f64),
    })
}

/// Spellings of a clock position given in minutes past midnight.
fn clock_spellings(total_minutes: u32) -> Vec<String> {
    let (h, m) = ((total_minutes / 60) % 12, total_minutes % 60);
    let dial = if h == 0 { 12 } else { h };
    vec![format!("{dial}:{m:02}"), format!("{h}:{m:02}"), format!("{}:{m:02}", h + 12)]
}

fn dial_oracle(spec: &DialSpec, q: &DialQuery) -> Result<Expected, VerifyError> {
    let t = spec.task.offset;
    Ok(match (&spec.reading, q) {
        (Reading::Time { hour, minute }, DialQuery::Reading) => {
            Expected::OneOf(clock_spellings(u32::from(*hour) * 60 + u32::from(*minute)))
        }
        (Reading::Time { hour, minute }, DialQuery::Offset) => {
            let later = u32::from(*hour) * 60 + u32::from(*minute) + (t as u32) * 60;
            Expected::OneOf(clock_spellings(later))
        }
        (Reading::Time { hour, minute }, DialQuery::Inverse) => {
            let half_day = 12 * 60;
            let now = (u32::from(*hour) % 12) * 60 + u32::from(*minute);
            let start = (now + half_day - spec.task.inverse_minutes % half_day) % half_day;
            // The hour hand sits on its number only on the hour.
            let h = if start / 60 == 0 { 12 } else { start / 60 };
            let mut numbers = vec![h.to_string()];
            if !start.is_multiple_of(60) {
                numbers.push((h % 12 + 1).to_string());
            }
            Expected::OneOf(numbers)
        }
        (Reading::Value { value }, DialQuery::Reading) => Expected::Number(*value),
        (Reading::Value { value }, DialQuery::ScaleArithmetic) => Expected::Number(match spec.family {
            DialFamily::Speedometer | DialFamily::Fuel => value * t,
            DialFamily::Thermometer => value + t,
            DialFamily::Barometer => value - t,
            DialFamily::Clock => return Err(inapplicable("clock with a numeric reading")),
        }),
        (_, q) => return Err(inapplicable(format!("{q:?} on a {:?} dial", spec.family))),
    })
}

struct TreeFacts {
    labels: Vec<String>,
    children: BTreeMap<String, Vec<String>>,
}

fn tree_facts(spec: &TreeSpec) -> TreeFacts {
    fn walk(parent: &str, kids: &[TreeNode], facts: &mut TreeFacts) {
        for k in kids {
            facts.labels.push(k.label.clone());
            facts.children.entry(parent.to_string()).or_default().push(k.label.clone());
            walk(&k.label, &k.children, facts);
        }
    }
    let mut facts = TreeFacts { labels: vec![spec.root_label.clone()], children: BTreeMap::new() };
    walk(&spec.root_label, &spec.children, &mut facts);
    facts
}

fn tree_oracle(spec: &TreeSpec, q: &TreeQuery) -> Result<Expected, VerifyError> {
    let facts = tree_facts(spec);
    let known = |n: &str| facts.labels.iter().any(|l| l == n);
    let kids = |n: &str| facts.children.get(n).map_or(0, Vec::len);
    Ok(match q {
        TreeQuery::FigureType => one(if spec.extra_edges.is_empty() { "organization chart" } else { "relation graph" }),
        TreeQuery::NodeColor { node } => one(spec.node_colors.get(node).ok_or_else(|| inapplicable("node color"))?.name()),
        TreeQuery::Exists { node } => yes_no(known(node)),
        TreeQuery::NodeCount => Expected::Number(facts.labels.len() as f64),
        TreeQuery::ChildCount { node } => Expected::Number(kids(node) as f64),
        TreeQuery::DescendantCount { node } => {
            let mut count = 0;
            let mut stack = vec![node.clone()];
            while let Some(n) = stack.pop() {
                for c in facts.children.get(&n).into_iter().flatten() {
                    count += 1;
                    stack.push(c.clone());
                }
            }
            Expected::Number(f64::from(count))
        }
        TreeQuery::EdgeCount => Expected::Number((facts.labels.len() - 1 + spec.extra_edges.len()) as f64),
        TreeQuery::Connected { a, b } => {
            let tree_link = |p: &str, c: &str| facts.children.get(p).is_some_and(|v| v.iter().any(|x| x == c));
            let extra = spec.extra_edges.iter().any(|(x, y)| (x == a && y == b) || (x == b && y == a));
            yes_no(tree_link(a, b) || tree_link(b, a) || extra)
        }
    })
}

fn flow_oracle(spec: &FlowSpec, q: &FlowQuery) -> Result<Expected, VerifyError> {
    let find = |label: &str| spec.nodes.iter().position(|n| n.label == label).ok_or_else(|| inapplicable(format!("no step `{label}`")));
    Ok(match q {
        FlowQuery::FigureType => one("flowchart"),
        FlowQuery::StepColor { step } => one(spec.colors.get(step).ok_or_else(|| inapplicable("step color"))?.name()),
        FlowQuery::NextStep { step } => {
            let i = find(step)?;
            Expected::OneOf(spec.edges.iter().filter(|e| e.from == i).map(|e| spec.nodes[e.to].label.clone()).collect())
        }
        FlowQuery::Branch { decision, label } => {
            let i = find(decision)?;
            let e = spec
                .edges
                .iter()
                .find(|e| e.from == i && e.label.as_deref() == Some(label.as_str()))
                .ok_or_else(|| inapplicable("branch label"))?;
            one(spec.nodes[e.to].label.clone())
        }
        FlowQuery::DecisionCount => Expected::Number(spec.nodes.iter().filter(|n| n.shape == StepShape::Decision).count() as f64),
    })
}

/// The panel after `steps` applications of the rule, computed in closed form.
fn panel_after(rule: &PatternRule, steps: usize) -> Panel {
    let mut p = rule.first.clone();
    match &rule.transform_per_step {
        Transform::Rotate { degrees } => p.rotation = (p.rotation + degrees * steps as f64).rem_euclid(360.0),
        Transform::Count { step } => p.count += step * steps as u32,
        Transform::Scale { factor } => p.size *= factor.powi(steps as i32),
        Transform::ColorCycle { colors } => {
            let k = colors.iter().position(|c| *c == p.color).unwrap_or(0);
            p.color = colors[(k + steps) % colors.len()];
        }
    }
    p
}

fn same_panel(a: &Panel, b: &Panel) -> bool {
    let turn = (a.rotation - b.rotation).rem_euclid(360.0);
    let rotation_matches = a.glyph != Glyph::Arrow || turn.min(360.0 - turn) < 1e-6;
    a.glyph == b.glyph && a.count == b.count && a.color == b.color && (a.size - b.size).abs() < 1e-6 && rotation_matches
}

fn puzzle_oracle(spec: &PuzzleSpec, q: &PuzzleQuery) -> Result<Expected, VerifyError> {
    Ok(match (spec, q) {
        (PuzzleSpec::Induction(rule), PuzzleQuery::NextPanel) => {
            let next = panel_after(rule, rule.steps_shown);
            let letters: Vec<String> = rule
                .options
                .iter()
                .enumerate()
                .filter(|(_, o)| same_panel(o, &next))
                .map(|(i, _)| char::from(b'A' + i as u8).to_string())
                .collect();
            if letters.len() != 1 {
                return Err(inapplicable(format!("{} options match the rule", letters.len())));
            }
            Expected::OneOf(letters)
        }
        (PuzzleSpec::Comparison(pair), PuzzleQuery::DiffCount) => {
            Expected::Number(pair.base_panel.iter().zip(&pair.variant_panel).filter(|(a, b)| a != b).count() as f64)
        }
        (PuzzleSpec::Comparison(pair), PuzzleQuery::DiffDescribe) => {
            let changed: BTreeSet<(u32, u32)> =
                pair.base_panel.iter().zip(&pair.variant_panel).filter(|(a, b)| a != b).map(|(a, _)| a.cell).collect();
            Expected::OneOf(pair.diff_manifest.iter().filter(|d| changed.contains(&d.cell)).map(|d| d.descriptor.clone()).collect())
        }
        (_, q) => return Err(inapplicable(format!("{q:?} on a {} puzzle", spec.subtype()))),
    })
}

fn layout_oracle(spec: &FloorPlanSpec, q: &LayoutQuery) -> Result<Expected, VerifyError> {
    let area = |i: usize| {
        let r = &spec.rooms[i].rect;
        (r.x_max - r.x_min) * (r.y_max - r.y_min)
    };
    let extreme = |pool: Vec<usize>, sign: f64| -> Expected {
        let best = pool.iter().map(|&i| sign * area(i)).fold(f64::NEG_INFINITY, f64::max);
        Expected::OneOf(pool.into_iter().filter(|&i| (sign * area(i) - best).abs() < 1e-6).map(|i| spec.rooms[i].name.clone()).collect())
    };
    let find = |name: &str| spec.rooms.iter().position(|r| r.name == name).ok_or_else(|| inapplicable(format!("no room `{name}`")));
    let all: Vec<usize> = (0..spec.rooms.len()).collect();
    Ok(match q {
        LayoutQuery::Largest => extreme(all, 1.0),
        LayoutQuery::Smallest => extreme(all, -1.0),
        LayoutQuery::LargestBedroom => {
            let beds: Vec<usize> = all.into_iter().filter(|&i| spec.rooms[i].name.to_lowercase().contains("bedroom")).collect();
            if beds.is_empty() {
                return Err(inapplicable("no bedrooms"));
            }
            extreme(beds, 1.0)
        }
        LayoutQuery::RoomCount => Expected::Number(spec.rooms.len() as f64),
        LayoutQuery::Contains { room, fixture } => yes_no(spec.rooms[find(room)?].fixtures.contains(fixture)),
        LayoutQuery::Adjacent { a, b } => {
            let (ra, rb) = (spec.rooms[find(a)?].rect, spec.rooms[find(b)?].rect);
            let overlap = |lo1: f64, hi1: f64, lo2: f64, hi2: f64| hi1.min(hi2) - lo1.max(lo2) > 1e-6;
            let touch = |x: f64, y: f64| (x - y).abs() < 1e-6;
            let side = (touch(ra.x_max, rb.x_min) || touch(rb.x_max, ra.x_min)) && overlap(ra.y_min, ra.y_max, rb.y_min, rb.y_max);
            let stacked = (touch(ra.y_max, rb.y_min) || touch(rb.y_max, ra.y_min)) && overlap(ra.x_min, ra.x_max, rb.x_min, rb.x_max);
            yes_no(side || stacked)
        }
    })
}
