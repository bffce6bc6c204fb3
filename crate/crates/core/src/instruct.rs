//! Scenario dispatch, answer canonicalization, self-consistency voting,
//! review sampling and split assignment.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use rand::Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chart::{build_chart_scene, chart_questions, sample_chart_spec, ChartKind, ChartSpec};
use crate::diagram::{
    flow_questions, layout_flow, layout_tree, sample_flow_spec, sample_relation_graph, tree_questions, FlowSpec, TreeSpec,
};
use crate::gauge::{build_dial_scene, dial_questions, sample_dial_spec, DialSpec};
use crate::keywords::KeywordLibrary;
use crate::layout::{build_layout_scene, layout_questions, sample_floorplan, FloorPlanSpec};
use crate::map::{build_map_scene, generate_map, map_questions, RoadMapSpec, WalkParams};
use crate::puzzle::{build_puzzle_scene, puzzle_questions, sample_puzzle, PuzzleSpec};
use crate::record::{AnswerKind, Draft, Manifest, Scenario, Split};
use crate::scene::SceneGraph;
use crate::synth::{self, format_number, GenError, LayoutParams};

pub const GENERATORS: [&str; 5] = ["chart-gen", "map-gen", "gauge-gen", "diagram-gen", "puzzle-layout-gen"];

/// The full specification an image was rendered from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "spec", rename_all = "snake_case")]
pub enum ScenarioSpec {
    Chart(ChartSpec),
    Map(RoadMapSpec),
    Dial(DialSpec),
    Tree(TreeSpec),
    Flow(FlowSpec),
    Puzzle(PuzzleSpec),
    Layout(FloorPlanSpec),
}

impl ScenarioSpec {
    pub fn generator(&self) -> &'static str {
        match self {
            ScenarioSpec::Chart(_) => "chart-gen",
            ScenarioSpec::Map(_) => "map-gen",
            ScenarioSpec::Dial(_) => "gauge-gen",
            ScenarioSpec::Tree(_) | ScenarioSpec::Flow(_) => "diagram-gen",
            ScenarioSpec::Puzzle(_) | ScenarioSpec::Layout(_) => "puzzle-layout-gen",
        }
    }

    pub fn subtype(&self) -> Option<String> {
        match self {
            ScenarioSpec::Chart(c) => Some(c.kind.tag().to_string()),
            ScenarioSpec::Map(_) => None,
            ScenarioSpec::Dial(d) => Some(d.family.tag().to_string()),
            ScenarioSpec::Tree(t) => Some(if t.is_tree() { "organization_chart" } else { "relation_graph" }.to_string()),
            ScenarioSpec::Flow(f) => Some(serde_json::to_value(f.kind).ok()?.as_str()?.to_string()),
            ScenarioSpec::Puzzle(p) => Some(p.subtype().to_string()),
            ScenarioSpec::Layout(l) => Some(serde_json::to_value(l.style).ok()?.as_str()?.to_string()),
        }
    }

    pub fn build_scene(&self, layout: &LayoutParams) -> Result<SceneGraph, GenError> {
        match self {
            ScenarioSpec::Chart(s) => build_chart_scene(s, layout),
            ScenarioSpec::Map(s) => build_map_scene(s, layout),
            ScenarioSpec::Dial(s) => build_dial_scene(s, layout),
            ScenarioSpec::Tree(s) => layout_tree(s, layout),
            ScenarioSpec::Flow(s) => layout_flow(s, layout),
            ScenarioSpec::Puzzle(s) => build_puzzle_scene(s, layout),
            ScenarioSpec::Layout(s) => build_layout_scene(s, layout),
        }
    }

    pub fn questions(&self) -> Vec<Draft> {
        match self {
            ScenarioSpec::Chart(s) => chart_questions(s),
            ScenarioSpec::Map(s) => map_questions(s),
            ScenarioSpec::Dial(s) => dial_questions(s),
            ScenarioSpec::Tree(s) => tree_questions(s),
            ScenarioSpec::Flow(s) => flow_questions(s),
            ScenarioSpec::Puzzle(s) => puzzle_questions(s),
            ScenarioSpec::Layout(s) => layout_questions(s),
        }
    }
}

const CHART_KINDS: [ChartKind; 4] = [ChartKind::Line, ChartKind::Bar, ChartKind::Pie, ChartKind::Composite];

/// Draws the spec for one image of a scenario.
pub fn sample_spec(scenario: Scenario, seed: u64, library: &KeywordLibrary, walk: &WalkParams) -> Result<ScenarioSpec, GenError> {
    Ok(match scenario {
        Scenario::Chart => {
            let kind = *synth::pick(&mut synth::rng(seed, "chart-kind"), &CHART_KINDS);
            ScenarioSpec::Chart(sample_chart_spec(seed, Some(kind), library))
        }
        Scenario::Table => ScenarioSpec::Chart(sample_chart_spec(seed, Some(ChartKind::Table), library)),
        Scenario::RoadMap => ScenarioSpec::Map(generate_map(seed, walk)?),
        Scenario::RelationGraph => ScenarioSpec::Tree(sample_relation_graph(seed, 3)),
        Scenario::Flowchart => ScenarioSpec::Flow(sample_flow_spec(seed, None)),
        Scenario::VisualPuzzle => ScenarioSpec::Puzzle(sample_puzzle(seed, None)),
        Scenario::Dashboard => ScenarioSpec::Dial(sample_dial_spec(seed, None)),
        Scenario::PlanarLayout => ScenarioSpec::Layout(sample_floorplan(seed, None)),
    })
}

static TIME: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(\d{1,2}):(\d{2})\s*(a\.?m\.?|p\.?m\.?)?$").expect("valid regex"));
static NUMBER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"-?\d[\d,]*(?:\.\d+)?|-?\.\d+").expect("valid regex"));

fn normalize_time(s: &str) -> Option<String> {
    let caps = TIME.captures(s)?;
    let mut h: u32 = caps[1].parse().ok()?;
    let m: u32 = caps[2].parse().ok()?;
    if h > 23 || m > 59 {
        return None;
    }
    match caps.get(3).map(|x| x.as_str().starts_with('p')) {
        Some(true) if h < 12 => h += 12,
        Some(false) if h == 12 => h = 0,
        _ => {}
    }
    Some(format!("{h}:{m:02}"))
}

/// Every number in `text`, in order of appearance. Thousands separators are
/// dropped.
pub fn numbers_in(text: &str) -> Vec<f64> {
    NUMBER.find_iter(text).filter_map(|m| m.as_str().replace(',', "").parse().ok()).collect()
}

/// Trim, case-fold and collapse whitespace. Times become 24-hour `H:MM`
/// when a meridiem is given, plain numbers are reformatted, and numeric
/// answers lose their units.
pub fn canonicalize(answer: &str, kind: AnswerKind) -> String {
    let mut s = answer.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    while s.ends_with('.') && !s.ends_with("..") {
        s.pop();
    }
    if let Some(t) = normalize_time(&s) {
        return t;
    }
    if let Ok(v) = s.replace(',', "").parse::<f64>() {
        return format_number(v);
    }
    if kind == AnswerKind::Numeric {
        if let [v] = numbers_in(&s)[..] {
            return format_number(v);
        }
    }
    s
}

#[derive(Debug, Error, PartialEq)]
pub enum VoteError {
    #[error("voting needs at least 3 candidates, got {0}")]
    TooFewCandidates(usize),
}

/// Modal answer after canonicalization with its support. Ties go to the
/// class seen first; the winner is reported in its first raw spelling.
pub fn vote_select<S: AsRef<str>>(candidates: &[S]) -> Result<(String, usize), VoteError> {
    if candidates.len() < 3 {
        return Err(VoteError::TooFewCandidates(candidates.len()));
    }
    let mut classes: Vec<(String, String, usize)> = Vec::new();
    for c in candidates {
        let key = canonicalize(c.as_ref(), AnswerKind::Phrase);
        match classes.iter_mut().find(|(k, _, _)| *k == key) {
            Some(entry) => entry.2 += 1,
            None => classes.push((key, c.as_ref().trim().to_string(), 1)),
        }
    }
    let mut best = 0;
    for (i, c) in classes.iter().enumerate() {
        if c.2 > classes[best].2 {
            best = i;
        }
    }
    let (_, raw, n) = classes.swap_remove(best);
    Ok((raw, n))
}

#[derive(Debug, Error, PartialEq)]
pub enum ReviewError {
    #[error("review fraction must lie in (0, 1], got {0}")]
    Fraction(f64),
}

/// Stratified sample: `ceil(fraction × n)` ids from each scenario, chosen by
/// a seeded hash of the id.
pub fn sample_for_review(manifest: &Manifest, fraction: f64, seed: u64) -> Result<Vec<String>, ReviewError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(ReviewError::Fraction(fraction));
    }
    let mut by_scenario: BTreeMap<Scenario, Vec<&str>> = BTreeMap::new();
    for r in &manifest.records {
        by_scenario.entry(r.scenario).or_default().push(&r.id);
    }
    let mut out = Vec::new();
    for ids in by_scenario.values_mut() {
        let take = ((fraction * ids.len() as f64) - 1e-9).ceil() as usize;
        ids.sort_by_key(|id| (synth::mix(seed, synth::fnv(id)), *id));
        out.extend(ids[..take].iter().map(|s| s.to_string()));
    }
    Ok(out)
}

/// Seed-hashed split: the same id and seed always land on the same side.
pub fn assign_split(id: &str, seed: u64, test_ratio: f64) -> Split {
    let mut rng = synth::rng(synth::mix(seed, synth::fnv(id)), "split");
    if rng.gen::<f64>() < test_ratio {
        Split::Test
    } else {
        Split::Train
    }
}
