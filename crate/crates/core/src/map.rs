//! Road maps from a self-avoiding biased random walk, with distractor
//! branches, named landmarks and difficulty levels.
//!
//! The walk never steps onto a cell that touches an earlier path cell other
//! than its predecessor, and branches obey the same rule against the whole
//! network. The road network is therefore a tree of one-cell-wide streets, so
//! the gold route is the only route between its endpoints.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::keywords::STREET_NAMES;
use crate::record::{AnswerKind, Draft, Query};
use crate::scene::{Canvas, PaletteColor, Primitive, Rgb, SceneBuilder, SceneGraph, StyleSpec, TextAnchor};
use crate::synth::{self, pick_distinct, GenError, LayoutParams, SeededRng};

/// (row, column); row 0 is the top of the map.
pub type Cell = (i32, i32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Up, Direction::Down, Direction::Left, Direction::Right];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::Up => (-1, 0),
            Direction::Down => (1, 0),
            Direction::Left => (0, -1),
            Direction::Right => (0, 1),
        }
    }

    pub fn compass(self) -> &'static str {
        match self {
            Direction::Up => "north",
            Direction::Down => "south",
            Direction::Left => "west",
            Direction::Right => "east",
        }
    }

    fn between(a: Cell, b: Cell) -> Option<Direction> {
        Direction::ALL.into_iter().find(|d| step(a, *d) == b)
    }
}

fn step(c: Cell, d: Direction) -> Cell {
    let (dr, dc) = d.delta();
    (c.0 + dr, c.1 + dc)
}

fn neighbors(c: Cell) -> impl Iterator<Item = Cell> {
    Direction::ALL.into_iter().map(move |d| step(c, d))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WalkParams {
    /// (rows, cols)
    pub grid_size: (u32, u32),
    /// Weights for up, down, left, right.
    pub direction_probs: [f64; 4],
    pub turn_prob: f64,
    pub max_steps: u32,
    pub obstacle_density: f64,
    /// Distractor branches grown off the road network after the walk.
    pub distractor_branches: u32,
}

impl Default for WalkParams {
    fn default() -> Self {
        WalkParams {
            grid_size: (10, 14),
            direction_probs: [0.25; 4],
            turn_prob: 0.35,
            max_steps: 24,
            obstacle_density: 0.1,
            distractor_branches: 4,
        }
    }
}

impl WalkParams {
    pub fn check(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::InvalidSpec(m.to_string()));
        let (rows, cols) = self.grid_size;
        if rows == 0 || cols == 0 {
            return bad("grid must be non-empty");
        }
        if self.direction_probs.iter().any(|p| !p.is_finite() || *p < 0.0) || (self.direction_probs.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return bad("direction probabilities must be non-negative and sum to 1");
        }
        if !(0.0..=1.0).contains(&self.turn_prob) {
            return bad("turn_prob outside [0, 1]");
        }
        if !(0.0..=0.4).contains(&self.obstacle_density) {
            return bad("obstacle_density outside [0, 0.4]");
        }
        if self.max_steps == 0 || u64::from(self.max_steps) > u64::from(rows) * u64::from(cols) {
            return bad("max_steps must be in 1..=rows*cols");
        }
        if self.distractor_branches as usize + 2 > STREET_NAMES.len() {
            return bad("too many branches for the street-name list");
        }
        Ok(())
    }

    fn in_grid(&self, c: Cell) -> bool {
        c.0 >= 0 && c.1 >= 0 && c.0 < self.grid_size.0 as i32 && c.1 < self.grid_size.1 as i32
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathTrace {
    pub cells: Vec<Cell>,
    pub turns: u32,
    pub intersections: u32,
    pub landmarks: Vec<String>,
}

impl PathTrace {
    /// Consecutive cells 4-adjacent and no cell repeated.
    pub fn check(&self) -> Result<(), String> {
        let mut seen = BTreeSet::new();
        for (k, c) in self.cells.iter().enumerate() {
            if !seen.insert(*c) {
                return Err(format!("cell {c:?} repeated"));
            }
            if k > 0 && Direction::between(self.cells[k - 1], *c).is_none() {
                return Err(format!("cells {:?} and {c:?} are not adjacent", self.cells[k - 1]));
            }
        }
        if count_turns(&self.cells) != self.turns {
            return Err("turn count inconsistent with cells".into());
        }
        Ok(())
    }
}

pub fn count_turns(cells: &[Cell]) -> u32 {
    let dirs: Vec<Option<Direction>> = cells.windows(2).map(|w| Direction::between(w[0], w[1])).collect();
    dirs.windows(2).filter(|w| w[0] != w[1]).count() as u32
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadMapSpec {
    pub seed: u64,
    pub params: WalkParams,
    pub network: BTreeSet<Cell>,
    pub obstacles: BTreeSet<Cell>,
    pub start: Cell,
    pub end: Cell,
    pub gold: PathTrace,
    /// Start, every intersection on the gold route, and end, each with a unique name.
    pub landmark_names: Vec<(Cell, String)>,
    pub difficulty: u8,
}

impl RoadMapSpec {
    pub fn check(&self) -> Result<(), GenError> {
        let bad = |m: String| Err(GenError::InvalidSpec(m));
        self.params.check()?;
        if self.start == self.end {
            return bad("start equals end".into());
        }
        self.gold.check().map_err(GenError::InvalidSpec)?;
        if self.gold.cells.first() != Some(&self.start) || self.gold.cells.last() != Some(&self.end) {
            return bad("gold route does not join start and end".into());
        }
        if let Some(c) = self.gold.cells.iter().find(|c| !self.network.contains(c)) {
            return bad(format!("gold cell {c:?} is off the network"));
        }
        if let Some(c) = self.obstacles.iter().find(|c| self.network.contains(c)) {
            return bad(format!("obstacle {c:?} on the network"));
        }
        let names: BTreeSet<&str> = self.landmark_names.iter().map(|(_, n)| n.as_str()).collect();
        if names.len() != self.landmark_names.len() {
            return bad("landmark names repeat".into());
        }
        Ok(())
    }

    pub fn degree(&self, c: Cell) -> usize {
        neighbors(c).filter(|n| self.network.contains(n)).count()
    }

    pub fn name_of(&self, c: Cell) -> Option<&str> {
        self.landmark_names.iter().find(|(k, _)| *k == c).map(|(_, n)| n.as_str())
    }
}

/// `1 + min(4, (turns + intersections) / 2)`.
pub fn classify_difficulty(gold: &PathTrace) -> u8 {
    1 + ((gold.turns + gold.intersections) / 2).min(4) as u8
}

const MAX_ATTEMPTS: u32 = 20;

fn sample_direction(rng: &mut SeededRng, probs: &[f64; 4], allowed: &[Direction]) -> Option<Direction> {
    if allowed.is_empty() {
        return None;
    }
    let weights: Vec<f64> = allowed.iter().map(|d| probs[Direction::ALL.iter().position(|x| x == d).unwrap()]).collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Some(allowed[rng.gen_range(0..allowed.len())]);
    }
    let mut x = rng.gen::<f64>() * total;
    for (d, w) in allowed.iter().zip(&weights) {
        if x < *w {
            return Some(*d);
        }
        x -= w;
    }
    allowed.iter().zip(&weights).rev().find(|(_, w)| **w > 0.0).map(|(d, _)| *d)
}

/// A cell may join the network if it is free and touches no network cell
/// other than `from`.
fn can_extend(params: &WalkParams, obstacles: &BTreeSet<Cell>, network: &BTreeSet<Cell>, from: Cell, to: Cell) -> bool {
    params.in_grid(to) && !obstacles.contains(&to) && !network.contains(&to) && neighbors(to).all(|n| n == from || !network.contains(&n))
}

fn walk(rng: &mut SeededRng, params: &WalkParams) -> (BTreeSet<Cell>, Vec<Cell>) {
    let (rows, cols) = (params.grid_size.0 as i32, params.grid_size.1 as i32);
    let mut obstacles = BTreeSet::new();
    for r in 0..rows {
        for c in 0..cols {
            if rng.gen_bool(params.obstacle_density) {
                obstacles.insert((r, c));
            }
        }
    }
    let free: Vec<Cell> = (0..rows).flat_map(|r| (0..cols).map(move |c| (r, c))).filter(|c| !obstacles.contains(c)).collect();
    if free.is_empty() {
        return (obstacles, vec![]);
    }
    let start = free[rng.gen_range(0..free.len())];
    let mut path = vec![start];
    let mut visited: BTreeSet<Cell> = [start].into();
    let Some(mut dir) = sample_direction(rng, &params.direction_probs, &Direction::ALL) else {
        return (obstacles, path);
    };
    for _ in 0..params.max_steps {
        let here = *path.last().unwrap();
        if path.len() > 1 && rng.gen_bool(params.turn_prob) {
            dir = sample_direction(rng, &params.direction_probs, &Direction::ALL).unwrap_or(dir);
        }
        if !can_extend(params, &obstacles, &visited, here, step(here, dir)) {
            if params.turn_prob == 0.0 && path.len() > 1 {
                break;
            }
            let open: Vec<Direction> =
                Direction::ALL.into_iter().filter(|d| can_extend(params, &obstacles, &visited, here, step(here, *d))).collect();
            match sample_direction(rng, &params.direction_probs, &open) {
                Some(d) => dir = d,
                None => break,
            }
        }
        let next = step(here, dir);
        path.push(next);
        visited.insert(next);
    }
    (obstacles, path)
}

fn grow_branches(rng: &mut SeededRng, params: &WalkParams, obstacles: &BTreeSet<Cell>, network: &mut BTreeSet<Cell>, path: &[Cell]) {
    let (rows, cols) = (params.grid_size.0 as i32, params.grid_size.1 as i32);
    let endpoints = [path[0], path[path.len() - 1]];
    for _ in 0..params.distractor_branches {
        // A few tries per branch to find a target that can actually be reached.
        for _ in 0..8 {
            let target = (rng.gen_range(0..rows), rng.gen_range(0..cols));
            if network.contains(&target) || obstacles.contains(&target) {
                continue;
            }
            let dist = |c: &Cell| (c.0 - target.0).abs() + (c.1 - target.1).abs();
            let Some(root) = network.iter().filter(|c| !endpoints.contains(c)).min_by_key(|c| (dist(c), **c)).copied() else {
                return;
            };
            let max_len = rng.gen_range(2..=5);
            let mut here = root;
            let mut added = Vec::new();
            while added.len() < max_len && here != target {
                let dr = (target.0 - here.0).signum();
                let dc = (target.1 - here.1).signum();
                let mut options = Vec::new();
                if dr != 0 {
                    options.push((here.0 + dr, here.1));
                }
                if dc != 0 {
                    options.push((here.0, here.1 + dc));
                }
                if options.len() == 2 && rng.gen_bool(0.5) {
                    options.swap(0, 1);
                }
                let Some(next) = options.into_iter().find(|n| can_extend(params, obstacles, network, here, *n)) else {
                    break;
                };
                network.insert(next);
                added.push(next);
                here = next;
            }
            if !added.is_empty() {
                break;
            }
        }
    }
}

fn trace_from(path: Vec<Cell>, network: &BTreeSet<Cell>) -> PathTrace {
    let degree = |c: Cell| neighbors(c).filter(|n| network.contains(n)).count();
    let intersections = path.iter().filter(|c| degree(**c) >= 3).count() as u32;
    PathTrace { turns: count_turns(&path), intersections, cells: path, landmarks: vec![] }
}

pub fn generate_map(seed: u64, params: &WalkParams) -> Result<RoadMapSpec, GenError> {
    params.check()?;
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = synth::rng(synth::mix(seed, u64::from(attempt)), "map");
        let (obstacles, path) = walk(&mut rng, params);
        if path.len() < 3 {
            continue;
        }
        let mut network: BTreeSet<Cell> = path.iter().copied().collect();
        grow_branches(&mut rng, params, &obstacles, &mut network, &path);
        let mut gold = trace_from(path, &network);
        let (start, end) = (gold.cells[0], *gold.cells.last().unwrap());
        let landmark_cells: Vec<Cell> = gold
            .cells
            .iter()
            .copied()
            .filter(|c| *c == start || *c == end || neighbors(*c).filter(|n| network.contains(n)).count() >= 3)
            .collect();
        let names = pick_distinct(&mut rng, STREET_NAMES, landmark_cells.len());
        let landmark_names: Vec<(Cell, String)> = landmark_cells.into_iter().zip(names.into_iter().map(String::from)).collect();
        gold.landmarks = landmark_names.iter().map(|(_, n)| n.clone()).collect();
        let difficulty = classify_difficulty(&gold);
        return Ok(RoadMapSpec { seed, params: params.clone(), network, obstacles, start, end, gold, landmark_names, difficulty });
    }
    Err(GenError::DegenerateMap { attempts: MAX_ATTEMPTS })
}

const MARGIN: f64 = 24.0;
const ROAD: Rgb = Rgb(150, 150, 150);
const BLOCK: Rgb = Rgb(200, 230, 190);

pub fn build_map_scene(spec: &RoadMapSpec, layout: &LayoutParams) -> Result<SceneGraph, GenError> {
    spec.check()?;
    let canvas = Canvas::default();
    let (rows, cols) = (f64::from(spec.params.grid_size.0), f64::from(spec.params.grid_size.1));
    let cell = ((f64::from(canvas.width) - 2.0 * MARGIN) / cols).min((f64::from(canvas.height) - 2.0 * MARGIN) / rows);
    let font = layout.font_size;
    if cell < 1.6 * font {
        return Err(GenError::LayoutOverflow(format!("map cell of {cell:.1} units is too small for {font}pt labels")));
    }
    let x0 = (f64::from(canvas.width) - cell * cols) / 2.0;
    let y0 = (f64::from(canvas.height) - cell * rows) / 2.0;
    let center = |c: Cell| (x0 + (f64::from(c.1) + 0.5) * cell, y0 + (f64::from(c.0) + 0.5) * cell);

    let mut sb = SceneBuilder::new(canvas);
    for c in &spec.obstacles {
        let (x, y) = (x0 + f64::from(c.1) * cell, y0 + f64::from(c.0) * cell);
        sb.push_role("block", Primitive::rect(x + 2.0, y + 2.0, cell - 4.0, cell - 4.0, StyleSpec::fill(BLOCK)).at_z(-2));
    }
    sb.declare_role("block");
    let road = StyleSpec::stroke(ROAD, cell * 0.3);
    for &c in &spec.network {
        for d in [Direction::Right, Direction::Down] {
            let n = step(c, d);
            if spec.network.contains(&n) {
                let (a, b) = (center(c), center(n));
                sb.push_role("road", Primitive::line(a.0, a.1, b.0, b.1, road.clone()).at_z(-1));
            }
        }
    }
    let r = cell * 0.22;
    for (c, name) in &spec.landmark_names {
        let (x, y) = center(*c);
        let marker = if *c == spec.start {
            sb.push_role(
                "start_marker",
                Primitive::circle(x, y, r * 1.3, StyleSpec::filled_outline(PaletteColor::Green, Rgb::BLACK, 1.0)).at_z(2),
            )
        } else if *c == spec.end {
            let s = r * 2.4;
            sb.push_role(
                "end_marker",
                Primitive::rect(x - s / 2.0, y - s / 2.0, s, s, StyleSpec::filled_outline(PaletteColor::Red, Rgb::BLACK, 1.0)).at_z(2),
            )
        } else {
            sb.push_role("landmark", Primitive::circle(x, y, r, StyleSpec::filled_outline(PaletteColor::Yellow, Rgb::BLACK, 1.0)).at_z(2))
        };
        sb.tag("landmark_marker", marker);
        // Label sits above-right of the marker, flipped inward at the edges.
        let w = crate::scene::text_extent(name, font).0;
        let (mut lx, mut anchor) = (x + r + 2.0, TextAnchor::Start);
        if lx + w > f64::from(canvas.width) - 2.0 {
            lx = x - r - 2.0;
            anchor = TextAnchor::End;
        }
        let ly = (y - r - font).max(1.0);
        sb.push_role("landmark_label", Primitive::text(lx, ly, name.clone(), anchor, StyleSpec::text(Rgb::BLACK, font)).at_z(5));
    }
    sb.declare_role("landmark");
    Ok(sb.finish()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "ask", rename_all = "snake_case")]
pub enum MapQuery {
    Route,
    IntersectionCount,
}

/// Direction runs along `cells`, e.g. `[(east, 3), (north, 1)]`.
fn runs(cells: &[Cell]) -> Vec<(Direction, usize)> {
    let mut out: Vec<(Direction, usize)> = Vec::new();
    for w in cells.windows(2) {
        let d = Direction::between(w[0], w[1]).expect("adjacent cells");
        match out.last_mut() {
            Some((last, n)) if *last == d => *n += 1,
            _ => out.push((d, 1)),
        }
    }
    out
}

fn blocks(n: usize) -> String {
    if n == 1 {
        "1 block".into()
    } else {
        format!("{n} blocks")
    }
}

pub fn route_rationale(spec: &RoadMapSpec) -> String {
    let marks: BTreeMap<Cell, &str> = spec.landmark_names.iter().map(|(c, n)| (*c, n.as_str())).collect();
    let mut parts = vec![format!("Start at {}.", marks[&spec.start])];
    let mut from = 0;
    for (k, c) in spec.gold.cells.iter().enumerate().skip(1) {
        if let Some(name) = marks.get(c) {
            let moves: Vec<String> =
                runs(&spec.gold.cells[from..=k]).into_iter().map(|(d, n)| format!("{} {}", d.compass(), blocks(n))).collect();
            parts.push(format!("Go {} to reach {name}.", moves.join(", then ")));
            from = k;
        }
    }
    parts.join(" ")
}

pub fn map_instruction(spec: &RoadMapSpec) -> Draft {
    let names = &spec.gold.landmarks;
    let mut d = Draft::new(
        format!(
            "Starting at {}, describe the route to {}. List every labeled landmark you pass in order, including the start and the destination.",
            names[0],
            names[names.len() - 1]
        ),
        names.join(", "),
        AnswerKind::LandmarkSequence,
        "navigation",
        Query::Map(MapQuery::Route),
    )
    .with_rationale(route_rationale(spec));
    d.difficulty = Some(spec.difficulty);
    d
}

pub fn map_questions(spec: &RoadMapSpec) -> Vec<Draft> {
    let names = &spec.gold.landmarks;
    let mut count = Draft::new(
        format!("How many intersections does the route from {} to {} pass through?", names[0], names[names.len() - 1]),
        spec.gold.intersections.to_string(),
        AnswerKind::Numeric,
        "perception",
        Query::Map(MapQuery::IntersectionCount),
    );
    count.difficulty = Some(spec.difficulty);
    vec![map_instruction(spec), count]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trace(turns: u32, intersections: u32) -> PathTrace {
        PathTrace { cells: vec![], turns, intersections, landmarks: vec![] }
    }

    #[test]
    fn difficulty_formula() {
        assert_eq!(classify_difficulty(&trace(0, 0)), 1);
        assert_eq!(classify_difficulty(&trace(2, 2)), 3);
        assert_eq!(classify_difficulty(&trace(5, 4)), 5);
        assert_eq!(classify_difficulty(&trace(1, 0)), 1);
    }

    #[test]
    fn straight_walk_without_turns_is_level_one() {
        let params = WalkParams { turn_prob: 0.0, obstacle_density: 0.0, distractor_branches: 0, ..WalkParams::default() };
        for seed in 0..50 {
            let m = generate_map(seed, &params).unwrap();
            assert_eq!(m.gold.turns, 0);
            assert_eq!(m.difficulty, 1);
            let rows: BTreeSet<i32> = m.gold.cells.iter().map(|c| c.0).collect();
            let cols: BTreeSet<i32> = m.gold.cells.iter().map(|c| c.1).collect();
            assert!(rows.len() == 1 || cols.len() == 1);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let p = WalkParams::default();
        assert_eq!(generate_map(42, &p).unwrap(), generate_map(42, &p).unwrap());
    }

    #[test]
    fn boxed_in_params_are_degenerate() {
        let params = WalkParams { grid_size: (1, 2), max_steps: 2, distractor_branches: 0, ..WalkParams::default() };
        assert_eq!(generate_map(1, &params), Err(GenError::DegenerateMap { attempts: 20 }));
    }

    #[test]
    fn invalid_params_rejected() {
        let p = WalkParams { direction_probs: [0.5, 0.5, 0.5, 0.0], ..WalkParams::default() };
        assert!(p.check().is_err());
        let p = WalkParams { obstacle_density: 0.5, ..WalkParams::default() };
        assert!(p.check().is_err());
    }

    #[test]
    fn scene_labels_each_landmark_once() {
        let spec = generate_map(3, &WalkParams::default()).unwrap();
        let scene = build_map_scene(&spec, &LayoutParams::default()).unwrap();
        assert_eq!(scene.role("landmark_label").unwrap().len(), spec.landmark_names.len());
        let start = scene.role_primitives("start_marker").next().unwrap();
        let end = scene.role_primitives("end_marker").next().unwrap();
        assert_ne!(start.kind(), end.kind());
        assert_ne!(start.style.fill, end.style.fill);
    }

    #[test]
    fn rationale_names_every_landmark() {
        let spec = generate_map(9, &WalkParams::default()).unwrap();
        let d = map_instruction(&spec);
        for name in &spec.gold.landmarks {
            assert!(d.rationale.as_ref().unwrap().contains(name.as_str()));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn generated_maps_are_valid(seed in any::<u64>(), turn in 0.0f64..1.0, density in 0.0f64..0.4) {
            let params = WalkParams { turn_prob: turn, obstacle_density: density, ..WalkParams::default() };
            if let Ok(m) = generate_map(seed, &params) {
                m.check().unwrap();
                prop_assert!(m.gold.cells.len() >= 3);
                prop_assert_eq!(m.gold.landmarks.len() as u32, m.gold.intersections + 2);
                prop_assert_eq!(m.difficulty, classify_difficulty(&m.gold));
            }
        }
    }
}
