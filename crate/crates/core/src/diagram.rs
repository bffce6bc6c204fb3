//! Organisation charts, relation graphs and flowcharts, drawn as layered
//! node-link diagrams.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::keywords::{DEPARTMENTS, ORGANISATIONS};
use crate::record::{AnswerKind, Draft, Query};
use crate::scene::{text_extent, Canvas, PaletteColor, Primitive, Rgb, SceneBuilder, SceneGraph, StyleSpec, TextAnchor};
use crate::synth::{self, pick, pick_distinct, GenError, LayoutParams};

pub const MAX_TREE_NODES: usize = 8;
/// Nodes sharing a parent. Sampled trees also keep every depth layer this narrow.
pub const MAX_LAYER_WIDTH: usize = 3;
pub const MAX_TREE_DEPTH: usize = 3;

/// Fills light enough for black labels.
pub const NODE_FILLS: [PaletteColor; 8] = [
    PaletteColor::Yellow,
    PaletteColor::Orange,
    PaletteColor::Lightblue,
    PaletteColor::Pink,
    PaletteColor::Green,
    PaletteColor::Cyan,
    PaletteColor::Gray,
    PaletteColor::Olive,
];

pub const FIGURE_CHOICES: [&str; 4] = ["organization chart", "flowchart", "bar chart", "relation graph"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub label: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<TreeNode>,
}

impl TreeNode {
    pub fn leaf(label: &str) -> TreeNode {
        TreeNode { label: label.to_string(), children: vec![] }
    }
}

/// A rooted tree; `extra_edges` turn it into a general relation graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeSpec {
    pub root_label: String,
    pub children: Vec<TreeNode>,
    pub node_colors: BTreeMap<String, PaletteColor>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra_edges: Vec<(String, String)>,
}

impl TreeSpec {
    /// Node labels grouped by depth, root first, in left-to-right order.
    pub fn layers(&self) -> Vec<Vec<&str>> {
        let mut out = vec![vec![self.root_label.as_str()]];
        let mut frontier: Vec<&TreeNode> = self.children.iter().collect();
        while !frontier.is_empty() {
            out.push(frontier.iter().map(|n| n.label.as_str()).collect());
            frontier = frontier.iter().flat_map(|n| n.children.iter()).collect();
        }
        out
    }

    /// (parent, child) pairs in layer order.
    pub fn tree_edges(&self) -> Vec<(&str, &str)> {
        let mut out = Vec::new();
        let mut queue: VecDeque<(&str, &[TreeNode])> = VecDeque::from([(self.root_label.as_str(), self.children.as_slice())]);
        while let Some((parent, kids)) = queue.pop_front() {
            for k in kids {
                out.push((parent, k.label.as_str()));
                queue.push_back((k.label.as_str(), k.children.as_slice()));
            }
        }
        out
    }

    pub fn node_count(&self) -> usize {
        self.layers().iter().map(Vec::len).sum()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.layers().into_iter().flatten().collect()
    }

    pub fn is_tree(&self) -> bool {
        self.extra_edges.is_empty()
    }

    pub fn check(&self) -> Result<(), GenError> {
        let bad = |m: String| Err(GenError::InvalidSpec(m));
        let layers = self.layers();
        let labels = self.labels();
        if labels.len() > MAX_TREE_NODES {
            return bad(format!("{} nodes exceeds {MAX_TREE_NODES}", labels.len()));
        }
        if layers.len() > MAX_TREE_DEPTH {
            return bad(format!("depth {} exceeds {MAX_TREE_DEPTH}", layers.len()));
        }
        let mut siblings: BTreeMap<&str, usize> = BTreeMap::new();
        for (parent, _) in self.tree_edges() {
            *siblings.entry(parent).or_default() += 1;
        }
        if let Some((p, n)) = siblings.iter().find(|(_, n)| **n > MAX_LAYER_WIDTH) {
            return bad(format!("`{p}` has {n} children, more than {MAX_LAYER_WIDTH}"));
        }
        let unique: BTreeSet<&str> = labels.iter().copied().collect();
        if unique.len() != labels.len() || labels.iter().any(|l| l.trim().is_empty()) {
            return bad("node labels must be unique and non-empty".into());
        }
        if let Some(l) = labels.iter().find(|l| !self.node_colors.contains_key(**l)) {
            return bad(format!("no colour for `{l}`"));
        }
        let tree: BTreeSet<(&str, &str)> = self.tree_edges().into_iter().flat_map(|(a, b)| [(a, b), (b, a)]).collect();
        for (a, b) in &self.extra_edges {
            if a == b || !unique.contains(a.as_str()) || !unique.contains(b.as_str()) || tree.contains(&(a.as_str(), b.as_str())) {
                return bad(format!("bad extra edge {a} - {b}"));
            }
        }
        Ok(())
    }
}

fn color_nodes(rng: &mut synth::SeededRng, labels: &[&str]) -> BTreeMap<String, PaletteColor> {
    labels.iter().map(|l| (l.to_string(), *pick(rng, &NODE_FILLS))).collect()
}

/// The two-department forensics organisation used as a worked example.
pub fn digital_forensics() -> TreeSpec {
    let children = vec![
        TreeNode { label: "Case Management".into(), children: vec![TreeNode::leaf("Evidence Collection"), TreeNode::leaf("Analysis")] },
        TreeNode {
            label: "Training and Development".into(),
            children: vec![TreeNode::leaf("Workshops"), TreeNode::leaf("Certifications")],
        },
    ];
    let node_colors = [
        ("Digital Forensics Unit", PaletteColor::Lightblue),
        ("Case Management", PaletteColor::Yellow),
        ("Training and Development", PaletteColor::Yellow),
        ("Evidence Collection", PaletteColor::Green),
        ("Analysis", PaletteColor::Green),
        ("Workshops", PaletteColor::Pink),
        ("Certifications", PaletteColor::Pink),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    TreeSpec { root_label: "Digital Forensics Unit".into(), children, node_colors, extra_edges: vec![] }
}

/// Depth 1, 2, 3 with probabilities 5%, 30%, 65%.
fn sample_depth(rng: &mut synth::SeededRng) -> usize {
    match rng.gen_range(0..100) {
        0..=4 => 1,
        5..=34 => 2,
        _ => 3,
    }
}

pub fn sample_tree_spec(seed: u64, topic: &str) -> TreeSpec {
    assert!(!topic.trim().is_empty(), "tree topic must not be empty");
    let mut rng = synth::rng(seed, "tree");
    let depth = sample_depth(&mut rng);
    let pool: Vec<&str> = DEPARTMENTS.iter().copied().filter(|d| *d != topic).collect();
    let names = pick_distinct(&mut rng, &pool, 2 * MAX_LAYER_WIDTH);
    let mut children: Vec<TreeNode> = Vec::new();
    if depth >= 2 {
        let n2 = rng.gen_range(1..=MAX_LAYER_WIDTH);
        children = names[..n2].iter().map(|n| TreeNode::leaf(n)).collect();
        if depth == 3 {
            let n3 = rng.gen_range(1..=MAX_LAYER_WIDTH);
            for name in &names[MAX_LAYER_WIDTH..MAX_LAYER_WIDTH + n3] {
                let parent = rng.gen_range(0..n2);
                children[parent].children.push(TreeNode::leaf(name));
            }
        }
    }
    let mut spec = TreeSpec { root_label: topic.to_string(), children, node_colors: BTreeMap::new(), extra_edges: vec![] };
    let labels = spec.labels();
    let colors = color_nodes(&mut rng, &labels);
    spec.node_colors = colors;
    spec
}

/// A tree plus up to `max_extra` cross edges between non-adjacent nodes.
pub fn sample_relation_graph(seed: u64, max_extra: usize) -> TreeSpec {
    let mut rng = synth::rng(seed, "relation");
    let topic = *pick(&mut rng, ORGANISATIONS);
    let mut spec = sample_tree_spec(synth::mix(seed, 1), topic);
    if max_extra == 0 || rng.gen_bool(0.4) {
        return spec;
    }
    let labels: Vec<String> = spec.labels().into_iter().map(String::from).collect();
    let tree: BTreeSet<(String, String)> =
        spec.tree_edges().into_iter().flat_map(|(a, b)| [(a.to_string(), b.to_string()), (b.to_string(), a.to_string())]).collect();
    let mut candidates: Vec<(String, String)> = Vec::new();
    for (i, a) in labels.iter().enumerate() {
        for b in &labels[i + 1..] {
            if !tree.contains(&(a.clone(), b.clone())) {
                candidates.push((a.clone(), b.clone()));
            }
        }
    }
    let k = rng.gen_range(1..=max_extra.min(3)).min(candidates.len());
    spec.extra_edges = pick_distinct(&mut rng, &candidates, k);
    spec
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowKind {
    Algorithm,
    Workflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepShape {
    Process,
    Decision,
    Terminator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowNode {
    pub label: String,
    pub shape: StepShape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowEdge {
    pub from: usize,
    pub to: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// Node 0 is the start terminator. Nodes are listed so that every edge to an
/// earlier node is a loop back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSpec {
    pub kind: FlowKind,
    pub topic: String,
    pub nodes: Vec<FlowNode>,
    pub edges: Vec<FlowEdge>,
    pub colors: BTreeMap<String, PaletteColor>,
}

impl FlowSpec {
    pub fn outgoing(&self, node: usize) -> impl Iterator<Item = &FlowEdge> {
        self.edges.iter().filter(move |e| e.from == node)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.label == label)
    }

    pub fn decision_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.shape == StepShape::Decision).count()
    }

    /// Exactly one start terminator, binary labelled decisions, everything
    /// reachable from the start, and every cycle passes through a decision.
    pub fn check(&self) -> Result<(), GenError> {
        let bad = |m: String| Err(GenError::InvalidSpec(m));
        let n = self.nodes.len();
        if n < 2 {
            return bad("flowchart needs at least two nodes".into());
        }
        if self.edges.iter().any(|e| e.from >= n || e.to >= n) {
            return bad("edge endpoint out of range".into());
        }
        let labels: BTreeSet<&str> = self.nodes.iter().map(|n| n.label.as_str()).collect();
        if labels.len() != n {
            return bad("step labels must be unique".into());
        }
        let starts: Vec<usize> =
            (0..n).filter(|&i| self.nodes[i].shape == StepShape::Terminator && !self.edges.iter().any(|e| e.to == i)).collect();
        if starts != [0] {
            return bad(format!("expected exactly one start terminator at index 0, found {starts:?}"));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            let out: Vec<&FlowEdge> = self.outgoing(i).collect();
            match node.shape {
                StepShape::Decision => {
                    let ls: BTreeSet<Option<&str>> = out.iter().map(|e| e.label.as_deref()).collect();
                    if out.len() != 2 || ls.len() != 2 || ls.contains(&None) {
                        return bad(format!("decision `{}` needs two distinctly labelled exits", node.label));
                    }
                }
                StepShape::Process => {
                    if out.len() != 1 {
                        return bad(format!("process `{}` needs exactly one exit", node.label));
                    }
                }
                StepShape::Terminator => {
                    if i != 0 && !out.is_empty() {
                        return bad(format!("end terminator `{}` has exits", node.label));
                    }
                }
            }
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        while let Some(i) = stack.pop() {
            if !std::mem::replace(&mut seen[i], true) {
                stack.extend(self.outgoing(i).map(|e| e.to));
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return bad(format!("step `{}` unreachable from start", self.nodes[i].label));
        }
        // Without decision nodes the graph must be acyclic.
        let keep: Vec<bool> = self.nodes.iter().map(|n| n.shape != StepShape::Decision).collect();
        let mut indeg = vec![0usize; n];
        for e in self.edges.iter().filter(|e| keep[e.from] && keep[e.to]) {
            indeg[e.to] += 1;
        }
        let mut queue: Vec<usize> = (0..n).filter(|&i| keep[i] && indeg[i] == 0).collect();
        let mut removed = 0;
        while let Some(i) = queue.pop() {
            removed += 1;
            for e in self.outgoing(i).filter(|e| keep[e.to]) {
                indeg[e.to] -= 1;
                if indeg[e.to] == 0 {
                    queue.push(e.to);
                }
            }
        }
        if removed != keep.iter().filter(|k| **k).count() {
            return bad("cycle without a decision".into());
        }
        Ok(())
    }
}

/// (label, shape, exits); exits are (target index, optional label).
type Step = (&'static str, StepShape, &'static [(usize, Option<&'static str>)]);

const Y: Option<&str> = Some("Yes");
const N: Option<&str> = Some("No");
use StepShape::{Decision as D, Process as P, Terminator as T};

const TEMPLATES: &[(FlowKind, &str, &[Step])] = &[
    (
        FlowKind::Algorithm,
        "Find the largest number in a list",
        &[
            ("Start", T, &[(1, None)]),
            ("Set max to the first item", P, &[(2, None)]),
            ("Any items left?", D, &[(3, Y), (6, N)]),
            ("Take the next item", P, &[(4, None)]),
            ("Is the item > max?", D, &[(5, Y), (2, N)]),
            ("Set max to the item", P, &[(2, None)]),
            ("Output max", P, &[(7, None)]),
            ("End", T, &[]),
        ],
    ),
    (
        FlowKind::Algorithm,
        "Sum the numbers from 1 to n",
        &[
            ("Start", T, &[(1, None)]),
            ("Read n", P, &[(2, None)]),
            ("Set sum to 0 and i to 1", P, &[(3, None)]),
            ("Is i <= n?", D, &[(4, Y), (6, N)]),
            ("Add i to sum", P, &[(5, None)]),
            ("Increase i by 1", P, &[(3, None)]),
            ("Print sum", P, &[(7, None)]),
            ("End", T, &[]),
        ],
    ),
    (
        FlowKind::Algorithm,
        "Check whether a number is even",
        &[
            ("Start", T, &[(1, None)]),
            ("Read the number", P, &[(2, None)]),
            ("Is it divisible by 2?", D, &[(3, Y), (4, N)]),
            ("Print Even", P, &[(5, None)]),
            ("Print Odd", P, &[(5, None)]),
            ("End", T, &[]),
        ],
    ),
    (
        FlowKind::Algorithm,
        "Search a list for a target",
        &[
            ("Start", T, &[(1, None)]),
            ("Read the target", P, &[(2, None)]),
            ("Go to the first item", P, &[(3, None)]),
            ("Item equals target?", D, &[(5, Y), (4, N)]),
            ("Any items left?", D, &[(6, Y), (7, N)]),
            ("Report found", P, &[(8, None)]),
            ("Move to the next item", P, &[(3, None)]),
            ("Report not found", P, &[(8, None)]),
            ("End", T, &[]),
        ],
    ),
    (
        FlowKind::Algorithm,
        "Verify a user login",
        &[
            ("Start", T, &[(1, None)]),
            ("Enter username and password", P, &[(2, None)]),
            ("Credentials valid?", D, &[(3, Y), (4, N)]),
            ("Open the dashboard", P, &[(6, None)]),
            ("Fewer than 3 attempts?", D, &[(1, Y), (5, N)]),
            ("Lock the account", P, &[(6, None)]),
            ("End", T, &[]),
        ],
    ),
    (
        FlowKind::Workflow,
        "Designing a slide presentation",
        &[
            ("Start", T, &[(1, None)]),
            ("Define the topic", P, &[(2, None)]),
            ("Draft the outline", P, &[(3, None)]),
            ("Create the slides", P, &[(4, None)]),
            ("Deck approved?", D, &[(5, Y), (3, N)]),
            ("Rehearse the talk", P, &[(6, None)]),
            ("End", T, &[]),
        ],
    ),
    (
        FlowKind::Workflow,
        "Processing a customer refund",
        &[
            ("Start", T, &[(1, None)]),
            ("Receive the request", P, &[(2, None)]),
            ("Check the purchase", P, &[(3, None)]),
            ("Within return window?", D, &[(4, Y), (6, N)]),
            ("Issue the refund", P, &[(5, None)]),
            ("Notify the customer", P, &[(7, None)]),
            ("Send a rejection", P, &[(7, None)]),
            ("End", T, &[]),
        ],
    ),
    (
        FlowKind::Workflow,
        "Publishing a blog post",
        &[
            ("Start", T, &[(1, None)]),
            ("Write the draft", P, &[(2, None)]),
            ("Add images", P, &[(3, None)]),
            ("Editor approves?", D, &[(4, Y), (1, N)]),
            ("Schedule the post", P, &[(5, None)]),
            ("End", T, &[]),
        ],
    ),
    (
        FlowKind::Workflow,
        "Hiring a new employee",
        &[
            ("Start", T, &[(1, None)]),
            ("Post the job opening", P, &[(2, None)]),
            ("Screen applications", P, &[(3, None)]),
            ("Qualified candidate?", D, &[(4, Y), (1, N)]),
            ("Conduct the interview", P, &[(5, None)]),
            ("Interview passed?", D, &[(6, Y), (2, N)]),
            ("Send the offer", P, &[(7, None)]),
            ("End", T, &[]),
        ],
    ),
    (
        FlowKind::Workflow,
        "Baking a loaf of bread",
        &[
            ("Start", T, &[(1, None)]),
            ("Mix the ingredients", P, &[(2, None)]),
            ("Knead the dough", P, &[(3, None)]),
            ("Dough doubled in size?", D, &[(5, Y), (4, N)]),
            ("Wait 15 minutes", P, &[(3, None)]),
            ("Bake for 30 minutes", P, &[(6, None)]),
            ("End", T, &[]),
        ],
    ),
];

pub fn flow_template_count() -> usize {
    TEMPLATES.len()
}

pub fn sample_flow_spec(seed: u64, kind: Option<FlowKind>) -> FlowSpec {
    let mut rng = synth::rng(seed, "flow");
    let pool: Vec<usize> = (0..TEMPLATES.len()).filter(|&i| kind.is_none_or(|k| TEMPLATES[i].0 == k)).collect();
    let (kind, topic, steps) = TEMPLATES[*pick(&mut rng, &pool)];
    let nodes: Vec<FlowNode> = steps.iter().map(|(l, s, _)| FlowNode { label: l.to_string(), shape: *s }).collect();
    let edges = steps
        .iter()
        .enumerate()
        .flat_map(|(i, (_, _, exits))| exits.iter().map(move |(to, l)| FlowEdge { from: i, to: *to, label: l.map(String::from) }))
        .collect();
    let fills = pick_distinct(&mut rng, &NODE_FILLS, 3);
    let colors = nodes
        .iter()
        .map(|n| {
            let c = match n.shape {
                StepShape::Terminator => fills[0],
                StepShape::Process => fills[1],
                StepShape::Decision => fills[2],
            };
            (n.label.clone(), c)
        })
        .collect();
    FlowSpec { kind, topic: topic.to_string(), nodes, edges, colors }
}

const INK: Rgb = Rgb(40, 40, 40);
const MARGIN: f64 = 16.0;
const DIAGRAM_WIDTH: u32 = 800;

#[derive(Debug, Clone, Copy)]
struct NodeBox {
    cx: f64,
    cy: f64,
    w: f64,
    h: f64,
}

fn node_primitive(b: NodeBox, shape: StepShape, fill: PaletteColor) -> Primitive {
    let style = StyleSpec::filled_outline(fill, INK, 1.5);
    let (l, r, t, bo) = (b.cx - b.w / 2.0, b.cx + b.w / 2.0, b.cy - b.h / 2.0, b.cy + b.h / 2.0);
    match shape {
        StepShape::Process => Primitive::rect(l, t, b.w, b.h, style),
        StepShape::Decision => Primitive::polygon(vec![(b.cx, t), (r, b.cy), (b.cx, bo), (l, b.cy)], style),
        StepShape::Terminator => {
            let k = b.h / 2.0;
            Primitive::polygon(vec![(l + k, t), (r - k, t), (r, b.cy), (r - k, bo), (l + k, bo), (l, b.cy)], style)
        }
    }
}

fn box_size(label: &str, shape: StepShape, font: f64) -> (f64, f64) {
    let (w, h) = text_extent(label, font);
    match shape {
        StepShape::Process => (w + 16.0, h + 16.0),
        StepShape::Decision => (1.5 * w + 24.0, 3.0 * h),
        StepShape::Terminator => (w + 16.0 + h, h + 16.0),
    }
}

/// Places layers evenly across the canvas and checks boxes fit their slots.
fn place_layers(layers: &[Vec<(String, StepShape)>], font: f64, top: f64) -> Result<(BTreeMap<String, NodeBox>, f64), GenError> {
    let width = f64::from(DIAGRAM_WIDTH);
    let mut boxes = BTreeMap::new();
    let mut y = top;
    for layer in layers {
        let slot = (width - 2.0 * MARGIN) / layer.len() as f64;
        let sizes: Vec<(f64, f64)> = layer.iter().map(|(l, s)| box_size(l, *s, font)).collect();
        let h = sizes.iter().map(|s| s.1).fold(0.0, f64::max);
        for (k, ((label, _), (w, bh))) in layer.iter().zip(&sizes).enumerate() {
            if *w > slot - 12.0 {
                return Err(GenError::LayoutOverflow(format!("node `{label}` is {w:.1} wide, slot {slot:.1}")));
            }
            boxes.insert(label.clone(), NodeBox { cx: MARGIN + slot * (k as f64 + 0.5), cy: y + h / 2.0, w: *w, h: *bh });
        }
        y += h + (2.5 * font).max(36.0);
    }
    Ok((boxes, y))
}

fn connector(sb: &mut SceneBuilder, a: NodeBox, b: NodeBox, dashed: bool) -> usize {
    let mut style = StyleSpec::stroke(INK, 1.5).with_arrow();
    if dashed {
        style = style.dashed(&[6.0, 4.0]);
    }
    let p = if (a.cy - b.cy).abs() < 1e-9 {
        // Same layer: route underneath both boxes.
        let y = a.cy + a.h.max(b.h) / 2.0 + 12.0;
        Primitive::polyline(vec![(a.cx, a.cy + a.h / 2.0), (a.cx, y), (b.cx, y), (b.cx, b.cy + b.h / 2.0)], style)
    } else if a.cy < b.cy {
        Primitive::line(a.cx, a.cy + a.h / 2.0, b.cx, b.cy - b.h / 2.0, style)
    } else {
        Primitive::line(a.cx, a.cy - a.h / 2.0, b.cx, b.cy + b.h / 2.0, style)
    };
    sb.push_role("connector", p.at_z(1))
}

fn label_nodes(
    sb: &mut SceneBuilder,
    boxes: &BTreeMap<String, NodeBox>,
    order: &[(String, StepShape)],
    colors: &BTreeMap<String, PaletteColor>,
    font: f64,
) {
    for (label, shape) in order {
        let b = boxes[label];
        let i = sb.push_role("node", node_primitive(b, *shape, colors[label]).at_z(2));
        sb.tag(&format!("node:{label}"), i);
        sb.push_role(
            "node_label",
            Primitive::text(b.cx, b.cy - font / 2.0, label.clone(), TextAnchor::Middle, StyleSpec::text(INK, font)).at_z(3),
        );
    }
}

pub fn layout_tree(spec: &TreeSpec, layout: &LayoutParams) -> Result<SceneGraph, GenError> {
    spec.check()?;
    let font = layout.font_size;
    let layers: Vec<Vec<(String, StepShape)>> =
        spec.layers().into_iter().map(|l| l.into_iter().map(|s| (s.to_string(), StepShape::Process)).collect()).collect();
    let (boxes, bottom) = place_layers(&layers, font, MARGIN + 8.0)?;
    let height = (bottom + MARGIN).max(f64::from(crate::scene::DEFAULT_HEIGHT)).ceil() as u32;
    let mut sb = SceneBuilder::new(Canvas { width: DIAGRAM_WIDTH, height, background: Rgb::WHITE });
    let order: Vec<(String, StepShape)> = layers.into_iter().flatten().collect();
    label_nodes(&mut sb, &boxes, &order, &spec.node_colors, font);
    for (a, b) in spec.tree_edges() {
        connector(&mut sb, boxes[a], boxes[b], false);
    }
    for (a, b) in &spec.extra_edges {
        connector(&mut sb, boxes[a], boxes[b], true);
    }
    sb.declare_role("connector");
    Ok(sb.finish()?)
}

/// Longest-path layering over forward edges (edges to later nodes).
fn flow_layers(spec: &FlowSpec) -> Vec<Vec<usize>> {
    let n = spec.nodes.len();
    let mut depth = vec![0usize; n];
    for i in 0..n {
        for e in spec.outgoing(i).filter(|e| e.to > i) {
            depth[e.to] = depth[e.to].max(depth[i] + 1);
        }
    }
    let max = depth.iter().copied().max().unwrap_or(0);
    (0..=max).map(|d| (0..n).filter(|&i| depth[i] == d).collect()).collect()
}

pub fn layout_flow(spec: &FlowSpec, layout: &LayoutParams) -> Result<SceneGraph, GenError> {
    spec.check()?;
    let font = layout.font_size;
    let idx_layers = flow_layers(spec);
    if let Some(l) = idx_layers.iter().find(|l| l.len() > MAX_LAYER_WIDTH) {
        return Err(GenError::LayoutOverflow(format!("flow layer of {} steps", l.len())));
    }
    let layers: Vec<Vec<(String, StepShape)>> =
        idx_layers.iter().map(|l| l.iter().map(|&i| (spec.nodes[i].label.clone(), spec.nodes[i].shape)).collect()).collect();
    let title_font = font * 1.2;
    let (title_w, _) = text_extent(&spec.topic, title_font);
    if title_w > f64::from(DIAGRAM_WIDTH) - 2.0 * MARGIN {
        return Err(GenError::LayoutOverflow("flowchart title".into()));
    }
    let (boxes, bottom) = place_layers(&layers, font, MARGIN + title_font + 16.0)?;
    let height = (bottom + MARGIN).max(f64::from(crate::scene::DEFAULT_HEIGHT)).ceil() as u32;
    let mut sb = SceneBuilder::new(Canvas { width: DIAGRAM_WIDTH, height, background: Rgb::WHITE });
    sb.push_role(
        "title",
        Primitive::text(f64::from(DIAGRAM_WIDTH) / 2.0, MARGIN, spec.topic.clone(), TextAnchor::Middle, StyleSpec::text(INK, title_font)),
    );
    let order: Vec<(String, StepShape)> = layers.into_iter().flatten().collect();
    label_nodes(&mut sb, &boxes, &order, &spec.colors, font);
    let mut loop_lane = f64::from(DIAGRAM_WIDTH) - MARGIN / 2.0;
    for e in &spec.edges {
        let (a, b) = (boxes[&spec.nodes[e.from].label], boxes[&spec.nodes[e.to].label]);
        let label_at = if e.to > e.from {
            connector(&mut sb, a, b, false);
            (a.cx + 6.0, a.cy + a.h / 2.0 + 2.0)
        } else {
            // Loop back along a lane at the right edge.
            let style = StyleSpec::stroke(INK, 1.5).with_arrow();
            let (ax, bx) = (a.cx + a.w / 2.0, b.cx + b.w / 2.0);
            sb.push_role(
                "connector",
                Primitive::polyline(vec![(ax, a.cy), (loop_lane, a.cy), (loop_lane, b.cy), (bx, b.cy)], style).at_z(1),
            );
            loop_lane -= 6.0;
            (ax + 4.0, a.cy - font - 2.0)
        };
        if let Some(l) = &e.label {
            sb.push_role(
                "edge_label",
                Primitive::text(label_at.0, label_at.1, l.clone(), TextAnchor::Start, StyleSpec::text(INK, font * 0.9)).at_z(4),
            );
        }
    }
    Ok(sb.finish()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "ask", rename_all = "snake_case")]
pub enum TreeQuery {
    FigureType,
    NodeColor { node: String },
    Exists { node: String },
    NodeCount,
    ChildCount { node: String },
    DescendantCount { node: String },
    EdgeCount,
    Connected { a: String, b: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "ask", rename_all = "snake_case")]
pub enum FlowQuery {
    FigureType,
    StepColor { step: String },
    NextStep { step: String },
    Branch { decision: String, label: String },
    DecisionCount,
}

fn figure_question() -> String {
    format!("What is the type of this figure? Choose from: {}.", FIGURE_CHOICES.join(", "))
}

fn variant_of(labels: &[&str]) -> u64 {
    labels.iter().fold(0, |h, l| synth::mix(h, synth::fnv(l)))
}

fn children_of<'a>(spec: &'a TreeSpec, node: &str) -> Vec<&'a str> {
    spec.tree_edges().into_iter().filter(|(p, _)| *p == node).map(|(_, c)| c).collect()
}

fn descendants<'a>(spec: &'a TreeSpec, node: &str) -> Vec<&'a str> {
    let mut out = Vec::new();
    let mut stack = children_of(spec, node);
    while let Some(c) = stack.pop() {
        out.push(c);
        stack.extend(children_of(spec, c));
    }
    out.sort_unstable();
    out
}

pub fn tree_questions(spec: &TreeSpec) -> Vec<Draft> {
    let q = Query::Tree;
    let labels = spec.labels();
    let v = variant_of(&labels);
    let node = labels[(v % labels.len() as u64) as usize];
    let figure = if spec.is_tree() { "organization chart" } else { "relation graph" };
    let mut out = vec![
        Draft::new(figure_question(), figure, AnswerKind::Phrase, "structural", q(TreeQuery::FigureType)),
        Draft::new(
            format!("What color is the '{node}' node?"),
            spec.node_colors[node].name(),
            AnswerKind::Phrase,
            "structural",
            q(TreeQuery::NodeColor { node: node.to_string() }),
        ),
    ];
    let absent: Vec<&str> = DEPARTMENTS.iter().copied().filter(|d| !labels.contains(d)).collect();
    let probe = if (v >> 8).is_multiple_of(2) { node } else { absent[((v >> 16) % absent.len() as u64) as usize] };
    out.push(Draft::new(
        format!("Does the '{probe}' node exist in this figure?"),
        if labels.contains(&probe) { "Yes" } else { "No" },
        AnswerKind::Phrase,
        "structural",
        q(TreeQuery::Exists { node: probe.to_string() }),
    ));
    out.push(
        Draft::new(
            "How many nodes are there in this figure?",
            labels.len().to_string(),
            AnswerKind::Numeric,
            "math_reasoning",
            q(TreeQuery::NodeCount),
        )
        .with_rationale(format!("The figure shows the nodes {}, which makes {} nodes.", labels.join(", "), labels.len())),
    );
    if spec.is_tree() {
        let root = &spec.root_label;
        let kids = children_of(spec, root);
        out.push(
            Draft::new(
                format!("How many departments are there in the '{root}'?"),
                kids.len().to_string(),
                AnswerKind::Numeric,
                "math_reasoning",
                q(TreeQuery::ChildCount { node: root.clone() }),
            )
            .with_rationale(if kids.is_empty() {
                format!("The '{root}' node has no nodes below it, so there are 0 departments.")
            } else {
                format!("The nodes directly below '{root}' are {}, so there are {} departments.", kids.join(", "), kids.len())
            }),
        );
        let inner: Vec<&str> = labels[1..].iter().copied().filter(|l| !children_of(spec, l).is_empty()).collect();
        if let Some(dept) = inner.get(((v >> 24) % inner.len().max(1) as u64) as usize) {
            let below = descendants(spec, dept);
            out.push(
                Draft::new(
                    format!("How many units report to '{dept}', directly or indirectly?"),
                    below.len().to_string(),
                    AnswerKind::Numeric,
                    "math_reasoning",
                    q(TreeQuery::DescendantCount { node: dept.to_string() }),
                )
                .with_rationale(format!("Below '{dept}' are {}, which makes {} units.", below.join(", "), below.len())),
            );
        }
    } else {
        let edges = spec.tree_edges().len() + spec.extra_edges.len();
        out.push(
            Draft::new(
                "How many connecting lines are drawn between the nodes?",
                edges.to_string(),
                AnswerKind::Numeric,
                "math_reasoning",
                q(TreeQuery::EdgeCount),
            )
            .with_rationale(format!(
                "There are {} solid lines for the hierarchy and {} dashed cross links, so {} lines in total.",
                spec.tree_edges().len(),
                spec.extra_edges.len(),
                edges
            )),
        );
        let (a, b) = &spec.extra_edges[(v % spec.extra_edges.len() as u64) as usize];
        out.push(Draft::new(
            format!("Is '{a}' directly connected to '{b}'?"),
            "Yes",
            AnswerKind::Phrase,
            "structural",
            q(TreeQuery::Connected { a: a.clone(), b: b.clone() }),
        ));
    }
    out
}

pub fn flow_questions(spec: &FlowSpec) -> Vec<Draft> {
    let q = Query::Flow;
    let labels: Vec<&str> = spec.nodes.iter().map(|n| n.label.as_str()).collect();
    let v = variant_of(&labels);
    let processes: Vec<usize> = (0..spec.nodes.len()).filter(|&i| spec.nodes[i].shape == StepShape::Process).collect();
    let decisions: Vec<usize> = (0..spec.nodes.len()).filter(|&i| spec.nodes[i].shape == StepShape::Decision).collect();
    let colored = labels[((v >> 4) % labels.len() as u64) as usize];
    let mut out = vec![
        Draft::new(figure_question(), "flowchart", AnswerKind::Phrase, "structural", q(FlowQuery::FigureType)),
        Draft::new(
            format!("What color is the '{colored}' box?"),
            spec.colors[colored].name(),
            AnswerKind::Phrase,
            "structural",
            q(FlowQuery::StepColor { step: colored.to_string() }),
        ),
    ];
    let p = processes[(v % processes.len() as u64) as usize];
    let next = spec.outgoing(p).next().expect("process has an exit").to;
    out.push(
        Draft::new(
            format!("In this flowchart, what is the next step after '{}'?", labels[p]),
            labels[next],
            AnswerKind::Phrase,
            "reasoning",
            q(FlowQuery::NextStep { step: labels[p].to_string() }),
        )
        .with_rationale(format!("The only arrow leaving '{}' points to '{}'.", labels[p], labels[next])),
    );
    if !decisions.is_empty() {
        let d = decisions[((v >> 8) % decisions.len() as u64) as usize];
        let exits: Vec<&FlowEdge> = spec.outgoing(d).collect();
        let e = exits[((v >> 12) % 2) as usize];
        let label = e.label.clone().expect("decision exits are labelled");
        out.push(
            Draft::new(
                format!("At the decision '{}', if the answer is {label}, what is the next step?", labels[d]),
                labels[e.to],
                AnswerKind::Phrase,
                "reasoning",
                q(FlowQuery::Branch { decision: labels[d].to_string(), label: label.clone() }),
            )
            .with_rationale(format!("The arrow labelled {label} leaving '{}' leads to '{}'.", labels[d], labels[e.to])),
        );
    }
    let names: Vec<&str> = decisions.iter().map(|&i| labels[i]).collect();
    out.push(
        Draft::new(
            "How many decision points are there in this flowchart?",
            decisions.len().to_string(),
            AnswerKind::Numeric,
            "math_reasoning",
            q(FlowQuery::DecisionCount),
        )
        .with_rationale(if names.is_empty() {
            "The flowchart contains no diamond-shaped decision boxes, so the count is 0.".to_string()
        } else {
            format!(
                "The diamond-shaped decision boxes are {}, so there are {}.",
                names.iter().map(|n| format!("'{n}'")).collect::<Vec<_>>().join(", "),
                names.len()
            )
        }),
    );
    out
}
