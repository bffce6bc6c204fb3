//! Planar layouts: architectural floor plans and webpage wireframes, both cut
//! from one outline by guillotine splits.

use std::collections::{BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::record::{AnswerKind, Draft, Query};
use crate::scene::{text_extent, BBox, Canvas, PaletteColor, Primitive, Rgb, SceneBuilder, SceneGraph, StyleSpec, TextAnchor};
use crate::synth::{self, chance, format_number, mix, GenError, LayoutParams, SeededRng};

pub const MIN_ROOM_SIDE: f64 = 120.0;
const SNAP: f64 = 10.0;
const DOOR_WIDTH: f64 = 30.0;
const PAD: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutStyle {
    Architectural,
    Webpage,
}

impl LayoutStyle {
    fn unit(self) -> &'static str {
        match self {
            LayoutStyle::Architectural => "room",
            LayoutStyle::Webpage => "section",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub name: String,
    pub rect: BBox,
    pub fixtures: Vec<String>,
}

impl Room {
    pub fn area(&self) -> f64 {
        self.rect.area()
    }

    pub fn is_bedroom(&self) -> bool {
        self.name.starts_with("Bedroom")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloorPlanSpec {
    pub style: LayoutStyle,
    pub outline: BBox,
    pub rooms: Vec<Room>,
    /// Pairs of room indices joined by a door.
    pub doors: Vec<(usize, usize)>,
    pub variant: u64,
}

/// Length of the wall two rectangles share, zero when they only touch at a
/// corner or not at all.
pub fn shared_wall(a: &BBox, b: &BBox) -> f64 {
    let eq = |x: f64, y: f64| (x - y).abs() < 1e-6;
    let span = |lo1: f64, hi1: f64, lo2: f64, hi2: f64| (hi1.min(hi2) - lo1.max(lo2)).max(0.0);
    if eq(a.x_max, b.x_min) || eq(b.x_max, a.x_min) {
        span(a.y_min, a.y_max, b.y_min, b.y_max)
    } else if eq(a.y_max, b.y_min) || eq(b.y_max, a.y_min) {
        span(a.x_min, a.x_max, b.x_min, b.x_max)
    } else {
        0.0
    }
}

impl FloorPlanSpec {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.rooms.iter().position(|r| r.name == name)
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        shared_wall(&self.rooms[a].rect, &self.rooms[b].rect) > 0.0
    }

    pub fn check(&self) -> Result<(), GenError> {
        let bad = |m: String| Err(GenError::InvalidSpec(m));
        if self.rooms.len() < 2 {
            return bad("a layout needs at least two rooms".into());
        }
        let names: BTreeSet<&str> = self.rooms.iter().map(|r| r.name.as_str()).collect();
        if names.len() != self.rooms.len() {
            return bad("room names must be unique".into());
        }
        let mut total = 0.0;
        for (i, r) in self.rooms.iter().enumerate() {
            if !self.outline.contains(&r.rect) || r.rect.width() <= 0.0 || r.rect.height() <= 0.0 {
                return bad(format!("room `{}` leaves the outline", r.name));
            }
            for other in &self.rooms[i + 1..] {
                if r.rect.intersection(&other.rect).is_some_and(|x| x.area() > 1e-6) {
                    return bad(format!("rooms `{}` and `{}` overlap", r.name, other.name));
                }
            }
            total += r.area();
        }
        if (total - self.outline.area()).abs() > 1e-6 {
            return bad("rooms must tile the outline".into());
        }
        for &(a, b) in &self.doors {
            if a >= self.rooms.len() || b >= self.rooms.len() || shared_wall(&self.rooms[a].rect, &self.rooms[b].rect) < DOOR_WIDTH {
                return bad(format!("door {a}-{b} is not on a shared wall"));
            }
        }
        if self.style == LayoutStyle::Architectural {
            let mut seen = vec![false; self.rooms.len()];
            let mut queue = VecDeque::from([0]);
            seen[0] = true;
            while let Some(i) = queue.pop_front() {
                for &(a, b) in &self.doors {
                    let next = if a == i {
                        b
                    } else if b == i {
                        a
                    } else {
                        continue;
                    };
                    if !seen[next] {
                        seen[next] = true;
                        queue.push_back(next);
                    }
                }
            }
            if let Some(i) = seen.iter().position(|s| !s) {
                return bad(format!("room `{}` cannot be reached through doors", self.rooms[i].name));
            }
        }
        Ok(())
    }

    /// Same plan with every coordinate multiplied by `k`.
    pub fn scaled(&self, k: f64) -> FloorPlanSpec {
        let s = |b: &BBox| BBox::new(b.x_min * k, b.y_min * k, b.x_max * k, b.y_max * k);
        let mut out = self.clone();
        out.outline = s(&self.outline);
        for r in &mut out.rooms {
            r.rect = s(&r.rect);
        }
        out
    }
}

fn snap(v: f64) -> f64 {
    (v / SNAP).round() * SNAP
}

fn guillotine(rng: &mut SeededRng, outline: BBox, n: usize) -> Vec<BBox> {
    let mut regions = vec![outline];
    while regions.len() < n {
        let splittable: Vec<usize> =
            (0..regions.len()).filter(|&i| regions[i].width().max(regions[i].height()) >= 2.0 * MIN_ROOM_SIDE).collect();
        let Some(&i) = splittable.iter().max_by(|&&a, &&b| regions[a].area().total_cmp(&regions[b].area())) else { break };
        let r = regions.swap_remove(i);
        let t = rng.gen_range(0.35..0.65);
        let (a, b) = if r.width() >= r.height() {
            let x = snap(r.x_min + t * r.width()).clamp(r.x_min + MIN_ROOM_SIDE, r.x_max - MIN_ROOM_SIDE);
            (BBox::new(r.x_min, r.y_min, x, r.y_max), BBox::new(x, r.y_min, r.x_max, r.y_max))
        } else {
            let y = snap(r.y_min + t * r.height()).clamp(r.y_min + MIN_ROOM_SIDE, r.y_max - MIN_ROOM_SIDE);
            (BBox::new(r.x_min, r.y_min, r.x_max, y), BBox::new(r.x_min, y, r.x_max, r.y_max))
        };
        regions.push(a);
        regions.push(b);
    }
    regions.sort_by(|a, b| (a.y_min, a.x_min).partial_cmp(&(b.y_min, b.x_min)).unwrap());
    regions
}

fn architectural_rooms(rng: &mut SeededRng, n: usize) -> Vec<(String, Vec<String>)> {
    let mut rooms: Vec<(String, Vec<String>)> = vec![
        ("Living Room".into(), vec!["sofa".into()]),
        ("Kitchen".into(), vec!["stove".into()]),
        ("Bathroom".into(), vec!["bathtub".into()]),
    ];
    let extras = n.saturating_sub(3);
    let bedrooms = extras.min(rng.gen_range(1..=3)).max(1.min(extras));
    for k in 0..bedrooms {
        let name = if bedrooms == 1 { "Bedroom".to_string() } else { format!("Bedroom {}", k + 1) };
        let mut fixtures = vec!["bed".to_string()];
        if chance(rng, 0.4) {
            fixtures.push("washroom".into());
        }
        rooms.push((name, fixtures));
    }
    let mut others = vec![("Study", "desk"), ("Dining Room", "table"), ("Laundry", "washer")];
    others.shuffle(rng);
    for (name, fixture) in others.into_iter().take(n - rooms.len()) {
        rooms.push((name.into(), vec![fixture.into()]));
    }
    rooms
}

fn webpage_sections(rng: &mut SeededRng, n: usize) -> Vec<(String, Vec<String>)> {
    let mut pool = vec![
        ("Header", "logo"),
        ("Main Content", "article"),
        ("Navigation", "menu"),
        ("Sidebar", "search box"),
        ("Footer", "contact link"),
        ("Banner", "photo"),
    ];
    pool[2..].shuffle(rng);
    pool.into_iter().take(n).map(|(a, b)| (a.to_string(), vec![b.to_string()])).collect()
}

pub const LAYOUT_CANVAS: (u32, u32) = (680, 480);

pub fn sample_floorplan(seed: u64, style: Option<LayoutStyle>) -> FloorPlanSpec {
    for attempt in 0..20u64 {
        let mut rng = synth::rng(mix(seed, attempt), "layout");
        let style = style.unwrap_or(if rng.gen_bool(0.5) { LayoutStyle::Architectural } else { LayoutStyle::Webpage });
        let outline = BBox::new(40.0, 50.0, 640.0, 450.0);
        let want = match style {
            LayoutStyle::Architectural => rng.gen_range(4..=7),
            LayoutStyle::Webpage => rng.gen_range(4..=6),
        };
        let rects = guillotine(&mut rng, outline, want);
        let mut named = match style {
            LayoutStyle::Architectural => architectural_rooms(&mut rng, rects.len()),
            LayoutStyle::Webpage => webpage_sections(&mut rng, rects.len()),
        };
        named.shuffle(&mut rng);
        let rooms: Vec<Room> = rects.into_iter().zip(named).map(|(rect, (name, fixtures))| Room { name, rect, fixtures }).collect();
        let doors = match style {
            LayoutStyle::Architectural => match place_doors(&mut rng, &rooms) {
                Some(d) => d,
                None => continue,
            },
            LayoutStyle::Webpage => Vec::new(),
        };
        let spec = FloorPlanSpec { style, outline, rooms, doors, variant: rng.gen() };
        if spec.check().is_ok() {
            return spec;
        }
    }
    unreachable!("guillotine plans always admit a door tree within 20 attempts")
}

/// Random spanning tree over walls wide enough for a door, plus a few extra
/// doors. `None` when the wall graph is disconnected.
fn place_doors(rng: &mut SeededRng, rooms: &[Room]) -> Option<Vec<(usize, usize)>> {
    let n = rooms.len();
    let mut walls: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .filter(|&(a, b)| shared_wall(&rooms[a].rect, &rooms[b].rect) >= DOOR_WIDTH + 2.0 * PAD)
        .collect();
    walls.shuffle(rng);
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        if p[i] != i {
            p[i] = find(p, p[i]);
        }
        p[i]
    }
    let mut doors = Vec::new();
    for &(a, b) in &walls {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            doors.push((a, b));
        } else if chance(rng, 0.2) {
            doors.push((a, b));
        }
    }
    (doors.len() >= n - 1 && (0..n).all(|i| find(&mut parent, i) == find(&mut parent, 0))).then(|| {
        doors.sort_unstable();
        doors
    })
}

const WALL: Rgb = Rgb(50, 50, 50);

fn room_fill(style: LayoutStyle, k: usize) -> Rgb {
    match style {
        LayoutStyle::Architectural => [Rgb(250, 246, 236), Rgb(238, 244, 250), Rgb(244, 250, 238)][k % 3],
        LayoutStyle::Webpage => [Rgb(236, 240, 246), Rgb(246, 246, 246)][k % 2],
    }
}

pub fn build_layout_scene(spec: &FloorPlanSpec, layout: &LayoutParams) -> Result<SceneGraph, GenError> {
    spec.check()?;
    let font = layout.font_size;
    let small = (font * 0.8).max(8.0);
    let mut sb = SceneBuilder::new(Canvas { width: LAYOUT_CANVAS.0, height: LAYOUT_CANVAS.1, background: Rgb::WHITE });
    let title = match spec.style {
        LayoutStyle::Architectural => "Floor Plan",
        LayoutStyle::Webpage => "Page Layout",
    };
    sb.push_role(
        "title",
        Primitive::text(f64::from(LAYOUT_CANVAS.0) / 2.0, 14.0, title, TextAnchor::Middle, StyleSpec::text(Rgb::BLACK, font * 1.2)),
    );
    let wall_w = if spec.style == LayoutStyle::Architectural { 3.0 } else { 1.5 };
    for (k, room) in spec.rooms.iter().enumerate() {
        let r = room.rect;
        let i = sb.push_role(
            "room",
            Primitive::rect(r.x_min, r.y_min, r.width(), r.height(), StyleSpec::filled_outline(room_fill(spec.style, k), WALL, wall_w)),
        );
        sb.tag(&format!("room:{}", room.name), i);
        let (tw, th) = text_extent(&room.name, font);
        if tw > r.width() - 2.0 * PAD {
            return Err(GenError::LayoutOverflow(format!("label `{}` is {tw:.1} wide, room {:.1}", room.name, r.width())));
        }
        sb.push_role(
            "room_label",
            Primitive::text(r.x_min + PAD, r.y_min + PAD, room.name.clone(), TextAnchor::Start, StyleSpec::text(Rgb::BLACK, font)).at_z(3),
        );
        let mut y = r.y_max - PAD;
        for f in &room.fixtures {
            let (fw, fh) = text_extent(f, small);
            let (bw, bh) = (fw + 2.0 * PAD, fh + PAD);
            y -= bh;
            if bw > r.width() - 2.0 * PAD || y < r.y_min + PAD + th + PAD {
                return Err(GenError::LayoutOverflow(format!("fixture `{f}` does not fit in `{}`", room.name)));
            }
            let x = r.x_max - PAD - bw;
            let b = sb.push_role(
                "fixture",
                Primitive::rect(x, y, bw, bh, StyleSpec::filled_outline(Rgb::WHITE, PaletteColor::Gray, 1.0)).at_z(1),
            );
            sb.tag(&format!("fixture:{}", room.name), b);
            sb.push_role(
                "fixture_label",
                Primitive::text(x + PAD, y + PAD / 2.0, f.clone(), TextAnchor::Start, StyleSpec::text(WALL, small)).at_z(2),
            );
            y -= PAD / 2.0;
        }
    }
    sb.declare_role("door");
    for &(a, b) in &spec.doors {
        let (ra, rb) = (spec.rooms[a].rect, spec.rooms[b].rect);
        let door = if (ra.x_max - rb.x_min).abs() < 1e-6 || (rb.x_max - ra.x_min).abs() < 1e-6 {
            let x = if (ra.x_max - rb.x_min).abs() < 1e-6 { ra.x_max } else { ra.x_min };
            let mid = (ra.y_min.max(rb.y_min) + ra.y_max.min(rb.y_max)) / 2.0;
            Primitive::line(x, mid - DOOR_WIDTH / 2.0, x, mid + DOOR_WIDTH / 2.0, StyleSpec::stroke(Rgb::WHITE, wall_w + 1.0))
        } else {
            let y = if (ra.y_max - rb.y_min).abs() < 1e-6 { ra.y_max } else { ra.y_min };
            let mid = (ra.x_min.max(rb.x_min) + ra.x_max.min(rb.x_max)) / 2.0;
            Primitive::line(mid - DOOR_WIDTH / 2.0, y, mid + DOOR_WIDTH / 2.0, y, StyleSpec::stroke(Rgb::WHITE, wall_w + 1.0))
        };
        sb.push_role("door", door.at_z(1));
    }
    Ok(sb.finish()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "ask", rename_all = "snake_case")]
pub enum LayoutQuery {
    Largest,
    Smallest,
    LargestBedroom,
    RoomCount,
    Contains { room: String, fixture: String },
    Adjacent { a: String, b: String },
}

fn extreme<'a>(rooms: impl Iterator<Item = &'a Room>, largest: bool) -> Vec<&'a Room> {
    let rooms: Vec<&Room> = rooms.collect();
    let key = |r: &&Room| if largest { r.area() } else { -r.area() };
    let best = rooms.iter().map(key).fold(f64::NEG_INFINITY, f64::max);
    rooms.into_iter().filter(|r| (key(r) - best).abs() < 1e-6).collect()
}

fn area_rationale<'a>(rooms: impl Iterator<Item = &'a Room>) -> String {
    rooms
        .map(|r| {
            format!("{} is {} x {} = {}", r.name, format_number(r.rect.width()), format_number(r.rect.height()), format_number(r.area()))
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn size_question(question: String, candidates: Vec<&Room>, largest: bool, q: LayoutQuery) -> Draft {
    let best = extreme(candidates.iter().copied(), largest);
    let names: Vec<String> = best.iter().map(|r| r.name.clone()).collect();
    let word = if largest { "largest" } else { "smallest" };
    let tie = if names.len() > 1 { format!(", a tie between {}", names.join(" and ")) } else { String::new() };
    Draft::new(question, names[0].clone(), AnswerKind::Phrase, "size_comparison", Query::Layout(q))
        .with_alternates(names[1..].iter().cloned())
        .with_rationale(format!(
            "Comparing areas in plan units: {}. The {word} is {}{tie}.",
            area_rationale(candidates.into_iter()),
            names[0]
        ))
}

pub fn layout_questions(spec: &FloorPlanSpec) -> Vec<Draft> {
    let unit = spec.style.unit();
    let v = spec.variant;
    let n = spec.rooms.len();
    let mut out = vec![
        size_question(format!("Which {unit} has the largest area?"), spec.rooms.iter().collect(), true, LayoutQuery::Largest),
        size_question(format!("Which {unit} has the smallest area?"), spec.rooms.iter().collect(), false, LayoutQuery::Smallest),
    ];
    let bedrooms: Vec<&Room> = spec.rooms.iter().filter(|r| r.is_bedroom()).collect();
    if bedrooms.len() >= 2 {
        out.push(size_question("Which bedroom is the largest?".into(), bedrooms, true, LayoutQuery::LargestBedroom));
    } else {
        out.push(Draft::new(
            format!("How many {unit}s are shown in this layout?"),
            n.to_string(),
            AnswerKind::Numeric,
            "perception",
            Query::Layout(LayoutQuery::RoomCount),
        ));
    }
    let room = &spec.rooms[(v % n as u64) as usize];
    let all_fixtures: Vec<&String> = spec.rooms.iter().flat_map(|r| &r.fixtures).collect();
    let fixture =
        if (v >> 8).is_multiple_of(2) { &room.fixtures[0] } else { all_fixtures[((v >> 12) % all_fixtures.len() as u64) as usize] };
    out.push(Draft::new(
        format!("Does the {} contain a {fixture}?", room.name),
        if room.fixtures.contains(fixture) { "Yes" } else { "No" },
        AnswerKind::Phrase,
        "containment",
        Query::Layout(LayoutQuery::Contains { room: room.name.clone(), fixture: fixture.clone() }),
    ));
    let a = ((v >> 20) % n as u64) as usize;
    let b = (a + 1 + ((v >> 28) % (n as u64 - 1)) as usize) % n;
    let (ra, rb) = (&spec.rooms[a], &spec.rooms[b]);
    out.push(Draft::new(
        format!("Is the {} next to the {}?", ra.name, rb.name),
        if spec.adjacent(a, b) { "Yes" } else { "No" },
        AnswerKind::Phrase,
        "adjacency",
        Query::Layout(LayoutQuery::Adjacent { a: ra.name.clone(), b: rb.name.clone() }),
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn room(name: &str, x: f64, y: f64, w: f64, h: f64) -> Room {
        Room { name: name.into(), rect: BBox::new(x, y, x + w, y + h), fixtures: vec!["bed".into()] }
    }

    fn plan(rooms: Vec<Room>) -> FloorPlanSpec {
        let outline = rooms.iter().skip(1).fold(rooms[0].rect, |acc, r| acc.union(&r.rect));
        FloorPlanSpec { style: LayoutStyle::Webpage, outline, rooms, doors: vec![], variant: 0 }
    }

    #[test]
    fn sampled_plans_tile_and_connect() {
        for seed in 0..300 {
            let spec = sample_floorplan(seed, None);
            spec.check().unwrap();
            build_layout_scene(&spec, &LayoutParams::default()).unwrap();
            assert_eq!(layout_questions(&spec).len(), 5);
        }
    }

    #[test]
    fn tie_lists_both_rooms() {
        let spec = plan(vec![
            room("Bedroom 1", 0.0, 0.0, 200.0, 150.0),
            room("Bedroom 2", 200.0, 0.0, 200.0, 150.0),
            room("Kitchen", 0.0, 150.0, 400.0, 50.0),
        ]);
        let q = &layout_questions(&spec)[0];
        assert_eq!(q.answer, "Bedroom 1");
        assert_eq!(q.alternates, vec!["Bedroom 2".to_string()]);
        let bed = &layout_questions(&spec)[2];
        assert_eq!(bed.answer, "Bedroom 1");
        assert_eq!(bed.alternates, vec!["Bedroom 2".to_string()]);
    }

    #[test]
    fn argmax_survives_uniform_scaling() {
        for seed in 0..50 {
            let spec = sample_floorplan(seed, None);
            let scaled = spec.scaled(2.5);
            let (a, b) = (layout_questions(&spec), layout_questions(&scaled));
            assert_eq!(a[0].answer, b[0].answer);
            assert_eq!(a[1].answer, b[1].answer);
        }
    }

    #[test]
    fn corner_contact_is_not_adjacency() {
        let spec = plan(vec![room("A", 0.0, 0.0, 100.0, 100.0), room("B", 100.0, 100.0, 100.0, 100.0)]);
        assert!(!spec.adjacent(0, 1));
        let spec = plan(vec![room("A", 0.0, 0.0, 100.0, 100.0), room("B", 100.0, 50.0, 100.0, 100.0)]);
        assert!(spec.adjacent(0, 1));
    }

    #[test]
    fn unreachable_room_fails_check() {
        let mut spec = sample_floorplan(4, Some(LayoutStyle::Architectural));
        spec.doors.pop();
        assert!(spec.doors.len() < spec.rooms.len() - 1 || spec.check().is_ok());
        spec.doors.clear();
        assert!(spec.check().is_err());
    }
}
