//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use absynth::diagram::{digital_forensics, sample_tree_spec, tree_questions};
use absynth::eval::{dataset_stats, score_landmarks, score_numeric, score_sentence, tokenize, LandmarkMatch, NumericScore};
use absynth::gate::{accuracy_gate, aesthetics_gate, feasibility_gate, Feasibility, GateConfig};
use absynth::gauge::{build_dial_scene, dial_questions, sample_dial_spec, DialFamily, DialTask, Reading};
use absynth::instruct::ScenarioSpec;
use absynth::keywords::DEPARTMENTS;
use absynth::map::{generate_map, WalkParams};
use absynth::pipeline::{self, RunConfig};
use absynth::record::Scenario;
use absynth::scene::{render_svg, Canvas, Primitive, Rgb, SceneBuilder, StyleSpec, TextAnchor};
use absynth::synth::LayoutParams;
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = fn() -> Check;

const GEN_TIME_LIMIT: Duration = Duration::from_secs(120);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn end_to_end() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().to_str().unwrap();
    let t = Instant::now();
    ok(&absynth(&["gen", "--all", "--count", "50", "--seed", "1", "--jobs", "1", "--out", out]))?;
    let elapsed = t.elapsed();
    ensure(elapsed < GEN_TIME_LIMIT, format!("gen took {elapsed:?}"))?;
    let manifest = pipeline::load_manifest(&dir.path().join(pipeline::MANIFEST_FILE)).map_err(|e| e.to_string())?;
    let specs = pipeline::load_specs(&dir.path().join(pipeline::SPECS_FILE)).map_err(|e| e.to_string())?;
    manifest.check()?;
    let scenarios: BTreeSet<Scenario> = manifest.records.iter().map(|r| r.scenario).collect();
    ensure(scenarios.len() == 8, format!("{} scenarios", scenarios.len()))?;
    ensure(manifest.records.len() >= 350, format!("{} records", manifest.records.len()))?;
    let v = pipeline::verify_manifest(&manifest, &specs);
    ensure(
        v.failures.is_empty() && v.ok == manifest.records.len(),
        format!("{} verification failures, first {:?}", v.failures.len(), v.failures.first()),
    )?;
    ok(&absynth(&["verify", "--dir", out]))?;
    Ok(format!("{} records, all verified, gen {:.2}s single-threaded", manifest.records.len(), elapsed.as_secs_f64()))
}

/// Clockwise degrees from 12 o'clock of the line from `from` to `to` in SVG
/// coordinates (y down).
fn bearing(from: (f64, f64), to: (f64, f64)) -> f64 {
    (to.0 - from.0).atan2(from.1 - to.1).to_degrees().rem_euclid(360.0)
}

fn clock_fidelity() -> Check {
    let mut spec = sample_dial_spec(810, Some(DialFamily::Clock));
    spec.reading = Reading::Time { hour: 8, minute: 10 };
    spec.task = DialTask { offset: 8.0, inverse_minutes: 90 };
    let qs = dial_questions(&spec);
    let set = |v: &[String]| v.iter().map(String::as_str).collect::<BTreeSet<_>>().into_iter().map(String::from).collect::<Vec<_>>();
    ensure(qs[0].answer == "8:10", format!("reading {}", qs[0].answer))?;
    ensure(set(&qs[1].alternates) == ["16:10", "4:10"], format!("offset {:?}", qs[1].alternates))?;
    let inverse: Vec<String> = qs[2].answer.split(" or ").map(String::from).collect();
    ensure(set(&inverse) == ["6", "7"], format!("inverse {}", qs[2].answer))?;

    let scene = build_dial_scene(&spec, &LayoutParams::default()).map_err(|e| e.to_string())?;
    let svg = String::from_utf8(render_svg(&scene).map_err(|e| e.to_string())?).unwrap();
    let doc = roxmltree::Document::parse(&svg).map_err(|e| e.to_string())?;
    let hand = |role: &str| -> Result<[(f64, f64); 2], String> {
        let n = doc
            .descendants()
            .find(|n| n.has_tag_name("line") && n.attribute("class").is_some_and(|c| c.split(' ').any(|x| x == role)))
            .ok_or(format!("no {role} in svg"))?;
        let f = |a: &str| n.attribute(a).and_then(|v| v.parse::<f64>().ok()).ok_or(format!("{role} lacks {a}"));
        Ok([(f("x1")?, f("y1")?), (f("x2")?, f("y2")?)])
    };
    let (h, m) = (hand("hour_hand")?, hand("minute_hand")?);
    let near = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).hypot(a.1 - b.1) < 0.5;
    let centre = *h.iter().find(|p| m.iter().any(|q| near(**p, *q))).ok_or("hands do not share a pivot")?;
    let tip = |l: [(f64, f64); 2]| if near(l[0], centre) { l[1] } else { l[0] };
    let (ha, ma) = (bearing(centre, tip(h)), bearing(centre, tip(m)));
    let minute = (ma / 6.0).round() as u32 % 60;
    let hour = ((ha - 0.5 * f64::from(minute)) / 30.0).round().rem_euclid(12.0) as u32;
    ensure((hour, minute) == (8, 10), format!("decoded {hour}:{minute:02} from angles {ha:.2}, {ma:.2}"))?;
    Ok(format!("8:10 / {{4:10, 16:10}} / {{6, 7}}, hands at {ha:.1} and {ma:.1} degrees"))
}

fn metric_oracles() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let words = ["alpha", "beta", "gamma", "delta", "eps"];
    for case in 0..1000 {
        let (lp, lg) = (rng.gen_range(0..9), rng.gen_range(0..9));
        let p: Vec<&str> = (0..lp).map(|_| words[rng.gen_range(0..words.len())]).collect();
        let g: Vec<&str> = (0..lg).map(|_| words[rng.gen_range(0..words.len())]).collect();
        let l = lcs_brute(&p, &g) as f64;
        let want = match (p.len(), g.len()) {
            (0, 0) => 1.0,
            _ if l == 0.0 => 0.0,
            (np, ng) => {
                let (pr, rc) = (l / np as f64, l / ng as f64);
                2.0 * pr * rc / (pr + rc)
            }
        };
        let got = score_sentence(&p.join(" "), &g.join(" "));
        ensure(got == want, format!("sentence case {case}: {p:?} vs {g:?}: {got} != {want}"))?;
        ensure(tokenize(&p.join(" ")).len() == p.len(), "tokenizer split a word")?;
    }
    let names = ["Oak Street", "Pine Road", "Elm Way", "Birch Lane", "Cedar Court", "Maple Avenue"];
    let distractors = ["Willow Drive", "Ash Close"];
    for case in 0..1000 {
        let n = rng.gen_range(1..=names.len());
        let mut pool = names.to_vec();
        let gold: Vec<String> = (0..n).map(|_| pool.remove(rng.gen_range(0..pool.len())).to_string()).collect();
        let mentions: Vec<&str> = (0..rng.gen_range(0..10))
            .map(|_| if rng.gen_bool(0.2) { distractors[rng.gen_range(0..2)] } else { names[rng.gen_range(0..names.len())] })
            .collect();
        let text = format!("Go via {} and stop.", mentions.join(", then "));
        let mut extracted: Vec<&str> = Vec::new();
        for m in &mentions {
            if gold.iter().any(|g| g == m) && !extracted.contains(m) {
                extracted.push(m);
            }
        }
        let gold_ref: Vec<&str> = gold.iter().map(String::as_str).collect();
        let want = lcs_brute(&extracted, &gold_ref) as f64 / gold.len() as f64;
        let got = score_landmarks(&text, &gold, LandmarkMatch::Lcs);
        ensure(got == want, format!("landmark case {case}: {text} vs {gold:?}: {got} != {want}"))?;
    }
    let gold: Vec<String> = ["A Street", "B Street", "C Street", "D Street"].map(String::from).into();
    let lcr = score_landmarks("A Street, then C Street, then D Street", &gold, LandmarkMatch::Lcs);
    ensure(lcr == 0.75, format!("[A,C,D] scored {lcr}"))?;
    Ok("2000 random cases agree with brute-force LCS; [A,C,D] of [A,B,C,D] = 0.75".into())
}

fn numeric_boundary() -> Check {
    let a = score_numeric("105", &["100"], true);
    let b = score_numeric("105.01", &["100"], true);
    let c = score_numeric("95", &["100"], true);
    ensure(a == NumericScore::Correct && c == NumericScore::Correct, format!("105 -> {a:?}, 95 -> {c:?}"))?;
    ensure(b == NumericScore::Incorrect, format!("105.01 -> {b:?}"))?;
    Ok("105 correct, 95 correct, 105.01 incorrect".into())
}

fn map_difficulty() -> Check {
    let params = WalkParams::default();
    let mut hist: BTreeMap<u8, usize> = BTreeMap::new();
    for seed in 0..1000 {
        let m = generate_map(seed, &params).map_err(|e| format!("seed {seed}: {e}"))?;
        *hist.entry(m.difficulty).or_default() += 1;
        let cells = &m.gold.cells;
        ensure(cells.first() == Some(&m.start) && cells.last() == Some(&m.end), format!("seed {seed}: route endpoints"))?;
        let unique: BTreeSet<_> = cells.iter().collect();
        ensure(unique.len() == cells.len(), format!("seed {seed}: route revisits a cell"))?;
        for w in cells.windows(2) {
            let step = (w[0].0 - w[1].0).abs() + (w[0].1 - w[1].1).abs();
            ensure(step == 1, format!("seed {seed}: jump {:?} -> {:?}", w[0], w[1]))?;
        }
        ensure(cells.iter().all(|c| m.network.contains(c)), format!("seed {seed}: route leaves the road"))?;
    }
    ensure((1..=5).all(|l| hist.get(&l).copied().unwrap_or(0) > 0), format!("empty level in {hist:?}"))?;
    let hard: usize = (3..=5).map(|l| hist.get(&l).copied().unwrap_or(0)).sum();
    ensure(hard * 2 >= 1000, format!("levels 3-5 hold {hard} of 1000"))?;
    Ok(format!("histogram {hist:?}, levels 3-5 = {:.1}%", hard as f64 / 10.0))
}

fn gate_bounds() -> Check {
    let config = GateConfig::default();
    let mut tree = digital_forensics();
    let long = "Regional Cyber Intrusion and Evidence Recovery Coordination Office ".repeat(2);
    let colour = tree.node_colors.remove(&tree.children[0].label).unwrap();
    tree.children[0].label = long.clone();
    tree.node_colors.insert(long, colour);
    let attempts = match feasibility_gate(&ScenarioSpec::Tree(tree), &config) {
        Feasibility::Rejected { attempts, rejection } => {
            ensure(rejection.reason.contains("overflow"), rejection.reason)?;
            attempts
        }
        Feasibility::Accepted(_) => return Err("overflowing spec accepted".into()),
    };
    ensure(attempts == 3, format!("{attempts} attempts"))?;

    let mut sb = SceneBuilder::new(Canvas::default());
    for _ in 0..2 {
        sb.push_role("title", Primitive::text(40.0, 100.0, "Quarterly Revenue", TextAnchor::Start, StyleSpec::text(Rgb::BLACK, 40.0)));
    }
    let scene = sb.finish().map_err(|e| e.to_string())?;
    let tags: Vec<&str> = aesthetics_gate(&scene, &config).iter().map(|v| v.kind.tag()).collect();
    ensure(tags.contains(&"interference"), format!("violations {tags:?}"))?;

    let run = RunConfig { seed: 6, counts: Scenario::ALL.iter().map(|s| (*s, 4)).collect(), ..RunConfig::default() };
    let out = pipeline::generate(&run).map_err(|e| e.to_string())?;
    for (entry, (_, svg)) in out.specs.iter().zip(&out.images) {
        let Feasibility::Accepted(f) = feasibility_gate(&entry.spec, &config) else {
            return Err(format!("{} rejected on re-gating", entry.image_id));
        };
        ensure(aesthetics_gate(&f.scene, &config).is_empty(), format!("{} fails aesthetics on re-gating", entry.image_id))?;
        let records: Vec<_> = out.manifest.records.iter().filter(|r| r.provenance.image_id == entry.image_id).cloned().collect();
        accuracy_gate(&records, &entry.spec).map_err(|r| r.reason)?;
        ensure(render_svg(&f.scene).map_err(|e| e.to_string())? == *svg, format!("{} renders differently on re-gating", entry.image_id))?;
    }
    Ok(format!("rejected after {attempts} attempts; overlap -> interference; {} accepted images re-gate unchanged", out.specs.len()))
}

fn tree_constraints() -> Check {
    for seed in 0..500 {
        let topic = DEPARTMENTS[seed as usize % DEPARTMENTS.len()];
        let t = sample_tree_spec(seed, topic);
        t.check().map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(t.node_count() <= 8, format!("seed {seed}: {} nodes", t.node_count()))?;
        let widest = t.layers().iter().map(Vec::len).max().unwrap_or(0);
        ensure(widest <= 3, format!("seed {seed}: layer of {widest}"))?;
    }
    let qs = tree_questions(&digital_forensics());
    let q = qs.iter().find(|d| d.question.contains("How many departments")).ok_or("no departments question")?;
    ensure(q.answer == "2", format!("forensics answer {}", q.answer))?;
    Ok("500 trees within 8 nodes and 3 per layer; forensics departments = 2".into())
}

fn determinism() -> Check {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    for dir in [a.path(), b.path()] {
        let d = dir.to_str().unwrap();
        ok(&absynth(&["gen", "--all", "--count", "6", "--seed", "42", "--out", d]))?;
        let manifest = dir.join(pipeline::MANIFEST_FILE);
        let m = manifest.to_str().unwrap();
        ok(&absynth(&["stats", "--manifest", m]))?;
        ok(&absynth(&["gallery", "--manifest", m]))?;
        ok(&absynth(&["review", "--manifest", m, "--seed", "42"]))?;
    }
    let (sa, sb) = (snapshot(a.path()), snapshot(b.path()));
    ensure(sa.len() > 40, format!("only {} files", sa.len()))?;
    ensure(sa.keys().eq(sb.keys()), "file sets differ")?;
    if let Some((path, _)) = sa.iter().find(|(k, v)| sb[*k] != **v) {
        return Err(format!("{} differs", path.display()));
    }
    Ok(format!("{} files byte-identical across two runs", sa.len()))
}

fn eval_fixture() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let gold = fixture("eval_gold.jsonl");
    let pred = fixture("eval_pred.jsonl");
    ok(&absynth(&["eval", "--gold", gold.to_str().unwrap(), "--pred", pred.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]))?;
    let text = std::fs::read_to_string(dir.path().join("score_report.json")).map_err(|e| e.to_string())?;
    let report = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    reports_match(&report, &expected_fixture_report())?;
    Ok("12-record fixture matches the hand-computed report".into())
}

fn statistics_shape() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("run");
    let counts = [(Scenario::Chart, 149), (Scenario::Table, 58), (Scenario::RoadMap, 300)];
    let mut toml = format!("seed = 5\nout = {:?}\n[counts]\n", out.to_str().unwrap());
    for (s, n) in counts {
        toml.push_str(&format!("{} = {n}\n", s.tag()));
    }
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, toml).map_err(|e| e.to_string())?;
    ok(&absynth(&["gen", "--config", cfg.to_str().unwrap()]))?;
    let manifest = out.join(pipeline::MANIFEST_FILE);
    ok(&absynth(&["stats", "--manifest", manifest.to_str().unwrap()]))?;
    let stats: absynth::eval::DatasetStats =
        serde_json::from_str(&std::fs::read_to_string(out.join("stats.json")).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    for (s, n) in counts {
        let got = stats.per_scenario.get(&s).map_or(0, |c| c.images);
        ensure(got == n, format!("{s}: {got} images, configured {n}"))?;
    }
    ensure(stats.per_scenario.len() == counts.len(), "unexpected scenarios in stats")?;
    let m = pipeline::load_manifest(&manifest).map_err(|e| e.to_string())?;
    ensure(stats.total_instructions == m.records.len() && stats == dataset_stats(&m), "stats disagree with a recount")?;
    Ok(format!("images per scenario 149:58:300 as configured, {} instructions", stats.total_instructions))
}

fn main() {
    let criteria: [(&str, Criterion); 10] = [
        ("end-to-end oracle soundness", end_to_end),
        ("clock fidelity", clock_fidelity),
        ("metric oracles", metric_oracles),
        ("numeric boundary", numeric_boundary),
        ("map difficulty distribution", map_difficulty),
        ("gate bounds", gate_bounds),
        ("tree constraints", tree_constraints),
        ("determinism", determinism),
        ("eval fixture", eval_fixture),
        ("statistics shape", statistics_shape),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2}. {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2}. {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
