//! Dashboards: clocks and circular gauges, plus linear thermometers and
//! barometers, with reading, arithmetic and inverse-time questions.
//!
//! Dial angles are degrees clockwise from 12 o'clock. A clock shows only
//! twelve hours, so time answers list the 12-hour form and both 24-hour forms
//! it could stand for.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::record::{AnswerKind, Draft, Query};
use crate::scene::{polar, Canvas, PaletteColor, Primitive, Rgb, SceneBuilder, SceneGraph, Shape, StyleSpec, TextAnchor};
use crate::synth::{self, format_number, number_word, pick, GenError, LayoutParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DialFamily {
    Clock,
    Speedometer,
    Fuel,
    Thermometer,
    Barometer,
}

impl DialFamily {
    pub const ALL: [DialFamily; 5] =
        [DialFamily::Clock, DialFamily::Speedometer, DialFamily::Fuel, DialFamily::Thermometer, DialFamily::Barometer];

    pub fn tag(self) -> &'static str {
        match self {
            DialFamily::Clock => "clock",
            DialFamily::Speedometer => "speedometer",
            DialFamily::Fuel => "fuel",
            DialFamily::Thermometer => "thermometer",
            DialFamily::Barometer => "barometer",
        }
    }

    fn title(self) -> &'static str {
        match self {
            DialFamily::Clock => "Wall Clock",
            DialFamily::Speedometer => "Speedometer",
            DialFamily::Fuel => "Fuel Gauge",
            DialFamily::Thermometer => "Thermometer",
            DialFamily::Barometer => "Barometer",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Reading {
    Time { hour: u8, minute: u8 },
    Value { value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scale {
    pub min: f64,
    pub max: f64,
    pub major_step: f64,
    pub minor_step: f64,
}

impl Scale {
    pub fn fraction(&self, v: f64) -> f64 {
        (v - self.min) / (self.max - self.min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Vertical,
    Horizontal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DialGeometry {
    Circular { start_angle: f64, sweep: f64 },
    Linear { orientation: Orientation, length: f64 },
}

/// Parameters of the arithmetic questions asked about the dial.
///
/// `offset` is hours added to a clock, hours driven at the shown speed, tank
/// capacity in liters for fuel, or the change applied to a temperature or
/// pressure. `inverse_minutes` is the elapsed time for the clock's
/// start-time question.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DialTask {
    pub offset: f64,
    pub inverse_minutes: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialSpec {
    pub family: DialFamily,
    pub reading: Reading,
    pub scale: Scale,
    pub geometry: DialGeometry,
    pub unit: String,
    pub accent: PaletteColor,
    pub task: DialTask,
}

impl DialSpec {
    pub fn check(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::InvalidSpec(m.to_string()));
        let s = &self.scale;
        if !(s.min < s.max && s.major_step > 0.0 && s.minor_step > 0.0) {
            return bad("degenerate scale");
        }
        match (self.family, self.reading) {
            (DialFamily::Clock, Reading::Time { hour, minute }) => {
                if hour > 23 || minute > 59 {
                    return bad("time out of range");
                }
            }
            (DialFamily::Clock, _) | (_, Reading::Time { .. }) => return bad("clock readings are times"),
            (_, Reading::Value { value }) => {
                if !(s.min..=s.max).contains(&value) {
                    return bad("reading outside scale");
                }
            }
        }
        if let DialGeometry::Circular { sweep, .. } = self.geometry {
            if !(sweep > 0.0 && sweep <= 360.0) {
                return bad("sweep outside (0, 360]");
            }
        }
        Ok(())
    }

    pub fn value(&self) -> Option<f64> {
        match self.reading {
            Reading::Value { value } => Some(value),
            Reading::Time { .. } => None,
        }
    }
}

/// (hour hand, minute hand) angles for a time.
pub fn clock_hand_angles(hour: u8, minute: u8) -> (f64, f64) {
    (30.0 * f64::from(hour % 12) + 0.5 * f64::from(minute), 6.0 * f64::from(minute))
}

pub fn sample_dial_spec(seed: u64, family: Option<DialFamily>) -> DialSpec {
    let mut rng = synth::rng(seed, "dial");
    let family = family.unwrap_or_else(|| *pick(&mut rng, &DialFamily::ALL));
    let accent = *pick(&mut rng, &[PaletteColor::Red, PaletteColor::Blue, PaletteColor::Navy, PaletteColor::Black, PaletteColor::Purple]);
    match family {
        DialFamily::Clock => DialSpec {
            family,
            reading: Reading::Time { hour: rng.gen_range(0..24), minute: 5 * rng.gen_range(0..12) },
            scale: Scale { min: 0.0, max: 12.0, major_step: 1.0, minor_step: 0.2 },
            geometry: DialGeometry::Circular { start_angle: 0.0, sweep: 360.0 },
            unit: "h".into(),
            accent,
            task: DialTask { offset: f64::from(rng.gen_range(1..=11)), inverse_minutes: 30 * rng.gen_range(1..=10) },
        },
        DialFamily::Speedometer => {
            let max = *pick(&mut rng, &[160.0, 200.0, 240.0]);
            DialSpec {
                family,
                reading: Reading::Value { value: f64::from(rng.gen_range(0..=(max as u32) / 2)) * 2.0 },
                scale: Scale { min: 0.0, max, major_step: 20.0, minor_step: 10.0 },
                geometry: DialGeometry::Circular { start_angle: -120.0, sweep: 240.0 },
                unit: "km/h".into(),
                accent,
                task: DialTask { offset: *pick(&mut rng, &[0.5, 1.0, 1.5, 2.0, 3.0]), inverse_minutes: 0 },
            }
        }
        DialFamily::Fuel => DialSpec {
            family,
            reading: Reading::Value { value: f64::from(rng.gen_range(0..=20)) / 20.0 },
            scale: Scale { min: 0.0, max: 1.0, major_step: 0.25, minor_step: 0.125 },
            geometry: DialGeometry::Circular { start_angle: -90.0, sweep: 180.0 },
            unit: "tank".into(),
            accent,
            task: DialTask { offset: *pick(&mut rng, &[40.0, 48.0, 50.0, 60.0, 64.0, 80.0]), inverse_minutes: 0 },
        },
        DialFamily::Thermometer => {
            let min = *pick(&mut rng, &[-30.0, -20.0, -10.0]);
            let max = min + 70.0;
            DialSpec {
                family,
                reading: Reading::Value { value: f64::from(rng.gen_range(min as i32..=max as i32)) },
                scale: Scale { min, max, major_step: 10.0, minor_step: 2.0 },
                geometry: DialGeometry::Linear { orientation: Orientation::Vertical, length: 320.0 },
                unit: "°C".into(),
                accent,
                task: DialTask { offset: f64::from(rng.gen_range(2..=15)), inverse_minutes: 0 },
            }
        }
        DialFamily::Barometer => DialSpec {
            family,
            reading: Reading::Value { value: f64::from(rng.gen_range(960..=1040)) },
            scale: Scale { min: 950.0, max: 1050.0, major_step: 10.0, minor_step: 2.0 },
            geometry: DialGeometry::Linear { orientation: Orientation::Horizontal, length: 480.0 },
            unit: "hPa".into(),
            accent,
            task: DialTask { offset: f64::from(rng.gen_range(2..=20)), inverse_minutes: 0 },
        },
    }
}

const FACE: Rgb = Rgb(250, 250, 245);
const INK: Rgb = Rgb(30, 30, 30);
const CENTER: (f64, f64) = (320.0, 260.0);
const RADIUS: f64 = 180.0;

fn fuel_label(v: f64) -> String {
    match (v * 4.0).round() as i32 {
        0 => "E".into(),
        1 => "1/4".into(),
        2 => "1/2".into(),
        3 => "3/4".into(),
        4 => "F".into(),
        _ => format_number(v),
    }
}

fn steps(scale: &Scale, step: f64) -> Vec<f64> {
    let n = ((scale.max - scale.min) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| scale.min + step * k as f64).collect()
}

fn title(sb: &mut SceneBuilder, spec: &DialSpec, font: f64) {
    sb.push_role("title", Primitive::text(320.0, 12.0, spec.family.title(), TextAnchor::Middle, StyleSpec::text(INK, font * 1.3)));
}

fn circular(sb: &mut SceneBuilder, spec: &DialSpec, start: f64, sweep: f64, font: f64) -> Result<(), GenError> {
    let (cx, cy) = CENTER;
    let r = RADIUS;
    if sweep >= 360.0 {
        sb.push_role("face", Primitive::circle(cx, cy, r, StyleSpec::filled_outline(FACE, INK, 4.0)));
    } else {
        sb.push_role(
            "face",
            Primitive::new(Shape::Wedge { cx, cy, r, start: start - 10.0, sweep: sweep + 20.0 }, StyleSpec::filled_outline(FACE, INK, 3.0)),
        );
    }
    let angle = |v: f64| start + sweep * spec.scale.fraction(v);
    let ticks = StyleSpec::stroke(INK, 1.5);
    for v in steps(&spec.scale, spec.scale.minor_step) {
        if spec.family == DialFamily::Clock && v >= 12.0 {
            continue;
        }
        let a = angle(v);
        let major = ((v - spec.scale.min) / spec.scale.major_step).round() * spec.scale.major_step + spec.scale.min;
        let is_major = (major - v).abs() < 1e-9;
        let inner = if is_major { 0.86 } else { 0.92 };
        let (x1, y1) = polar(cx, cy, r * inner, a);
        let (x2, y2) = polar(cx, cy, r * 0.98, a);
        sb.push_role("tick", Primitive::line(x1, y1, x2, y2, if is_major { StyleSpec::stroke(INK, 3.0) } else { ticks.clone() }));
        if is_major {
            let label = match spec.family {
                DialFamily::Clock => format_number(if v == 0.0 { 12.0 } else { v }),
                DialFamily::Fuel => fuel_label(v),
                _ => format_number(v),
            };
            let (lx, ly) = polar(cx, cy, r * 0.72, a);
            let w = crate::scene::text_extent(&label, font).0;
            if w > r * 0.5 {
                return Err(GenError::LayoutOverflow(format!("dial label `{label}` is {w:.1} wide")));
            }
            sb.push_role("tick_label", Primitive::text(lx, ly - font / 2.0, label, TextAnchor::Middle, StyleSpec::text(INK, font)));
        }
    }
    let hand = |sb: &mut SceneBuilder, role: &str, a: f64, len: f64, width: f64, color: Rgb| {
        let (x, y) = polar(cx, cy, r * len, a);
        sb.push_role(role, Primitive::line(cx, cy, x, y, StyleSpec::stroke(color, width)).at_z(3));
    };
    match spec.reading {
        Reading::Time { hour, minute } => {
            let (ha, ma) = clock_hand_angles(hour, minute);
            hand(sb, "hour_hand", ha, 0.5, 7.0, INK);
            hand(sb, "minute_hand", ma, 0.8, 3.5, INK);
        }
        Reading::Value { value } => {
            hand(sb, "needle", angle(value), 0.8, 3.0, spec.accent.rgb());
            let unit = if spec.family == DialFamily::Fuel { "FUEL".to_string() } else { spec.unit.clone() };
            sb.push_role("unit_label", Primitive::text(cx, cy + r * 0.3, unit, TextAnchor::Middle, StyleSpec::text(INK, font)));
        }
    }
    sb.push_role("pivot", Primitive::circle(cx, cy, 6.0, StyleSpec::fill(INK)).at_z(4));
    Ok(())
}

/// Tube from `origin` towards increasing values; returns nothing, tags `tube` and `level`.
fn linear(sb: &mut SceneBuilder, spec: &DialSpec, orientation: Orientation, length: f64, font: f64) -> Result<(), GenError> {
    let value = spec.value().expect("linear gauges hold values");
    let thick = 18.0;
    let frac = spec.scale.fraction(value);
    let fill = StyleSpec::fill(spec.accent);
    match orientation {
        Orientation::Vertical => {
            let (x, bottom) = (300.0, 60.0 + length + 40.0);
            let top = bottom - length;
            sb.push_role("tube", Primitive::rect(x, top, thick, length, StyleSpec::filled_outline(FACE, INK, 2.0)));
            sb.push_role("bulb", Primitive::circle(x + thick / 2.0, bottom + 16.0, 20.0, fill.clone()).at_z(1));
            sb.push_role("level", Primitive::rect(x, bottom - frac * length, thick, frac * length, fill).at_z(2));
            for v in steps(&spec.scale, spec.scale.minor_step) {
                let y = bottom - spec.scale.fraction(v) * length;
                let major = ((v - spec.scale.min) / spec.scale.major_step).fract().abs() < 1e-9;
                let w = if major { 14.0 } else { 7.0 };
                sb.push_role("tick", Primitive::line(x + thick, y, x + thick + w, y, StyleSpec::stroke(INK, 1.5)));
                if major {
                    sb.push_role(
                        "tick_label",
                        Primitive::text(x + thick + 20.0, y - font / 2.0, format_number(v), TextAnchor::Start, StyleSpec::text(INK, font)),
                    );
                }
            }
            sb.push_role(
                "unit_label",
                Primitive::text(x - 16.0, top - font / 2.0, spec.unit.clone(), TextAnchor::End, StyleSpec::text(INK, font)),
            );
        }
        Orientation::Horizontal => {
            let (left, y) = ((640.0 - length) / 2.0, 220.0);
            let step_px = length * spec.scale.major_step / (spec.scale.max - spec.scale.min);
            let widest = crate::scene::text_extent(&format_number(spec.scale.max), font).0;
            if widest > step_px - 4.0 {
                return Err(GenError::LayoutOverflow(format!("scale labels need {widest:.1} units, {step_px:.1} apart")));
            }
            sb.push_role("tube", Primitive::rect(left, y, length, thick, StyleSpec::filled_outline(FACE, INK, 2.0)));
            sb.push_role("level", Primitive::rect(left, y, frac * length, thick, fill).at_z(2));
            for v in steps(&spec.scale, spec.scale.minor_step) {
                let x = left + spec.scale.fraction(v) * length;
                let major = ((v - spec.scale.min) / spec.scale.major_step).fract().abs() < 1e-9;
                let h = if major { 14.0 } else { 7.0 };
                sb.push_role("tick", Primitive::line(x, y + thick, x, y + thick + h, StyleSpec::stroke(INK, 1.5)));
                if major {
                    sb.push_role(
                        "tick_label",
                        Primitive::text(x, y + thick + 20.0, format_number(v), TextAnchor::Middle, StyleSpec::text(INK, font)),
                    );
                }
            }
            sb.push_role(
                "unit_label",
                Primitive::text(320.0, y + thick + 30.0 + font * 1.5, spec.unit.clone(), TextAnchor::Middle, StyleSpec::text(INK, font)),
            );
        }
    }
    Ok(())
}

pub fn build_dial_scene(spec: &DialSpec, layout: &LayoutParams) -> Result<SceneGraph, GenError> {
    spec.check()?;
    let mut sb = SceneBuilder::new(Canvas::default());
    let font = layout.font_size;
    title(&mut sb, spec, font);
    match spec.geometry {
        DialGeometry::Circular { start_angle, sweep } => circular(&mut sb, spec, start_angle, sweep, font)?,
        DialGeometry::Linear { orientation, length } => linear(&mut sb, spec, orientation, length, font)?,
    }
    Ok(sb.finish()?)
}

fn line_angle(p: &Primitive) -> Option<f64> {
    match p.shape {
        Shape::Line { x1, y1, x2, y2 } => Some((x2 - x1).atan2(y1 - y2).to_degrees().rem_euclid(360.0)),
        _ => None,
    }
}

/// Reads the dial back from rendered geometry. Only `family`, `scale` and
/// `geometry` of `spec` are consulted; clocks decode to a 12-hour time
/// (hour in 0..12).
pub fn decode_reading(scene: &SceneGraph, spec: &DialSpec) -> Option<Reading> {
    match spec.geometry {
        DialGeometry::Circular { start_angle, sweep } => {
            if spec.family == DialFamily::Clock {
                let ma = line_angle(scene.role_primitives("minute_hand").next()?)?;
                let ha = line_angle(scene.role_primitives("hour_hand").next()?)?;
                let minute = ((ma / 6.0).round() as u32 % 60) as u8;
                let hour = (((ha - 0.5 * f64::from(minute)) / 30.0).round().rem_euclid(12.0)) as u8;
                return Some(Reading::Time { hour, minute });
            }
            let a = line_angle(scene.role_primitives("needle").next()?)?;
            let rel = (a - start_angle).rem_euclid(360.0);
            let frac = rel / sweep;
            Some(Reading::Value { value: spec.scale.min + frac * (spec.scale.max - spec.scale.min) })
        }
        DialGeometry::Linear { orientation, .. } => {
            let tube = scene.role_primitives("tube").next()?;
            let level = scene.role_primitives("level").next()?;
            let (Shape::Rectangle { width: tw, height: th, .. }, Shape::Rectangle { width: lw, height: lh, .. }) =
                (&tube.shape, &level.shape)
            else {
                return None;
            };
            let frac = match orientation {
                Orientation::Vertical => lh / th,
                Orientation::Horizontal => lw / tw,
            };
            Some(Reading::Value { value: spec.scale.min + frac * (spec.scale.max - spec.scale.min) })
        }
    }
}

pub fn format_time(hour: u32, minute: u32) -> String {
    format!("{hour}:{minute:02}")
}

/// 12-hour dial position of a 24-hour hour: 1..=12.
pub fn twelve_hour(hour: u32) -> u32 {
    match hour % 12 {
        0 => 12,
        h => h,
    }
}

/// Every string a clock position could be written as: the 12-hour form first,
/// then the morning and evening 24-hour forms.
pub fn time_forms(hour: u32, minute: u32) -> Vec<String> {
    let h = hour % 12;
    let mut out = vec![format_time(twelve_hour(h), minute)];
    for f in [format_time(h, minute), format_time(h + 12, minute)] {
        if !out.contains(&f) {
            out.push(f);
        }
    }
    out
}

pub fn duration_words(minutes: u32) -> String {
    let hours = minutes / 60;
    let half = minutes % 60 == 30;
    match (hours, half) {
        (0, true) => "half an hour".into(),
        (1, false) => "one hour".into(),
        (h, false) => format!("{} hours", number_word(h as usize)),
        (h, true) => format!("{} and a half hours", number_word(h as usize)),
    }
}

fn hours_words(h: f64) -> String {
    if h == 1.0 {
        "1 hour".into()
    } else {
        format!("{} hours", format_number(h))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "ask", rename_all = "snake_case")]
pub enum DialQuery {
    Reading,
    Offset,
    Inverse,
    ScaleArithmetic,
}

/// Hour-hand numbers at a 12-hour position: one number on the hour, else the
/// two it sits between.
pub fn hour_hand_numbers(hour: u32, minute: u32) -> Vec<u32> {
    let h = twelve_hour(hour);
    if minute == 0 {
        vec![h]
    } else {
        vec![h, if h == 12 { 1 } else { h + 1 }]
    }
}

pub fn dial_questions(spec: &DialSpec) -> Vec<Draft> {
    let q = Query::Dial;
    match spec.reading {
        Reading::Time { hour, minute } => {
            let (hour, minute) = (u32::from(hour), u32::from(minute));
            let shown = time_forms(hour, minute);
            let reading =
                Draft::new("What time is shown on the dial?", shown[0].clone(), AnswerKind::Phrase, "reading", q(DialQuery::Reading))
                    .with_alternates(shown.iter().skip(1).cloned());

            let n = spec.task.offset as u32;
            let later = time_forms(hour + n, minute);
            let offset = Draft::new(
                format!("If I start working at the time shown and work for {n} hours, what time will it be when I finish?"),
                later.join(" or "),
                AnswerKind::Phrase,
                "offset_arithmetic",
                q(DialQuery::Offset),
            )
            .with_alternates(later.clone())
            .with_rationale(format!(
                "The dial shows {}. Adding {n} hours gives {}, which reads {} on a 12-hour clock.",
                shown[0],
                later[later.len() - 1],
                later[0]
            ));

            let dm = spec.task.inverse_minutes;
            let start_total = ((hour % 12) * 60 + minute + 12 * 60 - dm % (12 * 60)) % (12 * 60);
            let (sh, sm) = (start_total / 60, start_total % 60);
            let numbers = hour_hand_numbers(sh, sm);
            let words: Vec<String> = numbers.iter().map(u32::to_string).collect();
            let position = if numbers.len() == 1 {
                format!("pointing exactly at {}", words[0])
            } else {
                format!("between {} and {}", words[0], words[1])
            };
            let mut inverse = Draft::new(
                format!(
                    "I finished exercising at the time shown after exercising for {}. When I started, which number was the hour hand pointing at?",
                    duration_words(dm)
                ),
                words.join(" or "),
                AnswerKind::Phrase,
                "inverse_reasoning",
                q(DialQuery::Inverse),
            )
            .with_rationale(format!(
                "The dial shows {}. Going back {} ({}:{:02}) gives {}, so the hour hand was {position}.",
                shown[0],
                duration_words(dm),
                dm / 60,
                dm % 60,
                format_time(twelve_hour(sh), sm)
            ));
            if words.len() > 1 {
                inverse = inverse.with_alternates(words);
            }
            vec![reading, offset, inverse]
        }
        Reading::Value { value } => {
            let v = format_number(value);
            let t = spec.task.offset;
            let (read_q, arith_q, answer, why) = match spec.family {
                DialFamily::Speedometer => (
                    "What speed does the speedometer show, in km/h?".to_string(),
                    format!("If the car keeps this speed for {}, how many kilometers will it travel?", hours_words(t)),
                    value * t,
                    format!(
                        "The speedometer shows {v} km/h. Over {} the car travels {v} × {} = {} km.",
                        hours_words(t),
                        format_number(t),
                        format_number(value * t)
                    ),
                ),
                DialFamily::Fuel => (
                    "What fraction of the tank is full? Answer as a decimal.".to_string(),
                    format!("The tank holds {} liters. How many liters of fuel are left?", format_number(t)),
                    value * t,
                    format!(
                        "The gauge shows the tank is {v} full. With a {} liter tank that is {v} × {} = {} liters.",
                        format_number(t),
                        format_number(t),
                        format_number(value * t)
                    ),
                ),
                DialFamily::Thermometer => (
                    "What temperature does the thermometer show, in °C?".to_string(),
                    format!("If the temperature rises by {} °C, what will the thermometer read?", format_number(t)),
                    value + t,
                    format!(
                        "The thermometer shows {v} °C. Rising by {} °C gives {v} + {} = {} °C.",
                        format_number(t),
                        format_number(t),
                        format_number(value + t)
                    ),
                ),
                DialFamily::Barometer => (
                    "What pressure does the barometer show, in hPa?".to_string(),
                    format!("If the pressure drops by {} hPa, what will the barometer read?", format_number(t)),
                    value - t,
                    format!(
                        "The barometer shows {v} hPa. Dropping by {} hPa gives {v} - {} = {} hPa.",
                        format_number(t),
                        format_number(t),
                        format_number(value - t)
                    ),
                ),
                DialFamily::Clock => unreachable!("clocks read times"),
            };
            vec![
                Draft::new(read_q, v, AnswerKind::Numeric, "reading", q(DialQuery::Reading)),
                Draft::new(arith_q, format_number(answer), AnswerKind::Numeric, "scale_arithmetic", q(DialQuery::ScaleArithmetic))
                    .with_rationale(why),
            ]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clock(hour: u8, minute: u8, offset: f64, inverse_minutes: u32) -> DialSpec {
        let mut s = sample_dial_spec(0, Some(DialFamily::Clock));
        s.reading = Reading::Time { hour, minute };
        s.task = DialTask { offset, inverse_minutes };
        s
    }

    #[test]
    fn hand_angles_for_eight_ten() {
        assert_eq!(clock_hand_angles(8, 10), (245.0, 60.0));
        assert_eq!(clock_hand_angles(20, 10), (245.0, 60.0));
    }

    #[test]
    fn eight_ten_answers() {
        let qs = dial_questions(&clock(8, 10, 8.0, 90));
        assert_eq!(qs[0].answer, "8:10");
        assert_eq!(qs[1].answer, "4:10 or 16:10");
        assert_eq!(qs[1].alternates, vec!["4:10", "16:10"]);
        assert!(qs[1].question.contains("8 hours"));
        assert_eq!(qs[2].answer, "6 or 7");
        assert!(qs[2].question.contains("one and a half hours"));
        for d in &qs[1..] {
            let r = d.rationale.as_deref().unwrap();
            assert!(r.contains("8:10"));
        }
        assert!(qs[1].rationale.as_deref().unwrap().contains("8 hours"));
        assert!(qs[2].rationale.as_deref().unwrap().contains("one and a half hours"));
    }

    #[test]
    fn inverse_on_the_hour_is_single() {
        let qs = dial_questions(&clock(8, 30, 1.0, 90));
        assert_eq!(qs[2].answer, "7");
        let qs = dial_questions(&clock(0, 20, 1.0, 60));
        assert_eq!(qs[2].answer, "11 or 12");
        let qs = dial_questions(&clock(0, 40, 1.0, 30));
        assert_eq!(qs[2].answer, "12 or 1");
        let qs = dial_questions(&clock(13, 30, 1.0, 30));
        assert_eq!(qs[2].answer, "1");
    }

    #[test]
    fn twelve_oclock_forms() {
        assert_eq!(time_forms(0, 5), vec!["12:05".to_string(), "0:05".to_string()]);
        assert_eq!(time_forms(12, 0), vec!["12:00".to_string(), "0:00".to_string()]);
    }

    #[test]
    fn clock_round_trip() {
        for h in 0..24 {
            for m in (0..60).step_by(5) {
                let s = clock(h, m, 3.0, 60);
                let scene = build_dial_scene(&s, &LayoutParams::default()).unwrap();
                assert_eq!(decode_reading(&scene, &s), Some(Reading::Time { hour: h % 12, minute: m }));
            }
        }
    }

    #[test]
    fn gauge_round_trip_within_half_minor_tick() {
        for seed in 0..200 {
            let s = sample_dial_spec(seed, None);
            let scene = build_dial_scene(&s, &LayoutParams::default()).unwrap();
            if let (Some(Reading::Value { value }), Some(v)) = (decode_reading(&scene, &s), s.value()) {
                assert!((value - v).abs() <= s.scale.minor_step / 2.0, "seed {seed}: {value} vs {v}");
            }
        }
    }

    #[test]
    fn fuel_reading_is_a_tank_fraction() {
        for seed in 0..50 {
            let v = sample_dial_spec(seed, Some(DialFamily::Fuel)).value().unwrap();
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn thermometer_direct_reading() {
        let mut s = sample_dial_spec(1, Some(DialFamily::Thermometer));
        s.reading = Reading::Value { value: 23.0 };
        let qs = dial_questions(&s);
        assert_eq!(qs[0].answer, "23");
        let r = qs[1].rationale.as_deref().unwrap();
        assert!(r.contains("23") && r.contains(&format_number(s.task.offset)));
    }

    #[test]
    fn deterministic() {
        for seed in 0..20 {
            assert_eq!(sample_dial_spec(seed, None), sample_dial_spec(seed, None));
            sample_dial_spec(seed, None).check().unwrap();
        }
    }
}
