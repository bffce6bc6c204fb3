//! Plumbing shared by the scenario generators.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::SceneError;

pub type SeededRng = ChaCha8Rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("layout overflow: {0}")]
    LayoutOverflow(String),
    #[error("degenerate map after {attempts} attempts")]
    DegenerateMap { attempts: u32 },
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

/// Knobs the feasibility gate perturbs between attempts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayoutParams {
    pub font_size: f64,
}

pub const DEFAULT_FONT_SIZE: f64 = 14.0;

impl Default for LayoutParams {
    fn default() -> Self {
        LayoutParams { font_size: DEFAULT_FONT_SIZE }
    }
}

/// SplitMix64 finaliser; used to derive independent sub-seeds.
pub fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a over a string, for stable string-keyed salts.
pub fn fnv(text: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

pub fn rng(seed: u64, stream: &str) -> SeededRng {
    ChaCha8Rng::seed_from_u64(mix(seed, fnv(stream)))
}

pub fn pick<'a, T>(rng: &mut SeededRng, items: &'a [T]) -> &'a T {
    items.choose(rng).expect("non-empty choice set")
}

/// `n` distinct items in random order.
pub fn pick_distinct<T: Clone>(rng: &mut SeededRng, items: &[T], n: usize) -> Vec<T> {
    items.choose_multiple(rng, n).cloned().collect()
}

pub fn chance(rng: &mut SeededRng, p: f64) -> bool {
    rng.gen_bool(p.clamp(0.0, 1.0))
}

/// Integers print without a fraction; other values with at most two decimals.
pub fn format_number(v: f64) -> String {
    if (v - v.round()).abs() < 1e-9 {
        let r = v.round();
        if r == 0.0 {
            "0".to_string()
        } else {
            format!("{r:.0}")
        }
    } else {
        let s = format!("{v:.2}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

pub fn ordinal(n: usize) -> &'static str {
    match n {
        1 => "first",
        2 => "second",
        3 => "third",
        4 => "fourth",
        5 => "fifth",
        6 => "sixth",
        _ => "next",
    }
}

pub fn number_word(n: usize) -> String {
    const WORDS: [&str; 13] = ["zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven", "twelve"];
    WORDS.get(n).map_or_else(|| n.to_string(), |w| (*w).to_string())
}

pub fn choice_letter(index: usize) -> char {
    (b'A' + index as u8) as char
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formatting() {
        assert_eq!(format_number(30.0), "30");
        assert_eq!(format_number(-0.0), "0");
        assert_eq!(format_number(22.5), "22.5");
        assert_eq!(format_number(1.0 / 3.0), "0.33");
        assert_eq!(format_number(1234.0), "1234");
    }

    #[test]
    fn streams_are_independent_and_stable() {
        let a: u64 = rng(7, "chart").gen();
        let b: u64 = rng(7, "map").gen();
        assert_ne!(a, b);
        assert_eq!(a, rng(7, "chart").gen::<u64>());
    }
}
