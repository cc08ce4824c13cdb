//! Shared helpers for the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::time::Duration;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use ropera::lightpaint::Rgb;
use ropera::{CouplingModel, Frame, MotionFlag, ProfileConfig, ProfileKind, Score, Symbol};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn random_symbol(rng: &mut StdRng) -> Symbol {
    Symbol::from_index(rng.gen_range(0..9)).unwrap()
}

pub fn random_symbols(rng: &mut StdRng, n: usize) -> Vec<Symbol> {
    (0..n).map(|_| random_symbol(rng)).collect()
}

/// Options for [`random_score`].
#[derive(Debug, Clone)]
pub struct ScoreShape {
    pub servos: std::ops::RangeInclusive<usize>,
    pub frames: std::ops::RangeInclusive<usize>,
    /// Durations are multiples of this.
    pub tick: Duration,
    pub ticks: std::ops::RangeInclusive<u32>,
    /// Randomize header settings, poses and labels.
    pub decorate: bool,
}

impl Default for ScoreShape {
    fn default() -> Self {
        ScoreShape {
            servos: 1..=8,
            frames: 1..=12,
            tick: Duration::from_millis(10),
            ticks: 1..=300,
            decorate: true,
        }
    }
}

const LABEL_PIECES: &[&str] = &[
    "rise",
    "glance",
    " ",
    "\"quoted\"",
    "back\\slash",
    "#not a comment",
    "=",
    "Ärmel",
    "袖",
    "",
];

fn random_label(rng: &mut StdRng) -> String {
    (0..rng.gen_range(1..4))
        .map(|_| *LABEL_PIECES.choose(rng).unwrap())
        .collect()
}

pub fn random_score(rng: &mut StdRng, shape: ScoreShape) -> Score {
    let n = rng.gen_range(shape.servos.clone());
    let frames = (0..rng.gen_range(shape.frames.clone()))
        .map(|_| Frame {
            symbols: random_symbols(rng, n),
            flags: (0..n)
                .map(|_| {
                    if rng.gen_bool(0.7) {
                        MotionFlag::Dynamic
                    } else {
                        MotionFlag::Hold
                    }
                })
                .collect(),
            duration: shape.tick * rng.gen_range(shape.ticks.clone()),
            label: (shape.decorate && rng.gen_bool(0.4)).then(|| random_label(rng)),
        })
        .collect();
    let mut score = Score::new(n, frames);
    if !shape.decorate {
        return score;
    }
    if rng.gen_bool(0.5) {
        score.profile = ProfileConfig {
            kind: *ProfileKind::ALL.choose(rng).unwrap(),
            v_max: rng.gen_range(1..=720) as f64 / 2.0,
            transition_fraction: rng.gen_range(1..=100) as f64 / 100.0,
            step_deg: rng.gen_range(1..=40) as f64 / 4.0,
            sample_rate: *[50.0, 100.0, 200.0, 1000.0].choose(rng).unwrap(),
        };
    }
    if n >= 2 && rng.gen_bool(0.4) {
        let driver = rng.gen_range(0..n);
        let driven = (driver + rng.gen_range(1..n)) % n;
        score.coupling = CouplingModel {
            kappa: rng.gen_range(-8..=8) as f64 / 8.0,
            driver,
            driven,
        };
    }
    if rng.gen_bool(0.3) {
        let name = format!("accent_{}", rng.gen_range(0..100));
        score
            .palette
            .insert(&name, Rgb::new(rng.gen(), rng.gen(), rng.gen()));
    }
    if rng.gen_bool(0.5) {
        let mut poses = BTreeMap::new();
        for k in 0..rng.gen_range(1..4) {
            poses.insert(format!("pose_{k}"), random_symbols(rng, n));
        }
        score.poses = poses;
    }
    score
}

/// Parses a bundled score, panicking on error.
pub fn bundled(text: &str) -> Score {
    ropera::parse_score(text).expect("bundled score parses")
}

pub fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Brute-force angle of a default-codebook symbol: the bin center stepped
/// into (−180, 180] one turn at a time, then clamped to ±175.
pub fn codebook_oracle(index: usize) -> f64 {
    let mut a = index as f64 * 45.0;
    while a > 180.0 {
        a -= 360.0;
    }
    while a <= -180.0 {
        a += 360.0;
    }
    a.clamp(-175.0, 175.0)
}
