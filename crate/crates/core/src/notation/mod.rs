//! Score documents: symbol vectors, motion flags and frame durations.
//!
//! The concrete syntax is line oriented; `docs/grammar.md` has the EBNF.
//!
//! ```text
//! ropera 1
//! servos 6
//! frame S=ABHHAD M=DDDDDD T=2.0
//! ```

mod codebook;
mod lexer;
mod parse;
mod write;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use thiserror::Error;

use crate::decoder::CouplingModel;
use crate::lightpaint::Palette;
use crate::trajectory::{ConfigError, ProfileConfig};

pub use codebook::{
    default_codebook, normalize_degrees, Codebook, CodebookError, Symbol, DEFAULT_BIN_DEGREES,
    DEFAULT_CLIP_LIMIT, DEFAULT_SYMBOL_COUNT,
};
pub use parse::{parse_score, parse_score_bytes, ParseError, ParseErrorKind};
pub use write::{format_seconds, serialize_score};

pub(crate) use lexer::tokenize;
pub(crate) use parse::parse_symbols;

/// Current document version written by [`serialize_score`].
pub const FORMAT_VERSION: u32 = 1;

/// Per-joint motion flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MotionFlag {
    /// Move to the frame's symbol.
    Dynamic,
    /// Keep the previously commanded angle.
    Hold,
}

impl MotionFlag {
    pub fn as_char(self) -> char {
        match self {
            MotionFlag::Dynamic => 'D',
            MotionFlag::Hold => 'H',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'D' => Some(MotionFlag::Dynamic),
            'H' => Some(MotionFlag::Hold),
            _ => None,
        }
    }
}

impl fmt::Display for MotionFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown motion flag {0:?}")]
pub struct UnknownFlag(pub String);

impl FromStr for MotionFlag {
    type Err = UnknownFlag;

    /// Accepts `D`, `Default`, `Dynamic`, `H` and `Hold`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "D" | "Default" | "Dynamic" => Ok(MotionFlag::Dynamic),
            "H" | "Hold" => Ok(MotionFlag::Hold),
            _ => Err(UnknownFlag(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub symbols: Vec<Symbol>,
    pub flags: Vec<MotionFlag>,
    pub duration: Duration,
    pub label: Option<String>,
}

impl Frame {
    pub fn duration_s(&self) -> f64 {
        self.duration.as_secs_f64()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Score {
    pub version: u32,
    pub servo_count: usize,
    pub codebook: Codebook,
    pub profile: ProfileConfig,
    pub coupling: CouplingModel,
    pub palette: Palette,
    pub poses: BTreeMap<String, Vec<Symbol>>,
    pub frames: Vec<Frame>,
}

/// Invariant violations of an in-memory [`Score`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    #[error("score has no frames")]
    NoFrames,
    #[error("servo count must be at least 1")]
    NoServos,
    #[error("frame {frame}: {field} has {found} entries, expected {expected}")]
    FrameLength {
        frame: usize,
        field: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("frame {frame}: symbol {symbol} is not in the codebook")]
    FrameSymbol { frame: usize, symbol: Symbol },
    #[error("frame {0}: duration must be positive")]
    NonPositiveDuration(usize),
    #[error("frame {0}: label must be a single line")]
    BadLabel(usize),
    #[error("pose {name:?}: {reason}")]
    BadPose { name: String, reason: String },
    #[error("profile: {0}")]
    Profile(#[from] ConfigError),
    #[error("coupling: {0}")]
    Coupling(String),
    #[error("palette: {0}")]
    Palette(String),
}

impl Score {
    /// A score with default header settings and the given frames.
    pub fn new(servo_count: usize, frames: Vec<Frame>) -> Self {
        Score {
            version: FORMAT_VERSION,
            servo_count,
            codebook: default_codebook(),
            profile: ProfileConfig::default(),
            coupling: CouplingModel::default(),
            palette: Palette::default(),
            poses: BTreeMap::new(),
            frames,
        }
    }

    /// Sum of all frame durations, exact to the nanosecond.
    pub fn total_duration(&self) -> Duration {
        self.frames.iter().map(|f| f.duration).sum()
    }

    pub fn validate(&self) -> Result<(), ScoreError> {
        let n = self.servo_count;
        if n == 0 {
            return Err(ScoreError::NoServos);
        }
        if self.frames.is_empty() {
            return Err(ScoreError::NoFrames);
        }
        for (name, symbols) in &self.poses {
            let bad = |reason: String| ScoreError::BadPose {
                name: name.clone(),
                reason,
            };
            if !is_identifier(name) {
                return Err(bad("name is not an identifier".into()));
            }
            if symbols.len() != n {
                return Err(bad(format!("{} symbols, expected {n}", symbols.len())));
            }
            if let Some(s) = symbols.iter().find(|s| !self.codebook.contains(**s)) {
                return Err(bad(format!("symbol {s} is not in the codebook")));
            }
        }
        for (i, frame) in self.frames.iter().enumerate() {
            for (field, found) in [("S", frame.symbols.len()), ("M", frame.flags.len())] {
                if found != n {
                    return Err(ScoreError::FrameLength {
                        frame: i,
                        field,
                        expected: n,
                        found,
                    });
                }
            }
            if let Some(&symbol) = frame.symbols.iter().find(|s| !self.codebook.contains(**s)) {
                return Err(ScoreError::FrameSymbol { frame: i, symbol });
            }
            if frame.duration.is_zero() {
                return Err(ScoreError::NonPositiveDuration(i));
            }
            if frame
                .label
                .as_deref()
                .is_some_and(|l| l.contains(['\n', '\r']))
            {
                return Err(ScoreError::BadLabel(i));
            }
        }
        self.profile.validate()?;
        self.coupling
            .validate(n)
            .map_err(|e| ScoreError::Coupling(e.to_string()))?;
        if let Some(name) = self.palette.names().find(|name| !is_identifier(name)) {
            return Err(ScoreError::Palette(format!(
                "color name {name:?} is not an identifier"
            )));
        }
        Ok(())
    }
}

/// `[A-Za-z_][A-Za-z0-9_]*`
pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}
