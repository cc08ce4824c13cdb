use std::collections::BTreeMap;
use std::fmt;
use std::time::Duration;

use thiserror::Error;

use super::lexer::{tokenize, Token};
use super::{is_identifier, Codebook, Frame, MotionFlag, Score, Symbol, FORMAT_VERSION};
use crate::decoder::CouplingModel;
use crate::lightpaint::{Palette, Rgb};
use crate::trajectory::{ProfileConfig, ProfileKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("unknown symbol {0:?}")]
    UnknownSymbol(char),
    #[error("{field} has {found} entries, expected {expected}")]
    LengthMismatch {
        field: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("duration must be positive")]
    NonPositiveDuration,
    #[error("duplicate pose name {0:?}")]
    DuplicatePoseName(String),
    #[error("unknown pose {0:?}")]
    UnknownPose(String),
    #[error("{0}")]
    Syntax(String),
    #[error("score has no frames")]
    NoFrames,
    #[error("input is not valid UTF-8")]
    InvalidUtf8,
}

/// A parse failure anchored at a 1-based line and character column.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.kind)
    }
}

type LineResult<T> = Result<T, (usize, ParseErrorKind)>;

fn syntax<T>(col: usize, msg: impl Into<String>) -> LineResult<T> {
    Err((col, ParseErrorKind::Syntax(msg.into())))
}

fn bad_header<T>(col: usize, msg: impl Into<String>) -> LineResult<T> {
    Err((col, ParseErrorKind::BadHeader(msg.into())))
}

/// Parses a score document from raw bytes, rejecting invalid UTF-8 with the
/// position of the first bad byte.
pub fn parse_score_bytes(bytes: &[u8]) -> Result<Score, ParseError> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse_score(text),
        Err(e) => {
            let valid = std::str::from_utf8(&bytes[..e.valid_up_to()]).expect("valid prefix");
            let line = valid.matches('\n').count() + 1;
            let column = valid.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
            Err(ParseError {
                line,
                column,
                kind: ParseErrorKind::InvalidUtf8,
            })
        }
    }
}

/// Parses and validates a score document.
pub fn parse_score(text: &str) -> Result<Score, ParseError> {
    let mut parser = Parser::default();
    let mut last_line = 0;
    for (i, line) in text.lines().enumerate() {
        last_line = i + 1;
        let tokens = tokenize(line).map_err(|column| ParseError {
            line: i + 1,
            column,
            kind: ParseErrorKind::Syntax("unterminated quote".into()),
        })?;
        if tokens.is_empty() {
            continue;
        }
        parser.line(&tokens).map_err(|(column, kind)| ParseError {
            line: i + 1,
            column,
            kind,
        })?;
    }
    parser.finish().map_err(|(column, kind)| ParseError {
        line: last_line.max(1),
        column,
        kind,
    })
}

#[derive(Default)]
struct Parser {
    version: Option<u32>,
    servo_count: Option<usize>,
    codebook: Option<Codebook>,
    profile: Option<ProfileConfig>,
    rate: Option<f64>,
    coupling: Option<CouplingModel>,
    palette: Option<Palette>,
    body_started: bool,
    poses: BTreeMap<String, Vec<Symbol>>,
    frames: Vec<Frame>,
}

impl Parser {
    fn line(&mut self, tokens: &[Token]) -> LineResult<()> {
        let head = &tokens[0];
        let args = &tokens[1..];
        if self.version.is_none() {
            if head.text != "ropera" {
                return bad_header(head.col, "document must start with `ropera <version>`");
            }
            let [v] = args else {
                return bad_header(head.col, "expected `ropera <version>`");
            };
            match v.text.parse::<u32>() {
                Ok(FORMAT_VERSION) => self.version = Some(FORMAT_VERSION),
                _ => return bad_header(v.col, format!("unsupported version {:?}", v.text)),
            }
            return Ok(());
        }
        if self.servo_count.is_none() {
            if head.text != "servos" {
                return bad_header(head.col, "expected `servos <N>` after the version line");
            }
            let [n] = args else {
                return bad_header(head.col, "expected `servos <N>`");
            };
            match n.text.parse::<usize>() {
                Ok(count) if count >= 1 => self.servo_count = Some(count),
                _ => return bad_header(n.col, "servo count must be a positive integer"),
            }
            return Ok(());
        }
        match head.text.as_str() {
            "pose" => {
                self.body_started = true;
                self.pose(head, args)
            }
            "frame" => {
                self.body_started = true;
                self.frame(head, args)
            }
            "codebook" | "profile" | "rate" | "coupling" | "palette" if self.body_started => {
                bad_header(
                    head.col,
                    format!("`{}` must precede pose and frame lines", head.text),
                )
            }
            "codebook" => {
                once(&self.codebook, head)?;
                self.codebook = Some(codebook_line(args, head.col)?);
                Ok(())
            }
            "profile" => {
                once(&self.profile, head)?;
                self.profile = Some(profile_line(args, head.col)?);
                Ok(())
            }
            "rate" => {
                once(&self.rate, head)?;
                let [hz] = args else {
                    return bad_header(head.col, "expected `rate <hz>`");
                };
                match number(&hz.text) {
                    Some(r) if r > 0.0 => self.rate = Some(r),
                    _ => return bad_header(hz.col, "sample rate must be a positive number"),
                }
                Ok(())
            }
            "coupling" => {
                once(&self.coupling, head)?;
                let n = self.servo_count.expect("checked above");
                self.coupling = Some(coupling_line(args, head.col, n)?);
                Ok(())
            }
            "palette" => {
                once(&self.palette, head)?;
                self.palette = Some(palette_line(args, head.col)?);
                Ok(())
            }
            "ropera" | "servos" => bad_header(head.col, format!("duplicate `{}` line", head.text)),
            other => syntax(head.col, format!("unknown directive {other:?}")),
        }
    }

    fn pose(&mut self, head: &Token, args: &[Token]) -> LineResult<()> {
        let [def] = args else {
            return syntax(head.col, "expected `pose <name>=<symbols>`");
        };
        let Some((name, value)) = def.key_value() else {
            return syntax(def.col, "expected `<name>=<symbols>`");
        };
        if !is_identifier(name) {
            return syntax(def.col, format!("pose name {name:?} is not an identifier"));
        }
        if self.poses.contains_key(name) {
            return Err((def.col, ParseErrorKind::DuplicatePoseName(name.to_string())));
        }
        let col = value_col(def, name);
        let n = self.servo_count.expect("servos parsed");
        let symbols = parse_symbols(value, col, n, self.codebook())?;
        self.poses.insert(name.to_string(), symbols);
        Ok(())
    }

    fn frame(&mut self, head: &Token, args: &[Token]) -> LineResult<()> {
        let n = self.servo_count.expect("servos parsed");
        let mut symbols = None;
        let mut flags = None;
        let mut duration = None;
        let mut label = None;
        for tok in args {
            let Some((key, value)) = tok.key_value() else {
                return syntax(tok.col, format!("expected key=value, got {:?}", tok.text));
            };
            let col = value_col(tok, key);
            let dup = match key {
                "S" => symbols
                    .replace(self.frame_symbols(value, col, n)?)
                    .is_some(),
                "M" => flags.replace(parse_flags(value, col, n)?).is_some(),
                "T" => duration
                    .replace(parse_seconds(value).map_err(|e| (col, e.into_kind()))?)
                    .is_some(),
                "label" => label.replace(value.to_string()).is_some(),
                other => return syntax(tok.col, format!("unknown frame field {other:?}")),
            };
            if dup {
                return syntax(tok.col, format!("duplicate frame field {key:?}"));
            }
        }
        let missing = |field: &str| syntax(head.col, format!("frame is missing {field}="));
        let Some(symbols) = symbols else {
            return missing("S");
        };
        let Some(flags) = flags else {
            return missing("M");
        };
        let Some(duration) = duration else {
            return missing("T");
        };
        self.frames.push(Frame {
            symbols,
            flags,
            duration,
            label,
        });
        Ok(())
    }

    fn frame_symbols(&self, value: &str, col: usize, n: usize) -> LineResult<Vec<Symbol>> {
        match value.strip_prefix('@') {
            Some(name) => self
                .poses
                .get(name)
                .cloned()
                .ok_or_else(|| (col, ParseErrorKind::UnknownPose(name.to_string()))),
            None => parse_symbols(value, col, n, self.codebook()),
        }
    }

    fn codebook(&self) -> &Codebook {
        self.codebook.as_ref().unwrap_or(&DEFAULT_CODEBOOK)
    }

    fn finish(self) -> LineResult<Score> {
        if self.version.is_none() {
            return bad_header(1, "document must start with `ropera <version>`");
        }
        let Some(servo_count) = self.servo_count else {
            return bad_header(1, "missing `servos <N>` line");
        };
        if self.frames.is_empty() {
            return Err((1, ParseErrorKind::NoFrames));
        }
        let mut profile = self.profile.unwrap_or_default();
        if let Some(rate) = self.rate {
            profile.sample_rate = rate;
        }
        Ok(Score {
            version: self.version.expect("checked"),
            servo_count,
            codebook: self.codebook.unwrap_or_default(),
            profile,
            coupling: self.coupling.unwrap_or_default(),
            palette: self.palette.unwrap_or_default(),
            poses: self.poses,
            frames: self.frames,
        })
    }
}

static DEFAULT_CODEBOOK: std::sync::LazyLock<Codebook> =
    std::sync::LazyLock::new(super::default_codebook);

fn once<T>(slot: &Option<T>, head: &Token) -> LineResult<()> {
    match slot {
        Some(_) => bad_header(head.col, format!("duplicate `{}` line", head.text)),
        None => Ok(()),
    }
}

fn value_col(tok: &Token, key: &str) -> usize {
    tok.col + key.chars().count() + 1
}

fn number(text: &str) -> Option<f64> {
    text.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parses a run of bin letters of exactly `n` entries, all in `codebook`.
pub(crate) fn parse_symbols(
    value: &str,
    col: usize,
    n: usize,
    codebook: &Codebook,
) -> LineResult<Vec<Symbol>> {
    let found = value.chars().count();
    if found != n {
        return Err((
            col,
            ParseErrorKind::LengthMismatch {
                field: "S",
                expected: n,
                found,
            },
        ));
    }
    value
        .chars()
        .enumerate()
        .map(|(i, c)| {
            Symbol::new(c)
                .filter(|s| codebook.contains(*s))
                .ok_or((col + i, ParseErrorKind::UnknownSymbol(c)))
        })
        .collect()
}

/// One flag character per joint, or comma-separated words (`Default,Hold,...`).
fn parse_flags(value: &str, col: usize, n: usize) -> LineResult<Vec<MotionFlag>> {
    let words: Vec<&str> = if value.contains(',') {
        value.split(',').collect()
    } else {
        value
            .char_indices()
            .map(|(i, c)| &value[i..i + c.len_utf8()])
            .collect()
    };
    if words.len() != n {
        return Err((
            col,
            ParseErrorKind::LengthMismatch {
                field: "M",
                expected: n,
                found: words.len(),
            },
        ));
    }
    words
        .iter()
        .map(|w| {
            w.parse::<MotionFlag>()
                .or_else(|e| syntax(col, e.to_string()))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SecondsError {
    Malformed,
    NonPositive,
}

impl SecondsError {
    fn into_kind(self) -> ParseErrorKind {
        match self {
            SecondsError::Malformed => ParseErrorKind::Syntax(
                "duration must be decimal seconds with at most 9 fractional digits".into(),
            ),
            SecondsError::NonPositive => ParseErrorKind::NonPositiveDuration,
        }
    }
}

/// Parses `digits[.digits]` seconds exactly, down to the nanosecond.
pub(crate) fn parse_seconds(text: &str) -> Result<Duration, SecondsError> {
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !digits(whole) || (body.contains('.') && !digits(frac)) || frac.len() > 9 {
        return Err(SecondsError::Malformed);
    }
    let secs: u64 = whole.parse().map_err(|_| SecondsError::Malformed)?;
    let nanos: u32 = if frac.is_empty() {
        0
    } else {
        format!("{frac:0<9}").parse().expect("nine digits")
    };
    let d = Duration::new(secs, nanos);
    if negative || d.is_zero() {
        return Err(SecondsError::NonPositive);
    }
    Ok(d)
}

fn codebook_line(args: &[Token], head_col: usize) -> LineResult<Codebook> {
    let mut angles = Vec::new();
    let mut clip = None;
    for tok in args {
        let Some((key, value)) = tok.key_value() else {
            return bad_header(tok.col, "expected <letter>=<degrees> or clip=<degrees>");
        };
        if key == "clip" {
            clip =
                Some(number(value).ok_or((tok.col, ParseErrorKind::BadHeader("bad clip".into())))?);
            continue;
        }
        let expected = Symbol::from_index(angles.len());
        let symbol = key.chars().next().and_then(Symbol::new);
        if key.chars().count() != 1 || symbol.is_none() || symbol != expected {
            return bad_header(tok.col, "codebook letters must run consecutively from A");
        }
        let Some(angle) = number(value) else {
            return bad_header(value_col(tok, key), format!("bad angle {value:?}"));
        };
        angles.push(angle);
    }
    Codebook::new(angles, clip.unwrap_or(super::DEFAULT_CLIP_LIMIT))
        .map_err(|e| (head_col, ParseErrorKind::BadHeader(e.to_string())))
}

fn profile_line(args: &[Token], head_col: usize) -> LineResult<ProfileConfig> {
    let Some((kind, rest)) = args.split_first() else {
        return bad_header(head_col, "expected `profile <kind> [key=value ...]`");
    };
    let mut config = ProfileConfig {
        kind: kind
            .text
            .parse::<ProfileKind>()
            .map_err(|e| (kind.col, ParseErrorKind::BadHeader(e.to_string())))?,
        ..ProfileConfig::default()
    };
    for tok in rest {
        let Some((key, value)) = tok.key_value() else {
            return bad_header(tok.col, "expected key=value");
        };
        let Some(v) = number(value) else {
            return bad_header(value_col(tok, key), format!("bad number {value:?}"));
        };
        match key {
            "v_max" => config.v_max = v,
            "rho" => config.transition_fraction = v,
            "step" => config.step_deg = v,
            other => return bad_header(tok.col, format!("unknown profile key {other:?}")),
        }
    }
    config
        .validate()
        .map_err(|e| (head_col, ParseErrorKind::BadHeader(e.to_string())))?;
    Ok(config)
}

/// Servo names are 1-based (`s1`..`sN`); the model stores 0-based indices.
fn servo_index(text: &str) -> Option<usize> {
    text.strip_prefix('s')?
        .parse::<usize>()
        .ok()
        .filter(|&k| k >= 1)
        .map(|k| k - 1)
}

fn coupling_line(args: &[Token], head_col: usize, n: usize) -> LineResult<CouplingModel> {
    let mut model = CouplingModel::default();
    for tok in args {
        let Some((key, value)) = tok.key_value() else {
            return bad_header(tok.col, "expected key=value");
        };
        let vcol = value_col(tok, key);
        match key {
            "kappa" => {
                model.kappa =
                    number(value).ok_or((vcol, ParseErrorKind::BadHeader("bad kappa".into())))?
            }
            "driver" | "driven" => {
                let idx = servo_index(value).ok_or((
                    vcol,
                    ParseErrorKind::BadHeader("servo must be written s1..sN".into()),
                ))?;
                if key == "driver" {
                    model.driver = idx;
                } else {
                    model.driven = idx;
                }
            }
            other => return bad_header(tok.col, format!("unknown coupling key {other:?}")),
        }
    }
    model
        .validate(n)
        .map_err(|e| (head_col, ParseErrorKind::BadHeader(e.to_string())))?;
    Ok(model)
}

fn palette_line(args: &[Token], head_col: usize) -> LineResult<Palette> {
    let mut palette = Palette::empty();
    for tok in args {
        let Some((name, value)) = tok.key_value() else {
            return bad_header(tok.col, "expected <name>=#RRGGBB");
        };
        if !is_identifier(name) {
            return bad_header(tok.col, format!("color name {name:?} is not an identifier"));
        }
        let rgb: Rgb = value.parse().map_err(|_| {
            (
                value_col(tok, name),
                ParseErrorKind::BadHeader(format!("bad color {value:?}")),
            )
        })?;
        if !palette.insert(name, rgb) {
            return bad_header(tok.col, format!("duplicate color {name:?}"));
        }
    }
    if palette.is_empty() {
        return bad_header(head_col, "palette needs at least one color");
    }
    Ok(palette)
}
