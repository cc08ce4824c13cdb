//! Named posture primitives and cross-morphology remapping of scores.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::decoder::CouplingModel;
use crate::notation::{
    default_codebook, is_identifier, parse_symbols, tokenize, MotionFlag, Score, ScoreError, Symbol,
};

/// Bundled vocabulary asset.
pub const BUILTIN_VOCABULARY: &str = include_str!("../assets/vocabulary.ropera");

/// File name looked up under `ROPERA_HOME` before falling back to the bundle.
pub const VOCABULARY_FILE: &str = "vocabulary.ropera";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Category {
    UpperLimb,
    FullBody,
}

impl Category {
    pub fn name(self) -> &'static str {
        match self {
            Category::UpperLimb => "upper_limb",
            Category::FullBody => "full_body",
        }
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "upper_limb" => Ok(Category::UpperLimb),
            "full_body" => Ok(Category::FullBody),
            _ => Err(format!("unknown category {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosturePrimitive {
    pub name: String,
    pub category: Category,
    pub symbols: Vec<Symbol>,
    pub provenance: String,
}

#[derive(Debug, Error)]
pub enum VocabularyError {
    #[error("vocabulary asset {path} could not be read: {source}")]
    AssetMissing {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("vocabulary line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// The posture vocabulary: `$ROPERA_HOME/vocabulary.ropera` when
/// `ROPERA_HOME` is set, the bundled asset otherwise.
pub fn builtin_vocabulary() -> Result<Vec<PosturePrimitive>, VocabularyError> {
    match std::env::var_os("ROPERA_HOME") {
        Some(home) => load_vocabulary(Path::new(&home).join(VOCABULARY_FILE)),
        None => parse_vocabulary(BUILTIN_VOCABULARY),
    }
}

pub fn load_vocabulary(path: impl AsRef<Path>) -> Result<Vec<PosturePrimitive>, VocabularyError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| VocabularyError::AssetMissing {
        path: path.to_path_buf(),
        source,
    })?;
    parse_vocabulary(&text)
}

/// Parses a vocabulary document: `ropera`/`servos` header, then
/// `pose <name>=<symbols> category=<upper_limb|full_body> [note="..."]` lines.
pub fn parse_vocabulary(text: &str) -> Result<Vec<PosturePrimitive>, VocabularyError> {
    let codebook = default_codebook();
    let mut servo_count = None;
    let mut seen_version = false;
    let mut out: Vec<PosturePrimitive> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let err = |message: String| VocabularyError::Parse {
            line: i + 1,
            message,
        };
        let tokens = tokenize(line).map_err(|_| err("unterminated quote".into()))?;
        let Some((head, args)) = tokens.split_first() else {
            continue;
        };
        match (head.text.as_str(), seen_version, servo_count) {
            ("ropera", false, _) => seen_version = true,
            ("servos", true, None) => {
                let n = args
                    .first()
                    .and_then(|t| t.text.parse::<usize>().ok())
                    .filter(|&n| n >= 1)
                    .ok_or_else(|| err("expected `servos <N>`".into()))?;
                servo_count = Some(n);
            }
            ("pose", true, Some(n)) => {
                let (def, attrs) = args
                    .split_first()
                    .ok_or_else(|| err("expected `pose <name>=<symbols>`".into()))?;
                let (name, value) = def
                    .key_value()
                    .filter(|(name, _)| is_identifier(name))
                    .ok_or_else(|| err(format!("bad pose definition {:?}", def.text)))?;
                if out.iter().any(|p| p.name == name) {
                    return Err(err(format!("duplicate pose name {name:?}")));
                }
                let symbols = parse_symbols(value, def.col, n, &codebook)
                    .map_err(|(col, kind)| err(format!("column {col}: {kind}")))?;
                let mut category = None;
                let mut provenance = String::new();
                for tok in attrs {
                    match tok.key_value() {
                        Some(("category", c)) => {
                            category = Some(c.parse::<Category>().map_err(err)?)
                        }
                        Some(("note", n)) => provenance = n.to_string(),
                        _ => return Err(err(format!("unexpected {:?}", tok.text))),
                    }
                }
                out.push(PosturePrimitive {
                    name: name.to_string(),
                    category: category.ok_or_else(|| err("pose needs category=".into()))?,
                    symbols,
                    provenance,
                });
            }
            _ => return Err(err(format!("unexpected line starting {:?}", head.text))),
        }
    }
    Ok(out)
}

/// Where one target servo channel takes its value from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RemapRule {
    /// 0-based source servo index.
    CopyFrom(usize),
    /// Fixed symbol; dynamic on the first frame, held afterwards.
    Constant(Symbol),
}

/// One rule per target servo.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemapSpec {
    pub rules: Vec<RemapRule>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RemapError {
    #[error("target s{target} copies s{from}, but the source has {servo_count} servos", target = .target + 1, from = .from + 1)]
    IndexOutOfRange {
        target: usize,
        from: usize,
        servo_count: usize,
    },
    #[error("remap needs at least one target servo")]
    Empty,
    #[error("constant symbol {0} is not in the codebook")]
    UnknownSymbol(Symbol),
    #[error("bad remap spec {0:?}: use comma-separated 1-based servo numbers or symbol letters")]
    Syntax(String),
    #[error(transparent)]
    Score(#[from] ScoreError),
}

impl RemapSpec {
    pub fn new(rules: Vec<RemapRule>) -> Self {
        RemapSpec { rules }
    }

    pub fn identity(n: usize) -> Self {
        RemapSpec::new((0..n).map(RemapRule::CopyFrom).collect())
    }

    pub fn target_servo_count(&self) -> usize {
        self.rules.len()
    }

    pub fn validate(&self, source_servo_count: usize) -> Result<(), RemapError> {
        if self.rules.is_empty() {
            return Err(RemapError::Empty);
        }
        for (target, rule) in self.rules.iter().enumerate() {
            if let RemapRule::CopyFrom(source) = *rule {
                if source >= source_servo_count {
                    return Err(RemapError::IndexOutOfRange {
                        target,
                        from: source,
                        servo_count: source_servo_count,
                    });
                }
            }
        }
        Ok(())
    }

    /// The single spec equivalent to applying `self` and then `next`.
    pub fn then(&self, next: &RemapSpec) -> Result<RemapSpec, RemapError> {
        next.validate(self.rules.len())?;
        Ok(RemapSpec::new(
            next.rules
                .iter()
                .map(|rule| match *rule {
                    RemapRule::CopyFrom(mid) => self.rules[mid],
                    constant => constant,
                })
                .collect(),
        ))
    }

    /// The only target copying `source`, if exactly one does.
    fn unique_target(&self, source: usize) -> Option<usize> {
        let mut hits = self
            .rules
            .iter()
            .enumerate()
            .filter(|(_, r)| **r == RemapRule::CopyFrom(source))
            .map(|(t, _)| t);
        match (hits.next(), hits.next()) {
            (Some(t), None) => Some(t),
            _ => None,
        }
    }

    fn apply<T: Copy>(&self, source: &[T], constant: impl Fn(Symbol) -> T) -> Vec<T> {
        self.rules
            .iter()
            .map(|rule| match *rule {
                RemapRule::CopyFrom(s) => source[s],
                RemapRule::Constant(c) => constant(c),
            })
            .collect()
    }
}

impl FromStr for RemapSpec {
    type Err = RemapError;

    /// `1,2,4,6` keeps s1, s2, s4 and s6; a letter is a constant channel.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let syntax = || RemapError::Syntax(s.to_string());
        let rules = s
            .split(',')
            .map(|part| {
                let part = part.trim();
                if let Ok(k) = part.parse::<usize>() {
                    return k.checked_sub(1).map(RemapRule::CopyFrom).ok_or_else(syntax);
                }
                let mut chars = part.chars();
                match (chars.next().and_then(Symbol::new), chars.next()) {
                    (Some(sym), None) => Ok(RemapRule::Constant(sym)),
                    _ => Err(syntax()),
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RemapSpec::new(rules))
    }
}

impl fmt::Display for RemapSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, rule) in self.rules.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            match rule {
                RemapRule::CopyFrom(s) => write!(f, "{}", s + 1)?,
                RemapRule::Constant(c) => write!(f, "{c}")?,
            }
        }
        Ok(())
    }
}

/// Rebuilds `score` for a platform with `spec.target_servo_count()` servos.
///
/// Frame durations, labels and the header are kept. Named poses are remapped
/// with the same rules. An active coupling survives only when its driver and
/// driven servos are each copied to exactly one target; otherwise it is
/// switched off.
pub fn remap_score(score: &Score, spec: &RemapSpec) -> Result<Score, RemapError> {
    spec.validate(score.servo_count)?;
    for rule in &spec.rules {
        if let RemapRule::Constant(c) = *rule {
            if !score.codebook.contains(c) {
                return Err(RemapError::UnknownSymbol(c));
            }
        }
    }
    let frames = score
        .frames
        .iter()
        .enumerate()
        .map(|(i, frame)| {
            let constant_flag = if i == 0 {
                MotionFlag::Dynamic
            } else {
                MotionFlag::Hold
            };
            crate::notation::Frame {
                symbols: spec.apply(&frame.symbols, |c| c),
                flags: spec.apply(&frame.flags, |_| constant_flag),
                duration: frame.duration,
                label: frame.label.clone(),
            }
        })
        .collect();
    let poses = score
        .poses
        .iter()
        .map(|(name, symbols)| (name.clone(), spec.apply(symbols, |c| c)))
        .collect();
    let coupling = if score.coupling.is_active() {
        match (
            spec.unique_target(score.coupling.driver),
            spec.unique_target(score.coupling.driven),
        ) {
            (Some(driver), Some(driven)) => CouplingModel {
                driver,
                driven,
                ..score.coupling
            },
            _ => CouplingModel::default(),
        }
    } else {
        score.coupling
    };
    let out = Score {
        servo_count: spec.target_servo_count(),
        frames,
        poses,
        coupling,
        ..score.clone()
    };
    out.validate()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::notation::parse_score;

    fn letters(symbols: &[Symbol]) -> String {
        symbols.iter().map(|s| s.letter()).collect()
    }

    #[test]
    fn bundled_vocabulary_counts() {
        let vocab = parse_vocabulary(BUILTIN_VOCABULARY).unwrap();
        assert_eq!(vocab.len(), 15);
        let upper = vocab
            .iter()
            .filter(|p| p.category == Category::UpperLimb)
            .count();
        assert_eq!((upper, vocab.len() - upper), (12, 3));
        let neutral = vocab.iter().find(|p| p.name == "neutral_posture").unwrap();
        assert_eq!(letters(&neutral.symbols), "AAAAAA");
        for name in [
            "sleeve_lift",
            "arm_cross",
            "shoulder_pivot",
            "salutation_stance",
            "crouch",
        ] {
            assert!(vocab.iter().any(|p| p.name == name), "{name}");
        }
        assert!(vocab.iter().any(|p| p.name == "primitive_07"));
        assert!(vocab.iter().any(|p| p.name == "primitive_15"));
    }

    #[test]
    fn missing_asset() {
        let err = load_vocabulary("/nonexistent/vocabulary.ropera").unwrap_err();
        assert!(matches!(err, VocabularyError::AssetMissing { .. }));
    }

    #[test]
    fn vocabulary_parse_errors() {
        let bad = "ropera 1\nservos 2\npose a=AA\n";
        assert!(matches!(
            parse_vocabulary(bad),
            Err(VocabularyError::Parse { line: 3, .. })
        ));
        let dup = "ropera 1\nservos 1\npose a=A category=full_body\npose a=B category=full_body\n";
        assert!(matches!(
            parse_vocabulary(dup),
            Err(VocabularyError::Parse { line: 4, .. })
        ));
    }

    #[test]
    fn spec_text() {
        let spec: RemapSpec = "1,2,4,6,A".parse().unwrap();
        assert_eq!(
            spec.rules,
            [
                RemapRule::CopyFrom(0),
                RemapRule::CopyFrom(1),
                RemapRule::CopyFrom(3),
                RemapRule::CopyFrom(5),
                RemapRule::Constant(Symbol::new('A').unwrap()),
            ]
        );
        assert_eq!(spec.to_string(), "1,2,4,6,A");
        assert!("0".parse::<RemapSpec>().is_err());
        assert!("1,,2".parse::<RemapSpec>().is_err());
        assert!("ab".parse::<RemapSpec>().is_err());
    }

    #[test]
    fn six_to_seven_with_constant() {
        let score = parse_score(
            "ropera 1\nservos 6\nframe S=ABCDEF M=DDDDDD T=1\nframe S=BBBBBB M=DHDHDH T=2",
        )
        .unwrap();
        let mut rules: Vec<_> = (0..6).map(RemapRule::CopyFrom).collect();
        rules.push(RemapRule::Constant(Symbol::new('A').unwrap()));
        let out = remap_score(&score, &RemapSpec::new(rules)).unwrap();
        assert_eq!(out.servo_count, 7);
        assert_eq!(letters(&out.frames[0].symbols), "ABCDEFA");
        assert_eq!(out.frames[0].flags[6], MotionFlag::Dynamic);
        assert_eq!(out.frames[1].flags[6], MotionFlag::Hold);
        assert_eq!(out.frames[1].flags[..6], score.frames[1].flags[..]);
    }

    #[test]
    fn out_of_range_and_unknown_constant() {
        let score = parse_score("ropera 1\nservos 2\nframe S=AB M=DD T=1").unwrap();
        assert!(matches!(
            remap_score(&score, &"1,3".parse().unwrap()),
            Err(RemapError::IndexOutOfRange {
                target: 1,
                from: 2,
                servo_count: 2
            })
        ));
        assert_eq!(
            remap_score(&score, &"1,Z".parse().unwrap()),
            Err(RemapError::UnknownSymbol(Symbol::new('Z').unwrap()))
        );
    }

    #[test]
    fn coupling_follows_unique_copies() {
        let score = parse_score(
            "ropera 1\nservos 6\ncoupling kappa=0.5 driver=s5 driven=s6\nframe S=ABCDEF M=DDDDDD T=1",
        )
        .unwrap();
        let moved = remap_score(&score, &"6,5,4,3,2,1".parse().unwrap()).unwrap();
        assert_eq!((moved.coupling.driver, moved.coupling.driven), (1, 0));
        assert_eq!(moved.coupling.kappa, 0.5);
        let dropped = remap_score(&score, &"1,2,3,4".parse().unwrap()).unwrap();
        assert!(!dropped.coupling.is_active());
        let doubled = remap_score(&score, &"1,2,3,4,5,6,6".parse().unwrap()).unwrap();
        assert!(!doubled.coupling.is_active());
    }

    #[test]
    fn poses_are_remapped() {
        let score = parse_score("ropera 1\nservos 3\npose p=ABC\nframe S=@p M=DDD T=1").unwrap();
        let out = remap_score(&score, &"3,1".parse().unwrap()).unwrap();
        assert_eq!(letters(&out.poses["p"]), "CA");
    }
}
