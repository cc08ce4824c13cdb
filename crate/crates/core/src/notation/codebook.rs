use std::fmt;

use thiserror::Error;

/// Platform joint limit used by the default codebook, in degrees.
pub const DEFAULT_CLIP_LIMIT: f64 = 175.0;

/// Angular width of one bin in the default codebook.
pub const DEFAULT_BIN_DEGREES: f64 = 45.0;

/// Number of letters in the default codebook (`A` through `I`).
pub const DEFAULT_SYMBOL_COUNT: usize = 9;

/// A joint-angle bin letter, `A` through `Z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(u8);

impl Symbol {
    pub fn new(letter: char) -> Option<Self> {
        letter.is_ascii_uppercase().then_some(Symbol(letter as u8))
    }

    /// The `index`-th letter, `A` = 0.
    pub fn from_index(index: usize) -> Option<Self> {
        (index < 26).then(|| Symbol(b'A' + index as u8))
    }

    pub fn letter(self) -> char {
        self.0 as char
    }

    pub fn index(self) -> usize {
        (self.0 - b'A') as usize
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodebookError {
    #[error("codebook must have between 1 and 26 entries, got {0}")]
    BadSize(usize),
    #[error("codebook angle for {symbol} is not finite")]
    NonFinite { symbol: Symbol },
    #[error("clip limit must be positive and finite, got {0}")]
    BadClip(f64),
}

/// Mapping from bin letters to joint angles in degrees.
///
/// Letters are consecutive from `A`; the entry for letter `k` is stored at
/// index `k`. Lookups are clipped to `±clip_limit`.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    angles: Vec<f64>,
    clip_limit: f64,
}

impl Codebook {
    pub fn new(angles: Vec<f64>, clip_limit: f64) -> Result<Self, CodebookError> {
        if angles.is_empty() || angles.len() > 26 {
            return Err(CodebookError::BadSize(angles.len()));
        }
        if let Some(k) = angles.iter().position(|a| !a.is_finite()) {
            return Err(CodebookError::NonFinite {
                symbol: Symbol::from_index(k).expect("index below 26"),
            });
        }
        if !(clip_limit.is_finite() && clip_limit > 0.0) {
            return Err(CodebookError::BadClip(clip_limit));
        }
        Ok(Codebook { angles, clip_limit })
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn clip_limit(&self) -> f64 {
        self.clip_limit
    }

    pub fn contains(&self, symbol: Symbol) -> bool {
        symbol.index() < self.angles.len()
    }

    /// Unclipped table angle.
    pub fn raw(&self, symbol: Symbol) -> Option<f64> {
        self.angles.get(symbol.index()).copied()
    }

    /// Table angle clipped to the joint limit.
    pub fn lookup(&self, symbol: Symbol) -> Option<f64> {
        self.raw(symbol).map(|a| self.clip(a))
    }

    pub fn clip(&self, angle: f64) -> f64 {
        angle.clamp(-self.clip_limit, self.clip_limit)
    }

    pub fn entries(&self) -> impl Iterator<Item = (Symbol, f64)> + '_ {
        self.angles
            .iter()
            .enumerate()
            .map(|(k, &a)| (Symbol::from_index(k).expect("index below 26"), a))
    }
}

impl Default for Codebook {
    fn default() -> Self {
        default_codebook()
    }
}

/// Maps an angle in degrees into `(-180, 180]`.
pub fn normalize_degrees(angle: f64) -> f64 {
    let r = angle.rem_euclid(360.0);
    if r > 180.0 {
        r - 360.0
    } else {
        r
    }
}

/// Nine bins `A`..`I` in 45 degree steps, normalized into `(-180, 180]`,
/// clipped at ±175 on lookup.
///
/// `A`=0, `B`=45, `C`=90, `D`=135, `E`=180, `F`=-135, `G`=-90, `H`=-45, `I`=0.
pub fn default_codebook() -> Codebook {
    let angles = (0..DEFAULT_SYMBOL_COUNT)
        .map(|k| normalize_degrees(k as f64 * DEFAULT_BIN_DEGREES))
        .collect();
    Codebook::new(angles, DEFAULT_CLIP_LIMIT).expect("default codebook is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(c: char) -> Symbol {
        Symbol::new(c).unwrap()
    }

    #[test]
    fn default_table() {
        let cb = default_codebook();
        let expected = [0.0, 45.0, 90.0, 135.0, 180.0, -135.0, -90.0, -45.0, 0.0];
        let got: Vec<f64> = cb.entries().map(|(_, a)| a).collect();
        assert_eq!(got, expected);
        assert_eq!(cb.lookup(sym('A')), Some(0.0));
        assert_eq!(cb.lookup(sym('E')), Some(175.0));
        assert_eq!(cb.raw(sym('E')), Some(180.0));
        assert_eq!(cb.lookup(sym('H')), Some(-45.0));
        assert_eq!(cb.lookup(sym('J')), None);
    }

    #[test]
    fn normalize_edges() {
        assert_eq!(normalize_degrees(180.0), 180.0);
        assert_eq!(normalize_degrees(-180.0), 180.0);
        assert_eq!(normalize_degrees(360.0), 0.0);
        assert_eq!(normalize_degrees(315.0), -45.0);
        assert_eq!(normalize_degrees(-45.0), -45.0);
    }

    #[test]
    fn symbol_bounds() {
        assert!(Symbol::new('a').is_none());
        assert!(Symbol::new('1').is_none());
        assert_eq!(Symbol::from_index(25).unwrap().letter(), 'Z');
        assert!(Symbol::from_index(26).is_none());
    }

    #[test]
    fn rejects_bad_codebooks() {
        assert!(Codebook::new(vec![], 175.0).is_err());
        assert!(Codebook::new(vec![f64::NAN], 175.0).is_err());
        assert!(Codebook::new(vec![0.0], 0.0).is_err());
    }
}
