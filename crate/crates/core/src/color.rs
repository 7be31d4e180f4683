//! Light colors and the color sets a robot observes at a node.

use std::fmt;
use std::str::FromStr;

use smallvec::SmallVec;
use thiserror::Error;

/// Longest accepted color name, in bytes.
pub const MAX_COLOR_NAME: usize = 8;

/// A light color, identified by a short ASCII name such as `W` or `R`.
///
/// The name is packed big-endian into a `u64`, so ordering matches the
/// lexicographic order of the names and the type stays `Copy`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Color(u64);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ColorError {
    #[error("empty color name")]
    Empty,
    #[error("color name `{0}` is longer than {MAX_COLOR_NAME} bytes")]
    TooLong(String),
    #[error(
        "color name `{0}` must start with a letter and contain only ASCII letters, digits or `_`"
    )]
    BadChar(String),
    #[error("`{0}` is reserved and cannot name a color")]
    Reserved(String),
}

impl Color {
    pub fn new(name: &str) -> Result<Self, ColorError> {
        if name.is_empty() {
            return Err(ColorError::Empty);
        }
        if name.len() > MAX_COLOR_NAME {
            return Err(ColorError::TooLong(name.to_string()));
        }
        let bytes = name.as_bytes();
        if !bytes[0].is_ascii_alphabetic()
            || !bytes
                .iter()
                .all(|b| b.is_ascii_alphanumeric() || *b == b'_')
        {
            return Err(ColorError::BadChar(name.to_string()));
        }
        // `E` is the empty-cell predicate and `phi` the visibility symbol in rule files.
        if name == "E" || name == "phi" {
            return Err(ColorError::Reserved(name.to_string()));
        }
        let mut packed = [0u8; 8];
        packed[..bytes.len()].copy_from_slice(bytes);
        Ok(Color(u64::from_be_bytes(packed)))
    }

    pub fn name(&self) -> String {
        let bytes = self.0.to_be_bytes();
        let len = bytes.iter().position(|b| *b == 0).unwrap_or(bytes.len());
        // Only ASCII ever gets packed.
        String::from_utf8_lossy(&bytes[..len]).into_owned()
    }
}

impl FromStr for Color {
    type Err = ColorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Color::new(s)
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl fmt::Debug for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Color({})", self.name())
    }
}

/// The set of colors visible at one node. Robot counts are not recorded.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ColorSet(SmallVec<[Color; 4]>);

impl ColorSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(color: Color) -> Self {
        let mut set = Self::new();
        set.insert(color);
        set
    }

    pub fn insert(&mut self, color: Color) {
        if let Err(at) = self.0.binary_search(&color) {
            self.0.insert(at, color);
        }
    }

    pub fn contains(&self, color: Color) -> bool {
        self.0.binary_search(&color).is_ok()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// True when the set is exactly `{color}`.
    pub fn is_single(&self, color: Color) -> bool {
        self.0.len() == 1 && self.0[0] == color
    }

    pub fn iter(&self) -> impl Iterator<Item = Color> + '_ {
        self.0.iter().copied()
    }
}

impl FromIterator<Color> for ColorSet {
    fn from_iter<I: IntoIterator<Item = Color>>(iter: I) -> Self {
        let mut set = ColorSet::new();
        for c in iter {
            set.insert(c);
        }
        set
    }
}

impl fmt::Display for ColorSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("{}");
        }
        f.write_str("{")?;
        for (i, c) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for ColorSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
