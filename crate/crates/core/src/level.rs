//! CEFR sub-levels and the three aggregated bands.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// One of the six CEFR sub-levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CefrLevel {
    A1,
    A2,
    B1,
    B2,
    C1,
    C2,
}

impl CefrLevel {
    pub const ALL: [CefrLevel; 6] = [
        CefrLevel::A1,
        CefrLevel::A2,
        CefrLevel::B1,
        CefrLevel::B2,
        CefrLevel::C1,
        CefrLevel::C2,
    ];

    pub fn band(self) -> Band {
        match self {
            CefrLevel::A1 | CefrLevel::A2 => Band::A,
            CefrLevel::B1 | CefrLevel::B2 => Band::B,
            CefrLevel::C1 | CefrLevel::C2 => Band::C,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CefrLevel::A1 => "A1",
            CefrLevel::A2 => "A2",
            CefrLevel::B1 => "B1",
            CefrLevel::B2 => "B2",
            CefrLevel::C1 => "C1",
            CefrLevel::C2 => "C2",
        }
    }
}

impl fmt::Display for CefrLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CefrLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CefrLevel::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownLevel(s.to_string()))
    }
}

/// A proficiency band aggregating two adjacent sub-levels
/// (A = A1+A2, B = B1+B2, C = C1+C2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Band {
    A,
    B,
    C,
}

impl Band {
    pub const ALL: [Band; 3] = [Band::A, Band::B, Band::C];

    pub fn sublevels(self) -> [CefrLevel; 2] {
        match self {
            Band::A => [CefrLevel::A1, CefrLevel::A2],
            Band::B => [CefrLevel::B1, CefrLevel::B2],
            Band::C => [CefrLevel::C1, CefrLevel::C2],
        }
    }

    pub fn contains(self, level: CefrLevel) -> bool {
        level.band() == self
    }

    /// Bands strictly above this one.
    pub fn above(self) -> &'static [Band] {
        match self {
            Band::A => &[Band::B, Band::C],
            Band::B => &[Band::C],
            Band::C => &[],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Band::A => "A",
            Band::B => "B",
            Band::C => "C",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Band {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" => Ok(Band::A),
            "B" | "b" => Ok(Band::B),
            "C" | "c" => Ok(Band::C),
            other => Err(Error::UnknownLevel(other.to_string())),
        }
    }
}
