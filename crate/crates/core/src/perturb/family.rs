use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The twelve corruption families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    Brightness,
    Contrast,
    DefocusBlur,
    Fog,
    Frost,
    GaussianNoise,
    ImpulseNoise,
    MotionBlur,
    Pixelation,
    ShotNoise,
    Snow,
    ZoomBlur,
}

impl Family {
    pub const ALL: [Family; 12] = [
        Family::Brightness,
        Family::Contrast,
        Family::DefocusBlur,
        Family::Fog,
        Family::Frost,
        Family::GaussianNoise,
        Family::ImpulseNoise,
        Family::MotionBlur,
        Family::Pixelation,
        Family::ShotNoise,
        Family::Snow,
        Family::ZoomBlur,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Brightness => "Brightness",
            Family::Contrast => "Contrast",
            Family::DefocusBlur => "DefocusBlur",
            Family::Fog => "Fog",
            Family::Frost => "Frost",
            Family::GaussianNoise => "GaussianNoise",
            Family::ImpulseNoise => "ImpulseNoise",
            Family::MotionBlur => "MotionBlur",
            Family::Pixelation => "Pixelation",
            Family::ShotNoise => "ShotNoise",
            Family::Snow => "Snow",
            Family::ZoomBlur => "ZoomBlur",
        }
    }

    /// Position in [`Family::ALL`], also used as a seed tag.
    pub fn index(self) -> usize {
        Family::ALL.iter().position(|&f| f == self).unwrap()
    }

    /// Whether the kernel draws from the per-image random stream.
    pub fn is_stochastic(self) -> bool {
        matches!(
            self,
            Family::Fog
                | Family::Frost
                | Family::GaussianNoise
                | Family::ImpulseNoise
                | Family::MotionBlur
                | Family::ShotNoise
                | Family::Snow
        )
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownFamily(s.to_owned()))
    }
}

/// Severity level in `1..=10`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Level(u32);

impl Level {
    pub const MAX: u32 = 10;

    pub fn new(level: u32) -> Result<Self> {
        if (1..=Self::MAX).contains(&level) {
            Ok(Self(level))
        } else {
            Err(Error::BadLevel(level))
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = Level> {
        (1..=Self::MAX).map(Level)
    }
}

impl TryFrom<u32> for Level {
    type Error = Error;

    fn try_from(v: u32) -> Result<Self> {
        Level::new(v)
    }
}

impl From<Level> for u32 {
    fn from(l: Level) -> u32 {
        l.0
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
