//! Small domain types shared across modules.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Installer,
    Fetcher,
}

impl Role {
    pub const ALL: [Role; 2] = [Role::Installer, Role::Fetcher];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Installer => "installer",
            Role::Fetcher => "fetcher",
        }
    }

    pub fn other(self) -> Role {
        match self {
            Role::Installer => Role::Fetcher,
            Role::Fetcher => Role::Installer,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
#[error("unknown role `{0}` (expected installer or fetcher)")]
pub struct ParseRoleError(String);

impl FromStr for Role {
    type Err = ParseRoleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "installer" => Ok(Role::Installer),
            "fetcher" => Ok(Role::Fetcher),
            _ => Err(ParseRoleError(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(pub u64);

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PipeKind {
    Sewage,
    Water,
    Gas,
    Electricity,
}

impl PipeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PipeKind::Sewage => "sewage",
            PipeKind::Water => "water",
            PipeKind::Gas => "gas",
            PipeKind::Electricity => "electricity",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PipeColor {
    Magenta,
    Green,
    Blue,
    Yellow,
}

impl PipeColor {
    pub fn as_str(self) -> &'static str {
        match self {
            PipeColor::Magenta => "magenta",
            PipeColor::Green => "green",
            PipeColor::Blue => "blue",
            PipeColor::Yellow => "yellow",
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum DomainError {
    #[error("diameter must be 1..=4 inches, got {0}")]
    Diameter(i64),
    #[error("bend angle must be one of 0, 45, 90, 135 degrees, got {0}")]
    BendAngle(i64),
    #[error("length must be finite and non-negative, got {0}")]
    Length(f64),
    #[error("unknown {what} `{value}`")]
    Unknown { what: &'static str, value: String },
}

macro_rules! lowercase_from_str {
    ($ty:ty, $what:literal, [$($variant:ident),*]) => {
        impl FromStr for $ty {
            type Err = DomainError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                $(if s.eq_ignore_ascii_case(<$ty>::$variant.as_str()) {
                    return Ok(<$ty>::$variant);
                })*
                Err(DomainError::Unknown { what: $what, value: s.to_string() })
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

lowercase_from_str!(PipeKind, "pipe type", [Sewage, Water, Gas, Electricity]);
lowercase_from_str!(PipeColor, "pipe color", [Magenta, Green, Blue, Yellow]);

/// Nominal pipe diameter in inches (1 to 4).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub struct Diameter(u8);

/// World units per inch of nominal diameter.
pub const WORLD_UNITS_PER_INCH: f64 = 0.25;

impl Diameter {
    pub const ALL: [Diameter; 4] = [Diameter(1), Diameter(2), Diameter(3), Diameter(4)];

    pub fn new(inches: i64) -> Result<Self, DomainError> {
        if (1..=4).contains(&inches) {
            Ok(Diameter(inches as u8))
        } else {
            Err(DomainError::Diameter(inches))
        }
    }

    pub fn inches(self) -> u8 {
        self.0
    }

    /// Physical thickness of the pipe in world units.
    pub fn world_width(self) -> f64 {
        f64::from(self.0) * WORLD_UNITS_PER_INCH
    }
}

impl TryFrom<i64> for Diameter {
    type Error = DomainError;

    fn try_from(v: i64) -> Result<Self, Self::Error> {
        Diameter::new(v)
    }
}

impl From<Diameter> for i64 {
    fn from(d: Diameter) -> i64 {
        i64::from(d.0)
    }
}

impl fmt::Display for Diameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}in", self.0)
    }
}

/// Deflection between the two arms of a pipe, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub enum BendAngle {
    Straight,
    Deg45,
    Deg90,
    Deg135,
}

impl BendAngle {
    pub const ALL: [BendAngle; 4] = [
        BendAngle::Straight,
        BendAngle::Deg45,
        BendAngle::Deg90,
        BendAngle::Deg135,
    ];

    pub fn degrees(self) -> i64 {
        match self {
            BendAngle::Straight => 0,
            BendAngle::Deg45 => 45,
            BendAngle::Deg90 => 90,
            BendAngle::Deg135 => 135,
        }
    }

    pub fn radians(self) -> f64 {
        (self.degrees() as f64).to_radians()
    }
}

impl TryFrom<i64> for BendAngle {
    type Error = DomainError;

    fn try_from(v: i64) -> Result<Self, Self::Error> {
        match v {
            0 => Ok(BendAngle::Straight),
            45 => Ok(BendAngle::Deg45),
            90 => Ok(BendAngle::Deg90),
            135 => Ok(BendAngle::Deg135),
            other => Err(DomainError::BendAngle(other)),
        }
    }
}

impl From<BendAngle> for i64 {
    fn from(a: BendAngle) -> i64 {
        a.degrees()
    }
}

/// Pipe length held as integer micro-units so that cutting conserves length exactly.
/// Serialized as a plain number of world units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Length(i64);

const MICROS: f64 = 1_000_000.0;

impl Length {
    pub const ZERO: Length = Length(0);

    pub fn from_units(units: f64) -> Result<Self, DomainError> {
        if !units.is_finite() || !(0.0..=1.0e9).contains(&units) {
            return Err(DomainError::Length(units));
        }
        Ok(Length((units * MICROS).round() as i64))
    }

    pub fn from_micros(micros: i64) -> Self {
        Length(micros.max(0))
    }

    pub fn micros(self) -> i64 {
        self.0
    }

    pub fn units(self) -> f64 {
        self.0 as f64 / MICROS
    }

    pub fn checked_sub(self, other: Length) -> Option<Length> {
        (self.0 >= other.0).then(|| Length(self.0 - other.0))
    }
}

impl std::ops::Add for Length {
    type Output = Length;

    fn add(self, rhs: Length) -> Length {
        Length(self.0 + rhs.0)
    }
}

impl TryFrom<f64> for Length {
    type Error = DomainError;

    fn try_from(v: f64) -> Result<Self, Self::Error> {
        Length::from_units(v)
    }
}

impl From<Length> for f64 {
    fn from(l: Length) -> f64 {
        l.units()
    }
}

impl fmt::Display for Length {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.units())
    }
}
