//! Pollutant identities, measurement units and concentrations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Every pollutant the platform knows about.
///
/// Declaration order is significant: it is the fixed enumeration order used
/// to break ties when choosing a dominant pollutant and to order spawns in a
/// scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pollutant {
    #[serde(rename = "PM10")]
    Pm10,
    #[serde(rename = "PM2.5")]
    Pm25,
    #[serde(rename = "NO")]
    No,
    #[serde(rename = "NO2")]
    No2,
    #[serde(rename = "NOx")]
    Nox,
    #[serde(rename = "CO")]
    Co,
    #[serde(rename = "SO2")]
    So2,
    #[serde(rename = "O3")]
    O3,
    #[serde(rename = "NH3")]
    Nh3,
    #[serde(rename = "C6H6")]
    Benzene,
    #[serde(rename = "C7H8")]
    Toluene,
    #[serde(rename = "C8H10")]
    Xylene,
}

impl Pollutant {
    pub const ALL: [Pollutant; 12] = [
        Pollutant::Pm10,
        Pollutant::Pm25,
        Pollutant::No,
        Pollutant::No2,
        Pollutant::Nox,
        Pollutant::Co,
        Pollutant::So2,
        Pollutant::O3,
        Pollutant::Nh3,
        Pollutant::Benzene,
        Pollutant::Toluene,
        Pollutant::Xylene,
    ];

    /// The seven pollutants that carry a NAQI sub-index.
    pub const AQI_BEARING: [Pollutant; 7] = [
        Pollutant::Pm10,
        Pollutant::Pm25,
        Pollutant::No2,
        Pollutant::Co,
        Pollutant::So2,
        Pollutant::O3,
        Pollutant::Nh3,
    ];

    /// Canonical token, as used in CSV files, JSON and the store.
    pub fn code(self) -> &'static str {
        match self {
            Pollutant::Pm10 => "PM10",
            Pollutant::Pm25 => "PM2.5",
            Pollutant::No => "NO",
            Pollutant::No2 => "NO2",
            Pollutant::Nox => "NOx",
            Pollutant::Co => "CO",
            Pollutant::So2 => "SO2",
            Pollutant::O3 => "O3",
            Pollutant::Nh3 => "NH3",
            Pollutant::Benzene => "C6H6",
            Pollutant::Toluene => "C7H8",
            Pollutant::Xylene => "C8H10",
        }
    }

    pub fn is_aqi_bearing(self) -> bool {
        Self::AQI_BEARING.contains(&self)
    }

    pub fn is_particulate(self) -> bool {
        matches!(self, Pollutant::Pm10 | Pollutant::Pm25)
    }

    /// Unit in which concentrations of this pollutant are stored and indexed.
    pub fn canonical_unit(self) -> Unit {
        match self {
            Pollutant::Co => Unit::MilligramsPerCubicMetre,
            _ => Unit::MicrogramsPerCubicMetre,
        }
    }
}

impl fmt::Display for Pollutant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown pollutant token `{0}`")]
pub struct UnknownPollutant(pub String);

impl FromStr for Pollutant {
    type Err = UnknownPollutant;

    /// Accepts the canonical code case-insensitively, plus the common
    /// `PM25`/`PM2_5` spellings and the aromatic compounds' names.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if let Some(p) = Pollutant::ALL.iter().find(|p| p.code().eq_ignore_ascii_case(t)) {
            return Ok(*p);
        }
        let p = match t.to_ascii_lowercase().as_str() {
            "pm25" | "pm2_5" | "pm 2.5" => Pollutant::Pm25,
            "pm 10" => Pollutant::Pm10,
            "benzene" => Pollutant::Benzene,
            "toluene" => Pollutant::Toluene,
            "xylene" => Pollutant::Xylene,
            _ => return Err(UnknownPollutant(t.to_string())),
        };
        Ok(p)
    }
}

/// Mass concentration unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "ug/m3", alias = "µg/m³")]
    MicrogramsPerCubicMetre,
    #[serde(rename = "mg/m3", alias = "mg/m³")]
    MilligramsPerCubicMetre,
}

impl Unit {
    /// ASCII token used in CSV files and configuration.
    pub fn token(self) -> &'static str {
        match self {
            Unit::MicrogramsPerCubicMetre => "ug/m3",
            Unit::MilligramsPerCubicMetre => "mg/m3",
        }
    }

    /// Display symbol used in JSON responses.
    pub fn symbol(self) -> &'static str {
        match self {
            Unit::MicrogramsPerCubicMetre => "µg/m³",
            Unit::MilligramsPerCubicMetre => "mg/m³",
        }
    }

    fn micrograms(self) -> f64 {
        match self {
            Unit::MicrogramsPerCubicMetre => 1.0,
            Unit::MilligramsPerCubicMetre => 1000.0,
        }
    }

    /// Converts `value` expressed in `self` into `target`.
    pub fn convert(self, value: f64, target: Unit) -> f64 {
        if self == target {
            value
        } else {
            value * self.micrograms() / target.micrograms()
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown unit token `{0}`")]
pub struct UnknownUnit(pub String);

impl FromStr for Unit {
    type Err = UnknownUnit;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        // U+00B5 MICRO SIGN and U+03BC GREEK SMALL LETTER MU both show up in exports.
        let t: String = s
            .trim()
            .chars()
            .map(|c| match c {
                'µ' | 'μ' => 'u',
                '³' => '3',
                c => c.to_ascii_lowercase(),
            })
            .filter(|c| !c.is_whitespace())
            .collect();
        match t.as_str() {
            "ug/m3" => Ok(Unit::MicrogramsPerCubicMetre),
            "mg/m3" => Ok(Unit::MilligramsPerCubicMetre),
            _ => Err(UnknownUnit(s.trim().to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConcentrationError {
    #[error("concentration must be finite, got {0}")]
    NonFinite(f64),
    #[error("concentration must be non-negative, got {0}")]
    Negative(f64),
}

/// A validated, non-negative, finite concentration of one pollutant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Concentration {
    pollutant: Pollutant,
    value: f64,
    unit: Unit,
}

impl Concentration {
    pub fn new(pollutant: Pollutant, value: f64, unit: Unit) -> Result<Self, ConcentrationError> {
        if !value.is_finite() {
            return Err(ConcentrationError::NonFinite(value));
        }
        if value < 0.0 {
            return Err(ConcentrationError::Negative(value));
        }
        Ok(Concentration { pollutant, value, unit })
    }

    /// Concentration in the pollutant's canonical unit (mg/m³ for CO, µg/m³ otherwise).
    pub fn canonical(pollutant: Pollutant, value: f64) -> Result<Self, ConcentrationError> {
        Self::new(pollutant, value, pollutant.canonical_unit())
    }

    pub fn pollutant(&self) -> Pollutant {
        self.pollutant
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }
}
