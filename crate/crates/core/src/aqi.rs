//! NAQI breakpoint tables, sub-index interpolation and overall AQI.
//!
//! A [`BreakpointTable`] is configuration data. The default table ships in
//! `data/breakpoints.toml` and any other table with the same shape can be
//! loaded with [`BreakpointTable::from_toml_str`]. Every table is validated
//! on load: segments must be contiguous and strictly increasing, and the
//! category bands must partition `0..=500`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pollutant::{Concentration, Pollutant, Unit};

pub const MAX_INDEX: u16 = 500;
pub const TABLE_FORMAT: &str = "naqi-breakpoints/1";

const DEFAULT_TABLE: &str = include_str!("../data/breakpoints.toml");

// Decimal inputs that sit exactly on a .5 boundary can land a few ulps below
// it after binary conversion; this keeps them rounding up.
const HALF_UP_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AqiError {
    #[error("{0} has no breakpoint table")]
    NonAqiPollutant(Pollutant),
    #[error("{pollutant} is indexed in {expected}, got {got}")]
    UnitMismatch {
        pollutant: Pollutant,
        expected: Unit,
        got: Unit,
    },
    #[error("no sub-indices supplied")]
    EmptyInput,
    #[error("{0} appears more than once")]
    DuplicatePollutant(Pollutant),
    #[error("AQI {0} is outside 0..=500")]
    OutOfRange(i64),
}

#[derive(Debug, Error)]
pub enum TableError {
    #[error("cannot read breakpoint table: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed breakpoint table: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot serialize breakpoint table: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("unsupported table format `{0}`")]
    Format(String),
    #[error("invalid breakpoint table: {0}")]
    Invalid(String),
}

/// One linear piece of a pollutant's concentration-to-index mapping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub conc_lo: f64,
    pub conc_hi: f64,
    pub index_lo: u16,
    pub index_hi: u16,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PollutantBreakpoints {
    pub unit: Unit,
    pub segments: Vec<Segment>,
}

/// A named AQI band, e.g. `Moderate` covering 101..=200.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryBand {
    pub label: String,
    pub index_lo: u16,
    pub index_hi: u16,
    pub color: String,
}

impl CategoryBand {
    pub fn contains(&self, aqi: u16) -> bool {
        (self.index_lo..=self.index_hi).contains(&aqi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakpointTable {
    pub format: String,
    pub categories: Vec<CategoryBand>,
    pub pollutants: BTreeMap<Pollutant, PollutantBreakpoints>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SubIndex {
    pub pollutant: Pollutant,
    pub value: u16,
    pub category: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AqiReport {
    pub overall: u16,
    pub category: String,
    pub color: String,
    pub dominant: Pollutant,
    pub sub_indices: Vec<SubIndex>,
    pub valid: bool,
    pub reason: Option<String>,
}

impl BreakpointTable {
    /// The CPCB table bundled with the crate.
    pub fn cpcb() -> Self {
        Self::from_toml_str(DEFAULT_TABLE).expect("bundled breakpoint table is valid")
    }

    pub fn from_toml_str(s: &str) -> Result<Self, TableError> {
        let table: BreakpointTable = toml::from_str(s)?;
        table.validate()?;
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TableError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String, TableError> {
        Ok(toml::to_string(self)?)
    }

    fn validate(&self) -> Result<(), TableError> {
        let invalid = |m: String| Err(TableError::Invalid(m));
        if self.format != TABLE_FORMAT {
            return Err(TableError::Format(self.format.clone()));
        }

        let mut expected_lo = 0u16;
        for band in &self.categories {
            if band.index_lo != expected_lo || band.index_hi < band.index_lo {
                return invalid(format!(
                    "category `{}` must start at {expected_lo} and not be empty",
                    band.label
                ));
            }
            expected_lo = band.index_hi + 1;
        }
        if expected_lo != MAX_INDEX + 1 {
            return invalid("category bands must end at 500".into());
        }

        for (p, bp) in &self.pollutants {
            if !p.is_aqi_bearing() {
                return invalid(format!("{p} is not an AQI-bearing pollutant"));
            }
            let Some(first) = bp.segments.first() else {
                return invalid(format!("{p} has no segments"));
            };
            if first.conc_lo != 0.0 || first.index_lo != 0 {
                return invalid(format!("{p} must start at concentration 0, index 0"));
            }
            for s in &bp.segments {
                if !(s.conc_lo.is_finite() && s.conc_hi.is_finite())
                    || s.conc_hi <= s.conc_lo
                    || s.index_hi <= s.index_lo
                {
                    return invalid(format!("{p} has a non-increasing segment {s:?}"));
                }
            }
            for w in bp.segments.windows(2) {
                if w[1].conc_lo != w[0].conc_hi || w[1].index_lo != w[0].index_hi {
                    return invalid(format!("{p} segments are not contiguous at {}", w[0].conc_hi));
                }
            }
            if bp.segments.last().map(|s| s.index_hi) != Some(MAX_INDEX) {
                return invalid(format!("{p} must reach index 500"));
            }
        }
        Ok(())
    }

    pub fn breakpoints(&self, pollutant: Pollutant) -> Option<&PollutantBreakpoints> {
        self.pollutants.get(&pollutant)
    }

    /// Maps an AQI value onto its category band.
    pub fn categorize(&self, aqi: i64) -> Result<&CategoryBand, AqiError> {
        u16::try_from(aqi)
            .ok()
            .and_then(|v| self.categories.iter().find(|b| b.contains(v)))
            .ok_or(AqiError::OutOfRange(aqi))
    }

    fn category_label(&self, aqi: u16) -> String {
        self.categorize(aqi as i64)
            .map(|b| b.label.clone())
            .expect("validated bands cover 0..=500")
    }

    /// Piecewise-linear sub-index of one concentration, rounded half-up.
    ///
    /// A concentration on a knot belongs to the segment it opens, so knots map
    /// to their index boundary exactly. Concentrations at or above the top
    /// knot clamp to 500.
    pub fn sub_index(&self, c: &Concentration) -> Result<SubIndex, AqiError> {
        let p = c.pollutant();
        let bp = self.pollutants.get(&p).ok_or(AqiError::NonAqiPollutant(p))?;
        if c.unit() != bp.unit {
            return Err(AqiError::UnitMismatch {
                pollutant: p,
                expected: bp.unit,
                got: c.unit(),
            });
        }
        let v = c.value();
        let i = bp.segments.partition_point(|s| s.conc_hi <= v);
        let value = match bp.segments.get(i) {
            None => MAX_INDEX,
            Some(s) => {
                let span = f64::from(s.index_hi - s.index_lo);
                let raw = f64::from(s.index_lo) + span * (v - s.conc_lo) / (s.conc_hi - s.conc_lo);
                ((raw + 0.5 + HALF_UP_SLACK).floor() as u16).clamp(s.index_lo, s.index_hi)
            }
        };
        Ok(SubIndex {
            pollutant: p,
            value,
            category: self.category_label(value),
        })
    }

    /// Overall AQI as the maximum sub-index.
    ///
    /// The report is valid only when at least three pollutants are present and
    /// one of them is PM10 or PM2.5; an invalid report still carries the
    /// computed overall value and category.
    pub fn overall(&self, sub_indices: &[SubIndex]) -> Result<AqiReport, AqiError> {
        if sub_indices.is_empty() {
            return Err(AqiError::EmptyInput);
        }
        let mut sorted = sub_indices.to_vec();
        sorted.sort_by_key(|s| s.pollutant);
        if let Some(w) = sorted.windows(2).find(|w| w[0].pollutant == w[1].pollutant) {
            return Err(AqiError::DuplicatePollutant(w[0].pollutant));
        }
        // first maximum in enumeration order
        let top = sorted
            .iter()
            .fold(&sorted[0], |best, s| if s.value > best.value { s } else { best });
        let overall = top.value;
        let dominant = top.pollutant;
        let band = self.categorize(overall as i64)?;
        let reason = validity_failure(sorted.iter().map(|s| s.pollutant));
        Ok(AqiReport {
            overall,
            category: band.label.clone(),
            color: band.color.clone(),
            dominant,
            valid: reason.is_none(),
            reason,
            sub_indices: sorted,
        })
    }

    /// Sub-indices for every AQI-bearing concentration in `samples`, then the
    /// overall report. Non-AQI pollutants are skipped.
    pub fn report<'a>(&self, samples: impl IntoIterator<Item = &'a Concentration>) -> Result<AqiReport, AqiError> {
        let subs = samples
            .into_iter()
            .filter(|c| c.pollutant().is_aqi_bearing())
            .map(|c| self.sub_index(c))
            .collect::<Result<Vec<_>, _>>()?;
        self.overall(&subs)
    }
}

/// Why a set of pollutants cannot yield a valid AQI, or `None` if it can.
pub fn validity_failure(pollutants: impl IntoIterator<Item = Pollutant>) -> Option<String> {
    let mut seen: Vec<Pollutant> = pollutants.into_iter().filter(|p| p.is_aqi_bearing()).collect();
    seen.sort();
    seen.dedup();
    let few = seen.len() < 3;
    let no_pm = !seen.iter().any(|p| p.is_particulate());
    match (few, no_pm) {
        (false, false) => None,
        (true, false) => Some("insufficient pollutants".into()),
        (false, true) => Some("no PM".into()),
        (true, true) => Some("insufficient pollutants / no PM".into()),
    }
}

/// At least three AQI-bearing pollutants, one of them particulate.
pub fn meets_validity_rule(pollutants: impl IntoIterator<Item = Pollutant>) -> bool {
    validity_failure(pollutants).is_none()
}
