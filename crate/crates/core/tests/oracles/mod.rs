//! Independent reference implementations used by the integration and
//! acceptance suites. Nothing here calls into the code paths it checks.
#![allow(dead_code)]

use airq_core::aqi::{BreakpointTable, Segment};
use airq_core::geo::EARTH_RADIUS_KM;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Q = Ratio<i128>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Exact rational value of a decimal literal such as `"30"` or `"0.25"`.
pub fn decimal(s: &str) -> Q {
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    let scale = 10i128.pow(frac.len() as u32);
    let digits: i128 = format!("{int}{frac}").parse().expect("decimal literal");
    Q::new(digits, scale)
}

fn knot(v: f64) -> Q {
    decimal(&v.to_string())
}

/// Brute-force sub-index in exact arithmetic: scan every segment for the
/// one holding `c`, interpolate, round half-up.
pub fn exact_sub_index(segments: &[Segment], c: Q) -> u16 {
    for s in segments {
        let (lo, hi) = (knot(s.conc_lo), knot(s.conc_hi));
        if lo <= c && c < hi {
            let (ilo, ihi) = (Q::from(s.index_lo as i128), Q::from(s.index_hi as i128));
            let exact = ilo + (ihi - ilo) * (c - lo) / (hi - lo);
            return (exact + Q::new(1, 2)).floor().to_integer() as u16;
        }
    }
    500
}

/// Random concentrations, two decimals, spanning 120% of the table range.
pub fn random_hundredths(
    rng: &mut ChaCha8Rng,
    table: &BreakpointTable,
    p: airq_core::Pollutant,
    n: usize,
) -> Vec<i128> {
    let top = table.breakpoints(p).unwrap().segments.last().unwrap().conc_hi;
    let max = (top * 120.0) as i128;
    (0..n).map(|_| rng.random_range(0..=max)).collect()
}

/// Haversine written out independently: atan2 form.
pub fn haversine_oracle_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let r = EARTH_RADIUS_KM;
    let p1 = lat1 * std::f64::consts::PI / 180.0;
    let p2 = lat2 * std::f64::consts::PI / 180.0;
    let dp = (lat2 - lat1) * std::f64::consts::PI / 180.0;
    let dl = (lon2 - lon1) * std::f64::consts::PI / 180.0;
    let a = (dp / 2.0).sin() * (dp / 2.0).sin() + p1.cos() * p2.cos() * (dl / 2.0).sin() * (dl / 2.0).sin();
    2.0 * r * a.sqrt().atan2((1.0 - a).max(0.0).sqrt())
}

/// Stations as `(id, lat, lon)` scattered over India's bounding box.
pub fn synthetic_stations(rng: &mut ChaCha8Rng, n: usize) -> Vec<(String, f64, f64)> {
    (0..n)
        .map(|i| {
            (
                format!("ST{i:03}"),
                rng.random_range(8.0..=35.0),
                rng.random_range(68.0..=97.0),
            )
        })
        .collect()
}

/// Naive scan: full haversine against every station, `(distance, id)` min.
pub fn naive_nearest(stations: &[(String, f64, f64)], lat: f64, lon: f64) -> (&str, f64) {
    let mut best: Option<(&str, f64)> = None;
    for (id, slat, slon) in stations {
        let d = airq_core::haversine_km(
            airq_core::GeoPoint::new(lat, lon).unwrap(),
            airq_core::GeoPoint::new(*slat, *slon).unwrap(),
        );
        best = match best {
            Some((bid, bd)) if bd < d || (bd == d && bid <= id.as_str()) => Some((bid, bd)),
            _ => Some((id.as_str(), d)),
        };
    }
    best.unwrap()
}

/// An exactly linear daily series `intercept + slope × day` whose values
/// are all exactly representable (quarter-unit slope, integer intercept).
#[derive(Debug, Clone, Copy)]
pub struct LinearSeries {
    pub intercept: f64,
    pub slope: f64,
}

impl LinearSeries {
    pub fn random(rng: &mut ChaCha8Rng, days: usize) -> Self {
        let slope = rng.random_range(-8i32..=8) as f64 / 4.0;
        let floor = if slope < 0.0 { -slope * days as f64 } else { 0.0 };
        let intercept = floor + rng.random_range(10i32..=200) as f64;
        LinearSeries { intercept, slope }
    }

    pub fn at(&self, day: usize) -> f64 {
        self.intercept + self.slope * day as f64
    }
}

/// Removes runs of `min_len..=max_len` interior days, keeping at least one
/// present day between runs and at both ends. Returns the removed days.
pub fn punch_gaps(rng: &mut ChaCha8Rng, days: usize, min_len: usize, max_len: usize) -> Vec<usize> {
    let mut removed = Vec::new();
    let mut d = 1 + rng.random_range(0..3);
    loop {
        let len = rng.random_range(min_len..=max_len);
        if d + len >= days - 1 {
            break;
        }
        removed.extend(d..d + len);
        d += len + 1 + rng.random_range(0..4);
    }
    removed
}
