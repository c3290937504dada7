//! Deterministic particle-cloud scenes for one station-date.
//!
//! Each sampled pollutant contributes a number of particles proportional to
//! its level on the 0..=500 scale: its sub-index when it has one, otherwise
//! its concentration relative to a configured reference maximum. Positions,
//! velocities, rotations and particulate sizes all come from a ChaCha8
//! stream seeded by the scene seed, so a scene is a pure function of its
//! inputs.

pub mod info;

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::aqi::{AqiReport, MAX_INDEX};
use crate::ingest::DailyRecord;
use crate::pollutant::Pollutant;

pub use info::{PollutantInfo, PollutantRegistry, RegistryError};

pub const SCENE_FORMAT: &str = "airq-scene/1";

const BUNDLED: &str = include_str!("../../data/scene.toml");

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("level {0} is outside 0..=500")]
    LevelOutOfRange(i64),
    #[error("max count must be positive")]
    ZeroMaxCount,
    #[error("AQI report does not match the record: {0}")]
    MismatchedInputs(String),
    #[error("cannot read scene config: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed scene config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scene config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    fn from_array([x, y, z]: [f64; 3]) -> Self {
        Vec3 { x, y, z }
    }

    fn scaled(self, k: f64) -> Self {
        Vec3 {
            x: self.x * k,
            y: self.y * k,
            z: self.z * k,
        }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// The simulated box of air around the viewer, in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Airspace {
    pub half_extents: Vec3,
    pub render_range: f64,
}

impl Airspace {
    pub fn volume(&self) -> f64 {
        8.0 * self.half_extents.x * self.half_extents.y * self.half_extents.z
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        p.x.abs() <= self.half_extents.x && p.y.abs() <= self.half_extents.y && p.z.abs() <= self.half_extents.z
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct AirspaceConfig {
    half_extents: [f64; 3],
    render_range: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MotionConfig {
    speed: [f64; 2],
    angular_speed: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ParticleConfig {
    default_max_count: u32,
    fixed_scale: f64,
    #[serde(default)]
    max_count: BTreeMap<Pollutant, u32>,
    #[serde(default)]
    scale_range: BTreeMap<Pollutant, [f64; 2]>,
    #[serde(default)]
    ref_max: BTreeMap<Pollutant, f64>,
}

/// Tunable scene parameters, loaded from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    format: String,
    airspace: AirspaceConfig,
    motion: MotionConfig,
    particles: ParticleConfig,
}

fn ordered_range(r: [f64; 2]) -> bool {
    r[0].is_finite() && r[1].is_finite() && 0.0 <= r[0] && r[0] <= r[1]
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self::from_toml_str(BUNDLED).expect("bundled scene config is valid")
    }
}

impl SceneConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, SceneError> {
        let cfg: SceneConfig = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SceneError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<(), SceneError> {
        let bad = |m: String| Err(SceneError::Invalid(m));
        if self.format != SCENE_FORMAT {
            return bad(format!("unsupported format `{}`", self.format));
        }
        if !self.airspace.half_extents.iter().all(|h| h.is_finite() && *h > 0.0) {
            return bad("half extents must be positive".into());
        }
        if !(self.airspace.render_range.is_finite() && self.airspace.render_range > 0.0) {
            return bad("render range must be positive".into());
        }
        if !ordered_range(self.motion.speed) || !ordered_range(self.motion.angular_speed) {
            return bad("motion ranges must be ordered and non-negative".into());
        }
        let p = &self.particles;
        if p.default_max_count == 0 || p.max_count.values().any(|c| *c == 0) {
            return bad("max counts must be positive".into());
        }
        if !(p.fixed_scale.is_finite() && p.fixed_scale > 0.0) {
            return bad("fixed scale must be positive".into());
        }
        for (pol, r) in &p.scale_range {
            if !ordered_range(*r) || r[0] == 0.0 {
                return bad(format!("{pol}: scale range must be ordered and positive"));
            }
        }
        for pol in Pollutant::ALL.iter().filter(|p| !p.is_aqi_bearing()) {
            match p.ref_max.get(pol) {
                Some(v) if v.is_finite() && *v > 0.0 => {}
                _ => return bad(format!("{pol} needs a positive ref_max")),
            }
        }
        Ok(())
    }

    pub fn airspace(&self) -> Airspace {
        Airspace {
            half_extents: Vec3::from_array(self.airspace.half_extents),
            render_range: self.airspace.render_range,
        }
    }

    pub fn speed_range(&self) -> (f64, f64) {
        (self.motion.speed[0], self.motion.speed[1])
    }

    pub fn max_count(&self, p: Pollutant) -> u32 {
        self.particles
            .max_count
            .get(&p)
            .copied()
            .unwrap_or(self.particles.default_max_count)
    }

    pub fn set_max_count(&mut self, p: Pollutant, count: u32) {
        self.particles.max_count.insert(p, count);
    }

    /// Size range for pollutants that spawn at varied sizes; `None` means a
    /// fixed scale.
    pub fn scale_range(&self, p: Pollutant) -> Option<(f64, f64)> {
        self.particles.scale_range.get(&p).map(|r| (r[0], r[1]))
    }

    pub fn fixed_scale(&self) -> f64 {
        self.particles.fixed_scale
    }

    pub fn ref_max(&self, p: Pollutant) -> Option<f64> {
        self.particles.ref_max.get(&p).copied()
    }
}

/// `round(max_count × level / 500)`, half-up, for a level in `0..=500`.
pub fn particle_count(level: i64, max_count: u32) -> Result<u32, SceneError> {
    if !(0..=i64::from(MAX_INDEX)).contains(&level) {
        return Err(SceneError::LevelOutOfRange(level));
    }
    if max_count == 0 {
        return Err(SceneError::ZeroMaxCount);
    }
    let scaled = u64::from(max_count) * level as u64;
    let count = (2 * scaled + u64::from(MAX_INDEX)) / (2 * u64::from(MAX_INDEX));
    Ok(count.min(u64::from(max_count)) as u32)
}

/// Level on the 0..=500 scale for a pollutant without a sub-index:
/// `round(500 × clamp(concentration / ref_max, 0, 1))`.
pub fn relative_level(concentration: f64, ref_max: f64) -> u16 {
    let ratio = (concentration / ref_max).clamp(0.0, 1.0);
    (f64::from(MAX_INDEX) * ratio + 0.5).floor() as u16
}

/// Seed used when the client does not pick one: the first eight bytes of
/// SHA-256 over `"{station_id}|{date}"`, big-endian.
pub fn default_seed(station_id: &str, date: NaiveDate) -> u64 {
    let digest = Sha256::digest(format!("{station_id}|{date}").as_bytes());
    u64::from_be_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ParticleSpawn {
    pub pollutant: Pollutant,
    pub position: Vec3,
    pub velocity: Vec3,
    pub rotation_axis: Vec3,
    pub angular_speed: f64,
    pub scale: f64,
}

mod seed_string {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(seed)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SceneSpec {
    pub station_id: String,
    pub date: NaiveDate,
    /// Decimal string in JSON; 64-bit seeds do not survive a JS number.
    #[serde(with = "seed_string")]
    pub seed: u64,
    pub airspace: Airspace,
    pub spawns: Vec<ParticleSpawn>,
    pub aqi: AqiReport,
}

/// Particle counts per sampled pollutant, in enumeration order.
pub fn particle_counts(
    record: &DailyRecord,
    report: &AqiReport,
    config: &SceneConfig,
) -> Result<Vec<(Pollutant, u32)>, SceneError> {
    let mut reported: Vec<Pollutant> = report.sub_indices.iter().map(|s| s.pollutant).collect();
    reported.sort();
    let sampled: Vec<Pollutant> = record.samples.keys().copied().filter(|p| p.is_aqi_bearing()).collect();
    if reported != sampled {
        return Err(SceneError::MismatchedInputs(format!(
            "report covers {reported:?}, record samples {sampled:?}"
        )));
    }

    let mut counts = Vec::new();
    for (&p, sample) in &record.samples {
        let level = match report.sub_indices.iter().find(|s| s.pollutant == p) {
            Some(s) => s.value,
            None => {
                let ref_max = config
                    .ref_max(p)
                    .ok_or_else(|| SceneError::Invalid(format!("{p} has no ref_max")))?;
                relative_level(sample.value, ref_max)
            }
        };
        counts.push((p, particle_count(i64::from(level), config.max_count(p))?));
    }
    Ok(counts)
}

/// Builds the scene for one station-date.
pub fn generate_scene(
    record: &DailyRecord,
    report: &AqiReport,
    seed: u64,
    config: &SceneConfig,
) -> Result<SceneSpec, SceneError> {
    let counts = particle_counts(record, report, config)?;
    let airspace = config.airspace();
    let h = airspace.half_extents;
    let (v_min, v_max) = config.speed_range();
    let (w_min, w_max) = (config.motion.angular_speed[0], config.motion.angular_speed[1]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let total: u32 = counts.iter().map(|(_, n)| n).sum();
    let mut spawns = Vec::with_capacity(total as usize);
    for (p, n) in counts {
        let scale_range = config.scale_range(p);
        for _ in 0..n {
            let position = Vec3 {
                x: rng.random_range(-h.x..=h.x),
                y: rng.random_range(-h.y..=h.y),
                z: rng.random_range(-h.z..=h.z),
            };
            let direction = Vec3::from_array(UnitSphere.sample(&mut rng));
            let speed = rng.random_range(v_min..=v_max);
            let rotation_axis = Vec3::from_array(UnitSphere.sample(&mut rng));
            let angular_speed = rng.random_range(w_min..=w_max);
            let scale = match scale_range {
                Some((lo, hi)) => rng.random_range(lo..=hi),
                None => config.fixed_scale(),
            };
            spawns.push(ParticleSpawn {
                pollutant: p,
                position,
                velocity: direction.scaled(speed),
                rotation_axis,
                angular_speed,
                scale,
            });
        }
    }

    Ok(SceneSpec {
        station_id: record.station_id.clone(),
        date: record.date,
        seed,
        airspace,
        spawns,
        aqi: report.clone(),
    })
}
