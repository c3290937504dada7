//! Fixtures and process helpers shared by the CLI tests and the acceptance
//! suite.
#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

use airq_core::{BreakpointTable, Concentration, Pollutant};
use chrono::{Days, NaiveDate};

pub const BIN: &str = env!("CARGO_BIN_EXE_airq");

pub fn date(s: &str) -> NaiveDate {
    s.parse().unwrap()
}

pub fn airq<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(BIN).args(args).output().expect("spawn airq")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// `key=value` pairs from the ingest summary line.
pub fn counts(o: &Output) -> std::collections::BTreeMap<String, u64> {
    stdout(o)
        .split_whitespace()
        .filter_map(|kv| kv.split_once('='))
        .map(|(k, v)| (k.to_string(), v.parse().unwrap()))
        .collect()
}

pub struct Site {
    pub id: &'static str,
    pub name: &'static str,
    pub state: &'static str,
    pub lat: f64,
    pub lon: f64,
}

pub const SITES: [Site; 3] = [
    Site {
        id: "DL001",
        name: "Delhi",
        state: "Delhi",
        lat: 28.6139,
        lon: 77.2090,
    },
    Site {
        id: "BR001",
        name: "Patna",
        state: "Bihar",
        lat: 25.5941,
        lon: 85.1376,
    },
    Site {
        id: "UP001",
        name: "Ghaziabad",
        state: "Uttar Pradesh",
        lat: 28.6692,
        lon: 77.4538,
    },
];

pub const LOCKDOWN_FROM: &str = "2020-01-01";
pub const LOCKDOWN_TO: &str = "2020-05-01";
pub const LOCKDOWN_PIVOT: &str = "2020-03-25";

/// Overall AQI per day for one lockdown station. Each station averages 350
/// before the pivot with its own wobble. After it, every station sits at a
/// low plateau for 17 days and then climbs 10 per day for the final three
/// weeks; the 38 post-pivot days average exactly 120.
pub fn lockdown_series(station: usize) -> Vec<(NaiveDate, u16)> {
    let from = date(LOCKDOWN_FROM);
    let pivot = date(LOCKDOWN_PIVOT);
    let days = (date(LOCKDOWN_TO) - from).num_days() as u64 + 1;
    let mut after = vec![67u16; 15];
    after.extend([66, 66]);
    after.extend((0..21).map(|k| 63 + 10 * k));
    (0..days)
        .map(|i| {
            let d = from + Days::new(i);
            let aqi = if d < pivot {
                match station {
                    0 => 350,
                    1 => [340, 360][i as usize % 2],
                    _ => [330, 350, 370][i as usize % 3],
                }
            } else {
                after[(d - pivot).num_days() as usize]
            };
            (d, aqi)
        })
        .collect()
}

/// PM10 concentration whose sub-index is exactly `aqi`, read off the table.
pub fn pm10_for(table: &BreakpointTable, aqi: u16) -> f64 {
    let segs = &table.breakpoints(Pollutant::Pm10).unwrap().segments;
    let s = segs.iter().find(|s| s.index_lo <= aqi && aqi <= s.index_hi).unwrap();
    let c = s.conc_lo + f64::from(aqi - s.index_lo) * (s.conc_hi - s.conc_lo) / f64::from(s.index_hi - s.index_lo);
    let got = table
        .sub_index(&Concentration::canonical(Pollutant::Pm10, c).unwrap())
        .unwrap();
    assert_eq!(got.value, aqi, "fixture construction for PM10 {c}");
    c
}

pub fn stations_csv() -> String {
    let mut s = String::from("id,name,city,state,lat,lon,live\n");
    for site in &SITES {
        s.push_str(&format!(
            "{},{},{},{},{},{},true\n",
            site.id, site.name, site.name, site.state, site.lat, site.lon
        ));
    }
    s
}

/// Ingestion CSV realising each `(date, aqi)` with PM10 as the dominant
/// pollutant; PM2.5, NO2 and CO stay low so they never dominate.
pub fn data_csv(series: &[(&str, Vec<(NaiveDate, u16)>)]) -> String {
    let table = BreakpointTable::cpcb();
    let mut s = String::from("station_id,date,pollutant,value,unit\n");
    for (id, days) in series {
        for (d, aqi) in days {
            s.push_str(&format!("{id},{d},PM10,{},ug/m3\n", pm10_for(&table, *aqi)));
            s.push_str(&format!("{id},{d},PM2.5,10,ug/m3\n"));
            s.push_str(&format!("{id},{d},NO2,20,µg/m³\n"));
            s.push_str(&format!("{id},{d},CO,1.0,mg/m3\n"));
            s.push_str(&format!("{id},{d},TEMP,24.5,degC\n"));
        }
    }
    s
}

pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub stations: PathBuf,
    pub data: PathBuf,
    pub store: PathBuf,
}

impl Fixture {
    pub fn new(data: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let stations = dir.path().join("stations.csv");
        let data_path = dir.path().join("data.csv");
        std::fs::write(&stations, stations_csv()).unwrap();
        std::fs::write(&data_path, data).unwrap();
        let store = dir.path().join("airq.sqlite");
        Fixture {
            dir,
            stations,
            data: data_path,
            store,
        }
    }

    pub fn lockdown() -> Self {
        let series: Vec<_> = SITES
            .iter()
            .enumerate()
            .map(|(i, s)| (s.id, lockdown_series(i)))
            .collect();
        Self::new(&data_csv(&series))
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn ingest(&self) -> Output {
        airq([
            "ingest".as_ref(),
            "--stations".as_ref(),
            self.stations.as_os_str(),
            "--data".as_ref(),
            self.data.as_os_str(),
            "--store".as_ref(),
            self.store.as_os_str(),
        ])
    }

    pub fn trend(&self, station: &str, from: &str, to: &str, pivot: Option<&str>, out: &Path) -> Output {
        let mut cmd = Command::new(BIN);
        cmd.args(["trend", "--station", station, "--from", from, "--to", to])
            .arg("--store")
            .arg(&self.store)
            .arg("--out")
            .arg(out);
        if let Some(p) = pivot {
            cmd.args(["--pivot", p]);
        }
        cmd.output().unwrap()
    }
}

/// `# key,value` lines of a trend CSV summary block.
pub fn summary(csv: &str) -> std::collections::BTreeMap<String, String> {
    csv.lines()
        .filter_map(|l| l.strip_prefix("# "))
        .filter_map(|l| l.split_once(','))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

/// A running `airq serve`, killed on drop.
pub struct Server {
    child: Child,
    pub base: String,
}

impl Server {
    pub fn start(store: &Path) -> Self {
        let mut child = Command::new(BIN)
            .arg("serve")
            .arg("--store")
            .arg(store)
            .args(["--bind", "127.0.0.1:0"])
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .unwrap();
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap())
            .read_line(&mut line)
            .unwrap();
        let base = line
            .trim()
            .strip_prefix("listening on ")
            .unwrap_or_else(|| panic!("unexpected serve banner `{line}`"))
            .to_string();
        Server { child, base }
    }

    pub fn get(&self, path: &str) -> (u16, serde_json::Value) {
        let resp = reqwest::blocking::get(format!("{}{path}", self.base)).unwrap();
        let status = resp.status().as_u16();
        (status, resp.json().unwrap_or(serde_json::Value::Null))
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Validator for one named component of the committed OpenAPI document.
pub fn schema(name: &str) -> jsonschema::Validator {
    let doc: serde_json::Value = serde_json::from_str(airq_api::OPENAPI).unwrap();
    let wrapper = serde_json::json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "$ref": format!("#/components/schemas/{name}"),
        "components": doc["components"],
    });
    jsonschema::validator_for(&wrapper).unwrap()
}
