mod oracles;

use std::collections::HashSet;

use airq_core::geo::{GeoPoint, StationIndex, StationMeta};
use airq_core::ingest::{interpolate_gaps, DailyRecord, Provenance, Sample};
use airq_core::{BreakpointTable, Concentration, Pollutant};
use chrono::{Days, NaiveDate};
use oracles::*;

#[test]
fn sub_index_matches_exact_oracle() {
    let table = BreakpointTable::cpcb();
    let mut rng = rng(0x05ee_da01);
    for p in Pollutant::AQI_BEARING {
        let segs = &table.breakpoints(p).unwrap().segments;
        for n in random_hundredths(&mut rng, &table, p, 1000) {
            let c = Concentration::canonical(p, n as f64 / 100.0).unwrap();
            let got = table.sub_index(&c).unwrap().value;
            let want = exact_sub_index(segs, Q::new(n, 100));
            assert_eq!(got, want, "{p} at {}", n as f64 / 100.0);
        }
    }
}

#[test]
fn knots_are_exact() {
    let table = BreakpointTable::cpcb();
    for p in Pollutant::AQI_BEARING {
        for s in &table.breakpoints(p).unwrap().segments {
            let lo = table
                .sub_index(&Concentration::canonical(p, s.conc_lo).unwrap())
                .unwrap();
            let hi = table
                .sub_index(&Concentration::canonical(p, s.conc_hi).unwrap())
                .unwrap();
            assert_eq!(lo.value, s.index_lo, "{p} at {}", s.conc_lo);
            assert_eq!(hi.value, s.index_hi, "{p} at {}", s.conc_hi);
        }
    }
}

#[test]
fn monotone_and_categorized() {
    let table = BreakpointTable::cpcb();
    let mut rng = rng(11);
    for p in Pollutant::AQI_BEARING {
        let mut ns = random_hundredths(&mut rng, &table, p, 500);
        ns.sort();
        let subs: Vec<_> = ns
            .iter()
            .map(|n| {
                table
                    .sub_index(&Concentration::canonical(p, *n as f64 / 100.0).unwrap())
                    .unwrap()
            })
            .collect();
        for w in subs.windows(2) {
            assert!(w[0].value <= w[1].value);
        }
        for s in &subs {
            assert_eq!(table.categorize(s.value as i64).unwrap().label, s.category);
        }
    }
}

#[test]
fn overall_is_permutation_invariant() {
    let table = BreakpointTable::cpcb();
    let mut rng = rng(12);
    use rand::seq::SliceRandom;
    for _ in 0..200 {
        let mut concs: Vec<_> = Pollutant::AQI_BEARING
            .iter()
            .map(|p| {
                let n = random_hundredths(&mut rng, &table, *p, 1)[0];
                Concentration::canonical(*p, n as f64 / 100.0).unwrap()
            })
            .collect();
        let a = table.report(&concs).unwrap();
        concs.shuffle(&mut rng);
        let b = table.report(&concs).unwrap();
        assert_eq!(a, b);
        let dom = a.sub_indices.iter().find(|s| s.pollutant == a.dominant).unwrap();
        assert_eq!(dom.value, a.overall);
    }
}

#[test]
fn haversine_against_oracle() {
    let mut rng = rng(13);
    use rand::Rng;
    for _ in 0..2000 {
        let (a, b, c, d) = (
            rng.random_range(-90.0..=90.0),
            rng.random_range(-180.0..=180.0),
            rng.random_range(-90.0..=90.0),
            rng.random_range(-180.0..=180.0),
        );
        let got = airq_core::haversine_km(GeoPoint::new(a, b).unwrap(), GeoPoint::new(c, d).unwrap());
        assert!((got - haversine_oracle_km(a, b, c, d)).abs() < 1e-6);
    }
}

#[test]
fn nearest_matches_naive_scan() {
    let mut rng = rng(109);
    use rand::Rng;
    let raw = synthetic_stations(&mut rng, 109);
    let stations: Vec<StationMeta> = raw
        .iter()
        .map(|(id, lat, lon)| StationMeta {
            id: id.clone(),
            name: id.clone(),
            city: "c".into(),
            state: "s".into(),
            location: GeoPoint::new(*lat, *lon).unwrap(),
            live: true,
        })
        .collect();
    let index = StationIndex::new(stations).unwrap();
    for _ in 0..500 {
        let (lat, lon) = (rng.random_range(-90.0..=90.0), rng.random_range(-180.0..=180.0));
        let fast = index.nearest(GeoPoint::new(lat, lon).unwrap()).unwrap();
        let (id, d) = naive_nearest(&raw, lat, lon);
        assert_eq!(fast.station.id, id);
        assert_eq!(fast.distance_km, d);
    }
    // exactly on a station
    let (id, lat, lon) = &raw[40];
    let hit = index.nearest(GeoPoint::new(*lat, *lon).unwrap()).unwrap();
    assert_eq!((&hit.station.id, hit.distance_km), (id, 0.0));
}

const POLLUTANTS: [Pollutant; 3] = [Pollutant::Pm25, Pollutant::No2, Pollutant::O3];

fn linear_fixture(
    seed: u64,
    days: usize,
    gap: (usize, usize),
) -> (Vec<DailyRecord>, Vec<LinearSeries>, HashSet<usize>) {
    let mut rng = rng(seed);
    let start = NaiveDate::from_ymd_opt(2019, 1, 1).unwrap();
    let lines: Vec<_> = POLLUTANTS
        .iter()
        .map(|_| LinearSeries::random(&mut rng, days))
        .collect();
    let removed: HashSet<usize> = punch_gaps(&mut rng, days, gap.0, gap.1).into_iter().collect();
    let records = (0..days)
        .filter(|d| !removed.contains(d))
        .map(|d| {
            let mut r = DailyRecord::new("S", start + Days::new(d as u64));
            for (p, line) in POLLUTANTS.iter().zip(&lines) {
                r.samples.insert(*p, Sample::measured(line.at(d)));
            }
            r
        })
        .collect();
    (records, lines, removed)
}

#[test]
fn short_gaps_reconstruct_exactly() {
    for seed in 0..50 {
        let (records, lines, removed) = linear_fixture(seed, 120, (1, 3));
        let out = interpolate_gaps(&records, 3).unwrap();
        assert_eq!(out.records.len(), 120);
        assert_eq!(out.calendar.dates.len(), 120);
        for (d, r) in out.records.iter().enumerate() {
            for (p, line) in POLLUTANTS.iter().zip(&lines) {
                let s = r.samples[p];
                assert_eq!(s.value, line.at(d), "seed {seed} day {d} {p}");
                let expect = if removed.contains(&d) {
                    Provenance::Interpolated
                } else {
                    Provenance::Measured
                };
                assert_eq!(s.provenance, expect);
            }
        }
    }
}

#[test]
fn long_gaps_stay_missing() {
    let start = NaiveDate::from_ymd_opt(2019, 1, 1).unwrap();
    for seed in 0..20 {
        let (records, _, removed) = linear_fixture(seed, 120, (4, 8));
        assert!(!removed.is_empty());
        let out = interpolate_gaps(&records, 3).unwrap();
        assert_eq!(out.records.len(), 120 - removed.len());
        for d in &removed {
            assert!(!out.calendar.dates.contains(&(start + Days::new(*d as u64))));
        }
    }
}
