//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured numbers. Criterion 10 (API/CLI content equivalence and
//! GeoJSON validity) runs in the rgss-cli crate, next to the service.
//!
//! Run with `cargo test -p rgss-core --test acceptance -- --nocapture`.

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rgss_core::catalog::Catalog;
use rgss_core::darktime::{
    self, availability, band_overlap, compute_dark_windows, merge_windows, scanline_is_dark,
    FrequencyBand, TimeInterval, Transmitter,
};
use rgss_core::geo::{self, GeoPoint};
use rgss_core::mitigation::{
    diurnal_load, plan_mitigation, CellSite, MitigationAction, MitigationPolicy, SessionClass,
    SessionMix, TrafficProfile,
};
use rgss_core::orbit::{self, PassDirection, Propagator};
use rgss_core::query::{run_darktime_query, DarkTimeQuery};
use rgss_core::scan::{self, MeasurementBand};

fn p_sst_band() -> MeasurementBand {
    MeasurementBand {
        center_ghz: 7.3,
        width_ghz: 0.35,
    }
}

fn seven_ghz_range() -> FrequencyBand {
    FrequencyBand {
        min_ghz: 7.125,
        max_ghz: 7.475,
    }
}

fn nj_transmitter() -> Transmitter {
    Transmitter {
        id: "nj-shore".into(),
        location: GeoPoint::new(42.0, -74.0),
        tx_band: seven_ghz_range(),
    }
}

fn day(y: i32, m: u32, d: u32) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(y, m, d, 0, 0, 0).unwrap()
}

/// Criterion 1: the shore-traversal scenario. Two dark-time windows on
/// 2024-11-26 (descending near 2 AM local, ascending midday), 14 +/- 3 scan
/// lines and 21 +/- 4.5 s in total, computed in under 10 s.
#[test]
fn criterion_1_shore_scenario() {
    let started = std::time::Instant::now();
    let catalog = Catalog::builtin();
    let entry = catalog.satellite("amsr2").unwrap();
    assert_eq!(entry.norad_id, 38337);
    let range = (day(2024, 11, 26), day(2024, 11, 27));
    let tle = entry.select_elements(range.0).unwrap();
    let windows = compute_dark_windows(
        "amsr2",
        tle,
        &entry.spec,
        &p_sst_band(),
        catalog.geofence(),
        &nj_transmitter(),
        range,
    )
    .unwrap();
    let elapsed = started.elapsed();

    assert_eq!(windows.len(), 2, "windows: {windows:#?}");
    assert_eq!(windows[0].direction, PassDirection::Descending);
    assert_eq!(windows[1].direction, PassDirection::Ascending);
    // Local time at -74 E is UTC-5: 2 AM +/- 2 h local is 05:00-09:00 UTC.
    let mid0 = windows[0].start + (windows[0].end - windows[0].start) / 2;
    let h0 = mid0.format("%H:%M").to_string();
    let hour0 = mid0.format("%H").to_string().parse::<i32>().unwrap();
    assert!(
        (5..9).contains(&hour0),
        "descending window at {h0} UTC, expected 05:00-09:00"
    );
    let mid1 = windows[1].start + (windows[1].end - windows[1].start) / 2;
    let hour1 = mid1.format("%H").to_string().parse::<i32>().unwrap();
    assert!(
        (15..21).contains(&hour1),
        "ascending window at {mid1}, expected local midday"
    );

    let total_lines: u32 = windows.iter().map(|w| w.scanline_count).sum();
    let total_dark_s: f64 = windows
        .iter()
        .map(|w| (w.end - w.start).num_milliseconds() as f64 / 1000.0)
        .sum();
    assert!(
        (11..=17).contains(&total_lines),
        "total scan lines {total_lines}, expected 14 +/- 3"
    );
    assert!(
        (16.5..=25.5).contains(&total_dark_s),
        "total dark {total_dark_s} s, expected 21 +/- 4.5"
    );
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!(
        "[PASS] criterion 1: 2 windows (desc {} UTC, asc {} UTC), {} scan lines, {:.1} s dark, {:.2} s compute",
        h0,
        mid1.format("%H:%M"),
        total_lines,
        total_dark_s,
        elapsed.as_secs_f64()
    );
}

/// Criterion 2: two-satellite availability over 7 days for a coastal
/// transmitter lands in [99.94%, 99.99%].
#[test]
fn criterion_2_two_satellite_availability() {
    let catalog = Catalog::builtin();
    let query = DarkTimeQuery {
        ngci: Some("310-410-00010001-001".into()),
        start: Some(day(2024, 11, 23)),
        end: Some(day(2024, 11, 30)),
        band: Some(seven_ghz_range()),
        satellites: vec!["amsr2".into(), "amsr3-sim".into()],
        ..Default::default()
    };
    let response = run_darktime_query(&catalog, &query).unwrap();
    let a = response.availability.availability;
    assert!(
        (0.9994..=0.9999).contains(&a),
        "availability {a:.6} outside [0.9994, 0.9999]; dark {} s over {} windows",
        response.availability.total_dark_s,
        response.merged_windows.len()
    );
    println!(
        "[PASS] criterion 2: availability {:.4}% ({:.1} s dark across {} windows, 7 days, 2 satellites)",
        a * 100.0,
        response.availability.total_dark_s,
        response.merged_windows.len()
    );
}

/// Criterion 3: the inland extent of two non-overlapping geofenced pixels
/// across the active scan stays inside [85, 190] km and brackets 90-180 km.
#[test]
fn criterion_3_geofence_extent() {
    let catalog = Catalog::builtin();
    let entry = catalog.satellite("amsr2").unwrap();
    let gf = catalog.geofence();
    let (min, max) =
        scan::two_pixel_extent_range_km(&entry.spec, &p_sst_band(), gf).unwrap();
    assert!(min >= 85.0 && max <= 190.0, "range [{min}, {max}]");
    assert!(min <= 91.0, "min {min} should reach down to ~90 km");
    assert!(max >= 179.0, "max {max} should reach up to ~180 km");
    println!("[PASS] criterion 3: two-pixel extent spans [{min:.1}, {max:.1}] km");
}

/// Criterion 4: 1-D Gaussian beam containment within 2x FWHM is 0.981 +/-
/// 0.001 against a numerical-integration oracle; the 1x FWHM value (0.761)
/// is reported alongside the often-quoted 68%.
#[test]
fn criterion_4_beam_containment() {
    // Oracle: Simpson integration of exp(-4 ln2 x^2) over the half-width.
    let integrate = |multiples: f64| {
        let sigma2 = 1.0 / (8.0 * 2.0f64.ln());
        let half = multiples / 2.0;
        let n = 40_000;
        let h = half / n as f64;
        let f = |x: f64| (-x * x / (2.0 * sigma2)).exp();
        let mut s = f(0.0) + f(half);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        (s * h / 3.0) / ((2.0 * std::f64::consts::PI * sigma2).sqrt() / 2.0)
    };
    let two = integrate(2.0);
    assert!((two - 0.981).abs() <= 0.001, "2x FWHM containment {two}");
    assert!((scan::beam_containment(2.0) - two).abs() < 1e-5);
    let one = integrate(1.0);
    assert!((one - 0.761).abs() <= 0.001, "1x FWHM containment {one}");
    assert!((scan::beam_containment(1.0) - one).abs() < 1e-5);
    println!(
        "[PASS] criterion 4: containment(2xFWHM) = {two:.4} (target 0.981), \
         containment(1xFWHM) = {one:.4} (documented against the 68% figure)"
    );
}

#[derive(serde::Deserialize)]
#[serde(untagged)]
enum RefState {
    Ok {
        time: f64,
        position: [f64; 3],
        #[allow(dead_code)]
        velocity: [f64; 3],
        #[allow(dead_code)]
        date: Option<toml::value::Datetime>,
    },
    Err {
        time: f64,
        #[allow(dead_code)]
        error: String,
    },
}

#[derive(serde::Deserialize)]
struct RefCase {
    line1: String,
    line2: String,
    states: Vec<RefState>,
}

#[derive(serde::Deserialize)]
struct RefCases {
    list: Vec<RefCase>,
}

/// Criterion 5: propagation matches the published SGP4 reference test
/// vectors within 1 km at every tabulated offset.
#[test]
fn criterion_5_sgp4_reference_vectors() {
    let raw = include_str!("data/sgp4_reference.toml");
    let cases: RefCases = toml::from_str(raw).unwrap();
    let mut satellites = 0usize;
    let mut states = 0usize;
    let mut worst = 0.0f64;
    for case in &cases.list {
        let tle = rgss_core::parse_tle(&format!("{}\n{}", case.line1, case.line2))
            .unwrap_or_else(|e| panic!("reference elements rejected: {e}\n{}", case.line1));
        // Reference offsets reach days either side of epoch; staleness is not
        // under test here.
        let prop = Propagator::with_max_age(&tle, Duration::days(3650)).unwrap();
        satellites += 1;
        for state in &case.states {
            match state {
                RefState::Ok { time, position, .. } => {
                    let t = tle.epoch + Duration::nanoseconds((time * 60e9).round() as i64);
                    let got = prop.state_at(t).unwrap_or_else(|e| {
                        panic!("propagation failed for {} at {time} min: {e}", tle.norad_id)
                    });
                    let err = ((got.position_km[0] - position[0]).powi(2)
                        + (got.position_km[1] - position[1]).powi(2)
                        + (got.position_km[2] - position[2]).powi(2))
                    .sqrt();
                    assert!(
                        err < 1.0,
                        "satellite {} at {time} min: {err:.4} km from reference",
                        tle.norad_id
                    );
                    worst = worst.max(err);
                    states += 1;
                }
                RefState::Err { time, .. } => {
                    let t = tle.epoch + Duration::nanoseconds((time * 60e9).round() as i64);
                    assert!(
                        prop.state_at(t).is_err(),
                        "satellite {} should fail at {time} min",
                        tle.norad_id
                    );
                }
            }
        }
    }
    assert!(satellites >= 30, "only {satellites} reference satellites");
    println!(
        "[PASS] criterion 5: {states} reference states across {satellites} satellites, worst error {worst:.2e} km"
    );
}

/// Criterion 6: for randomized transmitters and dates, every emitted window
/// carries the two open-loop guard lines and the guard lines themselves are
/// not dark in at least 95% of cases.
#[test]
fn criterion_6_open_loop_guard_property() {
    let catalog = Catalog::builtin();
    let entry = catalog.satellite("amsr2").unwrap();
    let gf = catalog.geofence();
    let band = p_sst_band();
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let mut windows_seen = 0usize;
    let mut guard_dark = 0usize;
    let mut guard_total = 0usize;
    let period = Duration::milliseconds(1500);
    for _ in 0..100 {
        let tx = Transmitter {
            id: "random".into(),
            location: GeoPoint::new(rng.random_range(25.0..50.0), rng.random_range(-125.0..-65.0)),
            tx_band: seven_ghz_range(),
        };
        let offset_h = rng.random_range(-120..=96);
        let start = day(2024, 11, 26) + Duration::hours(offset_h);
        let tle = entry.select_elements(start).unwrap();
        let windows = compute_dark_windows(
            "amsr2",
            tle,
            &entry.spec,
            &band,
            gf,
            &tx,
            (start, start + Duration::days(1)),
        )
        .unwrap();
        let prop = Propagator::new(tle).unwrap();
        for w in &windows {
            windows_seen += 1;
            assert!(
                w.scanline_count >= 1 + 2 * gf.open_loop_guard_scanlines,
                "window without guard lines: {w:?}"
            );
            for t in [w.start, w.end - period] {
                let state = prop.state_at(t).unwrap();
                guard_total += 1;
                if scanline_is_dark(&state, &entry.spec, &band, gf, &tx).unwrap() {
                    guard_dark += 1;
                }
            }
        }
    }
    assert!(windows_seen >= 50, "only {windows_seen} windows sampled");
    let clear = 1.0 - guard_dark as f64 / guard_total as f64;
    assert!(
        clear >= 0.95,
        "guard scan lines clear in only {:.1}% of cases",
        clear * 100.0
    );
    println!(
        "[PASS] criterion 6: {windows_seen} windows, all with >= core+2 lines; guard lines clear in {:.1}% of cases",
        clear * 100.0
    );
}

/// Criterion 7: exhaustive scan-line sweeps on randomized 24 h scenarios
/// find no dark scan line outside an emitted window.
#[test]
fn criterion_7_coverage_soundness() {
    let catalog = Catalog::builtin();
    let entry = catalog.satellite("amsr2").unwrap();
    let gf = catalog.geofence();
    let band = p_sst_band();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let period = Duration::milliseconds(1500);
    let mut swept = 0usize;
    for scenario in 0..20 {
        let tx = Transmitter {
            id: format!("scenario-{scenario}"),
            location: GeoPoint::new(rng.random_range(20.0..55.0), rng.random_range(-130.0..-60.0)),
            tx_band: seven_ghz_range(),
        };
        let start = day(2024, 11, 26) + Duration::hours(rng.random_range(-120..=96));
        let range = (start, start + Duration::days(1));
        let tle = entry.select_elements(start).unwrap();
        let windows = compute_dark_windows("amsr2", tle, &entry.spec, &band, gf, &tx, range)
            .unwrap();
        let prop = Propagator::new(tle).unwrap();
        let alt = prop.state_at(range.0).unwrap().altitude_km;
        let radius = scan::max_geofence_reach_km(&entry.spec, gf, alt).unwrap() + 25.0;
        let passes = orbit::find_passes_with(&prop, tx.location, radius, range).unwrap();
        for pass in &passes {
            let lines =
                ((pass.end - pass.start).num_milliseconds() as f64 / 1500.0).ceil() as i64;
            for k in 0..=lines {
                let t = pass.start + period * k as i32;
                if t > range.1 {
                    continue;
                }
                let state = prop.state_at(t).unwrap();
                swept += 1;
                if scanline_is_dark(&state, &entry.spec, &band, gf, &tx).unwrap() {
                    assert!(
                        windows.iter().any(|w| w.start <= t && t < w.end),
                        "dark scan line at {t} outside every window (scenario {scenario})"
                    );
                }
            }
        }
        // Outside the passes nothing can be dark: the pass radius bounds the
        // geofence reach. Spot-sweep the rest of the day on the scan period.
        let mut t = range.0;
        while t < range.1 {
            let in_pass = passes
                .iter()
                .any(|p| p.start - period <= t && t <= p.end + period);
            if !in_pass {
                let state = prop.state_at(t).unwrap();
                swept += 1;
                assert!(
                    !scanline_is_dark(&state, &entry.spec, &band, gf, &tx).unwrap(),
                    "dark scan line at {t} outside every pass (scenario {scenario})"
                );
            }
            t += period * 40;
        }
    }
    println!("[PASS] criterion 7: zero dark scan lines outside windows across 20 scenarios ({swept} lines swept)");
}

/// Criterion 8: merge_windows idempotence, permutation invariance, and 1 s
/// brute-force equivalence over 1000 random interval sets.
#[test]
fn criterion_8_union_properties() {
    use rand::seq::SliceRandom;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let base = day(2024, 11, 26);
    for _ in 0..1000 {
        let n = rng.random_range(0..10);
        let intervals: Vec<TimeInterval> = (0..n)
            .map(|_| {
                let s = rng.random_range(0..1800);
                let d = rng.random_range(1..240);
                TimeInterval {
                    start: base + Duration::seconds(s),
                    end: base + Duration::seconds(s + d),
                }
            })
            .collect();
        let merged = merge_windows(intervals.clone());
        // Idempotence.
        assert_eq!(merge_windows(merged.clone()), merged);
        // Permutation invariance.
        let mut shuffled = intervals.clone();
        shuffled.shuffle(&mut rng);
        assert_eq!(merge_windows(shuffled), merged);
        // Disjoint, ordered, and length-bounded.
        for w in merged.windows(2) {
            assert!(w[0].end < w[1].start);
        }
        let total: i64 = merged.iter().map(|w| (w.end - w.start).num_seconds()).sum();
        let sum: i64 = intervals
            .iter()
            .map(|w| (w.end - w.start).num_seconds())
            .sum();
        assert!(total <= sum);
        // 1 s grid equivalence.
        for s in 0..2100 {
            let t = base + Duration::seconds(s);
            let in_inputs = intervals.iter().any(|w| w.start <= t && t < w.end);
            let in_merged = merged.iter().any(|w| w.start <= t && t < w.end);
            assert_eq!(in_inputs, in_merged, "at +{s}s");
        }
        // Availability is exact for the empty set and permutation-stable.
        let period = TimeInterval {
            start: base,
            end: base + Duration::seconds(2400),
        };
        if intervals.is_empty() {
            assert_eq!(availability(&intervals, period).unwrap().availability, 1.0);
        }
    }
    println!("[PASS] criterion 8: union properties hold on 1000 random interval sets");
}

/// Criterion 9: mitigation behavior on the canonical fixtures.
#[test]
fn criterion_9_mitigation_fixtures() {
    // Default profile anchor checks.
    let profile = TrafficProfile::default();
    let at4 = diurnal_load(4.0, &profile);
    assert!((0.10..=0.15).contains(&at4), "load(4.0) = {at4}");
    assert_eq!(diurnal_load(21.0, &profile), 1.0);

    let sites = vec![
        CellSite {
            site_id: "nj-001".into(),
            ngci: "310-410-00010001-001".into(),
            sessions: SessionMix {
                urllc: 40,
                real_time: 100,
                best_effort: 400,
            },
            spare_capacity_sessions: 70,
            utc_offset_hours: -5.0,
        },
        CellSite {
            site_id: "nj-002".into(),
            ngci: "310-410-00010002-001".into(),
            sessions: SessionMix {
                urllc: 10,
                real_time: 60,
                best_effort: 200,
            },
            spare_capacity_sessions: 35,
            utc_offset_hours: -5.0,
        },
    ];
    let policy = MitigationPolicy::with_failure_probability(0.01);

    // 02:00-local window with 12% load: everything sleeps, impact zero.
    let w2am = rgss_core::DarkTimeWindow {
        satellite_id: "amsr2".into(),
        start: Utc.with_ymd_and_hms(2024, 11, 26, 7, 0, 0).unwrap(),
        end: Utc.with_ymd_and_hms(2024, 11, 26, 7, 0, 10).unwrap(),
        scanline_count: 7,
        direction: PassDirection::Descending,
    };
    let night = TrafficProfile {
        anchors: vec![(0.0, 0.12)],
    };
    let plan = plan_mitigation(&w2am, &sites, &night, &policy);
    assert!(plan
        .site_plans
        .iter()
        .all(|p| matches!(p.action, MitigationAction::Sleep)));
    assert_eq!(plan.impact, 0.0);

    // 13:30-local window, spare capacity covering only URLLC + real-time:
    // best-effort sheds, every URLLC session is handed over.
    let w1330 = rgss_core::DarkTimeWindow {
        satellite_id: "amsr2".into(),
        start: Utc.with_ymd_and_hms(2024, 11, 26, 18, 30, 0).unwrap(),
        end: Utc.with_ymd_and_hms(2024, 11, 26, 18, 30, 10).unwrap(),
        scanline_count: 7,
        direction: PassDirection::Ascending,
    };
    let midday = TrafficProfile {
        anchors: vec![(0.0, 0.5)],
    };
    let tight_sites: Vec<CellSite> = sites
        .iter()
        .cloned()
        .map(|mut s| {
            // active = counts * 0.5; spare covers urllc + real-time exactly.
            s.spare_capacity_sessions = (s.sessions.urllc + s.sessions.real_time) / 2;
            s
        })
        .collect();
    let plan = plan_mitigation(&w1330, &tight_sites, &midday, &policy);
    for (sp, site) in plan.site_plans.iter().zip(&tight_sites) {
        assert_eq!(sp.handed_over.urllc, sp.active_sessions.urllc, "{sp:?}");
        assert_eq!(sp.shed.urllc, 0);
        assert_eq!(sp.shed.real_time, 0);
        assert!(sp.shed.best_effort > 0);
        assert!(matches!(
            sp.action,
            MitigationAction::Shed {
                class: SessionClass::BestEffort
            }
        ));
        assert_eq!(
            sp.handed_over.total(),
            site.spare_capacity_sessions,
            "all spare capacity used"
        );
    }
    println!(
        "[PASS] criterion 9: 2 AM fixture all-sleep (impact 0); 13:30 fixture sheds best-effort only; load(4.0) = {at4:.3}, load(21.0) = 1.0"
    );
}

/// Structural cross-check used by several criteria: a window's span always
/// equals its scan-line count times the scan period.
#[test]
fn window_span_snaps_to_scan_lines() {
    let catalog = Catalog::builtin();
    let entry = catalog.satellite("amsr2").unwrap();
    let range = (day(2024, 11, 26), day(2024, 11, 27));
    let tle = entry.select_elements(range.0).unwrap();
    let windows = compute_dark_windows(
        "amsr2",
        tle,
        &entry.spec,
        &p_sst_band(),
        catalog.geofence(),
        &nj_transmitter(),
        range,
    )
    .unwrap();
    for w in windows {
        assert_eq!(
            (w.end - w.start).num_milliseconds(),
            w.scanline_count as i64 * 1500
        );
    }
    // Daily dark-time arithmetic stays consistent with the band filter.
    assert!(band_overlap(seven_ghz_range(), &p_sst_band(), 0.0));
    let report = availability(
        &[],
        TimeInterval {
            start: range.0,
            end: range.1,
        },
    )
    .unwrap();
    assert_eq!(report.availability, 1.0);
    let _ = darktime::CoastlineSet::from_polylines(vec![vec![
        GeoPoint::new(40.0, -74.0),
        GeoPoint::new(41.0, -74.0),
    ]])
    .unwrap();
    let _ = geo::great_circle_km(GeoPoint::new(0.0, 0.0), GeoPoint::new(1.0, 1.0));
}
