//! Dark-time window computation, interval union, availability reports, and
//! the coastal-zone and frequency-overlap filters.
//!
//! A transmitter must pause while a scan line's swath band covers it. Window
//! edges snap to whole scan-line boundaries anchored at the start of each
//! pass, because dark time is accounted in whole scan lines. Ties on any
//! distance threshold count as inside the geofence: the incumbent wins.

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{self, GeoPoint};
use crate::orbit::{self, OrbitError, PassDirection, Propagator, TwoLineElements};
use crate::scan::{
    self, GeofenceSpec, GeometryError, MeasurementBand, RadiometerSpec, ScanType,
};

/// A frequency interval in GHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyBand {
    pub min_ghz: f64,
    pub max_ghz: f64,
}

impl FrequencyBand {
    pub fn width_ghz(&self) -> f64 {
        self.max_ghz - self.min_ghz
    }
}

/// A terrestrial network element identified by NGCI (or a synthetic id).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transmitter {
    pub id: String,
    pub location: GeoPoint,
    pub tx_band: FrequencyBand,
}

#[derive(Debug, Error)]
pub enum DarkTimeError {
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("empty evaluation period: {start} to {end}")]
    EmptyPeriod {
        start: DateTime<Utc>,
        end: DateTime<Utc>,
    },
    #[error("coastline set is empty")]
    EmptyCoastline,
    #[error("invalid transmitter {id}: {message}")]
    InvalidTransmitter { id: String, message: String },
}

impl Transmitter {
    pub fn validate(&self) -> Result<(), DarkTimeError> {
        if self.location.lat_deg.abs() > 90.0 {
            return Err(DarkTimeError::InvalidTransmitter {
                id: self.id.clone(),
                message: format!("latitude {} out of range", self.location.lat_deg),
            });
        }
        if !(self.tx_band.width_ghz() > 0.0) {
            return Err(DarkTimeError::InvalidTransmitter {
                id: self.id.clone(),
                message: "transmit band width must be > 0".into(),
            });
        }
        Ok(())
    }
}

/// One pause interval for one satellite traversal over one transmitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DarkTimeWindow {
    pub satellite_id: String,
    #[serde(with = "crate::timefmt")]
    pub start: DateTime<Utc>,
    #[serde(with = "crate::timefmt")]
    pub end: DateTime<Utc>,
    pub scanline_count: u32,
    pub direction: PassDirection,
}

/// A plain UTC interval (merged windows lose per-satellite identity).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TimeInterval {
    #[serde(with = "crate::timefmt")]
    pub start: DateTime<Utc>,
    #[serde(with = "crate::timefmt")]
    pub end: DateTime<Utc>,
}

impl From<&DarkTimeWindow> for TimeInterval {
    fn from(w: &DarkTimeWindow) -> Self {
        TimeInterval {
            start: w.start,
            end: w.end,
        }
    }
}

/// Dark time and availability over an evaluation period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvailabilityReport {
    pub period: TimeInterval,
    pub windows: Vec<TimeInterval>,
    pub total_dark_s: f64,
    pub availability: f64,
}

/// True when the transmit band (expanded by `adjacency_guard_ghz` on both
/// sides) intersects the measurement band with positive measure. Interval
/// comparison is half-open: exact touching is not overlap.
pub fn band_overlap(
    tx_band: FrequencyBand,
    band: &MeasurementBand,
    adjacency_guard_ghz: f64,
) -> bool {
    let lo = (tx_band.min_ghz - adjacency_guard_ghz).max(band.min_ghz());
    let hi = (tx_band.max_ghz + adjacency_guard_ghz).min(band.max_ghz());
    lo < hi
}

/// True when the scan line at `state` forces `tx` to pause.
///
/// Open-loop instruments cannot predict the scan azimuth, so the full active
/// arc (with its guard-extended ends) is tested. Closed-loop instruments test
/// only the footprint at the phase-predicted azimuth.
pub fn scanline_is_dark(
    state: &orbit::SatelliteState,
    spec: &RadiometerSpec,
    band: &MeasurementBand,
    gf: &GeofenceSpec,
    tx: &Transmitter,
) -> Result<bool, DarkTimeError> {
    let half_width = scan::swath_half_width(spec, band, gf)?;
    Ok(distance_to_scanline_km(state, spec, band, gf, tx.location)? <= half_width)
}

/// Great-circle distance from a point to the scan line's guarded ground arc.
pub fn distance_to_scanline_km(
    state: &orbit::SatelliteState,
    spec: &RadiometerSpec,
    band: &MeasurementBand,
    gf: &GeofenceSpec,
    point: GeoPoint,
) -> Result<f64, DarkTimeError> {
    let (pixel_along, _) = scan::geofenced_pixel_km(spec, band, gf)?;
    let guard_along_km = gf.guard_pixels as f64 * pixel_along;
    let bearing = state.ground_track_bearing_deg();
    if !spec.open_loop {
        let az = predicted_azimuth_deg(state.time, spec);
        let ground = match spec.scan_type {
            ScanType::Conical { off_nadir_deg } => {
                scan::boresight_ground_point(state, az, off_nadir_deg)?
            }
            ScanType::CrossTrack { max_scan_deg } => {
                let on = (az.abs()).min(max_scan_deg);
                let d = scan::ground_range_km(state.altitude_km, on)? * az.signum();
                geo::destination(state.subpoint, bearing + 90.0, d)
            }
        };
        return Ok(geo::great_circle_km(ground, point));
    }
    match spec.scan_type {
        ScanType::Conical { off_nadir_deg } => {
            let radius = scan::ground_range_km(state.altitude_km, off_nadir_deg)?;
            let km_per_deg = (radius / geo::EARTH_RADIUS_KM).sin() * geo::EARTH_RADIUS_KM
                * std::f64::consts::PI
                / 180.0;
            let ext_deg = if km_per_deg > 1e-9 {
                guard_along_km / km_per_deg
            } else {
                0.0
            };
            let half = spec.active_scan_deg / 2.0 + ext_deg;
            Ok(geo::distance_to_small_circle_arc_km(
                point,
                state.subpoint,
                radius,
                bearing - half,
                bearing + half,
            ))
        }
        ScanType::CrossTrack { max_scan_deg } => {
            let half_sweep = (spec.active_scan_deg / 2.0).min(max_scan_deg);
            let reach = scan::ground_range_km(state.altitude_km, half_sweep)? + guard_along_km;
            let left = geo::destination(state.subpoint, bearing + 90.0, -reach);
            let right = geo::destination(state.subpoint, bearing + 90.0, reach);
            Ok(geo::distance_to_segment_km(point, left, right))
        }
    }
}

/// Scan azimuth predicted from the scan phase, for closed-loop instruments.
/// The phase is anchored to the UTC millisecond timeline.
fn predicted_azimuth_deg(t: DateTime<Utc>, spec: &RadiometerSpec) -> f64 {
    let period_ms = (spec.scan_period_s * 1000.0).round() as i64;
    let phase = (t.timestamp_millis().rem_euclid(period_ms)) as f64 / period_ms as f64;
    -spec.active_scan_deg / 2.0 + phase * spec.active_scan_deg
}

fn scan_period(spec: &RadiometerSpec) -> Duration {
    Duration::nanoseconds((spec.scan_period_s * 1e9).round() as i64)
}

/// Computes the dark-time windows for one transmitter and one satellite band
/// over a UTC range. Windows are labeled with `satellite_id`, sorted, and
/// disjoint. A zero-length range or a band that does not overlap the
/// transmitter's yields no windows.
pub fn compute_dark_windows(
    satellite_id: &str,
    tle: &TwoLineElements,
    spec: &RadiometerSpec,
    band: &MeasurementBand,
    gf: &GeofenceSpec,
    tx: &Transmitter,
    range: (DateTime<Utc>, DateTime<Utc>),
) -> Result<Vec<DarkTimeWindow>, DarkTimeError> {
    spec.validate().map_err(GeometryError::from)?;
    gf.validate().map_err(GeometryError::from)?;
    tx.validate()?;
    if range.0 >= range.1 || !band_overlap(tx.tx_band, band, 0.0) {
        return Ok(Vec::new());
    }
    let prop = Propagator::new(tle)?;
    let period = scan_period(spec);
    let guard_lines = if spec.open_loop {
        gf.open_loop_guard_scanlines as i64
    } else {
        0
    };
    let alt = prop.state_at(range.0)?.altitude_km;
    let radius = scan::max_geofence_reach_km(spec, gf, alt)? + 25.0;
    let passes = orbit::find_passes_with(&prop, tx.location, radius, range)?;
    let mut windows: Vec<DarkTimeWindow> = Vec::new();
    for pass in passes {
        let lines = ((pass.end - pass.start).num_nanoseconds().unwrap_or(i64::MAX) as f64
            / period.num_nanoseconds().unwrap() as f64)
            .ceil() as i64;
        let mut run_start: Option<i64> = None;
        for k in 0..=lines {
            let t = pass.start + period * k as i32;
            let dark = if t <= range.1 {
                scanline_is_dark(&prop.state_at(t)?, spec, band, gf, tx)?
            } else {
                false
            };
            match (dark, run_start) {
                (true, None) => run_start = Some(k),
                (false, Some(first)) => {
                    windows.push(window_from_core(
                        satellite_id,
                        pass.start,
                        period,
                        first,
                        k - 1,
                        guard_lines,
                        pass.direction,
                    ));
                    run_start = None;
                }
                _ => {}
            }
        }
        if let Some(first) = run_start {
            windows.push(window_from_core(
                satellite_id,
                pass.start,
                period,
                first,
                lines,
                guard_lines,
                pass.direction,
            ));
        }
    }
    windows.sort_by_key(|w| w.start);
    Ok(coalesce_windows(windows, period))
}

fn window_from_core(
    satellite_id: &str,
    pass_start: DateTime<Utc>,
    period: Duration,
    first_dark: i64,
    last_dark: i64,
    guard_lines: i64,
    direction: PassDirection,
) -> DarkTimeWindow {
    let first = first_dark - guard_lines;
    let count = (last_dark - first_dark + 1) + 2 * guard_lines;
    let start = pass_start + period * first as i32;
    DarkTimeWindow {
        satellite_id: satellite_id.to_string(),
        start,
        end: start + period * count as i32,
        scanline_count: count as u32,
        direction,
    }
}

/// Merges overlapping windows from the same satellite, recounting scan lines
/// from the merged span.
fn coalesce_windows(windows: Vec<DarkTimeWindow>, period: Duration) -> Vec<DarkTimeWindow> {
    let mut out: Vec<DarkTimeWindow> = Vec::with_capacity(windows.len());
    for w in windows {
        match out.last_mut() {
            Some(last) if w.start <= last.end => {
                if w.end > last.end {
                    last.end = w.end;
                }
                let span = (last.end - last.start).num_nanoseconds().unwrap() as f64;
                last.scanline_count =
                    (span / period.num_nanoseconds().unwrap() as f64).round() as u32;
            }
            _ => out.push(w),
        }
    }
    out
}

/// Interval union across any number of window lists: disjoint and ordered.
pub fn merge_windows<I>(windows: I) -> Vec<TimeInterval>
where
    I: IntoIterator<Item = TimeInterval>,
{
    let mut intervals: Vec<TimeInterval> = windows.into_iter().filter(|w| w.end > w.start).collect();
    intervals.sort();
    let mut out: Vec<TimeInterval> = Vec::with_capacity(intervals.len());
    for iv in intervals {
        match out.last_mut() {
            Some(last) if iv.start <= last.end => {
                if iv.end > last.end {
                    last.end = iv.end;
                }
            }
            _ => out.push(iv),
        }
    }
    out
}

/// Builds the availability report for a set of windows over a period.
/// Windows are unioned and clipped to the period before accounting.
pub fn availability(
    windows: &[TimeInterval],
    period: TimeInterval,
) -> Result<AvailabilityReport, DarkTimeError> {
    if period.start >= period.end {
        return Err(DarkTimeError::EmptyPeriod {
            start: period.start,
            end: period.end,
        });
    }
    let merged: Vec<TimeInterval> = merge_windows(windows.iter().copied())
        .into_iter()
        .filter_map(|w| {
            let start = w.start.max(period.start);
            let end = w.end.min(period.end);
            (end > start).then_some(TimeInterval { start, end })
        })
        .collect();
    let dark_ms: i64 = merged
        .iter()
        .map(|w| (w.end - w.start).num_milliseconds())
        .sum();
    let period_ms = (period.end - period.start).num_milliseconds();
    Ok(AvailabilityReport {
        period,
        windows: merged,
        total_dark_s: dark_ms as f64 / 1000.0,
        availability: 1.0 - dark_ms as f64 / period_ms as f64,
    })
}

/// Coastline geometry against which the coastal zone is evaluated. Holds the
/// polylines of every ingested LineString, MultiLineString, or Polygon ring.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoastlineSet {
    polylines: Vec<Vec<GeoPoint>>,
}

#[derive(Debug, Error)]
pub enum CoastlineError {
    #[error("GeoJSON parse failure: {0}")]
    Parse(String),
    #[error("unsupported geometry {kind}; expected LineString, MultiLineString, or Polygon")]
    Unsupported { kind: String },
    #[error("coastline contains no usable segments")]
    Empty,
}

impl CoastlineSet {
    pub fn from_polylines(polylines: Vec<Vec<GeoPoint>>) -> Result<Self, CoastlineError> {
        let set = Self {
            polylines: polylines
                .into_iter()
                .filter(|p| p.len() >= 2)
                .collect(),
        };
        if set.polylines.is_empty() {
            return Err(CoastlineError::Empty);
        }
        Ok(set)
    }

    /// Ingests RFC 7946 GeoJSON: LineString / MultiLineString / Polygon
    /// geometries, bare or wrapped in Feature / FeatureCollection.
    pub fn from_geojson_str(s: &str) -> Result<Self, CoastlineError> {
        let doc: geojson::GeoJson = s
            .parse()
            .map_err(|e: geojson::Error| CoastlineError::Parse(e.to_string()))?;
        let mut polylines = Vec::new();
        collect_geojson(&doc, &mut polylines)?;
        Self::from_polylines(polylines)
    }

    pub fn is_empty(&self) -> bool {
        self.polylines.is_empty()
    }

    pub fn polylines(&self) -> &[Vec<GeoPoint>] {
        &self.polylines
    }

    /// Great-circle distance from `p` to the nearest coastline segment, km.
    pub fn min_distance_km(&self, p: GeoPoint) -> f64 {
        let mut best = f64::MAX;
        for line in &self.polylines {
            for seg in line.windows(2) {
                best = best.min(geo::distance_to_segment_km(p, seg[0], seg[1]));
            }
        }
        best
    }
}

fn collect_geojson(
    doc: &geojson::GeoJson,
    out: &mut Vec<Vec<GeoPoint>>,
) -> Result<(), CoastlineError> {
    match doc {
        geojson::GeoJson::FeatureCollection(fc) => {
            for f in &fc.features {
                if let Some(g) = &f.geometry {
                    collect_geometry(g, out)?;
                }
            }
        }
        geojson::GeoJson::Feature(f) => {
            if let Some(g) = &f.geometry {
                collect_geometry(g, out)?;
            }
        }
        geojson::GeoJson::Geometry(g) => collect_geometry(g, out)?,
    }
    Ok(())
}

fn collect_geometry(
    g: &geojson::Geometry,
    out: &mut Vec<Vec<GeoPoint>>,
) -> Result<(), CoastlineError> {
    use geojson::GeometryValue as Value;
    let line = |coords: &Vec<geojson::Position>| -> Vec<GeoPoint> {
        coords.iter().map(|c| GeoPoint::new(c[1], c[0])).collect()
    };
    match &g.value {
        Value::LineString { coordinates } => out.push(line(coordinates)),
        Value::MultiLineString { coordinates } => out.extend(coordinates.iter().map(line)),
        Value::Polygon { coordinates } => out.extend(coordinates.iter().map(line)),
        other => {
            return Err(CoastlineError::Unsupported {
                kind: other.type_name().to_string(),
            })
        }
    }
    Ok(())
}

/// Keeps the transmitters within the coastal operating zone: great-circle
/// distance to the nearest coastline segment at most the two-pixel zone
/// width. Distance exactly at the threshold is inside.
pub fn coastal_filter(
    transmitters: &[Transmitter],
    coastline: &CoastlineSet,
    spec: &RadiometerSpec,
    band: &MeasurementBand,
    gf: &GeofenceSpec,
) -> Result<Vec<Transmitter>, DarkTimeError> {
    if coastline.is_empty() {
        return Err(DarkTimeError::EmptyCoastline);
    }
    let zone = scan::coastal_zone_width_km(spec, band, gf)?;
    Ok(transmitters
        .iter()
        .filter(|tx| coastline.min_distance_km(tx.location) <= zone)
        .cloned()
        .collect())
}
