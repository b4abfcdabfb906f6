//! The query face of the engine: resolve a dark-time query against a catalog
//! snapshot, producing per-satellite windows, the merged union, availability,
//! and GeoJSON geofence documents. The HTTP service and the CLI both call
//! straight into this module, which is what keeps their outputs
//! content-identical.

use chrono::{DateTime, Duration, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::catalog::{Catalog, CatalogError, SatelliteEntry};
use crate::darktime::{
    self, AvailabilityReport, DarkTimeError, DarkTimeWindow, FrequencyBand, TimeInterval,
    Transmitter,
};
use crate::geo::{self, GeoPoint};
use crate::orbit::OrbitError;
use crate::scan::{self, MeasurementBand, ScanType};

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error("unknown NGCI {ngci:?}")]
    UnknownTransmitter { ngci: String },
    #[error("unknown satellite {id:?}")]
    UnknownSatellite { id: String },
    #[error("no traversal {index} for satellite {satellite_id} in the query range ({available} available)")]
    NoTraversal {
        satellite_id: String,
        index: usize,
        available: usize,
    },
    #[error("stale elements for satellite {satellite_id}: {message}")]
    StaleElements {
        satellite_id: String,
        message: String,
    },
    #[error("engine failure: {message}")]
    Engine { message: String },
}

impl QueryError {
    /// Stable machine-readable code for the wire.
    pub fn code(&self) -> &'static str {
        match self {
            QueryError::Invalid { .. } => "invalid_query",
            QueryError::UnknownTransmitter { .. } => "unknown_ngci",
            QueryError::UnknownSatellite { .. } => "unknown_satellite",
            QueryError::NoTraversal { .. } => "no_traversal",
            QueryError::StaleElements { .. } => "stale_elements",
            QueryError::Engine { .. } => "engine_failure",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

/// A dark-time query as received on the wire. Exactly one of
/// `location`/`ngci` and exactly one of `date`/(`start`+`end`) must be set.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DarkTimeQuery {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<LatLon>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ngci: Option<String>,
    /// Whole UTC day, "YYYY-MM-DD".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<String>,
    #[serde(default, with = "crate::timefmt::opt", skip_serializing_if = "Option::is_none")]
    pub start: Option<DateTime<Utc>>,
    #[serde(default, with = "crate::timefmt::opt", skip_serializing_if = "Option::is_none")]
    pub end: Option<DateTime<Utc>>,
    pub band: Option<FrequencyBand>,
    /// Satellite ids, or the single element "all".
    #[serde(default)]
    pub satellites: Vec<String>,
    #[serde(default)]
    pub adjacency_guard_ghz: f64,
}

/// The query after validation and resolution, echoed in responses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedQuery {
    pub transmitter: Transmitter,
    #[serde(with = "crate::timefmt")]
    pub start: DateTime<Utc>,
    #[serde(with = "crate::timefmt")]
    pub end: DateTime<Utc>,
    pub band: FrequencyBand,
    pub satellites: Vec<String>,
    pub adjacency_guard_ghz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedSatellite {
    pub satellite_id: String,
    pub name: String,
    pub bands_matched: Vec<MeasurementBand>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatelliteWindows {
    pub satellite_id: String,
    pub windows: Vec<DarkTimeWindow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedSatellite {
    pub satellite_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DarkTimeResponse {
    pub query: ResolvedQuery,
    pub matched_satellites: Vec<MatchedSatellite>,
    pub per_satellite: Vec<SatelliteWindows>,
    pub merged_windows: Vec<TimeInterval>,
    pub availability: AvailabilityReport,
    pub excluded: Vec<ExcludedSatellite>,
}

/// Catalog summary row for the satellite-list endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatelliteSummary {
    pub satellite_id: String,
    pub name: String,
    pub norad_id: u32,
    pub scan_type: String,
    pub bands: Vec<MeasurementBand>,
    #[serde(with = "crate::timefmt::opt")]
    pub last_epoch: Option<DateTime<Utc>>,
}

pub fn satellites_summary(catalog: &Catalog) -> Vec<SatelliteSummary> {
    catalog
        .satellites()
        .map(|e| SatelliteSummary {
            satellite_id: e.id.clone(),
            name: e.name.clone(),
            norad_id: e.norad_id,
            scan_type: match e.spec.scan_type {
                ScanType::Conical { .. } => "conical".to_string(),
                ScanType::CrossTrack { .. } => "cross_track".to_string(),
            },
            bands: e.spec.bands.iter().map(|bg| bg.band).collect(),
            last_epoch: e.history().last().map(|t| t.epoch),
        })
        .collect()
}

fn invalid(field: &str, message: impl Into<String>) -> QueryError {
    QueryError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

impl DarkTimeQuery {
    /// Validates the query against a catalog and resolves the transmitter,
    /// time range, and satellite selection.
    pub fn resolve(&self, catalog: &Catalog) -> Result<ResolvedQuery, QueryError> {
        let band = self.band.ok_or_else(|| invalid("band", "required"))?;
        if !(band.width_ghz() > 0.0) {
            return Err(invalid("band", "frequency range width must be > 0"));
        }
        if !(self.adjacency_guard_ghz >= 0.0) {
            return Err(invalid("adjacency_guard_ghz", "must be >= 0"));
        }
        let transmitter = match (&self.location, &self.ngci) {
            (Some(_), Some(_)) => {
                return Err(invalid(
                    "location/ngci",
                    "exactly one of location and ngci must be present, not both",
                ))
            }
            (None, None) => {
                return Err(invalid(
                    "location/ngci",
                    "exactly one of location and ngci must be present",
                ))
            }
            (Some(loc), None) => {
                if loc.lat.abs() > 90.0 {
                    return Err(invalid("location.lat", "latitude out of range"));
                }
                Transmitter {
                    id: format!("location:{:.4},{:.4}", loc.lat, geo::normalize_lon(loc.lon)),
                    location: GeoPoint::new(loc.lat, loc.lon),
                    tx_band: band,
                }
            }
            (None, Some(ngci)) => catalog
                .lookup_transmitter(ngci)
                .map_err(|_| QueryError::UnknownTransmitter { ngci: ngci.clone() })?
                .clone(),
        };
        let (start, end) = match (&self.date, self.start, self.end) {
            (Some(date), None, None) => {
                let d = NaiveDate::parse_from_str(date, "%Y-%m-%d")
                    .map_err(|e| invalid("date", e.to_string()))?;
                let start = d.and_hms_opt(0, 0, 0).unwrap().and_utc();
                (start, start + Duration::days(1))
            }
            (None, Some(s), Some(e)) => (s, e),
            _ => {
                return Err(invalid(
                    "date/start/end",
                    "provide either date or both start and end",
                ))
            }
        };
        if start >= end {
            return Err(invalid("start/end", "range must be non-empty"));
        }
        let all = self.satellites.is_empty() || self.satellites.iter().any(|s| s == "all");
        let satellites = if all {
            catalog.satellites().map(|e| e.id.clone()).collect()
        } else {
            let mut ids: Vec<String> = Vec::new();
            for id in &self.satellites {
                catalog
                    .satellite(id)
                    .map_err(|_| QueryError::UnknownSatellite { id: id.clone() })?;
                if !ids.contains(id) {
                    ids.push(id.clone());
                }
            }
            ids.sort();
            ids
        };
        Ok(ResolvedQuery {
            transmitter,
            start,
            end,
            band,
            satellites,
            adjacency_guard_ghz: self.adjacency_guard_ghz,
        })
    }
}

fn map_darktime_error(satellite_id: &str, e: DarkTimeError) -> QueryError {
    match e {
        DarkTimeError::Orbit(OrbitError::StaleElements { .. }) => QueryError::StaleElements {
            satellite_id: satellite_id.to_string(),
            message: e.to_string(),
        },
        other => QueryError::Engine {
            message: format!("{satellite_id}: {other}"),
        },
    }
}

/// Bands of a satellite that overlap the query frequency range.
fn matching_bands(entry: &SatelliteEntry, q: &ResolvedQuery) -> Vec<MeasurementBand> {
    entry
        .spec
        .bands
        .iter()
        .map(|bg| bg.band)
        .filter(|b| darktime::band_overlap(q.band, b, q.adjacency_guard_ghz))
        .collect()
}

/// Dark-time windows for one satellite over the resolved query, unioned
/// across every matching band (same scan grid, so scan-line counts stay
/// consistent after the union).
fn satellite_windows(
    entry: &SatelliteEntry,
    q: &ResolvedQuery,
    catalog: &Catalog,
    bands: &[MeasurementBand],
) -> Result<Vec<DarkTimeWindow>, QueryError> {
    let tle = match entry.select_elements(q.start) {
        Ok(t) => t,
        Err(CatalogError::ExcludedByOverride { .. }) => unreachable!("caller filters exclusions"),
        Err(e) => {
            return Err(QueryError::Engine {
                message: e.to_string(),
            })
        }
    };
    let mut windows: Vec<DarkTimeWindow> = Vec::new();
    for band in bands {
        let mut tx = q.transmitter.clone();
        // The query range is the spectrum under evaluation; the overlap
        // precondition inside the computation must see it.
        tx.tx_band = q.band;
        let ws = darktime::compute_dark_windows(
            &entry.id,
            tle,
            &entry.spec,
            band,
            catalog.geofence(),
            &tx,
            (q.start, q.end),
        )
        .map_err(|e| map_darktime_error(&entry.id, e))?;
        windows.extend(ws);
    }
    windows.sort_by_key(|w| w.start);
    let period = Duration::nanoseconds((entry.spec.scan_period_s * 1e9).round() as i64);
    Ok(coalesce(windows, period))
}

fn coalesce(windows: Vec<DarkTimeWindow>, period: Duration) -> Vec<DarkTimeWindow> {
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

/// Runs a dark-time query against a catalog snapshot.
pub fn run_darktime_query(
    catalog: &Catalog,
    query: &DarkTimeQuery,
) -> Result<DarkTimeResponse, QueryError> {
    let q = query.resolve(catalog)?;
    let mut matched = Vec::new();
    let mut per_satellite = Vec::new();
    let mut excluded = Vec::new();
    for id in &q.satellites {
        let entry = catalog.satellite(id).expect("resolved above");
        let bands = matching_bands(entry, &q);
        if bands.is_empty() {
            continue;
        }
        match entry.select_elements(q.start) {
            Err(CatalogError::ExcludedByOverride { reason, .. }) => {
                excluded.push(ExcludedSatellite {
                    satellite_id: id.clone(),
                    reason,
                });
                continue;
            }
            Err(e) => {
                return Err(QueryError::Engine {
                    message: e.to_string(),
                })
            }
            Ok(_) => {}
        }
        let windows = satellite_windows(entry, &q, catalog, &bands)?;
        matched.push(MatchedSatellite {
            satellite_id: id.clone(),
            name: entry.name.clone(),
            bands_matched: bands,
        });
        per_satellite.push(SatelliteWindows {
            satellite_id: id.clone(),
            windows,
        });
    }
    let merged = darktime::merge_windows(
        per_satellite
            .iter()
            .flat_map(|s| s.windows.iter().map(TimeInterval::from)),
    );
    let availability = darktime::availability(
        &merged,
        TimeInterval {
            start: q.start,
            end: q.end,
        },
    )
    .map_err(|e| QueryError::Engine {
        message: e.to_string(),
    })?;
    Ok(DarkTimeResponse {
        query: q,
        matched_satellites: matched,
        per_satellite,
        merged_windows: merged,
        availability,
        excluded,
    })
}

fn linestring_feature(
    trace: &[GeoPoint],
    role: &str,
    mid_time: DateTime<Utc>,
    half_width_km: f64,
) -> Value {
    let coords: Vec<Value> = trace
        .iter()
        .map(|p| json!([round6(p.lon_deg), round6(p.lat_deg)]))
        .collect();
    json!({
        "type": "Feature",
        "geometry": { "type": "LineString", "coordinates": coords },
        "properties": {
            "role": role,
            "scan_mid_time": crate::timefmt::format(mid_time),
            "half_width_km": half_width_km,
        }
    })
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Renders one traversal of one satellite as a GeoJSON FeatureCollection:
/// the scan-line swath nearest the transmitter (`center`), the first and last
/// guarded scan lines (`guard`), and the geofenced-area polygon around the
/// transmitter (`geofence-area`).
pub fn geofence_document(
    catalog: &Catalog,
    query: &DarkTimeQuery,
    satellite_id: &str,
    traversal: usize,
) -> Result<Value, QueryError> {
    let q = query.resolve(catalog)?;
    let entry = catalog
        .satellite(satellite_id)
        .map_err(|_| QueryError::UnknownSatellite {
            id: satellite_id.to_string(),
        })?;
    let bands = matching_bands(entry, &q);
    if bands.is_empty() {
        return Err(invalid(
            "satellite",
            format!("{satellite_id} has no band overlapping the query frequency range"),
        ));
    }
    match entry.select_elements(q.start) {
        Err(CatalogError::ExcludedByOverride { reason, .. }) => {
            return Err(QueryError::Engine {
                message: format!("{satellite_id} is excluded by override: {reason}"),
            })
        }
        Err(e) => {
            return Err(QueryError::Engine {
                message: e.to_string(),
            })
        }
        Ok(_) => {}
    }
    let windows = satellite_windows(entry, &q, catalog, &bands)?;
    let window = windows.get(traversal).ok_or(QueryError::NoTraversal {
        satellite_id: satellite_id.to_string(),
        index: traversal,
        available: windows.len(),
    })?;
    // Render against the matching band with the widest footprint (the most
    // protective one drives the drawn geofence).
    let band = *bands
        .iter()
        .max_by(|a, b| {
            let fa = entry.spec.band_geometry(a).map(|bg| bg.fov.cross_km).unwrap_or(0.0);
            let fb = entry.spec.band_geometry(b).map(|bg| bg.fov.cross_km).unwrap_or(0.0);
            fa.partial_cmp(&fb).unwrap()
        })
        .expect("non-empty");
    let tle = entry.select_elements(q.start).expect("checked above");
    let prop = crate::orbit::Propagator::new(tle).map_err(|e| QueryError::Engine {
        message: e.to_string(),
    })?;
    let period = Duration::nanoseconds((entry.spec.scan_period_s * 1e9).round() as i64);
    let engine_err = |e: &dyn std::fmt::Display| QueryError::Engine {
        message: e.to_string(),
    };
    let mut lines = Vec::new();
    for k in 0..window.scanline_count {
        let t = window.start + period * k as i32 + period / 2;
        let state = prop.state_at(t).map_err(|e| engine_err(&e))?;
        let dist = darktime::distance_to_scanline_km(
            &state,
            &entry.spec,
            &band,
            catalog.geofence(),
            q.transmitter.location,
        )
        .map_err(|e| engine_err(&e))?;
        let arc = scan::scanline_arc(&state, &entry.spec, &band, catalog.geofence())
            .map_err(|e| engine_err(&e))?;
        lines.push((dist, arc));
    }
    let center_idx = lines
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.0.partial_cmp(&b.0).unwrap())
        .map(|(i, _)| i)
        .expect("window has scan lines");
    let mut features = Vec::new();
    features.push(linestring_feature(
        &lines[center_idx].1.trace,
        "center",
        lines[center_idx].1.mid_time,
        lines[center_idx].1.half_width_km,
    ));
    for idx in [0, lines.len() - 1] {
        features.push(linestring_feature(
            &lines[idx].1.trace,
            "guard",
            lines[idx].1.mid_time,
            lines[idx].1.half_width_km,
        ));
    }
    // Geofenced-area polygon. A square centered on the transmitter, aligned
    // with the ground track, spanning two non-overlapping geofenced pixels.
    let zone = scan::coastal_zone_width_km(&entry.spec, &band, catalog.geofence())
        .map_err(|e| engine_err(&e))?;
    let center_time = window.start + period * (window.scanline_count / 2) as i32;
    let bearing = prop
        .state_at(center_time)
        .map_err(|e| engine_err(&e))?
        .ground_track_bearing_deg();
    let half_diag = zone / 2.0 * std::f64::consts::SQRT_2;
    let corners: Vec<GeoPoint> = [45.0, 315.0, 225.0, 135.0]
        .iter()
        .map(|c| geo::destination(q.transmitter.location, bearing + c, half_diag))
        .collect();
    let mut ring: Vec<Value> = corners
        .iter()
        .map(|p| json!([round6(p.lon_deg), round6(p.lat_deg)]))
        .collect();
    ring.push(ring[0].clone());
    features.push(json!({
        "type": "Feature",
        "geometry": { "type": "Polygon", "coordinates": [ring] },
        "properties": {
            "role": "geofence-area",
            "zone_width_km": zone,
            "transmitter_id": q.transmitter.id,
        }
    }));
    Ok(json!({
        "type": "FeatureCollection",
        "features": features,
    }))
}
