//! Two-line element ingestion and satellite propagation.
//!
//! Propagation follows SGP4 semantics (AFSPC-compatible mode, WGS72 constants,
//! the convention the element sets are fitted against); conformance is pinned
//! by the published reference test vectors rather than by any particular
//! implementation. Positions and velocities are reported in the TEME frame of
//! the element epoch. Sub-satellite points are derived by rotating through
//! GMST and projecting onto a spherical Earth of radius 6371.0 km — every
//! downstream ground distance in this crate uses that sphere. The sphericity
//! error is small compared to the geofence guard margins.

use chrono::{DateTime, Duration, TimeZone, Utc};
use thiserror::Error;

use crate::geo::{self, GeoPoint, EARTH_RADIUS_KM};

/// Default element-set staleness limit. LEO prediction error grows
/// unacceptably beyond roughly two weeks.
pub const DEFAULT_MAX_ELEMENT_AGE: Duration = Duration::days(14);

/// A parsed NORAD two-line element set.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoLineElements {
    pub norad_id: u32,
    pub name: Option<String>,
    pub line1: String,
    pub line2: String,
    pub epoch: DateTime<Utc>,
}

/// Satellite state at one instant. Position and velocity are TEME km and
/// km/s; the subpoint and altitude are spherical-Earth quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct SatelliteState {
    pub time: DateTime<Utc>,
    pub position_km: [f64; 3],
    pub velocity_km_s: [f64; 3],
    pub subpoint: GeoPoint,
    pub altitude_km: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PassDirection {
    Ascending,
    Descending,
}

/// One interval during which the sub-satellite point stays within a given
/// radius of a ground point.
#[derive(Debug, Clone, PartialEq)]
pub struct PassInterval {
    pub norad_id: u32,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub direction: PassDirection,
}

#[derive(Debug, Error, PartialEq)]
pub enum TleError {
    #[error("line {line_no}: expected 69 characters, found {len}")]
    WrongLineLength { line_no: usize, len: usize },
    #[error("line {line_no}: checksum mismatch (expected {expected}, computed {computed})")]
    ChecksumMismatch {
        line_no: usize,
        expected: u32,
        computed: u32,
    },
    #[error("catalog number mismatch between lines ({line1} vs {line2})")]
    CatalogMismatch { line1: u32, line2: u32 },
    #[error("line {line_no}: {what}")]
    BadField { line_no: usize, what: String },
    #[error("expected two element lines, found {found}")]
    MissingLines { found: usize },
}

#[derive(Debug, Error)]
pub enum OrbitError {
    #[error("elements for {norad_id} are stale at {time}: epoch {epoch} is {age_days:.1} days away (limit {limit_days:.1})")]
    StaleElements {
        norad_id: u32,
        time: DateTime<Utc>,
        epoch: DateTime<Utc>,
        age_days: f64,
        limit_days: f64,
    },
    #[error("satellite {norad_id} has decayed (altitude {altitude_km:.1} km at {time})")]
    Decayed {
        norad_id: u32,
        time: DateTime<Utc>,
        altitude_km: f64,
    },
    #[error("elements for {norad_id} rejected by propagator: {message}")]
    BadElements { norad_id: u32, message: String },
    #[error("propagation failed for {norad_id} at {time}: {message}")]
    Propagation {
        norad_id: u32,
        time: DateTime<Utc>,
        message: String,
    },
    #[error("empty time range: start {start} is not before end {end}")]
    EmptyRange {
        start: DateTime<Utc>,
        end: DateTime<Utc>,
    },
}

fn line_checksum(line: &str) -> u32 {
    line.chars()
        .take(68)
        .map(|c| match c {
            '0'..='9' => c as u32 - '0' as u32,
            '-' => 1,
            _ => 0,
        })
        .sum::<u32>()
        % 10
}

fn validate_line(line: &str, line_no: usize) -> Result<(), TleError> {
    let len = line.chars().count();
    if len != 69 {
        return Err(TleError::WrongLineLength { line_no, len });
    }
    let expected = line
        .chars()
        .nth(68)
        .and_then(|c| c.to_digit(10))
        .ok_or_else(|| TleError::BadField {
            line_no,
            what: "checksum column is not a digit".into(),
        })?;
    let computed = line_checksum(line);
    if computed != expected {
        return Err(TleError::ChecksumMismatch {
            line_no,
            expected,
            computed,
        });
    }
    Ok(())
}

fn catalog_number(line: &str, line_no: usize) -> Result<u32, TleError> {
    line[2..7]
        .trim()
        .parse::<u32>()
        .map_err(|_| TleError::BadField {
            line_no,
            what: format!("bad catalog number field {:?}", &line[2..7]),
        })
}

fn decode_epoch(line1: &str) -> Result<DateTime<Utc>, TleError> {
    let yy: i32 = line1[18..20].trim().parse().map_err(|_| TleError::BadField {
        line_no: 1,
        what: format!("bad epoch year {:?}", &line1[18..20]),
    })?;
    let year = if yy < 57 { 2000 + yy } else { 1900 + yy };
    let day: f64 = line1[20..32].trim().parse().map_err(|_| TleError::BadField {
        line_no: 1,
        what: format!("bad epoch day {:?}", &line1[20..32]),
    })?;
    if !(1.0..367.0).contains(&day) {
        return Err(TleError::BadField {
            line_no: 1,
            what: format!("epoch day {day} out of range"),
        });
    }
    let jan1 = Utc.with_ymd_and_hms(year, 1, 1, 0, 0, 0).unwrap();
    let nanos = ((day - 1.0) * 86_400.0 * 1e9).round() as i64;
    Ok(jan1 + Duration::nanoseconds(nanos))
}

/// Parses one element set: an optional name line followed by the two data lines.
///
/// Validates line lengths, the modulo-10 checksums and the catalog-number
/// agreement between the lines; failures carry the offending line number.
pub fn parse_tle(text: &str) -> Result<TwoLineElements, TleError> {
    let lines: Vec<&str> = text
        .lines()
        .map(str::trim_end)
        .filter(|l| !l.trim().is_empty())
        .collect();
    let (name, l1, l2) = match lines.len() {
        2 => (None, lines[0], lines[1]),
        n if n >= 3 => {
            let first = lines[lines.len() - 3];
            let name = if first.starts_with("1 ") {
                None
            } else {
                Some(first.trim().to_string())
            };
            (name, lines[lines.len() - 2], lines[lines.len() - 1])
        }
        found => return Err(TleError::MissingLines { found }),
    };
    // A three-line group where the "name" is itself a data line means the
    // caller handed us something other than one element set.
    if l1.get(0..2) != Some("1 ") {
        return Err(TleError::BadField {
            line_no: 1,
            what: format!("line does not start with '1 ': {:?}", l1.get(0..8).unwrap_or(l1)),
        });
    }
    if l2.get(0..2) != Some("2 ") {
        return Err(TleError::BadField {
            line_no: 2,
            what: format!("line does not start with '2 ': {:?}", l2.get(0..8).unwrap_or(l2)),
        });
    }
    validate_line(l1, 1)?;
    validate_line(l2, 2)?;
    let id1 = catalog_number(l1, 1)?;
    let id2 = catalog_number(l2, 2)?;
    if id1 != id2 {
        return Err(TleError::CatalogMismatch {
            line1: id1,
            line2: id2,
        });
    }
    let epoch = decode_epoch(l1)?;
    Ok(TwoLineElements {
        norad_id: id1,
        name,
        line1: l1.to_string(),
        line2: l2.to_string(),
        epoch,
    })
}

/// Greenwich mean sidereal time, radians. IAU 1982-era expression; UT1 is
/// approximated by UTC, which is well inside the geofence margins.
pub fn gmst_rad(t: DateTime<Utc>) -> f64 {
    let j2000 = Utc.with_ymd_and_hms(2000, 1, 1, 12, 0, 0).unwrap();
    let d = t.signed_duration_since(j2000).num_milliseconds() as f64 / 86_400_000.0;
    let hours = 18.697_374_558 + 24.065_709_824_419_08 * d;
    hours.rem_euclid(24.0) * 15.0_f64.to_radians()
}

/// Earth rotation rate, rad/s.
const OMEGA_EARTH: f64 = 7.292_115_9e-5;

/// A satellite propagator built once from an element set.
pub struct Propagator {
    norad_id: u32,
    epoch: DateTime<Utc>,
    constants: sgp4::Constants,
    max_age: Duration,
}

impl Propagator {
    pub fn new(tle: &TwoLineElements) -> Result<Self, OrbitError> {
        Self::with_max_age(tle, DEFAULT_MAX_ELEMENT_AGE)
    }

    /// Overrides the element staleness limit for every query on this propagator.
    pub fn with_max_age(tle: &TwoLineElements, max_age: Duration) -> Result<Self, OrbitError> {
        let elements = sgp4::Elements::from_tle(
            tle.name.clone(),
            tle.line1.as_bytes(),
            tle.line2.as_bytes(),
        )
        .map_err(|e| OrbitError::BadElements {
            norad_id: tle.norad_id,
            message: e.to_string(),
        })?;
        let constants = sgp4::Constants::from_elements_afspc_compatibility_mode(&elements)
            .map_err(|e| OrbitError::BadElements {
                norad_id: tle.norad_id,
                message: e.to_string(),
            })?;
        Ok(Self {
            norad_id: tle.norad_id,
            epoch: elements.datetime.and_utc(),
            constants,
            max_age,
        })
    }

    pub fn epoch(&self) -> DateTime<Utc> {
        self.epoch
    }

    /// State at `t`, enforcing the staleness limit.
    pub fn state_at(&self, t: DateTime<Utc>) -> Result<SatelliteState, OrbitError> {
        let age = t.signed_duration_since(self.epoch);
        if age > self.max_age || age < -self.max_age {
            return Err(OrbitError::StaleElements {
                norad_id: self.norad_id,
                time: t,
                epoch: self.epoch,
                age_days: age.num_milliseconds().abs() as f64 / 86_400_000.0,
                limit_days: self.max_age.num_milliseconds() as f64 / 86_400_000.0,
            });
        }
        self.state_at_unchecked(t)
    }

    /// State at `t` with no staleness guard (per-call override).
    pub fn state_at_unchecked(&self, t: DateTime<Utc>) -> Result<SatelliteState, OrbitError> {
        let minutes = t.signed_duration_since(self.epoch).num_nanoseconds().map(
            |n| n as f64 / 60e9,
        );
        let minutes = minutes.unwrap_or_else(|| {
            t.signed_duration_since(self.epoch).num_milliseconds() as f64 / 60e3
        });
        let prediction = self
            .constants
            .propagate_afspc_compatibility_mode(sgp4::MinutesSinceEpoch(minutes))
            .map_err(|e| OrbitError::Propagation {
                norad_id: self.norad_id,
                time: t,
                message: e.to_string(),
            })?;
        let position = prediction.position;
        let r = geo::norm(position);
        let altitude_km = r - EARTH_RADIUS_KM;
        if altitude_km <= 0.0 {
            return Err(OrbitError::Decayed {
                norad_id: self.norad_id,
                time: t,
                altitude_km,
            });
        }
        let lat = (position[2] / r).asin().to_degrees();
        let lon = (position[1].atan2(position[0]) - gmst_rad(t)).to_degrees();
        Ok(SatelliteState {
            time: t,
            position_km: position,
            velocity_km_s: prediction.velocity,
            subpoint: GeoPoint::new(lat, lon),
            altitude_km,
        })
    }
}

impl SatelliteState {
    /// Bearing of the ground-track motion at the subpoint, degrees clockwise
    /// from north. Uses the Earth-fixed velocity (TEME velocity rotated
    /// through GMST minus the Earth-rotation term).
    pub fn ground_track_bearing_deg(&self) -> f64 {
        let theta = gmst_rad(self.time);
        let (c, s) = (theta.cos(), theta.sin());
        let [x, y, z] = self.position_km;
        let r_ef = [c * x + s * y, -s * x + c * y, z];
        let [vx, vy, vz] = self.velocity_km_s;
        let v_rot = [c * vx + s * vy, -s * vx + c * vy, vz];
        // v_ef = R3(gmst) v_teme - omega x r_ef
        let v_ef = [
            v_rot[0] + OMEGA_EARTH * r_ef[1],
            v_rot[1] - OMEGA_EARTH * r_ef[0],
            v_rot[2],
        ];
        let lat = self.subpoint.lat_deg.to_radians();
        let lon = self.subpoint.lon_deg.to_radians();
        let east = [-lon.sin(), lon.cos(), 0.0];
        let north = [
            -lat.sin() * lon.cos(),
            -lat.sin() * lon.sin(),
            lat.cos(),
        ];
        let e = geo::dot(v_ef, east);
        let n = geo::dot(v_ef, north);
        e.atan2(n).to_degrees().rem_euclid(360.0)
    }
}

/// Propagates an element set to one UTC instant.
pub fn propagate(tle: &TwoLineElements, t: DateTime<Utc>) -> Result<SatelliteState, OrbitError> {
    Propagator::new(tle)?.state_at(t)
}

/// Same as [`propagate`] with a caller-chosen staleness limit.
pub fn propagate_with_max_age(
    tle: &TwoLineElements,
    t: DateTime<Utc>,
    max_age: Duration,
) -> Result<SatelliteState, OrbitError> {
    Propagator::with_max_age(tle, max_age)?.state_at(t)
}

/// Edge refinement tolerance for pass boundaries.
const EDGE_TOLERANCE_MS: i64 = 10;

/// Finds the intervals in `range` during which the sub-satellite point is
/// within `radius_km` of `center`.
///
/// The track is sampled at 1 s and interval edges are refined by bisection to
/// 10 ms, so no pass longer than one second is missed. Returned intervals are
/// disjoint and time-ordered.
pub fn find_passes(
    tle: &TwoLineElements,
    center: GeoPoint,
    radius_km: f64,
    range: (DateTime<Utc>, DateTime<Utc>),
) -> Result<Vec<PassInterval>, OrbitError> {
    let prop = Propagator::new(tle)?;
    find_passes_with(&prop, center, radius_km, range)
}

pub fn find_passes_with(
    prop: &Propagator,
    center: GeoPoint,
    radius_km: f64,
    range: (DateTime<Utc>, DateTime<Utc>),
) -> Result<Vec<PassInterval>, OrbitError> {
    let (start, end) = range;
    if start >= end {
        return Err(OrbitError::EmptyRange { start, end });
    }
    let inside = |t: DateTime<Utc>| -> Result<bool, OrbitError> {
        let state = prop.state_at(t)?;
        Ok(geo::great_circle_km(state.subpoint, center) <= radius_km)
    };
    let mut passes: Vec<PassInterval> = Vec::new();
    let total_s = (end - start).num_seconds();
    let mut open: Option<DateTime<Utc>> = None;
    let mut prev_t = start;
    let mut prev_in = inside(start)?;
    if prev_in {
        open = Some(start);
    }
    for k in 1..=total_s {
        let t = if k == total_s {
            end
        } else {
            start + Duration::seconds(k)
        };
        let now_in = inside(t)?;
        if now_in != prev_in {
            let edge = refine_edge(prop, center, radius_km, prev_t, t, prev_in)?;
            if now_in {
                open = Some(edge);
            } else if let Some(s) = open.take() {
                passes.push(close_pass(prop, s, edge)?);
            }
        }
        prev_t = t;
        prev_in = now_in;
    }
    if let Some(s) = open {
        passes.push(close_pass(prop, s, end)?);
    }
    Ok(passes)
}

fn refine_edge(
    prop: &Propagator,
    center: GeoPoint,
    radius_km: f64,
    mut lo: DateTime<Utc>,
    mut hi: DateTime<Utc>,
    lo_inside: bool,
) -> Result<DateTime<Utc>, OrbitError> {
    while (hi - lo).num_milliseconds() > EDGE_TOLERANCE_MS {
        let mid = lo + Duration::milliseconds((hi - lo).num_milliseconds() / 2);
        let state = prop.state_at(mid)?;
        let mid_inside = geo::great_circle_km(state.subpoint, center) <= radius_km;
        if mid_inside == lo_inside {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

fn close_pass(
    prop: &Propagator,
    start: DateTime<Utc>,
    end: DateTime<Utc>,
) -> Result<PassInterval, OrbitError> {
    let mid = start + Duration::milliseconds((end - start).num_milliseconds() / 2);
    let before = prop.state_at(mid - Duration::milliseconds(500))?;
    let after = prop.state_at(mid + Duration::milliseconds(500))?;
    let direction = if after.subpoint.lat_deg >= before.subpoint.lat_deg {
        PassDirection::Ascending
    } else {
        PassDirection::Descending
    };
    Ok(PassInterval {
        norad_id: prop.norad_id,
        start,
        end,
        direction,
    })
}
