//! Spherical-earth geometry primitives.
//!
//! All downstream geometry (footprints, swaths, geofence distances) runs on a
//! sphere of radius [`EARTH_RADIUS_KM`]. The sphericity error is far below the
//! geofence guard margins, which is the reason this engine can afford it; see
//! the crate-level docs for the frame conventions.

use serde::{Deserialize, Serialize};

/// Mean Earth radius in km. Every ground distance in this crate uses it.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// A geodetic point on the unit sphere, degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat_deg: f64,
    pub lon_deg: f64,
}

impl GeoPoint {
    /// Builds a point, normalizing longitude to (-180, 180].
    pub fn new(lat_deg: f64, lon_deg: f64) -> Self {
        Self {
            lat_deg,
            lon_deg: normalize_lon(lon_deg),
        }
    }

    pub(crate) fn to_unit(self) -> [f64; 3] {
        let lat = self.lat_deg.to_radians();
        let lon = self.lon_deg.to_radians();
        [lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin()]
    }

    #[cfg(test)]
    pub(crate) fn from_unit(v: [f64; 3]) -> Self {
        let r = norm(v);
        Self::new(
            (v[2] / r).asin().to_degrees(),
            v[1].atan2(v[0]).to_degrees(),
        )
    }
}

/// Normalizes a longitude to (-180, 180].
pub fn normalize_lon(lon_deg: f64) -> f64 {
    let l = (-lon_deg + 180.0).rem_euclid(360.0);
    -(l - 180.0)
}

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm(v: [f64; 3]) -> f64 {
    dot(v, v).sqrt()
}

pub(crate) fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = norm(v);
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Central angle between two points, radians. Numerically stable near 0 and pi.
pub fn central_angle_rad(a: GeoPoint, b: GeoPoint) -> f64 {
    let (ua, ub) = (a.to_unit(), b.to_unit());
    let c = cross(ua, ub);
    norm(c).atan2(dot(ua, ub))
}

/// Great-circle distance in km.
pub fn great_circle_km(a: GeoPoint, b: GeoPoint) -> f64 {
    central_angle_rad(a, b) * EARTH_RADIUS_KM
}

/// Initial bearing from `from` toward `to`, degrees clockwise from north in [0, 360).
pub fn initial_bearing_deg(from: GeoPoint, to: GeoPoint) -> f64 {
    let p1 = from.lat_deg.to_radians();
    let p2 = to.lat_deg.to_radians();
    let dl = (to.lon_deg - from.lon_deg).to_radians();
    let y = dl.sin() * p2.cos();
    let x = p1.cos() * p2.sin() - p1.sin() * p2.cos() * dl.cos();
    y.atan2(x).to_degrees().rem_euclid(360.0)
}

/// Point reached by travelling `distance_km` from `from` along `bearing_deg`.
pub fn destination(from: GeoPoint, bearing_deg: f64, distance_km: f64) -> GeoPoint {
    let d = distance_km / EARTH_RADIUS_KM;
    let b = bearing_deg.to_radians();
    let p1 = from.lat_deg.to_radians();
    let l1 = from.lon_deg.to_radians();
    let p2 = (p1.sin() * d.cos() + p1.cos() * d.sin() * b.cos()).asin();
    let l2 = l1 + (b.sin() * d.sin() * p1.cos()).atan2(d.cos() - p1.sin() * p2.sin());
    GeoPoint::new(p2.to_degrees(), l2.to_degrees())
}

/// Great-circle distance from `p` to the segment of great circle between `a` and `b`, km.
///
/// The nearest point is the perpendicular foot when it lies between the
/// endpoints, otherwise the nearer endpoint.
pub fn distance_to_segment_km(p: GeoPoint, a: GeoPoint, b: GeoPoint) -> f64 {
    let (up, ua, ub) = (p.to_unit(), a.to_unit(), b.to_unit());
    let axb = cross(ua, ub);
    let n_axb = norm(axb);
    if n_axb < 1e-12 {
        // Degenerate segment (or antipodal endpoints): endpoint distance.
        return great_circle_km(p, a).min(great_circle_km(p, b));
    }
    let n = normalize(axb);
    // Foot of the perpendicular from p onto the great circle of (a, b).
    let dpn = dot(up, n);
    let f = [up[0] - dpn * n[0], up[1] - dpn * n[1], up[2] - dpn * n[2]];
    let nf = norm(f);
    if nf > 1e-12 {
        let f = normalize(f);
        // Foot lies between a and b when it is on the same side of both.
        let within = dot(cross(ua, f), n) >= -1e-12 && dot(cross(f, ub), n) >= -1e-12;
        if within {
            return dpn.abs().asin() * EARTH_RADIUS_KM;
        }
    }
    great_circle_km(p, a).min(great_circle_km(p, b))
}

/// Great-circle distance from `p` to a small-circle arc, km.
///
/// The arc is the set of points at ground distance `radius_km` from `center`,
/// restricted to bearings (from `center`) in `[bearing_start_deg, bearing_end_deg]`
/// sweeping clockwise. When the bearing from `center` toward `p` falls inside the
/// sweep, the nearest point lies on the radial through `p`; otherwise it is one
/// of the arc endpoints.
pub fn distance_to_small_circle_arc_km(
    p: GeoPoint,
    center: GeoPoint,
    radius_km: f64,
    bearing_start_deg: f64,
    bearing_end_deg: f64,
) -> f64 {
    let sweep = (bearing_end_deg - bearing_start_deg).rem_euclid(360.0);
    let b_p = initial_bearing_deg(center, p);
    let rel = (b_p - bearing_start_deg).rem_euclid(360.0);
    if rel <= sweep || sweep == 0.0 && rel == 0.0 {
        let g = great_circle_km(p, center);
        return (g - radius_km).abs();
    }
    let e0 = destination(center, bearing_start_deg, radius_km);
    let e1 = destination(center, bearing_end_deg, radius_km);
    great_circle_km(p, e0).min(great_circle_km(p, e1))
}
