//! Radiometer scan geometry: boresight ground intersections, scan-line swath
//! arcs, and geofenced-pixel arithmetic.
//!
//! A geofenced pixel doubles the instrument's field of view (the FWHM of the
//! spatial power pattern) so that ~98% of the beam power falls inside it. The
//! protection layout derived from it:
//!
//! * the swath band that pauses a transmitter is one geofenced pixel wide
//!   across the scan trace (half-width [`swath_half_width`]);
//! * the one-pixel geographical guard band widens the protected *area* around
//!   a transmitter ([`geofence_halfwidth`]) and the in-plane arc ends, and the
//!   coastal zone spans two non-overlapping geofenced pixels
//!   ([`coastal_zone_width_km`]);
//! * open-loop instruments additionally get whole guard scan lines, applied
//!   when dark-time windows are assembled.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{self, GeoPoint, EARTH_RADIUS_KM};
use crate::orbit::SatelliteState;

/// Scanning mechanism of a radiometer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ScanType {
    /// Boresight sweeps a fixed off-nadir cone, tracing a constant-radius
    /// ground arc ahead of the spacecraft.
    Conical { off_nadir_deg: f64 },
    /// Boresight sweeps through nadir out to `max_scan_deg` on either side.
    CrossTrack { max_scan_deg: f64 },
}

/// One measurement band, GHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementBand {
    pub center_ghz: f64,
    pub width_ghz: f64,
}

impl MeasurementBand {
    pub fn min_ghz(&self) -> f64 {
        self.center_ghz - self.width_ghz / 2.0
    }

    pub fn max_ghz(&self) -> f64 {
        self.center_ghz + self.width_ghz / 2.0
    }
}

/// Footprint FWHM dimensions on the ground, km. `along_km` runs along the
/// scan trace, `cross_km` across it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldOfView {
    pub along_km: f64,
    pub cross_km: f64,
}

/// A band together with its footprint geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandGeometry {
    pub band: MeasurementBand,
    pub fov: FieldOfView,
}

/// Static description of one scanning radiometer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiometerSpec {
    pub name: String,
    pub scan_type: ScanType,
    /// Seconds per scan line.
    pub scan_period_s: f64,
    /// Full active scan angle, degrees. For conical scanners this is the
    /// swept sector width (centered on the along-track direction); for
    /// cross-track scanners the full swept angle through nadir.
    pub active_scan_deg: f64,
    /// True when the scan phase is not synchronized to orbital position, so
    /// the azimuth at a given instant cannot be predicted.
    pub open_loop: bool,
    pub bands: Vec<BandGeometry>,
}

#[derive(Debug, Error, PartialEq)]
pub enum SpecError {
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

impl RadiometerSpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        let fail = |field: &str, message: String| {
            Err(SpecError::Invalid {
                field: field.to_string(),
                message,
            })
        };
        if !(self.scan_period_s > 0.0) {
            return fail("scan_period_s", format!("must be > 0, got {}", self.scan_period_s));
        }
        let limit = match self.scan_type {
            ScanType::Conical { .. } => 360.0,
            ScanType::CrossTrack { .. } => 180.0,
        };
        if !(self.active_scan_deg > 0.0 && self.active_scan_deg <= limit) {
            return fail(
                "active_scan_deg",
                format!("must be in (0, {limit}], got {}", self.active_scan_deg),
            );
        }
        match self.scan_type {
            ScanType::Conical { off_nadir_deg } => {
                if !(off_nadir_deg > 0.0 && off_nadir_deg < 90.0) {
                    return fail("scan_type.off_nadir_deg", format!("must be in (0, 90), got {off_nadir_deg}"));
                }
            }
            ScanType::CrossTrack { max_scan_deg } => {
                if !(max_scan_deg > 0.0 && max_scan_deg < 90.0) {
                    return fail("scan_type.max_scan_deg", format!("must be in (0, 90), got {max_scan_deg}"));
                }
            }
        }
        for (i, bg) in self.bands.iter().enumerate() {
            if !(bg.band.width_ghz > 0.0) {
                return fail(&format!("bands[{i}].width_ghz"), format!("must be > 0, got {}", bg.band.width_ghz));
            }
            if !(bg.fov.along_km > 0.0 && bg.fov.cross_km > 0.0) {
                return fail(
                    &format!("bands[{i}].fov"),
                    format!("FWHM values must be > 0, got {}x{}", bg.fov.along_km, bg.fov.cross_km),
                );
            }
        }
        Ok(())
    }

    /// Geometry for a band already registered on this spec.
    pub fn band_geometry(&self, band: &MeasurementBand) -> Result<&BandGeometry, GeometryError> {
        self.bands
            .iter()
            .find(|bg| {
                (bg.band.center_ghz - band.center_ghz).abs() < 1e-9
                    && (bg.band.width_ghz - band.width_ghz).abs() < 1e-9
            })
            .ok_or(GeometryError::UnknownBand {
                center_ghz: band.center_ghz,
            })
    }
}

/// Geofence sizing parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeofenceSpec {
    /// FWHM multiplier defining the geofenced pixel (2 x FWHM keeps ~98% of
    /// the beam power inside the pixel).
    pub pixel_scale: f64,
    /// Geographical guard band around the geofenced area, in geofenced pixels.
    pub guard_pixels: u32,
    /// Whole guard scan lines before and after the dark core for open-loop
    /// instruments.
    pub open_loop_guard_scanlines: u32,
}

impl Default for GeofenceSpec {
    fn default() -> Self {
        Self {
            pixel_scale: 2.0,
            guard_pixels: 1,
            open_loop_guard_scanlines: 1,
        }
    }
}

impl GeofenceSpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        if !(self.pixel_scale >= 1.0) {
            return Err(SpecError::Invalid {
                field: "pixel_scale".into(),
                message: format!("must be >= 1, got {}", self.pixel_scale),
            });
        }
        Ok(())
    }
}

/// Ground trace of one scan line, with the geofence half-width that turns the
/// polyline into a swath band.
#[derive(Debug, Clone, PartialEq)]
pub struct SwathArc {
    pub mid_time: DateTime<Utc>,
    pub trace: Vec<GeoPoint>,
    pub half_width_km: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("boresight at off-nadir {off_nadir_deg:.2} deg misses the Earth (horizon limit {horizon_deg:.2} deg at {altitude_km:.0} km)")]
    BeyondHorizon {
        off_nadir_deg: f64,
        horizon_deg: f64,
        altitude_km: f64,
    },
    #[error("band centered at {center_ghz} GHz is not registered on this radiometer")]
    UnknownBand { center_ghz: f64 },
    #[error(transparent)]
    Spec(#[from] SpecError),
}

/// Earth-center angle (radians) between the subpoint and the boresight ground
/// intersection for a given off-nadir angle.
fn ground_arc_angle_rad(altitude_km: f64, off_nadir_deg: f64) -> Result<f64, GeometryError> {
    let theta = off_nadir_deg.to_radians();
    let ratio = (EARTH_RADIUS_KM + altitude_km) / EARTH_RADIUS_KM;
    let s = ratio * theta.sin();
    if s > 1.0 {
        return Err(GeometryError::BeyondHorizon {
            off_nadir_deg,
            horizon_deg: (1.0 / ratio).asin().to_degrees(),
            altitude_km,
        });
    }
    Ok(s.asin() - theta)
}

/// Ground distance (km) from the subpoint to the boresight intersection.
pub fn ground_range_km(altitude_km: f64, off_nadir_deg: f64) -> Result<f64, GeometryError> {
    Ok(ground_arc_angle_rad(altitude_km, off_nadir_deg)? * EARTH_RADIUS_KM)
}

/// Nearer intersection of the boresight ray with the Earth sphere.
///
/// `azimuth_deg` is measured clockwise from the along-track direction;
/// `off_nadir_deg` is the cone half-angle from nadir.
pub fn boresight_ground_point(
    state: &SatelliteState,
    azimuth_deg: f64,
    off_nadir_deg: f64,
) -> Result<GeoPoint, GeometryError> {
    let angle = ground_arc_angle_rad(state.altitude_km, off_nadir_deg)?;
    if angle == 0.0 {
        return Ok(state.subpoint);
    }
    let bearing = state.ground_track_bearing_deg() + azimuth_deg;
    Ok(geo::destination(
        state.subpoint,
        bearing,
        angle * EARTH_RADIUS_KM,
    ))
}

/// Geofenced pixel dimensions (full widths, km) for a band.
pub fn geofenced_pixel_km(
    spec: &RadiometerSpec,
    band: &MeasurementBand,
    gf: &GeofenceSpec,
) -> Result<(f64, f64), GeometryError> {
    let bg = spec.band_geometry(band)?;
    Ok((
        gf.pixel_scale * bg.fov.along_km,
        gf.pixel_scale * bg.fov.cross_km,
    ))
}

/// Protection half-width around a geofenced point: half a geofenced pixel plus
/// the geographical guard band, measured across the scan trace.
pub fn geofence_halfwidth(
    spec: &RadiometerSpec,
    band: &MeasurementBand,
    gf: &GeofenceSpec,
) -> Result<f64, GeometryError> {
    let (_, pixel_cross) = geofenced_pixel_km(spec, band, gf)?;
    Ok(pixel_cross / 2.0 + gf.guard_pixels as f64 * pixel_cross)
}

/// Lateral half-width of the swath band used by the scan-line darkness test:
/// half a geofenced pixel. The guard band protects the geofenced area and the
/// arc ends; along-track safety for open-loop instruments comes from whole
/// guard scan lines, not from widening every swath.
pub fn swath_half_width(
    spec: &RadiometerSpec,
    band: &MeasurementBand,
    gf: &GeofenceSpec,
) -> Result<f64, GeometryError> {
    let (_, pixel_cross) = geofenced_pixel_km(spec, band, gf)?;
    Ok(pixel_cross / 2.0)
}

/// Width of one geofenced pixel projected onto a ground direction at angle
/// `psi_deg` from the cross-scan axis.
pub fn pixel_extent_km(
    spec: &RadiometerSpec,
    band: &MeasurementBand,
    gf: &GeofenceSpec,
    psi_deg: f64,
) -> Result<f64, GeometryError> {
    let (pixel_along, pixel_cross) = geofenced_pixel_km(spec, band, gf)?;
    let psi = psi_deg.to_radians();
    Ok(((pixel_cross * psi.cos()).powi(2) + (pixel_along * psi.sin()).powi(2)).sqrt())
}

/// Extent of two non-overlapping geofenced pixels across the full range of
/// scan-line orientations, km: (min, max).
///
/// As the boresight sweeps the active scan, the footprint ellipse rotates with
/// it; against a boundary of arbitrary orientation the projection angle covers
/// the full quarter turn, so the extent ranges between twice the smaller and
/// twice the larger pixel axis.
pub fn two_pixel_extent_range_km(
    spec: &RadiometerSpec,
    band: &MeasurementBand,
    gf: &GeofenceSpec,
) -> Result<(f64, f64), GeometryError> {
    let mut min = f64::MAX;
    let mut max = f64::MIN;
    for i in 0..=180 {
        let w = 2.0 * pixel_extent_km(spec, band, gf, i as f64 * 0.5)?;
        min = min.min(w);
        max = max.max(w);
    }
    Ok((min, max))
}

/// Depth of the coastal operating zone: two non-overlapping geofenced pixels
/// at the maximum scan-angle projection.
pub fn coastal_zone_width_km(
    spec: &RadiometerSpec,
    band: &MeasurementBand,
    gf: &GeofenceSpec,
) -> Result<f64, GeometryError> {
    Ok(two_pixel_extent_range_km(spec, band, gf)?.1)
}

/// Upper bound on the ground distance from the subpoint to any geofenced
/// point, used as the pass-search radius.
pub fn max_geofence_reach_km(
    spec: &RadiometerSpec,
    gf: &GeofenceSpec,
    altitude_km: f64,
) -> Result<f64, GeometryError> {
    // Evaluate a little above the given altitude so orbit eccentricity and
    // perturbations cannot push the true reach past the bound.
    let alt = altitude_km + 30.0;
    let range = match spec.scan_type {
        ScanType::Conical { off_nadir_deg } => ground_range_km(alt, off_nadir_deg)?,
        ScanType::CrossTrack { max_scan_deg } => ground_range_km(alt, max_scan_deg)?,
    };
    let mut widest = 0.0f64;
    for bg in &spec.bands {
        let halfwidth = geofence_halfwidth(spec, &bg.band, gf)?;
        let guard_along = gf.guard_pixels as f64 * gf.pixel_scale * bg.fov.along_km;
        widest = widest.max(halfwidth + guard_along);
    }
    Ok(range + widest)
}

/// Arc sampling density: at most this many degrees of azimuth per step.
const MAX_AZIMUTH_STEP_DEG: f64 = 0.5;

/// Computes the ground trace of one scan line, with arc ends extended
/// along-trace by the geographical guard band.
pub fn scanline_arc(
    state: &SatelliteState,
    spec: &RadiometerSpec,
    band: &MeasurementBand,
    gf: &GeofenceSpec,
) -> Result<SwathArc, GeometryError> {
    spec.validate()?;
    let (pixel_along, _) = geofenced_pixel_km(spec, band, gf)?;
    let guard_along_km = gf.guard_pixels as f64 * pixel_along;
    let half_width_km = swath_half_width(spec, band, gf)?;
    let bearing = state.ground_track_bearing_deg();
    let trace = match spec.scan_type {
        ScanType::Conical { off_nadir_deg } => {
            let angle = ground_arc_angle_rad(state.altitude_km, off_nadir_deg)?;
            let radius_km = angle * EARTH_RADIUS_KM;
            // Convert the along-trace guard extension into azimuth.
            let km_per_deg = angle.sin() * EARTH_RADIUS_KM * std::f64::consts::PI / 180.0;
            let ext_deg = if km_per_deg > 1e-9 {
                guard_along_km / km_per_deg
            } else {
                0.0
            };
            let half = spec.active_scan_deg / 2.0 + ext_deg;
            let steps = ((2.0 * half / MAX_AZIMUTH_STEP_DEG).ceil() as usize).max(1);
            (0..=steps)
                .map(|i| {
                    let az = -half + 2.0 * half * i as f64 / steps as f64;
                    geo::destination(state.subpoint, bearing + az, radius_km)
                })
                .collect()
        }
        ScanType::CrossTrack { max_scan_deg } => {
            // Sweep through nadir; positive scan angles to the right of track.
            let half_sweep = (spec.active_scan_deg / 2.0).min(max_scan_deg);
            // Horizon check at the extreme.
            let max_range = ground_range_km(state.altitude_km, half_sweep)?;
            let ext = guard_along_km;
            let steps = ((2.0 * half_sweep / MAX_AZIMUTH_STEP_DEG).ceil() as usize).max(2);
            let mut pts: Vec<GeoPoint> = (0..=steps)
                .map(|i| {
                    let s = -half_sweep + 2.0 * half_sweep * i as f64 / steps as f64;
                    let d = ground_range_km(state.altitude_km, s.abs())
                        .expect("within horizon by construction")
                        * s.signum();
                    geo::destination(state.subpoint, bearing + 90.0, d)
                })
                .collect();
            if ext > 0.0 {
                let left = geo::destination(state.subpoint, bearing + 90.0, -(max_range + ext));
                let right = geo::destination(state.subpoint, bearing + 90.0, max_range + ext);
                pts.insert(0, left);
                pts.push(right);
            }
            pts
        }
    };
    Ok(SwathArc {
        mid_time: state.time,
        trace,
        half_width_km,
    })
}

/// Fraction of a one-dimensional Gaussian beam's power inside a total width of
/// `fwhm_multiples` x FWHM.
pub fn beam_containment(fwhm_multiples: f64) -> f64 {
    if fwhm_multiples <= 0.0 {
        return 0.0;
    }
    erf(fwhm_multiples * (2.0f64.ln()).sqrt())
}

/// Abramowitz-Stegun 7.1.26 rational approximation, |error| <= 1.5e-7.
fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.327_591_1 * x);
    let poly = t
        * (0.254_829_592
            + t * (-0.284_496_736 + t * (1.421_413_741 + t * (-1.453_152_027 + t * 1.061_405_429))));
    sign * (1.0 - poly * (-x * x).exp())
}
