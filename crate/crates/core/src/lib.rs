//! Real-time geofenced spectrum sharing engine.
//!
//! Terrestrial transmitters sharing spectrum with passive satellite
//! radiometers only need to pause while an instrument's measurement footprint
//! actually passes over them. This crate computes those "dark-time" windows:
//! it propagates satellite orbits from two-line element sets, models conical
//! and cross-track scan geometry on a spherical Earth, sizes geofenced pixels
//! from the instrument field of view, filters transmitters by coastal-zone
//! membership and frequency overlap, and plans cell-site traffic mitigation
//! (sleep, handover, shed) for each window.
//!
//! Frame and figure conventions, in one place:
//!
//! * Propagation follows SGP4 semantics; positions are TEME km. Conformance
//!   is defined by the published reference test vectors.
//! * Sub-satellite points and every ground distance use a spherical Earth of
//!   radius 6371.0 km. The sphericity error is far below the geofence guard
//!   margins.
//! * A geofenced pixel is `pixel_scale` (default 2) times the FWHM footprint;
//!   about 98% of a Gaussian beam's power lands inside twice the FWHM. The
//!   1-D Gaussian value for one FWHM is 76%, often quoted as 68% (the 1-sigma
//!   figure); [`scan::beam_containment`] reports the 1-D value.
//!
//! The [`query`] module is the single entry point the HTTP service and the
//! CLI share, which keeps their payloads content-identical.

pub mod catalog;
pub mod darktime;
pub mod geo;
pub mod mitigation;
pub mod orbit;
pub mod query;
pub mod scan;
pub mod timefmt;

pub use catalog::{Catalog, CatalogError, StaticTleSource, TleSource};
pub use darktime::{
    availability, band_overlap, coastal_filter, compute_dark_windows, merge_windows,
    scanline_is_dark, AvailabilityReport, CoastlineSet, DarkTimeError, DarkTimeWindow,
    FrequencyBand, TimeInterval, Transmitter,
};
pub use geo::{GeoPoint, EARTH_RADIUS_KM};
pub use mitigation::{
    diurnal_load, impact_score, plan_mitigation, CellSite, HandoverMechanism, MitigationAction,
    MitigationPlan, MitigationPolicy, NetworkConfig, SessionClass, SessionMix, SitePlan,
    TrafficProfile,
};
pub use orbit::{
    find_passes, parse_tle, propagate, OrbitError, PassDirection, PassInterval, Propagator,
    SatelliteState, TleError, TwoLineElements,
};
pub use query::{
    geofence_document, run_darktime_query, satellites_summary, DarkTimeQuery, DarkTimeResponse,
    QueryError,
};
pub use scan::{
    beam_containment, boresight_ground_point, coastal_zone_width_km, geofence_halfwidth,
    scanline_arc, swath_half_width, two_pixel_extent_range_km, GeofenceSpec, MeasurementBand,
    RadiometerSpec, ScanType, SwathArc,
};
