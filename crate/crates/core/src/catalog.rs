//! Satellite/radiometer registry, element-set acquisition and persistence,
//! and the transmitter (NGCI) registry.
//!
//! The catalog is the centralized side of the deployment split: it stores
//! only satellite geometry, element-set histories, transmitter identity,
//! location and operating band, and coastline data. There are no fields for
//! traffic, power, or equipment detail, so nothing confidential about the
//! outside plant can leak through it by construction.
//!
//! Element-set histories persist as plain-text append-only files (one per
//! satellite) so they can be audited with nothing fancier than `cat`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::darktime::{CoastlineError, CoastlineSet, FrequencyBand, Transmitter};
use crate::geo::GeoPoint;
use crate::orbit::{parse_tle, TleError, TwoLineElements};
use crate::scan::{
    BandGeometry, FieldOfView, GeofenceSpec, MeasurementBand, RadiometerSpec, ScanType,
};

const DEFAULT_CONFIG: &str = include_str!("../assets/default_catalog.toml");
const DEFAULT_COASTLINE: &str = include_str!("../assets/us_coastline_coarse.geojson");

/// Builtin element-set fixtures keyed by catalog number, used to seed
/// satellites that have no persisted history yet.
const BUILTIN_TLES: [(u32, &str); 7] = [
    (38337, include_str!("../assets/tles/amsr2.tle")),
    (80001, include_str!("../assets/tles/amsr3-sim.tle")),
    (43013, include_str!("../assets/tles/noaa-20.tle")),
    (54234, include_str!("../assets/tles/noaa-21.tle")),
    (37849, include_str!("../assets/tles/snpp.tle")),
    (38771, include_str!("../assets/tles/metop-b.tle")),
    (43689, include_str!("../assets/tles/metop-c.tle")),
];

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("duplicate satellite id {id:?}")]
    DuplicateSatellite { id: String },
    #[error("unknown satellite {id:?}")]
    UnknownSatellite { id: String },
    #[error("unknown NGCI {ngci:?}")]
    UnknownTransmitter { ngci: String },
    #[error("satellite {id:?} has no element sets")]
    MissingElements { id: String },
    #[error("satellite {id:?} element text rejected: {source}")]
    BadElements {
        id: String,
        #[source]
        source: TleError,
    },
    #[error("satellite {id:?} is excluded by override: {reason}")]
    ExcludedByOverride { id: String, reason: String },
    #[error("element source total outage; all satellites left stale: {failures:?}")]
    TotalOutage { failures: Vec<(String, String)> },
    #[error(transparent)]
    Coastline(#[from] CoastlineError),
    #[error("io failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

// --- configuration schema ---------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TleConfig {
    pub name: Option<String>,
    pub line1: String,
    pub line2: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BandConfig {
    pub center_ghz: f64,
    pub width_ghz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FovConfig {
    pub along_km: f64,
    pub cross_km: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SatelliteConfig {
    pub id: String,
    pub norad_id: u32,
    pub name: String,
    /// "conical" (requires `off_nadir_deg`) or "cross_track" (requires
    /// `max_scan_deg`).
    pub scan_type: String,
    pub off_nadir_deg: Option<f64>,
    pub max_scan_deg: Option<f64>,
    pub scan_period_s: f64,
    pub active_scan_deg: f64,
    pub open_loop: bool,
    pub bands: Vec<BandConfig>,
    pub fov: Vec<FovConfig>,
    /// Optional inline element set used when no persisted history exists.
    pub tle: Option<TleConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransmitterConfig {
    pub ngci: String,
    pub lat: f64,
    pub lon: f64,
    pub band_min_ghz: f64,
    pub band_max_ghz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeofenceConfig {
    pub pixel_scale: Option<f64>,
    pub guard_pixels: Option<u32>,
    pub open_loop_guard_scanlines: Option<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExclusionConfig {
    #[serde(with = "crate::timefmt")]
    pub start: DateTime<Utc>,
    #[serde(with = "crate::timefmt")]
    pub end: DateTime<Utc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OverrideConfig {
    pub satellite: String,
    pub reason: String,
    pub author: String,
    pub expires: Option<String>,
    pub replacement: Option<TleConfig>,
    pub exclusion: Option<ExclusionConfig>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CatalogConfig {
    pub data_dir: Option<PathBuf>,
    pub coastline: Option<PathBuf>,
    pub geofence: Option<GeofenceConfig>,
    #[serde(default)]
    pub satellites: Vec<SatelliteConfig>,
    #[serde(default)]
    pub transmitters: Vec<TransmitterConfig>,
    #[serde(default)]
    pub overrides: Vec<OverrideConfig>,
}

// --- catalog ----------------------------------------------------------------

/// A manual replacement for (or exclusion of) fetched orbital data, used when
/// operators know the published elements are wrong (debris-avoidance
/// maneuvers and the like). An active override always wins over fetched data.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitOverride {
    pub satellite_id: String,
    pub reason: String,
    pub author: String,
    pub expires: Option<DateTime<Utc>>,
    pub action: OverrideAction,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OverrideAction {
    Replace(TwoLineElements),
    Exclude {
        start: DateTime<Utc>,
        end: DateTime<Utc>,
    },
}

#[derive(Debug, Clone)]
pub struct SatelliteEntry {
    pub id: String,
    pub norad_id: u32,
    pub name: String,
    pub spec: RadiometerSpec,
    history: Vec<TwoLineElements>,
    pub last_fetch: Option<DateTime<Utc>>,
    pub orbit_override: Option<OrbitOverride>,
}

impl SatelliteEntry {
    /// Epoch-ordered element-set history (ascending).
    pub fn history(&self) -> &[TwoLineElements] {
        &self.history
    }

    pub fn latest(&self) -> &TwoLineElements {
        self.history.last().expect("catalog invariant: history non-empty")
    }

    /// Element set governing propagation at `t`: an active override first,
    /// otherwise the set with the latest epoch at or before `t` (the earliest
    /// set when `t` predates the whole history; the staleness guard catches
    /// unreasonable gaps downstream).
    pub fn select_elements(&self, t: DateTime<Utc>) -> Result<&TwoLineElements, CatalogError> {
        if let Some(ov) = &self.orbit_override {
            let active = ov.expires.map_or(true, |e| t < e);
            if active {
                match &ov.action {
                    OverrideAction::Replace(tle) => return Ok(tle),
                    OverrideAction::Exclude { start, end } => {
                        if *start <= t && t < *end {
                            return Err(CatalogError::ExcludedByOverride {
                                id: self.id.clone(),
                                reason: ov.reason.clone(),
                            });
                        }
                    }
                }
            }
        }
        Ok(self
            .history
            .iter()
            .rev()
            .find(|tle| tle.epoch <= t)
            .unwrap_or_else(|| self.history.first().expect("non-empty history")))
    }

    fn push_unique(&mut self, tle: TwoLineElements) -> bool {
        if self.history.iter().any(|h| h.epoch == tle.epoch) {
            return false;
        }
        self.history.push(tle);
        self.history.sort_by_key(|h| h.epoch);
        true
    }
}

/// Pluggable element-set fetch client. One documented contract: given a
/// catalog number, return raw element text (optionally name-prefixed,
/// possibly several sets).
pub trait TleSource {
    fn fetch(&self, norad_id: u32) -> Result<String, String>;
}

/// In-memory source, for tests and fixtures.
#[derive(Debug, Default, Clone)]
pub struct StaticTleSource {
    entries: BTreeMap<u32, String>,
}

impl StaticTleSource {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, norad_id: u32, text: &str) -> Self {
        self.entries.insert(norad_id, text.to_string());
        self
    }
}

impl TleSource for StaticTleSource {
    fn fetch(&self, norad_id: u32) -> Result<String, String> {
        self.entries
            .get(&norad_id)
            .cloned()
            .ok_or_else(|| format!("no elements held for {norad_id}"))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RefreshReport {
    pub updated: Vec<String>,
    pub unchanged: Vec<String>,
    pub failed: Vec<FailedFetch>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailedFetch {
    pub satellite_id: String,
    pub error: String,
}

#[derive(Debug, Serialize, Deserialize, Default)]
struct PersistedState {
    last_fetch: BTreeMap<String, DateTime<Utc>>,
}

/// The full registry: satellites with element-set histories and radiometer
/// specs, transmitters by NGCI, the coastline, and the geofence defaults.
#[derive(Debug, Clone)]
pub struct Catalog {
    geofence: GeofenceSpec,
    entries: BTreeMap<String, SatelliteEntry>,
    transmitters: BTreeMap<String, Transmitter>,
    coastline: CoastlineSet,
}

impl Catalog {
    /// The shipped default registry with builtin element fixtures and the
    /// coarse US coastline.
    pub fn builtin() -> Catalog {
        Self::from_config_str(DEFAULT_CONFIG, None).expect("builtin catalog must load")
    }

    /// Loads a catalog from a configuration file; relative paths inside the
    /// config resolve against the config's directory.
    pub fn load(config_path: &Path) -> Result<Catalog, CatalogError> {
        let text = fs::read_to_string(config_path).map_err(|e| CatalogError::Io {
            path: config_path.to_path_buf(),
            source: e,
        })?;
        Self::from_config_str(&text, config_path.parent())
    }

    pub fn from_config_str(text: &str, base_dir: Option<&Path>) -> Result<Catalog, CatalogError> {
        let config: CatalogConfig = toml::from_str(text).map_err(|e| CatalogError::Schema {
            path: "<config>".into(),
            message: e.to_string(),
        })?;
        Self::from_config(config, base_dir)
    }

    pub fn from_config(
        config: CatalogConfig,
        base_dir: Option<&Path>,
    ) -> Result<Catalog, CatalogError> {
        let geofence = match &config.geofence {
            Some(g) => GeofenceSpec {
                pixel_scale: g.pixel_scale.unwrap_or(2.0),
                guard_pixels: g.guard_pixels.unwrap_or(1),
                open_loop_guard_scanlines: g.open_loop_guard_scanlines.unwrap_or(1),
            },
            None => GeofenceSpec::default(),
        };
        geofence.validate().map_err(|e| CatalogError::Schema {
            path: "geofence".into(),
            message: e.to_string(),
        })?;

        let resolve = |p: &PathBuf| -> PathBuf {
            if p.is_absolute() {
                p.clone()
            } else {
                base_dir.map(|b| b.join(p)).unwrap_or_else(|| p.clone())
            }
        };
        let data_dir = config.data_dir.as_ref().map(resolve);
        let coastline = match config.coastline.as_ref().map(resolve) {
            Some(path) => {
                let text = fs::read_to_string(&path).map_err(|e| CatalogError::Io {
                    path: path.clone(),
                    source: e,
                })?;
                CoastlineSet::from_geojson_str(&text)?
            }
            None => CoastlineSet::from_geojson_str(DEFAULT_COASTLINE)?,
        };

        let mut entries = BTreeMap::new();
        for (i, sc) in config.satellites.iter().enumerate() {
            let entry = satellite_from_config(sc, i)?;
            if entries.insert(entry.id.clone(), entry).is_some() {
                return Err(CatalogError::DuplicateSatellite { id: sc.id.clone() });
            }
        }

        let mut transmitters = BTreeMap::new();
        for (i, tc) in config.transmitters.iter().enumerate() {
            let tx = Transmitter {
                id: tc.ngci.clone(),
                location: GeoPoint::new(tc.lat, tc.lon),
                tx_band: FrequencyBand {
                    min_ghz: tc.band_min_ghz,
                    max_ghz: tc.band_max_ghz,
                },
            };
            tx.validate().map_err(|e| CatalogError::Schema {
                path: format!("transmitters[{i}]"),
                message: e.to_string(),
            })?;
            transmitters.insert(tc.ngci.clone(), tx);
        }

        let mut catalog = Catalog {
            geofence,
            entries,
            transmitters,
            coastline,
        };

        for (i, oc) in config.overrides.iter().enumerate() {
            catalog.apply_override_config(oc, i)?;
        }

        if let Some(dir) = &data_dir {
            catalog.load_data_dir(dir)?;
        }

        // Seed histories: inline config element set, then builtin fixtures.
        for sc in &config.satellites {
            let entry = catalog.entries.get_mut(&sc.id).expect("inserted above");
            if entry.history.is_empty() {
                if let Some(tc) = &sc.tle {
                    let text = match &tc.name {
                        Some(n) => format!("{n}\n{}\n{}", tc.line1, tc.line2),
                        None => format!("{}\n{}", tc.line1, tc.line2),
                    };
                    let tle = parse_tle(&text).map_err(|e| CatalogError::BadElements {
                        id: sc.id.clone(),
                        source: e,
                    })?;
                    entry.push_unique(tle);
                }
            }
            if entry.history.is_empty() {
                if let Some((_, text)) = BUILTIN_TLES.iter().find(|(n, _)| *n == entry.norad_id) {
                    let tle = parse_tle(text).map_err(|e| CatalogError::BadElements {
                        id: sc.id.clone(),
                        source: e,
                    })?;
                    entry.push_unique(tle);
                }
            }
            if entry.history.is_empty() {
                return Err(CatalogError::MissingElements { id: sc.id.clone() });
            }
        }

        Ok(catalog)
    }

    fn apply_override_config(&mut self, oc: &OverrideConfig, index: usize) -> Result<(), CatalogError> {
        let path = format!("overrides[{index}]");
        let entry = self
            .entries
            .get_mut(&oc.satellite)
            .ok_or_else(|| CatalogError::Schema {
                path: path.clone(),
                message: format!("unknown satellite {:?}", oc.satellite),
            })?;
        let expires = match &oc.expires {
            Some(raw) => Some(
                DateTime::parse_from_rfc3339(raw)
                    .map_err(|e| CatalogError::Schema {
                        path: format!("{path}.expires"),
                        message: e.to_string(),
                    })?
                    .with_timezone(&Utc),
            ),
            None => None,
        };
        let action = match (&oc.replacement, &oc.exclusion) {
            (Some(tc), None) => {
                let text = match &tc.name {
                    Some(n) => format!("{n}\n{}\n{}", tc.line1, tc.line2),
                    None => format!("{}\n{}", tc.line1, tc.line2),
                };
                let tle = parse_tle(&text).map_err(|e| CatalogError::BadElements {
                    id: oc.satellite.clone(),
                    source: e,
                })?;
                OverrideAction::Replace(tle)
            }
            (None, Some(x)) => OverrideAction::Exclude {
                start: x.start,
                end: x.end,
            },
            _ => {
                return Err(CatalogError::Schema {
                    path,
                    message: "exactly one of replacement/exclusion required".into(),
                })
            }
        };
        entry.orbit_override = Some(OrbitOverride {
            satellite_id: oc.satellite.clone(),
            reason: oc.reason.clone(),
            author: oc.author.clone(),
            expires,
            action,
        });
        Ok(())
    }

    /// Merges persisted element histories and refresh state from a data
    /// directory previously written by [`Catalog::save`].
    pub fn load_data_dir(&mut self, dir: &Path) -> Result<(), CatalogError> {
        let state_path = dir.join("state.json");
        if let Ok(text) = fs::read_to_string(&state_path) {
            let state: PersistedState =
                serde_json::from_str(&text).map_err(|e| CatalogError::Schema {
                    path: state_path.display().to_string(),
                    message: e.to_string(),
                })?;
            for (id, t) in state.last_fetch {
                if let Some(entry) = self.entries.get_mut(&id) {
                    entry.last_fetch = Some(t);
                }
            }
        }
        let ids: Vec<String> = self.entries.keys().cloned().collect();
        for id in ids {
            let path = dir.join("tles").join(format!("{id}.tle"));
            let Ok(text) = fs::read_to_string(&path) else {
                continue;
            };
            let sets = parse_tle_blocks(&text).map_err(|e| CatalogError::BadElements {
                id: id.clone(),
                source: e,
            })?;
            let entry = self.entries.get_mut(&id).expect("listed above");
            for tle in sets {
                if tle.norad_id == entry.norad_id {
                    entry.push_unique(tle);
                }
            }
        }
        Ok(())
    }

    /// Writes element histories (append-only plain text, one file per
    /// satellite) and the refresh state.
    pub fn save(&self, dir: &Path) -> Result<(), CatalogError> {
        let tles = dir.join("tles");
        fs::create_dir_all(&tles).map_err(|e| CatalogError::Io {
            path: tles.clone(),
            source: e,
        })?;
        for entry in self.entries.values() {
            let path = tles.join(format!("{}.tle", entry.id));
            let mut out = Vec::new();
            for tle in &entry.history {
                let name = tle.name.clone().unwrap_or_else(|| entry.name.clone());
                writeln!(out, "{name}").unwrap();
                writeln!(out, "{}", tle.line1).unwrap();
                writeln!(out, "{}", tle.line2).unwrap();
            }
            fs::write(&path, out).map_err(|e| CatalogError::Io { path, source: e })?;
        }
        let state = PersistedState {
            last_fetch: self
                .entries
                .values()
                .filter_map(|e| e.last_fetch.map(|t| (e.id.clone(), t)))
                .collect(),
        };
        let path = dir.join("state.json");
        fs::write(&path, serde_json::to_vec_pretty(&state).unwrap())
            .map_err(|e| CatalogError::Io { path, source: e })?;
        Ok(())
    }

    /// Fetches the newest element sets for every satellite. Per-satellite
    /// failures are tolerated and reported; only a total outage is an error.
    /// Stored histories are append-only and active overrides are never
    /// displaced (they live outside the history).
    pub fn refresh_tles(
        &mut self,
        source: &dyn TleSource,
        now: DateTime<Utc>,
    ) -> Result<RefreshReport, CatalogError> {
        let mut report = RefreshReport::default();
        for entry in self.entries.values_mut() {
            match source.fetch(entry.norad_id) {
                Ok(text) => match parse_tle_blocks(&text) {
                    Ok(sets) => {
                        let mut appended = false;
                        let mut matched = false;
                        for tle in sets {
                            if tle.norad_id == entry.norad_id {
                                matched = true;
                                appended |= entry.push_unique(tle);
                            }
                        }
                        if !matched {
                            report.failed.push(FailedFetch {
                                satellite_id: entry.id.clone(),
                                error: "fetched text held no elements for this catalog number"
                                    .into(),
                            });
                            continue;
                        }
                        entry.last_fetch = Some(now);
                        if appended {
                            report.updated.push(entry.id.clone());
                        } else {
                            report.unchanged.push(entry.id.clone());
                        }
                    }
                    Err(e) => report.failed.push(FailedFetch {
                        satellite_id: entry.id.clone(),
                        error: e.to_string(),
                    }),
                },
                Err(e) => report.failed.push(FailedFetch {
                    satellite_id: entry.id.clone(),
                    error: e,
                }),
            }
        }
        if !self.entries.is_empty() && report.failed.len() == self.entries.len() {
            return Err(CatalogError::TotalOutage {
                failures: report
                    .failed
                    .into_iter()
                    .map(|f| (f.satellite_id, f.error))
                    .collect(),
            });
        }
        Ok(report)
    }

    pub fn lookup_transmitter(&self, ngci: &str) -> Result<&Transmitter, CatalogError> {
        self.transmitters
            .get(ngci)
            .ok_or_else(|| CatalogError::UnknownTransmitter {
                ngci: ngci.to_string(),
            })
    }

    pub fn satellite(&self, id: &str) -> Result<&SatelliteEntry, CatalogError> {
        self.entries
            .get(id)
            .ok_or_else(|| CatalogError::UnknownSatellite { id: id.to_string() })
    }

    pub fn satellites(&self) -> impl Iterator<Item = &SatelliteEntry> {
        self.entries.values()
    }

    pub fn transmitters(&self) -> impl Iterator<Item = &Transmitter> {
        self.transmitters.values()
    }

    pub fn geofence(&self) -> &GeofenceSpec {
        &self.geofence
    }

    pub fn coastline(&self) -> &CoastlineSet {
        &self.coastline
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Parses text holding any number of element sets, each optionally preceded
/// by a name line.
pub fn parse_tle_blocks(text: &str) -> Result<Vec<TwoLineElements>, TleError> {
    let lines: Vec<&str> = text
        .lines()
        .map(str::trim_end)
        .filter(|l| !l.trim().is_empty())
        .collect();
    let mut sets = Vec::new();
    let mut pending_name: Option<&str> = None;
    let mut i = 0;
    while i < lines.len() {
        let line = lines[i];
        if line.starts_with("1 ") && i + 1 < lines.len() && lines[i + 1].starts_with("2 ") {
            let block = match pending_name.take() {
                Some(n) => format!("{n}\n{line}\n{}", lines[i + 1]),
                None => format!("{line}\n{}", lines[i + 1]),
            };
            sets.push(parse_tle(&block)?);
            i += 2;
        } else {
            pending_name = Some(line);
            i += 1;
        }
    }
    if sets.is_empty() {
        return Err(TleError::MissingLines { found: lines.len() });
    }
    Ok(sets)
}

fn satellite_from_config(sc: &SatelliteConfig, index: usize) -> Result<SatelliteEntry, CatalogError> {
    let path = |field: &str| format!("satellites[{index}].{field}");
    let scan_type = match sc.scan_type.as_str() {
        "conical" => {
            let off = sc.off_nadir_deg.ok_or_else(|| CatalogError::Schema {
                path: path("off_nadir_deg"),
                message: "required for conical scanners".into(),
            })?;
            ScanType::Conical { off_nadir_deg: off }
        }
        "cross_track" => {
            let max = sc.max_scan_deg.ok_or_else(|| CatalogError::Schema {
                path: path("max_scan_deg"),
                message: "required for cross-track scanners".into(),
            })?;
            ScanType::CrossTrack { max_scan_deg: max }
        }
        other => {
            return Err(CatalogError::Schema {
                path: path("scan_type"),
                message: format!("unknown scan type {other:?} (expected \"conical\" or \"cross_track\")"),
            })
        }
    };
    if sc.bands.is_empty() {
        return Err(CatalogError::Schema {
            path: path("bands"),
            message: "at least one band required".into(),
        });
    }
    if sc.bands.len() != sc.fov.len() {
        return Err(CatalogError::Schema {
            path: path("fov"),
            message: format!(
                "fov entries ({}) must pair one-to-one with bands ({})",
                sc.fov.len(),
                sc.bands.len()
            ),
        });
    }
    let bands = sc
        .bands
        .iter()
        .zip(&sc.fov)
        .map(|(b, f)| BandGeometry {
            band: MeasurementBand {
                center_ghz: b.center_ghz,
                width_ghz: b.width_ghz,
            },
            fov: FieldOfView {
                along_km: f.along_km,
                cross_km: f.cross_km,
            },
        })
        .collect();
    let spec = RadiometerSpec {
        name: sc.name.clone(),
        scan_type,
        scan_period_s: sc.scan_period_s,
        active_scan_deg: sc.active_scan_deg,
        open_loop: sc.open_loop,
        bands,
    };
    spec.validate().map_err(|e| {
        let crate::scan::SpecError::Invalid { field, message } = e;
        CatalogError::Schema {
            path: format!("satellites[{index}].{field}"),
            message,
        }
    })?;
    Ok(SatelliteEntry {
        id: sc.id.clone(),
        norad_id: sc.norad_id,
        name: sc.name.clone(),
        spec,
        history: Vec::new(),
        last_fetch: None,
        orbit_override: None,
    })
}
