//! Traffic mitigation planning for dark-time windows: sleep low-load sites,
//! hand sessions over to alternate bands, shed best-effort last-resort.
//!
//! The planner is a deterministic class-of-service greedy; the policy type is
//! the extension point for smarter schedulers. A plan is always produced:
//! unmitigable load shows up as a high impact score, never as a failure.

use serde::{Deserialize, Serialize};

use crate::darktime::DarkTimeWindow;

/// Session class, in protection order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionClass {
    Urllc,
    RealTime,
    BestEffort,
}

impl SessionClass {
    /// Highest-priority first.
    pub const ORDERED: [SessionClass; 3] = [
        SessionClass::Urllc,
        SessionClass::RealTime,
        SessionClass::BestEffort,
    ];
}

/// Session counts by class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SessionMix {
    pub urllc: u64,
    pub real_time: u64,
    pub best_effort: u64,
}

impl SessionMix {
    pub fn get(&self, class: SessionClass) -> u64 {
        match class {
            SessionClass::Urllc => self.urllc,
            SessionClass::RealTime => self.real_time,
            SessionClass::BestEffort => self.best_effort,
        }
    }

    fn set(&mut self, class: SessionClass, value: u64) {
        match class {
            SessionClass::Urllc => self.urllc = value,
            SessionClass::RealTime => self.real_time = value,
            SessionClass::BestEffort => self.best_effort = value,
        }
    }

    pub fn total(&self) -> u64 {
        self.urllc + self.real_time + self.best_effort
    }
}

/// One cell site inside a geofence, with its session mix and the spare
/// session capacity available on alternate bands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSite {
    pub site_id: String,
    /// Transmitter this site radiates through.
    pub ngci: String,
    pub sessions: SessionMix,
    pub spare_capacity_sessions: u64,
    /// Local civil time offset from UTC, hours.
    pub utc_offset_hours: f64,
}

/// Piecewise-linear diurnal load curve: anchor points of (local hour,
/// fraction of peak), interpolated periodically over 24 h.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficProfile {
    pub anchors: Vec<(f64, f64)>,
}

impl Default for TrafficProfile {
    /// Urban default: ~12.5% of peak at 4 AM, ramp start at 2 PM, peak at
    /// 9 PM, monotone descent overnight.
    fn default() -> Self {
        Self {
            anchors: vec![(4.0, 0.125), (14.0, 0.30), (21.0, 1.0)],
        }
    }
}

impl TrafficProfile {
    pub fn validate(&self) -> Result<(), String> {
        if self.anchors.is_empty() {
            return Err("traffic profile needs at least one anchor".into());
        }
        for (h, f) in &self.anchors {
            if !(0.0..24.0).contains(h) {
                return Err(format!("anchor hour {h} outside [0, 24)"));
            }
            if !(0.0..=1.0).contains(f) {
                return Err(format!("anchor fraction {f} outside [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Fraction of peak load at a fractional local hour, by periodic
/// piecewise-linear interpolation between the profile anchors.
pub fn diurnal_load(local_hour: f64, profile: &TrafficProfile) -> f64 {
    let hour = local_hour.rem_euclid(24.0);
    let mut anchors = profile.anchors.clone();
    anchors.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    if anchors.len() == 1 {
        return anchors[0].1;
    }
    let first = anchors[0];
    let last = *anchors.last().unwrap();
    // Wrap the curve around midnight.
    let (prev, next) = if hour < first.0 {
        ((last.0 - 24.0, last.1), first)
    } else if hour >= last.0 {
        (last, (first.0 + 24.0, first.1))
    } else {
        let i = anchors.iter().rposition(|(h, _)| *h <= hour).unwrap();
        (anchors[i], anchors[i + 1])
    };
    let span = next.0 - prev.0;
    if span <= 0.0 {
        return prev.1;
    }
    prev.1 + (hour - prev.0) / span * (next.1 - prev.1)
}

/// Handover mechanism preference. Both move sessions with identical planning
/// arithmetic here; the flag records which one the network should invoke.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HandoverMechanism {
    Daps,
    L1L2,
}

/// Operator policy for dark-time mitigation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MitigationPolicy {
    /// Local-hour interval during which low-load sites may sleep.
    pub sleep_window_local: (f64, f64),
    /// Load fraction at or below which sleeping is acceptable.
    pub sleep_load_threshold: f64,
    /// Probability that a handed-over session is affected anyway. No default
    /// is endorsed; operators must measure their own.
    pub handover_failure_probability: f64,
    pub mechanism: HandoverMechanism,
}

impl MitigationPolicy {
    /// Policy with the stock sleep window (01:00-05:00 local) and threshold
    /// (15% of peak); the failure probability is the operator's number.
    pub fn with_failure_probability(p: f64) -> Self {
        Self {
            sleep_window_local: (1.0, 5.0),
            sleep_load_threshold: 0.15,
            handover_failure_probability: p,
            mechanism: HandoverMechanism::Daps,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.sleep_load_threshold) {
            return Err(format!(
                "sleep_load_threshold {} outside [0, 1]",
                self.sleep_load_threshold
            ));
        }
        if !(0.0..=1.0).contains(&self.handover_failure_probability) {
            return Err(format!(
                "handover_failure_probability {} outside [0, 1]",
                self.handover_failure_probability
            ));
        }
        Ok(())
    }
}

/// Action chosen for one site during one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MitigationAction {
    Sleep,
    Handover { mechanism: HandoverMechanism },
    /// Some sessions could not be placed; `class` is the highest-priority
    /// class that lost sessions.
    Shed { class: SessionClass },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SitePlan {
    pub site_id: String,
    pub action: MitigationAction,
    pub load_fraction: f64,
    pub active_sessions: SessionMix,
    pub handed_over: SessionMix,
    pub shed: SessionMix,
    /// Expected affected sessions at this site.
    pub impact: f64,
}

/// Mitigation plan for one dark-time window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MitigationPlan {
    pub satellite_id: String,
    #[serde(with = "crate::timefmt")]
    pub window_start: chrono::DateTime<chrono::Utc>,
    #[serde(with = "crate::timefmt")]
    pub window_end: chrono::DateTime<chrono::Utc>,
    pub site_plans: Vec<SitePlan>,
    /// Expected affected sessions across all sites.
    pub impact: f64,
}

fn round_half_up(x: f64) -> u64 {
    (x + 0.5).floor().max(0.0) as u64
}

fn in_local_window(hour: f64, window: (f64, f64)) -> bool {
    let h = hour.rem_euclid(24.0);
    let (a, b) = window;
    if a <= b {
        (a..b).contains(&h)
    } else {
        h >= a || h < b
    }
}

/// Plans the mitigation for every site during one window.
///
/// Per site: if the window midpoint falls in the local sleep window and the
/// diurnal load is at or below the sleep threshold, the site sleeps (impact
/// zero). Otherwise every active session (counts x load, rounded half-up) is
/// handed over in class order URLLC, real-time, best-effort; sessions beyond
/// the alternate-band spare capacity are shed, best-effort first. Impact is
/// shed sessions plus handed-over sessions times the failure probability.
pub fn plan_mitigation(
    window: &DarkTimeWindow,
    sites: &[CellSite],
    profile: &TrafficProfile,
    policy: &MitigationPolicy,
) -> MitigationPlan {
    let mid = window.start + (window.end - window.start) / 2;
    let mid_utc_hours = mid.timestamp_millis() as f64 / 3_600_000.0;
    let mut site_plans = Vec::with_capacity(sites.len());
    for site in sites {
        let local_hour = (mid_utc_hours + site.utc_offset_hours).rem_euclid(24.0);
        let load = diurnal_load(local_hour, profile);
        let plan = if load <= policy.sleep_load_threshold
            && in_local_window(local_hour, policy.sleep_window_local)
        {
            SitePlan {
                site_id: site.site_id.clone(),
                action: MitigationAction::Sleep,
                load_fraction: load,
                active_sessions: SessionMix::default(),
                handed_over: SessionMix::default(),
                shed: SessionMix::default(),
                impact: 0.0,
            }
        } else {
            let mut active = SessionMix::default();
            for class in SessionClass::ORDERED {
                active.set(class, round_half_up(site.sessions.get(class) as f64 * load));
            }
            let mut capacity = site.spare_capacity_sessions;
            let mut handed = SessionMix::default();
            let mut shed = SessionMix::default();
            for class in SessionClass::ORDERED {
                let moved = active.get(class).min(capacity);
                handed.set(class, moved);
                shed.set(class, active.get(class) - moved);
                capacity -= moved;
            }
            let impact = shed.total() as f64
                + handed.total() as f64 * policy.handover_failure_probability;
            let action = if shed.total() > 0 {
                let class = SessionClass::ORDERED
                    .into_iter()
                    .find(|c| shed.get(*c) > 0)
                    .unwrap();
                MitigationAction::Shed { class }
            } else {
                MitigationAction::Handover {
                    mechanism: policy.mechanism,
                }
            };
            SitePlan {
                site_id: site.site_id.clone(),
                action,
                load_fraction: load,
                active_sessions: active,
                handed_over: handed,
                shed,
                impact,
            }
        };
        site_plans.push(plan);
    }
    let impact = site_plans.iter().map(|p| p.impact).sum();
    MitigationPlan {
        satellite_id: window.satellite_id.clone(),
        window_start: window.start,
        window_end: window.end,
        site_plans,
        impact,
    }
}

/// Expected affected sessions for a plan: shed sessions count fully,
/// handed-over sessions by the failure probability implied in the per-site
/// impact figures. Recomputed from the displacement counts.
pub fn impact_score(plan: &MitigationPlan) -> f64 {
    plan.site_plans.iter().map(|p| p.impact).sum()
}

/// In-network configuration: cell sites with their session mixes, the
/// diurnal traffic profile, and the mitigation policy. Kept in a separate
/// document from the catalog so site traffic and capacity detail never
/// enters the centralized registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    #[serde(default)]
    pub profile: TrafficProfile,
    pub policy: MitigationPolicy,
    pub sites: Vec<CellSite>,
}

impl NetworkConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, String> {
        let config: NetworkConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        config.profile.validate()?;
        config.policy.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbit::PassDirection;
    use chrono::{TimeZone, Utc};

    fn window_at_utc(h: u32, min: u32) -> DarkTimeWindow {
        let start = Utc.with_ymd_and_hms(2024, 11, 26, h, min, 0).unwrap();
        DarkTimeWindow {
            satellite_id: "amsr2".into(),
            start,
            end: start + chrono::Duration::milliseconds(10_500),
            scanline_count: 7,
            direction: PassDirection::Descending,
        }
    }

    fn site(spare: u64) -> CellSite {
        CellSite {
            site_id: "site-1".into(),
            ngci: "310410-0001-001".into(),
            sessions: SessionMix {
                urllc: 40,
                real_time: 100,
                best_effort: 400,
            },
            spare_capacity_sessions: spare,
            utc_offset_hours: -5.0,
        }
    }

    #[test]
    fn diurnal_default_anchors() {
        let p = TrafficProfile::default();
        let at4 = diurnal_load(4.0, &p);
        assert!((0.10..=0.15).contains(&at4), "load(4) = {at4}");
        assert_eq!(diurnal_load(21.0, &p), 1.0);
        // Linearity between 14:00 and 21:00.
        let mid = diurnal_load(17.5, &p);
        let expected = (diurnal_load(14.0, &p) + 1.0) / 2.0;
        assert!((mid - expected).abs() < 1e-12);
        // Periodic: descent from 21:00 wraps to 04:00 next day.
        let late = diurnal_load(23.0, &p);
        assert!(late < 1.0 && late > diurnal_load(3.0, &p));
        assert!((diurnal_load(28.0, &p) - diurnal_load(4.0, &p)).abs() < 1e-12);
    }

    #[test]
    fn sleep_when_low_load_in_window() {
        // 07:00 UTC = 02:00 local at UTC-5; profile pinned to 12% load.
        let profile = TrafficProfile {
            anchors: vec![(0.0, 0.12)],
        };
        let policy = MitigationPolicy::with_failure_probability(0.01);
        let plan = plan_mitigation(&window_at_utc(7, 0), &[site(0)], &profile, &policy);
        assert!(matches!(plan.site_plans[0].action, MitigationAction::Sleep));
        assert_eq!(plan.impact, 0.0);
        assert_eq!(impact_score(&plan), 0.0);
    }

    #[test]
    fn sleep_requires_both_conditions() {
        let policy = MitigationPolicy::with_failure_probability(0.01);
        // Low load but outside the sleep window (13:30 local).
        let low = TrafficProfile {
            anchors: vec![(0.0, 0.12)],
        };
        let plan = plan_mitigation(&window_at_utc(18, 30), &[site(1000)], &low, &policy);
        assert!(!matches!(plan.site_plans[0].action, MitigationAction::Sleep));
        // In the window but load above threshold.
        let high = TrafficProfile {
            anchors: vec![(0.0, 0.5)],
        };
        let plan = plan_mitigation(&window_at_utc(7, 0), &[site(1000)], &high, &policy);
        assert!(!matches!(plan.site_plans[0].action, MitigationAction::Sleep));
    }

    #[test]
    fn handover_all_when_capacity_sufficient() {
        // 18:30 UTC = 13:30 local; default profile load ~ 0.29.
        let profile = TrafficProfile::default();
        let policy = MitigationPolicy::with_failure_probability(0.01);
        let s = site(10_000);
        let plan = plan_mitigation(&window_at_utc(18, 30), &[s], &profile, &policy);
        let sp = &plan.site_plans[0];
        assert!(matches!(
            sp.action,
            MitigationAction::Handover {
                mechanism: HandoverMechanism::Daps
            }
        ));
        assert_eq!(sp.shed.total(), 0);
        assert_eq!(sp.handed_over, sp.active_sessions);
        let expected = sp.active_sessions.total() as f64 * 0.01;
        assert!((plan.impact - expected).abs() < 1e-12);
    }

    #[test]
    fn best_effort_shed_first() {
        // Spare capacity covers exactly URLLC + real-time active sessions.
        let profile = TrafficProfile {
            anchors: vec![(0.0, 0.5)],
        };
        let policy = MitigationPolicy::with_failure_probability(0.01);
        let s = site(20 + 50);
        let plan = plan_mitigation(&window_at_utc(18, 30), &[s], &profile, &policy);
        let sp = &plan.site_plans[0];
        assert_eq!(sp.active_sessions.urllc, 20);
        assert_eq!(sp.active_sessions.real_time, 50);
        assert_eq!(sp.handed_over.urllc, 20);
        assert_eq!(sp.handed_over.real_time, 50);
        assert_eq!(sp.handed_over.best_effort, 0);
        assert_eq!(sp.shed.urllc, 0);
        assert_eq!(sp.shed.real_time, 0);
        assert_eq!(sp.shed.best_effort, 200);
        assert!(matches!(
            sp.action,
            MitigationAction::Shed {
                class: SessionClass::BestEffort
            }
        ));
        assert!((sp.impact - (200.0 + 70.0 * 0.01)).abs() < 1e-12);
    }

    #[test]
    fn shed_urllc_implies_everything_else_shed() {
        let profile = TrafficProfile {
            anchors: vec![(0.0, 1.0)],
        };
        let policy = MitigationPolicy::with_failure_probability(0.0);
        let s = site(10); // Less spare than the URLLC load alone.
        let plan = plan_mitigation(&window_at_utc(18, 30), &[s], &profile, &policy);
        let sp = &plan.site_plans[0];
        assert!(sp.shed.urllc > 0);
        assert_eq!(sp.shed.real_time, sp.active_sessions.real_time);
        assert_eq!(sp.shed.best_effort, sp.active_sessions.best_effort);
        assert!(matches!(
            sp.action,
            MitigationAction::Shed {
                class: SessionClass::Urllc
            }
        ));
    }

    #[test]
    fn impact_monotone_in_capacity_and_load() {
        let policy = MitigationPolicy::with_failure_probability(0.02);
        let profile = |l: f64| TrafficProfile {
            anchors: vec![(0.0, l)],
        };
        let w = window_at_utc(18, 30);
        let mut prev = f64::MAX;
        for spare in [0, 50, 150, 400, 1000] {
            let impact = plan_mitigation(&w, &[site(spare)], &profile(0.8), &policy).impact;
            assert!(impact <= prev);
            prev = impact;
        }
        let mut prev = 0.0;
        for load in [0.2, 0.4, 0.6, 0.8, 1.0] {
            let impact = plan_mitigation(&w, &[site(100)], &profile(load), &policy).impact;
            assert!(impact >= prev, "impact {impact} at load {load}");
            prev = impact;
        }
    }

    #[test]
    fn scale_equivariance_at_exact_loads() {
        let profile = TrafficProfile {
            anchors: vec![(0.0, 1.0)],
        };
        let policy = MitigationPolicy::with_failure_probability(0.05);
        let w = window_at_utc(18, 30);
        let base = plan_mitigation(&w, &[site(120)], &profile, &policy);
        let mut doubled_site = site(240);
        doubled_site.sessions = SessionMix {
            urllc: 80,
            real_time: 200,
            best_effort: 800,
        };
        let doubled = plan_mitigation(&w, &[doubled_site], &profile, &policy);
        assert_eq!(
            doubled.site_plans[0].shed.total(),
            2 * base.site_plans[0].shed.total()
        );
        assert_eq!(
            doubled.site_plans[0].handed_over.total(),
            2 * base.site_plans[0].handed_over.total()
        );
        assert!((doubled.impact - 2.0 * base.impact).abs() < 1e-9);
    }

    #[test]
    fn impact_examples() {
        // 100 handed over at p=0.01, nothing shed -> 1.0; 10 shed -> 10.0.
        let mk = |handed: u64, shed: u64, p: f64| MitigationPlan {
            satellite_id: "amsr2".into(),
            window_start: Utc.with_ymd_and_hms(2024, 11, 26, 7, 0, 0).unwrap(),
            window_end: Utc.with_ymd_and_hms(2024, 11, 26, 7, 0, 21).unwrap(),
            site_plans: vec![SitePlan {
                site_id: "s".into(),
                action: MitigationAction::Handover {
                    mechanism: HandoverMechanism::L1L2,
                },
                load_fraction: 1.0,
                active_sessions: SessionMix {
                    urllc: handed + shed,
                    real_time: 0,
                    best_effort: 0,
                },
                handed_over: SessionMix {
                    urllc: handed,
                    real_time: 0,
                    best_effort: 0,
                },
                shed: SessionMix {
                    urllc: shed,
                    real_time: 0,
                    best_effort: 0,
                },
                impact: shed as f64 + handed as f64 * p,
            }],
            impact: shed as f64 + handed as f64 * p,
        };
        assert_eq!(impact_score(&mk(100, 0, 0.01)), 1.0);
        assert_eq!(impact_score(&mk(0, 10, 0.01)), 10.0);
    }

    #[test]
    fn sleep_window_wrap() {
        assert!(in_local_window(23.5, (23.0, 5.0)));
        assert!(in_local_window(2.0, (23.0, 5.0)));
        assert!(!in_local_window(12.0, (23.0, 5.0)));
        assert!(in_local_window(1.0, (1.0, 5.0)));
        assert!(!in_local_window(5.0, (1.0, 5.0)));
    }
}
