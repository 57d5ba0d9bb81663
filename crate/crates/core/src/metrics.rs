//! Resilience and green metrics over an event log: degradation episodes and
//! their recovery times, per-run reports, and cross-replication aggregation.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::energy::{EnergySource, JOULES_PER_KWH};
use crate::events::{EventKind, EventLog, Outcome};
use crate::scenario::ScenarioConfig;
use crate::sim::Counters;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("event log integrity: {0}")]
    Integrity(String),
    #[error("cannot aggregate zero reports")]
    EmptyAggregate,
}

/// One degradation episode: from the moment an object entered the uncertain
/// path (slowdown or unclassified queue) until the system was fully back to
/// nominal (object resolved and belt speed restored).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegradationEpisode {
    pub object_id: u64,
    pub detected_at_s: f64,
    pub resolved_at_s: f64,
    pub recovery_time_s: f64,
}

/// Extracts completed degradation episodes, one per object that entered the
/// uncertain path or the learning queue (never both double-counted).
/// Objects still unresolved at the end of the log yield no episode.
pub fn detect_episodes(log: &EventLog) -> Result<Vec<DegradationEpisode>, MetricsError> {
    let mut last_t = 0u64;
    for e in log.events() {
        if e.t_ms < last_t {
            return Err(MetricsError::Integrity(format!(
                "timestamps out of order: {} ms after {} ms",
                e.t_ms, last_t
            )));
        }
        last_t = e.t_ms;
    }

    #[derive(Default)]
    struct Track {
        detected_ms: Option<u64>,
        done_ms: Option<u64>,
        restored_ms: Option<u64>,
    }
    let mut tracks: BTreeMap<u64, Track> = BTreeMap::new();
    for e in log.events() {
        let Some(id) = e.object_id else { continue };
        match &e.kind {
            EventKind::QueueInsert | EventKind::Slowdown { .. } => {
                let t = tracks.entry(id).or_default();
                t.detected_ms.get_or_insert(e.t_ms);
            }
            EventKind::ObjectDone { .. } => {
                tracks.entry(id).or_default().done_ms = Some(e.t_ms);
            }
            EventKind::SpeedRestored => {
                tracks.entry(id).or_default().restored_ms = Some(e.t_ms);
            }
            _ => {}
        }
    }
    let mut episodes = Vec::new();
    for (object_id, t) in tracks {
        let (Some(detected), Some(done)) = (t.detected_ms, t.done_ms) else {
            continue;
        };
        let resolved = t.restored_ms.map_or(done, |r| r.max(done));
        episodes.push(DegradationEpisode {
            object_id,
            detected_at_s: detected as f64 / 1000.0,
            resolved_at_s: resolved as f64 / 1000.0,
            recovery_time_s: (resolved - detected) as f64 / 1000.0,
        });
    }
    Ok(episodes)
}

/// Summary statistics over episode recovery times; all zero when no episode
/// completed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct RecoveryStats {
    pub count: u64,
    pub mean_s: f64,
    pub p50_s: f64,
    pub p95_s: f64,
    pub max_s: f64,
}

impl RecoveryStats {
    pub fn from_episodes(episodes: &[DegradationEpisode]) -> Self {
        if episodes.is_empty() {
            return Self::default();
        }
        let mut times: Vec<f64> = episodes.iter().map(|e| e.recovery_time_s).collect();
        times.sort_by(|a, b| a.partial_cmp(b).expect("finite recovery times"));
        let n = times.len();
        let nearest_rank = |q: f64| times[((q * n as f64).ceil() as usize).max(1) - 1];
        Self {
            count: n as u64,
            mean_s: times.iter().sum::<f64>() / n as f64,
            p50_s: nearest_rank(0.50),
            p95_s: nearest_rank(0.95),
            max_s: times[n - 1],
        }
    }
}

/// Everything reported about one replication.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub scenario_id: String,
    pub seed: u64,
    pub policy: String,
    pub counters: Counters,
    pub recovery: RecoveryStats,
    pub energy_wh_by_source: BTreeMap<EnergySource, f64>,
    pub energy_wh_total: f64,
    pub co2e_g: f64,
    pub combined_score: f64,
}

impl RunReport {
    pub fn source_wh(&self, source: EnergySource) -> f64 {
        self.energy_wh_by_source.get(&source).copied().unwrap_or(0.0)
    }
}

/// Builds the report for one run purely from its event log, so a replayed
/// log reproduces the online report exactly.
pub fn build_report(cfg: &ScenarioConfig, log: &EventLog) -> Result<RunReport, MetricsError> {
    let mut counters = Counters::default();
    let mut joules_by_source: BTreeMap<EnergySource, f64> =
        EnergySource::ALL.iter().map(|&s| (s, 0.0)).collect();
    let mut scenario_id = cfg.id.clone();
    let mut seed = cfg.seed;
    let mut policy = cfg.policy.label();
    for e in log.events() {
        match &e.kind {
            EventKind::RunStart {
                scenario_id: sid,
                seed: s,
                policy: p,
                ..
            } => {
                scenario_id = sid.clone();
                seed = *s;
                policy = p.clone();
            }
            EventKind::Arrival { .. } => counters.objects_total += 1,
            EventKind::Correction { .. } => {
                counters.corrections += 1;
                counters.human_interactions += 1;
            }
            EventKind::HumanPlaced { .. } | EventKind::Retrieved { .. } => {
                counters.human_interactions += 1;
            }
            EventKind::ObjectDone { outcome } => match outcome {
                Outcome::RobotPlaced => counters.robot_placed += 1,
                Outcome::HumanPlaced => counters.human_placed += 1,
                Outcome::Discarded => counters.discarded += 1,
                Outcome::Missed => counters.missed += 1,
            },
            EventKind::Energy { source, joules, .. } => {
                *joules_by_source.get_mut(source).expect("all sources present") += joules;
            }
            _ => {}
        }
    }
    let resolved = counters.discarded + counters.robot_placed + counters.human_placed + counters.missed;
    if resolved > counters.objects_total {
        return Err(MetricsError::Integrity(
            "more terminal events than arrivals".to_string(),
        ));
    }
    counters.in_flight_at_end = counters.objects_total - resolved;

    let episodes = detect_episodes(log)?;
    let recovery = RecoveryStats::from_episodes(&episodes);

    let energy_wh_by_source: BTreeMap<EnergySource, f64> = joules_by_source
        .iter()
        .map(|(&s, &j)| (s, j / 3600.0))
        .collect();
    let total_joules: f64 = joules_by_source.values().sum();
    let co2e_g = total_joules / JOULES_PER_KWH * cfg.carbon_intensity_g_per_kwh;

    let combined_score = combined_score(
        cfg,
        recovery.mean_s,
        co2e_g,
        counters.human_interactions as f64,
    );

    Ok(RunReport {
        schema_version: crate::scenario::SCHEMA_VERSION,
        scenario_id,
        seed,
        policy,
        counters,
        recovery,
        energy_wh_by_source,
        energy_wh_total: total_joules / 3600.0,
        co2e_g,
        combined_score,
    })
}

/// Weighted comparison score: higher is better, strictly decreasing in mean
/// recovery time, CO2e, and human interactions. Each term is normalized
/// against the configured reference bounds without clamping, so monotonicity
/// holds even outside the reference range.
pub fn combined_score(
    cfg: &ScenarioConfig,
    recovery_mean_s: f64,
    co2e_g: f64,
    human_interactions: f64,
) -> f64 {
    let norm = |x: f64, b: crate::scenario::Bounds| (x - b.lo) / (b.hi - b.lo);
    let w = &cfg.score.weights;
    let b = &cfg.score.bounds;
    w.resilience * (1.0 - norm(recovery_mean_s, b.recovery_mean_s))
        + w.green * (1.0 - norm(co2e_g, b.co2e_g))
        + w.human * (1.0 - norm(human_interactions, b.human_interactions))
}

/// Mean and 95% confidence half-width (normal approximation) of one metric
/// across replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricStat {
    pub mean: f64,
    pub ci95_half_width: f64,
}

impl MetricStat {
    fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        if xs.len() < 2 {
            return Self {
                mean,
                ci95_half_width: 0.0,
            };
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Self {
            mean,
            ci95_half_width: 1.96 * (var / n).sqrt(),
        }
    }
}

/// Per-policy aggregate over replications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicySummary {
    pub policy: String,
    pub replications: u64,
    pub objects_total: MetricStat,
    pub robot_placed: MetricStat,
    pub human_placed: MetricStat,
    pub missed: MetricStat,
    pub discarded: MetricStat,
    pub corrections: MetricStat,
    pub human_interactions: MetricStat,
    pub recovery_mean_s: MetricStat,
    pub recovery_p95_s: MetricStat,
    pub energy_wh: MetricStat,
    pub arm_wh: MetricStat,
    pub compute_wh: MetricStat,
    pub conveyor_wh: MetricStat,
    pub human_aid_wh: MetricStat,
    pub co2e_g: MetricStat,
    pub combined_score: MetricStat,
}

/// Groups reports by policy label (in first-appearance order) and computes
/// means with 95% confidence half-widths for every numeric field.
pub fn aggregate(reports: &[RunReport]) -> Result<Vec<PolicySummary>, MetricsError> {
    if reports.is_empty() {
        return Err(MetricsError::EmptyAggregate);
    }
    let mut order: Vec<String> = Vec::new();
    for r in reports {
        if !order.contains(&r.policy) {
            order.push(r.policy.clone());
        }
    }
    let mut summaries = Vec::new();
    for policy in order {
        let group: Vec<&RunReport> = reports.iter().filter(|r| r.policy == policy).collect();
        let stat = |f: &dyn Fn(&RunReport) -> f64| {
            MetricStat::from_samples(&group.iter().map(|r| f(r)).collect::<Vec<_>>())
        };
        summaries.push(PolicySummary {
            policy,
            replications: group.len() as u64,
            objects_total: stat(&|r| r.counters.objects_total as f64),
            robot_placed: stat(&|r| r.counters.robot_placed as f64),
            human_placed: stat(&|r| r.counters.human_placed as f64),
            missed: stat(&|r| r.counters.missed as f64),
            discarded: stat(&|r| r.counters.discarded as f64),
            corrections: stat(&|r| r.counters.corrections as f64),
            human_interactions: stat(&|r| r.counters.human_interactions as f64),
            recovery_mean_s: stat(&|r| r.recovery.mean_s),
            recovery_p95_s: stat(&|r| r.recovery.p95_s),
            energy_wh: stat(&|r| r.energy_wh_total),
            arm_wh: stat(&|r| r.source_wh(EnergySource::Arm)),
            compute_wh: stat(&|r| r.source_wh(EnergySource::Compute)),
            conveyor_wh: stat(&|r| r.source_wh(EnergySource::Conveyor)),
            human_aid_wh: stat(&|r| r.source_wh(EnergySource::HumanAid)),
            co2e_g: stat(&|r| r.co2e_g),
            combined_score: stat(&|r| r.combined_score),
        });
    }
    Ok(summaries)
}
