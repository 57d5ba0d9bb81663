//! Deterministic simulation of the online classification cell: objects
//! arrive on a conveyor, a classifier scores each image, confident
//! predictions go straight to the arm, and uncertain ones slow the belt
//! down, take a second image, and let the recovery policy pick the robot or
//! the human.
//!
//! The simulated clock ticks in whole milliseconds and all randomness flows
//! from the scenario seed, so a run is replayable byte-for-byte.
//!
//! The processing station (classifier inference plus the arm/human team) is
//! strictly sequential: one object owns it from its first image until its
//! resolution. That serialization is what guarantees the belt is back to
//! nominal speed before the next object's gate decision.

use serde::Serialize;
use thiserror::Error;

use crate::decision::{decide, PolicyKind, Rationale};
use crate::energy::{EnergyError, EnergyLedger, EnergySource, JOULES_PER_KWH};
use crate::events::{Event, EventKind, EventLog, EventLogError, Outcome};
use crate::game::{Action, SystemFactors};
use crate::rng::RandomSource;
use crate::scenario::{Bounds, ClassifierConfig, FactorConfig, ScenarioConfig, ScenarioError};

/// Sampled confidences are clamped into this range; the calibration
/// assumption `P(correct) = eps` therefore never degenerates to certainty.
pub const EPS_MIN: f64 = 0.01;
pub const EPS_MAX: f64 = 0.99;

/// Normalized factor scores are clamped into `[SCORE_FLOOR, 1.0]`, which
/// keeps every score strictly positive as the payoff formulas require.
pub const SCORE_FLOOR: f64 = 0.05;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ScenarioError),
    #[error("normalization bounds have no width: [{lo}, {hi}]")]
    DegenerateBounds { lo: f64, hi: f64 },
    #[error("simulation integrity: {0}")]
    Integrity(String),
}

impl From<EventLogError> for SimError {
    fn from(e: EventLogError) -> Self {
        SimError::Integrity(e.to_string())
    }
}

impl From<EnergyError> for SimError {
    fn from(e: EnergyError) -> Self {
        SimError::Integrity(e.to_string())
    }
}

pub fn ms_from_s(seconds: f64) -> u64 {
    (seconds * 1000.0).round() as u64
}

fn s_from_ms(ms: u64) -> f64 {
    ms as f64 / 1000.0
}

/// Per-object workflow stage. Objects move strictly forward; `Discarded`,
/// `Missed`, and `Done` are terminal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Idle,
    ImageCheck,
    SimilarityCheck,
    Classify,
    ConfidenceGate,
    SlowdownSecondImage,
    Decide,
    ExecuteRobot,
    ExecuteHuman,
    Validate,
    Done,
    Discarded,
    Missed,
}

impl Stage {
    pub fn is_terminal(self) -> bool {
        matches!(self, Stage::Done | Stage::Discarded | Stage::Missed)
    }

    /// Legal forward transitions. Baseline policies may jump from the gate
    /// straight to a decision (no slowdown), and any live object can miss.
    fn can_step(self, next: Stage) -> bool {
        if next == Stage::Missed {
            return !self.is_terminal();
        }
        matches!(
            (self, next),
            (Stage::Idle, Stage::ImageCheck)
                | (Stage::ImageCheck, Stage::Discarded)
                | (Stage::ImageCheck, Stage::SimilarityCheck)
                | (Stage::SimilarityCheck, Stage::Classify)
                | (Stage::Classify, Stage::ConfidenceGate)
                | (Stage::ConfidenceGate, Stage::ExecuteRobot)
                | (Stage::ConfidenceGate, Stage::SlowdownSecondImage)
                | (Stage::ConfidenceGate, Stage::Decide)
                | (Stage::SlowdownSecondImage, Stage::Decide)
                | (Stage::Decide, Stage::ExecuteRobot)
                | (Stage::Decide, Stage::ExecuteHuman)
                | (Stage::ExecuteRobot, Stage::Validate)
                | (Stage::ExecuteHuman, Stage::Validate)
                | (Stage::Validate, Stage::Done)
        )
    }
}

/// An object travelling on the belt.
#[derive(Debug, Clone)]
struct WorldObject {
    id: u64,
    true_color: String,
    is_novel: bool,
    is_empty_image: bool,
    arrival_ms: u64,
    /// Cumulative belt travel at arrival; current position on the belt is
    /// the belt travel since this mark.
    travel_mark_m: Option<f64>,
    stage: Stage,
}

/// Global belt state: piecewise-constant speed with a running travel
/// integral. Advancing only ever moves forward in time.
#[derive(Debug, Clone)]
struct Belt {
    t_ms: u64,
    travel_m: f64,
    speed_mps: f64,
}

impl Belt {
    fn new(speed_mps: f64) -> Self {
        Self {
            t_ms: 0,
            travel_m: 0.0,
            speed_mps,
        }
    }

    fn travel_at(&self, t_ms: u64) -> f64 {
        debug_assert!(t_ms >= self.t_ms);
        self.travel_m + s_from_ms(t_ms - self.t_ms) * self.speed_mps
    }

    fn set_speed(&mut self, t_ms: u64, speed_mps: f64) {
        self.travel_m = self.travel_at(t_ms);
        self.t_ms = t_ms;
        self.speed_mps = speed_mps;
    }

    /// Time at which cumulative travel reaches `target_m`, assuming the
    /// current speed persists. Returns the segment start if already passed.
    fn time_to_reach(&self, target_m: f64) -> u64 {
        if target_m <= self.travel_m {
            return self.t_ms;
        }
        let dt_s = (target_m - self.travel_m) / self.speed_mps;
        self.t_ms + ms_from_s(dt_s)
    }
}

/// Result of one classification attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub eps: f64,
    pub label: String,
    pub correct: bool,
}

/// Samples a confidence and a predicted label for one image.
///
/// First images draw from the known or novel confidence distribution;
/// second images add the slowdown boost to the prior confidence. Either way
/// the confidence is clamped into `[EPS_MIN, EPS_MAX]` and the prediction is
/// correct with probability `eps` (or the configured override). Wrong labels
/// are drawn uniformly from the other colors seen so far; when no other
/// color exists yet the prediction can only be the true color.
pub fn classify(
    true_color: &str,
    is_novel: bool,
    prior_eps: Option<f64>,
    classifier: &ClassifierConfig,
    palette: &[String],
    rng: &mut RandomSource,
) -> Classification {
    let eps = match prior_eps {
        Some(prior) => {
            let boost = rng.normal(
                classifier.second_image_boost_mean,
                classifier.second_image_boost_spread,
            );
            prior + boost
        }
        None => {
            if is_novel {
                rng.normal(classifier.eps_novel_mean, classifier.eps_novel_spread)
            } else {
                rng.normal(classifier.eps_known_mean, classifier.eps_known_spread)
            }
        }
    }
    .clamp(EPS_MIN, EPS_MAX);
    let p_correct = classifier.correct_prob.unwrap_or(eps);
    let mut correct = rng.uniform() < p_correct;
    let label = if correct {
        true_color.to_string()
    } else {
        let candidates: Vec<&String> = palette.iter().filter(|c| c.as_str() != true_color).collect();
        if candidates.is_empty() {
            correct = true;
            true_color.to_string()
        } else {
            candidates[rng.index(candidates.len())].clone()
        }
    };
    Classification { eps, label, correct }
}

/// Rescales a raw measurement onto `[SCORE_FLOOR, 1.0]` against reference
/// bounds: the lower bound maps to the floor, the upper bound to 1, and
/// out-of-range measurements clamp.
pub fn normalize_score(raw: f64, bounds: Bounds) -> Result<f64, SimError> {
    let width = bounds.hi - bounds.lo;
    if width <= 0.0 || !width.is_finite() {
        return Err(SimError::DegenerateBounds {
            lo: bounds.lo,
            hi: bounds.hi,
        });
    }
    let t = (raw - bounds.lo) / width;
    Ok((SCORE_FLOOR + (1.0 - SCORE_FLOOR) * t).clamp(SCORE_FLOOR, 1.0))
}

/// Measures the four raw factor quantities over the trailing window of the
/// event log and normalizes them into game-ready scores.
///
/// Raw quantities: mean human action duration, mean arm move duration, the
/// human-interaction count, and CO2e grams per completed object. Quantities
/// with no samples in the window fall back to the configured priors.
pub fn measure_factors(
    events: &[Event],
    now_ms: u64,
    factors: &FactorConfig,
    carbon_intensity_g_per_kwh: f64,
) -> Result<SystemFactors, SimError> {
    let window_start = now_ms.saturating_sub(ms_from_s(factors.window_s));
    let mut human_durations: Vec<f64> = Vec::new();
    let mut arm_durations: Vec<f64> = Vec::new();
    let mut joules = 0.0;
    let mut objects_done = 0u64;
    let mut any = false;
    for e in events
        .iter()
        .filter(|e| e.t_ms >= window_start && e.t_ms <= now_ms)
    {
        any = true;
        match &e.kind {
            EventKind::HumanPlaced { duration_s, .. }
            | EventKind::Correction { duration_s }
            | EventKind::Retrieved { duration_s } => human_durations.push(*duration_s),
            EventKind::ArmPlaced { duration_s, .. } => arm_durations.push(*duration_s),
            EventKind::Energy { joules: j, .. } => joules += j,
            EventKind::ObjectDone { .. } => objects_done += 1,
            _ => {}
        }
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let priors = &factors.priors;
    let (raw_human, raw_arm, raw_inter, raw_co2) = if !any {
        (
            priors.human_time_s,
            priors.arm_time_s,
            priors.interactions,
            priors.co2_g_per_object,
        )
    } else {
        let raw_human = if human_durations.is_empty() {
            priors.human_time_s
        } else {
            mean(&human_durations)
        };
        let raw_arm = if arm_durations.is_empty() {
            priors.arm_time_s
        } else {
            mean(&arm_durations)
        };
        let raw_inter = human_durations.len() as f64;
        let raw_co2 = if objects_done == 0 {
            priors.co2_g_per_object
        } else {
            joules / JOULES_PER_KWH * carbon_intensity_g_per_kwh / objects_done as f64
        };
        (raw_human, raw_arm, raw_inter, raw_co2)
    };
    let b = &factors.bounds;
    SystemFactors::new(
        normalize_score(raw_human, b.human_time_s)?,
        normalize_score(raw_arm, b.arm_time_s)?,
        normalize_score(raw_inter, b.interactions)?,
        normalize_score(raw_co2, b.co2_g_per_object)?,
    )
    .map_err(|e| SimError::Integrity(e.to_string()))
}

/// Raw counters accumulated online during a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counters {
    pub objects_total: u64,
    pub discarded: u64,
    pub robot_placed: u64,
    pub human_placed: u64,
    pub missed: u64,
    pub corrections: u64,
    pub human_interactions: u64,
    pub in_flight_at_end: u64,
}

impl Counters {
    /// `arrived == discarded + robot + human + missed + in_flight`.
    pub fn conserved(&self) -> bool {
        self.objects_total
            == self.discarded + self.robot_placed + self.human_placed + self.missed
                + self.in_flight_at_end
    }
}

/// Everything one simulation run produces.
#[derive(Debug)]
pub struct SimOutput {
    pub log: EventLog,
    pub ledger: EnergyLedger,
    pub counters: Counters,
}

/// Runs one scenario to its horizon.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<SimOutput, SimError> {
    cfg.validate()?;
    let mut engine = Engine::new(cfg);
    engine.run()?;
    debug_assert!(engine.counters.conserved());
    Ok(SimOutput {
        log: engine.log,
        ledger: engine.ledger,
        counters: engine.counters,
    })
}

enum StageOutcome {
    /// Station is free again at this time.
    Done(u64),
    /// The horizon cut the pipeline short; the object stays in flight.
    Truncated,
}

struct Engine<'a> {
    cfg: &'a ScenarioConfig,
    rng: RandomSource,
    log: EventLog,
    ledger: EnergyLedger,
    counters: Counters,
    belt: Belt,
    horizon_ms: u64,
    classify_ms: u64,
    objects: Vec<WorldObject>,
    /// Index of the next object whose arrival has not been logged yet.
    next_arrival_log: usize,
    /// Colors that have appeared on a streamed image, in first-seen order.
    palette: Vec<String>,
    minted_colors: u64,
    active_slowdown: Option<(u64, u64)>,
    slowdown_total_ms: u64,
}

impl<'a> Engine<'a> {
    fn new(cfg: &'a ScenarioConfig) -> Self {
        Engine {
            cfg,
            rng: RandomSource::new(cfg.seed),
            log: EventLog::new(),
            ledger: EnergyLedger::new(),
            counters: Counters::default(),
            belt: Belt::new(cfg.conveyor.speed_mps),
            horizon_ms: ms_from_s(cfg.duration_s),
            classify_ms: ms_from_s(cfg.classifier.classify_time_s),
            objects: Vec::new(),
            next_arrival_log: 0,
            palette: Vec::new(),
            minted_colors: 0,
            active_slowdown: None,
            slowdown_total_ms: 0,
        }
    }

    fn mint_color(&mut self) -> String {
        let color = format!("color-{}", self.minted_colors);
        self.minted_colors += 1;
        color
    }

    /// Draws every arrival up front: times from the seeded exponential
    /// process, the empty-image flag, and the color (known colors are picked
    /// from what has already appeared; otherwise a new one is minted).
    fn generate_arrivals(&mut self) {
        for _ in 0..self.cfg.initial_known_colors {
            let c = self.mint_color();
            self.palette.push(c);
        }
        let rate_per_s = self.cfg.arrival_rate_per_min / 60.0;
        let mut t_s = 0.0;
        let mut id = 0u64;
        loop {
            t_s += self.rng.exponential(rate_per_s);
            let t_ms = ms_from_s(t_s);
            if t_ms >= self.horizon_ms {
                break;
            }
            let is_empty = self.rng.uniform() < self.cfg.empty_image_fraction;
            let pick_known = self.rng.uniform() < self.cfg.known_color_fraction;
            let (color, is_novel) = if pick_known && !self.palette.is_empty() {
                (self.palette[self.rng.index(self.palette.len())].clone(), false)
            } else {
                (self.mint_color(), true)
            };
            if !is_empty && is_novel {
                self.palette.push(color.clone());
            }
            self.objects.push(WorldObject {
                id,
                true_color: color,
                is_novel,
                is_empty_image: is_empty,
                arrival_ms: t_ms,
                travel_mark_m: None,
                stage: Stage::Idle,
            });
            id += 1;
        }
        self.counters.objects_total = id;
    }

    fn step_stage(&mut self, idx: usize, next: Stage) -> Result<(), SimError> {
        let current = self.objects[idx].stage;
        if !current.can_step(next) {
            return Err(SimError::Integrity(format!(
                "illegal stage transition {current:?} -> {next:?} for object {}",
                self.objects[idx].id
            )));
        }
        self.objects[idx].stage = next;
        Ok(())
    }

    /// Logs arrival-time events (arrival, empty-image discard, similarity,
    /// queue insertion) for every object that has arrived by `t_ms`.
    fn flush_arrivals(&mut self, t_ms: u64) -> Result<(), SimError> {
        while self.next_arrival_log < self.objects.len()
            && self.objects[self.next_arrival_log].arrival_ms <= t_ms
        {
            let idx = self.next_arrival_log;
            self.next_arrival_log += 1;
            let (at, color, is_empty, is_novel, id) = {
                let o = &self.objects[idx];
                (o.arrival_ms, o.true_color.clone(), o.is_empty_image, o.is_novel, o.id)
            };
            self.objects[idx].travel_mark_m = Some(self.belt.travel_at(at));
            self.step_stage(idx, Stage::ImageCheck)?;
            self.push(at, Some(id), EventKind::Arrival { color })?;
            if is_empty {
                self.push(at, Some(id), EventKind::ImageEmpty)?;
                self.push(at, Some(id), EventKind::ObjectDone { outcome: Outcome::Discarded })?;
                self.step_stage(idx, Stage::Discarded)?;
                self.counters.discarded += 1;
            } else {
                self.step_stage(idx, Stage::SimilarityCheck)?;
                self.push(at, Some(id), EventKind::Similarity { novel: is_novel })?;
                if is_novel {
                    self.push(at, Some(id), EventKind::QueueInsert)?;
                }
            }
        }
        Ok(())
    }

    /// Appends an event after flushing earlier arrivals, keeping the log in
    /// time order.
    fn push(&mut self, t_ms: u64, object_id: Option<u64>, kind: EventKind) -> Result<(), SimError> {
        self.log.push(Event::new(t_ms, object_id, kind))?;
        Ok(())
    }

    fn event(&mut self, t_ms: u64, object_id: Option<u64>, kind: EventKind) -> Result<(), SimError> {
        self.flush_arrivals(t_ms)?;
        self.push(t_ms, object_id, kind)
    }

    /// Records a ledger entry and mirrors it into the event log.
    fn meter(
        &mut self,
        t_ms: u64,
        object_id: Option<u64>,
        source: EnergySource,
        power_w: f64,
        duration_s: f64,
    ) -> Result<(), SimError> {
        let entry = self.ledger.record(source, power_w, duration_s)?;
        self.event(
            t_ms,
            object_id,
            EventKind::Energy {
                source,
                power_w: entry.power_w,
                duration_s: entry.duration_s,
                joules: entry.joules,
            },
        )
    }

    fn exit_target(&self, idx: usize) -> f64 {
        self.objects[idx].travel_mark_m.expect("arrival flushed") + self.cfg.conveyor.picking_area_m
    }

    fn human_action_s(&mut self) -> f64 {
        let reaction = self.rng.normal(
            self.cfg.human.reaction_mean_s,
            self.cfg.human.reaction_spread_s,
        );
        reaction.max(0.0) + self.cfg.human.correction_time_s
    }

    fn run(&mut self) -> Result<(), SimError> {
        let policy_label = self.cfg.policy.label();
        self.push(
            0,
            None,
            EventKind::RunStart {
                schema_version: crate::scenario::SCHEMA_VERSION,
                scenario_id: self.cfg.id.clone(),
                seed: self.cfg.seed,
                policy: policy_label,
            },
        )?;
        self.generate_arrivals();

        let mut station_free = 0u64;
        for idx in 0..self.objects.len() {
            if self.objects[idx].is_empty_image {
                continue;
            }
            let start = self.objects[idx].arrival_ms.max(station_free);
            if start >= self.horizon_ms {
                break;
            }
            match self.process_object(idx, start)? {
                StageOutcome::Done(t) => station_free = t,
                StageOutcome::Truncated => break,
            }
        }

        // Horizon teardown: log remaining arrivals, close any open slowdown,
        // account the belt's nominal-speed energy, and close the run.
        self.flush_arrivals(self.horizon_ms)?;
        if let Some((obj_id, since)) = self.active_slowdown.take() {
            self.close_slowdown(obj_id, since, self.horizon_ms)?;
        }
        let nominal_s = s_from_ms(self.horizon_ms - self.slowdown_total_ms);
        self.meter(
            self.horizon_ms,
            None,
            EnergySource::Conveyor,
            self.cfg.conveyor.power_w,
            nominal_s,
        )?;
        self.push(
            self.horizon_ms,
            None,
            EventKind::RunEnd {
                objects: self.counters.objects_total,
            },
        )?;

        self.counters.in_flight_at_end = self.counters.objects_total
            - self.counters.discarded
            - self.counters.robot_placed
            - self.counters.human_placed
            - self.counters.missed;
        Ok(())
    }

    fn close_slowdown(&mut self, obj_id: u64, since_ms: u64, now_ms: u64) -> Result<(), SimError> {
        let duration_s = s_from_ms(now_ms - since_ms);
        self.meter(
            now_ms,
            Some(obj_id),
            EnergySource::HumanAid,
            self.cfg.conveyor.power_w,
            duration_s,
        )?;
        self.event(now_ms, Some(obj_id), EventKind::SpeedRestored)?;
        self.belt.set_speed(now_ms, self.cfg.conveyor.speed_mps);
        self.slowdown_total_ms += now_ms - since_ms;
        Ok(())
    }

    fn process_object(&mut self, idx: usize, start: u64) -> Result<StageOutcome, SimError> {
        self.flush_arrivals(start)?;
        let id = self.objects[idx].id;

        // Gone past the picking area while waiting for the station?
        if self.belt.travel_at(start) >= self.exit_target(idx) {
            return self.miss(idx, start);
        }

        // First image: inference occupies the station for the classify time.
        let t1 = start + self.classify_ms;
        if t1 > self.horizon_ms {
            return Ok(StageOutcome::Truncated);
        }
        self.step_stage(idx, Stage::Classify)?;
        let first = {
            let o = &self.objects[idx];
            let (color, novel) = (o.true_color.clone(), o.is_novel);
            classify(&color, novel, None, &self.cfg.classifier, &self.palette, &mut self.rng)
        };
        self.event(
            t1,
            Some(id),
            EventKind::Classified {
                eps: first.eps,
                label: first.label.clone(),
                second: false,
            },
        )?;
        self.meter(
            t1,
            Some(id),
            EnergySource::Compute,
            self.cfg.classifier.compute_power_w,
            self.cfg.classifier.classify_time_s,
        )?;
        self.step_stage(idx, Stage::ConfidenceGate)?;

        match self.cfg.policy.clone() {
            PolicyKind::AlwaysRobot => {
                self.step_stage(idx, Stage::Decide)?;
                self.log_fixed_decision(t1, id, Action::Robot)?;
                self.execute_robot(idx, t1, &first)
            }
            PolicyKind::AlwaysHuman => {
                self.step_stage(idx, Stage::Decide)?;
                self.log_fixed_decision(t1, id, Action::Human)?;
                self.execute_human(idx, t1)
            }
            policy @ (PolicyKind::Gresilience { .. } | PolicyKind::Threshold { .. }) => {
                let gate = match policy {
                    PolicyKind::Gresilience { eps_high, .. } => eps_high,
                    PolicyKind::Threshold { cutoff } => cutoff,
                    _ => unreachable!(),
                };
                if first.eps >= gate {
                    self.event(t1, Some(id), EventKind::Gate { confident: true })?;
                    self.step_stage(idx, Stage::ExecuteRobot)?;
                    return self.execute_robot_placed(idx, t1, &first);
                }
                self.event(t1, Some(id), EventKind::Gate { confident: false })?;
                self.step_stage(idx, Stage::SlowdownSecondImage)?;
                self.event(
                    t1,
                    Some(id),
                    EventKind::Slowdown {
                        factor: self.cfg.conveyor.slowdown_factor,
                    },
                )?;
                self.belt.set_speed(
                    t1,
                    self.cfg.conveyor.speed_mps * self.cfg.conveyor.slowdown_factor,
                );
                self.active_slowdown = Some((id, t1));

                let t2 = t1 + self.classify_ms;
                if t2 > self.horizon_ms {
                    return Ok(StageOutcome::Truncated);
                }
                let second = {
                    let o = &self.objects[idx];
                    let (color, novel) = (o.true_color.clone(), o.is_novel);
                    classify(
                        &color,
                        novel,
                        Some(first.eps),
                        &self.cfg.classifier,
                        &self.palette,
                        &mut self.rng,
                    )
                };
                self.event(
                    t2,
                    Some(id),
                    EventKind::Classified {
                        eps: second.eps,
                        label: second.label.clone(),
                        second: true,
                    },
                )?;
                self.meter(
                    t2,
                    Some(id),
                    EnergySource::Compute,
                    self.cfg.classifier.compute_power_w,
                    self.cfg.classifier.classify_time_s,
                )?;

                self.step_stage(idx, Stage::Decide)?;
                self.flush_arrivals(t2)?;
                let factors = measure_factors(
                    self.log.events(),
                    t2,
                    &self.cfg.factors,
                    self.carbon_intensity(),
                )?;
                self.event(
                    t2,
                    Some(id),
                    EventKind::Factors {
                        human_time: factors.human_time,
                        arm_time: factors.arm_time,
                        interaction_reduction: factors.interaction_reduction,
                        co2_reduction: factors.co2_reduction,
                    },
                )?;
                let decision = decide(second.eps, &factors, &policy, &mut self.rng)
                    .map_err(|e| SimError::Integrity(e.to_string()))?;
                let (sigma_p1, sigma_p2, eu_p1, eu_p2) = match &decision.solution {
                    Some(sol) => (
                        Some(sol.msne.p1_robot),
                        Some(sol.msne.p2_robot),
                        Some(sol.msne_payoff_p1),
                        Some(sol.msne_payoff_p2),
                    ),
                    None => (None, None, None, None),
                };
                self.event(
                    t2,
                    Some(id),
                    EventKind::Decision {
                        action: decision.action,
                        rationale: decision.rationale,
                        p_robot: decision.probability_robot,
                        sigma_p1,
                        sigma_p2,
                        eu_p1,
                        eu_p2,
                        fallback: decision.sampling_fallback,
                    },
                )?;
                match decision.action {
                    Action::Robot => self.execute_robot(idx, t2, &second),
                    Action::Human => self.execute_human(idx, t2),
                }
            }
        }
    }

    fn carbon_intensity(&self) -> f64 {
        self.cfg.carbon_intensity_g_per_kwh
    }

    fn log_fixed_decision(&mut self, t: u64, id: u64, action: Action) -> Result<(), SimError> {
        self.event(
            t,
            Some(id),
            EventKind::Decision {
                action,
                rationale: Rationale::PolicyFixed,
                p_robot: None,
                sigma_p1: None,
                sigma_p2: None,
                eu_p1: None,
                eu_p2: None,
                fallback: false,
            },
        )
    }

    /// Meters along the belt the object has travelled since its arrival.
    fn position_m(&self, idx: usize, t_ms: u64) -> f64 {
        self.belt.travel_at(t_ms) - self.objects[idx].travel_mark_m.expect("arrival flushed")
    }

    fn execute_robot(
        &mut self,
        idx: usize,
        t_decide: u64,
        classification: &Classification,
    ) -> Result<StageOutcome, SimError> {
        self.step_stage(idx, Stage::ExecuteRobot)?;
        self.execute_robot_placed(idx, t_decide, classification)
    }

    /// Arm pick-and-place plus validation; assumes the stage is already
    /// `ExecuteRobot`.
    fn execute_robot_placed(
        &mut self,
        idx: usize,
        t_decide: u64,
        classification: &Classification,
    ) -> Result<StageOutcome, SimError> {
        let id = self.objects[idx].id;
        let completion = t_decide + ms_from_s(self.cfg.arm.move_time_s);
        let exit = self.belt.time_to_reach(self.exit_target(idx));
        if completion > exit {
            return self.miss(idx, t_decide.max(exit));
        }
        if completion > self.horizon_ms {
            return Ok(StageOutcome::Truncated);
        }
        self.flush_arrivals(completion)?;
        let position_m = self.position_m(idx, completion);
        self.push(
            completion,
            Some(id),
            EventKind::ArmPlaced {
                label: classification.label.clone(),
                correct: classification.correct,
                duration_s: self.cfg.arm.move_time_s,
                position_m,
            },
        )?;
        self.meter(
            completion,
            Some(id),
            EnergySource::Arm,
            self.cfg.arm.power_w,
            self.cfg.arm.move_time_s,
        )?;
        self.step_stage(idx, Stage::Validate)?;
        if classification.correct {
            self.event(completion, Some(id), EventKind::Validated)?;
            self.finish(idx, completion, Outcome::RobotPlaced)
        } else {
            // The human validates, spots the misplacement, and re-places.
            let duration_s = self.human_action_s();
            let t_corr = completion + ms_from_s(duration_s);
            if t_corr > self.horizon_ms {
                return Ok(StageOutcome::Truncated);
            }
            self.event(t_corr, Some(id), EventKind::Correction { duration_s })?;
            self.counters.corrections += 1;
            self.counters.human_interactions += 1;
            self.finish(idx, t_corr, Outcome::RobotPlaced)
        }
    }

    fn execute_human(&mut self, idx: usize, t_decide: u64) -> Result<StageOutcome, SimError> {
        self.step_stage(idx, Stage::ExecuteHuman)?;
        let id = self.objects[idx].id;
        let duration_s = self.human_action_s();
        let completion = t_decide + ms_from_s(duration_s);
        let exit = self.belt.time_to_reach(self.exit_target(idx));
        if completion > exit {
            return self.miss(idx, t_decide.max(exit));
        }
        if completion > self.horizon_ms {
            return Ok(StageOutcome::Truncated);
        }
        self.flush_arrivals(completion)?;
        let position_m = self.position_m(idx, completion);
        self.push(
            completion,
            Some(id),
            EventKind::HumanPlaced {
                duration_s,
                position_m,
            },
        )?;
        self.counters.human_interactions += 1;
        self.step_stage(idx, Stage::Validate)?;
        self.event(completion, Some(id), EventKind::Validated)?;
        self.finish(idx, completion, Outcome::HumanPlaced)
    }

    /// The object left the picking area unresolved: a human retrieves it at
    /// a fixed time penalty.
    fn miss(&mut self, idx: usize, t_missed: u64) -> Result<StageOutcome, SimError> {
        let id = self.objects[idx].id;
        if t_missed > self.horizon_ms {
            return Ok(StageOutcome::Truncated);
        }
        self.step_stage(idx, Stage::Missed)?;
        self.flush_arrivals(t_missed)?;
        let position_m = self.position_m(idx, t_missed);
        self.push(t_missed, Some(id), EventKind::Missed { position_m })?;
        let retrieval_s = self.cfg.human.retrieval_time_s;
        let t_done = t_missed + ms_from_s(retrieval_s);
        if t_done > self.horizon_ms {
            return Ok(StageOutcome::Truncated);
        }
        self.event(t_done, Some(id), EventKind::Retrieved { duration_s: retrieval_s })?;
        self.counters.human_interactions += 1;
        self.counters.missed += 1;
        self.push(t_done, Some(id), EventKind::ObjectDone { outcome: Outcome::Missed })?;
        if let Some((owner, since)) = self.active_slowdown.take() {
            debug_assert_eq!(owner, id);
            self.close_slowdown(owner, since, t_done)?;
        }
        Ok(StageOutcome::Done(t_done))
    }

    fn finish(&mut self, idx: usize, t: u64, outcome: Outcome) -> Result<StageOutcome, SimError> {
        let id = self.objects[idx].id;
        self.step_stage(idx, Stage::Done)?;
        match outcome {
            Outcome::RobotPlaced => self.counters.robot_placed += 1,
            Outcome::HumanPlaced => self.counters.human_placed += 1,
            _ => return Err(SimError::Integrity("finish used for non-placement".into())),
        }
        self.event(t, Some(id), EventKind::ObjectDone { outcome })?;
        if let Some((owner, since)) = self.active_slowdown.take() {
            debug_assert_eq!(owner, id);
            self.close_slowdown(owner, since, t)?;
        }
        Ok(StageOutcome::Done(t))
    }
}
