//! The simulation event log and its newline-delimited text format.
//!
//! Each record is one line, `t_ms,kind,object_id,key=value;key=value;...`,
//! with `-` standing for "no object". The text form round-trips: parsing a
//! serialized log and serializing it again is byte-identical, which is what
//! makes replay verification possible.

use serde::Serialize;
use thiserror::Error;

use crate::decision::Rationale;
use crate::energy::EnergySource;
use crate::game::Action;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EventLogError {
    #[error("line {line_no}: {reason}")]
    Malformed { line_no: usize, reason: String },
    #[error("timestamps must be nondecreasing: {previous_ms} ms followed by {current_ms} ms")]
    OutOfOrder { previous_ms: u64, current_ms: u64 },
}

/// Terminal outcome recorded in an `object_done` event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    RobotPlaced,
    HumanPlaced,
    Discarded,
    Missed,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::RobotPlaced => "robot_placed",
            Outcome::HumanPlaced => "human_placed",
            Outcome::Discarded => "discarded",
            Outcome::Missed => "missed",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "robot_placed" => Some(Outcome::RobotPlaced),
            "human_placed" => Some(Outcome::HumanPlaced),
            "discarded" => Some(Outcome::Discarded),
            "missed" => Some(Outcome::Missed),
            _ => None,
        }
    }
}

/// Everything the simulator can log.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    RunStart {
        schema_version: u32,
        scenario_id: String,
        seed: u64,
        policy: String,
    },
    Arrival {
        color: String,
    },
    ImageEmpty,
    Similarity {
        novel: bool,
    },
    /// The object joined the unclassified queue (learning mode).
    QueueInsert,
    Classified {
        eps: f64,
        label: String,
        second: bool,
    },
    Gate {
        confident: bool,
    },
    Slowdown {
        factor: f64,
    },
    SpeedRestored,
    /// Factor scores measured for a game decision.
    Factors {
        human_time: f64,
        arm_time: f64,
        interaction_reduction: f64,
        co2_reduction: f64,
    },
    Decision {
        action: Action,
        rationale: Rationale,
        #[serde(skip_serializing_if = "Option::is_none")]
        p_robot: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        sigma_p1: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        sigma_p2: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        eu_p1: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        eu_p2: Option<f64>,
        fallback: bool,
    },
    ArmPlaced {
        label: String,
        correct: bool,
        duration_s: f64,
        position_m: f64,
    },
    HumanPlaced {
        duration_s: f64,
        position_m: f64,
    },
    Correction {
        duration_s: f64,
    },
    Validated,
    Missed {
        position_m: f64,
    },
    Retrieved {
        duration_s: f64,
    },
    ObjectDone {
        outcome: Outcome,
    },
    Energy {
        source: EnergySource,
        power_w: f64,
        duration_s: f64,
        joules: f64,
    },
    RunEnd {
        objects: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    pub t_ms: u64,
    pub object_id: Option<u64>,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl Event {
    pub fn new(t_ms: u64, object_id: Option<u64>, kind: EventKind) -> Self {
        Self { t_ms, object_id, kind }
    }

    /// One text record, without the trailing newline.
    pub fn to_line(&self) -> String {
        let (token, pairs) = self.kind.to_pairs();
        let object = match self.object_id {
            Some(id) => id.to_string(),
            None => "-".to_string(),
        };
        let payload = pairs
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";");
        format!("{},{},{},{}", self.t_ms, token, object, payload)
    }

    pub fn parse_line(line: &str, line_no: usize) -> Result<Self, EventLogError> {
        let malformed = |reason: String| EventLogError::Malformed { line_no, reason };
        let mut fields = line.splitn(4, ',');
        let t_ms: u64 = fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| malformed("bad timestamp".to_string()))?;
        let token = fields
            .next()
            .ok_or_else(|| malformed("missing kind".to_string()))?;
        let object = fields
            .next()
            .ok_or_else(|| malformed("missing object id".to_string()))?;
        let payload = fields
            .next()
            .ok_or_else(|| malformed("missing payload field".to_string()))?;
        let object_id = match object {
            "-" => None,
            id => Some(
                id.parse::<u64>()
                    .map_err(|_| malformed(format!("bad object id `{id}`")))?,
            ),
        };
        let mut pairs = Vec::new();
        if !payload.is_empty() {
            for piece in payload.split(';') {
                let (k, v) = piece
                    .split_once('=')
                    .ok_or_else(|| malformed(format!("bad payload pair `{piece}`")))?;
                pairs.push((k, v));
            }
        }
        let kind = EventKind::from_pairs(token, &pairs).map_err(malformed)?;
        Ok(Event::new(t_ms, object_id, kind))
    }
}

struct PairReader<'a> {
    pairs: &'a [(&'a str, &'a str)],
}

impl<'a> PairReader<'a> {
    fn get(&self, key: &str) -> Result<&'a str, String> {
        self.pairs
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| format!("missing key `{key}`"))
    }

    fn opt(&self, key: &str) -> Option<&'a str> {
        self.pairs.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }

    fn f64(&self, key: &str) -> Result<f64, String> {
        self.get(key)?
            .parse()
            .map_err(|_| format!("bad number for `{key}`"))
    }

    fn opt_f64(&self, key: &str) -> Result<Option<f64>, String> {
        self.opt(key)
            .map(|v| v.parse().map_err(|_| format!("bad number for `{key}`")))
            .transpose()
    }

    fn bool(&self, key: &str) -> Result<bool, String> {
        match self.get(key)? {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(format!("bad bool `{other}` for `{key}`")),
        }
    }

    fn u64(&self, key: &str) -> Result<u64, String> {
        self.get(key)?
            .parse()
            .map_err(|_| format!("bad integer for `{key}`"))
    }
}

fn action_token(a: Action) -> &'static str {
    match a {
        Action::Robot => "robot",
        Action::Human => "human",
    }
}

fn parse_action(s: &str) -> Result<Action, String> {
    match s {
        "robot" => Ok(Action::Robot),
        "human" => Ok(Action::Human),
        other => Err(format!("unknown action `{other}`")),
    }
}

fn rationale_token(r: Rationale) -> &'static str {
    match r {
        Rationale::HighConfidence => "high_confidence",
        Rationale::LowConfidence => "low_confidence",
        Rationale::GameSampled => "game_sampled",
        Rationale::PolicyFixed => "policy_fixed",
    }
}

fn parse_rationale(s: &str) -> Result<Rationale, String> {
    match s {
        "high_confidence" => Ok(Rationale::HighConfidence),
        "low_confidence" => Ok(Rationale::LowConfidence),
        "game_sampled" => Ok(Rationale::GameSampled),
        "policy_fixed" => Ok(Rationale::PolicyFixed),
        other => Err(format!("unknown rationale `{other}`")),
    }
}

impl EventKind {
    fn to_pairs(&self) -> (&'static str, Vec<(&'static str, String)>) {
        match self {
            EventKind::RunStart {
                schema_version,
                scenario_id,
                seed,
                policy,
            } => (
                "run_start",
                vec![
                    ("schema_version", schema_version.to_string()),
                    ("scenario_id", scenario_id.clone()),
                    ("seed", seed.to_string()),
                    ("policy", policy.clone()),
                ],
            ),
            EventKind::Arrival { color } => ("arrival", vec![("color", color.clone())]),
            EventKind::ImageEmpty => ("image_empty", vec![]),
            EventKind::Similarity { novel } => ("similarity", vec![("novel", novel.to_string())]),
            EventKind::QueueInsert => ("queue_insert", vec![]),
            EventKind::Classified { eps, label, second } => (
                "classified",
                vec![
                    ("eps", eps.to_string()),
                    ("label", label.clone()),
                    ("second", second.to_string()),
                ],
            ),
            EventKind::Gate { confident } => ("gate", vec![("confident", confident.to_string())]),
            EventKind::Slowdown { factor } => ("slowdown", vec![("factor", factor.to_string())]),
            EventKind::SpeedRestored => ("speed_restored", vec![]),
            EventKind::Factors {
                human_time,
                arm_time,
                interaction_reduction,
                co2_reduction,
            } => (
                "factors",
                vec![
                    ("human_time", human_time.to_string()),
                    ("arm_time", arm_time.to_string()),
                    ("interaction_reduction", interaction_reduction.to_string()),
                    ("co2_reduction", co2_reduction.to_string()),
                ],
            ),
            EventKind::Decision {
                action,
                rationale,
                p_robot,
                sigma_p1,
                sigma_p2,
                eu_p1,
                eu_p2,
                fallback,
            } => {
                let mut pairs = vec![
                    ("action", action_token(*action).to_string()),
                    ("rationale", rationale_token(*rationale).to_string()),
                ];
                for (key, value) in [
                    ("p_robot", p_robot),
                    ("sigma_p1", sigma_p1),
                    ("sigma_p2", sigma_p2),
                    ("eu_p1", eu_p1),
                    ("eu_p2", eu_p2),
                ] {
                    if let Some(v) = value {
                        pairs.push((key, v.to_string()));
                    }
                }
                pairs.push(("fallback", fallback.to_string()));
                ("decision", pairs)
            }
            EventKind::ArmPlaced {
                label,
                correct,
                duration_s,
                position_m,
            } => (
                "arm_placed",
                vec![
                    ("label", label.clone()),
                    ("correct", correct.to_string()),
                    ("duration_s", duration_s.to_string()),
                    ("position_m", position_m.to_string()),
                ],
            ),
            EventKind::HumanPlaced {
                duration_s,
                position_m,
            } => (
                "human_placed",
                vec![
                    ("duration_s", duration_s.to_string()),
                    ("position_m", position_m.to_string()),
                ],
            ),
            EventKind::Correction { duration_s } => (
                "correction",
                vec![("duration_s", duration_s.to_string())],
            ),
            EventKind::Validated => ("validated", vec![]),
            EventKind::Missed { position_m } => (
                "missed",
                vec![("position_m", position_m.to_string())],
            ),
            EventKind::Retrieved { duration_s } => (
                "retrieved",
                vec![("duration_s", duration_s.to_string())],
            ),
            EventKind::ObjectDone { outcome } => (
                "object_done",
                vec![("outcome", outcome.as_str().to_string())],
            ),
            EventKind::Energy {
                source,
                power_w,
                duration_s,
                joules,
            } => (
                "energy",
                vec![
                    ("source", source.as_str().to_string()),
                    ("power_w", power_w.to_string()),
                    ("duration_s", duration_s.to_string()),
                    ("joules", joules.to_string()),
                ],
            ),
            EventKind::RunEnd { objects } => ("run_end", vec![("objects", objects.to_string())]),
        }
    }

    fn from_pairs(token: &str, pairs: &[(&str, &str)]) -> Result<Self, String> {
        let r = PairReader { pairs };
        match token {
            "run_start" => Ok(EventKind::RunStart {
                schema_version: r.u64("schema_version")? as u32,
                scenario_id: r.get("scenario_id")?.to_string(),
                seed: r.u64("seed")?,
                policy: r.get("policy")?.to_string(),
            }),
            "arrival" => Ok(EventKind::Arrival {
                color: r.get("color")?.to_string(),
            }),
            "image_empty" => Ok(EventKind::ImageEmpty),
            "similarity" => Ok(EventKind::Similarity {
                novel: r.bool("novel")?,
            }),
            "queue_insert" => Ok(EventKind::QueueInsert),
            "classified" => Ok(EventKind::Classified {
                eps: r.f64("eps")?,
                label: r.get("label")?.to_string(),
                second: r.bool("second")?,
            }),
            "gate" => Ok(EventKind::Gate {
                confident: r.bool("confident")?,
            }),
            "slowdown" => Ok(EventKind::Slowdown {
                factor: r.f64("factor")?,
            }),
            "speed_restored" => Ok(EventKind::SpeedRestored),
            "factors" => Ok(EventKind::Factors {
                human_time: r.f64("human_time")?,
                arm_time: r.f64("arm_time")?,
                interaction_reduction: r.f64("interaction_reduction")?,
                co2_reduction: r.f64("co2_reduction")?,
            }),
            "decision" => Ok(EventKind::Decision {
                action: parse_action(r.get("action")?)?,
                rationale: parse_rationale(r.get("rationale")?)?,
                p_robot: r.opt_f64("p_robot")?,
                sigma_p1: r.opt_f64("sigma_p1")?,
                sigma_p2: r.opt_f64("sigma_p2")?,
                eu_p1: r.opt_f64("eu_p1")?,
                eu_p2: r.opt_f64("eu_p2")?,
                fallback: r.bool("fallback")?,
            }),
            "arm_placed" => Ok(EventKind::ArmPlaced {
                label: r.get("label")?.to_string(),
                correct: r.bool("correct")?,
                duration_s: r.f64("duration_s")?,
                position_m: r.f64("position_m")?,
            }),
            "human_placed" => Ok(EventKind::HumanPlaced {
                duration_s: r.f64("duration_s")?,
                position_m: r.f64("position_m")?,
            }),
            "correction" => Ok(EventKind::Correction {
                duration_s: r.f64("duration_s")?,
            }),
            "validated" => Ok(EventKind::Validated),
            "missed" => Ok(EventKind::Missed {
                position_m: r.f64("position_m")?,
            }),
            "retrieved" => Ok(EventKind::Retrieved {
                duration_s: r.f64("duration_s")?,
            }),
            "object_done" => Ok(EventKind::ObjectDone {
                outcome: Outcome::parse(r.get("outcome")?)
                    .ok_or_else(|| format!("unknown outcome `{}`", r.get("outcome").unwrap()))?,
            }),
            "energy" => Ok(EventKind::Energy {
                source: r.get("source")?.parse()?,
                power_w: r.f64("power_w")?,
                duration_s: r.f64("duration_s")?,
                joules: r.f64("joules")?,
            }),
            "run_end" => Ok(EventKind::RunEnd {
                objects: r.u64("objects")?,
            }),
            other => Err(format!("unknown event kind `{other}`")),
        }
    }
}

/// Append-only, time-ordered event trace of one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct EventLog {
    events: Vec<Event>,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a log without checking timestamp order; intended for tests and
    /// tooling that deliberately construct malformed traces.
    pub fn from_events_unchecked(events: Vec<Event>) -> Self {
        Self { events }
    }

    pub fn push(&mut self, event: Event) -> Result<(), EventLogError> {
        if let Some(last) = self.events.last() {
            if event.t_ms < last.t_ms {
                return Err(EventLogError::OutOfOrder {
                    previous_ms: last.t_ms,
                    current_ms: event.t_ms,
                });
            }
        }
        self.events.push(event);
        Ok(())
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Newline-delimited text export; one record per line, trailing newline.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&e.to_line());
            out.push('\n');
        }
        out
    }

    /// Parses a text export, enforcing nondecreasing timestamps.
    pub fn parse_text(text: &str) -> Result<Self, EventLogError> {
        let mut log = EventLog::new();
        for (idx, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let event = Event::parse_line(line, idx + 1)?;
            log.push(event)?;
        }
        Ok(log)
    }

    /// Structured export mirroring the text records, one JSON object per line.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("events serialize"));
            out.push('\n');
        }
        out
    }
}
