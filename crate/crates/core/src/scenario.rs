//! Scenario configuration: the TOML schema driving a simulation run, its
//! validation, parameter patching for sweeps, and policy override parsing.
//!
//! Parsing is fail-closed: unknown keys are rejected everywhere, and every
//! range violation reports the offending field path.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decision::PolicyKind;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("failed to read scenario file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("invalid scenario field {path}: {reason}")]
    InvalidField { path: String, reason: String },
    #[error("invalid policy spec `{spec}`: {reason}")]
    PolicySpec { spec: String, reason: String },
    #[error("unknown or non-numeric sweep parameter `{0}`")]
    SweepParam(String),
    #[error("invalid range `{range}`: {reason}")]
    Range { range: String, reason: String },
}

/// Inclusive lower/upper reference bounds used for min-max normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    fn validate(&self, path: &str) -> Result<(), ScenarioError> {
        if !self.lo.is_finite() || !self.hi.is_finite() || self.hi <= self.lo {
            return Err(ScenarioError::InvalidField {
                path: path.to_string(),
                reason: format!("bounds must be finite with hi > lo, got [{}, {}]", self.lo, self.hi),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConveyorConfig {
    /// Nominal belt speed in meters per second.
    pub speed_mps: f64,
    /// Length of the segment within which an object can still be placed.
    pub picking_area_m: f64,
    /// Speed multiplier applied while an uncertain object is being resolved.
    pub slowdown_factor: f64,
    pub power_w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierConfig {
    /// Confidence distribution for colors the system has already seen.
    pub eps_known_mean: f64,
    pub eps_known_spread: f64,
    /// Confidence distribution for first-appearance colors.
    pub eps_novel_mean: f64,
    pub eps_novel_spread: f64,
    /// Additive confidence gain from the slowed-down second image.
    pub second_image_boost_mean: f64,
    #[serde(default)]
    pub second_image_boost_spread: f64,
    /// Inference latency per image.
    pub classify_time_s: f64,
    pub compute_power_w: f64,
    /// When set, overrides the calibration assumption `P(correct) = eps`
    /// with a constant correctness probability.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct_prob: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HumanConfig {
    /// Reaction delay before the operator starts acting.
    pub reaction_mean_s: f64,
    pub reaction_spread_s: f64,
    /// Handling time for one classification or correction action.
    pub correction_time_s: f64,
    /// Fixed penalty for retrieving an object that left the picking area.
    pub retrieval_time_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmConfig {
    /// Pick-and-place move duration.
    pub move_time_s: f64,
    pub power_w: f64,
}

/// Raw measurements assumed before any events exist in the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorPriors {
    pub human_time_s: f64,
    pub arm_time_s: f64,
    pub interactions: f64,
    pub co2_g_per_object: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorBounds {
    pub human_time_s: Bounds,
    pub arm_time_s: Bounds,
    pub interactions: Bounds,
    pub co2_g_per_object: Bounds,
}

/// How raw event measurements become the game's normalized factor scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorConfig {
    /// Length of the trailing measurement window.
    pub window_s: f64,
    pub priors: FactorPriors,
    pub bounds: FactorBounds,
}

impl Default for FactorConfig {
    fn default() -> Self {
        Self {
            window_s: 120.0,
            priors: FactorPriors {
                human_time_s: 3.0,
                arm_time_s: 2.0,
                interactions: 5.0,
                co2_g_per_object: 0.05,
            },
            bounds: FactorBounds {
                human_time_s: Bounds { lo: 0.0, hi: 10.0 },
                arm_time_s: Bounds { lo: 0.0, hi: 5.0 },
                interactions: Bounds { lo: 0.0, hi: 20.0 },
                co2_g_per_object: Bounds { lo: 0.0, hi: 0.5 },
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreWeights {
    pub resilience: f64,
    pub green: f64,
    pub human: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreBounds {
    pub recovery_mean_s: Bounds,
    pub co2e_g: Bounds,
    pub human_interactions: Bounds,
}

/// Weights and scale references for the combined policy-comparison score.
/// The score is an artifact of this harness, not a quantity from the system
/// model itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreConfig {
    pub weights: ScoreWeights,
    pub bounds: ScoreBounds,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self {
            weights: ScoreWeights {
                resilience: 0.5,
                green: 0.3,
                human: 0.2,
            },
            bounds: ScoreBounds {
                recovery_mean_s: Bounds { lo: 0.0, hi: 30.0 },
                co2e_g: Bounds { lo: 0.0, hi: 50.0 },
                human_interactions: Bounds { lo: 0.0, hi: 100.0 },
            },
        }
    }
}

/// Complete, validated description of one simulation scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub id: String,
    pub seed: u64,
    /// Simulated horizon in seconds.
    pub duration_s: f64,
    /// Object arrivals per minute (exponential inter-arrival times).
    pub arrival_rate_per_min: f64,
    /// Probability that an arriving object's color has been seen before.
    pub known_color_fraction: f64,
    /// Probability that the streamed image is empty and the object is discarded.
    #[serde(default)]
    pub empty_image_fraction: f64,
    /// Colors already taught before the run starts.
    #[serde(default)]
    pub initial_known_colors: u32,
    pub conveyor: ConveyorConfig,
    pub classifier: ClassifierConfig,
    pub human: HumanConfig,
    pub arm: ArmConfig,
    pub carbon_intensity_g_per_kwh: f64,
    #[serde(default)]
    pub factors: FactorConfig,
    #[serde(default)]
    pub score: ScoreConfig,
    pub policy: PolicyKind,
}

fn default_schema_version() -> u32 {
    SCHEMA_VERSION
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let field = |path: &str, reason: String| ScenarioError::InvalidField {
            path: path.to_string(),
            reason,
        };
        let positive = |path: &str, v: f64| -> Result<(), ScenarioError> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(field(path, format!("must be > 0, got {v}")))
            }
        };
        let nonnegative = |path: &str, v: f64| -> Result<(), ScenarioError> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(field(path, format!("must be >= 0, got {v}")))
            }
        };
        let probability = |path: &str, v: f64| -> Result<(), ScenarioError> {
            if v.is_finite() && (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(field(path, format!("must lie in [0, 1], got {v}")))
            }
        };

        if self.schema_version != SCHEMA_VERSION {
            return Err(field(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", self.schema_version),
            ));
        }
        if self.id.is_empty() || self.id.contains(',') || self.id.contains('\n') {
            return Err(field(
                "id",
                "must be nonempty and contain no commas or newlines".to_string(),
            ));
        }
        positive("duration_s", self.duration_s)?;
        positive("arrival_rate_per_min", self.arrival_rate_per_min)?;
        probability("known_color_fraction", self.known_color_fraction)?;
        probability("empty_image_fraction", self.empty_image_fraction)?;

        positive("conveyor.speed_mps", self.conveyor.speed_mps)?;
        positive("conveyor.picking_area_m", self.conveyor.picking_area_m)?;
        if !(self.conveyor.slowdown_factor.is_finite()
            && self.conveyor.slowdown_factor > 0.0
            && self.conveyor.slowdown_factor <= 1.0)
        {
            return Err(field(
                "conveyor.slowdown_factor",
                format!("must lie in (0, 1], got {}", self.conveyor.slowdown_factor),
            ));
        }
        positive("conveyor.power_w", self.conveyor.power_w)?;

        probability("classifier.eps_known_mean", self.classifier.eps_known_mean)?;
        nonnegative("classifier.eps_known_spread", self.classifier.eps_known_spread)?;
        probability("classifier.eps_novel_mean", self.classifier.eps_novel_mean)?;
        nonnegative("classifier.eps_novel_spread", self.classifier.eps_novel_spread)?;
        nonnegative(
            "classifier.second_image_boost_mean",
            self.classifier.second_image_boost_mean,
        )?;
        nonnegative(
            "classifier.second_image_boost_spread",
            self.classifier.second_image_boost_spread,
        )?;
        positive("classifier.classify_time_s", self.classifier.classify_time_s)?;
        positive("classifier.compute_power_w", self.classifier.compute_power_w)?;
        if let Some(p) = self.classifier.correct_prob {
            probability("classifier.correct_prob", p)?;
        }

        positive("human.reaction_mean_s", self.human.reaction_mean_s)?;
        nonnegative("human.reaction_spread_s", self.human.reaction_spread_s)?;
        positive("human.correction_time_s", self.human.correction_time_s)?;
        positive("human.retrieval_time_s", self.human.retrieval_time_s)?;

        positive("arm.move_time_s", self.arm.move_time_s)?;
        positive("arm.power_w", self.arm.power_w)?;

        nonnegative("carbon_intensity_g_per_kwh", self.carbon_intensity_g_per_kwh)?;

        positive("factors.window_s", self.factors.window_s)?;
        nonnegative("factors.priors.human_time_s", self.factors.priors.human_time_s)?;
        nonnegative("factors.priors.arm_time_s", self.factors.priors.arm_time_s)?;
        nonnegative("factors.priors.interactions", self.factors.priors.interactions)?;
        nonnegative(
            "factors.priors.co2_g_per_object",
            self.factors.priors.co2_g_per_object,
        )?;
        self.factors.bounds.human_time_s.validate("factors.bounds.human_time_s")?;
        self.factors.bounds.arm_time_s.validate("factors.bounds.arm_time_s")?;
        self.factors.bounds.interactions.validate("factors.bounds.interactions")?;
        self.factors
            .bounds
            .co2_g_per_object
            .validate("factors.bounds.co2_g_per_object")?;

        nonnegative("score.weights.resilience", self.score.weights.resilience)?;
        nonnegative("score.weights.green", self.score.weights.green)?;
        nonnegative("score.weights.human", self.score.weights.human)?;
        self.score.bounds.recovery_mean_s.validate("score.bounds.recovery_mean_s")?;
        self.score.bounds.co2e_g.validate("score.bounds.co2e_g")?;
        self.score
            .bounds
            .human_interactions
            .validate("score.bounds.human_interactions")?;

        self.policy.validate().map_err(|e| ScenarioError::InvalidField {
            path: "policy".to_string(),
            reason: e.to_string(),
        })?;
        Ok(())
    }

    /// Returns a copy with the numeric leaf at `dotted.path` replaced.
    ///
    /// Only leaves that already exist and hold numbers are patchable, so a
    /// typo cannot silently add configuration. The patched scenario is
    /// re-validated.
    pub fn with_param(&self, dotted_path: &str, value: f64) -> Result<Self, ScenarioError> {
        let mut root = serde_json::to_value(self).expect("config serializes");
        let mut node = &mut root;
        for segment in dotted_path.split('.') {
            node = node
                .as_object_mut()
                .and_then(|map| map.get_mut(segment))
                .ok_or_else(|| ScenarioError::SweepParam(dotted_path.to_string()))?;
        }
        if !node.is_number() {
            return Err(ScenarioError::SweepParam(dotted_path.to_string()));
        }
        // Integral values are written as integers so integer-typed fields
        // still deserialize.
        *node = if value.fract() == 0.0 && value.abs() < 9.0e15 {
            serde_json::Value::from(value as i64)
        } else {
            serde_json::Value::from(value)
        };
        let patched: ScenarioConfig = serde_json::from_value(root)
            .map_err(|e| ScenarioError::Parse(format!("patched {dotted_path}: {e}")))?;
        patched.validate()?;
        Ok(patched)
    }
}

/// A `start:stop:step` sweep range, inclusive of `stop` up to float slack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SweepRange {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let err = |reason: &str| ScenarioError::Range {
            range: text.to_string(),
            reason: reason.to_string(),
        };
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(err("expected start:stop:step"));
        }
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| err("components must be numbers"))?;
        let (start, stop, step) = (nums[0], nums[1], nums[2]);
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err(err("components must be finite"));
        }
        if step <= 0.0 {
            return Err(err("step must be > 0"));
        }
        if start > stop {
            return Err(err("start must be <= stop"));
        }
        Ok(Self { start, stop, step })
    }

    pub fn values(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.start + i as f64 * self.step).collect()
    }
}

/// Parses a policy override spec:
///
/// * `always-robot` | `always-human`
/// * `threshold:<cutoff>`
/// * `gresilience[:<eps_low>:<eps_high>[:<sampling>]]`
///
/// A bare `gresilience` keeps the scenario's own gresilience parameters when
/// the scenario already uses that policy, and falls back to the defaults
/// otherwise.
pub fn resolve_policy_spec(
    spec: &str,
    scenario_policy: &PolicyKind,
) -> Result<PolicyKind, ScenarioError> {
    use crate::decision::SamplingMode;

    let err = |reason: &str| ScenarioError::PolicySpec {
        spec: spec.to_string(),
        reason: reason.to_string(),
    };
    let parts: Vec<&str> = spec.split(':').collect();
    let policy = match parts.as_slice() {
        ["always-robot"] => PolicyKind::AlwaysRobot,
        ["always-human"] => PolicyKind::AlwaysHuman,
        ["threshold", cutoff] => PolicyKind::Threshold {
            cutoff: cutoff.parse().map_err(|_| err("cutoff must be a number"))?,
        },
        ["gresilience"] => match scenario_policy {
            PolicyKind::Gresilience { .. } => scenario_policy.clone(),
            _ => PolicyKind::gresilience_default(),
        },
        ["gresilience", lo, hi] | ["gresilience", lo, hi, _] => {
            let sampling = match parts.get(3) {
                None => SamplingMode::default(),
                Some(&"conditional") | Some(&"conditional_coordination") => {
                    SamplingMode::ConditionalCoordination
                }
                Some(&"p1") | Some(&"p1_marginal") => SamplingMode::P1Marginal,
                Some(&"p2") | Some(&"p2_marginal") => SamplingMode::P2Marginal,
                Some(other) => return Err(err(&format!("unknown sampling mode `{other}`"))),
            };
            PolicyKind::Gresilience {
                eps_low: lo.parse().map_err(|_| err("eps_low must be a number"))?,
                eps_high: hi.parse().map_err(|_| err("eps_high must be a number"))?,
                sampling,
            }
        }
        _ => return Err(err("unknown policy")),
    };
    policy.validate().map_err(|e| err(&e.to_string()))?;
    Ok(policy)
}
