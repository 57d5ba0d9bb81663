//! Confidence-band decision engine. Classifications at the confidence
//! extremes are routed directly (high -> robot, low -> human); the ambiguous
//! band solves the gresilience game and samples an action from its mixed
//! equilibrium. Fixed-action and plain-threshold policies are provided as
//! comparison baselines.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{self, Action, Confidence, EquilibriumSolution, GameError, MixedStrategyProfile, P2ScaleMode, SystemFactors};
use crate::rng::RandomSource;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecisionError {
    #[error("confidence must lie in [0, 1], got {0}")]
    ConfidenceOutOfRange(f64),
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error(transparent)]
    Game(#[from] GameError),
}

/// How one physical action is sampled from the two per-player equilibrium
/// strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// Condition the product distribution on the coordinated outcomes:
    /// `P(robot) = s1*s2 / (s1*s2 + (1-s1)*(1-s2))`. Only coordinated
    /// profiles are executable system behaviors, so this is the default.
    #[default]
    ConditionalCoordination,
    /// Play the resilience player's marginal `s1`.
    P1Marginal,
    /// Play the green player's marginal `s2`.
    P2Marginal,
}

impl std::fmt::Display for SamplingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SamplingMode::ConditionalCoordination => f.write_str("conditional_coordination"),
            SamplingMode::P1Marginal => f.write_str("p1_marginal"),
            SamplingMode::P2Marginal => f.write_str("p2_marginal"),
        }
    }
}

fn default_eps_low() -> f64 {
    0.3
}
fn default_eps_high() -> f64 {
    0.7
}

/// Recovery policy for uncertain classifications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PolicyKind {
    /// Confidence thresholds at the extremes, gresilience-game sampling in
    /// the band between them.
    Gresilience {
        #[serde(default = "default_eps_low")]
        eps_low: f64,
        #[serde(default = "default_eps_high")]
        eps_high: f64,
        #[serde(default)]
        sampling: SamplingMode,
    },
    /// Baseline: the arm always recovers.
    AlwaysRobot,
    /// Baseline: the human always classifies; the arm never moves.
    AlwaysHuman,
    /// Baseline: robot if and only if confidence reaches the cutoff.
    Threshold { cutoff: f64 },
}

impl PolicyKind {
    pub fn gresilience_default() -> Self {
        PolicyKind::Gresilience {
            eps_low: default_eps_low(),
            eps_high: default_eps_high(),
            sampling: SamplingMode::default(),
        }
    }

    pub fn validate(&self) -> Result<(), DecisionError> {
        match *self {
            PolicyKind::Gresilience { eps_low, eps_high, .. } => {
                let ok = eps_low.is_finite()
                    && eps_high.is_finite()
                    && (0.0..=1.0).contains(&eps_low)
                    && (0.0..=1.0).contains(&eps_high)
                    && eps_low < eps_high;
                if !ok {
                    return Err(DecisionError::InvalidPolicy(format!(
                        "requires 0 <= eps_low < eps_high <= 1, got eps_low={eps_low}, eps_high={eps_high}"
                    )));
                }
                Ok(())
            }
            PolicyKind::Threshold { cutoff } => {
                if cutoff.is_finite() && (0.0..=1.0).contains(&cutoff) {
                    Ok(())
                } else {
                    Err(DecisionError::InvalidPolicy(format!(
                        "threshold cutoff must lie in [0, 1], got {cutoff}"
                    )))
                }
            }
            PolicyKind::AlwaysRobot | PolicyKind::AlwaysHuman => Ok(()),
        }
    }

    /// Short label used in reports and CSV rows.
    pub fn label(&self) -> String {
        match self {
            PolicyKind::Gresilience { .. } => "gresilience".to_string(),
            PolicyKind::AlwaysRobot => "always-robot".to_string(),
            PolicyKind::AlwaysHuman => "always-human".to_string(),
            PolicyKind::Threshold { cutoff } => format!("threshold:{cutoff}"),
        }
    }
}

/// Why a decision came out the way it did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rationale {
    HighConfidence,
    LowConfidence,
    GameSampled,
    PolicyFixed,
}

impl std::fmt::Display for Rationale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Rationale::HighConfidence => f.write_str("high_confidence"),
            Rationale::LowConfidence => f.write_str("low_confidence"),
            Rationale::GameSampled => f.write_str("game_sampled"),
            Rationale::PolicyFixed => f.write_str("policy_fixed"),
        }
    }
}

/// A resolved recovery decision. `solution` and `probability_robot` are
/// populated exactly when the game was played (`Rationale::GameSampled`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decision {
    pub action: Action,
    pub rationale: Rationale,
    pub solution: Option<EquilibriumSolution>,
    pub probability_robot: Option<f64>,
    /// True when the joint sampling rule degenerated (opposing pure corners)
    /// and the p1 marginal was used instead.
    pub sampling_fallback: bool,
}

impl Decision {
    fn fixed(action: Action, rationale: Rationale) -> Self {
        Decision {
            action,
            rationale,
            solution: None,
            probability_robot: None,
            sampling_fallback: false,
        }
    }
}

/// Probability of executing the robot action under a sampling mode. The
/// second component reports whether the conditional rule degenerated (both
/// coordinated corners impossible) and fell back to the p1 marginal.
pub fn sampling_probability(strategies: &MixedStrategyProfile, mode: SamplingMode) -> (f64, bool) {
    let (s1, s2) = (strategies.p1_robot, strategies.p2_robot);
    match mode {
        SamplingMode::P1Marginal => (s1, false),
        SamplingMode::P2Marginal => (s2, false),
        SamplingMode::ConditionalCoordination => {
            let both_robot = s1 * s2;
            let both_human = (1.0 - s1) * (1.0 - s2);
            let total = both_robot + both_human;
            if total == 0.0 {
                (s1, true)
            } else {
                (both_robot / total, false)
            }
        }
    }
}

/// Maps a confidence in `[0, 1]` to one recovery action.
///
/// Gresilience policies consume exactly one uniform from `rng` when the game
/// band is reached (drawn after the game is solved) and none otherwise; the
/// baseline policies never touch `rng`.
pub fn decide(
    eps: f64,
    factors: &SystemFactors,
    policy: &PolicyKind,
    rng: &mut RandomSource,
) -> Result<Decision, DecisionError> {
    if !eps.is_finite() || !(0.0..=1.0).contains(&eps) {
        return Err(DecisionError::ConfidenceOutOfRange(eps));
    }
    policy.validate()?;
    match *policy {
        PolicyKind::AlwaysRobot => Ok(Decision::fixed(Action::Robot, Rationale::PolicyFixed)),
        PolicyKind::AlwaysHuman => Ok(Decision::fixed(Action::Human, Rationale::PolicyFixed)),
        PolicyKind::Threshold { cutoff } => {
            if eps >= cutoff {
                Ok(Decision::fixed(Action::Robot, Rationale::HighConfidence))
            } else {
                Ok(Decision::fixed(Action::Human, Rationale::LowConfidence))
            }
        }
        PolicyKind::Gresilience {
            eps_low,
            eps_high,
            sampling,
        } => {
            if eps >= eps_high {
                return Ok(Decision::fixed(Action::Robot, Rationale::HighConfidence));
            }
            if eps <= eps_low {
                return Ok(Decision::fixed(Action::Human, Rationale::LowConfidence));
            }
            // The band is strictly inside (0, 1), so this cannot fail.
            let confidence = Confidence::new(eps)?;
            let solution = game::solve(factors, confidence, P2ScaleMode::default())?;
            let (p_robot, fallback) = sampling_probability(&solution.msne, sampling);
            let draw = rng.uniform();
            let action = if draw < p_robot {
                Action::Robot
            } else {
                Action::Human
            };
            Ok(Decision {
                action,
                rationale: Rationale::GameSampled,
                solution: Some(solution),
                probability_robot: Some(p_robot),
                sampling_fallback: fallback,
            })
        }
    }
}
