//! The gresilience game: a 2x2 coordination game between a resilience player
//! (the row player, who wants the robot arm to recover the workflow quickly)
//! and a green player (the column player, who wants to minimize energy and
//! CO2 spending). Payoffs are built from classifier confidence and four
//! normalized system factors; pure and mixed Nash equilibria come out in
//! closed form.

use serde::Serialize;
use thiserror::Error;

/// Errors from payoff construction and equilibrium analysis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error("confidence must lie strictly inside (0, 1), got {0}")]
    ConfidenceOutOfRange(f64),
    #[error("invalid system factor {field}: {reason} (got {value})")]
    InvalidFactor {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("probability must lie in [0, 1], got {0}")]
    ProbabilityOutOfRange(f64),
    #[error("payoff entries must be finite")]
    NonFinitePayoff,
    #[error("degenerate game: {0}")]
    DegenerateGame(&'static str),
    #[error("internal invariant breach: payoff ordering {0} does not hold")]
    OrderingViolation(&'static str),
}

/// Classifier confidence usable for game construction, strictly inside (0, 1).
/// Boundary confidences never reach the game; the decision engine short-circuits
/// them at its thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Confidence(f64);

impl Confidence {
    pub fn new(value: f64) -> Result<Self, GameError> {
        if value.is_finite() && value > 0.0 && value < 1.0 {
            Ok(Self(value))
        } else {
            Err(GameError::ConfidenceOutOfRange(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// The four dimensionless factor scores the payoff formulas sum over:
/// human classification time, arm classification time, human-interaction
/// reduction, and CO2 reduction. The simulator produces them by min-max
/// normalizing raw measurements; any positive scores work here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemFactors {
    /// Human classification time score; `>= 0`.
    pub human_time: f64,
    /// Arm classification time score; strictly positive.
    pub arm_time: f64,
    /// Human-interaction reduction score; strictly positive.
    pub interaction_reduction: f64,
    /// CO2 reduction score; `>= 0`.
    pub co2_reduction: f64,
}

impl SystemFactors {
    /// Validates the score ranges that make the payoff orderings strict:
    /// `arm_time > 0`, `interaction_reduction > 0`, the other two nonnegative,
    /// everything finite.
    pub fn new(
        human_time: f64,
        arm_time: f64,
        interaction_reduction: f64,
        co2_reduction: f64,
    ) -> Result<Self, GameError> {
        let check = |field: &'static str, value: f64, strict: bool| -> Result<(), GameError> {
            if !value.is_finite() {
                return Err(GameError::InvalidFactor {
                    field,
                    value,
                    reason: "must be finite",
                });
            }
            if strict && value <= 0.0 {
                return Err(GameError::InvalidFactor {
                    field,
                    value,
                    reason: "must be > 0",
                });
            }
            if !strict && value < 0.0 {
                return Err(GameError::InvalidFactor {
                    field,
                    value,
                    reason: "must be >= 0",
                });
            }
            Ok(())
        };
        check("human_time", human_time, false)?;
        check("arm_time", arm_time, true)?;
        check("interaction_reduction", interaction_reduction, true)?;
        check("co2_reduction", co2_reduction, false)?;
        Ok(Self {
            human_time,
            arm_time,
            interaction_reduction,
            co2_reduction,
        })
    }
}

/// A recovery action: the arm classifies the object, or the human does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Robot,
    Human,
}

impl Action {
    pub fn other(self) -> Self {
        match self {
            Action::Robot => Action::Human,
            Action::Human => Action::Robot,
        }
    }
}

impl std::fmt::Display for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Action::Robot => f.write_str("robot"),
            Action::Human => f.write_str("human"),
        }
    }
}

/// One of the two players.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Player {
    /// Row player (p1): prefers the robot action.
    Resilience,
    /// Column player (p2): prefers the human action.
    Green,
}

/// A joint action choice: what p1 (resilience) and p2 (green) play.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
pub struct ActionProfile {
    pub p1: Action,
    pub p2: Action,
}

impl ActionProfile {
    pub const fn new(p1: Action, p2: Action) -> Self {
        Self { p1, p2 }
    }

    /// All four profiles in row-major cell order.
    pub const ALL: [ActionProfile; 4] = [
        ActionProfile::new(Action::Robot, Action::Robot),
        ActionProfile::new(Action::Robot, Action::Human),
        ActionProfile::new(Action::Human, Action::Robot),
        ActionProfile::new(Action::Human, Action::Human),
    ];
}

impl std::fmt::Display for ActionProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.p1, self.p2)
    }
}

/// Scale factor applied to the green player's payoffs.
///
/// Mixed-equilibrium strategies are invariant under any positive scaling of
/// one player's payoffs, so this only changes reported payoff magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum P2ScaleMode {
    /// `1 - eps`: the green case for human classification strengthens as
    /// classifier confidence drops.
    #[default]
    Complement,
    /// Same `eps` factor as the resilience player.
    Same,
    /// Constant 1, independent of confidence.
    Unit,
}

impl P2ScaleMode {
    pub fn factor(self, eps: Confidence) -> f64 {
        match self {
            P2ScaleMode::Complement => 1.0 - eps.value(),
            P2ScaleMode::Same => eps.value(),
            P2ScaleMode::Unit => 1.0,
        }
    }
}

/// Payoff for the resilience player (p1) at a given profile.
///
/// The factor sum rewards coordinated robot recovery and penalizes
/// miscoordination; the whole payoff scales linearly with confidence:
///
/// * `(robot, robot)` -> `eps * (t_h + t_a + h + co2)`  (A)
/// * `(human, human)` -> `eps * (t_h + t_a + co2 - h)`  (B)
/// * `(robot, human)` -> `eps * (t_h + co2 - h)`        (C)
/// * `(human, robot)` -> `eps * (t_h + co2 - t_a - h)`  (D)
pub fn resilience_payoff(profile: ActionProfile, factors: &SystemFactors, eps: Confidence) -> f64 {
    let (th, ta, h, co2) = (
        factors.human_time,
        factors.arm_time,
        factors.interaction_reduction,
        factors.co2_reduction,
    );
    let base = match (profile.p1, profile.p2) {
        (Action::Robot, Action::Robot) => th + ta + h + co2,
        (Action::Human, Action::Human) => th + ta + co2 - h,
        (Action::Robot, Action::Human) => th + co2 - h,
        (Action::Human, Action::Robot) => th + co2 - ta - h,
    };
    eps.value() * base
}

/// Payoff for the green player (p2): the structural mirror of
/// [`resilience_payoff`] with the human action preferred, scaled by the
/// [`P2ScaleMode`] factor instead of `eps`:
///
/// * `(human, human)` -> `s * (t_h + t_a + h + co2)`  (a)
/// * `(robot, robot)` -> `s * (t_h + t_a + co2 - h)`  (b)
/// * `(human, robot)` -> `s * (t_h + co2 - h)`        (c)
/// * `(robot, human)` -> `s * (t_h + co2 - t_a - h)`  (d)
pub fn green_payoff(
    profile: ActionProfile,
    factors: &SystemFactors,
    eps: Confidence,
    scale: P2ScaleMode,
) -> f64 {
    let (th, ta, h, co2) = (
        factors.human_time,
        factors.arm_time,
        factors.interaction_reduction,
        factors.co2_reduction,
    );
    let base = match (profile.p1, profile.p2) {
        (Action::Human, Action::Human) => th + ta + h + co2,
        (Action::Robot, Action::Robot) => th + ta + co2 - h,
        (Action::Human, Action::Robot) => th + co2 - h,
        (Action::Robot, Action::Human) => th + co2 - ta - h,
    };
    scale.factor(eps) * base
}

/// The 2x2 bimatrix. Cell layout, with p1 on rows and p2 on columns:
///
/// ```text
///                 p2: robot      p2: human
///   p1: robot      (A, b)         (C, d)
///   p1: human      (D, c)         (B, a)
/// ```
///
/// Uppercase letters are p1 payoffs (`A > B > C > D` for any game built from
/// valid inputs), lowercase are p2 payoffs (`a > b > c > d`). Hand-built
/// matrices may break those orderings; only finiteness is enforced here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BimatrixPayoffs {
    robot_robot: (f64, f64),
    robot_human: (f64, f64),
    human_robot: (f64, f64),
    human_human: (f64, f64),
}

impl BimatrixPayoffs {
    /// Builds a matrix from raw `(p1, p2)` pairs in row-major cell order.
    pub fn from_cells(
        robot_robot: (f64, f64),
        robot_human: (f64, f64),
        human_robot: (f64, f64),
        human_human: (f64, f64),
    ) -> Result<Self, GameError> {
        let all = [robot_robot, robot_human, human_robot, human_human];
        if all.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(GameError::NonFinitePayoff);
        }
        Ok(Self {
            robot_robot,
            robot_human,
            human_robot,
            human_human,
        })
    }

    /// `(p1, p2)` payoff pair at a profile.
    pub fn pair(&self, profile: ActionProfile) -> (f64, f64) {
        match (profile.p1, profile.p2) {
            (Action::Robot, Action::Robot) => self.robot_robot,
            (Action::Robot, Action::Human) => self.robot_human,
            (Action::Human, Action::Robot) => self.human_robot,
            (Action::Human, Action::Human) => self.human_human,
        }
    }

    pub fn payoff(&self, profile: ActionProfile, player: Player) -> f64 {
        let (p1, p2) = self.pair(profile);
        match player {
            Player::Resilience => p1,
            Player::Green => p2,
        }
    }

    // Named accessors following the cell table above.
    pub fn p1_a(&self) -> f64 {
        self.robot_robot.0
    }
    pub fn p1_b(&self) -> f64 {
        self.human_human.0
    }
    pub fn p1_c(&self) -> f64 {
        self.robot_human.0
    }
    pub fn p1_d(&self) -> f64 {
        self.human_robot.0
    }
    pub fn p2_a(&self) -> f64 {
        self.human_human.1
    }
    pub fn p2_b(&self) -> f64 {
        self.robot_robot.1
    }
    pub fn p2_c(&self) -> f64 {
        self.human_robot.1
    }
    pub fn p2_d(&self) -> f64 {
        self.robot_human.1
    }

    /// Whether both players' payoff orderings are strictly decreasing
    /// (`A > B > C > D` and `a > b > c > d`).
    pub fn is_strictly_ordered(&self) -> bool {
        self.p1_a() > self.p1_b()
            && self.p1_b() > self.p1_c()
            && self.p1_c() > self.p1_d()
            && self.p2_a() > self.p2_b()
            && self.p2_b() > self.p2_c()
            && self.p2_c() > self.p2_d()
    }

    /// Every profile where neither player gains by unilateral deviation
    /// (weak inequalities, so ties count). For any strictly ordered matrix
    /// this is exactly `[(robot, robot), (human, human)]`.
    pub fn pure_equilibria(&self) -> Vec<ActionProfile> {
        ActionProfile::ALL
            .into_iter()
            .filter(|p| {
                let (p1_here, p2_here) = self.pair(*p);
                let p1_dev = self.pair(ActionProfile::new(p.p1.other(), p.p2)).0;
                let p2_dev = self.pair(ActionProfile::new(p.p1, p.p2.other())).1;
                p1_here >= p1_dev && p2_here >= p2_dev
            })
            .collect()
    }

    /// Expected utility for `player` committing to `action` while the
    /// opponent plays robot with probability `opponent_robot_prob`.
    pub fn expected_utility(
        &self,
        player: Player,
        action: Action,
        opponent_robot_prob: f64,
    ) -> Result<f64, GameError> {
        let sigma = check_probability(opponent_robot_prob)?;
        let eu = match player {
            Player::Resilience => {
                sigma * self.pair(ActionProfile::new(action, Action::Robot)).0
                    + (1.0 - sigma) * self.pair(ActionProfile::new(action, Action::Human)).0
            }
            Player::Green => {
                sigma * self.pair(ActionProfile::new(Action::Robot, action)).1
                    + (1.0 - sigma) * self.pair(ActionProfile::new(Action::Human, action)).1
            }
        };
        Ok(eu)
    }

    /// Closed-form mixed equilibrium. Each player mixes so the *opponent* is
    /// indifferent between its two actions:
    ///
    /// * `sigma_p1 = (a - c) / (a + b - c - d)`
    /// * `sigma_p2 = (B - C) / (A + B - C - D)`
    ///
    /// Errors on zero denominators or probabilities escaping `[0, 1]`, which
    /// can only happen for hand-built matrices that break the orderings.
    pub fn mixed_equilibrium(&self) -> Result<MixedStrategyProfile, GameError> {
        let den_p1 = self.p2_a() + self.p2_b() - self.p2_c() - self.p2_d();
        let den_p2 = self.p1_a() + self.p1_b() - self.p1_c() - self.p1_d();
        if den_p1 == 0.0 || den_p2 == 0.0 {
            return Err(GameError::DegenerateGame(
                "indifference denominator is zero",
            ));
        }
        let p1_robot = (self.p2_a() - self.p2_c()) / den_p1;
        let p2_robot = (self.p1_b() - self.p1_c()) / den_p2;
        MixedStrategyProfile::new(p1_robot, p2_robot)
            .map_err(|_| GameError::DegenerateGame("mixed strategy escapes [0, 1]"))
    }

    /// Expected payoffs `(p1, p2)` under a mixed profile, in the bilinear form
    ///
    /// ```text
    /// EU1 = s1*s2*(A+B-C-D) + s1*(C-B) + s2*(D-B) + B
    /// EU2 = s1*s2*(a+b-c-d) + s1*(d-a) + s2*(c-a) + a
    /// ```
    ///
    /// which is identical to the four-cell probability-weighted sum.
    pub fn mixed_payoffs(&self, strategies: &MixedStrategyProfile) -> (f64, f64) {
        let (s1, s2) = (strategies.p1_robot, strategies.p2_robot);
        let eu1 = s1 * s2 * (self.p1_a() + self.p1_b() - self.p1_c() - self.p1_d())
            + s1 * (self.p1_c() - self.p1_b())
            + s2 * (self.p1_d() - self.p1_b())
            + self.p1_b();
        let eu2 = s1 * s2 * (self.p2_a() + self.p2_b() - self.p2_c() - self.p2_d())
            + s1 * (self.p2_d() - self.p2_a())
            + s2 * (self.p2_c() - self.p2_a())
            + self.p2_a();
        (eu1, eu2)
    }
}

/// Builds the bimatrix for given factors, confidence, and green scale mode,
/// then checks the strict payoff orderings that the formulas guarantee.
pub fn build_bimatrix(
    factors: &SystemFactors,
    eps: Confidence,
    scale: P2ScaleMode,
) -> Result<BimatrixPayoffs, GameError> {
    let cell = |profile: ActionProfile| {
        (
            resilience_payoff(profile, factors, eps),
            green_payoff(profile, factors, eps, scale),
        )
    };
    let m = BimatrixPayoffs::from_cells(
        cell(ActionProfile::ALL[0]),
        cell(ActionProfile::ALL[1]),
        cell(ActionProfile::ALL[2]),
        cell(ActionProfile::ALL[3]),
    )?;
    if !m.is_strictly_ordered() {
        return Err(GameError::OrderingViolation("A>B>C>D / a>b>c>d"));
    }
    Ok(m)
}

/// A mixed strategy pair: the probability each player assigns to the robot
/// action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixedStrategyProfile {
    pub p1_robot: f64,
    pub p2_robot: f64,
}

impl MixedStrategyProfile {
    pub fn new(p1_robot: f64, p2_robot: f64) -> Result<Self, GameError> {
        check_probability(p1_robot)?;
        check_probability(p2_robot)?;
        Ok(Self { p1_robot, p2_robot })
    }
}

/// Full equilibrium analysis of one game.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumSolution {
    pub payoffs: BimatrixPayoffs,
    pub psne: Vec<ActionProfile>,
    pub msne: MixedStrategyProfile,
    pub msne_payoff_p1: f64,
    pub msne_payoff_p2: f64,
}

/// Builds and fully solves one game: bimatrix, pure equilibria, mixed
/// equilibrium, and the mixed-equilibrium payoffs.
pub fn solve(
    factors: &SystemFactors,
    eps: Confidence,
    scale: P2ScaleMode,
) -> Result<EquilibriumSolution, GameError> {
    let payoffs = build_bimatrix(factors, eps, scale)?;
    let psne = payoffs.pure_equilibria();
    let msne = payoffs.mixed_equilibrium()?;
    let (msne_payoff_p1, msne_payoff_p2) = payoffs.mixed_payoffs(&msne);
    Ok(EquilibriumSolution {
        payoffs,
        psne,
        msne,
        msne_payoff_p1,
        msne_payoff_p2,
    })
}

fn check_probability(p: f64) -> Result<f64, GameError> {
    if p.is_finite() && (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(GameError::ProbabilityOutOfRange(p))
    }
}
