//! Gresilience: a coordination-game decision engine that trades recovery
//! speed against CO2 footprint in a human-robot classification cell, plus a
//! deterministic simulator of that cell for comparing recovery policies.
//!
//! The crate is organized around the pipeline a scenario runs through:
//!
//! * [`game`] builds the 2x2 resilience-vs-green payoff matrix from
//!   classifier confidence and system factors and solves it in closed form.
//! * [`decision`] turns a confidence value into one recovery action, using
//!   thresholds at the extremes and equilibrium sampling in between.
//! * [`scenario`] is the TOML-backed configuration schema.
//! * [`sim`] runs the seeded, millisecond-resolution workflow simulation and
//!   emits a replayable [`events::EventLog`].
//! * [`energy`] meters consumption per source and converts it to CO2e.
//! * [`metrics`] extracts degradation episodes and builds per-run reports;
//!   [`report`] serializes them to the CSV and summary formats.

pub mod decision;
pub mod energy;
pub mod events;
pub mod game;
pub mod metrics;
pub mod report;
pub mod rng;
pub mod scenario;
pub mod sim;

pub use decision::{decide, Decision, PolicyKind, Rationale, SamplingMode};
pub use energy::{Co2Report, EnergyLedger, EnergySource};
pub use events::{Event, EventKind, EventLog};
pub use game::{
    build_bimatrix, solve, Action, ActionProfile, BimatrixPayoffs, Confidence,
    EquilibriumSolution, MixedStrategyProfile, P2ScaleMode, Player, SystemFactors,
};
pub use metrics::{aggregate, build_report, detect_episodes, RunReport};
pub use rng::RandomSource;
pub use scenario::{ScenarioConfig, SweepRange};
pub use sim::{run_scenario, SimOutput};
