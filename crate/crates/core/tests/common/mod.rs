//! Shared fixtures and independent oracles for the integration and
//! acceptance suites.
#![allow(dead_code)]

use gresilience::decision::{PolicyKind, SamplingMode};
use gresilience::game::{Action, ActionProfile, BimatrixPayoffs};
use gresilience::scenario::{
    ArmConfig, ClassifierConfig, ConveyorConfig, FactorConfig, HumanConfig, ScenarioConfig,
    ScoreConfig,
};

pub fn reference_scenario_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/reference.toml")
}

pub fn load_reference() -> ScenarioConfig {
    ScenarioConfig::load(&reference_scenario_path()).expect("reference scenario parses")
}

/// A busy two-minute scenario exercising every workflow path.
pub fn base_config() -> ScenarioConfig {
    ScenarioConfig {
        schema_version: 1,
        id: "itest".into(),
        seed: 42,
        duration_s: 120.0,
        arrival_rate_per_min: 10.0,
        known_color_fraction: 0.85,
        empty_image_fraction: 0.02,
        initial_known_colors: 3,
        conveyor: ConveyorConfig {
            speed_mps: 0.25,
            picking_area_m: 2.0,
            slowdown_factor: 0.4,
            power_w: 120.0,
        },
        classifier: ClassifierConfig {
            eps_known_mean: 0.8,
            eps_known_spread: 0.15,
            eps_novel_mean: 0.2,
            eps_novel_spread: 0.08,
            second_image_boost_mean: 0.15,
            second_image_boost_spread: 0.05,
            classify_time_s: 0.08,
            compute_power_w: 40.0,
            correct_prob: None,
        },
        human: HumanConfig {
            reaction_mean_s: 1.2,
            reaction_spread_s: 0.3,
            correction_time_s: 2.0,
            retrieval_time_s: 5.0,
        },
        arm: ArmConfig {
            move_time_s: 1.8,
            power_w: 60.0,
        },
        carbon_intensity_g_per_kwh: 475.0,
        factors: FactorConfig::default(),
        score: ScoreConfig::default(),
        policy: PolicyKind::Gresilience {
            eps_low: 0.3,
            eps_high: 0.7,
            sampling: SamplingMode::ConditionalCoordination,
        },
    }
}

/// Every object is a known color classified confidently and correctly.
pub fn all_confident_config() -> ScenarioConfig {
    let mut cfg = base_config();
    cfg.id = "all-confident".into();
    cfg.known_color_fraction = 1.0;
    cfg.empty_image_fraction = 0.0;
    cfg.classifier.eps_known_mean = 0.99;
    cfg.classifier.eps_known_spread = 0.0;
    cfg.classifier.correct_prob = Some(1.0);
    cfg
}

/// Every object fails the confidence gate, so every resolution goes through
/// the slowdown path.
pub fn all_uncertain_config() -> ScenarioConfig {
    let mut cfg = base_config();
    cfg.id = "all-uncertain".into();
    cfg.empty_image_fraction = 0.0;
    cfg.classifier.eps_known_mean = 0.45;
    cfg.classifier.eps_known_spread = 0.0;
    cfg.classifier.second_image_boost_mean = 0.05;
    cfg.classifier.second_image_boost_spread = 0.0;
    cfg
}

// ---------------------------------------------------------------------------
// Oracles, kept independent of the library's solver paths
// ---------------------------------------------------------------------------

/// Best-response scan over all four cells using raw payoff lookups.
pub fn brute_force_psne(m: &BimatrixPayoffs) -> Vec<ActionProfile> {
    let actions = [Action::Robot, Action::Human];
    let mut out = Vec::new();
    for &p1 in &actions {
        for &p2 in &actions {
            let here = ActionProfile::new(p1, p2);
            let p1_alt = ActionProfile::new(p1.other(), p2);
            let p2_alt = ActionProfile::new(p1, p2.other());
            if m.pair(here).0 >= m.pair(p1_alt).0 && m.pair(here).1 >= m.pair(p2_alt).1 {
                out.push(here);
            }
        }
    }
    out
}

/// Expected payoffs as the explicit probability-weighted sum over the four
/// cells.
pub fn weighted_sum_payoffs(m: &BimatrixPayoffs, s1: f64, s2: f64) -> (f64, f64) {
    let mut eu = (0.0, 0.0);
    for (p1, w1) in [(Action::Robot, s1), (Action::Human, 1.0 - s1)] {
        for (p2, w2) in [(Action::Robot, s2), (Action::Human, 1.0 - s2)] {
            let (a, b) = m.pair(ActionProfile::new(p1, p2));
            eu.0 += w1 * w2 * a;
            eu.1 += w1 * w2 * b;
        }
    }
    eu
}

/// Grid search on a 0.001 lattice for the interior mutual-best-response
/// point: per coordinate, the sigma that makes the opponent indifferent.
/// The two indifference conditions of a 2x2 game decouple (each depends on
/// one sigma only), so the two axis scans cover the full product grid.
pub fn grid_search_msne(m: &BimatrixPayoffs) -> (f64, f64) {
    let grid = |gap: &dyn Fn(f64) -> f64| -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..=1000 {
            let sigma = i as f64 / 1000.0;
            let g = gap(sigma).abs();
            if g < best.0 {
                best = (g, sigma);
            }
        }
        best.1
    };
    let s1 = grid(&|sigma| {
        let robot = sigma * m.p2_b() + (1.0 - sigma) * m.p2_c();
        let human = sigma * m.p2_d() + (1.0 - sigma) * m.p2_a();
        robot - human
    });
    let s2 = grid(&|sigma| {
        let robot = sigma * m.p1_a() + (1.0 - sigma) * m.p1_c();
        let human = sigma * m.p1_d() + (1.0 - sigma) * m.p1_b();
        robot - human
    });
    (s1, s2)
}

