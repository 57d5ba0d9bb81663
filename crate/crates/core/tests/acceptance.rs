//! Acceptance suite. Each test checks one release criterion at its stated
//! tolerance and prints one `ACCEPTANCE PASS` line (visible with
//! `cargo test --test acceptance -- --nocapture`).

mod common;

use std::time::Instant;

use common::{
    all_confident_config, base_config, brute_force_psne, grid_search_msne, load_reference,
    weighted_sum_payoffs,
};
use gresilience::decision::{decide, sampling_probability, PolicyKind, Rationale, SamplingMode};
use gresilience::energy::{EnergyLedger, EnergySource};
use gresilience::game::{
    build_bimatrix, solve, Action, ActionProfile, BimatrixPayoffs, Confidence, P2ScaleMode,
    Player, SystemFactors,
};
use gresilience::metrics::build_report;
use gresilience::rng::RandomSource;
use gresilience::sim::run_scenario;
use sha2::{Digest, Sha256};

/// SHA-256 of `events.log` for the pinned reference scenario (seed 42),
/// recorded from the first reviewed build. Any engine or scenario change
/// that alters the trace must be re-reviewed before this is updated.
const REFERENCE_TRACE_SHA256: &str =
    "979fdf09ad4784110da451d099f71692e80bea706613f56f31c0d6c41dd119cf";

const TOL: f64 = 1e-9;

/// Deterministic random factor/confidence draws shared by several criteria.
fn random_game_inputs(n: usize) -> Vec<(SystemFactors, Confidence, P2ScaleMode)> {
    let mut rng = RandomSource::new(0xACCE97);
    let modes = [P2ScaleMode::Complement, P2ScaleMode::Same, P2ScaleMode::Unit];
    (0..n)
        .map(|i| {
            let th = rng.uniform() * 10.0;
            let ta = 0.01 + rng.uniform() * 10.0;
            let h = 0.01 + rng.uniform() * 10.0;
            let co2 = rng.uniform() * 10.0;
            let eps = 0.01 + rng.uniform() * 0.98;
            (
                SystemFactors::new(th, ta, h, co2).unwrap(),
                Confidence::new(eps).unwrap(),
                modes[i % modes.len()],
            )
        })
        .collect()
}

#[test]
fn acceptance_01_reference_game() {
    let started = Instant::now();
    let factors = SystemFactors::new(5.0, 2.0, 1.0, 3.0).unwrap();
    let eps = Confidence::new(0.8).unwrap();
    let solution = solve(&factors, eps, P2ScaleMode::Complement).unwrap();
    let m = &solution.payoffs;
    for (got, want) in [
        (m.p1_a(), 8.8),
        (m.p1_b(), 7.2),
        (m.p1_c(), 5.6),
        (m.p1_d(), 4.0),
        (m.p2_a(), 2.2),
        (m.p2_b(), 1.8),
        (m.p2_c(), 1.4),
        (m.p2_d(), 1.0),
    ] {
        assert!((got - want).abs() <= TOL, "payoff {got} != {want}");
    }
    assert_eq!(
        solution.psne,
        vec![
            ActionProfile::new(Action::Robot, Action::Robot),
            ActionProfile::new(Action::Human, Action::Human),
        ]
    );
    assert!((solution.msne.p1_robot - 0.5).abs() <= TOL);
    assert!((solution.msne.p2_robot - 0.25).abs() <= TOL);
    assert!((solution.msne_payoff_p1 - 6.4).abs() <= TOL);
    assert!((solution.msne_payoff_p2 - 1.6).abs() <= TOL);
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!(
        "ACCEPTANCE PASS: reference game (payoffs, PSNE, MSNE, payoffs at MSNE) within 1e-9 in {elapsed:?}"
    );
}

#[test]
fn acceptance_02_ordering_invariant_on_10k_games() {
    let started = Instant::now();
    for (factors, eps, mode) in random_game_inputs(10_000) {
        let m = build_bimatrix(&factors, eps, mode).unwrap();
        assert!(m.is_strictly_ordered(), "ordering broke for {factors:?} {eps:?} {mode:?}");
        let s = m.mixed_equilibrium().unwrap();
        assert!((0.0..=1.0).contains(&s.p1_robot));
        assert!((0.0..=1.0).contains(&s.p2_robot));
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!(
        "ACCEPTANCE PASS: A>B>C>D, a>b>c>d and sigma in [0,1] on 10,000 randomized games in {elapsed:?}"
    );
}

#[test]
fn acceptance_03_indifference_at_msne() {
    for (factors, eps, mode) in random_game_inputs(10_000) {
        let m = build_bimatrix(&factors, eps, mode).unwrap();
        let s = m.mixed_equilibrium().unwrap();
        let p2_gap = m.expected_utility(Player::Green, Action::Robot, s.p1_robot).unwrap()
            - m.expected_utility(Player::Green, Action::Human, s.p1_robot).unwrap();
        let p1_gap = m.expected_utility(Player::Resilience, Action::Robot, s.p2_robot).unwrap()
            - m.expected_utility(Player::Resilience, Action::Human, s.p2_robot).unwrap();
        assert!(p2_gap.abs() <= TOL, "p2 gap {p2_gap}");
        assert!(p1_gap.abs() <= TOL, "p1 gap {p1_gap}");
    }
    println!("ACCEPTANCE PASS: both players indifferent at MSNE within 1e-9 on 10,000 games");
}

#[test]
fn acceptance_04_oracle_equivalence() {
    // Closed-form MSNE vs the 0.001-grid mutual-best-response search.
    for (factors, eps, mode) in random_game_inputs(200) {
        let m = build_bimatrix(&factors, eps, mode).unwrap();
        let s = m.mixed_equilibrium().unwrap();
        let (g1, g2) = grid_search_msne(&m);
        assert!((s.p1_robot - g1).abs() <= 0.001, "sigma1 {} vs grid {g1}", s.p1_robot);
        assert!((s.p2_robot - g2).abs() <= 0.001, "sigma2 {} vs grid {g2}", s.p2_robot);
    }
    // Bilinear payoff formulas vs the four-cell weighted sum, on valid games
    // and on arbitrary matrices.
    let mut rng = RandomSource::new(0x0BAC1E);
    for (i, (factors, eps, mode)) in random_game_inputs(1_000).into_iter().enumerate() {
        let m = if i % 2 == 0 {
            build_bimatrix(&factors, eps, mode).unwrap()
        } else {
            let mut cell = || (rng.uniform() * 100.0 - 50.0, rng.uniform() * 100.0 - 50.0);
            BimatrixPayoffs::from_cells(cell(), cell(), cell(), cell()).unwrap()
        };
        let s = gresilience::game::MixedStrategyProfile::new(rng.uniform(), rng.uniform()).unwrap();
        let (eu1, eu2) = m.mixed_payoffs(&s);
        let (w1, w2) = weighted_sum_payoffs(&m, s.p1_robot, s.p2_robot);
        assert!((eu1 - w1).abs() <= 1e-12, "{eu1} vs {w1}");
        assert!((eu2 - w2).abs() <= 1e-12, "{eu2} vs {w2}");
        // The pure-equilibrium scan agrees with brute force everywhere too.
        assert_eq!(m.pure_equilibria(), brute_force_psne(&m));
    }
    println!(
        "ACCEPTANCE PASS: closed-form MSNE within ±0.001 of the grid oracle on 200 games; \
         bilinear payoffs within 1e-12 of the four-cell sum on 1,000 matrices"
    );
}

#[test]
fn acceptance_05_equilibrium_independent_of_confidence_and_passive_factors() {
    let mut checked = 0u32;
    for &(ta, h) in &[(2.0, 1.0), (0.3, 4.0), (7.5, 0.2), (1.0, 1.0)] {
        let denom = 3.0 * ta + 2.0 * h;
        let expected_p2 = ta / denom;
        let expected_p1 = (ta + 2.0 * h) / denom;
        for &eps in &[0.05, 0.31, 0.5, 0.69, 0.95] {
            for &th in &[0.0, 1.0, 8.0] {
                for &co2 in &[0.0, 2.5, 9.0] {
                    let f = SystemFactors::new(th, ta, h, co2).unwrap();
                    let m =
                        build_bimatrix(&f, Confidence::new(eps).unwrap(), P2ScaleMode::Complement)
                            .unwrap();
                    let s = m.mixed_equilibrium().unwrap();
                    assert!((s.p2_robot - expected_p2).abs() <= TOL);
                    assert!((s.p1_robot - expected_p1).abs() <= TOL);
                    checked += 1;
                }
            }
        }
    }
    println!(
        "ACCEPTANCE PASS: sigma_p2 = ta/(3ta+2h) and sigma_p1 = (ta+2h)/(3ta+2h) within 1e-9 \
         across {checked} swept (eps, t_h, co2) combinations"
    );
}

#[test]
fn acceptance_06_sampling_fidelity() {
    let factors = SystemFactors::new(5.0, 2.0, 1.0, 3.0).unwrap();
    let policy = PolicyKind::Gresilience {
        eps_low: 0.3,
        eps_high: 0.7,
        sampling: SamplingMode::ConditionalCoordination,
    };
    let mut rng = RandomSource::new(0x5EED);
    let trials = 10_000u32;
    let mut robots = 0u32;
    let mut expected = None;
    for _ in 0..trials {
        let d = decide(0.5, &factors, &policy, &mut rng).unwrap();
        assert_eq!(d.rationale, Rationale::GameSampled);
        expected = d.probability_robot;
        if d.action == Action::Robot {
            robots += 1;
        }
    }
    let expected = expected.unwrap();
    let solution = solve(&factors, Confidence::new(0.5).unwrap(), P2ScaleMode::Complement).unwrap();
    let (configured, _) =
        sampling_probability(&solution.msne, SamplingMode::ConditionalCoordination);
    assert!((expected - configured).abs() <= TOL);
    let freq = f64::from(robots) / f64::from(trials);
    assert!(
        (freq - configured).abs() <= 0.02,
        "robot frequency {freq} vs configured {configured}"
    );
    println!(
        "ACCEPTANCE PASS: 10,000 seeded game decisions hit ROBOT with frequency {freq:.4}, \
         within ±0.02 of the configured {configured:.4}"
    );
}

#[test]
fn acceptance_07_simulation_determinism() {
    let started = Instant::now();
    let cfg = load_reference();
    assert_eq!(cfg.seed, 42);
    assert_eq!(cfg.duration_s, 600.0, "reference horizon is 10 simulated minutes");

    let first = run_scenario(&cfg).unwrap();
    let second = run_scenario(&cfg).unwrap();
    let text_a = first.log.to_text();
    let text_b = second.log.to_text();
    assert_eq!(text_a, text_b, "consecutive runs must be byte-identical");

    let report_a = gresilience::report::rows_to_csv(&[gresilience::report::ReportRow::from_report(
        &build_report(&cfg, &first.log).unwrap(),
    )]);
    let report_b = gresilience::report::rows_to_csv(&[gresilience::report::ReportRow::from_report(
        &build_report(&cfg, &second.log).unwrap(),
    )]);
    assert_eq!(report_a, report_b);

    // The frozen digest pins the trace across process restarts and rebuilds.
    let digest: String = Sha256::digest(text_a.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    assert_eq!(digest, REFERENCE_TRACE_SHA256, "reference trace drifted");

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!(
        "ACCEPTANCE PASS: reference scenario (seed 42) replays byte-identically, trace digest \
         {digest:.12}..., two 10-minute runs in {elapsed:?}"
    );
}

#[test]
fn acceptance_08_conservation_and_policy_sanity() {
    // Conservation on every run of a policy/seed batch.
    let policies = [
        PolicyKind::gresilience_default(),
        PolicyKind::AlwaysRobot,
        PolicyKind::AlwaysHuman,
        PolicyKind::Threshold { cutoff: 0.6 },
    ];
    let mut runs = 0u32;
    for policy in &policies {
        for seed in [1u64, 42, 20_260_809] {
            let mut cfg = base_config();
            cfg.policy = policy.clone();
            cfg.seed = seed;
            let out = run_scenario(&cfg).unwrap();
            assert!(out.counters.conserved(), "{policy:?} seed {seed}: {:?}", out.counters);
            runs += 1;
        }
    }

    // ALWAYS_HUMAN consumes no arm energy on any of those scenarios.
    for seed in [1u64, 42, 20_260_809] {
        let mut cfg = base_config();
        cfg.policy = PolicyKind::AlwaysHuman;
        cfg.seed = seed;
        let out = run_scenario(&cfg).unwrap();
        assert_eq!(out.ledger.joules_by_source()[&EnergySource::Arm], 0.0);
    }

    // ALWAYS_ROBOT on an all-confident scenario never touches the human.
    let mut cfg = all_confident_config();
    cfg.policy = PolicyKind::AlwaysRobot;
    let out = run_scenario(&cfg).unwrap();
    assert!(out.counters.objects_total > 10);
    assert_eq!(out.counters.human_interactions, 0);

    // CO2 arithmetic: 3.6e6 J at 475 g/kWh is exactly 475 g.
    let mut ledger = EnergyLedger::new();
    ledger.record(EnergySource::Compute, 1_000.0, 3_600.0).unwrap();
    let co2 = ledger.co2e(475.0).unwrap();
    assert_eq!(co2.total_joules, 3.6e6);
    assert_eq!(co2.co2e_g, 475.0);

    println!(
        "ACCEPTANCE PASS: conservation held on {runs} runs; always-human used 0 J of arm energy; \
         always-robot on the all-confident scenario had 0 human interactions; 3.6e6 J @ 475 g/kWh = 475 g exactly"
    );
}
