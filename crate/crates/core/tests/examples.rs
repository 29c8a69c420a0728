use efce::deviations::DeviationSet;
use efce::efg::enumerate_scenarios;
use efce::forest::InfoSetForest;
use efce::games::grid::{build_grid_game, GridGame, GridGameSpec, PayoffMatrix};
use efce::games::indian_poker::{build_indian_poker, IndianPoker, IndianPokerSpec};
use efce::games::job_market::*;
use efce::oracle::{enumerate_reduced_profiles, Oracle};
use efce::sampler::{draw_sample, Profile, SamplerConfig, WeightedSample};
use efce::solver::basic_update;
use efce::solver::moderator_sample;
use efce::solver::{line_search_delta, LineSearchConfig};
use efce::solver::{solve, ScenarioMode, SolverConfig};
use efce::trees::best_response_tree_size;
use efce::trees::{build_deviation_tree, evaluate_regrets, skeleton_of, DEFAULT_NODE_BUDGET};
use efce::{
    regret, sample_scenarios, CausalDeviation, Error, PlayerId, PureStrategy, Scenario, ScenarioSample, StrategyProfile,
    SuccinctGame, Trigger,
};

fn job_market() -> JobMarket {
    build_job_market(JobMarketSpec::default())
}

/// Student studies and says yes; employer hires exactly on "yes".
fn cooperative() -> StrategyProfile {
    StrategyProfile::new(vec![
        PureStrategy::with(STUDENT, [(STUDY, DO_STUDY), (ANSWER_AFTER_STUDY, SAY_YES), (ANSWER_AFTER_SKIP, SAY_NO)]),
        PureStrategy::with(EMPLOYER, [(HEARD_YES, HIRE), (HEARD_NO, REJECT)]),
    ])
}

fn noncooperative() -> StrategyProfile {
    StrategyProfile::new(vec![
        PureStrategy::with(STUDENT, [(STUDY, SKIP), (ANSWER_AFTER_STUDY, SAY_NO), (ANSWER_AFTER_SKIP, SAY_NO)]),
        PureStrategy::with(EMPLOYER, [(HEARD_YES, REJECT), (HEARD_NO, REJECT)]),
    ])
}

/// Skip studying but still claim to have studied.
fn bluff() -> CausalDeviation {
    CausalDeviation::triggered(
        Trigger {
            player: STUDENT,
            info_set: STUDY,
            action: DO_STUDY,
        },
        [(STUDY, SKIP), (ANSWER_AFTER_SKIP, SAY_YES)],
    )
}

#[test]
fn reduced_profile_counts() {
    assert_eq!(enumerate_reduced_profiles(&job_market(), 1_000_000).unwrap().len(), 16);
    let grid = build_grid_game(GridGameSpec { side: 2, payoff_seed: 3 }).unwrap();
    assert_eq!(enumerate_reduced_profiles(&grid, 1_000_000).unwrap().len(), 81);
    let poker = build_indian_poker(IndianPokerSpec { cards: 8 }).unwrap();
    assert!(matches!(Oracle::new(&poker), Err(Error::TooLarge { .. })));
}

#[test]
fn oracle_verdicts_on_the_job_market() {
    let game = job_market();
    let oracle = Oracle::new(&game).unwrap();
    let point = oracle.point_mass(&noncooperative()).unwrap();
    let report = oracle.verify_efce(&point, 0.0).unwrap();
    assert_eq!(report.max_regret, 0.0);
    assert_eq!(report.is_epsilon_efce, Some(true));

    let uniform = oracle.uniform();
    let report = oracle.verify_efce(&uniform, 0.0).unwrap();
    assert!(report.max_regret > 0.0);
    assert_eq!(report.is_epsilon_efce, Some(false));
    assert!(oracle.verify_efce(&uniform, 2.0 * game.game_type().r_max).unwrap().is_epsilon_efce.unwrap());

    // Under the uniform law the employer hires after either answer with
    // probability 1/2, so a student told to study gains 2.5 − 1.5 by
    // skipping; that suggestion comes half the time. The employer gains
    // nothing: both answers come from studied and idle students equally.
    let profiles: Vec<Profile> = oracle.profiles.iter().map(Profile::from_strategies).collect();
    let weights = vec![1.0 / 16.0; 16];
    let tree = build_deviation_tree::<f64, _, _>(
        &game,
        &profiles,
        &weights,
        &ScenarioSample::deterministic(),
        DEFAULT_NODE_BUDGET,
    )
    .unwrap();
    let dp = tree.best_deviation(None).unwrap();
    assert!((dp.empirical_regret - report.max_regret).abs() < 1e-12);
    assert!((report.max_regret - 0.5).abs() < 1e-12, "{}", report.max_regret);
}

#[test]
fn exact_distribution_tilts() {
    let game = job_market();
    let oracle = Oracle::new(&game).unwrap();
    let flat = oracle.exact_distribution(&[], &[0.0, 0.0]).unwrap();
    for p in &flat.probabilities {
        assert!((p - 1.0 / 16.0).abs() < 1e-15);
    }

    let lambda = 0.8;
    let tilted = oracle.exact_distribution(&[(bluff(), lambda)], &[0.0, 0.0]).unwrap();
    let raw: Vec<f64> = oracle
        .profiles
        .iter()
        .map(|s| (-lambda * regret::<f64, _>(&game, &bluff(), s, &oracle.scenarios).unwrap()).exp())
        .collect();
    let z: f64 = raw.iter().sum();
    for (p, x) in tilted.probabilities.iter().zip(&raw) {
        assert!((p - x / z).abs() < 1e-12);
    }
    assert!((tilted.log_partition.unwrap() - (z / 16.0).ln()).abs() < 1e-12);
    assert!((tilted.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn one_update_lowers_the_partition_function() {
    let game = job_market();
    let oracle = Oracle::new(&game).unwrap();
    let uniform = oracle.uniform();
    let worst = oracle.exact_best_deviation(&uniform).unwrap();
    assert!(worst.max_regret > 0.0);
    let step: f64 = basic_update(worst.max_regret, game.game_type().r_max).unwrap();
    let after = oracle.exact_distribution(&[(worst.worst.clone(), step)], &[]).unwrap();
    assert!(after.log_partition.unwrap() < uniform.log_partition.unwrap());
}

#[test]
fn exact_boost_examples() {
    let game = job_market();
    let r_max = game.game_type().r_max;
    let mut oracle = Oracle::new(&game).unwrap();
    let run = oracle.exact_boost(&[0.0, 0.0], r_max, 100).unwrap();
    assert_eq!(run.updates, 0);

    let run = oracle.exact_boost(&[0.0, 0.0], 1e-3, 100_000).unwrap();
    let bound = efce::solver::iteration_bound(1e-3, r_max, 16f64.ln()).unwrap();
    assert!(run.trajectory.last().unwrap().max_regret <= 1e-3);
    assert!((run.updates as u64) <= bound.rounds, "{} > {}", run.updates, bound.rounds);
    for pair in run.trajectory.windows(2) {
        assert!(pair[1].log_partition < pair[0].log_partition);
    }
}

#[test]
fn multi_trigger_gain_dominates_single_triggers() {
    let game = job_market();
    let oracle = Oracle::new(&game).unwrap();
    let uniform = oracle.uniform();
    for player in [STUDENT, EMPLOYER] {
        let multi = oracle.best_multi_trigger_gain(player, &uniform, 1_000_000).unwrap();
        let single = oracle
            .deviations
            .iter()
            .filter(|phi| phi.player() == Some(player))
            .map(|phi| {
                uniform
                    .profiles
                    .iter()
                    .zip(&uniform.probabilities)
                    .map(|(s, p)| p * regret::<f64, _>(&game, phi, s, &oracle.scenarios).unwrap())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        assert!(multi >= single - 1e-12, "player {player}: {multi} < {single}");
    }
}

#[test]
fn bluffing_pays_one_against_the_cooperative_profile() {
    let game = job_market();
    let s = cooperative();
    let det = ScenarioSample::deterministic();
    assert_eq!(regret::<f64, _>(&game, &bluff(), &s, &det).unwrap(), 1.0);
    assert_eq!(regret::<f64, _>(&game, &bluff(), &noncooperative(), &det).unwrap(), 0.0);

    let psi = DeviationSet::from_deviations([bluff()]);
    assert_eq!(evaluate_regrets::<f64, _, _>(&game, &psi, &s, &det).unwrap(), vec![0.0, 1.0]);
    let only_id = DeviationSet::new();
    assert_eq!(evaluate_regrets::<f64, _, _>(&game, &only_id, &s, &det).unwrap(), vec![0.0]);

    let tree = build_deviation_tree::<f64, _, _>(&game, &[s], &[1.0], &det, DEFAULT_NODE_BUDGET).unwrap();
    let found = tree.best_deviation(None).unwrap();
    assert_eq!(found.empirical_regret, 1.0);
    assert_eq!(found.deviation.trigger(), bluff().trigger());
    assert_eq!(found.deviation.dev_action(STUDY), SKIP);
    assert_eq!(found.deviation.dev_action(ANSWER_AFTER_SKIP), SAY_YES);
}

#[test]
fn tree_size_is_within_depth_times_lambda() {
    let game = job_market();
    let oracle = Oracle::new(&game).unwrap();
    let det = ScenarioSample::deterministic();
    let lambda = (0..2)
        .flat_map(|n| oracle.profiles.iter().map(move |s| (n, s)))
        .map(|(n, s)| best_response_tree_size(&game, n, s, &Scenario::Seeded(0)).unwrap())
        .max()
        .unwrap();
    let gamma = game.game_type().gamma as usize;
    assert!(lambda <= 3 * gamma);
    for s in &oracle.profiles {
        let p = Profile::from_strategies(s);
        let tree = build_deviation_tree::<f64, _, _>(&game, &[p], &[1.0], &det, DEFAULT_NODE_BUDGET).unwrap();
        assert!(tree.len() <= 3 * lambda, "{} > 3·{lambda}", tree.len());
    }
}

#[test]
fn grid_best_response_trees_have_a_fixed_shape() {
    let game = build_grid_game(GridGameSpec { side: 3, payoff_seed: 5 }).unwrap();
    let forest = InfoSetForest::explore(&game, 1_000_000).unwrap();
    for n in 0..9 {
        let sizes: Vec<usize> = (0..10)
            .map(|seed| {
                let s = Profile::uniform(seed).materialize(&forest).unwrap();
                best_response_tree_size(&game, n, &s, &Scenario::Seeded(0)).unwrap()
            })
            .collect();
        assert!(sizes.iter().all(|&x| x == sizes[0]));
    }
}

/// Every cell strictly prefers its own action `n % 3`, whatever its
/// neighbors do.
fn dominant_grid(side: usize) -> GridGame {
    let probe = GridGame::zeroed(side).unwrap();
    let count: usize = (0..side * side).map(|n| probe.neighbors(n).len()).sum();
    let mut matrices: Vec<PayoffMatrix> = vec![[[0.0; 3]; 3]; count];
    for n in 0..side * side {
        for &(_, k) in probe.neighbors(n) {
            matrices[k][n % 3] = [1.0; 3];
        }
    }
    GridGame::with_matrices(side, matrices).unwrap()
}

#[test]
fn strict_nash_point_mass_has_no_regret() {
    let side = 2;
    let game = dominant_grid(side);
    let forest = InfoSetForest::explore(&game, 1_000_000).unwrap();
    let mut s = Profile::uniform(0).materialize(&forest).unwrap();
    for n in 0..side * side {
        let (i, _) = forest.player_info_sets(n).next().unwrap();
        let mut t = s.strategies[n].clone();
        t.set(i, n % 3);
        s = s.with_strategy(t);
    }
    let p = Profile::from_strategies(&s);
    let tree =
        build_deviation_tree::<f64, _, _>(&game, &[p], &[1.0], &ScenarioSample::deterministic(), DEFAULT_NODE_BUDGET)
            .unwrap();
    let found = tree.best_deviation(None).unwrap();
    assert_eq!(found.empirical_regret, 0.0);
    assert!(found.deviation.is_identity());
}

#[test]
fn skeleton_sizes() {
    let det = ScenarioSample::deterministic();
    let only_id = DeviationSet::new();
    for side in 2..5 {
        let game = build_grid_game(GridGameSpec { side, payoff_seed: 1 }).unwrap();
        for seed in 0..5 {
            let sk = skeleton_of(&game, &Profile::uniform(seed), &only_id, &det).unwrap();
            assert_eq!(sk.support_size(), side * side);
        }
    }
    let game = job_market();
    for seed in 0..20 {
        let sk = skeleton_of(&game, &Profile::uniform(seed), &only_id, &det).unwrap();
        assert_eq!(sk.support_size(), 3);
        assert!(sk.assignment.contains_key(&STUDY));
        let answer = if sk.assignment[&STUDY] == DO_STUDY { ANSWER_AFTER_STUDY } else { ANSWER_AFTER_SKIP };
        assert!(sk.assignment.contains_key(&answer));
    }
}

#[test]
fn poker_deal_enumeration_and_sampling() {
    let poker = build_indian_poker(IndianPokerSpec { cards: 8 }).unwrap();
    let all = enumerate_scenarios(&poker, 1_000_000, 10_000_000).unwrap();
    assert_eq!(all.len(), 336);
    assert!((all.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);

    let poker = build_indian_poker(IndianPokerSpec { cards: 4 }).unwrap();
    let m = 24_000;
    let sample = sample_scenarios(&poker, m, 11);
    assert_eq!(sample, sample_scenarios(&poker, m, 11));
    let mut counts = std::collections::BTreeMap::new();
    for (sc, _) in sample.iter() {
        *counts.entry(deal_of(&poker, sc)).or_insert(0usize) += 1;
    }
    assert_eq!(counts.len(), 24);
    let p = 1.0 / 24.0;
    let mean = m as f64 * p;
    let sigma = (m as f64 * p * (1.0 - p)).sqrt();
    for (&deal, &c) in &counts {
        assert!((c as f64 - mean).abs() <= 3.0 * sigma, "{deal:?}: {c}");
    }
}

fn deal_of(game: &IndianPoker, scenario: &Scenario) -> [u8; 3] {
    let mut node = game.root();
    while let Some(i) = game.info_set(&node).filter(|&i| game.player(i) == PlayerId::Nature) {
        node = game.next(&node, scenario.action(game, i).unwrap());
    }
    assert_eq!(node.dealt, 3);
    node.cards
}

#[test]
fn uniform_chain_visits_profiles_uniformly() {
    let game = job_market();
    let oracle = Oracle::new(&game).unwrap();
    let forest = &oracle.forest;
    let det = ScenarioSample::deterministic();
    let psi = DeviationSet::new();
    let m = 32_000;
    let config = SamplerConfig { seed: 9, ..SamplerConfig::default() };
    let (sample, _): (WeightedSample<f64>, _) = draw_sample(&game, &det, &psi, &[0.0, 0.0], &[0.0], m, &config, None).unwrap();
    let mut counts = vec![0usize; 16];
    for d in sample.draws() {
        let s = d.profile.materialize(forest).unwrap();
        counts[oracle.index_of(&s).unwrap().unwrap()] += 1;
    }
    let e = m as f64 / 16.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    // 99% quantile of chi-square with 15 degrees of freedom.
    assert!(chi2 < 30.578, "chi2 = {chi2}, counts {counts:?}");
}

#[test]
fn golden_section_agrees_with_the_line_search() {
    let game = job_market();
    let oracle = Oracle::new(&game).unwrap();
    let r_max = game.game_type().r_max;
    let weights = vec![1.0 / 16.0; 16];
    let config = LineSearchConfig {
        enabled: true,
        cap_factor: 1e6,
        ess_floor: 0.0,
    };
    let mut checked = 0;
    for phi in &oracle.deviations {
        let r: Vec<f64> = oracle
            .profiles
            .iter()
            .map(|s| regret::<f64, _>(&game, phi, s, &oracle.scenarios).unwrap())
            .collect();
        let mean: f64 = r.iter().sum::<f64>() / 16.0;
        if mean <= 0.0 || r.iter().all(|&x| x >= 0.0) {
            continue;
        }
        let got = line_search_delta(&weights, &r, r_max, &config).unwrap();
        let want = golden_section(|d| r.iter().map(|x| (-d * x).exp()).sum(), 0.0, 50.0);
        assert!((got - want).abs() < 1e-8, "{got} vs {want}");
        checked += 1;
    }
    assert!(checked > 0);
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    while b - a > 1e-12 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

#[test]
fn loose_epsilon_stops_at_the_first_round() {
    let game = job_market();
    let config = SolverConfig {
        epsilon: 100.0,
        ..SolverConfig::default()
    };
    let sol = solve::<f64, _>(&game, &config).unwrap();
    assert_eq!(sol.history.len(), 1);
    assert!(sol.certificate.is_converged());
    assert!(sol.lambda.iter().all(|&l| l == 0.0));
}

#[test]
fn converged_solutions_verify_exactly() {
    let game = job_market();
    let oracle = Oracle::new(&game).unwrap();
    for seed in 0..3 {
        for w in [vec![0.0, 0.0], vec![1.0, 1.0]] {
            let config = SolverConfig {
                epsilon: 1e-3,
                w: w.clone(),
                seed,
                ..SolverConfig::default()
            };
            let sol = solve::<f64, _>(&game, &config).unwrap();
            assert!(sol.certificate.is_converged());
            let (profiles, weights) = sol.certificate.distribution();
            let refs: Vec<&Profile> = profiles.iter().collect();
            let dist = oracle.from_weighted_profiles(&refs, &weights).unwrap();
            let report = oracle.verify_efce(&dist, sol.certificate.effective_epsilon).unwrap();
            assert_eq!(report.is_epsilon_efce, Some(true), "seed {seed}, w {w:?}: {}", report.max_regret);
            assert!((report.max_regret - sol.certificate.r_star).abs() < 1e-9);
        }
    }
}

#[test]
fn moderator_suggestions() {
    let game = job_market();
    let config = SolverConfig {
        w: vec![1.0, 1.0],
        seed: 4,
        ..SolverConfig::default()
    };
    let sol = solve::<f64, _>(&game, &config).unwrap();
    let forest = InfoSetForest::explore(&game, 1_000).unwrap();
    let mut studied = 0;
    for k in 0..200 {
        let p = moderator_sample(&sol.certificate, k).unwrap();
        assert_eq!(p, moderator_sample(&sol.certificate, k).unwrap());
        let s = p.materialize(&forest).unwrap();
        studied += usize::from(s.strategies[STUDENT].get(STUDY) == Some(DO_STUDY));
    }
    assert!(studied >= 195, "{studied}");

    let mut point = sol.certificate.clone();
    let target = Profile::from_strategies(&cooperative());
    point.sample = vec![efce::solver::WeightedProfile {
        profile: target.clone(),
        weight: 1.0,
    }];
    for k in 0..10 {
        assert_eq!(moderator_sample(&point, k).unwrap(), target);
    }
}

#[test]
fn exhaustive_and_sampled_scenarios_agree_without_nature() {
    let game = build_grid_game(GridGameSpec { side: 3, payoff_seed: 2 }).unwrap();
    let s = Profile::uniform(3);
    let exact: Vec<f64> = efce::expected_utility(&game, &s, &ScenarioSample::deterministic()).unwrap();
    for m in [1, 7, 50] {
        let sampled: Vec<f64> = efce::expected_utility(&game, &s, &sample_scenarios(&game, m, 1)).unwrap();
        assert_eq!(exact, sampled);
    }
    let config = SolverConfig::default();
    assert_eq!(config.scenarios.mode, ScenarioMode::Auto);
}
