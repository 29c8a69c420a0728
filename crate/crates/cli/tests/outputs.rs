use std::fs;
use std::path::Path;

use efce::solver::CONVERGENCE_HEADER;
use efce_cli::output::*;
use efce_cli::{run, GameKind, GameSelector, Mode, RunConfig};

fn config(out: &Path) -> RunConfig {
    let mut c = RunConfig {
        out: out.to_path_buf(),
        seeds: 3,
        ..RunConfig::default()
    };
    c.solver.max_rounds = 40;
    c
}

fn first_line(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn golden_headers() {
    assert_eq!(CONVERGENCE_HEADER, "round,r_star,psi_size,M_t,ess,lambda_l1,wall_ms,peak_mem_bytes");
    assert_eq!(REGRET_HEADER, "seed,round,r_star");
    assert_eq!(REGRET_FIT_HEADER, "seed,rounds,fit_from_round,slope");
    assert_eq!(PAYOFF_HEADER, "seed,max_entropy,w,player,payoff");
    assert_eq!(
        BENCH_HEADER,
        "side,gamma,payoff_seed,converged,rounds,initial_r_star,r_star,wall_ms,peak_mem_bytes"
    );
    assert_eq!(BENCH_FIT_HEADER, "quantity,slope,points");
    assert_eq!(TRAJECTORY_HEADER, "round,max_regret,log_partition");

    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path());
    let report = run(&c, Mode::Solve, &mut Vec::new()).unwrap();
    assert_eq!(report.seeds.len(), 3);
    assert_eq!(first_line(&dir.path().join("runs/0/convergence.csv")), CONVERGENCE_HEADER);
    assert_eq!(first_line(&dir.path().join("plots/regret.csv")), REGRET_HEADER);
    assert_eq!(first_line(&dir.path().join("plots/regret_fit.csv")), REGRET_FIT_HEADER);
    assert_eq!(first_line(&dir.path().join("plots/payoffs.csv")), PAYOFF_HEADER);
    for seed in 0..3 {
        for file in ["convergence.csv", "certificate.json", "report.json"] {
            assert!(dir.path().join(format!("runs/{seed}/{file}")).exists());
        }
    }
}

/// Drops the wall-clock column.
fn without_wall(text: &str) -> String {
    let wall = CONVERGENCE_HEADER.split(',').position(|c| c == "wall_ms").unwrap();
    text.lines()
        .map(|l| {
            l.split(',')
                .enumerate()
                .filter(|(k, _)| *k != wall)
                .map(|(_, x)| x)
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn reruns_reproduce_csv_bodies() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut ca = config(a.path());
    ca.game = GameSelector {
        name: GameKind::Poker,
        cards: 3,
        ..GameSelector::default()
    };
    ca.solver.telemetry = false;
    let mut cb = ca.clone();
    cb.out = b.path().to_path_buf();
    run(&ca, Mode::Solve, &mut Vec::new()).unwrap();
    run(&cb, Mode::Solve, &mut Vec::new()).unwrap();
    for seed in 0..3 {
        let f = format!("runs/{seed}/convergence.csv");
        assert_eq!(fs::read(a.path().join(&f)).unwrap(), fs::read(b.path().join(&f)).unwrap());
    }
    for f in ["plots/regret.csv", "plots/regret_fit.csv", "plots/payoffs.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
    }

    // With telemetry on, only the wall-clock column may differ.
    ca.solver.telemetry = true;
    cb.solver.telemetry = true;
    run(&ca, Mode::Solve, &mut Vec::new()).unwrap();
    run(&cb, Mode::Solve, &mut Vec::new()).unwrap();
    let f = "runs/1/convergence.csv";
    assert_eq!(
        without_wall(&fs::read_to_string(a.path().join(f)).unwrap()),
        without_wall(&fs::read_to_string(b.path().join(f)).unwrap())
    );
}

#[test]
fn verify_and_moderate_read_certificates() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(dir.path());
    c.seeds = 1;
    c.solver.w = vec![1.0, 1.0];
    run(&c, Mode::Solve, &mut Vec::new()).unwrap();

    let mut v = c.clone();
    v.certificate = Some(dir.path().join("runs/0/certificate.json"));
    let mut text = Vec::new();
    let report = run(&v, Mode::Verify, &mut text).unwrap();
    let ver = report.verification.unwrap();
    assert!(ver.exact && ver.is_epsilon_efce);
    let parsed: serde_json::Value = serde_json::from_slice(&text).unwrap();
    assert_eq!(parsed["game"], "jobmarket");

    v.count = 5;
    let mut first = Vec::new();
    let mut second = Vec::new();
    let r1 = run(&v, Mode::Moderate, &mut first).unwrap();
    run(&v, Mode::Moderate, &mut second).unwrap();
    assert_eq!(first, second);
    assert_eq!(String::from_utf8(first).unwrap().lines().count(), 5);
    assert_eq!(r1.suggestions.len(), 5);
}

#[test]
fn moderating_a_point_mass_repeats_its_profile() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(dir.path());
    c.seeds = 1;
    run(&c, Mode::Solve, &mut Vec::new()).unwrap();
    let path = dir.path().join("runs/0/certificate.json");
    let mut cert: efce::solver::EquilibriumCertificate =
        serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    cert.sample.truncate(1);
    cert.sample[0].weight = 1.0;
    fs::write(&path, serde_json::to_string(&cert).unwrap()).unwrap();
    c.certificate = Some(path);
    c.count = 8;
    let report = run(&c, Mode::Moderate, &mut Vec::new()).unwrap();
    assert!(report.suggestions.windows(2).all(|w| w[0].actions == w[1].actions));
}

#[test]
fn oracle_mode_writes_a_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(dir.path());
    c.solver.epsilon = 0.05;
    c.solver.max_rounds = 100_000;
    let report = run(&c, Mode::Oracle, &mut Vec::new()).unwrap();
    let o = report.oracle.unwrap();
    assert!(o.final_max_regret <= 0.05);
    assert!((o.updates as u64) <= o.iteration_bound);
    let text = fs::read_to_string(dir.path().join("oracle/trajectory.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), TRAJECTORY_HEADER);
    assert_eq!(text.lines().count(), o.updates + 2);
}

#[test]
fn bench_lists_gamma_per_side() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(dir.path());
    c.bench.sides = vec![3, 4, 5];
    c.bench.games = 1;
    c.solver.max_rounds = 3;
    let report = run(&c, Mode::Bench, &mut Vec::new()).unwrap();
    let gammas: Vec<u64> = report.bench.iter().map(|r| r.gamma).collect();
    assert_eq!(gammas, vec![27, 48, 75]);
    assert_eq!(first_line(&dir.path().join("plots/bench.csv")), BENCH_HEADER);
    assert_eq!(first_line(&dir.path().join("plots/bench_fit.csv")), BENCH_FIT_HEADER);
}
