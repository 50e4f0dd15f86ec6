mod common;

use globcert::demo;
use globcert::linalg::C64;
use globcert::objective::Objective;
use globcert::oracle;
use globcert::solver::{self, SolveResult, SolverConfig, Status};

fn check_invariants(obj: &Objective, res: &SolveResult, cfg: &SolverConfig) {
    let z = res.minimizer.expect("minimizer");
    let direct = obj.value(z).unwrap();
    assert!(common::rel(direct, res.gamma_final) <= 1e-14, "{direct} vs {}", res.gamma_final);
    let mut last = f64::INFINITY;
    for r in &res.restarts {
        assert!(r.gamma_after < r.gamma_before);
        assert!(r.gamma_before <= last);
        if !r.terminal {
            assert!(r.gamma_after < last);
        }
        if r.mid_round {
            assert!(r.gamma_after <= r.gamma_before * (1.0 - cfg.restart_rel));
        }
        last = r.gamma_after;
    }
    assert_eq!(res.certificate_samples.len(), res.restarts.iter().filter(|r| !r.terminal).count() + 1);
}

#[test]
fn agrees_with_grid_oracle() {
    let cfg = SolverConfig::default();
    for kind in 0..3 {
        for seed in 0..3u64 {
            let obj = common::validation_objective(1000 + seed, kind);
            let starts = solver::default_starts(&obj).unwrap();
            let res = solver::solve(&obj, &starts, &cfg).unwrap();
            assert_eq!(res.status, Status::Converged);
            check_invariants(&obj, &res, &cfg);
            let reference = oracle::reference_min(&obj, 150).unwrap();
            // The solver may only beat the grid, never lose to it.
            assert!(res.gamma_final <= reference.value * (1.0 + 1e-8), "kind {kind} seed {seed}: {} vs {}", res.gamma_final, reference.value);
            assert!(common::rel(res.gamma_final, reference.value) <= 1e-8, "kind {kind} seed {seed}: {} vs {}", res.gamma_final, reference.value);
        }
    }
}

#[test]
fn kreiss_constants_are_at_least_one() {
    let cfg = SolverConfig::default();
    for seed in 0..4u64 {
        for kind in 0..2 {
            let obj = common::validation_objective(2000 + seed, kind);
            let res = solver::solve(&obj, &solver::default_starts(&obj).unwrap(), &cfg).unwrap();
            assert!(res.quantity >= 1.0 - 1e-10, "{}", res.quantity);
        }
    }
}

#[test]
fn bad_start_forces_a_restart() {
    let cfg = SolverConfig::default();
    let (a, b) = demo::two_basin_dtu(0.5);
    let res = solver::dist_uncontrollability(&a, &b, &[C64::new(0.9, 0.0)], &cfg).unwrap();
    assert!(res.restarts.iter().any(|r| r.mid_round), "{:?}", res.restarts);
    assert!((res.minimizer.unwrap().re - 5.0).abs() < 0.01);
    check_invariants(&Objective::dist_uncontrollability(a, b).unwrap(), &res, &cfg);

    let a = demo::two_basin_discrete();
    let res = solver::kreiss_discrete(&a, &[C64::new(2.0, 0.0)], &cfg).unwrap();
    assert!(!res.restarts.is_empty());
    assert!(common::rel(res.quantity, 5.0 / 3.0) <= 1e-12, "{}", res.quantity);
}

#[test]
fn worker_count_does_not_change_the_result() {
    let obj = common::validation_objective(31, 1);
    let starts = solver::default_starts(&obj).unwrap();
    let run = |workers| solver::solve(&obj, &starts, &SolverConfig { workers, trace: true, ..Default::default() }).unwrap();
    let base = run(1);
    for w in [4, 8] {
        assert_eq!(run(w), base);
    }
}

#[test]
fn jordan_and_coupled_fixtures() {
    let cfg = SolverConfig::default();
    let res = solver::kreiss_continuous(&demo::jordan_continuous(), &[C64::new(1.0, 0.0)], &cfg).unwrap();
    assert!(common::rel(res.quantity, 2.6) <= 1e-12, "{}", res.quantity);
    let res = solver::kreiss_discrete(&demo::coupled_discrete(), &[C64::new(1.5, 0.0)], &cfg).unwrap();
    assert!(common::rel(res.quantity, 1.25f64.sqrt()) <= 1e-12, "{}", res.quantity);
}
