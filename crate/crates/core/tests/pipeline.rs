//! End-to-end: config → evolution → CSV → post-processing.

use proptest::prelude::*;

use shearlab::config::RunConfig;
use shearlab::diagnostics::{physical_norms, stability_report};
use shearlab::evolution::{Dynamics, ModeState};
use shearlab::report::{decay_report, energy_report, load_mode_tables};
use shearlab::run::{evolve_scenario, run};

fn small(extra: &[&str]) -> RunConfig {
    let mut o: Vec<String> = [
        "profile.kind=quadratic",
        "profile.amplitude=0.05",
        "grid.n_points=128",
        "period_L=0.5",
        "time.T=20",
        "time.dt=0.01",
        "time.stride=20",
        "initial.project=true",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    o.extend(extra.iter().map(|s| s.to_string()));
    RunConfig::from_toml_str("", &o).unwrap()
}

#[test]
fn csv_reports_reproduce_in_memory_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = small(&[]);
    let outcome = run(&config, dir.path()).unwrap();
    let scenario = config.scenario().unwrap();
    let tables = load_mode_tables(dir.path()).unwrap();
    assert_eq!(tables.len(), 2);

    let lines = decay_report(&tables, scenario.fit_window, &config.tolerances.report()).unwrap();
    let h2 = format!("sup ratio {:.6}", outcome.report.h2_ratio);
    assert!(lines.iter().any(|l| l.contains(&h2)), "{lines:?}");
    let v2 = outcome.report.v2_fit.expect("v2 fit");
    assert!(lines.iter().any(|l| l.contains(&format!("v2_rate: exponent {:.4}", v2.exponent))), "{lines:?}");

    let energy = energy_report(&tables, config.tolerances.monotone_rel).unwrap();
    assert_eq!(energy[0].violations, outcome.report.i0_monotonicity.violations);
    assert_eq!(energy[3].violations, outcome.report.e2_monotonicity.violations);
}

#[test]
fn parallel_modes_match_sequential_evolution() {
    let config = small(&["max_mode_K=3", "initial.family=random_sine", "seed=5"]);
    let scenario = config.scenario().unwrap();
    let parallel = evolve_scenario(&config, &scenario).unwrap();
    let dynamics = Dynamics::new(&scenario.profile, &scenario.geometry, scenario.solver.as_ref()).unwrap();
    for (init, par) in scenario.initial.iter().zip(&parallel) {
        let seq = dynamics
            .evolve(init, config.time.t_final, scenario.dt, config.time.stride, scenario.weights.as_ref(), &mut |_| Ok(()))
            .unwrap();
        assert_eq!(seq.final_state().w, par.final_state().w);
        assert_eq!(seq.snapshots.len(), par.snapshots.len());
    }
    let again = stability_report(&evolve_scenario(&config, &scenario).unwrap(), scenario.fit_window, &config.tolerances.report());
    assert_eq!(again, stability_report(&parallel, scenario.fit_window, &config.tolerances.report()));
}

fn final_states() -> (RunConfig, Vec<ModeState>) {
    let config = small(&["max_mode_K=4", "initial.family=random_sine", "seed=2", "time.T=2"]);
    let scenario = config.scenario().unwrap();
    let states = evolve_scenario(&config, &scenario)
        .unwrap()
        .iter()
        .map(|h| h.final_state().clone())
        .collect();
    (config, states)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn physical_norms_are_partition_invariant(mask in proptest::collection::vec(any::<bool>(), 8)) {
        let (config, states) = final_states();
        let scenario = config.scenario().unwrap();
        let norms = |s: &[ModeState]| {
            physical_norms(s, &scenario.profile, &scenario.geometry, scenario.solver.as_ref()).unwrap()
        };
        let (all, all2) = norms(&states);
        let pick = |keep: bool| -> Vec<ModeState> {
            states.iter().zip(&mask).filter(|(_, &m)| m == keep).map(|(s, _)| s.clone()).collect()
        };
        let (a, b) = (pick(true), pick(false));
        let (na, na2) = norms(&a);
        let (nb, nb2) = norms(&b);
        prop_assert!(((na * na + nb * nb).sqrt() - all).abs() <= 1e-13 * all);
        prop_assert!(((na2 * na2 + nb2 * nb2).sqrt() - all2).abs() <= 1e-13 * all2);
    }

    #[test]
    fn config_round_trip_with_overrides(
        beta in 0.26f64..0.49,
        gamma in 0.26f64..0.49,
        n in 32usize..600,
        seed in 0..=i64::MAX as u64,
    ) {
        let o = vec![
            "weights.variant=\"h1h2\"".to_string(),
            format!("weights.beta={beta}"),
            format!("weights.gamma={gamma}"),
            format!("grid.n_points={n}"),
            format!("seed={seed}"),
        ];
        let c = RunConfig::from_toml_str("", &o).unwrap();
        let once = c.to_toml();
        let again = RunConfig::from_toml_str(&once, &[]).unwrap();
        prop_assert_eq!(&again, &c);
        prop_assert_eq!(again.to_toml(), once);
    }
}
