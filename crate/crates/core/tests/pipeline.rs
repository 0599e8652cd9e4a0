use approx::assert_relative_eq;
use proptest::prelude::*;

use reservoir_sense::dynamics::{
    markovian_moments, markovian_steady_state, steady_state_moments, MarkovNoise, MomentSolver,
    SolverOptions,
};
use reservoir_sense::oracle::{compare_states, oracle_trajectory, OracleConfig};
use reservoir_sense::qfi::{QfiEvaluator, QfiSettings, Target};
use reservoir_sense::{Complex64, Drive, Error, G6Form, ProbeSpec, ReservoirSpec, SimGrid};

fn res(gamma: f64, cutoff: f64, temperature: f64) -> ReservoirSpec {
    ReservoirSpec::new(gamma, cutoff, temperature).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn trajectories_respect_the_uncertainty_relation(
        gamma in 0.05f64..5.0,
        cutoff in 1.0f64..30.0,
        temp in 0.05f64..6.0,
        theta in 0.0f64..std::f64::consts::PI,
        squeeze in 0.0f64..2.0,
    ) {
        let probe = ProbeSpec::default().with_theta(theta).with_squeeze(squeeze);
        let r = res(gamma, cutoff, temp);
        let solver = MomentSolver::new(&probe, &r, SolverOptions::default()).unwrap();
        for s in solver.trajectory(&SimGrid::uniform(8.0, 17)).unwrap().states {
            prop_assert!(s.det() >= 1.0 - 1e-9, "det {}", s.det());
            prop_assert!((s.sigma[(0, 1)] - s.sigma[(1, 0)]).abs() < 1e-12);
        }
    }

    #[test]
    fn qfi_is_nonnegative(
        gamma in 0.2f64..4.0,
        temp in 0.2f64..5.0,
        t in 0.05f64..6.0,
        alpha in 0.0f64..2.0,
    ) {
        let probe = ProbeSpec::default().with_alpha(Complex64::new(alpha, 0.0)).with_squeeze(0.5);
        let r = res(gamma, 10.0, temp);
        for target in [Target::Gamma, Target::Omega] {
            let f = QfiEvaluator::new(&probe, &r, target, QfiSettings::default()).unwrap().at(t).unwrap();
            prop_assert!(f >= 0.0 && f.is_finite(), "{target:?}: {f}");
        }
    }
}

#[test]
fn steady_state_is_the_long_time_limit() {
    let probe = ProbeSpec::default().with_squeeze(1.0).with_theta(0.4);
    let r = res(2.0, 10.0, 0.7);
    let late = MomentSolver::new(&probe, &r, SolverOptions::default())
        .unwrap()
        .state_at(80.0)
        .unwrap();
    let limit = steady_state_moments(&probe, &r, SolverOptions::default()).unwrap();
    assert_relative_eq!(late.sigma, limit.sigma, max_relative = 1e-6);
}

#[test]
fn markovian_moments_relax_to_the_gibbs_state() {
    let probe = ProbeSpec::default().with_squeeze(0.5);
    for (gamma, temp) in [(0.5, 0.3), (1.0, 2.0), (3.0, 5.0)] {
        let r = res(gamma, 10.0, temp);
        let gibbs = 1.0 / (0.5 / temp).tanh();
        let inf = markovian_steady_state(&probe, &r, MarkovNoise::Quantum).unwrap();
        assert_relative_eq!(inf.sigma[(0, 0)], gibbs, max_relative = 1e-12);
        assert_relative_eq!(inf.sigma[(1, 1)], gibbs, max_relative = 1e-12);
        let late = markovian_moments(&probe, &r, 200.0, MarkovNoise::Quantum).unwrap();
        assert_relative_eq!(late.sigma, inf.sigma, max_relative = 1e-9);
    }
}

#[test]
fn g6_forms_coincide_at_unit_frequency() {
    let probe = ProbeSpec::default().with_squeeze(0.8).with_theta(1.1);
    let r = res(3.0, 10.0, 1.0);
    let a = MomentSolver::new(&probe, &r, SolverOptions::default()).unwrap();
    let b = MomentSolver::new(
        &probe,
        &r,
        SolverOptions {
            g6: G6Form::Literal,
            ..SolverOptions::default()
        },
    )
    .unwrap();
    for t in [0.5, 2.0, 7.0] {
        assert_eq!(a.state_at(t).unwrap(), b.state_at(t).unwrap());
    }
}

/// Small finite-bath run, frozen as a regression and checked against the
/// analytic moments.
#[test]
fn small_oracle_regression() {
    let probe = ProbeSpec::default()
        .with_squeeze(0.7)
        .with_theta(0.5)
        .with_drive(Some(Drive {
            amplitude: 1.0,
            frequency: 1.5,
        }));
    let r = res(1.0, 5.0, 1.0);
    let config = OracleConfig {
        modes: 120,
        bandwidth: 20.0,
    };
    let oracle = oracle_trajectory(&probe, &r, config, 0.25, 12).unwrap();
    let solver = MomentSolver::new(&probe, &r, SolverOptions::default()).unwrap();
    let exact: Vec<_> = (0..=12)
        .map(|k| solver.state_at(0.25 * k as f64).unwrap())
        .collect();
    let dev = compare_states(&exact, &oracle);
    assert!(dev.sigma_rel < 2e-3 && dev.d_abs < 1e-3, "{dev:?}");

    let end = oracle.last().unwrap();
    assert_relative_eq!(end.sigma[(0, 0)], FROZEN_SXX, max_relative = 1e-9);
    assert_relative_eq!(end.d[0], FROZEN_DX, max_relative = 1e-9);
}

const FROZEN_SXX: f64 = 2.249968284651797;
const FROZEN_DX: f64 = 0.24029732214695396;

#[test]
fn oracle_refuses_recurrent_horizons() {
    let config = OracleConfig {
        modes: 50,
        bandwidth: 20.0,
    };
    let err = oracle_trajectory(&ProbeSpec::default(), &res(1.0, 10.0, 1.0), config, 0.5, 20);
    assert!(matches!(err, Err(Error::Recurrence { .. })));
}
