mod common;

use common::Linear;
use flatcouple::control::Variant;
use flatcouple::plant::{ControlInput, CouplingModel, JointState, Quadrotor, SubsystemState};
use flatcouple::sim::{self, reference, rk4_step, run, run_from, sweep_threshold, ScenarioConfig, Start};
use flatcouple::Error;

fn planar(x: f64) -> JointState {
    JointState::new(vec![SubsystemState::new(vec![vec![x, -x]])])
}

fn linear_error(lambda: f64, h: f64) -> f64 {
    let next = rk4_step(
        &Linear(lambda),
        &planar(1.0),
        &ControlInput::zeros(1, 2),
        &CouplingModel::nominal(),
        h,
    )
    .unwrap();
    (next.subsystems[0].levels[0][0] - (lambda * h).exp()).abs()
}

#[test]
fn rk4_local_error_is_fifth_order() {
    let lambda = -1.3;
    let hs = [0.2, 0.1, 0.05, 0.025];
    let errs: Vec<f64> = hs.iter().map(|&h| linear_error(lambda, h)).collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 4.9, "observed order {order}");
    }
    // leading term lambda^5 h^5 / 120
    let h = 0.025;
    let lead = (lambda * h).powi(5).abs() / 120.0;
    assert!((errs[3] - lead).abs() < 0.1 * lead);
}

#[test]
fn rk4_leaves_rest_and_integrates_polynomials() {
    let sys = Quadrotor::default();
    let nominal = CouplingModel::nominal();
    let still = planar(0.7);
    let next = rk4_step(&Linear(0.0), &still, &ControlInput::zeros(1, 2), &nominal, 0.1).unwrap();
    assert_eq!(next, still);
    // level thrust with zero tilt: vx constant, vy = T/m - g
    let state = JointState::new(vec![SubsystemState::quad(
        [0.5, 1.0],
        [0.3, -0.2],
        [9.81, 0.0],
        [0.0, 0.0],
    )]);
    let h = 0.01;
    let next = rk4_step(&sys, &state, &ControlInput::zeros(1, 2), &nominal, h).unwrap();
    let g = sys.params.weight() / sys.params.mass;
    let ay = 9.81 / sys.params.mass - g;
    let p = next.subsystems[0].position();
    assert!((p[0] - (0.5 + 0.3 * h)).abs() < 1e-15);
    assert!((p[1] - (1.0 - 0.2 * h + 0.5 * ay * h * h)).abs() < 1e-15);
}

#[test]
fn reference_examples() {
    let cfg = ScenarioConfig::default();
    let (z, v) = reference(0, 0.0, &cfg);
    assert_eq!((z[0], z[1]), (-2.5, 4.0));
    assert_eq!(v, vec![0.0, 0.0]);
    assert_eq!(reference(1, cfg.duration / 2.0, &cfg).0[0], 0.0);
    assert_eq!(reference(1, 0.0, &cfg).0[..3], [2.5, 3.0, -1.0]);
    assert_eq!(reference(3, cfg.duration, &cfg).0[..2], [-2.5, 1.0]);
}

fn short(variant: Variant) -> ScenarioConfig {
    ScenarioConfig {
        n: 3,
        duration: 1.0,
        variant,
        ..ScenarioConfig::default()
    }
}

#[test]
fn runs_are_bit_identical() {
    for variant in [Variant::Exact, Variant::Approximate, Variant::Nominal] {
        let cfg = short(variant);
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_csv(), b.to_csv());
    }
}

#[test]
fn metric_is_recomputable_from_the_log() {
    let cfg = short(Variant::Approximate);
    let log = run(&cfg).unwrap();
    assert_eq!(log.steps.len(), 100);
    let mut total = 0.0;
    for step in &log.steps {
        for (i, v) in step.vehicles.iter().enumerate() {
            let (z, _) = reference(i, step.t, &cfg);
            assert_eq!(v.position_ref, [z[0], z[1]]);
            total += (v.state[0] - z[0]).hypot(v.state[1] - z[1]);
        }
    }
    let want = total * cfg.dt / (cfg.n as f64 * cfg.duration);
    let got = log.mean_position_error();
    assert!((got - want).abs() <= 1e-12 * want.max(1e-300), "{got} vs {want}");
    let per = log.per_vehicle_error();
    let mean = per.iter().sum::<f64>() / per.len() as f64;
    assert!((mean - got).abs() <= 1e-12 * got);
}

#[test]
fn csv_has_one_row_per_step_and_vehicle() {
    let log = run(&short(Variant::Exact)).unwrap();
    let csv = log.to_csv();
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert_eq!(header, "t,vehicle,px,py,vx,vy,T,theta,Tdot,omega,u1,u2,err,S,edges");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 300);
    for row in &rows {
        assert_eq!(row.split(',').count(), 15);
    }
    assert!(rows[0].ends_with(",1>2;1>3;2>3"));
}

#[test]
fn inputs_are_held_between_control_ticks() {
    let cfg = ScenarioConfig {
        dt: 0.0025,
        ..short(Variant::Exact)
    };
    let log = run(&cfg).unwrap();
    assert_eq!(log.steps.len(), 400);
    let mut changes = 0;
    for (k, w) in log.steps.windows(2).enumerate() {
        let changed = w[0]
            .vehicles
            .iter()
            .zip(&w[1].vehicles)
            .any(|(a, b)| a.input != b.input);
        // step k + 1 starts at (k + 1) dt; ticks fall on multiples of 4 steps
        if (k + 1) % 4 != 0 {
            assert!(!changed, "input changed between ticks at step {}", k + 1);
        } else if changed {
            changes += 1;
        }
    }
    assert!(changes > 90);
}

#[test]
fn lone_vehicle_is_tracked_exactly() {
    for variant in [Variant::Exact, Variant::Approximate, Variant::Nominal] {
        let cfg = ScenarioConfig {
            n: 1,
            variant,
            ..ScenarioConfig::default()
        };
        assert!(run(&cfg).unwrap().mean_position_error() <= 1e-6);
    }
}

#[test]
fn tiny_threshold_is_the_nominal_controller() {
    let base = short(Variant::Nominal);
    let nominal = run(&base).unwrap().summary();
    let rows = sweep_threshold(&base, &[1e-9], 1).unwrap();
    assert_eq!(rows[0].mean_position_error, nominal.mean_position_error);
    assert_eq!(rows[0].mean_info_size, 1.0);
}

#[test]
fn unbounded_threshold_approaches_the_exact_controller() {
    // From a hover at m g both controllers share the same start-up transient,
    // which dominates the residual thrust-is-weight modelling error.
    let base = ScenarioConfig {
        start: Start::Weight,
        ..ScenarioConfig::default()
    };
    let exact = run(&base).unwrap().mean_position_error();
    let nominal = run(&ScenarioConfig {
        variant: Variant::Nominal,
        ..base.clone()
    })
    .unwrap()
    .mean_position_error();
    let wide = sweep_threshold(&base, &[f64::INFINITY], 1).unwrap()[0].clone();
    println!(
        "exact {exact:e}, unbounded approximate {:e}, nominal {nominal:e}",
        wide.mean_position_error
    );
    // every vehicle hears from all vehicles above it
    assert_eq!(wide.mean_info_size, 2.5);
    assert!(
        wide.mean_position_error < 2.0 * exact,
        "{} vs exact {exact}",
        wide.mean_position_error
    );
    assert!(wide.mean_position_error < nominal);
}

#[test]
fn sweep_rows_follow_input_order_and_ignore_jobs() {
    let base = short(Variant::Approximate);
    let deltas = [2.5, 0.5, 1.5];
    let serial = sweep_threshold(&base, &deltas, 1).unwrap();
    let parallel = sweep_threshold(&base, &deltas, 3).unwrap();
    assert_eq!(serial, parallel);
    assert_eq!(serial.iter().map(|r| r.threshold).collect::<Vec<_>>(), deltas);
    let csv = sim::sweep_csv(&serial);
    assert!(csv.starts_with("threshold,e_pos,iqr,mean_S\n2.5,"));
}

#[test]
fn failures_report_the_step() {
    let cfg = short(Variant::Exact);
    let mut start = sim::initial_state(&cfg).unwrap();
    // a downward-pointing thrust leaves the thrust domain on the first step
    start.subsystems[1].levels[2][0] = 1e-3;
    start.subsystems[1].levels[3][0] = -50.0;
    match run_from(&cfg, start) {
        Err(Error::Simulation { step, t, source }) => {
            assert_eq!(step, 1);
            assert_eq!(t, cfg.dt);
            assert!(matches!(*source, Error::ThrustDomain { subsystem: 1, .. }), "{source}");
        }
        other => panic!("expected a simulation error, got {other:?}"),
    }
    let wrong = JointState::new(vec![SubsystemState::quad([0.0, 1.0], [0.0; 2], [9.81, 0.0], [0.0; 2])]);
    assert!(matches!(run_from(&cfg, wrong), Err(Error::Dimension(_))));
}

#[test]
fn invalid_configs_are_rejected() {
    let bad = ScenarioConfig {
        dt: 0.003,
        ..ScenarioConfig::default()
    };
    assert!(matches!(run(&bad), Err(Error::Config(_))));
    let bad = ScenarioConfig {
        n: 0,
        ..ScenarioConfig::default()
    };
    assert!(matches!(run(&bad), Err(Error::Config(_))));
}
