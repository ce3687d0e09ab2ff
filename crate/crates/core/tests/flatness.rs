mod common;

use common::{diffeo_at, random_waves, rk4_varying, Wave};
use flatcouple::downwash::{drag_force, DownwashParams};
use flatcouple::flatness::{build_joint_diffeo, forward_flat_state, FlatJetBundle};
use flatcouple::plant::{
    joint_dynamics, ControlInput, CouplingModel, JointState, QuadParams, Quadrotor, SubsystemState,
};
use flatcouple::Jet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn exact(torque: bool) -> CouplingModel {
    CouplingModel::exact(DownwashParams::default(), QuadParams::default(), torque)
}

/// Integrate from the recovered initial state under the recovered input and
/// return the largest position deviation from the flat outputs.
fn open_loop_deviation(sys: &Quadrotor, waves: &[Wave], model: &CouplingModel, horizon: f64, h: f64) -> f64 {
    let mut x = diffeo_at(sys, waves, model, 0.0).unwrap().state;
    let input = |t: f64| -> ControlInput { diffeo_at(sys, waves, model, t).unwrap().input };
    let steps = (horizon / h).round() as usize;
    let mut worst = 0.0f64;
    for k in 0..steps {
        let t = k as f64 * h;
        x = rk4_varying(sys, model, &x, t, h, input);
        for (w, s) in waves.iter().zip(&x.subsystems) {
            let p = w.position(t + h);
            worst = worst
                .max((s.levels[0][0] - p[0]).abs())
                .max((s.levels[0][1] - p[1]).abs());
        }
    }
    worst
}

#[test]
fn recovered_state_and_input_reproduce_the_flat_outputs() {
    let sys = Quadrotor::default();
    let model = exact(false);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let waves = random_waves(&mut rng, 3);
        let dev = open_loop_deviation(&sys, &waves, &model, 1.0, 1e-3);
        assert!(dev < 1e-6, "deviation {dev:e} for {waves:?}");
        worst = worst.max(dev);
    }
    println!("worst open-loop deviation over 100 bundles: {worst:e}");
}

#[test]
fn round_trip_with_torque_coupling() {
    let sys = Quadrotor::default();
    let model = exact(true);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let waves = random_waves(&mut rng, 3);
        assert!(open_loop_deviation(&sys, &waves, &model, 1.0, 1e-3) < 1e-6);
    }
}

#[test]
fn level_maps_satisfy_the_joint_dynamics() {
    let sys = Quadrotor::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for torque in [false, true] {
        let model = exact(torque);
        for _ in 0..20 {
            let waves = random_waves(&mut rng, 3);
            let t = rng.gen_range(0.0..3.0);
            let out = diffeo_at(&sys, &waves, &model, t).unwrap();
            let rates = joint_dynamics(&sys, &out.state, &out.input, &model).unwrap();
            for (i, maps) in out.maps.iter().enumerate() {
                for k in 1..=4 {
                    for (c, jet) in maps[k - 1].iter().enumerate() {
                        let want = rates.subsystems[i].levels[k - 1][c];
                        let got = jet.derivative(1);
                        assert!(
                            (got - want).abs() <= 1e-10 * (1.0 + want.abs()),
                            "i {i} k {k} c {c}: {got} vs {want}"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn nominal_coupling_collapses_to_independent_diffeos() {
    let sys = Quadrotor::default();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..20 {
        let waves = random_waves(&mut rng, 4);
        let joint = diffeo_at(&sys, &waves, &CouplingModel::nominal(), 0.7).unwrap();
        for (i, w) in waves.iter().enumerate() {
            let single = diffeo_at(&sys, std::slice::from_ref(w), &CouplingModel::nominal(), 0.7).unwrap();
            for (a, b) in joint.maps[i].iter().flatten().zip(single.maps[0].iter().flatten()) {
                for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
                    assert!((x - y).abs() <= 1e-14 * (1.0 + y.abs()));
                }
            }
        }
    }
}

/// Flat jets of a random state: measured derivatives plus a random virtual input.
fn random_bundle(rng: &mut ChaCha8Rng, sys: &Quadrotor, n: usize) -> (FlatJetBundle, Vec<[f64; 2]>) {
    let state = common::random_state(rng, n, 0.5);
    let model = exact(false);
    let graph = model.graph(&state.positions()).unwrap();
    let z = forward_flat_state(sys, &state, &model, &graph).unwrap();
    let outputs = z
        .iter()
        .map(|zi| {
            let v = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            FlatJetBundle::jets_from_flat_point(zi, &v).unwrap()
        })
        .collect();
    (FlatJetBundle::new(outputs).unwrap(), state.positions())
}

fn perturb(jets: &mut [Jet], rng: &mut ChaCha8Rng) {
    for jet in jets {
        let c: Vec<f64> = jet.coeffs().iter().map(|x| x + rng.gen_range(-0.05..0.05)).collect();
        *jet = Jet::from_coeffs(&c).unwrap();
    }
}

#[test]
fn exact_maps_depend_only_on_ancestors() {
    let sys = Quadrotor::default();
    let model = exact(false);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut exercised = 0;
    for _ in 0..50 {
        let (bundle, positions) = random_bundle(&mut rng, &sys, 4);
        let graph = model.graph(&positions).unwrap();
        let base = build_joint_diffeo(&sys, &bundle, &model, &graph).unwrap();
        for i in 0..4 {
            let anc = graph.ancestors(i);
            let mut moved = bundle.clone();
            for j in (0..4).filter(|j| !anc.contains(j)) {
                perturb(&mut moved.outputs_mut()[j], &mut rng);
                exercised += 1;
            }
            let other = build_joint_diffeo(&sys, &moved, &model, &graph).unwrap();
            assert_eq!(base.maps[i], other.maps[i], "subsystem {i}");
        }
    }
    assert!(exercised > 0);
}

#[test]
fn approximate_maps_depend_only_on_nearby_hops() {
    let sys = Quadrotor::default();
    let model = CouplingModel::approximate(DownwashParams::default(), QuadParams::default(), false, [0.8, 1.5]);
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut changed_inside = 0;
    for _ in 0..50 {
        let (bundle, positions) = random_bundle(&mut rng, &sys, 5);
        let graph = model.graph(&positions).unwrap();
        let base = build_joint_diffeo(&sys, &bundle, &model, &graph).unwrap();
        for i in 0..5 {
            for k in 1..=5 {
                let hops = graph.within_hops(i, k - 1);
                let tight = graph.info_set(i, k, &model.structure());
                assert!(tight.is_subset(&hops));
                let mut moved = bundle.clone();
                for j in (0..5).filter(|j| !tight.contains(j)) {
                    perturb(&mut moved.outputs_mut()[j], &mut rng);
                }
                let other = build_joint_diffeo(&sys, &moved, &model, &graph).unwrap();
                assert_eq!(base.maps[i][k - 1], other.maps[i][k - 1], "subsystem {i} level {k}");
                // a neighbour inside the set does move the map
                if let Some(&j) = tight.iter().find(|&&j| j != i) {
                    let mut moved = bundle.clone();
                    perturb(&mut moved.outputs_mut()[j], &mut rng);
                    let other = build_joint_diffeo(&sys, &moved, &model, &graph).unwrap();
                    if base.maps[i][k - 1] != other.maps[i][k - 1] {
                        changed_inside += 1;
                    }
                }
            }
        }
    }
    assert!(changed_inside > 0, "no coupled pair was exercised");
}

#[test]
fn forward_map_recovers_an_analytic_trajectory() {
    let sys = Quadrotor::default();
    let wave = Wave {
        base: [0.0, 0.0],
        amp: [1.0, 1.0],
        freq: [1.0, 1.0],
        phase: [0.0, std::f64::consts::FRAC_PI_2],
    };
    for &t in &[0.0, 0.4, 1.9, 3.3] {
        let out = diffeo_at(&sys, &[wave], &CouplingModel::nominal(), t).unwrap();
        let graph = CouplingModel::nominal().graph(&out.state.positions()).unwrap();
        let z = forward_flat_state(&sys, &out.state, &CouplingModel::nominal(), &graph).unwrap();
        for d in 0..4 {
            for c in 0..2 {
                let want = wave.derivatives(c, t, d)[d];
                assert!((z[0][d * 2 + c] - want).abs() < 1e-9, "d {d} c {c}");
            }
        }
    }
}

#[test]
fn forward_acceleration_matches_differenced_velocity() {
    let sys = Quadrotor::default();
    let model = exact(false);
    let state = JointState::new(vec![
        SubsystemState::quad([0.05, 1.8], [0.2, 0.0], [9.9, 0.05], [0.3, -0.2]),
        SubsystemState::quad([0.0, 1.0], [0.1, 0.1], [9.7, -0.02], [0.1, 0.4]),
    ]);
    let input = ControlInput::zeros(2, 2);
    let graph = model.graph(&state.positions()).unwrap();
    let z = forward_flat_state(&sys, &state, &model, &graph).unwrap();
    // the lower vehicle's vertical acceleration carries the drag
    let nominal = 9.7 * (-0.02f64).cos() - 9.81;
    let drag = drag_force(0.05, 0.8, 9.9, &DownwashParams::default()).unwrap();
    assert!((z[1][5] - nominal - drag).abs() < 1e-12);
    let h = 1e-3;
    let step = |s: &JointState, dt: f64| {
        let k1 = joint_dynamics(&sys, s, &input, &model).unwrap();
        let k2 = joint_dynamics(&sys, &s.add_scaled(&k1, dt / 2.0), &input, &model).unwrap();
        let k3 = joint_dynamics(&sys, &s.add_scaled(&k2, dt / 2.0), &input, &model).unwrap();
        let k4 = joint_dynamics(&sys, &s.add_scaled(&k3, dt), &input, &model).unwrap();
        s.add_scaled(&k1, dt / 6.0)
            .add_scaled(&k2, dt / 3.0)
            .add_scaled(&k3, dt / 3.0)
            .add_scaled(&k4, dt / 6.0)
    };
    let fwd = step(&state, h);
    let back = step(&state, -h);
    for c in 0..2 {
        let fd = (fwd.subsystems[1].levels[1][c] - back.subsystems[1].levels[1][c]) / (2.0 * h);
        assert!(
            (fd - z[1][4 + c]).abs() < 1e-4,
            "component {c}: {fd} vs {}",
            z[1][4 + c]
        );
        let jerk = (fwd.subsystems[1].levels[1][c] - 2.0 * state.subsystems[1].levels[1][c]
            + back.subsystems[1].levels[1][c])
            / (h * h);
        assert!((jerk - z[1][6 + c]).abs() < 1e-3, "jerk {c}: {jerk} vs {}", z[1][6 + c]);
    }
}

#[test]
fn stacked_hover_compensates_downwash() {
    let sys = Quadrotor::default();
    let model = exact(false);
    let dw = DownwashParams::default();
    let waves: Vec<Wave> = (0..3)
        .map(|i| Wave {
            base: [0.1 * i as f64, (3 - i) as f64],
            amp: [0.0; 2],
            freq: [1.0; 2],
            phase: [0.0; 2],
        })
        .collect();
    let out = diffeo_at(&sys, &waves, &model, 0.0).unwrap();
    let t: Vec<f64> = out.state.subsystems.iter().map(|s| s.levels[2][0]).collect();
    assert_eq!(t[0], 9.81);
    let t1 = 9.81 - drag_force(-0.1, 1.0, t[0], &dw).unwrap();
    assert!((t[1] - t1).abs() < 1e-13);
    let t2 = 9.81 - drag_force(-0.2, 2.0, t[0], &dw).unwrap() - drag_force(-0.1, 1.0, t[1], &dw).unwrap();
    assert!((t[2] - t2).abs() < 1e-13);
    for u in &out.input.inputs {
        assert!(u.iter().all(|x| x.abs() < 1e-13));
    }
}
