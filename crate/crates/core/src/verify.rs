//! Property checks on a configured scenario, reported as pass/fail lines.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::control::GainSet;
use crate::downwash::{drag_force, drag_torque};
use crate::error::{Error, Result};
use crate::flatness::{build_joint_diffeo, forward_flat_state, FlatJetBundle};
use crate::jets::Jet;
use crate::oracle;
use crate::plant::{regularity_check, ControlInput, Quadrotor, DEFAULT_REGULARITY_THRESHOLD};
use crate::sim::{controller_model, initial_state, plant_model, ScenarioConfig, Start};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: &'static str, outcome: Result<String>) {
        let (passed, detail) = match outcome {
            Ok(d) => (true, d),
            Err(e) => (false, e.to_string()),
        };
        self.checks.push(Check { name, passed, detail });
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        Ok(())
    }
}

fn fail(msg: String) -> Error {
    Error::Synthesis(msg)
}

/// Run every check on the configuration's initial state. Parameter
/// problems that the properties can name (zero inertia, tied altitudes)
/// are reported as failed checks rather than rejected up front.
pub fn verify(cfg: &ScenarioConfig) -> VerifyReport {
    let mut report = VerifyReport::default();
    let sys = Quadrotor::new(cfg.quad);
    // The weight start exists for every configuration, even degenerate ones.
    let state = initial_state(&ScenarioConfig {
        start: Start::Weight,
        ..cfg.clone()
    })
    .expect("weight start is infallible");
    let plant = plant_model(cfg);
    let ctrl = controller_model(cfg);

    report.push(
        "ordering",
        plant
            .graph(&state.positions())
            .map(|g| format!("edges [{}]", g.edge_list())),
    );

    report.push(
        "regularity",
        regularity_check(
            &sys,
            &state,
            &ControlInput::zeros(cfg.n, 2),
            &plant,
            DEFAULT_REGULARITY_THRESHOLD,
        )
        .and_then(|rep| {
            let bad = rep.violations();
            match bad.first() {
                None => Ok(format!("min level-2 determinant {:.6e}", rep.min_level(2))),
                Some(&(level, i, d)) => Err(Error::SingularInverse {
                    subsystem: i,
                    level,
                    detail: format!("|det| = {d:e} below {:e}", rep.threshold),
                }),
            }
        }),
    );

    report.push(
        "diffeo_roundtrip",
        (|| {
            let graph = plant.graph(&state.positions())?;
            let z = forward_flat_state(&sys, &state, &plant, &graph)?;
            let outputs = z
                .iter()
                .map(|zi| FlatJetBundle::jets_from_flat_point(zi, &[0.0, 0.0]))
                .collect::<Result<Vec<_>>>()?;
            let back = build_joint_diffeo(&sys, &FlatJetBundle::new(outputs)?, &plant, &graph)?;
            let mut worst = 0.0f64;
            for (a, b) in state.subsystems.iter().zip(&back.state.subsystems) {
                for (x, y) in a.levels.iter().flatten().zip(b.levels.iter().flatten()) {
                    worst = worst.max((x - y).abs() / x.abs().max(1.0));
                }
            }
            if worst <= 1e-9 {
                Ok(format!("max relative deviation {worst:.3e}"))
            } else {
                Err(fail(format!("state recovered with relative deviation {worst:.3e}")))
            }
        })(),
    );

    report.push(
        "sparsity",
        (|| {
            let graph = ctrl.graph(&state.positions())?;
            let structure = ctrl.structure();
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let z = forward_flat_state(&sys, &state, &plant, &plant.graph(&state.positions())?)?;
            let base: Vec<Vec<Jet>> = z
                .iter()
                .map(|zi| FlatJetBundle::jets_from_flat_point(zi, &[0.0, 0.0]))
                .collect::<Result<_>>()?;
            let reference = build_joint_diffeo(&sys, &FlatJetBundle::new(base.clone())?, &ctrl, &graph)?;
            let mut compared = 0;
            for i in 0..cfg.n {
                for k in 1..=5 {
                    let set = graph.info_set(i, k, &structure);
                    let mut perturbed = base.clone();
                    for (j, out) in perturbed.iter_mut().enumerate() {
                        if !set.contains(&j) {
                            for jet in out.iter_mut() {
                                let mut c = jet.coeffs().to_vec();
                                for x in c.iter_mut().skip(1) {
                                    *x += rng.gen_range(-0.1..0.1);
                                }
                                *jet = Jet::from_coeffs(&c)?;
                            }
                        }
                    }
                    let Ok(other) = build_joint_diffeo(&sys, &FlatJetBundle::new(perturbed)?, &ctrl, &graph) else {
                        continue;
                    };
                    compared += 1;
                    if other.maps[i][k - 1] != reference.maps[i][k - 1] {
                        return Err(fail(format!("map of subsystem {} level {k} moved", i + 1)));
                    }
                }
            }
            Ok(format!("{compared} level maps bitwise unchanged"))
        })(),
    );

    report.push(
        "downwash_quadrature",
        (|| {
            cfg.downwash.validate()?;
            let mut worst = 0.0f64;
            for &(dx, dy) in &[(0.0, 1.0), (0.12, 0.8), (-0.3, 2.0)] {
                let t = cfg.quad.weight();
                let f = drag_force(dx, dy, t, &cfg.downwash)?;
                let tau = drag_torque(dx, dy, t, &cfg.downwash)?;
                let fq = oracle::drag_force_quadrature(dx, dy, t, &cfg.downwash);
                let tq = oracle::drag_torque_quadrature(dx, dy, t, &cfg.downwash);
                worst = worst.max((f - fq).abs() / fq.abs().max(1e-300));
                if tq != 0.0 {
                    worst = worst.max((tau - tq).abs() / tq.abs());
                }
            }
            if worst <= 1e-10 {
                Ok(format!("max relative deviation {worst:.3e}"))
            } else {
                Err(fail(format!("closed form off by {worst:.3e}")))
            }
        })(),
    );

    report.push(
        "care",
        GainSet::lqr(4, 2, cfg.lqr_q, cfg.lqr_r).map(|g| format!("residual {:.3e}", g.residual)),
    );
    report
}
