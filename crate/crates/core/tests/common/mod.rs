#![allow(dead_code)]

use flatcouple::flatness::{build_joint_diffeo, DiffeoOutput, FlatJetBundle};
use flatcouple::plant::{
    joint_dynamics, ControlInput, CouplingModel, JointState, PureFeedback, Quadrotor, SubsystemState,
};
use flatcouple::{Error, Jet, Real, Result};
use rand::Rng;

/// Flat output `y_c(t) = base_c + amp_c sin(freq_c t + phase_c)` per axis.
#[derive(Debug, Clone, Copy)]
pub struct Wave {
    pub base: [f64; 2],
    pub amp: [f64; 2],
    pub freq: [f64; 2],
    pub phase: [f64; 2],
}

impl Wave {
    /// `[y, y', ..., y^(n)]` of axis `c` at `t`.
    pub fn derivatives(&self, c: usize, t: f64, n: usize) -> Vec<f64> {
        (0..=n)
            .map(|d| {
                let arg = self.freq[c] * t + self.phase[c] + d as f64 * std::f64::consts::FRAC_PI_2;
                let wave = self.amp[c] * self.freq[c].powi(d as i32) * arg.sin();
                if d == 0 {
                    self.base[c] + wave
                } else {
                    wave
                }
            })
            .collect()
    }

    pub fn jets(&self, t: f64, order: usize) -> Vec<Jet> {
        (0..2)
            .map(|c| Jet::from_derivatives(&self.derivatives(c, t, order)).unwrap())
            .collect()
    }

    pub fn position(&self, t: f64) -> [f64; 2] {
        [self.derivatives(0, t, 0)[0], self.derivatives(1, t, 0)[0]]
    }
}

/// Stacked vehicles one metre apart, index 0 on top, wandering gently
/// enough to stay inside the regular domain.
pub fn random_waves<R: Rng>(rng: &mut R, n: usize) -> Vec<Wave> {
    (0..n)
        .map(|i| Wave {
            base: [rng.gen_range(-0.3..0.3), (n - i) as f64],
            amp: [rng.gen_range(0.0..0.3), rng.gen_range(0.0..0.1)],
            freq: [rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0)],
            phase: [rng.gen_range(0.0..6.3), rng.gen_range(0.0..6.3)],
        })
        .collect()
}

pub fn bundle_at(waves: &[Wave], t: f64, order: usize) -> FlatJetBundle {
    FlatJetBundle::new(waves.iter().map(|w| w.jets(t, order)).collect()).unwrap()
}

pub fn diffeo_at(sys: &Quadrotor, waves: &[Wave], model: &CouplingModel, t: f64) -> Result<DiffeoOutput> {
    let bundle = bundle_at(waves, t, 4);
    let graph = model.graph(&bundle.positions())?;
    build_joint_diffeo(sys, &bundle, model, &graph)
}

/// One RK4 step with a time-varying input `u(t)`.
pub fn rk4_varying<F>(sys: &Quadrotor, model: &CouplingModel, x: &JointState, t: f64, h: f64, u: F) -> JointState
where
    F: Fn(f64) -> ControlInput,
{
    let f = |s: &JointState, tt: f64| joint_dynamics(sys, s, &u(tt), model).unwrap();
    let k1 = f(x, t);
    let k2 = f(&x.add_scaled(&k1, h / 2.0), t + h / 2.0);
    let k3 = f(&x.add_scaled(&k2, h / 2.0), t + h / 2.0);
    let k4 = f(&x.add_scaled(&k3, h), t + h);
    x.add_scaled(&k1, h / 6.0)
        .add_scaled(&k2, h / 3.0)
        .add_scaled(&k3, h / 3.0)
        .add_scaled(&k4, h / 6.0)
}

/// Random state with vehicle `i` at altitude roughly `n - i` and a thrust
/// well away from zero.
pub fn random_state<R: Rng>(rng: &mut R, n: usize, spread: f64) -> JointState {
    JointState::new(
        (0..n)
            .map(|i| {
                SubsystemState::quad(
                    [
                        rng.gen_range(-spread..spread),
                        (n - i) as f64 + rng.gen_range(-0.2..0.2),
                    ],
                    [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                    [rng.gen_range(5.0..15.0), rng.gen_range(-0.5..0.5)],
                    [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                )
            })
            .collect(),
    )
}

pub fn random_input<R: Rng>(rng: &mut R, n: usize) -> ControlInput {
    ControlInput::new(
        (0..n)
            .map(|_| vec![rng.gen_range(-2.0..2.0), rng.gen_range(-0.5..0.5)])
            .collect(),
    )
}

/// Planar linear test system `x' = lambda x`.
pub struct Linear(pub f64);

impl PureFeedback for Linear {
    fn relative_degree(&self) -> usize {
        1
    }
    fn input_dim(&self) -> usize {
        2
    }
    fn level_rate<R: Real>(&self, _k: usize, lower: &[Vec<R>], _next: &[R]) -> Vec<R> {
        lower[0].iter().map(|&x| x * self.0).collect()
    }
    fn inverse_level(&self, _k: usize, _lower: &[Vec<Jet>], _rate: &[Jet]) -> Result<Vec<Jet>> {
        Err(Error::Dimension("not invertible".into()))
    }
    fn level_determinant(&self, _k: usize, _lower: &[Vec<f64>], _next: &[f64]) -> f64 {
        0.0
    }
}
