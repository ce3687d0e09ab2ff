use crate::error::{Error, Result};
use crate::jets::{Jet, Real};

use super::PureFeedback;

/// Mass, inertia and gravity of a planar quadrotor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadParams {
    /// [kg]
    pub mass: f64,
    /// [kg m^2]
    pub inertia: f64,
    /// [m/s^2]
    pub gravity: f64,
}

impl Default for QuadParams {
    fn default() -> Self {
        QuadParams {
            mass: 1.0,
            inertia: 0.1,
            gravity: 9.81,
        }
    }
}

impl QuadParams {
    /// Hover thrust `m g`.
    pub fn weight(&self) -> f64 {
        self.mass * self.gravity
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mass", self.mass),
            ("inertia", self.inertia),
            ("gravity", self.gravity),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("quadrotor parameter {name} = {v} must be > 0")));
            }
        }
        Ok(())
    }
}

/// Planar quadrotor with thrust extended twice.
///
/// Levels: `x1 = p`, `x2 = v`, `x3 = (T, theta)`, `x4 = (Tdot, omega)`;
/// input `u = (Tddot, tau)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quadrotor {
    pub params: QuadParams,
}

impl Quadrotor {
    pub fn new(params: QuadParams) -> Self {
        Quadrotor { params }
    }
}

/// Below this norm the thrust direction is undefined.
const FREE_FALL_EPS: f64 = 1e-9;

impl PureFeedback for Quadrotor {
    fn relative_degree(&self) -> usize {
        4
    }

    fn input_dim(&self) -> usize {
        2
    }

    fn level_rate<R: Real>(&self, k: usize, lower: &[Vec<R>], next: &[R]) -> Vec<R> {
        let q = &self.params;
        match k {
            1 | 3 => next.to_vec(),
            2 => {
                let (thrust, theta) = (next[0], next[1]);
                vec![
                    -(thrust * theta.sin()) / q.mass,
                    thrust * theta.cos() / q.mass - q.gravity,
                ]
            }
            4 => vec![next[0], next[1] / q.inertia],
            _ => panic!("quadrotor level {k} out of range (lower has {} levels)", lower.len()),
        }
    }

    fn inverse_level(&self, k: usize, _lower: &[Vec<Jet>], rate: &[Jet]) -> Result<Vec<Jet>> {
        let q = &self.params;
        match k {
            1 | 3 => Ok(rate.to_vec()),
            2 => {
                let ax = rate[0];
                let lift = rate[1] + q.gravity;
                let norm2 = ax * ax + lift * lift;
                if !(norm2.value().sqrt() > FREE_FALL_EPS) || !norm2.is_finite() {
                    return Err(Error::SingularInverse {
                        subsystem: 0,
                        level: 2,
                        detail: format!(
                            "commanded specific force ({}, {}) has no thrust direction",
                            ax.value(),
                            lift.value()
                        ),
                    });
                }
                let thrust = norm2.sqrt() * q.mass;
                let theta = (-ax).atan2(lift);
                Ok(vec![thrust, theta])
            }
            4 => Ok(vec![rate[0], rate[1] * q.inertia]),
            _ => panic!("quadrotor level {k} out of range"),
        }
    }

    fn level_determinant(&self, k: usize, _lower: &[Vec<f64>], next: &[f64]) -> f64 {
        let q = &self.params;
        match k {
            1 | 3 => 1.0,
            2 => next[0] / (q.mass * q.mass),
            4 => 1.0 / q.inertia,
            _ => panic!("quadrotor level {k} out of range"),
        }
    }

    fn angle_components(&self) -> Vec<(usize, usize)> {
        vec![(3, 1)]
    }
}
