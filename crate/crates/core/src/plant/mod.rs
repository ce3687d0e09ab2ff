//! Pure-feedback subsystems and their coupled joint dynamics `f = fbar + Delta`.
//!
//! Each subsystem state is split into `r` levels of width `m`; level `k`
//! evolves as `xdot_k = fbar_k(x_1, ..., x_{k+1}) + Delta_k(x)`, with the
//! input standing in for `x_{r+1}`. Levels are numbered from one throughout.

mod coupling;
mod quadrotor;

pub use coupling::{CouplingKind, CouplingModel};
pub use quadrotor::{QuadParams, Quadrotor};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::CouplingGraph;
use crate::jets::{Jet, Real};

/// A regular pure-feedback subsystem with known inverse level maps.
pub trait PureFeedback {
    /// Number of levels `r`.
    fn relative_degree(&self) -> usize;
    /// Width `m` of every level and of the input.
    fn input_dim(&self) -> usize;
    /// `fbar_k(x_1..x_k, next)`; `lower` holds at least `x_1..x_k` and
    /// `next` is `x_{k+1}` or, for `k = r`, the input.
    fn level_rate<R: Real>(&self, k: usize, lower: &[Vec<R>], next: &[R]) -> Vec<R>;
    /// `h_k`: recovers `next` from `x_1..x_k` and a value of `fbar_k`.
    fn inverse_level(&self, k: usize, lower: &[Vec<Jet>], rate: &[Jet]) -> Result<Vec<Jet>>;
    /// `|det D_next fbar_k|`.
    fn level_determinant(&self, k: usize, lower: &[Vec<f64>], next: &[f64]) -> f64;
    /// `(level, component)` entries that are angles, defined modulo 2 pi.
    fn angle_components(&self) -> Vec<(usize, usize)> {
        Vec::new()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsystemState {
    pub levels: Vec<Vec<f64>>,
}

impl SubsystemState {
    pub fn new(levels: Vec<Vec<f64>>) -> Self {
        SubsystemState { levels }
    }

    /// Quadrotor state from position, velocity, `(T, theta)` and `(Tdot, omega)`.
    pub fn quad(p: [f64; 2], v: [f64; 2], thrust_angle: [f64; 2], rates: [f64; 2]) -> Self {
        SubsystemState {
            levels: vec![p.to_vec(), v.to_vec(), thrust_angle.to_vec(), rates.to_vec()],
        }
    }

    /// Level `k` (one-based).
    pub fn level(&self, k: usize) -> &[f64] {
        &self.levels[k - 1]
    }

    pub fn position(&self) -> [f64; 2] {
        [self.levels[0][0], self.levels[0][1]]
    }

    pub fn flat(&self) -> Vec<f64> {
        self.levels.iter().flatten().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub subsystems: Vec<SubsystemState>,
}

impl JointState {
    pub fn new(subsystems: Vec<SubsystemState>) -> Self {
        JointState { subsystems }
    }

    pub fn len(&self) -> usize {
        self.subsystems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsystems.is_empty()
    }

    pub fn positions(&self) -> Vec<[f64; 2]> {
        self.subsystems.iter().map(|s| s.position()).collect()
    }

    /// Level-major view `x_k = [x^1_k, ..., x^N_k]`.
    pub fn level(&self, k: usize) -> Vec<f64> {
        self.subsystems
            .iter()
            .flat_map(|s| s.level(k).iter().copied())
            .collect()
    }

    /// `self + h * rate`, level by level.
    pub fn add_scaled(&self, rate: &JointState, h: f64) -> JointState {
        let subsystems = self
            .subsystems
            .iter()
            .zip(&rate.subsystems)
            .map(|(s, d)| SubsystemState {
                levels: s
                    .levels
                    .iter()
                    .zip(&d.levels)
                    .map(|(x, dx)| x.iter().zip(dx).map(|(a, b)| a + h * b).collect())
                    .collect(),
            })
            .collect();
        JointState { subsystems }
    }

    pub fn is_finite(&self) -> bool {
        self.subsystems
            .iter()
            .all(|s| s.levels.iter().flatten().all(|v| v.is_finite()))
    }

    pub fn zeros_like(&self) -> JointState {
        self.add_scaled(self, -1.0)
    }
}

/// Per-subsystem inputs `u^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlInput {
    pub inputs: Vec<Vec<f64>>,
}

impl ControlInput {
    pub fn new(inputs: Vec<Vec<f64>>) -> Self {
        ControlInput { inputs }
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        ControlInput {
            inputs: vec![vec![0.0; m]; n],
        }
    }
}

/// `fbar^i_k + Delta^i_k` for one subsystem and level. `get(j, s)` returns
/// level `s` of subsystem `j`, with `s = r + 1` meaning the input.
pub fn coupled_level_rate<S, R, F>(
    sys: &S,
    model: &CouplingModel,
    graph: &CouplingGraph,
    i: usize,
    k: usize,
    get: &F,
) -> Result<Vec<R>>
where
    S: PureFeedback,
    R: Real,
    F: Fn(usize, usize) -> Result<Vec<R>>,
{
    let lower = (1..=k).map(|s| get(i, s)).collect::<Result<Vec<_>>>()?;
    let next = get(i, k + 1)?;
    let mut rate = sys.level_rate(k, &lower, &next);
    if let Some(delta) = model.level_term(i, k, graph, get)? {
        for (r, d) in rate.iter_mut().zip(delta) {
            *r = *r + d;
        }
    }
    Ok(rate)
}

fn check_dimensions<S: PureFeedback>(sys: &S, state: &JointState, input: &ControlInput) -> Result<()> {
    let (r, m) = (sys.relative_degree(), sys.input_dim());
    if input.inputs.len() != state.len() {
        return Err(Error::Dimension(format!(
            "{} inputs for {} subsystems",
            input.inputs.len(),
            state.len()
        )));
    }
    for (i, s) in state.subsystems.iter().enumerate() {
        if s.levels.len() != r || s.levels.iter().any(|l| l.len() != m) || input.inputs[i].len() != m {
            return Err(Error::Dimension(format!(
                "subsystem {i} does not have {r} levels of width {m}"
            )));
        }
    }
    Ok(())
}

/// Joint state derivative under the given coupling model.
pub fn joint_dynamics<S: PureFeedback>(
    sys: &S,
    state: &JointState,
    input: &ControlInput,
    model: &CouplingModel,
) -> Result<JointState> {
    check_dimensions(sys, state, input)?;
    let graph = model.graph(&state.positions())?;
    joint_dynamics_on(sys, state, input, model, &graph)
}

/// [`joint_dynamics`] with a precomputed coupling graph.
pub fn joint_dynamics_on<S: PureFeedback>(
    sys: &S,
    state: &JointState,
    input: &ControlInput,
    model: &CouplingModel,
    graph: &CouplingGraph,
) -> Result<JointState> {
    let r = sys.relative_degree();
    let get = |j: usize, s: usize| -> Result<Vec<f64>> {
        Ok(if s == r + 1 {
            input.inputs[j].clone()
        } else {
            state.subsystems[j].levels[s - 1].clone()
        })
    };
    let subsystems = (0..state.len())
        .map(|i| {
            let levels = (1..=r)
                .map(|k| coupled_level_rate(sys, model, graph, i, k, &get))
                .collect::<Result<Vec<_>>>()?;
            Ok(SubsystemState { levels })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(JointState { subsystems })
}

/// Thrust positivity monitor for quadrotor swarms.
pub fn check_thrust(state: &JointState) -> Result<()> {
    for (i, s) in state.subsystems.iter().enumerate() {
        let thrust = s.levels[2][0];
        if !(thrust > 0.0) {
            return Err(Error::ThrustDomain { subsystem: i, thrust });
        }
    }
    Ok(())
}

/// Dense Jacobian of the joint level map `f_k` with respect to `x_{k+1}`
/// (or the joint input for `k = r`), by forward-mode jets.
pub fn joint_level_jacobian<S: PureFeedback>(
    sys: &S,
    state: &JointState,
    input: &ControlInput,
    model: &CouplingModel,
    k: usize,
) -> Result<DMatrix<f64>> {
    check_dimensions(sys, state, input)?;
    let (r, m, n) = (sys.relative_degree(), sys.input_dim(), state.len());
    let graph = model.graph(&state.positions())?;
    let mut jac = DMatrix::zeros(n * m, n * m);
    for col in 0..n * m {
        let (cj, cc) = (col / m, col % m);
        let get = |j: usize, s: usize| -> Result<Vec<Jet>> {
            let raw = if s == r + 1 {
                &input.inputs[j]
            } else {
                &state.subsystems[j].levels[s - 1]
            };
            Ok(raw
                .iter()
                .enumerate()
                .map(|(c, &v)| {
                    if s == k + 1 && j == cj && c == cc {
                        Jet::variable(v, 1)
                    } else {
                        Jet::constant(v, 1)
                    }
                })
                .collect())
        };
        for i in 0..n {
            let rate = coupled_level_rate(sys, model, &graph, i, k, &get)?;
            for (c, d) in rate.iter().enumerate() {
                jac[(i * m + c, col)] = d.coeff(1);
            }
        }
    }
    Ok(jac)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelRegularity {
    pub level: usize,
    /// `|det D fbar^i_k|` per subsystem.
    pub subsystem: Vec<f64>,
    /// Product over subsystems.
    pub product: f64,
    /// Determinant of the dense coupled joint Jacobian.
    pub joint: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub threshold: f64,
    pub levels: Vec<LevelRegularity>,
}

impl RegularityReport {
    /// `(level, subsystem, value)` entries that are non-finite or below the threshold.
    pub fn violations(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for l in &self.levels {
            for (i, &d) in l.subsystem.iter().enumerate() {
                if !(d.is_finite() && d.abs() >= self.threshold) {
                    out.push((l.level, i, d));
                }
            }
        }
        out
    }

    pub fn is_regular(&self) -> bool {
        self.violations().is_empty()
    }

    /// Smallest level-`k` subsystem determinant.
    pub fn min_level(&self, k: usize) -> f64 {
        self.levels[k - 1]
            .subsystem
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

pub const DEFAULT_REGULARITY_THRESHOLD: f64 = 1e-8;

/// Level-wise determinants of the partial Jacobians `D_{x_{k+1}} f_k`.
pub fn regularity_check<S: PureFeedback>(
    sys: &S,
    state: &JointState,
    input: &ControlInput,
    model: &CouplingModel,
    threshold: f64,
) -> Result<RegularityReport> {
    let r = sys.relative_degree();
    let mut levels = Vec::with_capacity(r);
    for k in 1..=r {
        let subsystem: Vec<f64> = state
            .subsystems
            .iter()
            .zip(&input.inputs)
            .map(|(s, u)| {
                let next = if k == r { u.as_slice() } else { s.level(k + 1) };
                sys.level_determinant(k, &s.levels[..k], next).abs()
            })
            .collect();
        let product = subsystem.iter().product();
        let joint = joint_level_jacobian(sys, state, input, model, k)?.determinant().abs();
        levels.push(LevelRegularity {
            level: k,
            subsystem,
            product,
            joint,
        });
    }
    Ok(RegularityReport { threshold, levels })
}
