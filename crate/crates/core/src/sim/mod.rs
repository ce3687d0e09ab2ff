//! Closed-loop swarm simulation, logging and the threshold sweep.

mod config;

pub use config::{ScenarioConfig, Start};

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::control::{distributed_control_step, required_senders, GainSet, Messages};
use crate::error::{Error, Result};
use crate::flatness::{build_joint_diffeo, forward_flat_state, FlatJetBundle};
use crate::graph::CouplingGraph;
use crate::plant::{
    check_thrust, joint_dynamics, ControlInput, CouplingModel, JointState, PureFeedback, Quadrotor, SubsystemState,
};

/// Crossing reference for vehicle `i` (0-based): flat state and virtual input.
///
/// Odd vehicles (1-based) start at `-vT/2` heading right, even ones at
/// `+vT/2` heading left; vehicle `i` flies at altitude `N - i`.
pub fn reference(i: usize, t: f64, cfg: &ScenarioConfig) -> (Vec<f64>, Vec<f64>) {
    let sign = if (i + 1).is_multiple_of(2) { 1.0 } else { -1.0 };
    let v = cfg.speed;
    let px = sign * (v * cfg.duration / 2.0 - v * t);
    let py = (cfg.n - i) as f64;
    (vec![px, py, -sign * v, 0.0, 0.0, 0.0, 0.0, 0.0], vec![0.0, 0.0])
}

/// State at `t = 0`, on the reference.
///
/// [`Start::Balanced`] maps the reference flat outputs through the joint
/// diffeomorphism of the true coupling, so lower vehicles already carry the
/// thrust that cancels the downwash. [`Start::Weight`] hovers every vehicle
/// at `m g`, which leaves lower vehicles slightly off equilibrium.
pub fn initial_state(cfg: &ScenarioConfig) -> Result<JointState> {
    let weight = JointState::new(
        (0..cfg.n)
            .map(|i| {
                let (z, _) = reference(i, 0.0, cfg);
                SubsystemState::quad([z[0], z[1]], [z[2], z[3]], [cfg.quad.weight(), 0.0], [0.0, 0.0])
            })
            .collect(),
    );
    match cfg.start {
        Start::Weight => Ok(weight),
        Start::Balanced => {
            let outputs = (0..cfg.n)
                .map(|i| {
                    let (z, v) = reference(i, 0.0, cfg);
                    FlatJetBundle::jets_from_flat_point(&z, &v)
                })
                .collect::<Result<Vec<_>>>()?;
            let plant = plant_model(cfg);
            let graph = plant.graph(&weight.positions())?;
            let sys = Quadrotor::new(cfg.quad);
            Ok(build_joint_diffeo(&sys, &FlatJetBundle::new(outputs)?, &plant, &graph)?.state)
        }
    }
}

/// Controller-side coupling model for the configured variant.
pub fn controller_model(cfg: &ScenarioConfig) -> CouplingModel {
    match cfg.variant {
        crate::control::Variant::Exact => CouplingModel::exact(cfg.downwash, cfg.quad, cfg.torque_coupling),
        crate::control::Variant::Approximate => {
            CouplingModel::approximate(cfg.downwash, cfg.quad, cfg.torque_coupling, cfg.threshold)
        }
        crate::control::Variant::Nominal => CouplingModel::nominal(),
    }
}

/// Coupling the simulated plant is subject to.
pub fn plant_model(cfg: &ScenarioConfig) -> CouplingModel {
    CouplingModel::exact(cfg.downwash, cfg.quad, cfg.torque_coupling)
}

/// Classic fourth-order Runge–Kutta step with the input held.
pub fn rk4_step<S: PureFeedback>(
    sys: &S,
    state: &JointState,
    input: &ControlInput,
    model: &CouplingModel,
    h: f64,
) -> Result<JointState> {
    let k1 = joint_dynamics(sys, state, input, model)?;
    let k2 = joint_dynamics(sys, &state.add_scaled(&k1, h / 2.0), input, model)?;
    let k3 = joint_dynamics(sys, &state.add_scaled(&k2, h / 2.0), input, model)?;
    let k4 = joint_dynamics(sys, &state.add_scaled(&k3, h), input, model)?;
    let next = state
        .add_scaled(&k1, h / 6.0)
        .add_scaled(&k2, h / 3.0)
        .add_scaled(&k3, h / 3.0)
        .add_scaled(&k4, h / 6.0);
    Ok(next)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleRecord {
    /// `[px, py, vx, vy, T, theta, Tdot, omega]`
    pub state: [f64; 8],
    /// Input held over the step that ended here.
    pub input: [f64; 2],
    pub position_ref: [f64; 2],
    /// Euclidean position error.
    pub error: f64,
    /// `|S^i|` at the last control tick, counting the vehicle itself.
    pub info_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    /// Controller coupling graph at the last tick.
    pub edges: String,
    pub vehicles: Vec<VehicleRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub config: ScenarioConfig,
    pub steps: Vec<StepRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub mean_position_error: f64,
    pub per_vehicle_error: Vec<f64>,
    pub max_thrust_deviation: f64,
    pub mean_info_size: f64,
    pub steps: usize,
}

impl RunLog {
    /// `e_pos = dt / (N T) sum_k sum_i |p_i(t_k) - p_i^ref(t_k)|`
    pub fn mean_position_error(&self) -> f64 {
        let c = &self.config;
        let total: f64 = self.steps.iter().flat_map(|s| s.vehicles.iter().map(|v| v.error)).sum();
        total * c.dt / (c.n as f64 * c.duration)
    }

    pub fn per_vehicle_error(&self) -> Vec<f64> {
        let c = &self.config;
        (0..c.n)
            .map(|i| self.steps.iter().map(|s| s.vehicles[i].error).sum::<f64>() * c.dt / c.duration)
            .collect()
    }

    pub fn summary(&self) -> RunSummary {
        let weight = self.config.quad.weight();
        let max_thrust_deviation = self
            .steps
            .iter()
            .flat_map(|s| s.vehicles.iter().map(move |v| (v.state[4] - weight).abs()))
            .fold(0.0, f64::max);
        let count = self.steps.len() * self.config.n;
        let info: usize = self
            .steps
            .iter()
            .flat_map(|s| s.vehicles.iter().map(|v| v.info_size))
            .sum();
        RunSummary {
            mean_position_error: self.mean_position_error(),
            per_vehicle_error: self.per_vehicle_error(),
            max_thrust_deviation,
            mean_info_size: if count == 0 { 0.0 } else { info as f64 / count as f64 },
            steps: self.steps.len(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,vehicle,px,py,vx,vy,T,theta,Tdot,omega,u1,u2,err,S,edges\n");
        for step in &self.steps {
            for (i, v) in step.vehicles.iter().enumerate() {
                let _ = write!(s, "{},{}", step.t, i + 1);
                for x in v.state.iter().chain(v.input.iter()) {
                    let _ = write!(s, ",{x}");
                }
                let _ = writeln!(s, ",{},{},{}", v.error, v.info_size, step.edges);
            }
        }
        s
    }

    pub fn summary_text(&self, wall_time: Option<f64>) -> String {
        let sum = self.summary();
        let mut s = String::new();
        let _ = writeln!(s, "variant: {}", self.config.variant.name());
        let _ = writeln!(s, "n: {}", self.config.n);
        let _ = writeln!(s, "steps: {}", sum.steps);
        let _ = writeln!(s, "e_pos: {}", sum.mean_position_error);
        for (i, e) in sum.per_vehicle_error.iter().enumerate() {
            let _ = writeln!(s, "e_pos_{}: {e}", i + 1);
        }
        let _ = writeln!(s, "max_thrust_deviation: {}", sum.max_thrust_deviation);
        let _ = writeln!(s, "mean_info_size: {}", sum.mean_info_size);
        if let Some(w) = wall_time {
            let _ = writeln!(s, "wall_time_s: {w:.3}");
        }
        s
    }
}

fn wrap(t: f64, step: usize) -> impl Fn(Error) -> Error {
    move |e| Error::Simulation {
        t,
        step,
        source: Box::new(e),
    }
}

/// One controller tick: measured flat states, virtual inputs for everyone,
/// then each vehicle's input from its gathered neighbours.
fn control_tick(
    sys: &Quadrotor,
    cfg: &ScenarioConfig,
    ctrl: &CouplingModel,
    gains: &GainSet,
    state: &JointState,
    t: f64,
) -> Result<(ControlInput, CouplingGraph, Vec<usize>)> {
    // Each vehicle differentiates its own outputs through the controller's
    // coupling model, which only reaches into its information set.
    let graph = ctrl.graph(&state.positions())?;
    let measured = forward_flat_state(sys, state, ctrl, &graph)?;
    let refs: Vec<_> = (0..cfg.n).map(|i| reference(i, t, cfg)).collect();
    let mut messages = Messages::new();
    for i in 0..cfg.n {
        let v = crate::control::tracking_virtual_input(&measured[i], &refs[i].0, &refs[i].1, &gains.gain);
        messages.insert(
            i,
            crate::control::FlatPoint {
                z: measured[i].clone(),
                v,
            },
        );
    }
    let mut inputs = Vec::with_capacity(cfg.n);
    let mut sizes = Vec::with_capacity(cfg.n);
    for i in 0..cfg.n {
        let senders = required_senders(sys, ctrl, &graph, i);
        let neighbors: Messages = senders
            .iter()
            .filter(|&&j| j != i)
            .map(|&j| (j, messages[&j].clone()))
            .collect();
        let (u, _) = distributed_control_step(
            sys,
            ctrl,
            &graph,
            gains,
            i,
            &measured[i],
            (&refs[i].0, &refs[i].1),
            &neighbors,
        )?;
        inputs.push(u);
        sizes.push(senders.len());
    }
    Ok((ControlInput::new(inputs), graph, sizes))
}

/// Simulate the configured scenario.
pub fn run(cfg: &ScenarioConfig) -> Result<RunLog> {
    cfg.validate()?;
    let start = initial_state(cfg).map_err(wrap(0.0, 0))?;
    run_from(cfg, start)
}

/// [`run`] from a given initial state.
pub fn run_from(cfg: &ScenarioConfig, start: JointState) -> Result<RunLog> {
    cfg.validate()?;
    if start.len() != cfg.n {
        return Err(Error::Dimension(format!(
            "{} initial states for n = {}",
            start.len(),
            cfg.n
        )));
    }
    let sys = Quadrotor::new(cfg.quad);
    let plant = plant_model(cfg);
    let ctrl = controller_model(cfg);
    let gains = GainSet::lqr(4, 2, cfg.lqr_q, cfg.lqr_r)?;
    let hold = cfg.hold_steps()?;
    let total = cfg.steps();
    let mut state = start;
    let mut input = ControlInput::zeros(cfg.n, 2);
    let mut edges = String::new();
    let mut sizes = vec![1; cfg.n];
    let mut steps = Vec::with_capacity(total);
    for k in 0..total {
        let t = k as f64 * cfg.dt;
        if k % hold == 0 {
            let (u, graph, s) = control_tick(&sys, cfg, &ctrl, &gains, &state, t).map_err(wrap(t, k))?;
            input = u;
            edges = graph.edge_list();
            sizes = s;
        }
        state = rk4_step(&sys, &state, &input, &plant, cfg.dt).map_err(wrap(t, k))?;
        let t_next = (k + 1) as f64 * cfg.dt;
        if !state.is_finite() {
            return Err(wrap(t_next, k + 1)(Error::NonFinite { t: t_next }));
        }
        check_thrust(&state).map_err(wrap(t_next, k + 1))?;
        let vehicles = state
            .subsystems
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let (z, _) = reference(i, t_next, cfg);
                let p = s.position();
                let mut x = [0.0; 8];
                for (slot, v) in x.iter_mut().zip(s.levels.iter().flatten()) {
                    *slot = *v;
                }
                VehicleRecord {
                    state: x,
                    input: [input.inputs[i][0], input.inputs[i][1]],
                    position_ref: [z[0], z[1]],
                    error: (p[0] - z[0]).hypot(p[1] - z[1]),
                    info_size: sizes[i],
                }
            })
            .collect();
        steps.push(StepRecord {
            t: t_next,
            edges: edges.clone(),
            vehicles,
        });
    }
    Ok(RunLog {
        config: cfg.clone(),
        steps,
    })
}

/// [`run`] plus its wall-clock time in seconds.
pub fn run_timed(cfg: &ScenarioConfig) -> Result<(RunLog, f64)> {
    let start = Instant::now();
    let log = run(cfg)?;
    Ok((log, start.elapsed().as_secs_f64()))
}

/// Write `contents` to `path` via a temporary file and rename.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub threshold: f64,
    pub mean_position_error: f64,
    /// Interquartile range of the per-vehicle errors.
    pub error_iqr: f64,
    pub mean_info_size: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn interquartile_range(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.75) - quantile(&v, 0.25)
}

fn sweep_one(base: &ScenarioConfig, delta: f64) -> Result<SweepRow> {
    let cfg = ScenarioConfig {
        variant: crate::control::Variant::Approximate,
        threshold: [delta, delta],
        ..base.clone()
    };
    let sum = run(&cfg)?.summary();
    Ok(SweepRow {
        threshold: delta,
        mean_position_error: sum.mean_position_error,
        error_iqr: interquartile_range(&sum.per_vehicle_error),
        mean_info_size: sum.mean_info_size,
    })
}

/// Approximate-model runs over square thresholds `(d, d)`, rows in input
/// order. `jobs > 1` runs them on a thread pool; results do not depend on it.
pub fn sweep_threshold(base: &ScenarioConfig, thresholds: &[f64], jobs: usize) -> Result<Vec<SweepRow>> {
    if jobs <= 1 {
        return thresholds.iter().map(|&d| sweep_one(base, d)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| thresholds.par_iter().map(|&d| sweep_one(base, d)).collect())
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("threshold,e_pos,iqr,mean_S\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            r.threshold, r.mean_position_error, r.error_iqr, r.mean_info_size
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_start_and_end() {
        let cfg = ScenarioConfig::default();
        let (z, v) = reference(0, 0.0, &cfg);
        assert_eq!(&z[..4], &[-2.5, 4.0, 1.0, 0.0]);
        assert_eq!(v, vec![0.0, 0.0]);
        let (z, _) = reference(1, 0.0, &cfg);
        assert_eq!(&z[..4], &[2.5, 3.0, -1.0, 0.0]);
        let (z, _) = reference(0, 5.0, &cfg);
        assert_eq!(z[0], 2.5);
    }

    #[test]
    fn quartiles() {
        assert_eq!(interquartile_range(&[1.0, 2.0, 3.0, 4.0, 5.0]), 2.0);
        assert_eq!(interquartile_range(&[3.0]), 0.0);
    }

    #[test]
    fn single_vehicle_run_is_short_and_accurate() {
        let cfg = ScenarioConfig {
            n: 1,
            duration: 0.5,
            ..ScenarioConfig::default()
        };
        let log = run(&cfg).unwrap();
        assert_eq!(log.steps.len(), 50);
        assert!(log.mean_position_error() < 1e-6, "{}", log.mean_position_error());
    }
}
