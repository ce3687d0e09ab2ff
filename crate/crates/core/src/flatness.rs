//! Joint flatness diffeomorphism of a coupled pure-feedback network.
//!
//! Given jets of every flat output `y^i = x^i_1`, the level maps are built
//! recursively:
//!
//! ```text
//! Phi^i_1 = y^i
//! Phi^i_k = h^i_{k-1}(Phi^i_1..Phi^i_{k-1},
//!                     d/dt Phi^i_{k-1} - Delta^i_{k-1}(Phi_{<k}, Phi^{<i}_k))
//! ```
//!
//! for `k = 2..=r+1`, in increasing `(k - 1) * N + i`. Every map is a jet,
//! so `d/dt` is an exact coefficient shift and each level loses one order.
//! The constant terms are the states and, at `k = r + 1`, the inputs.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::graph::CouplingGraph;
use crate::jets::Jet;
use crate::plant::{coupled_level_rate, ControlInput, CouplingModel, JointState, PureFeedback, SubsystemState};

/// Jet-valued flat outputs, one `m`-vector of jets per subsystem.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatJetBundle {
    outputs: Vec<Vec<Jet>>,
    order: usize,
}

impl FlatJetBundle {
    pub fn new(outputs: Vec<Vec<Jet>>) -> Result<Self> {
        let order = outputs
            .first()
            .and_then(|o| o.first())
            .map(|j| j.order())
            .ok_or_else(|| Error::Dimension("empty flat bundle".into()))?;
        if outputs.iter().flatten().any(|j| j.order() != order) {
            return Err(Error::Dimension("flat output jets must share one order".into()));
        }
        Ok(FlatJetBundle { outputs, order })
    }

    /// Assemble `y^i` from a flat state `z = [y, y', ..., y^(r-1)]` (blocks of
    /// width `m`) and the virtual input `v = y^(r)`.
    pub fn jets_from_flat_point(z: &[f64], v: &[f64]) -> Result<Vec<Jet>> {
        let m = v.len();
        if m == 0 || !z.len().is_multiple_of(m) {
            return Err(Error::Dimension(format!(
                "flat state of length {} for width {m}",
                z.len()
            )));
        }
        let r = z.len() / m;
        (0..m)
            .map(|c| {
                let mut derivs: Vec<f64> = (0..r).map(|d| z[d * m + c]).collect();
                derivs.push(v[c]);
                Jet::from_derivatives(&derivs)
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn output(&self, i: usize) -> &[Jet] {
        &self.outputs[i]
    }

    pub fn outputs(&self) -> &[Vec<Jet>] {
        &self.outputs
    }

    pub fn outputs_mut(&mut self) -> &mut [Vec<Jet>] {
        &mut self.outputs
    }

    pub fn positions(&self) -> Vec<[f64; 2]> {
        self.outputs.iter().map(|y| [y[0].value(), y[1].value()]).collect()
    }
}

/// Recovered states, inputs and every level map `Phi^i_k` (index `[i][k-1]`).
#[derive(Debug, Clone, PartialEq)]
pub struct DiffeoOutput {
    pub state: JointState,
    pub input: ControlInput,
    pub maps: Vec<Vec<Vec<Jet>>>,
}

impl DiffeoOutput {
    /// Move every angle onto the branch closest to `previous`.
    pub fn unwrap_against<S: PureFeedback>(&mut self, sys: &S, previous: &JointState) {
        for (i, sub) in self.state.subsystems.iter_mut().enumerate() {
            for (level, comp) in sys.angle_components() {
                let old = sub.levels[level - 1][comp];
                let new = unwrap_angle(old, previous.subsystems[i].levels[level - 1][comp]);
                sub.levels[level - 1][comp] = new;
                let jet = &mut self.maps[i][level - 1][comp];
                *jet = *jet + (new - old);
            }
        }
    }
}

/// `theta + 2 pi n` closest to `previous`.
pub fn unwrap_angle(theta: f64, previous: f64) -> f64 {
    theta + TAU * ((previous - theta) / TAU).round()
}

/// Memoized evaluator of the level maps over a possibly partial bundle.
struct Evaluator<'a, S> {
    sys: &'a S,
    model: &'a CouplingModel,
    graph: &'a CouplingGraph,
    flats: &'a [Option<Vec<Jet>>],
    /// Subsystem on whose behalf a partial evaluation runs.
    requester: Option<usize>,
    memo: Vec<Vec<Option<Vec<Jet>>>>,
}

impl<'a, S: PureFeedback> Evaluator<'a, S> {
    fn new(
        sys: &'a S,
        model: &'a CouplingModel,
        graph: &'a CouplingGraph,
        flats: &'a [Option<Vec<Jet>>],
        requester: Option<usize>,
    ) -> Result<Self> {
        let r = sys.relative_degree();
        if graph.len() != flats.len() {
            return Err(Error::Dimension(format!(
                "graph has {} nodes, bundle has {} subsystems",
                graph.len(),
                flats.len()
            )));
        }
        for y in flats.iter().flatten() {
            if y.len() != sys.input_dim() {
                return Err(Error::Dimension(format!("flat output of width {}", y.len())));
            }
            if let Some(j) = y.iter().find(|j| j.order() < r) {
                return Err(Error::Dimension(format!(
                    "flat jets of order {} cannot reach the input (needs {r})",
                    j.order()
                )));
            }
        }
        Ok(Evaluator {
            sys,
            model,
            graph,
            flats,
            requester,
            memo: vec![vec![None; r + 1]; flats.len()],
        })
    }

    fn phi(&mut self, i: usize, k: usize) -> Result<Vec<Jet>> {
        if let Some(done) = &self.memo[i][k - 1] {
            return Ok(done.clone());
        }
        let value = if k == 1 {
            self.flats[i].clone().ok_or(Error::InformationContract {
                subsystem: self.requester.unwrap_or(i),
                missing: i,
            })?
        } else {
            self.level_map(i, k)?
        };
        self.memo[i][k - 1] = Some(value.clone());
        Ok(value)
    }

    fn level_map(&mut self, i: usize, k: usize) -> Result<Vec<Jet>> {
        let lower = (1..k).map(|s| self.phi(i, s)).collect::<Result<Vec<_>>>()?;
        for (j, s) in self.model.dependencies(i, k - 1, self.graph) {
            if s >= k && !(s == k && j < i) {
                return Err(Error::OrderingViolation { from: j, to: i });
            }
            self.phi(j, s)?;
        }
        let mut rate = lower[k - 2].iter().map(|y| y.shift()).collect::<Result<Vec<_>>>()?;
        let memo = &self.memo;
        let get = |j: usize, s: usize| -> Result<Vec<Jet>> {
            Ok(memo[j][s - 1].clone().expect("dependency evaluated above"))
        };
        if let Some(delta) = self.model.level_term(i, k - 1, self.graph, &get)? {
            for (r, d) in rate.iter_mut().zip(delta) {
                *r -= d;
            }
        }
        let order = rate[0].order();
        let lower: Vec<Vec<Jet>> = lower
            .iter()
            .map(|l| l.iter().map(|j| j.truncate(order)).collect())
            .collect();
        let next = self.sys.inverse_level(k - 1, &lower, &rate).map_err(|e| match e {
            Error::SingularInverse { level, detail, .. } => Error::SingularInverse {
                subsystem: i,
                level,
                detail,
            },
            other => other,
        })?;
        if next.iter().any(|j| !j.is_finite()) {
            return Err(Error::SingularInverse {
                subsystem: i,
                level: k - 1,
                detail: "non-finite inverse".into(),
            });
        }
        Ok(next)
    }
}

/// Evaluate every `Phi^i_k` in increasing `(k - 1) * N + i`.
pub fn build_joint_diffeo<S: PureFeedback>(
    sys: &S,
    bundle: &FlatJetBundle,
    model: &CouplingModel,
    graph: &CouplingGraph,
) -> Result<DiffeoOutput> {
    let r = sys.relative_degree();
    let n = bundle.len();
    let flats: Vec<Option<Vec<Jet>>> = bundle.outputs.iter().cloned().map(Some).collect();
    let mut ev = Evaluator::new(sys, model, graph, &flats, None)?;
    for k in 1..=r + 1 {
        for i in 0..n {
            ev.phi(i, k)?;
        }
    }
    let maps: Vec<Vec<Vec<Jet>>> = ev
        .memo
        .into_iter()
        .map(|levels| levels.into_iter().map(|l| l.expect("all levels evaluated")).collect())
        .collect();
    let values = |jets: &[Jet]| jets.iter().map(|j| j.value()).collect::<Vec<_>>();
    let state = JointState::new(
        maps.iter()
            .map(|m| SubsystemState::new(m[..r].iter().map(|l| values(l)).collect()))
            .collect(),
    );
    let input = ControlInput::new(maps.iter().map(|m| values(&m[r])).collect());
    Ok(DiffeoOutput { state, input, maps })
}

/// `Phi^i_k` for one subsystem from the flat outputs it was handed. Entries
/// that are `None` were not gathered; needing one is an information-contract
/// violation.
pub fn local_level_map<S: PureFeedback>(
    sys: &S,
    gathered: &[Option<Vec<Jet>>],
    model: &CouplingModel,
    graph: &CouplingGraph,
    i: usize,
    k: usize,
) -> Result<Vec<Jet>> {
    let mut ev = Evaluator::new(sys, model, graph, gathered, Some(i))?;
    ev.phi(i, k)
}

/// Flat state `z^i = [y, y', ..., y^(r-1)]` of every subsystem, from the
/// physical state under the given coupling. Derivatives are obtained by
/// Taylor-integrating the coupled dynamics, so no input is needed.
pub fn forward_flat_state<S: PureFeedback>(
    sys: &S,
    state: &JointState,
    model: &CouplingModel,
    graph: &CouplingGraph,
) -> Result<Vec<Vec<f64>>> {
    let (r, m, n) = (sys.relative_degree(), sys.input_dim(), state.len());
    let mut jets: Vec<Vec<Vec<Jet>>> = state
        .subsystems
        .iter()
        .map(|s| {
            s.levels
                .iter()
                .map(|l| l.iter().map(|&v| Jet::constant(v, 0)).collect())
                .collect()
        })
        .collect();
    // Level k carries r - k derivatives; coefficient n+1 of x_k comes from
    // coefficient n of f_k, which only needs order-n jets of x_{<=k+1}.
    for order in 0..r.saturating_sub(1) {
        let snapshot = &jets;
        let get = |j: usize, s: usize| -> Result<Vec<Jet>> {
            Ok(snapshot[j][s - 1].iter().map(|x| x.truncate(order)).collect())
        };
        let mut updates = Vec::new();
        for i in 0..n {
            for k in 1..=r {
                if r - k > order {
                    let rate = coupled_level_rate(sys, model, graph, i, k, &get)?;
                    updates.push((i, k, rate));
                }
            }
        }
        for (i, k, rate) in updates {
            for (x, d) in jets[i][k - 1].iter_mut().zip(rate) {
                let mut c = x.coeffs().to_vec();
                c.push(d.coeff(order) / (order + 1) as f64);
                *x = Jet::from_coeffs(&c)?;
            }
        }
    }
    Ok(jets
        .iter()
        .map(|levels| {
            let y = &levels[0];
            (0..r).flat_map(|d| (0..m).map(move |c| y[c].derivative(d))).collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::downwash::{drag_force, DownwashParams};
    use crate::plant::{QuadParams, Quadrotor};

    fn constant_bundle(alts: &[f64], order: usize) -> FlatJetBundle {
        FlatJetBundle::new(
            alts.iter()
                .map(|&a| vec![Jet::constant(0.0, order), Jet::constant(a, order)])
                .collect(),
        )
        .unwrap()
    }

    fn exact() -> CouplingModel {
        CouplingModel::exact(DownwashParams::default(), QuadParams::default(), false)
    }

    #[test]
    fn hover_bundle_recovers_hover_state() {
        let sys = Quadrotor::default();
        let b = constant_bundle(&[1.0], 4);
        let out = build_joint_diffeo(&sys, &b, &CouplingModel::nominal(), &CouplingGraph::empty(1)).unwrap();
        assert_eq!(out.state.subsystems[0].levels[2], vec![9.81, 0.0]);
        assert_eq!(out.input.inputs[0], vec![0.0, 0.0]);
    }

    #[test]
    fn stacked_hover_thrust_compensates_downwash() {
        let sys = Quadrotor::default();
        let b = constant_bundle(&[3.0, 2.0, 1.0], 4);
        let model = exact();
        let g = model.graph(&b.positions()).unwrap();
        let out = build_joint_diffeo(&sys, &b, &model, &g).unwrap();
        let p = DownwashParams::default();
        let t0 = 9.81;
        let t1 = 9.81 - drag_force(0.0, 1.0, t0, &p).unwrap();
        let t2 = 9.81 - drag_force(0.0, 2.0, t0, &p).unwrap() - drag_force(0.0, 1.0, t1, &p).unwrap();
        let got: Vec<f64> = out.state.subsystems.iter().map(|s| s.levels[2][0]).collect();
        assert_eq!(got[0], t0);
        assert!((got[1] - t1).abs() < 1e-13);
        assert!((got[2] - t2).abs() < 1e-13);
        for s in &out.state.subsystems {
            assert!(s.levels[2][1].abs() < 1e-15);
        }
    }

    #[test]
    fn bundle_order_must_reach_the_input() {
        let sys = Quadrotor::default();
        let b = constant_bundle(&[1.0], 3);
        assert!(build_joint_diffeo(&sys, &b, &CouplingModel::nominal(), &CouplingGraph::empty(1)).is_err());
    }

    #[test]
    fn free_fall_names_the_subsystem() {
        let sys = Quadrotor::default();
        let mut b = constant_bundle(&[2.0, 1.0], 4);
        b.outputs_mut()[1][1] = Jet::from_coeffs(&[1.0, 0.0, -9.81 / 2.0, 0.0, 0.0]).unwrap();
        let err = build_joint_diffeo(&sys, &b, &CouplingModel::nominal(), &CouplingGraph::empty(2)).unwrap_err();
        assert!(matches!(
            err,
            Error::SingularInverse {
                subsystem: 1,
                level: 2,
                ..
            }
        ));
    }

    #[test]
    fn edges_against_index_order_are_rejected() {
        let sys = Quadrotor::default();
        let b = constant_bundle(&[1.0, 2.0], 4);
        let model = exact();
        let g = model.graph(&b.positions()).unwrap();
        let err = build_joint_diffeo(&sys, &b, &model, &g).unwrap_err();
        assert_eq!(err, Error::OrderingViolation { from: 1, to: 0 });
        // Position-only coupling has no same-level+1 dependency.
        let approx = CouplingModel::approximate(DownwashParams::default(), QuadParams::default(), false, [1.0, 2.0]);
        let g = approx.graph(&b.positions()).unwrap();
        assert!(build_joint_diffeo(&sys, &b, &approx, &g).is_ok());
    }

    #[test]
    fn missing_neighbor_is_a_contract_violation() {
        let sys = Quadrotor::default();
        let model = exact();
        let b = constant_bundle(&[2.0, 1.0], 4);
        let g = model.graph(&b.positions()).unwrap();
        let gathered = vec![None, Some(b.output(1).to_vec())];
        let err = local_level_map(&sys, &gathered, &model, &g, 1, 5).unwrap_err();
        assert_eq!(
            err,
            Error::InformationContract {
                subsystem: 1,
                missing: 0
            }
        );
    }

    #[test]
    fn hover_flat_state() {
        let sys = Quadrotor::default();
        let s = JointState::new(vec![SubsystemState::quad(
            [0.5, 1.0],
            [0.0, 0.0],
            [9.81, 0.0],
            [0.0, 0.0],
        )]);
        let z = forward_flat_state(&sys, &s, &CouplingModel::nominal(), &CouplingGraph::empty(1)).unwrap();
        assert_eq!(z[0], vec![0.5, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn unwrap_picks_nearest_branch() {
        assert!((unwrap_angle(-3.1, 3.1) - (-3.1 + TAU)).abs() < 1e-15);
        assert_eq!(unwrap_angle(0.2, 0.1), 0.2);
        assert!((unwrap_angle(0.0, 4.0 * TAU + 0.1) - 4.0 * TAU).abs() < 1e-12);
    }
}
