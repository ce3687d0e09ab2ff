//! Downwash coupling models for quadrotor swarms.

use crate::downwash::{drag_force, drag_torque, DownwashParams};
use crate::error::Result;
use crate::graph::{build_graph, CouplingClass, CouplingGraph, CouplingStructure, EdgeRule};
use crate::jets::Real;

use super::QuadParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CouplingKind {
    /// No coupling.
    Nominal,
    /// Drag from every vehicle above, scaled by its actual thrust.
    Exact,
    /// Drag from vehicles above inside a threshold box, thrust taken as the weight.
    Approximate,
}

impl CouplingKind {
    pub fn name(&self) -> &'static str {
        match self {
            CouplingKind::Nominal => "nominal",
            CouplingKind::Exact => "exact",
            CouplingKind::Approximate => "approximate",
        }
    }
}

/// A coupling term `Delta` together with the structural rule for its graph.
///
/// The vertical drag force enters level 2 (acceleration). With `torque`
/// set, the drag torque also enters level 4 (angular acceleration).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingModel {
    pub kind: CouplingKind,
    pub downwash: DownwashParams,
    pub quad: QuadParams,
    pub torque: bool,
    /// Box half-widths for [`CouplingKind::Approximate`].
    pub threshold: [f64; 2],
}

impl CouplingModel {
    pub fn nominal() -> Self {
        CouplingModel {
            kind: CouplingKind::Nominal,
            downwash: DownwashParams::default(),
            quad: QuadParams::default(),
            torque: false,
            threshold: [0.0, 0.0],
        }
    }

    pub fn exact(downwash: DownwashParams, quad: QuadParams, torque: bool) -> Self {
        CouplingModel {
            kind: CouplingKind::Exact,
            downwash,
            quad,
            torque,
            threshold: [f64::INFINITY, f64::INFINITY],
        }
    }

    pub fn approximate(downwash: DownwashParams, quad: QuadParams, torque: bool, threshold: [f64; 2]) -> Self {
        CouplingModel {
            kind: CouplingKind::Approximate,
            downwash,
            quad,
            torque,
            threshold,
        }
    }

    pub fn coupled_levels(&self) -> Vec<usize> {
        match (self.kind, self.torque) {
            (CouplingKind::Nominal, _) => Vec::new(),
            (_, false) => vec![2],
            (_, true) => vec![2, 4],
        }
    }

    pub fn structure(&self) -> CouplingStructure {
        let class = match self.kind {
            CouplingKind::Nominal => CouplingClass::Nominal,
            CouplingKind::Exact => CouplingClass::LowerTriangular,
            CouplingKind::Approximate => CouplingClass::StronglyLowerTriangular,
        };
        CouplingStructure {
            class,
            coupled_levels: self.coupled_levels(),
        }
    }

    pub fn edge_rule(&self) -> EdgeRule {
        match self.kind {
            CouplingKind::Nominal => EdgeRule::None,
            CouplingKind::Exact => EdgeRule::Above,
            CouplingKind::Approximate => EdgeRule::AboveWithin {
                threshold: self.threshold,
            },
        }
    }

    pub fn graph(&self, positions: &[[f64; 2]]) -> Result<CouplingGraph> {
        build_graph(positions, &self.edge_rule())
    }

    fn is_coupled(&self, k: usize) -> bool {
        self.coupled_levels().contains(&k)
    }

    /// `(subsystem, level)` pairs read by `Delta^i_k`.
    pub fn dependencies(&self, i: usize, k: usize, graph: &CouplingGraph) -> Vec<(usize, usize)> {
        if !self.is_coupled(k) || graph.predecessors(i).is_empty() {
            return Vec::new();
        }
        let mut deps = vec![(i, 1)];
        for &j in graph.predecessors(i) {
            deps.push((j, 1));
            if self.kind == CouplingKind::Exact {
                deps.push((j, 3));
            }
        }
        deps
    }

    /// `Delta^i_k`, or `None` where it vanishes identically.
    pub fn level_term<R, F>(&self, i: usize, k: usize, graph: &CouplingGraph, get: &F) -> Result<Option<Vec<R>>>
    where
        R: Real,
        F: Fn(usize, usize) -> Result<Vec<R>>,
    {
        if !self.is_coupled(k) || graph.predecessors(i).is_empty() {
            return Ok(None);
        }
        let own = get(i, 1)?;
        let mut total: Option<R> = None;
        for &j in graph.predecessors(i) {
            let top = get(j, 1)?;
            let dx = top[0] - own[0];
            let dy = top[1] - own[1];
            let thrust = match self.kind {
                CouplingKind::Exact => get(j, 3)?[0],
                _ => dx.lift(self.quad.weight()),
            };
            let term = if k == 2 {
                drag_force(dx, dy, thrust, &self.downwash)?
            } else {
                drag_torque(dx, dy, thrust, &self.downwash)?
            };
            total = Some(match total {
                None => term,
                Some(t) => t + term,
            });
        }
        let total = total.expect("at least one predecessor");
        let zero = total.lift(0.0);
        Ok(Some(if k == 2 {
            vec![zero, total / self.quad.mass]
        } else {
            vec![zero, total / self.quad.inertia]
        }))
    }
}
