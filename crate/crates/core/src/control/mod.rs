//! Flat-space tracking control and its distributed evaluation.
//!
//! In flat coordinates every subsystem is a chain of integrators
//! `zdot = A z + B v`. A linear error feedback picks the virtual input, and
//! the flatness map `Psi^i` turns it into the physical input using flat
//! states gathered from the subsystems in the information set.

mod lqr;

pub use lqr::{
    care_residual, lqr_gain, lqr_gain_from, solve_lyapunov, spectral_abscissa, stabilizing_gain, LqrSolution,
};

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::flatness::{local_level_map, FlatJetBundle};
use crate::graph::{CouplingGraph, IndexSet};
use crate::jets::Jet;
use crate::plant::{CouplingKind, CouplingModel, PureFeedback};

/// Flat state `z = [y, y', ..., y^(r-1)]` and virtual input `v = y^(r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatPoint {
    pub z: Vec<f64>,
    pub v: Vec<f64>,
}

/// Chain-of-integrators pair for `r` levels of width `m`.
pub fn brunovsky_pair(r: usize, m: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    assert!(r >= 1 && m >= 1, "brunovsky_pair needs r, m >= 1");
    let n = r * m;
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n - m {
        a[(i, i + m)] = 1.0;
    }
    let mut b = DMatrix::zeros(n, m);
    for c in 0..m {
        b[(n - m + c, c)] = 1.0;
    }
    (a, b)
}

/// Gain placing every channel's poles at `-1, -2, ..., -r`.
pub fn brunovsky_pole_placement(r: usize, m: usize) -> DMatrix<f64> {
    // coefficients of prod (s + p), lowest degree first
    let mut poly = vec![1.0];
    for p in 1..=r {
        let mut next = vec![0.0; poly.len() + 1];
        for (d, &c) in poly.iter().enumerate() {
            next[d] += c * p as f64;
            next[d + 1] += c;
        }
        poly = next;
    }
    let mut k = DMatrix::zeros(m, r * m);
    for c in 0..m {
        for d in 0..r {
            k[(c, d * m + c)] = poly[d];
        }
    }
    k
}

/// LQR gain for the Brunovsky pair with `Q = q I`, `R = r_scale I`.
#[derive(Debug, Clone)]
pub struct GainSet {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub gain: DMatrix<f64>,
    pub residual: f64,
}

impl GainSet {
    pub fn lqr(r: usize, m: usize, q_scale: f64, r_scale: f64) -> Result<Self> {
        let (a, b) = brunovsky_pair(r, m);
        let q = DMatrix::identity(r * m, r * m) * q_scale;
        let rr = DMatrix::identity(m, m) * r_scale;
        let sol = lqr_gain_from(&a, &b, &q, &rr, brunovsky_pole_placement(r, m))?;
        Ok(GainSet {
            a,
            b,
            gain: sol.gain,
            residual: sol.residual,
        })
    }

    pub fn closed_loop(&self) -> DMatrix<f64> {
        &self.a - &self.b * &self.gain
    }
}

/// `v = v_ref - K (z - z_ref)`
pub fn tracking_virtual_input(z: &[f64], z_ref: &[f64], v_ref: &[f64], gain: &DMatrix<f64>) -> Vec<f64> {
    let err = DVector::from_iterator(z.len(), z.iter().zip(z_ref).map(|(a, b)| a - b));
    let fb = gain * err;
    v_ref.iter().zip(fb.iter()).map(|(v, f)| v - f).collect()
}

/// Which coupling model the flatness map is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Exact,
    Approximate,
    Nominal,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Exact => "exact",
            Variant::Approximate => "approximate",
            Variant::Nominal => "nominal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "exact" => Some(Variant::Exact),
            "approximate" | "approx" => Some(Variant::Approximate),
            "nominal" => Some(Variant::Nominal),
            _ => None,
        }
    }

    pub fn coupling_kind(&self) -> CouplingKind {
        match self {
            Variant::Exact => CouplingKind::Exact,
            Variant::Approximate => CouplingKind::Approximate,
            Variant::Nominal => CouplingKind::Nominal,
        }
    }
}

/// Message a subsystem broadcasts within a control tick.
pub type Messages = BTreeMap<usize, FlatPoint>;

/// Required senders for subsystem `i`: `S^i_{r+1}` under the model.
pub fn required_senders<S: PureFeedback>(sys: &S, model: &CouplingModel, graph: &CouplingGraph, i: usize) -> IndexSet {
    graph.info_set(i, sys.relative_degree() + 1, &model.structure())
}

/// Physical input `u^i = Psi^i(z, v)` from gathered flat points.
///
/// `gathered` must contain subsystem `i` itself and every member of
/// [`required_senders`]; anything else is dropped before evaluation.
pub fn evaluate_input<S: PureFeedback>(
    sys: &S,
    model: &CouplingModel,
    graph: &CouplingGraph,
    i: usize,
    gathered: &Messages,
) -> Result<Vec<f64>> {
    let required = required_senders(sys, model, graph, i);
    let mut flats: Vec<Option<Vec<Jet>>> = vec![None; graph.len()];
    for &j in &required {
        let point = gathered.get(&j).ok_or(Error::InformationContract {
            subsystem: i,
            missing: j,
        })?;
        flats[j] = Some(FlatJetBundle::jets_from_flat_point(&point.z, &point.v)?);
    }
    let psi = local_level_map(sys, &flats, model, graph, i, sys.relative_degree() + 1)?;
    Ok(psi.iter().map(|j| j.value()).collect())
}

/// One tick of the controller for subsystem `i`: error feedback on the
/// measured flat state, then `Psi^i` over the gathered neighbours. The
/// subsystem's own entry in `neighbors` is replaced by its fresh flat point.
#[allow(clippy::too_many_arguments)]
pub fn distributed_control_step<S: PureFeedback>(
    sys: &S,
    model: &CouplingModel,
    graph: &CouplingGraph,
    gains: &GainSet,
    i: usize,
    z: &[f64],
    reference: (&[f64], &[f64]),
    neighbors: &Messages,
) -> Result<(Vec<f64>, FlatPoint)> {
    let v = tracking_virtual_input(z, reference.0, reference.1, &gains.gain);
    let own = FlatPoint { z: z.to_vec(), v };
    let mut gathered = neighbors.clone();
    gathered.insert(i, own.clone());
    let u = evaluate_input(sys, model, graph, i, &gathered)?;
    Ok((u, own))
}
