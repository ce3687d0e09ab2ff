//! State-dependent coupling graph and the locality sets derived from it.
//!
//! An edge `(j, i)` means subsystem `j` influences subsystem `i`. Subsystems
//! are indexed from zero; the acyclic ordering used for same-level+1
//! dependencies is the index order.

use std::collections::{BTreeSet, VecDeque};

use crate::error::{Error, Result};

pub type IndexSet = BTreeSet<usize>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CouplingGraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    preds: Vec<Vec<usize>>,
}

impl CouplingGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let edges: BTreeSet<_> = edges.into_iter().collect();
        let mut preds = vec![Vec::new(); n];
        for &(j, i) in &edges {
            if j >= n || i >= n || j == i {
                return Err(Error::Dimension(format!("invalid edge ({j}, {i}) for n = {n}")));
            }
            preds[i].push(j);
        }
        Ok(CouplingGraph { n, edges, preds })
    }

    pub fn empty(n: usize) -> Self {
        CouplingGraph {
            n,
            edges: BTreeSet::new(),
            preds: vec![Vec::new(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges.contains(&(from, to))
    }

    /// Direct in-neighbors of `i`, ascending.
    pub fn predecessors(&self, i: usize) -> &[usize] {
        &self.preds[i]
    }

    /// Nodes exactly `k` hops upstream of `i`; `N^0(i) = {i}`.
    pub fn k_hop_in_neighbors(&self, i: usize, k: usize) -> IndexSet {
        let mut frontier: IndexSet = [i].into();
        for _ in 0..k {
            frontier = frontier.iter().flat_map(|&v| self.preds[v].iter().copied()).collect();
            if frontier.is_empty() {
                break;
            }
        }
        frontier
    }

    /// Union of `N^0(i) ..= N^k(i)`.
    pub fn within_hops(&self, i: usize, k: usize) -> IndexSet {
        (0..=k).flat_map(|h| self.k_hop_in_neighbors(i, h)).collect()
    }

    /// All nodes with a directed path to `i`, including `i`.
    pub fn ancestors(&self, i: usize) -> IndexSet {
        let mut seen: IndexSet = [i].into();
        let mut queue = VecDeque::from([i]);
        while let Some(v) = queue.pop_front() {
            for &p in &self.preds[v] {
                if seen.insert(p) {
                    queue.push_back(p);
                }
            }
        }
        seen
    }

    /// Information set `S^i_k`: the subsystems whose flat outputs may enter
    /// the level-`k` map of subsystem `i` under a coupling of the given
    /// structure.
    pub fn info_set(&self, i: usize, k: usize, structure: &CouplingStructure) -> IndexSet {
        match structure.class {
            CouplingClass::Nominal => [i].into(),
            CouplingClass::LowerTriangular => self.ancestors(i),
            CouplingClass::StronglyLowerTriangular => {
                // Every coupled level below k can add one hop, never more than k - 1.
                let hops = structure
                    .coupled_levels
                    .iter()
                    .filter(|&&l| l < k)
                    .count()
                    .min(k.saturating_sub(1));
                self.within_hops(i, hops)
            }
        }
    }

    /// True if some node can reach itself.
    pub fn has_cycle(&self) -> bool {
        (0..self.n).any(|i| self.preds[i].iter().any(|&p| self.ancestors(p).contains(&i)))
    }

    /// `"1>2;1>3"` with one-based vehicle labels; empty when edgeless.
    pub fn edge_list(&self) -> String {
        self.edges
            .iter()
            .map(|(j, i)| format!("{}>{}", j + 1, i + 1))
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// How the coupling term is allowed to depend on other subsystems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingClass {
    /// No coupling modelled.
    Nominal,
    /// May depend on same-level+1 states of lower-indexed subsystems.
    LowerTriangular,
    /// Depends on lower-or-equal-level states only.
    StronglyLowerTriangular,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CouplingStructure {
    pub class: CouplingClass,
    /// Levels `k` at which the coupling term is not identically zero.
    pub coupled_levels: Vec<usize>,
}

impl CouplingStructure {
    pub fn nominal() -> Self {
        CouplingStructure {
            class: CouplingClass::Nominal,
            coupled_levels: Vec::new(),
        }
    }
}

/// Structural edge predicate of a coupling model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeRule {
    None,
    /// `(j, i)` iff `j` flies strictly above `i`.
    Above,
    /// `Above`, and the separation lies strictly inside the box `(-t, t)`.
    AboveWithin {
        threshold: [f64; 2],
    },
}

/// Build `G(x)` from vehicle positions.
///
/// Equal altitudes make "above" ill-defined and are rejected for every
/// rule that uses it.
pub fn build_graph(positions: &[[f64; 2]], rule: &EdgeRule) -> Result<CouplingGraph> {
    let n = positions.len();
    if matches!(rule, EdgeRule::None) {
        return Ok(CouplingGraph::empty(n));
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let dy = positions[j][1] - positions[i][1];
            if dy == 0.0 {
                return Err(Error::OrderingAmbiguity {
                    first: i.min(j),
                    second: i.max(j),
                    altitude: positions[i][1],
                });
            }
            if dy < 0.0 {
                continue;
            }
            let keep = match rule {
                EdgeRule::Above => true,
                EdgeRule::AboveWithin { threshold } => {
                    let dx = positions[j][0] - positions[i][0];
                    dx.abs() < threshold[0] && dy < threshold[1]
                }
                EdgeRule::None => unreachable!(),
            };
            if keep {
                edges.push((j, i));
            }
        }
    }
    CouplingGraph::new(n, edges)
}
