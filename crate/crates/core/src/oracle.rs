//! Independent reference computations used to check the fast paths.
//!
//! Nothing here is used by the simulator. Each routine takes the slow,
//! obvious route: adaptive quadrature instead of closed forms, all-pairs
//! reachability instead of BFS, brute-force edge tests, finite differences
//! instead of jets.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::downwash::DownwashParams;

// Gauss–Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod quadrature to absolute-or-relative tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, whole: (f64, f64), depth: usize) -> f64 {
        let (val, err) = whole;
        if depth == 0 || err <= tol.max(1e-15 * val.abs()) {
            return val;
        }
        let m = 0.5 * (a + b);
        let left = gk15(f, a, m);
        let right = gk15(f, m, b);
        recurse(f, a, m, 0.5 * tol, left, depth - 1) + recurse(f, m, b, 0.5 * tol, right, depth - 1)
    }
    let whole = gk15(&f, a, b);
    let tol = tol * whole.0.abs().max(f64::MIN_POSITIVE);
    recurse(&f, a, b, tol, whole, 40)
}

/// `erf(x)` as `2/sqrt(pi) * integral_0^x exp(-t^2) dt`.
pub fn erf_quadrature(x: f64) -> f64 {
    let v = integrate(|t| (-t * t).exp(), 0.0, x.abs(), 1e-14);
    (2.0 / std::f64::consts::PI.sqrt() * v).copysign(x)
}

/// Vertical drag force by integrating the drag density over the span.
pub fn drag_force_quadrature(dx: f64, dy: f64, thrust: f64, p: &DownwashParams) -> f64 {
    let h = 0.5 * p.span;
    -integrate(|l| p.drag_density([dx, dy], thrust, l), -h, h, 1e-13)
}

/// Drag torque `-integral l D dl` by quadrature.
pub fn drag_torque_quadrature(dx: f64, dy: f64, thrust: f64, p: &DownwashParams) -> f64 {
    let h = 0.5 * p.span;
    -integrate(|l| l * p.drag_density([dx, dy], thrust, l), -h, h, 1e-13)
}

/// All-pairs reachability, `reach[a][b]` iff a directed path of length
/// `>= 0` leads from `a` to `b` (Floyd–Warshall).
pub fn reachability(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut reach = vec![vec![false; n]; n];
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
    }
    for &(a, b) in edges {
        reach[a][b] = true;
    }
    for k in 0..n {
        for a in 0..n {
            if reach[a][k] {
                for b in 0..n {
                    if reach[k][b] {
                        reach[a][b] = true;
                    }
                }
            }
        }
    }
    reach
}

/// Nodes from which some walk of exactly `k` edges ends at `i`, by
/// enumerating walks through powers of the adjacency matrix.
pub fn exact_hop_set(n: usize, edges: &[(usize, usize)], i: usize, k: usize) -> BTreeSet<usize> {
    let mut adj = vec![vec![false; n]; n];
    for &(a, b) in edges {
        adj[a][b] = true;
    }
    // walk[a] = a reaches i in exactly `step` edges
    let mut walk: Vec<bool> = (0..n).map(|a| a == i).collect();
    for _ in 0..k {
        walk = (0..n).map(|a| (0..n).any(|b| adj[a][b] && walk[b])).collect();
    }
    (0..n).filter(|&a| walk[a]).collect()
}

/// Shortest-path distances into `i` by repeated relaxation.
pub fn distances_to(n: usize, edges: &[(usize, usize)], i: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; n];
    dist[i] = Some(0);
    for _ in 0..n {
        for &(a, b) in edges {
            if let Some(db) = dist[b] {
                if dist[a].is_none_or(|da| da > db + 1) {
                    dist[a] = Some(db + 1);
                }
            }
        }
    }
    dist
}

/// Every ordered pair tested against the edge predicate directly.
/// `threshold = None` means any vehicle strictly above couples.
pub fn pairwise_edges(positions: &[[f64; 2]], threshold: Option<[f64; 2]>) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (j, pj) in positions.iter().enumerate() {
        for (i, pi) in positions.iter().enumerate() {
            let dx = pj[0] - pi[0];
            let dy = pj[1] - pi[1];
            let inside = match threshold {
                None => true,
                Some([tx, ty]) => dx.abs() < tx && dy < ty,
            };
            if i != j && dy > 0.0 && inside {
                out.push((j, i));
            }
        }
    }
    out.sort_unstable();
    out
}

/// Schoolbook product of coefficient vectors.
pub fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Central difference with one Richardson extrapolation, `O(h^4)`.
pub fn richardson_derivative<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DownwashFixture {
    pub dx: f64,
    pub dy: f64,
    pub thrust: f64,
    pub force: f64,
    pub torque: f64,
}

/// Quadrature values of the drag force and torque on a coarse grid.
pub fn downwash_fixtures(p: &DownwashParams) -> Vec<DownwashFixture> {
    let mut out = Vec::new();
    for &dx in &[-0.6, -0.15, 0.0, 0.1, 0.45] {
        for &dy in &[0.4, 1.0, 2.5] {
            for &thrust in &[4.0, 9.81] {
                out.push(DownwashFixture {
                    dx,
                    dy,
                    thrust,
                    force: drag_force_quadrature(dx, dy, thrust, p),
                    torque: drag_torque_quadrature(dx, dy, thrust, p),
                });
            }
        }
    }
    out
}

pub fn downwash_fixtures_json(p: &DownwashParams) -> String {
    serde_json::to_string_pretty(&downwash_fixtures(p)).expect("fixtures serialize")
}
