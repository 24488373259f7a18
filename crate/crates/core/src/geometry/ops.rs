//! Finite-difference operators on lattice fields: connection coefficients,
//! curvature contractions, distance fields (fast marching and metric graph
//! distance), and the divergence-form Laplace–Beltrami fallback used when no
//! closed-form geometry is available.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::fields::{sym_index, sym_len, MetricField, SymTensorField};
use super::grid::{Grid, NodeClass, MAX_DIM};

/// Connection coefficients, one `dim * sym_len(dim)` block per node, ordered
/// by upper index first and then the packed symmetric lower pair.
#[derive(Clone, Debug)]
pub struct ChristoffelField {
    pub dim: usize,
    data: Vec<f64>,
}

impl ChristoffelField {
    pub fn zeros(dim: usize, nodes: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; nodes * dim * sym_len(dim)],
        }
    }

    fn block(&self, node: usize) -> &[f64] {
        let m = self.dim * sym_len(self.dim);
        &self.data[node * m..(node + 1) * m]
    }

    fn block_mut(&mut self, node: usize) -> &mut [f64] {
        let m = self.dim * sym_len(self.dim);
        &mut self.data[node * m..(node + 1) * m]
    }

    pub fn get(&self, node: usize, upper: usize, i: usize, j: usize) -> f64 {
        self.block(node)[upper * sym_len(self.dim) + sym_index(self.dim, i, j)]
    }

    pub fn set(&mut self, node: usize, upper: usize, i: usize, j: usize, value: f64) {
        let k = upper * sym_len(self.dim) + sym_index(self.dim, i, j);
        self.block_mut(node)[k] = value;
    }
}

/// First partial of a scalar lattice field along `axis` at `node`: central
/// when both axis neighbors are usable, otherwise a one-sided three-point
/// (or, failing that, two-point) formula. Exterior nodes never contribute.
pub fn fd_partial(
    grid: &Grid,
    class: &[NodeClass],
    f: &dyn Fn(usize) -> f64,
    node: usize,
    axis: usize,
) -> f64 {
    let h = grid.h;
    let usable = |n: Option<usize>| n.filter(|&k| class[k] != NodeClass::Exterior);
    let fw = usable(grid.axis_neighbor(node, axis, 1));
    let bw = usable(grid.axis_neighbor(node, axis, -1));
    match (bw, fw) {
        (Some(b), Some(w)) => (f(w) - f(b)) / (2.0 * h),
        (None, Some(w)) => {
            if let Some(w2) = usable(grid.axis_neighbor(node, axis, 2)) {
                (-3.0 * f(node) + 4.0 * f(w) - f(w2)) / (2.0 * h)
            } else {
                (f(w) - f(node)) / h
            }
        }
        (Some(b), None) => {
            if let Some(b2) = usable(grid.axis_neighbor(node, axis, -2)) {
                (3.0 * f(node) - 4.0 * f(b) + f(b2)) / (2.0 * h)
            } else {
                (f(node) - f(b)) / h
            }
        }
        (None, None) => 0.0,
    }
}

/// Connection coefficients of a metric field by finite differences. Exact
/// closed forms in the data-set constructors take precedence; this path
/// serves tabulated data and cross-checks.
pub fn christoffels(grid: &Grid, class: &[NodeClass], metric: &MetricField) -> ChristoffelField {
    let dim = metric.g.dim;
    let nodes = metric.g.node_count();
    let mut out = ChristoffelField::zeros(dim, nodes);
    // dg[a][packed(i,j)] at the current node.
    for node in 0..nodes {
        if class[node] == NodeClass::Exterior {
            continue;
        }
        let mut dg = [[0.0f64; 6]; MAX_DIM];
        for a in 0..dim {
            for pij in 0..sym_len(dim) {
                let comp = move |n: usize, m: &MetricField| m.g.at(n)[pij];
                let mref = metric;
                dg[a][pij] = fd_partial(grid, class, &|n| comp(n, mref), node, a);
            }
        }
        let inv = metric.inv.at(node);
        for k in 0..dim {
            for i in 0..dim {
                for j in i..dim {
                    let mut s = 0.0;
                    for l in 0..dim {
                        let t = dg[i][sym_index(dim, l, j)] + dg[j][sym_index(dim, l, i)]
                            - dg[l][sym_index(dim, i, j)];
                        s += inv[sym_index(dim, k, l)] * t;
                    }
                    out.set(node, k, i, j, 0.5 * s);
                }
            }
        }
    }
    out
}

/// Ricci tensor from a connection field by finite differences:
/// `R_ij = d_k G^k_ij - d_j G^k_ik + G^k_kl G^l_ij - G^k_jl G^l_ik`.
pub fn ricci_from_christoffels(
    grid: &Grid,
    class: &[NodeClass],
    gamma: &ChristoffelField,
) -> SymTensorField {
    let dim = gamma.dim;
    let nodes = gamma.data.len() / (dim * sym_len(dim));
    let mut out = SymTensorField::zeros(dim, nodes);
    for node in 0..nodes {
        if class[node] == NodeClass::Exterior {
            continue;
        }
        for i in 0..dim {
            for j in i..dim {
                let mut val = 0.0;
                for k in 0..dim {
                    let dk = fd_partial(grid, class, &|n| gamma.get(n, k, i, j), node, k);
                    let dj = fd_partial(grid, class, &|n| gamma.get(n, k, k, i), node, j);
                    val += dk - dj;
                    for l in 0..dim {
                        val += gamma.get(node, k, k, l) * gamma.get(node, l, i, j)
                            - gamma.get(node, k, j, l) * gamma.get(node, l, i, k);
                    }
                }
                out.set(node, i, j, val);
            }
        }
    }
    out
}

#[derive(PartialEq)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reverse order: BinaryHeap is a max-heap, we want smallest first.
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// First-arrival distance solving `|grad d| = slowness` by fast marching with
/// the standard upwind quadratic update. Exterior nodes stay at infinity.
/// Exact for fronts aligned with a lattice axis; O(h) otherwise.
pub fn fast_march(
    grid: &Grid,
    class: &[NodeClass],
    seeds: &[(usize, f64)],
    slowness: &dyn Fn(usize) -> f64,
) -> Vec<f64> {
    let n = grid.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut accepted = vec![false; n];
    let mut heap = BinaryHeap::new();
    for &(node, value) in seeds {
        if class[node] == NodeClass::Exterior {
            continue;
        }
        if value < dist[node] {
            dist[node] = value;
            heap.push(HeapEntry { dist: value, node });
        }
    }
    while let Some(HeapEntry { dist: d, node }) = heap.pop() {
        if accepted[node] || d > dist[node] {
            continue;
        }
        accepted[node] = true;
        for axis in 0..grid.grid_dim {
            for step in [-1isize, 1] {
                let nb = match grid.axis_neighbor(node, axis, step) {
                    Some(nb) if class[nb] != NodeClass::Exterior && !accepted[nb] => nb,
                    _ => continue,
                };
                let update = eikonal_update(grid, class, &accepted, &dist, nb, slowness(nb));
                if update < dist[nb] {
                    dist[nb] = update;
                    heap.push(HeapEntry {
                        dist: update,
                        node: nb,
                    });
                }
            }
        }
    }
    dist
}

fn eikonal_update(
    grid: &Grid,
    class: &[NodeClass],
    accepted: &[bool],
    dist: &[f64],
    node: usize,
    slowness: f64,
) -> f64 {
    let h = grid.h;
    let mut mins = [f64::INFINITY; MAX_DIM];
    let mut count = 0usize;
    for axis in 0..grid.grid_dim {
        let mut best = f64::INFINITY;
        for step in [-1isize, 1] {
            if let Some(nb) = grid.axis_neighbor(node, axis, step) {
                if class[nb] != NodeClass::Exterior && accepted[nb] {
                    best = best.min(dist[nb]);
                }
            }
        }
        if best.is_finite() {
            mins[count] = best;
            count += 1;
        }
    }
    if count == 0 {
        return f64::INFINITY;
    }
    mins[..count].sort_by(f64::total_cmp);
    let rhs = (h * slowness) * (h * slowness);
    // Try using the m smallest upwind values, largest m first for accuracy,
    // falling back until the causality condition d >= mins[m-1] holds.
    for m in (1..=count).rev() {
        let vals = &mins[..m];
        let sum: f64 = vals.iter().sum();
        let sumsq: f64 = vals.iter().map(|v| v * v).sum();
        let mf = m as f64;
        // Solve m d^2 - 2 sum d + (sumsq - rhs) = 0.
        let disc = sum * sum - mf * (sumsq - rhs);
        if disc < 0.0 {
            continue;
        }
        let d = (sum + disc.sqrt()) / mf;
        if d + 1e-15 >= vals[m - 1] {
            return d;
        }
    }
    mins[0] + h * slowness
}

/// Shortest-path distance through the Moore graph with edges measured in the
/// metric (trapezoidal midpoint weight). Overestimates the true geodesic
/// distance by a bounded angular-resolution factor; used for general
/// tabulated metrics where no eikonal reduction applies.
pub fn graph_distance(
    grid: &Grid,
    class: &[NodeClass],
    metric: Option<&MetricField>,
    seeds: &[(usize, f64)],
) -> Vec<f64> {
    let n = grid.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    for &(node, value) in seeds {
        if class[node] == NodeClass::Exterior {
            continue;
        }
        if value < dist[node] {
            dist[node] = value;
            heap.push(HeapEntry { dist: value, node });
        }
    }
    let mut nbrs = Vec::new();
    while let Some(HeapEntry { dist: d, node }) = heap.pop() {
        if d > dist[node] {
            continue;
        }
        grid.moore_neighbors(node, &mut nbrs);
        let xa = grid.coords(node);
        for idx in 0..nbrs.len() {
            let nb = nbrs[idx];
            if class[nb] == NodeClass::Exterior {
                continue;
            }
            let xb = grid.coords(nb);
            let mut dx = [0.0f64; MAX_DIM];
            for a in 0..grid.grid_dim {
                dx[a] = xb[a] - xa[a];
            }
            let len = match metric {
                None => {
                    let mut s = 0.0;
                    for a in 0..grid.grid_dim {
                        s += dx[a] * dx[a];
                    }
                    s.sqrt()
                }
                Some(m) => {
                    let dim = m.g.dim;
                    let mut s = 0.0;
                    for i in 0..dim {
                        for j in 0..dim {
                            let gij = 0.5 * (m.g.get(node, i, j) + m.g.get(nb, i, j));
                            s += gij * dx[i] * dx[j];
                        }
                    }
                    s.max(0.0).sqrt()
                }
            };
            let cand = d + len;
            if cand < dist[nb] {
                dist[nb] = cand;
                heap.push(HeapEntry {
                    dist: cand,
                    node: nb,
                });
            }
        }
    }
    dist
}

/// Mean curvature of the level set of `f` through `node`, with respect to the
/// unit normal pointing in the direction of increasing `f`:
/// `div_g( grad f / |grad f|_g )`, expanded in divergence form. Finite
/// differences throughout; a fallback for tabulated geometry.
pub fn level_set_mean_curvature(
    grid: &Grid,
    class: &[NodeClass],
    metric: &MetricField,
    f: &[f64],
    node: usize,
) -> f64 {
    let dim = metric.g.dim;
    // Flux component V^i = sqrt(det g) g^{ij} d_j f / |grad f|_g at a node.
    let flux = |n: usize, i: usize| -> f64 {
        let mut df = [0.0f64; MAX_DIM];
        for a in 0..dim {
            df[a] = fd_partial(grid, class, &|k| f[k], n, a);
        }
        let inv = metric.inv.at(n);
        let mut up = [0.0f64; MAX_DIM];
        let mut norm2 = 0.0;
        for a in 0..dim {
            for b in 0..dim {
                up[a] += inv[sym_index(dim, a, b)] * df[b];
            }
        }
        for a in 0..dim {
            norm2 += up[a] * df[a];
        }
        let norm = norm2.max(1e-300).sqrt();
        metric.sqrt_det[n] * up[i] / norm
    };
    let mut div = 0.0;
    for i in 0..dim {
        div += fd_partial(grid, class, &|n| flux(n, i), node, i);
    }
    div / metric.sqrt_det[node]
}

/// Largest first-difference quotient of a field over lattice edges between
/// non-exterior nodes.
pub fn gradient_sup(grid: &Grid, class: &[NodeClass], f: &[f64]) -> f64 {
    let mut sup = 0.0f64;
    for node in 0..grid.len() {
        if class[node] == NodeClass::Exterior || !f[node].is_finite() {
            continue;
        }
        for axis in 0..grid.grid_dim {
            if let Some(nb) = grid.axis_neighbor(node, axis, 1) {
                if class[nb] != NodeClass::Exterior && f[nb].is_finite() {
                    sup = sup.max((f[nb] - f[node]).abs() / grid.h);
                }
            }
        }
    }
    sup
}

/// Cumulative arclength along a radial lattice: trapezoidal integral of
/// `sqrt(g_rr)` from the first node.
pub fn radial_arclength(grr: &[f64], h: f64) -> Vec<f64> {
    let mut out = vec![0.0; grr.len()];
    for i in 1..grr.len() {
        out[i] = out[i - 1] + 0.5 * h * (grr[i - 1].sqrt() + grr[i].sqrt());
    }
    out
}
