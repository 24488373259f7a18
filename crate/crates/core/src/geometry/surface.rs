//! Extracted interfaces (polylines and triangle meshes), point-wise geometry
//! sampling, and the discrete residual of the trapped-surface equation
//! `H + tr_S p = 0` evaluated by local quadratic fitting in a metric
//! orthonormal frame.

use nalgebra::{Matrix2, SMatrix, SVector};

use super::fields::sym_index;
use super::grid::MAX_DIM;
use crate::{Error, Result};

/// Samples the geometry at arbitrary chart points (closed forms for the
/// analytic families, interpolation for tabulated data).
pub trait FieldSampler {
    /// Ambient dimension (2 or 3).
    fn dim(&self) -> usize;
    /// Packed metric components at a chart point.
    fn metric_at(&self, x: &[f64]) -> [f64; 6];
    /// Connection coefficients at a chart point, upper index major, packed
    /// symmetric lower pair minor (as in the lattice connection field).
    fn christoffel_at(&self, x: &[f64]) -> [f64; 18];
    /// Packed second-fundamental-form components at a chart point.
    fn p_at(&self, x: &[f64]) -> [f64; 6];
}

/// An extracted interface with an outward orientation hint per vertex (a
/// chart vector pointing out of the positive blow-up region).
#[derive(Clone, Debug)]
pub enum Interface {
    Curve {
        vertices: Vec<[f64; 2]>,
        /// Vertex index pairs; open chains and closed loops both allowed.
        segments: Vec<[usize; 2]>,
        outward: Vec<[f64; 2]>,
    },
    Mesh {
        vertices: Vec<[f64; 3]>,
        triangles: Vec<[usize; 3]>,
        outward: Vec<[f64; 3]>,
    },
}

impl Interface {
    pub fn vertex_count(&self) -> usize {
        match self {
            Interface::Curve { vertices, .. } => vertices.len(),
            Interface::Mesh { vertices, .. } => vertices.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.vertex_count() == 0
    }

    /// Vertex coordinates padded to three components.
    pub fn vertex(&self, i: usize) -> [f64; MAX_DIM] {
        match self {
            Interface::Curve { vertices, .. } => [vertices[i][0], vertices[i][1], 0.0],
            Interface::Mesh { vertices, .. } => vertices[i],
        }
    }

    /// Number of connected components of the element graph.
    pub fn component_count(&self) -> usize {
        let n = self.vertex_count();
        if n == 0 {
            return 0;
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut Vec<usize>, mut a: usize) -> usize {
            while parent[a] != a {
                parent[a] = parent[parent[a]];
                a = parent[a];
            }
            a
        }
        let join = |parent: &mut Vec<usize>, a: usize, b: usize| {
            let (ra, rb) = (find(parent, a), find(parent, b));
            if ra != rb {
                parent[ra] = rb;
            }
        };
        match self {
            Interface::Curve { segments, .. } => {
                for s in segments {
                    join(&mut parent, s[0], s[1]);
                }
            }
            Interface::Mesh { triangles, .. } => {
                for t in triangles {
                    join(&mut parent, t[0], t[1]);
                    join(&mut parent, t[1], t[2]);
                }
            }
        }
        let mut roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    }
}

fn dot_packed(dim: usize, g: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            s += g[sym_index(dim, i, j)] * a[i] * b[j];
        }
    }
    s
}

fn gamma_quad(dim: usize, gamma: &[f64; 18], upper: usize, a: &[f64], b: &[f64]) -> f64 {
    let m = dim * (dim + 1) / 2;
    let mut s = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            s += gamma[upper * m + sym_index(dim, i, j)] * a[i] * b[j];
        }
    }
    s
}

/// Per-vertex residual of the trapped-surface equation `H + tr_S p`, with the
/// mean curvature taken with respect to the stored outward orientation.
/// Neighbor points within `fit_radius` (chart distance along the element
/// graph) enter a quadratic least-squares fit in the orthonormal frame of the
/// metric at the vertex. Vertices with too few neighbors (open-chain ends)
/// get `NaN`; a rank-deficient fit at an interior vertex is an error.
pub fn surface_mots_residual(
    surface: &Interface,
    sampler: &dyn FieldSampler,
    fit_radius: f64,
) -> Result<Vec<f64>> {
    match surface {
        Interface::Curve {
            vertices,
            segments,
            outward,
        } => curve_residual(vertices, segments, outward, sampler, fit_radius),
        Interface::Mesh {
            vertices,
            triangles,
            outward,
        } => mesh_residual(vertices, triangles, outward, sampler, fit_radius),
    }
}

fn curve_residual(
    vertices: &[[f64; 2]],
    segments: &[[usize; 2]],
    outward: &[[f64; 2]],
    sampler: &dyn FieldSampler,
    fit_radius: f64,
) -> Result<Vec<f64>> {
    let n = vertices.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for s in segments {
        adj[s[0]].push(s[1]);
        adj[s[1]].push(s[0]);
    }
    let mut out = vec![f64::NAN; n];
    for v in 0..n {
        if adj[v].is_empty() {
            continue;
        }
        let p = vertices[v];
        let g = sampler.metric_at(&p);
        let gamma = sampler.christoffel_at(&p);
        let pk = sampler.p_at(&p);

        // Walk both ways along the chain collecting points within the window.
        let mut pts: Vec<[f64; 2]> = Vec::new();
        for &start in &adj[v] {
            let mut prev = v;
            let mut cur = start;
            loop {
                let q = vertices[cur];
                let d = [q[0] - p[0], q[1] - p[1]];
                if dot_packed(2, &g, &d, &d).sqrt() > fit_radius && !pts.is_empty() {
                    break;
                }
                pts.push(q);
                let next = adj[cur].iter().copied().find(|&w| w != prev);
                match next {
                    Some(w) if w != v => {
                        prev = cur;
                        cur = w;
                    }
                    _ => break,
                }
            }
        }
        if pts.len() < 2 {
            continue; // open-chain end: not enough two-sided information
        }

        // Orthonormal frame at p: tangent from the nearest neighbors, normal
        // oriented by the outward hint.
        let t_raw = {
            let a = vertices[adj[v][0]];
            let b = if adj[v].len() > 1 {
                vertices[adj[v][1]]
            } else {
                p
            };
            [a[0] - b[0], a[1] - b[1]]
        };
        let tnorm = dot_packed(2, &g, &t_raw, &t_raw).sqrt();
        if tnorm < 1e-14 {
            return Err(Error::InterfaceVerificationFailed(format!(
                "degenerate tangent at vertex {v}"
            )));
        }
        let tau = [t_raw[0] / tnorm, t_raw[1] / tnorm];
        // Candidate normal: Euclidean rotation, then orthonormalize in g.
        let mut nu = [-tau[1], tau[0]];
        let proj = dot_packed(2, &g, &nu, &tau);
        nu = [nu[0] - proj * tau[0], nu[1] - proj * tau[1]];
        let nunorm = dot_packed(2, &g, &nu, &nu).sqrt();
        if nunorm < 1e-14 {
            return Err(Error::InterfaceVerificationFailed(format!(
                "degenerate frame at vertex {v}"
            )));
        }
        nu = [nu[0] / nunorm, nu[1] / nunorm];
        let hint = outward[v];
        if dot_packed(2, &g, &nu, &hint) < 0.0 {
            nu = [-nu[0], -nu[1]];
        }

        // Least squares for eta = a1 xi + a2 xi^2 through the origin.
        let (mut s11, mut s12, mut s22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for q in &pts {
            let d = [q[0] - p[0], q[1] - p[1]];
            let xi = dot_packed(2, &g, &d, &tau);
            let eta = dot_packed(2, &g, &d, &nu);
            s11 += xi * xi;
            s12 += xi * xi * xi;
            s22 += xi * xi * xi * xi;
            b1 += xi * eta;
            b2 += xi * xi * eta;
        }
        let det = s11 * s22 - s12 * s12;
        if det.abs() < 1e-300 {
            return Err(Error::InterfaceVerificationFailed(format!(
                "rank-deficient curvature fit at vertex {v}"
            )));
        }
        let a1 = (b1 * s22 - b2 * s12) / det;
        let a2 = (s11 * b2 - s12 * b1) / det;

        // Geodesic curvature of xi -> p + xi tau + eta(xi) nu at xi = 0.
        let cp = [tau[0] + a1 * nu[0], tau[1] + a1 * nu[1]]; // c'
        let speed2 = 1.0 + a1 * a1;
        // Unit normal orthogonal to c': (nu - a1 tau)/sqrt(1+a1^2).
        let nhat = [
            (nu[0] - a1 * tau[0]) / speed2.sqrt(),
            (nu[1] - a1 * tau[1]) / speed2.sqrt(),
        ];
        // Acceleration: 2 a2 nu plus the connection term.
        let mut acc = [2.0 * a2 * nu[0], 2.0 * a2 * nu[1]];
        for k in 0..2 {
            acc[k] += gamma_quad(2, &gamma, k, &cp, &cp);
        }
        // Sign convention: the curvature of the circle with respect to its
        // outward normal is positive (H = divergence of the chosen normal),
        // while the acceleration of the curve points against that normal.
        let kappa = -dot_packed(2, &g, &acc, &nhat) / speed2;

        // Trace of p over the unit tangent.
        let trp = dot_packed(2, &pk, &cp, &cp) / speed2;
        out[v] = kappa + trp;
    }
    Ok(out)
}

fn mesh_residual(
    vertices: &[[f64; 3]],
    triangles: &[[usize; 3]],
    outward: &[[f64; 3]],
    sampler: &dyn FieldSampler,
    fit_radius: f64,
) -> Result<Vec<f64>> {
    let n = vertices.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for t in triangles {
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            if !adj[a].contains(&b) {
                adj[a].push(b);
            }
            if !adj[b].contains(&a) {
                adj[b].push(a);
            }
        }
    }
    let mut out = vec![f64::NAN; n];
    for v in 0..n {
        if adj[v].len() < 3 {
            continue;
        }
        let p = vertices[v];
        let g = sampler.metric_at(&p);
        let gamma = sampler.christoffel_at(&p);
        let pk = sampler.p_at(&p);

        // Gather the 1-ring, expanding to the 2-ring when needed, within the
        // fit window.
        // The 1-ring always participates; the window can only enlarge it.
        let mut ring: Vec<usize> = adj[v].clone();
        {
            let mut extra: Vec<usize> = Vec::new();
            for &w in &ring {
                for &w2 in &adj[w] {
                    if w2 != v && !ring.contains(&w2) && !extra.contains(&w2) {
                        let q = vertices[w2];
                        let d = [q[0] - p[0], q[1] - p[1], q[2] - p[2]];
                        if dot_packed(3, &g, &d, &d).sqrt() <= fit_radius {
                            extra.push(w2);
                        }
                    }
                }
            }
            ring.extend(extra);
        }
        let pts: Vec<[f64; 3]> = ring.iter().map(|&w| vertices[w]).collect();
        if pts.len() < 5 {
            continue; // boundary of a clipped mesh: skip, like chain ends
        }

        // Frame: two g-orthonormal tangents from edges, normal from the hint.
        let e1_raw = sub3(vertices[adj[v][0]], p);
        let mut e1 = e1_raw;
        let n1 = dot_packed(3, &g, &e1, &e1).sqrt();
        if n1 < 1e-14 {
            return Err(Error::InterfaceVerificationFailed(format!(
                "degenerate edge at vertex {v}"
            )));
        }
        for c in &mut e1 {
            *c /= n1;
        }
        let mut e2 = [0.0; 3];
        let mut found = false;
        for &w in adj[v].iter().skip(1) {
            let cand = sub3(vertices[w], p);
            let proj = dot_packed(3, &g, &cand, &e1);
            let mut c2 = [
                cand[0] - proj * e1[0],
                cand[1] - proj * e1[1],
                cand[2] - proj * e1[2],
            ];
            let n2 = dot_packed(3, &g, &c2, &c2).sqrt();
            if n2 > 1e-8 * n1.max(1.0) {
                for c in &mut c2 {
                    *c /= n2;
                }
                e2 = c2;
                found = true;
                break;
            }
        }
        if !found {
            return Err(Error::InterfaceVerificationFailed(format!(
                "collinear vertex star at vertex {v}"
            )));
        }
        let hint = outward[v];
        let p1 = dot_packed(3, &g, &hint, &e1);
        let p2 = dot_packed(3, &g, &hint, &e2);
        let mut nu = [
            hint[0] - p1 * e1[0] - p2 * e2[0],
            hint[1] - p1 * e1[1] - p2 * e2[1],
            hint[2] - p1 * e1[2] - p2 * e2[2],
        ];
        let nn = dot_packed(3, &g, &nu, &nu).sqrt();
        if nn < 1e-12 {
            return Err(Error::InterfaceVerificationFailed(format!(
                "orientation hint tangent to surface at vertex {v}"
            )));
        }
        for c in &mut nu {
            *c /= nn;
        }

        // Least squares for eta = D x + E y + (A x^2 + 2 B x y + C y^2)/2.
        let mut ata = SMatrix::<f64, 5, 5>::zeros();
        let mut atb = SVector::<f64, 5>::zeros();
        for q in &pts {
            let d = sub3(*q, p);
            let x = dot_packed(3, &g, &d, &e1);
            let y = dot_packed(3, &g, &d, &e2);
            let eta = dot_packed(3, &g, &d, &nu);
            let row = [x, y, 0.5 * x * x, x * y, 0.5 * y * y];
            for i in 0..5 {
                for j in 0..5 {
                    ata[(i, j)] += row[i] * row[j];
                }
                atb[i] += row[i] * eta;
            }
        }
        let coeff = match ata.lu().solve(&atb) {
            Some(c) => c,
            None => {
                return Err(Error::InterfaceVerificationFailed(format!(
                    "rank-deficient surface fit at vertex {v}"
                )))
            }
        };
        let (dd, ee, aa, bb, cc) = (coeff[0], coeff[1], coeff[2], coeff[3], coeff[4]);

        // Tangents and normal of the tilted graph at the origin.
        let tau1 = add3(e1, scale3(nu, dd));
        let tau2 = add3(e2, scale3(nu, ee));
        let nvec = sub3(sub3(nu, scale3(e1, dd)), scale3(e2, ee));
        let nlen = dot_packed(3, &g, &nvec, &nvec).sqrt();
        let nhat = scale3(nvec, 1.0 / nlen);

        // First fundamental form and its inverse.
        let g11 = dot_packed(3, &g, &tau1, &tau1);
        let g12 = dot_packed(3, &g, &tau1, &tau2);
        let g22 = dot_packed(3, &g, &tau2, &tau2);
        let det = g11 * g22 - g12 * g12;
        if det.abs() < 1e-300 {
            return Err(Error::InterfaceVerificationFailed(format!(
                "degenerate first fundamental form at vertex {v}"
            )));
        }
        let inv = Matrix2::new(g22 / det, -g12 / det, -g12 / det, g11 / det);

        // Second fundamental form: chart second derivatives along nu plus
        // the connection contribution.
        let hess = [[aa, bb], [bb, cc]];
        let taus = [tau1, tau2];
        let mut ii = [[0.0f64; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                let mut acc = scale3(nu, hess[a][b]);
                for k in 0..3 {
                    acc[k] += gamma_quad(3, &gamma, k, &taus[a], &taus[b]);
                }
                ii[a][b] = dot_packed(3, &g, &acc, &nhat);
            }
        }
        // H = divergence of the outward normal = minus the trace of the
        // tangential acceleration against that normal (sphere, outward: +2/r).
        let mut h = 0.0;
        let mut trp = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                h -= inv[(a, b)] * ii[a][b];
                trp += inv[(a, b)] * dot_packed(3, &pk, &taus[a], &taus[b]);
            }
        }
        out[v] = h + trp;
    }
    Ok(out)
}

fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn add3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn scale3(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Closed polyline approximating a coordinate circle, oriented with outward
/// hints pointing away from the center when `outward_sign` is positive.
pub fn circle_polyline(
    center: [f64; 2],
    radius: f64,
    count: usize,
    outward_sign: f64,
) -> Interface {
    let mut vertices = Vec::with_capacity(count);
    let mut outward = Vec::with_capacity(count);
    let mut segments = Vec::with_capacity(count);
    for i in 0..count {
        let th = 2.0 * std::f64::consts::PI * i as f64 / count as f64;
        vertices.push([center[0] + radius * th.cos(), center[1] + radius * th.sin()]);
        outward.push([outward_sign * th.cos(), outward_sign * th.sin()]);
        segments.push([i, (i + 1) % count]);
    }
    Interface::Curve {
        vertices,
        segments,
        outward,
    }
}

/// Latitude-longitude triangulation of a coordinate sphere with outward
/// radial hints (sign-flippable as for the circle).
pub fn lat_long_sphere(
    center: [f64; 3],
    radius: f64,
    n_theta: usize,
    n_phi: usize,
    outward_sign: f64,
) -> Interface {
    let mut vertices = Vec::new();
    let mut outward = Vec::new();
    let mut triangles = Vec::new();
    // Interior latitude rings only; poles added separately.
    for i in 1..n_theta {
        let th = std::f64::consts::PI * i as f64 / n_theta as f64;
        for j in 0..n_phi {
            let ph = 2.0 * std::f64::consts::PI * j as f64 / n_phi as f64;
            let dir = [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()];
            vertices.push([
                center[0] + radius * dir[0],
                center[1] + radius * dir[1],
                center[2] + radius * dir[2],
            ]);
            outward.push([
                outward_sign * dir[0],
                outward_sign * dir[1],
                outward_sign * dir[2],
            ]);
        }
    }
    let north = vertices.len();
    vertices.push([center[0], center[1], center[2] + radius]);
    outward.push([0.0, 0.0, outward_sign]);
    let south = vertices.len();
    vertices.push([center[0], center[1], center[2] - radius]);
    outward.push([0.0, 0.0, -outward_sign]);

    let ring = |i: usize, j: usize| (i - 1) * n_phi + (j % n_phi);
    for j in 0..n_phi {
        triangles.push([north, ring(1, j), ring(1, j + 1)]);
        triangles.push([south, ring(n_theta - 1, j + 1), ring(n_theta - 1, j)]);
    }
    for i in 1..(n_theta - 1) {
        for j in 0..n_phi {
            let (a, b, c, d) = (ring(i, j), ring(i, j + 1), ring(i + 1, j), ring(i + 1, j + 1));
            triangles.push([a, b, c]);
            triangles.push([b, d, c]);
        }
    }
    Interface::Mesh {
        vertices,
        triangles,
        outward,
    }
}

/// Symmetric Hausdorff distance between the vertex sets of two interfaces
/// (adequate at extraction resolution).
pub fn hausdorff_vertices(a: &Interface, b: &Interface) -> f64 {
    let one_sided = |x: &Interface, y: &Interface| -> f64 {
        let mut worst = 0.0f64;
        for i in 0..x.vertex_count() {
            let p = x.vertex(i);
            let mut best = f64::INFINITY;
            for j in 0..y.vertex_count() {
                let q = y.vertex(j);
                let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2);
                best = best.min(d2);
            }
            worst = worst.max(best);
        }
        worst.sqrt()
    };
    one_sided(a, b).max(one_sided(b, a))
}
