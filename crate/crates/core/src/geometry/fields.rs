//! Node-major storage for symmetric tensor fields and the per-node geometry
//! bundle (metric, connection, second fundamental form) that the operator
//! kernels read.

use nalgebra::{Matrix2, Matrix3};

use super::grid::NodeClass;
use super::ops::ChristoffelField;
use crate::{Error, Result};

/// Number of independent components of a symmetric matrix in `dim` dimensions.
pub fn sym_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

/// Packed index of component `(i, j)` of a symmetric matrix, upper triangle
/// stored row-major: for `dim = 3` the order is 00, 01, 02, 11, 12, 22.
pub fn sym_index(dim: usize, i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    debug_assert!(b < dim);
    a * dim - a * (a.saturating_sub(1)) / 2 + (b - a)
}

/// Symmetric-matrix-valued field, one packed matrix per lattice node.
#[derive(Clone, Debug)]
pub struct SymTensorField {
    pub dim: usize,
    data: Vec<f64>,
}

impl SymTensorField {
    pub fn zeros(dim: usize, nodes: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; nodes * sym_len(dim)],
        }
    }

    pub fn node_count(&self) -> usize {
        self.data.len() / sym_len(self.dim)
    }

    /// Packed components at a node.
    pub fn at(&self, node: usize) -> &[f64] {
        let m = sym_len(self.dim);
        &self.data[node * m..(node + 1) * m]
    }

    pub fn at_mut(&mut self, node: usize) -> &mut [f64] {
        let m = sym_len(self.dim);
        &mut self.data[node * m..(node + 1) * m]
    }

    pub fn get(&self, node: usize, i: usize, j: usize) -> f64 {
        self.at(node)[sym_index(self.dim, i, j)]
    }

    pub fn set(&mut self, node: usize, i: usize, j: usize, value: f64) {
        let k = sym_index(self.dim, i, j);
        self.at_mut(node)[k] = value;
    }
}

/// Inverts a packed symmetric matrix; returns the packed inverse and the
/// determinant, or `None` when the determinant is not strictly positive.
pub fn invert_sym_packed(dim: usize, a: &[f64]) -> Option<([f64; 6], f64)> {
    let mut out = [0.0f64; 6];
    match dim {
        2 => {
            let (a00, a01, a11) = (a[0], a[1], a[2]);
            let det = a00 * a11 - a01 * a01;
            if !(det > 0.0) || !det.is_finite() {
                return None;
            }
            out[0] = a11 / det;
            out[1] = -a01 / det;
            out[2] = a00 / det;
            Some((out, det))
        }
        3 => {
            let (a00, a01, a02, a11, a12, a22) = (a[0], a[1], a[2], a[3], a[4], a[5]);
            let c00 = a11 * a22 - a12 * a12;
            let c01 = a02 * a12 - a01 * a22;
            let c02 = a01 * a12 - a02 * a11;
            let det = a00 * c00 + a01 * c01 + a02 * c02;
            if !(det > 0.0) || !det.is_finite() {
                return None;
            }
            out[0] = c00 / det;
            out[1] = c01 / det;
            out[2] = c02 / det;
            out[3] = (a00 * a22 - a02 * a02) / det;
            out[4] = (a01 * a02 - a00 * a12) / det;
            out[5] = (a00 * a11 - a01 * a01) / det;
            Some((out, det))
        }
        _ => None,
    }
}

/// Largest absolute eigenvalue of `p` measured against the metric `g`
/// (both packed symmetric), i.e. the operator norm of the endomorphism
/// obtained by raising one index of `p`.
pub fn p_operator_norm(dim: usize, g: &[f64], p: &[f64]) -> f64 {
    match dim {
        2 => {
            let gm = Matrix2::new(g[0], g[1], g[1], g[2]);
            let pm = Matrix2::new(p[0], p[1], p[1], p[2]);
            let chol = match gm.cholesky() {
                Some(c) => c,
                None => return f64::INFINITY,
            };
            let l = chol.l();
            let linv = l.try_inverse().expect("triangular factor is invertible");
            let b = linv * pm * linv.transpose();
            let sym = nalgebra::SymmetricEigen::new(b);
            sym.eigenvalues.iter().fold(0.0f64, |m, &e| m.max(e.abs()))
        }
        3 => {
            let gm = Matrix3::new(
                g[0], g[1], g[2], g[1], g[3], g[4], g[2], g[4], g[5],
            );
            let pm = Matrix3::new(
                p[0], p[1], p[2], p[1], p[3], p[4], p[2], p[4], p[5],
            );
            let chol = match gm.cholesky() {
                Some(c) => c,
                None => return f64::INFINITY,
            };
            let l = chol.l();
            let linv = l.try_inverse().expect("triangular factor is invertible");
            let b = linv * pm * linv.transpose();
            let sym = nalgebra::SymmetricEigen::new(b);
            sym.eigenvalues.iter().fold(0.0f64, |m, &e| m.max(e.abs()))
        }
        _ => f64::INFINITY,
    }
}

/// Metric field with cached inverse and volume density.
#[derive(Clone, Debug)]
pub struct MetricField {
    pub g: SymTensorField,
    pub inv: SymTensorField,
    pub sqrt_det: Vec<f64>,
}

impl MetricField {
    /// Builds the cache, requiring a symmetric positive-definite matrix at
    /// every node (sanitize exterior nodes to the identity before calling).
    pub fn from_g(g: SymTensorField) -> Result<Self> {
        let dim = g.dim;
        let nodes = g.node_count();
        let mut inv = SymTensorField::zeros(dim, nodes);
        let mut sqrt_det = vec![0.0; nodes];
        for node in 0..nodes {
            let (iv, det) = invert_sym_packed(dim, g.at(node)).ok_or_else(|| {
                Error::InvalidInput(format!(
                    "metric at node {node} is not positive definite"
                ))
            })?;
            inv.at_mut(node).copy_from_slice(&iv[..sym_len(dim)]);
            sqrt_det[node] = det.sqrt();
        }
        Ok(Self { g, inv, sqrt_det })
    }
}

/// Rotationally symmetric geometry sampled on a radius lattice. The metric is
/// `g_rr dr^2 + rho(r)^2` times the round metric on the coordinate sphere;
/// fluxes are conservative with weight `w = sqrt(g_rr) * rho^(n-1)`.
#[derive(Clone, Debug)]
pub struct RadialGeometry {
    /// Radial metric coefficient `g_rr` at nodes.
    pub grr: Vec<f64>,
    /// `1 / g_rr` at nodes.
    pub inv_grr: Vec<f64>,
    /// Divergence weight `w(r)` at nodes.
    pub weight: Vec<f64>,
    /// `w` at the midpoints between consecutive nodes.
    pub weight_half: Vec<f64>,
    /// `1 / g_rr` at midpoints.
    pub inv_grr_half: Vec<f64>,
    /// Conformal factor `c(r)` of the second fundamental form `p = c * g`.
    pub p_conformal: Vec<f64>,
    /// Mean curvature of the coordinate sphere through each node, with
    /// respect to the outward (increasing-radius) unit normal.
    pub sphere_h: Vec<f64>,
    /// Areal radius `rho(r)` at nodes.
    pub areal: Vec<f64>,
}

/// Per-node geometry consumed by the operator kernels.
#[derive(Clone, Debug)]
pub enum GeometryData {
    Cartesian {
        metric: MetricField,
        gamma: ChristoffelField,
        p: SymTensorField,
    },
    Radial(RadialGeometry),
}

impl GeometryData {
    pub fn is_radial(&self) -> bool {
        matches!(self, GeometryData::Radial(_))
    }

    /// Supremum over non-exterior nodes of the operator norm of the second
    /// fundamental form measured in the metric.
    pub fn p_norm_sup(&self, class: &[NodeClass]) -> f64 {
        match self {
            GeometryData::Cartesian { metric, p, .. } => {
                let mut sup = 0.0f64;
                for (node, c) in class.iter().enumerate() {
                    if *c == NodeClass::Exterior {
                        continue;
                    }
                    sup = sup.max(p_operator_norm(metric.g.dim, metric.g.at(node), p.at(node)));
                }
                sup
            }
            GeometryData::Radial(r) => {
                let mut sup = 0.0f64;
                for (node, c) in class.iter().enumerate() {
                    if *c == NodeClass::Exterior {
                        continue;
                    }
                    sup = sup.max(r.p_conformal[node].abs());
                }
                sup
            }
        }
    }
}

// Keep the unused-constant lint honest: kernels size their scratch arrays by
// the packed length of the largest supported dimension.

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix3 as M3;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn packed_index_order() {
        // dim 3 upper triangle row-major.
        let idx: Vec<usize> = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]
            .iter()
            .map(|&(i, j)| sym_index(3, i, j))
            .collect();
        assert_eq!(idx, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(sym_index(3, 2, 1), sym_index(3, 1, 2));
        assert_eq!(sym_index(2, 1, 1), 2);
        assert_eq!(sym_len(3), 6);
    }

    #[test]
    fn invert_matches_dense_inverse() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            // Random SPD: A = B B^T + I.
            let b = M3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            let a = b * b.transpose() + M3::identity();
            let packed = [
                a[(0, 0)],
                a[(0, 1)],
                a[(0, 2)],
                a[(1, 1)],
                a[(1, 2)],
                a[(2, 2)],
            ];
            let (inv, det) = invert_sym_packed(3, &packed).unwrap();
            let dense_inv = a.try_inverse().unwrap();
            assert!((det - a.determinant()).abs() <= 1e-10 * a.determinant().abs());
            for i in 0..3 {
                for j in 0..3 {
                    assert!(
                        (inv[sym_index(3, i, j)] - dense_inv[(i, j)]).abs() < 1e-10,
                        "component {i}{j}"
                    );
                }
            }
        }
    }

    #[test]
    fn invert_rejects_indefinite() {
        assert!(invert_sym_packed(2, &[1.0, 2.0, 1.0]).is_none());
        assert!(invert_sym_packed(3, &[0.0; 6]).is_none());
    }

    #[test]
    fn operator_norm_of_conformal_tensor_is_its_factor() {
        // p = c g has all generalized eigenvalues equal to c.
        let g = [2.0, 0.3, -0.1, 1.5, 0.2, 3.0];
        let c = -0.75;
        let p: Vec<f64> = g.iter().map(|&x| c * x).collect();
        let norm = p_operator_norm(3, &g, &p);
        assert!((norm - 0.75).abs() < 1e-12);
    }

    #[test]
    fn operator_norm_euclidean_case() {
        // Against the identity metric the norm is the plain spectral norm:
        // diag(3, -5) has norm 5.
        let g = [1.0, 0.0, 1.0];
        let p = [3.0, 0.0, -5.0];
        assert!((p_operator_norm(2, &g, &p) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn metric_field_caches() {
        let mut g = SymTensorField::zeros(2, 3);
        for node in 0..3 {
            let s = 1.0 + node as f64;
            g.set(node, 0, 0, s);
            g.set(node, 1, 1, s);
        }
        let m = MetricField::from_g(g).unwrap();
        assert!((m.sqrt_det[1] - 2.0).abs() < 1e-14);
        assert!((m.inv.get(2, 0, 0) - 1.0 / 3.0).abs() < 1e-14);
    }
}
