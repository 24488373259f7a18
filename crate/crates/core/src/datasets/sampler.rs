//! Point samplers for the data families: closed forms for the analytic
//! families, multilinear interpolation for tabulated fields.

use super::DataFamily;
use crate::geometry::{sym_index, sym_len, ChristoffelField, FieldSampler, Grid, SymTensorField};

/// Closed-form sampler for the analytic families (conformally flat metric
/// `psi^4 delta`, second fundamental form a constant multiple of the metric).
pub struct AnalyticSampler<'a> {
    pub family: &'a DataFamily,
    pub dim: usize,
}

impl FieldSampler for AnalyticSampler<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn metric_at(&self, x: &[f64]) -> [f64; 6] {
        let mut xx = [0.0; 3];
        xx[..x.len().min(3)].copy_from_slice(&x[..x.len().min(3)]);
        let (psi, _) = self.family.psi_and_grad(&xx);
        let f = psi.powi(4);
        let mut out = [0.0; 6];
        for i in 0..self.dim {
            out[sym_index(self.dim, i, i)] = f;
        }
        out
    }

    fn christoffel_at(&self, x: &[f64]) -> [f64; 18] {
        let mut xx = [0.0; 3];
        xx[..x.len().min(3)].copy_from_slice(&x[..x.len().min(3)]);
        let (psi, dpsi) = self.family.psi_and_grad(&xx);
        // For g = e^{2 phi} delta with phi = 2 ln psi:
        // G^k_ij = d_i phi d^k_j + d_j phi d^k_i - d_k phi d_ij.
        let w: Vec<f64> = (0..self.dim).map(|k| 2.0 * dpsi[k] / psi).collect();
        let m = sym_len(self.dim);
        let mut out = [0.0; 18];
        for k in 0..self.dim {
            for i in 0..self.dim {
                for j in i..self.dim {
                    let mut v = 0.0;
                    if k == i {
                        v += w[j];
                    }
                    if k == j {
                        v += w[i];
                    }
                    if i == j {
                        v -= w[k];
                    }
                    out[k * m + sym_index(self.dim, i, j)] = v;
                }
            }
        }
        out
    }

    fn p_at(&self, x: &[f64]) -> [f64; 6] {
        let c = self.family.trace_coefficient();
        if c == 0.0 {
            return [0.0; 6];
        }
        let g = self.metric_at(x);
        let mut out = [0.0; 6];
        for (o, gi) in out.iter_mut().zip(g.iter()) {
            *o = c * gi;
        }
        out
    }
}

/// Multilinear interpolation of tabulated node fields. Points outside the
/// lattice box are clamped to it.
pub struct TabulatedSampler<'a> {
    pub grid: &'a Grid,
    pub g: &'a SymTensorField,
    pub p: &'a SymTensorField,
    pub gamma: &'a ChristoffelField,
}

impl TabulatedSampler<'_> {
    /// Corner nodes and weights of the cell containing `x`.
    fn cell_weights(&self, x: &[f64]) -> Vec<(usize, f64)> {
        let d = self.grid.grid_dim;
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..d {
            let t = (x[a] - self.grid.origin[a]) / self.grid.h;
            let t = t.clamp(0.0, (self.grid.shape[a] - 1) as f64);
            let i = (t.floor() as usize).min(self.grid.shape[a] - 2);
            base[a] = i;
            frac[a] = t - i as f64;
        }
        let mut out = Vec::with_capacity(1 << d);
        for corner in 0..(1usize << d) {
            let mut m = [0usize; 3];
            let mut w = 1.0;
            for a in 0..d {
                let hi = (corner >> a) & 1 == 1;
                m[a] = base[a] + hi as usize;
                w *= if hi { frac[a] } else { 1.0 - frac[a] };
            }
            out.push((self.grid.flat(m), w));
        }
        out
    }
}

impl FieldSampler for TabulatedSampler<'_> {
    fn dim(&self) -> usize {
        self.grid.grid_dim
    }

    fn metric_at(&self, x: &[f64]) -> [f64; 6] {
        let m = sym_len(self.dim());
        let mut out = [0.0; 6];
        for (node, w) in self.cell_weights(x) {
            for (k, o) in out.iter_mut().take(m).enumerate() {
                *o += w * self.g.at(node)[k];
            }
        }
        out
    }

    fn christoffel_at(&self, x: &[f64]) -> [f64; 18] {
        let d = self.dim();
        let m = sym_len(d);
        let mut out = [0.0; 18];
        for (node, w) in self.cell_weights(x) {
            for k in 0..d {
                for ij in 0..m {
                    // Recover (i, j) from the packed index by scanning.
                    let mut found = (0, 0);
                    'scan: for i in 0..d {
                        for j in i..d {
                            if sym_index(d, i, j) == ij {
                                found = (i, j);
                                break 'scan;
                            }
                        }
                    }
                    out[k * m + ij] += w * self.gamma.get(node, k, found.0, found.1);
                }
            }
        }
        out
    }

    fn p_at(&self, x: &[f64]) -> [f64; 6] {
        let m = sym_len(self.dim());
        let mut out = [0.0; 6];
        for (node, w) in self.cell_weights(x) {
            for (k, o) in out.iter_mut().take(m).enumerate() {
                *o += w * self.p.at(node)[k];
            }
        }
        out
    }
}
