//! Pointwise kernels of the regularized prescribed-mean-curvature operator
//! for graphs: residual, analytic Jacobian stencil, derived graph
//! quantities, and the discrete stability (linearization-kernel) residual.
//!
//! Notation used throughout: at a node with height gradient `A_l = d_l u`,
//! raised gradient `u^j = g^{jl} A_l`, tilt `v = sqrt(1 + u^j A_j)`, the
//! operator reads `F(u) = mc(u) + trp(u) - t u`, where
//! `mc(u) = gb^{jk} Hess_jk(u) / v`, `trp(u) = gb^{jk} p_jk`, and
//! `gb^{jk} = g^{jk} - u^j u^k / v^2` is the inverse metric induced on the
//! graph, pushed down to the base.

use super::fields::{sym_index, GeometryData};
use super::grid::{Domain, Grid, NodeClass, MAX_DIM};
use super::ops::{fd_partial, ricci_from_christoffels};
use crate::{Error, Result};

/// Maximum stencil size: the full Moore box including the center.
pub const STENCIL_MAX: usize = 27;

/// A domain plus the geometry sampled on it; everything the kernels read.
#[derive(Clone, Copy)]
pub struct Problem<'a> {
    pub domain: &'a Domain,
    pub geometry: &'a GeometryData,
}

/// Derived pointwise quantities of a height field at a node.
#[derive(Clone, Copy, Debug, Default)]
pub struct GraphState {
    /// Tilt factor `v = sqrt(1 + |grad u|^2)`.
    pub v: f64,
    /// Mean curvature of the graph.
    pub mc: f64,
    /// Trace of the second fundamental form over the graph tangent.
    pub trp: f64,
    /// Coordinate gradient of the height.
    pub du: [f64; MAX_DIM],
    /// Horizontal part of the downward unit normal, `u^i / v`.
    pub nu_h: [f64; MAX_DIM],
}

/// One Jacobian row over the Moore stencil. `coeffs[code]` multiplies the
/// height at the node reached by the offset with ternary code
/// `sum_a (off_a + 1) 3^a`; codes beyond `3^dim` are unused.
#[derive(Clone, Debug)]
pub struct StencilRow {
    pub coeffs: [f64; STENCIL_MAX],
}

impl Default for StencilRow {
    fn default() -> Self {
        Self {
            coeffs: [0.0; STENCIL_MAX],
        }
    }
}

/// Ternary code of an offset vector (components in {-1, 0, 1}).
pub fn offset_code(dim: usize, off: &[isize]) -> usize {
    let mut code = 0usize;
    let mut pow = 1usize;
    for a in 0..dim {
        code += (off[a] + 1) as usize * pow;
        pow *= 3;
    }
    code
}

/// Flat index reached from `node` by the offset with the given ternary code.
/// The caller guarantees the move stays inside the lattice box (true for
/// interior nodes by construction).
pub fn code_neighbor(grid: &Grid, node: usize, code: usize) -> usize {
    let mut rest = code;
    let mut flat = node as isize;
    for a in 0..grid.grid_dim {
        let off = (rest % 3) as isize - 1;
        rest /= 3;
        flat += off * grid.stride(a) as isize;
    }
    flat as usize
}

impl<'a> Problem<'a> {
    pub fn grid(&self) -> &Grid {
        &self.domain.grid
    }

    /// Ambient dimension of the slice.
    pub fn n(&self) -> usize {
        self.grid().ambient_dim
    }

    /// Center ternary code of the stencil.
    pub fn center_code(&self) -> usize {
        (3usize.pow(self.grid().grid_dim as u32) - 1) / 2
    }

    /// Number of stencil slots (3^grid_dim).
    pub fn stencil_len(&self) -> usize {
        3usize.pow(self.grid().grid_dim as u32)
    }

    /// Derived graph quantities at an interior node (central differences).
    pub fn graph_state(&self, u: &[f64], node: usize) -> GraphState {
        debug_assert!(self.domain.is_interior(node));
        match self.geometry {
            GeometryData::Cartesian { .. } => self.cartesian_kernel(u, node, 0.0, None),
            GeometryData::Radial(_) => self.radial_kernel(u, node, 0.0, None),
        }
    }

    /// Residual `mc(u) + trp(u) - t u` at an interior node.
    pub fn residual_at(&self, u: &[f64], t: f64, node: usize) -> f64 {
        debug_assert!(self.domain.is_interior(node));
        let s = match self.geometry {
            GeometryData::Cartesian { .. } => self.cartesian_kernel(u, node, t, None),
            GeometryData::Radial(_) => self.radial_kernel(u, node, t, None),
        };
        s.mc + s.trp - t * u[node]
    }

    /// Residual and analytic Jacobian row at an interior node.
    pub fn residual_and_row(&self, u: &[f64], t: f64, node: usize, row: &mut StencilRow) -> f64 {
        debug_assert!(self.domain.is_interior(node));
        row.coeffs = [0.0; STENCIL_MAX];
        let s = match self.geometry {
            GeometryData::Cartesian { .. } => self.cartesian_kernel(u, node, t, Some(row)),
            GeometryData::Radial(_) => self.radial_kernel(u, node, t, Some(row)),
        };
        s.mc + s.trp - t * u[node]
    }

    /// Largest absolute residual over the given interior nodes.
    pub fn residual_sup(&self, u: &[f64], t: f64, nodes: &[usize]) -> f64 {
        nodes
            .iter()
            .map(|&i| self.residual_at(u, t, i).abs())
            .fold(0.0, f64::max)
    }

    fn cartesian_kernel(
        &self,
        u: &[f64],
        node: usize,
        t: f64,
        row: Option<&mut StencilRow>,
    ) -> GraphState {
        let (metric, gamma, p) = match self.geometry {
            GeometryData::Cartesian { metric, gamma, p } => (metric, gamma, p),
            _ => unreachable!(),
        };
        let grid = self.grid();
        let dim = grid.grid_dim;
        let h = grid.h;
        let uc = u[node];

        // First and second differences over the Moore box.
        let mut a = [0.0f64; MAX_DIM]; // A_l = d_l u
        let mut b = [[0.0f64; MAX_DIM]; MAX_DIM]; // B_jk = d2_jk u
        let mut up = [0.0f64; MAX_DIM]; // u^j
        for l in 0..dim {
            let fw = u[(node as isize + grid.stride(l) as isize) as usize];
            let bw = u[(node as isize - grid.stride(l) as isize) as usize];
            a[l] = (fw - bw) / (2.0 * h);
            b[l][l] = (fw - 2.0 * uc + bw) / (h * h);
        }
        for j in 0..dim {
            for k in (j + 1)..dim {
                let sj = grid.stride(j) as isize;
                let sk = grid.stride(k) as isize;
                let pp = u[(node as isize + sj + sk) as usize];
                let pm = u[(node as isize + sj - sk) as usize];
                let mp = u[(node as isize - sj + sk) as usize];
                let mm = u[(node as isize - sj - sk) as usize];
                let mixed = (pp - pm - mp + mm) / (4.0 * h * h);
                b[j][k] = mixed;
                b[k][j] = mixed;
            }
        }

        let ginv = metric.inv.at(node);
        let pk = p.at(node);
        for j in 0..dim {
            for l in 0..dim {
                up[j] += ginv[sym_index(dim, j, l)] * a[l];
            }
        }
        let mut v2 = 1.0;
        for j in 0..dim {
            v2 += up[j] * a[j];
        }
        let v = v2.sqrt();

        // Covariant Hessian and induced inverse metric.
        let mut hess = [[0.0f64; MAX_DIM]; MAX_DIM];
        let mut gbar = [[0.0f64; MAX_DIM]; MAX_DIM];
        for j in 0..dim {
            for k in 0..dim {
                let mut hjk = b[j][k];
                for l in 0..dim {
                    hjk -= gamma.get(node, l, j, k) * a[l];
                }
                hess[j][k] = hjk;
                gbar[j][k] = ginv[sym_index(dim, j, k)] - up[j] * up[k] / v2;
            }
        }
        let mut s_tr = 0.0;
        let mut trp = 0.0;
        for j in 0..dim {
            for k in 0..dim {
                s_tr += gbar[j][k] * hess[j][k];
                trp += gbar[j][k] * pk[sym_index(dim, j, k)];
            }
        }
        let mc = s_tr / v;

        if let Some(row) = row {
            // d gbar^{jk} / d A_l, shared between the mc and trp chains.
            let mut dfda = [0.0f64; MAX_DIM];
            for l in 0..dim {
                let mut ds = 0.0; // d s_tr / d A_l
                let mut dtrp = 0.0;
                for j in 0..dim {
                    for k in 0..dim {
                        let dgbar = -(ginv[sym_index(dim, j, l)] * up[k]
                            + up[j] * ginv[sym_index(dim, k, l)])
                            / v2
                            + 2.0 * up[j] * up[k] * up[l] / (v2 * v2);
                        ds += dgbar * hess[j][k];
                        dtrp += dgbar * pk[sym_index(dim, j, k)];
                    }
                }
                // Hessian depends on A_l through the connection term.
                for j in 0..dim {
                    for k in 0..dim {
                        ds -= gbar[j][k] * gamma.get(node, l, j, k);
                    }
                }
                let dmc = ds / v - s_tr * up[l] / (v2 * v);
                dfda[l] = dmc + dtrp;
            }

            // Scatter the gradient chain: A_l touches the two axis neighbors.
            for l in 0..dim {
                let mut off = [0isize; MAX_DIM];
                off[l] = 1;
                row.coeffs[offset_code(dim, &off)] += dfda[l] / (2.0 * h);
                off[l] = -1;
                row.coeffs[offset_code(dim, &off)] -= dfda[l] / (2.0 * h);
            }
            // Second-difference chain.
            for j in 0..dim {
                let c = gbar[j][j] / (v * h * h);
                let mut off = [0isize; MAX_DIM];
                off[j] = 1;
                row.coeffs[offset_code(dim, &off)] += c;
                off[j] = -1;
                row.coeffs[offset_code(dim, &off)] += c;
                row.coeffs[self.center_code()] -= 2.0 * c;
            }
            for j in 0..dim {
                for k in (j + 1)..dim {
                    // B_jk enters twice in the symmetric contraction.
                    let c = 2.0 * gbar[j][k] / (v * 4.0 * h * h);
                    for (oj, ok, sign) in
                        [(1, 1, 1.0), (1, -1, -1.0), (-1, 1, -1.0), (-1, -1, 1.0)]
                    {
                        let mut off = [0isize; MAX_DIM];
                        off[j] = oj;
                        off[k] = ok;
                        row.coeffs[offset_code(dim, &off)] += sign * c;
                    }
                }
            }
            row.coeffs[self.center_code()] -= t;
        }

        let mut nu_h = [0.0f64; MAX_DIM];
        for j in 0..dim {
            nu_h[j] = up[j] / v;
        }
        GraphState {
            v,
            mc,
            trp,
            du: a,
            nu_h,
        }
    }

    fn radial_kernel(
        &self,
        u: &[f64],
        node: usize,
        t: f64,
        row: Option<&mut StencilRow>,
    ) -> GraphState {
        let geo = match self.geometry {
            GeometryData::Radial(r) => r,
            _ => unreachable!(),
        };
        let grid = self.grid();
        let h = grid.h;
        let n = grid.ambient_dim as f64;
        let i = node;
        let (um, uc, upn) = (u[i - 1], u[i], u[i + 1]);

        // Conservative flux through the two half-nodes. weight_half[i] sits
        // between nodes i and i+1.
        let flux = |half: usize, slope: f64| -> (f64, f64) {
            let gi = geo.inv_grr_half[half];
            let w = geo.weight_half[half];
            let vh2 = 1.0 + gi * slope * slope;
            let vh = vh2.sqrt();
            let phi = w * gi * slope / vh;
            let dphi_dslope = w * gi / (vh2 * vh);
            (phi, dphi_dslope)
        };
        let sp = (upn - uc) / h;
        let sm = (uc - um) / h;
        let (phip, dphip) = flux(i, sp);
        let (phim, dphim) = flux(i - 1, sm);
        let mc = (phip - phim) / (h * geo.weight[i]);

        // Trace term for p = c g over the graph tangent: c (n - 1 + 1/v^2),
        // with v from the centered slope.
        let s0 = (upn - um) / (2.0 * h);
        let v2 = 1.0 + geo.inv_grr[i] * s0 * s0;
        let v = v2.sqrt();
        let c = geo.p_conformal[i];
        let trp = c * (n - 1.0 + 1.0 / v2);

        if let Some(row) = row {
            let wi = geo.weight[i];
            // mc chain.
            let d_up = dphip / (h * h * wi);
            let d_um = dphim / (h * h * wi);
            row.coeffs[2] += d_up;
            row.coeffs[0] += d_um;
            row.coeffs[1] += -d_up - d_um;
            // trp chain through v^2: d(1/v2)/ds0 = -2 gi s0 / v2^2.
            let dtrp_ds0 = c * (-2.0 * geo.inv_grr[i] * s0 / (v2 * v2));
            row.coeffs[2] += dtrp_ds0 / (2.0 * h);
            row.coeffs[0] -= dtrp_ds0 / (2.0 * h);
            // Zeroth-order term.
            row.coeffs[1] -= t;
        }

        let gi = geo.inv_grr[i];
        GraphState {
            v,
            mc,
            trp,
            du: [s0, 0.0, 0.0],
            nu_h: [gi * s0 / v, 0.0, 0.0],
        }
    }

    /// Tilt factor at every non-exterior node, one-sided at the boundary.
    pub fn tilt_field(&self, u: &[f64]) -> Vec<f64> {
        let grid = self.grid();
        let class = &self.domain.class;
        let mut out = vec![f64::NAN; grid.len()];
        for node in 0..grid.len() {
            if class[node] == NodeClass::Exterior {
                continue;
            }
            let mut df = [0.0f64; MAX_DIM];
            for axis in 0..grid.grid_dim {
                df[axis] = fd_partial(grid, class, &|k| u[k], node, axis);
            }
            let v2 = match self.geometry {
                GeometryData::Cartesian { metric, .. } => {
                    let dim = grid.grid_dim;
                    let inv = metric.inv.at(node);
                    let mut s = 1.0;
                    for a in 0..dim {
                        for b in 0..dim {
                            s += inv[sym_index(dim, a, b)] * df[a] * df[b];
                        }
                    }
                    s
                }
                GeometryData::Radial(r) => 1.0 + r.inv_grr[node] * df[0] * df[0],
            };
            out[node] = v2.sqrt();
        }
        out
    }

    /// Residual of the stability identity satisfied by the tilt of an exact
    /// solution: applies the linearized operator along the vertical direction
    /// to `1/v` and returns the defect at each interior node (`NaN`
    /// elsewhere). Errors when `u` is not a solution to the stated tolerance,
    /// since the identity is meaningless off-shell.
    pub fn stability_residual(&self, u: &[f64], t: f64, solution_tol: f64) -> Result<Vec<f64>> {
        let sup = self.residual_sup(u, t, self.domain.interior());
        if sup > solution_tol {
            return Err(Error::NotASolution(format!(
                "height field has equation residual {sup:.3e}, above tolerance {solution_tol:.3e}"
            )));
        }
        match self.geometry {
            GeometryData::Cartesian { .. } => self.stability_residual_cartesian(u, t),
            GeometryData::Radial(_) => self.stability_residual_radial(u, t),
        }
    }

    fn stability_residual_cartesian(&self, u: &[f64], t: f64) -> Result<Vec<f64>> {
        let (metric, gamma, p) = match self.geometry {
            GeometryData::Cartesian { metric, gamma, p } => (metric, gamma, p),
            _ => unreachable!(),
        };
        let grid = self.grid();
        let class = &self.domain.class;
        let dim = grid.grid_dim;
        let ricci = ricci_from_christoffels(grid, class, gamma);

        // Fields needed pointwise: 1/v and the driving term t u - trp(u).
        let vfield = self.tilt_field(u);
        let mut invv = vec![f64::NAN; grid.len()];
        let mut drive = vec![f64::NAN; grid.len()];
        for node in 0..grid.len() {
            if class[node] == NodeClass::Exterior {
                continue;
            }
            invv[node] = 1.0 / vfield[node];
            let trp = if self.domain.is_interior(node) {
                self.graph_state(u, node).trp
            } else {
                // One-sided gradient version at the boundary.
                let mut df = [0.0f64; MAX_DIM];
                for axis in 0..dim {
                    df[axis] = fd_partial(grid, class, &|k| u[k], node, axis);
                }
                let inv = metric.inv.at(node);
                let mut up = [0.0f64; MAX_DIM];
                for a in 0..dim {
                    for b in 0..dim {
                        up[a] += inv[sym_index(dim, a, b)] * df[b];
                    }
                }
                let mut v2 = 1.0;
                for a in 0..dim {
                    v2 += up[a] * df[a];
                }
                let pk = p.at(node);
                let mut s = 0.0;
                for a in 0..dim {
                    for b in 0..dim {
                        s += (inv[sym_index(dim, a, b)] - up[a] * up[b] / v2)
                            * pk[sym_index(dim, a, b)];
                    }
                }
                s
            };
            drive[node] = t * u[node] - trp;
        }

        let mut out = vec![f64::NAN; grid.len()];
        for &node in self.domain.interior() {
            let st = self.graph_state(u, node);
            let v2 = st.v * st.v;
            let ginv = metric.inv.at(node);

            // Hessian of u for the shape operator.
            let a = st.du;
            let mut hess = [[0.0f64; MAX_DIM]; MAX_DIM];
            let h = grid.h;
            for j in 0..dim {
                let fw = u[(node as isize + grid.stride(j) as isize) as usize];
                let bw = u[(node as isize - grid.stride(j) as isize) as usize];
                hess[j][j] = (fw - 2.0 * u[node] + bw) / (h * h);
            }
            for j in 0..dim {
                for k in (j + 1)..dim {
                    let sj = grid.stride(j) as isize;
                    let sk = grid.stride(k) as isize;
                    let pp = u[(node as isize + sj + sk) as usize];
                    let pm = u[(node as isize + sj - sk) as usize];
                    let mp = u[(node as isize - sj + sk) as usize];
                    let mm = u[(node as isize - sj - sk) as usize];
                    let mixed = (pp - pm - mp + mm) / (4.0 * h * h);
                    hess[j][k] = mixed;
                    hess[k][j] = mixed;
                }
            }
            for j in 0..dim {
                for k in 0..dim {
                    for l in 0..dim {
                        hess[j][k] -= gamma.get(node, l, j, k) * a[l];
                    }
                }
            }

            let mut up = [0.0f64; MAX_DIM];
            for j in 0..dim {
                for l in 0..dim {
                    up[j] += ginv[sym_index(dim, j, l)] * a[l];
                }
            }
            let mut gbar = [[0.0f64; MAX_DIM]; MAX_DIM];
            for j in 0..dim {
                for k in 0..dim {
                    gbar[j][k] = ginv[sym_index(dim, j, k)] - up[j] * up[k] / v2;
                }
            }

            // |shape|^2 with h_jk = Hess_jk / v, indices raised with gbar.
            let mut shape2 = 0.0;
            for j in 0..dim {
                for k in 0..dim {
                    for l in 0..dim {
                        for m in 0..dim {
                            shape2 += gbar[j][l] * gbar[k][m] * (hess[j][k] / st.v)
                                * (hess[l][m] / st.v);
                        }
                    }
                }
            }

            // Ambient curvature seen by the normal: horizontal part only.
            let mut ric_nn = 0.0;
            for j in 0..dim {
                for k in 0..dim {
                    ric_nn += ricci.get(node, j, k) * st.nu_h[j] * st.nu_h[k];
                }
            }

            // Normal derivative of the driving term (horizontal part).
            let mut nu_drive = 0.0;
            for j in 0..dim {
                nu_drive += st.nu_h[j] * fd_partial(grid, class, &|k| drive[k], node, j);
            }

            // Induced Laplacian of 1/v on the graph.
            let mut lap = 0.0;
            {
                // Covariant Hessian of 1/v, then contract with gbar, minus
                // the curvature drift term mc * nu_h(1/v).
                let mut dinv = [0.0f64; MAX_DIM];
                for j in 0..dim {
                    dinv[j] = fd_partial(grid, class, &|k| invv[k], node, j);
                }
                let mut hess_iv = [[0.0f64; MAX_DIM]; MAX_DIM];
                let h = grid.h;
                for j in 0..dim {
                    let fw = invv[(node as isize + grid.stride(j) as isize) as usize];
                    let bw = invv[(node as isize - grid.stride(j) as isize) as usize];
                    hess_iv[j][j] = (fw - 2.0 * invv[node] + bw) / (h * h);
                }
                for j in 0..dim {
                    for k in (j + 1)..dim {
                        let sj = grid.stride(j) as isize;
                        let sk = grid.stride(k) as isize;
                        let pp = invv[(node as isize + sj + sk) as usize];
                        let pm = invv[(node as isize + sj - sk) as usize];
                        let mp = invv[(node as isize - sj + sk) as usize];
                        let mm = invv[(node as isize - sj - sk) as usize];
                        let mixed = (pp - pm - mp + mm) / (4.0 * h * h);
                        hess_iv[j][k] = mixed;
                        hess_iv[k][j] = mixed;
                    }
                }
                for j in 0..dim {
                    for k in 0..dim {
                        let mut cov = hess_iv[j][k];
                        for l in 0..dim {
                            cov -= gamma.get(node, l, j, k) * dinv[l];
                        }
                        lap += gbar[j][k] * cov;
                    }
                }
                for j in 0..dim {
                    lap -= st.mc * st.nu_h[j] * dinv[j];
                }
            }

            out[node] = lap + (shape2 + ric_nn + nu_drive) * invv[node];
        }
        Ok(out)
    }

    fn stability_residual_radial(&self, u: &[f64], t: f64) -> Result<Vec<f64>> {
        let geo = match self.geometry {
            GeometryData::Radial(r) => r,
            _ => unreachable!(),
        };
        let grid = self.grid();
        let class = &self.domain.class;
        let h = grid.h;
        let nm1 = (grid.ambient_dim - 1) as f64;

        let vfield = self.tilt_field(u);
        let invv: Vec<f64> = vfield.iter().map(|&v| 1.0 / v).collect();
        let mut drive = vec![f64::NAN; grid.len()];
        for node in 0..grid.len() {
            if class[node] == NodeClass::Exterior {
                continue;
            }
            let v2 = vfield[node] * vfield[node];
            let trp = geo.p_conformal[node] * (nm1 + 1.0 / v2);
            drive[node] = t * u[node] - trp;
        }

        let mut out = vec![f64::NAN; grid.len()];
        for &i in self.domain.interior() {
            let st = self.graph_state(u, i);
            let v = st.v;

            // Induced Laplacian of a radial function on the rotationally
            // symmetric graph: (1/(w v)) d/dr ( (w / v) g^{rr} f' ), using
            // half-node fluxes.
            let f = &invv;
            let lap = {
                let wp = geo.weight_half[i];
                let wm = geo.weight_half[i - 1];
                let gp = geo.inv_grr_half[i];
                let gm = geo.inv_grr_half[i - 1];
                let vp = 0.5 * (vfield[i] + vfield[i + 1]);
                let vm = 0.5 * (vfield[i - 1] + vfield[i]);
                let flux_p = wp / vp * gp * (f[i + 1] - f[i]) / h;
                let flux_m = wm / vm * gm * (f[i] - f[i - 1]) / h;
                (flux_p - flux_m) / (h * geo.weight[i] * v)
            };

            // Principal curvatures: tangential with multiplicity n-1 from
            // the sphere directions, radial as the remainder of mc.
            let rho = geo.areal[i];
            let drho = (geo.areal[i + 1] - geo.areal[i - 1]) / (2.0 * h);
            let lam_t = geo.inv_grr[i] * st.du[0] * drho / (rho * v);
            let lam_r = st.mc - nm1 * lam_t;
            let shape2 = lam_r * lam_r + nm1 * lam_t * lam_t;

            // Radial Ricci curvature seen by the horizontal normal:
            // R_rr = -(n-1) (rho'' / rho - G^r_rr rho' / rho).
            let ddrho = (geo.areal[i + 1] - 2.0 * geo.areal[i] + geo.areal[i - 1]) / (h * h);
            let dgrr = (geo.grr[i + 1] - geo.grr[i - 1]) / (2.0 * h);
            let gam_rrr = 0.5 * geo.inv_grr[i] * dgrr;
            let r_rr = -nm1 * (ddrho / rho - gam_rrr * drho / rho);
            let ric_nn = r_rr * st.nu_h[0] * st.nu_h[0];

            let ddrive = fd_partial(grid, class, &|k| drive[k], i, 0);
            let nu_drive = st.nu_h[0] * ddrive;

            out[i] = lap + (shape2 + ric_nn + nu_drive) * invv[i];
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::fields::{MetricField, SymTensorField};
    use crate::geometry::grid::DomainVariant;
    use crate::geometry::ops::christoffels;

    fn flat_problem_2d(
        shape: usize,
        origin: f64,
        h: f64,
    ) -> (
        Domain,
        MetricField,
        crate::geometry::ops::ChristoffelField,
        SymTensorField,
    ) {
        let grid = Grid::cartesian(2, &[shape, shape], &[origin, origin], h).unwrap();
        let inside = vec![true; grid.len()];
        let domain = Domain::from_mask(grid, &inside, DomainVariant::Seamed).unwrap();
        let mut g = SymTensorField::zeros(2, domain.grid.len());
        for node in 0..domain.grid.len() {
            g.set(node, 0, 0, 1.0);
            g.set(node, 1, 1, 1.0);
        }
        let metric = MetricField::from_g(g).unwrap();
        let gamma = christoffels(&domain.grid, &domain.class, &metric);
        let p = SymTensorField::zeros(2, domain.grid.len());
        (domain, metric, gamma, p)
    }

    #[test]
    fn quadratic_at_critical_point_gives_exact_trace() {
        // u = (q1 x^2 + q2 y^2)/2 has Du = 0 at the origin; there mc = q1+q2
        // exactly for the flat metric, and central differences of a quadratic
        // are exact.
        let (domain, metric, gamma, p) = flat_problem_2d(9, -0.4, 0.1);
        let geometry = GeometryData::Cartesian { metric, gamma, p };
        let problem = Problem {
            domain: &domain,
            geometry: &geometry,
        };
        let (q1, q2) = (1.75, -0.4);
        let u: Vec<f64> = (0..domain.grid.len())
            .map(|n| {
                let x = domain.grid.coords(n);
                0.5 * (q1 * x[0] * x[0] + q2 * x[1] * x[1])
            })
            .collect();
        let center = domain.grid.flat([4, 4, 0]);
        assert!(domain.is_interior(center));
        let r = problem.residual_at(&u, 0.0, center);
        assert!((r - (q1 + q2)).abs() < 1e-12, "residual {r}");
    }

    #[test]
    fn vertical_shift_invariance_without_zeroth_term() {
        let (domain, metric, gamma, p) = flat_problem_2d(11, 0.0, 0.07);
        let geometry = GeometryData::Cartesian { metric, gamma, p };
        let problem = Problem {
            domain: &domain,
            geometry: &geometry,
        };
        let u: Vec<f64> = (0..domain.grid.len())
            .map(|n| {
                let x = domain.grid.coords(n);
                (1.3 * x[0]).sin() * (0.9 * x[1]).cos()
            })
            .collect();
        let shifted: Vec<f64> = u.iter().map(|&z| z + 17.25).collect();
        for &node in domain.interior() {
            let r0 = problem.residual_at(&u, 0.0, node);
            let r1 = problem.residual_at(&shifted, 0.0, node);
            // Exact cancellation up to rounding of the shifted samples,
            // amplified by 1/h^2 in the second differences.
            assert!((r0 - r1).abs() < 1e-10, "{r0} vs {r1}");
        }
    }

    #[test]
    fn mean_curvature_converges_second_order() {
        // u = sin(x) sin(y) on the flat plane; closed-form graph mean
        // curvature via mc = (Delta u - u_i u_j u_ij / v^2) / v.
        let exact_mc = |x: f64, y: f64| -> f64 {
            let (ux, uy) = (x.cos() * y.sin(), x.sin() * y.cos());
            let (uxx, uyy) = (-x.sin() * y.sin(), -x.sin() * y.sin());
            let uxy = x.cos() * y.cos();
            let v2 = 1.0 + ux * ux + uy * uy;
            let num = uxx + uyy
                - (ux * ux * uxx + 2.0 * ux * uy * uxy + uy * uy * uyy) / v2;
            num / v2.sqrt()
        };
        let sample = (0.62, 0.41);
        let mut errs = Vec::new();
        for &m in &[21usize, 41] {
            let h = 0.4 / (m - 1) as f64;
            let origin = [sample.0 - 0.2, sample.1 - 0.2];
            let grid = Grid::cartesian(2, &[m, m], &origin, h).unwrap();
            let inside = vec![true; grid.len()];
            let domain = Domain::from_mask(grid, &inside, DomainVariant::Seamed).unwrap();
            let mut g = SymTensorField::zeros(2, domain.grid.len());
            for node in 0..domain.grid.len() {
                g.set(node, 0, 0, 1.0);
                g.set(node, 1, 1, 1.0);
            }
            let metric = MetricField::from_g(g).unwrap();
            let gamma = christoffels(&domain.grid, &domain.class, &metric);
            let p = SymTensorField::zeros(2, domain.grid.len());
            let geometry = GeometryData::Cartesian { metric, gamma, p };
            let problem = Problem {
                domain: &domain,
                geometry: &geometry,
            };
            let u: Vec<f64> = (0..domain.grid.len())
                .map(|n| {
                    let x = domain.grid.coords(n);
                    x[0].sin() * x[1].sin()
                })
                .collect();
            let node = domain.grid.flat([(m - 1) / 2, (m - 1) / 2, 0]);
            let st = problem.graph_state(&u, node);
            errs.push((st.mc - exact_mc(sample.0, sample.1)).abs());
        }
        let ratio = errs[0] / errs[1].max(1e-300);
        assert!(
            (3.2..=4.8).contains(&ratio),
            "convergence ratio {ratio}, errors {errs:?}"
        );
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        // Polar-coordinate metric exercises the connection terms; a nonzero
        // p field and zeroth-order term exercise the rest.
        let grid = Grid::cartesian(2, &[9, 9], &[1.0, 0.2], 0.05).unwrap();
        let inside = vec![true; grid.len()];
        let domain = Domain::from_mask(grid, &inside, DomainVariant::Seamed).unwrap();
        let mut g = SymTensorField::zeros(2, domain.grid.len());
        let mut p = SymTensorField::zeros(2, domain.grid.len());
        for node in 0..domain.grid.len() {
            let r = domain.grid.coords(node)[0];
            g.set(node, 0, 0, 1.0);
            g.set(node, 1, 1, r * r);
            p.set(node, 0, 0, 0.3);
            p.set(node, 0, 1, 0.1);
            p.set(node, 1, 1, -0.2 * r * r);
        }
        let metric = MetricField::from_g(g).unwrap();
        let gamma = christoffels(&domain.grid, &domain.class, &metric);
        let geometry = GeometryData::Cartesian { metric, gamma, p };
        let problem = Problem {
            domain: &domain,
            geometry: &geometry,
        };
        let mut u: Vec<f64> = (0..domain.grid.len())
            .map(|n| {
                let x = domain.grid.coords(n);
                (2.0 * x[0]).sin() * 0.4 + (3.0 * x[1]).cos() * 0.3 + 0.2 * x[0] * x[1]
            })
            .collect();
        let t = 0.8;
        let node = domain.grid.flat([4, 4, 0]);
        let mut row = StencilRow::default();
        problem.residual_and_row(&u, t, node, &mut row);
        let eps = 1e-6;
        for code in 0..problem.stencil_len() {
            let nb = code_neighbor(&domain.grid, node, code);
            let saved = u[nb];
            u[nb] = saved + eps;
            let rp = problem.residual_at(&u, t, node);
            u[nb] = saved - eps;
            let rm = problem.residual_at(&u, t, node);
            u[nb] = saved;
            let fd = (rp - rm) / (2.0 * eps);
            assert!(
                (row.coeffs[code] - fd).abs() < 1e-5 * (1.0 + fd.abs()),
                "code {code}: analytic {} vs fd {fd}",
                row.coeffs[code]
            );
        }
    }

    #[test]
    fn radial_kernel_matches_flat_closed_form() {
        // Flat R^3 in radial coordinates: for u(r) = r^2 / 2,
        // mc = u'' / v^3 + (2/r) u' / v with v = sqrt(1 + u'^2).
        let grid = Grid::radial(3, 201, 0.5, 0.005).unwrap();
        let inside = vec![true; grid.len()];
        let domain = Domain::from_mask(grid, &inside, DomainVariant::ClosedPair).unwrap();
        let nodes = domain.grid.len();
        let r_at = |i: usize| domain.grid.coords(i)[0];
        let half_r = |i: usize| r_at(i) + 0.5 * domain.grid.h;
        let geo = RadialGeometryBuilder::flat3(nodes, &r_at, &half_r);
        let geometry = GeometryData::Radial(geo);
        let problem = Problem {
            domain: &domain,
            geometry: &geometry,
        };
        let u: Vec<f64> = (0..nodes).map(|i| 0.5 * r_at(i) * r_at(i)).collect();
        let i = 100;
        let r = r_at(i);
        let v = (1.0 + r * r).sqrt();
        let exact = 1.0 / (v * v * v) + (2.0 / r) * r / v;
        let st = problem.graph_state(&u, i);
        assert!(
            (st.mc - exact).abs() < 5e-5,
            "mc {} vs exact {exact}",
            st.mc
        );
    }

    #[test]
    fn radial_jacobian_matches_finite_differences() {
        let grid = Grid::radial(3, 41, 1.0, 0.05).unwrap();
        let inside = vec![true; grid.len()];
        let domain = Domain::from_mask(grid, &inside, DomainVariant::ClosedPair).unwrap();
        let nodes = domain.grid.len();
        let r_at = |i: usize| domain.grid.coords(i)[0];
        let half_r = |i: usize| r_at(i) + 0.5 * domain.grid.h;
        let mut geo = RadialGeometryBuilder::flat3(nodes, &r_at, &half_r);
        for i in 0..nodes {
            geo.p_conformal[i] = -0.6;
        }
        let geometry = GeometryData::Radial(geo);
        let problem = Problem {
            domain: &domain,
            geometry: &geometry,
        };
        let mut u: Vec<f64> = (0..nodes).map(|i| (1.7 * r_at(i)).sin() * 0.8).collect();
        let t = 0.5;
        let node = 20usize;
        let mut row = StencilRow::default();
        problem.residual_and_row(&u, t, node, &mut row);
        let eps = 1e-7;
        for (code, nb) in [(0usize, node - 1), (1, node), (2, node + 1)] {
            let saved = u[nb];
            u[nb] = saved + eps;
            let rp = problem.residual_at(&u, t, node);
            u[nb] = saved - eps;
            let rm = problem.residual_at(&u, t, node);
            u[nb] = saved;
            let fd = (rp - rm) / (2.0 * eps);
            assert!(
                (row.coeffs[code] - fd).abs() < 1e-5 * (1.0 + fd.abs()),
                "code {code}: analytic {} vs fd {fd}",
                row.coeffs[code]
            );
        }
    }

    #[test]
    fn stability_residual_vanishes_on_flat_plane() {
        // u = constant solves the equation with t = 0 on flat data, the graph
        // is totally geodesic, and the tilt is constant: the identity is 0 = 0.
        let (domain, metric, gamma, p) = flat_problem_2d(11, 0.0, 0.1);
        let geometry = GeometryData::Cartesian { metric, gamma, p };
        let problem = Problem {
            domain: &domain,
            geometry: &geometry,
        };
        let u = vec![0.37; domain.grid.len()];
        let res = problem.stability_residual(&u, 0.0, 1e-12).unwrap();
        for &node in domain.interior() {
            assert!(res[node].abs() < 1e-12);
        }
        // Off-shell fields are rejected.
        let bad: Vec<f64> = (0..domain.grid.len())
            .map(|n| domain.grid.coords(n)[0].powi(2))
            .collect();
        assert!(problem.stability_residual(&bad, 0.0, 1e-12).is_err());
    }

    /// Helper producing flat 3-dimensional radial geometry arrays.
    struct RadialGeometryBuilder;

    impl RadialGeometryBuilder {
        fn flat3(
            nodes: usize,
            r_at: &dyn Fn(usize) -> f64,
            half_r: &dyn Fn(usize) -> f64,
        ) -> crate::geometry::RadialGeometry {
            crate::geometry::RadialGeometry {
                grr: vec![1.0; nodes],
                inv_grr: vec![1.0; nodes],
                weight: (0..nodes).map(|i| r_at(i).powi(2)).collect(),
                weight_half: (0..nodes - 1).map(|i| half_r(i).powi(2)).collect(),
                inv_grr_half: vec![1.0; nodes - 1],
                p_conformal: vec![0.0; nodes],
                sphere_h: (0..nodes).map(|i| 2.0 / r_at(i)).collect(),
                areal: (0..nodes).map(r_at).collect(),
            }
        }
    }
}
