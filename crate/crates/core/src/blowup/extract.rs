//! Zero-level extraction of the scaled solution and residual verification of
//! the trapped-surface equation on the result.

use super::BlowUpRecord;
use crate::datasets::{seam_points, DomainSpec, InitialData};
use crate::geometry::{
    circle_polyline, lat_long_sphere, surface_mots_residual, Grid, Interface, NodeClass,
};
use crate::{Error, Result};

/// Summary of the per-vertex trapped-surface residuals.
#[derive(Clone, Copy, Debug)]
pub struct ResidualReport {
    pub sup: f64,
    /// Root-mean-square over vertices with a defined fit.
    pub rms: f64,
    pub vertices: usize,
}

/// Extracts the zero level of `t * u` for the last completed solve and
/// stores it on the record.
pub fn extract_interface(record: &mut BlowUpRecord, data: &InitialData) -> Result<()> {
    let step = record.last_step()?;
    let surface = extract_interface_at(data, &step.u, step.t)?;
    record.interface = Some(surface);
    Ok(())
}

/// Extracts the zero level of `t * u` in the chart: a synthesized round
/// section for radial solves, a marching-squares polyline in 2D, and a
/// marching-simplex triangle mesh in 3D. Orientation hints point toward the
/// positive (diverging) side.
pub fn extract_interface_at(data: &InitialData, u: &[f64], t: f64) -> Result<Interface> {
    if data.radial().is_some() {
        return radial_section(data, u, t);
    }
    let grid = &data.domain.grid;
    let w = shifted_field(data, u, t);
    let surface = match grid.grid_dim {
        2 => marching_squares(grid, &data.domain.class, &w)?,
        3 => marching_simplices(grid, &data.domain.class, &w)?,
        d => {
            return Err(Error::InvalidInput(format!(
                "no interface extraction in chart dimension {d}"
            )))
        }
    };
    if surface.is_empty() {
        return Err(Error::InterfaceExtractionFailed(
            "zero level of the scaled solution touches no interior cell".to_string(),
        ));
    }
    if let DomainSpec::Disk {
        center,
        radius,
        seam_angle,
    } = &data.spec
    {
        let gamma = seam_points(*center, *radius, *seam_angle);
        return snap_to_seam(surface, &gamma, grid.h);
    }
    Ok(surface)
}

/// Scaled field with exact zeros nudged so the level set avoids lattice
/// nodes; the nudge is far below solver tolerance.
fn shifted_field(data: &InitialData, u: &[f64], t: f64) -> Vec<f64> {
    let eps = 1e-14 * data.c_big.max(1.0);
    u.iter()
        .map(|&v| {
            let w = t * v;
            if w == 0.0 {
                eps
            } else {
                w
            }
        })
        .collect()
}

/// Zero crossing along the radius, synthesized back into a round section.
/// The diverging region is the outer collar, so the scan walks inward from
/// the outer boundary and the hints point radially outward.
fn radial_section(data: &InitialData, u: &[f64], t: f64) -> Result<Interface> {
    let grid = &data.domain.grid;
    let m = grid.len();
    let w: Vec<f64> = (0..m).map(|i| t * u[i]).collect();
    if w[m - 1] <= 0.0 {
        return Err(Error::InterfaceExtractionFailed(format!(
            "outer collar is not in the diverging-up region: t*u = {:.3e} at the outer boundary",
            w[m - 1]
        )));
    }
    let mut cross = None;
    for i in (0..m - 1).rev() {
        if w[i + 1] > 0.0 && w[i] <= 0.0 {
            let r_i = grid.coords(i)[0];
            let frac = w[i] / (w[i] - w[i + 1]);
            cross = Some(r_i + grid.h * frac);
            break;
        }
    }
    let r_star = cross.ok_or_else(|| {
        Error::InterfaceExtractionFailed(
            "scaled solution has one sign along the whole radius".to_string(),
        )
    })?;
    let h = grid.h;
    Ok(match grid.ambient_dim {
        2 => {
            let count = ((2.0 * std::f64::consts::PI * r_star / h).ceil() as usize).clamp(32, 512);
            circle_polyline([0.0, 0.0], r_star, count, 1.0)
        }
        _ => {
            let n_theta =
                ((std::f64::consts::PI * r_star / h).ceil() as usize).clamp(16, 96);
            lat_long_sphere([0.0, 0.0, 0.0], r_star, n_theta, 2 * n_theta, 1.0)
        }
    })
}

fn interp(grid: &Grid, a: usize, b: usize, w: &[f64]) -> [f64; 3] {
    let pa = grid.coords(a);
    let pb = grid.coords(b);
    let frac = w[a] / (w[a] - w[b]);
    [
        pa[0] + frac * (pb[0] - pa[0]),
        pa[1] + frac * (pb[1] - pa[1]),
        pa[2] + frac * (pb[2] - pa[2]),
    ]
}

fn vertex_on_edge_2d(
    grid: &Grid,
    w: &[f64],
    a: usize,
    b: usize,
    edge_vertex: &mut std::collections::HashMap<(usize, usize), usize>,
    vertices: &mut Vec<[f64; 2]>,
    normals: &mut Vec<[f64; 2]>,
) -> usize {
    let key = if a < b { (a, b) } else { (b, a) };
    *edge_vertex.entry(key).or_insert_with(|| {
        let p = interp(grid, a, b, w);
        vertices.push([p[0], p[1]]);
        normals.push([0.0, 0.0]);
        vertices.len() - 1
    })
}

/// Square-by-square zero-level polyline. Saddle cells are split by the sign
/// of the cell-center average.
fn marching_squares(grid: &Grid, class: &[NodeClass], w: &[f64]) -> Result<Interface> {
    use std::collections::HashMap;
    let mut vertices: Vec<[f64; 2]> = Vec::new();
    let mut normals: Vec<[f64; 2]> = Vec::new();
    let mut segments: Vec<[usize; 2]> = Vec::new();
    let mut edge_vertex: HashMap<(usize, usize), usize> = HashMap::new();

    let nx = grid.shape[0];
    let ny = grid.shape[1];
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let c = [
                grid.flat([i, j, 0]),
                grid.flat([i + 1, j, 0]),
                grid.flat([i + 1, j + 1, 0]),
                grid.flat([i, j + 1, 0]),
            ];
            if c.iter().any(|&n| class[n] == NodeClass::Exterior) {
                continue;
            }
            let pos: Vec<bool> = c.iter().map(|&n| w[n] > 0.0).collect();
            if pos.iter().all(|&p| p) || pos.iter().all(|&p| !p) {
                continue;
            }
            // Edges in cyclic order with their corner pairs.
            let edges = [(0usize, 1usize), (1, 2), (2, 3), (3, 0)];
            let mut cuts: Vec<(usize, usize)> = Vec::new();
            for (k, &(a, b)) in edges.iter().enumerate() {
                if pos[a] != pos[b] {
                    let v = vertex_on_edge_2d(
                        grid,
                        w,
                        c[a],
                        c[b],
                        &mut edge_vertex,
                        &mut vertices,
                        &mut normals,
                    );
                    cuts.push((k, v));
                }
            }
            let mut pairs: Vec<[usize; 2]> = Vec::new();
            match cuts.len() {
                2 => pairs.push([cuts[0].1, cuts[1].1]),
                4 => {
                    // Saddle: connect crossings so the positive corners stay
                    // on one side, using the center average as tie-breaker.
                    let avg = c.iter().map(|&n| w[n]).sum::<f64>() / 4.0;
                    let first_pos = pos[0];
                    // Edge list is cyclic; crossing k sits between corner k
                    // and k+1. Pair (e0,e1)+(e2,e3) keeps corner 0 isolated,
                    // (e3,e0)+(e1,e2) keeps corner 1 isolated.
                    if (avg > 0.0) == first_pos {
                        pairs.push([cuts[3].1, cuts[0].1]);
                        pairs.push([cuts[1].1, cuts[2].1]);
                    } else {
                        pairs.push([cuts[0].1, cuts[1].1]);
                        pairs.push([cuts[2].1, cuts[3].1]);
                    }
                }
                n => {
                    return Err(Error::InterfaceExtractionFailed(format!(
                        "cell with {n} edge crossings"
                    )))
                }
            }
            // Cell-average gradient of the scaled field for orientation.
            let gx = (w[c[1]] + w[c[2]] - w[c[0]] - w[c[3]]) / (2.0 * grid.h);
            let gy = (w[c[3]] + w[c[2]] - w[c[0]] - w[c[1]]) / (2.0 * grid.h);
            for [va, vb] in pairs {
                let dx = vertices[vb][0] - vertices[va][0];
                let dy = vertices[vb][1] - vertices[va][1];
                let mut n = [dy, -dx];
                if n[0] * gx + n[1] * gy < 0.0 {
                    n = [-n[0], -n[1]];
                }
                let len = (n[0] * n[0] + n[1] * n[1]).sqrt().max(1e-300);
                for &v in &[va, vb] {
                    normals[v][0] += n[0] / len;
                    normals[v][1] += n[1] / len;
                }
                segments.push([va, vb]);
            }
        }
    }
    let outward = normals
        .into_iter()
        .map(|n| {
            let len = (n[0] * n[0] + n[1] * n[1]).sqrt();
            if len > 0.0 {
                [n[0] / len, n[1] / len]
            } else {
                [1.0, 0.0]
            }
        })
        .collect();
    Ok(Interface::Curve {
        vertices,
        segments,
        outward,
    })
}

/// Zero level on the Freudenthal/Kuhn simplex subdivision of each lattice
/// cube (six tetrahedra per cube, face-consistent across neighbors).
fn marching_simplices(grid: &Grid, class: &[NodeClass], w: &[f64]) -> Result<Interface> {
    use std::collections::HashMap;
    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut normals: Vec<[f64; 3]> = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    let mut edge_vertex: HashMap<(usize, usize), usize> = HashMap::new();

    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];

    let nx = grid.shape[0];
    let ny = grid.shape[1];
    let nz = grid.shape[2];
    for k in 0..nz - 1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let base = [i, j, k];
                let mut cube_ok = true;
                for dz in 0..2 {
                    for dy in 0..2 {
                        for dx in 0..2 {
                            let n = grid.flat([i + dx, j + dy, k + dz]);
                            if class[n] == NodeClass::Exterior {
                                cube_ok = false;
                            }
                        }
                    }
                }
                if !cube_ok {
                    continue;
                }
                for perm in &PERMS {
                    // Chain from the base corner adding one axis at a time.
                    let mut m = base;
                    let mut tet = [grid.flat(m); 4];
                    for (step, &axis) in perm.iter().enumerate() {
                        m[axis] += 1;
                        tet[step + 1] = grid.flat(m);
                    }
                    emit_tet(
                        grid,
                        w,
                        &tet,
                        perm,
                        &mut vertices,
                        &mut normals,
                        &mut triangles,
                        &mut edge_vertex,
                    );
                }
            }
        }
    }
    let outward = normals
        .into_iter()
        .map(|n| {
            let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
            if len > 0.0 {
                [n[0] / len, n[1] / len, n[2] / len]
            } else {
                [1.0, 0.0, 0.0]
            }
        })
        .collect();
    Ok(Interface::Mesh {
        vertices,
        triangles,
        outward,
    })
}

#[allow(clippy::too_many_arguments)]
fn emit_tet(
    grid: &Grid,
    w: &[f64],
    tet: &[usize; 4],
    perm: &[usize; 3],
    vertices: &mut Vec<[f64; 3]>,
    normals: &mut Vec<[f64; 3]>,
    triangles: &mut Vec<[usize; 3]>,
    edge_vertex: &mut std::collections::HashMap<(usize, usize), usize>,
) {
    let pos: Vec<usize> = (0..4).filter(|&a| w[tet[a]] > 0.0).collect();
    if pos.is_empty() || pos.len() == 4 {
        return;
    }
    // Linear gradient along the Kuhn chain: each step advances one axis.
    let mut g = [0.0f64; 3];
    for (step, &axis) in perm.iter().enumerate() {
        g[axis] = (w[tet[step + 1]] - w[tet[step]]) / grid.h;
    }
    let mut vertex_on = |a: usize,
                         b: usize,
                         vertices: &mut Vec<[f64; 3]>,
                         normals: &mut Vec<[f64; 3]>|
     -> usize {
        let key = if tet[a] < tet[b] {
            (tet[a], tet[b])
        } else {
            (tet[b], tet[a])
        };
        *edge_vertex.entry(key).or_insert_with(|| {
            vertices.push(interp(grid, tet[a], tet[b], w));
            normals.push([0.0, 0.0, 0.0]);
            vertices.len() - 1
        })
    };
    let mut tris: Vec<[usize; 3]> = Vec::new();
    if pos.len() == 1 || pos.len() == 3 {
        // One corner isolated: a single triangle on the three cut edges.
        let lone = if pos.len() == 1 {
            pos[0]
        } else {
            (0..4).find(|a| !pos.contains(a)).unwrap()
        };
        let others: Vec<usize> = (0..4).filter(|&a| a != lone).collect();
        tris.push([
            vertex_on(lone, others[0], vertices, normals),
            vertex_on(lone, others[1], vertices, normals),
            vertex_on(lone, others[2], vertices, normals),
        ]);
    } else {
        // Two/two split: four cut edges bound a quad; split it into two
        // triangles sharing a diagonal.
        let neg: Vec<usize> = (0..4).filter(|a| !pos.contains(a)).collect();
        let q = [
            vertex_on(pos[0], neg[0], vertices, normals),
            vertex_on(pos[0], neg[1], vertices, normals),
            vertex_on(pos[1], neg[1], vertices, normals),
            vertex_on(pos[1], neg[0], vertices, normals),
        ];
        tris.push([q[0], q[1], q[2]]);
        tris.push([q[0], q[2], q[3]]);
    }
    for tri in tris {
        // Accumulate the face normal signed toward the positive side.
        let a = vertices[tri[0]];
        let b = vertices[tri[1]];
        let c = vertices[tri[2]];
        let e1 = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        let e2 = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
        let mut n = [
            e1[1] * e2[2] - e1[2] * e2[1],
            e1[2] * e2[0] - e1[0] * e2[2],
            e1[0] * e2[1] - e1[1] * e2[0],
        ];
        if n[0] * g[0] + n[1] * g[1] + n[2] * g[2] < 0.0 {
            n = [-n[0], -n[1], -n[2]];
        }
        let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        if len > 0.0 {
            for &v in &tri {
                normals[v][0] += n[0] / len;
                normals[v][1] += n[1] / len;
                normals[v][2] += n[2] / len;
            }
        }
        triangles.push(tri);
    }
}

/// Moves open-chain endpoints onto the nearest seam point when within one
/// cell, then checks that every seam point was reached.
fn snap_to_seam(surface: Interface, gamma: &[[f64; 2]; 2], h: f64) -> Result<Interface> {
    let Interface::Curve {
        mut vertices,
        segments,
        outward,
    } = surface
    else {
        return Err(Error::InvalidInput(
            "seam snapping applies to polyline interfaces".to_string(),
        ));
    };
    let snap_radius = std::f64::consts::SQRT_2 * h;
    let mut valence = vec![0usize; vertices.len()];
    for s in &segments {
        valence[s[0]] += 1;
        valence[s[1]] += 1;
    }
    let mut reached = [false; 2];
    for (v, vert) in vertices.iter_mut().enumerate() {
        if valence[v] != 1 {
            continue;
        }
        // Snap to the closest seam point when inside the snap radius.
        let mut best = (f64::INFINITY, 0usize);
        for (gi, g) in gamma.iter().enumerate() {
            let d = ((vert[0] - g[0]).powi(2) + (vert[1] - g[1]).powi(2)).sqrt();
            if d < best.0 {
                best = (d, gi);
            }
        }
        if best.0 <= snap_radius {
            *vert = gamma[best.1];
            reached[best.1] = true;
        }
    }
    if !reached.iter().all(|&r| r) {
        let missing: Vec<usize> = (0..2).filter(|&gi| !reached[gi]).collect();
        return Err(Error::InterfaceNotAnchored(format!(
            "seam points {missing:?} have no interface endpoint within one cell"
        )));
    }
    Ok(Interface::Curve {
        vertices,
        segments,
        outward,
    })
}

/// Suggested quadratic-fit radius: a few mean element lengths, never below a
/// few grid cells.
pub fn suggested_fit_radius(surface: &Interface, h: f64) -> f64 {
    let mean_len = match surface {
        Interface::Curve {
            vertices, segments, ..
        } => {
            let total: f64 = segments
                .iter()
                .map(|s| {
                    let a = vertices[s[0]];
                    let b = vertices[s[1]];
                    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
                })
                .sum();
            total / segments.len().max(1) as f64
        }
        Interface::Mesh {
            vertices,
            triangles,
            ..
        } => {
            let mut total = 0.0;
            for t in triangles {
                for e in 0..3 {
                    let a = vertices[t[e]];
                    let b = vertices[t[(e + 1) % 3]];
                    total += ((a[0] - b[0]).powi(2)
                        + (a[1] - b[1]).powi(2)
                        + (a[2] - b[2]).powi(2))
                    .sqrt();
                }
            }
            total / (3 * triangles.len().max(1)) as f64
        }
    };
    3.5 * mean_len.max(h)
}

/// Evaluates the trapped-surface residual on the stored interface and saves
/// the per-vertex values on the record.
pub fn verify_interface(
    record: &mut BlowUpRecord,
    data: &InitialData,
    fit_radius: f64,
) -> Result<ResidualReport> {
    let surface = record.interface.as_ref().ok_or_else(|| {
        Error::InvalidInput("no interface extracted before verification".to_string())
    })?;
    let sampler = data.sampler();
    let residuals = surface_mots_residual(surface, sampler.as_ref(), fit_radius)?;
    let mut sup = 0.0f64;
    let mut sum2 = 0.0f64;
    let mut count = 0usize;
    for &r in &residuals {
        if r.is_nan() {
            continue;
        }
        sup = sup.max(r.abs());
        sum2 += r * r;
        count += 1;
    }
    if count == 0 {
        return Err(Error::InterfaceVerificationFailed(
            "no interface vertex had enough neighbors for a curvature fit".to_string(),
        ));
    }
    record.residuals = residuals;
    Ok(ResidualReport {
        sup,
        rms: (sum2 / count as f64).sqrt(),
        vertices: count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{instantiate, DataFamily, DomainSpec};
    use crate::geometry::hausdorff_vertices;

    fn boxed_2d(h: f64) -> InitialData {
        instantiate(
            DataFamily::Flat,
            &DomainSpec::CartesianBox {
                dim: 2,
                lo: [-1.0, -1.0, 0.0],
                hi: [1.0, 1.0, 0.0],
            },
            h,
        )
        .unwrap()
    }

    #[test]
    fn squares_recover_a_circle() {
        let data = boxed_2d(1.0 / 32.0);
        let grid = &data.domain.grid;
        let r0 = 0.5;
        let u: Vec<f64> = (0..grid.len())
            .map(|i| {
                let x = grid.coords(i);
                x[0] * x[0] + x[1] * x[1] - r0 * r0
            })
            .collect();
        let surf = extract_interface_at(&data, &u, 1.0).unwrap();
        assert_eq!(surf.component_count(), 1);
        let Interface::Curve {
            vertices, outward, ..
        } = &surf
        else {
            panic!("expected a polyline")
        };
        for (v, n) in vertices.iter().zip(outward) {
            let r = (v[0] * v[0] + v[1] * v[1]).sqrt();
            assert!((r - r0).abs() < grid.h, "radius {r}");
            // Hints point away from the center: toward the positive side.
            let dot = (v[0] * n[0] + v[1] * n[1]) / r;
            assert!(dot > 0.5, "outward hint misaligned: {dot}");
        }
    }

    #[test]
    fn simplices_recover_a_sphere() {
        let data = instantiate(
            DataFamily::Flat,
            &DomainSpec::CartesianBox {
                dim: 3,
                lo: [-1.0, -1.0, -1.0],
                hi: [1.0, 1.0, 1.0],
            },
            1.0 / 16.0,
        )
        .unwrap();
        let grid = &data.domain.grid;
        let r0 = 0.6;
        let u: Vec<f64> = (0..grid.len())
            .map(|i| {
                let x = grid.coords(i);
                x[0] * x[0] + x[1] * x[1] + x[2] * x[2] - r0 * r0
            })
            .collect();
        let surf = extract_interface_at(&data, &u, 1.0).unwrap();
        let Interface::Mesh {
            vertices,
            triangles,
            outward,
        } = &surf
        else {
            panic!("expected a mesh")
        };
        assert!(!triangles.is_empty());
        for (v, n) in vertices.iter().zip(outward) {
            let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            assert!((r - r0).abs() < grid.h, "radius {r}");
            let dot = (v[0] * n[0] + v[1] * n[1] + v[2] * n[2]) / r;
            assert!(dot > 0.3, "outward hint misaligned: {dot}");
        }
        // Closed surface: every edge is shared by exactly two triangles.
        use std::collections::HashMap;
        let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
        for t in triangles {
            for e in 0..3 {
                let a = t[e].min(t[(e + 1) % 3]);
                let b = t[e].max(t[(e + 1) % 3]);
                *edge_count.entry((a, b)).or_insert(0) += 1;
            }
        }
        assert!(edge_count.values().all(|&c| c == 2));
    }

    #[test]
    fn radial_zero_crossing_synthesizes_a_round_section() {
        let data = instantiate(
            DataFamily::SchwarzschildIsotropic { mass: 1.0 },
            &DomainSpec::RadialAnnulus {
                ambient_dim: 3,
                r_inner: 0.25,
                r_outer: 2.0,
            },
            1.0 / 64.0,
        )
        .unwrap();
        let grid = &data.domain.grid;
        // Synthetic profile crossing zero at r = 0.5, positive outside.
        let u: Vec<f64> = (0..grid.len())
            .map(|i| grid.coords(i)[0] - 0.5)
            .collect();
        let surf = extract_interface_at(&data, &u, 0.3).unwrap();
        let Interface::Mesh { vertices, .. } = &surf else {
            panic!("expected a sphere mesh in ambient dimension 3")
        };
        for v in vertices {
            let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            assert!((r - 0.5).abs() < 1e-9);
        }
        // One-signed profile: extraction must fail.
        let pos: Vec<f64> = vec![1.0; grid.len()];
        assert!(matches!(
            extract_interface_at(&data, &pos, 0.3),
            Err(Error::InterfaceExtractionFailed(_))
        ));
        let neg: Vec<f64> = vec![-1.0; grid.len()];
        assert!(matches!(
            extract_interface_at(&data, &neg, 0.3),
            Err(Error::InterfaceExtractionFailed(_))
        ));
    }

    #[test]
    fn verification_matches_analytic_circle_curvature() {
        // Constant-trace data: the trapped-surface equation on a circle of
        // radius R reads 1/R + c; the root is R = 1 for c = -1.
        let data = instantiate(
            DataFamily::ConstantTrace { c: -1.0 },
            &DomainSpec::CartesianBox {
                dim: 2,
                lo: [-1.6, -1.6, 0.0],
                hi: [1.6, 1.6, 0.0],
            },
            1.0 / 32.0,
        )
        .unwrap();
        let grid = &data.domain.grid;
        let u: Vec<f64> = (0..grid.len())
            .map(|i| {
                let x = grid.coords(i);
                (x[0] * x[0] + x[1] * x[1]).sqrt() - 1.0
            })
            .collect();
        let mut record = BlowUpRecord {
            chi: 0.4,
            delta: 0.2,
            c_big: data.c_big,
            steps: vec![super::super::StepRecord {
                t: 1.0,
                u,
                sup_tu: 0.0,
                inf_tu: 0.0,
                clamp_count: 0,
                certified: true,
                max_gradient: 0.0,
            }],
            skipped: Vec::new(),
            labels: Vec::new(),
            interface: None,
            residuals: Vec::new(),
        };
        extract_interface(&mut record, &data).unwrap();
        let fit = suggested_fit_radius(record.interface.as_ref().unwrap(), grid.h);
        let report = verify_interface(&mut record, &data, fit).unwrap();
        assert!(report.sup <= 5.0 * grid.h, "sup residual {}", report.sup);
        assert!(report.rms <= report.sup + 1e-12);
        assert_eq!(record.residuals.len(), record.interface.as_ref().unwrap().vertex_count());
    }

    #[test]
    fn seam_snapping_anchors_chord_endpoints() {
        let data = instantiate(
            DataFamily::Flat,
            &DomainSpec::Disk {
                center: [0.0, 0.0],
                radius: 1.0,
                seam_angle: 0.0,
            },
            1.0 / 48.0,
        )
        .unwrap();
        let grid = &data.domain.grid;
        // Odd field vanishing on the horizontal diameter.
        let u: Vec<f64> = (0..grid.len())
            .map(|i| grid.coords(i)[1])
            .collect();
        let surf = extract_interface_at(&data, &u, 1.0).unwrap();
        let Interface::Curve {
            vertices, segments, ..
        } = &surf
        else {
            panic!("expected a polyline")
        };
        let mut valence = vec![0usize; vertices.len()];
        for s in segments {
            valence[s[0]] += 1;
            valence[s[1]] += 1;
        }
        let gamma = seam_points([0.0, 0.0], 1.0, 0.0);
        let mut matched = 0;
        for (v, vert) in vertices.iter().enumerate() {
            if valence[v] == 1 {
                let on_gamma = gamma
                    .iter()
                    .any(|g| (g[0] - vert[0]).abs() < 1e-12 && (g[1] - vert[1]).abs() < 1e-12);
                assert!(on_gamma, "open endpoint not snapped: {vert:?}");
                matched += 1;
            }
            assert!(vert[1].abs() < 1e-9, "off the diameter: {vert:?}");
        }
        assert_eq!(matched, 2);
        // Hausdorff distance to the exact diameter is below a cell.
        let exact = Interface::Curve {
            vertices: (0..=96)
                .map(|k| [-1.0 + 2.0 * k as f64 / 96.0, 0.0])
                .collect(),
            segments: (0..96).map(|k| [k, k + 1]).collect(),
            outward: (0..=96).map(|_| [0.0, 1.0]).collect(),
        };
        assert!(hausdorff_vertices(&surf, &exact) <= grid.h);
    }
}
