//! Solvability radii and deterministic greedy ball covers of the interior.
//! Local Dirichlet problems on these balls are the comparison engine of the
//! sweep solver; radii stay below both the distance to the boundary and the
//! curvature-scale cap, so each ball admits its own graphical solution.

use crate::geometry::{graph_distance, radial_arclength, GeometryData, Problem};
use crate::Result;

/// One lattice ball: `free` lists the interior nodes to solve on, all within
/// `radius` of `center` in the metric distance proxy.
#[derive(Clone, Debug)]
pub struct Ball {
    pub center: usize,
    pub radius: f64,
    pub free: Vec<usize>,
}

/// Deterministic list of balls whose free sets cover the interior.
#[derive(Clone, Debug)]
pub struct BallCover {
    pub balls: Vec<Ball>,
}

/// Per-node solvability radius: half the smaller of the boundary distance
/// and the curvature cap `(n - 1) / (3 C)`, never above `delta`.
pub fn radius_field(problem: &Problem, c_big: f64, delta: f64) -> Vec<f64> {
    let domain = problem.domain;
    let n = domain.grid.len();
    let r0 = (problem.n() as f64 - 1.0) / (3.0 * c_big);
    let mut r = vec![f64::NAN; n];
    for &i in domain.interior() {
        let d_bdry = domain.dist_plus[i].min(domain.dist_minus[i]);
        r[i] = (0.5 * d_bdry.min(r0)).min(delta);
    }
    r
}

/// Interior nodes within `radius` of `center`. Radial lattices use exact
/// arclength; flat charts use lattice shortest paths in the metric.
pub fn ball_nodes(problem: &Problem, center: usize, radius: f64) -> Vec<usize> {
    let domain = problem.domain;
    match problem.geometry {
        GeometryData::Radial(radial) => {
            let arc = radial_arclength(&radial.grr, domain.grid.h);
            domain
                .interior()
                .iter()
                .copied()
                .filter(|&i| (arc[i] - arc[center]).abs() <= radius + 1e-14)
                .collect()
        }
        GeometryData::Cartesian { metric, .. } => {
            let d = graph_distance(
                &domain.grid,
                &domain.class,
                Some(metric),
                &[(center, 0.0)],
            );
            domain
                .interior()
                .iter()
                .copied()
                .filter(|&i| d[i] <= radius + 1e-14)
                .collect()
        }
    }
}

/// Greedy cover: scan interior nodes in lattice order; any node not yet in a
/// ball seeds one at its own radius. Every interior node ends up in at least
/// one free set, and the construction is order-deterministic.
pub fn ball_cover(problem: &Problem, r: &[f64]) -> Result<BallCover> {
    let domain = problem.domain;
    let mut covered = vec![false; domain.grid.len()];
    let mut balls = Vec::new();
    for &i in domain.interior() {
        if covered[i] {
            continue;
        }
        let radius = r[i];
        let free = ball_nodes(problem, i, radius);
        debug_assert!(free.contains(&i));
        for &f in &free {
            covered[f] = true;
        }
        balls.push(Ball {
            center: i,
            radius,
            free,
        });
    }
    Ok(BallCover { balls })
}
