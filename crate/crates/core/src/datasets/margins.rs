//! Boundary trapping margins `H ± tr p`, the hypothesis check they feed, and
//! the collar constants `chi` (forcing height) and `delta` (collar depth)
//! derived from marching the margins along inward parallel surfaces.

use super::{DataFamily, DomainSpec, InitialData};
use crate::geometry::{
    level_set_mean_curvature, sym_index, BoundaryPiece, GeometryData, MetricField,
    RadialGeometry, SymTensorField,
};
use crate::{Error, Result};

/// Output of the margin analysis.
#[derive(Clone, Debug)]
pub struct Margins {
    /// Per-node `H + tr p` with respect to the outward boundary normal;
    /// `NaN` away from the boundary.
    pub margin_plus: Vec<f64>,
    /// Per-node `H - tr p`; `NaN` away from the boundary.
    pub margin_minus: Vec<f64>,
    /// Smallest margin among those the boundary labels require.
    pub min_required: f64,
    /// Resolution-noise floor the required margins must clear
    /// (`10 h` times the largest marched margin slope).
    pub threshold: f64,
    /// Barrier forcing height; the solver drives `t u` past `±chi/2`.
    pub chi: f64,
    /// Collar depth: parallels up to `delta` inward keep margins `>= 2 chi`.
    pub delta: f64,
}

/// One marched profile: margin values at increasing depth from a labeled
/// boundary, with the arclength of each step.
struct Profile {
    values: Vec<f64>,
    step: Vec<f64>,
}

/// Computes boundary margins along with `chi` and `delta`, erring with
/// `HypothesisViolated` when a labeled boundary piece fails its sign
/// condition at this resolution.
pub fn trapping_margins(data: &InitialData) -> Result<Margins> {
    let (profiles, mut margins, cap) = match (&data.geometry, &data.spec) {
        (GeometryData::Radial(radial), DomainSpec::RadialAnnulus { .. }) => {
            radial_march(data, radial)
        }
        (GeometryData::Cartesian { metric, p, .. }, DomainSpec::Disk { radius, .. }) => {
            disk_march(data, metric, p, *radius)?
        }
        _ => {
            return Err(Error::InvalidInput(
                "trapping margins need labeled boundary pieces (radial annulus or seamed disk)"
                    .to_string(),
            ))
        }
    };

    // Noise floor: margins must clear 10 h times the steepest marched slope.
    let h = data.domain.grid.h;
    let mut slope = 0.0f64;
    for prof in &profiles {
        for k in 1..prof.values.len() {
            let ds = prof.step[k].max(1e-300);
            slope = slope.max((prof.values[k] - prof.values[k - 1]).abs() / ds);
        }
    }
    let threshold = 10.0 * h * slope;

    // Hypothesis check on the labeled pieces.
    let mut min_required = f64::INFINITY;
    for &b in data.domain.boundary() {
        let (required, count) = match (data.domain.variant, data.domain.piece[b]) {
            (crate::geometry::DomainVariant::Seamed, _) => {
                ([margins.margin_plus[b], margins.margin_minus[b]], 2)
            }
            (_, Some(BoundaryPiece::Plus)) => ([margins.margin_plus[b], 0.0], 1),
            (_, Some(BoundaryPiece::Minus)) => ([margins.margin_minus[b], 0.0], 1),
            (_, None) => {
                return Err(Error::InvalidInput(format!(
                    "boundary node {b} has no piece label"
                )))
            }
        };
        for &m in &required[..count] {
            if !(m >= threshold) {
                return Err(Error::HypothesisViolated(format!(
                    "boundary margin {m:.6} at node {b} is below the required floor {threshold:.6}"
                )));
            }
            min_required = min_required.min(m);
        }
    }

    let chi = (0.45 * min_required).min(0.9 * data.c_big);

    // Collar depth: deepest march with every profile still >= 2 chi.
    let mut delta = cap;
    for prof in &profiles {
        let mut depth = 0.0;
        let mut ok_depth = 0.0;
        for k in 0..prof.values.len() {
            depth += prof.step[k];
            if prof.values[k] < 2.0 * chi {
                break;
            }
            ok_depth = depth;
            if ok_depth >= cap {
                break;
            }
        }
        delta = delta.min(ok_depth);
    }
    if !(delta > 0.0) {
        return Err(Error::HypothesisViolated(format!(
            "margins fall below 2 chi = {:.6} within one lattice step of the boundary",
            2.0 * chi
        )));
    }

    margins.min_required = min_required;
    margins.threshold = threshold;
    margins.chi = chi;
    margins.delta = delta;
    Ok(margins)
}

fn blank_margins(n: usize) -> Margins {
    Margins {
        margin_plus: vec![f64::NAN; n],
        margin_minus: vec![f64::NAN; n],
        min_required: f64::NAN,
        threshold: f64::NAN,
        chi: f64::NAN,
        delta: f64::NAN,
    }
}

/// Radial annulus: spheres are the parallels; closed forms from the stored
/// sphere curvature. The `Plus` label sits at the outer end of the lattice.
fn radial_march(data: &InitialData, radial: &RadialGeometry) -> (Vec<Profile>, Margins, f64) {
    let grid = &data.domain.grid;
    let n = grid.len();
    let nm1 = (grid.ambient_dim - 1) as f64;
    let h = grid.h;
    let mut margins = blank_margins(n);

    let trp = |i: usize| radial.p_conformal[i] * nm1;
    // Outward-of-domain sphere curvature at the two ends.
    let outer = n - 1;
    margins.margin_plus[outer] = radial.sphere_h[outer] + trp(outer);
    margins.margin_minus[outer] = radial.sphere_h[outer] - trp(outer);
    margins.margin_plus[0] = -radial.sphere_h[0] + trp(0);
    margins.margin_minus[0] = -radial.sphere_h[0] - trp(0);

    // March inward from each end; step length is the local arclength.
    let mut from_outer = Profile {
        values: Vec::new(),
        step: Vec::new(),
    };
    for i in (0..n - 1).rev() {
        from_outer.values.push(radial.sphere_h[i] + trp(i));
        from_outer
            .step
            .push(0.5 * h * (radial.grr[i].sqrt() + radial.grr[i + 1].sqrt()));
    }
    let mut from_inner = Profile {
        values: Vec::new(),
        step: Vec::new(),
    };
    for i in 1..n {
        from_inner.values.push(-radial.sphere_h[i] - trp(i));
        from_inner
            .step
            .push(0.5 * h * (radial.grr[i].sqrt() + radial.grr[i - 1].sqrt()));
    }

    let total = data.domain.dist_minus[n - 1];
    (vec![from_outer, from_inner], margins, total / 5.0)
}

/// Seamed disk: circles are the parallels. Closed forms when the metric is
/// Euclidean; finite differences on the distance field otherwise. Both signs
/// are required everywhere on a seamed boundary.
fn disk_march(
    data: &InitialData,
    metric: &MetricField,
    p: &SymTensorField,
    radius: f64,
) -> Result<(Vec<Profile>, Margins, f64)> {
    let grid = &data.domain.grid;
    let n = grid.len();
    let h = grid.h;
    let mut margins = blank_margins(n);
    let flat = matches!(
        data.family,
        DataFamily::Flat | DataFamily::ConstantTrace { .. }
    );
    let c = data.family.trace_coefficient();

    let inradius = data
        .domain
        .dist_plus
        .iter()
        .cloned()
        .filter(|d| d.is_finite())
        .fold(0.0f64, f64::max);
    let cap = inradius / 5.0;
    let steps = ((cap / h).ceil() as usize).max(1);

    let mut plus = Profile {
        values: Vec::new(),
        step: Vec::new(),
    };
    let mut minus = Profile {
        values: Vec::new(),
        step: Vec::new(),
    };

    if flat {
        // Circle of radius R - depth; the tangential trace of p = c g on a
        // curve is c.
        for &b in data.domain.boundary() {
            margins.margin_plus[b] = 1.0 / radius + c;
            margins.margin_minus[b] = 1.0 / radius - c;
        }
        for k in 1..=steps {
            let depth = k as f64 * h;
            let hcurv = 1.0 / (radius - depth);
            plus.values.push(hcurv + c);
            plus.step.push(h);
            minus.values.push(hcurv - c);
            minus.step.push(h);
        }
    } else {
        // Finite differences on the boundary-distance level sets. The level
        // set mean curvature is taken with respect to increasing distance
        // (inward), so the outward value is its negative.
        let dist = &data.domain.dist_plus;
        let dim = grid.grid_dim;
        let band_margin = |depth: f64| -> Option<(f64, f64)> {
            let mut worst_plus = f64::INFINITY;
            let mut worst_minus = f64::INFINITY;
            let mut hit = false;
            for &node in data.domain.interior() {
                if (dist[node] - depth).abs() > 0.5 * h {
                    continue;
                }
                let hcurv =
                    -level_set_mean_curvature(grid, &data.domain.class, metric, dist, node);
                // Tangential trace: full trace minus the normal-normal part.
                let inv = metric.inv.at(node);
                let pk = p.at(node);
                let mut full = 0.0;
                for i in 0..dim {
                    for j in 0..dim {
                        full += inv[sym_index(dim, i, j)] * pk[sym_index(dim, i, j)];
                    }
                }
                // Unit normal components from the distance gradient.
                let mut df = [0.0f64; 3];
                for a in 0..dim {
                    df[a] = crate::geometry::fd_partial(
                        grid,
                        &data.domain.class,
                        &|k| dist[k],
                        node,
                        a,
                    );
                }
                let mut up = [0.0f64; 3];
                let mut norm2 = 0.0;
                for a in 0..dim {
                    for bb in 0..dim {
                        up[a] += inv[sym_index(dim, a, bb)] * df[bb];
                    }
                }
                for a in 0..dim {
                    norm2 += up[a] * df[a];
                }
                if norm2 < 1e-14 {
                    continue;
                }
                let mut pnn = 0.0;
                for a in 0..dim {
                    for bb in 0..dim {
                        pnn += pk[sym_index(dim, a, bb)] * up[a] * up[bb];
                    }
                }
                pnn /= norm2;
                let trp = full - pnn;
                worst_plus = worst_plus.min(hcurv + trp);
                worst_minus = worst_minus.min(hcurv - trp);
                hit = true;
            }
            if hit {
                Some((worst_plus, worst_minus))
            } else {
                None
            }
        };
        let first = band_margin(h).ok_or_else(|| {
            Error::InvalidInput("no interior band found near the boundary".to_string())
        })?;
        for &b in data.domain.boundary() {
            margins.margin_plus[b] = first.0;
            margins.margin_minus[b] = first.1;
        }
        for k in 1..=steps {
            let depth = k as f64 * h;
            match band_margin(depth) {
                Some((mp, mm)) => {
                    plus.values.push(mp);
                    plus.step.push(h);
                    minus.values.push(mm);
                    minus.step.push(h);
                }
                None => break,
            }
        }
    }

    Ok((vec![plus, minus], margins, cap))
}
