//! Concrete initial-data families `(M, g, p)`, domain carving, and the
//! trapping-margin analysis that yields the collar constants `chi` and
//! `delta` driving barrier construction.

mod margins;
mod sampler;

pub use margins::{trapping_margins, Margins};
pub use sampler::{AnalyticSampler, TabulatedSampler};

use crate::geometry::{
    christoffels, BoundaryPiece, ChristoffelField, Domain, DomainVariant, FieldSampler,
    GeometryData, Grid, MetricField, RadialGeometry, SymTensorField,
};
use crate::{Error, Result};

/// Fewest lattice nodes per axis accepted when instantiating a data set.
pub const MIN_NODES_PER_AXIS: usize = 32;

/// The built-in initial-data families.
#[derive(Clone, Debug)]
pub enum DataFamily {
    /// Euclidean slice, `p = 0`.
    Flat,
    /// Conformally flat metric `psi^4 delta` with a Gaussian bump
    /// `psi = 1 + amplitude * exp(-|x - center|^2 / width^2)`, `p = 0`.
    ConformallyFlat {
        amplitude: f64,
        width: f64,
        center: [f64; 3],
    },
    /// Time-symmetric single black hole in isotropic coordinates:
    /// `psi = 1 + mass / (2 |x|)`, `p = 0`.
    SchwarzschildIsotropic { mass: f64 },
    /// Multiple punctures: `psi = 1 + sum_i mass_i / (2 |x - center_i|)`,
    /// `p = 0`.
    BrillLindquist {
        masses: Vec<f64>,
        centers: Vec<[f64; 3]>,
    },
    /// Euclidean metric with pure-trace second fundamental form `p = c g`.
    ConstantTrace { c: f64 },
    /// Metric and second fundamental form given on the lattice itself.
    Tabulated(TabulatedData),
}

/// Node fields for [`DataFamily::Tabulated`], on a Cartesian lattice matching
/// the requested domain.
#[derive(Clone, Debug)]
pub struct TabulatedData {
    pub g: SymTensorField,
    pub p: SymTensorField,
}

impl DataFamily {
    /// Conformal factor and its chart gradient; identity for flat-metric
    /// families. Tabulated data answers 1 here and is special-cased by the
    /// constructors.
    pub fn psi_and_grad(&self, x: &[f64; 3]) -> (f64, [f64; 3]) {
        match self {
            DataFamily::Flat | DataFamily::ConstantTrace { .. } | DataFamily::Tabulated(_) => {
                (1.0, [0.0; 3])
            }
            DataFamily::ConformallyFlat {
                amplitude,
                width,
                center,
            } => {
                let d = [x[0] - center[0], x[1] - center[1], x[2] - center[2]];
                let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                let e = amplitude * (-r2 / (width * width)).exp();
                let s = -2.0 / (width * width);
                (1.0 + e, [e * s * d[0], e * s * d[1], e * s * d[2]])
            }
            DataFamily::SchwarzschildIsotropic { mass } => {
                puncture_psi(&[(*mass, [0.0; 3])], x)
            }
            DataFamily::BrillLindquist { masses, centers } => {
                let terms: Vec<(f64, [f64; 3])> = masses
                    .iter()
                    .copied()
                    .zip(centers.iter().copied())
                    .collect();
                puncture_psi(&terms, x)
            }
        }
    }

    /// Coefficient `c` of a pure-trace second fundamental form `p = c g`.
    pub fn trace_coefficient(&self) -> f64 {
        match self {
            DataFamily::ConstantTrace { c } => *c,
            _ => 0.0,
        }
    }

    /// Puncture centers (points where the conformal factor blows up).
    pub fn punctures(&self) -> Vec<[f64; 3]> {
        match self {
            DataFamily::SchwarzschildIsotropic { .. } => vec![[0.0; 3]],
            DataFamily::BrillLindquist { centers, .. } => centers.clone(),
            _ => Vec::new(),
        }
    }
}

fn puncture_psi(terms: &[(f64, [f64; 3])], x: &[f64; 3]) -> (f64, [f64; 3]) {
    let mut psi = 1.0;
    let mut grad = [0.0; 3];
    for &(m, c) in terms {
        let d = [x[0] - c[0], x[1] - c[1], x[2] - c[2]];
        let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        psi += m / (2.0 * r);
        let s = -m / (2.0 * r * r * r);
        for a in 0..3 {
            grad[a] += s * d[a];
        }
    }
    (psi, grad)
}

/// Shape of the computational domain.
#[derive(Clone, Debug)]
pub enum DomainSpec {
    /// Rotationally symmetric annulus, reduced to a radius lattice. The outer
    /// sphere is the `Plus` piece, the inner sphere the `Minus` piece.
    RadialAnnulus {
        ambient_dim: usize,
        r_inner: f64,
        r_outer: f64,
    },
    /// Full coordinate box; every face is boundary. No piece labels are
    /// assigned (test fixtures drive solves with explicit boundary data).
    CartesianBox {
        dim: usize,
        lo: [f64; 3],
        hi: [f64; 3],
    },
    /// Disk with a seam: the boundary data sweeps sign across the two
    /// antipodal anchor points at `seam_angle` and `seam_angle + pi`.
    Disk {
        center: [f64; 2],
        radius: f64,
        seam_angle: f64,
    },
}

/// A data family instantiated on a domain: the computational object the
/// solver stages consume.
#[derive(Clone, Debug)]
pub struct InitialData {
    pub domain: Domain,
    pub geometry: GeometryData,
    pub family: DataFamily,
    pub spec: DomainSpec,
    /// Supremum of the operator norm of `p` over the domain closure.
    pub pnorm: f64,
    /// Gradient-scale constant, strictly larger than `n * pnorm`.
    pub c_big: f64,
}

impl InitialData {
    pub fn ambient_dim(&self) -> usize {
        self.domain.grid.ambient_dim
    }

    /// Point sampler for interface verification and barrier analysis.
    pub fn sampler(&self) -> Box<dyn FieldSampler + '_> {
        match (&self.family, &self.geometry) {
            (
                DataFamily::Tabulated(_),
                GeometryData::Cartesian { metric, gamma, p },
            ) => Box::new(TabulatedSampler {
                grid: &self.domain.grid,
                g: &metric.g,
                p,
                gamma,
            }),
            _ => Box::new(AnalyticSampler {
                family: &self.family,
                dim: self.ambient_dim(),
            }),
        }
    }

    /// Radial geometry, when this data set is a radial reduction.
    pub fn radial(&self) -> Option<&RadialGeometry> {
        match &self.geometry {
            GeometryData::Radial(r) => Some(r),
            _ => None,
        }
    }
}

/// Builds the lattice, domain mask, distance fields, and geometry fields for
/// a family on a domain at spacing `h`.
pub fn instantiate(family: DataFamily, spec: &DomainSpec, h: f64) -> Result<InitialData> {
    match spec {
        DomainSpec::RadialAnnulus {
            ambient_dim,
            r_inner,
            r_outer,
        } => instantiate_radial(family, spec, *ambient_dim, *r_inner, *r_outer, h),
        DomainSpec::CartesianBox { dim, lo, hi } => {
            instantiate_box(family, spec, *dim, lo, hi, h)
        }
        DomainSpec::Disk {
            center,
            radius,
            seam_angle,
        } => instantiate_disk(family, spec, *center, *radius, *seam_angle, h),
    }
}

fn axis_count(lo: f64, hi: f64, h: f64) -> Result<usize> {
    if !(hi > lo) {
        return Err(Error::InvalidInput(format!(
            "degenerate axis range [{lo}, {hi}]"
        )));
    }
    let count = ((hi - lo) / h).round() as usize + 1;
    if count < MIN_NODES_PER_AXIS {
        return Err(Error::InvalidInput(format!(
            "axis [{lo}, {hi}] at spacing {h} has {count} nodes; need at least {MIN_NODES_PER_AXIS}"
        )));
    }
    Ok(count)
}

fn instantiate_radial(
    family: DataFamily,
    spec: &DomainSpec,
    ambient_dim: usize,
    r_inner: f64,
    r_outer: f64,
    h: f64,
) -> Result<InitialData> {
    if matches!(family, DataFamily::Tabulated(_)) {
        return Err(Error::InvalidInput(
            "tabulated data requires a Cartesian domain".to_string(),
        ));
    }
    let count = axis_count(r_inner, r_outer, h)?;
    let grid = Grid::radial(ambient_dim, count, r_inner, h)?;
    let inside = vec![true; grid.len()];
    let mut domain = Domain::from_mask(grid, &inside, DomainVariant::ClosedPair)?;
    let last = domain.grid.len() - 1;
    domain.assign_pieces(|node| {
        if node == last {
            BoundaryPiece::Plus
        } else {
            BoundaryPiece::Minus
        }
    });
    domain.validate_pieces()?;

    // Conformal radial geometry: g_rr = psi^4, areal radius rho = psi^2 r.
    let n = domain.grid.len();
    let nm1 = (ambient_dim - 1) as f64;
    let eval = |r: f64| -> (f64, f64, f64, f64) {
        // (grr, rho, drho_dr, weight)
        let (psi, dpsi) = family.psi_and_grad(&[r, 0.0, 0.0]);
        let grr = psi.powi(4);
        let rho = psi * psi * r;
        let drho = psi * psi + 2.0 * psi * dpsi[0] * r;
        let weight = grr.sqrt() * rho.powf(nm1);
        (grr, rho, drho, weight)
    };
    let c = family.trace_coefficient();
    let mut grr = vec![0.0; n];
    let mut inv_grr = vec![0.0; n];
    let mut weight = vec![0.0; n];
    let mut areal = vec![0.0; n];
    let mut sphere_h = vec![0.0; n];
    let p_conformal = vec![c; n];
    for i in 0..n {
        let r = domain.grid.coords(i)[0];
        let (g, rho, drho, w) = eval(r);
        if !g.is_finite() || !(g > 0.0) {
            return Err(Error::InvalidInput(format!(
                "radial metric degenerate at r = {r}"
            )));
        }
        grr[i] = g;
        inv_grr[i] = 1.0 / g;
        weight[i] = w;
        areal[i] = rho;
        sphere_h[i] = nm1 * drho / (rho * g.sqrt());
    }
    let mut weight_half = vec![0.0; n.saturating_sub(1)];
    let mut inv_grr_half = vec![0.0; n.saturating_sub(1)];
    for i in 0..n - 1 {
        let r = domain.grid.coords(i)[0] + 0.5 * h;
        let (g, _, _, w) = eval(r);
        weight_half[i] = w;
        inv_grr_half[i] = 1.0 / g;
    }
    let radial = RadialGeometry {
        grr: grr.clone(),
        inv_grr,
        weight,
        weight_half,
        inv_grr_half,
        p_conformal,
        sphere_h,
        areal,
    };

    // Arclength from the inner boundary; distances to each piece.
    let arc = crate::geometry::radial_arclength(&grr, h);
    let total = arc[n - 1];
    domain.dist_minus = arc.clone();
    domain.dist_plus = arc.iter().map(|&a| total - a).collect();

    let geometry = GeometryData::Radial(radial);
    let pnorm = geometry.p_norm_sup(&domain.class);
    Ok(InitialData {
        c_big: c_default(ambient_dim, pnorm),
        domain,
        geometry,
        family,
        spec: spec.clone(),
        pnorm,
    })
}

fn c_default(ambient_dim: usize, pnorm: f64) -> f64 {
    (1.1 * ambient_dim as f64 * pnorm).max(1.0)
}

/// Builds Cartesian node fields (metric, connection, `p`) for a family over
/// an existing domain, sanitizing exterior nodes to the identity metric.
fn cartesian_fields(
    family: &DataFamily,
    domain: &Domain,
) -> Result<(MetricField, ChristoffelField, SymTensorField)> {
    let grid = &domain.grid;
    let dim = grid.grid_dim;
    let n = grid.len();
    let mut g = SymTensorField::zeros(dim, n);
    let mut p = SymTensorField::zeros(dim, n);

    if let DataFamily::Tabulated(tab) = family {
        if tab.g.node_count() != n || tab.p.node_count() != n || tab.g.dim != dim
            || tab.p.dim != dim
        {
            return Err(Error::InvalidInput(
                "tabulated field shape does not match the lattice".to_string(),
            ));
        }
        for node in 0..n {
            if domain.is_exterior(node) {
                for i in 0..dim {
                    g.set(node, i, i, 1.0);
                }
            } else {
                g.at_mut(node).copy_from_slice(tab.g.at(node));
                p.at_mut(node).copy_from_slice(tab.p.at(node));
            }
        }
        let metric = MetricField::from_g(g)?;
        let gamma = christoffels(grid, &domain.class, &metric);
        return Ok((metric, gamma, p));
    }

    let c = family.trace_coefficient();
    let m = crate::geometry::sym_len(dim);
    let mut gamma = ChristoffelField::zeros(dim, n);
    for node in 0..n {
        if domain.is_exterior(node) {
            for i in 0..dim {
                g.set(node, i, i, 1.0);
            }
            continue;
        }
        let x3 = {
            let x = grid.coords(node);
            [x[0], x[1], if dim > 2 { x[2] } else { 0.0 }]
        };
        let (psi, dpsi) = family.psi_and_grad(&x3);
        if !psi.is_finite() || psi <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "conformal factor degenerate at node {node}"
            )));
        }
        let f = psi.powi(4);
        for i in 0..dim {
            g.set(node, i, i, f);
            if c != 0.0 {
                p.set(node, i, i, c * f);
            }
        }
        // G^k_ij for e^{2 phi} delta, phi = 2 ln psi.
        let w: Vec<f64> = (0..dim).map(|k| 2.0 * dpsi[k] / psi).collect();
        for k in 0..dim {
            for i in 0..dim {
                for j in i..dim {
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
                    if v != 0.0 {
                        gamma.set(node, k, i, j, v);
                    }
                }
            }
        }
        let _ = m;
    }
    let metric = MetricField::from_g(g)?;
    Ok((metric, gamma, p))
}

fn check_punctures(family: &DataFamily, domain: &Domain, h: f64) -> Result<()> {
    let punctures = family.punctures();
    if punctures.is_empty() {
        return Ok(());
    }
    for node in 0..domain.grid.len() {
        if domain.is_exterior(node) {
            continue;
        }
        let x = domain.grid.coords(node);
        for c in &punctures {
            let d2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2);
            if d2.sqrt() < 2.0 * h {
                return Err(Error::InvalidInput(format!(
                    "puncture at ({}, {}, {}) lies inside or within 2h of the domain",
                    c[0], c[1], c[2]
                )));
            }
        }
    }
    Ok(())
}

fn instantiate_box(
    family: DataFamily,
    spec: &DomainSpec,
    dim: usize,
    lo: &[f64; 3],
    hi: &[f64; 3],
    h: f64,
) -> Result<InitialData> {
    let mut shape = Vec::with_capacity(dim);
    for a in 0..dim {
        shape.push(axis_count(lo[a], hi[a], h)?);
    }
    let grid = Grid::cartesian(dim, &shape, &lo[..dim], h)?;
    let inside = vec![true; grid.len()];
    let mut domain = Domain::from_mask(grid, &inside, DomainVariant::ClosedPair)?;
    check_punctures(&family, &domain, h)?;

    // Chart distance to the box faces, one field for both labels.
    let mut dist = vec![0.0f64; domain.grid.len()];
    for node in 0..domain.grid.len() {
        let x = domain.grid.coords(node);
        let mut d = f64::INFINITY;
        for a in 0..dim {
            d = d.min(x[a] - lo[a]).min(hi[a] - x[a]);
        }
        dist[node] = d.max(0.0);
    }
    domain.dist_plus = dist.clone();
    domain.dist_minus = dist;

    let (metric, gamma, p) = cartesian_fields(&family, &domain)?;
    let geometry = GeometryData::Cartesian { metric, gamma, p };
    let pnorm = geometry.p_norm_sup(&domain.class);
    Ok(InitialData {
        c_big: c_default(dim, pnorm),
        domain,
        geometry,
        family,
        spec: spec.clone(),
        pnorm,
    })
}

fn instantiate_disk(
    family: DataFamily,
    spec: &DomainSpec,
    center: [f64; 2],
    radius: f64,
    seam_angle: f64,
    h: f64,
) -> Result<InitialData> {
    if matches!(family, DataFamily::Tabulated(_)) {
        return Err(Error::InvalidInput(
            "tabulated data on a masked disk is not supported".to_string(),
        ));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidInput(format!(
            "disk radius must be positive, got {radius}"
        )));
    }
    let pad = 3.0 * h;
    let lo = [center[0] - radius - pad, center[1] - radius - pad];
    let hi = [center[0] + radius + pad, center[1] + radius + pad];
    let shape = [
        axis_count(lo[0], hi[0], h)?,
        axis_count(lo[1], hi[1], h)?,
    ];
    let grid = Grid::cartesian(2, &shape, &lo, h)?;
    let mut inside = vec![false; grid.len()];
    for (node, flag) in inside.iter_mut().enumerate() {
        let x = grid.coords(node);
        let d2 = (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2);
        *flag = d2.sqrt() <= radius;
    }
    let mut domain = Domain::from_mask(grid, &inside, DomainVariant::Seamed)?;
    check_punctures(&family, &domain, h)?;

    // Distance to the (round) boundary and signed seam distance, measured
    // after radial projection to the boundary circle.
    let n = domain.grid.len();
    let mut dist = vec![0.0f64; n];
    let mut dgamma = vec![0.0f64; n];
    for node in 0..n {
        let x = domain.grid.coords(node);
        let d = [x[0] - center[0], x[1] - center[1]];
        let r = (d[0] * d[0] + d[1] * d[1]).sqrt();
        dist[node] = (radius - r).max(0.0);
        let theta = d[1].atan2(d[0]);
        // Angular offset from the seam great line, wrapped into (-pi/2, pi/2].
        let mut off = theta - seam_angle;
        while off <= -std::f64::consts::FRAC_PI_2 {
            off += std::f64::consts::PI;
        }
        while off > std::f64::consts::FRAC_PI_2 {
            off -= std::f64::consts::PI;
        }
        // Arc distance to the nearest seam point, signed by the side of the
        // seam line: positive where sin(theta - seam_angle) > 0.
        let side = if (theta - seam_angle).sin() >= 0.0 {
            1.0
        } else {
            -1.0
        };
        dgamma[node] = side * off.abs() * radius;
    }
    domain.dist_plus = dist.clone();
    domain.dist_minus = dist;
    domain.dist_gamma = Some(dgamma);
    let gamma_field = domain.dist_gamma.as_ref().unwrap().clone();
    domain.assign_pieces(|node| {
        if gamma_field[node] >= 0.0 {
            BoundaryPiece::Plus
        } else {
            BoundaryPiece::Minus
        }
    });
    domain.validate_pieces()?;

    let (metric, gamma, p) = cartesian_fields(&family, &domain)?;
    let geometry = GeometryData::Cartesian { metric, gamma, p };
    let pnorm = geometry.p_norm_sup(&domain.class);
    Ok(InitialData {
        c_big: c_default(2, pnorm),
        domain,
        geometry,
        family,
        spec: spec.clone(),
        pnorm,
    })
}

/// Chart location of the two seam anchor points of a disk domain.
pub fn seam_points(center: [f64; 2], radius: f64, seam_angle: f64) -> [[f64; 2]; 2] {
    [
        [
            center[0] + radius * seam_angle.cos(),
            center[1] + radius * seam_angle.sin(),
        ],
        [
            center[0] - radius * seam_angle.cos(),
            center[1] - radius * seam_angle.sin(),
        ],
    ]
}
