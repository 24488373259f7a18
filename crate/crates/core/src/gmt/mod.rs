//! Discrete geometric-measure-theory certificates for extracted regions.
//!
//! The blow-up stages of this library produce a region whose boundary is the
//! candidate surface. This module checks, without derivatives, that the
//! region behaves like an almost-minimizing boundary at the lattice scale:
//!
//! - [`discrete_perimeter`]: metric-weighted area of the lattice faces
//!   separating a region from its complement inside a window.
//! - [`almost_minimizing_test`]: brute-force comparison against every small
//!   connected perturbation of the region, window by window.
//! - [`graph_mass_bound_check`]: the graph-area bound satisfied by solutions
//!   with bounded mean curvature (a calibration-style comparison against the
//!   window's side-plus-cap cylinder).
//! - [`cylinder_descent_check`]: consistency of the almost-minimizing
//!   property between a base region and its vertical product extension.
//!
//! # Staircase calibration
//!
//! A lattice region can only expose axis-aligned faces, so the face-sum
//! perimeter of a smooth shape overestimates its true perimeter by a
//! direction-dependent factor between `1` (axis-aligned pieces) and `sqrt(2)`
//! (diagonal pieces). Averaged over all directions of a closed convex curve
//! the factor is `4 / pi`: a digital disk of radius `R` has face-sum
//! perimeter `8 R + O(h)`, so `pi / 4` times the face sum recovers `2 pi R`.
//! Tests against smooth references use this band; the almost-minimizing
//! comparisons never need it because both competitors are lattice sets and
//! their staircase biases cancel.

mod bounds;
mod minimize;

pub use bounds::{
    cylinder_descent_check, graph_mass_bound_check, DescentReport, MassBoundReport,
};
pub use minimize::{
    almost_minimizing_test, almost_minimizing_window, MinimizingReport, WindowReport,
    CANDIDATE_BUDGET,
};

use crate::datasets::InitialData;
use crate::geometry::{sym_index, Grid, MetricField, GeometryData, MAX_DIM};
use crate::{Error, Result};

/// Area of the unit sphere in `ambient_dim` dimensions (circle length `2 pi`,
/// sphere area `4 pi`): the angular factor of rotationally reduced lattices.
fn unit_sphere_area(ambient_dim: usize) -> f64 {
    match ambient_dim {
        2 => 2.0 * std::f64::consts::PI,
        _ => 4.0 * std::f64::consts::PI,
    }
}

/// Inclusive node-index box on a lattice. Axes at and beyond the grid
/// dimension must be pinned to `0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    pub lo: [usize; MAX_DIM],
    pub hi: [usize; MAX_DIM],
}

impl Window {
    /// Window from coordinate bounds, rounded to the nearest lattice nodes.
    pub fn from_coords(grid: &Grid, lo: &[f64], hi: &[f64]) -> Result<Self> {
        let mut wlo = [0usize; MAX_DIM];
        let mut whi = [0usize; MAX_DIM];
        for axis in 0..grid.grid_dim {
            let to_index = |x: f64| -> usize {
                let k = ((x - grid.origin[axis]) / grid.h).round();
                k.max(0.0) as usize
            };
            wlo[axis] = to_index(lo[axis]);
            whi[axis] = to_index(hi[axis]);
        }
        let w = Self { lo: wlo, hi: whi };
        w.validate(grid)?;
        Ok(w)
    }

    /// Checks the box is non-empty and compactly contained in the lattice
    /// interior (at least one node away from every lattice edge).
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        for axis in 0..grid.grid_dim {
            if self.lo[axis] > self.hi[axis] {
                return Err(Error::InvalidInput(format!(
                    "window is empty on axis {axis}: lo {} > hi {}",
                    self.lo[axis], self.hi[axis]
                )));
            }
            if self.lo[axis] < 1 || self.hi[axis] + 2 > grid.shape[axis] {
                return Err(Error::InvalidInput(format!(
                    "window [{}, {}] on axis {axis} is not compactly contained \
                     in a lattice of extent {}",
                    self.lo[axis], self.hi[axis], grid.shape[axis]
                )));
            }
        }
        for axis in grid.grid_dim..MAX_DIM {
            if self.lo[axis] != 0 || self.hi[axis] != 0 {
                return Err(Error::InvalidInput(format!(
                    "window uses axis {axis} beyond the lattice dimension"
                )));
            }
        }
        Ok(())
    }

    /// Whether the node with flat index `flat` lies in the box.
    pub fn contains(&self, grid: &Grid, flat: usize) -> bool {
        let m = grid.multi(flat);
        (0..grid.grid_dim).all(|a| self.lo[a] <= m[a] && m[a] <= self.hi[a])
    }

    /// Flat indices of all nodes in the box, ascending.
    pub fn cells(&self, grid: &Grid) -> Vec<usize> {
        let mut out = Vec::new();
        let mut m = self.lo;
        loop {
            out.push(grid.flat(m));
            let mut axis = 0;
            loop {
                if axis == grid.grid_dim {
                    out.sort_unstable();
                    return out;
                }
                m[axis] += 1;
                if m[axis] <= self.hi[axis] {
                    break;
                }
                m[axis] = self.lo[axis];
                axis += 1;
            }
        }
    }

    /// Number of nodes in the box.
    pub fn cell_count(&self, grid: &Grid) -> usize {
        (0..grid.grid_dim)
            .map(|a| self.hi[a] - self.lo[a] + 1)
            .product()
    }

    /// Sort key used to process window lists in a canonical order.
    pub(crate) fn sort_key(&self) -> ([usize; MAX_DIM], [usize; MAX_DIM]) {
        (self.lo, self.hi)
    }
}

/// Perturbation allowance for the almost-minimizing comparison: how many
/// cells a competitor may flip, and inside which windows it must stay.
#[derive(Clone, Debug)]
pub struct PerturbationBudget {
    /// Maximum number of flipped cells per competitor.
    pub max_flips: usize,
    /// Comparison windows, each compactly contained in the lattice interior.
    pub windows: Vec<Window>,
}

impl PerturbationBudget {
    pub fn new(max_flips: usize, windows: Vec<Window>) -> Result<Self> {
        if max_flips == 0 {
            return Err(Error::InvalidInput(
                "perturbation budget needs at least one flip".into(),
            ));
        }
        Ok(Self { max_flips, windows })
    }

    /// The standard allowance: eight flipped cells.
    pub fn standard(windows: Vec<Window>) -> Self {
        Self {
            max_flips: 8,
            windows,
        }
    }
}

/// Metric measures of a lattice: the area of every cell face and the volume
/// of every cell, so that region perimeters and volumes are weighted sums.
///
/// Cells are identified with nodes. The face between a node and its `+axis`
/// neighbor is stored on the lower node; its area is the square root of the
/// determinant of the metric restricted to the face plane, times
/// `h^(dim - 1)`. Rotationally reduced lattices store the full sphere area
/// of each radius instead, so perimeters and volumes are those of the
/// ambient annulus, not of the radius segment.
#[derive(Clone, Debug)]
pub struct RegionGeometry {
    pub grid: Grid,
    /// `face_area[node * grid_dim + axis]` = area of the face between `node`
    /// and its `+axis` neighbor; zero when there is no such neighbor.
    face_area: Vec<f64>,
    /// Metric volume of each cell.
    cell_volume: Vec<f64>,
}

impl RegionGeometry {
    /// Unit-metric measures: faces `h^(dim-1)`, cells `h^dim`.
    pub fn flat(grid: &Grid) -> Self {
        let dim = grid.grid_dim;
        let nodes = grid.len();
        let face = grid.h.powi(dim as i32 - 1);
        let mut face_area = vec![0.0; nodes * dim];
        for node in 0..nodes {
            for axis in 0..dim {
                if grid.axis_neighbor(node, axis, 1).is_some() {
                    face_area[node * dim + axis] = face;
                }
            }
        }
        Self {
            grid: grid.clone(),
            face_area,
            cell_volume: vec![grid.h.powi(dim as i32); nodes],
        }
    }

    /// Measures of a metric given as a packed symmetric matrix field over
    /// chart points (components ordered `00, 01, .., 11, ..` as in the
    /// tensor fields). Faces evaluate the metric at the face midpoint.
    pub fn from_metric_fn(grid: &Grid, g: impl Fn(&[f64]) -> [f64; 6]) -> Self {
        let dim = grid.grid_dim;
        let nodes = grid.len();
        let mut face_area = vec![0.0; nodes * dim];
        let mut cell_volume = vec![0.0; nodes];
        for node in 0..nodes {
            let x = grid.coords(node);
            cell_volume[node] = det_packed(dim, &g(&x)).sqrt() * grid.h.powi(dim as i32);
            for axis in 0..dim {
                if grid.axis_neighbor(node, axis, 1).is_none() {
                    continue;
                }
                let mut mid = x;
                mid[axis] += 0.5 * grid.h;
                face_area[node * dim + axis] =
                    minor_det_packed(dim, &g(&mid), axis).sqrt() * grid.h.powi(dim as i32 - 1);
            }
        }
        Self {
            grid: grid.clone(),
            face_area,
            cell_volume,
        }
    }

    /// Measures of an instantiated data set. Cartesian lattices use the
    /// stored metric field (face values averaged from the two cells);
    /// rotationally reduced lattices use the sphere areas of the reduction.
    pub fn from_data(data: &InitialData) -> Result<Self> {
        let grid = &data.domain.grid;
        match &data.geometry {
            GeometryData::Cartesian { metric, .. } => {
                Ok(Self::from_metric_field(grid, metric))
            }
            GeometryData::Radial(radial) => {
                let omega = unit_sphere_area(grid.ambient_dim);
                let nodes = grid.len();
                let mut face_area = vec![0.0; nodes];
                for i in 0..nodes.saturating_sub(1) {
                    // weight_half = sqrt(g_rr) * rho^(n-1); dividing out the
                    // radial measure leaves the sphere area factor.
                    face_area[i] =
                        omega * radial.weight_half[i] * radial.inv_grr_half[i].sqrt();
                }
                let cell_volume = radial
                    .weight
                    .iter()
                    .map(|w| omega * w * grid.h)
                    .collect();
                Ok(Self {
                    grid: grid.clone(),
                    face_area,
                    cell_volume,
                })
            }
        }
    }

    fn from_metric_field(grid: &Grid, metric: &MetricField) -> Self {
        let dim = grid.grid_dim;
        let nodes = grid.len();
        let mut face_area = vec![0.0; nodes * dim];
        let mut cell_volume = vec![0.0; nodes];
        for node in 0..nodes {
            cell_volume[node] = metric.sqrt_det[node] * grid.h.powi(dim as i32);
            for axis in 0..dim {
                let Some(nbr) = grid.axis_neighbor(node, axis, 1) else {
                    continue;
                };
                let a = metric.g.at(node);
                let b = metric.g.at(nbr);
                let mut packed = [0.0; 6];
                for (k, slot) in packed.iter_mut().enumerate().take(a.len()) {
                    *slot = 0.5 * (a[k] + b[k]);
                }
                face_area[node * dim + axis] =
                    minor_det_packed(dim, &packed, axis).sqrt() * grid.h.powi(dim as i32 - 1);
            }
        }
        Self {
            grid: grid.clone(),
            face_area,
            cell_volume,
        }
    }

    /// Area of the face between `node` and its `+axis` neighbor.
    pub fn face_area(&self, node: usize, axis: usize) -> f64 {
        self.face_area[node * self.grid.grid_dim + axis]
    }

    /// Area of the face between two axis-adjacent nodes, in either order.
    pub fn face_between(&self, a: usize, b: usize, axis: usize) -> f64 {
        self.face_area(a.min(b), axis)
    }

    /// Metric volume of a cell.
    pub fn cell_volume(&self, node: usize) -> f64 {
        self.cell_volume[node]
    }

    /// Largest face area among faces with both cells in the window: the
    /// length scale of single-face perimeter changes there.
    pub fn max_face_area(&self, window: &Window) -> f64 {
        let grid = &self.grid;
        let mut best = 0.0f64;
        for node in window.cells(grid) {
            for axis in 0..grid.grid_dim {
                if let Some(nbr) = grid.axis_neighbor(node, axis, 1) {
                    if window.contains(grid, nbr) {
                        best = best.max(self.face_area(node, axis));
                    }
                }
            }
        }
        best
    }
}

/// Determinant of a packed symmetric matrix.
fn det_packed(dim: usize, g: &[f64; 6]) -> f64 {
    match dim {
        1 => g[0],
        2 => g[0] * g[2] - g[1] * g[1],
        _ => {
            let (a, b, c) = (g[0], g[1], g[2]);
            let (d, e, f) = (g[3], g[4], g[5]);
            a * (d * f - e * e) - b * (b * f - c * e) + c * (b * e - c * d)
        }
    }
}

/// Determinant of the packed symmetric matrix restricted to the plane
/// orthogonal to `axis` (the minor that drops that row and column).
fn minor_det_packed(dim: usize, g: &[f64; 6], axis: usize) -> f64 {
    match dim {
        1 => 1.0,
        2 => {
            let other = 1 - axis;
            g[sym_index(2, other, other)]
        }
        _ => {
            let mut rows = [0usize; 2];
            let mut k = 0;
            for i in 0..3 {
                if i != axis {
                    rows[k] = i;
                    k += 1;
                }
            }
            let (b, c) = (rows[0], rows[1]);
            g[sym_index(3, b, b)] * g[sym_index(3, c, c)]
                - g[sym_index(3, b, c)] * g[sym_index(3, b, c)]
        }
    }
}

/// A lattice region: a binary cell indicator together with the metric
/// measures used to weigh its perimeter and volume.
#[derive(Clone, Debug)]
pub struct DiscreteRegion {
    pub geom: RegionGeometry,
    /// Cell membership indicator, one flag per lattice node.
    pub cells: Vec<bool>,
}

impl DiscreteRegion {
    pub fn new(geom: RegionGeometry, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != geom.grid.len() {
            return Err(Error::InvalidInput(format!(
                "region indicator has {} cells but the lattice has {} nodes",
                cells.len(),
                geom.grid.len()
            )));
        }
        Ok(Self { geom, cells })
    }

    /// Region of all cells whose centers satisfy a predicate.
    pub fn from_predicate(geom: RegionGeometry, pred: impl Fn(&[f64]) -> bool) -> Self {
        let cells = (0..geom.grid.len())
            .map(|node| pred(&geom.grid.coords(node)))
            .collect();
        Self { geom, cells }
    }

    /// Metric volume of the region inside a window.
    pub fn volume_in(&self, window: &Window) -> f64 {
        window
            .cells(&self.geom.grid)
            .into_iter()
            .filter(|&c| self.cells[c])
            .map(|c| self.geom.cell_volume(c))
            .sum()
    }
}

/// Metric-weighted perimeter of the region inside a window: the sum of the
/// areas of the faces that separate a member cell from a non-member cell,
/// counting only faces whose two cells both lie in the window.
pub fn discrete_perimeter(region: &DiscreteRegion, window: &Window) -> Result<f64> {
    let grid = &region.geom.grid;
    window.validate(grid)?;
    let mut total = 0.0;
    for node in window.cells(grid) {
        for axis in 0..grid.grid_dim {
            let Some(nbr) = grid.axis_neighbor(node, axis, 1) else {
                continue;
            };
            if !window.contains(grid, nbr) {
                continue;
            }
            if region.cells[node] != region.cells[nbr] {
                total += region.geom.face_area(node, axis);
            }
        }
    }
    Ok(total)
}

/// Metric volume of the symmetric difference of two regions over the same
/// lattice, inside a window.
pub fn symmetric_difference_volume(
    a: &DiscreteRegion,
    b: &DiscreteRegion,
    window: &Window,
) -> Result<f64> {
    let grid = &a.geom.grid;
    if b.cells.len() != a.cells.len() {
        return Err(Error::InvalidInput(
            "regions live on different lattices".into(),
        ));
    }
    window.validate(grid)?;
    Ok(window
        .cells(grid)
        .into_iter()
        .filter(|&c| a.cells[c] != b.cells[c])
        .map(|c| a.geom.cell_volume(c))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square_grid(half_extent: f64, h: f64) -> Grid {
        let count = (2.0 * half_extent / h).round() as usize + 1;
        Grid::cartesian(
            2,
            &[count, count],
            &[-half_extent, -half_extent],
            h,
        )
        .unwrap()
    }

    #[test]
    fn straight_edge_perimeter_matches_the_window_height() {
        let h = 1.0 / 64.0;
        let grid = square_grid(1.25, h);
        let geom = RegionGeometry::flat(&grid);
        let region = DiscreteRegion::from_predicate(geom, |x| x[0] < -1e-9);
        let window = Window::from_coords(&grid, &[-0.5, -0.5], &[0.5, 0.5]).unwrap();
        let per = discrete_perimeter(&region, &window).unwrap();
        // One cut face per node row of the window: height 1 plus one face.
        assert!((per - (1.0 + h)).abs() < 1e-12, "per = {per}");
    }

    #[test]
    fn empty_region_has_zero_perimeter() {
        let grid = square_grid(1.0, 1.0 / 16.0);
        let geom = RegionGeometry::flat(&grid);
        let region = DiscreteRegion::from_predicate(geom, |_| false);
        let window = Window::from_coords(&grid, &[-0.5, -0.5], &[0.5, 0.5]).unwrap();
        assert_eq!(discrete_perimeter(&region, &window).unwrap(), 0.0);
    }

    #[test]
    fn disk_perimeter_sits_in_the_staircase_band() {
        let h = 1.0 / 64.0;
        let r = 0.75;
        let grid = square_grid(1.25, h);
        let geom = RegionGeometry::flat(&grid);
        let region =
            DiscreteRegion::from_predicate(geom, |x| x[0] * x[0] + x[1] * x[1] < r * r);
        let window = Window::from_coords(&grid, &[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let per = discrete_perimeter(&region, &window).unwrap();

        // Independent oracle: recount the separating faces row by row and
        // column by column as sign changes of the indicator.
        let inside = |i: usize, j: usize| region.cells[grid.flat([i, j, 0])];
        let node = |x: f64| ((x - grid.origin[0]) / h).round() as usize;
        let (lo, hi) = (node(-1.0), node(1.0));
        let mut faces = 0usize;
        for j in lo..=hi {
            for i in lo..hi {
                if inside(i, j) != inside(i + 1, j) {
                    faces += 1;
                }
            }
        }
        for i in lo..=hi {
            for j in lo..hi {
                if inside(i, j) != inside(i, j + 1) {
                    faces += 1;
                }
            }
        }
        assert!((per - faces as f64 * h).abs() < 1e-12);

        // The face sum lies in the staircase band above the smooth length,
        // and the averaged-direction correction recovers it to a few cells.
        let smooth = 2.0 * std::f64::consts::PI * r;
        assert!(per >= smooth - 1e-12, "per = {per}, smooth = {smooth}");
        assert!(per <= std::f64::consts::SQRT_2 * smooth + 4.0 * h);
        let corrected = per * std::f64::consts::FRAC_PI_4;
        assert!(
            (corrected - smooth).abs() <= 4.0 * h,
            "corrected = {corrected}, smooth = {smooth}"
        );
    }

    #[test]
    fn perimeter_scales_with_the_metric_exactly() {
        let lambda: f64 = 1.7;
        let wavy = |x: &[f64]| {
            let a = 1.0 + 0.3 * (3.0 * x[0]).sin() * (2.0 * x[1]).cos();
            let b = 1.0 + 0.2 * (x[0] + x[1]).cos();
            let c = 0.1 * (x[0] * x[1]).sin();
            [a, c, b, 0.0, 0.0, 0.0]
        };
        let grid = square_grid(1.0, 1.0 / 24.0);
        let base = RegionGeometry::from_metric_fn(&grid, wavy);
        let scaled = RegionGeometry::from_metric_fn(&grid, |x| {
            let g = wavy(x);
            let s = lambda * lambda;
            [s * g[0], s * g[1], s * g[2], 0.0, 0.0, 0.0]
        });
        let pred = |x: &[f64]| x[0] * x[0] + x[1] * x[1] < 0.45;
        let region_a = DiscreteRegion::from_predicate(base, pred);
        let region_b = DiscreteRegion::from_predicate(scaled, pred);
        let window = Window::from_coords(&grid, &[-0.9, -0.9], &[0.9, 0.9]).unwrap();
        let pa = discrete_perimeter(&region_a, &window).unwrap();
        let pb = discrete_perimeter(&region_b, &window).unwrap();
        // dim 2: areas of 1-dimensional faces scale by lambda^(2-1).
        assert!((pb - lambda * pa).abs() <= 1e-12 * pb.abs());

        let va = region_a.volume_in(&window);
        let vb = region_b.volume_in(&window);
        assert!((vb - lambda * lambda * va).abs() <= 1e-12 * vb.abs());
    }

    #[test]
    fn perimeter_scales_with_the_metric_in_three_dimensions() {
        let lambda: f64 = 0.6;
        let g3 = |x: &[f64]| {
            [
                1.0 + 0.1 * x[0].sin(),
                0.05 * x[1],
                0.02 * x[2],
                1.0 + 0.1 * (x[1] + x[2]).cos(),
                0.03 * x[0],
                1.0 - 0.05 * x[2].sin(),
            ]
        };
        let grid = Grid::cartesian(3, &[13, 13, 13], &[-0.6, -0.6, -0.6], 0.1).unwrap();
        let base = RegionGeometry::from_metric_fn(&grid, g3);
        let scaled = RegionGeometry::from_metric_fn(&grid, |x| {
            let g = g3(x);
            let s = lambda * lambda;
            [s * g[0], s * g[1], s * g[2], s * g[3], s * g[4], s * g[5]]
        });
        let pred = |x: &[f64]| x.iter().take(3).map(|c| c * c).sum::<f64>() < 0.16;
        let region_a = DiscreteRegion::from_predicate(base, pred);
        let region_b = DiscreteRegion::from_predicate(scaled, pred);
        let window = Window {
            lo: [2, 2, 2],
            hi: [10, 10, 10],
        };
        let pa = discrete_perimeter(&region_a, &window).unwrap();
        let pb = discrete_perimeter(&region_b, &window).unwrap();
        // dim 3: areas of 2-dimensional faces scale by lambda^2.
        assert!((pb - lambda * lambda * pa).abs() <= 1e-12 * pb.abs());
    }

    #[test]
    fn symmetric_difference_volume_agrees_both_ways() {
        let grid = square_grid(1.0, 1.0 / 16.0);
        let geom = RegionGeometry::from_metric_fn(&grid, |x| {
            [1.0 + 0.2 * x[0].cos(), 0.0, 1.0 + 0.1 * x[1].sin(), 0.0, 0.0, 0.0]
        });
        let mut rng = ChaCha8Rng::seed_from_u64(0x5ee_d);
        let cells_a: Vec<bool> = (0..grid.len()).map(|_| rng.gen_bool(0.5)).collect();
        let cells_b: Vec<bool> = (0..grid.len()).map(|_| rng.gen_bool(0.4)).collect();
        let a = DiscreteRegion::new(geom.clone(), cells_a).unwrap();
        let b = DiscreteRegion::new(geom, cells_b).unwrap();
        let window = Window::from_coords(&grid, &[-0.8, -0.8], &[0.8, 0.8]).unwrap();

        let xor = symmetric_difference_volume(&a, &b, &window).unwrap();

        // Second route: |vol A - vol B| plus twice the smaller one-sided
        // difference; the identity is exact because both sides count every
        // flipped cell exactly once.
        let grid = &a.geom.grid;
        let mut out_vol = 0.0; // A minus B
        let mut in_vol = 0.0; // B minus A
        for c in window.cells(grid) {
            if a.cells[c] && !b.cells[c] {
                out_vol += a.geom.cell_volume(c);
            }
            if b.cells[c] && !a.cells[c] {
                in_vol += a.geom.cell_volume(c);
            }
        }
        let va = a.volume_in(&window);
        let vb = b.volume_in(&window);
        let other = (va - vb).abs() + 2.0 * out_vol.min(in_vol);
        assert!((xor - other).abs() <= 1e-12 * (1.0 + xor));
    }

    #[test]
    fn windows_reject_degenerate_and_edge_hugging_boxes() {
        let grid = square_grid(1.0, 0.25);
        let bad = Window {
            lo: [3, 3, 0],
            hi: [2, 5, 0],
        };
        assert!(bad.validate(&grid).is_err());
        let edge = Window {
            lo: [0, 1, 0],
            hi: [3, 3, 0],
        };
        assert!(edge.validate(&grid).is_err());
        let third_axis = Window {
            lo: [1, 1, 1],
            hi: [2, 2, 1],
        };
        assert!(third_axis.validate(&grid).is_err());
    }

    #[test]
    fn radial_measures_reproduce_sphere_areas_and_shell_volumes() {
        use crate::datasets::{instantiate, DataFamily, DomainSpec};
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
        let geom = RegionGeometry::from_data(&data).unwrap();
        let grid = &geom.grid;
        let h = grid.h;

        // The face between nodes i and i+1 is the coordinate sphere at the
        // midpoint radius: area 4 pi (psi^2 r)^2 for the conformal factor
        // psi = 1 + mass / (2 r).
        let i = grid.len() / 2;
        let r = grid.coords(i)[0] + 0.5 * h;
        let psi = 1.0 + 1.0 / (2.0 * r);
        let sphere = 4.0 * std::f64::consts::PI * (psi * psi * r).powi(2);
        assert!((geom.face_area(i, 0) - sphere).abs() <= 1e-10 * sphere);

        // Summed shell volumes match the closed-form conformal volume
        // integral to quadrature accuracy.
        let half = Window {
            lo: [1, 0, 0],
            hi: [grid.shape[0] - 2, 0, 0],
        };
        let cells = half.cells(grid);
        let total: f64 = cells.iter().map(|&c| geom.cell_volume(c)).sum();
        let mut oracle = 0.0;
        for &c in &cells {
            let r = grid.coords(c)[0];
            let psi = 1.0 + 1.0 / (2.0 * r);
            oracle += 4.0 * std::f64::consts::PI * psi.powi(6) * r * r * h;
        }
        assert!((total - oracle).abs() <= 1e-10 * oracle);
    }
}
