//! Uniform lattices and the domains carved out of them.
//!
//! A [`Grid`] is a uniform box lattice with up to three axes. Cartesian grids
//! discretize a coordinate box in the ambient slice; radial grids discretize
//! an interval of radii for rotationally symmetric problems (one lattice axis,
//! ambient dimension tracked separately so operators can weight by the area of
//! coordinate spheres).
//!
//! A [`Domain`] classifies every lattice node as exterior, interior, or
//! boundary. Classification uses the full Moore neighborhood (all `3^d - 1`
//! surrounding nodes), so every interior node has the complete box of
//! neighbors needed for mixed second differences.

use crate::{Error, Result};

/// Maximum number of lattice axes supported.
pub const MAX_DIM: usize = 3;

/// Flavor of lattice: a full coordinate box or a radial profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridKind {
    /// Box lattice over `grid_dim` coordinate axes.
    Cartesian,
    /// One-axis lattice over a radius interval; rotationally symmetric data.
    Radial,
}

/// Uniform lattice with spacing `h` on every axis.
#[derive(Clone, Debug)]
pub struct Grid {
    pub kind: GridKind,
    /// Number of lattice axes (1 for radial profiles, 2 or 3 for boxes).
    pub grid_dim: usize,
    /// Dimension of the ambient slice the data lives on.
    pub ambient_dim: usize,
    /// Node counts per axis; unused axes hold 1.
    pub shape: [usize; MAX_DIM],
    /// Coordinate of the node with multi-index zero, per axis.
    pub origin: [f64; MAX_DIM],
    /// Lattice spacing, identical on every axis.
    pub h: f64,
    strides: [usize; MAX_DIM],
    len: usize,
}

impl Grid {
    /// Box lattice in `dim` coordinates (2 or 3), `shape[a]` nodes on axis `a`.
    pub fn cartesian(dim: usize, shape: &[usize], origin: &[f64], h: f64) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidInput(format!(
                "cartesian grid dimension must be 2 or 3, got {dim}"
            )));
        }
        if shape.len() != dim || origin.len() != dim {
            return Err(Error::InvalidInput(format!(
                "shape/origin length must equal dimension {dim}"
            )));
        }
        Self::build(GridKind::Cartesian, dim, dim, shape, origin, h)
    }

    /// Radial profile lattice: `count` nodes at radii `r_min + i * h`, for a
    /// rotationally symmetric problem on an `ambient_dim`-dimensional slice.
    pub fn radial(ambient_dim: usize, count: usize, r_min: f64, h: f64) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&ambient_dim) {
            return Err(Error::InvalidInput(format!(
                "ambient dimension must be 2 or 3, got {ambient_dim}"
            )));
        }
        if r_min <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "radial grid must start at positive radius, got {r_min}"
            )));
        }
        Self::build(GridKind::Radial, 1, ambient_dim, &[count], &[r_min], h)
    }

    fn build(
        kind: GridKind,
        grid_dim: usize,
        ambient_dim: usize,
        shape_in: &[usize],
        origin_in: &[f64],
        h: f64,
    ) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidInput(format!(
                "grid spacing must be positive and finite, got {h}"
            )));
        }
        let mut shape = [1usize; MAX_DIM];
        let mut origin = [0.0f64; MAX_DIM];
        for a in 0..grid_dim {
            if shape_in[a] < 3 {
                return Err(Error::InvalidInput(format!(
                    "axis {a} needs at least 3 nodes, got {}",
                    shape_in[a]
                )));
            }
            if !origin_in[a].is_finite() {
                return Err(Error::InvalidInput(format!(
                    "origin component {a} is not finite"
                )));
            }
            shape[a] = shape_in[a];
            origin[a] = origin_in[a];
        }
        let mut strides = [0usize; MAX_DIM];
        let mut len = 1usize;
        for a in 0..grid_dim {
            strides[a] = len;
            len = len.checked_mul(shape[a]).ok_or_else(|| {
                Error::InvalidInput("grid node count overflows usize".to_string())
            })?;
        }
        Ok(Self {
            kind,
            grid_dim,
            ambient_dim,
            shape,
            origin,
            h,
            strides,
            len,
        })
    }

    /// Total number of lattice nodes.
    pub fn len(&self) -> usize {
        self.len
    }

    /// Flat-index stride of one step along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        debug_assert!(axis < self.grid_dim);
        self.strides[axis]
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Flat index of a multi-index (components beyond `grid_dim` must be 0).
    pub fn flat(&self, m: [usize; MAX_DIM]) -> usize {
        let mut f = 0;
        for a in 0..self.grid_dim {
            debug_assert!(m[a] < self.shape[a]);
            f += m[a] * self.strides[a];
        }
        f
    }

    /// Multi-index of a flat index; unused components are 0.
    pub fn multi(&self, flat: usize) -> [usize; MAX_DIM] {
        debug_assert!(flat < self.len);
        let mut m = [0usize; MAX_DIM];
        let mut rest = flat;
        for a in (0..self.grid_dim).rev() {
            m[a] = rest / self.strides[a];
            rest %= self.strides[a];
        }
        m
    }

    /// Coordinates of a node; unused components are 0.
    pub fn coords(&self, flat: usize) -> [f64; MAX_DIM] {
        let m = self.multi(flat);
        let mut x = [0.0f64; MAX_DIM];
        for a in 0..self.grid_dim {
            x[a] = self.origin[a] + self.h * m[a] as f64;
        }
        x
    }

    /// Flat index of the node `step` lattice places away along `axis`, or
    /// `None` when that leaves the lattice box.
    pub fn axis_neighbor(&self, flat: usize, axis: usize, step: isize) -> Option<usize> {
        debug_assert!(axis < self.grid_dim);
        let m = self.multi(flat);
        let i = m[axis] as isize + step;
        if i < 0 || i >= self.shape[axis] as isize {
            None
        } else {
            Some((flat as isize + step * self.strides[axis] as isize) as usize)
        }
    }

    /// Appends all Moore neighbors (the `3^d - 1` surrounding nodes that fall
    /// inside the lattice box) of `flat` to `out`.
    pub fn moore_neighbors(&self, flat: usize, out: &mut Vec<usize>) {
        out.clear();
        let m = self.multi(flat);
        let d = self.grid_dim;
        let mut offset = [-1isize; MAX_DIM];
        'outer: loop {
            let mut skip = offset[..d].iter().all(|&o| o == 0);
            let mut nb = 0usize;
            if !skip {
                for a in 0..d {
                    let i = m[a] as isize + offset[a];
                    if i < 0 || i >= self.shape[a] as isize {
                        skip = true;
                        break;
                    }
                    nb += i as usize * self.strides[a];
                }
            }
            if !skip {
                out.push(nb);
            }
            // Advance the offset vector through {-1, 0, 1}^d.
            for a in 0..d {
                offset[a] += 1;
                if offset[a] <= 1 {
                    continue 'outer;
                }
                offset[a] = -1;
            }
            break;
        }
    }
}

/// Classification of a lattice node relative to the computational domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeClass {
    /// Outside the domain; carries no unknowns.
    Exterior,
    /// Inside with a full Moore neighborhood of non-exterior nodes.
    Interior,
    /// Inside but adjacent (in the Moore sense) to the exterior or to the
    /// lattice box edge; carries prescribed data.
    Boundary,
}

/// Which boundary component a boundary node belongs to, named by the sign of
/// the prescribed divergence there: heights are driven toward `+chi/t` on
/// `Plus` nodes and `-chi/t` on `Minus` nodes as the regularization is
/// relaxed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryPiece {
    Plus,
    Minus,
}

/// How the boundary splits into pieces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainVariant {
    /// Two disjoint closed boundary components, one per sign.
    ClosedPair,
    /// A single boundary component carrying a seam along which the prescribed
    /// data sweeps from one sign to the other.
    Seamed,
}

/// A grid together with its node classification and boundary structure.
///
/// Collar distance fields are filled in by the data-set constructors once a
/// metric is available: `dist_plus` / `dist_minus` hold distance to the
/// respective boundary piece (for seamed domains both hold distance to the
/// whole boundary), and `dist_gamma` holds the signed distance to the seam
/// (after projecting to the boundary), positive on the `Plus` side.
#[derive(Clone, Debug)]
pub struct Domain {
    pub grid: Grid,
    pub class: Vec<NodeClass>,
    pub piece: Vec<Option<BoundaryPiece>>,
    pub variant: DomainVariant,
    pub dist_plus: Vec<f64>,
    pub dist_minus: Vec<f64>,
    pub dist_gamma: Option<Vec<f64>>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
}

impl Domain {
    /// Classifies nodes from an inside-mask: nodes outside the mask are
    /// exterior; inside nodes become boundary when any Moore neighbor is
    /// exterior or off the lattice box, interior otherwise.
    pub fn from_mask(grid: Grid, inside: &[bool], variant: DomainVariant) -> Result<Self> {
        if inside.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "mask length {} does not match node count {}",
                inside.len(),
                grid.len()
            )));
        }
        let full = 3usize.pow(grid.grid_dim as u32) - 1;
        let mut class = vec![NodeClass::Exterior; grid.len()];
        let mut interior = Vec::new();
        let mut boundary = Vec::new();
        let mut nbrs = Vec::with_capacity(full);
        for flat in 0..grid.len() {
            if !inside[flat] {
                continue;
            }
            grid.moore_neighbors(flat, &mut nbrs);
            let surrounded = nbrs.len() == full && nbrs.iter().all(|&nb| inside[nb]);
            if surrounded {
                class[flat] = NodeClass::Interior;
                interior.push(flat);
            } else {
                class[flat] = NodeClass::Boundary;
                boundary.push(flat);
            }
        }
        if interior.is_empty() {
            return Err(Error::InvalidInput(
                "domain has no interior nodes at this resolution".to_string(),
            ));
        }
        Ok(Self {
            piece: vec![None; grid.len()],
            grid,
            class,
            variant,
            dist_plus: Vec::new(),
            dist_minus: Vec::new(),
            dist_gamma: None,
            interior,
            boundary,
        })
    }

    /// Flat indices of interior nodes, in ascending order.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    /// Flat indices of boundary nodes, in ascending order.
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn is_interior(&self, flat: usize) -> bool {
        self.class[flat] == NodeClass::Interior
    }

    pub fn is_exterior(&self, flat: usize) -> bool {
        self.class[flat] == NodeClass::Exterior
    }

    /// Assigns a boundary piece to every boundary node.
    pub fn assign_pieces(&mut self, f: impl Fn(usize) -> BoundaryPiece) {
        for &b in &self.boundary {
            self.piece[b] = Some(f(b));
        }
    }

    /// Checks that piece assignment is total on the boundary and, for closed
    /// pairs, that both pieces are present.
    pub fn validate_pieces(&self) -> Result<()> {
        let mut plus = 0usize;
        let mut minus = 0usize;
        for &b in &self.boundary {
            match self.piece[b] {
                Some(BoundaryPiece::Plus) => plus += 1,
                Some(BoundaryPiece::Minus) => minus += 1,
                None => {
                    return Err(Error::InvalidInput(format!(
                        "boundary node {b} has no piece assignment"
                    )))
                }
            }
        }
        if self.variant == DomainVariant::ClosedPair && (plus == 0 || minus == 0) {
            return Err(Error::InvalidInput(format!(
                "closed-pair domain needs both boundary pieces, found {plus} plus / {minus} minus"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_multi_roundtrip() {
        let g = Grid::cartesian(3, &[4, 5, 6], &[0.0, -1.0, 2.0], 0.5).unwrap();
        assert_eq!(g.len(), 120);
        for flat in 0..g.len() {
            assert_eq!(g.flat(g.multi(flat)), flat);
        }
        let x = g.coords(g.flat([1, 2, 3]));
        assert_eq!(x, [0.5, 0.0, 3.5]);
    }

    #[test]
    fn axis_neighbors_respect_box() {
        let g = Grid::cartesian(2, &[3, 3], &[0.0, 0.0], 1.0).unwrap();
        let c = g.flat([1, 1, 0]);
        assert_eq!(g.axis_neighbor(c, 0, 1), Some(g.flat([2, 1, 0])));
        assert_eq!(g.axis_neighbor(c, 1, -1), Some(g.flat([1, 0, 0])));
        assert_eq!(g.axis_neighbor(g.flat([2, 1, 0]), 0, 1), None);
    }

    #[test]
    fn moore_counts() {
        let g = Grid::cartesian(2, &[3, 3], &[0.0, 0.0], 1.0).unwrap();
        let mut nbrs = Vec::new();
        g.moore_neighbors(g.flat([1, 1, 0]), &mut nbrs);
        assert_eq!(nbrs.len(), 8);
        g.moore_neighbors(g.flat([0, 0, 0]), &mut nbrs);
        assert_eq!(nbrs.len(), 3);

        let g3 = Grid::cartesian(3, &[3, 3, 3], &[0.0; 3], 1.0).unwrap();
        g3.moore_neighbors(g3.flat([1, 1, 1]), &mut nbrs);
        assert_eq!(nbrs.len(), 26);
    }

    #[test]
    fn square_mask_classification() {
        // 5x5 full mask: the 3x3 center block minus nothing -> 9 inside ring
        // of boundary, 1 interior? No: interior needs all 8 neighbors inside,
        // so only the very center of a 5x5 all-inside mask has a cushion of
        // one ring; interior = 3x3 block.
        let g = Grid::cartesian(2, &[5, 5], &[0.0, 0.0], 1.0).unwrap();
        let inside = vec![true; g.len()];
        let d = Domain::from_mask(g, &inside, DomainVariant::Seamed).unwrap();
        assert_eq!(d.interior().len(), 9);
        assert_eq!(d.boundary().len(), 16);
    }

    #[test]
    fn notched_mask_promotes_neighbors_to_boundary() {
        let g = Grid::cartesian(2, &[7, 7], &[0.0, 0.0], 1.0).unwrap();
        let mut inside = vec![true; g.len()];
        let hole = g.flat([3, 3, 0]);
        inside[hole] = false;
        let d = Domain::from_mask(g.clone(), &inside, DomainVariant::Seamed).unwrap();
        // All 8 nodes around the hole are boundary now.
        let mut nbrs = Vec::new();
        g.moore_neighbors(hole, &mut nbrs);
        for nb in nbrs {
            assert_eq!(d.class[nb], NodeClass::Boundary);
        }
        assert_eq!(d.class[hole], NodeClass::Exterior);
    }

    #[test]
    fn radial_grid_ends_are_boundary() {
        let g = Grid::radial(3, 9, 0.25, 0.25).unwrap();
        let inside = vec![true; g.len()];
        let d = Domain::from_mask(g, &inside, DomainVariant::ClosedPair).unwrap();
        assert_eq!(d.boundary(), &[0, 8]);
        assert_eq!(d.interior().len(), 7);
        assert_eq!(d.class[0], NodeClass::Boundary);
        assert_eq!(d.class[4], NodeClass::Interior);
    }

    #[test]
    fn piece_validation() {
        let g = Grid::radial(3, 5, 1.0, 0.5).unwrap();
        let inside = vec![true; g.len()];
        let mut d = Domain::from_mask(g, &inside, DomainVariant::ClosedPair).unwrap();
        assert!(d.validate_pieces().is_err());
        d.assign_pieces(|flat| {
            if flat == 0 {
                BoundaryPiece::Minus
            } else {
                BoundaryPiece::Plus
            }
        });
        d.validate_pieces().unwrap();
    }
}
