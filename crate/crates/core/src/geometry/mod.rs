//! Grids, domains, tensor fields, finite-difference operators, graph
//! quantities of a height function, and surface meshes with their discrete
//! prescribed-mean-curvature residual.

mod fields;
mod graph;
mod grid;
mod ops;
mod surface;

pub use fields::{
    p_operator_norm, sym_index, sym_len, GeometryData, MetricField, RadialGeometry,
    SymTensorField,
};
pub use graph::{code_neighbor, offset_code, GraphState, Problem, StencilRow, STENCIL_MAX};
pub use grid::{BoundaryPiece, Domain, DomainVariant, Grid, GridKind, NodeClass, MAX_DIM};
pub use ops::{
    christoffels, fast_march, fd_partial, gradient_sup, graph_distance,
    level_set_mean_curvature, radial_arclength, ricci_from_christoffels, ChristoffelField,
};
pub use surface::{
    circle_polyline, hausdorff_vertices, lat_long_sphere, surface_mots_residual, FieldSampler,
    Interface,
};
