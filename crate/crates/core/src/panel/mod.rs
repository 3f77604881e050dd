//! Parametric stiffened panels: geometry, material, decomposition into
//! structural units, edge topology, boundary conditions and loads.

mod boundary;
mod case;
mod geometry;
mod material;
mod topology;

pub use boundary::{
    sample_loads, BcSpec, BoundaryField, DofKind, EdgeBc, LoadProfile, LoadSpec, PROFILE_SAMPLES,
};
pub use case::{CaseSpec, PanelCase};
pub use geometry::{sample_panel, GeometryRanges, Interval, PanelGeometry, MAX_STIFFENERS};
pub use material::MaterialLaw;
pub use topology::{
    physical_edges, structural_units, Axis, Direction, PanelTopology, PhysicalEdge,
    SpatialRelation, StructuralUnit, UnitKind,
};
pub(crate) use topology::cross;
