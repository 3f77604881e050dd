//! Typed graph representations of panel cases: six heterogeneous variants
//! and the homogeneous baseline.

mod build;
mod catalog;
mod features;
mod types;

pub use build::{build_graph, build_homogeneous, validate_graph, EdgeSet, HeteroGraph, NodeSet};
pub use catalog::RelationCatalog;
pub use features::{
    boundary_features, edge_node_features, feature_width, geometry_features, load_features,
    FeatureScales, COMBINED_WIDTH, DOF_WIDTH, EDGE_NODE_WIDTH, GEOMETRY_WIDTH, HOMOGENEOUS_WIDTH,
    LOAD_WIDTH,
};
pub use types::{DofMode, NodeType, RelationKind, RelationType, Variant, VariantSpec};
