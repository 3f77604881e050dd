use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::features::feature_width;
use super::types::{DofMode, NodeType, RelationKind, RelationType, Variant};
use crate::panel::{DofKind, SpatialRelation};

/// Node types and meta-relations of one representation, in a fixed order
/// that drives parameter allocation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationCatalog {
    pub variant: Variant,
    pub node_types: Vec<NodeType>,
    pub relations: Vec<RelationType>,
}

impl RelationCatalog {
    pub fn new(variant: Variant) -> Self {
        let Some(spec) = variant.spec() else {
            let g = NodeType::Geometry;
            return Self {
                variant,
                node_types: vec![g],
                relations: vec![RelationType {
                    src: g,
                    kind: RelationKind::Adjacent,
                    dst: g,
                }],
            };
        };
        let mut node_types = vec![NodeType::Geometry];
        let mut forward = Vec::new();
        let spatial = || SpatialRelation::all().map(RelationKind::Spatial);
        match (spec.dof_mode, spec.use_edge_node) {
            (DofMode::Separate, false) => {
                for k in DofKind::ALL {
                    let t = NodeType::BoundaryDof(k);
                    node_types.push(t);
                    forward.extend(spatial().map(|kind| (NodeType::Geometry, kind, t)));
                }
            }
            (DofMode::Separate, true) => {
                node_types.push(NodeType::EdgeNode);
                forward.extend(spatial().map(|kind| (NodeType::Geometry, kind, NodeType::EdgeNode)));
                for k in DofKind::ALL {
                    let t = NodeType::BoundaryDof(k);
                    node_types.push(t);
                    forward.push((NodeType::EdgeNode, RelationKind::Dof(k), t));
                }
            }
            (DofMode::Combined, _) => {
                node_types.push(NodeType::BoundaryCombined);
                forward.extend(
                    spatial().map(|kind| (NodeType::Geometry, kind, NodeType::BoundaryCombined)),
                );
            }
        }
        if spec.isolated_loading {
            node_types.push(NodeType::Loading);
            forward.push((NodeType::Geometry, RelationKind::Load, NodeType::Loading));
        }
        let mut relations = Vec::with_capacity(2 * forward.len());
        for (src, kind, dst) in forward {
            let r = RelationType { src, kind, dst };
            relations.push(r);
            relations.push(r.reversed());
        }
        Self {
            variant,
            node_types,
            relations,
        }
    }

    /// Relation kinds per direction.
    pub fn kinds_per_direction(&self) -> usize {
        if self.variant == Variant::Homogeneous {
            1
        } else {
            self.relations.len() / 2
        }
    }

    /// Relations between geometry and boundary-side nodes carrying a
    /// spatial label, counted in one direction.
    pub fn spatial_geometry_relations(&self) -> usize {
        self.relations
            .iter()
            .filter(|r| r.src == NodeType::Geometry && matches!(r.kind, RelationKind::Spatial(_)))
            .count()
    }

    pub fn relation_index(&self) -> BTreeMap<RelationType, usize> {
        self.relations.iter().enumerate().map(|(i, r)| (*r, i)).collect()
    }

    pub fn type_index(&self, t: NodeType) -> Option<usize> {
        self.node_types.iter().position(|x| *x == t)
    }

    /// Raw feature width of every node type, in catalog order.
    pub fn feature_widths(&self) -> Vec<usize> {
        self.node_types
            .iter()
            .map(|t| feature_width(self.variant, *t))
            .collect()
    }

    /// Human-readable listing, one relation per line.
    pub fn describe(&self) -> String {
        self.relations.iter().map(|r| format!("{r}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(v: Variant) -> usize {
        RelationCatalog::new(v).relations.len()
    }

    #[test]
    fn kinds_per_direction() {
        let per: Vec<usize> = Variant::HETERO
            .iter()
            .map(|v| RelationCatalog::new(*v).kinds_per_direction())
            .collect();
        assert_eq!(per, vec![72, 73, 18, 19, 12, 13]);
        assert_eq!(RelationCatalog::new(Variant::E).spatial_geometry_relations(), 12);
    }

    #[test]
    fn ordering_by_kind_count() {
        use Variant::*;
        let order = [E, F, C, D, A, B];
        for w in order.windows(2) {
            assert!(count(w[0]) < count(w[1]));
        }
    }

    #[test]
    fn isolated_loading_adds_two() {
        use Variant::*;
        for (x, y) in [(A, B), (C, D), (E, F)] {
            assert_eq!(count(y) - count(x), 2);
        }
    }

    #[test]
    fn relations_distinct_and_paired() {
        for v in Variant::HETERO {
            let c = RelationCatalog::new(v);
            let idx = c.relation_index();
            assert_eq!(idx.len(), c.relations.len());
            for r in &c.relations {
                assert!(idx.contains_key(&r.reversed()));
            }
        }
    }
}
