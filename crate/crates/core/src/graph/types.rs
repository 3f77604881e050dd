use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{DofKind, SpatialRelation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeType {
    Geometry,
    Loading,
    BoundaryCombined,
    BoundaryDof(DofKind),
    EdgeNode,
}

impl NodeType {
    pub fn name(self) -> String {
        match self {
            NodeType::Geometry => "geometry".into(),
            NodeType::Loading => "loading".into(),
            NodeType::BoundaryCombined => "boundary".into(),
            NodeType::BoundaryDof(k) => format!("dof_{}", k.name()),
            NodeType::EdgeNode => "edge".into(),
        }
    }

    /// Boundary types whose unknown rows are replaced by a learned null
    /// embedding.
    pub fn has_null_slot(self) -> bool {
        matches!(self, NodeType::BoundaryCombined | NodeType::BoundaryDof(_))
    }
}

impl fmt::Display for NodeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Label of a relation between two node types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RelationKind {
    /// Geometry to boundary side, labelled by where the unit lies.
    Spatial(SpatialRelation),
    /// Edge node to one of its DOF nodes.
    Dof(DofKind),
    /// Geometry to its own loading node.
    Load,
    /// Unlabelled unit adjacency of the homogeneous graph.
    Adjacent,
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RelationKind::Spatial(s) => write!(f, "spatial:{s}"),
            RelationKind::Dof(k) => write!(f, "dof:{}", k.name()),
            RelationKind::Load => f.write_str("load"),
            RelationKind::Adjacent => f.write_str("adjacent"),
        }
    }
}

/// Meta-relation triplet. Forward and reverse links are distinct triplets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RelationType {
    pub src: NodeType,
    pub kind: RelationKind,
    pub dst: NodeType,
}

impl RelationType {
    pub fn reversed(self) -> Self {
        Self {
            src: self.dst,
            kind: self.kind,
            dst: self.src,
        }
    }
}

impl fmt::Display for RelationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-[{}]->{}", self.src, self.kind, self.dst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DofMode {
    Separate,
    Combined,
}

/// Node-heterogeneity options of a graph representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VariantSpec {
    pub dof_mode: DofMode,
    pub use_edge_node: bool,
    pub isolated_loading: bool,
}

impl VariantSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dof_mode == DofMode::Combined && self.use_edge_node {
            return Err(Error::Config(
                "combined DOFs with an edge node is not a supported representation".into(),
            ));
        }
        Ok(())
    }

    pub fn variant(&self) -> Result<Variant> {
        self.validate()?;
        Ok(match (self.dof_mode, self.use_edge_node, self.isolated_loading) {
            (DofMode::Separate, false, false) => Variant::A,
            (DofMode::Separate, false, true) => Variant::B,
            (DofMode::Separate, true, false) => Variant::C,
            (DofMode::Separate, true, true) => Variant::D,
            (DofMode::Combined, _, false) => Variant::E,
            (DofMode::Combined, _, true) => Variant::F,
        })
    }
}

/// Graph representation: the six heterogeneous variants and the
/// homogeneous baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    A,
    B,
    C,
    D,
    E,
    F,
    Homogeneous,
}

impl Variant {
    pub const HETERO: [Variant; 6] = [
        Variant::A,
        Variant::B,
        Variant::C,
        Variant::D,
        Variant::E,
        Variant::F,
    ];

    pub fn spec(self) -> Option<VariantSpec> {
        use DofMode::*;
        let (dof_mode, use_edge_node, isolated_loading) = match self {
            Variant::A => (Separate, false, false),
            Variant::B => (Separate, false, true),
            Variant::C => (Separate, true, false),
            Variant::D => (Separate, true, true),
            Variant::E => (Combined, false, false),
            Variant::F => (Combined, false, true),
            Variant::Homogeneous => return None,
        };
        Some(VariantSpec {
            dof_mode,
            use_edge_node,
            isolated_loading,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::A => "a",
            Variant::B => "b",
            Variant::C => "c",
            Variant::D => "d",
            Variant::E => "e",
            Variant::F => "f",
            Variant::Homogeneous => "homogeneous",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Variant::A => "separate DOFs",
            Variant::B => "separate DOFs + isolated loading node",
            Variant::C => "separate DOFs + edge node",
            Variant::D => "separate DOFs + edge node + isolated loading node",
            Variant::E => "combined DOFs",
            Variant::F => "combined DOFs + isolated loading node",
            Variant::Homogeneous => "homogeneous (all inputs concatenated per unit)",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let all = [
            Variant::A,
            Variant::B,
            Variant::C,
            Variant::D,
            Variant::E,
            Variant::F,
            Variant::Homogeneous,
        ];
        all.into_iter()
            .find(|v| v.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| {
                Error::Usage(format!(
                    "unknown variant `{s}`; legal variants: a, b, c, d, e, f, homogeneous"
                ))
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combined_with_edge_node_rejected() {
        let v = VariantSpec {
            dof_mode: DofMode::Combined,
            use_edge_node: true,
            isolated_loading: false,
        };
        assert!(matches!(v.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn variant_spec_round_trip() {
        for v in Variant::HETERO {
            assert_eq!(v.spec().unwrap().variant().unwrap(), v);
        }
    }

    #[test]
    fn parse_variants() {
        assert_eq!("d".parse::<Variant>().unwrap(), Variant::D);
        assert_eq!("homogeneous".parse::<Variant>().unwrap(), Variant::Homogeneous);
        let err = "g".parse::<Variant>().unwrap_err();
        assert!(err.to_string().contains("a, b, c, d, e, f"));
    }
}
