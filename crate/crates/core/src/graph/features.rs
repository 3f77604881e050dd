//! Raw node feature vectors. Widths are fixed per (variant, node type).

use serde::{Deserialize, Serialize};

use super::types::{NodeType, Variant};
use crate::error::{Error, Result};
use crate::panel::{DofKind, EdgeBc, LoadProfile, PhysicalEdge, StructuralUnit, PROFILE_SAMPLES};

pub const GEOMETRY_WIDTH: usize = 12;
pub const LOAD_WIDTH: usize = PROFILE_SAMPLES;
pub const DOF_WIDTH: usize = PROFILE_SAMPLES + 1;
pub const COMBINED_WIDTH: usize = 6 * PROFILE_SAMPLES + 1;
pub const EDGE_NODE_WIDTH: usize = 6;
pub const HOMOGENEOUS_WIDTH: usize = GEOMETRY_WIDTH + 4 * COMBINED_WIDTH + LOAD_WIDTH;

/// Reference scales dividing raw SI quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureScales {
    /// Long-side extent, m.
    pub length: f64,
    /// Short-side extent, m.
    pub width: f64,
    /// Thickness, m.
    pub thickness: f64,
    /// Centroid coordinates, m.
    pub position: f64,
    /// Pressure, Pa.
    pub pressure: f64,
    /// Displacement, m (1e-3 gives millimetres).
    pub displacement: f64,
    /// Rotation, rad (1e-3 gives milliradians).
    pub rotation: f64,
}

impl Default for FeatureScales {
    fn default() -> Self {
        Self {
            length: 3.0,
            width: 1.0,
            thickness: 0.02,
            position: 3.0,
            pressure: 1e5,
            displacement: 1e-3,
            rotation: 1e-3,
        }
    }
}

pub fn feature_width(variant: Variant, t: NodeType) -> usize {
    match (variant, t) {
        (Variant::Homogeneous, _) => HOMOGENEOUS_WIDTH,
        (v, NodeType::Geometry) => {
            let isolated = v.spec().is_some_and(|s| s.isolated_loading);
            GEOMETRY_WIDTH + if isolated { 0 } else { LOAD_WIDTH }
        }
        (_, NodeType::Loading) => LOAD_WIDTH,
        (_, NodeType::BoundaryDof(_)) => DOF_WIDTH,
        (_, NodeType::BoundaryCombined) => COMBINED_WIDTH,
        (_, NodeType::EdgeNode) => EDGE_NODE_WIDTH,
    }
}

/// `[kind one-hot (3), long extent, short extent, thickness, centroid (3),
/// normal (3)]`, scaled.
pub fn geometry_features(u: &StructuralUnit, s: &FeatureScales) -> [f64; GEOMETRY_WIDTH] {
    let mut f = [0.0; GEOMETRY_WIDTH];
    f[u.kind.index()] = 1.0;
    f[3] = u.extent1 / s.length;
    f[4] = u.extent2 / s.width;
    f[5] = u.thickness / s.thickness;
    let c = u.centroid();
    let n = u.normal();
    for k in 0..3 {
        f[6 + k] = c[k] / s.position;
        f[9 + k] = n[k];
    }
    f
}

pub fn load_features(l: &LoadProfile, s: &FeatureScales) -> [f64; LOAD_WIDTH] {
    l.samples.map(|p| p / s.pressure)
}

fn dof_profile(bc: &EdgeBc, k: DofKind, s: &FeatureScales) -> [f64; PROFILE_SAMPLES] {
    let scale = if k.is_rotation() {
        s.rotation
    } else {
        s.displacement
    };
    bc.profile(k).map(|v| v / scale)
}

/// Boundary features and mask bit. `Some(kind)` gives the separate-mode
/// vector (20 samples + mask), `None` the combined vector (120 + mask).
/// Unknown profiles yield zeros with mask 0; the network swaps in its null
/// embedding for those rows.
pub fn boundary_features(
    bc: &EdgeBc,
    dof: Option<DofKind>,
    mode_combined: bool,
    s: &FeatureScales,
) -> Result<(Vec<f64>, bool)> {
    match (dof, mode_combined) {
        (Some(_), true) => Err(Error::Usage(
            "a DOF kind cannot be requested in combined mode".into(),
        )),
        (None, false) => Err(Error::Usage("separate mode needs a DOF kind".into())),
        (Some(k), false) => {
            let known = bc.is_known(k);
            let mut f = vec![0.0; DOF_WIDTH];
            if known {
                f[..PROFILE_SAMPLES].copy_from_slice(&dof_profile(bc, k, s));
                f[PROFILE_SAMPLES] = 1.0;
            }
            Ok((f, known))
        }
        (None, true) => {
            let known = bc.fully_known();
            let mut f = vec![0.0; COMBINED_WIDTH];
            if known {
                for k in DofKind::ALL {
                    let o = k.index() * PROFILE_SAMPLES;
                    f[o..o + PROFILE_SAMPLES].copy_from_slice(&dof_profile(bc, k, s));
                }
                f[6 * PROFILE_SAMPLES] = 1.0;
            }
            Ok((f, known))
        }
    }
}

/// `[orientation one-hot (3), length, adjacent units / 4, known]`.
pub fn edge_node_features(e: &PhysicalEdge, known: bool, s: &FeatureScales) -> [f64; EDGE_NODE_WIDTH] {
    let mut f = [0.0; EDGE_NODE_WIDTH];
    f[e.orientation.index()] = 1.0;
    f[3] = e.length() / s.length;
    f[4] = e.adjacency.len() as f64 / 4.0;
    f[5] = f64::from(u8::from(known));
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::{PanelGeometry, PanelTopology};

    #[test]
    fn widths() {
        assert_eq!(COMBINED_WIDTH, 121);
        assert_eq!(HOMOGENEOUS_WIDTH, 516);
        assert_eq!(feature_width(Variant::A, NodeType::Geometry), 32);
        assert_eq!(feature_width(Variant::B, NodeType::Geometry), 12);
    }

    #[test]
    fn thickness_normalization() {
        let g = PanelGeometry::flat_plate(3.0, 3.0, 0.010);
        let topo = PanelTopology::new(&g);
        let f = geometry_features(&topo.units[0], &FeatureScales::default());
        assert!((f[5] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn translated_units_differ_only_in_centroid() {
        let g = PanelGeometry {
            length: 3.0,
            width: 3.0,
            plate_thickness: 0.01,
            web_thickness: 0.006,
            web_height: 0.1,
            flange_thickness: 0.006,
            flange_width: 0.08,
            n_stiffeners: 2,
        };
        let topo = PanelTopology::new(&g);
        let s = FeatureScales::default();
        let (w0, w1) = (&topo.units[3], &topo.units[4]);
        let (a, b) = (geometry_features(w0, &s), geometry_features(w1, &s));
        for i in 0..GEOMETRY_WIDTH {
            if !(6..9).contains(&i) {
                assert_eq!(a[i], b[i]);
            }
        }
        assert_ne!(a[7], b[7]);
    }

    #[test]
    fn uniform_known_profile() {
        let mut bc = EdgeBc::unknown(0);
        bc.profiles[DofKind::U3.index()] = [1e-3; PROFILE_SAMPLES];
        bc.known = [true; 6];
        let (f, mask) =
            boundary_features(&bc, Some(DofKind::U3), false, &FeatureScales::default()).unwrap();
        assert!(mask);
        assert!(f[..20].iter().all(|v| (*v - 1.0).abs() < 1e-12));
        assert_eq!(f[20], 1.0);
    }

    #[test]
    fn unknown_profile_is_null_marker() {
        let bc = EdgeBc::unknown(3);
        let (f, mask) = boundary_features(&bc, None, true, &FeatureScales::default()).unwrap();
        assert!(!mask);
        assert_eq!(f.len(), 121);
        assert!(f.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn dof_in_combined_mode_is_usage_error() {
        let bc = EdgeBc::unknown(0);
        let r = boundary_features(&bc, Some(DofKind::R1), true, &FeatureScales::default());
        assert!(matches!(r, Err(Error::Usage(_))));
    }
}
