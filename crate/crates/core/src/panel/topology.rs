//! Decomposition of a panel into rectangular structural units and the
//! physical edge lines they share.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::geometry::PanelGeometry;

/// Global coordinate axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    /// The two remaining axes, in increasing order.
    pub fn others(self) -> [Axis; 2] {
        match self {
            Axis::X => [Axis::Y, Axis::Z],
            Axis::Y => [Axis::X, Axis::Z],
            Axis::Z => [Axis::X, Axis::Y],
        }
    }
}

/// A signed global axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Direction {
    pub axis: Axis,
    pub positive: bool,
}

impl Direction {
    pub const fn pos(axis: Axis) -> Self {
        Self { axis, positive: true }
    }

    pub const fn neg(axis: Axis) -> Self {
        Self { axis, positive: false }
    }

    pub fn flipped(self) -> Self {
        Self {
            axis: self.axis,
            positive: !self.positive,
        }
    }

    pub fn vector(self) -> [f64; 3] {
        let mut v = [0.0; 3];
        v[self.axis.index()] = if self.positive { 1.0 } else { -1.0 };
        v
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.positive { '+' } else { '-' };
        write!(f, "{sign}{:?}", self.axis)
    }
}

/// Where a unit lies relative to an edge line: the edge's global orientation
/// and the in-plane direction pointing from the edge into the unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SpatialRelation {
    orientation: Axis,
    placement: Direction,
}

impl SpatialRelation {
    pub const COUNT: usize = 12;

    pub fn new(orientation: Axis, placement: Direction) -> Option<Self> {
        (orientation != placement.axis).then_some(Self {
            orientation,
            placement,
        })
    }

    pub fn orientation(&self) -> Axis {
        self.orientation
    }

    pub fn placement(&self) -> Direction {
        self.placement
    }

    /// Dense index in `0..12`.
    pub fn index(&self) -> usize {
        let others = self.orientation.others();
        let which = usize::from(self.placement.axis == others[1]);
        self.orientation.index() * 4 + which * 2 + usize::from(!self.placement.positive)
    }

    pub fn from_index(i: usize) -> Option<Self> {
        if i >= Self::COUNT {
            return None;
        }
        let orientation = Axis::ALL[i / 4];
        let axis = orientation.others()[(i % 4) / 2];
        let placement = Direction {
            axis,
            positive: i % 2 == 0,
        };
        Some(Self {
            orientation,
            placement,
        })
    }

    pub fn all() -> impl Iterator<Item = SpatialRelation> {
        (0..Self::COUNT).filter_map(Self::from_index)
    }
}

impl fmt::Display for SpatialRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}{}", self.orientation, self.placement)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum UnitKind {
    PlateStrip,
    Web,
    Flange,
}

impl UnitKind {
    pub const ALL: [UnitKind; 3] = [UnitKind::PlateStrip, UnitKind::Web, UnitKind::Flange];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// One flat rectangular constituent of the panel, described by its
/// mid-surface. `axis1` is the longer in-plane direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralUnit {
    pub id: usize,
    pub kind: UnitKind,
    /// Index among units of the same kind.
    pub index: usize,
    pub origin: [f64; 3],
    pub axis1: Direction,
    pub axis2: Direction,
    pub extent1: f64,
    pub extent2: f64,
    pub thickness: f64,
}

impl StructuralUnit {
    fn new(
        id: usize,
        kind: UnitKind,
        index: usize,
        origin: [f64; 3],
        dirs: (Direction, Direction),
        extents: (f64, f64),
        thickness: f64,
    ) -> Self {
        let (mut a1, mut a2) = dirs;
        let (mut e1, mut e2) = extents;
        if e2 > e1 {
            std::mem::swap(&mut a1, &mut a2);
            std::mem::swap(&mut e1, &mut e2);
        }
        Self {
            id,
            kind,
            index,
            origin,
            axis1: a1,
            axis2: a2,
            extent1: e1,
            extent2: e2,
            thickness,
        }
    }

    /// Point at local coordinates `(s1, s2)` on the mid-surface.
    pub fn point(&self, s1: f64, s2: f64) -> [f64; 3] {
        let a = self.axis1.vector();
        let b = self.axis2.vector();
        std::array::from_fn(|i| self.origin[i] + s1 * a[i] + s2 * b[i])
    }

    pub fn centroid(&self) -> [f64; 3] {
        self.point(0.5 * self.extent1, 0.5 * self.extent2)
    }

    pub fn normal(&self) -> [f64; 3] {
        cross(self.axis1.vector(), self.axis2.vector())
    }

    pub fn area(&self) -> f64 {
        self.extent1 * self.extent2
    }

    /// The four rectangle edges as `(start, end, inward direction)`, ordered
    /// `s1 = 0`, `s1 = extent1`, `s2 = 0`, `s2 = extent2`.
    pub fn local_edges(&self) -> [([f64; 3], [f64; 3], Direction); 4] {
        let (e1, e2) = (self.extent1, self.extent2);
        [
            (self.point(0.0, 0.0), self.point(0.0, e2), self.axis1),
            (self.point(e1, 0.0), self.point(e1, e2), self.axis1.flipped()),
            (self.point(0.0, 0.0), self.point(e1, 0.0), self.axis2),
            (self.point(0.0, e2), self.point(e1, e2), self.axis2.flipped()),
        ]
    }
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Splits the panel into `n + 1` plate strips, `n` webs and `n` flanges, in
/// that order.
pub fn structural_units(g: &PanelGeometry) -> Vec<StructuralUnit> {
    let n = g.n_stiffeners;
    let x = Direction::pos(Axis::X);
    let y = Direction::pos(Axis::Y);
    let z = Direction::pos(Axis::Z);
    let mut units = Vec::with_capacity(3 * n + 1);
    let ys: Vec<f64> = (0..=n + 1)
        .map(|i| {
            if i == n + 1 {
                g.width
            } else {
                i as f64 * g.stiffener_spacing()
            }
        })
        .collect();
    for i in 0..=n {
        units.push(StructuralUnit::new(
            units.len(),
            UnitKind::PlateStrip,
            i,
            [0.0, ys[i], 0.0],
            (x, y),
            (g.length, ys[i + 1] - ys[i]),
            g.plate_thickness,
        ));
    }
    for j in 0..n {
        units.push(StructuralUnit::new(
            units.len(),
            UnitKind::Web,
            j,
            [0.0, g.stiffener_y(j), 0.0],
            (x, z),
            (g.length, g.web_height),
            g.web_thickness,
        ));
    }
    for j in 0..n {
        units.push(StructuralUnit::new(
            units.len(),
            UnitKind::Flange,
            j,
            [0.0, g.stiffener_y(j), g.web_height],
            (x, y),
            (g.length, g.flange_width),
            g.flange_thickness,
        ));
    }
    units
}

/// A straight edge line shared by one to four structural units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalEdge {
    pub id: usize,
    pub orientation: Axis,
    /// Start and end, ordered along `orientation`.
    pub endpoints: [[f64; 3]; 2],
    pub adjacency: Vec<(usize, SpatialRelation)>,
    /// Lies on the panel perimeter, where displacements are prescribed.
    pub on_boundary: bool,
}

impl PhysicalEdge {
    pub fn length(&self) -> f64 {
        let [a, b] = self.endpoints;
        ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2) + (b[2] - a[2]).powi(2)).sqrt()
    }

    /// Point at fraction `t` in `[0, 1]` along the edge.
    pub fn point_at(&self, t: f64) -> [f64; 3] {
        let [a, b] = self.endpoints;
        std::array::from_fn(|i| a[i] + t * (b[i] - a[i]))
    }
}

const QUANTUM: f64 = 1e-9;

fn quantize(p: [f64; 3]) -> [i64; 3] {
    p.map(|v| (v / QUANTUM).round() as i64)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + b.abs())
}

/// Edge lines of the panel, each listed once with every adjacent unit.
/// Ids follow the order in which units first reference the line.
pub fn physical_edges(g: &PanelGeometry, units: &[StructuralUnit]) -> Vec<PhysicalEdge> {
    edge_map(g, units).0
}

/// Edges plus, per unit, the ids of its four edges in local order.
pub(crate) fn edge_map(
    g: &PanelGeometry,
    units: &[StructuralUnit],
) -> (Vec<PhysicalEdge>, Vec<[usize; 4]>) {
    let mut by_key: BTreeMap<([i64; 3], [i64; 3]), usize> = BTreeMap::new();
    let mut edges: Vec<PhysicalEdge> = Vec::new();
    let mut unit_edges = Vec::with_capacity(units.len());
    for unit in units {
        let mut ids = [0usize; 4];
        for (slot, (a, b, inward)) in unit.local_edges().into_iter().enumerate() {
            let (qa, qb) = (quantize(a), quantize(b));
            let (p0, p1, key) = if qa <= qb { (a, b, (qa, qb)) } else { (b, a, (qb, qa)) };
            let orientation = *Axis::ALL
                .iter()
                .find(|ax| (p1[ax.index()] - p0[ax.index()]).abs() > QUANTUM)
                .expect("degenerate edge");
            let relation =
                SpatialRelation::new(orientation, inward).expect("inward direction along edge");
            let id = *by_key.entry(key).or_insert_with(|| {
                edges.push(PhysicalEdge {
                    id: edges.len(),
                    orientation,
                    endpoints: [p0, p1],
                    adjacency: Vec::new(),
                    on_boundary: false,
                });
                edges.len() - 1
            });
            edges[id].adjacency.push((unit.id, relation));
            ids[slot] = id;
        }
        unit_edges.push(ids);
    }
    for e in &mut edges {
        let [a, b] = e.endpoints;
        let in_end_plane = (close(a[0], 0.0) && close(b[0], 0.0))
            || (close(a[0], g.length) && close(b[0], g.length));
        let plate_side = e.orientation == Axis::X
            && close(a[2], 0.0)
            && close(b[2], 0.0)
            && ((close(a[1], 0.0) && close(b[1], 0.0))
                || (close(a[1], g.width) && close(b[1], g.width)));
        e.on_boundary = in_end_plane || plate_side;
    }
    (edges, unit_edges)
}

/// Units and edges of one panel, with the unit-to-edge incidence.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelTopology {
    pub units: Vec<StructuralUnit>,
    pub edges: Vec<PhysicalEdge>,
    pub unit_edges: Vec<[usize; 4]>,
}

impl PanelTopology {
    pub fn new(g: &PanelGeometry) -> Self {
        let units = structural_units(g);
        let (edges, unit_edges) = edge_map(g, &units);
        Self {
            units,
            edges,
            unit_edges,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::geometry::{sample_panel, GeometryRanges};

    fn panel(n: usize) -> PanelGeometry {
        PanelGeometry {
            length: 3.0,
            width: 3.0,
            plate_thickness: 0.012,
            web_thickness: 0.008,
            web_height: 0.2,
            flange_thickness: 0.01,
            flange_width: 0.1,
            n_stiffeners: n,
        }
    }

    #[test]
    fn unit_counts() {
        assert_eq!(structural_units(&panel(2)).len(), 7);
        assert_eq!(structural_units(&panel(7)).len(), 22);
        let kinds: Vec<_> = structural_units(&panel(2)).iter().map(|u| u.kind).collect();
        assert_eq!(kinds.iter().filter(|k| **k == UnitKind::PlateStrip).count(), 3);
        assert_eq!(kinds.iter().filter(|k| **k == UnitKind::Web).count(), 2);
        assert_eq!(kinds.iter().filter(|k| **k == UnitKind::Flange).count(), 2);
    }

    #[test]
    fn strips_tile_the_width() {
        for n in 0..=7 {
            let g = panel(n);
            let total: f64 = structural_units(&g)
                .iter()
                .filter(|u| u.kind == UnitKind::PlateStrip)
                .map(|u| u.extent2)
                .sum();
            assert!((total - g.width).abs() < 1e-9);
        }
    }

    #[test]
    fn webs_stand_on_plate_and_carry_flanges() {
        let g = panel(3);
        let units = structural_units(&g);
        for u in units.iter().filter(|u| u.kind == UnitKind::Web) {
            assert_eq!(u.origin[2], 0.0);
            assert_eq!(u.axis2, Direction::pos(Axis::Z));
        }
        for u in units.iter().filter(|u| u.kind == UnitKind::Flange) {
            assert_eq!(u.origin[2], g.web_height);
            assert_eq!(u.normal(), [0.0, 0.0, 1.0]);
        }
    }

    #[test]
    fn flat_plate_has_four_single_edges() {
        let g = PanelGeometry::flat_plate(3.0, 2.0, 0.01);
        let units = structural_units(&g);
        let edges = physical_edges(&g, &units);
        assert_eq!(edges.len(), 4);
        assert!(edges.iter().all(|e| e.adjacency.len() == 1 && e.on_boundary));
    }

    #[test]
    fn attachment_lines_join_two_strips_and_a_web() {
        let g = panel(2);
        let units = structural_units(&g);
        let edges = physical_edges(&g, &units);
        assert_eq!(edges.len(), 9 * 2 + 4);
        for j in 0..2 {
            let y = g.stiffener_y(j);
            let line = edges
                .iter()
                .find(|e| {
                    e.orientation == Axis::X
                        && e.endpoints.iter().all(|p| close(p[1], y) && p[2] == 0.0)
                })
                .unwrap();
            assert_eq!(line.adjacency.len(), 3);
            assert!(!line.on_boundary);
            let kinds: Vec<_> = line.adjacency.iter().map(|(u, _)| units[*u].kind).collect();
            assert_eq!(kinds.iter().filter(|k| **k == UnitKind::PlateStrip).count(), 2);
            assert_eq!(kinds.iter().filter(|k| **k == UnitKind::Web).count(), 1);
        }
    }

    #[test]
    fn adjacency_bounded_and_relations_distinct() {
        for seed in 0..50 {
            let g = sample_panel(&GeometryRanges::default(), seed).unwrap();
            let units = structural_units(&g);
            for e in physical_edges(&g, &units) {
                assert!((1..=4).contains(&e.adjacency.len()));
                let mut rels: Vec<_> = e.adjacency.iter().map(|(_, r)| *r).collect();
                rels.sort();
                rels.dedup();
                assert_eq!(rels.len(), e.adjacency.len());
                assert!(rels.iter().all(|r| r.orientation() == e.orientation));
            }
        }
    }

    #[test]
    fn deterministic_edges() {
        let g = panel(5);
        let u = structural_units(&g);
        assert_eq!(physical_edges(&g, &u), physical_edges(&g, &u));
    }

    #[test]
    fn spatial_relation_index_roundtrip() {
        let all: Vec<_> = SpatialRelation::all().collect();
        assert_eq!(all.len(), 12);
        for (i, r) in all.iter().enumerate() {
            assert_eq!(r.index(), i);
        }
        assert!(SpatialRelation::new(Axis::X, Direction::pos(Axis::X)).is_none());
    }

    #[test]
    fn units_do_not_overlap() {
        // Coplanar units (strips, flanges) must have disjoint interiors.
        let g = panel(7);
        let units = structural_units(&g);
        for a in &units {
            for b in &units {
                if a.id >= b.id || a.normal() != b.normal() || a.origin[2] != b.origin[2] {
                    continue;
                }
                if a.normal() == [0.0, 0.0, 1.0] {
                    let (a0, a1) = (a.origin[1], a.origin[1] + a.extent2);
                    let (b0, b1) = (b.origin[1], b.origin[1] + b.extent2);
                    assert!(a1 <= b0 + 1e-12 || b1 <= a0 + 1e-12, "{a:?} overlaps {b:?}");
                }
            }
        }
    }
}
