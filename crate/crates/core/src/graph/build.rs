use std::collections::{BTreeMap, BTreeSet};

use super::catalog::RelationCatalog;
use super::features::{
    boundary_features, edge_node_features, feature_width, geometry_features, load_features,
    FeatureScales,
};
use super::types::{DofMode, NodeType, RelationKind, RelationType, Variant};
use crate::error::{Error, Result};
use crate::panel::{DofKind, PanelCase};

/// Nodes of one type: a row-major feature matrix and a known bit per row.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet {
    pub node_type: NodeType,
    pub count: usize,
    pub width: usize,
    pub features: Vec<f64>,
    pub known: Vec<bool>,
}

impl NodeSet {
    fn empty(node_type: NodeType, width: usize) -> Self {
        Self {
            node_type,
            count: 0,
            width,
            features: Vec::new(),
            known: Vec::new(),
        }
    }

    fn push(&mut self, row: &[f64], known: bool) -> usize {
        debug_assert_eq!(row.len(), self.width);
        self.features.extend_from_slice(row);
        self.known.push(known);
        self.count += 1;
        self.count - 1
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.width..(i + 1) * self.width]
    }
}

/// Directed links of one relation type.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSet {
    pub relation: RelationType,
    pub src: Vec<usize>,
    pub dst: Vec<usize>,
}

impl EdgeSet {
    pub fn len(&self) -> usize {
        self.src.len()
    }

    pub fn is_empty(&self) -> bool {
        self.src.is_empty()
    }
}

/// Typed graph of one or more panels. Node sets follow the catalog's node
/// type order and edge sets its relation order; geometry node `i` of a
/// single-panel graph is structural unit `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeteroGraph {
    pub variant: Variant,
    pub nodes: Vec<NodeSet>,
    pub edges: Vec<EdgeSet>,
    /// Geometry-node range of each panel: panel `p` owns
    /// `geometry_offsets[p]..geometry_offsets[p + 1]`.
    pub geometry_offsets: Vec<usize>,
}

impl HeteroGraph {
    fn empty(catalog: &RelationCatalog) -> Self {
        Self {
            variant: catalog.variant,
            nodes: catalog
                .node_types
                .iter()
                .map(|t| NodeSet::empty(*t, feature_width(catalog.variant, *t)))
                .collect(),
            edges: catalog
                .relations
                .iter()
                .map(|r| EdgeSet {
                    relation: *r,
                    src: Vec::new(),
                    dst: Vec::new(),
                })
                .collect(),
            geometry_offsets: vec![0],
        }
    }

    pub fn catalog(&self) -> RelationCatalog {
        RelationCatalog::new(self.variant)
    }

    pub fn node_set(&self, t: NodeType) -> Option<&NodeSet> {
        self.nodes.iter().find(|n| n.node_type == t)
    }

    pub fn geometry_count(&self) -> usize {
        self.nodes[0].count
    }

    pub fn panel_count(&self) -> usize {
        self.geometry_offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(EdgeSet::len).sum()
    }

    fn link(&mut self, rel: usize, src: usize, dst: usize) {
        self.edges[rel].src.push(src);
        self.edges[rel].dst.push(dst);
    }

    /// Adds `src -> dst` under `r` and `dst -> src` under its reverse.
    fn link_both(
        &mut self,
        index: &BTreeMap<RelationType, usize>,
        r: RelationType,
        src: usize,
        dst: usize,
    ) {
        self.link(index[&r], src, dst);
        self.link(index[&r.reversed()], dst, src);
    }

    /// Disjoint union; every input must share one variant.
    pub fn union(graphs: &[&HeteroGraph]) -> Result<HeteroGraph> {
        let first = graphs
            .first()
            .ok_or_else(|| Error::Usage("cannot batch zero graphs".into()))?;
        let mut out = first.shell();
        let types: Vec<NodeType> = first.nodes.iter().map(|n| n.node_type).collect();
        let tidx = |t: NodeType| types.iter().position(|x| *x == t).expect("type in graph");
        for g in graphs {
            if g.variant != out.variant {
                return Err(Error::Validation(format!(
                    "cannot batch variant {} with variant {}",
                    g.variant, out.variant
                )));
            }
            let offsets: Vec<usize> = out.nodes.iter().map(|n| n.count).collect();
            for (dst, src) in out.nodes.iter_mut().zip(&g.nodes) {
                dst.features.extend_from_slice(&src.features);
                dst.known.extend_from_slice(&src.known);
                dst.count += src.count;
            }
            for (dst, src) in out.edges.iter_mut().zip(&g.edges) {
                let (so, to) = (offsets[tidx(src.relation.src)], offsets[tidx(src.relation.dst)]);
                dst.src.extend(src.src.iter().map(|i| i + so));
                dst.dst.extend(src.dst.iter().map(|i| i + to));
            }
            let base = offsets[0];
            out.geometry_offsets
                .extend(g.geometry_offsets[1..].iter().map(|o| o + base));
        }
        Ok(out)
    }

    fn shell(&self) -> HeteroGraph {
        HeteroGraph {
            variant: self.variant,
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeSet::empty(n.node_type, n.width))
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeSet {
                    relation: e.relation,
                    src: Vec::new(),
                    dst: Vec::new(),
                })
                .collect(),
            geometry_offsets: vec![0],
        }
    }

    /// Reorders the nodes of type set `type_pos`: new node `i` is old node
    /// `perm[i]`. Links are relabelled to match.
    pub fn permute_nodes(&self, type_pos: usize, perm: &[usize]) -> HeteroGraph {
        let mut g = self.clone();
        let set = &self.nodes[type_pos];
        assert_eq!(perm.len(), set.count);
        let mut inv = vec![0; perm.len()];
        for (i, p) in perm.iter().enumerate() {
            inv[*p] = i;
        }
        let out = &mut g.nodes[type_pos];
        out.features.clear();
        out.known.clear();
        for p in perm {
            out.features.extend_from_slice(set.row(*p));
            out.known.push(set.known[*p]);
        }
        let t = set.node_type;
        for e in &mut g.edges {
            if e.relation.src == t {
                e.src.iter_mut().for_each(|i| *i = inv[*i]);
            }
            if e.relation.dst == t {
                e.dst.iter_mut().for_each(|i| *i = inv[*i]);
            }
        }
        g
    }
}

/// Heterogeneous graph of one panel under `variant`.
pub fn build_graph(case: &PanelCase, variant: Variant, scales: &FeatureScales) -> Result<HeteroGraph> {
    let Some(spec) = variant.spec() else {
        return build_homogeneous(case, scales);
    };
    spec.validate()?;
    let topo = case.validate()?;
    let catalog = RelationCatalog::new(variant);
    let index = catalog.relation_index();
    let pos = |t: NodeType| catalog.type_index(t).expect("type in catalog");
    let mut g = HeteroGraph::empty(&catalog);

    for u in &topo.units {
        let mut row = geometry_features(u, scales).to_vec();
        if spec.isolated_loading {
            let l = load_features(&case.loads[u.id], scales);
            g.nodes[pos(NodeType::Loading)].push(&l, true);
        } else {
            row.extend_from_slice(&load_features(&case.loads[u.id], scales));
        }
        g.nodes[0].push(&row, true);
    }
    g.geometry_offsets.push(topo.units.len());
    if spec.isolated_loading {
        let r = RelationType {
            src: NodeType::Geometry,
            kind: RelationKind::Load,
            dst: NodeType::Loading,
        };
        for u in &topo.units {
            g.link_both(&index, r, u.id, u.id);
        }
    }

    let combined = spec.dof_mode == DofMode::Combined;
    for e in &topo.edges {
        let bc = &case.edge_bcs[e.id];
        if spec.use_edge_node {
            let en = g.nodes[pos(NodeType::EdgeNode)].push(
                &edge_node_features(e, bc.fully_known(), scales),
                bc.fully_known(),
            );
            for (unit, rel) in &e.adjacency {
                let r = RelationType {
                    src: NodeType::Geometry,
                    kind: RelationKind::Spatial(*rel),
                    dst: NodeType::EdgeNode,
                };
                g.link_both(&index, r, *unit, en);
            }
            for k in DofKind::ALL.into_iter().filter(|k| bc.is_known(*k)) {
                let t = NodeType::BoundaryDof(k);
                let (f, known) = boundary_features(bc, Some(k), false, scales)?;
                let dn = g.nodes[pos(t)].push(&f, known);
                let r = RelationType {
                    src: NodeType::EdgeNode,
                    kind: RelationKind::Dof(k),
                    dst: t,
                };
                g.link_both(&index, r, en, dn);
            }
        } else {
            let targets: Vec<(NodeType, usize)> = if combined {
                let (f, known) = boundary_features(bc, None, true, scales)?;
                let t = NodeType::BoundaryCombined;
                vec![(t, g.nodes[pos(t)].push(&f, known))]
            } else {
                DofKind::ALL
                    .into_iter()
                    .map(|k| {
                        let t = NodeType::BoundaryDof(k);
                        let (f, known) = boundary_features(bc, Some(k), false, scales)?;
                        Ok((t, g.nodes[pos(t)].push(&f, known)))
                    })
                    .collect::<Result<_>>()?
            };
            for (unit, rel) in &e.adjacency {
                for (t, bn) in &targets {
                    let r = RelationType {
                        src: NodeType::Geometry,
                        kind: RelationKind::Spatial(*rel),
                        dst: *t,
                    };
                    g.link_both(&index, r, *unit, *bn);
                }
            }
        }
    }
    Ok(g)
}

/// One node per unit carrying geometry, its four edges' combined profiles
/// and its load; unlabelled links join units sharing an edge.
pub fn build_homogeneous(case: &PanelCase, scales: &FeatureScales) -> Result<HeteroGraph> {
    let topo = case.validate()?;
    let catalog = RelationCatalog::new(Variant::Homogeneous);
    let mut g = HeteroGraph::empty(&catalog);
    for u in &topo.units {
        let mut row = geometry_features(u, scales).to_vec();
        for e in topo.unit_edges[u.id] {
            row.extend(boundary_features(&case.edge_bcs[e], None, true, scales)?.0);
        }
        row.extend_from_slice(&load_features(&case.loads[u.id], scales));
        g.nodes[0].push(&row, true);
    }
    g.geometry_offsets.push(topo.units.len());
    let mut pairs = BTreeSet::new();
    for e in &topo.edges {
        for (a, _) in &e.adjacency {
            for (b, _) in &e.adjacency {
                if a != b {
                    pairs.insert((*a, *b));
                }
            }
        }
    }
    for (a, b) in pairs {
        g.link(0, a, b);
    }
    Ok(g)
}

/// Structural problems found in a graph; empty when valid.
pub fn validate_graph(g: &HeteroGraph) -> Vec<String> {
    let mut out = Vec::new();
    let catalog = g.catalog();
    if g.nodes.len() != catalog.node_types.len() {
        out.push(format!(
            "{} node sets, catalog lists {}",
            g.nodes.len(),
            catalog.node_types.len()
        ));
        return out;
    }
    for (set, t) in g.nodes.iter().zip(&catalog.node_types) {
        if set.node_type != *t {
            out.push(format!("node set {} where catalog expects {}", set.node_type, t));
            continue;
        }
        let w = feature_width(g.variant, *t);
        if set.width != w {
            out.push(format!("{t}: feature width {} (schema {w})", set.width));
        }
        if set.features.len() != set.count * set.width || set.known.len() != set.count {
            out.push(format!("{t}: matrix size does not match {} rows", set.count));
            continue;
        }
        let bad = set.features.iter().filter(|v| !v.is_finite()).count();
        if bad > 0 {
            out.push(format!("{t}: {bad} non-finite feature entries"));
        }
        if t.has_null_slot() {
            for i in 0..set.count {
                let row = set.row(i);
                let mask = row[set.width - 1];
                if (mask == 1.0) != set.known[i] {
                    out.push(format!("{t} node {i}: mask column disagrees with known bit"));
                } else if !set.known[i] && row.iter().any(|v| *v != 0.0) {
                    out.push(format!("{t} node {i}: unknown row carries values"));
                }
            }
        }
    }
    if g.edges.len() != catalog.relations.len() {
        out.push(format!(
            "{} edge sets, catalog lists {}",
            g.edges.len(),
            catalog.relations.len()
        ));
        return out;
    }
    for (e, r) in g.edges.iter().zip(&catalog.relations) {
        if e.relation != *r {
            out.push(format!("edge set {} where catalog expects {}", e.relation, r));
            continue;
        }
        if e.src.len() != e.dst.len() {
            out.push(format!("{r}: {} sources, {} targets", e.src.len(), e.dst.len()));
            continue;
        }
        let count = |t: NodeType| g.node_set(t).map_or(0, |s| s.count);
        let (ns, nd) = (count(r.src), count(r.dst));
        for (i, (s, d)) in e.src.iter().zip(&e.dst).enumerate() {
            if *s >= ns {
                out.push(format!("{r} link {i}: source {s} out of range ({ns} nodes)"));
            }
            if *d >= nd {
                out.push(format!("{r} link {i}: target {d} out of range ({nd} nodes)"));
            }
        }
    }
    let offs = &g.geometry_offsets;
    if offs.first() != Some(&0)
        || offs.last() != Some(&g.geometry_count())
        || offs.windows(2).any(|w| w[0] > w[1])
    {
        out.push("geometry offsets do not partition the geometry nodes".into());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::{BoundaryField, CaseSpec, LoadProfile, MaterialLaw, PanelGeometry, PanelTopology};

    fn flat() -> PanelCase {
        let geometry = PanelGeometry::flat_plate(3.0, 3.0, 0.01);
        let topo = PanelTopology::new(&geometry);
        PanelCase {
            edge_bcs: BoundaryField::uniform([0.0, 0.0, 1e-3]).edge_bcs(&topo),
            loads: vec![LoadProfile::zero(0)],
            geometry,
            material: MaterialLaw::default(),
            targets: None,
        }
    }

    fn two_stiffener_case() -> PanelCase {
        let mut spec = CaseSpec::default();
        spec.ranges.n_stiffeners = (2, 2);
        spec.generate(4).unwrap()
    }

    #[test]
    fn variant_e_counts_with_isolated_loading() {
        let case = two_stiffener_case();
        let topo = case.topology();
        let g = build_graph(&case, Variant::F, &FeatureScales::default()).unwrap();
        assert_eq!(g.node_set(NodeType::Geometry).unwrap().count, 7);
        assert_eq!(g.node_set(NodeType::Loading).unwrap().count, 7);
        assert_eq!(
            g.node_set(NodeType::BoundaryCombined).unwrap().count,
            topo.edges.len()
        );
        assert!(validate_graph(&g).is_empty(), "{:?}", validate_graph(&g));
    }

    #[test]
    fn flat_plate_variant_e() {
        let g = build_graph(&flat(), Variant::E, &FeatureScales::default()).unwrap();
        assert_eq!(g.geometry_count(), 1);
        assert_eq!(g.node_set(NodeType::BoundaryCombined).unwrap().count, 4);
        let fwd: usize = g
            .edges
            .iter()
            .filter(|e| e.relation.src == NodeType::Geometry)
            .map(EdgeSet::len)
            .sum();
        assert_eq!(fwd, 4);
        assert_eq!(g.edge_count(), 8);
    }

    #[test]
    fn every_variant_validates_and_is_deterministic() {
        let case = CaseSpec::default().generate(9).unwrap();
        for v in Variant::HETERO.into_iter().chain([Variant::Homogeneous]) {
            let a = build_graph(&case, v, &FeatureScales::default()).unwrap();
            let b = build_graph(&case, v, &FeatureScales::default()).unwrap();
            assert_eq!(a, b);
            assert!(validate_graph(&a).is_empty(), "{v}: {:?}", validate_graph(&a));
        }
    }

    #[test]
    fn shared_edges_link_each_adjacent_unit_once() {
        let case = two_stiffener_case();
        let topo = case.topology();
        let g = build_graph(&case, Variant::E, &FeatureScales::default()).unwrap();
        for e in &topo.edges {
            let mut rels = Vec::new();
            for set in g.edges.iter().filter(|s| s.relation.src == NodeType::Geometry) {
                for (s, d) in set.src.iter().zip(&set.dst) {
                    if *d == e.id {
                        rels.push((set.relation.kind, *s));
                    }
                }
            }
            assert_eq!(rels.len(), e.adjacency.len());
            let kinds: BTreeSet<_> = rels.iter().map(|r| r.0).collect();
            assert_eq!(kinds.len(), rels.len());
        }
    }

    #[test]
    fn homogeneous_shapes() {
        let g = build_homogeneous(&flat(), &FeatureScales::default()).unwrap();
        assert_eq!(g.geometry_count(), 1);
        assert_eq!(g.nodes[0].width, 516);
        assert_eq!(g.edge_count(), 0);
        let g = build_homogeneous(&two_stiffener_case(), &FeatureScales::default()).unwrap();
        let links: BTreeSet<_> = g.edges[0].src.iter().zip(&g.edges[0].dst).collect();
        for (a, b) in &links {
            assert!(links.contains(&(*b, *a)));
        }
    }

    #[test]
    fn validation_reports_injected_faults() {
        let mut g = build_graph(&flat(), Variant::E, &FeatureScales::default()).unwrap();
        let n = g.node_set(NodeType::BoundaryCombined).unwrap().count;
        g.edges[0].dst[0] = n;
        assert_eq!(validate_graph(&g).len(), 1);
        let mut g = build_graph(&flat(), Variant::E, &FeatureScales::default()).unwrap();
        g.nodes[0].features[2] = f64::NAN;
        assert_eq!(validate_graph(&g).len(), 1);
    }

    #[test]
    fn edge_node_variants_skip_unknown_dofs() {
        let case = two_stiffener_case();
        let topo = case.topology();
        let known = topo.edges.iter().filter(|e| e.on_boundary).count();
        let g = build_graph(&case, Variant::D, &FeatureScales::default()).unwrap();
        assert_eq!(g.node_set(NodeType::EdgeNode).unwrap().count, topo.edges.len());
        for k in DofKind::ALL {
            assert_eq!(g.node_set(NodeType::BoundaryDof(k)).unwrap().count, known);
        }
    }

    #[test]
    fn union_offsets_indices() {
        let a = build_graph(&flat(), Variant::B, &FeatureScales::default()).unwrap();
        let b = build_graph(&two_stiffener_case(), Variant::B, &FeatureScales::default()).unwrap();
        let u = HeteroGraph::union(&[&a, &b]).unwrap();
        assert_eq!(u.geometry_offsets, vec![0, 1, 8]);
        assert_eq!(u.edge_count(), a.edge_count() + b.edge_count());
        assert!(validate_graph(&u).is_empty());
    }
}
