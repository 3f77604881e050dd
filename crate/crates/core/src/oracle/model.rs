//! Beam-grid idealisation of a panel and its static solution.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::banded::SymBand;
use super::frame::{local_stiffness, rotation, to_global, to_local, Mat12, Section};
use super::resample::interp_uniform;
use crate::error::{Error, Result};
use crate::panel::{Axis, DofKind, PanelCase, UnitKind};

/// Grid divisions per structural unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeshDensity {
    /// Divisions along the stiffener direction.
    pub along: usize,
    /// Divisions across a plate strip.
    pub between: usize,
    /// Divisions over the web height.
    pub web: usize,
    /// Divisions across the flange.
    pub flange: usize,
}

impl Default for MeshDensity {
    fn default() -> Self {
        Self {
            along: 20,
            between: 4,
            web: 2,
            flange: 2,
        }
    }
}

impl MeshDensity {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("along", self.along),
            ("between", self.between),
            ("web", self.web),
            ("flange", self.flange),
        ] {
            if v < 2 {
                return Err(Error::Config(format!("mesh density `{name}` = {v}, must be at least 2")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    pub mesh: MeshDensity,
    /// Fraction of the tributary breadth carried by plate-strip members
    /// running along the stiffeners.
    pub effective_breadth: f64,
    /// Largest accepted relative residual of the constrained system.
    pub residual_tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            mesh: MeshDensity::default(),
            effective_breadth: 1.0,
            residual_tol: 1e-10,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        self.mesh.validate()?;
        if !(self.effective_breadth > 0.0 && self.effective_breadth <= 1.0) {
            return Err(Error::Config(format!(
                "effective_breadth = {} must lie in (0, 1]",
                self.effective_breadth
            )));
        }
        if !(self.residual_tol > 0.0) {
            return Err(Error::Config(format!(
                "residual_tol = {} must be positive",
                self.residual_tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub nodes: [usize; 2],
    pub section: Section,
    /// Reference for the member's local z axis.
    pub local_z: [f64; 3],
}

/// Node and member numbering of one unit's lattice. Node `(i1, i2)` sits at
/// `lattice[i2 * (m1 + 1) + i1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitLattice {
    pub unit_id: usize,
    pub m1: usize,
    pub m2: usize,
    pub extent1: f64,
    pub extent2: f64,
    pub nodes: Vec<usize>,
    /// Members along axis 1: `along1[i2 * m1 + i1]` joins `(i1, i2)` to `(i1 + 1, i2)`.
    pub along1: Vec<usize>,
    /// Members along axis 2: `along2[i1 * m2 + i2]` joins `(i1, i2)` to `(i1, i2 + 1)`.
    pub along2: Vec<usize>,
}

impl UnitLattice {
    pub fn node(&self, i1: usize, i2: usize) -> usize {
        self.nodes[i2 * (self.m1 + 1) + i1]
    }
}

/// Nodes, frame members, prescribed DOFs and nodal loads. Six DOFs per node
/// in global axes: `u1 u2 u3 r1 r2 r3`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrillageModel {
    pub youngs_modulus: f64,
    pub shear_modulus: f64,
    pub nodes: Vec<[f64; 3]>,
    pub members: Vec<Member>,
    /// Prescribed value per DOF, `None` where free.
    pub prescribed: Vec<Option<f64>>,
    pub loads: Vec<f64>,
    pub lattices: Vec<UnitLattice>,
    pub residual_tol: f64,
}

impl GrillageModel {
    pub fn new(youngs_modulus: f64, shear_modulus: f64) -> Self {
        Self {
            youngs_modulus,
            shear_modulus,
            nodes: Vec::new(),
            members: Vec::new(),
            prescribed: Vec::new(),
            loads: Vec::new(),
            lattices: Vec::new(),
            residual_tol: 1e-10,
        }
    }

    pub fn add_node(&mut self, p: [f64; 3]) -> usize {
        self.nodes.push(p);
        self.prescribed.extend([None; 6]);
        self.loads.extend([0.0; 6]);
        self.nodes.len() - 1
    }

    pub fn add_member(&mut self, a: usize, b: usize, section: Section, local_z: [f64; 3]) -> usize {
        self.members.push(Member {
            nodes: [a, b],
            section,
            local_z,
        });
        self.members.len() - 1
    }

    /// Fixes one DOF unless it is already fixed.
    pub fn prescribe(&mut self, node: usize, dof: DofKind, value: f64) {
        let slot = &mut self.prescribed[6 * node + dof.index()];
        if slot.is_none() {
            *slot = Some(value);
        }
    }

    pub fn add_load(&mut self, node: usize, dof: DofKind, value: f64) {
        self.loads[6 * node + dof.index()] += value;
    }

    pub fn dof_count(&self) -> usize {
        6 * self.nodes.len()
    }

    /// Member stiffness in global axes and the member rotation.
    pub fn member_matrix(&self, m: &Member) -> (Mat12, [[f64; 3]; 3], f64) {
        let (r, len) = rotation(self.nodes[m.nodes[0]], self.nodes[m.nodes[1]], m.local_z);
        let k = local_stiffness(self.youngs_modulus, self.shear_modulus, len, &m.section);
        (to_global(&k, &r), r, len)
    }

    fn member_dofs(m: &Member) -> [usize; 12] {
        std::array::from_fn(|i| 6 * m.nodes[i / 6] + i % 6)
    }

    /// Full unconstrained stiffness matrix, row-major. Intended for small
    /// models.
    pub fn assemble_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dof_count();
        let mut k = vec![vec![0.0; n]; n];
        for m in &self.members {
            let (kg, _, _) = self.member_matrix(m);
            let dofs = Self::member_dofs(m);
            for i in 0..12 {
                for j in 0..12 {
                    k[dofs[i]][dofs[j]] += kg[i][j];
                }
            }
        }
        k
    }

    fn dof_label(&self, dof: usize) -> String {
        let p = self.nodes[dof / 6];
        format!(
            "node {} ({:.3}, {:.3}, {:.3}) {}",
            dof / 6,
            p[0],
            p[1],
            p[2],
            DofKind::ALL[dof % 6].name()
        )
    }
}

/// Nodal displacements and member end forces of a solved model.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    /// Per node: three translations (m) and three rotations (rad).
    pub displacements: Vec<[f64; 6]>,
    /// Per member, local axes: `[N V_y V_z T M_y M_z]` at each end.
    pub member_forces: Vec<[f64; 12]>,
    /// `‖K u − f‖ / ‖f‖` over the free DOFs (absolute when `f = 0`).
    pub residual: f64,
}

/// Solves the constrained linear system by banded Cholesky with diagonal
/// equilibration and iterative refinement.
pub fn solve_static(m: &GrillageModel) -> Result<SolveResult> {
    let ndof = m.dof_count();
    let mut free_index = vec![usize::MAX; ndof];
    let mut free = Vec::new();
    for d in 0..ndof {
        if m.prescribed[d].is_none() {
            free_index[d] = free.len();
            free.push(d);
        }
    }
    let nf = free.len();
    let mut hb = 0;
    for mem in &m.members {
        let dofs = GrillageModel::member_dofs(mem);
        let fi: Vec<usize> = dofs.iter().map(|d| free_index[*d]).filter(|i| *i != usize::MAX).collect();
        if let (Some(lo), Some(hi)) = (fi.iter().min(), fi.iter().max()) {
            hb = hb.max(hi - lo);
        }
    }

    let mut k = SymBand::zeros(nf, hb);
    let mut rhs: Vec<f64> = free.iter().map(|d| m.loads[*d]).collect();
    let mut mats = Vec::with_capacity(m.members.len());
    for mem in &m.members {
        let (kg, r, _) = m.member_matrix(mem);
        let dofs = GrillageModel::member_dofs(mem);
        for i in 0..12 {
            let fi = free_index[dofs[i]];
            if fi == usize::MAX {
                continue;
            }
            for j in 0..12 {
                match m.prescribed[dofs[j]] {
                    Some(v) => rhs[fi] -= kg[i][j] * v,
                    None => {
                        let fj = free_index[dofs[j]];
                        if fj <= fi {
                            k.add(fi, fj, kg[i][j]);
                        }
                    }
                }
            }
        }
        mats.push((kg, r));
    }

    let mut zero_diag = Vec::new();
    let scale: Vec<f64> = (0..nf)
        .map(|i| {
            let d = k.diag(i);
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                zero_diag.push(i);
                1.0
            }
        })
        .collect();
    let mut a = k.clone();
    a.scale_sym(&scale);
    let (chol, mut bad) = a.cholesky(1e-12);
    bad.extend(zero_diag);
    if !bad.is_empty() {
        bad.sort_unstable();
        bad.dedup();
        let shown: Vec<String> = bad.iter().take(12).map(|i| m.dof_label(free[*i])).collect();
        let more = if bad.len() > 12 {
            format!(" and {} more", bad.len() - 12)
        } else {
            String::new()
        };
        return Err(Error::Singular(format!("{}{more}", shown.join(", "))));
    }

    let solve_scaled = |b: &[f64]| -> Vec<f64> {
        let sb: Vec<f64> = b.iter().zip(&scale).map(|(v, s)| v * s).collect();
        chol.solve(&sb).iter().zip(&scale).map(|(v, s)| v * s).collect()
    };
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let bnorm = norm(&rhs);
    let denom = if bnorm > 0.0 { bnorm } else { 1.0 };
    let mut x = solve_scaled(&rhs);
    let mut residual = f64::INFINITY;
    for _ in 0..4 {
        let kx = k.mul_vec(&x);
        let r: Vec<f64> = rhs.iter().zip(&kx).map(|(b, v)| b - v).collect();
        residual = norm(&r) / denom;
        if residual <= m.residual_tol * 1e-3 {
            break;
        }
        let dx = solve_scaled(&r);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
    }
    let kx = k.mul_vec(&x);
    let r: Vec<f64> = rhs.iter().zip(&kx).map(|(b, v)| b - v).collect();
    residual = residual.min(norm(&r) / denom);
    if !residual.is_finite() || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite displacement in grillage solve".into()));
    }
    if residual > m.residual_tol {
        return Err(Error::Numeric(format!(
            "relative residual {residual:.3e} exceeds tolerance {:.1e}",
            m.residual_tol
        )));
    }

    let mut u = vec![0.0; ndof];
    for d in 0..ndof {
        u[d] = match m.prescribed[d] {
            Some(v) => v,
            None => x[free_index[d]],
        };
    }
    let displacements = (0..m.nodes.len())
        .map(|n| std::array::from_fn(|k| u[6 * n + k]))
        .collect();
    let member_forces = m
        .members
        .iter()
        .zip(&mats)
        .map(|(mem, (_, r))| {
            let dofs = GrillageModel::member_dofs(mem);
            let ug: [f64; 12] = std::array::from_fn(|i| u[dofs[i]]);
            let ul = to_local(&ug, r);
            let (_, len) = rotation(m.nodes[mem.nodes[0]], m.nodes[mem.nodes[1]], mem.local_z);
            let kl = local_stiffness(m.youngs_modulus, m.shear_modulus, len, &mem.section);
            std::array::from_fn(|i| (0..12).map(|j| kl[i][j] * ul[j]).sum())
        })
        .collect();
    Ok(SolveResult {
        displacements,
        member_forces,
        residual,
    })
}

const QUANTUM: f64 = 1e-9;

fn quantize(p: [f64; 3]) -> [i64; 3] {
    p.map(|v| (v / QUANTUM).round() as i64)
}

/// Meshes every structural unit as a lattice of frame members, sharing nodes
/// where units meet. Nodes are numbered in `(x, y, z)` order, which keeps the
/// stiffness band narrow.
pub fn build_grillage(case: &PanelCase, cfg: &OracleConfig) -> Result<GrillageModel> {
    cfg.validate()?;
    let topo = case.validate()?;
    let mesh = cfg.mesh;

    let divisions = |kind: UnitKind, axis1: Axis| -> (usize, usize) {
        let across = match kind {
            UnitKind::PlateStrip => mesh.between,
            UnitKind::Web => mesh.web,
            UnitKind::Flange => mesh.flange,
        };
        if axis1 == Axis::X {
            (mesh.along, across)
        } else {
            (across, mesh.along)
        }
    };

    let mut points: BTreeMap<[i64; 3], [f64; 3]> = BTreeMap::new();
    let mut lattice_keys = Vec::with_capacity(topo.units.len());
    for u in &topo.units {
        let (m1, m2) = divisions(u.kind, u.axis1.axis);
        let mut keys = Vec::with_capacity((m1 + 1) * (m2 + 1));
        for i2 in 0..=m2 {
            for i1 in 0..=m1 {
                let p = u.point(
                    u.extent1 * i1 as f64 / m1 as f64,
                    u.extent2 * i2 as f64 / m2 as f64,
                );
                let key = quantize(p);
                points.entry(key).or_insert(p);
                keys.push(key);
            }
        }
        lattice_keys.push((m1, m2, keys));
    }

    let mut model = GrillageModel::new(case.material.youngs_modulus, case.material.shear_modulus());
    model.residual_tol = cfg.residual_tol;
    let mut index = BTreeMap::new();
    for (key, p) in &points {
        index.insert(*key, model.add_node(*p));
    }

    for (u, (m1, m2, keys)) in topo.units.iter().zip(lattice_keys) {
        let nodes: Vec<usize> = keys.iter().map(|k| index[k]).collect();
        let (h1, h2) = (u.extent1 / m1 as f64, u.extent2 / m2 as f64);
        let trib = |i: usize, m: usize, h: f64| if i == 0 || i == m { 0.5 * h } else { h };
        let normal = u.normal();
        let is_strip = u.kind == UnitKind::PlateStrip;
        let factor = |axis: Axis| {
            if is_strip && axis == Axis::X {
                cfg.effective_breadth
            } else {
                1.0
            }
        };
        let mut along1 = Vec::with_capacity(m1 * (m2 + 1));
        for i2 in 0..=m2 {
            let s = Section::strip(trib(i2, m2, h2) * factor(u.axis1.axis), u.thickness);
            for i1 in 0..m1 {
                let a = nodes[i2 * (m1 + 1) + i1];
                along1.push(model.add_member(a, nodes[i2 * (m1 + 1) + i1 + 1], s, normal));
            }
        }
        let mut along2 = Vec::with_capacity((m1 + 1) * m2);
        for i1 in 0..=m1 {
            let s = Section::strip(trib(i1, m1, h1) * factor(u.axis2.axis), u.thickness);
            for i2 in 0..m2 {
                let a = nodes[i2 * (m1 + 1) + i1];
                let b = nodes[(i2 + 1) * (m1 + 1) + i1];
                along2.push(model.add_member(a, b, s, normal));
            }
        }

        let load = &case.loads[u.id].samples;
        if load.iter().any(|p| *p != 0.0) {
            for i2 in 0..=m2 {
                for i1 in 0..=m1 {
                    let p = interp_uniform(load, i1 as f64 / m1 as f64);
                    let area = trib(i1, m1, h1) * trib(i2, m2, h2);
                    let node = nodes[i2 * (m1 + 1) + i1];
                    for k in 0..3 {
                        model.add_load(node, DofKind::ALL[k], -p * area * normal[k]);
                    }
                }
            }
        }

        model.lattices.push(UnitLattice {
            unit_id: u.id,
            m1,
            m2,
            extent1: u.extent1,
            extent2: u.extent2,
            nodes,
            along1,
            along2,
        });
    }

    for e in topo.edges.iter().filter(|e| e.on_boundary) {
        let bc = &case.edge_bcs[e.id];
        let [a, b] = e.endpoints;
        let d: [f64; 3] = std::array::from_fn(|i| b[i] - a[i]);
        let len2 = d.iter().map(|v| v * v).sum::<f64>();
        for n in 0..model.nodes.len() {
            let p = model.nodes[n];
            let t = (0..3).map(|i| (p[i] - a[i]) * d[i]).sum::<f64>() / len2;
            if !(-1e-9..=1.0 + 1e-9).contains(&t) {
                continue;
            }
            let off = (0..3).map(|i| (p[i] - a[i] - t * d[i]).powi(2)).sum::<f64>().sqrt();
            if off > 1e-7 {
                continue;
            }
            for dof in DofKind::ALL {
                if bc.is_known(dof) {
                    model.prescribe(n, dof, interp_uniform(bc.profile(dof), t));
                }
            }
        }
    }
    Ok(model)
}
