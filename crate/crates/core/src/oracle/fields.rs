use serde::{Deserialize, Serialize};

use super::model::{GrillageModel, SolveResult, UnitLattice};

pub const GRID_ROWS: usize = 10;
pub const GRID_COLS: usize = 20;
pub const GRID_POINTS: usize = GRID_ROWS * GRID_COLS;

/// Output channel of a field grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    U1,
    U2,
    U3,
    Stress,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::U1, Channel::U2, Channel::U3, Channel::Stress];
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        ["u1", "u2", "u3", "stress"][self.index()]
    }

    pub fn unit(self) -> &'static str {
        if self == Channel::Stress {
            "MPa"
        } else {
            "mm"
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

/// Field values of one unit on a 10 × 20 grid: rows run across the unit's
/// short side, columns along its long side, both including the edges.
/// Displacements in mm, stress in MPa.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid {
    pub unit_id: usize,
    /// `values[(row * GRID_COLS + col) * Channel::COUNT + channel]`.
    pub values: Vec<f64>,
}

impl FieldGrid {
    pub fn zeros(unit_id: usize) -> Self {
        Self {
            unit_id,
            values: vec![0.0; GRID_POINTS * Channel::COUNT],
        }
    }

    pub fn get(&self, row: usize, col: usize, ch: Channel) -> f64 {
        self.values[(row * GRID_COLS + col) * Channel::COUNT + ch.index()]
    }

    pub fn set(&mut self, row: usize, col: usize, ch: Channel, v: f64) {
        self.values[(row * GRID_COLS + col) * Channel::COUNT + ch.index()] = v;
    }

    /// One channel in row-major order.
    pub fn channel(&self, ch: Channel) -> Vec<f64> {
        self.values
            .iter()
            .skip(ch.index())
            .step_by(Channel::COUNT)
            .copied()
            .collect()
    }
}

/// Combined member stress at fraction `t` along member `m`, Pa.
fn member_stress(model: &GrillageModel, r: &SolveResult, m: usize, t: f64) -> f64 {
    let s = &model.members[m].section;
    let f = &r.member_forces[m];
    let axial = f[6].abs() / s.area;
    let my = (1.0 - t) * -f[4] + t * f[10];
    let mz = (1.0 - t) * -f[5] + t * f[11];
    axial + my.abs() * s.c_out / s.i_out + mz.abs() * s.c_in / s.i_in
}

/// Segment index and fraction of coordinate `s` on `m` equal divisions of
/// `[0, extent]`.
fn locate(s: f64, extent: f64, m: usize) -> (usize, f64) {
    let x = (s / extent * m as f64).clamp(0.0, m as f64);
    let i = (x.floor() as usize).min(m - 1);
    (i, x - i as f64)
}

fn nearest_line(s: f64, extent: f64, m: usize) -> usize {
    ((s / extent * m as f64).round() as usize).min(m)
}

fn unit_grid(model: &GrillageModel, r: &SolveResult, lat: &UnitLattice) -> FieldGrid {
    let mut grid = FieldGrid::zeros(lat.unit_id);
    for row in 0..GRID_ROWS {
        let s2 = lat.extent2 * row as f64 / (GRID_ROWS - 1) as f64;
        let (i2, f2) = locate(s2, lat.extent2, lat.m2);
        let line2 = nearest_line(s2, lat.extent2, lat.m2);
        for col in 0..GRID_COLS {
            let s1 = lat.extent1 * col as f64 / (GRID_COLS - 1) as f64;
            let (i1, f1) = locate(s1, lat.extent1, lat.m1);
            let corners = [
                (lat.node(i1, i2), (1.0 - f1) * (1.0 - f2)),
                (lat.node(i1 + 1, i2), f1 * (1.0 - f2)),
                (lat.node(i1, i2 + 1), (1.0 - f1) * f2),
                (lat.node(i1 + 1, i2 + 1), f1 * f2),
            ];
            for k in 0..3 {
                let u: f64 = corners.iter().map(|(n, w)| w * r.displacements[*n][k]).sum();
                grid.set(row, col, Channel::ALL[k], u * 1e3);
            }
            let line1 = nearest_line(s1, lat.extent1, lat.m1);
            let sa = member_stress(model, r, lat.along1[line2 * lat.m1 + i1], f1);
            let sb = member_stress(model, r, lat.along2[line1 * lat.m2 + i2], f2);
            let combined = (sa * sa + sb * sb - sa * sb).max(0.0).sqrt();
            grid.set(row, col, Channel::Stress, combined * 1e-6);
        }
    }
    grid
}

/// Samples displacements (bilinear in each unit lattice) and the member
/// stress proxy onto every unit's grid, ordered by unit id.
pub fn extract_fields(model: &GrillageModel, r: &SolveResult) -> Vec<FieldGrid> {
    let mut grids: Vec<FieldGrid> = model.lattices.iter().map(|l| unit_grid(model, r, l)).collect();
    grids.sort_by_key(|g| g.unit_id);
    grids
}
