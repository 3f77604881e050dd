//! Two-node 3D Euler–Bernoulli frame element.

use serde::{Deserialize, Serialize};

/// Cross-section of a grillage member.
///
/// `i_out` resists bending out of the parent unit's plane (deflection along
/// the member's local z, which is the unit normal); `i_in` resists in-plane
/// bending. `c_out` and `c_in` are the matching extreme-fibre distances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub area: f64,
    pub i_out: f64,
    pub i_in: f64,
    pub torsion: f64,
    pub c_out: f64,
    pub c_in: f64,
}

impl Section {
    /// Thin rectangular strip of breadth `b` and thickness `t`, as used for
    /// plate grillage members.
    pub fn strip(b: f64, t: f64) -> Self {
        Self {
            area: b * t,
            i_out: b * t.powi(3) / 12.0,
            i_in: t * b.powi(3) / 12.0,
            torsion: b * t.powi(3) / 6.0,
            c_out: t / 2.0,
            c_in: b / 2.0,
        }
    }
}

pub type Mat12 = [[f64; 12]; 12];

/// Local stiffness, DOF order `[u, v, w, rx, ry, rz]` at each end.
pub fn local_stiffness(e: f64, g: f64, length: f64, s: &Section) -> Mat12 {
    let mut k = [[0.0; 12]; 12];
    let l = length;
    let ea = e * s.area / l;
    let gj = g * s.torsion / l;
    k[0][0] = ea;
    k[6][6] = ea;
    k[0][6] = -ea;
    k[3][3] = gj;
    k[9][9] = gj;
    k[3][9] = -gj;

    // v / rz plane, in-plane inertia
    let iz = e * s.i_in;
    let (a, b, c, d) = (12.0 * iz / l.powi(3), 6.0 * iz / l.powi(2), 4.0 * iz / l, 2.0 * iz / l);
    k[1][1] = a;
    k[1][5] = b;
    k[1][7] = -a;
    k[1][11] = b;
    k[5][5] = c;
    k[5][7] = -b;
    k[5][11] = d;
    k[7][7] = a;
    k[7][11] = -b;
    k[11][11] = c;

    // w / ry plane, out-of-plane inertia
    let iy = e * s.i_out;
    let (a, b, c, d) = (12.0 * iy / l.powi(3), 6.0 * iy / l.powi(2), 4.0 * iy / l, 2.0 * iy / l);
    k[2][2] = a;
    k[2][4] = -b;
    k[2][8] = -a;
    k[2][10] = -b;
    k[4][4] = c;
    k[4][8] = b;
    k[4][10] = d;
    k[8][8] = a;
    k[8][10] = b;
    k[10][10] = c;

    for i in 0..12 {
        for j in 0..i {
            k[i][j] = k[j][i];
        }
    }
    k
}

/// Rotation whose rows are the member's local axes in global components.
pub fn rotation(p0: [f64; 3], p1: [f64; 3], local_z: [f64; 3]) -> ([[f64; 3]; 3], f64) {
    let d = [p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]];
    let len = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    let ex = d.map(|v| v / len);
    // Remove any component of the reference z along the member axis.
    let proj = ex[0] * local_z[0] + ex[1] * local_z[1] + ex[2] * local_z[2];
    let mut ez = [
        local_z[0] - proj * ex[0],
        local_z[1] - proj * ex[1],
        local_z[2] - proj * ex[2],
    ];
    let nz = (ez[0] * ez[0] + ez[1] * ez[1] + ez[2] * ez[2]).sqrt();
    ez = ez.map(|v| v / nz);
    let ey = crate::panel::cross(ez, ex);
    ([ex, ey, ez], len)
}

/// `Tᵀ k T` for the block-diagonal transformation built from `r`.
pub fn to_global(k: &Mat12, r: &[[f64; 3]; 3]) -> Mat12 {
    // kt = k T
    let mut kt = [[0.0; 12]; 12];
    for i in 0..12 {
        for blk in 0..4 {
            for c in 0..3 {
                let mut s = 0.0;
                for m in 0..3 {
                    s += k[i][3 * blk + m] * r[m][c];
                }
                kt[i][3 * blk + c] = s;
            }
        }
    }
    let mut out = [[0.0; 12]; 12];
    for blk in 0..4 {
        for c in 0..3 {
            let row = 3 * blk + c;
            for j in 0..12 {
                let mut s = 0.0;
                for m in 0..3 {
                    s += r[m][c] * kt[3 * blk + m][j];
                }
                out[row][j] = s;
            }
        }
    }
    out
}

/// Global end displacements rotated into the member frame.
pub fn to_local(u: &[f64; 12], r: &[[f64; 3]; 3]) -> [f64; 12] {
    let mut out = [0.0; 12];
    for blk in 0..4 {
        for i in 0..3 {
            out[3 * blk + i] = (0..3).map(|m| r[i][m] * u[3 * blk + m]).sum();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cantilever_tip_deflection() {
        // Clamp node 0 and push the tip along local z: w = P L^3 / (3 E I).
        let s = Section::strip(0.1, 0.02);
        let (e, l, p) = (200e9, 2.0, 1000.0);
        let k = local_stiffness(e, 80e9, l, &s);
        // Reduced system for (w2, ry2).
        let (a, b, c) = (k[8][8], k[8][10], k[10][10]);
        let det = a * c - b * b;
        let w = c * p / det;
        let exact = p * l.powi(3) / (3.0 * e * s.i_out);
        assert!((w - exact).abs() / exact < 1e-12);
    }

    #[test]
    fn rigid_translation_has_no_force() {
        let s = Section::strip(0.2, 0.01);
        let (r, len) = rotation([0.0, 0.0, 0.0], [0.0, 0.5, 0.0], [0.0, 0.0, 1.0]);
        let kg = to_global(&local_stiffness(200e9, 77e9, len, &s), &r);
        let mut u = [0.0; 12];
        for blk in [0, 2] {
            u[3 * blk] = 1e-3;
            u[3 * blk + 1] = -2e-3;
            u[3 * blk + 2] = 5e-4;
        }
        for row in &kg {
            let f: f64 = row.iter().zip(&u).map(|(a, b)| a * b).sum();
            assert!(f.abs() < 1e-3, "{f}");
        }
    }

    #[test]
    fn global_stiffness_symmetric() {
        let s = Section::strip(0.2, 0.01);
        let (r, len) = rotation([0.0, 0.0, 0.0], [0.0, 0.0, 0.3], [0.0, -1.0, 0.0]);
        let kg = to_global(&local_stiffness(200e9, 77e9, len, &s), &r);
        let max = kg.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..12 {
            for j in 0..12 {
                assert!((kg[i][j] - kg[j][i]).abs() <= 1e-12 * max);
            }
        }
    }
}
