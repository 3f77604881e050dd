//! Edge boundary-condition profiles and pressure load profiles.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::geometry::Interval;
use super::topology::{PanelTopology, UnitKind};

/// Samples per edge or load profile.
pub const PROFILE_SAMPLES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DofKind {
    U1,
    U2,
    U3,
    R1,
    R2,
    R3,
}

impl DofKind {
    pub const ALL: [DofKind; 6] = [
        DofKind::U1,
        DofKind::U2,
        DofKind::U3,
        DofKind::R1,
        DofKind::R2,
        DofKind::R3,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_rotation(self) -> bool {
        self.index() >= 3
    }

    pub fn name(self) -> &'static str {
        ["u1", "u2", "u3", "r1", "r2", "r3"][self.index()]
    }
}

/// Prescribed displacement (m) and rotation (rad) profiles along one edge,
/// sampled at [`PROFILE_SAMPLES`] evenly spaced points from start to end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeBc {
    pub edge_id: usize,
    pub profiles: [[f64; PROFILE_SAMPLES]; 6],
    pub known: [bool; 6],
}

impl EdgeBc {
    /// An interior edge: nothing prescribed, nothing known.
    pub fn unknown(edge_id: usize) -> Self {
        Self {
            edge_id,
            profiles: [[0.0; PROFILE_SAMPLES]; 6],
            known: [false; 6],
        }
    }

    pub fn profile(&self, dof: DofKind) -> &[f64; PROFILE_SAMPLES] {
        &self.profiles[dof.index()]
    }

    pub fn is_known(&self, dof: DofKind) -> bool {
        self.known[dof.index()]
    }

    pub fn fully_known(&self) -> bool {
        self.known.iter().all(|k| *k)
    }
}

/// Pressure (Pa) along a unit's long axis. Positive pressure pushes against
/// the unit normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadProfile {
    pub unit_id: usize,
    pub samples: [f64; PROFILE_SAMPLES],
}

impl LoadProfile {
    pub fn zero(unit_id: usize) -> Self {
        Self {
            unit_id,
            samples: [0.0; PROFILE_SAMPLES],
        }
    }
}

/// Settings for synthetic non-uniform edge displacements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BcSpec {
    /// Amplitude of u1/u2 modes, m.
    pub in_plane_amplitude: f64,
    /// Amplitude of u3 modes, m.
    pub out_of_plane_amplitude: f64,
    /// Upper bound on sine modes per displacement component (1..=3).
    pub max_modes: usize,
    /// Upper bound on the magnitude of each normalized wave-vector component.
    pub max_wavenumber: f64,
    /// Length used to normalize positions.
    pub length_scale: f64,
}

impl Default for BcSpec {
    fn default() -> Self {
        Self {
            in_plane_amplitude: 2e-3,
            out_of_plane_amplitude: 20e-3,
            max_modes: 3,
            max_wavenumber: 1.5,
            length_scale: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct SineMode {
    amplitude: f64,
    wave: [f64; 3],
    phase: f64,
}

/// A smooth random displacement field over the whole panel. Edge profiles
/// sampled from one field agree wherever edges meet. Rotations follow the
/// field's local rigid rotation, half its curl.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryField {
    offset: [f64; 3],
    linear: [[f64; 3]; 3],
    modes: [Vec<SineMode>; 3],
    length_scale: f64,
}

impl BoundaryField {
    pub fn sample(spec: &BcSpec, rng: &mut impl Rng) -> Self {
        let mut offset = [0.0; 3];
        let mut linear = [[0.0; 3]; 3];
        let mut modes: [Vec<SineMode>; 3] = Default::default();
        for k in 0..3 {
            let amp = if k == 2 {
                spec.out_of_plane_amplitude
            } else {
                spec.in_plane_amplitude
            };
            offset[k] = rng.gen_range(-amp..=amp);
            for c in &mut linear[k] {
                *c = rng.gen_range(-amp..=amp);
            }
            let count = rng.gen_range(1..=spec.max_modes.max(1));
            for _ in 0..count {
                let w = spec.max_wavenumber;
                modes[k].push(SineMode {
                    amplitude: rng.gen_range(-amp..=amp),
                    wave: [
                        rng.gen_range(-w..=w),
                        rng.gen_range(-w..=w),
                        rng.gen_range(-w..=w),
                    ],
                    phase: rng.gen_range(0.0..2.0 * PI),
                });
            }
        }
        Self {
            offset,
            linear,
            modes,
            length_scale: spec.length_scale,
        }
    }

    /// A rigid translation; useful for tests.
    pub fn uniform(translation: [f64; 3]) -> Self {
        Self {
            offset: translation,
            linear: [[0.0; 3]; 3],
            modes: Default::default(),
            length_scale: 1.0,
        }
    }

    pub fn displacement(&self, p: [f64; 3]) -> [f64; 3] {
        let q = p.map(|v| v / self.length_scale);
        std::array::from_fn(|k| {
            let mut u = self.offset[k] + dot(self.linear[k], q);
            for m in &self.modes[k] {
                u += m.amplitude * (PI * dot(m.wave, q) + m.phase).sin();
            }
            u
        })
    }

    fn gradient(&self, p: [f64; 3]) -> [[f64; 3]; 3] {
        let q = p.map(|v| v / self.length_scale);
        let s = self.length_scale;
        std::array::from_fn(|k| {
            std::array::from_fn(|i| {
                let mut d = self.linear[k][i] / s;
                for m in &self.modes[k] {
                    d += m.amplitude * (PI * dot(m.wave, q) + m.phase).cos() * PI * m.wave[i] / s;
                }
                d
            })
        })
    }

    pub fn rotation(&self, p: [f64; 3]) -> [f64; 3] {
        let g = self.gradient(p);
        [
            0.5 * (g[2][1] - g[1][2]),
            0.5 * (g[0][2] - g[2][0]),
            0.5 * (g[1][0] - g[0][1]),
        ]
    }

    /// Profiles for every edge: sampled on perimeter edges, unknown elsewhere.
    pub fn edge_bcs(&self, topo: &PanelTopology) -> Vec<EdgeBc> {
        topo.edges
            .iter()
            .map(|e| {
                if !e.on_boundary {
                    return EdgeBc::unknown(e.id);
                }
                let mut profiles = [[0.0; PROFILE_SAMPLES]; 6];
                for s in 0..PROFILE_SAMPLES {
                    let p = e.point_at(s as f64 / (PROFILE_SAMPLES - 1) as f64);
                    let u = self.displacement(p);
                    let r = self.rotation(p);
                    for k in 0..3 {
                        profiles[k][s] = u[k];
                        profiles[k + 3][s] = r[k];
                    }
                }
                EdgeBc {
                    edge_id: e.id,
                    profiles,
                    known: [true; 6],
                }
            })
            .collect()
    }
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Settings for synthetic non-uniform pressure on the plate strips.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoadSpec {
    /// Mean pressure range, Pa.
    pub pressure: Interval,
    /// Largest relative linear gradient across the panel in x and in y.
    pub max_gradient: f64,
    /// Largest relative amplitude of the sinusoidal ripple along x.
    pub max_ripple: f64,
}

impl Default for LoadSpec {
    fn default() -> Self {
        Self {
            pressure: Interval::new(1.11e5, 3.33e5),
            max_gradient: 0.5,
            max_ripple: 0.3,
        }
    }
}

/// Draws one pressure field and samples it along the centreline of every
/// plate strip; webs and flanges stay unloaded.
pub fn sample_loads(spec: &LoadSpec, topo: &PanelTopology, rng: &mut impl Rng) -> Vec<LoadProfile> {
    let p0 = if spec.pressure.lower == spec.pressure.upper {
        spec.pressure.lower
    } else {
        rng.gen_range(spec.pressure.lower..=spec.pressure.upper)
    };
    let g = spec.max_gradient;
    let gx = rng.gen_range(-g..=g);
    let gy = rng.gen_range(-g..=g);
    let ripple = rng.gen_range(0.0..=spec.max_ripple.max(0.0));
    let omega = rng.gen_range(1.0..=3.0);
    let phase = rng.gen_range(0.0..2.0 * PI);
    let (lx, ly) = topo
        .units
        .iter()
        .fold((0.0f64, 0.0f64), |(a, b), u| {
            let c = u.point(u.extent1, u.extent2);
            (a.max(c[0]), b.max(c[1]))
        });
    topo.units
        .iter()
        .map(|u| {
            if u.kind != UnitKind::PlateStrip {
                return LoadProfile::zero(u.id);
            }
            let samples = std::array::from_fn(|s| {
                let t = s as f64 / (PROFILE_SAMPLES - 1) as f64;
                let p = u.point(t * u.extent1, 0.5 * u.extent2);
                let (xn, yn) = (p[0] / lx - 0.5, p[1] / ly - 0.5);
                let shape = 1.0 + gx * xn + gy * yn + ripple * (PI * omega * xn + phase).sin();
                p0 * shape.max(0.0)
            });
            LoadProfile {
                unit_id: u.id,
                samples,
            }
        })
        .collect()
}
