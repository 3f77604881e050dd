//! Dataset archive.
//!
//! ```text
//! header   "HPDS" | version u32 | records u32 |
//!          profile samples u32 | grid rows u32 | grid cols u32 | channels u32
//! record   byte length u32 | body
//! body     length, width, plate t, web t, web h, flange t, flange w  (f32 × 7)
//!          stiffeners u32
//!          E, ν, σ_y, K, n, ε_L  (f32 × 6)
//!          edges u32, per edge: id u32 | known bits u8 | 6 × samples f32
//!          units u32, per unit: id u32 | samples f32
//!          has targets u8, then grids u32, per grid: unit id u32 | rows × cols × channels f32
//! ```
//!
//! trailer  CRC-32 u32 over every preceding byte
//!
//! All integers and floats are little-endian.

use std::path::Path;

use super::binary::{framed, open, read_file, seal, write_atomic, Reader, Writer};
use crate::error::{Error, Result};
use crate::oracle::{Channel, FieldGrid, GRID_COLS, GRID_POINTS, GRID_ROWS};
use crate::panel::{EdgeBc, LoadProfile, MaterialLaw, PanelCase, PanelGeometry, PROFILE_SAMPLES};
use crate::training::Dataset;

pub const DATASET_MAGIC: &[u8; 4] = b"HPDS";
pub const DATASET_VERSION: u32 = 1;
const GRID_VALUES: usize = GRID_POINTS * Channel::COUNT;

fn put_case(w: &mut Writer, c: &PanelCase) -> Result<()> {
    let g = &c.geometry;
    for v in [
        g.length,
        g.width,
        g.plate_thickness,
        g.web_thickness,
        g.web_height,
        g.flange_thickness,
        g.flange_width,
    ] {
        w.f32(v);
    }
    w.len_u32(g.n_stiffeners)?;
    let m = &c.material;
    for v in [
        m.youngs_modulus,
        m.poisson_ratio,
        m.yield_stress,
        m.hardening_coefficient,
        m.hardening_exponent,
        m.plateau_strain,
    ] {
        w.f32(v);
    }
    w.len_u32(c.edge_bcs.len())?;
    for e in &c.edge_bcs {
        w.len_u32(e.edge_id)?;
        w.u8(e.known.iter().enumerate().fold(0u8, |b, (i, k)| b | (u8::from(*k) << i)));
        e.profiles.iter().flatten().for_each(|v| w.f32(*v));
    }
    w.len_u32(c.loads.len())?;
    for l in &c.loads {
        w.len_u32(l.unit_id)?;
        l.samples.iter().for_each(|v| w.f32(*v));
    }
    match &c.targets {
        None => w.u8(0),
        Some(t) => {
            w.u8(1);
            w.len_u32(t.len())?;
            for grid in t {
                w.len_u32(grid.unit_id)?;
                grid.values.iter().for_each(|v| w.f32(*v));
            }
        }
    }
    Ok(())
}

fn get_case(r: &mut Reader) -> Result<PanelCase> {
    let mut f = [0.0; 7];
    for v in &mut f {
        *v = r.f32("geometry")?;
    }
    let geometry = PanelGeometry {
        length: f[0],
        width: f[1],
        plate_thickness: f[2],
        web_thickness: f[3],
        web_height: f[4],
        flange_thickness: f[5],
        flange_width: f[6],
        n_stiffeners: r.u32("stiffener count")? as usize,
    };
    let mut m = [0.0; 6];
    for v in &mut m {
        *v = r.f32("material")?;
    }
    let material = MaterialLaw {
        youngs_modulus: m[0],
        poisson_ratio: m[1],
        yield_stress: m[2],
        hardening_coefficient: m[3],
        hardening_exponent: m[4],
        plateau_strain: m[5],
    };
    let n_edges = r.count(5 + 24 * PROFILE_SAMPLES, "edge")?;
    let mut edge_bcs = Vec::with_capacity(n_edges);
    for _ in 0..n_edges {
        let edge_id = r.u32("edge id")? as usize;
        let bits = r.u8("known bits")?;
        if bits >> 6 != 0 {
            return Err(r.err(format!("known bits {bits:#b} use more than six flags")));
        }
        let mut e = EdgeBc::unknown(edge_id);
        for (i, k) in e.known.iter_mut().enumerate() {
            *k = bits & (1 << i) != 0;
        }
        for v in e.profiles.iter_mut().flatten() {
            *v = r.f32("edge profile")?;
        }
        edge_bcs.push(e);
    }
    let n_units = r.count(4 + 4 * PROFILE_SAMPLES, "load")?;
    let mut loads = Vec::with_capacity(n_units);
    for _ in 0..n_units {
        let mut l = LoadProfile::zero(r.u32("unit id")? as usize);
        for v in &mut l.samples {
            *v = r.f32("load profile")?;
        }
        loads.push(l);
    }
    let targets = match r.u8("target flag")? {
        0 => None,
        1 => {
            let n = r.count(4 + 4 * GRID_VALUES, "target grid")?;
            let mut t = Vec::with_capacity(n);
            for _ in 0..n {
                let mut grid = FieldGrid::zeros(r.u32("grid unit id")? as usize);
                for v in &mut grid.values {
                    *v = r.f32("grid values")?;
                }
                t.push(grid);
            }
            Some(t)
        }
        b => return Err(r.err(format!("target flag {b} is neither 0 nor 1"))),
    };
    Ok(PanelCase {
        geometry,
        material,
        edge_bcs,
        loads,
        targets,
    })
}

pub fn encode_dataset(ds: &Dataset) -> Result<Vec<u8>> {
    let mut w = framed(DATASET_MAGIC, DATASET_VERSION);
    w.len_u32(ds.cases.len())?;
    for v in [PROFILE_SAMPLES, GRID_ROWS, GRID_COLS, Channel::COUNT] {
        w.len_u32(v)?;
    }
    for c in &ds.cases {
        let mut body = Writer::default();
        put_case(&mut body, c)?;
        w.bytes(&body.buf)?;
    }
    Ok(seal(w))
}

pub fn decode_dataset(bytes: &[u8]) -> Result<Dataset> {
    let mut r = open(bytes, DATASET_MAGIC, DATASET_VERSION, "dataset archive")?;
    let n = r.count(4, "record")?;
    for (name, expect) in [
        ("profile samples", PROFILE_SAMPLES),
        ("grid rows", GRID_ROWS),
        ("grid columns", GRID_COLS),
        ("channels", Channel::COUNT),
    ] {
        let at = r.pos();
        let v = r.u32(name)? as usize;
        if v != expect {
            return Err(Error::Format {
                offset: at as u64,
                message: format!("schema {name} is {v}, expected {expect}"),
            });
        }
    }
    let mut cases = Vec::with_capacity(n);
    for i in 0..n {
        let start = r.pos();
        let body = r.bytes("record")?;
        let mut br = Reader::new(body);
        let case = get_case(&mut br)
            .and_then(|c| br.finish().map(|_| c))
            .map_err(|e| match e {
                Error::Format { offset, message } => Error::Format {
                    offset: start as u64 + 4 + offset,
                    message: format!("record {i}: {message}"),
                },
                other => other,
            })?;
        case.validate().map_err(|e| Error::Format {
            offset: start as u64,
            message: format!("record {i} is inconsistent: {e}"),
        })?;
        cases.push(case);
    }
    r.finish()?;
    Ok(Dataset { cases })
}

pub fn save_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    write_atomic(path, &encode_dataset(ds)?)
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    decode_dataset(&read_file(path)?)
}
