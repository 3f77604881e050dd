//! Checkpoint file.
//!
//! ```text
//! "HPCK" | version u32 | header JSON (length-prefixed UTF-8)
//! parameters u32, per parameter: name | rows u32 | cols u32 | rows × cols f64
//! buffers u32, per buffer: name | len u32 | len f64
//! has optimizer u8, then step u64 and per parameter m, v (rows × cols f64 each)
//! CRC-32 u32 over every preceding byte
//! ```
//!
//! The header echoes the training configuration, the relation catalog, the
//! target normalization and the run metrics. Names are length-prefixed UTF-8.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::binary::{framed, open, read_file, seal, write_atomic, Reader};
use crate::error::{Error, Result};
use crate::graph::RelationCatalog;
use crate::nn::{count_parameters, DenseArray, OptimState, ParamStore};
use crate::training::{Normalization, RunMetrics, TrainConfig, TrainedModel};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"HPCK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    config: TrainConfig,
    catalog: RelationCatalog,
    norm: Normalization,
    metrics: RunMetrics,
}

pub fn encode_checkpoint(model: &TrainedModel) -> Result<Vec<u8>> {
    let header = Header {
        config: model.config,
        catalog: model.network.catalog.clone(),
        norm: model.norm,
        metrics: model.metrics.clone(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::Usage(format!("cannot encode header: {e}")))?;
    let mut w = framed(CHECKPOINT_MAGIC, CHECKPOINT_VERSION);
    w.bytes(&json)?;
    let s = &model.store;
    w.len_u32(s.len())?;
    for slot in 0..s.len() {
        w.bytes(s.name(slot).as_bytes())?;
        let v = s.value(slot);
        w.len_u32(v.rows())?;
        w.len_u32(v.cols())?;
        v.as_slice().iter().for_each(|x| w.f64(*x));
    }
    w.len_u32(s.buffers.len())?;
    for (name, b) in &s.buffers {
        w.bytes(name.as_bytes())?;
        w.len_u32(b.len())?;
        b.iter().for_each(|x| w.f64(*x));
    }
    match &model.optim {
        None => w.u8(0),
        Some(o) => {
            w.u8(1);
            w.u64(o.step);
            for a in o.m.iter().chain(&o.v) {
                a.as_slice().iter().for_each(|x| w.f64(*x));
            }
        }
    }
    Ok(seal(w))
}

fn f64s(r: &mut Reader, n: usize, what: &str) -> Result<Vec<f64>> {
    if n.saturating_mul(8) > r.remaining() {
        return Err(r.err(format!("truncated {what}: need {n} values")));
    }
    (0..n).map(|_| r.f64(what)).collect()
}

/// Decodes a checkpoint, trusting its own configuration echo.
pub fn decode_checkpoint(bytes: &[u8]) -> Result<TrainedModel> {
    let mut r = open(bytes, CHECKPOINT_MAGIC, CHECKPOINT_VERSION, "checkpoint")?;
    let at = r.pos();
    let header: Header = serde_json::from_slice(r.bytes("header")?).map_err(|e| Error::Format {
        offset: at as u64,
        message: format!("bad header: {e}"),
    })?;
    let mut store = ParamStore::new();
    let n = r.count(12, "parameter")?;
    for _ in 0..n {
        let at = r.pos();
        let name = r.string("parameter name")?;
        let rows = r.u32("rows")? as usize;
        let cols = r.u32("cols")? as usize;
        let data = f64s(&mut r, rows.saturating_mul(cols), "parameter values")?;
        if store.get(&name).is_some() {
            return Err(Error::Format {
                offset: at as u64,
                message: format!("duplicate parameter '{name}'"),
            });
        }
        store.insert(&name, DenseArray::new(rows, cols, data));
    }
    let nb = r.count(8, "buffer")?;
    for _ in 0..nb {
        let name = r.string("buffer name")?;
        let len = r.u32("buffer length")? as usize;
        let data = f64s(&mut r, len, "buffer values")?;
        store.buffers.insert(name, data);
    }
    let optim = match r.u8("optimizer flag")? {
        0 => None,
        1 => {
            let step = r.u64("optimizer step")?;
            let mut moments = Vec::with_capacity(2 * store.len());
            for k in 0..2 * store.len() {
                let (rows, cols) = store.value(k % store.len()).shape();
                moments.push(DenseArray::new(rows, cols, f64s(&mut r, rows * cols, "optimizer moments")?));
            }
            let v = moments.split_off(store.len());
            Some(OptimState {
                config: header.config.adam(),
                m: moments,
                v,
                step,
            })
        }
        b => return Err(r.err(format!("optimizer flag {b} is neither 0 nor 1"))),
    };
    r.finish()?;
    let network = header.config.build_network().map_err(|e| Error::Format {
        offset: 8,
        message: format!("header configuration is invalid: {e}"),
    })?;
    if network.catalog != header.catalog {
        return Err(Error::Format {
            offset: 8,
            message: format!(
                "relation catalog echo does not match variant {}",
                header.config.variant
            ),
        });
    }
    let net = header.config.network;
    if net.layers > MAX_LAYERS || net.hidden > MAX_HIDDEN {
        return Err(Error::Format {
            offset: 8,
            message: format!("implausible network size {} x {}", net.layers, net.hidden),
        });
    }
    // Sizes agree before the reference layout is allocated.
    let expected = count_parameters(&net, &network.catalog);
    if expected != store.scalar_count() {
        return Err(Error::Format {
            offset: 8,
            message: format!(
                "{} parameter values for a configuration needing {expected}",
                store.scalar_count()
            ),
        });
    }
    let diff = layout_diff(&network.init(0), &store);
    if !diff.is_empty() {
        return Err(Error::Format {
            offset: 8,
            message: format!("parameters do not match the echoed configuration: {}", diff.join("; ")),
        });
    }
    let optim = optim.or_else(|| Some(OptimState::new(header.config.adam(), &store)));
    Ok(TrainedModel {
        config: header.config,
        network,
        store,
        optim,
        norm: header.norm,
        metrics: header.metrics,
    })
}

const MAX_LAYERS: usize = 1024;
const MAX_HIDDEN: usize = 1 << 16;
const MAX_DIFF_LINES: usize = 12;

/// Missing, unexpected and reshaped entries of `got` relative to `want`.
fn layout_diff(want: &ParamStore, got: &ParamStore) -> Vec<String> {
    let mut out = Vec::new();
    for name in want.names() {
        match got.get(name) {
            None => out.push(format!("missing parameter '{name}'")),
            Some(v) if v.shape() != want.get(name).map(|w| w.shape()).unwrap_or_default() => out.push(format!(
                "parameter '{name}' has shape {:?}, expected {:?}",
                v.shape(),
                want.get(name).map(|w| w.shape()).unwrap_or_default()
            )),
            Some(_) => {}
        }
    }
    for name in got.names() {
        if want.get(name).is_none() {
            out.push(format!("unexpected parameter '{name}'"));
        }
    }
    for (name, b) in &want.buffers {
        match got.buffers.get(name) {
            None => out.push(format!("missing buffer '{name}'")),
            Some(g) if g.len() != b.len() => out.push(format!("buffer '{name}' has {} entries, expected {}", g.len(), b.len())),
            Some(_) => {}
        }
    }
    for name in got.buffers.keys() {
        if !want.buffers.contains_key(name) {
            out.push(format!("unexpected buffer '{name}'"));
        }
    }
    if out.len() > MAX_DIFF_LINES {
        let more = out.len() - MAX_DIFF_LINES;
        out.truncate(MAX_DIFF_LINES);
        out.push(format!("{more} more differences"));
    }
    out
}

/// Flattened `key = value` pairs of a JSON value.
fn flatten(prefix: &str, v: &serde_json::Value, out: &mut Vec<(String, String)>) {
    match v {
        serde_json::Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// Keys that decide what a checkpoint computes: representation, output
/// channel and architecture.
fn model_keys(cfg: &TrainConfig) -> Vec<(String, String)> {
    let v = serde_json::json!({
        "variant": cfg.variant,
        "channel": cfg.channel,
        "network": cfg.network,
    });
    let mut out = Vec::new();
    flatten("", &v, &mut out);
    out
}

pub fn save_checkpoint(model: &TrainedModel, path: &Path) -> Result<()> {
    write_atomic(path, &encode_checkpoint(model)?)
}

/// Reads a checkpoint using its own configuration echo.
pub fn read_checkpoint(path: &Path) -> Result<TrainedModel> {
    decode_checkpoint(&read_file(path)?)
}

/// Reads a checkpoint and rejects it unless its variant, channel and
/// architecture equal `expected`'s. A checkpoint without optimizer state
/// gets a fresh one.
pub fn load_checkpoint(path: &Path, expected: &TrainConfig) -> Result<TrainedModel> {
    let model = read_checkpoint(path)?;
    let diff: Vec<String> = model_keys(&model.config)
        .into_iter()
        .zip(model_keys(expected))
        .filter(|(a, b)| a != b)
        .map(|((k, a), (_, b))| format!("{k}: checkpoint {a}, requested {b}"))
        .collect();
    if !diff.is_empty() {
        return Err(Error::Config(format!(
            "{} does not match the requested configuration: {}",
            path.display(),
            diff.join("; ")
        )));
    }
    Ok(model)
}
