use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::array::DenseArray;
use super::params::{Init, ParamBuilder, ParamStore};
use super::tape::{BatchStats, Tape, Var};
use crate::error::{Error, Result};
use crate::graph::{HeteroGraph, NodeType, RelationCatalog, Variant};
use crate::oracle::GRID_POINTS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        }
    }

    fn apply(self, tape: &mut Tape, x: Var) -> Var {
        match self {
            Activation::Tanh => tape.tanh(x),
            Activation::Relu => tape.relu(x),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            _ => Err(Error::Config(format!(
                "unknown activation '{s}' (expected tanh or relu)"
            ))),
        }
    }
}

/// Architecture hyperparameters. The model family follows the catalog:
/// HGT for heterogeneous variants, GraphSAGE for the homogeneous one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkConfig {
    pub layers: usize,
    pub hidden: usize,
    pub heads: usize,
    pub activation: Activation,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            layers: 6,
            hidden: 64,
            heads: 4,
            activation: Activation::Tanh,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.hidden == 0 || self.heads == 0 {
            return Err(Error::Config("layers, hidden and heads must be positive".into()));
        }
        if self.hidden % self.heads != 0 {
            return Err(Error::Config(format!(
                "hidden width {} is not divisible by {} heads",
                self.hidden, self.heads
            )));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.hidden / self.heads
    }
}

/// Whether rows of `t` can be unknown in `variant`, which gives the type a
/// learned null embedding. DOF nodes hanging off edge nodes exist only for
/// known profiles.
pub fn uses_null_embedding(variant: Variant, t: NodeType) -> bool {
    match t {
        NodeType::BoundaryCombined => true,
        NodeType::BoundaryDof(_) => !variant.spec().is_some_and(|s| s.use_edge_node),
        _ => false,
    }
}

/// Learnable scalar count, computed from shapes alone.
pub fn count_parameters(config: &NetworkConfig, catalog: &RelationCatalog) -> usize {
    let d = config.hidden;
    let head = d * GRID_POINTS + GRID_POINTS;
    if catalog.variant == Variant::Homogeneous {
        let w = catalog.feature_widths()[0];
        return w * d + d + config.layers * (2 * d * d + d + 2 * d) + head;
    }
    let widths = catalog.feature_widths();
    let types = catalog.node_types.len();
    let rels = catalog.relations.len();
    let enc: usize = widths.iter().map(|w| w * d + d).sum();
    let null: usize = catalog
        .node_types
        .iter()
        .filter(|t| uses_null_embedding(catalog.variant, **t))
        .count()
        * d;
    let per_layer = types * (4 * d * d + 2 * d) + rels * (2 * d * d / config.heads + 1);
    enc + null + config.layers * per_layer + head
}

/// Output of one recorded forward pass.
pub struct Forward {
    pub tape: Tape,
    /// Geometry-node predictions, `n_geometry × 200`.
    pub output: Var,
    /// Batch statistics per batch-norm buffer prefix (training mode only).
    pub stats: Vec<(String, BatchStats)>,
    /// Attention weights of every HGT layer; empty for GraphSAGE.
    pub attention: Vec<Attention>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Network assembly for one catalog.
#[derive(Debug, Clone)]
pub struct Network {
    pub config: NetworkConfig,
    pub catalog: RelationCatalog,
}

fn type_key(t: NodeType) -> String {
    t.name()
}

fn rel_key(layer: usize, r: usize) -> String {
    format!("l{layer}.r{r:03}")
}

impl Network {
    pub fn new(config: NetworkConfig, catalog: RelationCatalog) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, catalog })
    }

    pub fn is_homogeneous(&self) -> bool {
        self.catalog.variant == Variant::Homogeneous
    }

    /// Fresh parameters: Glorot matrices, zero biases and null embeddings,
    /// unit priors and batch-norm scales.
    pub fn init(&self, seed: u64) -> ParamStore {
        let d = self.config.hidden;
        let dk = self.config.head_dim();
        let h = self.config.heads;
        let mut b = ParamBuilder::new(seed);
        let bn = |b: &mut ParamBuilder, p: &str| {
            b.add(&format!("{p}.gamma"), 1, d, Init::Constant(1.0));
            b.add(&format!("{p}.beta"), 1, d, Init::Constant(0.0));
            b.buffer(&format!("{p}.mean"), vec![0.0; d]);
            b.buffer(&format!("{p}.var"), vec![1.0; d]);
        };
        for (t, w) in self.catalog.node_types.iter().zip(self.catalog.feature_widths()) {
            let k = type_key(*t);
            b.glorot(&format!("enc.{k}.w"), w, d);
            b.add(&format!("enc.{k}.b"), 1, d, Init::Constant(0.0));
            if uses_null_embedding(self.catalog.variant, *t) {
                b.add(&format!("null.{k}"), 1, d, Init::Constant(0.0));
            }
        }
        for l in 0..self.config.layers {
            if self.is_homogeneous() {
                b.glorot(&format!("l{l}.sage.w"), 2 * d, d);
                b.add(&format!("l{l}.sage.b"), 1, d, Init::Constant(0.0));
            } else {
                for t in &self.catalog.node_types {
                    let k = type_key(*t);
                    for m in ["k", "q", "msg", "a"] {
                        b.glorot(&format!("l{l}.{k}.{m}"), d, d);
                    }
                }
                let glorot_head = Init::Glorot { fan_in: dk, fan_out: dk };
                for r in 0..self.catalog.relations.len() {
                    let p = rel_key(l, r);
                    b.add(&format!("{p}.att"), h * dk, dk, glorot_head);
                    b.add(&format!("{p}.msg"), h * dk, dk, glorot_head);
                    b.add(&format!("{p}.mu"), 1, 1, Init::Constant(1.0));
                }
            }
            for t in &self.catalog.node_types {
                bn(&mut b, &format!("l{l}.bn.{}", type_key(*t)));
            }
        }
        b.glorot("head.w", d, GRID_POINTS);
        b.add("head.b", 1, GRID_POINTS, Init::Constant(0.0));
        b.finish()
    }

    fn check_schema(&self, g: &HeteroGraph) -> Result<()> {
        if g.variant != self.catalog.variant {
            return Err(Error::Config(format!(
                "graph is variant {} but the network expects {}",
                g.variant.name(),
                self.catalog.variant.name()
            )));
        }
        for (ns, w) in g.nodes.iter().zip(self.catalog.feature_widths()) {
            if ns.width != w {
                return Err(Error::Config(format!(
                    "{} features are {} wide, network expects {w}",
                    ns.node_type, ns.width
                )));
            }
        }
        Ok(())
    }

    /// Encoded states per node type, in catalog order.
    fn encode(&self, tape: &mut Tape, store: &ParamStore, g: &HeteroGraph) -> Result<Vec<Var>> {
        let mut h = Vec::with_capacity(g.nodes.len());
        for ns in &g.nodes {
            let k = type_key(ns.node_type);
            let x = tape.constant(DenseArray::new(ns.count, ns.width, ns.features.clone()));
            let w = tape.param(store, store.slot(&format!("enc.{k}.w"))?);
            let b = tape.param(store, store.slot(&format!("enc.{k}.b"))?);
            let xw = tape.matmul(x, w);
            let mut e = tape.add_row(xw, b);
            if uses_null_embedding(self.catalog.variant, ns.node_type) {
                let null = tape.param(store, store.slot(&format!("null.{k}"))?);
                e = tape.mask_replace(e, null, &ns.known);
            }
            h.push(e);
        }
        Ok(h)
    }

    /// Records a full pass and returns the tape with the prediction.
    pub fn forward(&self, store: &ParamStore, g: &HeteroGraph, mode: Mode) -> Result<Forward> {
        self.check_schema(g)?;
        let mut tape = Tape::new();
        let mut h = self.encode(&mut tape, store, g)?;
        let mut stats = Vec::new();
        let mut attention = Vec::new();
        let act = self.config.activation;
        for l in 0..self.config.layers {
            if self.is_homogeneous() {
                let w = tape.param(store, store.slot(&format!("l{l}.sage.w"))?);
                let b = tape.param(store, store.slot(&format!("l{l}.sage.b"))?);
                let es = &g.edges[0];
                h[0] = sage_layer(&mut tape, h[0], w, b, &es.src, &es.dst, act);
            } else {
                let (next, alpha) = hgt_layer(&mut tape, store, &self.catalog, g, &h, l, self.config.heads, act)?;
                h = next;
                attention.push(alpha);
            }
            for (i, ns) in g.nodes.iter().enumerate() {
                let p = format!("l{l}.bn.{}", type_key(ns.node_type));
                let gamma = tape.param(store, store.slot(&format!("{p}.gamma"))?);
                let beta = tape.param(store, store.slot(&format!("{p}.beta"))?);
                let y = if ns.count == 0 {
                    h[i]
                } else {
                    match mode {
                        Mode::Train => {
                            let (y, s) = tape.batch_norm(h[i], gamma, beta);
                            stats.push((p, s));
                            y
                        }
                        Mode::Eval => {
                            let mean = &store.buffers[&format!("{p}.mean")];
                            let var = &store.buffers[&format!("{p}.var")];
                            tape.batch_norm_eval(h[i], gamma, beta, mean, var)
                        }
                    }
                };
                h[i] = if self.is_homogeneous() { y } else { act.apply(&mut tape, y) };
            }
        }
        let w = tape.param(store, store.slot("head.w")?);
        let b = tape.param(store, store.slot("head.b")?);
        let y = tape.matmul(h[0], w);
        let output = tape.add_row(y, b);
        if !tape.value(output).all_finite() {
            return Err(Error::Numeric("non-finite network output".into()));
        }
        Ok(Forward {
            tape,
            output,
            stats,
            attention,
        })
    }

    /// Eval-mode prediction, `n_geometry × 200`.
    pub fn predict(&self, store: &ParamStore, g: &HeteroGraph) -> Result<DenseArray> {
        let f = self.forward(store, g, Mode::Eval)?;
        Ok(f.tape.value(f.output).clone())
    }
}

/// Folds batch statistics into the running buffers.
pub fn update_running_stats(store: &mut ParamStore, stats: &[(String, BatchStats)], momentum: f64) {
    for (p, s) in stats {
        for (key, new) in [("mean", &s.mean), ("var", &s.var)] {
            if let Some(buf) = store.buffers.get_mut(&format!("{p}.{key}")) {
                for (b, v) in buf.iter_mut().zip(new) {
                    *b = (1.0 - momentum) * *b + momentum * v;
                }
            }
        }
    }
}

/// `act([h ‖ mean of in-neighbours] W + b)`; isolated nodes aggregate zeros.
pub fn sage_layer(tape: &mut Tape, h: Var, w: Var, b: Var, src: &[usize], dst: &[usize], act: Activation) -> Var {
    let n = tape.value(h).rows();
    let mut deg = vec![0usize; n];
    for &t in dst {
        deg[t] += 1;
    }
    let gathered = tape.gather(h, src);
    let summed = tape.scatter_add(gathered, dst, n);
    let inv = deg.iter().map(|k| if *k == 0 { 0.0 } else { 1.0 / *k as f64 }).collect();
    let mean = tape.row_scale(summed, inv);
    let cat = tape.concat_cols(h, mean);
    let lin = tape.matmul(cat, w);
    let lin = tape.add_row(lin, b);
    act.apply(tape, lin)
}

/// Attention weights of one layer, `E_r × heads` per relation in catalog
/// order (empty relations give zero rows).
pub type Attention = Vec<Var>;

/// One HGT layer over all node types. Returns the new states and the
/// per-relation attention weights.
#[allow(clippy::too_many_arguments)]
pub fn hgt_layer(
    tape: &mut Tape,
    store: &ParamStore,
    catalog: &RelationCatalog,
    g: &HeteroGraph,
    h: &[Var],
    layer: usize,
    heads: usize,
    act: Activation,
) -> Result<(Vec<Var>, Attention)> {
    let types = &catalog.node_types;
    let d = tape.value(h[0]).cols();
    let dk = d / heads;
    let p = |tape: &mut Tape, name: String| -> Result<Var> { Ok(tape.param(store, store.slot(&name)?)) };
    let mut k = Vec::with_capacity(types.len());
    let mut q = Vec::with_capacity(types.len());
    let mut m = Vec::with_capacity(types.len());
    for (i, t) in types.iter().enumerate() {
        let key = type_key(*t);
        let wk = p(tape, format!("l{layer}.{key}.k"))?;
        let wq = p(tape, format!("l{layer}.{key}.q"))?;
        let wm = p(tape, format!("l{layer}.{key}.msg"))?;
        k.push(tape.matmul(h[i], wk));
        q.push(tape.matmul(h[i], wq));
        m.push(tape.matmul(h[i], wm));
    }
    let mut alpha: Vec<Option<Var>> = vec![None; catalog.relations.len()];
    let mut out = h.to_vec();
    let scale = 1.0 / (dk as f64).sqrt();
    for (ti, t) in types.iter().enumerate() {
        let mut scores = Vec::new();
        let mut msgs = Vec::new();
        let mut seg = Vec::new();
        let mut members = Vec::new();
        for (ri, es) in g.edges.iter().enumerate() {
            if es.relation.dst != *t || es.is_empty() {
                continue;
            }
            let si = catalog
                .type_index(es.relation.src)
                .ok_or_else(|| Error::Config(format!("relation {} has an unknown source", es.relation)))?;
            let rk = rel_key(layer, ri);
            let watt = p(tape, format!("{rk}.att"))?;
            let wmsg = p(tape, format!("{rk}.msg"))?;
            let mu = p(tape, format!("{rk}.mu"))?;
            let ku = tape.gather(k[si], &es.src);
            let ku = tape.head_matmul(ku, watt, heads);
            let qv = tape.gather(q[ti], &es.dst);
            let s = tape.head_dot(ku, qv, heads);
            let s = tape.scale_scalar(s, mu, scale);
            if !tape.value(s).all_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite attention score in layer {layer}, relation {}",
                    es.relation
                )));
            }
            let mu_src = tape.gather(m[si], &es.src);
            msgs.push(tape.head_matmul(mu_src, wmsg, heads));
            scores.push(s);
            seg.extend_from_slice(&es.dst);
            members.push((ri, es.len()));
        }
        if scores.is_empty() {
            continue;
        }
        let n = tape.value(h[ti]).rows();
        let s_all = tape.concat_rows(&scores);
        let m_all = tape.concat_rows(&msgs);
        let a = tape.segment_softmax(s_all, &seg, n);
        let mut start = 0;
        for (ri, len) in members {
            alpha[ri] = Some(tape.slice_rows(a, start, len));
            start += len;
        }
        let weighted = tape.head_scale(m_all, a, heads);
        let agg = tape.scatter_add(weighted, &seg, n);
        let sig = act.apply(tape, agg);
        let wa = p(tape, format!("l{layer}.{}.a", type_key(*t)))?;
        let upd = tape.matmul(sig, wa);
        out[ti] = tape.add(upd, h[ti]);
    }
    let alpha = alpha
        .into_iter()
        .map(|a| a.unwrap_or_else(|| tape.constant(DenseArray::zeros(0, heads))))
        .collect();
    Ok((out, alpha))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(NetworkConfig::default().validate().is_ok());
        let bad = NetworkConfig { hidden: 10, heads: 4, ..Default::default() };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        assert_eq!("TANH".parse::<Activation>().unwrap(), Activation::Tanh);
        assert!("gelu".parse::<Activation>().is_err());
    }

    #[test]
    fn count_matches_allocation() {
        let cfg = NetworkConfig { layers: 2, hidden: 8, heads: 2, ..Default::default() };
        for v in Variant::HETERO.into_iter().chain([Variant::Homogeneous]) {
            let net = Network::new(cfg, RelationCatalog::new(v)).unwrap();
            assert_eq!(net.init(0).scalar_count(), count_parameters(&cfg, &net.catalog), "{v}");
        }
    }
}
