use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::{rmse, Normalization, PreparedData, Split};
use crate::error::{Error, Result};
use crate::graph::{HeteroGraph, RelationCatalog, Variant};
use crate::nn::{
    count_parameters, update_running_stats, AdamConfig, Mode, Network, NetworkConfig, OptimState,
    ParamStore,
};
use crate::oracle::{Channel, GRID_POINTS};

/// One training run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub variant: Variant,
    pub channel: Channel,
    pub network: NetworkConfig,
    pub lr: f64,
    pub l2: f64,
    /// Graphs per optimizer step.
    pub batch_size: usize,
    pub epochs: usize,
    pub bn_momentum: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            variant: Variant::D,
            channel: Channel::Stress,
            network: NetworkConfig::default(),
            lr: 1e-3,
            l2: 1e-5,
            batch_size: 200,
            epochs: 1000,
            bn_momentum: 0.1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr must be a finite non-negative number, got {}", self.lr)));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::Config(format!("l2 must be a finite non-negative number, got {}", self.l2)));
        }
        if !(0.0..=1.0).contains(&self.bn_momentum) {
            return Err(Error::Config(format!("bn_momentum must lie in [0, 1], got {}", self.bn_momentum)));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            weight_decay: self.l2,
            ..AdamConfig::default()
        }
    }

    pub fn build_network(&self) -> Result<Network> {
        Network::new(self.network, RelationCatalog::new(self.variant))
    }
}

/// Curves and final scores of one run, in physical units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub train_curve: Vec<f64>,
    pub val_curve: Vec<f64>,
    /// Zero-based epoch of the retained parameters.
    pub best_epoch: usize,
    pub best_val: f64,
    pub test_rmse: f64,
    pub wall_time_s: f64,
    pub param_count: usize,
}

/// Parameters and everything needed to use them.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub config: TrainConfig,
    pub network: Network,
    pub store: ParamStore,
    pub optim: Option<OptimState>,
    pub norm: Normalization,
    pub metrics: RunMetrics,
}

fn union(data: &PreparedData, idx: &[usize]) -> Result<HeteroGraph> {
    let refs: Vec<&HeteroGraph> = idx.iter().map(|i| &data.graphs[*i]).collect();
    HeteroGraph::union(&refs)
}

const EVAL_CHUNK: usize = 64;

/// Physical-unit predictions, one `n_units × 200` block per listed case.
pub fn predict(
    network: &Network,
    store: &ParamStore,
    norm: &Normalization,
    channel: Channel,
    data: &PreparedData,
    cases: &[usize],
) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(cases.len());
    for chunk in cases.chunks(EVAL_CHUNK) {
        let g = union(data, chunk)?;
        let y = network.predict(store, &g)?;
        for p in 0..chunk.len() {
            let rows = g.geometry_offsets[p]..g.geometry_offsets[p + 1];
            let block = &y.as_slice()[rows.start * GRID_POINTS..rows.end * GRID_POINTS];
            out.push(block.iter().map(|z| norm.denormalize(channel, *z)).collect());
        }
    }
    Ok(out)
}

fn pooled_rmse(pred: &[Vec<f64>], data: &PreparedData, ch: Channel, cases: &[usize]) -> Result<f64> {
    let y: Vec<f64> = cases.iter().flat_map(|i| data.targets[*i][ch.index()].iter().copied()).collect();
    let yhat: Vec<f64> = pred.iter().flatten().copied().collect();
    rmse(&y, &yhat)
}

/// Minibatch Adam on z-scored targets with best-validation retention.
pub fn train(cfg: &TrainConfig, data: &PreparedData, split: &Split, norm: &Normalization) -> Result<TrainedModel> {
    cfg.validate()?;
    if data.variant != cfg.variant {
        return Err(Error::Config(format!(
            "data built for variant {} but the run expects {}",
            data.variant.name(),
            cfg.variant.name()
        )));
    }
    if split.train.is_empty() || split.val.is_empty() {
        return Err(Error::Usage("training needs non-empty train and validation splits".into()));
    }
    let start = Instant::now();
    let ch = cfg.channel;
    let network = cfg.build_network()?;
    let mut store = network.init(cfg.seed);
    let mut optim = OptimState::new(cfg.adam(), &store);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x7261_696e_5f73_6875);
    let mut order = split.train.clone();
    let mut train_curve = Vec::with_capacity(cfg.epochs);
    let mut val_curve = Vec::with_capacity(cfg.epochs);
    let mut best = (f64::INFINITY, 0usize, store.clone());
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut sse, mut count) = (0.0, 0usize);
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            // Sorted so a batch's union graph depends on its members only.
            let mut batch = chunk.to_vec();
            batch.sort_unstable();
            let batch = &batch[..];
            let g = union(data, batch)?;
            let target: Vec<f64> = batch
                .iter()
                .flat_map(|i| data.targets[*i][ch.index()].iter().map(|y| norm.normalize(ch, *y)))
                .collect();
            let mut f = network.forward(&store, &g, Mode::Train)?;
            let loss = f.tape.rmse(f.output, &target);
            let l = f.tape.value(loss).get(0, 0);
            if !l.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite loss in epoch {epoch}, batch {b} (cases {batch:?})"
                )));
            }
            let grads = f.tape.backward(loss, &store)?;
            optim.step(&mut store, &grads);
            update_running_stats(&mut store, &f.stats, cfg.bn_momentum);
            sse += l * l * target.len() as f64;
            count += target.len();
        }
        train_curve.push((sse / count as f64).sqrt() * norm.std[ch.index()]);
        let pred = predict(&network, &store, norm, ch, data, &split.val)?;
        let val = pooled_rmse(&pred, data, ch, &split.val)?;
        val_curve.push(val);
        if val < best.0 {
            best = (val, epoch, store.clone());
        }
    }
    let (best_val, best_epoch, store) = best;
    let test_rmse = if split.test.is_empty() {
        f64::NAN
    } else {
        let pred = predict(&network, &store, norm, ch, data, &split.test)?;
        pooled_rmse(&pred, data, ch, &split.test)?
    };
    let metrics = RunMetrics {
        train_curve,
        val_curve,
        best_epoch,
        best_val,
        test_rmse,
        wall_time_s: start.elapsed().as_secs_f64(),
        param_count: count_parameters(&cfg.network, &network.catalog),
    };
    Ok(TrainedModel {
        config: *cfg,
        network,
        store,
        optim: Some(optim),
        norm: *norm,
        metrics,
    })
}

/// Scores of one model on a set of cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub channel: Channel,
    /// Pooled over all listed cases, physical units.
    pub rmse: f64,
    /// `(case index, RMSE)` per listed case.
    pub per_record: Vec<(usize, f64)>,
    /// Percentile rank of each record's RMSE, in percent; the worst is 100.
    pub percentile: Vec<f64>,
}

/// Percentile rank `100 · #{j : r_j ≤ r_i} / n` of every entry.
pub fn percentile_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    values
        .iter()
        .map(|v| 100.0 * values.iter().filter(|w| *w <= v).count() as f64 / n)
        .collect()
}

/// Pooled and per-case RMSE of `pred` (one block per listed case).
pub fn score_predictions(pred: &[Vec<f64>], data: &PreparedData, ch: Channel, cases: &[usize]) -> Result<EvalMetrics> {
    if pred.len() != cases.len() {
        return Err(Error::Usage(format!("{} predictions for {} cases", pred.len(), cases.len())));
    }
    let per: Vec<f64> = pred
        .iter()
        .zip(cases)
        .map(|(p, i)| rmse(&data.targets[*i][ch.index()], p))
        .collect::<Result<_>>()?;
    Ok(EvalMetrics {
        channel: ch,
        rmse: pooled_rmse(pred, data, ch, cases)?,
        percentile: percentile_ranks(&per),
        per_record: cases.iter().copied().zip(per).collect(),
    })
}

/// Evaluates a trained model on the listed cases.
pub fn evaluate(model: &TrainedModel, data: &PreparedData, cases: &[usize]) -> Result<EvalMetrics> {
    let ch = model.config.channel;
    let pred = predict(&model.network, &model.store, &model.norm, ch, data, cases)?;
    score_predictions(&pred, data, ch, cases)
}

/// Point-wise magnitude of three displacement components.
pub fn total_displacement(u: [&[f64]; 3]) -> Vec<f64> {
    (0..u[0].len())
        .map(|i| (u[0][i].powi(2) + u[1][i].powi(2) + u[2][i].powi(2)).sqrt())
        .collect()
}

/// RMSE of the total displacement assembled from three component
/// predictions against the one assembled from the targets.
pub fn total_displacement_rmse(pred: [&[Vec<f64>]; 3], data: &PreparedData, cases: &[usize]) -> Result<f64> {
    let mut y = Vec::new();
    let mut yhat = Vec::new();
    for (k, i) in cases.iter().enumerate() {
        let t = &data.targets[*i];
        y.extend(total_displacement([&t[0], &t[1], &t[2]]));
        yhat.extend(total_displacement([&pred[0][k], &pred[1][k], &pred[2][k]]));
    }
    rmse(&y, &yhat)
}
