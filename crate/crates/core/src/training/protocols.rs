use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::{Normalization, PreparedData, Split};
use super::trainer::{train, RunMetrics, TrainConfig, TrainedModel};
use crate::error::{Error, Result};
use crate::graph::{RelationCatalog, Variant};
use crate::nn::count_parameters;

/// Sample mean and standard deviation (`n − 1` denominator; zero for one value).
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}

/// Receives every finished model of a protocol, for example to persist it.
pub type RunSink<'a> = &'a mut dyn FnMut(&TrainedModel) -> Result<()>;

/// A sink that keeps nothing.
pub fn discard(_: &TrainedModel) -> Result<()> {
    Ok(())
}

/// Runs `cfg` once per seed on the same data and split.
pub fn train_seeds(
    cfg: &TrainConfig,
    data: &PreparedData,
    split: &Split,
    norm: &Normalization,
    seeds: &[u64],
    sink: RunSink,
) -> Result<Vec<RunMetrics>> {
    if seeds.is_empty() {
        return Err(Error::Usage("at least one seed is required".into()));
    }
    let mut out = Vec::with_capacity(seeds.len());
    for s in seeds {
        let m = train(&TrainConfig { seed: *s, ..*cfg }, data, split, norm)?;
        sink(&m)?;
        out.push(m.metrics);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: Variant,
    pub params: usize,
    pub rmse_mean: f64,
    pub rmse_std: f64,
    /// Percentage above the lowest mean; exactly one row holds 0.
    pub pct_from_best: f64,
    pub runs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    /// Rows from per-variant test RMSE runs.
    pub fn from_runs(cfg: &TrainConfig, runs: Vec<(Variant, Vec<f64>)>) -> Self {
        let mut rows: Vec<AblationRow> = runs
            .into_iter()
            .map(|(v, r)| {
                let (m, s) = mean_std(&r);
                AblationRow {
                    variant: v,
                    params: count_parameters(&cfg.network, &RelationCatalog::new(v)),
                    rmse_mean: m,
                    rmse_std: s,
                    pct_from_best: 0.0,
                    runs: r,
                }
            })
            .collect();
        let best = rows
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.rmse_mean.total_cmp(&b.1.rmse_mean))
            .map(|(i, r)| (i, r.rmse_mean));
        if let Some((bi, b)) = best {
            for (i, r) in rows.iter_mut().enumerate() {
                r.pct_from_best = if i == bi { 0.0 } else { 100.0 * (r.rmse_mean - b) / b };
            }
        }
        Self { rows }
    }
}

/// Trains every requested variant over `seeds` on one fixed split.
/// `data(v)` supplies prepared graphs for variant `v`.
pub fn ablation_run(
    cfg: &TrainConfig,
    variants: &[Variant],
    mut data: impl FnMut(Variant) -> Result<PreparedData>,
    split: &Split,
    seeds: &[u64],
    sink: RunSink,
) -> Result<AblationTable> {
    let mut runs = Vec::with_capacity(variants.len());
    for v in variants {
        let d = data(*v)?;
        let norm = Normalization::fit(&d, &split.train)?;
        let c = TrainConfig { variant: *v, ..*cfg };
        let m = train_seeds(&c, &d, split, &norm, seeds, sink)?;
        runs.push((*v, m.into_iter().map(|r| r.test_rmse).collect()));
    }
    Ok(AblationTable::from_runs(cfg, runs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: String,
    pub variant: Variant,
    pub rmse_mean: f64,
    pub rmse_std: f64,
    pub runs: Vec<RunMetrics>,
}

impl ModelSummary {
    pub fn new(model: &str, variant: Variant, runs: Vec<RunMetrics>) -> Self {
        let r: Vec<f64> = runs.iter().map(|m| m.test_rmse).collect();
        let (m, s) = mean_std(&r);
        Self {
            model: model.into(),
            variant,
            rmse_mean: m,
            rmse_std: s,
            runs,
        }
    }
}

/// GraphSAGE on the homogeneous graph against HGT on a heterogeneous one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub homogeneous: ModelSummary,
    pub heterogeneous: ModelSummary,
}

impl Comparison {
    /// Relative RMSE reduction of the heterogeneous model, percent.
    pub fn reduction_pct(&self) -> f64 {
        100.0 * (self.homogeneous.rmse_mean - self.heterogeneous.rmse_mean) / self.homogeneous.rmse_mean
    }
}

pub fn compare_homo_hetero(
    homo_cfg: &TrainConfig,
    hetero_cfg: &TrainConfig,
    homo: &PreparedData,
    hetero: &PreparedData,
    split: &Split,
    seeds: &[u64],
    sink: RunSink,
) -> Result<Comparison> {
    let norm = Normalization::fit(hetero, &split.train)?;
    let h = TrainConfig { variant: Variant::Homogeneous, ..*homo_cfg };
    let homogeneous = ModelSummary::new("graphsage", Variant::Homogeneous, train_seeds(&h, homo, split, &norm, seeds, sink)?);
    let heterogeneous = ModelSummary::new("hgt", hetero_cfg.variant, train_seeds(hetero_cfg, hetero, split, &norm, seeds, sink)?);
    Ok(Comparison {
        homogeneous,
        heterogeneous,
    })
}

/// Scrambled radical-inverse sequence in the first `dims` prime bases, with
/// one random digit permutation per base and digit position.
#[derive(Debug, Clone)]
pub struct ScrambledHalton {
    bases: Vec<u64>,
    perms: Vec<Vec<Vec<u64>>>,
}

const HALTON_DIGITS: usize = 24;
const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

impl ScrambledHalton {
    pub fn new(dims: usize, seed: u64) -> Result<Self> {
        if dims == 0 || dims > PRIMES.len() {
            return Err(Error::Usage(format!("sampler supports 1 to {} dimensions", PRIMES.len())));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bases = PRIMES[..dims].to_vec();
        let perms = bases
            .iter()
            .map(|b| {
                (0..HALTON_DIGITS)
                    .map(|_| {
                        let mut p: Vec<u64> = (0..*b).collect();
                        p.shuffle(&mut rng);
                        p
                    })
                    .collect()
            })
            .collect();
        Ok(Self { bases, perms })
    }

    /// Point `i` in `[0, 1)^dims`.
    pub fn point(&self, i: u64) -> Vec<f64> {
        self.bases
            .iter()
            .zip(&self.perms)
            .map(|(b, perm)| {
                let mut n = i;
                let mut f = 1.0 / *b as f64;
                let mut x = 0.0;
                for p in perm {
                    x += p[(n % b) as usize] as f64 * f;
                    n /= b;
                    f /= *b as f64;
                }
                x
            })
            .collect()
    }
}

/// Ranges of the searched hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSpace {
    /// Log-uniform.
    pub lr: (f64, f64),
    /// Inclusive integer range.
    pub layers: (usize, usize),
    /// Candidate widths, each divisible by the head count.
    pub hidden: Vec<usize>,
    /// Log-uniform.
    pub l2: (f64, f64),
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            lr: (1e-4, 1e-2),
            layers: (2, 8),
            hidden: vec![16, 32, 64, 128],
            l2: (1e-6, 1e-3),
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        let pos = |(a, b): (f64, f64)| a > 0.0 && b >= a && b.is_finite();
        if !pos(self.lr) || !pos(self.l2) || self.layers.0 == 0 || self.layers.1 < self.layers.0 || self.hidden.is_empty() {
            return Err(Error::Config(format!("invalid search space {self:?}")));
        }
        Ok(())
    }

    /// Maps a unit-cube point to `(lr, layers, hidden, l2)`.
    pub fn decode(&self, u: &[f64]) -> (f64, usize, usize, f64) {
        let log = |(a, b): (f64, f64), t: f64| (a.ln() + t * (b.ln() - a.ln())).exp();
        let span = self.layers.1 - self.layers.0 + 1;
        let layers = self.layers.0 + ((u[1] * span as f64) as usize).min(span - 1);
        let k = ((u[2] * self.hidden.len() as f64) as usize).min(self.hidden.len() - 1);
        (log(self.lr, u[0]), layers, self.hidden[k], log(self.l2, u[3]))
    }

    /// The first `budget` points of the scrambled sequence.
    pub fn sample(&self, budget: usize, scramble_seed: u64) -> Result<Vec<(f64, usize, usize, f64)>> {
        self.validate()?;
        if budget < 1 {
            return Err(Error::Usage("search budget must be at least 1".into()));
        }
        let h = ScrambledHalton::new(4, scramble_seed)?;
        Ok((0..budget as u64).map(|i| self.decode(&h.point(i))).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchRow {
    pub lr: f64,
    pub layers: usize,
    pub hidden: usize,
    pub l2: f64,
    pub val_rmse: f64,
    pub test_rmse: f64,
}

/// Short training per sampled configuration; rows sorted by validation RMSE.
pub fn quasi_random_search(
    base: &TrainConfig,
    space: &SearchSpace,
    budget: usize,
    scramble_seed: u64,
    data: &PreparedData,
    split: &Split,
    sink: RunSink,
) -> Result<Vec<SearchRow>> {
    let norm = Normalization::fit(data, &split.train)?;
    let mut rows = Vec::with_capacity(budget);
    for (lr, layers, hidden, l2) in space.sample(budget, scramble_seed)? {
        let mut cfg = TrainConfig { lr, l2, ..*base };
        cfg.network.layers = layers;
        cfg.network.hidden = hidden;
        let model = train(&cfg, data, split, &norm)?;
        sink(&model)?;
        let m = model.metrics;
        rows.push(SearchRow {
            lr,
            layers,
            hidden,
            l2,
            val_rmse: m.best_val,
            test_rmse: m.test_rmse,
        });
    }
    rows.sort_by(|a, b| a.val_rmse.total_cmp(&b.val_rmse));
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSizeRow {
    pub size: usize,
    pub rmse_mean: f64,
    pub rmse_std: f64,
    pub runs: Vec<f64>,
}

/// Retrains on nested prefixes of the training split. Validation, test and
/// normalization stay those of the full split.
pub fn data_size_study(
    cfg: &TrainConfig,
    data: &PreparedData,
    split: &Split,
    sizes: &[usize],
    seeds: &[u64],
    sink: RunSink,
) -> Result<Vec<DataSizeRow>> {
    let norm = Normalization::fit(data, &split.train)?;
    let mut rows = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let r = data_size_runs(cfg, data, split, &norm, size, seeds, &mut *sink)?;
        let (m, s) = mean_std(&r);
        rows.push(DataSizeRow {
            size,
            rmse_mean: m,
            rmse_std: s,
            runs: r,
        });
    }
    Ok(rows)
}

/// Test RMSE per seed when training on the first `size` training cases.
pub fn data_size_runs(
    cfg: &TrainConfig,
    data: &PreparedData,
    split: &Split,
    norm: &Normalization,
    size: usize,
    seeds: &[u64],
    sink: RunSink,
) -> Result<Vec<f64>> {
    if size == 0 || size > split.train.len() {
        return Err(Error::Usage(format!(
            "training size {size} outside 1..={}",
            split.train.len()
        )));
    }
    let sub = Split {
        train: split.train[..size].to_vec(),
        val: split.val.clone(),
        test: split.test.clone(),
    };
    Ok(train_seeds(cfg, data, &sub, norm, seeds, sink)?.into_iter().map(|m| m.test_rmse).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_points_distinct_and_deterministic() {
        let s = SearchSpace::default();
        let a = s.sample(8, 5).unwrap();
        let b = s.sample(8, 5).unwrap();
        assert_eq!(a, b);
        let mut lrs: Vec<f64> = a.iter().map(|r| r.0).collect();
        lrs.sort_by(f64::total_cmp);
        lrs.dedup();
        assert_eq!(lrs.len(), 8);
        assert!(lrs.iter().all(|l| (1e-4..=1e-2).contains(l)));
        assert!(matches!(s.sample(0, 1), Err(Error::Usage(_))));
    }

    #[test]
    fn halton_low_discrepancy_in_first_dimension() {
        // Every base-2 elementary interval of width 1/8 holds exactly one of
        // the first eight points.
        let h = ScrambledHalton::new(1, 9).unwrap();
        let mut cells = [0; 8];
        for i in 0..8 {
            cells[(h.point(i)[0] * 8.0) as usize] += 1;
        }
        assert_eq!(cells, [1; 8]);
    }

    #[test]
    fn ablation_best_row() {
        let cfg = TrainConfig::default();
        let t = AblationTable::from_runs(
            &cfg,
            vec![(Variant::A, vec![2.0, 2.2]), (Variant::D, vec![1.0, 1.2]), (Variant::E, vec![1.5, 1.7])],
        );
        assert_eq!(t.rows.iter().filter(|r| r.pct_from_best == 0.0).count(), 1);
        assert!((t.rows[0].pct_from_best - 100.0 * (2.1 - 1.1) / 1.1).abs() < 1e-12);
    }

    #[test]
    fn mean_std_sample() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert_eq!(s, 1.0);
        assert_eq!(mean_std(&[4.0]), (4.0, 0.0));
    }
}
