use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_graph, FeatureScales, HeteroGraph, Variant};
use crate::oracle::{label_case, Channel, OracleConfig};
use crate::panel::{CaseSpec, PanelCase};

/// Labelled panel cases. Every float is representable in 32 bits so the
/// archive format round-trips exactly.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub cases: Vec<PanelCase>,
}

fn q(v: &mut f64) {
    *v = f64::from(*v as f32);
}

/// Rounds every input and target float of `case` to 32-bit precision.
pub fn quantize_case(case: &mut PanelCase) {
    let g = &mut case.geometry;
    for v in [
        &mut g.length,
        &mut g.width,
        &mut g.plate_thickness,
        &mut g.web_thickness,
        &mut g.web_height,
        &mut g.flange_thickness,
        &mut g.flange_width,
    ] {
        q(v);
    }
    let m = &mut case.material;
    for v in [
        &mut m.youngs_modulus,
        &mut m.poisson_ratio,
        &mut m.yield_stress,
        &mut m.hardening_coefficient,
        &mut m.hardening_exponent,
        &mut m.plateau_strain,
    ] {
        q(v);
    }
    case.edge_bcs.iter_mut().flat_map(|e| e.profiles.iter_mut().flatten()).for_each(q);
    case.loads.iter_mut().flat_map(|l| l.samples.iter_mut()).for_each(q);
    if let Some(t) = &mut case.targets {
        t.iter_mut().flat_map(|g| g.values.iter_mut()).for_each(q);
    }
}

/// Outcome of a generation run.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub dataset: Dataset,
    /// `(case seed, error message)` for every skipped case.
    pub failures: Vec<(u64, String)>,
}

/// Seed of case `i` in a dataset drawn with `seed`.
pub fn case_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64)
}

/// Draws, quantizes and labels `n` cases on a pool of `jobs` workers.
/// Cases whose solve fails are skipped and reported.
pub fn generate_dataset(spec: &CaseSpec, oracle: &OracleConfig, n: usize, seed: u64, jobs: usize) -> Result<Generated> {
    generate_dataset_with_progress(spec, oracle, n, seed, jobs, &mut |_, _| {})
}

const PROGRESS_CHUNK: usize = 50;

/// As [`generate_dataset`], calling `progress(done, n)` after every chunk.
/// The result does not depend on `jobs` or the chunking.
pub fn generate_dataset_with_progress(
    spec: &CaseSpec,
    oracle: &OracleConfig,
    n: usize,
    seed: u64,
    jobs: usize,
    progress: &mut dyn FnMut(usize, usize),
) -> Result<Generated> {
    oracle.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let mut cases = Vec::with_capacity(n);
    let mut failures = Vec::new();
    for start in (0..n).step_by(PROGRESS_CHUNK) {
        let end = (start + PROGRESS_CHUNK).min(n);
        let results: Vec<(u64, Result<PanelCase>)> = pool.install(|| {
            (start..end)
                .into_par_iter()
                .map(|i| {
                    let s = case_seed(seed, i);
                    let r = spec.generate(s).and_then(|mut c| {
                        quantize_case(&mut c);
                        let mut c = label_case(&c, oracle)?;
                        quantize_case(&mut c);
                        Ok(c)
                    });
                    (s, r)
                })
                .collect()
        });
        for (s, r) in results {
            match r {
                Ok(c) => cases.push(c),
                Err(e) => failures.push((s, e.to_string())),
            }
        }
        progress(end, n);
    }
    Ok(Generated {
        dataset: Dataset { cases },
        failures,
    })
}

/// Graphs of one variant plus per-channel physical targets, row `u` of a
/// case's target block being structural unit `u`.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub variant: Variant,
    pub graphs: Vec<HeteroGraph>,
    /// `targets[case][channel]`, `n_units × 200` values, unit-major.
    pub targets: Vec<[Vec<f64>; Channel::COUNT]>,
}

impl PreparedData {
    pub fn new(ds: &Dataset, variant: Variant, scales: &FeatureScales) -> Result<Self> {
        let mut graphs = Vec::with_capacity(ds.cases.len());
        let mut targets = Vec::with_capacity(ds.cases.len());
        for (i, c) in ds.cases.iter().enumerate() {
            graphs.push(build_graph(c, variant, scales)?);
            let grids = c
                .targets
                .as_ref()
                .ok_or_else(|| Error::Usage(format!("case {i} has no oracle targets")))?;
            targets.push(Channel::ALL.map(|ch| grids.iter().flat_map(|g| g.channel(ch)).collect()));
        }
        Ok(Self {
            variant,
            graphs,
            targets,
        })
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }
}

/// Per-channel z-score statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: [f64; Channel::COUNT],
    pub std: [f64; Channel::COUNT],
}

impl Normalization {
    /// Statistics over every grid value of the listed cases. A constant
    /// channel gets unit scale.
    pub fn fit(data: &PreparedData, cases: &[usize]) -> Result<Self> {
        if cases.is_empty() {
            return Err(Error::Usage("normalization needs at least one case".into()));
        }
        let mut mean = [0.0; Channel::COUNT];
        let mut std = [0.0; Channel::COUNT];
        for ch in 0..Channel::COUNT {
            let vals = || cases.iter().flat_map(|i| data.targets[*i][ch].iter());
            let n = vals().count() as f64;
            let m = vals().sum::<f64>() / n;
            let v = vals().map(|x| (x - m).powi(2)).sum::<f64>() / n;
            mean[ch] = m;
            std[ch] = if v > 0.0 { v.sqrt() } else { 1.0 };
        }
        Ok(Self { mean, std })
    }

    pub fn normalize(&self, ch: Channel, y: f64) -> f64 {
        (y - self.mean[ch.index()]) / self.std[ch.index()]
    }

    pub fn denormalize(&self, ch: Channel, z: f64) -> f64 {
        z * self.std[ch.index()] + self.mean[ch.index()]
    }
}

/// `sqrt(Σ(y − ŷ)² / n)` over all entries.
pub fn rmse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    if y.len() != yhat.len() {
        return Err(Error::Usage(format!(
            "rmse over arrays of {} and {} entries",
            y.len(),
            yhat.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::Usage("rmse over an empty array".into()));
    }
    let ss: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((ss / y.len() as f64).sqrt())
}

/// Case indices of a train/validation/test partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded shuffle of `0..n` cut at rounded fractions; the test part takes
/// the remainder.
pub fn split_dataset(n: usize, fractions: [f64; 3], seed: u64) -> Result<Split> {
    if n == 0 {
        return Err(Error::Usage("cannot split an empty dataset".into()));
    }
    if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Usage(format!(
            "split fractions {fractions:?} must lie in [0, 1] and sum to 1"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((fractions[0] * n as f64).round() as usize).min(n);
    let n_val = ((fractions[1] * n as f64).round() as usize).min(n - n_train);
    let test = idx.split_off(n_train + n_val);
    let val = idx.split_off(n_train);
    Ok(Split { train: idx, val, test })
}

/// `n` distinct run seeds drawn from `master`. Seeds stay below 2^63 so
/// configuration files can hold them.
pub fn derive_seeds(master: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    let mut out: Vec<u64> = Vec::with_capacity(n);
    while out.len() < n {
        let s: u64 = rng.gen::<u64>() >> 1;
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmse_values() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 12.5f64.sqrt());
        assert!(matches!(rmse(&[0.0], &[0.0, 1.0]), Err(Error::Usage(_))));
    }

    #[test]
    fn split_sizes() {
        let s = split_dataset(2000, [0.8, 0.1, 0.1], 0).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (1600, 200, 200));
        let s = split_dataset(10, [0.8, 0.1, 0.1], 3).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (8, 1, 1));
        assert_eq!(s, split_dataset(10, [0.8, 0.1, 0.1], 3).unwrap());
        assert!(matches!(split_dataset(0, [0.8, 0.1, 0.1], 0), Err(Error::Usage(_))));
    }

    #[test]
    fn seeds_are_distinct() {
        let s = derive_seeds(42, 5);
        assert_eq!(s.len(), 5);
        for i in 0..5 {
            for j in 0..i {
                assert_ne!(s[i], s[j]);
            }
        }
        assert_eq!(s, derive_seeds(42, 5));
    }
}
