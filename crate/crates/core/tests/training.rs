use std::sync::OnceLock;

use hetpanel::graph::{FeatureScales, Variant};
use hetpanel::nn::{Activation, NetworkConfig};
use hetpanel::oracle::{Channel, OracleConfig};
use hetpanel::panel::CaseSpec;
use hetpanel::training::*;
use hetpanel::Error;
use proptest::prelude::*;

fn dataset() -> &'static Dataset {
    static DS: OnceLock<Dataset> = OnceLock::new();
    DS.get_or_init(|| generate_dataset(&CaseSpec::default(), &OracleConfig::default(), 12, 5, 1).unwrap().dataset)
}

fn prepared(v: Variant) -> PreparedData {
    PreparedData::new(dataset(), v, &FeatureScales::default()).unwrap()
}

fn split() -> Split {
    split_dataset(12, [0.5, 0.25, 0.25], 3).unwrap()
}

fn tiny(variant: Variant) -> TrainConfig {
    TrainConfig {
        variant,
        channel: Channel::Stress,
        network: NetworkConfig {
            layers: 2,
            hidden: 8,
            heads: 2,
            activation: Activation::Tanh,
        },
        batch_size: 3,
        epochs: 4,
        lr: 1e-2,
        ..TrainConfig::default()
    }
}

#[test]
fn zero_learning_rate_freezes_parameters_and_curves() {
    let data = prepared(Variant::E);
    let s = split();
    let norm = Normalization::fit(&data, &s.train).unwrap();
    let cfg = TrainConfig {
        lr: 0.0,
        bn_momentum: 0.0,
        batch_size: s.train.len(),
        ..tiny(Variant::E)
    };
    let m = train(&cfg, &data, &s, &norm).unwrap();
    assert_eq!(m.store, cfg.build_network().unwrap().init(cfg.seed));
    let r = &m.metrics;
    assert!(r.train_curve.iter().all(|x| *x == r.train_curve[0]), "{:?}", r.train_curve);
    assert!(r.val_curve.iter().all(|x| *x == r.val_curve[0]), "{:?}", r.val_curve);
}

#[test]
fn identical_runs_give_identical_curves() {
    let data = prepared(Variant::D);
    let s = split();
    let norm = Normalization::fit(&data, &s.train).unwrap();
    let a = train(&tiny(Variant::D), &data, &s, &norm).unwrap();
    let b = train(&tiny(Variant::D), &data, &s, &norm).unwrap();
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.metrics.train_curve), bits(&b.metrics.train_curve));
    assert_eq!(bits(&a.metrics.val_curve), bits(&b.metrics.val_curve));
    assert_eq!(a.store, b.store);
    let c = train(&TrainConfig { seed: 9, ..tiny(Variant::D) }, &data, &s, &norm).unwrap();
    assert_ne!(bits(&a.metrics.train_curve), bits(&c.metrics.train_curve));
}

#[test]
fn retained_parameters_are_the_best_validation_epoch() {
    let data = prepared(Variant::Homogeneous);
    let s = split();
    let norm = Normalization::fit(&data, &s.train).unwrap();
    let m = train(&TrainConfig { epochs: 8, ..tiny(Variant::Homogeneous) }, &data, &s, &norm).unwrap();
    let r = &m.metrics;
    assert!(r.best_val <= *r.val_curve.last().unwrap());
    assert_eq!(r.best_val, r.val_curve[r.best_epoch]);
    assert!(r.val_curve.iter().all(|v| r.best_val <= *v));
    let again = evaluate(&m, &data, &s.val).unwrap();
    assert_eq!(again.rmse, r.best_val);
    assert_eq!(evaluate(&m, &data, &s.test).unwrap().rmse, r.test_rmse);
}

#[test]
fn non_finite_loss_names_the_batch() {
    let mut data = prepared(Variant::E);
    let s = split();
    let norm = Normalization::fit(&data, &s.train).unwrap();
    data.targets[s.train[0]][Channel::Stress.index()][7] = f64::NAN;
    match train(&tiny(Variant::E), &data, &s, &norm) {
        Err(Error::Numeric(m)) => assert!(m.contains("epoch 0") && m.contains("batch"), "{m}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn mismatched_data_and_empty_splits_rejected() {
    let data = prepared(Variant::E);
    let s = split();
    let norm = Normalization::fit(&data, &s.train).unwrap();
    assert!(matches!(train(&tiny(Variant::D), &data, &s, &norm), Err(Error::Config(_))));
    let empty = Split { val: vec![], ..s.clone() };
    assert!(matches!(train(&tiny(Variant::E), &data, &empty, &norm), Err(Error::Usage(_))));
}

#[test]
fn perfect_predictor_scores_zero() {
    let data = prepared(Variant::E);
    let cases = vec![0, 4, 7];
    let pred: Vec<Vec<f64>> = cases.iter().map(|i| data.targets[*i][Channel::U3.index()].clone()).collect();
    let m = score_predictions(&pred, &data, Channel::U3, &cases).unwrap();
    assert_eq!(m.rmse, 0.0);
    assert!(m.per_record.iter().all(|(_, r)| *r == 0.0));
    assert_eq!(m.percentile, vec![100.0; 3]);
}

#[test]
fn total_displacement_rmse_is_magnitude_rmse() {
    let data = prepared(Variant::E);
    let cases = vec![1, 2, 9];
    let shift = |ch: usize, k: f64| -> Vec<Vec<f64>> {
        cases
            .iter()
            .map(|i| data.targets[*i][ch].iter().enumerate().map(|(j, y)| y + k * (j as f64).cos()).collect())
            .collect()
    };
    let (p1, p2, p3) = (shift(0, 0.1), shift(1, -0.2), shift(2, 0.3));
    let got = total_displacement_rmse([&p1, &p2, &p3], &data, &cases).unwrap();
    let mut se = 0.0;
    let mut n = 0.0;
    for (k, i) in cases.iter().enumerate() {
        let t = &data.targets[*i];
        for j in 0..t[0].len() {
            let truth = (t[0][j].powi(2) + t[1][j].powi(2) + t[2][j].powi(2)).sqrt();
            let pred = (p1[k][j].powi(2) + p2[k][j].powi(2) + p3[k][j].powi(2)).sqrt();
            se += (truth - pred).powi(2);
            n += 1.0;
        }
    }
    assert!((got - (se / n).sqrt()).abs() <= 1e-9);
}

#[test]
fn ablation_emits_one_row_per_variant() {
    let s = split();
    let cfg = TrainConfig { epochs: 2, ..tiny(Variant::E) };
    let seeds = derive_seeds(1, 2);
    let mut seen = 0;
    let t = ablation_run(&cfg, &[Variant::E, Variant::F], |v| Ok(prepared(v)), &s, &seeds, &mut |_| {
        seen += 1;
        Ok(())
    })
    .unwrap();
    assert_eq!(seen, 4);
    assert_eq!(t.rows.len(), 2);
    assert!(t.rows.iter().all(|r| r.runs.len() == 2 && r.rmse_mean.is_finite()));
    assert_eq!(t.rows.iter().filter(|r| r.pct_from_best == 0.0).count(), 1);
}

#[test]
fn comparison_and_search_and_sizes() {
    let s = split();
    let cfg = TrainConfig { epochs: 2, ..tiny(Variant::E) };
    let seeds = derive_seeds(2, 2);
    let c = compare_homo_hetero(&cfg, &cfg, &prepared(Variant::Homogeneous), &prepared(Variant::E), &s, &seeds, &mut discard)
        .unwrap();
    assert_eq!(c.homogeneous.runs.len(), 2);
    assert_eq!(c.heterogeneous.variant, Variant::E);
    let expect = 100.0 * (c.homogeneous.rmse_mean - c.heterogeneous.rmse_mean) / c.homogeneous.rmse_mean;
    assert_eq!(c.reduction_pct(), expect);

    let space = SearchSpace {
        layers: (1, 2),
        hidden: vec![4, 8],
        ..SearchSpace::default()
    };
    let data = prepared(Variant::E);
    let rows = quasi_random_search(&cfg, &space, 3, 0, &data, &s, &mut discard).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.windows(2).all(|w| w[0].val_rmse <= w[1].val_rmse));

    let d = data_size_study(&cfg, &data, &s, &[2, 6], &seeds, &mut discard).unwrap();
    assert_eq!(d.iter().map(|r| r.size).collect::<Vec<_>>(), vec![2, 6]);
    let norm = Normalization::fit(&data, &s.train).unwrap();
    assert!(matches!(
        data_size_runs(&cfg, &data, &s, &norm, 7, &seeds, &mut discard),
        Err(Error::Usage(_))
    ));
}

#[test]
fn generation_is_independent_of_workers() {
    let spec = CaseSpec::default();
    let o = OracleConfig::default();
    let a = generate_dataset(&spec, &o, 3, 77, 1).unwrap();
    let b = generate_dataset(&spec, &o, 3, 77, 3).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.dataset.cases.len(), 3);
    assert!(a.dataset.cases.iter().all(|c| c.targets.is_some()));
}

proptest! {
    #[test]
    fn normalization_round_trip(y in -1e4f64..1e4, m in -100.0f64..100.0, sd in 1e-3f64..1e3) {
        let n = Normalization { mean: [m; 4], std: [sd; 4] };
        for ch in Channel::ALL {
            let back = n.denormalize(ch, n.normalize(ch, y));
            prop_assert!((back - y).abs() <= 1e-12 * y.abs().max(1.0));
        }
    }

    #[test]
    fn splits_partition_the_cases(n in 1usize..300, a in 0.0f64..1.0, b in 0.0f64..1.0, seed in any::<u64>()) {
        let tr = a;
        let va = (1.0 - a) * b;
        let te = 1.0 - tr - va;
        let s = split_dataset(n, [tr, va, te.max(0.0)], seed).unwrap();
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn rmse_is_zero_only_on_identity(v in prop::collection::vec(-1e3f64..1e3, 1..50), k in 0usize..50, d in 1e-3f64..10.0) {
        prop_assert_eq!(rmse(&v, &v).unwrap(), 0.0);
        let mut w = v.clone();
        let i = k % v.len();
        w[i] += d;
        let r = rmse(&v, &w).unwrap();
        prop_assert!((r - (d * d / v.len() as f64).sqrt()).abs() <= 1e-9 * (1.0 + r));
    }

    #[test]
    fn percentile_ranks_are_monotone(v in prop::collection::vec(0.0f64..10.0, 1..40)) {
        let p = percentile_ranks(&v);
        for i in 0..v.len() {
            prop_assert!(p[i] > 0.0 && p[i] <= 100.0);
            for j in 0..v.len() {
                if v[i] < v[j] {
                    prop_assert!(p[i] < p[j]);
                }
            }
        }
        let worst = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let i = v.iter().position(|x| *x == worst).unwrap();
        prop_assert_eq!(p[i], 100.0);
    }
}
