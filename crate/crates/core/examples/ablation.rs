//! Trains every heterogeneous graph variant on the same data and seeds and
//! prints mean test RMSE, spread and parameter count per variant.

use hetpanel::graph::{FeatureScales, Variant};
use hetpanel::nn::{Activation, NetworkConfig};
use hetpanel::oracle::OracleConfig;
use hetpanel::panel::CaseSpec;
use hetpanel::training::*;

fn main() -> hetpanel::Result<()> {
    let ds = generate_dataset(&CaseSpec::default(), &OracleConfig::default(), 30, 2, 1)?.dataset;
    let split = split_dataset(ds.cases.len(), [0.8, 0.1, 0.1], 0)?;
    let cfg = TrainConfig {
        network: NetworkConfig {
            layers: 1,
            hidden: 8,
            heads: 2,
            activation: Activation::Tanh,
        },
        batch_size: 8,
        epochs: 10,
        lr: 3e-3,
        ..TrainConfig::default()
    };
    let seeds = derive_seeds(0, 2);
    let table = ablation_run(
        &cfg,
        &Variant::HETERO,
        |v| PreparedData::new(&ds, v, &FeatureScales::default()),
        &split,
        &seeds,
        &mut |m| {
            eprintln!("{} seed {} test {:.3}", m.config.variant, m.config.seed, m.metrics.test_rmse);
            Ok(())
        },
    )?;
    println!("variant  params   rmse mean   rmse std   from best");
    for r in &table.rows {
        println!(
            "  ({})  {:8}  {:10.3}  {:9.3}  {:+8.1}%",
            r.variant, r.params, r.rmse_mean, r.rmse_std, r.pct_from_best
        );
    }
    Ok(())
}
