//! GraphSAGE on the homogeneous graph against HGT on a heterogeneous variant,
//! same data, splits, normalization and seeds.

use hetpanel::graph::{FeatureScales, Variant};
use hetpanel::nn::{Activation, NetworkConfig};
use hetpanel::oracle::OracleConfig;
use hetpanel::panel::CaseSpec;
use hetpanel::training::*;

fn main() -> hetpanel::Result<()> {
    let variant: Variant = std::env::args().nth(1).as_deref().unwrap_or("d").parse()?;
    let ds = generate_dataset(&CaseSpec::default(), &OracleConfig::default(), 40, 3, 1)?.dataset;
    let scales = FeatureScales::default();
    let homo = PreparedData::new(&ds, Variant::Homogeneous, &scales)?;
    let hetero = PreparedData::new(&ds, variant, &scales)?;
    let split = split_dataset(ds.cases.len(), [0.8, 0.1, 0.1], 0)?;
    let cfg = TrainConfig {
        variant,
        network: NetworkConfig {
            layers: 2,
            hidden: 16,
            heads: 4,
            activation: Activation::Tanh,
        },
        batch_size: 8,
        epochs: 20,
        lr: 3e-3,
        ..TrainConfig::default()
    };
    let c = compare_homo_hetero(&cfg, &cfg, &homo, &hetero, &split, &derive_seeds(0, 2), &mut discard)?;
    for s in [&c.homogeneous, &c.heterogeneous] {
        println!("{:10} ({})  {:.3} ± {:.3}", s.model, s.variant, s.rmse_mean, s.rmse_std);
    }
    println!("reduction {:.1}%", c.reduction_pct());
    Ok(())
}
