//! Test RMSE against training-set size for one variant, each size averaged
//! over the same seeds.

use hetpanel::graph::{FeatureScales, Variant};
use hetpanel::nn::{Activation, NetworkConfig};
use hetpanel::oracle::OracleConfig;
use hetpanel::panel::CaseSpec;
use hetpanel::training::*;

fn main() -> hetpanel::Result<()> {
    let ds = generate_dataset(&CaseSpec::default(), &OracleConfig::default(), 50, 5, 1)?.dataset;
    let data = PreparedData::new(&ds, Variant::D, &FeatureScales::default())?;
    let split = split_dataset(data.len(), [0.8, 0.1, 0.1], 0)?;
    let cfg = TrainConfig {
        network: NetworkConfig {
            layers: 2,
            hidden: 16,
            heads: 4,
            activation: Activation::Tanh,
        },
        batch_size: 8,
        epochs: 15,
        lr: 3e-3,
        ..TrainConfig::default()
    };
    let n = split.train.len();
    let rows = data_size_study(&cfg, &data, &split, &[n / 4, n / 2, n], &derive_seeds(0, 2), &mut discard)?;
    for r in &rows {
        println!("{:4} training cases  {:.3} ± {:.3}", r.size, r.rmse_mean, r.rmse_std);
    }
    Ok(())
}
