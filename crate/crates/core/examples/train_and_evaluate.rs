//! Trains an HGT model on a small generated dataset, saves a checkpoint,
//! reloads it and scores the test cases.
//!
//! `cargo run --release --example train_and_evaluate -- [variant] [channel]`

use hetpanel::graph::{FeatureScales, Variant};
use hetpanel::io::{load_checkpoint, save_checkpoint};
use hetpanel::nn::{Activation, NetworkConfig};
use hetpanel::oracle::{Channel, OracleConfig};
use hetpanel::panel::CaseSpec;
use hetpanel::training::*;
use hetpanel::Error;

fn main() -> hetpanel::Result<()> {
    let mut args = std::env::args().skip(1);
    let variant: Variant = args.next().as_deref().unwrap_or("d").parse()?;
    let channel = match args.next() {
        Some(s) => Channel::parse(&s).ok_or_else(|| Error::Usage(format!("unknown channel {s}")))?,
        None => Channel::Stress,
    };

    let ds = generate_dataset(&CaseSpec::default(), &OracleConfig::default(), 40, 1, 1)?.dataset;
    let data = PreparedData::new(&ds, variant, &FeatureScales::default())?;
    let split = split_dataset(data.len(), [0.8, 0.1, 0.1], 0)?;
    let norm = Normalization::fit(&data, &split.train)?;
    let cfg = TrainConfig {
        variant,
        channel,
        network: NetworkConfig {
            layers: 2,
            hidden: 16,
            heads: 4,
            activation: Activation::Tanh,
        },
        lr: 3e-3,
        batch_size: 8,
        epochs: 30,
        ..TrainConfig::default()
    };
    let model = train(&cfg, &data, &split, &norm)?;
    let m = &model.metrics;
    for (e, (t, v)) in m.train_curve.iter().zip(&m.val_curve).enumerate().step_by(5) {
        println!("epoch {:3}  train {t:10.4}  val {v:10.4}", e + 1);
    }
    println!("best epoch {} val {:.4}, {} parameters, {:.1} s", m.best_epoch + 1, m.best_val, m.param_count, m.wall_time_s);

    let path = std::env::temp_dir().join("hetpanel-example.hpck");
    save_checkpoint(&model, &path)?;
    let back = load_checkpoint(&path, &cfg)?;
    let scores = evaluate(&back, &data, &split.test)?;
    println!("test RMSE {:.4} {}", scores.rmse, channel.unit());
    for ((case, r), p) in scores.per_record.iter().zip(&scores.percentile) {
        println!("  case {case:3}  rmse {r:10.4}  percentile {p:5.1}");
    }
    Ok(())
}
