//! Quasi-random search over learning rate, depth, width and L2 with a
//! scrambled Halton sequence; trials are ranked by validation RMSE.

use hetpanel::graph::{FeatureScales, Variant};
use hetpanel::oracle::OracleConfig;
use hetpanel::panel::CaseSpec;
use hetpanel::training::*;

fn main() -> hetpanel::Result<()> {
    let budget = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(6);
    let ds = generate_dataset(&CaseSpec::default(), &OracleConfig::default(), 30, 4, 1)?.dataset;
    let data = PreparedData::new(&ds, Variant::E, &FeatureScales::default())?;
    let split = split_dataset(data.len(), [0.8, 0.1, 0.1], 0)?;
    let base = TrainConfig {
        variant: Variant::E,
        batch_size: 8,
        epochs: 8,
        ..TrainConfig::default()
    };
    let space = SearchSpace {
        layers: (1, 3),
        hidden: vec![8, 16],
        ..SearchSpace::default()
    };
    let rows = quasi_random_search(&base, &space, budget, 0, &data, &split, &mut discard)?;
    println!("      lr  layers  hidden        l2     val rmse    test rmse");
    for r in &rows {
        println!(
            "{:8.1e}  {:6}  {:6}  {:8.1e}  {:11.3}  {:11.3}",
            r.lr, r.layers, r.hidden, r.l2, r.val_rmse, r.test_rmse
        );
    }
    Ok(())
}
