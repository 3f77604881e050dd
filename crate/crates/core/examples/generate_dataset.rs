//! Generates a labelled dataset with the grillage oracle, writes it as an
//! archive and reads it back.
//!
//! `cargo run --release --example generate_dataset -- [cases] [path]`

use std::path::PathBuf;

use hetpanel::io::{load_dataset, save_dataset};
use hetpanel::oracle::OracleConfig;
use hetpanel::panel::CaseSpec;
use hetpanel::training::generate_dataset_with_progress;

fn main() -> hetpanel::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(20);
    let path = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("hetpanel-example.hpds"));

    let t = std::time::Instant::now();
    let g = generate_dataset_with_progress(&CaseSpec::default(), &OracleConfig::default(), n, 0, 1, &mut |done, total| {
        eprintln!("{done}/{total}");
    })?;
    for (seed, msg) in &g.failures {
        eprintln!("skipped case seed {seed}: {msg}");
    }
    save_dataset(&g.dataset, &path)?;
    let back = load_dataset(&path)?;
    assert_eq!(back, g.dataset);

    let units: usize = back.cases.iter().map(|c| c.loads.len()).sum();
    let bytes = std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0);
    println!(
        "{} cases ({units} structural units) in {:.1} s, {bytes} bytes at {}",
        back.cases.len(),
        t.elapsed().as_secs_f64(),
        path.display()
    );
    Ok(())
}
