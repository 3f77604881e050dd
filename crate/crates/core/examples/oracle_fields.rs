//! Solves one random panel with the grillage oracle and prints per-unit
//! field ranges, separating boundary-driven and load-driven responses.

use hetpanel::oracle::{solve_case, Channel, OracleConfig};
use hetpanel::panel::{BoundaryField, CaseSpec, PanelCase};

fn ranges(label: &str, case: &PanelCase) -> hetpanel::Result<()> {
    let grids = solve_case(case, &OracleConfig::default())?;
    println!("{label}");
    for g in &grids {
        let line: Vec<String> = Channel::ALL
            .iter()
            .map(|ch| {
                let v = g.channel(*ch);
                let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                format!("{}[{lo:8.3}, {hi:8.3}]", ch.name())
            })
            .collect();
        println!("  unit {:2}  {}", g.unit_id, line.join("  "));
    }
    Ok(())
}

fn main() -> hetpanel::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let case = CaseSpec::default().generate(seed)?;
    println!(
        "panel {:.2} x {:.2} m, {} stiffeners, {} units, {} edges",
        case.geometry.length,
        case.geometry.width,
        case.geometry.n_stiffeners,
        case.loads.len(),
        case.edge_bcs.len()
    );
    ranges("full case", &case)?;
    let mut load_only = case.clone();
    load_only.edge_bcs = BoundaryField::uniform([0.0; 3]).edge_bcs(&case.topology());
    ranges("pressure only", &load_only)?;
    ranges("boundary only", &case.with_scaled_loads(0.0))?;
    Ok(())
}
