//! Builds every graph representation of one panel and prints node sets,
//! relation counts and the parameter count of the default network.

use hetpanel::graph::{build_graph, FeatureScales, RelationCatalog, Variant};
use hetpanel::nn::{count_parameters, NetworkConfig};
use hetpanel::panel::CaseSpec;

fn main() -> hetpanel::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let verbose = std::env::args().any(|a| a == "--relations");
    let case = CaseSpec::default().generate(seed)?;
    println!("panel with {} stiffeners, {} edges", case.geometry.n_stiffeners, case.edge_bcs.len());
    let cfg = NetworkConfig::default();
    for variant in Variant::HETERO.into_iter().chain([Variant::Homogeneous]) {
        let g = build_graph(&case, variant, &FeatureScales::default())?;
        let catalog = RelationCatalog::new(variant);
        let nodes: Vec<String> = g.nodes.iter().map(|n| format!("{}×{} ({} wide)", n.node_type, n.count, n.width)).collect();
        println!(
            "({variant}) {}\n    nodes {}\n    {} relation kinds, {} links, {} parameters",
            variant.description(),
            nodes.join(", "),
            catalog.relations.len(),
            g.edge_count(),
            count_parameters(&cfg, &catalog)
        );
        if verbose {
            print!("{}", catalog.describe());
        }
    }
    Ok(())
}
