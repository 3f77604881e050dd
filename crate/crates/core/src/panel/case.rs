use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::boundary::{sample_loads, BcSpec, BoundaryField, EdgeBc, LoadProfile, LoadSpec};
use super::geometry::{sample_panel, GeometryRanges, PanelGeometry};
use super::material::MaterialLaw;
use super::topology::PanelTopology;
use crate::error::{Error, Result};
use crate::oracle::{Channel, FieldGrid, GRID_POINTS};

/// One sample: inputs for the surrogate and, once solved, its targets.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelCase {
    pub geometry: PanelGeometry,
    pub material: MaterialLaw,
    /// Indexed by physical edge id.
    pub edge_bcs: Vec<EdgeBc>,
    /// Indexed by structural unit id.
    pub loads: Vec<LoadProfile>,
    /// Per-unit oracle fields, indexed by unit id.
    pub targets: Option<Vec<FieldGrid>>,
}

impl PanelCase {
    pub fn topology(&self) -> PanelTopology {
        PanelTopology::new(&self.geometry)
    }

    /// Checks that boundary and load lists match the panel topology.
    pub fn validate(&self) -> Result<PanelTopology> {
        self.geometry.validate()?;
        self.material.validate()?;
        let topo = self.topology();
        if self.edge_bcs.len() != topo.edges.len() {
            return Err(Error::Validation(format!(
                "{} edge profiles for {} physical edges",
                self.edge_bcs.len(),
                topo.edges.len()
            )));
        }
        if self.loads.len() != topo.units.len() {
            return Err(Error::Validation(format!(
                "{} load profiles for {} structural units",
                self.loads.len(),
                topo.units.len()
            )));
        }
        for (i, bc) in self.edge_bcs.iter().enumerate() {
            if bc.edge_id != i {
                return Err(Error::Validation(format!(
                    "edge profile {i} refers to edge {}",
                    bc.edge_id
                )));
            }
            if bc.profiles.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!("edge profile {i} is not finite")));
            }
        }
        for (i, l) in self.loads.iter().enumerate() {
            if l.unit_id != i || l.samples.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!("load profile {i} is inconsistent")));
            }
        }
        if let Some(t) = &self.targets {
            if t.len() != topo.units.len() {
                return Err(Error::Validation(format!(
                    "{} target grids for {} units",
                    t.len(),
                    topo.units.len()
                )));
            }
            for (i, g) in t.iter().enumerate() {
                if g.unit_id != i || g.values.len() != GRID_POINTS * Channel::COUNT {
                    return Err(Error::Validation(format!("target grid {i} is inconsistent")));
                }
                if g.values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Validation(format!("target grid {i} is not finite")));
                }
            }
        }
        Ok(topo)
    }

    /// Copy with every load sample multiplied by `factor`.
    pub fn with_scaled_loads(&self, factor: f64) -> Self {
        let mut c = self.clone();
        for l in &mut c.loads {
            for v in &mut l.samples {
                *v *= factor;
            }
        }
        c.targets = None;
        c
    }
}

/// Everything needed to draw random panel cases.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CaseSpec {
    pub ranges: GeometryRanges,
    pub material: MaterialLaw,
    pub boundary: BcSpec,
    pub loads: LoadSpec,
}

impl CaseSpec {
    /// Draws a case (without targets). Identical seeds give identical cases.
    pub fn generate(&self, seed: u64) -> Result<PanelCase> {
        self.material.validate()?;
        let geometry = sample_panel(&self.ranges, seed)?;
        geometry.validate()?;
        let topo = PanelTopology::new(&geometry);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_b0de_ca5e_0001);
        let field = BoundaryField::sample(&self.boundary, &mut rng);
        let edge_bcs = field.edge_bcs(&topo);
        let loads = sample_loads(&self.loads, &topo, &mut rng);
        Ok(PanelCase {
            geometry,
            material: self.material,
            edge_bcs,
            loads,
            targets: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_cases_validate() {
        let spec = CaseSpec::default();
        for seed in 0..30 {
            let c = spec.generate(seed).unwrap();
            c.validate().unwrap();
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = CaseSpec::default();
        assert_eq!(spec.generate(7).unwrap(), spec.generate(7).unwrap());
    }

    #[test]
    fn mismatched_lists_fail_validation() {
        let mut c = CaseSpec::default().generate(1).unwrap();
        c.loads.pop();
        assert!(matches!(c.validate(), Err(Error::Validation(_))));
    }
}
