//! Linear grillage ground truth: each structural unit becomes a lattice of
//! 3D frame members, the boundary profiles are imposed on the perimeter and
//! the pressure is lumped to nodes.

mod banded;
mod fields;
mod frame;
mod model;
mod resample;

pub use banded::{BandCholesky, SymBand};
pub use fields::{extract_fields, Channel, FieldGrid, GRID_COLS, GRID_POINTS, GRID_ROWS};
pub use frame::{local_stiffness, Section};
pub use model::{
    build_grillage, solve_static, GrillageModel, Member, MeshDensity, OracleConfig, SolveResult,
    UnitLattice,
};
pub use resample::resample_profile;

use crate::error::Result;
use crate::panel::PanelCase;

/// Builds, solves and samples one case.
pub fn solve_case(case: &PanelCase, cfg: &OracleConfig) -> Result<Vec<FieldGrid>> {
    let model = build_grillage(case, cfg)?;
    let result = solve_static(&model)?;
    Ok(extract_fields(&model, &result))
}

/// Copy of `case` with oracle targets attached.
pub fn label_case(case: &PanelCase, cfg: &OracleConfig) -> Result<PanelCase> {
    let mut c = case.clone();
    c.targets = Some(solve_case(case, cfg)?);
    Ok(c)
}
