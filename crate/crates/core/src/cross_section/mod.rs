//! Cross-section meshes, Neumann modes and twist-coupling integrals.
//!
//! The rotation generator is fixed as `R = [[0, -1], [1, 0]]`, so
//! `R y = (-y2, y1)`. Flipping it flips the sign of `C2` and of the
//! coupling matrix `A`; `C1` and `B` are unaffected.

mod coupling;
mod geometry;
mod mesh;
mod modes;

pub use coupling::{
    coupling_constants, coupling_matrices, coupling_matrices_for, rotate, CouplingConstants,
    CouplingData,
};
pub use geometry::{presets, SectionGeometry, Shape};
pub use mesh::{build_mesh, BoundaryEdge, TriangleMesh};
pub use modes::{
    assemble_neumann_forms, solve_transverse_modes, spectral_gap_check, NeumannForms,
    TransverseModeSet, DEFAULT_DEGENERACY_TOL, NEGATIVE_LAMBDA_TOL,
};

use std::sync::Arc;

use crate::error::Result;

/// Mesh, assemble and solve in one call.
pub fn transverse_modes(
    geometry: &SectionGeometry,
    target_h: f64,
    count: usize,
) -> Result<TransverseModeSet> {
    let forms = assemble_neumann_forms(build_mesh(geometry, target_h)?)?;
    solve_transverse_modes(Arc::new(forms), count, DEFAULT_DEGENERACY_TOL)
}
