//! Generalized Hermitian eigenproblems on sparse matrices.

mod eigen;
mod scalar;
mod sparse;

pub use eigen::{
    lowest_eigenpairs, lowest_eigenpairs_with, verify_solution, EigenSolution,
    GeneralizedEigenProblem, SolverOptions, VerificationReport, DEFAULT_TOL, HERMITIAN_TOL,
    ORTHONORMALITY_TOL,
};
pub use scalar::{axpy, dot, norm, Scalar};
pub use sparse::{CsrMatrix, TripletBuilder};
