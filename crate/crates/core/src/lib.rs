//! Periodic decompositions for commuting operator families.
//!
//! Given commuting operators `T₁, …, Tₙ` and a vector `x` with
//! `(T₁−I)⋯(Tₙ−I)x = 0`, the crate splits `x = x₁ + ⋯ + xₙ` with
//! `Tⱼxⱼ = xⱼ` using mean ergodic projections, and reports the residuals
//! that justify each split.
//!
//! - [`linalg`]: complex matrices, subspaces, spectra, matrix exponential.
//! - [`ergodic`]: power-boundedness, mean ergodic projections, stable/reversible splits.
//! - [`decomp`]: the inclusion–exclusion decomposition and a least-squares oracle.
//! - [`grid`]: shift-invariant decomposition of functions on `ℤ_N`.
//! - [`periods`], [`onepar`]: semigroups `exp(tA)` sampled at rational or incommensurable periods.
//! - [`io`], [`certificate`]: problem files, certificates and their verification.

// `!(a <= b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificate;
pub mod decomp;
pub mod ergodic;
pub mod error;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod onepar;
pub mod periods;
pub mod samples;

pub use certificate::{
    run_problem, verify_certificate, Certificate, CertifiedOutput, MeanChoice, RunOptions, Verification,
};
pub use decomp::{
    decompose_oracle, decompose_vector, decompose_with_projections, difference_defect, DecompositionMethod,
    DecompositionResult, OperatorFamily,
};
pub use ergodic::{
    jdlg_split, kernel_power_collapse, mean_ergodic_projection, power_bounded_verdict, JdlgSplit, MeanMethod,
    PowerBoundVerdict, ProjectionReport,
};
pub use error::{Error, Result};
pub use grid::{decompose_grid_function, grid_difference_defect, GridFunction, GridMean};
pub use io::{parse_problem, Payload, ProblemFile, ProblemKind};
pub use linalg::{matrix_exp, spectrum, CMatrix, CVector, EigenCluster, Matrix, SpectrumReport, Subspace, C64};
pub use onepar::{semigroup_decompose, SemigroupDecomposition, SemigroupSpec};
pub use periods::{reduce_periods, PeriodSpec, ReductionPlan, UnitTable};
