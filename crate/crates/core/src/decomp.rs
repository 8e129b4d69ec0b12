//! Splitting solutions of `(T₁−I)⋯(Tₙ−I)x = 0` into fixed vectors of the
//! individual operators.
//!
//! Given commuting projections `Pⱼ` with `PⱼTⱼ = Pⱼ = TⱼPⱼ`, the components
//!
//! ```text
//! xⱼ = −Σ_{ε : εⱼ = 1, εₖ = 0 for k > j} (−1)^{|ε|} (Π_{i : εᵢ = 1} Pᵢ) x
//! ```
//!
//! add up to `x − (I−P₁)⋯(I−Pₙ)x` and satisfy `Tⱼxⱼ = xⱼ`. Every ε-term is
//! assigned to the largest index it touches.

use serde::{Deserialize, Serialize};

use crate::ergodic::{fixed_space, mean_ergodic_projection, power_bounded_verdict, MeanMethod};
use crate::error::{Error, Result};
use crate::linalg::{c, op_norm, svd, CMatrix, CVector, Matrix};

/// Default decomposition tolerance (relative to `‖x‖`).
pub const DEFAULT_TOL: f64 = 1e-8;

/// Default commutation tolerance factor, multiplied by `maxⱼ ‖Tⱼ‖²`.
pub const COMM_TOL_FACTOR: f64 = 1e-10;

/// `n` pairwise commuting square operators of a common size.
#[derive(Clone, Debug, Serialize)]
pub struct OperatorFamily {
    dim: usize,
    ops: Vec<Matrix>,
    /// `max_{i≠j} ‖TᵢTⱼ − TⱼTᵢ‖`
    pub commutation_defect: f64,
}

impl OperatorFamily {
    /// Builds the family with the default commutation tolerance.
    pub fn new(ops: Vec<Matrix>) -> Result<Self> {
        let scale = ops.iter().map(|t| t.norm()).fold(0.0, f64::max);
        Self::with_comm_tol(ops, COMM_TOL_FACTOR * scale.powi(2).max(1.0))
    }

    pub fn with_comm_tol(ops: Vec<Matrix>, comm_tol: f64) -> Result<Self> {
        let Some(first) = ops.first() else {
            return Err(Error::InvalidInput("operator family must not be empty".into()));
        };
        let dim = first.dim();
        if let Some(bad) = ops.iter().find(|t| t.dim() != dim) {
            return Err(Error::InvalidInput(format!(
                "operator sizes differ: {dim}x{dim} and {0}x{0}",
                bad.dim()
            )));
        }
        let commutation_defect = max_commutator(&ops.iter().map(|t| t.as_mat()).collect::<Vec<_>>());
        if commutation_defect > comm_tol {
            return Err(Error::NotCommuting {
                defect: commutation_defect,
                tol: comm_tol,
            });
        }
        Ok(OperatorFamily {
            dim,
            ops,
            commutation_defect,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn ops(&self) -> &[Matrix] {
        &self.ops
    }

    fn check_vector(&self, x: &CVector) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "vector length {} does not match operator size {}",
                x.len(),
                self.dim
            )));
        }
        Ok(())
    }
}

pub(crate) fn max_commutator(ops: &[&CMatrix]) -> f64 {
    let mut defect: f64 = 0.0;
    for i in 0..ops.len() {
        for j in (i + 1)..ops.len() {
            defect = defect.max(op_norm(&(ops[i] * ops[j] - ops[j] * ops[i])));
        }
    }
    defect
}

/// A vertex ε ∈ {0,1}ⁿ of the inclusion–exclusion cube. Bit `i` stands for
/// the operator with (0-based) index `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EpsilonMask {
    pub bits: u32,
    pub n: u32,
}

impl EpsilonMask {
    pub fn all(n: u32) -> impl Iterator<Item = EpsilonMask> {
        assert!(n < 32, "at most 31 operators");
        (0..(1u32 << n)).map(move |bits| EpsilonMask { bits, n })
    }

    /// The masks whose largest set index is `j` (1-based).
    pub fn group(n: u32, j: u32) -> impl Iterator<Item = EpsilonMask> {
        EpsilonMask::all(n).filter(move |m| m.last_set() == j)
    }

    pub fn is_set(&self, i: u32) -> bool {
        self.bits >> i & 1 == 1
    }

    /// `|ε|`
    pub fn weight(&self) -> u32 {
        self.bits.count_ones()
    }

    /// `max{j : εⱼ = 1}` counted from 1, or 0 for the empty mask.
    pub fn last_set(&self) -> u32 {
        32 - self.bits.leading_zeros()
    }

    pub fn sign(&self) -> f64 {
        if self.weight().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }
}

/// Components from the inclusion–exclusion formula, given the action of each
/// averaging operator. Projections are applied innermost-last, i.e. the term
/// for ε is `P₁(P₂(⋯Pₙ(x)))` restricted to the set bits.
pub(crate) fn inclusion_exclusion<F>(n: usize, x: &CVector, mut average: F) -> Result<Vec<CVector>>
where
    F: FnMut(usize, &CVector) -> Result<CVector>,
{
    let n32 = n as u32;
    let mut components = vec![CVector::zeros(x.len()); n];
    for mask in EpsilonMask::all(n32).skip(1) {
        let mut term = x.clone();
        for i in (0..n32).rev() {
            if mask.is_set(i) {
                term = average(i as usize, &term)?;
            }
        }
        let j = mask.last_set() as usize - 1;
        components[j] -= term * c(mask.sign(), 0.0);
    }
    Ok(components)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionMethod {
    InclusionExclusion,
    Oracle,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionResult {
    #[serde(serialize_with = "crate::io::ser_vectors")]
    pub components: Vec<CVector>,
    /// ‖x − Σⱼ xⱼ‖
    pub sum_residual: f64,
    /// ‖(Tⱼ − I)xⱼ‖ for each j
    pub invariance_defects: Vec<f64>,
    pub method: DecompositionMethod,
    pub tol: f64,
    pub input_norm: f64,
    /// ‖(T₁−I)⋯(Tₙ−I)x‖ (or the grid analogue)
    pub difference_defect: f64,
    /// ‖(P₁−I)⋯(Pₙ−I)x‖, the certificate that `x` lies in the kernel of
    /// the projection product.
    pub projection_product_defect: Option<f64>,
    /// max ‖PᵢPⱼ − PⱼPᵢ‖
    pub projection_commutation_defect: Option<f64>,
    pub accepted: bool,
}

impl DecompositionResult {
    pub(crate) fn assemble(
        x: &CVector,
        components: Vec<CVector>,
        invariance_defects: Vec<f64>,
        method: DecompositionMethod,
        tol: f64,
        difference_defect: f64,
    ) -> Self {
        let total = components.iter().fold(CVector::zeros(x.len()), |acc, v| acc + v);
        let sum_residual = (x - total).norm();
        let input_norm = x.norm();
        let bound = tol * input_norm;
        let accepted = sum_residual <= bound && invariance_defects.iter().all(|&d| d <= bound);
        DecompositionResult {
            components,
            sum_residual,
            invariance_defects,
            method,
            tol,
            input_norm,
            difference_defect,
            projection_product_defect: None,
            projection_commutation_defect: None,
            accepted,
        }
    }
}

/// `‖(T₁−I)(T₂−I)⋯(Tₙ−I)x‖`, applying `Tₙ` first.
pub fn difference_defect(family: &OperatorFamily, x: &CVector) -> Result<f64> {
    family.check_vector(x)?;
    let mut v = x.clone();
    for t in family.ops.iter().rev() {
        v = t.as_mat() * &v - &v;
    }
    Ok(v.norm())
}

fn invariance_defects(family: &OperatorFamily, components: &[CVector]) -> Vec<f64> {
    family
        .ops
        .iter()
        .zip(components)
        .map(|(t, xj)| (t.as_mat() * xj - xj).norm())
        .collect()
}

/// Inclusion–exclusion decomposition with projections from `method`.
pub fn decompose_vector(
    family: &OperatorFamily,
    x: &CVector,
    tol: f64,
    method: MeanMethod,
) -> Result<DecompositionResult> {
    let defect = difference_defect(family, x)?;
    let bound = tol * x.norm();
    if !(defect <= bound) {
        return Err(Error::PreconditionViolation {
            what: "difference defect",
            defect,
            bound,
        });
    }
    let mut projections = Vec::with_capacity(family.len());
    for (j, t) in family.ops.iter().enumerate() {
        let verdict = power_bounded_verdict(t)?;
        if !verdict.bounded {
            return Err(Error::HypothesisViolation(format!(
                "operator {} is not power-bounded (spectral radius {:.6}, peripheral defect {})",
                j + 1,
                verdict.spectral_radius,
                verdict.peripheral_defect
            )));
        }
        projections.push(mean_ergodic_projection(t, method)?.projection.into_inner());
    }
    decompose_with_projections(family, &projections, x, tol)
}

/// Inclusion–exclusion decomposition with caller-supplied projections.
pub fn decompose_with_projections(
    family: &OperatorFamily,
    projections: &[CMatrix],
    x: &CVector,
    tol: f64,
) -> Result<DecompositionResult> {
    family.check_vector(x)?;
    if projections.len() != family.len()
        || projections
            .iter()
            .any(|p| p.nrows() != family.dim || p.ncols() != family.dim)
    {
        return Err(Error::InvalidInput(
            "one projection of matching size per operator expected".into(),
        ));
    }
    let refs: Vec<&CMatrix> = projections.iter().collect();
    let comm = max_commutator(&refs);
    let scale = projections.iter().map(op_norm).fold(1.0, f64::max);
    let comm_tol = COMM_TOL_FACTOR * scale * scale;
    if comm > comm_tol {
        return Err(Error::NotCommuting {
            defect: comm,
            tol: comm_tol,
        });
    }

    let components = inclusion_exclusion(family.len(), x, |j, v| Ok(&projections[j] * v))?;
    let mut product = x.clone();
    for p in projections.iter().rev() {
        product = p * &product - &product;
    }
    let defects = invariance_defects(family, &components);
    let mut result = DecompositionResult::assemble(
        x,
        components,
        defects,
        DecompositionMethod::InclusionExclusion,
        tol,
        difference_defect(family, x)?,
    );
    result.projection_product_defect = Some(product.norm());
    result.projection_commutation_defect = Some(comm);
    Ok(result)
}

/// Least-squares fit of `x` by `Σⱼ Bⱼcⱼ` with `Bⱼ` a basis of `ker(Tⱼ−I)`.
///
/// Independent of the projection route: a small residual certifies
/// `x ∈ ker(T₁−I) + ⋯ + ker(Tₙ−I)` directly.
pub fn decompose_oracle(family: &OperatorFamily, x: &CVector, tol: f64) -> Result<DecompositionResult> {
    family.check_vector(x)?;
    let n = family.dim;
    let kernels = family
        .ops
        .iter()
        .map(|t| fixed_space(t.as_mat()))
        .collect::<Result<Vec<_>>>()?;
    let total: usize = kernels.iter().map(|k| k.dim()).sum();
    let mut components = vec![CVector::zeros(n); family.len()];
    if total > 0 && x.norm() > 0.0 {
        let mut stacked = CMatrix::zeros(n, total);
        let mut col = 0;
        for k in &kernels {
            stacked.columns_mut(col, k.dim()).copy_from(k.basis());
            col += k.dim();
        }
        // minimum-norm least squares: B⁺ = V·Σ⁺·Uᴴ
        let svd = svd(&stacked);
        let smax = svd.singular_values.first().copied().unwrap_or(0.0);
        let mut projected = svd.u.adjoint() * x;
        for (i, &s) in svd.singular_values.iter().enumerate() {
            projected[i] = if s > 1e-12 * smax {
                projected[i] / s
            } else {
                c(0.0, 0.0)
            };
        }
        let coeffs = &svd.v * projected;
        let mut col = 0;
        for (j, k) in kernels.iter().enumerate() {
            let cj = coeffs.rows(col, k.dim()).into_owned();
            components[j] = k.basis() * cj;
            col += k.dim();
        }
    }
    let defects = invariance_defects(family, &components);
    Ok(DecompositionResult::assemble(
        x,
        components,
        defects,
        DecompositionMethod::Oracle,
        tol,
        difference_defect(family, x)?,
    ))
}
