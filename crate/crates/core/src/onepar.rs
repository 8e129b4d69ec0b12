//! Matrix semigroups `T(t) = exp(tA)`.
//!
//! Decomposition along finitely many times `t₁…tₙ` proceeds by merging
//! commensurable times into their common period `s` (so that every merged
//! factor `T(tⱼ)−I` divides `T(s)−I`), collapsing the resulting kernel powers,
//! and decomposing with respect to the remaining pairwise incommensurable
//! family. The remaining operations are spectral diagnostics for the
//! hypotheses that make this work.

use std::f64::consts::PI;

use serde::Serialize;

use crate::decomp::{decompose_vector, difference_defect, DecompositionResult, OperatorFamily};
use crate::ergodic::{kernel_power_collapse, power_bounded_verdict, MeanMethod};
use crate::error::{Error, Result};
use crate::linalg::{c, matrix_exp, op_norm, spectrum, CMatrix, CVector, Matrix, SpectrumReport, C64};
use crate::periods::{reduce_periods, PeriodSpec, ReductionPlan, UnitTable};

/// Relative band below the spectral radius that still counts as peripheral.
pub const PERIPHERAL_BAND: f64 = 1e-6;

/// Orbits whose norm exceeds this multiple of `‖x‖` are reported unbounded.
pub const ORBIT_BLOWUP: f64 = 1e6;

/// Distance within which kernel powers must coincide for a merged class.
const COLLAPSE_TOL: f64 = 1e-8;

/// `max Re σ(A)`.
pub fn growth_bound(a: &Matrix) -> Result<f64> {
    Ok(growth_from(&spectrum(a)?))
}

fn growth_from(spec: &SpectrumReport) -> f64 {
    spec.eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Generator with cached spectral data.
#[derive(Clone, Debug, Serialize)]
pub struct SemigroupSpec {
    #[serde(rename = "A")]
    generator: Matrix,
    units: UnitTable,
    /// `ω₀ = max Re σ(A)`
    pub growth_bound: f64,
    /// `sup_t ‖exp(tA)‖ < ∞`: `ω₀ ≤ 0` and the imaginary-axis part is semisimple.
    pub bounded: bool,
}

impl SemigroupSpec {
    pub fn new(generator: Matrix, units: UnitTable) -> Result<Self> {
        let spec = spectrum(&generator)?;
        let growth_bound = growth_from(&spec);
        let axis_tol = spec.cluster_tol.max(64.0 * f64::EPSILON);
        let bounded = growth_bound <= axis_tol
            && spec
                .clusters
                .iter()
                .filter(|k| k.value.re.abs() <= axis_tol)
                .all(|k| k.is_semisimple());
        Ok(SemigroupSpec {
            generator,
            units,
            growth_bound,
            bounded,
        })
    }

    pub fn generator(&self) -> &Matrix {
        &self.generator
    }

    pub fn units(&self) -> &UnitTable {
        &self.units
    }

    pub fn dim(&self) -> usize {
        self.generator.dim()
    }

    /// `T(t)`
    pub fn at(&self, t: f64) -> Result<Matrix> {
        matrix_exp(&self.generator, t)
    }

    pub fn at_period(&self, t: &PeriodSpec) -> Result<Matrix> {
        self.at(t.value(&self.units)?)
    }

    fn require_bounded(&self) -> Result<()> {
        if self.bounded {
            Ok(())
        } else {
            Err(Error::HypothesisViolation(format!(
                "semigroup is not bounded (growth bound {:.6e}, or defective imaginary eigenvalues)",
                self.growth_bound
            )))
        }
    }
}

/// The reduced family `{T(s)}` with one operator per commensurability class.
///
/// `representatives[k]` is `T(s)` for class `k`. Each must be power-bounded,
/// and for merged classes the kernel of `(T(s)−I)^m` must collapse to that
/// of `T(s)−I`.
pub fn collapse_powers(plan: &ReductionPlan, representatives: Vec<Matrix>) -> Result<OperatorFamily> {
    if representatives.len() != plan.classes.len() {
        return Err(Error::InvalidInput(format!(
            "{} representatives for {} classes",
            representatives.len(),
            plan.classes.len()
        )));
    }
    for (class, rep) in plan.classes.iter().zip(&representatives) {
        let verdict = power_bounded_verdict(rep)?;
        if !verdict.bounded {
            return Err(Error::HypothesisViolation(format!(
                "T({}) is not power-bounded (spectral radius {:.6}, peripheral defect {}); kernel powers need not collapse",
                class.common, verdict.spectral_radius, verdict.peripheral_defect
            )));
        }
        let power = class.members.len() as u32;
        if power > 1 {
            let kpc = kernel_power_collapse(rep, power, COLLAPSE_TOL)?;
            if !kpc.collapsed {
                return Err(Error::HypothesisViolation(format!(
                    "ker(T({})−I)^{power} has dimension {} but ker(T({})−I) has {}",
                    class.common, kpc.dim_ker_pow, class.common, kpc.dim_ker
                )));
            }
        }
    }
    OperatorFamily::new(representatives)
}

#[derive(Clone, Debug, Serialize)]
pub struct SemigroupDecomposition {
    pub plan: ReductionPlan,
    /// Components indexed by class, each fixed by its class's `T(s)`.
    pub result: DecompositionResult,
    /// `‖(T(t₁)−I)⋯(T(tₙ)−I)x‖` for the original times.
    pub original_difference_defect: f64,
    /// `‖(T(tⱼ)−I)x_{class(j)}‖` per original time; informational only,
    /// since a class component need only be fixed by `T(s)`.
    pub original_time_defects: Vec<f64>,
}

pub fn semigroup_decompose(
    sg: &SemigroupSpec,
    times: &[PeriodSpec],
    x: &CVector,
    tol: f64,
) -> Result<SemigroupDecomposition> {
    sg.require_bounded()?;
    if times.is_empty() {
        return Err(Error::InvalidInput("at least one time is required".into()));
    }
    if x.len() != sg.dim() {
        return Err(Error::InvalidInput(format!(
            "vector length {} does not match generator size {}",
            x.len(),
            sg.dim()
        )));
    }
    let plan = reduce_periods(times)?;
    let originals = times.iter().map(|t| sg.at_period(t)).collect::<Result<Vec<_>>>()?;
    let original_family = OperatorFamily::new(originals.clone())?;
    let original_difference_defect = difference_defect(&original_family, x)?;
    let bound = tol * x.norm();
    if !(original_difference_defect <= bound) {
        return Err(Error::PreconditionViolation {
            what: "difference defect",
            defect: original_difference_defect,
            bound,
        });
    }

    let reps = plan
        .classes
        .iter()
        .map(|k| sg.at_period(&k.common))
        .collect::<Result<Vec<_>>>()?;
    let reduced = collapse_powers(&plan, reps)?;
    let result = decompose_vector(&reduced, x, tol, MeanMethod::Algebraic)?;

    let original_time_defects = originals
        .iter()
        .enumerate()
        .map(|(j, t)| {
            let k = plan.class_of(j).expect("every input belongs to a class");
            let xk = &result.components[k];
            (t.as_mat() * xk - xk).norm()
        })
        .collect();
    Ok(SemigroupDecomposition {
        plan,
        result,
        original_difference_defect,
        original_time_defects,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PeriodicSpectrumReport {
    pub period: f64,
    /// ‖exp(αA) − I‖
    pub periodicity_defect: f64,
    /// Eigenvalues farther than `tol` from `(2πi/α)ℤ`.
    #[serde(serialize_with = "crate::io::ser_complex_list")]
    pub off_lattice: Vec<C64>,
    /// Eigenvalue clusters with a Jordan defect.
    #[serde(serialize_with = "crate::io::ser_complex_list")]
    pub defective: Vec<C64>,
    /// Nearest lattice index `k` for every eigenvalue, in Schur order.
    pub lattice_indices: Vec<i64>,
    pub max_lattice_distance: f64,
    pub pass: bool,
}

/// For an α-periodic semigroup, checks `σ(A) ⊂ (2πi/α)ℤ` with every
/// eigenvalue semisimple.
pub fn periodic_spectrum_check(a: &Matrix, alpha: f64, tol: f64) -> Result<PeriodicSpectrumReport> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidInput(format!("period must be positive, got {alpha}")));
    }
    let n = a.dim();
    let e = matrix_exp(a, alpha)?;
    let periodicity_defect = op_norm(&(e.as_mat() - CMatrix::identity(n, n)));
    if !(periodicity_defect <= tol) {
        return Err(Error::NotPeriodic {
            defect: periodicity_defect,
            tol,
        });
    }
    let spec = spectrum(a)?;
    let spacing = 2.0 * PI / alpha;
    let mut off_lattice = Vec::new();
    let mut lattice_indices = Vec::with_capacity(n);
    let mut max_lattice_distance: f64 = 0.0;
    for &lambda in &spec.eigenvalues {
        let k = (lambda.im / spacing).round();
        let dist = (lambda - c(0.0, k * spacing)).norm();
        lattice_indices.push(k as i64);
        max_lattice_distance = max_lattice_distance.max(dist);
        if dist > tol {
            off_lattice.push(lambda);
        }
    }
    let defective: Vec<C64> = spec
        .clusters
        .iter()
        .filter(|k| !k.is_semisimple())
        .map(|k| k.value)
        .collect();
    Ok(PeriodicSpectrumReport {
        period: alpha,
        periodicity_defect,
        pass: off_lattice.is_empty() && defective.is_empty(),
        off_lattice,
        defective,
        lattice_indices,
        max_lattice_distance,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SmtReport {
    pub t: f64,
    /// `r(exp(tA))`
    pub radius: f64,
    /// Peripheral part of `σ(exp(tA))`.
    #[serde(serialize_with = "crate::io::ser_complex_list")]
    pub operator_side: Vec<C64>,
    /// Peripheral part of `exp(t·σ(A))`.
    #[serde(serialize_with = "crate::io::ser_complex_list")]
    pub generator_side: Vec<C64>,
    pub hausdorff: f64,
    pub pass: bool,
}

fn peripheral(values: &[C64]) -> (f64, Vec<C64>) {
    let r = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let cut = r * (1.0 - PERIPHERAL_BAND);
    (r, values.iter().copied().filter(|z| z.norm() >= cut).collect())
}

/// Hausdorff distance between two finite point sets in ℂ.
pub fn hausdorff(a: &[C64], b: &[C64]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    let directed = |from: &[C64], to: &[C64]| {
        from.iter()
            .map(|p| to.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

/// Compares the peripheral spectrum of `exp(tA)` with `exp(t·σ(A))` on the
/// circle `|λ| = r(exp(tA))`.
pub fn peripheral_smt_check(a: &Matrix, t: f64, tol: f64) -> Result<SmtReport> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("time must be positive, got {t}")));
    }
    let op_eigs = spectrum(&matrix_exp(a, t)?)?.eigenvalues;
    let gen_eigs: Vec<C64> = spectrum(a)?.eigenvalues.iter().map(|l| (l * t).exp()).collect();
    let (radius, operator_side) = peripheral(&op_eigs);
    let (_, generator_side) = peripheral(&gen_eigs);
    let hausdorff = hausdorff(&operator_side, &generator_side);
    Ok(SmtReport {
        t,
        radius,
        operator_side,
        generator_side,
        hausdorff,
        pass: hausdorff <= tol,
    })
}

/// `t = 1, 2, 4, …, 64`.
pub fn default_t_grid() -> Vec<f64> {
    (0..7).map(|k| f64::from(1u32 << k)).collect()
}

/// `h = 1e-1, 1e-2, …, 1e-6`.
pub fn default_h_grid() -> Vec<f64> {
    (1..=6).map(|k| 10f64.powi(-k)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct NormContinuityPoint {
    pub t: f64,
    /// `max_h` of the per-step defects.
    pub defect: f64,
    /// `‖e^{−ω₀t}T(t)(I − e^{−ω₀h}T(h))‖` for each `h`, in grid order.
    pub per_h: Vec<f64>,
}

/// `D(t) = max_{h} ‖e^{−ω₀t}T(t)(I − e^{−ω₀h}T(h))‖` along `t_grid`.
pub fn norm_continuity_defect(sg: &SemigroupSpec, t_grid: &[f64], h_grid: &[f64]) -> Result<Vec<NormContinuityPoint>> {
    let positive = |g: &[f64]| !g.is_empty() && g.iter().all(|&v| v > 0.0 && v.is_finite());
    if !positive(t_grid) || !positive(h_grid) {
        return Err(Error::InvalidInput("time grids must be non-empty and positive".into()));
    }
    if h_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("h grid must decrease strictly".into()));
    }
    let n = sg.dim();
    let w0 = sg.growth_bound;
    let steps = h_grid
        .iter()
        .map(|&h| Ok(CMatrix::identity(n, n) - sg.at(h)?.as_mat() * c((-w0 * h).exp(), 0.0)))
        .collect::<Result<Vec<_>>>()?;
    t_grid
        .iter()
        .map(|&t| {
            let tail = sg.at(t)?.as_mat() * c((-w0 * t).exp(), 0.0);
            let per_h: Vec<f64> = steps.iter().map(|k| op_norm(&(&tail * k))).collect();
            Ok(NormContinuityPoint {
                t,
                defect: per_h.iter().cloned().fold(0.0, f64::max),
                per_h,
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct AapReport {
    /// ε-net size of `{T(n·t_step)x : n·t_step ≤ horizon}`.
    pub discrete_net: Option<usize>,
    /// ε-net size of `{T(t)x}` on the fine grid over `[0, horizon]`.
    pub continuous_net: Option<usize>,
    /// ε-net size of `{T(s)x : s ∈ [0, t_step]}`.
    pub segment_net: Option<usize>,
    pub ratio: Option<f64>,
    /// `continuous ≤ discrete · segment`.
    pub product_bound_holds: Option<bool>,
    pub max_orbit_norm: f64,
    pub unbounded: bool,
}

/// Greedy ε-net along an ordered orbit: an uncovered point is covered by
/// the farthest later point of its run within `ε − spacing` of it.
///
/// For samples of a continuous curve pass the sample spacing: the shrunken
/// radius makes consecutive balls overlap across the gaps between samples,
/// so revisiting the curve later adds no centers. Pass 0 for genuinely
/// discrete orbits; a spacing of at least ε is ignored.
pub fn orbit_net(points: &[CVector], eps: f64, spacing: f64) -> Vec<usize> {
    let reach = if spacing < eps { eps - spacing } else { eps };
    let mut centers: Vec<usize> = Vec::new();
    for i in 0..points.len() {
        if centers.iter().any(|&k| (&points[k] - &points[i]).norm() <= eps) {
            continue;
        }
        let mut k = i;
        while k + 1 < points.len() && (&points[k + 1] - &points[i]).norm() <= reach {
            k += 1;
        }
        centers.push(k);
    }
    centers
}

/// Largest distance between consecutive samples.
fn max_spacing(points: &[CVector]) -> f64 {
    points.windows(2).map(|w| (&w[1] - &w[0]).norm()).fold(0.0, f64::max)
}

/// Compares covering numbers of the discrete orbit `T(n·t_step)x` with the
/// continuous orbit sampled `resolution` times per step.
pub fn aap_orbit_diagnostic(
    sg: &SemigroupSpec,
    x: &CVector,
    t_step: f64,
    horizon: f64,
    eps: f64,
    resolution: usize,
) -> Result<AapReport> {
    if !(t_step > 0.0 && horizon >= t_step && eps > 0.0 && resolution > 0) || !horizon.is_finite() {
        return Err(Error::InvalidInput(
            "need t_step > 0, horizon >= t_step, eps > 0 and a positive resolution".into(),
        ));
    }
    if x.len() != sg.dim() {
        return Err(Error::InvalidInput(
            "vector length does not match generator size".into(),
        ));
    }
    let h = t_step / resolution as f64;
    let fine_steps = (horizon / h + 1e-9).floor() as usize;
    let coarse_steps = fine_steps / resolution;
    let limit = ORBIT_BLOWUP * x.norm();

    let step = sg.at(h)?.into_inner();
    let mut continuous = Vec::with_capacity(fine_steps + 1);
    let mut y = x.clone();
    let mut max_orbit_norm = y.norm();
    continuous.push(y.clone());
    for _ in 0..fine_steps {
        y = &step * &y;
        max_orbit_norm = max_orbit_norm.max(y.norm());
        if !(y.norm() <= limit) {
            return Ok(AapReport {
                discrete_net: None,
                continuous_net: None,
                segment_net: None,
                ratio: None,
                product_bound_holds: None,
                max_orbit_norm: y.norm(),
                unbounded: true,
            });
        }
        continuous.push(y.clone());
    }
    let coarse = sg.at(t_step)?.into_inner();
    let mut discrete = Vec::with_capacity(coarse_steps + 1);
    let mut z = x.clone();
    discrete.push(z.clone());
    for _ in 0..coarse_steps {
        z = &coarse * &z;
        discrete.push(z.clone());
    }
    let segment = &continuous[..=resolution.min(fine_steps)];

    let spacing = max_spacing(&continuous);
    let d = orbit_net(&discrete, eps, 0.0).len();
    let cont = orbit_net(&continuous, eps, spacing).len();
    let seg = orbit_net(segment, eps, spacing).len();
    Ok(AapReport {
        discrete_net: Some(d),
        continuous_net: Some(cont),
        segment_net: Some(seg),
        ratio: Some(cont as f64 / d as f64),
        product_bound_holds: Some(cont <= d * seg),
        max_orbit_norm,
        unbounded: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(entries: &[f64]) -> CVector {
        CVector::from_iterator(entries.len(), entries.iter().map(|&x| c(x, 0.0)))
    }

    fn sg(a: Matrix) -> SemigroupSpec {
        SemigroupSpec::new(a, UnitTable::default()).unwrap()
    }

    #[test]
    fn growth_bounds() {
        let rot = Matrix::from_real_rows(2, &[0.0, 1.0, -1.0, 0.0]).unwrap();
        assert!(growth_bound(&rot).unwrap().abs() < 1e-15);
        let r = spectrum(&matrix_exp(&rot, 1.0).unwrap()).unwrap().spectral_radius();
        assert!((r - 1.0).abs() < 1e-14);
        let neg = Matrix::diag(&[c(-1.0, 0.0), c(-1.0, 0.0)]).unwrap();
        assert!((growth_bound(&neg).unwrap() + 1.0).abs() < 1e-15);
        let d = Matrix::diag(&[c(0.3, 0.0), c(-2.0, 0.0)]).unwrap();
        assert!((growth_bound(&d).unwrap() - 0.3).abs() < 1e-15);
        let r2 = spectrum(&matrix_exp(&d, 2.0).unwrap()).unwrap().spectral_radius();
        assert!((r2.ln() / 2.0 - 0.3).abs() < 1e-12);
    }

    #[test]
    fn boundedness_flag() {
        assert!(sg(Matrix::diag(&[c(0.0, 1.0), c(-1.0, 0.0)]).unwrap()).bounded);
        assert!(!sg(Matrix::diag(&[c(0.1, 0.0)]).unwrap()).bounded);
        // nilpotent generator: exp(tA) = I + tA grows linearly
        assert!(!sg(Matrix::from_real_rows(2, &[0.0, 1.0, 0.0, 0.0]).unwrap()).bounded);
    }

    #[test]
    fn incommensurable_pair() {
        let a = Matrix::diag(&[c(0.0, 2.0 * PI), c(0.0, 2f64.sqrt() * PI)]).unwrap();
        let times = [PeriodSpec::rational(1, 1), PeriodSpec::new(1, 1, "sqrt2")];
        let out = semigroup_decompose(&sg(a), &times, &v(&[1.0, 1.0]), 1e-10).unwrap();
        assert!(out.result.accepted);
        assert_eq!(out.plan.classes.len(), 2);
        assert!((&out.result.components[0] - v(&[1.0, 0.0])).norm() < 1e-10);
        assert!((&out.result.components[1] - v(&[0.0, 1.0])).norm() < 1e-10);
        assert!(out.result.sum_residual <= 1e-10);
    }

    #[test]
    fn decaying_semigroup_only_decomposes_zero() {
        let a = Matrix::diag(&[c(-1.0, 0.0), c(-0.5, 3.0)]).unwrap();
        let s = sg(a);
        let times = [PeriodSpec::rational(1, 1), PeriodSpec::new(1, 1, "pi")];
        let out = semigroup_decompose(&s, &times, &CVector::zeros(2), 1e-10).unwrap();
        assert!(out.result.components.iter().all(|x| x.norm() == 0.0));
        assert!(matches!(
            semigroup_decompose(&s, &times, &v(&[1.0, 0.0]), 1e-10),
            Err(Error::PreconditionViolation { .. })
        ));
    }

    #[test]
    fn commensurable_pair_merges() {
        let a = Matrix::diag(&[c(0.0, 2.0 * PI), c(0.0, PI)]).unwrap();
        let times = [PeriodSpec::rational(1, 1), PeriodSpec::rational(2, 1)];
        let x = v(&[0.7, -1.3]);
        let out = semigroup_decompose(&sg(a), &times, &x, 1e-10).unwrap();
        assert_eq!(out.plan.classes.len(), 1);
        assert_eq!(out.plan.classes[0].common, PeriodSpec::rational(2, 1));
        assert!((&out.result.components[0] - &x).norm() < 1e-10);
        // T(1) = diag(1, -1) does not fix the merged component
        assert!(out.original_time_defects[0] > 1.0);
    }

    #[test]
    fn unbounded_semigroup_is_refused() {
        let s = sg(Matrix::diag(&[c(0.5, 0.0)]).unwrap());
        assert!(matches!(
            semigroup_decompose(&s, &[PeriodSpec::rational(1, 1)], &v(&[0.0]), 1e-10),
            Err(Error::HypothesisViolation(_))
        ));
    }

    #[test]
    fn collapse_examples() {
        let plan = reduce_periods(&[PeriodSpec::rational(1, 1)]).unwrap();
        let jordan = Matrix::from_real_rows(2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(
            collapse_powers(&plan, vec![jordan]),
            Err(Error::HypothesisViolation(_))
        ));

        let plan = reduce_periods(&[PeriodSpec::rational(1, 1), PeriodSpec::new(1, 1, "pi")]).unwrap();
        let ops = vec![Matrix::identity(2), Matrix::diag(&[c(1.0, 0.0), c(0.5, 0.0)]).unwrap()];
        let fam = collapse_powers(&plan, ops.clone()).unwrap();
        assert_eq!(fam.ops(), ops.as_slice());

        let plan = reduce_periods(&[PeriodSpec::rational(2, 3), PeriodSpec::rational(1, 2)]).unwrap();
        let s = sg(Matrix::diag(&[c(0.0, PI), c(0.0, 3.0 * PI), c(-1.0, 0.0)]).unwrap());
        let t2 = s.at(2.0).unwrap();
        let fam = collapse_powers(&plan, vec![t2.clone()]).unwrap();
        assert_eq!(fam.len(), 1);
        assert_eq!(fam.ops()[0], t2);
    }

    #[test]
    fn periodic_spectrum_examples() {
        let a = Matrix::diag(&[c(0.0, 2.0 * PI), c(0.0, -4.0 * PI)]).unwrap();
        let r = periodic_spectrum_check(&a, 1.0, 1e-9).unwrap();
        assert!(r.pass);
        let mut k = r.lattice_indices.clone();
        k.sort();
        assert_eq!(k, vec![-2, 1]);

        let half = Matrix::diag(&[c(0.0, PI)]).unwrap();
        assert!(matches!(
            periodic_spectrum_check(&half, 1.0, 1e-9),
            Err(Error::NotPeriodic { .. })
        ));

        let thirds: Vec<C64> = (0..3).map(|k| c(0.0, 2.0 * PI / 3.0 * k as f64)).collect();
        assert!(
            periodic_spectrum_check(&Matrix::diag(&thirds).unwrap(), 3.0, 1e-9)
                .unwrap()
                .pass
        );
    }

    #[test]
    fn smt_examples() {
        let r = peripheral_smt_check(&Matrix::diag(&[c(0.0, 0.0), c(-1.0, 0.0)]).unwrap(), 1.0, 1e-10).unwrap();
        assert!(r.pass && r.operator_side.len() == 1);
        assert!((r.operator_side[0] - c(1.0, 0.0)).norm() < 1e-14);

        let rot = Matrix::from_real_rows(2, &[0.0, 1.0, -1.0, 0.0]).unwrap();
        let r = peripheral_smt_check(&rot, PI / 2.0, 1e-10).unwrap();
        assert!(r.pass && r.operator_side.len() == 2);
        for target in [c(0.0, 1.0), c(0.0, -1.0)] {
            assert!(r.operator_side.iter().any(|z| (z - target).norm() < 1e-12));
        }

        let r = peripheral_smt_check(&Matrix::diag(&[c(0.0, 2.0 * PI), c(-1.0, 0.0)]).unwrap(), 1.0, 1e-10).unwrap();
        assert!(r.pass && (r.radius - 1.0).abs() < 1e-12);
        assert!(peripheral_smt_check(&rot, 0.0, 1e-10).is_err());
    }

    #[test]
    fn norm_continuity_examples() {
        let zero = sg(Matrix::zeros(2));
        let curve = norm_continuity_defect(&zero, &default_t_grid(), &default_h_grid()).unwrap();
        assert!(curve.iter().all(|p| p.defect == 0.0));

        let a = Matrix::diag(&[c(-1.0, 0.0), c(0.0, 2.0 * PI)]).unwrap();
        let norm_a = 2.0 * PI;
        let s = sg(a);
        let curve = norm_continuity_defect(&s, &[10.0], &[1e-3]).unwrap();
        assert!(curve[0].defect <= norm_a * 1e-3 * (norm_a * 1e-3).exp());

        let curve = norm_continuity_defect(&s, &default_t_grid(), &default_h_grid()).unwrap();
        for p in &curve {
            assert!(p.per_h.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        }
        assert!(norm_continuity_defect(&s, &[1.0], &[1e-3, 1e-2]).is_err());
        assert!(norm_continuity_defect(&s, &[-1.0], &[1e-3]).is_err());
    }

    #[test]
    fn aap_examples() {
        let rot = sg(Matrix::from_real_rows(2, &[0.0, 1.0, -1.0, 0.0]).unwrap());
        let x = v(&[1.0, 0.0]);
        let short = aap_orbit_diagnostic(&rot, &x, 1.0, 20.0, 0.1, 64).unwrap();
        let long = aap_orbit_diagnostic(&rot, &x, 1.0, 40.0, 0.1, 64).unwrap();
        assert!(!short.unbounded);
        // the orbit is a circle; covering numbers stop growing
        assert_eq!(short.continuous_net, long.continuous_net);
        assert_eq!(long.product_bound_holds, Some(true));

        let grow = sg(Matrix::diag(&[c(1.0, 0.0)]).unwrap());
        let r = aap_orbit_diagnostic(&grow, &v(&[1.0]), 1.0, 20.0, 0.1, 16).unwrap();
        assert!(r.unbounded && r.discrete_net.is_none());

        let circle = sg(Matrix::diag(&[c(0.0, 2.0 * PI)]).unwrap());
        let eps = 0.1;
        let r = aap_orbit_diagnostic(&circle, &v(&[1.0]), 1.0, 5.0, eps, 2048).unwrap();
        assert_eq!(r.discrete_net, Some(1));
        let expected = (PI / eps).ceil() as usize;
        let got = r.continuous_net.unwrap();
        assert!(got + 1 >= expected && got <= expected + 1, "net {got} vs {expected}");
        assert_eq!(r.ratio, Some(got as f64));
        assert_eq!(r.product_bound_holds, Some(true));
    }

    #[test]
    fn orbit_net_covers_everything() {
        let pts: Vec<CVector> = (0..50)
            .map(|k| v(&[(k as f64 * 0.37).sin(), (k as f64 * 0.11).cos()]))
            .collect();
        let centers = orbit_net(&pts, 0.2, 0.0);
        for p in &pts {
            assert!(centers.iter().any(|&k| (&pts[k] - p).norm() <= 0.2));
        }
    }
}
