//! Mean ergodic projections and the spectral facts that make them exist.
//!
//! In finite dimension a power-bounded operator is automatically mean
//! ergodic, and the projection onto its fixed space along `ran(T−I)` can be
//! obtained either algebraically from left and right fixed vectors or as a
//! limit of Cesàro averages. Both routes are provided so that each can check
//! the other.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    c, kernel_basis_scaled, op_norm, range_basis, schur, singular_values, spectrum, CMatrix, Matrix, SpectrumReport,
    Subspace, C64,
};

/// Relative rank tolerance for deciding which directions `T` fixes.
pub const FIXED_SPACE_TOL: f64 = 1e-9;

/// Default Cesàro divergence threshold on `‖A_N − A_2N‖`.
pub const DEFAULT_CESARO_TOL: f64 = 1e-6;

/// Smallest admissible singular value of the left/right fixed-vector pairing.
const SPLIT_GAP_TOL: f64 = 1e-8;

/// Margin by which a decaying orbit is allowed to exceed the stable radius.
pub const DECAY_MARGIN: f64 = 0.05;

/// Default projection tolerance `1e-9·(1+‖T‖)`.
pub fn default_proj_tol(t: &Matrix) -> f64 {
    1e-9 * (1.0 + t.norm())
}

fn unit_circle_tol(spec: &SpectrumReport) -> f64 {
    spec.cluster_tol.max(64.0 * f64::EPSILON)
}

#[derive(Clone, Debug, Serialize)]
pub struct PowerBoundVerdict {
    pub bounded: bool,
    pub spectral_radius: f64,
    /// Σ (algebraic − geometric) over eigenvalue clusters on the unit circle.
    pub peripheral_defect: usize,
    /// max ‖T^N‖ over N = 1, 2, 4, …, 1024.
    pub empirical_bound: f64,
    /// `(N, ‖T^N‖)` samples behind `empirical_bound`.
    pub samples: Vec<(u64, f64)>,
}

pub fn power_bounded_verdict(t: &Matrix) -> Result<PowerBoundVerdict> {
    let spec = spectrum(t)?;
    Ok(verdict_from_spectrum(t, &spec))
}

pub(crate) fn verdict_from_spectrum(t: &Matrix, spec: &SpectrumReport) -> PowerBoundVerdict {
    let radius = spec.spectral_radius();
    let unit_tol = unit_circle_tol(spec);
    let peripheral_defect = spec
        .clusters
        .iter()
        .filter(|k| (k.value.norm() - 1.0).abs() <= unit_tol)
        .map(|k| k.defect())
        .sum();

    let mut samples = Vec::with_capacity(11);
    let mut power = t.as_mat().clone();
    for k in 0..=10u32 {
        let norm = op_norm(&power);
        let norm = if norm.is_finite() { norm } else { f64::INFINITY };
        samples.push((1u64 << k, norm));
        if k < 10 {
            power = &power * &power;
        }
    }
    let empirical_bound = samples.iter().map(|s| s.1).fold(0.0, f64::max);

    PowerBoundVerdict {
        bounded: radius <= 1.0 + unit_tol && peripheral_defect == 0,
        spectral_radius: radius,
        peripheral_defect,
        empirical_bound,
        samples,
    }
}

/// How to realise the mean ergodic projection.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeanMethod {
    /// Projection onto `ker(T−I)` along `ran(T−I)`.
    Algebraic,
    /// `A_N = (1/N)·Σ_{k<N} T^k`, certified against `A_2N`.
    Cesaro { window: usize, divergence_tol: f64 },
}

impl MeanMethod {
    pub fn cesaro(window: usize) -> Self {
        MeanMethod::Cesaro {
            window,
            divergence_tol: DEFAULT_CESARO_TOL,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProjectionReport {
    #[serde(rename = "P")]
    pub projection: Matrix,
    pub method: MeanMethod,
    /// ‖P² − P‖
    pub idempotency_defect: f64,
    /// max(‖PT − P‖, ‖TP − P‖)
    pub zero_element_defect: f64,
    /// Distance between `ran P` and `ker(T−I)`.
    pub kernel_distance: f64,
    /// ‖A_N − A_2N‖ for Cesàro projections.
    pub cesaro_certificate: Option<f64>,
    #[serde(skip)]
    pub range: Subspace,
}

/// Fixed-space projection for `T`, with its defining defects.
pub fn mean_ergodic_projection(t: &Matrix, method: MeanMethod) -> Result<ProjectionReport> {
    let (p, certificate) = match method {
        MeanMethod::Algebraic => (algebraic_projection(t)?, None),
        MeanMethod::Cesaro { window, divergence_tol } => {
            let (a_n, a_2n) = cesaro_pair(t, window)?;
            let cert = op_norm(&(&a_n - &a_2n));
            if !(cert <= divergence_tol) {
                return Err(Error::CesaroDivergence {
                    window,
                    certificate: cert,
                    tol: divergence_tol,
                });
            }
            (a_n, Some(cert))
        }
    };
    let projection = Matrix::new(p)?;
    let fixed = fixed_space(t.as_mat())?;
    Ok(build_report(t, projection, method, certificate, &fixed))
}

fn build_report(
    t: &Matrix,
    projection: Matrix,
    method: MeanMethod,
    cesaro_certificate: Option<f64>,
    fixed: &Subspace,
) -> ProjectionReport {
    let p = projection.as_mat();
    let idempotency_defect = op_norm(&(p * p - p));
    let zero_element_defect = op_norm(&(p * t.as_mat() - p)).max(op_norm(&(t.as_mat() * p - p)));
    // nonzero singular values of a projection are >= 1
    let range = Subspace::span(p, 0.5 / op_norm(p));
    let kernel_distance = range.distance(fixed);
    ProjectionReport {
        projection,
        method,
        idempotency_defect,
        zero_element_defect,
        kernel_distance,
        cesaro_certificate,
        range,
    }
}

/// `K·(WᴴK)⁻¹·Wᴴ` with `K = ker(T−I)` and `W = ker((T−I)ᴴ)`.
fn algebraic_projection(t: &Matrix) -> Result<CMatrix> {
    oblique_fixed_projection(t.as_mat(), c(1.0, 0.0))
}

/// Scale against which `T − λI` is rank-tested.
fn shift_scale(t: &CMatrix, lambda: C64) -> f64 {
    lambda.norm() + op_norm(t)
}

/// `ker(T−I)`, rank-tested relative to `1 + ‖T‖`.
pub(crate) fn fixed_space(t: &CMatrix) -> Result<Subspace> {
    let one = c(1.0, 0.0);
    let d = t - CMatrix::identity(t.nrows(), t.ncols()) * one;
    kernel_basis_scaled(&d, FIXED_SPACE_TOL, shift_scale(t, one))
}

/// Spectral projection onto `ker(T−λI)` along `ran(T−λI)`.
pub(crate) fn oblique_fixed_projection(t: &CMatrix, lambda: C64) -> Result<CMatrix> {
    let n = t.nrows();
    let mut d = t.clone();
    for i in 0..n {
        d[(i, i)] -= lambda;
    }
    let scale = shift_scale(t, lambda);
    let right = kernel_basis_scaled(&d, FIXED_SPACE_TOL, scale)?;
    let left = kernel_basis_scaled(&d.adjoint(), FIXED_SPACE_TOL, scale)?;
    if right.dim() != left.dim() {
        return Err(Error::SplittingNotDirect { gap: 0.0 });
    }
    if right.dim() == 0 {
        return Ok(CMatrix::zeros(n, n));
    }
    let (k, w) = (right.basis(), left.basis());
    let pairing = w.adjoint() * k;
    let gap = singular_values(&pairing).iter().cloned().fold(f64::INFINITY, f64::min);
    if gap <= SPLIT_GAP_TOL {
        return Err(Error::SplittingNotDirect { gap });
    }
    let inv = pairing.try_inverse().ok_or(Error::SplittingNotDirect { gap })?;
    Ok(k * inv * w.adjoint())
}

/// Cesàro averages `(A_N, A_2N)`, summed in a fixed sequential order.
pub fn cesaro_pair(t: &Matrix, window: usize) -> Result<(CMatrix, CMatrix)> {
    if window == 0 {
        return Err(Error::InvalidInput("Cesàro window must be positive".into()));
    }
    let n = t.dim();
    let mut power = CMatrix::identity(n, n);
    let mut sum = CMatrix::zeros(n, n);
    let mut a_n = CMatrix::zeros(n, n);
    for k in 0..2 * window {
        sum += &power;
        if k + 1 == window {
            a_n = &sum / c(window as f64, 0.0);
        }
        power = &power * t.as_mat();
    }
    Ok((a_n, sum / c(2.0 * window as f64, 0.0)))
}

/// `A_N` alone.
pub fn cesaro_average(t: &Matrix, window: usize) -> Result<CMatrix> {
    if window == 0 {
        return Err(Error::InvalidInput("Cesàro window must be positive".into()));
    }
    let n = t.dim();
    let mut power = CMatrix::identity(n, n);
    let mut sum = CMatrix::zeros(n, n);
    for _ in 0..window {
        sum += &power;
        power = &power * t.as_mat();
    }
    Ok(sum / c(window as f64, 0.0))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ZeroElementCheck {
    pub defect: f64,
    pub pass: bool,
}

/// `max_T max(‖PT − P‖, ‖TP − P‖)` over the family.
pub fn zero_element_check(p: &Matrix, family: &[Matrix], tol: f64) -> Result<ZeroElementCheck> {
    let mut defect: f64 = 0.0;
    for t in family {
        if t.dim() != p.dim() {
            return Err(Error::InvalidInput(format!(
                "dimension mismatch: P is {0}x{0}, operator is {1}x{1}",
                p.dim(),
                t.dim()
            )));
        }
        let pt = op_norm(&(p.as_mat() * t.as_mat() - p.as_mat()));
        let tp = op_norm(&(t.as_mat() * p.as_mat() - p.as_mat()));
        defect = defect.max(pt).max(tp);
    }
    Ok(ZeroElementCheck {
        defect,
        pass: defect <= tol,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct KernelPowerCollapse {
    pub dim_ker_pow: usize,
    pub dim_ker: usize,
    pub distance: f64,
    pub collapsed: bool,
}

/// Compares `ker(T−I)^n` with `ker(T−I)`.
pub fn kernel_power_collapse(t: &Matrix, n: u32, tol: f64) -> Result<KernelPowerCollapse> {
    if n == 0 {
        return Err(Error::InvalidInput("power must be at least 1".into()));
    }
    let d = Matrix::new(t.shifted(c(1.0, 0.0)))?;
    let scale = shift_scale(t.as_mat(), c(1.0, 0.0));
    let ker = kernel_basis_scaled(&d, FIXED_SPACE_TOL, scale)?;
    let ker_pow = kernel_basis_scaled(&d.pow(n as u64), FIXED_SPACE_TOL, scale.powi(n as i32))?;
    let distance = ker.distance(&ker_pow);
    Ok(KernelPowerCollapse {
        dim_ker_pow: ker_pow.dim(),
        dim_ker: ker.dim(),
        distance,
        collapsed: ker.dim() == ker_pow.dim() && distance <= tol,
    })
}

/// Reversible (unimodular) and stable parts of a power-bounded operator.
#[derive(Clone, Debug)]
pub struct JdlgSplit {
    pub reversible: Subspace,
    pub stable: Subspace,
    /// Largest eigenvalue modulus on the stable part (0 when it is trivial).
    pub stable_radius: f64,
    /// `‖T^k y‖ ≤ κ·(stable_radius + DECAY_MARGIN)^k·‖y‖` for `y` in `stable`.
    pub kappa: f64,
    /// `‖Q‖` for the spectral projection `Q` onto the reversible part; the
    /// conditioning of the split.
    pub projection_norm: f64,
}

impl JdlgSplit {
    pub fn decay_bound(&self, k: u32) -> f64 {
        self.kappa * (self.stable_radius + DECAY_MARGIN).powi(k as i32)
    }

    /// Round-off level below which `‖T^k y‖/‖y‖` cannot be resolved in
    /// floating point, for `T` of dimension `dim` with `‖T‖ = t_norm` and
    /// `sup_j ‖T^j‖ ≤ power_bound`.
    ///
    /// Rounding puts `O(dim·ε·‖Q‖)` of `y` and of each iterate into the
    /// reversible part, where it does not decay.
    pub fn rounding_floor(&self, k: u32, dim: usize, t_norm: f64, power_bound: f64) -> f64 {
        let rate = self.stable_radius + DECAY_MARGIN;
        let iterates: f64 = (0..k).map(|j| rate.powi(j as i32)).sum();
        dim as f64 * f64::EPSILON * self.projection_norm * power_bound * (1.0 + t_norm * self.kappa * iterates)
    }
}

const POWER_KAPPA_LIMIT: usize = 4096;

/// `max_{b<K} ‖R^b‖/rate^b` for the first `K` with `‖R^K‖ ≤ rate^K`.
///
/// Writing `k = aK + b` gives `‖R^k‖ ≤ ‖R^K‖^a·‖R^b‖ ≤ κ·rate^k`.
fn power_kappa(r: &CMatrix, rate: f64) -> Option<f64> {
    let log_rate = rate.ln();
    let mut p = CMatrix::identity(r.nrows(), r.ncols());
    let mut best: f64 = 1.0;
    for j in 1..=POWER_KAPPA_LIMIT {
        p = &p * r;
        let excess = op_norm(&p).ln() - j as f64 * log_rate;
        if excess <= 0.0 {
            return Some(best);
        }
        best = best.max(excess.exp());
    }
    None
}

pub fn jdlg_split(t: &Matrix) -> Result<JdlgSplit> {
    let spec = spectrum(t)?;
    let verdict = verdict_from_spectrum(t, &spec);
    if !verdict.bounded {
        return Err(Error::HypothesisViolation(format!(
            "operator is not power-bounded (spectral radius {:.6}, peripheral defect {})",
            verdict.spectral_radius, verdict.peripheral_defect
        )));
    }
    let n = t.dim();
    let unit_tol = unit_circle_tol(&spec);
    let mut q = CMatrix::zeros(n, n);
    for k in spec
        .clusters
        .iter()
        .filter(|k| (k.value.norm() - 1.0).abs() <= unit_tol)
    {
        q += oblique_fixed_projection(t.as_mat(), k.value)?;
    }
    let projection_norm = op_norm(&q);
    let reversible = Subspace::span(&q, 0.5 / projection_norm);
    let complement = CMatrix::identity(n, n) - &q;
    let stable = Subspace::from_orthonormal(range_basis(&complement, 0.5 / op_norm(&complement)), 0.5);

    let (stable_radius, kappa) = if stable.dim() == 0 {
        (0.0, 1.0)
    } else {
        let b = stable.basis();
        let restricted = b.adjoint() * t.as_mat() * b;
        let (_, r) = schur(&restricted)?;
        let m = r.nrows();
        let radius = (0..m).map(|i| r[(i, i)].norm()).fold(0.0, f64::max);
        // D = diag(1, τ, τ², …) gives ‖D·R·D⁻¹‖ ≤ radius + ‖scaled strict part‖
        // and cond(D) = τ^{−(m−1)}; take the largest τ keeping the strict part
        // within the margin (its norm grows monotonically with τ)
        let scaled_strict = |tau: f64| {
            let s = CMatrix::from_fn(m, m, |i, j| {
                if j > i {
                    r[(i, j)] * tau.powi((j - i) as i32)
                } else {
                    c(0.0, 0.0)
                }
            });
            op_norm(&s)
        };
        let tau = if scaled_strict(1.0) <= DECAY_MARGIN {
            1.0
        } else {
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if scaled_strict(mid) <= DECAY_MARGIN {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        let scaling_kappa = tau.powi(-((m - 1) as i32));
        let kappa = power_kappa(&restricted, radius + DECAY_MARGIN).map_or(scaling_kappa, |k| k.min(scaling_kappa));
        (radius, kappa)
    };
    Ok(JdlgSplit {
        reversible,
        stable,
        stable_radius,
        kappa,
        projection_norm,
    })
}
