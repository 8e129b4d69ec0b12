//! Dense complex linear algebra: kernels, subspace arithmetic, spectra and
//! matrix exponentials.
//!
//! Every subspace is carried as an orthonormal column basis, so membership
//! and distance questions reduce to projector arithmetic. Rank decisions are
//! always relative to the largest singular value of the matrix at hand.

use std::ops::Deref;

use nalgebra::{Complex, DMatrix, DVector, Hessenberg};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative eigenvalue clustering tolerance (multiplied by `‖M‖`).
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;

/// Relative rank tolerance used when counting eigenvectors at a cluster.
///
/// A defective cluster leaves one singular value of `M - λI` at order one,
/// a semisimple cluster leaves all of them at roughly the cluster width, so
/// anything between those scales separates the two.
pub const GEOMETRIC_RANK_TOL: f64 = 1e-6;

/// Beyond this 1-norm of `tA` the squaring phase loses all accuracy.
const EXP_SCALE_LIMIT: f64 = 1e12;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Default relative rank tolerance: `dim · ε_machine`.
pub fn default_rank_tol(dim: usize) -> f64 {
    dim.max(1) as f64 * f64::EPSILON
}

/// Thin singular value decomposition `M = U·diag(σ)·Vᴴ`, `σ` descending.
#[derive(Clone, Debug)]
pub struct Svd {
    /// `rows × k` with orthonormal columns where `σ > 0`, `k = min(rows, cols)`.
    pub u: CMatrix,
    pub singular_values: Vec<f64>,
    /// `cols × k`, orthonormal columns.
    pub v: CMatrix,
}

const JACOBI_MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD of a matrix with `rows ≥ cols`.
fn jacobi_svd_tall(a: &CMatrix) -> Svd {
    let (m, n) = a.shape();
    let mut w = a.clone();
    let mut v = CMatrix::identity(n, n);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dotc(&w.column(q));
                let g = gamma.norm();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // make the pairing real, then rotate as in the real case
                let phase = (gamma / g).conj();
                for i in 0..m {
                    w[(i, q)] *= phase;
                }
                for i in 0..n {
                    v[(i, q)] *= phase;
                }
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for mat in [&mut w, &mut v] {
                    for i in 0..mat.nrows() {
                        let (x, y) = (mat[(i, p)], mat[(i, q)]);
                        mat[(i, p)] = x * cs - y * sn;
                        mat[(i, q)] = x * sn + y * cs;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<(usize, f64)> = (0..n).map(|j| (j, w.column(j).norm())).collect();
    order.sort_by(|x, y| y.1.total_cmp(&x.1));
    let mut u = CMatrix::zeros(m, n);
    let mut vs = CMatrix::zeros(n, n);
    let mut singular_values = Vec::with_capacity(n);
    let floor = m as f64 * f64::EPSILON * order.first().map_or(0.0, |o| o.1);
    for (k, &(j, s)) in order.iter().enumerate() {
        if s > floor {
            u.set_column(k, &(w.column(j) / c(s, 0.0)));
        } else {
            // noise-level column: replace by an orthonormal completion
            u.set_column(k, &orthogonal_completion(&u.columns(0, k).into_owned()));
        }
        vs.set_column(k, &v.column(j));
        singular_values.push(s);
    }
    Svd {
        u,
        singular_values,
        v: vs,
    }
}

/// Unit vector orthogonal to the orthonormal columns of `q`.
fn orthogonal_completion(q: &CMatrix) -> CVector {
    let m = q.nrows();
    let mut best = CVector::zeros(m);
    let mut best_norm = 0.0;
    for i in 0..m {
        let mut e = CVector::zeros(m);
        e[i] = c(1.0, 0.0);
        for _ in 0..2 {
            let coeff = q.adjoint() * &e;
            e -= q * coeff;
        }
        let nrm = e.norm();
        if nrm > best_norm {
            best_norm = nrm;
            best = e;
        }
    }
    best / c(best_norm, 0.0)
}

/// Thin SVD by one-sided Jacobi rotations (accurate on rank-deficient input).
pub fn svd(m: &CMatrix) -> Svd {
    if m.nrows() >= m.ncols() {
        jacobi_svd_tall(m)
    } else {
        let t = jacobi_svd_tall(&m.adjoint());
        Svd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        }
    }
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    svd(m).singular_values
}

/// Spectral (operator 2-) norm.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn vec_norm(v: &CVector) -> f64 {
    v.norm()
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// A dense, square, finite complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix(CMatrix);

impl Matrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(Error::InvalidInput(format!(
                "matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if !is_finite(&m) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        Ok(Matrix(m))
    }

    /// Row-major complex entries.
    pub fn from_rows(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                entries.len()
            )));
        }
        Matrix::new(CMatrix::from_row_slice(dim, dim, entries))
    }

    /// Row-major real entries.
    pub fn from_real_rows(dim: usize, entries: &[f64]) -> Result<Self> {
        let z: Vec<C64> = entries.iter().map(|&x| c(x, 0.0)).collect();
        Matrix::from_rows(dim, &z)
    }

    pub fn identity(dim: usize) -> Self {
        Matrix(CMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Matrix(CMatrix::zeros(dim, dim))
    }

    pub fn diag(entries: &[C64]) -> Result<Self> {
        Matrix::new(CMatrix::from_diagonal(&CVector::from_column_slice(entries)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_mat(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    /// Spectral norm.
    pub fn norm(&self) -> f64 {
        op_norm(&self.0)
    }

    /// `M - λI`.
    pub fn shifted(&self, lambda: C64) -> CMatrix {
        let mut m = self.0.clone();
        for i in 0..m.nrows() {
            m[(i, i)] -= lambda;
        }
        m
    }

    /// `M^k` by repeated squaring.
    pub fn pow(&self, k: u64) -> CMatrix {
        let n = self.dim();
        let mut result = CMatrix::identity(n, n);
        let mut base = self.0.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }
}

impl Deref for Matrix {
    type Target = CMatrix;
    fn deref(&self) -> &CMatrix {
        &self.0
    }
}

impl TryFrom<CMatrix> for Matrix {
    type Error = Error;
    fn try_from(m: CMatrix) -> Result<Self> {
        Matrix::new(m)
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    dim: usize,
    re: Vec<Vec<f64>>,
    #[serde(default)]
    im: Vec<Vec<f64>>,
}

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.dim();
        let rows = |f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..n).map(|i| (0..n).map(|j| f(&self.0[(i, j)])).collect()).collect()
        };
        MatrixRepr {
            dim: n,
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = MatrixRepr::deserialize(d)?;
        let n = repr.dim;
        let check = |rows: &Vec<Vec<f64>>, part: &str| -> std::result::Result<(), D::Error> {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(D::Error::custom(format!("`{part}` must be a {n}x{n} array of rows")));
            }
            Ok(())
        };
        check(&repr.re, "re")?;
        if !repr.im.is_empty() {
            check(&repr.im, "im")?;
        }
        let m = CMatrix::from_fn(n, n, |i, j| {
            let im = if repr.im.is_empty() { 0.0 } else { repr.im[i][j] };
            c(repr.re[i][j], im)
        });
        Matrix::new(m).map_err(D::Error::custom)
    }
}

/// A subspace of `C^ambient_dim` given by an orthonormal column basis.
#[derive(Clone, Debug)]
pub struct Subspace {
    ambient_dim: usize,
    basis: CMatrix,
    /// Relative rank tolerance the basis was extracted with.
    pub tol: f64,
    /// Construction residual; `‖M·basis‖` for kernels, zero otherwise.
    pub residual: f64,
}

impl Subspace {
    /// Wraps a basis that is already orthonormal.
    pub fn from_orthonormal(basis: CMatrix, tol: f64) -> Self {
        Subspace {
            ambient_dim: basis.nrows(),
            basis,
            tol,
            residual: 0.0,
        }
    }

    pub fn zero(ambient_dim: usize) -> Self {
        Subspace::from_orthonormal(CMatrix::zeros(ambient_dim, 0), 0.0)
    }

    pub fn full(ambient_dim: usize) -> Self {
        Subspace::from_orthonormal(CMatrix::identity(ambient_dim, ambient_dim), 0.0)
    }

    /// Orthonormal basis of the column span of `columns`.
    pub fn span(columns: &CMatrix, tol: f64) -> Self {
        Subspace::from_orthonormal(range_basis(columns, tol), tol)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    /// Orthogonal projector `B·Bᴴ`.
    pub fn projector(&self) -> CMatrix {
        &self.basis * self.basis.adjoint()
    }

    /// `‖BᴴB − I‖`.
    pub fn orthonormality_defect(&self) -> f64 {
        let k = self.dim();
        op_norm(&(self.basis.adjoint() * &self.basis - CMatrix::identity(k, k)))
    }

    /// Distance between subspaces as `‖P_self − P_other‖`; equals one when
    /// the dimensions differ.
    pub fn distance(&self, other: &Subspace) -> f64 {
        if self.ambient_dim != other.ambient_dim || self.dim() != other.dim() {
            return 1.0;
        }
        op_norm(&(self.projector() - other.projector()))
    }

    pub fn project(&self, x: &CVector) -> CVector {
        &self.basis * (self.basis.adjoint() * x)
    }
}

/// Orthonormal basis of the range of `m`: left singular vectors whose
/// singular value exceeds `tol · σ_max`.
pub fn range_basis(m: &CMatrix, tol: f64) -> CMatrix {
    let rows = m.nrows();
    if m.ncols() == 0 || rows == 0 {
        return CMatrix::zeros(rows, 0);
    }
    let svd = svd(m);
    let u = svd.u;
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return CMatrix::zeros(rows, 0);
    }
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > tol * smax)
        .collect();
    CMatrix::from_fn(rows, keep.len(), |i, j| u[(i, keep[j])])
}

/// Orthonormal basis of the numerical null space of a square matrix.
///
/// Singular values `≤ tol · σ_max` count as zero.
pub fn kernel_basis(m: &CMatrix, tol: f64) -> Result<Subspace> {
    kernel_basis_scaled(m, tol, 0.0)
}

/// As [`kernel_basis`], with threshold `tol · max(σ_max, scale)`.
///
/// For a matrix such as `T − I` formed from `T`, pass `scale ≈ 1 + ‖T‖`: a
/// difference that is pure round-off then has a full kernel.
pub fn kernel_basis_scaled(m: &CMatrix, tol: f64, scale: f64) -> Result<Subspace> {
    if !(tol >= 0.0) {
        return Err(Error::InvalidInput(format!("rank tolerance must be >= 0, got {tol}")));
    }
    if !is_finite(m) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let n = m.ncols();
    if n == 0 {
        return Ok(Subspace::zero(0));
    }
    // Pad wide-or-square inputs so the SVD returns a full set of right vectors.
    let padded;
    let work = if m.nrows() < n {
        padded = m.clone().resize_vertically(n, c(0.0, 0.0));
        &padded
    } else {
        m
    };
    let svd = svd(work);
    let smax = svd.singular_values.iter().cloned().fold(scale.max(0.0), f64::max);
    let null: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= tol * smax)
        .collect();
    let basis = CMatrix::from_fn(n, null.len(), |i, j| svd.v[(i, null[j])]);
    let residual = if null.is_empty() { 0.0 } else { op_norm(&(m * &basis)) };
    Ok(Subspace {
        ambient_dim: n,
        basis,
        tol,
        residual,
    })
}

/// Floor for the rank tolerance of a subspace sum; below it, round-off in
/// nominally identical parts would masquerade as extra dimensions.
const SUM_TOL_FLOOR: f64 = 1e-10;

/// Orthonormal basis of `parts[0] + … + parts[k-1]` (not necessarily direct).
pub fn subspace_sum(parts: &[Subspace]) -> Result<Subspace> {
    let Some(first) = parts.first() else {
        return Err(Error::InvalidInput("subspace sum of an empty list".into()));
    };
    let n = first.ambient_dim;
    if let Some(bad) = parts.iter().find(|p| p.ambient_dim != n) {
        return Err(Error::InvalidInput(format!(
            "ambient dimension mismatch: {} vs {n}",
            bad.ambient_dim
        )));
    }
    let total: usize = parts.iter().map(Subspace::dim).sum();
    let mut stacked = CMatrix::zeros(n, total);
    let mut col = 0;
    for p in parts {
        stacked.columns_mut(col, p.dim()).copy_from(&p.basis);
        col += p.dim();
    }
    let tol = parts.iter().map(|p| p.tol).fold(SUM_TOL_FLOOR, f64::max);
    Ok(Subspace::span(&stacked, tol))
}

/// Projection distance of `x` from `s`; `x = 0` is always a member.
pub fn subspace_membership(s: &Subspace, x: &CVector, tol: f64) -> Result<(bool, f64)> {
    if x.len() != s.ambient_dim {
        return Err(Error::InvalidInput(format!(
            "vector length {} does not match ambient dimension {}",
            x.len(),
            s.ambient_dim
        )));
    }
    let residual = (x - s.project(x)).norm();
    Ok((residual <= tol * x.norm(), residual))
}

/// One group of numerically coincident eigenvalues.
#[derive(Clone, Debug, Serialize)]
pub struct EigenCluster {
    /// Mean of the member eigenvalues.
    #[serde(serialize_with = "ser_complex")]
    pub value: C64,
    pub algebraic: usize,
    pub geometric: usize,
}

impl EigenCluster {
    pub fn defect(&self) -> usize {
        self.algebraic - self.geometric
    }

    pub fn is_semisimple(&self) -> bool {
        self.algebraic == self.geometric
    }
}

fn ser_complex<S: Serializer>(z: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub clusters: Vec<EigenCluster>,
    /// Raw eigenvalues in Schur order.
    #[serde(skip)]
    pub eigenvalues: Vec<C64>,
    /// `‖Q·T·Qᴴ − M‖` for the computed Schur form.
    pub residual: f64,
    /// Absolute clustering tolerance actually used.
    pub cluster_tol: f64,
}

impl SpectrumReport {
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        self.eigenvalues.iter().sum()
    }
}

/// Unitary `G = [[c, s], [−s̄, c]]` with `G·[a, b]ᵀ = [r, 0]ᵀ`.
fn givens(a: C64, b: C64) -> (f64, C64) {
    let (na, nb) = (a.norm(), b.norm());
    if nb == 0.0 {
        return (1.0, c(0.0, 0.0));
    }
    if na == 0.0 {
        return (0.0, c(1.0, 0.0));
    }
    let r = na.hypot(nb);
    (na / r, (a / na) * b.conj() / r)
}

/// Rows `k, k+1` ← `G·rows`, for columns `cols`.
fn rotate_rows(h: &mut CMatrix, k: usize, (cs, sn): (f64, C64), cols: std::ops::Range<usize>) {
    for j in cols {
        let (x, y) = (h[(k, j)], h[(k + 1, j)]);
        h[(k, j)] = x * cs + sn * y;
        h[(k + 1, j)] = -sn.conj() * x + y * cs;
    }
}

/// Columns `k, k+1` ← `cols·Gᴴ`, for rows `rows`.
fn rotate_cols(h: &mut CMatrix, k: usize, (cs, sn): (f64, C64), rows: std::ops::Range<usize>) {
    for i in rows {
        let (x, y) = (h[(i, k)], h[(i, k + 1)]);
        h[(i, k)] = x * cs + y * sn.conj();
        h[(i, k + 1)] = -x * sn + y * cs;
    }
}

/// Eigenvalue of `[[a, b], [c, d]]` closest to `d`.
fn wilkinson_shift(a: C64, b: C64, cc: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * cc).sqrt();
    let (m1, m2) = ((a + d) * 0.5 + disc, (a + d) * 0.5 - disc);
    if (m1 - d).norm() <= (m2 - d).norm() {
        m1
    } else {
        m2
    }
}

/// Complex Schur form `M = Q·T·Qᴴ`, or a numerical-failure error.
///
/// Hessenberg reduction followed by single-shift QR sweeps with Wilkinson
/// shifts and an exceptional shift after ten sweeps without deflation.
pub fn schur(m: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((CMatrix::zeros(0, 0), CMatrix::zeros(0, 0)));
    }
    let (mut q, mut h) = Hessenberg::new(m.clone()).unpack();
    for j in 0..n {
        for i in (j + 2)..n {
            h[(i, j)] = c(0.0, 0.0);
        }
    }
    let scale = h.norm().max(f64::MIN_POSITIVE);
    let max_iter = 100 * n;
    let (mut total, mut stalled) = (0usize, 0usize);
    let mut hi = n - 1;
    while hi > 0 {
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let local = h[(lo, lo)].norm() + h[(lo - 1, lo - 1)].norm();
            let local = if local == 0.0 { scale } else { local };
            if sub <= f64::EPSILON * local {
                h[(lo, lo - 1)] = c(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            stalled = 0;
            continue;
        }
        total += 1;
        stalled += 1;
        if total > max_iter {
            return Err(Error::NumericalFailure(format!(
                "Schur iteration did not converge within {max_iter} sweeps on a {n}x{n} matrix"
            )));
        }
        let shift = if stalled % 10 == 0 {
            h[(hi, hi)] + h[(hi, hi - 1)].norm() * 0.75
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        // implicit shifted QR sweep on rows/columns lo..=hi
        let mut rot = givens(h[(lo, lo)] - shift, h[(lo + 1, lo)]);
        for k in lo..hi {
            if k > lo {
                rot = givens(h[(k, k - 1)], h[(k + 1, k - 1)]);
            }
            let first = if k > lo { k - 1 } else { lo };
            rotate_rows(&mut h, k, rot, first..n);
            rotate_cols(&mut h, k, rot, 0..(k + 3).min(hi + 1));
            rotate_cols(&mut q, k, rot, 0..n);
            if k > lo {
                h[(k + 1, k - 1)] = c(0.0, 0.0);
            }
        }
    }
    for j in 0..n {
        for i in (j + 1)..n {
            h[(i, j)] = c(0.0, 0.0);
        }
    }
    Ok((q, h))
}

/// Eigenvalues with multiplicities, clustered at `1e-8·‖M‖`.
pub fn spectrum(m: &Matrix) -> Result<SpectrumReport> {
    spectrum_with_tol(m, DEFAULT_CLUSTER_TOL * m.norm())
}

/// Eigenvalues clustered by single linkage at the absolute tolerance
/// `cluster_tol`.
pub fn spectrum_with_tol(m: &Matrix, cluster_tol: f64) -> Result<SpectrumReport> {
    let n = m.dim();
    let (q, t) = schur(m)?;
    let eigenvalues: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    let residual = op_norm(&(&q * &t * q.adjoint() - m.as_mat()));

    // single-linkage union-find
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut k = i;
        while p[k] != r {
            let next = p[k];
            p[k] = r;
            k = next;
        }
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (eigenvalues[i] - eigenvalues[j]).norm() <= cluster_tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b.max(a)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<(usize, Vec<C64>)> = Vec::new();
    for (i, &value) in eigenvalues.iter().enumerate() {
        let root = find(&mut parent, i);
        match groups.iter_mut().find(|(r, _)| *r == root) {
            Some((_, members)) => members.push(value),
            None => groups.push((root, vec![value])),
        }
    }

    let norm = m.norm();
    let mut clusters = Vec::with_capacity(groups.len());
    for (_, members) in groups {
        let algebraic = members.len();
        let value = members.iter().sum::<C64>() / algebraic as f64;
        let shifted = m.shifted(value);
        let sv = singular_values(&shifted);
        let thresh = GEOMETRIC_RANK_TOL * norm.max(value.norm());
        let geometric = sv.iter().filter(|&&s| s <= thresh).count().clamp(1, algebraic);
        clusters.push(EigenCluster {
            value,
            algebraic,
            geometric,
        });
    }
    clusters.sort_by(|a, b| {
        b.value
            .norm()
            .total_cmp(&a.value.norm())
            .then(a.value.arg().total_cmp(&b.value.arg()))
    });

    Ok(SpectrumReport {
        clusters,
        eigenvalues,
        residual,
        cluster_tol,
    })
}

/// `exp(t·A)` by scaling and squaring with a Padé approximant.
pub fn matrix_exp(a: &Matrix, t: f64) -> Result<Matrix> {
    if !t.is_finite() {
        return Err(Error::InvalidInput(format!("time must be finite, got {t}")));
    }
    let scaled = a.as_mat() * c(t, 0.0);
    let norm1 = scaled
        .column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    if norm1 > EXP_SCALE_LIMIT {
        return Err(Error::ScaleLimit { norm: norm1 });
    }
    let e = scaled.exp();
    if !is_finite(&e) {
        return Err(Error::ScaleLimit { norm: norm1 });
    }
    Ok(Matrix(e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn e(n: usize, i: usize) -> CVector {
        let mut v = CVector::zeros(n);
        v[i] = c(1.0, 0.0);
        v
    }

    #[test]
    fn kernel_of_zero_and_identity() {
        let k = kernel_basis(&Matrix::zeros(3), default_rank_tol(3)).unwrap();
        assert_eq!(k.dim(), 3);
        let k = kernel_basis(&Matrix::identity(3), default_rank_tol(3)).unwrap();
        assert_eq!(k.dim(), 0);
    }

    #[test]
    fn kernel_of_diagonal() {
        let m = Matrix::diag(&[c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]).unwrap();
        let k = kernel_basis(&m, default_rank_tol(3)).unwrap();
        assert_eq!(k.dim(), 1);
        let (member, res) = subspace_membership(&k, &e(3, 0), 1e-12).unwrap();
        assert!(member && res < 1e-15);
    }

    #[test]
    fn kernel_rejects_non_finite() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = c(f64::NAN, 0.0);
        assert!(matches!(kernel_basis(&m, 0.0), Err(Error::InvalidInput(_))));
        assert!(Matrix::new(m).is_err());
    }

    #[test]
    fn sums_of_coordinate_lines() {
        let l1 = Subspace::span(&CMatrix::from_column_slice(3, 1, e(3, 0).as_slice()), 1e-12);
        let l2 = Subspace::span(&CMatrix::from_column_slice(3, 1, e(3, 1).as_slice()), 1e-12);
        assert_eq!(subspace_sum(&[l1.clone(), l2]).unwrap().dim(), 2);
        assert_eq!(subspace_sum(&[l1.clone(), l1]).unwrap().dim(), 1);

        let s = 1.0 / 2f64.sqrt();
        let a = Subspace::span(&CMatrix::from_column_slice(2, 1, &[c(s, 0.0), c(s, 0.0)]), 1e-12);
        let b = Subspace::span(&CMatrix::from_column_slice(2, 1, &[c(s, 0.0), c(-s, 0.0)]), 1e-12);
        let sum = subspace_sum(&[a, b]).unwrap();
        assert_eq!(sum.dim(), 2);
        assert!(sum.distance(&Subspace::full(2)) < 1e-14);
    }

    #[test]
    fn sum_rejects_mismatched_dims() {
        let err = subspace_sum(&[Subspace::full(2), Subspace::full(3)]);
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn membership_residuals() {
        let s = Subspace::span(&CMatrix::from_column_slice(2, 1, &[c(1.0, 0.0), c(0.0, 0.0)]), 0.0);
        let (m, r) = subspace_membership(&s, &e(2, 1), 1e-9).unwrap();
        assert!(!m);
        assert!((r - 1.0).abs() < 1e-15);
        let h = 1.0 / 2f64.sqrt();
        let x = CVector::from_column_slice(&[c(h, 0.0), c(h, 0.0)]);
        let (m, r) = subspace_membership(&s, &x, 1e-9).unwrap();
        assert!(!m);
        assert!((r - 0.5f64.sqrt()).abs() < 1e-15);
        let (m, r) = subspace_membership(&s, &CVector::zeros(2), 0.0).unwrap();
        assert!(m && r == 0.0);
        assert!(subspace_membership(&s, &CVector::zeros(3), 0.0).is_err());
    }

    #[test]
    fn spectrum_of_diagonal_and_jordan() {
        let d = Matrix::diag(&[c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0)]).unwrap();
        let s = spectrum(&d).unwrap();
        assert_eq!(s.clusters.len(), 3);
        assert!(s.clusters.iter().all(|k| k.algebraic == 1 && k.geometric == 1));
        for target in [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0)] {
            assert!(s.clusters.iter().any(|k| (k.value - target).norm() < 1e-14));
        }

        let j = Matrix::from_real_rows(2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        let s = spectrum(&j).unwrap();
        assert_eq!(s.clusters.len(), 1);
        assert_eq!((s.clusters[0].algebraic, s.clusters[0].geometric), (2, 1));
    }

    #[test]
    fn spectrum_of_golden_companion() {
        // z^2 - z - 1; roots (1 ± √5)/2
        let m = Matrix::from_real_rows(2, &[0.0, 1.0, 1.0, 1.0]).unwrap();
        let s = spectrum(&m).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let psi = (1.0 - 5f64.sqrt()) / 2.0;
        for r in [phi, psi] {
            assert!(s.eigenvalues.iter().any(|z| (z - c(r, 0.0)).norm() < 1e-12));
        }
        assert!((phi - 1.6180).abs() < 1e-4 && (psi + 0.6180).abs() < 1e-4);
    }

    #[test]
    fn exp_closed_forms() {
        let z = matrix_exp(&Matrix::zeros(3), 7.5).unwrap();
        assert_eq!(z.as_mat(), &CMatrix::identity(3, 3));

        let a = Matrix::diag(&[c(0.0, 2.0 * PI)]).unwrap();
        let e1 = matrix_exp(&a, 1.0).unwrap();
        assert!((e1[(0, 0)] - c(1.0, 0.0)).norm() < 1e-12);

        let rot = Matrix::from_real_rows(2, &[0.0, 1.0, -1.0, 0.0]).unwrap();
        let r = matrix_exp(&rot, PI / 2.0).unwrap();
        // [[cos t, sin t], [-sin t, cos t]] at t = π/2
        let expected = Matrix::from_real_rows(2, &[0.0, 1.0, -1.0, 0.0]).unwrap();
        assert!(op_norm(&(r.as_mat() - expected.as_mat())) < 1e-12);
    }

    #[test]
    fn exp_rejects_bad_time_and_huge_scale() {
        let a = Matrix::identity(2);
        assert!(matches!(matrix_exp(&a, f64::NAN), Err(Error::InvalidInput(_))));
        assert!(matches!(matrix_exp(&a, 1e13), Err(Error::ScaleLimit { .. })));
        assert!(matches!(matrix_exp(&a, 1e5), Err(Error::ScaleLimit { .. })));
    }

    #[test]
    fn matrix_json_round_trip() {
        let m = Matrix::from_rows(2, &[c(1.0, 0.5), c(-2.0, 0.0), c(0.25, -1.0), c(3.0, 1e-300)]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        let back: Matrix = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
        let bad = r#"{"dim":2,"re":[[1,2]],"im":[]}"#;
        assert!(serde_json::from_str::<Matrix>(bad).is_err());
    }
}
