//! Seeded random instances for tests, benchmarks and the acceptance suite.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::grid::GridFunction;
use crate::linalg::{c, CMatrix, CVector, Matrix, C64};

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut SampleRng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im)
}

pub fn gaussian_matrix(rng: &mut SampleRng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn random_vector(rng: &mut SampleRng, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| gaussian(rng))
}

/// Haar-distributed unitary (QR of a Gaussian matrix with phase correction).
pub fn random_unitary(rng: &mut SampleRng, n: usize) -> CMatrix {
    let qr = gaussian_matrix(rng, n, n).qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            let d = r[(i, i)];
            if d.norm() > 0.0 {
                d / d.norm()
            } else {
                c(1.0, 0.0)
            }
        } else {
            c(0.0, 0.0)
        }
    });
    q * phases
}

/// Point on the unit circle with `|1 − λ| ≥ gap`.
pub fn unimodular_away_from_one(rng: &mut SampleRng, gap: f64) -> C64 {
    // |1 − e^{iθ}| = 2 sin(θ/2)
    let theta_min = 2.0 * (gap / 2.0).min(1.0).asin();
    let theta = rng.random_range(theta_min..=(2.0 * PI - theta_min));
    C64::from_polar(1.0, theta)
}

/// Point in the open disk of radius `r`.
pub fn inside_disk(rng: &mut SampleRng, r: f64) -> C64 {
    C64::from_polar(r * rng.random::<f64>().sqrt(), rng.random_range(0.0..2.0 * PI))
}

/// Contracting eigenvalue and coupling for a Jordan-type block. Keeping
/// `|c − 1| ≥ 0.5` and `|d| ≤ 1` bounds the conditioning of `(J − I)^n`.
fn jordan_params(rng: &mut SampleRng) -> (C64, C64) {
    let d = C64::from_polar(rng.random_range(0.3..1.0), rng.random_range(0.0..2.0 * PI));
    (inside_disk(rng, 0.5), d)
}

/// `c·I + d·N` with `N` the nilpotent shift.
fn jordan_like(m: usize, lambda: C64, d: C64) -> CMatrix {
    CMatrix::from_fn(m, m, |i, j| {
        if i == j {
            lambda
        } else if j == i + 1 {
            d
        } else {
            c(0.0, 0.0)
        }
    })
}

fn block_diag(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (n, m) = (a.nrows(), b.nrows());
    let mut out = CMatrix::zeros(n + m, n + m);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((n, n), (m, m)).copy_from(b);
    out
}

fn conjugate(q: &CMatrix, core: &CMatrix) -> Matrix {
    Matrix::new(q * core * q.adjoint()).expect("finite square conjugate")
}

/// Power-bounded `Q·blockdiag(D, J)·Qᴴ`: `D` has exact ones and unimodular
/// entries at distance `≥ gap` from 1 or interior entries, `J` (possibly
/// empty) is a strictly contracting Jordan-type block.
pub fn random_power_bounded(rng: &mut SampleRng, n: usize, gap: f64) -> Matrix {
    let jordan = if n >= 3 && rng.random_bool(0.5) {
        rng.random_range(2..=n.min(4))
    } else {
        0
    };
    let r = n - jordan;
    let d: Vec<C64> = (0..r)
        .map(|_| match rng.random_range(0..3) {
            0 => c(1.0, 0.0),
            1 => unimodular_away_from_one(rng, gap),
            _ => inside_disk(rng, 0.9),
        })
        .collect();
    let (lambda, coupling) = jordan_params(rng);
    let core = block_diag(
        &CMatrix::from_diagonal(&CVector::from_vec(d)),
        &jordan_like(jordan, lambda, coupling),
    );
    conjugate(&random_unitary(rng, n), &core)
}

/// Random unitary with eigenvalues exactly 1 or at distance `≥ gap` from 1.
pub fn random_unitary_with_gap(rng: &mut SampleRng, n: usize, gap: f64) -> Matrix {
    let d: Vec<C64> = (0..n)
        .map(|_| {
            if rng.random_bool(0.3) {
                c(1.0, 0.0)
            } else {
                unimodular_away_from_one(rng, gap)
            }
        })
        .collect();
    conjugate(&random_unitary(rng, n), &CMatrix::from_diagonal(&CVector::from_vec(d)))
}

#[derive(Clone, Debug)]
pub struct CommutingSample {
    pub ops: Vec<Matrix>,
    /// Lies in the kernel of `(T₁−I)⋯(Tₙ−I)`.
    pub x: CVector,
}

/// Commuting power-bounded family `Tⱼ = Q·blockdiag(Dⱼ, cⱼI + dⱼN)·Qᴴ`.
///
/// Every diagonal direction is fixed by at least one operator, and `x` is a
/// random combination of those directions. With `jordan` a strictly
/// contracting block (invisible to `x`) is appended.
pub fn random_commuting_family(
    rng: &mut SampleRng,
    n_ops: usize,
    dim: usize,
    gap: f64,
    jordan: bool,
) -> CommutingSample {
    assert!(n_ops >= 1 && dim >= 1);
    let m = if jordan && dim >= 3 {
        rng.random_range(2..=(dim - 1).min(4))
    } else {
        0
    };
    let r = dim - m;
    let mut diags = vec![vec![c(0.0, 0.0); r]; n_ops];
    for i in 0..r {
        let owner = rng.random_range(0..n_ops);
        for (j, d) in diags.iter_mut().enumerate() {
            d[i] = if j == owner || rng.random_bool(0.2) {
                c(1.0, 0.0)
            } else if rng.random_bool(0.7) {
                unimodular_away_from_one(rng, gap)
            } else {
                inside_disk(rng, 0.9)
            };
        }
    }
    let q = random_unitary(rng, dim);
    let ops = diags
        .into_iter()
        .map(|d| {
            let (lambda, coupling) = jordan_params(rng);
            let block = jordan_like(m, lambda, coupling);
            conjugate(&q, &block_diag(&CMatrix::from_diagonal(&CVector::from_vec(d)), &block))
        })
        .collect();
    let mut coeff = CVector::zeros(dim);
    for i in 0..r {
        coeff[i] = gaussian(rng);
    }
    CommutingSample { ops, x: q * coeff }
}

fn well_conditioned(rng: &mut SampleRng, n: usize) -> CMatrix {
    let g = gaussian_matrix(rng, n, n);
    let norm = crate::linalg::op_norm(&g).max(f64::MIN_POSITIVE);
    CMatrix::identity(n, n) + g * c(0.4 / norm, 0.0)
}

/// Generator `S·diag(2πi kⱼ/α)·S⁻¹` with integer `kⱼ`, so `exp(αA) = I`.
pub fn random_periodic_generator(rng: &mut SampleRng, n: usize, alpha: f64) -> Matrix {
    let s = well_conditioned(rng, n);
    let s_inv = s.clone().try_inverse().expect("perturbed identity is invertible");
    let d = CVector::from_fn(n, |_, _| c(0.0, 2.0 * PI * rng.random_range(-4i32..=4) as f64 / alpha));
    Matrix::new(&s * CMatrix::from_diagonal(&d) * s_inv).expect("finite generator")
}

/// Diagonalizable generator with random spectrum in `[-2, 0.5] × [-8, 8]i`.
pub fn random_generator(rng: &mut SampleRng, n: usize) -> Matrix {
    let s = well_conditioned(rng, n);
    let s_inv = s.clone().try_inverse().expect("perturbed identity is invertible");
    let d = CVector::from_fn(n, |_, _| c(rng.random_range(-2.0..0.5), rng.random_range(-8.0..8.0)));
    Matrix::new(&s * CMatrix::from_diagonal(&d) * s_inv).expect("finite generator")
}

/// Sum of random real functions, the `j`-th invariant under shift `aⱼ`.
pub fn random_grid_sum(rng: &mut SampleRng, n: usize, shifts: &[i64]) -> (GridFunction, Vec<Vec<f64>>) {
    let parts: Vec<Vec<f64>> = shifts
        .iter()
        .map(|&a| {
            // invariant under a ⇔ constant on residue classes mod gcd(a, N)
            let p = num_integer::gcd(a.rem_euclid(n as i64) as usize, n);
            let base: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
            (0..n).map(|x| base[x % p]).collect()
        })
        .collect();
    let values: Vec<f64> = (0..n).map(|x| parts.iter().map(|g| g[x]).sum()).collect();
    (GridFunction::from_real(&values, shifts).expect("valid grid"), parts)
}

/// Shifts drawn uniformly from `1..=n`.
pub fn random_shifts(rng: &mut SampleRng, n: usize, count: usize) -> Vec<i64> {
    (0..count).map(|_| rng.random_range(1..=n as i64)).collect()
}

/// Uniform noise on `[-1, 1]`.
pub fn random_noise_grid(rng: &mut SampleRng, n: usize, shifts: &[i64]) -> GridFunction {
    let values: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    GridFunction::from_real(&values, shifts).expect("valid grid")
}
