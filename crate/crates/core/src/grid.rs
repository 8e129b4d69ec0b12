//! Functions on the cyclic group `ℤ_N` under commuting shift actions.
//!
//! The shift by `a` acts through its Koopman operator `(S_a f)(x) = f(x+a)`.
//! The uniform average over the finite subgroup `⟨a⟩ ⊆ ℤ_N` is an exact
//! invariant mean for that action, so the inclusion–exclusion components are
//! computed without approximation.

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::decomp::{inclusion_exclusion, DecompositionMethod, DecompositionResult};
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, CVector, C64};

/// Samples of a function `ℤ_N → ℂ` with shift generators `a₁…aₙ`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    values: Vec<C64>,
    shifts: Vec<usize>,
}

impl GridFunction {
    /// Shifts are reduced mod `N = values.len()`; negative shifts are allowed.
    pub fn new(values: Vec<C64>, shifts: &[i64]) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::InvalidInput("grid must have at least one point".into()));
        }
        if shifts.is_empty() {
            return Err(Error::InvalidInput("at least one shift is required".into()));
        }
        if shifts.len() > 16 {
            return Err(Error::InvalidInput("at most 16 shifts are supported".into()));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("grid values must be finite".into()));
        }
        let shifts = shifts.iter().map(|&a| a.rem_euclid(n as i64) as usize).collect();
        Ok(GridFunction { values, shifts })
    }

    pub fn from_real(values: &[f64], shifts: &[i64]) -> Result<Self> {
        GridFunction::new(values.iter().map(|&x| c(x, 0.0)).collect(), shifts)
    }

    /// Group order `N`.
    pub fn order(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn shifts(&self) -> &[usize] {
        &self.shifts
    }

    pub fn to_vector(&self) -> CVector {
        CVector::from_column_slice(&self.values)
    }
}

/// `x ↦ f(x + a)` on `ℤ_N`.
pub fn shift(values: &[C64], a: usize) -> Vec<C64> {
    let n = values.len();
    (0..n).map(|x| values[(x + a) % n]).collect()
}

/// Permutation matrix of the Koopman shift: row `x` picks entry `x + a`.
pub fn shift_matrix(n: usize, a: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    for x in 0..n {
        m[(x, (x + a) % n)] = c(1.0, 0.0);
    }
    m
}

/// `gcd(a, N)`: the subgroup `⟨a⟩` is the set of multiples of this step.
pub fn subgroup_step(n: usize, a: usize) -> usize {
    if a.is_multiple_of(n) {
        n
    } else {
        a.gcd(&n)
    }
}

/// Uniform average over the orbit `x + ⟨a⟩`.
pub fn orbit_average(values: &[C64], a: usize) -> Vec<C64> {
    let n = values.len();
    let step = subgroup_step(n, a);
    let size = (n / step) as f64;
    let mut class_mean = vec![c(0.0, 0.0); step];
    for (x, v) in values.iter().enumerate() {
        class_mean[x % step] += v;
    }
    for m in &mut class_mean {
        *m /= size;
    }
    (0..n).map(|x| class_mean[x % step]).collect()
}

/// Matrix form of [`orbit_average`].
pub fn orbit_average_matrix(n: usize, a: usize) -> CMatrix {
    let step = subgroup_step(n, a);
    let w = c(step as f64 / n as f64, 0.0);
    CMatrix::from_fn(n, n, |x, y| if x % step == y % step { w } else { c(0.0, 0.0) })
}

/// Windowed mean `(1/W)·Σ_{k<W} f(x + k·a)`; approximates the orbit
/// average with an error of order `1/W` unless `W` is a multiple of the
/// orbit length.
pub fn cesaro_shift_average(values: &[C64], a: usize, window: usize) -> Vec<C64> {
    let n = values.len();
    (0..n)
        .map(|x| {
            let s: C64 = (0..window).map(|k| values[(x + k * a) % n]).sum();
            s / window as f64
        })
        .collect()
}

/// Largest `N·Π|⟨aⱼ⟩|` for which the difference defect is computed by
/// exhaustive enumeration.
pub const GRID_EXHAUSTIVE_BUDGET: usize = 50_000_000;

fn subgroup_elements(n: usize, a: usize) -> Vec<usize> {
    let step = subgroup_step(n, a);
    (0..n / step).map(|k| k * step).collect()
}

/// `N·Π|⟨aⱼ⟩|`, saturating.
pub fn exhaustive_work(f: &GridFunction) -> usize {
    let n = f.order();
    f.shifts
        .iter()
        .fold(n, |w, &a| w.saturating_mul(n / subgroup_step(n, a)))
}

/// `max_{x, sⱼ ∈ ⟨aⱼ⟩} |Σ_ε (−1)^{|ε|} f(x + Σⱼ εⱼ sⱼ)|`, by exhaustive
/// enumeration of the shift tuples.
pub fn grid_difference_max(f: &GridFunction) -> f64 {
    let n = f.order();
    let subgroups: Vec<Vec<usize>> = f.shifts.iter().map(|&a| subgroup_elements(n, a)).collect();
    // iterated differences; the sign convention of the alternating sum only
    // flips the overall sign
    fn descend(g: &[C64], level: usize, subgroups: &[Vec<usize>], best: &mut f64) {
        if level == subgroups.len() {
            let m = g.iter().map(|z| z.norm()).fold(0.0, f64::max);
            *best = best.max(m);
            return;
        }
        let n = g.len();
        for &s in &subgroups[level] {
            let next: Vec<C64> = (0..n).map(|x| g[(x + s) % n] - g[x]).collect();
            descend(&next, level + 1, subgroups, best);
        }
    }
    let mut best = 0.0;
    descend(&f.values, 0, &subgroups, &mut best);
    best
}

/// `(‖r‖∞, 2ⁿ‖r‖∞)` with `r = Π(I − Pⱼ)f`. The exhaustive maximum lies in
/// this interval: `r` is the average of the tuple differences, and the tuple
/// differences of `f` and of `r` coincide.
pub fn grid_difference_bounds(f: &GridFunction) -> (f64, f64) {
    let mut r = f.values.clone();
    for &a in &f.shifts {
        let avg = orbit_average(&r, a);
        for (v, m) in r.iter_mut().zip(avg) {
            *v -= m;
        }
    }
    let norm = r.iter().map(|z| z.norm()).fold(0.0, f64::max);
    (norm, norm * 2f64.powi(f.shifts.len() as i32))
}

/// Difference-equation defect of `f`: the exhaustive maximum when its work
/// is within [`GRID_EXHAUSTIVE_BUDGET`], otherwise the upper bound of
/// [`grid_difference_bounds`]. Either way it vanishes iff the equation holds.
pub fn grid_difference_defect(f: &GridFunction) -> f64 {
    if exhaustive_work(f) <= GRID_EXHAUSTIVE_BUDGET {
        grid_difference_max(f)
    } else {
        grid_difference_bounds(f).1
    }
}

/// Which invariant means realise the averaging.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridMean {
    /// Exact uniform average over `⟨aⱼ⟩`.
    Exact,
    /// Windowed shift averages of the given length; approximate.
    Cesaro { window: usize },
}

/// Components `fⱼ`, each `aⱼ`-periodic, with `Σ fⱼ = f`.
pub fn decompose_grid_function(f: &GridFunction, tol: f64, mean: GridMean) -> Result<DecompositionResult> {
    let defect = grid_difference_defect(f);
    if !(defect <= tol) {
        return Err(Error::PreconditionViolation {
            what: "grid difference defect",
            defect,
            bound: tol,
        });
    }
    if let GridMean::Cesaro { window: 0 } = mean {
        return Err(Error::InvalidInput("Cesàro window must be positive".into()));
    }
    let shifts = f.shifts.clone();
    let x = f.to_vector();
    let components = inclusion_exclusion(shifts.len(), &x, |j, v| {
        let avg = match mean {
            GridMean::Exact => orbit_average(v.as_slice(), shifts[j]),
            GridMean::Cesaro { window } => cesaro_shift_average(v.as_slice(), shifts[j], window),
        };
        Ok(CVector::from_vec(avg))
    })?;
    let defects = grid_invariance_defects(&shifts, &components);
    Ok(DecompositionResult::assemble(
        &x,
        components,
        defects,
        DecompositionMethod::InclusionExclusion,
        tol,
        defect,
    ))
}

/// `‖S_{aⱼ}fⱼ − fⱼ‖` for each component.
pub fn grid_invariance_defects(shifts: &[usize], components: &[CVector]) -> Vec<f64> {
    shifts
        .iter()
        .zip(components)
        .map(|(&a, fj)| {
            let moved = shift(fj.as_slice(), a);
            moved
                .iter()
                .zip(fj.iter())
                .map(|(p, q)| (p - q).norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

/// `max_{cyclic dist(x,y) ≤ δ} |g(x) − g(y)|`.
pub fn modulus_of_continuity(values: &[C64], delta: usize) -> f64 {
    let n = values.len();
    let reach = delta.min(n / 2);
    let mut best: f64 = 0.0;
    for x in 0..n {
        for d in 1..=reach {
            best = best.max((values[x] - values[(x + d) % n]).norm());
        }
    }
    best
}

/// `maxⱼ ωⱼ(δ) / ω_f(δ)`, with `0/0 = 0`. Shifts are isometries for the
/// cyclic distance, so each averaged term has modulus at most `ω_f(δ)` and
/// the ratio never exceeds `2ⁿ`.
pub fn continuity_defect(f: &GridFunction, result: &DecompositionResult, delta: usize) -> f64 {
    let base = modulus_of_continuity(&f.values, delta);
    let worst = result
        .components
        .iter()
        .map(|fj| modulus_of_continuity(fj.as_slice(), delta))
        .fold(0.0, f64::max);
    if worst == 0.0 {
        0.0
    } else if base == 0.0 {
        f64::INFINITY
    } else {
        worst / base
    }
}
