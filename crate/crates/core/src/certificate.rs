//! Auditable decomposition certificates.
//!
//! A certificate lists every defect that decides acceptance together with
//! the tolerance used and a digest of the inputs. [`verify_certificate`]
//! recomputes all of it from the inputs and the emitted components, so a
//! certificate never has to be trusted.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::decomp::{
    decompose_oracle, decompose_vector, difference_defect, DecompositionMethod, DecompositionResult, OperatorFamily,
};
use crate::ergodic::{mean_ergodic_projection, MeanMethod};
use crate::error::{Error, Result};
use crate::grid::{
    continuity_defect, decompose_grid_function, grid_difference_defect, grid_invariance_defects, GridMean,
};
use crate::io::{input_digest, Payload, ProblemFile, ProblemKind, VectorJson};
use crate::linalg::{c, CMatrix, CVector, Matrix};
use crate::onepar::{semigroup_decompose, SemigroupSpec};
use crate::periods::reduce_periods;

pub const TOOL_NAME: &str = "perdec";

/// Recomputed defects must match the certificate to this (absolute, scaled
/// by `max(1, ‖x‖)`) accuracy.
pub const VERIFY_TOL: f64 = 1e-12;

/// Invariant means: exact (algebraic projections, orbit averages) or Cesàro
/// windows of length `N`. Parses from `exact` or `cesaro:N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeanChoice {
    Exact,
    Cesaro { window: usize },
}

impl FromStr for MeanChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "exact" {
            return Ok(MeanChoice::Exact);
        }
        let bad = || Error::InvalidInput(format!("mean must be `exact` or `cesaro:N`, got `{s}`"));
        let window: usize = s.strip_prefix("cesaro:").ok_or_else(bad)?.parse().map_err(|_| bad())?;
        if window == 0 {
            return Err(bad());
        }
        Ok(MeanChoice::Cesaro { window })
    }
}

impl fmt::Display for MeanChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeanChoice::Exact => write!(f, "exact"),
            MeanChoice::Cesaro { window } => write!(f, "cesaro:{window}"),
        }
    }
}

impl MeanChoice {
    pub fn operator_method(self) -> MeanMethod {
        match self {
            MeanChoice::Exact => MeanMethod::Algebraic,
            MeanChoice::Cesaro { window } => MeanMethod::cesaro(window),
        }
    }

    pub fn grid_mean(self) -> GridMean {
        match self {
            MeanChoice::Exact => GridMean::Exact,
            MeanChoice::Cesaro { window } => GridMean::Cesaro { window },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    pub tol: f64,
    pub mean: MeanChoice,
    /// Least-squares oracle instead of inclusion–exclusion (operator families only).
    pub oracle: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            tol: crate::decomp::DEFAULT_TOL,
            mean: MeanChoice::Exact,
            oracle: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Defects {
    /// Difference-equation defect of the input.
    pub difference: f64,
    pub sum_residual: Option<f64>,
    pub invariance: Vec<f64>,
    pub commutation: Option<f64>,
    pub projection_idempotency: Vec<f64>,
    pub projection_zero_element: Vec<f64>,
    pub projection_product: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub tool: String,
    pub version: String,
    pub kind: ProblemKind,
    pub method: DecompositionMethod,
    pub mean: MeanChoice,
    pub accepted: bool,
    pub tol: f64,
    pub input_norm: f64,
    pub defects: Defects,
    pub input_digest: String,
}

/// What `--json-out` writes: the certificate, the components it speaks
/// about, and the full (informational) result.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertifiedOutput {
    pub certificate: Certificate,
    pub components: Vec<VectorJson>,
    #[serde(default)]
    pub details: Value,
}

struct Measured {
    defects: Defects,
    accepted: bool,
    input_norm: f64,
}

fn require_x(x: Option<&CVector>) -> Result<&CVector> {
    x.ok_or_else(|| Error::InvalidInput("this problem kind needs an input vector".into()))
}

fn sum_residual(x: &CVector, components: &[CVector]) -> f64 {
    let total = components.iter().fold(CVector::zeros(x.len()), |acc, v| acc + v);
    (x - total).norm()
}

fn check_components(components: &[CVector], count: usize, len: usize) -> Result<()> {
    if components.len() != count || components.iter().any(|v| v.len() != len) {
        return Err(Error::InvalidInput(format!(
            "expected {count} components of length {len}, got {}",
            components.len()
        )));
    }
    Ok(())
}

fn accept(diff_ok: bool, bound: f64, sum: Option<f64>, invariance: &[f64]) -> bool {
    diff_ok && sum.is_some_and(|s| s <= bound) && invariance.iter().all(|&d| d <= bound)
}

/// Operator-family defects; also used for the reduced semigroup family.
#[allow(clippy::too_many_arguments)]
fn measure_family(
    family: &OperatorFamily,
    x: &CVector,
    components: Option<&[CVector]>,
    method: DecompositionMethod,
    mean: MeanChoice,
    difference: f64,
    commutation: f64,
    diff_ok: bool,
    tol: f64,
) -> Result<Measured> {
    let input_norm = x.norm();
    let bound = tol * input_norm;
    let mut defects = Defects {
        difference,
        sum_residual: None,
        invariance: Vec::new(),
        commutation: Some(commutation),
        projection_idempotency: Vec::new(),
        projection_zero_element: Vec::new(),
        projection_product: None,
    };
    if let Some(comps) = components {
        check_components(comps, family.len(), family.dim())?;
        defects.sum_residual = Some(sum_residual(x, comps));
        defects.invariance = family
            .ops()
            .iter()
            .zip(comps)
            .map(|(t, xj)| (t.as_mat() * xj - xj).norm())
            .collect();
        if method == DecompositionMethod::InclusionExclusion {
            let mut projections: Vec<CMatrix> = Vec::new();
            for t in family.ops() {
                let rep = mean_ergodic_projection(t, mean.operator_method())?;
                defects.projection_idempotency.push(rep.idempotency_defect);
                defects.projection_zero_element.push(rep.zero_element_defect);
                projections.push(rep.projection.into_inner());
            }
            let mut product = x.clone();
            for p in projections.iter().rev() {
                product = p * &product - &product;
            }
            defects.projection_product = Some(product.norm());
        }
    }
    let accepted = accept(diff_ok, bound, defects.sum_residual, &defects.invariance);
    Ok(Measured {
        defects,
        accepted,
        input_norm,
    })
}

fn measure(
    problem: &ProblemFile,
    x: Option<&CVector>,
    components: Option<&[CVector]>,
    method: DecompositionMethod,
    mean: MeanChoice,
    tol: f64,
) -> Result<Measured> {
    match &problem.payload {
        Payload::OperatorFamily(p) => {
            let family = OperatorFamily::new(p.ops.clone())?;
            let x = require_x(x)?;
            let difference = difference_defect(&family, x)?;
            let diff_ok = difference <= tol * x.norm();
            let comm = family.commutation_defect;
            measure_family(&family, x, components, method, mean, difference, comm, diff_ok, tol)
        }
        Payload::GridFunction(g) => {
            let f = g.to_grid()?;
            let fx = f.to_vector();
            let input_norm = fx.norm();
            let bound = tol * input_norm;
            let difference = grid_difference_defect(&f);
            let mut defects = Defects {
                difference,
                sum_residual: None,
                invariance: Vec::new(),
                commutation: None,
                projection_idempotency: Vec::new(),
                projection_zero_element: Vec::new(),
                projection_product: None,
            };
            if let Some(comps) = components {
                check_components(comps, f.shifts().len(), f.order())?;
                defects.sum_residual = Some(sum_residual(&fx, comps));
                defects.invariance = grid_invariance_defects(f.shifts(), comps);
            }
            let accepted = accept(difference <= tol, bound, defects.sum_residual, &defects.invariance);
            Ok(Measured {
                defects,
                accepted,
                input_norm,
            })
        }
        Payload::Semigroup(s) => {
            let x = require_x(x)?;
            if s.times.is_empty() {
                return Err(Error::InvalidInput("semigroup payload needs at least one time".into()));
            }
            let sg = SemigroupSpec::new(s.generator.clone(), s.unit_table()?)?;
            let originals = s.times.iter().map(|t| sg.at_period(t)).collect::<Result<Vec<_>>>()?;
            let original = OperatorFamily::new(originals)?;
            let difference = difference_defect(&original, x)?;
            let diff_ok = difference <= tol * x.norm();
            let plan = reduce_periods(&s.times)?;
            let reps = plan
                .classes
                .iter()
                .map(|k| sg.at_period(&k.common))
                .collect::<Result<Vec<Matrix>>>()?;
            let reduced = OperatorFamily::new(reps)?;
            let comm = original.commutation_defect;
            measure_family(&reduced, x, components, method, mean, difference, comm, diff_ok, tol)
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

/// Runs the decomposition the problem asks for and certifies it.
///
/// A failed difference-equation precondition yields a rejected certificate
/// without components; other failures are returned as errors.
pub fn run_problem(problem: &ProblemFile, x: Option<&CVector>, opts: &RunOptions) -> Result<CertifiedOutput> {
    let tol = opts.tol;
    let (components, method, mean, details): (Option<Vec<CVector>>, _, _, Value) = match &problem.payload {
        Payload::OperatorFamily(p) => {
            let family = OperatorFamily::new(p.ops.clone())?;
            let xv = require_x(x)?;
            let outcome: Result<DecompositionResult> = if opts.oracle {
                let defect = difference_defect(&family, xv)?;
                let bound = tol * xv.norm();
                if defect <= bound {
                    decompose_oracle(&family, xv, tol)
                } else {
                    Err(Error::PreconditionViolation {
                        what: "difference defect",
                        defect,
                        bound,
                    })
                }
            } else {
                decompose_vector(&family, xv, tol, opts.mean.operator_method())
            };
            let method = if opts.oracle {
                DecompositionMethod::Oracle
            } else {
                DecompositionMethod::InclusionExclusion
            };
            match outcome {
                Ok(r) => (Some(r.components.clone()), method, opts.mean, to_value(&r)),
                Err(Error::PreconditionViolation { .. }) => (None, method, opts.mean, Value::Null),
                Err(e) => return Err(e),
            }
        }
        Payload::GridFunction(g) => {
            if opts.oracle {
                return Err(Error::InvalidInput(
                    "the oracle applies to operator families only".into(),
                ));
            }
            let f = g.to_grid()?;
            match decompose_grid_function(&f, tol, opts.mean.grid_mean()) {
                Ok(r) => {
                    let details = serde_json::json!({
                        "result": to_value(&r),
                        "continuity_ratio_delta1": continuity_defect(&f, &r, 1),
                    });
                    (
                        Some(r.components),
                        DecompositionMethod::InclusionExclusion,
                        opts.mean,
                        details,
                    )
                }
                Err(Error::PreconditionViolation { .. }) => {
                    (None, DecompositionMethod::InclusionExclusion, opts.mean, Value::Null)
                }
                Err(e) => return Err(e),
            }
        }
        Payload::Semigroup(s) => {
            if opts.oracle || opts.mean != MeanChoice::Exact {
                return Err(Error::InvalidInput(
                    "semigroup decompositions use exact projections and no oracle".into(),
                ));
            }
            let xv = require_x(x)?;
            let sg = SemigroupSpec::new(s.generator.clone(), s.unit_table()?)?;
            match semigroup_decompose(&sg, &s.times, xv, tol) {
                Ok(out) => (
                    Some(out.result.components.clone()),
                    DecompositionMethod::InclusionExclusion,
                    MeanChoice::Exact,
                    to_value(&out),
                ),
                Err(Error::PreconditionViolation { .. }) => (
                    None,
                    DecompositionMethod::InclusionExclusion,
                    MeanChoice::Exact,
                    Value::Null,
                ),
                Err(e) => return Err(e),
            }
        }
    };

    let measured = measure(problem, x, components.as_deref(), method, mean, tol)?;
    let certificate = Certificate {
        tool: TOOL_NAME.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        kind: problem.kind(),
        method,
        mean,
        accepted: measured.accepted,
        tol,
        input_norm: measured.input_norm,
        defects: measured.defects,
        input_digest: input_digest(&problem.raw, x),
    };
    Ok(CertifiedOutput {
        certificate,
        components: components.iter().flatten().map(VectorJson::from).collect(),
        details,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Verification {
    pub verified: bool,
    pub mismatches: Vec<String>,
}

/// Recomputes every defect from the inputs and the emitted components.
pub fn verify_certificate(
    output: &CertifiedOutput,
    problem: &ProblemFile,
    x: Option<&CVector>,
) -> Result<Verification> {
    let cert = &output.certificate;
    if input_digest(&problem.raw, x) != cert.input_digest {
        return Err(Error::Tamper);
    }
    let mut mismatches = Vec::new();
    if cert.kind != problem.kind() {
        mismatches.push(format!("kind {:?} does not match the problem", cert.kind));
    }
    let components = output
        .components
        .iter()
        .map(VectorJson::to_vector)
        .collect::<Result<Vec<_>>>()?;
    let components = if components.is_empty() {
        None
    } else {
        Some(components.as_slice())
    };
    let measured = match measure(problem, x, components, cert.method, cert.mean, cert.tol) {
        Ok(m) => m,
        Err(e) => {
            return Ok(Verification {
                verified: false,
                mismatches: vec![format!("recomputation failed: {e}")],
            })
        }
    };
    let slack = VERIFY_TOL * measured.input_norm.max(1.0);
    let mut close = |name: &str, reported: f64, actual: f64| {
        if !((reported - actual).abs() <= slack) {
            mismatches.push(format!("{name}: certificate {reported:e}, recomputed {actual:e}"));
        }
    };
    close("input_norm", cert.input_norm, measured.input_norm);
    let (r, m) = (&cert.defects, &measured.defects);
    close("difference", r.difference, m.difference);
    let opt = |name: &str, reported: Option<f64>, actual: Option<f64>, out: &mut Vec<String>| match (reported, actual) {
        (Some(a), Some(b)) if (a - b).abs() <= slack => {}
        (None, None) => {}
        (a, b) => out.push(format!("{name}: certificate {a:?}, recomputed {b:?}")),
    };
    opt("sum_residual", r.sum_residual, m.sum_residual, &mut mismatches);
    opt("commutation", r.commutation, m.commutation, &mut mismatches);
    opt(
        "projection_product",
        r.projection_product,
        m.projection_product,
        &mut mismatches,
    );
    let lists = [
        ("invariance", &r.invariance, &m.invariance),
        (
            "projection_idempotency",
            &r.projection_idempotency,
            &m.projection_idempotency,
        ),
        (
            "projection_zero_element",
            &r.projection_zero_element,
            &m.projection_zero_element,
        ),
    ];
    for (name, a, b) in lists {
        if a.len() != b.len() {
            mismatches.push(format!(
                "{name}: certificate lists {} values, recomputed {}",
                a.len(),
                b.len()
            ));
            continue;
        }
        for (j, (u, v)) in a.iter().zip(b.iter()).enumerate() {
            if !((u - v).abs() <= slack) {
                mismatches.push(format!("{name}[{j}]: certificate {u:e}, recomputed {v:e}"));
            }
        }
    }
    if cert.accepted != measured.accepted {
        mismatches.push(format!(
            "accepted = {} but the recomputed defects give {}",
            cert.accepted, measured.accepted
        ));
    }
    Ok(Verification {
        verified: mismatches.is_empty(),
        mismatches,
    })
}

/// Zero vector of the given length; convenience for tests and tampering drills.
pub fn zero_component(len: usize) -> VectorJson {
    VectorJson::from(&CVector::from_element(len, c(0.0, 0.0)))
}
