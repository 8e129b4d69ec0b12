//! JSON problem files and payload schemas.
//!
//! Problem files are versioned envelopes around one payload kind. Parsing
//! reports the JSON path of the first schema violation.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::linalg::{c, CVector, Matrix, C64};
use crate::periods::{PeriodSpec, UnitTable};

pub const SCHEMA_VERSION: u32 = 1;

pub(crate) fn ser_complex_list<S: Serializer>(v: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
    v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
}

pub(crate) fn ser_vectors<S: Serializer>(v: &[CVector], s: S) -> std::result::Result<S::Ok, S::Error> {
    v.iter().map(VectorJson::from).collect::<Vec<_>>().serialize(s)
}

/// `{"re": [...], "im": [...]}`; a missing `im` means a real vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorJson {
    pub re: Vec<f64>,
    #[serde(default)]
    pub im: Vec<f64>,
}

impl From<&CVector> for VectorJson {
    fn from(v: &CVector) -> Self {
        VectorJson {
            re: v.iter().map(|z| z.re).collect(),
            im: v.iter().map(|z| z.im).collect(),
        }
    }
}

impl VectorJson {
    pub fn to_vector(&self) -> Result<CVector> {
        if !self.im.is_empty() && self.im.len() != self.re.len() {
            return Err(Error::InvalidInput(format!(
                "`im` has {} entries but `re` has {}",
                self.im.len(),
                self.re.len()
            )));
        }
        let v = CVector::from_iterator(
            self.re.len(),
            self.re
                .iter()
                .enumerate()
                .map(|(i, &r)| c(r, self.im.get(i).copied().unwrap_or(0.0))),
        );
        if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("vector has non-finite entries".into()));
        }
        Ok(v)
    }
}

/// `{"ops": [Matrix, ...]}`
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyPayload {
    pub ops: Vec<Matrix>,
}

/// `{"N": int, "values_re": [...], "values_im": [...], "shifts": [...]}`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFunctionJson {
    #[serde(rename = "N")]
    pub n: usize,
    pub values_re: Vec<f64>,
    #[serde(default)]
    pub values_im: Vec<f64>,
    pub shifts: Vec<i64>,
}

impl GridFunctionJson {
    pub fn to_grid(&self) -> Result<GridFunction> {
        if self.values_re.len() != self.n {
            return Err(Error::InvalidInput(format!(
                "`values_re` has {} entries but N = {}",
                self.values_re.len(),
                self.n
            )));
        }
        if !self.values_im.is_empty() && self.values_im.len() != self.n {
            return Err(Error::InvalidInput(format!(
                "`values_im` has {} entries but N = {}",
                self.values_im.len(),
                self.n
            )));
        }
        let values = (0..self.n)
            .map(|i| c(self.values_re[i], self.values_im.get(i).copied().unwrap_or(0.0)))
            .collect();
        GridFunction::new(values, &self.shifts)
    }
}

impl From<&GridFunction> for GridFunctionJson {
    fn from(f: &GridFunction) -> Self {
        GridFunctionJson {
            n: f.order(),
            values_re: f.values().iter().map(|z| z.re).collect(),
            values_im: f.values().iter().map(|z| z.im).collect(),
            shifts: f.shifts().iter().map(|&a| a as i64).collect(),
        }
    }
}

/// `{"A": Matrix, "units": {"sqrt2": 1.414…}, "times": [PeriodSpec, ...]}`
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemigroupPayload {
    #[serde(rename = "A")]
    pub generator: Matrix,
    #[serde(default)]
    pub units: std::collections::BTreeMap<String, f64>,
    #[serde(default)]
    pub times: Vec<PeriodSpec>,
}

impl SemigroupPayload {
    pub fn unit_table(&self) -> Result<UnitTable> {
        UnitTable::with(self.units.clone())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    OperatorFamily,
    GridFunction,
    Semigroup,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

#[derive(Clone, Debug)]
pub enum Payload {
    OperatorFamily(FamilyPayload),
    GridFunction(GridFunctionJson),
    Semigroup(SemigroupPayload),
}

#[derive(Clone, Debug)]
pub struct ProblemFile {
    pub schema_version: u32,
    pub payload: Payload,
    pub tolerances: ToleranceOverrides,
    /// The document as parsed, used for digests.
    pub raw: Value,
}

impl ProblemFile {
    pub fn kind(&self) -> ProblemKind {
        match self.payload {
            Payload::OperatorFamily(_) => ProblemKind::OperatorFamily,
            Payload::GridFunction(_) => ProblemKind::GridFunction,
            Payload::Semigroup(_) => ProblemKind::Semigroup,
        }
    }

    pub fn new(payload: Payload, tolerances: ToleranceOverrides) -> Result<Self> {
        let kind = match payload {
            Payload::OperatorFamily(_) => ProblemKind::OperatorFamily,
            Payload::GridFunction(_) => ProblemKind::GridFunction,
            Payload::Semigroup(_) => ProblemKind::Semigroup,
        };
        let body = match &payload {
            Payload::OperatorFamily(p) => serde_json::to_value(p),
            Payload::GridFunction(p) => serde_json::to_value(p),
            Payload::Semigroup(p) => serde_json::to_value(p),
        }
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
        let raw = serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "kind": kind,
            "payload": body,
            "tolerances": tolerances,
        });
        Ok(ProblemFile {
            schema_version: SCHEMA_VERSION,
            payload,
            tolerances,
            raw,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.raw).expect("JSON values always serialize")
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope {
    schema_version: u32,
    kind: ProblemKind,
    payload: Value,
    #[serde(default)]
    tolerances: ToleranceOverrides,
}

/// Deserializes `value`, prefixing errors with the JSON path of the fault.
pub fn from_value_at<T: DeserializeOwned>(value: &Value, prefix: &str) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let path = match (prefix.is_empty(), inner.as_str()) {
            (true, p) => p.to_string(),
            (false, ".") => prefix.to_string(),
            (false, p) => format!("{prefix}.{p}"),
        };
        Error::InvalidInput(format!("schema violation at `{path}`: {}", e.inner()))
    })
}

pub fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("malformed JSON: {e}")))
}

pub fn parse_problem(text: &str) -> Result<ProblemFile> {
    parse_problem_value(parse_json(text)?)
}

pub fn parse_problem_value(raw: Value) -> Result<ProblemFile> {
    let env: Envelope = from_value_at(&raw, "")?;
    if env.schema_version != SCHEMA_VERSION {
        return Err(Error::InvalidInput(format!(
            "schema violation at `schema_version`: unsupported version {} (expected {SCHEMA_VERSION})",
            env.schema_version
        )));
    }
    let payload = match env.kind {
        ProblemKind::OperatorFamily => Payload::OperatorFamily(from_value_at(&env.payload, "payload")?),
        ProblemKind::GridFunction => Payload::GridFunction(from_value_at(&env.payload, "payload")?),
        ProblemKind::Semigroup => Payload::Semigroup(from_value_at(&env.payload, "payload")?),
    };
    Ok(ProblemFile {
        schema_version: env.schema_version,
        payload,
        tolerances: env.tolerances,
        raw,
    })
}

/// Parses either a full problem envelope or a bare payload of `kind`. A
/// bare payload is wrapped in an envelope with no tolerance overrides.
pub fn parse_problem_as(text: &str, kind: ProblemKind) -> Result<ProblemFile> {
    let value = parse_json(text)?;
    if value.get("schema_version").is_some() {
        let p = parse_problem_value(value)?;
        if p.kind() != kind {
            return Err(Error::InvalidInput(format!(
                "schema violation at `kind`: expected {kind:?}, found {:?}",
                p.kind()
            )));
        }
        return Ok(p);
    }
    let payload = match kind {
        ProblemKind::OperatorFamily => Payload::OperatorFamily(from_value_at(&value, "")?),
        ProblemKind::GridFunction => Payload::GridFunction(from_value_at(&value, "")?),
        ProblemKind::Semigroup => Payload::Semigroup(from_value_at(&value, "")?),
    };
    let raw = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "payload": value,
        "tolerances": ToleranceOverrides::default(),
    });
    Ok(ProblemFile {
        schema_version: SCHEMA_VERSION,
        payload,
        tolerances: ToleranceOverrides::default(),
        raw,
    })
}

pub fn parse_vector(text: &str) -> Result<CVector> {
    let v: VectorJson = from_value_at(&parse_json(text)?, "")?;
    v.to_vector()
}

pub fn parse_periods(text: &str) -> Result<Vec<PeriodSpec>> {
    from_value_at(&parse_json(text)?, "")
}

/// SHA-256 over the canonical (sorted-key) serialization of the problem and
/// the optional input vector.
pub fn input_digest(problem: &Value, x: Option<&CVector>) -> String {
    let mut hasher = Sha256::new();
    hasher.update(
        serde_json::to_string(problem)
            .expect("JSON values always serialize")
            .as_bytes(),
    );
    hasher.update(b"\n");
    match x {
        Some(v) => hasher.update(
            serde_json::to_string(&VectorJson::from(v))
                .expect("vectors serialize")
                .as_bytes(),
        ),
        None => hasher.update(b"null"),
    }
    hex::encode(hasher.finalize())
}
