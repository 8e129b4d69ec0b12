//! Exact period bookkeeping.
//!
//! A period is a positive rational multiple `p/q` of a named unit. Two
//! periods are commensurable exactly when they share a unit; a class of
//! commensurable periods has a least common multiple computed in integer
//! arithmetic.

use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const RATIONAL_UNIT: &str = "one";

/// `(p/q)·unit(tag)`; stored in lowest terms with `q > 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "RawPeriod")]
pub struct PeriodSpec {
    pub p: i64,
    pub q: i64,
    pub tag: String,
}

#[derive(Deserialize)]
struct RawPeriod {
    p: i64,
    #[serde(default = "one")]
    q: i64,
    #[serde(default = "rational_tag")]
    tag: String,
}

fn one() -> i64 {
    1
}

fn rational_tag() -> String {
    RATIONAL_UNIT.to_string()
}

impl From<RawPeriod> for PeriodSpec {
    fn from(r: RawPeriod) -> Self {
        PeriodSpec::new(r.p, r.q, r.tag)
    }
}

impl PeriodSpec {
    /// Normalises sign and common factors; a zero denominator is kept and
    /// rejected later by [`reduce_periods`].
    pub fn new(p: i64, q: i64, tag: impl Into<String>) -> Self {
        let tag = tag.into();
        if q == 0 {
            return PeriodSpec { p, q, tag };
        }
        let g = p.gcd(&q).max(1);
        let sign = if q < 0 { -1 } else { 1 };
        PeriodSpec {
            p: sign * p / g,
            q: sign * q / g,
            tag,
        }
    }

    pub fn rational(p: i64, q: i64) -> Self {
        PeriodSpec::new(p, q, RATIONAL_UNIT)
    }

    pub fn is_positive(&self) -> bool {
        self.p > 0 && self.q > 0
    }

    pub fn value(&self, units: &UnitTable) -> Result<f64> {
        Ok(self.p as f64 / self.q as f64 * units.get(&self.tag)?)
    }
}

impl fmt::Display for PeriodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.q == 1 {
            write!(f, "{}", self.p)?;
        } else {
            write!(f, "{}/{}", self.p, self.q)?;
        }
        if self.tag != RATIONAL_UNIT {
            write!(f, "·{}", self.tag)?;
        }
        Ok(())
    }
}

/// Numeric values of the irrational units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitTable(BTreeMap<String, f64>);

impl Default for UnitTable {
    fn default() -> Self {
        let mut m = BTreeMap::new();
        m.insert(RATIONAL_UNIT.to_string(), 1.0);
        m.insert("sqrt2".to_string(), std::f64::consts::SQRT_2);
        m.insert("sqrt3".to_string(), 3f64.sqrt());
        m.insert("pi".to_string(), std::f64::consts::PI);
        m.insert("e".to_string(), std::f64::consts::E);
        UnitTable(m)
    }
}

impl UnitTable {
    /// Builtin units overlaid with `extra`.
    pub fn with(extra: impl IntoIterator<Item = (String, f64)>) -> Result<Self> {
        let mut table = UnitTable::default();
        for (k, v) in extra {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!("unit `{k}` must be positive and finite")));
            }
            if k == RATIONAL_UNIT && v != 1.0 {
                return Err(Error::InvalidInput("unit `one` is fixed at 1".into()));
            }
            table.0.insert(k, v);
        }
        Ok(table)
    }

    pub fn get(&self, tag: &str) -> Result<f64> {
        self.0
            .get(tag)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("unknown unit `{tag}`")))
    }

    /// Entries other than the builtins.
    pub fn custom(&self) -> impl Iterator<Item = (&String, &f64)> {
        let builtin = UnitTable::default();
        self.0.iter().filter(move |(k, v)| builtin.0.get(*k) != Some(*v))
    }
}

/// Periods sharing a unit, merged into one common period.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodClass {
    pub tag: String,
    /// Indices into the input list.
    pub members: Vec<usize>,
    /// Least common multiple `s` of the member periods.
    pub common: PeriodSpec,
    /// `mⱼ` with `mⱼ·tⱼ = s`, aligned with `members`.
    pub multipliers: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReductionPlan {
    pub classes: Vec<PeriodClass>,
}

impl ReductionPlan {
    /// One common period per class, pairwise incommensurable.
    pub fn reduced_times(&self) -> Vec<PeriodSpec> {
        self.classes.iter().map(|k| k.common.clone()).collect()
    }

    /// Class index for each input period.
    pub fn class_of(&self, input: usize) -> Option<usize> {
        self.classes.iter().position(|k| k.members.contains(&input))
    }
}

/// Groups periods by unit and replaces each group by its least common
/// multiple `lcm(pⱼ)/gcd(qⱼ)`.
pub fn reduce_periods(times: &[PeriodSpec]) -> Result<ReductionPlan> {
    if let Some(bad) = times.iter().find(|t| !t.is_positive()) {
        return Err(Error::InvalidInput(format!(
            "period {}/{} is not positive",
            bad.p, bad.q
        )));
    }
    let mut classes: Vec<PeriodClass> = Vec::new();
    for (i, t) in times.iter().enumerate() {
        match classes.iter_mut().find(|k| k.tag == t.tag) {
            Some(k) => k.members.push(i),
            None => classes.push(PeriodClass {
                tag: t.tag.clone(),
                members: vec![i],
                common: t.clone(),
                multipliers: Vec::new(),
            }),
        }
    }
    for class in &mut classes {
        let overflow = || Error::InvalidInput(format!("period arithmetic overflows for unit `{}`", class.tag));
        let mut num: u128 = 1;
        let mut den: u128 = 0;
        for &i in &class.members {
            let (p, q) = (times[i].p as u128, times[i].q as u128);
            num = num.lcm(&p);
            den = den.gcd(&q);
            if num > i64::MAX as u128 {
                return Err(overflow());
            }
        }
        let mut multipliers = Vec::with_capacity(class.members.len());
        for &i in &class.members {
            let (p, q) = (times[i].p as u128, times[i].q as u128);
            // (num/den) / (p/q) = (num/p)·(q/den), both factors integral
            let m = (num / p).checked_mul(q / den).ok_or_else(overflow)?;
            multipliers.push(u64::try_from(m).map_err(|_| overflow())?);
        }
        class.common = PeriodSpec::new(num as i64, den as i64, class.tag.clone());
        class.multipliers = multipliers;
    }
    Ok(ReductionPlan { classes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalises_fractions() {
        assert_eq!(PeriodSpec::rational(4, 6), PeriodSpec::rational(2, 3));
        assert_eq!(PeriodSpec::rational(2, -3), PeriodSpec::rational(-2, 3));
        assert_eq!(PeriodSpec::rational(3, 1).to_string(), "3");
        assert_eq!(PeriodSpec::new(1, 2, "pi").to_string(), "1/2·pi");
    }

    #[test]
    fn two_thirds_and_one_half() {
        let plan = reduce_periods(&[PeriodSpec::rational(2, 3), PeriodSpec::rational(1, 2)]).unwrap();
        assert_eq!(plan.classes.len(), 1);
        assert_eq!(plan.classes[0].common, PeriodSpec::rational(2, 1));
        assert_eq!(plan.classes[0].multipliers, vec![3, 4]);
    }

    #[test]
    fn integers_one_two_three() {
        let t: Vec<_> = (1..=3).map(|k| PeriodSpec::rational(k, 1)).collect();
        let plan = reduce_periods(&t).unwrap();
        assert_eq!(plan.classes[0].common, PeriodSpec::rational(6, 1));
        assert_eq!(plan.classes[0].multipliers, vec![6, 3, 2]);
    }

    #[test]
    fn different_units_stay_apart() {
        let t = [PeriodSpec::rational(1, 1), PeriodSpec::new(1, 1, "sqrt2")];
        let plan = reduce_periods(&t).unwrap();
        assert_eq!(plan.reduced_times(), t.to_vec());
        assert_eq!(plan.class_of(1), Some(1));
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(reduce_periods(&[PeriodSpec::rational(0, 1)]).is_err());
        assert!(reduce_periods(&[PeriodSpec::rational(-1, 2)]).is_err());
        assert!(reduce_periods(&[PeriodSpec::rational(1, 0)]).is_err());
    }

    #[test]
    fn json_defaults_and_units() {
        let p: PeriodSpec = serde_json::from_str(r#"{"p": 4, "q": 6}"#).unwrap();
        assert_eq!(p, PeriodSpec::rational(2, 3));
        let units = UnitTable::with([("tau".to_string(), 6.5)]).unwrap();
        assert_eq!(PeriodSpec::new(1, 2, "tau").value(&units).unwrap(), 3.25);
        assert!(PeriodSpec::new(1, 2, "nope").value(&units).is_err());
        assert!(UnitTable::with([("one".to_string(), 2.0)]).is_err());
        assert_eq!(units.custom().count(), 1);
    }
}
