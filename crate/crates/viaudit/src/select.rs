//! Score aggregation and deterministic top-k selection.
//!
//! Overalls are combined and compared as exact rationals so rankings are
//! reproducible bit-for-bit across runs and worker counts; floats appear
//! only at the serialization boundary.

use std::cmp::Ordering;

use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive};
use thiserror::Error;

use crate::corpus::AuditRecord;

pub type Rational = Ratio<i128>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SelectError {
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("score {value} out of range 1..=5 for {axis}")]
    ScoreOutOfRange { axis: &'static str, value: u8 },
}

/// Non-negative per-axis weights summing to 1 (within 1e-12, checked in
/// exact arithmetic).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightScheme {
    w_l: Rational,
    w_k: Rational,
    w_v: Rational,
}

impl Default for WeightScheme {
    /// Equal thirds: the overall score is the arithmetic mean of the axes.
    fn default() -> Self {
        let third = Rational::new(1, 3);
        WeightScheme { w_l: third, w_k: third, w_v: third }
    }
}

impl WeightScheme {
    pub fn new(w_l: Rational, w_k: Rational, w_v: Rational) -> Result<Self, SelectError> {
        for (name, w) in [("l", &w_l), ("k", &w_k), ("v", &w_v)] {
            if w.is_negative() {
                return Err(SelectError::InvalidWeights(format!("w_{name} = {w} is negative")));
            }
        }
        let sum = w_l + w_k + w_v;
        let tolerance = Rational::new(1, 1_000_000_000_000);
        if (sum - Rational::one()).abs() > tolerance {
            return Err(SelectError::InvalidWeights(format!("weights sum to {sum}, expected 1")));
        }
        Ok(WeightScheme { w_l, w_k, w_v })
    }

    /// Parses `"l,k,v"` where each part is a decimal (`0.6`) or a fraction
    /// (`1/3`).
    pub fn parse(text: &str) -> Result<Self, SelectError> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(SelectError::InvalidWeights(format!(
                "expected three comma-separated weights, got {:?}",
                text
            )));
        }
        let w_l = parse_rational(parts[0])?;
        let w_k = parse_rational(parts[1])?;
        let w_v = parse_rational(parts[2])?;
        WeightScheme::new(w_l, w_k, w_v)
    }

    pub fn w_l(&self) -> Rational {
        self.w_l
    }

    pub fn w_k(&self) -> Rational {
        self.w_k
    }

    pub fn w_v(&self) -> Rational {
        self.w_v
    }

    /// Canonical `l,k,v` rendering with exact fractions, e.g. `1/3,1/3,1/3`.
    pub fn describe(&self) -> String {
        format!("{},{},{}", self.w_l, self.w_k, self.w_v)
    }
}

/// Parses a decimal (`0.6`), integer (`1`), or fraction (`3/5`) into an
/// exact rational.
pub fn parse_rational(text: &str) -> Result<Rational, SelectError> {
    let invalid = || SelectError::InvalidWeights(format!("cannot parse weight {text:?}"));
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let num: i128 = num.trim().parse().map_err(|_| invalid())?;
        let den: i128 = den.trim().parse().map_err(|_| invalid())?;
        if den <= 0 {
            return Err(invalid());
        }
        return Ok(Rational::new(num, den));
    }
    if let Some((int_part, frac_part)) = text.split_once('.') {
        if frac_part.is_empty() || frac_part.len() > 18 || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(invalid());
        }
        let int_val: i128 = if int_part.is_empty() { 0 } else { int_part.parse().map_err(|_| invalid())? };
        if int_val < 0 {
            return Err(invalid());
        }
        let scale = 10i128.pow(frac_part.len() as u32);
        let frac_val: i128 = frac_part.parse().map_err(|_| invalid())?;
        return Ok(Rational::new(int_val * scale + frac_val, scale));
    }
    let int_val: i128 = text.parse().map_err(|_| invalid())?;
    Ok(Rational::from_integer(int_val))
}

fn check_score(axis: &'static str, value: u8) -> Result<(), SelectError> {
    if (1..=5).contains(&value) {
        Ok(())
    } else {
        Err(SelectError::ScoreOutOfRange { axis, value })
    }
}

/// Weighted combination of the three axis scores, computed exactly.
pub fn aggregate(s_l: u8, s_k: u8, s_v: u8, weights: &WeightScheme) -> Result<Rational, SelectError> {
    check_score("s_l", s_l)?;
    check_score("s_k", s_k)?;
    check_score("s_v", s_v)?;
    Ok(weights.w_l * Rational::from_integer(s_l as i128)
        + weights.w_k * Rational::from_integer(s_k as i128)
        + weights.w_v * Rational::from_integer(s_v as i128))
}

/// `aggregate` converted for serialization.
pub fn aggregate_f64(s_l: u8, s_k: u8, s_v: u8, weights: &WeightScheme) -> Result<f64, SelectError> {
    Ok(aggregate(s_l, s_k, s_v, weights)?
        .to_f64()
        .expect("rational in [1,5] converts to f64"))
}

/// Sort key for ranking: overall descending, then s_l descending, then s_v
/// descending, then id ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankKey<'a> {
    pub overall: Rational,
    pub s_l: u8,
    pub s_v: u8,
    pub id: &'a str,
}

impl RankKey<'_> {
    fn cmp_rank(&self, other: &Self) -> Ordering {
        other
            .overall
            .cmp(&self.overall)
            .then_with(|| other.s_l.cmp(&self.s_l))
            .then_with(|| other.s_v.cmp(&self.s_v))
            .then_with(|| self.id.cmp(other.id))
    }
}

/// Orders keys by the tie-break chain and returns ids best-first.
pub fn sorted_ids(mut keys: Vec<RankKey<'_>>) -> Vec<String> {
    keys.sort_by(RankKey::cmp_rank);
    keys.into_iter().map(|k| k.id.to_owned()).collect()
}

/// Top-k sample ids by exact weighted overall. The stored float `overall`
/// is ignored; ranking recomputes it from the integer axes so results never
/// depend on float accumulation. `k >= len` returns everything.
pub fn rank_and_select(
    records: &[AuditRecord],
    weights: &WeightScheme,
    k: usize,
) -> Result<Vec<String>, SelectError> {
    let mut keys = Vec::with_capacity(records.len());
    for r in records {
        keys.push(RankKey {
            overall: aggregate(r.s_l, r.s_k, r.s_v, weights)?,
            s_l: r.s_l,
            s_v: r.s_v,
            id: &r.id,
        });
    }
    let mut ids = sorted_ids(keys);
    ids.truncate(k);
    Ok(ids)
}
