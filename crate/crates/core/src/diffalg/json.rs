//! JSON round-tripping for differential polynomials.
//!
//! The schema is a plain term list: coefficients as exact rational
//! strings, factors as (base, order, exp) triples in canonical order.

use serde::{Deserialize, Serialize};

use crate::diffalg::poly::{Coeff, LaurentMonomial};
use crate::diffalg::{DiffPoly, Indeterminate, ParseError, Symbol};

#[derive(Serialize, Deserialize)]
pub(crate) struct FactorDto {
    pub base: String,
    pub order: u32,
    pub exp: i32,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct TermDto {
    pub coeff: String,
    pub factors: Vec<FactorDto>,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct PolyDto {
    pub terms: Vec<TermDto>,
}

impl From<&DiffPoly> for PolyDto {
    fn from(p: &DiffPoly) -> Self {
        PolyDto {
            terms: p
                .terms()
                .iter()
                .map(|t| TermDto {
                    coeff: coeff_string(&t.coeff),
                    factors: t
                        .powers
                        .factors()
                        .iter()
                        .map(|&(i, e)| FactorDto {
                            base: i.base.name().to_string(),
                            order: i.order,
                            exp: e,
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

impl PolyDto {
    pub(crate) fn into_poly(self) -> Result<DiffPoly, ParseError> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in self.terms {
            let coeff = parse_coeff(&t.coeff)?;
            let mut factors = Vec::with_capacity(t.factors.len());
            for f in t.factors {
                let base = Symbol::from_name(&f.base)?;
                factors.push((Indeterminate::new(base, f.order), f.exp));
            }
            terms.push(LaurentMonomial::new(
                coeff,
                crate::diffalg::poly::PowerProduct::from_factors(&factors),
            ));
        }
        Ok(DiffPoly::from_terms(terms))
    }
}

pub(crate) fn coeff_string(c: &Coeff) -> String {
    if num_traits::One::is_one(c.denom()) {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

pub(crate) fn parse_coeff(s: &str) -> Result<Coeff, ParseError> {
    let parse_int = |t: &str| {
        t.parse::<num_bigint::BigInt>()
            .map_err(|_| ParseError::new(0, format!("bad rational literal `{s}`")))
    };
    match s.split_once('/') {
        Some((n, d)) => {
            let numer = parse_int(n)?;
            let denom = parse_int(d)?;
            if num_traits::Zero::is_zero(&denom) {
                return Err(ParseError::new(0, format!("zero denominator in `{s}`")));
            }
            Ok(Coeff::new(numer, denom))
        }
        None => Ok(Coeff::from_integer(parse_int(s)?)),
    }
}

/// Serializes to the JSON term-list schema.
pub fn to_json(p: &DiffPoly) -> serde_json::Value {
    serde_json::to_value(PolyDto::from(p)).expect("plain DTO serializes")
}

/// Deserializes from the JSON term-list schema. Terms are renormalized,
/// so any permutation of a valid document parses to the same polynomial.
pub fn from_json(v: &serde_json::Value) -> Result<DiffPoly, ParseError> {
    let dto: PolyDto = serde_json::from_value(v.clone())
        .map_err(|e| ParseError::new(0, format!("bad polynomial JSON: {e}")))?;
    dto.into_poly()
}
