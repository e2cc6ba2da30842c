//! Sparse Laurent differential polynomials over exact rationals.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::diffalg::{DiffAlgError, Indeterminate, Symbol};

/// Exact coefficient type: arbitrary-precision rationals.
pub type Coeff = BigRational;

/// Convenience constructor for an integer coefficient.
pub fn coeff_int(n: i64) -> Coeff {
    BigRational::from_integer(BigInt::from(n))
}

/// Convenience constructor for the rational coefficient `num/den`.
///
/// Panics if `den == 0`. The result is normalized (gcd reduced, positive
/// denominator) by the underlying rational type.
pub fn coeff_ratio(num: i64, den: i64) -> Coeff {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// A power product of derivative indeterminates with nonzero integer
/// (possibly negative) exponents, kept sorted by the canonical
/// indeterminate order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct PowerProduct {
    factors: Vec<(Indeterminate, i32)>,
}

impl PowerProduct {
    pub fn unit() -> Self {
        PowerProduct::default()
    }

    pub fn single(ind: Indeterminate, exp: i32) -> Self {
        let mut p = PowerProduct::unit();
        p.mul_factor(ind, exp);
        p
    }

    pub fn from_factors(factors: &[(Indeterminate, i32)]) -> Self {
        let mut p = PowerProduct::unit();
        for &(ind, exp) in factors {
            p.mul_factor(ind, exp);
        }
        p
    }

    pub fn factors(&self) -> &[(Indeterminate, i32)] {
        &self.factors
    }

    pub fn is_unit(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn exponent_of(&self, ind: Indeterminate) -> i32 {
        match self.factors.binary_search_by_key(&ind, |&(i, _)| i) {
            Ok(pos) => self.factors[pos].1,
            Err(_) => 0,
        }
    }

    /// Multiplies `ind^exp` into the product, merging exponents and
    /// dropping the factor if the combined exponent is zero.
    pub fn mul_factor(&mut self, ind: Indeterminate, exp: i32) {
        if exp == 0 {
            return;
        }
        match self.factors.binary_search_by_key(&ind, |&(i, _)| i) {
            Ok(pos) => {
                self.factors[pos].1 += exp;
                if self.factors[pos].1 == 0 {
                    self.factors.remove(pos);
                }
            }
            Err(pos) => self.factors.insert(pos, (ind, exp)),
        }
    }

    pub fn mul(&self, other: &PowerProduct) -> PowerProduct {
        let mut out = self.clone();
        for &(ind, exp) in &other.factors {
            out.mul_factor(ind, exp);
        }
        out
    }

    /// Total degree: the sum of all exponents (negative exponents count
    /// negatively).
    pub fn total_degree(&self) -> i64 {
        self.factors.iter().map(|&(_, e)| e as i64).sum()
    }
}

/// Canonical term order: graded by total degree (higher degree first),
/// ties broken lexicographically by the factor lists.
impl Ord for PowerProduct {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .total_degree()
            .cmp(&self.total_degree())
            .then_with(|| self.factors.cmp(&other.factors))
    }
}

impl PartialOrd for PowerProduct {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// One term of a differential polynomial: an exact rational coefficient
/// times a power product.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LaurentMonomial {
    pub coeff: Coeff,
    pub powers: PowerProduct,
}

impl LaurentMonomial {
    pub fn new(coeff: Coeff, powers: PowerProduct) -> Self {
        LaurentMonomial { coeff, powers }
    }
}

/// A differential polynomial: a canonically ordered sum of terms with
/// nonzero coefficients and pairwise distinct power products.
///
/// Two polynomials are equal iff their term lists are identical, so
/// structural equality is mathematical equality.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct DiffPoly {
    terms: Vec<LaurentMonomial>,
}

impl DiffPoly {
    pub fn zero() -> Self {
        DiffPoly::default()
    }

    pub fn one() -> Self {
        DiffPoly::constant(Coeff::one())
    }

    pub fn constant(c: Coeff) -> Self {
        if c.is_zero() {
            return DiffPoly::zero();
        }
        DiffPoly {
            terms: vec![LaurentMonomial::new(c, PowerProduct::unit())],
        }
    }

    pub fn from_int(n: i64) -> Self {
        DiffPoly::constant(coeff_int(n))
    }

    /// The bare indeterminate as a polynomial.
    pub fn var(ind: Indeterminate) -> Self {
        DiffPoly::monomial(Coeff::one(), &[(ind, 1)])
    }

    pub fn monomial(coeff: Coeff, factors: &[(Indeterminate, i32)]) -> Self {
        if coeff.is_zero() {
            return DiffPoly::zero();
        }
        DiffPoly {
            terms: vec![LaurentMonomial::new(coeff, PowerProduct::from_factors(factors))],
        }
    }

    /// Builds a polynomial from an arbitrary term list, combining like
    /// terms and dropping zero coefficients.
    pub fn from_terms(mut terms: Vec<LaurentMonomial>) -> Self {
        terms.sort_by(|a, b| a.powers.cmp(&b.powers));
        let mut out: Vec<LaurentMonomial> = Vec::with_capacity(terms.len());
        for t in terms {
            match out.last_mut() {
                Some(last) if last.powers == t.powers => {
                    last.coeff += t.coeff;
                    if last.coeff.is_zero() {
                        out.pop();
                    }
                }
                _ => {
                    if !t.coeff.is_zero() {
                        out.push(t);
                    }
                }
            }
        }
        DiffPoly { terms: out }
    }

    pub fn terms(&self) -> &[LaurentMonomial] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<LaurentMonomial> {
        self.terms
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].powers.is_unit() && self.terms[0].coeff.is_one()
    }

    /// If the polynomial is a single term, returns it.
    pub fn as_single_term(&self) -> Option<&LaurentMonomial> {
        match self.terms.as_slice() {
            [t] => Some(t),
            _ => None,
        }
    }

    /// If the polynomial is a constant (including zero), returns its value.
    pub fn as_constant(&self) -> Option<Coeff> {
        match self.terms.as_slice() {
            [] => Some(Coeff::zero()),
            [t] if t.powers.is_unit() => Some(t.coeff.clone()),
            _ => None,
        }
    }

    pub fn scale(&self, c: &Coeff) -> DiffPoly {
        if c.is_zero() {
            return DiffPoly::zero();
        }
        DiffPoly {
            terms: self
                .terms
                .iter()
                .map(|t| LaurentMonomial::new(&t.coeff * c, t.powers.clone()))
                .collect(),
        }
    }

    /// Multiplies by a single monomial without a full product pass. The
    /// term order is preserved only after renormalization, so this goes
    /// through `from_terms`.
    pub fn mul_monomial(&self, coeff: &Coeff, powers: &PowerProduct) -> DiffPoly {
        if coeff.is_zero() {
            return DiffPoly::zero();
        }
        DiffPoly::from_terms(
            self.terms
                .iter()
                .map(|t| LaurentMonomial::new(&t.coeff * coeff, t.powers.mul(powers)))
                .collect(),
        )
    }

    /// Nonnegative integer power by repeated multiplication.
    pub fn powi(&self, k: u32) -> DiffPoly {
        let mut out = DiffPoly::one();
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// The total derivative with respect to the independent variable:
    /// every indeterminate `f^(k)` differentiates to `f^(k+1)` via the
    /// product and power rules. Exact on Laurent monomials, negative
    /// exponents included.
    pub fn total_derivative(&self) -> DiffPoly {
        let mut out: Vec<LaurentMonomial> = Vec::new();
        for term in &self.terms {
            for &(indet, exp) in term.powers.factors() {
                let mut powers = term.powers.clone();
                // d/dx f^e = e f^(e-1) f', with f' merged into the product
                powers.mul_factor(indet, -1);
                powers.mul_factor(indet.raised(), 1);
                out.push(LaurentMonomial::new(&term.coeff * coeff_int(exp as i64), powers));
            }
        }
        DiffPoly::from_terms(out)
    }

    /// All indeterminates occurring in the polynomial.
    pub fn indeterminates(&self) -> BTreeSet<Indeterminate> {
        self.terms
            .iter()
            .flat_map(|t| t.powers.factors().iter().map(|&(i, _)| i))
            .collect()
    }

    /// Whether any derivative of `base` occurs.
    pub fn mentions_base(&self, base: Symbol) -> bool {
        self.terms
            .iter()
            .any(|t| t.powers.factors().iter().any(|&(i, _)| i.base == base))
    }

    /// The highest derivative order of `base` occurring, if any.
    pub fn max_order_of(&self, base: Symbol) -> Option<u32> {
        self.terms
            .iter()
            .flat_map(|t| t.powers.factors().iter())
            .filter(|&&(i, _)| i.base == base)
            .map(|&(i, _)| i.order)
            .max()
    }

    /// For a polynomial that is linear (degree at most one, no negative
    /// powers) in every derivative of `base`, returns the coefficient of
    /// the indeterminate `target`: the sum of all terms containing
    /// `target^1`, with that factor removed.
    ///
    /// Fails with `NonlinearInBase` if any term has total degree other
    /// than 0 or 1 in derivatives of `base`.
    pub fn coefficient_of(&self, target: Indeterminate) -> Result<DiffPoly, DiffAlgError> {
        let base = target.base;
        let mut out: Vec<LaurentMonomial> = Vec::new();
        for term in &self.terms {
            let mut base_degree: i64 = 0;
            let mut negative = false;
            for &(i, e) in term.powers.factors() {
                if i.base == base {
                    base_degree += e as i64;
                    negative |= e < 0;
                }
            }
            if negative || !(0..=1).contains(&base_degree) {
                return Err(DiffAlgError::NonlinearInBase {
                    base,
                    term: DiffPoly {
                        terms: vec![term.clone()],
                    }
                    .to_string(),
                });
            }
            if term.powers.exponent_of(target) == 1 {
                let mut powers = term.powers.clone();
                powers.mul_factor(target, -1);
                out.push(LaurentMonomial::new(term.coeff.clone(), powers));
            }
        }
        Ok(DiffPoly::from_terms(out))
    }

    /// Evaluates at a point given numeric bindings for every occurring
    /// indeterminate. Terms are summed in canonical order, so repeated
    /// evaluation is bit-for-bit deterministic.
    pub fn evaluate(&self, bindings: &BTreeMap<Indeterminate, f64>) -> Result<f64, DiffAlgError> {
        let mut sum = 0.0;
        for term in &self.terms {
            let mut val = term
                .coeff
                .to_f64()
                .unwrap_or(if term.coeff.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY });
            for &(i, e) in term.powers.factors() {
                let x = *bindings.get(&i).ok_or(DiffAlgError::MissingBinding(i))?;
                if x == 0.0 && e < 0 {
                    return Err(DiffAlgError::PoleAtZero(i));
                }
                val *= x.powi(e);
            }
            sum += val;
        }
        Ok(sum)
    }
}

impl fmt::Display for DiffPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::diffalg::text::to_text(self))
    }
}

impl Add for &DiffPoly {
    type Output = DiffPoly;
    fn add(self, rhs: &DiffPoly) -> DiffPoly {
        // Merge two canonically sorted term lists.
        let mut out: Vec<LaurentMonomial> = Vec::with_capacity(self.terms.len() + rhs.terms.len());
        let (mut a, mut b) = (self.terms.iter().peekable(), rhs.terms.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some(ta), Some(tb)) => match ta.powers.cmp(&tb.powers) {
                    Ordering::Less => out.push((*a.next().unwrap()).clone()),
                    Ordering::Greater => out.push((*b.next().unwrap()).clone()),
                    Ordering::Equal => {
                        let ta = a.next().unwrap();
                        let tb = b.next().unwrap();
                        let c = &ta.coeff + &tb.coeff;
                        if !c.is_zero() {
                            out.push(LaurentMonomial::new(c, ta.powers.clone()));
                        }
                    }
                },
                (Some(_), None) => out.push((*a.next().unwrap()).clone()),
                (None, Some(_)) => out.push((*b.next().unwrap()).clone()),
                (None, None) => break,
            }
        }
        DiffPoly { terms: out }
    }
}

impl Sub for &DiffPoly {
    type Output = DiffPoly;
    fn sub(self, rhs: &DiffPoly) -> DiffPoly {
        self + &(-rhs)
    }
}

impl Neg for &DiffPoly {
    type Output = DiffPoly;
    fn neg(self) -> DiffPoly {
        DiffPoly {
            terms: self
                .terms
                .iter()
                .map(|t| LaurentMonomial::new(-t.coeff.clone(), t.powers.clone()))
                .collect(),
        }
    }
}

impl Mul for &DiffPoly {
    type Output = DiffPoly;
    fn mul(self, rhs: &DiffPoly) -> DiffPoly {
        if self.is_zero() || rhs.is_zero() {
            return DiffPoly::zero();
        }
        let mut out: Vec<LaurentMonomial> =
            Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for ta in &self.terms {
            for tb in &rhs.terms {
                out.push(LaurentMonomial::new(&ta.coeff * &tb.coeff, ta.powers.mul(&tb.powers)));
            }
        }
        DiffPoly::from_terms(out)
    }
}

macro_rules! forward_owned_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for DiffPoly {
            type Output = DiffPoly;
            fn $method(self, rhs: DiffPoly) -> DiffPoly {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&DiffPoly> for DiffPoly {
            type Output = DiffPoly;
            fn $method(self, rhs: &DiffPoly) -> DiffPoly {
                (&self).$method(rhs)
            }
        }
        impl $trait<DiffPoly> for &DiffPoly {
            type Output = DiffPoly;
            fn $method(self, rhs: DiffPoly) -> DiffPoly {
                self.$method(&rhs)
            }
        }
    };
}

forward_owned_binop!(Add, add);
forward_owned_binop!(Sub, sub);
forward_owned_binop!(Mul, mul);

impl Neg for DiffPoly {
    type Output = DiffPoly;
    fn neg(self) -> DiffPoly {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffalg::symbol::ind;
    use Symbol::{Q, R, U, Y};

    fn q() -> DiffPoly {
        DiffPoly::var(ind(Q, 0))
    }

    fn qp() -> DiffPoly {
        DiffPoly::var(ind(Q, 1))
    }

    #[test]
    fn like_terms_cancel_exactly() {
        // (1/3) q + (2/3) q - q == 0
        let p = q().scale(&coeff_ratio(1, 3)) + q().scale(&coeff_ratio(2, 3)) - q();
        assert!(p.is_zero());
    }

    #[test]
    fn product_of_sums_expands() {
        // (q + q')^2 = q^2 + 2 q q' + q'^2
        let s = q() + qp();
        let sq = &s * &s;
        let expected = DiffPoly::monomial(coeff_int(1), &[(ind(Q, 0), 2)])
            + DiffPoly::monomial(coeff_int(2), &[(ind(Q, 0), 1), (ind(Q, 1), 1)])
            + DiffPoly::monomial(coeff_int(1), &[(ind(Q, 1), 2)]);
        assert_eq!(sq, expected);
    }

    #[test]
    fn derivative_of_power_product() {
        // D(q^2 u') = 2 q q' u' + q^2 u''
        let p = DiffPoly::monomial(coeff_int(1), &[(ind(Q, 0), 2), (ind(U, 1), 1)]);
        let d = p.total_derivative();
        let expected = DiffPoly::monomial(coeff_int(2), &[(ind(Q, 0), 1), (ind(Q, 1), 1), (ind(U, 1), 1)])
            + DiffPoly::monomial(coeff_int(1), &[(ind(Q, 0), 2), (ind(U, 2), 1)]);
        assert_eq!(d, expected);
    }

    #[test]
    fn derivative_of_negative_power() {
        // D(r^-1) = -r'/r^2
        let p = DiffPoly::monomial(coeff_int(1), &[(ind(R, 0), -1)]);
        let d = p.total_derivative();
        let expected = DiffPoly::monomial(coeff_int(-1), &[(ind(R, 0), -2), (ind(R, 1), 1)]);
        assert_eq!(d, expected);
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        assert!(DiffPoly::from_int(7).total_derivative().is_zero());
    }

    #[test]
    fn leibniz_rule_holds() {
        let a = q() + DiffPoly::monomial(coeff_int(3), &[(ind(U, 0), -2)]);
        let b = qp() - DiffPoly::from_int(5);
        let lhs = (&a * &b).total_derivative();
        let rhs = &a.total_derivative() * &b + &a * &b.total_derivative();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn coefficient_extraction_linear() {
        // p = 3 q y'' - q' y, coefficient of y'' is 3q, of y is -q', of y' is 0
        let p = DiffPoly::monomial(coeff_int(3), &[(ind(Q, 0), 1), (ind(Y, 2), 1)])
            + DiffPoly::monomial(coeff_int(-1), &[(ind(Q, 1), 1), (ind(Y, 0), 1)]);
        assert_eq!(p.coefficient_of(ind(Y, 2)).unwrap(), q().scale(&coeff_int(3)));
        assert_eq!(p.coefficient_of(ind(Y, 0)).unwrap(), -qp());
        assert!(p.coefficient_of(ind(Y, 1)).unwrap().is_zero());
    }

    #[test]
    fn coefficient_extraction_rejects_nonlinear() {
        let p = DiffPoly::monomial(coeff_int(1), &[(ind(Y, 1), 2)]);
        assert!(matches!(
            p.coefficient_of(ind(Y, 1)),
            Err(DiffAlgError::NonlinearInBase { base: Y, .. })
        ));
        // y y' is also nonlinear (total degree two in y)
        let p = DiffPoly::monomial(coeff_int(1), &[(ind(Y, 0), 1), (ind(Y, 1), 1)]);
        assert!(p.coefficient_of(ind(Y, 0)).is_err());
    }

    #[test]
    fn evaluate_with_negative_exponents() {
        // p = q^2 / u at q = 3, u = 2 -> 4.5
        let p = DiffPoly::monomial(coeff_int(1), &[(ind(Q, 0), 2), (ind(U, 0), -1)]);
        let mut b = BTreeMap::new();
        b.insert(ind(Q, 0), 3.0);
        b.insert(ind(U, 0), 2.0);
        assert_eq!(p.evaluate(&b).unwrap(), 4.5);
    }

    #[test]
    fn evaluate_reports_pole_and_missing_binding() {
        let p = DiffPoly::monomial(coeff_int(1), &[(ind(U, 0), -1)]);
        let mut b = BTreeMap::new();
        b.insert(ind(U, 0), 0.0);
        assert!(matches!(p.evaluate(&b), Err(DiffAlgError::PoleAtZero(_))));
        let b = BTreeMap::new();
        assert!(matches!(p.evaluate(&b), Err(DiffAlgError::MissingBinding(_))));
    }

    #[test]
    fn canonical_order_is_graded() {
        // q^3 (degree 3) before q'' (degree 1) before constant
        let p = DiffPoly::from_int(1)
            + DiffPoly::var(ind(Q, 2))
            + DiffPoly::monomial(coeff_int(1), &[(ind(Q, 0), 3)]);
        let degs: Vec<i64> = p.terms().iter().map(|t| t.powers.total_degree()).collect();
        assert_eq!(degs, vec![3, 1, 0]);
    }
}
