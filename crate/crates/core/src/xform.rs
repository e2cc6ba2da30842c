//! Point transformations between source and canonical coordinates: the
//! Schwarzian derivative, the symbolic identities behind the
//! canonical-form criterion, and the equivalence map that carries
//! canonical solutions back through a change of variables.

use std::collections::BTreeMap;

use crate::diffalg::{
    coeff_int, coeff_ratio, derivative_closure, ind, reduce_fixpoint, DiffPoly, LaurentMonomial,
    PowerProduct, RewriteRule, Symbol,
};
use crate::itergen::{psi_apply, source_coefficient};
use crate::numeval::{
    quadrature_fn, require_nonvanishing, ClosedFormFn, NumericError, QUADRATURE_TOL,
};

/// The Schwarzian derivative of the named function as a Laurent
/// differential polynomial: S(f) = -(3/2) f''^2 f'^-2 + f^(3) f'^-1,
/// i.e. (2 f' f^(3) - 3 f''^2) / (2 f'^2).
pub fn schwarzian_symbolic(base: Symbol) -> DiffPoly {
    DiffPoly::from_terms(vec![
        LaurentMonomial::new(
            coeff_ratio(-3, 2),
            PowerProduct::from_factors(&[(ind(base, 1), -2), (ind(base, 2), 2)]),
        ),
        LaurentMonomial::new(
            coeff_int(1),
            PowerProduct::from_factors(&[(ind(base, 1), -1), (ind(base, 3), 1)]),
        ),
    ])
}

/// The Schwarzian derivative of f at x, evaluated from the analytic
/// derivative oracles. Requires f' nonzero at x.
pub fn schwarzian_numeric(f: &ClosedFormFn, x: f64) -> Result<f64, NumericError> {
    f.require_order(3)?;
    f.require_inside(x)?;
    if f.deriv(1, x) == 0.0 {
        return Err(NumericError::Vanishes {
            label: format!("{}'", f.label()),
        });
    }
    let mut bindings = BTreeMap::new();
    for order in 1..=3 {
        bindings.insert(ind(Symbol::H, order), f.deriv(order, x));
    }
    Ok(schwarzian_symbolic(Symbol::H).evaluate(&bindings)?)
}

/// Symbolic witness that the source coefficient satisfies
/// A(r) = (1/2) S(h) with h' = 1/r: substitutes the closure of h' = r^-1
/// into half the Schwarzian and subtracts A(r). The result must be the
/// zero polynomial.
pub fn verify_schwarzian_source_identity() -> DiffPoly {
    let h_rule = RewriteRule::new(
        ind(Symbol::H, 1),
        DiffPoly::monomial(coeff_int(1), &[(ind(Symbol::R, 0), -1)]),
    )
    .expect("h' -> r^-1 is a valid rule");
    let rules = derivative_closure(h_rule, 3).expect("closure of h' = r^-1");
    let half_s = schwarzian_symbolic(Symbol::H).scale(&coeff_ratio(1, 2));
    let reduced = reduce_fixpoint(&half_s, &rules).expect("reduction terminates");
    reduced - source_coefficient(Symbol::R)
}

/// Symbolic witness for the canonical change-of-variables identity: for
/// r = u^2 and s = -(n-1) u u', the operator u^-(n+1) (u^2 D)^n composed
/// with multiplication by u^-(n-1) coincides with u^-2n Psi^n. Returns
/// the difference, which must be the zero polynomial. No source-equation
/// reduction is involved; this is an identity of Laurent differential
/// polynomials in u and y.
pub fn verify_canonical_identity(n: u32) -> DiffPoly {
    assert!(n >= 2, "canonical identity requires order n >= 2, got {n}");
    let n_i = n as i32;
    let u_sq = DiffPoly::monomial(coeff_int(1), &[(ind(Symbol::U, 0), 2)]);

    // left: u^-(n+1) (u^2 D)^n [u^-(n-1) y]
    let mut e = DiffPoly::monomial(
        coeff_int(1),
        &[(ind(Symbol::U, 0), -(n_i - 1)), (ind(Symbol::Y, 0), 1)],
    );
    for _ in 0..n {
        e = &u_sq * &e.total_derivative();
    }
    let left = e.mul_monomial(
        &coeff_int(1),
        &PowerProduct::single(ind(Symbol::U, 0), -(n_i + 1)),
    );

    // right: u^-2n Psi^n[y] with r = u^2, s = -(n-1) u u'
    let s = DiffPoly::monomial(
        coeff_int(-(i64::from(n) - 1)),
        &[(ind(Symbol::U, 0), 1), (ind(Symbol::U, 1), 1)],
    );
    let mut psi = DiffPoly::var(ind(Symbol::Y, 0));
    for _ in 0..n {
        psi = psi_apply(&psi, &u_sq, &s);
    }
    let right = psi.mul_monomial(&coeff_int(1), &PowerProduct::single(ind(Symbol::U, 0), -2 * n_i));

    left - right
}

/// The data of an equivalence between a source equation of order n
/// parametrized by u and its canonical form: the scale factor lambda and
/// the anchor point of the primitive h(x) = integral from x0 of u^-2.
#[derive(Debug, Clone)]
pub struct EquivalenceMap {
    n: u32,
    lambda: f64,
    u: ClosedFormFn,
    x0: f64,
}

impl EquivalenceMap {
    /// Anchors the primitive at the left end of u's working interval.
    pub fn new(n: u32, lambda: f64, u: ClosedFormFn) -> Result<Self, NumericError> {
        let x0 = u.interval().0;
        EquivalenceMap::with_anchor(n, lambda, u, x0)
    }

    pub fn with_anchor(n: u32, lambda: f64, u: ClosedFormFn, x0: f64) -> Result<Self, NumericError> {
        if n < 2 {
            return Err(NumericError::OrderTooSmall { min: 2, got: n });
        }
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(NumericError::BadConstant {
                name: "lambda",
                value: lambda,
            });
        }
        u.require_inside(x0)?;
        require_nonvanishing(&u)?;
        Ok(EquivalenceMap { n, lambda, u, x0 })
    }

    pub fn order(&self) -> u32 {
        self.n
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn u(&self) -> &ClosedFormFn {
        &self.u
    }

    pub fn anchor(&self) -> f64 {
        self.x0
    }
}

/// The k-th monomial solution w = t^k of the canonical equation, carried
/// back to source coordinates: y(x) = (1/lambda) u(x)^(n-1) h(x)^k with
/// h(x) the anchored primitive of u^-2.
pub fn map_canonical_solution(map: &EquivalenceMap, k: u32, x: f64) -> Result<f64, NumericError> {
    if k >= map.n {
        return Err(NumericError::IndexOutOfRange { k, n: map.n });
    }
    map.u.require_inside(x)?;
    let head = map.u.eval(x).powi(map.n as i32 - 1) / map.lambda;
    if k == 0 {
        return Ok(head);
    }
    let u = map.u.clone();
    let h = quadrature_fn(move |t| u.eval(t).powi(-2), map.x0, x, QUADRATURE_TOL)?;
    Ok(head * h.powi(k as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::itergen::generate_maxsym;
    use crate::numeval::{residual, sample_points, source_q_from};
    use crate::solbasis::basis_from_u_anchored;
    use proptest::prelude::*;

    #[test]
    fn schwarzian_has_the_pinned_shape() {
        let s = schwarzian_symbolic(Symbol::H);
        assert_eq!(s.num_terms(), 2);
        assert_eq!(
            crate::diffalg::text::to_text(&s),
            "-3/2*h'^-2*h''^2 + h'^-1*h^(3)"
        );
    }

    #[test]
    fn schwarzian_kills_affine_maps() {
        let s = schwarzian_symbolic(Symbol::H);
        let mut bindings = BTreeMap::new();
        bindings.insert(ind(Symbol::H, 1), 2.0);
        bindings.insert(ind(Symbol::H, 2), 0.0);
        bindings.insert(ind(Symbol::H, 3), 0.0);
        assert_eq!(s.evaluate(&bindings).unwrap(), 0.0);
    }

    #[test]
    fn schwarzian_all_ones_probe() {
        // binding every derivative to e gives -3/2 + 1 = -1/2
        let s = schwarzian_symbolic(Symbol::H);
        let e = std::f64::consts::E;
        let mut bindings = BTreeMap::new();
        for order in 1..=3 {
            bindings.insert(ind(Symbol::H, order), e);
        }
        assert!((s.evaluate(&bindings).unwrap() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn schwarzian_numeric_agrees_with_closed_form() {
        // S(e^x) = -1/2 everywhere
        let f = ClosedFormFn::exp_scaled(1.0, (0.0, 1.0));
        for &x in &sample_points((0.0, 1.0), 5) {
            assert!((schwarzian_numeric(&f, x).unwrap() + 0.5).abs() < 1e-12);
        }
        // a critical point (here x = 0 of x^2) is rejected
        let sq = ClosedFormFn::poly(vec![0.0, 0.0, 1.0], (-1.0, 1.0));
        assert!(matches!(
            schwarzian_numeric(&sq, 0.0),
            Err(NumericError::Vanishes { .. })
        ));
    }

    #[test]
    fn source_coefficient_is_half_the_schwarzian_of_the_primitive() {
        let diff = verify_schwarzian_source_identity();
        assert!(diff.is_zero(), "expected zero, got {diff}");
        // negative control: against 2 A(r) the same pipeline leaves a residue
        let wrong = &diff - &source_coefficient(Symbol::R);
        assert!(!wrong.is_zero());
        // spot-check the zero polynomial numerically at pseudorandom bindings
        for i in 0..10 {
            let t = 0.3 + 0.17 * f64::from(i);
            let mut bindings = BTreeMap::new();
            for order in 0..=2 {
                bindings.insert(ind(Symbol::R, order), (1.0 + t).powi(order as i32 + 1));
            }
            assert!(diff.evaluate(&bindings).unwrap().abs() <= 1e-12);
        }
    }

    #[test]
    fn canonical_identity_holds_for_small_orders() {
        for n in [2, 3, 5] {
            let diff = verify_canonical_identity(n);
            assert!(diff.is_zero(), "canonical identity failed at n = {n}: {diff}");
        }
    }

    #[test]
    fn equivalence_map_validates_its_data() {
        let u = ClosedFormFn::exp_scaled(1.0, (0.0, 1.0));
        assert!(matches!(
            EquivalenceMap::new(1, 1.0, u.clone()),
            Err(NumericError::OrderTooSmall { .. })
        ));
        assert!(matches!(
            EquivalenceMap::new(3, 0.0, u.clone()),
            Err(NumericError::BadConstant { .. })
        ));
        assert!(matches!(
            EquivalenceMap::with_anchor(3, 1.0, u.clone(), 2.0),
            Err(NumericError::OutsideInterval { .. })
        ));
        // sin vanishes at the left end of [0, 1]
        let sin = ClosedFormFn::sin_scaled(1.0, (0.0, 1.0));
        assert!(matches!(
            EquivalenceMap::new(3, 1.0, sin),
            Err(NumericError::Vanishes { .. })
        ));
        let map = EquivalenceMap::new(4, 2.0, u).unwrap();
        assert_eq!(map.anchor(), 0.0);
        assert!(matches!(
            map_canonical_solution(&map, 4, 0.5),
            Err(NumericError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn map_reproduces_monomial_solutions_for_trivial_u() {
        // u = 1: h(x) = x - x0, so k = 2, n = 4, x = 3 gives x^2 = 9
        let one = ClosedFormFn::constant(1.0, (0.0, 4.0));
        let map = EquivalenceMap::new(4, 1.0, one).unwrap();
        let v = map_canonical_solution(&map, 2, 3.0).unwrap();
        assert!((v - 9.0).abs() <= 1e-12, "got {v}");
    }

    #[test]
    fn map_k_zero_is_the_power_of_u() {
        let u = ClosedFormFn::cos_scaled(1.0, (0.0, 1.0));
        let map = EquivalenceMap::new(5, 4.0, u.clone()).unwrap();
        for &x in &sample_points((0.0, 1.0), 5) {
            let v = map_canonical_solution(&map, 0, x).unwrap();
            assert!((v - u.eval(x).powi(4) / 4.0).abs() <= 1e-14);
        }
    }

    #[test]
    fn map_matches_the_exponential_benchmark() {
        // u = e^x, n = 2, k = 1: y(0.5) = e^0.5 (1 - e^-1)/2
        let u = ClosedFormFn::exp_scaled(1.0, (0.0, 1.0));
        let map = EquivalenceMap::new(2, 1.0, u).unwrap();
        let expected = 0.5f64.exp() * (1.0 - (-1.0f64).exp()) / 2.0;
        let v = map_canonical_solution(&map, 1, 0.5).unwrap();
        assert!((v - expected).abs() <= 1e-9, "got {v}, expected {expected}");
    }

    #[test]
    fn mapped_solutions_satisfy_the_generated_equation() {
        // u = e^x parametrizes q = -1; the mapped canonical solutions must
        // line up with the solution-basis oracles and solve Theta_n.
        let interval = (0.0, 1.0);
        let u = ClosedFormFn::exp_scaled(1.0, interval);
        let q = source_q_from(&u).unwrap();
        let pts = sample_points(interval, 20);
        for n in [2u32, 3, 4] {
            let ode = generate_maxsym(n).unwrap();
            let basis = basis_from_u_anchored(&u, n, 0.0).unwrap();
            let map = EquivalenceMap::with_anchor(n, 1.0, u.clone(), 0.0).unwrap();
            for k in 0..n {
                let entry = basis.entry(k as usize);
                for &x in &pts {
                    let mapped = map_canonical_solution(&map, k, x).unwrap();
                    assert!(
                        (mapped - entry.eval(x)).abs() <= 1e-10 * (1.0 + entry.eval(x).abs()),
                        "map/basis mismatch at n={n}, k={k}, x={x}"
                    );
                }
                assert!(residual(&ode, &q, entry, &pts).unwrap() <= 1e-8);
            }
        }
    }

    proptest! {
        #[test]
        fn mobius_maps_have_zero_schwarzian(
            a in 1.0f64..2.0,
            b in 1.0f64..2.0,
            c in 1.0f64..2.0,
            d in 1.0f64..2.0,
        ) {
            prop_assume!((a * d - b * c).abs() > 1e-3);
            let f = ClosedFormFn::mobius(a, b, c, d, (0.0, 1.0)).unwrap();
            for &x in &sample_points((0.0, 1.0), 5) {
                let s = schwarzian_numeric(&f, x).unwrap();
                prop_assert!(s.abs() <= 1e-10, "S = {s} at x = {x}");
            }
        }
    }
}
