//! Solution bases of the generated equations: the iterated-primitive
//! family u^(n-1) I^k, the two-solution family u^(n-1-k) v^k, the
//! symbolic proof that the latter solves Theta_n, and the second-order
//! class solved in closed form by a square root and two primitives.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::diffalg::{
    build_rule_table, coeff_int, coeff_ratio, ind, reduce_fixpoint, DiffAlgError, DiffPoly,
    Indeterminate, LaurentMonomial, PowerProduct, RewriteRule, RuleTable, Symbol,
};
use crate::itergen::{generate_maxsym, source_coefficient, u_source_seed, LinearOdeForm};
use crate::numeval::{
    quadrature_fn, require_nonvanishing, require_positive, residual, sample_points, ClosedFormFn,
    NumericError, QUADRATURE_TOL,
};

/// How a basis was constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisProvenance {
    /// y_k = u^(n-1) I^k with I the anchored primitive of u^-2.
    FromU,
    /// y_k = u^(n-1-k) v^k from two independent source solutions.
    FromUv,
    /// The second-order closed-form class sqrt(r) J^j E.
    Ermakov,
}

/// An ordered basis of n solutions, each with derivative oracles up to
/// order n, all sharing one working interval.
#[derive(Debug, Clone)]
pub struct SolutionBasis {
    n: u32,
    entries: Vec<ClosedFormFn>,
    provenance: BasisProvenance,
    interval: (f64, f64),
}

impl SolutionBasis {
    pub fn order(&self) -> u32 {
        self.n
    }

    pub fn entries(&self) -> &[ClosedFormFn] {
        &self.entries
    }

    pub fn entry(&self, k: usize) -> &ClosedFormFn {
        &self.entries[k]
    }

    pub fn provenance(&self) -> BasisProvenance {
        self.provenance
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    /// Worst relative residual of any entry against a q-only equation.
    pub fn max_residual(
        &self,
        ode: &LinearOdeForm,
        q: &ClosedFormFn,
        points: &[f64],
    ) -> Result<f64, NumericError> {
        let mut worst: f64 = 0.0;
        for entry in &self.entries {
            worst = worst.max(residual(ode, q, entry, points)?);
        }
        Ok(worst)
    }

    /// Finiteness of all oracles and a nonzero Wronskian at three
    /// interior probes — every constructor runs this before returning.
    fn check_finite_and_independent(&self) -> Result<(), NumericError> {
        for &x in &sample_points(self.interval, 3) {
            for entry in &self.entries {
                for order in 0..=self.n {
                    let v = entry.deriv(order, x);
                    if !v.is_finite() {
                        return Err(NumericError::NonFinite {
                            label: entry.label().to_string(),
                            order,
                            x,
                        });
                    }
                }
            }
            let w = wronskian_numeric(self, x)?;
            if w == 0.0 || !w.is_finite() {
                return Err(NumericError::BasisWronskianZero { x });
            }
        }
        Ok(())
    }
}

/// Builds a ClosedFormFn whose derivative oracles come from repeated
/// symbolic differentiation of `expr` under `rules`, with indeterminates
/// bound numerically per evaluation point.
fn symbolic_entry(
    label: String,
    interval: (f64, f64),
    expr: DiffPoly,
    rules: &RuleTable,
    max_order: u32,
    binder: Arc<dyn Fn(Indeterminate, f64) -> f64 + Send + Sync>,
) -> Result<ClosedFormFn, DiffAlgError> {
    let mut derivs = Vec::with_capacity(max_order as usize + 1);
    derivs.push(reduce_fixpoint(&expr, rules)?);
    for m in 0..max_order as usize {
        derivs.push(reduce_fixpoint(&derivs[m].total_derivative(), rules)?);
    }
    let needed: Vec<Vec<Indeterminate>> = derivs
        .iter()
        .map(|d| d.indeterminates().into_iter().collect())
        .collect();
    Ok(ClosedFormFn::from_fn(label, interval, max_order, move |order, x| {
        let mut bindings = BTreeMap::new();
        for &i in &needed[order as usize] {
            bindings.insert(i, binder(i, x));
        }
        derivs[order as usize]
            .evaluate(&bindings)
            .expect("entry bindings were validated at construction")
    }))
}

/// The basis y_k = u^(n-1) I(x)^k, k = 0..n-1, where I is the primitive
/// of u^-2 anchored at the left end of the interval.
pub fn basis_from_u(u: &ClosedFormFn, n: u32) -> Result<SolutionBasis, NumericError> {
    basis_from_u_anchored(u, n, u.interval().0)
}

/// Same basis with an explicit anchor for the primitive.
pub fn basis_from_u_anchored(
    u: &ClosedFormFn,
    n: u32,
    x0: f64,
) -> Result<SolutionBasis, NumericError> {
    if n < 1 {
        return Err(NumericError::OrderTooSmall { min: 1, got: n });
    }
    u.require_order(n)?;
    u.require_inside(x0)?;
    require_nonvanishing(u)?;
    let interval = u.interval();
    // Pre-flight the primitive out to both interval ends so the entry
    // kernels can treat quadrature failure as unreachable.
    for target in [interval.0, interval.1] {
        let uu = u.clone();
        quadrature_fn(move |t| uu.eval(t).powi(-2), x0, target, QUADRATURE_TOL)?;
    }
    let binder: Arc<dyn Fn(Indeterminate, f64) -> f64 + Send + Sync> = {
        let u = u.clone();
        Arc::new(move |i: Indeterminate, x: f64| match i.base {
            Symbol::U => u.deriv(i.order, x),
            Symbol::I => {
                let uu = u.clone();
                quadrature_fn(move |t| uu.eval(t).powi(-2), x0, x, QUADRATURE_TOL)
                    .expect("primitive was pre-flighted at construction")
            }
            other => unreachable!("unexpected symbol {other:?} in a from-u entry"),
        })
    };
    let rules = RuleTable::single(
        RewriteRule::new(
            ind(Symbol::I, 1),
            DiffPoly::monomial(coeff_int(1), &[(ind(Symbol::U, 0), -2)]),
        )
        .expect("I' -> u^-2 is a valid rule"),
    );
    let mut entries = Vec::with_capacity(n as usize);
    for k in 0..n {
        let expr = DiffPoly::monomial(
            coeff_int(1),
            &[
                (ind(Symbol::U, 0), n as i32 - 1),
                (ind(Symbol::I, 0), k as i32),
            ],
        );
        let label = format!("u^{}*I^{} (u = {})", n - 1, k, u.label());
        entries.push(symbolic_entry(label, interval, expr, &rules, n, binder.clone())?);
    }
    let basis = SolutionBasis {
        n,
        entries,
        provenance: BasisProvenance::FromU,
        interval,
    };
    basis.check_finite_and_independent()?;
    Ok(basis)
}

fn overlap(a: (f64, f64), b: (f64, f64)) -> Result<(f64, f64), NumericError> {
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    if lo < hi {
        Ok((lo, hi))
    } else {
        Err(NumericError::DisjointIntervals)
    }
}

const SAME_SOURCE_TOL: f64 = 1e-8;
const PAIR_WRONSKIAN_TOL: f64 = 1e-8;

/// The basis y_k = u^(n-1-k) v^k, k = 0..n-1, from two independent
/// solutions of one source equation. Construction verifies that u and v
/// really share a source (u'' v = u v'' up to 1e-8 relatively) and that
/// their pair Wronskian is a nonzero constant.
pub fn basis_from_uv(
    u: &ClosedFormFn,
    v: &ClosedFormFn,
    n: u32,
) -> Result<SolutionBasis, NumericError> {
    if n < 1 {
        return Err(NumericError::OrderTooSmall { min: 1, got: n });
    }
    u.require_order(n.max(2))?;
    v.require_order(n.max(2))?;
    let interval = overlap(u.interval(), v.interval())?;

    let mut worst: f64 = 0.0;
    for &x in &sample_points(interval, 20) {
        let a = u.deriv(2, x) * v.eval(x);
        let b = u.eval(x) * v.deriv(2, x);
        let den = a.abs() + b.abs();
        if den > 0.0 {
            worst = worst.max((a - b).abs() / den);
        }
    }
    if worst > SAME_SOURCE_TOL {
        return Err(NumericError::NotASourcePair {
            residual: worst,
            tolerance: SAME_SOURCE_TOL,
        });
    }

    let probes = sample_points(interval, 3);
    let pair_w = |x: f64| u.eval(x) * v.deriv(1, x) - u.deriv(1, x) * v.eval(x);
    let w0 = pair_w(probes[0]);
    if w0 == 0.0 || !w0.is_finite() {
        return Err(NumericError::WronskianZero { x: probes[0] });
    }
    for &x in &probes[1..] {
        let w = pair_w(x);
        if (w - w0).abs() > PAIR_WRONSKIAN_TOL * w0.abs().max(1.0) {
            return Err(NumericError::WronskianNotConstant { w0, w, x });
        }
    }

    let rules = RuleTable::new(Vec::new()).expect("empty table");
    let binder: Arc<dyn Fn(Indeterminate, f64) -> f64 + Send + Sync> = {
        let u = u.clone();
        let v = v.clone();
        Arc::new(move |i: Indeterminate, x: f64| match i.base {
            Symbol::U => u.deriv(i.order, x),
            Symbol::V => v.deriv(i.order, x),
            other => unreachable!("unexpected symbol {other:?} in a from-uv entry"),
        })
    };
    let mut entries = Vec::with_capacity(n as usize);
    for k in 0..n {
        let expr = DiffPoly::monomial(
            coeff_int(1),
            &[
                (ind(Symbol::U, 0), (n - 1 - k) as i32),
                (ind(Symbol::V, 0), k as i32),
            ],
        );
        let label = format!("u^{}*v^{} (u = {}, v = {})", n - 1 - k, k, u.label(), v.label());
        entries.push(symbolic_entry(label, interval, expr, &rules, n, binder.clone())?);
    }
    let basis = SolutionBasis {
        n,
        entries,
        provenance: BasisProvenance::FromUv,
        interval,
    };
    basis.check_finite_and_independent()?;
    Ok(basis)
}

/// The n-solution basis built directly from a positive coefficient
/// function r via u = sqrt(r).
pub fn nth_basis_from_r(r: &ClosedFormFn, n: u32) -> Result<SolutionBasis, NumericError> {
    let u = ClosedFormFn::sqrt_of(r)?;
    basis_from_u(&u, n)
}

const ERMAKOV_RESIDUAL_TOL: f64 = 1e-8;

/// Closed-form fundamental pair of the second-order class
/// y'' + B y' + (A(r) + B^2/4 + B'/2) y = 0 with r > 0:
/// y_j = sqrt(r) J^j E for j = 0, 1, where J is the anchored primitive
/// of 1/r and E = exp(-1/2 integral of B). Construction verifies the
/// pair against the equation numerically before returning it.
pub fn ermakov_basis(r: &ClosedFormFn, b: &ClosedFormFn) -> Result<SolutionBasis, NumericError> {
    r.require_order(2)?;
    b.require_order(1)?;
    let interval = overlap(r.interval(), b.interval())?;
    require_positive(r)?;
    let u = ClosedFormFn::sqrt_of(r)?;
    let x0 = interval.0;

    for target in [interval.0, interval.1] {
        let rr = r.clone();
        quadrature_fn(move |t| 1.0 / rr.eval(t), x0, target, QUADRATURE_TOL)?;
        let bb = b.clone();
        quadrature_fn(move |t| bb.eval(t), x0, target, QUADRATURE_TOL)?;
    }

    let binder: Arc<dyn Fn(Indeterminate, f64) -> f64 + Send + Sync> = {
        let u = u.clone();
        let r = r.clone();
        let b = b.clone();
        Arc::new(move |i: Indeterminate, x: f64| match i.base {
            Symbol::U => u.deriv(i.order, x),
            Symbol::B => b.deriv(i.order, x),
            Symbol::J => {
                let rr = r.clone();
                quadrature_fn(move |t| 1.0 / rr.eval(t), x0, x, QUADRATURE_TOL)
                    .expect("primitive of 1/r was pre-flighted at construction")
            }
            Symbol::E => {
                let bb = b.clone();
                let integral = quadrature_fn(move |t| bb.eval(t), x0, x, QUADRATURE_TOL)
                    .expect("primitive of B was pre-flighted at construction");
                (-0.5 * integral).exp()
            }
            other => unreachable!("unexpected symbol {other:?} in an Ermakov entry"),
        })
    };

    // J' = 1/r = u^-2 and E' = -(1/2) B E close the derivative ladder.
    let mut rules = RuleTable::single(
        RewriteRule::new(
            ind(Symbol::J, 1),
            DiffPoly::monomial(coeff_int(1), &[(ind(Symbol::U, 0), -2)]),
        )
        .expect("J' -> u^-2 is a valid rule"),
    );
    rules
        .push(
            RewriteRule::new(
                ind(Symbol::E, 1),
                DiffPoly::monomial(
                    coeff_ratio(-1, 2),
                    &[(ind(Symbol::B, 0), 1), (ind(Symbol::E, 0), 1)],
                ),
            )
            .expect("E' -> -(1/2) B E is a valid rule"),
        )
        .expect("distinct targets");

    let mut entries = Vec::with_capacity(2);
    for j in 0..2u32 {
        let expr = DiffPoly::monomial(
            coeff_int(1),
            &[
                (ind(Symbol::U, 0), 1),
                (ind(Symbol::J, 0), j as i32),
                (ind(Symbol::E, 0), 1),
            ],
        );
        let label = format!("sqrt(r)*J^{} * E (r = {}, B = {})", j, r.label(), b.label());
        entries.push(symbolic_entry(label, interval, expr, &rules, 2, binder.clone())?);
    }

    let basis = SolutionBasis {
        n: 2,
        entries,
        provenance: BasisProvenance::Ermakov,
        interval,
    };
    // Verify the displayed equation before handing the basis out.
    let worst = ermakov_residual(r, b, &basis, &sample_points(interval, 20))?;
    if worst > ERMAKOV_RESIDUAL_TOL {
        return Err(NumericError::ResidualTooLarge {
            residual: worst,
            tolerance: ERMAKOV_RESIDUAL_TOL,
        });
    }
    basis.check_finite_and_independent()?;
    Ok(basis)
}

/// Worst relative residual of the basis entries against the displayed
/// standard-form equation y'' + B y' + (A(r) + B^2/4 + B'/2) y = 0. The
/// denominator uses the magnitudes of A(r)'s terms before cancellation,
/// so coefficient values that are pure rounding noise (e.g. A(x^2) = 0
/// up to one ulp) do not masquerade as genuine residual.
pub fn ermakov_residual(
    r: &ClosedFormFn,
    b: &ClosedFormFn,
    basis: &SolutionBasis,
    points: &[f64],
) -> Result<f64, NumericError> {
    if points.is_empty() {
        return Err(NumericError::NoPoints);
    }
    r.require_order(2)?;
    b.require_order(1)?;
    let a_of_r = source_coefficient(Symbol::R);
    let mut worst: f64 = 0.0;
    for &x in points {
        r.require_inside(x)?;
        b.require_inside(x)?;
        let mut bindings = BTreeMap::new();
        for order in 0..=2 {
            bindings.insert(ind(Symbol::R, order), r.deriv(order, x));
        }
        let mut a_val = 0.0;
        let mut a_mag = 0.0;
        for term in a_of_r.terms() {
            let v = DiffPoly::from_terms(vec![term.clone()])
                .evaluate(&bindings)
                .map_err(NumericError::from)?;
            a_val += v;
            a_mag += v.abs();
        }
        let b_val = b.eval(x);
        let b_deriv = b.deriv(1, x);
        let c2 = a_val + b_val * b_val / 4.0 + b_deriv / 2.0;
        let c2_mag = a_mag + b_val * b_val / 4.0 + b_deriv.abs() / 2.0;
        for entry in basis.entries() {
            entry.require_inside(x)?;
            let t2 = entry.deriv(2, x);
            let t1 = b_val * entry.deriv(1, x);
            let t0 = c2 * entry.eval(x);
            let den = t2.abs() + t1.abs() + c2_mag * entry.eval(x).abs();
            if den > 0.0 {
                worst = worst.max((t2 + t1 + t0).abs() / den);
            }
        }
    }
    Ok(worst)
}

/// The Wronskian determinant of the basis at x, from the entries'
/// derivative oracles (LU factorization with partial pivoting).
pub fn wronskian_numeric(basis: &SolutionBasis, x: f64) -> Result<f64, NumericError> {
    let n = basis.n as usize;
    let mut matrix = vec![vec![0.0f64; n]; n];
    for (k, entry) in basis.entries.iter().enumerate() {
        entry.require_inside(x)?;
        for (j, row) in matrix.iter_mut().enumerate() {
            row[k] = entry.deriv(j as u32, x);
        }
    }
    Ok(det_in_place(matrix))
}

#[allow(clippy::needless_range_loop)] // index form mirrors the textbook elimination
fn det_in_place(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut det = 1.0;
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if m[row][col].abs() > m[pivot][col].abs() {
                pivot = row;
            }
        }
        if m[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col];
        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            if factor != 0.0 {
                for c in col..n {
                    m[row][c] -= factor * m[col][c];
                }
            }
        }
    }
    det
}

/// 1! 2! ... (n-1)!, the Wronskian of the canonical monomial basis and
/// of every basis produced here whose pair Wronskian is 1.
pub fn factorial_product(n: u32) -> f64 {
    let mut acc = 1.0;
    let mut fact = 1.0;
    for j in 1..n {
        fact *= f64::from(j);
        acc *= fact;
    }
    acc
}

/// Maximum order supported by the symbolic basis verification.
pub const VERIFY_BASIS_MAX_ORDER: u32 = 8;

/// Symbolic proof that y = u^(n-1-k) v^k solves Theta_n whenever u and v
/// solve the source equation: substitutes the candidate into the
/// generated equation, reduces by u'' -> -q u and v'' -> -q v, then
/// eliminates v' via v' -> (W + u' v) u^-1 with W a fresh constant
/// symbol. Returns the final polynomial, which must be zero identically
/// in u, u', v, q, ..., W.
pub fn verify_basis_symbolic(n: u32, k: u32) -> DiffPoly {
    assert!(
        (2..=VERIFY_BASIS_MAX_ORDER).contains(&n),
        "symbolic basis verification supports 2 <= n <= {VERIFY_BASIS_MAX_ORDER}, got {n}"
    );
    assert!(k < n, "index k = {k} out of range for order n = {n}");
    let ode = generate_maxsym(n).expect("Theta_n is available for verifiable orders");

    let mut table = build_rule_table(Symbol::U, 2, u_source_seed()).expect("u-source table");
    let v_seed = RewriteRule::new(
        ind(Symbol::V, 2),
        DiffPoly::monomial(coeff_int(-1), &[(ind(Symbol::Q, 0), 1), (ind(Symbol::V, 0), 1)]),
    )
    .expect("v'' -> -q v is a valid rule");
    table
        .extend(build_rule_table(Symbol::V, 2, v_seed).expect("v-source table"))
        .expect("u and v targets are distinct");

    let candidate = DiffPoly::monomial(
        coeff_int(1),
        &[
            (ind(Symbol::U, 0), (n - 1 - k) as i32),
            (ind(Symbol::V, 0), k as i32),
        ],
    );
    let mut ladder = Vec::with_capacity(n as usize + 1);
    ladder.push(candidate);
    for m in 0..n as usize {
        let next = reduce_fixpoint(&ladder[m].total_derivative(), &table)
            .expect("source reduction terminates");
        ladder.push(next);
    }

    let mut residue = DiffPoly::zero();
    for (j, c) in ode.coefficients().iter().enumerate() {
        residue = residue + c * &ladder[n as usize - j];
    }

    let w_elim = RuleTable::single(
        RewriteRule::new(
            ind(Symbol::V, 1),
            DiffPoly::from_terms(vec![
                LaurentMonomial::new(
                    coeff_int(1),
                    PowerProduct::from_factors(&[(ind(Symbol::W, 0), 1), (ind(Symbol::U, 0), -1)]),
                ),
                LaurentMonomial::new(
                    coeff_int(1),
                    PowerProduct::from_factors(&[
                        (ind(Symbol::U, 1), 1),
                        (ind(Symbol::V, 0), 1),
                        (ind(Symbol::U, 0), -1),
                    ]),
                ),
            ]),
        )
        .expect("v' -> (W + u' v) u^-1 is a valid rule"),
    );
    reduce_fixpoint(&residue, &w_elim).expect("Wronskian elimination terminates")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeval::source_q_from;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "expected {b}, got {a} (tol {tol})");
    }

    fn binom(n: u32, k: u32) -> f64 {
        let mut acc = 1.0;
        for i in 0..k.min(n - k) {
            acc = acc * f64::from(n - i) / f64::from(i + 1);
        }
        acc
    }

    #[test]
    fn trivial_u_gives_the_monomial_basis() {
        let one = ClosedFormFn::constant(1.0, (0.0, 2.0));
        let basis = basis_from_u(&one, 3).unwrap();
        assert_eq!(basis.order(), 3);
        assert_eq!(basis.provenance(), BasisProvenance::FromU);
        for &x in &sample_points((0.0, 2.0), 7) {
            assert_close(basis.entry(0).eval(x), 1.0, 1e-12);
            assert_close(basis.entry(1).eval(x), x, 1e-12);
            assert_close(basis.entry(2).eval(x), x * x, 1e-10);
            // Wronskian of {1, x, x^2} is 1! * 2! = 2
            assert_close(wronskian_numeric(&basis, x).unwrap(), 2.0, 1e-8);
        }
        assert_close(factorial_product(3), 2.0, 0.0);
    }

    #[test]
    fn exponential_u_basis_solves_theta_n() {
        let interval = (0.0, 1.0);
        let u = ClosedFormFn::exp_scaled(1.0, interval);
        let q = source_q_from(&u).unwrap();
        let pts = sample_points(interval, 20);
        for n in [2u32, 4] {
            let ode = generate_maxsym(n).unwrap();
            let basis = basis_from_u(&u, n).unwrap();
            let worst = basis.max_residual(&ode, &q, &pts).unwrap();
            assert!(worst <= 1e-8, "residual {worst} at n = {n}");
            // pair Wronskian of (u, u I) is exactly 1
            for &x in &sample_points(interval, 3) {
                assert_close(
                    wronskian_numeric(&basis, x).unwrap(),
                    factorial_product(n),
                    1e-8 * factorial_product(n),
                );
            }
        }
        // closed form at n = 2: entries e^x and e^x (1 - e^-2x) / 2
        let basis = basis_from_u(&u, 2).unwrap();
        for &x in &pts {
            assert_close(basis.entry(0).eval(x), x.exp(), 1e-12);
            assert_close(
                basis.entry(1).eval(x),
                x.exp() * (1.0 - (-2.0 * x).exp()) / 2.0,
                1e-9,
            );
        }
    }

    #[test]
    fn entry_oracles_survive_fd_validation() {
        let u = ClosedFormFn::cos_scaled(1.0, (0.0, 1.0));
        let basis = basis_from_u(&u, 3).unwrap();
        for entry in basis.entries() {
            entry.validate().unwrap_or_else(|e| panic!("{}: {e}", entry.label()));
        }
    }

    #[test]
    fn uv_basis_matches_trig_powers() {
        let interval = (0.0, 1.0);
        let u = ClosedFormFn::cos_scaled(1.0, interval);
        let v = ClosedFormFn::sin_scaled(1.0, interval);
        let q1 = ClosedFormFn::constant(1.0, interval);
        let pts = sample_points(interval, 20);
        for n in [2u32, 3, 4] {
            let ode = generate_maxsym(n).unwrap();
            let basis = basis_from_uv(&u, &v, n).unwrap();
            assert_eq!(basis.provenance(), BasisProvenance::FromUv);
            let worst = basis.max_residual(&ode, &q1, &pts).unwrap();
            assert!(worst <= 1e-8, "residual {worst} at n = {n}");
            for &x in &sample_points(interval, 3) {
                assert_close(
                    wronskian_numeric(&basis, x).unwrap(),
                    factorial_product(n),
                    1e-8 * factorial_product(n).max(1.0),
                );
            }
        }
        let basis = basis_from_uv(&u, &v, 3).unwrap();
        for &x in &pts {
            assert_close(basis.entry(1).eval(x), x.cos() * x.sin(), 1e-12);
            assert_close(basis.entry(2).eval(x), x.sin() * x.sin(), 1e-12);
        }
    }

    #[test]
    fn uv_basis_rejects_bad_pairs() {
        let interval = (0.0, 1.0);
        let cos = ClosedFormFn::cos_scaled(1.0, interval);
        let exp = ClosedFormFn::exp_scaled(1.0, interval);
        // different source equations
        assert!(matches!(
            basis_from_uv(&exp, &cos, 3),
            Err(NumericError::NotASourcePair { .. })
        ));
        // proportional pair: Wronskian identically zero
        assert!(matches!(
            basis_from_uv(&cos, &cos.scaled(2.0), 3),
            Err(NumericError::WronskianZero { .. })
        ));
        // disjoint working intervals
        let far = ClosedFormFn::sin_scaled(1.0, (2.0, 3.0));
        assert!(matches!(
            basis_from_uv(&cos, &far, 2),
            Err(NumericError::DisjointIntervals)
        ));
    }

    #[test]
    fn symbolic_verification_collapses_to_zero() {
        for n in 2..=5u32 {
            for k in 0..n {
                let residue = verify_basis_symbolic(n, k);
                assert!(
                    residue.is_zero(),
                    "nonzero residue at n = {n}, k = {k}: {residue}"
                );
            }
        }
    }

    #[test]
    #[should_panic(expected = "symbolic basis verification")]
    fn symbolic_verification_rejects_large_orders() {
        let _ = verify_basis_symbolic(9, 0);
    }

    #[test]
    #[should_panic(expected = "out of range")]
    fn symbolic_verification_rejects_bad_index() {
        let _ = verify_basis_symbolic(4, 4);
    }

    #[test]
    fn nth_basis_from_r_factors_through_sqrt() {
        let interval = (0.0, 1.0);
        let r = ClosedFormFn::exp_scaled(2.0, interval);
        let direct = nth_basis_from_r(&r, 3).unwrap();
        let u = ClosedFormFn::exp_scaled(1.0, interval);
        let via_u = basis_from_u(&u, 3).unwrap();
        for &x in &sample_points(interval, 9) {
            for k in 0..3 {
                assert_close(direct.entry(k).eval(x), via_u.entry(k).eval(x), 1e-9);
            }
        }
        // r must be strictly positive
        let signed = ClosedFormFn::poly(vec![-0.5, 1.0], (0.0, 1.0));
        assert!(matches!(
            nth_basis_from_r(&signed, 2),
            Err(NumericError::NonPositive { .. })
        ));
    }

    #[test]
    fn ermakov_class_is_solved_in_closed_form() {
        // r = 1 + x^2 with damping B = sin x: construction itself checks
        // the residual of y'' + B y' + (A(r) + B^2/4 + B'/2) y = 0.
        let interval = (0.0, 1.0);
        let r = ClosedFormFn::poly(vec![1.0, 0.0, 1.0], interval);
        let b = ClosedFormFn::sin_scaled(1.0, interval);
        let basis = ermakov_basis(&r, &b).unwrap();
        assert_eq!(basis.order(), 2);
        assert_eq!(basis.provenance(), BasisProvenance::Ermakov);
        for &x in &sample_points(interval, 3) {
            assert!(wronskian_numeric(&basis, x).unwrap().abs() > 0.0);
        }
        for entry in basis.entries() {
            entry.validate().unwrap();
        }
    }

    #[test]
    fn ermakov_power_law_reduces_to_straight_lines() {
        // r = x^2 on [1, 2] with B = 0: A(r) = 0, so the equation is
        // y'' = 0 and the entries are x and x - 1 (anchor at 1).
        let interval = (1.0, 2.0);
        let r = ClosedFormFn::power(2.0, interval).unwrap();
        let b = ClosedFormFn::constant(0.0, interval);
        let basis = ermakov_basis(&r, &b).unwrap();
        for &x in &sample_points(interval, 9) {
            assert_close(basis.entry(0).eval(x), x, 1e-10);
            assert_close(basis.entry(1).eval(x), x - 1.0, 1e-9);
        }
    }

    #[test]
    fn ermakov_exponential_with_constant_damping() {
        let interval = (0.0, 1.0);
        let r = ClosedFormFn::exp_scaled(2.0, interval);
        let b = ClosedFormFn::constant(1.0, interval);
        let basis = ermakov_basis(&r, &b).unwrap();
        // y_0 = e^x e^(-x/2) = e^(x/2)
        for &x in &sample_points(interval, 9) {
            assert_close(basis.entry(0).eval(x), (0.5 * x).exp(), 1e-9);
        }
    }

    #[test]
    fn ermakov_rejects_sign_changing_r() {
        let interval = (0.0, 1.0);
        let b = ClosedFormFn::constant(0.0, interval);
        let bad = ClosedFormFn::poly(vec![-0.5, 1.0], interval);
        assert!(matches!(
            ermakov_basis(&bad, &b),
            Err(NumericError::NonPositive { .. })
        ));
    }

    #[test]
    fn change_of_anchor_spans_the_same_space() {
        // Re-anchoring shifts the primitive by a constant, so each entry
        // of the re-anchored basis is a fixed linear combination of the
        // original entries; verify by least squares over a sample grid.
        let interval = (0.0, 1.0);
        let u = ClosedFormFn::exp_scaled(1.0, interval);
        let n = 4u32;
        let a = basis_from_u_anchored(&u, n, 0.0).unwrap();
        let b = basis_from_u_anchored(&u, n, 0.5).unwrap();
        let xs = sample_points(interval, 25);
        for k in 0..n as usize {
            // normal equations G c = d for b_k = sum_j c_j a_j
            let m = n as usize;
            let mut g = vec![vec![0.0f64; m]; m];
            let mut d = vec![0.0f64; m];
            for &x in &xs {
                let row: Vec<f64> = (0..m).map(|j| a.entry(j).eval(x)).collect();
                let target = b.entry(k).eval(x);
                for i in 0..m {
                    for j in 0..m {
                        g[i][j] += row[i] * row[j];
                    }
                    d[i] += row[i] * target;
                }
            }
            let c = solve_dense(g, d);
            let mut worst: f64 = 0.0;
            for &x in &xs {
                let fit: f64 = (0..m).map(|j| c[j] * a.entry(j).eval(x)).sum();
                let target = b.entry(k).eval(x);
                worst = worst.max((fit - target).abs() / target.abs().max(1.0));
            }
            assert!(worst <= 1e-8, "entry {k} leaves residual {worst}");
            // the combination is the binomial expansion of (I - c)^k
            for (j, cj) in c.iter().enumerate().take(k + 1) {
                let predicted = binom(k as u32, j as u32)
                    * (-quadrature_fn(|t| (-2.0 * t).exp(), 0.0, 0.5, 1e-12).unwrap())
                        .powi((k - j) as i32);
                assert!(
                    (cj - predicted).abs() <= 1e-6 * predicted.abs().max(1.0),
                    "coefficient {j} of entry {k}: got {cj}, predicted {predicted}"
                );
            }
        }
    }

    #[allow(clippy::needless_range_loop)] // index form mirrors the textbook elimination
    fn solve_dense(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Vec<f64> {
        let n = rhs.len();
        for col in 0..n {
            let mut pivot = col;
            for row in col + 1..n {
                if a[row][col].abs() > a[pivot][col].abs() {
                    pivot = row;
                }
            }
            a.swap(pivot, col);
            rhs.swap(pivot, col);
            let diag = a[col][col];
            for row in 0..n {
                if row != col && a[row][col] != 0.0 {
                    let factor = a[row][col] / diag;
                    for c in col..n {
                        let v = a[col][c];
                        a[row][c] -= factor * v;
                    }
                    rhs[row] -= factor * rhs[col];
                }
            }
        }
        (0..n).map(|i| rhs[i] / a[i][i]).collect()
    }
}
