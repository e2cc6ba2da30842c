//! Construction of linear equations of maximal symmetry by operator
//! iteration.
//!
//! The iteration operator is Psi[y] = r y' + s y. Its n-th power expands
//! as Psi^n[y] = sum_j K_n^j y^(n-j); with the normalizing choice
//! s = -(n-1) r'/2 and division by r^n the result is the normal-form
//! equation Phi_n, whose coefficients collapse to polynomials in the
//! source coefficient q = A(r) once r'' is rewritten away, and to the
//! same polynomials via the parametrization r = u^2 with u'' = -q u.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::diffalg::{
    build_rule_table, coeff_int, coeff_ratio, ind, reduce_fixpoint, Coeff, DiffAlgError, DiffPoly,
    Indeterminate, ParseError, RewriteRule, RuleTable, Symbol,
};

/// Errors of the equation-generation layer.
#[derive(Debug, Error)]
pub enum ItergenError {
    #[error("`{op}` requires order >= {min}, got {got}")]
    OrderTooSmall { op: &'static str, min: u32, got: u32 },
    #[error("`{op}` left unreduced symbols {found:?}; the algebra is inconsistent")]
    ResidualSymbols { op: &'static str, found: Vec<String> },
    #[error("intermediate expression grew past the {limit}-term budget")]
    TermBudgetExceeded { limit: usize },
    #[error(transparent)]
    Algebra(#[from] DiffAlgError),
    #[error("ground-truth data corrupted: SHA-256 {actual} != pinned {expected}")]
    GroundTruthChecksum { expected: String, actual: String },
    #[error("ground-truth data unreadable: {0}")]
    GroundTruthParse(#[from] ParseError),
    #[error("invalid linear form: {0}")]
    InvalidForm(String),
}

/// Choice of the second operator coefficient in `Psi = r d/dx + s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsiMode {
    /// Independent symbols r and s.
    Generic,
    /// The normalizing choice s = -(n-1) r'/2 that kills the y^(n-1)
    /// coefficient of the order-n equation.
    Normal,
}

/// Which base symbols an equation's coefficients may mention.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VariableSet {
    /// Free r and s.
    GenericRS,
    /// r only (normal form before source reduction).
    ROnly,
    /// u and/or v (solution parametrization).
    UOnly,
    /// q and constants only (source-reduced normal form).
    QOnly,
}

/// A homogeneous linear ODE `sum_j c_j y^(n-j) = 0` with symbolic
/// coefficients, `c_0` multiplying the highest derivative.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearOdeForm {
    order: u32,
    coefficients: Vec<DiffPoly>,
    variable_set: VariableSet,
}

impl LinearOdeForm {
    /// Builds a form from leading-first coefficients; the variable set is
    /// inferred from the symbols that actually occur.
    pub fn new(order: u32, coefficients: Vec<DiffPoly>) -> Result<Self, ItergenError> {
        if coefficients.len() != order as usize + 1 {
            return Err(ItergenError::InvalidForm(format!(
                "order {order} needs {} coefficients, got {}",
                order + 1,
                coefficients.len()
            )));
        }
        if let Some(j) = coefficients.iter().position(|c| c.mentions_base(Symbol::Y)) {
            return Err(ItergenError::InvalidForm(format!(
                "coefficient {j} mentions the dependent variable"
            )));
        }
        let variable_set = infer_variable_set(&coefficients);
        Ok(LinearOdeForm {
            order,
            coefficients,
            variable_set,
        })
    }

    /// Extracts the form from a polynomial linear in y and its
    /// derivatives up to `order`; fails if anything is left over.
    pub fn from_linear_poly(p: &DiffPoly, order: u32) -> Result<Self, ItergenError> {
        let mut coefficients = Vec::with_capacity(order as usize + 1);
        for j in 0..=order {
            coefficients.push(p.coefficient_of(ind(Symbol::Y, order - j))?);
        }
        let form = LinearOdeForm::new(order, coefficients)?;
        if &form.to_poly() != p {
            return Err(ItergenError::InvalidForm(
                "polynomial is not a linear ODE of the stated order".into(),
            ));
        }
        Ok(form)
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Leading-first coefficient list `[c_0, ..., c_n]`.
    pub fn coefficients(&self) -> &[DiffPoly] {
        &self.coefficients
    }

    /// The coefficient of `y^(n-j)`.
    pub fn coefficient(&self, j: u32) -> &DiffPoly {
        &self.coefficients[j as usize]
    }

    pub fn variable_set(&self) -> VariableSet {
        self.variable_set
    }

    /// Normal form: monic with no y^(n-1) term.
    pub fn is_normal_form(&self) -> bool {
        self.coefficients[0].is_one() && self.order >= 1 && self.coefficients[1].is_zero()
    }

    /// Reassembles `sum_j c_j y^(n-j)`.
    pub fn to_poly(&self) -> DiffPoly {
        let mut acc = DiffPoly::zero();
        for (j, c) in self.coefficients.iter().enumerate() {
            let y = DiffPoly::var(ind(Symbol::Y, self.order - j as u32));
            acc = acc + c * &y;
        }
        acc
    }

    /// Plain-text equation, e.g. `y''' + 4*q*y' + 2*q'*y = 0`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut first = true;
        for (j, c) in self.coefficients.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let ladder = y_ladder_text(self.order - j as u32);
            let (negative, body) = coefficient_piece(c, &ladder);
            if first {
                if negative {
                    out.push('-');
                }
                first = false;
            } else {
                out.push_str(if negative { " - " } else { " + " });
            }
            out.push_str(&body);
        }
        if first {
            out.push('0');
        }
        out.push_str(" = 0");
        out
    }

    /// LaTeX equation, e.g. `y''' + 4 q y' + 2 q' y = 0`.
    pub fn to_latex(&self) -> String {
        let mut out = String::new();
        let mut first = true;
        for (j, c) in self.coefficients.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let ladder = y_ladder_latex(self.order - j as u32);
            let (negative, body) = latex_piece(c, &ladder);
            if first {
                if negative {
                    out.push('-');
                }
                first = false;
            } else {
                out.push_str(if negative { " - " } else { " + " });
            }
            out.push_str(&body);
        }
        if first {
            out.push('0');
        }
        out.push_str(" = 0");
        out
    }

    /// JSON document `{"order": n, "coefficients": [...]}` with exact
    /// rational coefficient strings.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "order": self.order,
            "coefficients": self
                .coefficients
                .iter()
                .map(crate::diffalg::json::to_json)
                .collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, ItergenError> {
        let order = v
            .get("order")
            .and_then(|o| o.as_u64())
            .ok_or_else(|| ItergenError::InvalidForm("missing numeric `order`".into()))?;
        let coeffs = v
            .get("coefficients")
            .and_then(|c| c.as_array())
            .ok_or_else(|| ItergenError::InvalidForm("missing `coefficients` array".into()))?;
        let coefficients = coeffs
            .iter()
            .map(crate::diffalg::json::from_json)
            .collect::<Result<Vec<_>, _>>()?;
        LinearOdeForm::new(order as u32, coefficients)
    }
}

fn infer_variable_set(coefficients: &[DiffPoly]) -> VariableSet {
    let mentions = |s: Symbol| coefficients.iter().any(|c| c.mentions_base(s));
    if mentions(Symbol::S) {
        VariableSet::GenericRS
    } else if mentions(Symbol::R) {
        VariableSet::ROnly
    } else if mentions(Symbol::U) || mentions(Symbol::V) {
        VariableSet::UOnly
    } else {
        VariableSet::QOnly
    }
}

fn y_ladder_text(order: u32) -> String {
    match order {
        0 => "y".into(),
        1 => "y'".into(),
        2 => "y''".into(),
        3 => "y'''".into(),
        k => format!("y^({k})"),
    }
}

fn y_ladder_latex(order: u32) -> String {
    match order {
        0 => "y".into(),
        1 => "y'".into(),
        2 => "y''".into(),
        3 => "y'''".into(),
        k => format!("y^{{({k})}}"),
    }
}

/// Renders one `c * ladder` piece with the sign pulled out when the
/// coefficient is a single term.
fn coefficient_piece(c: &DiffPoly, ladder: &str) -> (bool, String) {
    match c.as_single_term() {
        Some(_) => {
            let (negative, mag) = split_sign(crate::diffalg::text::to_text(c));
            if mag == "1" {
                (negative, ladder.to_string())
            } else {
                (negative, format!("{mag}*{ladder}"))
            }
        }
        None => (false, format!("({})*{ladder}", crate::diffalg::text::to_text(c))),
    }
}

/// LaTeX analogue of `coefficient_piece`.
fn latex_piece(c: &DiffPoly, ladder: &str) -> (bool, String) {
    match c.as_single_term() {
        Some(_) => {
            let (negative, mag) = split_sign(crate::diffalg::latex::to_latex(c));
            if mag == "1" {
                (negative, ladder.to_string())
            } else {
                (negative, format!("{mag} {ladder}"))
            }
        }
        None => (
            false,
            format!("\\left({}\\right) {ladder}", crate::diffalg::latex::to_latex(c)),
        ),
    }
}

fn split_sign(rendered: String) -> (bool, String) {
    match rendered.strip_prefix('-') {
        Some(rest) => (true, rest.to_string()),
        None => (false, rendered),
    }
}

fn binom(n: u32, k: u32) -> Coeff {
    Coeff::from_integer(num_integer::binomial(BigInt::from(n), BigInt::from(k)))
}

/// One application of Psi = r d/dx + s to an expression.
pub fn psi_apply(e: &DiffPoly, r: &DiffPoly, s: &DiffPoly) -> DiffPoly {
    r * &e.total_derivative() + s * e
}

fn r_var() -> DiffPoly {
    DiffPoly::var(ind(Symbol::R, 0))
}

fn s_var() -> DiffPoly {
    DiffPoly::var(ind(Symbol::S, 0))
}

/// s = -(n-1) r'/2, the normalizing second coefficient for order n.
fn normal_s(n: u32) -> DiffPoly {
    DiffPoly::var(ind(Symbol::R, 1)).scale(&coeff_ratio(-(n as i64 - 1), 2))
}

/// Expands Psi^n[y] as a polynomial linear in y, ..., y^(n).
pub fn psi_power(n: u32, mode: PsiMode) -> DiffPoly {
    let r = r_var();
    let s = match mode {
        PsiMode::Generic => s_var(),
        PsiMode::Normal => normal_s(n),
    };
    let mut e = DiffPoly::var(ind(Symbol::Y, 0));
    for _ in 0..n {
        e = psi_apply(&e, &r, &s);
    }
    e
}

/// The coefficients K_n^0, ..., K_n^n read off from the expansion of
/// Psi^n[y] with generic r, s.
pub fn extract_k(n: u32) -> Vec<DiffPoly> {
    assert!(n >= 1, "extract_k needs n >= 1");
    let p = psi_power(n, PsiMode::Generic);
    (0..=n)
        .map(|j| {
            p.coefficient_of(ind(Symbol::Y, n - j))
                .expect("Psi^n[y] is linear in y by construction")
        })
        .collect()
}

/// The same coefficients built independently by the two-term recurrence
/// K_m^j = r K_(m-1)^j + Psi(K_(m-1)^(j-1)), seeded with K_0^0 = 1 and
/// out-of-range entries zero.
pub fn k_recurrence(n: u32) -> Vec<DiffPoly> {
    assert!(n >= 1, "k_recurrence needs n >= 1");
    let (r, s) = (r_var(), s_var());
    let mut row = vec![DiffPoly::one()];
    for _ in 1..=n {
        let mut next = Vec::with_capacity(row.len() + 1);
        for j in 0..=row.len() {
            let carry = if j < row.len() { &r * &row[j] } else { DiffPoly::zero() };
            let lifted = if j >= 1 {
                psi_apply(&row[j - 1], &r, &s)
            } else {
                DiffPoly::zero()
            };
            next.push(carry + lifted);
        }
        row = next;
    }
    row
}

/// The same coefficients built a third way, by the summation identity
/// K_m^j = sum_(k=j)^m r^(m-k) Psi(K_(k-1)^(j-1)) for j >= 1. The j = 0
/// column is r^m directly: every summand of the identity vanishes there
/// under the boundary conventions, so the power formula is the defining
/// value rather than a special case of the sum.
pub fn k_sum_path(n: u32) -> Vec<DiffPoly> {
    assert!(n >= 1, "k_sum_path needs n >= 1");
    let (r, s) = (r_var(), s_var());
    // table[m][j] for 0 <= j <= m <= n, filled in increasing m
    let mut table: Vec<Vec<DiffPoly>> = vec![vec![DiffPoly::one()]];
    for m in 1..=n as usize {
        let mut row = vec![r.powi(m as u32)];
        for j in 1..=m {
            let mut acc = DiffPoly::zero();
            for k in j..=m {
                let prev = &table[k - 1][j - 1];
                acc = acc + r.powi((m - k) as u32) * psi_apply(prev, &r, &s);
            }
            row.push(acc);
        }
        table.push(row);
    }
    table.pop().expect("n >= 1 rows were built")
}

/// Closed forms for the two leading nontrivial coefficients:
///
/// K_n^1 = r^(n-1) (n s + C(n,2) r')
/// K_n^2 = r^(n-2) (C(n,2)(r s' + s^2)
///         + C(n,3)(3 s r' + r r'' + (3n-5)/4 r'^2))
pub fn closed_form_k12(n: u32) -> Result<(DiffPoly, DiffPoly), ItergenError> {
    if n < 2 {
        return Err(ItergenError::OrderTooSmall {
            op: "closed_form_k12",
            min: 2,
            got: n,
        });
    }
    let (r, s) = (r_var(), s_var());
    let rp = DiffPoly::var(ind(Symbol::R, 1));
    let k1 = r.powi(n - 1)
        * (s.scale(&coeff_int(n as i64)) + rp.scale(&binom(n, 2)));
    let inner = (&r * &s.total_derivative() + &s * &s).scale(&binom(n, 2))
        + ((&s * &rp).scale(&coeff_int(3))
            + &r * &DiffPoly::var(ind(Symbol::R, 2))
            + (&rp * &rp).scale(&coeff_ratio(3 * n as i64 - 5, 4)))
        .scale(&binom(n, 3));
    let k2 = r.powi(n - 2) * inner;
    Ok((k1, k2))
}

/// The source-coefficient functional A(f) = (f'^2 - 2 f f'') / (4 f^2),
/// as a Laurent polynomial in derivatives of `base`. For the iteration
/// parameter r, q = A(r) is the coefficient of the source equation
/// y'' + q y = 0.
pub fn source_coefficient(base: Symbol) -> DiffPoly {
    DiffPoly::monomial(coeff_ratio(1, 4), &[(ind(base, 1), 2), (ind(base, 0), -2)])
        + DiffPoly::monomial(coeff_ratio(-1, 2), &[(ind(base, 2), 1), (ind(base, 0), -1)])
}

/// The rewrite seed r'' -> r'^2/(2r) - 2 q r, i.e. the relation q = A(r)
/// solved for the highest derivative.
pub fn r_source_seed() -> RewriteRule {
    let repl = DiffPoly::monomial(coeff_ratio(1, 2), &[(ind(Symbol::R, 1), 2), (ind(Symbol::R, 0), -1)])
        + DiffPoly::monomial(coeff_int(-2), &[(ind(Symbol::Q, 0), 1), (ind(Symbol::R, 0), 1)]);
    RewriteRule::new(ind(Symbol::R, 2), repl).expect("seed lowers the order")
}

/// The rewrite seed u'' -> -q u, i.e. u solves the source equation.
pub fn u_source_seed() -> RewriteRule {
    let repl = DiffPoly::monomial(coeff_int(-1), &[(ind(Symbol::Q, 0), 1), (ind(Symbol::U, 0), 1)]);
    RewriteRule::new(ind(Symbol::U, 2), repl).expect("seed lowers the order")
}

fn ensure_order(op: &'static str, n: u32) -> Result<(), ItergenError> {
    if n < 2 {
        return Err(ItergenError::OrderTooSmall { op, min: 2, got: n });
    }
    Ok(())
}

/// The normal-form equation of order n in terms of r: Psi^n[y] with the
/// normalizing s, divided by r^n. Monic with a vanishing y^(n-1) term.
pub fn phi_n(n: u32) -> Result<LinearOdeForm, ItergenError> {
    ensure_order("phi_n", n)?;
    let p = psi_power(n, PsiMode::Normal).mul_monomial(
        &coeff_int(1),
        &crate::diffalg::PowerProduct::single(ind(Symbol::R, 0), -(n as i32)),
    );
    let form = LinearOdeForm::from_linear_poly(&p, n)?;
    debug_assert!(form.is_normal_form());
    Ok(form)
}

/// Phi_n with every derivative r'', ..., r^(n) rewritten through the
/// source relation q = A(r): all dependence on r cancels and the
/// coefficients become differential polynomials in q alone.
pub fn phi_n_r(n: u32) -> Result<LinearOdeForm, ItergenError> {
    ensure_order("phi_n_r", n)?;
    let base = phi_n(n)?;
    let table = build_rule_table(Symbol::R, n.max(2), r_source_seed())?;
    let mut coefficients = Vec::with_capacity(base.coefficients.len());
    let mut residual: BTreeSet<Indeterminate> = BTreeSet::new();
    for c in &base.coefficients {
        let reduced = reduce_fixpoint(c, &table)?;
        residual.extend(reduced.indeterminates().into_iter().filter(|i| i.base == Symbol::R));
        coefficients.push(reduced);
    }
    if !residual.is_empty() {
        return Err(ItergenError::ResidualSymbols {
            op: "phi_n_r",
            found: residual.into_iter().map(|i| i.to_string()).collect(),
        });
    }
    LinearOdeForm::new(n, coefficients)
}

/// Default term budget for iteration intermediates; far above anything
/// reachable at the CLI's order cap, it exists to fail predictably
/// instead of exhausting memory on forced huge orders.
pub const DEFAULT_TERM_BUDGET: usize = 2_000_000;

/// Theta_n: the normal form built through the parametrization r = u^2,
/// s = -(n-1) u u', with u'' -> -q u rewritten after every iteration
/// step. All powers of u cancel after division by u^(2n), leaving the
/// same q-only coefficients as `phi_n_r`.
pub fn theta_n_u(n: u32) -> Result<LinearOdeForm, ItergenError> {
    theta_n_u_budgeted(n, DEFAULT_TERM_BUDGET)
}

/// `theta_n_u` with an explicit cap on the number of terms any
/// intermediate expression may reach.
pub fn theta_n_u_budgeted(n: u32, term_budget: usize) -> Result<LinearOdeForm, ItergenError> {
    ensure_order("theta_n_u", n)?;
    let u = DiffPoly::var(ind(Symbol::U, 0));
    let up = DiffPoly::var(ind(Symbol::U, 1));
    let r = &u * &u;
    let s = (&u * &up).scale(&coeff_int(-(n as i64 - 1)));
    let table = RuleTable::single(u_source_seed());
    let mut e = DiffPoly::var(ind(Symbol::Y, 0));
    for _ in 0..n {
        e = reduce_fixpoint(&psi_apply(&e, &r, &s), &table)?;
        if e.num_terms() > term_budget {
            return Err(ItergenError::TermBudgetExceeded { limit: term_budget });
        }
    }
    let e = e.mul_monomial(
        &Coeff::from_integer(BigInt::from(1)),
        &crate::diffalg::PowerProduct::single(ind(Symbol::U, 0), -(2 * n as i32)),
    );
    let form = LinearOdeForm::from_linear_poly(&e, n)?;
    let residual: Vec<String> = form
        .coefficients
        .iter()
        .flat_map(|c| c.indeterminates())
        .filter(|i| i.base == Symbol::U)
        .map(|i| i.to_string())
        .collect();
    if !residual.is_empty() {
        return Err(ItergenError::ResidualSymbols {
            op: "theta_n_u",
            found: residual,
        });
    }
    debug_assert!(form.is_normal_form());
    Ok(form)
}

/// The order-n linear equation of maximal symmetry in normal form, with
/// coefficients A_j^n as differential polynomials in the source
/// coefficient q.
pub fn generate_maxsym(n: u32) -> Result<LinearOdeForm, ItergenError> {
    theta_n_u(n)
}

/// `generate_maxsym` with an explicit intermediate term budget.
pub fn generate_maxsym_budgeted(n: u32, term_budget: usize) -> Result<LinearOdeForm, ItergenError> {
    theta_n_u_budgeted(n, term_budget)
}

const A15_DATA: &str = include_str!("../data/a15_15.txt");
const A15_SHA256: &str = "f9d82a888b20aa9e80f7e19a949e6e4f3902aa82d50cf5d299ed828411949417";

/// The independently recorded value of A_15^15 (the y-coefficient of the
/// order-15 equation), checksum-verified and parsed from the bundled
/// data file.
pub fn a15_ground_truth() -> Result<DiffPoly, ItergenError> {
    let mut hasher = Sha256::new();
    hasher.update(A15_DATA.as_bytes());
    let actual = hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect::<String>();
    if actual != A15_SHA256 {
        return Err(ItergenError::GroundTruthChecksum {
            expected: A15_SHA256.to_string(),
            actual,
        });
    }
    Ok(crate::diffalg::text::parse(A15_DATA)?)
}
