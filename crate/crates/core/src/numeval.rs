//! Numeric substrate: closed-form functions with analytic derivative
//! oracles, adaptive quadrature, residual evaluation against symbolic
//! equations, and finite-difference cross-validation.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::diffalg::{ind, DiffAlgError, Symbol};
use crate::itergen::{LinearOdeForm, VariableSet};

/// Errors of the numeric layer.
#[derive(Debug, Error)]
pub enum NumericError {
    #[error("x = {x} lies outside the working interval [{lo}, {hi}]")]
    OutsideInterval { x: f64, lo: f64, hi: f64 },
    #[error("quadrature tolerance must be positive, got {tol}")]
    BadTolerance { tol: f64 },
    #[error("quadrature did not converge within the subdivision depth cap {depth}")]
    QuadratureDepthExceeded { depth: u32 },
    #[error("`{label}` supplies derivatives up to order {available}, order {requested} requested")]
    DerivativeOrderUnavailable {
        label: String,
        requested: u32,
        available: u32,
    },
    #[error("finite-difference check supports orders 1 and 2, got {order}")]
    InvalidFdOrder { order: u32 },
    #[error("finite-difference stencil around x = {x} exits the interval")]
    StencilOutsideInterval { x: f64 },
    #[error("equation coefficients are not q-only")]
    NotQOnly,
    #[error("no sample points supplied")]
    NoPoints,
    #[error("`{label}` vanishes (or changes sign) on the working interval")]
    Vanishes { label: String },
    #[error("`{label}` is not strictly positive on the working interval")]
    NonPositive { label: String },
    #[error("`{label}` is non-finite at x = {x} (derivative order {order})")]
    NonFinite { label: String, order: u32, x: f64 },
    #[error("`{label}` derivative oracle disagrees with finite differences at x = {x}, order {order}: error {error:e}")]
    OracleMismatch {
        label: String,
        order: u32,
        x: f64,
        error: f64,
    },
    #[error("constant `{name}` must be nonzero and finite, got {value}")]
    BadConstant { name: &'static str, value: f64 },
    #[error("solution index k = {k} out of range for order {n}")]
    IndexOutOfRange { k: u32, n: u32 },
    #[error("order {got} below the minimum {min} for this construction")]
    OrderTooSmall { min: u32, got: u32 },
    #[error("working intervals do not overlap")]
    DisjointIntervals,
    #[error("u and v do not solve the same source equation: cross residual {residual:e} exceeds {tolerance:e}")]
    NotASourcePair { residual: f64, tolerance: f64 },
    #[error("pair Wronskian u v' - u' v is zero at x = {x}")]
    WronskianZero { x: f64 },
    #[error("pair Wronskian is not constant: {w0} at the first probe vs {w} at x = {x}")]
    WronskianNotConstant { w0: f64, w: f64, x: f64 },
    #[error("basis Wronskian vanishes at x = {x}")]
    BasisWronskianZero { x: f64 },
    #[error("residual {residual:e} exceeds the tolerance {tolerance:e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },
    #[error("bad function spec `{spec}`: {reason}")]
    BadFnSpec { spec: String, reason: String },
    #[error(transparent)]
    Algebra(#[from] DiffAlgError),
}

/// A real function on an interval with analytic derivative oracles.
///
/// The kernel maps (derivative order, x) to a value; order 0 is the
/// function itself. Derivatives are exact library formulas, never finite
/// differences — `fd_check` exists to cross-validate them.
#[derive(Clone)]
pub struct ClosedFormFn {
    label: String,
    interval: (f64, f64),
    max_order: u32,
    kernel: Arc<dyn Fn(u32, f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for ClosedFormFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClosedFormFn")
            .field("label", &self.label)
            .field("interval", &self.interval)
            .field("max_order", &self.max_order)
            .finish_non_exhaustive()
    }
}

/// Practically unlimited derivative order for entire library functions.
pub const UNBOUNDED_ORDER: u32 = u32::MAX;

impl ClosedFormFn {
    /// Wraps an arbitrary kernel. The interval must be a nonempty finite
    /// range (panics otherwise — malformed intervals are caller bugs,
    /// and CLI input is validated before it reaches this constructor).
    pub fn from_fn(
        label: impl Into<String>,
        interval: (f64, f64),
        max_order: u32,
        kernel: impl Fn(u32, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        assert!(
            interval.0.is_finite() && interval.1.is_finite() && interval.0 < interval.1,
            "invalid interval {interval:?}"
        );
        ClosedFormFn {
            label: label.into(),
            interval,
            max_order,
            kernel: Arc::new(kernel),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn max_order(&self) -> u32 {
        self.max_order
    }

    pub fn contains(&self, x: f64) -> bool {
        self.interval.0 <= x && x <= self.interval.1
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.kernel)(0, x)
    }

    /// The `order`-th derivative at x. Panics if `order` exceeds
    /// `max_order`; checked entry points validate availability first.
    pub fn deriv(&self, order: u32, x: f64) -> f64 {
        assert!(
            order <= self.max_order,
            "`{}` supplies derivatives up to order {}, order {order} requested",
            self.label,
            self.max_order
        );
        (self.kernel)(order, x)
    }

    pub(crate) fn require_order(&self, requested: u32) -> Result<(), NumericError> {
        if requested > self.max_order {
            return Err(NumericError::DerivativeOrderUnavailable {
                label: self.label.clone(),
                requested,
                available: self.max_order,
            });
        }
        Ok(())
    }

    pub(crate) fn require_inside(&self, x: f64) -> Result<(), NumericError> {
        if !self.contains(x) {
            return Err(NumericError::OutsideInterval {
                x,
                lo: self.interval.0,
                hi: self.interval.1,
            });
        }
        Ok(())
    }

    /// The constant function.
    pub fn constant(c: f64, interval: (f64, f64)) -> Self {
        ClosedFormFn::from_fn(format!("const:{c}"), interval, UNBOUNDED_ORDER, move |o, _| {
            if o == 0 {
                c
            } else {
                0.0
            }
        })
    }

    /// The polynomial c0 + c1 x + c2 x^2 + ...
    pub fn poly(coeffs: Vec<f64>, interval: (f64, f64)) -> Self {
        let label = format!(
            "poly:{}",
            coeffs.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
        );
        ClosedFormFn::from_fn(label, interval, UNBOUNDED_ORDER, move |order, x| {
            let mut sum = 0.0;
            for (i, &c) in coeffs.iter().enumerate().skip(order as usize) {
                let mut fall = 1.0;
                for m in 0..order as usize {
                    fall *= (i - m) as f64;
                }
                sum += c * fall * x.powi((i - order as usize) as i32);
            }
            sum
        })
    }

    /// e^(alpha x).
    pub fn exp_scaled(alpha: f64, interval: (f64, f64)) -> Self {
        let label = if alpha == 1.0 { "exp".to_string() } else { format!("exp:{alpha}") };
        ClosedFormFn::from_fn(label, interval, UNBOUNDED_ORDER, move |order, x| {
            alpha.powi(order as i32) * (alpha * x).exp()
        })
    }

    /// cos(alpha x).
    pub fn cos_scaled(alpha: f64, interval: (f64, f64)) -> Self {
        let label = if alpha == 1.0 { "cos".to_string() } else { format!("cos:{alpha}") };
        ClosedFormFn::from_fn(label, interval, UNBOUNDED_ORDER, move |order, x| {
            let t = alpha * x;
            let core = match order % 4 {
                0 => t.cos(),
                1 => -t.sin(),
                2 => -t.cos(),
                _ => t.sin(),
            };
            alpha.powi(order as i32) * core
        })
    }

    /// sin(alpha x).
    pub fn sin_scaled(alpha: f64, interval: (f64, f64)) -> Self {
        let label = if alpha == 1.0 { "sin".to_string() } else { format!("sin:{alpha}") };
        ClosedFormFn::from_fn(label, interval, UNBOUNDED_ORDER, move |order, x| {
            let t = alpha * x;
            let core = match order % 4 {
                0 => t.sin(),
                1 => t.cos(),
                2 => -t.sin(),
                _ => -t.cos(),
            };
            alpha.powi(order as i32) * core
        })
    }

    /// x^k on a strictly positive interval (k may be negative or
    /// fractional).
    pub fn power(k: f64, interval: (f64, f64)) -> Result<Self, NumericError> {
        if interval.0 <= 0.0 {
            return Err(NumericError::NonPositive {
                label: format!("pow:{k} domain"),
            });
        }
        Ok(ClosedFormFn::from_fn(
            format!("pow:{k}"),
            interval,
            UNBOUNDED_ORDER,
            move |order, x| {
                let mut fall = 1.0;
                for m in 0..order {
                    fall *= k - m as f64;
                }
                fall * x.powf(k - order as f64)
            },
        ))
    }

    /// The Möbius map x -> (a x + b) / (c x + d). Requires ad - bc != 0
    /// and a pole-free interval.
    pub fn mobius(a: f64, b: f64, c: f64, d: f64, interval: (f64, f64)) -> Result<Self, NumericError> {
        let det = a * d - b * c;
        if det == 0.0 || !det.is_finite() {
            return Err(NumericError::BadConstant {
                name: "ad - bc",
                value: det,
            });
        }
        let lo = c * interval.0 + d;
        let hi = c * interval.1 + d;
        if lo == 0.0 || hi == 0.0 || (lo < 0.0) != (hi < 0.0) {
            return Err(NumericError::Vanishes {
                label: format!("mobius denominator {c}*x + {d}"),
            });
        }
        Ok(ClosedFormFn::from_fn(
            format!("mobius:{a},{b},{c},{d}"),
            interval,
            UNBOUNDED_ORDER,
            move |order, x| {
                let den = c * x + d;
                if order == 0 {
                    return (a * x + b) / den;
                }
                // f = a/c + (bc - ad)/(c (cx+d)); k-th derivative of the
                // reciprocal gives (bc-ad)(-1)^k k! c^(k-1) (cx+d)^-(k+1)
                if c == 0.0 {
                    return if order == 1 { a / d } else { 0.0 };
                }
                let mut fact = 1.0;
                for m in 1..=order {
                    fact *= m as f64;
                }
                let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
                (b * c - a * d) * sign * fact * c.powi(order as i32 - 1) / den.powi(order as i32 + 1)
            },
        ))
    }

    /// c times this function.
    pub fn scaled(&self, c: f64) -> Self {
        let inner = self.clone();
        ClosedFormFn::from_fn(
            format!("{c}*({})", self.label),
            self.interval,
            self.max_order,
            move |order, x| c * (inner.kernel)(order, x),
        )
    }

    /// The square root of a strictly positive function; derivatives come
    /// from the product recurrence 2 (sqrt f)' sqrt f = f' and its
    /// Leibniz extensions, so they are exact wherever f's oracles are.
    pub fn sqrt_of(f: &ClosedFormFn) -> Result<Self, NumericError> {
        require_positive(f)?;
        let inner = f.clone();
        let max_order = f.max_order;
        Ok(ClosedFormFn::from_fn(
            format!("sqrt({})", f.label),
            f.interval,
            max_order,
            move |order, x| {
                // u = sqrt(f): from f^(j) = sum_i C(j,i) u^(i) u^(j-i),
                // solve for u^(j) given the lower orders.
                let mut u = Vec::with_capacity(order as usize + 1);
                u.push((inner.kernel)(0, x).sqrt());
                for j in 1..=order {
                    let mut rhs = (inner.kernel)(j, x);
                    for i in 1..j {
                        rhs -= binom_f64(j, i) * u[i as usize] * u[(j - i) as usize];
                    }
                    u.push(rhs / (2.0 * u[0]));
                }
                u[order as usize]
            },
        ))
    }

    /// Verifies the derivative oracles against Richardson-extrapolated
    /// central finite differences (orders 1 and 2, five interior probe
    /// points, mixed tolerance 1e-6) and checks finiteness of the first
    /// few derivative orders.
    pub fn validate(&self) -> Result<(), NumericError> {
        let (a, b) = self.interval;
        for i in 1..=5u32 {
            let x = a + (b - a) * f64::from(i) / 6.0;
            for order in 0..=self.max_order.min(4) {
                let v = self.deriv(order, x);
                if !v.is_finite() {
                    return Err(NumericError::NonFinite {
                        label: self.label.clone(),
                        order,
                        x,
                    });
                }
            }
            for order in 1..=self.max_order.min(2) {
                let error = fd_check(self, order, x)?;
                let scale = 1.0 + self.deriv(order, x).abs();
                if error > 1e-6 * scale {
                    return Err(NumericError::OracleMismatch {
                        label: self.label.clone(),
                        order,
                        x,
                        error,
                    });
                }
            }
        }
        Ok(())
    }
}

fn binom_f64(n: u32, k: u32) -> f64 {
    let mut acc = 1.0;
    for i in 0..k.min(n - k) {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// The source coefficient q = -u''/u realized numerically from a
/// nonvanishing solution u, with derivative oracles from the Leibniz
/// recurrence on q u = -u''.
pub fn source_q_from(u: &ClosedFormFn) -> Result<ClosedFormFn, NumericError> {
    require_nonvanishing(u)?;
    if u.max_order < 2 {
        return Err(NumericError::DerivativeOrderUnavailable {
            label: u.label.clone(),
            requested: 2,
            available: u.max_order,
        });
    }
    let inner = u.clone();
    let max_order = u.max_order - 2;
    Ok(ClosedFormFn::from_fn(
        format!("source_q({})", u.label),
        u.interval,
        max_order,
        move |order, x| {
            // (q u)^(m) = -u^(m+2) solved for q^(m)
            let mut q = Vec::with_capacity(order as usize + 1);
            for m in 0..=order {
                let mut rhs = -(inner.kernel)(m + 2, x);
                for i in 0..m {
                    rhs -= binom_f64(m, i) * q[i as usize] * (inner.kernel)(m - i, x);
                }
                q.push(rhs / (inner.kernel)(0, x));
            }
            q[order as usize]
        },
    ))
}

/// Grid size used for sign/zero screening of functions.
const SCREEN_GRID: u32 = 128;

pub(crate) fn require_nonvanishing(f: &ClosedFormFn) -> Result<(), NumericError> {
    let (a, b) = f.interval();
    let first = f.eval(a);
    if first == 0.0 || !first.is_finite() {
        return Err(NumericError::Vanishes { label: f.label.clone() });
    }
    for i in 1..=SCREEN_GRID {
        let x = a + (b - a) * f64::from(i) / f64::from(SCREEN_GRID);
        let v = f.eval(x);
        if v == 0.0 || !v.is_finite() || (v < 0.0) != (first < 0.0) {
            return Err(NumericError::Vanishes { label: f.label.clone() });
        }
    }
    Ok(())
}

pub(crate) fn require_positive(f: &ClosedFormFn) -> Result<(), NumericError> {
    let (a, b) = f.interval();
    for i in 0..=SCREEN_GRID {
        let x = a + (b - a) * f64::from(i) / f64::from(SCREEN_GRID);
        let v = f.eval(x);
        if v <= 0.0 || !v.is_finite() {
            return Err(NumericError::NonPositive { label: f.label.clone() });
        }
    }
    Ok(())
}

/// `count` equally spaced interior points of the interval.
pub fn sample_points(interval: (f64, f64), count: usize) -> Vec<f64> {
    let (a, b) = interval;
    (1..=count)
        .map(|i| a + (b - a) * i as f64 / (count as f64 + 1.0))
        .collect()
}

/// Default quadrature tolerance.
pub const QUADRATURE_TOL: f64 = 1e-10;
/// Subdivision depth cap for adaptive Simpson.
const QUADRATURE_DEPTH: u32 = 40;

/// Adaptive-Simpson estimate of the integral of `f` from x0 to x with
/// mixed absolute/relative error at most `tol`. Deterministic for fixed
/// inputs; fails rather than returns a low-quality estimate.
pub fn quadrature(f: &ClosedFormFn, x0: f64, x: f64, tol: f64) -> Result<f64, NumericError> {
    f.require_inside(x0)?;
    f.require_inside(x)?;
    let g = f.clone();
    quadrature_fn(move |t| g.eval(t), x0, x, tol)
}

/// Adaptive Simpson over a plain closure (the caller guarantees the
/// integrand is defined between the endpoints).
pub fn quadrature_fn(
    f: impl Fn(f64) -> f64,
    x0: f64,
    x: f64,
    tol: f64,
) -> Result<f64, NumericError> {
    if tol <= 0.0 || tol.is_nan() {
        return Err(NumericError::BadTolerance { tol });
    }
    if x0 == x {
        return Ok(0.0);
    }
    let (a, b, sign) = if x0 < x { (x0, x, 1.0) } else { (x, x0, -1.0) };
    let fa = f(a);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let fb = f(b);
    for (v, at) in [(fa, a), (fm, m), (fb, b)] {
        if !v.is_finite() {
            return Err(NumericError::NonFinite {
                label: "integrand".into(),
                order: 0,
                x: at,
            });
        }
    }
    let whole = simpson_slice(a, b, fa, fm, fb);
    // mixed tolerance: relative to the rough magnitude of the integral
    let tol_eff = tol * whole.abs().max(1.0);
    let value = adapt(&f, a, b, fa, fm, fb, whole, tol_eff, QUADRATURE_DEPTH)?;
    Ok(sign * value)
}

fn simpson_slice(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, NumericError> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    if !flm.is_finite() || !frm.is_finite() {
        return Err(NumericError::NonFinite {
            label: "integrand".into(),
            order: 0,
            x: if flm.is_finite() { rm } else { lm },
        });
    }
    let left = simpson_slice(a, m, fa, flm, fm);
    let right = simpson_slice(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(NumericError::QuadratureDepthExceeded {
            depth: QUADRATURE_DEPTH,
        });
    }
    let half_tol = 0.5 * tol;
    Ok(adapt(f, a, m, fa, flm, fm, left, half_tol, depth - 1)?
        + adapt(f, m, b, fm, frm, fb, right, half_tol, depth - 1)?)
}

/// Richardson-extrapolated central finite difference versus the analytic
/// derivative oracle: returns the absolute disagreement.
pub fn fd_check(f: &ClosedFormFn, order: u32, x: f64) -> Result<f64, NumericError> {
    if !(1..=2).contains(&order) {
        return Err(NumericError::InvalidFdOrder { order });
    }
    f.require_order(order)?;
    let (a, b) = f.interval();
    let h = ((b - a) / 16.0).min(1e-3);
    if x - h < a || x + h > b {
        return Err(NumericError::StencilOutsideInterval { x });
    }
    let stencil = |h: f64| match order {
        1 => (f.eval(x + h) - f.eval(x - h)) / (2.0 * h),
        _ => (f.eval(x + h) - 2.0 * f.eval(x) + f.eval(x - h)) / (h * h),
    };
    let extrapolated = (4.0 * stencil(h / 2.0) - stencil(h)) / 3.0;
    Ok((extrapolated - f.deriv(order, x)).abs())
}

/// Maximum relative residual of y against a q-only equation over the
/// sample points: |sum_j c_j y^(n-j)| / (sum_j |c_j y^(n-j)|), with 0/0
/// read as 0.
pub fn residual(
    ode: &LinearOdeForm,
    q: &ClosedFormFn,
    y: &ClosedFormFn,
    points: &[f64],
) -> Result<f64, NumericError> {
    if ode.variable_set() != VariableSet::QOnly {
        return Err(NumericError::NotQOnly);
    }
    if points.is_empty() {
        return Err(NumericError::NoPoints);
    }
    let n = ode.order();
    let q_order = ode
        .coefficients()
        .iter()
        .filter_map(|c| c.max_order_of(Symbol::Q))
        .max()
        .unwrap_or(0);
    q.require_order(q_order)?;
    y.require_order(n)?;
    let mut worst: f64 = 0.0;
    for &x in points {
        q.require_inside(x)?;
        y.require_inside(x)?;
        let mut bindings = BTreeMap::new();
        for m in 0..=q_order {
            bindings.insert(ind(Symbol::Q, m), q.deriv(m, x));
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for (j, c) in ode.coefficients().iter().enumerate() {
            let term = c.evaluate(&bindings)? * y.deriv(n - j as u32, x);
            num += term;
            den += term.abs();
        }
        let ratio = if den == 0.0 { 0.0 } else { num.abs() / den };
        worst = worst.max(ratio);
    }
    Ok(worst)
}

/// Parses the CLI function grammar: `exp[:a]`, `cos[:a]`, `sin[:a]`,
/// `poly:<c0,c1,...>`, `pow:<k>`, `const:<c>`.
pub fn parse_fnspec(spec: &str, interval: (f64, f64)) -> Result<ClosedFormFn, NumericError> {
    let bad = |reason: &str| NumericError::BadFnSpec {
        spec: spec.to_string(),
        reason: reason.to_string(),
    };
    let spec_trim = spec.trim();
    let (head, arg) = match spec_trim.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (spec_trim, None),
    };
    let parse_num = |s: &str| -> Result<f64, NumericError> {
        let v: f64 = s.trim().parse().map_err(|_| bad("expected a number"))?;
        if !v.is_finite() {
            return Err(bad("expected a finite number"));
        }
        Ok(v)
    };
    match head {
        "exp" | "cos" | "sin" => {
            let alpha = match arg {
                Some(a) => parse_num(a)?,
                None => 1.0,
            };
            Ok(match head {
                "exp" => ClosedFormFn::exp_scaled(alpha, interval),
                "cos" => ClosedFormFn::cos_scaled(alpha, interval),
                _ => ClosedFormFn::sin_scaled(alpha, interval),
            })
        }
        "poly" => {
            let body = arg.ok_or_else(|| bad("poly needs coefficients, e.g. poly:1,0,2"))?;
            let coeffs = body
                .split(',')
                .map(parse_num)
                .collect::<Result<Vec<_>, _>>()?;
            if coeffs.is_empty() {
                return Err(bad("poly needs at least one coefficient"));
            }
            Ok(ClosedFormFn::poly(coeffs, interval))
        }
        "pow" => {
            let k = parse_num(arg.ok_or_else(|| bad("pow needs an exponent, e.g. pow:2"))?)?;
            ClosedFormFn::power(k, interval)
        }
        "const" => {
            let c = parse_num(arg.ok_or_else(|| bad("const needs a value, e.g. const:1"))?)?;
            Ok(ClosedFormFn::constant(c, interval))
        }
        _ => Err(bad("unknown function name (expected exp, cos, sin, poly, pow, or const)")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::itergen::{generate_maxsym, phi_n};
    use proptest::prelude::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "expected {b}, got {a} (tol {tol})");
    }

    #[test]
    fn quadrature_matches_antiderivative_oracles() {
        let one = ClosedFormFn::constant(1.0, (0.0, 2.0));
        assert_close(quadrature(&one, 0.0, 2.0, 1e-10).unwrap(), 2.0, 1e-12);

        let decay = ClosedFormFn::exp_scaled(-2.0, (0.0, 1.0));
        let expected = (1.0 - (-2.0f64).exp()) / 2.0;
        assert_close(quadrature(&decay, 0.0, 1.0, 1e-10).unwrap(), expected, 1e-10);

        let inv_sq = ClosedFormFn::power(-2.0, (1.0, 3.0)).unwrap();
        assert_close(quadrature(&inv_sq, 1.0, 3.0, 1e-10).unwrap(), 2.0 / 3.0, 1e-10);
    }

    #[test]
    fn quadrature_is_oriented_and_validates_input() {
        let f = ClosedFormFn::exp_scaled(1.0, (0.0, 1.0));
        let forward = quadrature(&f, 0.0, 1.0, 1e-10).unwrap();
        let backward = quadrature(&f, 1.0, 0.0, 1e-10).unwrap();
        assert_eq!(forward, -backward);
        assert_eq!(quadrature(&f, 0.3, 0.3, 1e-10).unwrap(), 0.0);
        assert!(matches!(
            quadrature(&f, -0.5, 1.0, 1e-10),
            Err(NumericError::OutsideInterval { .. })
        ));
        assert!(matches!(
            quadrature(&f, 0.0, 1.0, 0.0),
            Err(NumericError::BadTolerance { .. })
        ));
    }

    #[test]
    fn quadrature_reports_depth_exhaustion() {
        // An impossible tolerance bottoms out the subdivision budget.
        let f = ClosedFormFn::exp_scaled(1.0, (0.0, 1.0));
        assert!(matches!(
            quadrature(&f, 0.0, 1.0, 1e-300),
            Err(NumericError::QuadratureDepthExceeded { .. })
        ));
    }

    proptest! {
        #[test]
        fn quadrature_is_additive(b in 0.05f64..0.95) {
            let f = ClosedFormFn::cos_scaled(3.0, (0.0, 1.0));
            let tol = 1e-10;
            let whole = quadrature(&f, 0.0, 1.0, tol).unwrap();
            let split = quadrature(&f, 0.0, b, tol).unwrap() + quadrature(&f, b, 1.0, tol).unwrap();
            prop_assert!((whole - split).abs() <= 2.0 * tol);
        }
    }

    #[test]
    fn fd_check_validates_library_derivatives() {
        let e = ClosedFormFn::exp_scaled(1.0, (-1.0, 1.0));
        assert!(fd_check(&e, 1, 0.0).unwrap() <= 1e-7);

        let quintic = ClosedFormFn::poly(vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0], (0.0, 2.0));
        assert!(fd_check(&quintic, 2, 1.0).unwrap() <= 1e-6);
        assert_close(quintic.deriv(2, 1.0), 20.0, 1e-12);

        let c = ClosedFormFn::cos_scaled(1.0, (0.0, 1.0));
        assert!(fd_check(&c, 2, 0.5).unwrap() <= 1e-6);
        assert_close(c.deriv(2, 0.5), -0.5f64.cos(), 1e-12);
    }

    #[test]
    fn fd_check_rejects_bad_requests() {
        let f = ClosedFormFn::exp_scaled(1.0, (0.0, 1.0));
        assert!(matches!(fd_check(&f, 3, 0.5), Err(NumericError::InvalidFdOrder { .. })));
        assert!(matches!(
            fd_check(&f, 1, 0.0),
            Err(NumericError::StencilOutsideInterval { .. })
        ));
    }

    #[test]
    fn library_functions_pass_validation() {
        let interval = (0.5, 2.0);
        for f in [
            ClosedFormFn::constant(3.0, interval),
            ClosedFormFn::poly(vec![1.0, -2.0, 0.5, 3.0], interval),
            ClosedFormFn::exp_scaled(-1.5, interval),
            ClosedFormFn::cos_scaled(2.0, interval),
            ClosedFormFn::sin_scaled(0.7, interval),
            ClosedFormFn::power(-2.0, interval).unwrap(),
            ClosedFormFn::power(2.5, interval).unwrap(),
            ClosedFormFn::mobius(1.0, 2.0, 3.0, 4.0, interval).unwrap(),
        ] {
            f.validate().unwrap_or_else(|e| panic!("{} failed validation: {e}", f.label()));
        }
    }

    #[test]
    fn residual_flags_exact_solutions() {
        // y = x solves y'' = 0 (q = 0)
        let ode = generate_maxsym(2).unwrap();
        let q0 = ClosedFormFn::constant(0.0, (0.0, 1.0));
        let y = ClosedFormFn::poly(vec![0.0, 1.0], (0.0, 1.0));
        let pts = sample_points((0.0, 1.0), 20);
        assert_eq!(residual(&ode, &q0, &y, &pts).unwrap(), 0.0);

        // y = x^3 solves the canonical fourth-order equation
        let ode = generate_maxsym(4).unwrap();
        let cubic = ClosedFormFn::poly(vec![0.0, 0.0, 0.0, 1.0], (0.0, 1.0));
        assert_eq!(residual(&ode, &q0, &cubic, &pts).unwrap(), 0.0);
    }

    #[test]
    fn residual_accepts_cos_squared_for_order_three() {
        // q = 1: y = cos^2 x solves y''' + 4 y' = 0
        let ode = generate_maxsym(3).unwrap();
        let q1 = ClosedFormFn::constant(1.0, (0.0, 1.0));
        let y = ClosedFormFn::from_fn("cos^2", (0.0, 1.0), UNBOUNDED_ORDER, |order, x| {
            // cos^2 x = 1/2 + cos(2x)/2
            if order == 0 {
                return 0.5 + (2.0 * x).cos() / 2.0;
            }
            let core = match order % 4 {
                0 => (2.0 * x).cos(),
                1 => -(2.0 * x).sin(),
                2 => -(2.0 * x).cos(),
                _ => (2.0 * x).sin(),
            };
            2.0f64.powi(order as i32) * core / 2.0
        });
        y.validate().unwrap();
        let pts = sample_points((0.0, 1.0), 20);
        assert!(residual(&ode, &q1, &y, &pts).unwrap() <= 1e-10);
    }

    #[test]
    fn residual_validates_inputs() {
        let q = ClosedFormFn::constant(0.0, (0.0, 1.0));
        let y = ClosedFormFn::poly(vec![0.0, 1.0], (0.0, 1.0));
        let pts = sample_points((0.0, 1.0), 5);
        // r-form equations are rejected
        let r_form = phi_n(2).unwrap();
        assert!(matches!(
            residual(&r_form, &q, &y, &pts),
            Err(NumericError::NotQOnly)
        ));
        let ode = generate_maxsym(2).unwrap();
        assert!(matches!(
            residual(&ode, &q, &y, &[]),
            Err(NumericError::NoPoints)
        ));
        // y with too few derivative orders is rejected up front
        let stub = ClosedFormFn::from_fn("stub", (0.0, 1.0), 1, |_, x| x);
        assert!(matches!(
            residual(&ode, &q, &stub, &pts),
            Err(NumericError::DerivativeOrderUnavailable { .. })
        ));
    }

    #[test]
    fn residual_is_scale_invariant() {
        let ode = generate_maxsym(3).unwrap();
        let q = ClosedFormFn::constant(1.0, (0.0, 1.0));
        // deliberately not a solution, so the ratio is nontrivial
        let y = ClosedFormFn::poly(vec![1.0, 1.0, 0.5], (0.0, 1.0));
        let pts = sample_points((0.0, 1.0), 10);
        let base = residual(&ode, &q, &y, &pts).unwrap();
        assert!(base > 1e-3, "test needs a nontrivial residual, got {base}");
        let scaled = residual(&ode, &q, &y.scaled(3.0), &pts).unwrap();
        assert!((base - scaled).abs() <= 1e-14);
    }

    #[test]
    fn sqrt_oracle_matches_known_forms() {
        // sqrt(e^(2x)) = e^x
        let r = ClosedFormFn::exp_scaled(2.0, (0.0, 1.0));
        let u = ClosedFormFn::sqrt_of(&r).unwrap();
        let e = ClosedFormFn::exp_scaled(1.0, (0.0, 1.0));
        for order in 0..=4 {
            for &x in &sample_points((0.0, 1.0), 7) {
                assert_close(u.deriv(order, x), e.deriv(order, x), 1e-9);
            }
        }
        u.validate().unwrap();
        // sqrt of a non-positive function is rejected
        let neg = ClosedFormFn::constant(-1.0, (0.0, 1.0));
        assert!(matches!(
            ClosedFormFn::sqrt_of(&neg),
            Err(NumericError::NonPositive { .. })
        ));
    }

    #[test]
    fn source_q_recovers_constant_coefficients() {
        // u = cos x -> q = -u''/u = 1;  u = e^x -> q = -1
        let cos = ClosedFormFn::cos_scaled(1.0, (0.0, 1.0));
        let q = source_q_from(&cos).unwrap();
        for &x in &sample_points((0.0, 1.0), 9) {
            assert_close(q.eval(x), 1.0, 1e-12);
            assert_close(q.deriv(1, x), 0.0, 1e-12);
            assert_close(q.deriv(3, x), 0.0, 1e-10);
        }
        let e = ClosedFormFn::exp_scaled(1.0, (0.0, 1.0));
        let q = source_q_from(&e).unwrap();
        for &x in &sample_points((0.0, 1.0), 9) {
            assert_close(q.eval(x), -1.0, 1e-12);
            assert_close(q.deriv(2, x), 0.0, 1e-11);
        }
        // sin vanishes at 0, so it cannot parametrize q on [0, 1]
        let sin = ClosedFormFn::sin_scaled(1.0, (0.0, 1.0));
        assert!(matches!(source_q_from(&sin), Err(NumericError::Vanishes { .. })));
    }

    #[test]
    fn fnspec_grammar_round_trips() {
        let interval = (0.5, 1.5);
        assert_eq!(parse_fnspec("exp", interval).unwrap().eval(1.0), 1f64.exp());
        assert_close(
            parse_fnspec("exp:-2", interval).unwrap().eval(1.0),
            (-2f64).exp(),
            1e-15,
        );
        assert_close(parse_fnspec("cos", interval).unwrap().eval(1.0), 1f64.cos(), 1e-15);
        assert_close(
            parse_fnspec("sin:2", interval).unwrap().eval(1.0),
            2f64.sin(),
            1e-15,
        );
        assert_close(
            parse_fnspec("poly:1,0,2", interval).unwrap().eval(1.0),
            3.0,
            1e-15,
        );
        assert_close(parse_fnspec("pow:-2", interval).unwrap().eval(1.0), 1.0, 1e-15);
        assert_close(parse_fnspec("const:7.5", interval).unwrap().eval(1.0), 7.5, 1e-15);
    }

    #[test]
    fn fnspec_rejects_malformed_specs() {
        let interval = (0.5, 1.5);
        for bad in ["", "foo", "exp:x", "poly:", "poly", "pow", "pow:x", "const", "exp:inf"] {
            assert!(
                matches!(parse_fnspec(bad, interval), Err(NumericError::BadFnSpec { .. })),
                "expected BadFnSpec for {bad:?}"
            );
        }
        // pow on a domain crossing zero is rejected by construction
        assert!(parse_fnspec("pow:2", (-1.0, 1.0)).is_err());
    }

    #[test]
    fn mobius_derivatives_are_exact() {
        let f = ClosedFormFn::mobius(2.0, 1.0, 1.0, 3.0, (0.0, 1.0)).unwrap();
        // f(x) = (2x+1)/(x+3); f'(x) = 5/(x+3)^2
        assert_close(f.eval(1.0), 0.75, 1e-15);
        assert_close(f.deriv(1, 1.0), 5.0 / 16.0, 1e-15);
        f.validate().unwrap();
        assert!(ClosedFormFn::mobius(1.0, 2.0, 2.0, 4.0, (0.0, 1.0)).is_err()); // det 0
        assert!(ClosedFormFn::mobius(1.0, 0.0, 1.0, -0.5, (0.0, 1.0)).is_err()); // pole inside
    }
}
