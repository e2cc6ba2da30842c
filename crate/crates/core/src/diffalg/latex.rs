//! LaTeX rendering of differential polynomials.

use num_traits::{One, Signed};

use crate::diffalg::poly::{Coeff, LaurentMonomial};
use crate::diffalg::{DiffPoly, Indeterminate};

/// Renders LaTeX source: primes up to second derivatives, parenthesized
/// superscripts beyond, explicit `\frac` for non-integer coefficients.
pub fn to_latex(p: &DiffPoly) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, term) in p.terms().iter().enumerate() {
        let negative = term.coeff.is_negative();
        if i == 0 {
            if negative {
                out.push('-');
            }
        } else {
            out.push_str(if negative { " - " } else { " + " });
        }
        out.push_str(&latex_magnitude(term));
    }
    out
}

fn latex_magnitude(term: &LaurentMonomial) -> String {
    let mag = term.coeff.abs();
    let mut parts: Vec<String> = Vec::new();
    if !mag.is_one() || term.powers.is_unit() {
        parts.push(latex_coeff(&mag));
    }
    for &(ind, exp) in term.powers.factors() {
        parts.push(latex_factor(ind, exp));
    }
    parts.join(" ")
}

fn latex_coeff(c: &Coeff) -> String {
    if c.denom().is_one() {
        c.numer().to_string()
    } else {
        format!("\\frac{{{}}}{{{}}}", c.numer(), c.denom())
    }
}

fn latex_indet(ind: Indeterminate) -> String {
    match ind.order {
        0 => ind.base.name().to_string(),
        1 => format!("{}'", ind.base.name()),
        2 => format!("{}''", ind.base.name()),
        k => format!("{}^{{({k})}}", ind.base.name()),
    }
}

fn latex_factor(ind: Indeterminate, exp: i32) -> String {
    let body = latex_indet(ind);
    if exp == 1 {
        return body;
    }
    if ind.order >= 3 {
        // avoid double superscripts: [q^{(3)}]^{2}
        format!("[{body}]^{{{exp}}}")
    } else {
        format!("{body}^{{{exp}}}")
    }
}
