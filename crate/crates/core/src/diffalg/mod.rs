//! Exact differential-polynomial algebra: Laurent monomials in derivative
//! indeterminates over arbitrary-precision rationals, total derivation,
//! substitution rewriting, and text/JSON/LaTeX serialization.

pub mod json;
pub mod latex;
pub mod poly;
pub mod rewrite;
pub mod symbol;
pub mod text;

pub use poly::{coeff_int, coeff_ratio, Coeff, DiffPoly, LaurentMonomial, PowerProduct};
pub use rewrite::{build_rule_table, derivative_closure, reduce_fixpoint, RewriteRule, RuleTable};
pub use symbol::{ind, Indeterminate, Symbol};

use thiserror::Error;

/// Errors of the symbolic layer.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiffAlgError {
    #[error("term `{term}` is nonlinear in derivatives of {base}")]
    NonlinearInBase { base: Symbol, term: String },
    #[error("no numeric binding provided for {0}")]
    MissingBinding(Indeterminate),
    #[error("evaluation pole: {0} is bound to zero but occurs with a negative exponent")]
    PoleAtZero(Indeterminate),
    #[error("invalid rewrite rule for {target}: {reason}")]
    InvalidRule { target: Indeterminate, reason: String },
    #[error("cannot substitute a negative power of {target}: replacement is not a single monomial")]
    NegativePowerSubstitution { target: Indeterminate },
    #[error("reduction did not reach a fixpoint within {budget} passes; the rule table cycles")]
    RewriteBudgetExceeded { budget: usize },
}

/// A parse failure with the byte offset where it was detected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at byte {pos}: {msg}")]
pub struct ParseError {
    pos: usize,
    msg: String,
}

impl ParseError {
    pub fn new(pos: usize, msg: impl Into<String>) -> Self {
        ParseError { pos, msg: msg.into() }
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn msg(&self) -> &str {
        &self.msg
    }
}
