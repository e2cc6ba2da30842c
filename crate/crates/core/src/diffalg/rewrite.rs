//! Rewrite rules and fixpoint reduction.
//!
//! A rule `f^(k) -> p` eliminates the indeterminate `f^(k)` by polynomial
//! substitution. Reduction repeatedly substitutes the highest remaining
//! target until the polynomial is free of every target, which terminates
//! for derivation-closed tables because each replacement only mentions
//! strictly lower derivatives of its own base.

use crate::diffalg::poly::LaurentMonomial;
use crate::diffalg::{DiffAlgError, DiffPoly, Indeterminate, Symbol};

/// Maximum number of substitution passes before reduction gives up and
/// reports a (presumably cyclic) rule table.
const REDUCTION_PASS_BUDGET: usize = 10_000;

/// A single substitution rule: replace every occurrence of `target` by
/// `replacement`.
///
/// Invariant (checked at construction): the replacement mentions
/// derivatives of the target's base only at orders strictly below the
/// target's, so repeated substitution cannot reintroduce the target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RewriteRule {
    target: Indeterminate,
    replacement: DiffPoly,
}

impl RewriteRule {
    pub fn new(target: Indeterminate, replacement: DiffPoly) -> Result<Self, DiffAlgError> {
        if let Some(order) = replacement.max_order_of(target.base) {
            if order >= target.order {
                return Err(DiffAlgError::InvalidRule {
                    target,
                    reason: format!(
                        "replacement mentions {} of order {order}, not strictly below the target",
                        target.base
                    ),
                });
            }
        }
        Ok(RewriteRule { target, replacement })
    }

    pub fn target(&self) -> Indeterminate {
        self.target
    }

    pub fn replacement(&self) -> &DiffPoly {
        &self.replacement
    }
}

/// An ordered collection of rewrite rules with unique targets.
#[derive(Clone, Debug, Default)]
pub struct RuleTable {
    rules: Vec<RewriteRule>,
}

impl RuleTable {
    pub fn new(rules: Vec<RewriteRule>) -> Result<Self, DiffAlgError> {
        let mut table = RuleTable::default();
        for r in rules {
            table.push(r)?;
        }
        Ok(table)
    }

    pub fn single(rule: RewriteRule) -> Self {
        RuleTable { rules: vec![rule] }
    }

    pub fn push(&mut self, rule: RewriteRule) -> Result<(), DiffAlgError> {
        if self.get(rule.target).is_some() {
            return Err(DiffAlgError::InvalidRule {
                target: rule.target,
                reason: "duplicate rule target".into(),
            });
        }
        self.rules.push(rule);
        Ok(())
    }

    /// Merges another table into this one; targets must stay unique.
    pub fn extend(&mut self, other: RuleTable) -> Result<(), DiffAlgError> {
        for r in other.rules {
            self.push(r)?;
        }
        Ok(())
    }

    pub fn get(&self, target: Indeterminate) -> Option<&DiffPoly> {
        self.rules
            .iter()
            .find(|r| r.target == target)
            .map(|r| &r.replacement)
    }

    pub fn rules(&self) -> &[RewriteRule] {
        &self.rules
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

/// Reduces `p` modulo the rule table: substitutes targets, highest
/// derivative order first, until no target occurs.
///
/// Negative powers of a target are substituted only when the replacement
/// is a single monomial (hence invertible as a Laurent monomial);
/// otherwise reduction fails rather than inventing a division.
pub fn reduce_fixpoint(p: &DiffPoly, rules: &RuleTable) -> Result<DiffPoly, DiffAlgError> {
    if rules.is_empty() {
        return Ok(p.clone());
    }
    let mut cur = p.clone();
    for _ in 0..REDUCTION_PASS_BUDGET {
        let target = match highest_target(&cur, rules) {
            Some(t) => t,
            None => return Ok(cur),
        };
        let replacement = rules.get(target).expect("target came from the table");
        cur = substitute(&cur, target, replacement)?;
    }
    Err(DiffAlgError::RewriteBudgetExceeded {
        budget: REDUCTION_PASS_BUDGET,
    })
}

/// The occurring rule target scheduled next: highest derivative order
/// first, ties broken by base rank. Deterministic.
fn highest_target(p: &DiffPoly, rules: &RuleTable) -> Option<Indeterminate> {
    p.indeterminates()
        .into_iter()
        .filter(|&i| rules.get(i).is_some())
        .max_by_key(|&i| (i.order, i.base))
}

/// Substitutes every occurrence of `target` (any nonzero exponent) in one
/// pass.
fn substitute(
    p: &DiffPoly,
    target: Indeterminate,
    replacement: &DiffPoly,
) -> Result<DiffPoly, DiffAlgError> {
    let mut negative_replacement: Option<DiffPoly> = None;
    let mut out: Vec<LaurentMonomial> = Vec::with_capacity(p.num_terms());
    for term in p.terms() {
        let exp = term.powers.exponent_of(target);
        if exp == 0 {
            out.push(term.clone());
            continue;
        }
        let mut rest = term.powers.clone();
        rest.mul_factor(target, -exp);
        let base = DiffPoly::from_terms(vec![LaurentMonomial::new(term.coeff.clone(), rest)]);
        let piece = if exp > 0 {
            base * replacement.powi(exp as u32)
        } else {
            if negative_replacement.is_none() {
                negative_replacement = Some(invert_monomial(target, replacement)?);
            }
            let inv = negative_replacement.as_ref().expect("just inserted");
            base * inv.powi((-exp) as u32)
        };
        out.extend(piece.into_terms());
    }
    Ok(DiffPoly::from_terms(out))
}

/// The reciprocal of a single-monomial replacement, for substituting into
/// negative powers of the target.
fn invert_monomial(
    target: Indeterminate,
    replacement: &DiffPoly,
) -> Result<DiffPoly, DiffAlgError> {
    let term = replacement
        .as_single_term()
        .ok_or(DiffAlgError::NegativePowerSubstitution { target })?;
    let inv_coeff = term.coeff.recip();
    let factors: Vec<(Indeterminate, i32)> = term
        .powers
        .factors()
        .iter()
        .map(|&(i, e)| (i, -e))
        .collect();
    Ok(DiffPoly::monomial(inv_coeff, &factors))
}

/// Extends a seed rule to all derivative orders up to `max_order` by
/// differentiating each replacement and reducing it against the rules
/// built so far. The resulting table is derivation-closed through
/// `max_order`.
pub fn derivative_closure(seed: RewriteRule, max_order: u32) -> Result<RuleTable, DiffAlgError> {
    let base = seed.target.base;
    let mut order = seed.target.order;
    let mut table = RuleTable::single(seed);
    while order < max_order {
        order += 1;
        let prev = table
            .get(Indeterminate::new(base, order - 1))
            .expect("previous rule was just inserted")
            .clone();
        let next = reduce_fixpoint(&prev.total_derivative(), &table)?;
        table.push(RewriteRule::new(Indeterminate::new(base, order), next)?)?;
    }
    Ok(table)
}

/// Builds the derivation-closed rule table for `base` seeded at second
/// order: the seed must target `base''`, and the table then covers
/// `base''` through `base^(max_order)`.
pub fn build_rule_table(
    base: Symbol,
    max_order: u32,
    seed: RewriteRule,
) -> Result<RuleTable, DiffAlgError> {
    if seed.target != Indeterminate::new(base, 2) {
        return Err(DiffAlgError::InvalidRule {
            target: seed.target,
            reason: format!("seed must target {}''", base),
        });
    }
    derivative_closure(seed, max_order)
}
