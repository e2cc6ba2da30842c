//! Base function symbols and derivative indeterminates.

use std::fmt;

use crate::diffalg::ParseError;

/// The base function symbols known to the engine.
///
/// Declaration order is the registration rank and fixes the canonical
/// ordering of indeterminates everywhere (serialization, term order,
/// rewrite scheduling).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    /// Dependent variable of the generated equations.
    Y,
    /// Source parameter of the iteration operator.
    R,
    /// Second coefficient of the iteration operator.
    S,
    /// Square root of the source parameter, r = u^2.
    U,
    /// Second independent solution of the source equation.
    V,
    /// Coefficient of the source equation y'' + q y = 0.
    Q,
    /// Wronskian constant of a solution pair (W' = 0 by convention).
    W,
    /// Change of independent variable z = h(x).
    H,
    /// Antiderivative symbol with I' = u^-2.
    I,
    /// Antiderivative symbol with J' = r^-1.
    J,
    /// Integrating-factor symbol with E' = -(1/2) B E.
    E,
    /// Arbitrary first-order coefficient of the standard-form equation.
    B,
}

impl Symbol {
    pub const ALL: [Symbol; 12] = [
        Symbol::Y,
        Symbol::R,
        Symbol::S,
        Symbol::U,
        Symbol::V,
        Symbol::Q,
        Symbol::W,
        Symbol::H,
        Symbol::I,
        Symbol::J,
        Symbol::E,
        Symbol::B,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Symbol::Y => "y",
            Symbol::R => "r",
            Symbol::S => "s",
            Symbol::U => "u",
            Symbol::V => "v",
            Symbol::Q => "q",
            Symbol::W => "W",
            Symbol::H => "h",
            Symbol::I => "I",
            Symbol::J => "J",
            Symbol::E => "E",
            Symbol::B => "B",
        }
    }

    pub fn from_name(name: &str) -> Result<Symbol, ParseError> {
        Symbol::ALL
            .iter()
            .copied()
            .find(|s| s.name() == name)
            .ok_or_else(|| ParseError::new(0, format!("unknown symbol name `{name}`")))
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A derivative indeterminate: a base symbol together with a derivative
/// order. Order 0 denotes the function itself.
///
/// The derived ordering (base rank first, then order) is the canonical
/// ordering used for monomial factors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Indeterminate {
    pub base: Symbol,
    pub order: u32,
}

impl Indeterminate {
    pub const fn new(base: Symbol, order: u32) -> Self {
        Indeterminate { base, order }
    }

    /// The indeterminate one derivative order higher.
    pub fn raised(self) -> Self {
        Indeterminate::new(self.base, self.order + 1)
    }
}

/// Shorthand constructor used pervasively in this crate.
pub const fn ind(base: Symbol, order: u32) -> Indeterminate {
    Indeterminate::new(base, order)
}

impl fmt::Display for Indeterminate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.order {
            0 => write!(f, "{}", self.base),
            1 => write!(f, "{}'", self.base),
            2 => write!(f, "{}''", self.base),
            k => write!(f, "{}^({})", self.base, k),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_is_base_rank_then_order() {
        // u^(3) sorts before v'' because u registers before v
        assert!(ind(Symbol::U, 3) < ind(Symbol::V, 2));
        assert!(ind(Symbol::Q, 1) < ind(Symbol::Q, 2));
        assert!(ind(Symbol::Y, 10) < ind(Symbol::R, 0));
    }

    #[test]
    fn display_notation() {
        assert_eq!(ind(Symbol::Q, 0).to_string(), "q");
        assert_eq!(ind(Symbol::Q, 1).to_string(), "q'");
        assert_eq!(ind(Symbol::Q, 2).to_string(), "q''");
        assert_eq!(ind(Symbol::Q, 3).to_string(), "q^(3)");
        assert_eq!(ind(Symbol::W, 0).to_string(), "W");
    }

    #[test]
    fn names_round_trip() {
        for s in Symbol::ALL {
            assert_eq!(Symbol::from_name(s.name()).unwrap(), s);
        }
        assert!(Symbol::from_name("xi").is_err());
    }
}
