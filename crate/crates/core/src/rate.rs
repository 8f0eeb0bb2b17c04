use std::fmt;
use std::ops::Mul;

use num_rational::Rational64;
use num_traits::One;

/// Symbolic rate factor: an exact rational times a sorted multiset of rate symbols.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RateMonomial {
    coefficient: Rational64,
    symbols: Vec<String>,
}

impl RateMonomial {
    pub fn one() -> Self {
        RateMonomial { coefficient: Rational64::one(), symbols: Vec::new() }
    }

    pub fn new(coefficient: Rational64, symbols: impl IntoIterator<Item = impl Into<String>>) -> Self {
        let mut symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        symbols.sort();
        RateMonomial { coefficient, symbols }
    }

    pub fn symbol(name: &str) -> Self {
        Self::of(&[name])
    }

    pub fn of(symbols: &[&str]) -> Self {
        Self::new(Rational64::one(), symbols.iter().copied())
    }

    pub fn coefficient(&self) -> Rational64 {
        self.coefficient
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn with_coefficient(&self, coefficient: Rational64) -> Self {
        RateMonomial { coefficient, symbols: self.symbols.clone() }
    }
}

impl Default for RateMonomial {
    fn default() -> Self {
        Self::one()
    }
}

impl Mul for &RateMonomial {
    type Output = RateMonomial;

    fn mul(self, rhs: &RateMonomial) -> RateMonomial {
        let mut symbols = self.symbols.clone();
        symbols.extend(rhs.symbols.iter().cloned());
        symbols.sort();
        RateMonomial { coefficient: self.coefficient * rhs.coefficient, symbols }
    }
}

impl fmt::Display for RateMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let coeff_is_one = self.coefficient.is_one();
        if self.symbols.is_empty() {
            return write!(f, "{}", self.coefficient);
        }
        if !coeff_is_one {
            write!(f, "{}*", self.coefficient)?;
        }
        f.write_str(&self.symbols.join("*"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_sorts_symbols_and_multiplies_coefficients() {
        let a = RateMonomial::new(Rational64::new(1, 2), ["rho_b"]);
        let b = RateMonomial::new(Rational64::new(4, 1), ["rho_a", "rho_b"]);
        let p = &a * &b;
        assert_eq!(p.coefficient(), Rational64::new(2, 1));
        assert_eq!(p.symbols(), ["rho_a", "rho_b", "rho_b"]);
        assert_eq!(p.to_string(), "2*rho_a*rho_b*rho_b");
        assert_eq!(RateMonomial::one().to_string(), "1");
        assert_eq!(Rational64::new(6, 4), Rational64::new(3, 2));
    }
}
