//! Polynomials in the shifted quantum number 2n+1.
//!
//! Eigenvalue and exponent coefficients depend on the state index n only
//! through 2n+1, and each table entry is a polynomial in that variable with
//! a definite parity. Storing the polynomial (rather than per-n values)
//! keeps the tables n-independent and lets tests assert the parity pattern.

use crate::rational::{int, Rational};
use num::traits::Zero;

/// Dense polynomial in 2n+1; `coefficients[p]` multiplies (2n+1)^p.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HatPolynomial {
    coefficients: Vec<Rational>,
}

impl HatPolynomial {
    pub fn new(coefficients: Vec<Rational>) -> Self {
        let mut p = HatPolynomial { coefficients };
        p.trim();
        p
    }

    pub fn constant(value: Rational) -> Self {
        HatPolynomial::new(vec![value])
    }

    pub fn zero() -> Self {
        HatPolynomial::new(Vec::new())
    }

    fn trim(&mut self) {
        while matches!(self.coefficients.last(), Some(c) if c.is_zero()) {
            self.coefficients.pop();
        }
    }

    pub fn coefficients(&self) -> &[Rational] {
        &self.coefficients
    }

    pub fn degree(&self) -> Option<usize> {
        if self.coefficients.is_empty() {
            None
        } else {
            Some(self.coefficients.len() - 1)
        }
    }

    /// Exact evaluation at 2n+1.
    pub fn eval_at_n(&self, n: u64) -> Rational {
        let x = int(2 * n as i128 + 1);
        let mut acc = Rational::zero();
        for c in self.coefficients.iter().rev() {
            acc = acc * &x + c;
        }
        acc
    }

    /// True when only powers of the given parity (0 = even, 1 = odd) appear.
    pub fn has_pure_parity(&self, parity: u8) -> bool {
        self.coefficients
            .iter()
            .enumerate()
            .all(|(p, c)| c.is_zero() || (p % 2) as u8 == parity)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn horner_evaluation_matches_direct_sum() {
        // 1 + 3x^2 at x = 2n+1.
        let p = HatPolynomial::new(vec![int(1), int(0), int(3)]);
        assert_eq!(p.eval_at_n(0), int(4));
        assert_eq!(p.eval_at_n(1), int(28));
        assert_eq!(p.eval_at_n(2), int(76));
    }

    #[test]
    fn parity_detection() {
        let even = HatPolynomial::new(vec![int(1), int(0), int(3)]);
        assert!(even.has_pure_parity(0));
        assert!(!even.has_pure_parity(1));
        let odd = HatPolynomial::new(vec![int(0), rat(1, 2)]);
        assert!(odd.has_pure_parity(1));
    }

    #[test]
    fn trailing_zeros_trimmed() {
        let p = HatPolynomial::new(vec![int(5), int(0), int(0)]);
        assert_eq!(p.degree(), Some(0));
        assert_eq!(HatPolynomial::zero().degree(), None);
    }
}
