//! Exact rational scalars used by the coefficient tables and the derivation
//! engine. Backed by `num`'s arbitrary-precision `BigRational`, which keeps
//! values in lowest terms with a positive denominator.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, Signed, Zero};

pub type Rational = BigRational;

/// Rational from small integer parts. Panics on zero denominator.
pub fn rat(num: i128, den: i128) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(value: i128) -> Rational {
    Rational::from(BigInt::from(value))
}

/// Rational from decimal strings, for literals too large for i128.
pub fn rat_str(num: &str, den: &str) -> Rational {
    let n: BigInt = num.parse().expect("malformed numerator literal");
    let d: BigInt = den.parse().expect("malformed denominator literal");
    Rational::new(n, d)
}

/// 2^exp as a BigInt.
pub fn pow2(exp: u32) -> BigInt {
    BigInt::one() << exp as usize
}

/// num / 2^exp.
pub fn over_pow2(num: i128, exp: u32) -> Rational {
    Rational::new(BigInt::from(num), pow2(exp))
}

pub fn factorial(n: u64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 2..=n {
        acc *= i;
    }
    acc
}

/// (2n-1)!! with the empty product convention for n = 0.
pub fn odd_double_factorial(n: u64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 1..=n {
        acc *= 2 * i - 1;
    }
    acc
}

/// Exact floating conversion at the very end of a rational pipeline.
pub fn to_f64(r: &Rational) -> f64 {
    num::traits::ToPrimitive::to_f64(r).expect("rational out of f64 range")
}

pub fn is_zero(r: &Rational) -> bool {
    r.is_zero()
}

pub fn abs(r: &Rational) -> Rational {
    r.abs()
}
