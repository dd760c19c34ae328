//! Reference values of Kummer's function from a Taylor series summed in
//! 512-bit fixed point with exact rational term ratios.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

const BITS: usize = 512;
const MAX_TERMS: usize = 5000;

/// `M(a, b, x)` by direct summation, or `None` if an argument is not finite,
/// `b` is a non-positive integer, or the result does not fit in an `f64`.
pub fn kummer_reference(a: f64, b: f64, x: f64) -> Option<f64> {
    let ra = BigRational::from_float(a)?;
    let rb = BigRational::from_float(b)?;
    let rx = BigRational::from_float(x)?;
    if b <= 0.0 && b == b.floor() {
        return None;
    }
    let unit = BigInt::one() << BITS;
    let mut term = unit.clone();
    let mut sum = unit.clone();
    let mut n = 0usize;
    loop {
        let nr = BigRational::from_integer(BigInt::from(n));
        let ratio = (&ra + &nr) * &rx / ((&rb + &nr) * (nr + BigRational::one()));
        if ratio.is_zero() {
            break;
        }
        term = term * ratio.numer() / ratio.denom();
        if term.is_zero() && n as f64 > a.abs() + x.abs() {
            break;
        }
        sum += &term;
        n += 1;
        if n >= MAX_TERMS {
            return None;
        }
    }
    let v = sum.to_f64()? / 2f64.powi(BITS as i32);
    v.is_finite().then_some(v)
}

/// Number of bits of the fixed-point accumulator.
pub const fn precision_bits() -> usize {
    BITS
}
