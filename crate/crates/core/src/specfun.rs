//! Special-function kernel: Kummer's `M(a, b, x)`, Gamma, Hermite functions of
//! non-integer order, and the helpers used to count canard rotations.
//!
//! `M` is summed as a Taylor series in double-double arithmetic. Negative
//! arguments go through Kummer's transformation `M(a,b,x) = e^x M(b-a,b,-x)`
//! unless the series terminates. The extra precision absorbs the cancellation in
//! the alternating regime `a < 0, x > 0` over the working range `|x| <= 50`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const MAX_TERMS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn abs(self) -> f64 {
        self.to_f64().abs()
    }

    #[inline]
    fn quick_two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        Dd { hi: s, lo: b - (s - a) }
    }

    #[inline]
    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }

    fn add(self, o: Dd) -> Dd {
        let (s, e) = Self::two_sum(self.hi, o.hi);
        let (t, f) = Self::two_sum(self.lo, o.lo);
        let e = e + t;
        let r = Self::quick_two_sum(s, e);
        Self::quick_two_sum(r.hi, r.lo + f)
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p) + (self.hi * o.lo + self.lo * o.hi);
        Self::quick_two_sum(p, e)
    }

    fn mul_f64(self, o: f64) -> Dd {
        self.mul(Dd::from_f64(o))
    }

    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.add(o.mul_f64(-q1));
        let q2 = r.hi / o.hi;
        let r = r.add(o.mul_f64(-q2));
        let q3 = r.hi / o.hi;
        Self::quick_two_sum(q1, q2).add(Dd::from_f64(q3))
    }
}

fn is_nonpositive_integer(v: f64) -> bool {
    v <= 0.0 && v == v.floor()
}

/// Taylor series of `M(a, b, x)` accumulated in double-double.
fn kummer_series(a: f64, b: f64, x: f64) -> Result<f64> {
    let xd = Dd::from_f64(x);
    let ad = Dd::from_f64(a);
    let bd = Dd::from_f64(b);
    let mut term = Dd::ONE;
    let mut sum = Dd::ONE;
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        let num = ad.add(Dd::from_f64(nf)).mul(xd);
        if num.hi == 0.0 {
            return Ok(sum.to_f64());
        }
        let den = bd.add(Dd::from_f64(nf)).mul_f64(nf + 1.0);
        term = term.mul(num).div(den);
        sum = sum.add(term);
        if !sum.hi.is_finite() || sum.abs() > 1e300 {
            return Err(Error::Overflow(format!("M({a}, {b}, {x})")));
        }
        // tail is geometric once the term ratio drops below 1/2
        let ratio = ((a + nf + 1.0) * x / ((b + nf + 1.0) * (nf + 2.0))).abs();
        if ratio < 0.5 && term.abs() <= 1e-34 * sum.abs().max(1e-300) {
            return Ok(sum.to_f64());
        }
    }
    Err(Error::NoConvergence(format!(
        "Kummer series M({a}, {b}, {x}) after {MAX_TERMS} terms"
    )))
}

/// Kummer's confluent hypergeometric function `M(a, b, x) = 1F1(a; b; x)`.
pub fn kummer_1f1(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite() && x.is_finite()) {
        return Err(Error::Domain(format!("non-finite argument to M({a}, {b}, {x})")));
    }
    if is_nonpositive_integer(b) {
        return Err(Error::KummerPole(b));
    }
    if x == 0.0 || a == 0.0 {
        return Ok(1.0);
    }
    if a == b {
        let v = x.exp();
        return if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Overflow(format!("M({a}, {b}, {x})")))
        };
    }
    if x < 0.0 && !is_nonpositive_integer(a) {
        let m = kummer_series(b - a, b, -x)?;
        return Ok(x.exp() * m);
    }
    kummer_series(a, b, x)
}

/// Large-parameter approximation
/// `M(a,b,x) ~ Gamma(b)/sqrt(pi) (x(b-2a)/2)^((1-2b)/4) e^(x/2) cos(sqrt(2x(b-2a)) + pi(1-2b)/4)`.
pub fn asymptotic_1f1(a: f64, b: f64, x: f64) -> Result<f64> {
    let kappa = b - 2.0 * a;
    if !(x > 0.0 && kappa > 0.0) {
        return Err(Error::Domain(format!(
            "asymptotic form needs x > 0 and b - 2a > 0 (x = {x}, b - 2a = {kappa})"
        )));
    }
    let g = gamma_fn(b)?;
    let amp = g / PI.sqrt() * (0.5 * x * kappa).powf(0.25 * (1.0 - 2.0 * b)) * (0.5 * x).exp();
    Ok(amp * ((2.0 * x * kappa).sqrt() + 0.25 * PI * (1.0 - 2.0 * b)).cos())
}

/// Largest integer strictly less than `n`.
pub fn strict_floor(n: f64) -> i64 {
    n.ceil() as i64 - 1
}

/// Number of real zeros of `tau -> M(-a, b, tau^2/2)`, namely `2 <a + 1>`.
pub fn count_real_zeros_1f1(a: f64, b: f64) -> Result<i64> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("zero count needs a > 0, got {a}")));
    }
    if !(b > 0.0) {
        return Err(Error::Domain(format!("zero count needs b > 0, got {b}")));
    }
    Ok(2 * strict_floor(a + 1.0))
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn gamma_positive(x: f64) -> f64 {
    // Lanczos for x >= 1/2
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

/// Euler's Gamma function.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if is_nonpositive_integer(x) {
        return Err(Error::GammaPole(x));
    }
    if x == x.floor() && x <= 171.0 {
        // exact factorials for small positive integers
        let mut acc = 1.0;
        let mut k = 2.0;
        while k < x {
            acc *= k;
            k += 1.0;
        }
        return Ok(acc);
    }
    if x < 0.5 {
        let s = (PI * x).sin();
        return Ok(PI / (s * gamma_positive(1.0 - x)));
    }
    let g = gamma_positive(x);
    if g.is_finite() {
        Ok(g)
    } else {
        Err(Error::Overflow(format!("Gamma({x})")))
    }
}

/// `1/Gamma(x)`, which is entire: zero at the poles of Gamma.
pub fn rgamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        return 0.0;
    }
    match gamma_fn(x) {
        Ok(g) => 1.0 / g,
        Err(_) => 0.0,
    }
}

/// Physicists' Hermite function `H_nu(x)` for real order, through
/// `H_nu(x) = 2^nu sqrt(pi) [ M(-nu/2, 1/2, x^2)/Gamma((1-nu)/2)
///                           - 2x M((1-nu)/2, 3/2, x^2)/Gamma(-nu/2) ]`.
pub fn hermite_general(nu: f64, x: f64) -> Result<f64> {
    let x2 = x * x;
    let even = rgamma(0.5 * (1.0 - nu));
    let odd = rgamma(-0.5 * nu);
    let mut acc = 0.0;
    if even != 0.0 {
        acc += even * kummer_1f1(-0.5 * nu, 0.5, x2)?;
    }
    if odd != 0.0 {
        acc -= 2.0 * x * odd * kummer_1f1(0.5 * (1.0 - nu), 1.5, x2)?;
    }
    Ok(2f64.powf(nu) * PI.sqrt() * acc)
}

/// Sign selector for [`d_plus_minus`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DSign {
    Plus,
    Minus,
}

/// `D±[m, mu, tau] = 2^(±(mu+2)/(2 mu)) e^(-tau^2/4) H_(m ∓ 1/mu)(tau/sqrt 2)`.
pub fn d_plus_minus(sign: DSign, m: f64, mu: f64, tau: f64) -> Result<f64> {
    let s = match sign {
        DSign::Plus => 1.0,
        DSign::Minus => -1.0,
    };
    let order = m - s / mu;
    let pre = 2f64.powf(s * (mu + 2.0) / (2.0 * mu)) * (-0.25 * tau * tau).exp();
    Ok(pre * hermite_general(order, tau / std::f64::consts::SQRT_2)?)
}

/// Odd solution of `zeta'' - tau zeta' + zeta/mu = 0` with `zeta'(0) = 1`, built from
/// Hermite functions as the odd part of `H_(1/mu)(tau/sqrt 2)`, i.e. from `D-[0, mu, ±tau]`.
pub fn hermite_odd_solution(mu: f64, tau: f64) -> Result<f64> {
    let nu = 1.0 / mu;
    let lift = 2f64.powf((mu + 2.0) / (2.0 * mu)) * (0.25 * tau * tau).exp();
    let plus = lift * d_plus_minus(DSign::Minus, 0.0, mu, tau)?;
    let minus = lift * d_plus_minus(DSign::Minus, 0.0, mu, -tau)?;
    // d/dtau H_nu(tau/sqrt2) at 0 is sqrt(2) nu H_(nu-1)(0)
    let h_prev0 = 2f64.powf(nu - 1.0) * PI.sqrt() * rgamma(1.0 - 0.5 * nu);
    let slope = std::f64::consts::SQRT_2 * nu * h_prev0;
    if slope == 0.0 {
        return Err(Error::Degenerate(format!(
            "H_nu has no odd part for even integer nu = {nu}"
        )));
    }
    Ok((plus - minus) / (2.0 * slope))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kummer_special_values() {
        assert_eq!(kummer_1f1(-2.3, 0.5, 0.0).unwrap(), 1.0);
        for &x in &[-3.0, -0.5, 0.1, 2.0, 10.0] {
            assert_relative_eq!(kummer_1f1(1.0, 1.0, x).unwrap(), f64::exp(x), max_relative = 1e-14);
            assert_relative_eq!(kummer_1f1(-1.0, 0.5, x).unwrap(), 1.0 - 2.0 * x, max_relative = 1e-14);
        }
        // M(1, 2, x) = (e^x - 1)/x
        for &x in &[-20.0, -1.0, 0.3, 25.0] {
            assert_relative_eq!(
                kummer_1f1(1.0, 2.0, x).unwrap(),
                f64::exp_m1(x) / x,
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn kummer_errors() {
        assert_eq!(kummer_1f1(1.0, 0.0, 1.0), Err(Error::KummerPole(0.0)));
        assert_eq!(kummer_1f1(1.0, -2.0, 1.0), Err(Error::KummerPole(-2.0)));
        assert!(matches!(kummer_1f1(2.0, 0.5, 800.0), Err(Error::Overflow(_))));
    }

    #[test]
    fn gamma_values() {
        assert_relative_eq!(gamma_fn(0.5).unwrap(), PI.sqrt(), max_relative = 1e-14);
        assert_eq!(gamma_fn(5.0).unwrap(), 24.0);
        assert_relative_eq!(gamma_fn(-0.5).unwrap(), -2.0 * PI.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(gamma_fn(-3.75).unwrap(), 0.267_866_128_861_416_6, max_relative = 1e-12);
        assert_eq!(gamma_fn(-2.0), Err(Error::GammaPole(-2.0)));
        assert_eq!(rgamma(-3.0), 0.0);
        for &x in &[0.3, 1.7, 4.25, 9.9, -1.3] {
            let lhs = gamma_fn(x + 1.0).unwrap();
            let rhs = x * gamma_fn(x).unwrap();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-13);
        }
    }

    #[test]
    fn strict_floor_is_strict() {
        assert_eq!(strict_floor(3.75), 3);
        assert_eq!(strict_floor(3.0), 2);
        assert_eq!(strict_floor(-0.5), -1);
        assert_eq!(strict_floor(0.0), -1);
    }

    #[test]
    fn zero_count_formula() {
        assert_eq!(count_real_zeros_1f1(3.75, 1.5).unwrap(), 8);
        assert_eq!(count_real_zeros_1f1(0.5, 0.5).unwrap(), 2);
        assert!(count_real_zeros_1f1(-1.0, 0.5).is_err());
    }

    #[test]
    fn hermite_integer_orders() {
        assert_relative_eq!(hermite_general(2.0, 1.0).unwrap(), 2.0, max_relative = 1e-13);
        for &x in &[-1.5, 0.0, 0.7, 2.2] {
            assert_relative_eq!(hermite_general(0.0, x).unwrap(), 1.0, max_relative = 1e-13);
            assert_relative_eq!(hermite_general(1.0, x).unwrap(), 2.0 * x, max_relative = 1e-12, epsilon = 1e-14);
            let h3 = 8.0 * x * x * x - 12.0 * x;
            assert_relative_eq!(hermite_general(3.0, x).unwrap(), h3, max_relative = 1e-11, epsilon = 1e-12);
        }
    }

    #[test]
    fn hermite_noninteger_reference() {
        // reference from an independent arbitrary-precision evaluation
        assert_relative_eq!(hermite_general(2.3, 0.7).unwrap(), -1.259_941_155_442_399_4, max_relative = 1e-12);
    }

    #[test]
    fn asymptotic_domain() {
        assert!(asymptotic_1f1(1.0, 0.5, 1.0).is_err());
        assert!(asymptotic_1f1(-1.0, 0.5, -1.0).is_err());
        let v = asymptotic_1f1(-3.75, 0.5, 10.0).unwrap();
        assert!(v.is_finite());
        // b = 1/2 reduces to e^(x/2) cos(sqrt(2x(1/2-2a)))
        assert_relative_eq!(v, (5.0f64).exp() * (160.0f64).sqrt().cos(), max_relative = 1e-12);
    }
}
