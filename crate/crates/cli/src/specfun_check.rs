//! Property grid for the special-function kernel: agreement with the
//! extended-precision oracle, the Kummer transformation, the derivative
//! identity and the zero-count law.

use pinchfold::specfun::{count_real_zeros_1f1, kummer_1f1};
use rayon::prelude::*;
use serde::Serialize;

use crate::oracle::kummer_reference;

/// One point of the acceptance grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub a: f64,
    pub b: f64,
    pub x: f64,
}

/// 500 points: 25 values of `a` in `[-20, 5]`, 10 values of `x` in
/// `[-50, 50]` and `b` in `{1/2, 3/2}`.
pub fn acceptance_grid() -> Vec<GridPoint> {
    let mut g = Vec::with_capacity(500);
    for i in 0..25 {
        let a = -20.0 + (i as f64 + std::f64::consts::FRAC_1_PI);
        for j in 0..10 {
            let x = -50.0 + 100.0 * j as f64 / 9.0;
            for b in [0.5, 1.5] {
                g.push(GridPoint { a, b, x });
            }
        }
    }
    g
}

/// Worst deviation of one check and where it occurred.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Worst {
    pub error: f64,
    pub at: Option<GridPoint>,
    pub tolerance: f64,
}

impl Worst {
    fn new(tolerance: f64) -> Self {
        Self { error: 0.0, at: None, tolerance }
    }

    fn merge(mut self, o: Worst) -> Self {
        if o.error > self.error || o.error.is_nan() {
            self.error = o.error;
            self.at = o.at;
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.error <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroCount {
    pub a: f64,
    pub b: f64,
    pub scanned: usize,
    pub law: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpecfunReport {
    pub grid_points: usize,
    pub oracle: Worst,
    pub transformation: Worst,
    pub derivative: Worst,
    pub zero_counts: Vec<ZeroCount>,
}

impl SpecfunReport {
    pub fn passed(&self) -> bool {
        self.oracle.passed()
            && self.transformation.passed()
            && self.derivative.passed()
            && self.zero_counts.iter().all(|z| z.scanned as i64 == z.law)
    }
}

fn rel(v: f64, want: f64) -> f64 {
    if v == want {
        0.0
    } else {
        (v - want).abs() / want.abs()
    }
}

/// Relative deviation of `kummer_1f1` from the oracle.
pub fn oracle_error(p: GridPoint) -> f64 {
    match (kummer_1f1(p.a, p.b, p.x), kummer_reference(p.a, p.b, p.x)) {
        (Ok(v), Some(want)) => rel(v, want),
        _ => f64::NAN,
    }
}

/// Relative deviation of `M(a,b,x)` from `e^x M(b-a,b,-x)`.
pub fn transformation_error(p: GridPoint) -> f64 {
    match (kummer_1f1(p.a, p.b, p.x), kummer_1f1(p.b - p.a, p.b, -p.x)) {
        (Ok(l), Ok(r)) => rel(p.x.exp() * r, l),
        _ => f64::NAN,
    }
}

/// Deviation of the central difference of `M` with step `1e-6` from
/// `(a/b) M(a+1,b+1,x)`, relative to `max(|M'|, |M|)`.
pub fn derivative_error(p: GridPoint) -> f64 {
    let h = 1e-6;
    let (xp, xm) = (p.x + h, p.x - h);
    let f = |x: f64| kummer_1f1(p.a, p.b, x);
    match (f(xp), f(xm), f(p.x), kummer_1f1(p.a + 1.0, p.b + 1.0, p.x)) {
        (Ok(fp), Ok(fm), Ok(f0), Ok(m1)) => {
            let exact = p.a / p.b * m1;
            // divide by the representable spacing, not 2h
            let fd = (fp - fm) / (xp - xm);
            (fd - exact).abs() / exact.abs().max(f0.abs())
        }
        _ => f64::NAN,
    }
}

/// Real zeros of `tau -> M(-a, b, tau^2/2)` on a symmetric window that
/// contains all of them, located by sign changes and confirmed by bisection.
pub fn scan_zero_count(a: f64, b: f64) -> usize {
    let x_max = 4.0 * a + 2.0 * b + 20.0;
    let t_max = (2.0 * x_max).sqrt();
    let n = 20_000;
    let g = |t: f64| kummer_1f1(-a, b, 0.5 * t * t).unwrap_or(f64::NAN);
    let ts: Vec<f64> = (0..=n).map(|i| -t_max + 2.0 * t_max * i as f64 / n as f64).collect();
    let mut count = 0;
    for w in ts.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let (mut glo, ghi) = (g(lo), g(hi));
        if glo == 0.0 {
            count += 1;
            continue;
        }
        if glo * ghi >= 0.0 {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let gm = g(mid);
            if gm == 0.0 || hi - lo <= 1e-14 * mid.abs().max(1.0) {
                break;
            }
            if gm * glo < 0.0 {
                hi = mid;
            } else {
                lo = mid;
                glo = gm;
            }
        }
        if (g(lo) * g(hi)).is_sign_negative() || g(0.5 * (lo + hi)) == 0.0 {
            count += 1;
        }
    }
    count
}

/// Zero-count pairs checked against the law `2 <a + 1>`.
pub const ZERO_PAIRS: [(f64, f64); 5] = [(0.5, 0.5), (1.5, 1.5), (2.5, 0.5), (3.75, 1.5), (4.2, 0.5)];

pub fn run_specfun_check() -> SpecfunReport {
    let grid = acceptance_grid();
    let worst = |tol: f64, f: fn(GridPoint) -> f64| {
        grid.par_iter()
            .map(|&p| Worst { error: f(p), at: Some(p), tolerance: tol })
            .reduce(|| Worst::new(tol), Worst::merge)
    };
    let zero_counts = ZERO_PAIRS
        .par_iter()
        .map(|&(a, b)| ZeroCount {
            a,
            b,
            scanned: scan_zero_count(a, b),
            law: count_real_zeros_1f1(a, b).unwrap_or(-1),
        })
        .collect();
    SpecfunReport {
        grid_points: grid.len(),
        oracle: worst(1e-10, oracle_error),
        transformation: worst(1e-9, transformation_error),
        derivative: worst(1e-9, derivative_error),
        zero_counts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_covers_the_domain() {
        let g = acceptance_grid();
        assert_eq!(g.len(), 500);
        assert!(g.iter().all(|p| p.a >= -20.0 && p.a <= 5.0 && p.x.abs() <= 50.0));
        assert!(g.iter().any(|p| p.x == -50.0) && g.iter().any(|p| p.x == 50.0));
    }

    #[test]
    fn zero_scan_matches_reference_example() {
        assert_eq!(scan_zero_count(3.75, 1.5), 8);
    }

    #[test]
    fn kernel_passes_the_grid() {
        let r = run_specfun_check();
        assert!(r.passed(), "{r:#?}");
    }
}
