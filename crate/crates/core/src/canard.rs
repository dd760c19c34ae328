//! Secondary canards of the second pinch.
//!
//! Near the weak canard the `W < 0` field is linearized in
//! `dW = W - 1 + (2 eps)^(-eps)`. With `zeta = z - mu y/2` and
//! `tau = y sqrt(mu/eps)` the linear system becomes the Hermite equation
//! `zeta'' - tau zeta' + zeta/mu = 0`, whose odd solution with `zeta'(0) = c`
//! is `zeta = c t M(a, 3/2, x)` where `a = (mu-1)/(2 mu)` and
//! `x = mu t^2/(2 eps)`. Then
//!
//! ```text
//! W(t) = 1 - (2 eps)^(-eps) (1 - 2 eps c M(a, 1/2, x))
//! z(t) = mu t/2 + c t M(a, 3/2, x)
//! ```
//!
//! A secondary canard leaves the sliding region tangentially at `t = -t_c`,
//! rotates about the weak canard in `W < 0`, and returns tangentially at
//! `t = t_c`: `W(t_c) = W'(t_c) = 0`. Each extremum of `M(a, 1/2, x)` on
//! `x > 0` carries one such solution, giving `<(1-mu)/(2 mu)>` canards.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::export::{fmt_f64, write_json, CsvTable, Provenance};
use crate::filippov::{self, FilippovOptions, PiecewiseSmoothSystem};
use crate::models::FoldedNodeParams;
use crate::pinch::{self, Side};
use crate::specfun::{asymptotic_1f1, kummer_1f1, strict_floor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinearizedSide {
    /// Expansion about the tangency `(W, z) = (0, -mu y/(4 eps))`.
    WPlus,
    /// Expansion about the weak canard.
    WMinus,
}

/// `(2 eps)^(-eps)`, the distance of the weak canard below `W = 1`.
fn weak_offset(p: &FoldedNodeParams) -> f64 {
    (2.0 * p.eps()).powf(-p.eps())
}

/// Leading-order fields on either side of `W = 0`.
pub fn eval_linearized(p: &FoldedNodeParams, side: LinearizedSide, state: [f64; 3]) -> [f64; 3] {
    let (mu, eps) = (p.mu(), p.eps());
    let [w, y, z] = state;
    match side {
        LinearizedSide::WPlus => [
            (mu * y + 4.0 * z * eps) / (2.0 * eps),
            1.0,
            eps + p.p0_level(),
        ],
        LinearizedSide::WMinus => {
            let dw = w - 1.0 + weak_offset(p);
            let k = (2.0 * eps).powf(eps);
            [
                (mu * y - 2.0 * z) / k + mu * y / eps * dw,
                1.0,
                mu / 2.0 + k / (2.0 * eps) * dw,
            ]
        }
    }
}

/// `(y, z) -> (tau, zeta) = (y sqrt(mu/eps), z - mu y/2)`.
pub fn hermite_transform(p: &FoldedNodeParams, y: f64, z: f64) -> (f64, f64) {
    ((p.mu() / p.eps()).sqrt() * y, z - p.mu() * y / 2.0)
}

pub fn hermite_transform_inv(p: &FoldedNodeParams, tau: f64, zeta: f64) -> (f64, f64) {
    let y = tau * (p.eps() / p.mu()).sqrt();
    (y, zeta + p.mu() * y / 2.0)
}

/// Slope `z/y` of the tangency line of the linearized `W < 0` field.
pub fn shifted_tangency_slope(p: &FoldedNodeParams) -> f64 {
    let eps = p.eps();
    p.mu() * (1.0 + eps - (2.0 * eps).powf(eps)) / (2.0 * eps)
}

/// Solution of the linearized `W < 0` system through `y = z = 0` at `t = 0`
/// with `z'(0) - mu/2 = zdot0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HermiteSolution {
    pub params: FoldedNodeParams,
    pub zdot0: f64,
}

impl HermiteSolution {
    pub fn new(params: FoldedNodeParams, zdot0: f64) -> Self {
        Self { params, zdot0 }
    }

    fn a(&self) -> f64 {
        let mu = self.params.mu();
        (mu - 1.0) / (2.0 * mu)
    }

    fn x(&self, t: f64) -> f64 {
        self.params.mu() * t * t / (2.0 * self.params.eps())
    }

    /// `zeta(t) = z - mu t/2`.
    pub fn zeta(&self, t: f64) -> Result<f64> {
        if self.zdot0 == 0.0 {
            return Ok(0.0);
        }
        Ok(self.zdot0 * t * kummer_1f1(self.a(), 1.5, self.x(t))?)
    }

    /// `zeta'(t) = c M(a, 1/2, x)`.
    pub fn zeta_dot(&self, t: f64) -> Result<f64> {
        if self.zdot0 == 0.0 {
            return Ok(0.0);
        }
        Ok(self.zdot0 * kummer_1f1(self.a(), 0.5, self.x(t))?)
    }

    /// `(W, y, z)` at time `t`.
    pub fn eval(&self, t: f64) -> Result<[f64; 3]> {
        let p = &self.params;
        let eps = p.eps();
        let w = 1.0 - weak_offset(p) * (1.0 - 2.0 * eps * self.zeta_dot(t)?);
        Ok([w, t, p.mu() * t / 2.0 + self.zeta(t)?])
    }

    /// `W'(t) = (2 eps)^(1-eps) c (2a) M(a+1, 3/2, x) mu t/eps`.
    pub fn w_dot(&self, t: f64) -> Result<f64> {
        if self.zdot0 == 0.0 {
            return Ok(0.0);
        }
        let (mu, eps) = (self.params.mu(), self.params.eps());
        let a = self.a();
        let m = kummer_1f1(a + 1.0, 1.5, self.x(t))?;
        Ok((2.0 * eps).powf(1.0 - eps) * self.zdot0 * 2.0 * a * m * mu * t / eps)
    }

    /// `W''(t)`, used by the grazing Newton solve.
    fn w_ddot(&self, t: f64) -> Result<f64> {
        if self.zdot0 == 0.0 {
            return Ok(0.0);
        }
        let (mu, eps) = (self.params.mu(), self.params.eps());
        let a = self.a();
        let x = self.x(t);
        let m = kummer_1f1(a + 1.0, 1.5, x)?;
        // d/dx M(a+1, 3/2, x) = (a+1)/(3/2) M(a+2, 5/2, x)
        let dm = (a + 1.0) / 1.5 * kummer_1f1(a + 2.0, 2.5, x)?;
        let pre = (2.0 * eps).powf(1.0 - eps) * self.zdot0 * 2.0 * a * mu / eps;
        Ok(pre * (m + t * dm * mu * t / eps))
    }
}

/// `(W, y, z)` of the linearized `W < 0` solution with free constant `zdot0`.
pub fn solve_w_minus(p: &FoldedNodeParams, zdot0: f64, t: f64) -> Result<[f64; 3]> {
    HermiteSolution::new(*p, zdot0).eval(t)
}

/// `(W(t_c), W'(t_c))`; both vanish where the rotation arc grazes `W = 0`.
pub fn grazing_residual(p: &FoldedNodeParams, t_c: f64, zdot0: f64) -> Result<[f64; 2]> {
    let sol = HermiteSolution::new(*p, zdot0);
    let s = sol.eval(t_c)?;
    let f = eval_linearized(p, LinearizedSide::WMinus, s);
    Ok([s[0], f[0]])
}

/// Number of secondary canards predicted by the count law, `<(1-mu)/(2mu)>`.
pub fn canard_count_law(mu: f64) -> i64 {
    strict_floor((1.0 - mu) / (2.0 * mu)).max(0)
}

/// Root of the grazing problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrazingRoot {
    pub t_c: f64,
    pub zdot0: f64,
    pub rotation_number: u32,
    pub residual: [f64; 2],
}

/// Seed of the grazing scan that did not converge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedFailure {
    pub t_seed: f64,
    pub reason: String,
}

/// Search settings for [`find_grazing_roots`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanardSearchOptions {
    /// Uniform scan points over `(0, t_max]`.
    pub scan_points: usize,
    /// Newton stops once both scaled residuals are below this.
    pub newton_tol: f64,
    pub max_newton: usize,
    /// The scan extends to this multiple of the last zero in `tau`.
    pub tau_margin: f64,
}

impl Default for CanardSearchOptions {
    fn default() -> Self {
        Self {
            scan_points: 4000,
            newton_tol: 1e-13,
            max_newton: 60,
            tau_margin: 1.2,
        }
    }
}

/// Which evaluator of `M` drives a zero scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kernel {
    Series,
    Asymptotic,
}

fn kernel_eval(k: Kernel, a: f64, b: f64, x: f64) -> Result<f64> {
    match k {
        Kernel::Series => kummer_1f1(a, b, x),
        Kernel::Asymptotic => asymptotic_1f1(a, b, x),
    }
}

/// Zeros in `x > 0` of `M(a+1, 3/2, x)`, i.e. extrema of `M(a, 1/2, x)`,
/// located on a uniform scan over `(0, x_max]` and refined by bisection.
pub fn grazing_abscissae(p: &FoldedNodeParams, kernel: Kernel, x_max: f64, n: usize) -> Result<Vec<f64>> {
    let mu = p.mu();
    let a1 = (mu - 1.0) / (2.0 * mu) + 1.0;
    let f = |x: f64| kernel_eval(kernel, a1, 1.5, x);
    let mut out = Vec::new();
    let mut x0 = x_max / n as f64;
    let mut f0 = f(x0)?;
    for i in 2..=n {
        let x1 = x_max * i as f64 / n as f64;
        let f1 = f(x1)?;
        if f0 != 0.0 && f0.signum() != f1.signum() {
            let r = crate::roots::brent(|x| f(x).unwrap_or(f64::NAN), x0, x1, 1e-15 * x1)?;
            out.push(r);
        }
        x0 = x1;
        f0 = f1;
    }
    Ok(out)
}

/// Upper end of an `x` range containing every positive zero of
/// `M(a+1, 3/2, x)`: for `a+1 = -n` the zeros lie below `4n + 2b + 10`.
pub fn zero_bound(p: &FoldedNodeParams) -> f64 {
    let mu = p.mu();
    let n = (-((mu - 1.0) / (2.0 * mu) + 1.0)).max(0.0);
    4.0 * n + 13.0
}

/// Grazing points found by scanning `M(a+1, 3/2, x)`, evaluated with
/// `kernel`, over `(0, zero_bound]` on `n` points.
pub fn count_grazings(p: &FoldedNodeParams, kernel: Kernel, n: usize) -> Result<usize> {
    Ok(grazing_abscissae(p, kernel, zero_bound(p), n)?.len())
}

fn zeta_zero_count(sol: &HermiteSolution, t_c: f64, n: usize) -> Result<usize> {
    // midpoint grid on (-t_c, t_c); t = 0 falls between two samples
    let h = 2.0 * t_c / n as f64;
    let mut count = 0usize;
    let mut prev = sol.zeta(-t_c + 0.5 * h)?;
    for j in 1..n {
        let v = sol.zeta(-t_c + (j as f64 + 0.5) * h)?;
        if v != 0.0 && prev != 0.0 && v.signum() != prev.signum() {
            count += 1;
        }
        if v != 0.0 {
            prev = v;
        }
    }
    Ok(count)
}

/// Complete oscillations of `zeta` about the weak canard on `(-t_c, t_c)`:
/// `<N/2>` for `N` sign changes of `zeta`.
pub fn rotation_number(sol: &HermiteSolution, t_c: f64) -> Result<u32> {
    if sol.zdot0 == 0.0 {
        return Err(Error::Degenerate(
            "the weak canard has no rotations".into(),
        ));
    }
    let n = zeta_zero_count(sol, t_c, 20_000)?;
    Ok(strict_floor(n as f64 / 2.0).max(0) as u32)
}

fn newton_grazing(p: &FoldedNodeParams, t0: f64, c0: f64, o: &CanardSearchOptions) -> Result<(f64, f64, [f64; 2])> {
    let (mut t, mut c) = (t0, c0);
    let scale_w = 1.0;
    let res = |t: f64, c: f64| -> Result<([f64; 2], HermiteSolution)> {
        let sol = HermiteSolution::new(*p, c);
        let r = grazing_residual(p, t, c)?;
        Ok(([r[0] / scale_w, r[1]], sol))
    };
    let (mut r, mut sol) = res(t, c)?;
    let wd_scale = {
        let s = sol.w_ddot(t)?.abs().max(1e-12);
        s * t.max(1e-3)
    };
    let norm = |r: &[f64; 2]| r[0].abs().max(r[1].abs() / wd_scale);
    for _ in 0..o.max_newton {
        if norm(&r) < o.newton_tol {
            return Ok((t, c, grazing_residual(p, t, c)?));
        }
        // analytic Jacobian of (W, W') in (t, c)
        let x = p.mu() * t * t / (2.0 * p.eps());
        let a = (p.mu() - 1.0) / (2.0 * p.mu());
        let eps = p.eps();
        let dw_dc = weak_offset(p) * 2.0 * eps * kummer_1f1(a, 0.5, x)?;
        let dw_dt = sol.w_dot(t)?;
        let dwd_dt = sol.w_ddot(t)?;
        let dwd_dc = if c != 0.0 { dw_dt / c } else { 0.0 };
        let det = dw_dt * dwd_dc - dw_dc * dwd_dt;
        if det == 0.0 || !det.is_finite() {
            return Err(Error::SingularMatrix);
        }
        let dt = (r[0] * dwd_dc - dw_dc * r[1]) / det;
        let dc = (dw_dt * r[1] - dwd_dt * r[0]) / det;
        let mut lam = 1.0;
        let n0 = norm(&r);
        loop {
            let (tn, cn) = (t - lam * dt, c - lam * dc);
            if tn > 0.0 {
                if let Ok((rn, sn)) = res(tn, cn) {
                    if norm(&rn) < n0 || lam < 1e-4 {
                        t = tn;
                        c = cn;
                        r = rn;
                        sol = sn;
                        break;
                    }
                }
            }
            lam *= 0.5;
            if lam < 1e-6 {
                return Err(Error::NoConvergence(format!(
                    "damped Newton stalled at t_c = {t}"
                )));
            }
        }
    }
    Err(Error::NoConvergence(format!(
        "grazing Newton did not converge from t_c = {t0}"
    )))
}

/// All grazing roots `(t_c, zdot0)`, one per extremum of `M(a, 1/2, x)`,
/// sorted by `t_c`. Seeds that fail are returned alongside.
pub fn find_grazing_roots(p: &FoldedNodeParams, o: &CanardSearchOptions) -> Result<(Vec<GrazingRoot>, Vec<SeedFailure>)> {
    let (mu, eps) = (p.mu(), p.eps());
    let a = (mu - 1.0) / (2.0 * mu);
    let kk = (1.0 - (2.0 * eps).powf(eps)) / (2.0 * eps);
    let zeros = grazing_abscissae(p, Kernel::Series, zero_bound(p), o.scan_points)?;
    let x_last = match zeros.last() {
        Some(&x) => x,
        None => return Ok((Vec::new(), Vec::new())),
    };
    // residual scan over t in (0, tau_max sqrt(eps/mu)]
    let tau_max = o.tau_margin * (2.0 * x_last).sqrt();
    let t_max = tau_max * (eps / mu).sqrt();
    let wd_shape = |t: f64| kummer_1f1(a + 1.0, 1.5, mu * t * t / (2.0 * eps));
    let mut roots = Vec::new();
    let mut failures = Vec::new();
    let brackets = crate::roots::scan_brackets(|t| wd_shape(t).unwrap_or(f64::NAN), t_max / o.scan_points as f64, t_max, o.scan_points);
    for (lo, hi) in brackets {
        let t_seed = 0.5 * (lo + hi);
        let x = mu * t_seed * t_seed / (2.0 * eps);
        let c_seed = kk / kummer_1f1(a, 0.5, x)?;
        match newton_grazing(p, t_seed, c_seed, o) {
            Ok((t_c, zdot0, residual)) => {
                let sol = HermiteSolution::new(*p, zdot0);
                let rotation_number = rotation_number(&sol, t_c)?;
                roots.push(GrazingRoot {
                    t_c,
                    zdot0,
                    rotation_number,
                    residual,
                });
            }
            Err(e) => failures.push(SeedFailure {
                t_seed,
                reason: e.to_string(),
            }),
        }
    }
    roots.sort_by(|a, b| a.t_c.total_cmp(&b.t_c));
    roots.dedup_by(|a, b| (a.t_c - b.t_c).abs() < 1e-9 * b.t_c);
    Ok((roots, failures))
}

/// Second-pinch system with both side fields replaced by their leading-order
/// expansions; its `W < 0` tangency line is [`shifted_tangency_slope`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizedSecondPinch {
    pub params: FoldedNodeParams,
}

impl PiecewiseSmoothSystem for LinearizedSecondPinch {
    fn side_field(&self, state: [f64; 3], side: Side) -> [f64; 3] {
        let s = match side {
            Side::Plus => LinearizedSide::WPlus,
            Side::Minus => LinearizedSide::WMinus,
        };
        eval_linearized(&self.params, s, state)
    }

    fn sliding_field(&self, y: f64, z: f64) -> Result<[f64; 2]> {
        let (a, b) = crate::models::eval_slow_projected(&self.params, y, z)?;
        Ok([a, b])
    }

    fn sliding_rescaled(&self, y: f64, z: f64) -> ([f64; 2], f64) {
        filippov::musliding_rescaled(&self.params, y, z)
    }
}

/// Segment of an assembled canard.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Segment {
    ArrivingTail,
    RotationArc,
    DepartingTail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanardSample {
    pub t: f64,
    /// `(W, y, z)`.
    pub state: [f64; 3],
    pub segment: Segment,
}

/// A secondary canard: sliding tail, rotation arc, sliding tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondaryCanard {
    pub mu: f64,
    pub eps: f64,
    pub t_c: f64,
    pub zdot0: f64,
    pub rotation_number: u32,
    pub samples: Vec<CanardSample>,
    /// Largest gap between consecutive segments at the junctions.
    pub junction_error: f64,
}

/// Assembly settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssemblyOptions {
    /// Duration of each sliding tail.
    pub tail_time: f64,
    pub arc_points: usize,
    pub filippov: FilippovOptions,
    /// Allowed distance of a junction from the shifted tangency line.
    pub junction_tol: f64,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self {
            tail_time: 3.0,
            arc_points: 801,
            filippov: FilippovOptions {
                tol: 1e-11,
                sample_dt: Some(0.01),
                ..FilippovOptions::default()
            },
            junction_tol: 1e-8,
        }
    }
}

/// Join the rotation arc of `root` to sliding tails of the linearized second pinch.
pub fn assemble_canard(p: &FoldedNodeParams, root: &GrazingRoot, o: &AssemblyOptions) -> Result<SecondaryCanard> {
    let sol = HermiteSolution::new(*p, root.zdot0);
    let t_c = root.t_c;
    let end = sol.eval(t_c)?;
    let slope = shifted_tangency_slope(p);
    let off_line = (end[2] - slope * end[1]).abs();
    let junction = end[0].abs().max(off_line);
    if junction > o.junction_tol {
        return Err(Error::JunctionMismatch(junction));
    }
    let sys = LinearizedSecondPinch { params: *p };

    let arrive = filippov::slide(&sys, -end[1], -end[2], -t_c, -t_c - o.tail_time, &o.filippov)?;
    let depart = filippov::slide(&sys, end[1], end[2], t_c, t_c + o.tail_time, &o.filippov)?;
    for (tr, want) in [(&arrive, -t_c - o.tail_time), (&depart, t_c + o.tail_time)] {
        let last = tr.last().unwrap();
        if (last.t - want).abs() > 1e-9 * want.abs() {
            return Err(Error::Degenerate(format!(
                "sliding tail left the sliding region at t = {}",
                last.t
            )));
        }
    }

    let mut samples = Vec::new();
    for s in arrive.samples.iter().rev() {
        samples.push(CanardSample {
            t: s.t,
            state: s.state,
            segment: Segment::ArrivingTail,
        });
    }
    let n = o.arc_points.max(3);
    let arc_start = samples.len();
    for j in 0..n {
        // symmetric grid, exact at both ends
        let t = if 2 * j + 1 == n {
            0.0
        } else {
            -t_c + 2.0 * t_c * j as f64 / (n - 1) as f64
        };
        let t = if j == n - 1 { t_c } else { t };
        samples.push(CanardSample {
            t,
            state: sol.eval(t)?,
            segment: Segment::RotationArc,
        });
    }
    for s in depart.samples.iter() {
        samples.push(CanardSample {
            t: s.t,
            state: s.state,
            segment: Segment::DepartingTail,
        });
    }
    let gap = |a: &CanardSample, b: &CanardSample| {
        (0..3).map(|i| (a.state[i] - b.state[i]).abs()).fold(0.0, f64::max)
    };
    let j1 = gap(&samples[arc_start - 1], &samples[arc_start]);
    let j2 = gap(&samples[arc_start + n - 1], &samples[arc_start + n]);
    Ok(SecondaryCanard {
        mu: p.mu(),
        eps: p.eps(),
        t_c,
        zdot0: root.zdot0,
        rotation_number: root.rotation_number,
        samples,
        junction_error: j1.max(j2),
    })
}

impl SecondaryCanard {
    fn segment(&self, seg: Segment) -> impl Iterator<Item = &CanardSample> {
        self.samples.iter().filter(move |s| s.segment == seg)
    }

    /// Largest `W` on the rotation arc.
    pub fn max_arc_w(&self) -> f64 {
        self.segment(Segment::RotationArc)
            .map(|s| s.state[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest deviation from `(W, y, z)(t) = (W, -y, -z)(-t)`.
    ///
    /// The arc is compared on its symmetric grid; the departing tail is
    /// compared with the reflected arriving tail through cubic Hermite
    /// interpolation in `y` (along a sliding tail `y' = 1` and `z' = ` the
    /// sliding flow).
    pub fn symmetry_defect(&self) -> Result<f64> {
        let p = FoldedNodeParams::new(self.mu, self.eps)?;
        let arc: Vec<&CanardSample> = self.segment(Segment::RotationArc).collect();
        let n = arc.len();
        let mut defect = 0.0f64;
        for j in 0..n {
            let (a, b) = (arc[j], arc[n - 1 - j]);
            defect = defect
                .max((a.t + b.t).abs())
                .max((a.state[0] - b.state[0]).abs())
                .max((a.state[1] + b.state[1]).abs())
                .max((a.state[2] + b.state[2]).abs());
        }
        // arriving tail reflected: y -> -y, z -> -z, ordered by increasing y
        let mut refl: Vec<(f64, f64, f64)> = self
            .segment(Segment::ArrivingTail)
            .map(|s| {
                let (y, z) = (-s.state[1], -s.state[2]);
                let dz = crate::models::eval_slow_projected(&p, y, z).map(|g| g.1).unwrap_or(f64::NAN);
                (y, z, dz)
            })
            .collect();
        refl.sort_by(|a, b| a.0.total_cmp(&b.0));
        for s in self.segment(Segment::DepartingTail) {
            let y = s.state[1];
            let k = refl.partition_point(|r| r.0 < y);
            let z = if k < refl.len() && refl[k].0 == y {
                refl[k].1
            } else if k == 0 || k >= refl.len() {
                return Err(Error::Degenerate("departing tail outruns the mirrored tail".into()));
            } else {
                let (y0, z0, d0) = refl[k - 1];
                let (y1, z1, d1) = refl[k];
                let h = y1 - y0;
                let s = (y - y0) / h;
                let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
                let h10 = s * (1.0 - s) * (1.0 - s);
                let h01 = s * s * (3.0 - 2.0 * s);
                let h11 = s * s * (s - 1.0);
                h00 * z0 + h10 * h * d0 + h01 * z1 + h11 * h * d1
            };
            defect = defect.max((s.state[2] - z).abs()).max(s.state[0].abs());
        }
        Ok(defect)
    }

    /// JSON record `{mu, eps, rotation_number, t_c, zdot0, samples}`.
    pub fn write_json<W: Write>(&self, prov: &Provenance, w: W) -> Result<()> {
        write_json(prov, self, w)
    }

    /// CSV in the trajectory layout `t, A, y, z, mode, event`, with `A = W`.
    pub fn write_csv<W: Write>(&self, prov: &Provenance, w: W) -> Result<()> {
        let mut table = CsvTable::new(["t", "A", "y", "z", "mode", "event"]);
        let mut prev: Option<Segment> = None;
        for s in &self.samples {
            let mode = match s.segment {
                Segment::RotationArc => "below",
                _ => "sliding",
            };
            let event = match (prev, s.segment) {
                (Some(Segment::ArrivingTail), Segment::RotationArc) => "slide_exit_tangency",
                (Some(Segment::RotationArc), Segment::DepartingTail) => "slide_entry",
                _ => "",
            };
            prev = Some(s.segment);
            table.push(vec![
                fmt_f64(s.t),
                fmt_f64(s.state[0]),
                fmt_f64(s.state[1]),
                fmt_f64(s.state[2]),
                mode.to_string(),
                event.to_string(),
            ]);
        }
        table.write(prov, w)
    }
}

/// Result of [`find_secondary_canards`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanardSearch {
    pub canards: Vec<SecondaryCanard>,
    pub failures: Vec<SeedFailure>,
}

impl CanardSearch {
    pub fn rotation_numbers(&self) -> Vec<u32> {
        self.canards.iter().map(|c| c.rotation_number).collect()
    }
}

/// Enumerate and assemble every secondary canard.
pub fn find_secondary_canards(
    p: &FoldedNodeParams,
    search: &CanardSearchOptions,
    assembly: &AssemblyOptions,
) -> Result<CanardSearch> {
    let (roots, mut failures) = find_grazing_roots(p, search)?;
    let mut canards = Vec::new();
    for r in &roots {
        match assemble_canard(p, r, assembly) {
            Ok(c) => canards.push(c),
            Err(e) => failures.push(SeedFailure {
                t_seed: r.t_c,
                reason: e.to_string(),
            }),
        }
    }
    Ok(CanardSearch { canards, failures })
}

/// Position of the strong canard in the second pinch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StrongCanardPosition {
    /// Outside the pinched region, at this `W` (on the `W < 0` side).
    Pinched { w: f64 },
    /// Inside the pinched region: carried by the sliding flow.
    SlidingFlow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrimaryCanardsPinched {
    /// `W` of the weak canard, `1 - (2 eps)^(-eps)`, with `z = mu y/2`.
    pub weak_w: f64,
    /// The strong canard lies on `z = y/2`.
    pub strong: StrongCanardPosition,
    /// Primary canards carried by the sliding flow.
    pub sliding_census: u32,
}

/// Primary canards in second-pinch coordinates.
///
/// Both positions come from `w = (u/eps - (1+mu)/(2 eps))^[eps]` at `u = mu/2`
/// and `u = 1/2` followed by `W = w - sign w`; the strong canard survives the
/// pinch only when `|w| > 1`, i.e. `mu > 2 eps`.
pub fn locate_primary_canards_pinched(p: &FoldedNodeParams) -> Result<PrimaryCanardsPinched> {
    let (mu, eps) = (p.mu(), p.eps());
    if mu == 2.0 * eps {
        return Err(Error::Degenerate(
            "mu = 2 eps puts the strong canard on the pinch boundary".into(),
        ));
    }
    let weak_w = pinch::pinch_map(pinch::microscope_w(mu / 2.0, p))?;
    let ws = pinch::microscope_w(0.5, p);
    let (strong, sliding_census) = if ws.abs() > 1.0 {
        (StrongCanardPosition::Pinched { w: pinch::pinch_map(ws)? }, 0)
    } else {
        (StrongCanardPosition::SlidingFlow, 1)
    };
    Ok(PrimaryCanardsPinched {
        weak_w,
        strong,
        sliding_census,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn paper() -> FoldedNodeParams {
        FoldedNodeParams::new(1.0 / 8.5, 0.05).unwrap()
    }

    #[test]
    fn linearized_examples() {
        let p = paper();
        let y = 0.7;
        let w = 1.0 - weak_offset(&p);
        let f = eval_linearized(&p, LinearizedSide::WMinus, [w, y, p.mu() * y / 2.0]);
        assert!(f[0].abs() < 1e-15);
        assert_relative_eq!(f[2], p.mu() / 2.0, max_relative = 1e-15);
        let f = eval_linearized(&p, LinearizedSide::WPlus, [0.0, 1.0, -p.mu() / (4.0 * p.eps())]);
        assert!(f[0].abs() < 1e-14);
    }

    #[test]
    fn linearized_time_reversal() {
        let p = paper();
        for side in [LinearizedSide::WPlus, LinearizedSide::WMinus] {
            for &(w, y, z) in &[(-0.1, 0.4, 0.3), (-0.3, -1.2, 0.05)] {
                let f = eval_linearized(&p, side, [w, y, z]);
                let g = eval_linearized(&p, side, [w, -y, -z]);
                assert_relative_eq!(g[0], -f[0], max_relative = 1e-14);
                assert_eq!(g[1], f[1]);
                assert_eq!(g[2], f[2]);
            }
        }
    }

    #[test]
    fn hermite_transform_examples() {
        let p = paper();
        assert_eq!(hermite_transform(&p, 0.0, 0.0), (0.0, 0.0));
        let (tau, zeta) = hermite_transform(&p, 1.0, p.mu() / 2.0);
        assert_relative_eq!(tau, 1.533_929_977_694_741_6, max_relative = 1e-14);
        assert_eq!(zeta, 0.0);
        let (y, z) = hermite_transform_inv(&p, tau, 0.3);
        let (t2, z2) = hermite_transform(&p, y, z);
        assert_relative_eq!(t2, tau, max_relative = 1e-15);
        assert_relative_eq!(z2, 0.3, max_relative = 1e-14);
    }

    #[test]
    fn solution_at_origin_and_weak_line() {
        let p = paper();
        let c = 0.37;
        let s = solve_w_minus(&p, c, 0.0).unwrap();
        let expect = 1.0 - weak_offset(&p) * (1.0 - 2.0 * p.eps() * c);
        assert_relative_eq!(s[0], expect, max_relative = 1e-15);
        assert_eq!((s[1], s[2]), (0.0, 0.0));
        for &t in &[-2.0, 0.5, 3.0] {
            let s = solve_w_minus(&p, 0.0, t).unwrap();
            assert_eq!(s[2], p.mu() * t / 2.0);
        }
    }

    #[test]
    fn ode_residual_of_closed_form() {
        let p = paper();
        let sol = HermiteSolution::new(p, 1.0);
        let h = 1e-3;
        let mut worst = 0.0f64;
        for j in 0..=60 {
            let t = -3.0 + 0.1 * j as f64;
            let e = |dt: f64| sol.eval(t + dt).unwrap();
            let (a, b, c, d) = (e(2.0 * h), e(h), e(-h), e(-2.0 * h));
            let f = eval_linearized(&p, LinearizedSide::WMinus, sol.eval(t).unwrap());
            for i in 0..3 {
                let fd = (-a[i] + 8.0 * b[i] - 8.0 * c[i] + d[i]) / (12.0 * h);
                worst = worst.max((fd - f[i]).abs());
            }
            assert_relative_eq!(sol.w_dot(t).unwrap(), f[0], max_relative = 1e-10, epsilon = 1e-12);
        }
        assert!(worst < 1e-7, "residual {worst}");
    }

    #[test]
    fn weak_canard_never_grazes() {
        let p = paper();
        for j in 1..50 {
            let r = grazing_residual(&p, 0.1 * j as f64, 0.0).unwrap();
            assert_eq!(r[1], 0.0);
            assert_relative_eq!(r[0], 1.0 - weak_offset(&p), max_relative = 1e-15);
        }
    }

    #[test]
    fn residual_symmetry() {
        let p = paper();
        let a = grazing_residual(&p, 1.3, 0.8).unwrap();
        let b = grazing_residual(&p, -1.3, 0.8).unwrap();
        assert_relative_eq!(a[0], b[0], max_relative = 1e-15);
        assert_relative_eq!(a[1], -b[1], max_relative = 1e-15);
    }

    #[test]
    fn three_canards_at_reference_parameters() {
        let p = paper();
        let (roots, failures) = find_grazing_roots(&p, &CanardSearchOptions::default()).unwrap();
        assert!(failures.is_empty(), "{failures:?}");
        let rot: Vec<u32> = roots.iter().map(|r| r.rotation_number).collect();
        assert_eq!(rot, vec![1, 2, 3]);
        for r in &roots {
            assert!(r.residual[0].abs() < 1e-10 && r.residual[1].abs() < 1e-10, "{r:?}");
            let x = p.mu() * r.t_c * r.t_c / (2.0 * p.eps());
            let zeta = HermiteSolution::new(p, r.zdot0).zeta(r.t_c).unwrap();
            let kk = (1.0 - (2.0 * p.eps()).powf(p.eps())) / (2.0 * p.eps());
            assert_relative_eq!(zeta, p.mu() * r.t_c * kk, max_relative = 1e-9);
            let _ = x;
        }
        let xs: Vec<f64> = roots.iter().map(|r| p.mu() * r.t_c * r.t_c / (2.0 * p.eps())).collect();
        for (x, want) in xs.iter().zip([0.715_28, 3.032_20, 7.828_40]) {
            assert!((x - want).abs() < 1e-4, "{x} vs {want}");
        }
    }

    #[test]
    fn canard_count_law_values() {
        let counts: Vec<i64> = [0.4, 0.3, 1.0 / 8.5, 0.1, 0.08].iter().map(|&m| canard_count_law(m)).collect();
        assert_eq!(counts, vec![0, 1, 3, 4, 5]);
    }

    #[test]
    fn primary_positions() {
        let p = paper();
        let r = locate_primary_canards_pinched(&p).unwrap();
        assert_relative_eq!(r.weak_w, -0.122_018_454_301_963_3, max_relative = 1e-12);
        let q = FoldedNodeParams::new(0.25, 0.05).unwrap();
        let r = locate_primary_canards_pinched(&q).unwrap();
        assert_eq!(r.sliding_census, 0);
        match r.strong {
            StrongCanardPosition::Pinched { w } => {
                assert_relative_eq!(w, 1.0 - 2.5f64.powf(0.05), max_relative = 1e-14)
            }
            _ => panic!("strong canard should be outside the pinch"),
        }
        let q = FoldedNodeParams::new(1.0 / 16.0, 0.05).unwrap();
        assert_eq!(locate_primary_canards_pinched(&q).unwrap().sliding_census, 1);
        let q = FoldedNodeParams::new(0.1, 0.05).unwrap();
        assert!(locate_primary_canards_pinched(&q).is_err());
    }

    #[test]
    fn assembled_canard_is_symmetric_and_below_manifold() {
        let p = paper();
        let (roots, _) = find_grazing_roots(&p, &CanardSearchOptions::default()).unwrap();
        let c = assemble_canard(&p, roots.last().unwrap(), &AssemblyOptions::default()).unwrap();
        assert_eq!(c.rotation_number, 3);
        assert!(c.junction_error < 1e-8, "{}", c.junction_error);
        assert!(c.max_arc_w() <= 1e-10);
        let d = c.symmetry_defect().unwrap();
        assert!(d < 1e-8, "defect {d}");
        let sys = LinearizedSecondPinch { params: p };
        for s in &c.samples {
            match s.segment {
                Segment::ArrivingTail if s.t < -c.t_c - 1e-6 => {
                    assert_eq!(sys.classify(s.state[1], s.state[2]), pinch::SwitchPointClass::AttractingSliding)
                }
                Segment::DepartingTail if s.t > c.t_c + 1e-6 => {
                    assert_eq!(sys.classify(s.state[1], s.state[2]), pinch::SwitchPointClass::RepellingSliding)
                }
                _ => {}
            }
        }
    }

    #[test]
    fn asymptotic_counting_disagrees() {
        let p = paper();
        let exact = count_grazings(&p, Kernel::Series, 4000).unwrap();
        let approx = count_grazings(&p, Kernel::Asymptotic, 4000).unwrap();
        assert_eq!(exact, 3);
        assert_eq!(approx, 5);
    }

    #[test]
    fn count_law_by_enumeration() {
        for (mu, n) in [(0.4, 0usize), (0.3, 1), (1.0 / 8.5, 3), (0.1, 4), (0.08, 5)] {
            let p = FoldedNodeParams::new(mu, 0.05).unwrap();
            let r = find_secondary_canards(&p, &CanardSearchOptions::default(), &AssemblyOptions::default()).unwrap();
            assert!(r.failures.is_empty(), "mu = {mu}: {:?}", r.failures);
            let want: Vec<u32> = (1..=n as u32).collect();
            assert_eq!(r.rotation_numbers(), want, "mu = {mu}");
            for c in &r.canards {
                assert!(c.max_arc_w() <= 1e-10);
                assert!(c.symmetry_defect().unwrap() < 1e-8);
            }
        }
    }

    #[test]
    fn zeta_zeros_match_zero_count_law() {
        let p = paper();
        let sol = HermiteSolution::new(p, 1.0);
        let a = (1.0 - p.mu()) / (2.0 * p.mu());
        // t * M(-a, 3/2, x) vanishes at t = 0 and at every real zero of M
        let n = zeta_zero_count(&sol, 8.0, 40_000).unwrap();
        assert_eq!(n as i64, crate::specfun::count_real_zeros_1f1(a, 1.5).unwrap() + 1);
    }

    #[test]
    fn canard_exports() {
        let p = paper();
        let (roots, _) = find_grazing_roots(&p, &CanardSearchOptions::default()).unwrap();
        let c = assemble_canard(&p, &roots[0], &AssemblyOptions::default()).unwrap();
        let mut buf = Vec::new();
        c.write_json(&Provenance::new(), &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["data"]["rotation_number"], 1);
        let mut buf = Vec::new();
        c.write_csv(&Provenance::new(), &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.contains("\nt,A,y,z,mode,event\n"));
        assert_eq!(s.matches("slide_entry").count(), 1);
    }
}
