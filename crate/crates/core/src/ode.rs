//! Adaptive one-step integrators with dense output.
//!
//! [`Dopri5`] is the Dormand–Prince 5(4) pair with its 4th-order continuous
//! extension. [`Rosenbrock23`] is the L-stable Rosenbrock pair of Shampine and
//! Reichelt (the `ode23s` scheme), used for the stiff regularized fields.
//! Both steppers integrate in either time direction.

use crate::error::{Error, Result};
use crate::linalg::DenseLu;

/// Autonomous or non-autonomous system `x' = f(t, x)` on `R^N`.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, x: &[f64; N]) -> [f64; N];

    /// Jacobian `df/dx`, row `i` holding the partials of `f_i`. Defaults to
    /// central differences.
    fn jacobian(&self, t: f64, x: &[f64; N]) -> [[f64; N]; N] {
        let mut jac = [[0.0; N]; N];
        for j in 0..N {
            let h = 1e-7 * x[j].abs().max(1e-3);
            let mut xp = *x;
            let mut xm = *x;
            xp[j] += h;
            xm[j] -= h;
            let fp = self.rhs(t, &xp);
            let fm = self.rhs(t, &xm);
            for i in 0..N {
                jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        jac
    }
}

impl<const N: usize, F> OdeSystem<N> for F
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    fn rhs(&self, t: f64, x: &[f64; N]) -> [f64; N] {
        self(t, x)
    }
}

/// Step-size control settings shared by both steppers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step magnitude; `None` selects one automatically.
    pub h0: Option<f64>,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            h0: None,
            h_max: f64::INFINITY,
            h_min: 1e-14,
            max_steps: 1_000_000,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol * 1e-2,
            ..Self::default()
        }
    }
}

#[inline]
fn axpy<const N: usize>(a: f64, x: &[f64; N], y: &[f64; N]) -> [f64; N] {
    let mut r = *y;
    for i in 0..N {
        r[i] += a * x[i];
    }
    r
}

#[inline]
fn is_finite<const N: usize>(x: &[f64; N]) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// Continuous extension of a single accepted step.
#[derive(Debug, Clone, Copy)]
pub enum DenseStep<const N: usize> {
    Dopri {
        t0: f64,
        h: f64,
        rc: [[f64; N]; 5],
    },
    Rosenbrock {
        t0: f64,
        h: f64,
        y0: [f64; N],
        k1: [f64; N],
        k2: [f64; N],
    },
}

impl<const N: usize> DenseStep<N> {
    pub fn t0(&self) -> f64 {
        match self {
            DenseStep::Dopri { t0, .. } | DenseStep::Rosenbrock { t0, .. } => *t0,
        }
    }

    pub fn t1(&self) -> f64 {
        match self {
            DenseStep::Dopri { t0, h, .. } | DenseStep::Rosenbrock { t0, h, .. } => t0 + h,
        }
    }

    /// Interpolated state at `t` (meaningful for `t` within the step).
    pub fn eval(&self, t: f64) -> [f64; N] {
        match self {
            DenseStep::Dopri { t0, h, rc } => {
                let s = (t - t0) / h;
                let s1 = 1.0 - s;
                let mut out = [0.0; N];
                for i in 0..N {
                    out[i] = rc[0][i]
                        + s * (rc[1][i] + s1 * (rc[2][i] + s * (rc[3][i] + s1 * rc[4][i])));
                }
                out
            }
            DenseStep::Rosenbrock { t0, h, y0, k1, k2 } => {
                let d = ROS_D;
                let s = (t - t0) / h;
                let c1 = h * s * (1.0 - s) / (1.0 - 2.0 * d);
                let c2 = h * s * (s - 2.0 * d) / (1.0 - 2.0 * d);
                let mut out = [0.0; N];
                for i in 0..N {
                    out[i] = y0[i] + c1 * k1[i] + c2 * k2[i];
                }
                out
            }
        }
    }
}

/// Common interface of the adaptive steppers.
pub trait Stepper<const N: usize> {
    fn t(&self) -> f64;
    fn state(&self) -> [f64; N];
    /// Advance by one accepted step without passing `t_end`.
    fn step<S: OdeSystem<N> + ?Sized>(&mut self, sys: &S, t_end: f64) -> Result<DenseStep<N>>;
    fn steps_taken(&self) -> usize;
}

fn error_norm<const N: usize>(err: &[f64; N], y0: &[f64; N], y1: &[f64; N], o: &OdeOptions) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let sc = o.atol + o.rtol * y0[i].abs().max(y1[i].abs());
        let e = err[i] / sc;
        acc += e * e;
    }
    (acc / N as f64).sqrt()
}

fn initial_step<const N: usize, S: OdeSystem<N> + ?Sized>(
    sys: &S,
    t: f64,
    x: &[f64; N],
    f0: &[f64; N],
    dir: f64,
    order: i32,
    o: &OdeOptions,
) -> f64 {
    let sc: Vec<f64> = x.iter().map(|v| o.atol + o.rtol * v.abs()).collect();
    let d0 = (x.iter().zip(&sc).map(|(v, s)| (v / s).powi(2)).sum::<f64>() / N as f64).sqrt();
    let d1 = (f0.iter().zip(&sc).map(|(v, s)| (v / s).powi(2)).sum::<f64>() / N as f64).sqrt();
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(o.h_max);
    let x1 = axpy(dir * h0, f0, x);
    let f1 = sys.rhs(t + dir * h0, &x1);
    let d2 = (f1
        .iter()
        .zip(f0)
        .zip(&sc)
        .map(|((a, b), s)| ((a - b) / s).powi(2))
        .sum::<f64>()
        / N as f64)
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / (order as f64 + 1.0))
    };
    (100.0 * h0).min(h1).min(o.h_max)
}

/// Dormand–Prince 5(4) stepper.
#[derive(Debug, Clone)]
pub struct Dopri5<const N: usize> {
    t: f64,
    x: [f64; N],
    f: Option<[f64; N]>,
    h: Option<f64>,
    opts: OdeOptions,
    nsteps: usize,
    last_rejected: bool,
}

impl<const N: usize> Dopri5<N> {
    pub fn new(t0: f64, x0: [f64; N], opts: OdeOptions) -> Self {
        Self {
            t: t0,
            x: x0,
            f: None,
            h: opts.h0,
            opts,
            nsteps: 0,
            last_rejected: false,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

impl<const N: usize> Stepper<N> for Dopri5<N> {
    fn t(&self) -> f64 {
        self.t
    }

    fn state(&self) -> [f64; N] {
        self.x
    }

    fn steps_taken(&self) -> usize {
        self.nsteps
    }

    fn step<S: OdeSystem<N> + ?Sized>(&mut self, sys: &S, t_end: f64) -> Result<DenseStep<N>> {
        let span = t_end - self.t;
        if span == 0.0 {
            return Err(Error::StepFailure { t: self.t, h: 0.0 });
        }
        let dir = span.signum();
        let o = self.opts;
        let k1 = *self.f.get_or_insert_with(|| sys.rhs(self.t, &self.x));
        let mut h = match self.h {
            Some(h) => h,
            None => initial_step(sys, self.t, &self.x, &k1, dir, 5, &o),
        }
        .min(o.h_max);
        loop {
            if self.nsteps >= o.max_steps {
                return Err(Error::TooManySteps(o.max_steps));
            }
            let last = h >= span.abs();
            if last {
                h = span.abs();
            }
            if h < o.h_min.max(self.t.abs() * 4.0 * f64::EPSILON) && !last {
                return Err(Error::StepFailure { t: self.t, h });
            }
            let hs = dir * h;
            let t = self.t;
            let x = &self.x;
            let mut y = *x;
            for i in 0..N {
                y[i] = x[i] + hs * A21 * k1[i];
            }
            let k2 = sys.rhs(t + C2 * hs, &y);
            for i in 0..N {
                y[i] = x[i] + hs * (A31 * k1[i] + A32 * k2[i]);
            }
            let k3 = sys.rhs(t + C3 * hs, &y);
            for i in 0..N {
                y[i] = x[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            let k4 = sys.rhs(t + C4 * hs, &y);
            for i in 0..N {
                y[i] = x[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            let k5 = sys.rhs(t + C5 * hs, &y);
            for i in 0..N {
                y[i] = x[i]
                    + hs * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            let k6 = sys.rhs(t + hs, &y);
            let mut x1 = *x;
            for i in 0..N {
                x1[i] = x[i]
                    + hs * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            let t1 = if last { t_end } else { t + hs };
            let k7 = sys.rhs(t1, &x1);
            let mut err = [0.0; N];
            for i in 0..N {
                err[i] = hs
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                        + E7 * k7[i]);
            }
            let en = error_norm(&err, x, &x1, &o);
            if !en.is_finite() || !is_finite(&x1) {
                self.last_rejected = true;
                h *= 0.25;
                continue;
            }
            if en <= 1.0 {
                let mut rc = [[0.0; N]; 5];
                for i in 0..N {
                    let dy = x1[i] - x[i];
                    let bspl = hs * k1[i] - dy;
                    rc[0][i] = x[i];
                    rc[1][i] = dy;
                    rc[2][i] = bspl;
                    rc[3][i] = dy - hs * k7[i] - bspl;
                    rc[4][i] = hs
                        * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i]
                            + D7 * k7[i]);
                }
                let fac_max = if self.last_rejected { 1.0 } else { 10.0 };
                let fac = (0.9 * en.max(1e-10).powf(-0.2)).clamp(0.2, fac_max);
                self.h = Some((h * fac).min(o.h_max));
                self.last_rejected = false;
                self.t = t1;
                self.x = x1;
                self.f = Some(k7);
                self.nsteps += 1;
                return Ok(DenseStep::Dopri { t0: t, h: t1 - t, rc });
            }
            self.last_rejected = true;
            h *= (0.9 * en.powf(-0.2)).max(0.2);
        }
    }
}

const ROS_D: f64 = 0.292_893_218_813_452_5; // 1 / (2 + sqrt 2)
const ROS_E32: f64 = 7.414_213_562_373_095; // 6 + sqrt 2

/// Rosenbrock 2(3) stepper; the Jacobian comes from [`OdeSystem::jacobian`].
#[derive(Debug, Clone)]
pub struct Rosenbrock23<const N: usize> {
    t: f64,
    x: [f64; N],
    h: Option<f64>,
    opts: OdeOptions,
    nsteps: usize,
}

impl<const N: usize> Rosenbrock23<N> {
    pub fn new(t0: f64, x0: [f64; N], opts: OdeOptions) -> Self {
        Self {
            t: t0,
            x: x0,
            h: opts.h0,
            opts,
            nsteps: 0,
        }
    }
}

impl<const N: usize> Stepper<N> for Rosenbrock23<N> {
    fn t(&self) -> f64 {
        self.t
    }

    fn state(&self) -> [f64; N] {
        self.x
    }

    fn steps_taken(&self) -> usize {
        self.nsteps
    }

    fn step<S: OdeSystem<N> + ?Sized>(&mut self, sys: &S, t_end: f64) -> Result<DenseStep<N>> {
        let span = t_end - self.t;
        if span == 0.0 {
            return Err(Error::StepFailure { t: self.t, h: 0.0 });
        }
        let dir = span.signum();
        let o = self.opts;
        let t = self.t;
        let x = self.x;
        let f0 = sys.rhs(t, &x);
        let jac = sys.jacobian(t, &x);
        let dt = 1e-7 * t.abs().max(1.0);
        let ft = sys.rhs(t + dt, &x);
        let mut tdot = [0.0; N];
        for i in 0..N {
            tdot[i] = (ft[i] - f0[i]) / dt;
        }
        let mut h = match self.h {
            Some(h) => h,
            None => initial_step(sys, t, &x, &f0, dir, 2, &o),
        }
        .min(o.h_max);
        let mut rejected = false;
        loop {
            if self.nsteps >= o.max_steps {
                return Err(Error::TooManySteps(o.max_steps));
            }
            let last = h >= span.abs();
            if last {
                h = span.abs();
            }
            if h < o.h_min.max(t.abs() * 4.0 * f64::EPSILON) && !last {
                return Err(Error::StepFailure { t, h });
            }
            let hs = dir * h;
            let mut w = [[0.0; N]; N];
            for i in 0..N {
                for j in 0..N {
                    w[i][j] = -hs * ROS_D * jac[i][j];
                }
                w[i][i] += 1.0;
            }
            let lu = match DenseLu::factor(w) {
                Ok(lu) => lu,
                Err(_) => {
                    h *= 0.5;
                    rejected = true;
                    continue;
                }
            };
            let mut rhs1 = f0;
            for i in 0..N {
                rhs1[i] += hs * ROS_D * tdot[i];
            }
            let k1 = lu.solve(rhs1);
            let xm = axpy(0.5 * hs, &k1, &x);
            let f1 = sys.rhs(t + 0.5 * hs, &xm);
            let mut r2 = f1;
            for i in 0..N {
                r2[i] -= k1[i];
            }
            let mut k2 = lu.solve(r2);
            for i in 0..N {
                k2[i] += k1[i];
            }
            let x1 = axpy(hs, &k2, &x);
            let t1 = if last { t_end } else { t + hs };
            let f2 = sys.rhs(t1, &x1);
            let mut r3 = [0.0; N];
            for i in 0..N {
                r3[i] = f2[i] - ROS_E32 * (k2[i] - f1[i]) - 2.0 * (k1[i] - f0[i])
                    + hs * ROS_D * tdot[i];
            }
            let k3 = lu.solve(r3);
            let mut err = [0.0; N];
            for i in 0..N {
                err[i] = hs / 6.0 * (k1[i] - 2.0 * k2[i] + k3[i]);
            }
            let en = error_norm(&err, &x, &x1, &o);
            if !en.is_finite() || !is_finite(&x1) {
                h *= 0.25;
                rejected = true;
                continue;
            }
            if en <= 1.0 {
                let fac_max = if rejected { 1.0 } else { 5.0 };
                let fac = (0.8 * en.max(1e-10).powf(-1.0 / 3.0)).clamp(0.2, fac_max);
                self.h = Some((h * fac).min(o.h_max));
                self.t = t1;
                self.x = x1;
                self.nsteps += 1;
                return Ok(DenseStep::Rosenbrock {
                    t0: t,
                    h: t1 - t,
                    y0: x,
                    k1,
                    k2,
                });
            }
            rejected = true;
            h *= (0.8 * en.powf(-1.0 / 3.0)).max(0.2);
        }
    }
}

/// Stepper selection for [`solve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Dopri5,
    Rosenbrock23,
}

/// Accepted-step record of an integration.
#[derive(Debug, Clone)]
pub struct Solution<const N: usize> {
    pub t: Vec<f64>,
    pub x: Vec<[f64; N]>,
    pub dense: Vec<DenseStep<N>>,
}

impl<const N: usize> Solution<N> {
    pub fn last(&self) -> (f64, [f64; N]) {
        (*self.t.last().unwrap(), *self.x.last().unwrap())
    }

    /// Dense evaluation anywhere inside the integrated interval.
    pub fn eval(&self, t: f64) -> [f64; N] {
        let forward = self.t.last().unwrap() >= &self.t[0];
        let idx = self
            .dense
            .partition_point(|d| if forward { d.t1() < t } else { d.t1() > t });
        let idx = idx.min(self.dense.len().saturating_sub(1));
        match self.dense.get(idx) {
            Some(d) => d.eval(t),
            None => self.x[0],
        }
    }
}

/// Integrate from `t0` to `t1`, recording every accepted step.
pub fn solve<const N: usize, S: OdeSystem<N> + ?Sized>(
    sys: &S,
    method: Method,
    t0: f64,
    x0: [f64; N],
    t1: f64,
    opts: OdeOptions,
) -> Result<Solution<N>> {
    let mut sol = Solution {
        t: vec![t0],
        x: vec![x0],
        dense: Vec::new(),
    };
    if t1 == t0 {
        return Ok(sol);
    }
    let mut push = |d: DenseStep<N>, t: f64, x: [f64; N]| {
        sol.t.push(t);
        sol.x.push(x);
        sol.dense.push(d);
    };
    match method {
        Method::Dopri5 => {
            let mut st = Dopri5::new(t0, x0, opts);
            while st.t() != t1 {
                let d = st.step(sys, t1)?;
                push(d, st.t(), st.state());
            }
        }
        Method::Rosenbrock23 => {
            let mut st = Rosenbrock23::new(t0, x0, opts);
            while st.t() != t1 {
                let d = st.step(sys, t1)?;
                push(d, st.t(), st.state());
            }
        }
    }
    Ok(sol)
}
