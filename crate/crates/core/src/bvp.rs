//! Two-point boundary-value problems by Hermite–Simpson collocation.
//!
//! Unknowns are the mesh values `x_0..x_M`. Boundary conditions are
//! separated: the first `L` depend on `x_0` only, the remaining `N - L` on
//! `x_M` only. With equations ordered as left conditions, interval
//! residuals, right conditions, the Newton matrix is banded with
//! `kl = L + N - 1` and `ku = 2N - 1 - L`.

use crate::error::{Error, Result};
use crate::linalg::BandMatrix;

/// Field and separated boundary conditions of a BVP on `[t_0, t_M]`.
pub trait BvpProblem<const N: usize> {
    fn rhs(&self, t: f64, x: &[f64; N]) -> [f64; N];

    /// `df/dx`; the default uses central differences.
    fn jacobian(&self, t: f64, x: &[f64; N]) -> [[f64; N]; N] {
        let mut j = [[0.0; N]; N];
        for c in 0..N {
            let h = 1e-7 * (1.0 + x[c].abs());
            let (mut xp, mut xm) = (*x, *x);
            xp[c] += h;
            xm[c] -= h;
            let (fp, fm) = (self.rhs(t, &xp), self.rhs(t, &xm));
            for r in 0..N {
                j[r][c] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        j
    }

    /// Number of conditions imposed at the left end.
    fn n_left(&self) -> usize;

    /// The `L` left conditions followed by the `N - L` right conditions.
    fn bc(&self, xa: &[f64; N], xb: &[f64; N]) -> [f64; N];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BvpOptions {
    /// Newton stops when the max-norm residual drops below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Times the mesh may be halved after a failed solve.
    pub max_refinements: usize,
}

impl Default for BvpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 40,
            max_refinements: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BvpSolution<const N: usize> {
    pub mesh: Vec<f64>,
    pub x: Vec<[f64; N]>,
    /// Max-norm of the collocation and boundary residual.
    pub residual: f64,
    pub iterations: usize,
}

impl<const N: usize> BvpSolution<N> {
    pub fn first(&self) -> &[f64; N] {
        &self.x[0]
    }

    pub fn last(&self) -> &[f64; N] {
        self.x.last().unwrap()
    }

    /// Cubic Hermite interpolant of the collocation solution.
    pub fn eval<P: BvpProblem<N> + ?Sized>(&self, prob: &P, t: f64) -> [f64; N] {
        interpolate(prob, &self.mesh, &self.x, t)
    }
}

fn interpolate<const N: usize, P: BvpProblem<N> + ?Sized>(prob: &P, mesh: &[f64], x: &[[f64; N]], t: f64) -> [f64; N] {
    let i = mesh.partition_point(|&m| m <= t).clamp(1, mesh.len() - 1) - 1;
    let (t0, t1) = (mesh[i], mesh[i + 1]);
    let h = t1 - t0;
    let s = (t - t0) / h;
    let (f0, f1) = (prob.rhs(t0, &x[i]), prob.rhs(t1, &x[i + 1]));
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    let mut out = [0.0; N];
    for r in 0..N {
        out[r] = h00 * x[i][r] + h10 * h * f0[r] + h01 * x[i + 1][r] + h11 * h * f1[r];
    }
    out
}

/// Residual vector in equation order.
pub fn collocation_residual<const N: usize, P: BvpProblem<N> + ?Sized>(prob: &P, mesh: &[f64], x: &[[f64; N]]) -> Vec<f64> {
    let m = mesh.len() - 1;
    let l = prob.n_left();
    let mut out = vec![0.0; (m + 1) * N];
    let bc = prob.bc(&x[0], &x[m]);
    out[..l].copy_from_slice(&bc[..l]);
    let mut f0 = prob.rhs(mesh[0], &x[0]);
    for i in 0..m {
        let h = mesh[i + 1] - mesh[i];
        let f1 = prob.rhs(mesh[i + 1], &x[i + 1]);
        let mut xm = [0.0; N];
        for r in 0..N {
            xm[r] = 0.5 * (x[i][r] + x[i + 1][r]) + h / 8.0 * (f0[r] - f1[r]);
        }
        let fm = prob.rhs(mesh[i] + 0.5 * h, &xm);
        for r in 0..N {
            out[l + i * N + r] = x[i + 1][r] - x[i][r] - h / 6.0 * (f0[r] + 4.0 * fm[r] + f1[r]);
        }
        f0 = f1;
    }
    out[l + m * N..].copy_from_slice(&bc[l..]);
    out
}

fn newton_matrix<const N: usize, P: BvpProblem<N> + ?Sized>(prob: &P, mesh: &[f64], x: &[[f64; N]]) -> BandMatrix {
    let m = mesh.len() - 1;
    let l = prob.n_left();
    let n = (m + 1) * N;
    let mut a = BandMatrix::zeros(n, l + N - 1, 2 * N - 1 - l);

    // boundary rows by central differences
    let (xa, xb) = (x[0], x[m]);
    for c in 0..N {
        let h = 1e-7 * (1.0 + xa[c].abs());
        let (mut p, mut q) = (xa, xa);
        p[c] += h;
        q[c] -= h;
        let (bp, bq) = (prob.bc(&p, &xb), prob.bc(&q, &xb));
        for r in 0..l {
            a.set(r, c, (bp[r] - bq[r]) / (2.0 * h));
        }
        let h = 1e-7 * (1.0 + xb[c].abs());
        let (mut p, mut q) = (xb, xb);
        p[c] += h;
        q[c] -= h;
        let (bp, bq) = (prob.bc(&xa, &p), prob.bc(&xa, &q));
        for r in l..N {
            a.set(l + m * N + (r - l), m * N + c, (bp[r] - bq[r]) / (2.0 * h));
        }
    }

    let mut f0 = prob.rhs(mesh[0], &x[0]);
    let mut j0 = prob.jacobian(mesh[0], &x[0]);
    for i in 0..m {
        let h = mesh[i + 1] - mesh[i];
        let f1 = prob.rhs(mesh[i + 1], &x[i + 1]);
        let j1 = prob.jacobian(mesh[i + 1], &x[i + 1]);
        let mut xm = [0.0; N];
        for r in 0..N {
            xm[r] = 0.5 * (x[i][r] + x[i + 1][r]) + h / 8.0 * (f0[r] - f1[r]);
        }
        let jm = prob.jacobian(mesh[i] + 0.5 * h, &xm);
        let row0 = l + i * N;
        for r in 0..N {
            for c in 0..N {
                // d x_m / d x_i = I/2 + h/8 J_i, d x_m / d x_{i+1} = I/2 - h/8 J_{i+1}
                let mut gi = 0.0;
                let mut gn = 0.0;
                for q in 0..N {
                    let id = if q == c { 0.5 } else { 0.0 };
                    gi += jm[r][q] * (id + h / 8.0 * j0[q][c]);
                    gn += jm[r][q] * (id - h / 8.0 * j1[q][c]);
                }
                let id = if r == c { 1.0 } else { 0.0 };
                a.set(row0 + r, i * N + c, -id - h / 6.0 * (j0[r][c] + 4.0 * gi));
                a.set(row0 + r, (i + 1) * N + c, id - h / 6.0 * (j1[r][c] + 4.0 * gn));
            }
        }
        f0 = f1;
        j0 = j1;
    }
    a
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

fn newton<const N: usize, P: BvpProblem<N> + ?Sized>(
    prob: &P,
    mesh: &[f64],
    mut x: Vec<[f64; N]>,
    o: &BvpOptions,
) -> Result<BvpSolution<N>> {
    let mut r = collocation_residual(prob, mesh, &x);
    let mut rn = max_norm(&r);
    for it in 0..o.max_iter {
        if rn < o.tol {
            return Ok(BvpSolution {
                mesh: mesh.to_vec(),
                x,
                residual: rn,
                iterations: it,
            });
        }
        if !rn.is_finite() {
            break;
        }
        let lu = newton_matrix(prob, mesh, &x).factor()?;
        let mut d = r.clone();
        lu.solve(&mut d);
        let mut lam = 1.0;
        loop {
            let trial: Vec<[f64; N]> = x
                .iter()
                .enumerate()
                .map(|(i, xi)| {
                    let mut v = *xi;
                    for c in 0..N {
                        v[c] -= lam * d[i * N + c];
                    }
                    v
                })
                .collect();
            let rt = collocation_residual(prob, mesh, &trial);
            let tn = max_norm(&rt);
            if tn.is_finite() && (tn < rn * (1.0 - 0.25 * lam) || tn < o.tol) {
                x = trial;
                r = rt;
                rn = tn;
                break;
            }
            lam *= 0.5;
            if lam < 1.0 / 1024.0 {
                return Err(Error::NoConvergence(format!(
                    "collocation Newton stalled at residual {rn:e}"
                )));
            }
        }
    }
    Err(Error::NoConvergence(format!(
        "collocation Newton reached {} iterations at residual {rn:e}",
        o.max_iter
    )))
}

/// Mesh with every interval split in two; values at new nodes interpolated.
pub fn refine<const N: usize, P: BvpProblem<N> + ?Sized>(prob: &P, mesh: &[f64], x: &[[f64; N]]) -> (Vec<f64>, Vec<[f64; N]>) {
    let mut m2 = Vec::with_capacity(2 * mesh.len());
    let mut x2 = Vec::with_capacity(2 * mesh.len());
    for i in 0..mesh.len() - 1 {
        let tm = 0.5 * (mesh[i] + mesh[i + 1]);
        m2.push(mesh[i]);
        x2.push(x[i]);
        m2.push(tm);
        x2.push(interpolate(prob, mesh, x, tm));
    }
    m2.push(*mesh.last().unwrap());
    x2.push(*x.last().unwrap());
    (m2, x2)
}

/// Solve by damped Newton from `guess`, halving the mesh on failure.
pub fn solve_bvp<const N: usize, P: BvpProblem<N> + ?Sized>(
    prob: &P,
    mesh: &[f64],
    guess: Vec<[f64; N]>,
    o: &BvpOptions,
) -> Result<BvpSolution<N>> {
    if mesh.len() < 2 || guess.len() != mesh.len() {
        return Err(Error::InvalidParams("mesh and guess lengths differ".into()));
    }
    if prob.n_left() > N {
        return Err(Error::InvalidParams("more left conditions than states".into()));
    }
    let mut mesh = mesh.to_vec();
    let mut guess = guess;
    let mut last = None;
    for _ in 0..=o.max_refinements {
        match newton(prob, &mesh, guess.clone(), o) {
            Ok(s) => return Ok(s),
            Err(e) => last = Some(e),
        }
        let (m2, g2) = refine(prob, &mesh, &guess);
        mesh = m2;
        guess = g2;
    }
    Err(last.unwrap())
}

/// Mesh on `[a, b]` with `n` intervals, geometrically graded towards the
/// ends listed in `grade_at` (each with first-interval width `h0`).
pub fn graded_mesh(a: f64, b: f64, n: usize, grade_at: &[(f64, f64)]) -> Vec<f64> {
    // node density 1 + sum_k w_k/(|t - t_k| + h0_k), equidistributed
    let fine = 20 * n;
    let dens = |t: f64| {
        1.0 + grade_at
            .iter()
            .map(|&(tk, h0)| 0.05 * (b - a).abs() / ((t - tk).abs() + h0 * n as f64 * 0.05))
            .sum::<f64>()
    };
    let mut cum = vec![0.0];
    for i in 0..fine {
        let t0 = a + (b - a) * i as f64 / fine as f64;
        let t1 = a + (b - a) * (i + 1) as f64 / fine as f64;
        let w = 0.5 * (dens(t0) + dens(t1)) * (t1 - t0).abs();
        cum.push(cum[i] + w);
    }
    let total = cum[fine];
    let mut mesh = Vec::with_capacity(n + 1);
    let mut j = 0;
    for k in 0..=n {
        let target = total * k as f64 / n as f64;
        while j < fine && cum[j + 1] < target {
            j += 1;
        }
        let t = if k == n {
            b
        } else if k == 0 {
            a
        } else {
            let t0 = a + (b - a) * j as f64 / fine as f64;
            let t1 = a + (b - a) * (j + 1) as f64 / fine as f64;
            let s = (target - cum[j]) / (cum[j + 1] - cum[j]);
            t0 + s * (t1 - t0)
        };
        mesh.push(t);
    }
    mesh
}
