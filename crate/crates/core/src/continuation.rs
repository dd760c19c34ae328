//! Tanh regularization of the pinched system, slow-manifold sections, and
//! continuation of canards in the stiffness `k`.
//!
//! The regularized field is
//!
//! ```text
//! eps U' = (mu/2) y - (mu+1) z + 2 z tanh(k U),   y' = 1,   z' = U + tanh(k U)
//! ```
//!
//! Its critical manifold `tanh(kU) = -P/(2z)` is attracting for `z < 0` and
//! repelling for `z > 0`. Orbits on the slow manifolds are computed as BVPs in
//! `t = y`: one end on the critical manifold at `y = y_far`, the other in the
//! section `y = 0`. Canards are points where the attracting and repelling
//! section curves cross.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bvp::{graded_mesh, solve_bvp, BvpOptions, BvpProblem, BvpSolution};
use crate::error::{Error, Result};
use crate::export::{fmt_f64, CsvTable, Provenance};
use crate::filippov::{hausdorff_distance, integrate, FilippovOptions, PinchedSystem};
use crate::pinch::PinchLevel;
use crate::models::{slow_drive, FoldedNodeParams};
use crate::ode::{self, Method, OdeOptions};

/// Folded-node parameters with the regularization stiffness `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizedParams {
    pub base: FoldedNodeParams,
    k: f64,
}

impl RegularizedParams {
    pub fn new(base: FoldedNodeParams, k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParams(format!("stiffness k = {k} must be positive")));
        }
        Ok(Self { base, k })
    }

    pub fn k(&self) -> f64 {
        self.k
    }
}

/// `(U', y', z')` of the regularized system.
pub fn eval_regularized(rp: &RegularizedParams, state: [f64; 3]) -> [f64; 3] {
    let [u, y, z] = state;
    let (mu, eps) = (rp.base.mu(), rp.base.eps());
    let th = (rp.k * u).tanh();
    [(slow_drive(mu, y, z) + 2.0 * z * th) / eps, 1.0, u + th]
}

/// `(U', z')` at `y = t` for stiffness `k`, with its Jacobian in `(U, z)`
/// and derivative in `ln k`.
fn planar(p: &FoldedNodeParams, k: f64, y: f64, u: f64, z: f64) -> ([f64; 2], [[f64; 2]; 2], [f64; 2]) {
    let (mu, eps) = (p.mu(), p.eps());
    let th = (k * u).tanh();
    let sech2 = 1.0 - th * th;
    let f = [(slow_drive(mu, y, z) + 2.0 * z * th) / eps, u + th];
    let j = [
        [2.0 * z * k * sech2 / eps, (-(mu + 1.0) + 2.0 * th) / eps],
        [1.0 + k * sech2, 0.0],
    ];
    let dlnk = [2.0 * z * k * u * sech2 / eps, k * u * sech2];
    (f, j, dlnk)
}

/// `U` on the critical manifold over `(y, z)`, where it exists.
pub fn critical_u(rp: &RegularizedParams, y: f64, z: f64) -> Option<f64> {
    let r = -slow_drive(rp.base.mu(), y, z) / (2.0 * z);
    if r.abs() < 1.0 {
        Some(r.atanh() / rp.k)
    } else {
        None
    }
}

/// `x = eps (U + tanh kU) - z^2`, the fold-chart abscissa of a regularized state.
pub fn fold_chart_x(rp: &RegularizedParams, u: f64, z: f64) -> f64 {
    rp.base.eps() * (u + (rp.k * u).tanh()) - z * z
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ManifoldSide {
    Attracting,
    Repelling,
}

impl ManifoldSide {
    pub fn label(self) -> &'static str {
        match self {
            ManifoldSide::Attracting => "attracting",
            ManifoldSide::Repelling => "repelling",
        }
    }
}

/// Boundary curve `U = U_crit(y_far, z) + offset` in the plane `y = y_far`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryLine {
    pub y_far: f64,
    pub offset: f64,
}

impl BoundaryLine {
    fn residual(&self, p: &FoldedNodeParams, k: f64, u: f64, z: f64) -> f64 {
        let r = -slow_drive(p.mu(), self.y_far, z) / (2.0 * z);
        if r.abs() < 1.0 {
            u - r.atanh() / k - self.offset
        } else {
            f64::NAN
        }
    }
}

/// Slow-manifold orbit from the boundary line to the section point lying on
/// the line through `anchor` with normal `normal` in the `(z, U)` plane.
struct SectionBvp {
    p: FoldedNodeParams,
    k: f64,
    side: ManifoldSide,
    line: BoundaryLine,
    anchor: [f64; 2],
    normal: [f64; 2],
}

impl SectionBvp {
    fn section_residual(&self, x: &[f64; 2]) -> f64 {
        self.normal[0] * (x[1] - self.anchor[0]) + self.normal[1] * (x[0] - self.anchor[1])
    }
}

impl BvpProblem<2> for SectionBvp {
    fn rhs(&self, t: f64, x: &[f64; 2]) -> [f64; 2] {
        planar(&self.p, self.k, t, x[0], x[1]).0
    }

    fn jacobian(&self, t: f64, x: &[f64; 2]) -> [[f64; 2]; 2] {
        planar(&self.p, self.k, t, x[0], x[1]).1
    }

    fn n_left(&self) -> usize {
        1
    }

    fn bc(&self, xa: &[f64; 2], xb: &[f64; 2]) -> [f64; 2] {
        match self.side {
            ManifoldSide::Attracting => [
                self.line.residual(&self.p, self.k, xa[0], xa[1]),
                self.section_residual(xb),
            ],
            ManifoldSide::Repelling => [
                self.section_residual(xa),
                self.line.residual(&self.p, self.k, xb[0], xb[1]),
            ],
        }
    }
}

/// Settings for slow-manifold sections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionOptions {
    /// `|y|` of the boundary line.
    pub y_far: f64,
    /// Offset of the boundary line from the critical manifold in `U`.
    pub offset: f64,
    /// Collocation intervals per orbit.
    pub intervals: usize,
    pub ds_initial: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    /// Largest turn of the section curve per step, in radians.
    pub max_turn: f64,
    /// Points per direction of the curve.
    pub max_points: usize,
    /// Half-width of the traced window in `z`.
    pub z_window: f64,
    /// Half-width of the traced window in `U`.
    pub u_window: f64,
    /// Start of the tracing, as `z/y` on the boundary line.
    pub seed_slope: f64,
    #[serde(skip)]
    pub bvp: BvpOptions,
}

impl Default for SectionOptions {
    fn default() -> Self {
        Self {
            y_far: 3.0,
            offset: 0.0,
            intervals: 400,
            ds_initial: 1e-4,
            ds_min: 1e-10,
            ds_max: 2e-3,
            max_turn: 0.15,
            max_points: 4000,
            z_window: 0.05,
            u_window: 0.1,
            seed_slope: 0.5,
            bvp: BvpOptions::default(),
        }
    }
}

/// Why tracing of a section curve stopped in one direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceEnd {
    LeftWindow,
    StepUnderflow,
    MaxPoints,
}

/// Intercept of a slow manifold with `y = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlowManifoldSection {
    pub side: ManifoldSide,
    pub k: f64,
    /// `(z, U)` in curve order.
    pub curve: Vec<[f64; 2]>,
    /// Collocation mesh in `t = y`, shared by all orbits of the family.
    pub mesh: Vec<f64>,
    /// Largest collocation residual over the family.
    pub max_residual: f64,
    /// How each end of the curve terminated.
    pub ends: [TraceEnd; 2],
    /// Orbit behind each curve point, as `(U, z)` on `mesh`.
    #[serde(skip)]
    pub orbits: Vec<Vec<[f64; 2]>>,
}

fn section_mesh(rp: &RegularizedParams, side: ManifoldSide, o: &SectionOptions) -> Vec<f64> {
    let y = o.y_far.abs();
    let h_layer = rp.base.eps() / (4.0 * rp.k * y);
    let attracting = graded_mesh(-y, 0.0, o.intervals, &[(-y, h_layer), (0.0, 2e-3)]);
    match side {
        ManifoldSide::Attracting => attracting,
        ManifoldSide::Repelling => attracting.iter().rev().map(|t| -t).collect(),
    }
}

/// Orbit through the boundary-line point with `z = z0`, by stiff integration
/// towards the section.
fn shoot(rp: &RegularizedParams, side: ManifoldSide, line: &BoundaryLine, z0: f64, mesh: &[f64]) -> Result<Vec<[f64; 2]>> {
    let u0 = critical_u(rp, line.y_far, z0)
        .ok_or_else(|| Error::Domain(format!("z = {z0} is off the critical manifold at y = {}", line.y_far)))?
        + line.offset;
    let p = rp.base;
    let k = rp.k;
    let f = move |t: f64, x: &[f64; 2]| planar(&p, k, t, x[0], x[1]).0;
    let opts = OdeOptions {
        rtol: 1e-10,
        atol: 1e-13,
        ..OdeOptions::default()
    };
    let sol = ode::solve(&f, Method::Rosenbrock23, line.y_far, [u0, z0], 0.0, opts)?;
    let _ = side;
    Ok(mesh.iter().map(|&t| sol.eval(t)).collect())
}

fn section_point(side: ManifoldSide, x: &[[f64; 2]]) -> [f64; 2] {
    let v = match side {
        ManifoldSide::Attracting => x.last().unwrap(),
        ManifoldSide::Repelling => &x[0],
    };
    [v[1], v[0]]
}

fn unit(v: [f64; 2]) -> [f64; 2] {
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

/// Section point, its orbit on the mesh, and the BVP residual.
type TracedPoint = ([f64; 2], Vec<[f64; 2]>, f64);

struct Tracer<'a> {
    rp: &'a RegularizedParams,
    side: ManifoldSide,
    line: BoundaryLine,
    mesh: &'a [f64],
    o: &'a SectionOptions,
}

impl Tracer<'_> {
    fn solve_at(&self, anchor: [f64; 2], normal: [f64; 2], guess: Vec<[f64; 2]>) -> Result<BvpSolution<2>> {
        let prob = SectionBvp {
            p: self.rp.base,
            k: self.rp.k,
            side: self.side,
            line: self.line,
            anchor,
            normal,
        };
        let bo = BvpOptions {
            max_refinements: 0,
            ..self.o.bvp
        };
        solve_bvp(&prob, self.mesh, guess, &bo)
    }

    /// March from `(p0, x0)` along `tau` until a stopping condition.
    fn march(
        &self,
        p0: [f64; 2],
        x0: Vec<[f64; 2]>,
        mut tau: [f64; 2],
        out: &mut Vec<TracedPoint>,
    ) -> TraceEnd {
        let o = self.o;
        let mut ds = o.ds_initial;
        let (mut p, mut x) = (p0, x0);
        let mut prev: Option<Vec<[f64; 2]>> = None;
        let mut prev_ds = ds;
        loop {
            if out.len() >= o.max_points {
                return TraceEnd::MaxPoints;
            }
            if ds < o.ds_min {
                return TraceEnd::StepUnderflow;
            }
            let anchor = [p[0] + ds * tau[0], p[1] + ds * tau[1]];
            // secant predictor for the whole orbit
            let guess: Vec<[f64; 2]> = match &prev {
                Some(xp) => x
                    .iter()
                    .zip(xp)
                    .map(|(a, b)| {
                        let s = ds / prev_ds;
                        [a[0] + s * (a[0] - b[0]), a[1] + s * (a[1] - b[1])]
                    })
                    .collect(),
                None => x.clone(),
            };
            let sol = self
                .solve_at(anchor, tau, guess)
                .or_else(|_| self.solve_at(anchor, tau, x.clone()));
            let sol = match sol {
                Ok(s) => s,
                Err(_) => {
                    ds *= 0.5;
                    continue;
                }
            };
            let q = section_point(self.side, &sol.x);
            let d = [q[0] - p[0], q[1] - p[1]];
            let dn = d[0].hypot(d[1]);
            if dn == 0.0 {
                ds *= 0.5;
                continue;
            }
            let t_new = [d[0] / dn, d[1] / dn];
            let turn = (tau[0] * t_new[1] - tau[1] * t_new[0]).atan2(tau[0] * t_new[0] + tau[1] * t_new[1]);
            if turn.abs() > o.max_turn || dn > 2.0 * ds {
                ds *= 0.5;
                continue;
            }
            out.push((q, sol.x.clone(), sol.residual));
            prev = Some(std::mem::replace(&mut x, sol.x));
            prev_ds = dn;
            p = q;
            tau = t_new;
            if q[0].abs() > o.z_window || q[1].abs() > o.u_window {
                return TraceEnd::LeftWindow;
            }
            if sol.iterations <= 3 && turn.abs() < 0.5 * o.max_turn {
                ds = (ds * 1.5).min(o.ds_max);
            }
        }
    }
}

/// Trace the section `y = 0` of the attracting or repelling slow manifold.
///
/// Tracing starts from the orbit through the boundary-line point with
/// `z = seed_slope * y_far` and proceeds in both directions by
/// pseudo-arclength in the section plane until the curve leaves the window,
/// the step underflows, or the point budget is spent.
pub fn compute_slow_manifold(rp: &RegularizedParams, side: ManifoldSide, o: &SectionOptions) -> Result<SlowManifoldSection> {
    let y_far = match side {
        ManifoldSide::Attracting => -o.y_far.abs(),
        ManifoldSide::Repelling => o.y_far.abs(),
    };
    let line = BoundaryLine {
        y_far,
        offset: o.offset,
    };
    let mesh = section_mesh(rp, side, o);
    let tracer = Tracer {
        rp,
        side,
        line,
        mesh: &mesh,
        o,
    };
    let z0 = o.seed_slope * y_far;
    let x0 = shoot(rp, side, &line, z0, &mesh)?;
    let x1 = shoot(rp, side, &line, z0 * (1.0 + 1e-6), &mesh)?;
    let (p0, p1) = (section_point(side, &x0), section_point(side, &x1));
    let tau = unit([p1[0] - p0[0], p1[1] - p0[1]]);
    let normal = tau;
    let s0 = tracer.solve_at(p0, normal, x0)?;
    let p0 = section_point(side, &s0.x);

    let mut fwd = Vec::new();
    let mut bwd = Vec::new();
    let e_fwd = tracer.march(p0, s0.x.clone(), tau, &mut fwd);
    let e_bwd = tracer.march(p0, s0.x.clone(), [-tau[0], -tau[1]], &mut bwd);

    let mut curve = Vec::new();
    let mut orbits = Vec::new();
    let mut max_residual = s0.residual;
    for (q, x, r) in bwd.into_iter().rev() {
        curve.push(q);
        orbits.push(x);
        max_residual = max_residual.max(r);
    }
    curve.push(p0);
    orbits.push(s0.x);
    for (q, x, r) in fwd {
        curve.push(q);
        orbits.push(x);
        max_residual = max_residual.max(r);
    }
    Ok(SlowManifoldSection {
        side,
        k: rp.k,
        curve,
        mesh,
        max_residual,
        ends: [e_bwd, e_fwd],
        orbits,
    })
}

impl SlowManifoldSection {
    /// CSV with columns `z, U, side, k`.
    pub fn write_csv<W: Write>(&self, prov: &Provenance, w: W) -> Result<()> {
        write_sections_csv(&[self], prov, w)
    }
}

/// Several section curves in one CSV with columns `z, U, side, k`.
pub fn write_sections_csv<W: Write>(sections: &[&SlowManifoldSection], prov: &Provenance, w: W) -> Result<()> {
    let mut t = CsvTable::new(["z", "U", "side", "k"]);
    for s in sections {
        for q in &s.curve {
            t.push(vec![fmt_f64(q[0]), fmt_f64(q[1]), s.side.label().into(), fmt_f64(s.k)]);
        }
    }
    t.write(prov, w)
}

/// Transversal crossing of the attracting and repelling section curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanardPoint {
    pub z: f64,
    pub u: f64,
    /// Crossing angle in radians, in `(0, pi/2]`.
    pub angle: f64,
    /// Segment index and fraction on the attracting curve.
    pub att: (usize, f64),
    /// Segment index and fraction on the repelling curve.
    pub rep: (usize, f64),
}

/// Overlapping stretch of the two curves where no crossing can be resolved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tangency {
    pub z: f64,
    pub u: f64,
    pub att: usize,
    pub rep: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Intersections {
    pub crossings: Vec<CanardPoint>,
    pub tangencies: Vec<Tangency>,
    /// Crossings inside the unresolved tip of a section curve, where both
    /// curves wind into the weak canard.
    pub weak_limit: Vec<CanardPoint>,
}

/// Crossings below this angle are reported as tangencies.
const MIN_CROSSING_ANGLE: f64 = 1e-8;

/// Crossings of two planar polylines.
pub fn polyline_intersections(a: &[[f64; 2]], b: &[[f64; 2]]) -> Intersections {
    let mut out = Intersections::default();
    let cross = |u: [f64; 2], v: [f64; 2]| u[0] * v[1] - u[1] * v[0];
    let mut degenerate_a = vec![false; a.len()];
    let mut degenerate_b = vec![false; b.len()];
    let mut found = Vec::new();
    for i in 0..a.len().saturating_sub(1) {
        let p = a[i];
        let r = [a[i + 1][0] - p[0], a[i + 1][1] - p[1]];
        let rn = r[0].hypot(r[1]);
        for j in 0..b.len().saturating_sub(1) {
            let q = b[j];
            let s = [b[j + 1][0] - q[0], b[j + 1][1] - q[1]];
            let sn = s[0].hypot(s[1]);
            let qp = [q[0] - p[0], q[1] - p[1]];
            let den = cross(r, s);
            if den.abs() <= 1e-12 * rn * sn {
                // parallel: overlapping collinear pieces are tangencies
                if cross(qp, r).abs() <= 1e-12 * rn * (rn + qp[0].hypot(qp[1])) && rn > 0.0 {
                    let t0 = (qp[0] * r[0] + qp[1] * r[1]) / (rn * rn);
                    let t1 = t0 + (s[0] * r[0] + s[1] * r[1]) / (rn * rn);
                    if t0.max(t1) >= 0.0 && t0.min(t1) <= 1.0 {
                        degenerate_a[i] = true;
                        degenerate_b[j] = true;
                        out.tangencies.push(Tangency { z: p[0], u: p[1], att: i, rep: j });
                    }
                }
                continue;
            }
            let t = cross(qp, s) / den;
            let u = cross(qp, r) / den;
            if (0.0..1.0).contains(&t) && (0.0..1.0).contains(&u) {
                let angle = den.abs().atan2((r[0] * s[0] + r[1] * s[1]).abs());
                found.push(CanardPoint {
                    z: p[0] + t * r[0],
                    u: p[1] + t * r[1],
                    angle,
                    att: (i, t),
                    rep: (j, u),
                });
            }
        }
    }
    let near = |flags: &[bool], i: usize| {
        flags[i] || (i > 0 && flags[i - 1]) || flags.get(i + 1).copied().unwrap_or(false)
    };
    for c in found {
        if near(&degenerate_a, c.att.0) || near(&degenerate_b, c.rep.0) {
            continue;
        }
        if c.angle < MIN_CROSSING_ANGLE {
            out.tangencies.push(Tangency { z: c.z, u: c.u, att: c.att.0, rep: c.rep.0 });
        } else {
            out.crossings.push(c);
        }
    }
    out
}

/// Radius of the unresolved tip, relative to the extent of the curve.
pub const TIP_RADIUS: f64 = 1e-4;

impl SlowManifoldSection {
    /// Diagonal of the bounding box of the curve.
    pub fn extent(&self) -> f64 {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for q in &self.curve {
            for i in 0..2 {
                lo[i] = lo[i].min(q[i]);
                hi[i] = hi[i].max(q[i]);
            }
        }
        (hi[0] - lo[0]).hypot(hi[1] - lo[1])
    }

    /// Ends of the curve where tracing stalled as the family collapsed.
    pub fn tips(&self) -> Vec<[f64; 2]> {
        let mut t = Vec::new();
        if self.ends[0] == TraceEnd::StepUnderflow {
            t.push(self.curve[0]);
        }
        if self.ends[1] == TraceEnd::StepUnderflow {
            t.push(*self.curve.last().unwrap());
        }
        t
    }
}

/// Canard points where the attracting and repelling sections cross.
///
/// Crossings within `TIP_RADIUS * extent` of a stalled curve end are moved
/// to `weak_limit`.
pub fn find_intersections(att: &SlowManifoldSection, rep: &SlowManifoldSection) -> Result<Intersections> {
    if att.side != ManifoldSide::Attracting || rep.side != ManifoldSide::Repelling {
        return Err(Error::InvalidParams("expected an attracting and a repelling section".into()));
    }
    let mut out = polyline_intersections(&att.curve, &rep.curve);
    let radius = TIP_RADIUS * att.extent().max(rep.extent());
    let tips: Vec<[f64; 2]> = att.tips().into_iter().chain(rep.tips()).collect();
    let (weak, keep): (Vec<CanardPoint>, Vec<CanardPoint>) = out
        .crossings
        .into_iter()
        .partition(|c| tips.iter().any(|t| (c.z - t[0]).hypot(c.u - t[1]) < radius));
    out.crossings = keep;
    out.weak_limit = weak;
    Ok(out)
}

/// A canard as one BVP on `s in [-y_far, 0]`: states `(U1, z1)` follow the
/// attracting half at `y = s`, `(U2, z2)` the repelling half at `y = -s` in
/// reversed time, and the fifth state is `ln k`. The halves meet at `y = 0`,
/// where one more condition pins the point on the hyperplane through `anchor`
/// with normal `normal` in the coordinates of [`branch_coords`].
struct CanardBvp {
    p: FoldedNodeParams,
    att: BoundaryLine,
    rep: BoundaryLine,
    anchor: [f64; 3],
    normal: [f64; 3],
}

/// `(k z, k U, ln k)` at the section: the metric used along branches.
fn branch_coords(x: &[f64; 5]) -> [f64; 3] {
    let k = x[4].exp();
    [k * x[1], k * x[0], x[4]]
}

impl BvpProblem<5> for CanardBvp {
    fn rhs(&self, s: f64, x: &[f64; 5]) -> [f64; 5] {
        let k = x[4].exp();
        let a = planar(&self.p, k, s, x[0], x[1]).0;
        let b = planar(&self.p, k, -s, x[2], x[3]).0;
        [a[0], a[1], -b[0], -b[1], 0.0]
    }

    fn jacobian(&self, s: f64, x: &[f64; 5]) -> [[f64; 5]; 5] {
        let k = x[4].exp();
        let (_, ja, da) = planar(&self.p, k, s, x[0], x[1]);
        let (_, jb, db) = planar(&self.p, k, -s, x[2], x[3]);
        let mut j = [[0.0; 5]; 5];
        for r in 0..2 {
            for c in 0..2 {
                j[r][c] = ja[r][c];
                j[r + 2][c + 2] = -jb[r][c];
            }
            j[r][4] = da[r];
            j[r + 2][4] = -db[r];
        }
        j
    }

    fn n_left(&self) -> usize {
        2
    }

    fn bc(&self, xa: &[f64; 5], xb: &[f64; 5]) -> [f64; 5] {
        let ka = xa[4].exp();
        let v = branch_coords(xb);
        [
            self.att.residual(&self.p, ka, xa[0], xa[1]),
            self.rep.residual(&self.p, ka, xa[2], xa[3]),
            xb[0] - xb[2],
            xb[1] - xb[3],
            (0..3).map(|i| self.normal[i] * (v[i] - self.anchor[i])).sum(),
        ]
    }
}

/// A canard of the regularized system at one `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CanardOrbit {
    pub k: f64,
    /// Mesh in `s`; the attracting half is at `y = s`, the repelling at `y = -s`.
    pub mesh: Vec<f64>,
    pub x: Vec<[f64; 5]>,
    pub residual: f64,
}

impl CanardOrbit {
    /// `(z, U)` in the section `y = 0`.
    pub fn section_point(&self) -> [f64; 2] {
        let v = self.x.last().unwrap();
        [v[1], v[0]]
    }

    /// Largest `x = eps (U + tanh kU) - z^2` along the orbit.
    pub fn max_x(&self, p: &FoldedNodeParams) -> f64 {
        let rp = RegularizedParams { base: *p, k: self.k };
        self.x
            .iter()
            .flat_map(|v| [fold_chart_x(&rp, v[0], v[1]), fold_chart_x(&rp, v[2], v[3])])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `(y, U, z)` samples in increasing `y`.
    pub fn samples(&self) -> Vec<[f64; 3]> {
        let mut out: Vec<[f64; 3]> = self.mesh.iter().zip(&self.x).map(|(s, v)| [*s, v[0], v[1]]).collect();
        for (s, v) in self.mesh.iter().zip(&self.x).rev().skip(1) {
            out.push([-s, v[2], v[3]]);
        }
        out
    }

    /// Largest `|z - y/2|` over the orbit.
    pub fn strong_deviation(&self) -> f64 {
        self.samples().iter().map(|q| (q[2] - q[0] / 2.0).abs()).fold(0.0, f64::max)
    }
}

impl CanardOrbit {
    /// The same canard re-solved on `mesh`, starting from linear interpolation.
    pub fn remesh(&self, p: &FoldedNodeParams, mesh: &[f64], so: &SectionOptions) -> Result<CanardOrbit> {
        let guess: Vec<[f64; 5]> = mesh
            .iter()
            .map(|&s| {
                let i = self.mesh.partition_point(|&m| m <= s).clamp(1, self.mesh.len() - 1);
                let (s0, s1) = (self.mesh[i - 1], self.mesh[i]);
                let w = (s - s0) / (s1 - s0);
                let mut g = [0.0; 5];
                for j in 0..5 {
                    g[j] = self.x[i - 1][j] + w * (self.x[i][j] - self.x[i - 1][j]);
                }
                g
            })
            .collect();
        let kappa = self.k.ln();
        solve_canard(p, so, mesh, guess, [0.0, 0.0, kappa], [0.0, 0.0, 1.0])
    }
}

fn canard_problem(p: &FoldedNodeParams, o: &SectionOptions, anchor: [f64; 3], normal: [f64; 3]) -> CanardBvp {
    let y = o.y_far.abs();
    CanardBvp {
        p: *p,
        att: BoundaryLine { y_far: -y, offset: o.offset },
        rep: BoundaryLine { y_far: y, offset: o.offset },
        anchor,
        normal,
    }
}

fn solve_canard(
    p: &FoldedNodeParams,
    o: &SectionOptions,
    mesh: &[f64],
    guess: Vec<[f64; 5]>,
    anchor: [f64; 3],
    normal: [f64; 3],
) -> Result<CanardOrbit> {
    let prob = canard_problem(p, o, anchor, normal);
    let bo = BvpOptions {
        max_refinements: 0,
        ..o.bvp
    };
    let s = solve_bvp(&prob, mesh, guess, &bo)?;
    Ok(CanardOrbit {
        k: s.last()[4].exp(),
        mesh: s.mesh,
        x: s.x,
        residual: s.residual,
    })
}

/// Canard through a crossing of the two sections, refined at fixed `k`.
pub fn canard_at_crossing(
    p: &FoldedNodeParams,
    att: &SlowManifoldSection,
    rep: &SlowManifoldSection,
    c: &CanardPoint,
    o: &SectionOptions,
) -> Result<CanardOrbit> {
    let lerp = |orbits: &[Vec<[f64; 2]>], (i, t): (usize, f64), j: usize| {
        let (a, b) = (orbits[i][j], orbits[(i + 1).min(orbits.len() - 1)][j]);
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
    };
    let m = att.mesh.len();
    let kappa = att.k.ln();
    let guess: Vec<[f64; 5]> = (0..m)
        .map(|j| {
            let a = lerp(&att.orbits, c.att, j);
            let b = lerp(&rep.orbits, c.rep, m - 1 - j);
            [a[0], a[1], b[0], b[1], kappa]
        })
        .collect();
    solve_canard(p, o, &att.mesh, guess, [0.0, 0.0, kappa], [0.0, 0.0, 1.0])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BranchLabel {
    Strong,
    Weak,
    Secondary(u32),
}

impl std::fmt::Display for BranchLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BranchLabel::Strong => write!(f, "gamma_st"),
            BranchLabel::Weak => write!(f, "gamma_wk"),
            BranchLabel::Secondary(i) => write!(f, "gamma_{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchSample {
    pub k: f64,
    pub max_x: f64,
    /// `U` at the section point.
    pub u: f64,
    /// `z` at the section point.
    pub z: f64,
    /// Sample requested on the recording grid rather than a continuation step.
    pub on_grid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BranchEnd {
    RangeEnd,
    /// The branch turned back in `k`.
    Fold { k: f64 },
    ConvergenceLost { k: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanardBranch {
    pub label: BranchLabel,
    /// Ordered by `k` in the direction of continuation.
    pub samples: Vec<BranchSample>,
    pub end: BranchEnd,
}

/// Settings for [`continue_branch`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchOptions {
    pub ds_initial: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    /// `k` values at which samples are always recorded.
    pub record_k: Vec<f64>,
    pub max_steps: usize,
}

impl Default for BranchOptions {
    fn default() -> Self {
        Self {
            ds_initial: 0.02,
            ds_min: 1e-6,
            ds_max: 0.1,
            record_k: Vec::new(),
            max_steps: 2000,
        }
    }
}

fn sample_of(p: &FoldedNodeParams, c: &CanardOrbit, on_grid: bool) -> BranchSample {
    let q = c.section_point();
    BranchSample {
        k: c.k,
        max_x: c.max_x(p),
        u: q[1],
        z: q[0],
        on_grid,
    }
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Pseudo-arclength continuation of a canard in `ln k` from `seed` towards
/// `k_end`, stopping at the end of the range, at a fold in `k`, or when
/// Newton fails below the smallest step.
pub fn continue_branch(
    p: &FoldedNodeParams,
    seed: &CanardOrbit,
    k_end: f64,
    label: BranchLabel,
    so: &SectionOptions,
    bo: &BranchOptions,
) -> Result<CanardBranch> {
    let dir = (k_end - seed.k).signum();
    if dir == 0.0 {
        return Err(Error::InvalidParams("empty continuation range".into()));
    }
    let kappa_end = k_end.ln();
    let mesh = seed.mesh.clone();
    let fixed = |guess: Vec<[f64; 5]>, kappa: f64| {
        solve_canard(p, so, &mesh, guess, [0.0, 0.0, kappa], [0.0, 0.0, 1.0])
    };
    let mut grid: Vec<f64> = bo
        .record_k
        .iter()
        .copied()
        .filter(|&k| dir * (k - seed.k) > 1e-9 * k && dir * (k_end - k) >= -1e-9 * k)
        .collect();
    grid.sort_by(|a, b| (dir * a).total_cmp(&(dir * b)));
    grid.reverse();

    let mut samples = vec![sample_of(p, seed, bo.record_k.iter().any(|&k| (k - seed.k).abs() < 1e-12 * k))];
    let mut cur = seed.clone();
    let mut ds = bo.ds_initial;
    // first step at fixed k fixes the orientation
    let first = loop {
        let kap = seed.k.ln() + dir * ds;
        let kap = if dir * (kap - kappa_end) > 0.0 { kappa_end } else { kap };
        let guess: Vec<[f64; 5]> = cur.x.iter().map(|v| [v[0], v[1], v[2], v[3], kap]).collect();
        match fixed(guess, kap) {
            Ok(c) => break c,
            Err(_) => {
                ds *= 0.5;
                if ds < bo.ds_min {
                    return Ok(CanardBranch {
                        label,
                        samples,
                        end: BranchEnd::ConvergenceLost { k: seed.k },
                    });
                }
            }
        }
    };
    let mut prev = cur;
    cur = first;
    let push_step = |samples: &mut Vec<BranchSample>, grid: &mut Vec<f64>, prev: &CanardOrbit, cur: &CanardOrbit| -> Result<()> {
        // grid values passed in this step, solved exactly
        while let Some(&kg) = grid.last() {
            if dir * (cur.k - kg) < -1e-12 * kg {
                break;
            }
            grid.pop();
            let s = (kg.ln() - prev.k.ln()) / (cur.k.ln() - prev.k.ln());
            let guess: Vec<[f64; 5]> = prev
                .x
                .iter()
                .zip(&cur.x)
                .map(|(a, b)| {
                    let mut g = [0.0; 5];
                    for i in 0..5 {
                        g[i] = a[i] + s * (b[i] - a[i]);
                    }
                    g
                })
                .collect();
            if (kg - cur.k).abs() <= 1e-12 * kg {
                samples.push(sample_of(p, cur, true));
                return Ok(());
            }
            let c = fixed(guess, kg.ln())?;
            samples.push(sample_of(p, &c, true));
        }
        samples.push(sample_of(p, cur, false));
        Ok(())
    };
    push_step(&mut samples, &mut grid, &prev, &cur)?;
    if (cur.k.ln() - kappa_end).abs() < 1e-14 {
        return Ok(CanardBranch { label, samples, end: BranchEnd::RangeEnd });
    }

    for _ in 0..bo.max_steps {
        let (v0, v1) = (branch_coords(cur.x.last().unwrap()), branch_coords(prev.x.last().unwrap()));
        let sec = [v0[0] - v1[0], v0[1] - v1[1], v0[2] - v1[2]];
        let sn = norm3(sec);
        let tau = [sec[0] / sn, sec[1] / sn, sec[2] / sn];
        if dir * tau[2] <= 0.0 {
            return Ok(CanardBranch { label, samples, end: BranchEnd::Fold { k: cur.k } });
        }
        let mut step = ds;
        // land on the end of the range
        let mut last = false;
        if dir * (v0[2] + step * tau[2] - kappa_end) >= 0.0 {
            step = (kappa_end - v0[2]) / tau[2];
            last = true;
        }
        let anchor = [v0[0] + step * tau[0], v0[1] + step * tau[1], v0[2] + step * tau[2]];
        let ratio = step / sn;
        let guess: Vec<[f64; 5]> = cur
            .x
            .iter()
            .zip(&prev.x)
            .map(|(a, b)| {
                let mut g = [0.0; 5];
                for i in 0..5 {
                    g[i] = a[i] + ratio * (a[i] - b[i]);
                }
                g
            })
            .collect();
        let res = if last {
            fixed(guess, kappa_end)
        } else {
            solve_canard(p, so, &mesh, guess, anchor, tau)
        };
        match res {
            Ok(next) => {
                let vn = branch_coords(next.x.last().unwrap());
                let d = [vn[0] - v0[0], vn[1] - v0[1], vn[2] - v0[2]];
                let dn = norm3(d);
                let cosang = (d[0] * tau[0] + d[1] * tau[1] + d[2] * tau[2]) / dn.max(1e-300);
                if !last && (cosang < 0.9 || dn > 2.0 * step) {
                    ds *= 0.5;
                    if ds < bo.ds_min {
                        return Ok(CanardBranch { label, samples, end: BranchEnd::ConvergenceLost { k: cur.k } });
                    }
                    continue;
                }
                if dir * d[2] <= 0.0 {
                    return Ok(CanardBranch { label, samples, end: BranchEnd::Fold { k: cur.k } });
                }
                prev = std::mem::replace(&mut cur, next);
                push_step(&mut samples, &mut grid, &prev, &cur)?;
                if last {
                    return Ok(CanardBranch { label, samples, end: BranchEnd::RangeEnd });
                }
                if cosang > 0.99 {
                    ds = (ds * 1.5).min(bo.ds_max);
                }
            }
            Err(_) => {
                ds *= 0.5;
                if ds < bo.ds_min {
                    return Ok(CanardBranch { label, samples, end: BranchEnd::ConvergenceLost { k: cur.k } });
                }
            }
        }
    }
    Err(Error::TooManySteps(bo.max_steps))
}

impl CanardBranch {
    /// Samples on the recording grid.
    pub fn grid_samples(&self) -> impl Iterator<Item = &BranchSample> {
        self.samples.iter().filter(|s| s.on_grid)
    }

    pub fn k_range(&self) -> (f64, f64) {
        let ks = self.samples.iter().map(|s| s.k);
        (ks.clone().fold(f64::INFINITY, f64::min), ks.fold(f64::NEG_INFINITY, f64::max))
    }
}

/// Settings for [`branch_diagram`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchDiagramOptions {
    /// Stiffness values at which sections are intersected and branches sampled.
    pub k_grid: Vec<f64>,
    /// Branches are also continued down to this `k` to locate where they begin.
    pub k_low: f64,
    pub section: SectionOptions,
    pub branch: BranchOptions,
}

impl Default for BranchDiagramOptions {
    fn default() -> Self {
        Self {
            k_grid: vec![10.0, 20.0, 50.0, 100.0, 200.0, 500.0],
            k_low: 1.0,
            section: SectionOptions::default(),
            branch: BranchOptions::default(),
        }
    }
}

/// Counts at one grid stiffness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCount {
    pub k: f64,
    /// Transversal crossings of the two sections away from the weak-canard tip.
    pub crossings: usize,
    /// Continued branches alive at this `k`.
    pub branches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchDiagram {
    pub branches: Vec<CanardBranch>,
    pub counts: Vec<GridCount>,
    /// `(k, max_x)` at branch ends where continuation failed or folded;
    /// these points trace the weak-canard envelope.
    pub weak_envelope: Vec<(f64, f64)>,
}

/// Crossings sorted from the outer end of the attracting section towards its tip.
fn outer_to_inner(att: &SlowManifoldSection, x: &Intersections) -> Vec<CanardPoint> {
    let tip_at_start = matches!(att.ends[0], TraceEnd::StepUnderflow) || !matches!(att.ends[1], TraceEnd::StepUnderflow);
    let mut c = x.crossings.clone();
    let pos = |p: &CanardPoint| p.att.0 as f64 + p.att.1;
    c.sort_by(|a, b| pos(a).total_cmp(&pos(b)));
    if tip_at_start {
        c.reverse();
    }
    c
}

fn merge(label: BranchLabel, down: CanardBranch, up: CanardBranch) -> CanardBranch {
    let mut samples: Vec<BranchSample> = down.samples.into_iter().skip(1).rev().collect();
    samples.extend(up.samples);
    CanardBranch { label, samples, end: up.end }
}

/// Relative distance in `U` from a crossing to a branch sample at `k`.
fn branch_gap(b: &CanardBranch, k: f64, c: &CanardPoint) -> Option<f64> {
    b.samples
        .iter()
        .filter(|s| s.on_grid && (s.k - k).abs() <= 1e-9 * k)
        .map(|s| (s.u - c.u).abs() / s.u.abs().max(1e-12))
        .reduce(f64::min)
}

/// Relative `U` tolerance for matching a section crossing to a branch.
const MATCH_TOL: f64 = 0.05;

/// Sections, crossings and continued canard branches over a stiffness grid.
///
/// Branches are seeded at the first grid value. The strong canard is the
/// branch that stays closest to the line `z = y/2` at the top of the grid;
/// the others are labelled `gamma_1, gamma_2, ...` from the outer end of the
/// attracting section towards the weak-canard tip. Crossings at later grid
/// values that belong to no branch start new branches, numbered on.
pub fn branch_diagram(p: &FoldedNodeParams, o: &BranchDiagramOptions) -> Result<BranchDiagram> {
    let mut grid = o.k_grid.clone();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let (&k0, &k_top) = match (grid.first(), grid.last()) {
        (Some(a), Some(b)) if a < b => (a, b),
        _ => return Err(Error::InvalidParams("the stiffness grid needs two distinct values".into())),
    };
    let bo = BranchOptions {
        record_k: grid.clone(),
        ..o.branch.clone()
    };
    let mut branches: Vec<(CanardBranch, f64)> = Vec::new();
    let mut counts = Vec::new();
    let mut next_label = 1;
    for &k in &grid {
        let rp = RegularizedParams::new(*p, k)?;
        let att = compute_slow_manifold(&rp, ManifoldSide::Attracting, &o.section)?;
        let rep = compute_slow_manifold(&rp, ManifoldSide::Repelling, &o.section)?;
        let x = find_intersections(&att, &rep)?;
        let crossings = outer_to_inner(&att, &x);
        let mut fresh = Vec::new();
        for c in &crossings {
            let matched = branches.iter().any(|(b, _)| branch_gap(b, k, c).is_some_and(|g| g < MATCH_TOL));
            if matched {
                continue;
            }
            let seed = canard_at_crossing(p, &att, &rep, c, &o.section)?;
            let up = if k < k_top {
                continue_branch(p, &seed, k_top, BranchLabel::Strong, &o.section, &bo)?
            } else {
                CanardBranch { label: BranchLabel::Strong, samples: vec![sample_of(p, &seed, true)], end: BranchEnd::RangeEnd }
            };
            let down = continue_branch(p, &seed, o.k_low.min(k0), BranchLabel::Strong, &o.section, &bo)?;
            let top_dev = if k < k_top {
                continue_to_orbit(p, &seed, k_top, &o.section, &o.branch)
                    .map(|c| c.strong_deviation())
                    .unwrap_or(f64::INFINITY)
            } else {
                seed.strong_deviation()
            };
            fresh.push((merge(BranchLabel::Strong, down, up), top_dev));
        }
        if branches.is_empty() {
            // the strong canard among the first crossings
            if let Some(i) = fresh
                .iter()
                .enumerate()
                .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
                .map(|(i, _)| i)
            {
                for (j, f) in fresh.iter_mut().enumerate() {
                    if j != i {
                        f.0.label = BranchLabel::Secondary(next_label);
                        next_label += 1;
                    }
                }
            }
        } else {
            for f in fresh.iter_mut() {
                f.0.label = BranchLabel::Secondary(next_label);
                next_label += 1;
            }
        }
        branches.extend(fresh);
        let alive = branches
            .iter()
            .filter(|(b, _)| b.samples.iter().any(|s| s.on_grid && (s.k - k).abs() <= 1e-9 * k))
            .count();
        counts.push(GridCount {
            k,
            crossings: crossings.len(),
            branches: alive,
        });
    }
    let mut branches: Vec<CanardBranch> = branches.into_iter().map(|(b, _)| b).collect();
    branches.sort_by_key(|b| b.label);
    let weak_envelope = branches
        .iter()
        .flat_map(|b| {
            let lo = b.samples.first().filter(|s| s.k > o.k_low.min(k0) * (1.0 + 1e-9));
            let hi = b.samples.last().filter(|_| !matches!(b.end, BranchEnd::RangeEnd));
            lo.into_iter().chain(hi).map(|s| (s.k, s.max_x))
        })
        .collect();
    Ok(BranchDiagram {
        branches,
        counts,
        weak_envelope,
    })
}

/// Canard orbit continued from `seed` to exactly `k`.
pub fn continue_to_orbit(p: &FoldedNodeParams, seed: &CanardOrbit, k: f64, so: &SectionOptions, bo: &BranchOptions) -> Result<CanardOrbit> {
    let mut cur = seed.clone();
    let (k0, k1) = (seed.k.ln(), k.ln());
    let mut h = bo.ds_max.min((k1 - k0).abs()).max(bo.ds_min);
    while (cur.k.ln() - k1).abs() > 1e-14 {
        let kap = cur.k.ln() + (k1 - k0).signum() * h;
        let kap = if (kap - k1) * (k1 - k0) > 0.0 { k1 } else { kap };
        let guess: Vec<[f64; 5]> = cur.x.iter().map(|v| [v[0], v[1], v[2], v[3], kap]).collect();
        match solve_canard(p, so, &cur.mesh, guess, [0.0, 0.0, kap], [0.0, 0.0, 1.0]) {
            Ok(c) => {
                cur = c;
                h = (h * 1.5).min(bo.ds_max);
            }
            Err(e) => {
                h *= 0.5;
                if h < bo.ds_min {
                    return Err(e);
                }
            }
        }
    }
    Ok(cur)
}

impl BranchDiagram {
    /// CSV with columns `k, max_x, branch_label`.
    pub fn write_csv<W: Write>(&self, prov: &Provenance, w: W) -> Result<()> {
        let mut t = CsvTable::new(["k", "max_x", "branch_label"]);
        for b in &self.branches {
            for s in &b.samples {
                t.push(vec![fmt_f64(s.k), fmt_f64(s.max_x), b.label.to_string()]);
            }
        }
        for (k, x) in &self.weak_envelope {
            t.push(vec![fmt_f64(*k), fmt_f64(*x), BranchLabel::Weak.to_string()]);
        }
        t.write(prov, w)
    }

    pub fn branch(&self, label: BranchLabel) -> Option<&CanardBranch> {
        self.branches.iter().find(|b| b.label == label)
    }
}

/// gnuplot script drawing `max_x` against `k` per branch from a CSV written
/// by [`BranchDiagram::write_csv`].
pub fn branch_plot_script(csv_path: &str, labels: &[BranchLabel]) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\nset logscale x\nset xlabel 'k'\nset ylabel 'max x'\nset key outside\n");
    let plots: Vec<String> = labels
        .iter()
        .map(|l| format!("'{csv_path}' using (strcol(3) eq '{l}' ? $1 : NaN):2 with linespoints title '{l}'"))
        .collect();
    s.push_str(&format!("plot {}\n", plots.join(", \\\n     ")));
    s
}

/// gnuplot script drawing the `(z, U)` section curves from a CSV written by
/// [`SlowManifoldSection::write_csv`].
pub fn section_plot_script(csv_path: &str) -> String {
    format!(
        "set datafile separator ','\nset xlabel 'z'\nset ylabel 'U'\n\
         plot '{csv_path}' using (strcol(3) eq 'attracting' ? $1 : NaN):2 with lines title 'attracting', \\\n     \
         '{csv_path}' using (strcol(3) eq 'repelling' ? $1 : NaN):2 with lines title 'repelling'\n"
    )
}

/// Hausdorff distance in `(U, y, z)` between the Filippov trajectory of the
/// Sans-level pinched system and the orbit of the regularized system with
/// stiffness `k`, both started at `s0` and run over `[t0, t1]`.
pub fn regularization_distance(p: &FoldedNodeParams, k: f64, s0: [f64; 3], t0: f64, t1: f64) -> Result<f64> {
    let sys = PinchedSystem::new(PinchLevel::Sans, *p);
    let fo = FilippovOptions {
        sample_dt: Some((t1 - t0) / 2000.0),
        ..FilippovOptions::with_tol(1e-10)
    };
    let pws = integrate(&sys, s0, t0, t1, &fo)?;
    let rp = RegularizedParams::new(*p, k)?;
    let f = move |_t: f64, x: &[f64; 3]| eval_regularized(&rp, *x);
    let opts = OdeOptions {
        rtol: 1e-9,
        atol: 1e-12,
        ..OdeOptions::default()
    };
    let sol = ode::solve(&f, Method::Rosenbrock23, t0, s0, t1, opts)?;
    let n = 4000;
    let reg: Vec<[f64; 3]> = (0..=n).map(|i| sol.eval(t0 + (t1 - t0) * i as f64 / n as f64)).collect();
    Ok(hausdorff_distance(&pws.points(), &reg))
}
