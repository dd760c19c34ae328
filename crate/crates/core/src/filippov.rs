//! Event-driven integration of two-field piecewise-smooth systems with
//! crossing, sliding and release at tangencies.
//!
//! States are `(A, y, z)` with switching manifold `A = 0`. Off the manifold
//! the field of the current side is followed with a Dormand–Prince stepper;
//! manifold hits are located by bisection on the dense output. On the
//! manifold the sliding flow is integrated in the rescaled time `dtau =
//! dt/|phi|` supplied by [`PiecewiseSmoothSystem::sliding_rescaled`], which
//! stays finite at the fold `z = 0`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::export::{fmt_f64, CsvTable, Provenance};
use crate::models::FoldedNodeParams;
use crate::ode::{DenseStep, Dopri5, OdeOptions, Stepper};
use crate::pinch::{self, PinchLevel, Side, SwitchPointClass};

/// Two smooth fields separated by `A = 0`, with a sliding flow on the manifold.
pub trait PiecewiseSmoothSystem {
    /// Field of `side`, evaluated at any state (the integrator probes a
    /// little beyond the manifold).
    fn side_field(&self, state: [f64; 3], side: Side) -> [f64; 3];

    /// Sliding flow `(y', z')` on `A = 0`.
    fn sliding_field(&self, y: f64, z: f64) -> Result<[f64; 2]>;

    /// `(|phi| * sliding_field, |phi|)` for a scalar `phi` that removes any
    /// singularity of the sliding flow. The default is `phi = 1`.
    fn sliding_rescaled(&self, y: f64, z: f64) -> ([f64; 2], f64) {
        match self.sliding_field(y, z) {
            Ok(g) => (g, 1.0),
            Err(_) => ([f64::NAN; 2], 1.0),
        }
    }

    /// Normal velocity `A'` of the field of `side` at the manifold point.
    fn normal_derivative(&self, y: f64, z: f64, side: Side) -> f64 {
        self.side_field([0.0, y, z], side)[0]
    }

    fn classify(&self, y: f64, z: f64) -> SwitchPointClass {
        if y == 0.0 && z == 0.0 {
            return SwitchPointClass::TwoFold;
        }
        let hp = self.normal_derivative(y, z, Side::Plus);
        let hm = self.normal_derivative(y, z, Side::Minus);
        pinch::classify_from_derivatives(hp, hm, 1e-13 * hp.abs().max(hm.abs()))
    }

    /// Second derivative of `A` along the field of `side` at a tangency
    /// point. Positive on `Plus` (negative on `Minus`) means the orbit curves
    /// away from the manifold. The default differentiates `A'` along the flow.
    fn tangency_curvature(&self, y: f64, z: f64, side: Side) -> f64 {
        let f = self.side_field([0.0, y, z], side);
        let h = 1e-6 * (1.0 + y.abs() + z.abs());
        let fwd = self.normal_derivative(y + h * f[1], z + h * f[2], side);
        let bwd = self.normal_derivative(y - h * f[1], z - h * f[2], side);
        (fwd - bwd) / (2.0 * h)
    }
}

/// The pinched fields of [`pinch::eval_side`] with the shared sliding flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinchedSystem {
    pub level: PinchLevel,
    pub params: FoldedNodeParams,
}

impl PinchedSystem {
    pub fn new(level: PinchLevel, params: FoldedNodeParams) -> Self {
        Self { level, params }
    }
}

impl PiecewiseSmoothSystem for PinchedSystem {
    fn side_field(&self, state: [f64; 3], side: Side) -> [f64; 3] {
        pinch::eval_side(self.level, &self.params, state, side)
    }

    fn sliding_field(&self, y: f64, z: f64) -> Result<[f64; 2]> {
        let (a, b) = pinch::sliding_vector_field(self.level, &self.params, y, z)?;
        Ok([a, b])
    }

    fn sliding_rescaled(&self, y: f64, z: f64) -> ([f64; 2], f64) {
        musliding_rescaled(&self.params, y, z)
    }

    fn classify(&self, y: f64, z: f64) -> SwitchPointClass {
        pinch::classify_switch_point(self.level, &self.params, y, z)
    }

    fn tangency_curvature(&self, _y: f64, _z: f64, side: Side) -> f64 {
        pinch::tangency_curvature(self.level, &self.params, side)
    }
}

/// The projected slow flow multiplied by `|2z|`.
pub fn musliding_rescaled(p: &FoldedNodeParams, y: f64, z: f64) -> ([f64; 2], f64) {
    let drive = crate::models::slow_drive(p.mu(), y, z);
    let s = if z >= 0.0 { 1.0 } else { -1.0 };
    ([2.0 * z.abs(), -drive * s], 2.0 * z.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    Above,
    Below,
    Sliding,
}

impl Mode {
    fn of_side(s: Side) -> Mode {
        match s {
            Side::Plus => Mode::Above,
            Side::Minus => Mode::Below,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Mode::Above => "above",
            Mode::Below => "below",
            Mode::Sliding => "sliding",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    Cross,
    SlideEntry,
    SlideExitTangency,
    /// A side orbit touched the manifold at a visible tangency and stayed.
    Graze,
    /// A sliding orbit passed through the two-fold point `y = z = 0`.
    SingularFold,
    Terminate,
}

impl EventKind {
    pub fn label(self) -> &'static str {
        match self {
            EventKind::Cross => "cross",
            EventKind::SlideEntry => "slide_entry",
            EventKind::SlideExitTangency => "slide_exit_tangency",
            EventKind::Graze => "graze",
            EventKind::SingularFold => "singular_fold",
            EventKind::Terminate => "terminate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub state: [f64; 3],
    pub mode: Mode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    pub state: [f64; 3],
    /// Side entered after the event, when one is entered.
    pub side: Option<Side>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
}

impl Trajectory {
    pub fn modes(&self) -> Vec<Mode> {
        let mut out: Vec<Mode> = Vec::new();
        for s in &self.samples {
            if out.last() != Some(&s.mode) {
                out.push(s.mode);
            }
        }
        out
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    pub fn points(&self) -> Vec<[f64; 3]> {
        self.samples.iter().map(|s| s.state).collect()
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    /// CSV with columns `t, A, y, z, mode, event`; the event column names
    /// the event recorded at that sample, if any.
    pub fn write_csv<W: Write>(&self, prov: &Provenance, w: W) -> Result<()> {
        let mut table = CsvTable::new(["t", "A", "y", "z", "mode", "event"]);
        let mut ev = self.events.iter().peekable();
        for s in &self.samples {
            let mut flags = Vec::new();
            while let Some(e) = ev.peek() {
                if e.t == s.t {
                    flags.push(e.kind.label());
                    ev.next();
                } else {
                    break;
                }
            }
            table.push(vec![
                fmt_f64(s.t),
                fmt_f64(s.state[0]),
                fmt_f64(s.state[1]),
                fmt_f64(s.state[2]),
                s.mode.label().to_string(),
                flags.join("|"),
            ]);
        }
        table.write(prov, w)
    }

    fn push(&mut self, t: f64, state: [f64; 3], mode: Mode) {
        if let Some(last) = self.samples.last() {
            if last.t == t {
                return;
            }
        }
        self.samples.push(Sample { t, state, mode });
    }

    fn event(&mut self, t: f64, kind: EventKind, state: [f64; 3], side: Option<Side>) {
        self.events.push(Event { t, kind, state, side });
    }
}

/// Tolerances for [`integrate`] and [`slide`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilippovOptions {
    /// Relative tolerance of the steppers (absolute is `tol / 100`).
    pub tol: f64,
    /// Manifold hits are refined until `|A| <= event_tol`.
    pub event_tol: f64,
    /// Sliding orbits closer than this to `y = z = 0` are carried through it.
    pub fold_radius: f64,
    /// Extra dense samples so consecutive samples are at most this far apart in `t`.
    pub sample_dt: Option<f64>,
    pub max_events: usize,
    pub max_steps: usize,
}

impl Default for FilippovOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            event_tol: 1e-10,
            fold_radius: 1e-7,
            sample_dt: None,
            max_events: 10_000,
            max_steps: 2_000_000,
        }
    }
}

impl FilippovOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    fn ode(&self) -> OdeOptions {
        OdeOptions {
            rtol: self.tol,
            atol: self.tol * 1e-2,
            max_steps: self.max_steps,
            ..OdeOptions::default()
        }
    }
}

/// Event found inside one step by [`detect_event`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectedEvent {
    pub t: f64,
    /// `true` for a touch without sign change (double root).
    pub grazing: bool,
}

/// Locate the first point in `[t0, t1]` where `sign * a(t)` drops from
/// positive to nonpositive, or touches zero without changing sign.
///
/// `adot` is the time derivative of `a`. The interval is probed at
/// `probes` interior points; a minimum of `sign * a` between probes is found
/// through the sign change of `adot` and counts as an event when its value is
/// within `tol` of zero.
pub fn detect_event(
    a: impl Fn(f64) -> f64,
    adot: impl Fn(f64) -> f64,
    sign: f64,
    t0: f64,
    t1: f64,
    tol: f64,
    probes: usize,
) -> Result<Option<DetectedEvent>> {
    let g = |t: f64| sign * a(t);
    let gd = |t: f64| sign * adot(t);
    let tt = |j: usize| t0 + (t1 - t0) * j as f64 / (probes + 1) as f64;
    let (mut tp, mut gp, mut dp) = (t0, g(t0), gd(t0));
    let dirn = (t1 - t0).signum();
    for j in 1..=probes + 1 {
        let tj = if j == probes + 1 { t1 } else { tt(j) };
        let (gj, dj) = (g(tj), gd(tj));
        if gp > 0.0 && gj <= 0.0 {
            return Ok(Some(DetectedEvent {
                t: refine_root(&g, tp, tj, tol)?,
                grazing: false,
            }));
        }
        // interior minimum: derivative along the direction of travel goes - to +
        if gp > 0.0 && gj > 0.0 && dirn * dp < 0.0 && dirn * dj > 0.0 {
            let tm = crate::roots::bisect(&gd, tp, tj, 1e-15 * (1.0 + tj.abs()), 0.0)?;
            let gm = g(tm);
            if gm < -tol {
                return Ok(Some(DetectedEvent {
                    t: refine_root(&g, tp, tm, tol)?,
                    grazing: false,
                }));
            }
            if gm <= tol {
                return Ok(Some(DetectedEvent { t: tm, grazing: true }));
            }
        }
        tp = tj;
        gp = gj;
        dp = dj;
    }
    Ok(None)
}

fn refine_root(g: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (a, b);
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        let gm = g(m);
        if gm.abs() <= tol {
            return Ok(m);
        }
        if gm > 0.0 {
            lo = m;
        } else {
            hi = m;
        }
        if m == lo && m == hi || (hi - lo).abs() <= 4.0 * f64::EPSILON * m.abs().max(1e-300) {
            // the root is resolved to machine precision
            return Ok(hi);
        }
    }
    Err(Error::EventLocalization(0.5 * (lo + hi)))
}

/// Points of one accepted step to record, including extra dense samples.
fn dense_times(t0: f64, t1: f64, sample_dt: Option<f64>) -> Vec<f64> {
    let mut out = Vec::new();
    if let Some(dt) = sample_dt {
        let n = ((t1 - t0).abs() / dt).ceil() as usize;
        for j in 1..n {
            out.push(t0 + (t1 - t0) * j as f64 / n as f64);
        }
    }
    out
}

enum SideEnd {
    Span,
    Hit([f64; 3], f64),
}

fn run_side<S: PiecewiseSmoothSystem + ?Sized>(
    sys: &S,
    side: Side,
    t0: f64,
    x0: [f64; 3],
    t_end: f64,
    o: &FilippovOptions,
    traj: &mut Trajectory,
) -> Result<SideEnd> {
    let field = |_t: f64, x: &[f64; 3]| sys.side_field(*x, side);
    let mode = Mode::of_side(side);
    let mut st = Dopri5::new(t0, x0, o.ode());
    traj.push(t0, x0, mode);
    let mut steps = 0usize;
    loop {
        steps += 1;
        if steps > o.max_steps {
            return Err(Error::TooManySteps(o.max_steps));
        }
        let d: DenseStep<3> = st.step(&field, t_end)?;
        let (ta, tb) = (d.t0(), d.t1());
        let xb = st.state();
        let at = |t: f64| if t == tb { xb } else { d.eval(t) };
        let ev = detect_event(
            |t| at(t)[0],
            |t| field(t, &at(t))[0],
            side.sign(),
            ta,
            tb,
            o.event_tol,
            8,
        )?;
        match ev {
            Some(DetectedEvent { t, grazing }) => {
                for ti in dense_times(ta, t, o.sample_dt) {
                    traj.push(ti, d.eval(ti), mode);
                }
                let mut x = at(t);
                if grazing {
                    traj.push(t, x, mode);
                    traj.event(t, EventKind::Graze, x, Some(side));
                    st = Dopri5::new(t, x, o.ode());
                    continue;
                }
                x[0] = 0.0;
                return Ok(SideEnd::Hit(x, t));
            }
            None => {
                for ti in dense_times(ta, tb, o.sample_dt) {
                    traj.push(ti, d.eval(ti), mode);
                }
                traj.push(tb, xb, mode);
                if tb == t_end {
                    return Ok(SideEnd::Span);
                }
            }
        }
    }
}

enum SlideEnd {
    Span,
    Exit(Side),
}

/// Zero threshold for a normal velocity, relative to the field scale.
fn h_tol<S: PiecewiseSmoothSystem + ?Sized>(sys: &S, y: f64, z: f64) -> f64 {
    let fp = sys.side_field([0.0, y, z], Side::Plus);
    let fm = sys.side_field([0.0, y, z], Side::Minus);
    let scale = fp.iter().chain(fm.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
    1e-9 * scale.max(1e-300)
}

#[allow(clippy::too_many_arguments)]
fn slide_segment<S: PiecewiseSmoothSystem + ?Sized>(
    sys: &S,
    y0: f64,
    z0: f64,
    t0: f64,
    t_end: f64,
    o: &FilippovOptions,
    traj: &mut Trajectory,
    mut fold_passes: usize,
) -> Result<SlideEnd> {
    let dir = (t_end - t0).signum();
    let hp = |y: f64, z: f64| sys.normal_derivative(y, z, Side::Plus);
    let hm = |y: f64, z: f64| sys.normal_derivative(y, z, Side::Minus);
    traj.push(t0, [0.0, y0, z0], Mode::Sliding);
    if t_end == t0 {
        return Ok(SlideEnd::Span);
    }

    // Signs of (h+, h-) inside the region, taken a little along the flow
    // when the start lies on the region boundary.
    let interior = |y0: f64, z0: f64| -> Result<std::result::Result<(f64, f64), Side>> {
        let tol0 = h_tol(sys, y0, z0);
        let (hp0, hm0) = (hp(y0, z0), hm(y0, z0));
        if hp0.abs() <= tol0 || hm0.abs() <= tol0 {
            if hp0.abs() <= tol0 && hm0.abs() <= tol0 {
                return Err(Error::Degenerate(format!(
                    "sliding start ({y0}, {z0}) is a two-fold point"
                )));
            }
            let (g, _) = sys.sliding_rescaled(y0, z0);
            let gn = g[0].hypot(g[1]).max(1e-300);
            let delta = dir * 1e-7 * (1.0 + y0.abs() + z0.abs()) / gn;
            let (y1, z1) = (y0 + delta * g[0], z0 + delta * g[1]);
            let (hp1, hm1) = (hp(y1, z1), hm(y1, z1));
            if hp1 * hm1 >= 0.0 {
                let side = if hp0.abs() <= tol0 { Side::Plus } else { Side::Minus };
                return Ok(Err(side));
            }
            Ok(Ok((hp1.signum(), hm1.signum())))
        } else if hp0 * hm0 > 0.0 {
            Err(Error::Domain(format!(
                "({y0}, {z0}) is not in a sliding region"
            )))
        } else {
            Ok(Ok((hp0.signum(), hm0.signum())))
        }
    };

    // (y, z, t) in rescaled time
    let rhs = |_tau: f64, x: &[f64; 3]| {
        let (g, phi) = sys.sliding_rescaled(x[0], x[1]);
        [dir * g[0], dir * g[1], dir * phi]
    };
    let tau = 0.0;
    let mut x = [y0, z0, t0];
    let ode = OdeOptions {
        h_max: 1.0,
        ..o.ode()
    };
    loop {
        let (sp, sm) = match interior(x[0], x[1])? {
            Ok(s) => s,
            Err(side) => return Ok(SlideEnd::Exit(side)),
        };
        let mut st = Dopri5::new(tau, x, ode);
        let tau_cap = tau + 1e6;
        let mut steps = 0usize;
        let restart = loop {
            steps += 1;
            if steps > o.max_steps {
                return Err(Error::TooManySteps(o.max_steps));
            }
            let d = st.step(&rhs, tau_cap)?;
            let (ta, tb) = (d.t0(), d.t1());
            let xb = st.state();
            let at = |s: f64| if s == tb { xb } else { d.eval(s) };
            let xa = at(ta);
            // event monitors, positive while inside
            let mon = |s: f64| -> [f64; 3] {
                let v = at(s);
                [sp * hp(v[0], v[1]), sm * hm(v[0], v[1]), dir * (t_end - v[2])]
            };
            let mb = mon(tb);
            let hit = (0..3).find(|&i| mb[i] <= 0.0 && mon(ta)[i] > 0.0);
            let hit = match hit {
                // the earliest of several simultaneous monitors
                Some(_) => {
                    let mut best: Option<(f64, usize)> = None;
                    for i in 0..3 {
                        if mb[i] <= 0.0 && mon(ta)[i] > 0.0 {
                            let s = refine_root(&|s| mon(s)[i], ta, tb, 0.0)?;
                            if best.is_none_or(|(b, _)| (s - ta).abs() < (b - ta).abs()) {
                                best = Some((s, i));
                            }
                        }
                    }
                    best
                }
                None => None,
            };
            let tvals = |s0: f64, s1: f64, v0: f64, v1: f64| {
                let mut ts = Vec::new();
                if let Some(dt) = o.sample_dt {
                    let n = ((v1 - v0).abs() / dt).ceil() as usize;
                    for j in 1..n {
                        ts.push(s0 + (s1 - s0) * j as f64 / n as f64);
                    }
                }
                ts
            };
            if let Some((s, i)) = hit {
                for si in tvals(ta, s, xa[2], at(s)[2]) {
                    let v = at(si);
                    traj.push(v[2], [0.0, v[0], v[1]], Mode::Sliding);
                }
                let mut v = at(s);
                if i == 2 {
                    v[2] = t_end;
                }
                traj.push(v[2], [0.0, v[0], v[1]], Mode::Sliding);
                return Ok(match i {
                    0 => SlideEnd::Exit(Side::Plus),
                    1 => SlideEnd::Exit(Side::Minus),
                    _ => SlideEnd::Span,
                });
            }
            for si in tvals(ta, tb, xa[2], xb[2]) {
                let v = at(si);
                traj.push(v[2], [0.0, v[0], v[1]], Mode::Sliding);
            }
            traj.push(xb[2], [0.0, xb[0], xb[1]], Mode::Sliding);
            let r = xb[0].hypot(xb[1]);
            if r < o.fold_radius && r < xa[0].hypot(xa[1]) {
                break xb;
            }
            if xb[1].abs() < o.fold_radius && xb[0].abs() > 10.0 * o.fold_radius {
                return Err(Error::SingularAtFold);
            }
            if tb >= tau_cap {
                return Err(Error::NoConvergence(
                    "sliding orbit stalled in rescaled time".into(),
                ));
            }
        };
        // Carry the orbit through y = z = 0 along its current ray.
        fold_passes += 1;
        if fold_passes > 4 {
            return Err(Error::Degenerate("repeated passage through the two-fold point".into()));
        }
        let [ya, za, ta] = restart;
        let t_fold = ta - ya;
        let t_out = ta - 2.0 * ya;
        if dir * (t_end - t_fold) <= 0.0 {
            // span ends before the fold is reached; finish on the ray
            let s = (t_end - ta) / (t_fold - ta);
            traj.push(t_end, [0.0, ya * (1.0 - s), za * (1.0 - s)], Mode::Sliding);
            return Ok(SlideEnd::Span);
        }
        traj.push(t_fold, [0.0, 0.0, 0.0], Mode::Sliding);
        traj.event(t_fold, EventKind::SingularFold, [0.0, 0.0, 0.0], None);
        if dir * (t_end - t_out) <= 0.0 {
            let s = (t_end - t_fold) / (t_out - t_fold);
            traj.push(t_end, [0.0, -ya * s, -za * s], Mode::Sliding);
            return Ok(SlideEnd::Span);
        }
        x = [-ya, -za, t_out];
        traj.push(t_out, [0.0, x[0], x[1]], Mode::Sliding);
    }
}

/// Integrate the sliding flow from the manifold point `(y0, z0)`.
///
/// Runs forward or backward depending on the sign of `t_end - t0` and stops
/// at `t_end` or where the orbit reaches the boundary of the sliding region,
/// recording `SlideExitTangency` with the side whose field is tangent there.
/// Repelling sliding regions are followed along the manifold flow.
pub fn slide<S: PiecewiseSmoothSystem + ?Sized>(
    sys: &S,
    y0: f64,
    z0: f64,
    t0: f64,
    t_end: f64,
    opts: &FilippovOptions,
) -> Result<Trajectory> {
    let mut traj = Trajectory::default();
    match slide_segment(sys, y0, z0, t0, t_end, opts, &mut traj, 0)? {
        SlideEnd::Span => {
            let s = *traj.samples.last().unwrap();
            traj.event(s.t, EventKind::Terminate, s.state, None);
        }
        SlideEnd::Exit(side) => {
            let s = *traj.samples.last().unwrap();
            traj.event(s.t, EventKind::SlideExitTangency, s.state, Some(side));
        }
    }
    Ok(traj)
}

/// What happens at a manifold point reached from `from`.
fn arrival<S: PiecewiseSmoothSystem + ?Sized>(sys: &S, y: f64, z: f64, from: Side) -> Result<Option<EventKind>> {
    if y == 0.0 && z == 0.0 {
        return Ok(None);
    }
    let other = from.flip();
    let ho = other.sign() * sys.normal_derivative(y, z, other);
    let tol = h_tol(sys, y, z);
    if ho > tol {
        return Ok(Some(EventKind::Cross));
    }
    if ho < -tol {
        return Ok(Some(EventKind::SlideEntry));
    }
    let c = other.sign() * sys.tangency_curvature(y, z, other);
    if c == 0.0 {
        return Err(Error::Degenerate(format!(
            "zero tangency curvature at ({y}, {z})"
        )));
    }
    Ok(Some(if c > 0.0 { EventKind::Cross } else { EventKind::SlideEntry }))
}

/// Side entered from a manifold point at the start of an integration.
fn departure<S: PiecewiseSmoothSystem + ?Sized>(sys: &S, y: f64, z: f64) -> Result<Option<Side>> {
    let tol = h_tol(sys, y, z);
    let hp = sys.normal_derivative(y, z, Side::Plus);
    let hm = sys.normal_derivative(y, z, Side::Minus);
    match (hp > tol, hm < -tol, hp < -tol, hm > tol) {
        (true, false, _, _) => Ok(Some(Side::Plus)),
        (false, true, _, _) => Ok(Some(Side::Minus)),
        (true, true, _, _) => Err(Error::RepellingEntry { y, z }),
        (false, false, true, true) => Ok(None),
        _ => {
            // tangency of one side: leave into it when visible
            for s in [Side::Plus, Side::Minus] {
                let h = sys.normal_derivative(y, z, s);
                if h.abs() <= tol && s.sign() * sys.tangency_curvature(y, z, s) > 0.0 {
                    return Ok(Some(s));
                }
            }
            Ok(None)
        }
    }
}

/// Integrate the piecewise-smooth system forward from `s0` over `[t0, t1]`.
pub fn integrate<S: PiecewiseSmoothSystem + ?Sized>(
    sys: &S,
    s0: [f64; 3],
    t0: f64,
    t1: f64,
    opts: &FilippovOptions,
) -> Result<Trajectory> {
    if !s0.iter().all(|v| v.is_finite()) {
        return Err(Error::Domain("initial state is not finite".into()));
    }
    if !(opts.tol > 0.0) || !(t1 > t0) {
        return Err(Error::Domain("need tol > 0 and t1 > t0".into()));
    }
    let mut traj = Trajectory::default();
    let mut t = t0;
    let mut x = s0;
    let mut mode = match Side::of(s0[0]) {
        Some(s) => Some(s),
        None => departure(sys, s0[1], s0[2])?,
    };
    loop {
        if traj.events.len() > opts.max_events {
            return Err(Error::NoConvergence(format!(
                "more than {} events",
                opts.max_events
            )));
        }
        match mode {
            Some(side) => match run_side(sys, side, t, x, t1, opts, &mut traj)? {
                SideEnd::Span => break,
                SideEnd::Hit(xh, th) => {
                    traj.push(th, xh, Mode::of_side(side));
                    match arrival(sys, xh[1], xh[2], side)? {
                        None => {
                            traj.event(th, EventKind::Terminate, xh, None);
                            return Ok(traj);
                        }
                        Some(EventKind::Cross) => {
                            traj.event(th, EventKind::Cross, xh, Some(side.flip()));
                            mode = Some(side.flip());
                        }
                        Some(kind) => {
                            traj.event(th, kind, xh, None);
                            mode = None;
                        }
                    }
                    t = th;
                    x = xh;
                }
            },
            None => {
                let c = sys.classify(x[1], x[2]);
                if c == SwitchPointClass::RepellingSliding && traj.events.is_empty() {
                    return Err(Error::RepellingEntry { y: x[1], z: x[2] });
                }
                if c == SwitchPointClass::TwoFold {
                    traj.push(t, x, Mode::Sliding);
                    traj.event(t, EventKind::Terminate, x, None);
                    return Ok(traj);
                }
                let end = slide_segment(sys, x[1], x[2], t, t1, opts, &mut traj, 0)?;
                let last = *traj.samples.last().unwrap();
                match end {
                    SlideEnd::Span => break,
                    SlideEnd::Exit(side) => {
                        traj.event(last.t, EventKind::SlideExitTangency, last.state, Some(side));
                        t = last.t;
                        x = last.state;
                        mode = Some(side);
                        if t >= t1 {
                            break;
                        }
                    }
                }
            }
        }
    }
    let last = *traj.samples.last().unwrap();
    traj.event(last.t, EventKind::Terminate, last.state, None);
    Ok(traj)
}

/// Distance from `p` to the segment `[a, b]`.
fn point_segment<const N: usize>(p: &[f64; N], a: &[f64; N], b: &[f64; N]) -> f64 {
    let mut ab2 = 0.0;
    let mut ap_ab = 0.0;
    for i in 0..N {
        let ab = b[i] - a[i];
        ab2 += ab * ab;
        ap_ab += (p[i] - a[i]) * ab;
    }
    let s = if ab2 > 0.0 { (ap_ab / ab2).clamp(0.0, 1.0) } else { 0.0 };
    let mut d2 = 0.0;
    for i in 0..N {
        let q = a[i] + s * (b[i] - a[i]) - p[i];
        d2 += q * q;
    }
    d2.sqrt()
}

fn directed<const N: usize>(from: &[[f64; N]], to: &[[f64; N]]) -> f64 {
    if to.len() == 1 {
        return from
            .iter()
            .map(|p| point_segment(p, &to[0], &to[0]))
            .fold(0.0, f64::max);
    }
    from.iter()
        .map(|p| {
            to.windows(2)
                .map(|w| point_segment(p, &w[0], &w[1]))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between two polylines (vertices joined by segments).
pub fn hausdorff_distance<const N: usize>(a: &[[f64; N]], b: &[[f64; N]]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    directed(a, b).max(directed(b, a))
}
