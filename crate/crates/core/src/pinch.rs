//! Microscope and pinch coordinates, the pinched vector fields and the
//! geometry of their switching manifold.
//!
//! All three pinch levels use the state `(A, y, z)` where `A` is the pinched
//! fast variable (`U`, `V` or `W`) and the switching manifold is `A = 0`.
//! Writing `P = (mu/2) y - (mu+1) z` and `sigma = +-1` for the side:
//!
//! | level  | `A'`                                              | `z'`                                  |
//! |--------|---------------------------------------------------|---------------------------------------|
//! | Sans   | `(P + 2 z sigma) / eps`                           | `U + sigma`                           |
//! | First  | `(V+sigma) [2z + P (V+sigma)^(-1/[eps])]`         | `(V+sigma)^(1/[eps])`                 |
//! | Second | `(W+sigma) [2z + mu y/(2 eps) (W+sigma)^(-1/[eps])]` | `eps (W+sigma)^(1/[eps]) + (1+mu)/2` |
//!
//! and `y' = 1` throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{eval_slow_projected, slow_drive, FoldedNodeParams};

/// Side of the switching manifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }

    /// Side selected by a nonzero switching coordinate.
    pub fn of(a: f64) -> Option<Side> {
        if a > 0.0 {
            Some(Side::Plus)
        } else if a < 0.0 {
            Some(Side::Minus)
        } else {
            None
        }
    }

    pub fn flip(self) -> Side {
        match self {
            Side::Plus => Side::Minus,
            Side::Minus => Side::Plus,
        }
    }
}

/// `|base|^exponent * sign(base)`, with `0` mapping to `0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedPower {
    pub base: f64,
    pub exponent: f64,
}

impl SignedPower {
    pub fn new(base: f64, exponent: f64) -> Self {
        Self { base, exponent }
    }

    pub fn value(&self) -> f64 {
        signed_pow(self.base, self.exponent)
    }
}

#[inline]
pub fn signed_pow(base: f64, exponent: f64) -> f64 {
    if base == 0.0 {
        0.0
    } else {
        base.abs().powf(exponent).copysign(base)
    }
}

/// `v = u^[eps]`.
pub fn microscope_u(u: f64, eps: f64) -> f64 {
    signed_pow(u, eps)
}

/// `u = v^[1/eps]`.
pub fn microscope_u_inv(v: f64, eps: f64) -> f64 {
    signed_pow(v, 1.0 / eps)
}

/// `w = (u/eps - (1+mu)/(2 eps))^[eps]`, centred on the plane `u = (1+mu)/2`.
pub fn microscope_w(u: f64, p: &FoldedNodeParams) -> f64 {
    let eps = p.eps();
    signed_pow((u - p.p0_level()) / eps, eps)
}

pub fn microscope_w_inv(w: f64, p: &FoldedNodeParams) -> f64 {
    let eps = p.eps();
    eps * signed_pow(w, 1.0 / eps) + p.p0_level()
}

/// `A = a - sign(a)` for `|a| >= 1`.
pub fn pinch_map(a: f64) -> Result<f64> {
    if !(a.abs() >= 1.0) {
        return Err(Error::InsidePinchRegion { value: a });
    }
    Ok(a - a.signum())
}

/// Inverse of [`pinch_map`] on the given side: `a = A + sigma`.
pub fn unpinch(big_a: f64, side: Side) -> f64 {
    big_a + side.sign()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PinchLevel {
    /// Pinch of the original fast variable, `U = u - sign u`.
    Sans,
    /// Pinch after the microscope `v = u^[eps]`, `V = v - sign v`.
    First,
    /// Pinch about the plane `u = (1+mu)/2`, `W = w - sign w`.
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SwitchPointClass {
    Crossing,
    AttractingSliding,
    RepellingSliding,
    /// The `A > 0` field is tangent to the manifold.
    TangencyUpper,
    /// The `A < 0` field is tangent to the manifold.
    TangencyLower,
    /// Both fields tangent at `y = z = 0`.
    TwoFold,
}

impl SwitchPointClass {
    pub fn is_sliding(self) -> bool {
        matches!(
            self,
            SwitchPointClass::AttractingSliding | SwitchPointClass::RepellingSliding
        )
    }
}

fn resolve_side(a: f64, side: Option<Side>) -> Result<Side> {
    match (Side::of(a), side) {
        (None, None) => Err(Error::UndefinedSide),
        (None, Some(s)) => Ok(s),
        (Some(s), None) => Ok(s),
        (Some(s), Some(r)) if s == r => Ok(s),
        (Some(_), Some(r)) => Err(Error::SideMismatch {
            requested: r,
            value: a,
        }),
    }
}

/// Smooth field of one side; `side` is required on the manifold `A = 0` and
/// must agree with `sign(A)` elsewhere.
pub fn eval_pinched(
    level: PinchLevel,
    p: &FoldedNodeParams,
    state: [f64; 3],
    side: Option<Side>,
) -> Result<[f64; 3]> {
    let s = resolve_side(state[0], side)?;
    Ok(eval_side(level, p, state, s))
}

/// Field of side `s` evaluated without any consistency check; used by the
/// integrator to extend a side field a little past the manifold.
pub fn eval_side(level: PinchLevel, p: &FoldedNodeParams, state: [f64; 3], s: Side) -> [f64; 3] {
    let (mu, eps) = (p.mu(), p.eps());
    let [a, y, z] = state;
    let sg = s.sign();
    let drive = slow_drive(mu, y, z);
    match level {
        PinchLevel::Sans => [(drive + 2.0 * z * sg) / eps, 1.0, a + sg],
        PinchLevel::First => {
            let v = a + sg;
            [
                v * (2.0 * z + drive * signed_pow(v, -1.0 / eps)),
                1.0,
                signed_pow(v, 1.0 / eps),
            ]
        }
        PinchLevel::Second => {
            let w = a + sg;
            [
                w * (2.0 * z + mu * y / (2.0 * eps) * signed_pow(w, -1.0 / eps)),
                1.0,
                eps * signed_pow(w, 1.0 / eps) + p.p0_level(),
            ]
        }
    }
}

/// Rate of change of the switching coordinate for the field of side `s`,
/// evaluated on the manifold.
pub fn switching_derivative(level: PinchLevel, p: &FoldedNodeParams, y: f64, z: f64, s: Side) -> f64 {
    eval_side(level, p, [0.0, y, z], s)[0]
}

/// Classify from the two one-sided normal derivatives `h_plus`, `h_minus`.
/// `tol` is an absolute threshold below which a derivative counts as zero.
pub fn classify_from_derivatives(h_plus: f64, h_minus: f64, tol: f64) -> SwitchPointClass {
    let zp = h_plus.abs() <= tol;
    let zm = h_minus.abs() <= tol;
    match (zp, zm) {
        (true, true) => SwitchPointClass::TwoFold,
        (true, false) => SwitchPointClass::TangencyUpper,
        (false, true) => SwitchPointClass::TangencyLower,
        _ if h_plus * h_minus > 0.0 => SwitchPointClass::Crossing,
        _ if h_plus < 0.0 => SwitchPointClass::AttractingSliding,
        _ => SwitchPointClass::RepellingSliding,
    }
}

/// Class of the manifold point `(y, z)`.
///
/// At the Sans and First levels this reduces to comparing `4 z^2` with
/// `P^2`; at the Second level the sliding region is `|z/y| > mu/(4 eps)`.
pub fn classify_switch_point(level: PinchLevel, p: &FoldedNodeParams, y: f64, z: f64) -> SwitchPointClass {
    if y == 0.0 && z == 0.0 {
        return SwitchPointClass::TwoFold;
    }
    let hp = switching_derivative(level, p, y, z, Side::Plus);
    let hm = switching_derivative(level, p, y, z, Side::Minus);
    let scale = hp.abs().max(hm.abs());
    classify_from_derivatives(hp, hm, 1e-13 * scale)
}

/// Sliding flow on the manifold; all three levels share the projected slow flow.
pub fn sliding_vector_field(
    _level: PinchLevel,
    p: &FoldedNodeParams,
    y: f64,
    z: f64,
) -> Result<(f64, f64)> {
    eval_slow_projected(p, y, z)
}

/// Second time derivative of the switching coordinate along the tangency
/// line of `side`.
///
/// A positive value on the `Plus` side (negative on `Minus`) means the orbit
/// curves away from the manifold. The Sans value is returned as `eps * U''`,
/// and the First level shares it because its field on `V = 0` coincides with
/// `eps` times the Sans field.
pub fn tangency_curvature(level: PinchLevel, p: &FoldedNodeParams, side: Side) -> f64 {
    let (mu, eps) = (p.mu(), p.eps());
    match (level, side) {
        (PinchLevel::Sans | PinchLevel::First, Side::Plus) => 1.0 - mu / 2.0,
        (PinchLevel::Sans | PinchLevel::First, Side::Minus) => 3.0 * (mu / 2.0 + 1.0),
        (PinchLevel::Second, Side::Plus) => (1.0 + 2.0 * eps) * (mu + 2.0 * eps) / (2.0 * eps),
        (PinchLevel::Second, Side::Minus) => (1.0 - 2.0 * eps) * (mu - 2.0 * eps) / (2.0 * eps),
    }
}

/// Whether the tangency of `side` is visible, i.e. the orbit through it
/// curves away from the manifold.
pub fn tangency_visible(level: PinchLevel, p: &FoldedNodeParams, side: Side) -> bool {
    side.sign() * tangency_curvature(level, p, side) > 0.0
}

/// Slope `z/y` of the tangency line of `side`.
pub fn tangency_slope(level: PinchLevel, p: &FoldedNodeParams, side: Side) -> f64 {
    let (mu, eps) = (p.mu(), p.eps());
    let sg = side.sign();
    match level {
        // (mu/2) y - (mu+1) z + 2 sigma z = 0
        PinchLevel::Sans | PinchLevel::First => (mu / 2.0) / (mu + 1.0 - 2.0 * sg),
        // 2 sigma z + mu y/(2 eps) = 0
        PinchLevel::Second => -sg * mu / (4.0 * eps),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MicroscopeLevel {
    /// `v = u^[eps]`.
    Zoom1,
    /// `w = (u/eps - (1+mu)/(2 eps))^[eps]`.
    Zoom2,
}

/// Field in microscope coordinates `(v, y, z)` or `(w, y, z)`.
pub fn eval_microscope_system(level: MicroscopeLevel, p: &FoldedNodeParams, state: [f64; 3]) -> Result<[f64; 3]> {
    let (mu, eps) = (p.mu(), p.eps());
    let [v, y, z] = state;
    if v == 0.0 {
        return Err(Error::Degenerate(format!(
            "microscope field is singular at {:?} coordinate 0",
            level
        )));
    }
    let inv = signed_pow(v, -1.0 / eps);
    Ok(match level {
        MicroscopeLevel::Zoom1 => [
            v * (2.0 * z + slow_drive(mu, y, z) * inv),
            1.0,
            signed_pow(v, 1.0 / eps),
        ],
        MicroscopeLevel::Zoom2 => [
            v * (2.0 * z + mu * y / (2.0 * eps) * inv),
            1.0,
            eps * signed_pow(v, 1.0 / eps) + p.p0_level(),
        ],
    })
}

/// The nullcline `w' = 0` of the second microscope: `w = -(mu y / (4 z eps))^[eps]`.
pub fn zoom2_nullcline(p: &FoldedNodeParams, y: f64, z: f64) -> Result<f64> {
    if z == 0.0 {
        return Err(Error::SingularAtFold);
    }
    let eps = p.eps();
    Ok(-signed_pow(p.mu() * y / (4.0 * z * eps), eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{eval_straight, StateUYZ};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn paper_params() -> FoldedNodeParams {
        FoldedNodeParams::new(1.0 / 8.5, 0.05).unwrap()
    }

    #[test]
    fn microscope_examples() {
        assert_eq!(microscope_u(1.0, 0.3), 1.0);
        assert_eq!(microscope_u(0.0, 0.3), 0.0);
        assert_relative_eq!(microscope_u(-0.5, 0.05), -0.965_936_328_924_846, max_relative = 1e-14);
        let p = paper_params();
        assert_eq!(microscope_w(p.p0_level(), &p), 0.0);
        assert_relative_eq!(microscope_w(p.p0_level() + p.eps(), &p), 1.0, max_relative = 1e-14);
        assert_relative_eq!(microscope_w(p.mu() / 2.0, &p), -1.122_018_454_301_963_3, max_relative = 1e-13);
    }

    #[test]
    fn pinch_map_examples() {
        assert_eq!(pinch_map(1.0).unwrap(), 0.0);
        assert_eq!(pinch_map(-1.0).unwrap(), 0.0);
        assert_eq!(pinch_map(2.5).unwrap(), 1.5);
        assert!(matches!(pinch_map(0.5), Err(Error::InsidePinchRegion { .. })));
        assert!(pinch_map(f64::NAN).is_err());
    }

    #[test]
    fn eval_pinched_examples() {
        let p = paper_params();
        let f = eval_pinched(PinchLevel::Sans, &p, [0.0, 0.0, 1.0], Some(Side::Plus)).unwrap();
        assert_relative_eq!(f[0], (1.0 - p.mu()) / p.eps(), max_relative = 1e-14);
        assert_relative_eq!(f[0], 17.647_058_823_529_41, max_relative = 1e-12);
        assert_eq!(f[1], 1.0);
        assert_eq!(f[2], 1.0);
        for s in [Side::Plus, Side::Minus] {
            let f1 = eval_pinched(PinchLevel::First, &p, [0.0, 0.7, -0.3], Some(s)).unwrap();
            let f0 = eval_pinched(PinchLevel::Sans, &p, [0.0, 0.7, -0.3], Some(s)).unwrap();
            assert_eq!(f1[2], s.sign());
            assert_relative_eq!(f1[0], p.eps() * f0[0], max_relative = 1e-13);
        }
        let z = -p.mu() / (4.0 * p.eps());
        let f2 = eval_pinched(PinchLevel::Second, &p, [0.0, 1.0, z], Some(Side::Plus)).unwrap();
        assert!(f2[0].abs() < 1e-14);
    }

    #[test]
    fn side_errors() {
        let p = paper_params();
        assert_eq!(
            eval_pinched(PinchLevel::Sans, &p, [0.0, 1.0, 1.0], None),
            Err(Error::UndefinedSide)
        );
        assert!(matches!(
            eval_pinched(PinchLevel::Sans, &p, [0.2, 1.0, 1.0], Some(Side::Minus)),
            Err(Error::SideMismatch { .. })
        ));
    }

    #[test]
    fn classification_examples() {
        let p = paper_params();
        assert_eq!(classify_switch_point(PinchLevel::Sans, &p, 0.0, -1.0), SwitchPointClass::AttractingSliding);
        assert_eq!(classify_switch_point(PinchLevel::Sans, &p, 0.0, 1.0), SwitchPointClass::RepellingSliding);
        assert_eq!(classify_switch_point(PinchLevel::Sans, &p, 1.0, 0.0), SwitchPointClass::Crossing);
        assert_eq!(classify_switch_point(PinchLevel::Sans, &p, 0.0, 0.0), SwitchPointClass::TwoFold);
        let q = FoldedNodeParams::new(0.25, 0.05).unwrap();
        let c = classify_switch_point(PinchLevel::Second, &q, 1.0, 0.5);
        assert!(!c.is_sliding());
        let r = FoldedNodeParams::new(1.0 / 16.0, 0.05).unwrap();
        assert!(classify_switch_point(PinchLevel::Second, &r, 1.0, 0.5).is_sliding());
        assert!(classify_switch_point(PinchLevel::Second, &r, -1.0, -0.5).is_sliding());
    }

    #[test]
    fn tangency_lines_are_labelled() {
        let p = paper_params();
        for level in [PinchLevel::Sans, PinchLevel::First, PinchLevel::Second] {
            for (side, tag) in [
                (Side::Plus, SwitchPointClass::TangencyUpper),
                (Side::Minus, SwitchPointClass::TangencyLower),
            ] {
                let m = tangency_slope(level, &p, side);
                for y in [-3.0, -0.4, 0.9, 2.0] {
                    let h = switching_derivative(level, &p, y, m * y, side);
                    assert!(h.abs() < 1e-12 * (1.0 + y.abs() / p.eps()), "{level:?} {side:?}");
                    assert_eq!(classify_switch_point(level, &p, y, m * y), tag, "{level:?} {side:?} y={y}");
                }
            }
        }
    }

    #[test]
    fn curvature_examples() {
        let p = paper_params();
        assert_relative_eq!(tangency_curvature(PinchLevel::Sans, &p, Side::Plus), 1.0 - 1.0 / 17.0, max_relative = 1e-14);
        assert_relative_eq!(
            tangency_curvature(PinchLevel::Second, &p, Side::Minus),
            0.9 * (p.mu() - 0.1) / 0.1,
            max_relative = 1e-14
        );
        assert_relative_eq!(tangency_curvature(PinchLevel::Second, &p, Side::Minus), 0.158_823_529_411_764_7, max_relative = 1e-12);
        let q = FoldedNodeParams::new(1.0 / 16.0, 0.05).unwrap();
        assert!(tangency_curvature(PinchLevel::Second, &q, Side::Minus) < 0.0);
        assert!(tangency_visible(PinchLevel::Second, &q, Side::Minus));
        assert!(!tangency_visible(PinchLevel::Second, &p, Side::Minus));
    }

    #[test]
    fn curvature_matches_flow_derivative() {
        // d/dt of A' along the side field, evaluated on the tangency line
        let p = paper_params();
        for level in [PinchLevel::Sans, PinchLevel::Second] {
            for side in [Side::Plus, Side::Minus] {
                let m = tangency_slope(level, &p, side);
                let (y, z) = (0.8, 0.8 * m);
                let f = eval_side(level, &p, [0.0, y, z], side);
                let h = 1e-6;
                let d = |dy: f64, dz: f64| switching_derivative(level, &p, y + dy, z + dz, side);
                let num = (d(h * f[1], h * f[2]) - d(-h * f[1], -h * f[2])) / (2.0 * h);
                let scale = if level == PinchLevel::Sans { p.eps() } else { 1.0 };
                assert_relative_eq!(num * scale, tangency_curvature(level, &p, side), max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn nullcline_of_second_microscope() {
        let p = paper_params();
        let (y, z) = (0.7, -0.9);
        let w = zoom2_nullcline(&p, y, z).unwrap();
        let f = eval_microscope_system(MicroscopeLevel::Zoom2, &p, [w, y, z]).unwrap();
        assert!(f[0].abs() < 1e-12);
    }

    #[test]
    fn zoom1_examples() {
        let p = paper_params();
        let f = eval_microscope_system(MicroscopeLevel::Zoom1, &p, [1.0, 0.0, 1.0]).unwrap();
        assert_relative_eq!(f[0], 1.0 - p.mu(), max_relative = 1e-14);
        assert_eq!(f[2], 1.0);
        assert!(eval_microscope_system(MicroscopeLevel::Zoom1, &p, [0.0, 0.0, 1.0]).is_err());
        // strong canard: u = 1/2, z = y/2 is invariant
        let y = 1.3;
        let v = microscope_u(0.5, p.eps());
        let f = eval_microscope_system(MicroscopeLevel::Zoom1, &p, [v, y, y / 2.0]).unwrap();
        assert!(f[0].abs() < 1e-12);
    }

    #[test]
    fn weak_direction_outside_second_sliding_region() {
        for eps in [0.01, 0.1, 0.3, 0.49] {
            for mu in [0.05, 0.3, 0.9] {
                let p = FoldedNodeParams::new(mu, eps).unwrap();
                assert!(!classify_switch_point(PinchLevel::Second, &p, 1.0, mu / 2.0).is_sliding());
            }
        }
    }

    fn pushforward(level: MicroscopeLevel, p: &FoldedNodeParams, u: f64, y: f64, z: f64) -> [f64; 3] {
        let eps = p.eps();
        let f = eval_straight(p, &StateUYZ::new(u, y, z));
        let (arg, darg) = match level {
            MicroscopeLevel::Zoom1 => (u, f[0]),
            MicroscopeLevel::Zoom2 => ((u - p.p0_level()) / eps, f[0] / eps),
        };
        [eps * arg.abs().powf(eps - 1.0) * darg, f[1], f[2]]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn microscope_consistency(
            mu in 0.02f64..0.98, eps in 0.01f64..0.49,
            u in -3.0f64..3.0, y in -5.0f64..5.0, z in -5.0f64..5.0,
        ) {
            let p = FoldedNodeParams::new(mu, eps).unwrap();
            prop_assume!(u.abs() > 1e-3 && (u - p.p0_level()).abs() > 1e-3);
            for (level, v) in [
                (MicroscopeLevel::Zoom1, microscope_u(u, eps)),
                (MicroscopeLevel::Zoom2, microscope_w(u, &p)),
            ] {
                let g = eval_microscope_system(level, &p, [v, y, z]).unwrap();
                let h = pushforward(level, &p, u, y, z);
                for i in 0..3 {
                    let tol = 1e-8 * (h[i].abs() + g[i].abs()).max(1e-12);
                    prop_assert!((g[i] - h[i]).abs() <= tol, "{:?} comp {}: {} vs {}", level, i, g[i], h[i]);
                }
            }
        }

        #[test]
        fn microscope_round_trip(u in -10.0f64..10.0, eps in 0.01f64..0.49, mu in 0.02f64..0.98) {
            prop_assume!(u != 0.0);
            let v = microscope_u(u, eps);
            prop_assert!((microscope_u_inv(v, eps) - u).abs() <= 1e-10 * u.abs().max(1.0));
            let p = FoldedNodeParams::new(mu, eps).unwrap();
            let w = microscope_w(u, &p);
            prop_assert!((microscope_w_inv(w, &p) - u).abs() <= 1e-10 * u.abs().max(1.0));
        }

        #[test]
        fn signed_power_identity_and_oddness(b in -100.0f64..100.0, e in 0.01f64..5.0) {
            prop_assert_eq!(SignedPower::new(b, 1.0).value(), b);
            prop_assert_eq!(signed_pow(-b, e), -signed_pow(b, e));
        }

        #[test]
        fn pinch_boundary_continuity(y in -5.0f64..5.0, z in -5.0f64..5.0, mu in 0.02f64..0.98, eps in 0.01f64..0.49) {
            let p = FoldedNodeParams::new(mu, eps).unwrap();
            for s in [Side::Plus, Side::Minus] {
                let a = s.sign();
                let sans = eval_pinched(PinchLevel::Sans, &p, [0.0, y, z], Some(s)).unwrap();
                let orig = eval_straight(&p, &StateUYZ::new(a, y, z));
                prop_assert!((sans[0] - orig[0]).abs() <= 1e-12 * orig[0].abs().max(1.0));
                prop_assert_eq!(sans[2], orig[2]);
                let first = eval_pinched(PinchLevel::First, &p, [0.0, y, z], Some(s)).unwrap();
                let z1 = eval_microscope_system(MicroscopeLevel::Zoom1, &p, [a, y, z]).unwrap();
                prop_assert_eq!(first, z1);
                let second = eval_pinched(PinchLevel::Second, &p, [0.0, y, z], Some(s)).unwrap();
                let z2 = eval_microscope_system(MicroscopeLevel::Zoom2, &p, [a, y, z]).unwrap();
                prop_assert_eq!(second, z2);
            }
        }

        #[test]
        fn sans_classification_matches_inequality(y in -5.0f64..5.0, z in -5.0f64..5.0) {
            let p = paper_params();
            let pp = slow_drive(p.mu(), y, z);
            let c = classify_switch_point(PinchLevel::Sans, &p, y, z);
            let gap = 4.0 * z * z - pp * pp;
            prop_assume!(gap.abs() > 1e-9);
            if gap < 0.0 {
                prop_assert_eq!(c, SwitchPointClass::Crossing);
            } else if z < 0.0 {
                prop_assert_eq!(c, SwitchPointClass::AttractingSliding);
            } else {
                prop_assert_eq!(c, SwitchPointClass::RepellingSliding);
            }
        }

        #[test]
        fn second_classification_matches_inequality(y in -5.0f64..5.0, z in -5.0f64..5.0) {
            let p = paper_params();
            prop_assume!(y.abs() > 1e-6);
            let c = classify_switch_point(PinchLevel::Second, &p, y, z);
            let r = (z / y).abs() - p.mu() / (4.0 * p.eps());
            prop_assume!(r.abs() > 1e-9);
            prop_assert_eq!(c.is_sliding(), r > 0.0);
            if c.is_sliding() {
                prop_assert_eq!(c == SwitchPointClass::AttractingSliding, z < 0.0);
            }
        }

        #[test]
        fn sliding_field_is_filippov_combination(y in -5.0f64..5.0, z in -5.0f64..5.0, lvl in 0usize..3) {
            let level = [PinchLevel::Sans, PinchLevel::First, PinchLevel::Second][lvl];
            let p = paper_params();
            prop_assume!(z.abs() > 1e-3);
            let c = classify_switch_point(level, &p, y, z);
            prop_assume!(c.is_sliding());
            let fp = eval_side(level, &p, [0.0, y, z], Side::Plus);
            let fm = eval_side(level, &p, [0.0, y, z], Side::Minus);
            let lam = fm[0] / (fm[0] - fp[0]);
            let (dy, dz) = sliding_vector_field(level, &p, y, z).unwrap();
            // Filippov combination, rescaled so that y' matches the slow flow
            let fy = lam * fp[1] + (1.0 - lam) * fm[1];
            let fz = lam * fp[2] + (1.0 - lam) * fm[2];
            let scale = dy / fy;
            prop_assert!((fz * scale - dz).abs() <= 1e-9 * dz.abs().max(1.0));
        }
    }
}
