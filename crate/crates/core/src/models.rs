//! Canonical folded-node system in the `(u, y, z)` chart.
//!
//! With `u = h/eps` measuring distance from the critical manifold `x + z^2 = 0`,
//! the leading-order folded node reads
//!
//! ```text
//! eps du/dt = (mu/2) y - (1 + mu) z + 2 z u
//!     dy/dt = 1
//!     dz/dt = u
//! ```
//!
//! Everything downstream (pinches, sliding, regularization) acts on `u`, so this
//! chart is used throughout; `x = eps u - z^2` is only reconstructed for output.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Eigenvalue ratio `mu` and timescale separation `eps` of a folded node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldedNodeParams {
    mu: f64,
    eps: f64,
}

impl FoldedNodeParams {
    /// Validates `0 < mu < 1` and `0 < eps < 1/2`.
    pub fn new(mu: f64, eps: f64) -> Result<Self> {
        if !(mu.is_finite() && mu > 0.0 && mu < 1.0) {
            return Err(Error::InvalidParams(format!(
                "mu = {mu} must satisfy 0 < mu < 1 (folded node with P_0 inside the eps-layer)"
            )));
        }
        if !(eps.is_finite() && eps > 0.0 && eps < 0.5) {
            return Err(Error::InvalidParams(format!(
                "eps = {eps} must satisfy 0 < eps < 1/2"
            )));
        }
        Ok(Self { mu, eps })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Level `(mu + 1)/2` of the surface `P_0` approximating the `du/dt = 0` nullcline.
    pub fn p0_level(&self) -> f64 {
        0.5 * (self.mu + 1.0)
    }
}

/// A point of the `(u, y, z)` chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateUYZ {
    pub u: f64,
    pub y: f64,
    pub z: f64,
}

impl StateUYZ {
    pub fn new(u: f64, y: f64, z: f64) -> Self {
        Self { u, y, z }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.u, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// `(mu/2) y - (1 + mu) z`, the part of `eps du/dt` that does not depend on `u`.
#[inline]
pub(crate) fn slow_drive(mu: f64, y: f64, z: f64) -> f64 {
    0.5 * mu * y - (1.0 + mu) * z
}

/// Right-hand side of the straightened folded node; `du` is already divided by `eps`.
pub fn eval_straight(p: &FoldedNodeParams, s: &StateUYZ) -> [f64; 3] {
    let du = (slow_drive(p.mu, s.y, s.z) + 2.0 * s.z * s.u) / p.eps;
    [du, 1.0, s.u]
}

/// Slow flow projected onto the critical manifold,
/// `(dy, dz) = -1/(2z) [[0, -2], [mu/2, -(mu+1)]] (y, z)`.
pub fn eval_slow_projected(p: &FoldedNodeParams, y: f64, z: f64) -> Result<(f64, f64)> {
    if z == 0.0 {
        return Err(Error::SingularAtFold);
    }
    let (dy, dz) = linear_slow_part(p.mu, y, z);
    let scale = -0.5 / z;
    Ok((scale * dy, scale * dz))
}

fn linear_slow_part(mu: f64, y: f64, z: f64) -> (f64, f64) {
    (-2.0 * z, slow_drive(mu, y, z))
}

/// Time direction of the desingularized flow relative to the projected one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    /// `z < 0`: desingularized time runs with physical time.
    Preserved,
    /// `z > 0`: desingularized time runs against physical time.
    Reversed,
    /// `z = 0`: the rescaling degenerates.
    Degenerate,
}

/// Projected flow multiplied by `-2z`, i.e. the linear system
/// `[[0, -2], [mu/2, -(mu+1)]] (y, z)`, with the orientation `sign(-2z)` of the rescaling.
pub fn eval_slow_desingularized(p: &FoldedNodeParams, y: f64, z: f64) -> ((f64, f64), Orientation) {
    let orientation = if z < 0.0 {
        Orientation::Preserved
    } else if z > 0.0 {
        Orientation::Reversed
    } else {
        Orientation::Degenerate
    };
    (linear_slow_part(p.mu, y, z), orientation)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SingularityTag {
    FoldedNode,
    FoldedSaddle,
    FoldedFocus,
}

/// Folded-singularity type of the desingularized slow flow with coefficients `(b, c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularityClass {
    pub tag: SingularityTag,
    pub lambda1: Complex64,
    pub lambda2: Complex64,
    pub mu: Complex64,
}

/// Classifies the folded singularity of `dx/dt = b y + c z` from the roots of
/// `lambda^2 - c lambda + 2b = 0`, ordered so that `|lambda1| >= |lambda2|`.
pub fn classify_singularity(b: f64, c: f64) -> Result<SingularityClass> {
    let disc = c * c - 8.0 * b;
    let (l1, l2) = if disc >= 0.0 {
        let sq = disc.sqrt();
        // avoid cancellation in the smaller root
        let big = if c >= 0.0 { 0.5 * (c + sq) } else { 0.5 * (c - sq) };
        let small = if big != 0.0 { 2.0 * b / big } else { 0.0 };
        (Complex64::new(big, 0.0), Complex64::new(small, 0.0))
    } else {
        let im = 0.5 * (-disc).sqrt();
        (Complex64::new(0.5 * c, im), Complex64::new(0.5 * c, -im))
    };
    if l1.norm() == 0.0 {
        return Err(Error::Degenerate(
            "both eigenvalues vanish; mu is undefined".into(),
        ));
    }
    let mu = l2 / l1;
    let tag = if disc < 0.0 {
        SingularityTag::FoldedFocus
    } else if mu.re > 0.0 {
        SingularityTag::FoldedNode
    } else if mu.re < 0.0 {
        SingularityTag::FoldedSaddle
    } else {
        return Err(Error::Degenerate(
            "lambda2 = 0: singularity is neither node nor saddle".into(),
        ));
    };
    Ok(SingularityClass {
        tag,
        lambda1: l1,
        lambda2: l2,
        mu,
    })
}

/// Weak primary canard `(mu/2, t, mu t/2)`.
pub fn weak_canard(p: &FoldedNodeParams, t: f64) -> StateUYZ {
    StateUYZ::new(0.5 * p.mu, t, 0.5 * p.mu * t)
}

/// Strong primary canard `(1/2, t, t/2)`.
pub fn strong_canard(t: f64) -> StateUYZ {
    StateUYZ::new(0.5, t, 0.5 * t)
}

/// Both primary canards as parametrized curves.
pub fn primary_canards(
    p: &FoldedNodeParams,
) -> (impl Fn(f64) -> StateUYZ + '_, impl Fn(f64) -> StateUYZ) {
    (move |t| weak_canard(p, t), strong_canard)
}

/// `u` on the nullcline surface `P_y`: `u = (mu+1)/2 - mu y/(4z)`.
pub fn nullcline_u(p: &FoldedNodeParams, y: f64, z: f64) -> Result<f64> {
    if z == 0.0 {
        return Err(Error::SingularAtFold);
    }
    Ok(p.p0_level() - p.mu * y / (4.0 * z))
}

/// Fold and folded-singularity diagnostics for `h = x + z^2` with the folded-node
/// slow fields `g1 = (mu/2) y - (1+mu) z`, `g2 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FoldConditionReport {
    pub h_value: f64,
    pub dh_dz: f64,
    pub grad_xy_nonzero: bool,
    pub d2h_dz2: f64,
    /// `(g1, g2) . (dh/dx, dh/dy)`; vanishes at a folded singularity.
    pub projection_degeneracy: f64,
    pub on_critical_manifold: bool,
    pub on_fold: bool,
    pub folded_singularity: bool,
}

pub fn verify_fold_conditions(mu: f64, x: f64, y: f64, z: f64) -> FoldConditionReport {
    let h_value = x + z * z;
    let dh_dz = 2.0 * z;
    let (dh_dx, dh_dy) = (1.0, 0.0);
    let grad_xy_nonzero = dh_dx != 0.0 || dh_dy != 0.0;
    let d2h_dz2 = 2.0;
    let g1 = slow_drive(mu, y, z);
    let g2 = 1.0;
    let projection_degeneracy = g1 * dh_dx + g2 * dh_dy;
    let on_critical_manifold = h_value == 0.0;
    let on_fold = on_critical_manifold && dh_dz == 0.0 && grad_xy_nonzero && d2h_dz2 != 0.0;
    FoldConditionReport {
        h_value,
        dh_dz,
        grad_xy_nonzero,
        d2h_dz2,
        projection_degeneracy,
        on_critical_manifold,
        on_fold,
        folded_singularity: on_fold && projection_degeneracy == 0.0,
    }
}

/// `x = eps u - z^2`, the coordinate of the original chart.
pub fn x_from_u(p: &FoldedNodeParams, u: f64, z: f64) -> f64 {
    p.eps * u - z * z
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn paper() -> FoldedNodeParams {
        FoldedNodeParams::new(1.0 / 8.5, 0.05).unwrap()
    }

    #[test]
    fn rejects_out_of_range_params() {
        assert!(FoldedNodeParams::new(0.0, 0.05).is_err());
        assert!(FoldedNodeParams::new(1.0, 0.05).is_err());
        assert!(FoldedNodeParams::new(0.3, 0.5).is_err());
        assert!(FoldedNodeParams::new(0.3, 0.0).is_err());
        assert!(FoldedNodeParams::new(f64::NAN, 0.1).is_err());
    }

    #[test]
    fn primary_canards_are_exact() {
        let p = paper();
        for &t in &[-3.0, 0.0, 0.7, 5.0] {
            let w = weak_canard(&p, t);
            let f = eval_straight(&p, &w);
            assert!(f[0].abs() < 1e-14);
            assert_eq!(f[1], 1.0);
            assert_relative_eq!(f[2], p.mu() / 2.0);
            let s = strong_canard(t);
            let f = eval_straight(&p, &s);
            assert!(f[0].abs() < 1e-14);
            assert_eq!(f[2], 0.5);
        }
        let (_, st) = primary_canards(&p);
        assert_eq!(st(2.0), StateUYZ::new(0.5, 2.0, 1.0));
    }

    #[test]
    fn straight_field_hand_value() {
        let p = paper();
        let f = eval_straight(&p, &StateUYZ::new(0.0, 1.0, 0.0));
        assert_relative_eq!(f[0], 1.176470588235294, epsilon = 1e-12);
        assert_eq!(f[1], 1.0);
        assert_eq!(f[2], 0.0);
    }

    #[test]
    fn projected_flow_values() {
        let p = paper();
        let (dy, dz) = eval_slow_projected(&p, 0.0, -1.0).unwrap();
        assert_relative_eq!(dy, 1.0);
        assert_relative_eq!(dz, 0.5588235294117647, epsilon = 1e-14);
        assert_eq!(eval_slow_projected(&p, 1.0, 0.0), Err(Error::SingularAtFold));
        // eigendirections
        let (dy, dz) = eval_slow_projected(&p, 2.0, p.mu()).unwrap();
        assert!((dy * p.mu() / 2.0 - dz).abs() < 1e-14);
        let (dy, dz) = eval_slow_projected(&p, 2.0, 1.0).unwrap();
        assert!((dy * 0.5 - dz).abs() < 1e-14);
    }

    #[test]
    fn desingularized_orientation() {
        let p = paper();
        let ((a, b), o) = eval_slow_desingularized(&p, 0.3, -0.2);
        let (dy, dz) = eval_slow_projected(&p, 0.3, -0.2).unwrap();
        assert_eq!(o, Orientation::Preserved);
        assert_relative_eq!(a, dy * 0.4, epsilon = 1e-15);
        assert_relative_eq!(b, dz * 0.4, epsilon = 1e-15);
        assert_eq!(eval_slow_desingularized(&p, 0.3, 0.2).1, Orientation::Reversed);
        assert_eq!(eval_slow_desingularized(&p, 0.3, 0.0).1, Orientation::Degenerate);
    }

    #[test]
    fn classification_examples() {
        let c = classify_singularity(1.0, 3.0).unwrap();
        assert_eq!(c.tag, SingularityTag::FoldedNode);
        assert_relative_eq!(c.lambda1.re, 2.0);
        assert_relative_eq!(c.lambda2.re, 1.0);
        assert_relative_eq!(c.mu.re, 0.5);

        let c = classify_singularity(-1.0, 1.0).unwrap();
        assert_eq!(c.tag, SingularityTag::FoldedSaddle);
        assert_relative_eq!(c.lambda1.re, 2.0);
        assert_relative_eq!(c.lambda2.re, -1.0);
        assert_relative_eq!(c.mu.re, -0.5);

        let c = classify_singularity(1.0, 1.0).unwrap();
        assert_eq!(c.tag, SingularityTag::FoldedFocus);
        assert_relative_eq!(c.lambda1.norm(), c.lambda2.norm());

        assert!(classify_singularity(0.0, 0.0).is_err());
        assert!(classify_singularity(0.0, 2.0).is_err());
    }

    #[test]
    fn nullcline_levels() {
        let p = paper();
        assert_relative_eq!(nullcline_u(&p, 0.0, 1.0).unwrap(), p.p0_level());
        let far = nullcline_u(&p, 1.0, 1e12).unwrap();
        assert_relative_eq!(far, p.p0_level(), epsilon = 1e-12);
        assert!(nullcline_u(&p, 1.0, 1e-12).unwrap().abs() > 1e9);
        assert!(nullcline_u(&p, 1.0, 0.0).is_err());
        assert!(p.p0_level().abs() < 1.0);
    }

    #[test]
    fn fold_conditions() {
        let mu = 1.0 / 8.5;
        let r = verify_fold_conditions(mu, 0.0, 0.0, 0.0);
        assert!(r.on_critical_manifold && r.on_fold && r.folded_singularity);
        assert_eq!(r.d2h_dz2, 2.0);

        let r = verify_fold_conditions(mu, -1.0, 0.0, 1.0);
        assert!(r.on_critical_manifold);
        assert_eq!(r.dh_dz, 2.0);
        assert!(!r.on_fold);

        let r = verify_fold_conditions(mu, 0.0, 1.0, 0.0);
        assert!(r.on_fold);
        assert!(!r.folded_singularity);
        assert_relative_eq!(r.projection_degeneracy, mu / 2.0);
    }
}
