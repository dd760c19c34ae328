//! The eight acceptance criteria, each reduced to a pass/fail outcome with a
//! one-line summary of the measured values.

use pinchfold::canard::{
    self, count_grazings, eval_linearized, find_grazing_roots, find_secondary_canards, locate_primary_canards_pinched,
    solve_w_minus, AssemblyOptions, CanardSearchOptions, Kernel, LinearizedSide,
};
use pinchfold::continuation::{
    branch_diagram, compute_slow_manifold, find_intersections, regularization_distance, BranchDiagramOptions,
    BranchEnd, BranchLabel, ManifoldSide, RegularizedParams, SectionOptions,
};
use pinchfold::models::{eval_straight, strong_canard, weak_canard};
use pinchfold::FoldedNodeParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::specfun_check::run_specfun_check;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Outcome {
    pub fn line(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        format!("[{tag}] criterion {}: {}: {}", self.id, self.title, self.detail)
    }
}

pub const TITLES: [&str; 8] = [
    "canard-count law",
    "primary-canard exactness",
    "sliding census at the second pinch",
    "Hermite-solution fidelity",
    "special-function kernel",
    "nonsmooth-limit trend",
    "Filippov-regularization convergence",
    "asymptotic caveat",
];

pub const EPS: f64 = 0.05;
pub const COUNT_LAW: [(f64, usize); 5] = [(0.4, 0), (0.3, 1), (1.0 / 8.5, 3), (0.1, 4), (0.08, 5)];

fn reference() -> FoldedNodeParams {
    FoldedNodeParams::new(1.0 / 8.5, EPS).expect("reference parameters are valid")
}

fn outcome(id: u8, r: Result<(bool, String), pinchfold::Error>) -> Outcome {
    let (passed, detail) = r.unwrap_or_else(|e| (false, format!("error: {e}")));
    Outcome {
        id,
        title: TITLES[id as usize - 1],
        passed,
        detail,
    }
}

/// Secondary canards for each `mu` of the count law with `eps = 0.05`.
pub fn criterion_1() -> Outcome {
    let r = COUNT_LAW
        .par_iter()
        .map(|&(mu, want)| {
            let p = FoldedNodeParams::new(mu, EPS)?;
            let s = find_secondary_canards(&p, &CanardSearchOptions::default(), &AssemblyOptions::default())?;
            let rot = s.rotation_numbers();
            let expected: Vec<u32> = (1..=want as u32).collect();
            Ok((rot.len(), rot == expected))
        })
        .collect::<Result<Vec<_>, pinchfold::Error>>()
        .map(|v| {
            let counts: Vec<usize> = v.iter().map(|x| x.0).collect();
            let ok = v.iter().all(|x| x.1);
            (ok, format!("counts {counts:?} (expected [0, 1, 3, 4, 5]), rotation numbers 1..count: {ok}"))
        });
    outcome(1, r)
}

/// Residual of the straightened system along both primary canards at 100 random times.
pub fn criterion_2() -> Outcome {
    let p = reference();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let t: f64 = rng.gen_range(-10.0..10.0);
        let pairs = [
            (weak_canard(&p, t), [0.0, 1.0, p.mu() / 2.0]),
            (strong_canard(t), [0.0, 1.0, 0.5]),
        ];
        for (s, d) in pairs {
            let f = eval_straight(&p, &s);
            for i in 0..3 {
                worst = worst.max((f[i] - d[i]).abs());
            }
        }
    }
    outcome(2, Ok((worst < 1e-12, format!("max residual {worst:.3e} (tolerance 1e-12)"))))
}

pub fn criterion_3() -> Outcome {
    let r = (|| {
        let a = locate_primary_canards_pinched(&FoldedNodeParams::new(0.25, EPS)?)?.sliding_census;
        let b = locate_primary_canards_pinched(&FoldedNodeParams::new(1.0 / 16.0, EPS)?)?.sliding_census;
        Ok((a == 0 && b == 1, format!("mu = 1/4: {a} (expected 0), mu = 1/16: {b} (expected 1)")))
    })();
    outcome(3, r)
}

/// Finite-difference residual of the `W < 0` system along each secondary
/// canard's Hermite solution, and the symmetry defect of the assembled canards.
pub fn criterion_4() -> Outcome {
    let r = (|| {
        let p = reference();
        let (roots, _) = find_grazing_roots(&p, &CanardSearchOptions::default())?;
        let h = 1e-3;
        let mut residual = 0.0f64;
        for root in &roots {
            for j in 0..=600 {
                let t = -3.0 + 0.01 * j as f64;
                let e = |dt: f64| solve_w_minus(&p, root.zdot0, t + dt);
                let (a, b, c, d) = (e(2.0 * h)?, e(h)?, e(-h)?, e(-2.0 * h)?);
                let f = eval_linearized(&p, LinearizedSide::WMinus, solve_w_minus(&p, root.zdot0, t)?);
                for i in 0..3 {
                    let fd = (-a[i] + 8.0 * b[i] - 8.0 * c[i] + d[i]) / (12.0 * h);
                    residual = residual.max((fd - f[i]).abs());
                }
            }
        }
        let mut defect = 0.0f64;
        for root in &roots {
            let c = canard::assemble_canard(&p, root, &AssemblyOptions::default())?;
            defect = defect.max(c.symmetry_defect()?);
        }
        Ok((
            residual < 1e-7 && defect < 1e-8 && roots.len() == 3,
            format!(
                "ODE residual {residual:.3e} (tolerance 1e-7), symmetry defect {defect:.3e} (tolerance 1e-8) over {} canards",
                roots.len()
            ),
        ))
    })();
    outcome(4, r)
}

pub fn criterion_5() -> Outcome {
    let r = run_specfun_check();
    let zeros: Vec<String> = r
        .zero_counts
        .iter()
        .map(|z| format!("({}, {}): {}/{}", z.a, z.b, z.scanned, z.law))
        .collect();
    let detail = format!(
        "oracle {:.2e} (1e-10), transformation {:.2e} (1e-9), derivative {:.2e} (1e-9) on {} points; zero counts scanned/law {}",
        r.oracle.error,
        r.transformation.error,
        r.derivative.error,
        r.grid_points,
        zeros.join(", ")
    );
    outcome(5, Ok((r.passed(), detail)))
}

pub const TREND_K: [f64; 3] = [10.0, 50.0, 200.0];

/// Crossing counts of the sections over the stiffness grid and survival of
/// the strong-canard branch.
pub fn criterion_6() -> Outcome {
    let r = (|| {
        let p = reference();
        let so = SectionOptions::default();
        let counts = TREND_K
            .par_iter()
            .map(|&k| {
                let rp = RegularizedParams::new(p, k)?;
                let a = compute_slow_manifold(&rp, ManifoldSide::Attracting, &so)?;
                let r = compute_slow_manifold(&rp, ManifoldSide::Repelling, &so)?;
                Ok(find_intersections(&a, &r)?.crossings.len())
            })
            .collect::<Result<Vec<usize>, pinchfold::Error>>()?;
        let monotone = counts.windows(2).all(|w| w[0] <= w[1]);
        let d = branch_diagram(
            &p,
            &BranchDiagramOptions {
                k_grid: TREND_K.to_vec(),
                ..BranchDiagramOptions::default()
            },
        )?;
        let strong = d.branch(BranchLabel::Strong);
        let spans = strong.is_some_and(|b| {
            let (lo, hi) = b.k_range();
            b.end == BranchEnd::RangeEnd && lo <= TREND_K[0] && hi >= TREND_K[2] * (1.0 - 1e-9)
        });
        Ok((
            monotone && spans,
            format!(
                "crossings {counts:?} at k = {TREND_K:?}, non-decreasing: {monotone}; strong branch spans the range: {spans}; {} branches",
                d.branches.len()
            ),
        ))
    })();
    outcome(6, r)
}

pub const SCENARIOS: [([f64; 3], f64); 2] = [([0.05, -2.0, 0.0], 0.3), ([0.3, -3.0, -1.0], 2.0)];
pub const CONVERGENCE_K: [f64; 3] = [1e2, 1e3, 1e4];

pub fn criterion_7() -> Outcome {
    let r = (|| {
        let p = reference();
        let mut ok = true;
        let mut parts = Vec::new();
        for (s0, t1) in SCENARIOS {
            let d = CONVERGENCE_K
                .iter()
                .map(|&k| regularization_distance(&p, k, s0, 0.0, t1))
                .collect::<Result<Vec<f64>, _>>()?;
            ok &= d.windows(2).all(|w| w[1] < w[0]);
            parts.push(format!("{s0:?}: {:.3e}, {:.3e}, {:.3e}", d[0], d[1], d[2]));
        }
        Ok((ok, format!("Hausdorff distances at k = 1e2, 1e3, 1e4: {}", parts.join("; "))))
    })();
    outcome(7, r)
}

pub fn criterion_8() -> Outcome {
    let r = (|| {
        let p = reference();
        let exact = count_grazings(&p, Kernel::Series, 4000)?;
        let approx = count_grazings(&p, Kernel::Asymptotic, 4000)?;
        Ok((exact != approx && exact == 3, format!("exact count {exact}, asymptotic count {approx}")))
    })();
    outcome(8, r)
}

pub fn criterion(id: u8) -> Option<Outcome> {
    Some(match id {
        1 => criterion_1(),
        2 => criterion_2(),
        3 => criterion_3(),
        4 => criterion_4(),
        5 => criterion_5(),
        6 => criterion_6(),
        7 => criterion_7(),
        8 => criterion_8(),
        _ => return None,
    })
}

/// All criteria in order.
pub fn run_all() -> Vec<Outcome> {
    (1..=8).filter_map(criterion).collect()
}
