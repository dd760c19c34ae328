use pinchfold::continuation::*;
use pinchfold::FoldedNodeParams;

fn base() -> FoldedNodeParams {
    FoldedNodeParams::new(1.0 / 8.5, 0.05).unwrap()
}

fn sections(k: f64, o: &SectionOptions) -> (SlowManifoldSection, SlowManifoldSection, Intersections) {
    let rp = RegularizedParams::new(base(), k).unwrap();
    let a = compute_slow_manifold(&rp, ManifoldSide::Attracting, o).unwrap();
    let r = compute_slow_manifold(&rp, ManifoldSide::Repelling, o).unwrap();
    let x = find_intersections(&a, &r).unwrap();
    (a, r, x)
}

fn canards(k: f64, o: &SectionOptions) -> Vec<CanardOrbit> {
    let (a, r, x) = sections(k, o);
    let mut c: Vec<CanardOrbit> = x
        .crossings
        .iter()
        .map(|c| canard_at_crossing(&base(), &a, &r, c, o).unwrap())
        .collect();
    c.sort_by(|a, b| a.section_point()[1].total_cmp(&b.section_point()[1]));
    c
}

#[test]
fn crossing_counts_are_pinned_and_non_decreasing() {
    let o = SectionOptions::default();
    let counts: Vec<usize> = [10.0, 50.0, 200.0].iter().map(|&k| sections(k, &o).2.crossings.len()).collect();
    assert_eq!(counts, vec![4, 4, 4]);
    assert!(counts.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn bvp_residuals_are_small() {
    let o = SectionOptions::default();
    let (a, r, _) = sections(50.0, &o);
    assert!(a.max_residual < 1e-8, "{}", a.max_residual);
    assert!(r.max_residual < 1e-8, "{}", r.max_residual);
    for c in canards(50.0, &o) {
        assert!(c.residual < 1e-8, "{}", c.residual);
    }
}

#[test]
fn repelling_section_mirrors_attracting() {
    let (a, r, _) = sections(10.0, &SectionOptions::default());
    let mirrored: Vec<[f64; 2]> = r.curve.iter().map(|q| [-q[0], q[1]]).collect();
    let d = pinchfold::filippov::hausdorff_distance(&a.curve, &mirrored);
    assert!(d < 1e-8, "{d:e}");
}

#[test]
fn canards_are_independent_of_the_boundary_distance() {
    let near = canards(10.0, &SectionOptions::default());
    let far = canards(10.0, &SectionOptions { y_far: 4.0, intervals: 500, ..SectionOptions::default() });
    assert_eq!(near.len(), far.len());
    for (a, b) in near.iter().zip(&far) {
        let (qa, qb) = (a.section_point(), b.section_point());
        assert!((qa[1] - qb[1]).abs() < 1e-6, "{qa:?} vs {qb:?}");
        assert!(qa[0].abs() < 1e-12 && qb[0].abs() < 1e-12);
    }
}

#[test]
fn halved_step_reproduces_branch() {
    let o = SectionOptions::default();
    let seed = canards(10.0, &o).remove(0);
    let grid = vec![20.0, 50.0, 100.0];
    let coarse = BranchOptions { record_k: grid.clone(), ..BranchOptions::default() };
    let fine = BranchOptions {
        ds_initial: coarse.ds_initial / 2.0,
        ds_max: coarse.ds_max / 2.0,
        ..coarse.clone()
    };
    let a = continue_branch(&base(), &seed, 100.0, BranchLabel::Secondary(1), &o, &coarse).unwrap();
    let b = continue_branch(&base(), &seed, 100.0, BranchLabel::Secondary(1), &o, &fine).unwrap();
    assert_eq!(a.end, BranchEnd::RangeEnd);
    let ga: Vec<_> = a.grid_samples().collect();
    let gb: Vec<_> = b.grid_samples().collect();
    assert_eq!(ga.len(), 3);
    assert_eq!(gb.len(), 3);
    for (x, y) in ga.iter().zip(&gb) {
        assert!((x.k - y.k).abs() < 1e-9 * x.k);
        assert!(((x.max_x - y.max_x) / x.max_x).abs() < 1e-5, "{x:?} {y:?}");
    }
    assert!(a.samples.windows(2).all(|w| w[1].k > w[0].k));
}

#[test]
fn branch_diagram_regression() {
    let o = BranchDiagramOptions {
        k_grid: vec![10.0, 50.0, 200.0],
        ..BranchDiagramOptions::default()
    };
    let d = branch_diagram(&base(), &o).unwrap();
    let counts: Vec<(usize, usize)> = d.counts.iter().map(|c| (c.crossings, c.branches)).collect();
    assert_eq!(counts, vec![(4, 4), (4, 4), (4, 4)]);
    let st = d.branch(BranchLabel::Strong).unwrap();
    assert_eq!(st.end, BranchEnd::RangeEnd);
    let (lo, hi) = st.k_range();
    assert!(lo <= 1.0 + 1e-9 && hi >= 200.0 * (1.0 - 1e-9));
    // max_x at k = 200 on the default mesh
    let pinned = [
        (BranchLabel::Strong, 2.5155645866e-2),
        (BranchLabel::Secondary(1), 2.1690025547e-2),
        (BranchLabel::Secondary(2), 1.9266646356e-2),
        (BranchLabel::Secondary(3), 1.6631988852e-2),
    ];
    for (label, want) in pinned {
        let b = d.branch(label).unwrap();
        let s = b.grid_samples().last().unwrap();
        assert!((s.k - 200.0).abs() < 1e-9);
        assert!(((s.max_x - want) / want).abs() < 1e-6, "{label}: {} vs {want}", s.max_x);
        assert!(b.samples.windows(2).all(|w| w[1].k > w[0].k));
    }
    assert!(d.weak_envelope.is_empty());
    let mut buf = Vec::new();
    d.write_csv(&pinchfold::export::Provenance::new(), &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.contains("k,max_x,branch_label\n"));
    assert!(text.lines().any(|l| l.ends_with(",gamma_3")));
}

#[test]
fn regularized_orbits_approach_filippov() {
    for (s0, t1) in [([0.05, -2.0, 0.0], 0.3), ([0.3, -3.0, -1.0], 2.0)] {
        let d: Vec<f64> = [1e2, 1e3, 1e4]
            .iter()
            .map(|&k| regularization_distance(&base(), k, s0, 0.0, t1).unwrap())
            .collect();
        assert!(d[0] > d[1] && d[1] > d[2], "{s0:?}: {d:?}");
    }
}
