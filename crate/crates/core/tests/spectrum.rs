use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use approx::assert_relative_eq;
use holodof::closedform::{op_norm_paraxial, op_norm_sub};
use holodof::geometry::*;
use holodof::harness::config::KernelKind;
use holodof::harness::experiments::{kernel_spectrum, tx_grid};
use holodof::spectrum::*;
use holodof::{Complex64, Vec3};
use proptest::prelude::*;

fn lam() -> f64 {
    PhysicalConstants::default().wavelength
}

fn reference() -> Deployment {
    let l = lam();
    Deployment::from_spherical(
        PhysicalConstants::default(),
        256.0 * l,
        FRAC_PI_4,
        0.0,
        0.0,
        FRAC_PI_2,
        [16.0 * l; 2],
        [16.0 * l; 2],
    )
    .unwrap()
}

fn small() -> Deployment {
    Deployment::new(
        PhysicalConstants::default(),
        Vec3::new(0.0, 10.0, 0.0),
        0.0,
        0.0,
        [1.0, 0.5],
        [1.0, 1.0],
    )
    .unwrap()
}

fn gaussian_kernel(a: &Vec3, b: &Vec3) -> Complex64 {
    let d = a - b;
    Complex64::from_polar((-d.norm_squared()).exp(), 0.7 * (a.x - b.x))
}

#[test]
fn constant_kernel_has_rank_one() {
    let g = parametrize_tx(&small(), 5, 4).unwrap();
    let s = eigen_spectrum(&assemble_self_adjoint(&g, |_, _| Complex64::new(3.0, 0.0)).unwrap()).unwrap();
    assert_relative_eq!(s.eigs[0], 3.0 * 2.0, max_relative = 1e-12);
    assert!(s.eigs[1..].iter().all(|&e| e < 1e-12));
    assert_eq!(count_edof(&s, 1e-6), 1);
}

#[test]
fn spectrum_ignores_node_order() {
    let g = parametrize_tx(&small(), 6, 5).unwrap();
    let mut order: Vec<usize> = (0..g.len()).collect();
    order.reverse();
    order.swap(3, 17);
    let p = SurfaceGrid::from_nodes(
        order.iter().map(|&i| g.points[i]).collect(),
        order.iter().map(|&i| g.local[i]).collect(),
        order.iter().map(|&i| g.weights[i]).collect(),
    )
    .unwrap();
    let a = eigen_spectrum(&assemble_self_adjoint(&g, |i, j| gaussian_kernel(&g.points[i], &g.points[j])).unwrap()).unwrap();
    let b = eigen_spectrum(&assemble_self_adjoint(&p, |i, j| gaussian_kernel(&p.points[i], &p.points[j])).unwrap()).unwrap();
    for (x, y) in a.eigs.iter().zip(&b.eigs) {
        assert!((x - y).abs() < 1e-12 * a.max());
    }
}

#[test]
fn shift_invariant_assembly_matches_direct_assembly() {
    let g = parametrize_tx(&small(), 7, 6).unwrap();
    let f = |du: f64, dv: f64| gaussian_kernel(&Vec3::new(du, 0.0, dv), &Vec3::zeros());
    let a = assemble_shift_invariant(&g, f).unwrap();
    let b = assemble_self_adjoint(&g, |i, j| gaussian_kernel(&g.points[i], &g.points[j])).unwrap();
    for i in 0..g.len() {
        for j in 0..g.len() {
            assert!((a.mat[(i, j)] - b.mat[(i, j)]).norm() < 1e-14);
        }
    }
}

#[test]
fn eigenvalue_sums_match_trace_and_frobenius_norm() {
    let g = parametrize_tx(&small(), 8, 6).unwrap();
    let s = eigen_spectrum(&assemble_self_adjoint(&g, |i, j| gaussian_kernel(&g.points[i], &g.points[j])).unwrap()).unwrap();
    let sum: f64 = s.eigs.iter().sum();
    let sq: f64 = s.eigs.iter().map(|e| e * e).sum();
    assert_relative_eq!(sum, s.trace, max_relative = 1e-10);
    assert_relative_eq!(sq, s.frob2, max_relative = 1e-10);
    assert_relative_eq!(s.trace, g.total_weight(), max_relative = 1e-12);
}

#[test]
fn gram_and_svd_routes_agree() {
    let dep = reference();
    let tx = parametrize_tx(&dep, 12, 10).unwrap();
    let rx = parametrize_rx_full(&dep, 9, 11).unwrap();
    let h = assemble_channel(&tx, &rx, &dep).unwrap();
    let a = singular_spectrum(&h).unwrap();
    let b = svd_spectrum(&h).unwrap();
    for (x, y) in a.eigs.iter().zip(&b.eigs) {
        assert!((x - y).abs() <= 1e-10 * a.max());
    }
    let gram = eigen_spectrum(&h.gram_tx()).unwrap();
    assert_eq!(gram.eigs.len(), tx.len());
    for (x, y) in a.eigs.iter().zip(&gram.eigs) {
        assert!((x - y).abs() <= 1e-10 * a.max());
    }
}

#[test]
fn oversized_problems_are_rejected() {
    let dep = reference();
    let n = (MAX_DIM as f64).sqrt() as usize + 1;
    let g = parametrize_tx(&dep, n, n).unwrap();
    assert!(matches!(
        assemble_self_adjoint(&g, |_, _| Complex64::new(1.0, 0.0)),
        Err(holodof::Error::TooLarge(_))
    ));
}

#[test]
fn reference_pose_count_and_leading_eigenvalue() {
    let dep = reference();
    let part = partition_rx(&dep, 1, 1).unwrap();
    let tx = tx_grid(&dep, 1.0).unwrap();
    let s = kernel_spectrum(&dep, &part, &tx, 1.0, KernelKind::Exact).unwrap();
    let op = op_norm_paraxial(&dep).unwrap();
    assert!(s.max() <= 1.05 * op, "{} vs {}", s.max(), op);
    let n = count_edof(&s, 0.5 * op);
    assert!((6..=10).contains(&n), "{n}");
}

#[test]
fn leading_eigenvalues_are_stable_under_refinement() {
    let dep = reference();
    let part = partition_rx(&dep, 1, 1).unwrap();
    let coarse = kernel_spectrum(&dep, &part, &tx_grid(&dep, 1.0).unwrap(), 1.0, KernelKind::Approx).unwrap();
    let fine = kernel_spectrum(&dep, &part, &tx_grid(&dep, 1.5).unwrap(), 1.0, KernelKind::Approx).unwrap();
    let drift = (0..8)
        .map(|k| (coarse.eigs[k] - fine.eigs[k]).abs() / fine.eigs[0])
        .fold(0.0f64, f64::max);
    println!("drift {drift:e}");
    assert!(drift <= 0.01, "{drift}");
}

#[test]
fn broadside_pieces_give_distinct_levels() {
    let l = lam();
    let dep = Deployment::new(
        PhysicalConstants::default(),
        Vec3::new(0.0, 32.0 * l, 0.0),
        0.0,
        0.0,
        [4.0 * l; 2],
        [32.0 * l; 2],
    )
    .unwrap();
    let part = partition_rx(&dep, 8, 8).unwrap();
    let key = |x: f64| (x * 1e9).round() as i64;
    let levels: BTreeSet<i64> = part
        .subs
        .iter()
        .map(|s| key(op_norm_sub(&dep, s).unwrap() / op_norm_sub(&dep, &part.subs[0]).unwrap()))
        .collect();
    let classes: BTreeSet<(i64, i64)> = part
        .subs
        .iter()
        .map(|s| (key(s.center.x.abs() / l), key(s.center.z.abs() / l)))
        .collect();
    // x-polarized coupling separates |x| from |z|, so every quadrant class is its own level.
    assert_eq!(classes.len(), 16);
    assert_eq!(levels.len(), classes.len());
}

#[test]
fn polarization_profile_bands() {
    let s = Spectrum {
        eigs: vec![1.02, 0.98, 0.51, 0.3, 0.01],
        op_norm_refs: vec![],
        trace: 0.0,
        frob2: 0.0,
    };
    let r = polarization_profile(&s, &[0.5, 1.0]).unwrap();
    assert_eq!(r.levels, vec![1.0, 0.5]);
    assert_eq!(
        r.bands,
        vec![Band::Level(0), Band::Level(0), Band::Level(1), Band::Transition, Band::Null]
    );
    assert_eq!(r.plateau_counts, vec![2, 1]);
    assert_eq!((r.n_transition, r.n_null), (1, 1));
    assert_relative_eq!(r.transition_fraction, 0.25);
    assert!(polarization_profile(&s, &[]).is_err());
}

proptest! {
    #[test]
    fn count_is_monotone_in_threshold(mut eigs in prop::collection::vec(0.0f64..10.0, 1..40), a in 0.0f64..10.0, b in 0.0f64..10.0) {
        eigs.sort_by(|x, y| y.total_cmp(x));
        let s = Spectrum { eigs, op_norm_refs: vec![], trace: 0.0, frob2: 0.0 };
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(count_edof(&s, lo) >= count_edof(&s, hi));
        prop_assert_eq!(count_edof(&s, lo), s.eigs.iter().filter(|&&e| e >= lo).count());
    }
}
