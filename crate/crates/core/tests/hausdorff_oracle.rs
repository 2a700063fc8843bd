mod oracle;

use credal_core::credal::hausdorff_tv;
use credal_core::sampling::{random_credal_set, rng_for};
use credal_core::{CredalSet, Dist};

fn set(points: &[&[f64]]) -> CredalSet {
    CredalSet::reduce(points.iter().map(|w| Dist::new(w.to_vec()).unwrap()).collect()).unwrap()
}

#[test]
fn grid_helper_includes_vertices() {
    let g = oracle::barycentric_grid(3, 4);
    assert_eq!(g.len(), 15);
    assert!(g.contains(&vec![1.0, 0.0, 0.0]) && g.contains(&vec![0.0, 0.0, 1.0]));
}

#[test]
fn matches_hand_computed_distances() {
    let a = set(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
    let b = set(&[&[0.0, 0.0, 1.0]]);
    let lib = hausdorff_tv(&a, &b).unwrap();
    let grid = oracle::hausdorff_tv_grid(&a.to_weights(), &b.to_weights());
    assert!((lib - 1.0).abs() < 1e-12);
    assert!((grid - 1.0).abs() < 1e-9);

    // The far vertex of the triangle is 1/2 from the opposite edge.
    let tri = set(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
    let edge = set(&[&[0.5, 0.5, 0.0], &[0.0, 0.5, 0.5]]);
    let lib = hausdorff_tv(&tri, &edge).unwrap();
    let grid = oracle::hausdorff_tv_grid(&tri.to_weights(), &edge.to_weights());
    assert!((lib - grid).abs() < 1e-4, "{lib} vs {grid}");
}

#[test]
fn agrees_on_random_binary_sets() {
    for t in 0..30 {
        let mut rng = rng_for(101, t);
        let a = random_credal_set(2, 1 + (t as usize % 2), &mut rng).unwrap();
        let b = random_credal_set(2, 2, &mut rng).unwrap();
        let lib = hausdorff_tv(&a, &b).unwrap();
        let grid = oracle::hausdorff_tv_grid(&a.to_weights(), &b.to_weights());
        assert!((lib - grid).abs() < 1e-4, "trial {t}: {lib} vs {grid}");
    }
}

#[test]
fn agrees_on_random_ternary_sets() {
    for t in 0..20 {
        let mut rng = rng_for(202, t);
        let a = random_credal_set(3, 1 + (t as usize % 3), &mut rng).unwrap();
        let b = random_credal_set(3, 1 + ((t as usize + 1) % 3), &mut rng).unwrap();
        let lib = hausdorff_tv(&a, &b).unwrap();
        let grid = oracle::hausdorff_tv_grid(&a.to_weights(), &b.to_weights());
        assert!((lib - grid).abs() < 1e-4, "trial {t}: {lib} vs {grid}");
        assert!(grid >= lib - 1e-12, "the grid search can only overestimate");
    }
}
