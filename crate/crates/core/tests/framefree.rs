use std::f64::consts::TAU;

use cvpam::framefree::{
    build_cv_pool, conditional_pdf, measurement_catalog, preparation_catalog, projective_framefree_with,
    projective_s_max, projective_samples, rotate, RotationMeasure, S3_QUANTUM,
};
use cvpam::optimize::{max_witness, MeasurementKind, OptimizerConfig, SchemeSpec};
use cvpam::rng::stream;
use cvpam::witness::make_s3;

/// Every way of placing the `S3` coefficient table onto the 4×3 catalog,
/// enumerated with permutations and explicit sign tables.
fn s_max_by_brute_force(e: &[[f64; 3]; 4]) -> (f64, Vec<f64>) {
    let mut all = Vec::new();
    for x in 0..4 {
        for xp in 0..4 {
            for xpp in 0..4 {
                if x == xp || x == xpp || xp == xpp {
                    continue;
                }
                for y in 0..3 {
                    for yp in 0..3 {
                        if y == yp {
                            continue;
                        }
                        for s in [1.0, -1.0] {
                            for sp in [1.0, -1.0] {
                                let v = s * e[x][y] + sp * e[x][yp] + s * e[xp][y] - sp * e[xp][yp] - s * e[xpp][y];
                                all.push(v);
                            }
                        }
                    }
                }
            }
        }
    }
    (all.iter().copied().fold(f64::NEG_INFINITY, f64::max), all)
}

fn table(r: &cvpam::framefree::Rotation) -> [[f64; 3]; 4] {
    let a = preparation_catalog();
    let b = measurement_catalog().map(|v| rotate(r, &v));
    std::array::from_fn(|x| std::array::from_fn(|y| a[x].dot(&b[y])))
}

#[test]
fn relabeling_closure_on_random_rotations() {
    for i in 0..100 {
        let r = RotationMeasure::Haar.sample(&mut stream(99, i));
        let (best, all) = s_max_by_brute_force(&table(&r));
        assert_eq!(all.len(), 576);
        let s = projective_s_max(&r);
        assert!((s - best).abs() < 1e-12);
        assert!(all.iter().all(|v| *v <= s + 1e-12));
        assert!(s <= S3_QUANTUM + 1e-9);
    }
}

#[test]
fn samples_respect_quantum_bound_and_are_reproducible() {
    for measure in [RotationMeasure::UniformEuler, RotationMeasure::Haar] {
        let a = projective_samples(5_000, 3, measure);
        assert!(a.iter().all(|v| *v <= S3_QUANTUM + 1e-9));
        assert_eq!(a, projective_samples(5_000, 3, measure));
    }
}

#[test]
fn disjoint_seeds_agree_on_bands() {
    let a = projective_framefree_with(100_000, 1, RotationMeasure::default()).unwrap();
    let b = projective_framefree_with(100_000, 2, RotationMeasure::default()).unwrap();
    for (x, y) in a.bands.iter().zip(&b.bands) {
        assert!((x.value - y.value).abs() < 0.01, "{} vs {}", x.value, y.value);
    }
}

#[test]
fn histogram_is_a_density() {
    let report = projective_framefree_with(20_000, 8, RotationMeasure::Haar).unwrap();
    assert!((report.histogram.total_mass() - 1.0).abs() < 1e-9);
    assert!(report.histogram.bins.iter().all(|(c, _)| *c > 3.0));
    assert!(conditional_pdf(&[3.5], -1.0).is_err());
}

#[test]
fn displacement_pool_matches_optimum_and_is_periodic() {
    let cfg = OptimizerConfig::default().with_restarts(64);
    let pool = build_cv_pool(MeasurementKind::Displacement, 3, &cfg).unwrap();
    let dd = max_witness(&make_s3(), &SchemeSpec::parse("DD").unwrap(), &cfg).unwrap().best_value;
    assert!((pool.s_max(0.0) - dd).abs() < 1e-6);
    for g in [0.0, 0.4, 2.9, 5.5] {
        assert!((pool.s_max(g) - pool.s_max(g + TAU)).abs() < 1e-12);
    }
}

#[test]
fn homodyne_pair_loses_violation_somewhere() {
    let cfg = OptimizerConfig::default().with_restarts(64);
    let pool = build_cv_pool(MeasurementKind::Homodyne, 2, &cfg).unwrap();
    let lowest = (0..360).map(|i| pool.s_max(TAU * f64::from(i) / 360.0)).fold(f64::INFINITY, f64::min);
    assert!(lowest <= 3.0);
}
