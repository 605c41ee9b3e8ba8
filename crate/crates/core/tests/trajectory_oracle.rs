mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slicewise::trajectory::{
    detect_saturation, optimal_trajectory, trajectory_height, upper_hull, PerfPoint, Trajectory,
};

use common::brute_hull;

fn to_points(xy: &[(f64, f64)]) -> Vec<PerfPoint> {
    xy.iter().map(|&(x, y)| PerfPoint::new(x, y)).collect()
}

fn coords(v: &[PerfPoint]) -> Vec<(f64, f64)> {
    v.iter().map(|p| (p.effort, p.perf_norm)).collect()
}

/// Half the instances use continuous coordinates, the other half a coarse
/// dyadic grid (exact in binary) so ties and collinear triples occur.
fn instance(rng: &mut ChaCha8Rng, i: usize) -> Vec<(f64, f64)> {
    let n = rng.random_range(1..=50);
    (0..n)
        .map(|_| {
            if i % 2 == 0 {
                (rng.random::<f64>(), rng.random::<f64>())
            } else {
                (rng.random_range(0..=8) as f64 / 8.0, rng.random_range(0..=8) as f64 / 8.0)
            }
        })
        .collect()
}

fn assert_no_point_above(t: &Trajectory, points: &[(f64, f64)]) {
    let last = t.vertices.last().unwrap().effort;
    for &(x, y) in points.iter().filter(|p| p.0 <= last) {
        let h = trajectory_height(t, x).expect("inside the span");
        assert!(h >= y - 1e-9, "point ({x}, {y}) above trajectory height {h}");
    }
    assert!(t.vertices.windows(2).all(|w| w[0].perf_norm <= w[1].perf_norm));
    assert!(t.vertices.windows(2).all(|w| w[0].effort < w[1].effort));
}

#[test]
fn hull_matches_brute_force_on_200_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..200 {
        let xy = instance(&mut rng, i);
        let hull = upper_hull(&to_points(&xy)).unwrap();
        assert_eq!(coords(&hull), brute_hull(&xy), "instance {i}: {xy:?}");
        // slopes non-increasing
        let slopes: Vec<f64> = hull
            .windows(2)
            .map(|w| (w[1].perf_norm - w[0].perf_norm) / (w[1].effort - w[0].effort))
            .collect();
        assert!(slopes.windows(2).all(|s| s[1] <= s[0] + 1e-12), "instance {i}");
        assert_no_point_above(&optimal_trajectory(&to_points(&xy)).unwrap(), &xy);
    }
}

#[test]
fn worked_hull_examples() {
    let hull = |xy: &[(f64, f64)]| coords(&upper_hull(&to_points(xy)).unwrap());
    assert_eq!(hull(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]), vec![(0.0, 0.0), (2.0, 2.0)]);
    let all = [(0.0, 0.0), (1.0, 0.9), (2.0, 1.0)];
    assert_eq!(hull(&all), all.to_vec());
    assert_eq!(brute_hull(&all), all.to_vec());
    assert_eq!(hull(&[(0.0, 0.0), (1.0, 0.2), (2.0, 1.0)]), vec![(0.0, 0.0), (2.0, 1.0)]);
    assert!(upper_hull(&[]).is_err());
}

#[test]
fn random_50_point_clouds_stay_below_the_trajectory() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    for _ in 0..100 {
        let xy: Vec<(f64, f64)> = (0..50).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect();
        assert_no_point_above(&optimal_trajectory(&to_points(&xy)).unwrap(), &xy);
    }
}

proptest! {
    #[test]
    fn scaling_effort_keeps_the_vertex_subset(
        xy in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..40),
        c in prop_oneof![Just(2.0), Just(0.5), Just(4.0), Just(0.125)],
    ) {
        // powers of two scale exactly, so the comparison is not blurred by rounding
        let base = upper_hull(&to_points(&xy)).unwrap();
        let scaled: Vec<(f64, f64)> = xy.iter().map(|&(x, y)| (c * x, y)).collect();
        let hull = upper_hull(&to_points(&scaled)).unwrap();
        let back: Vec<(f64, f64)> = hull.iter().map(|p| (p.effort / c, p.perf_norm)).collect();
        prop_assert_eq!(back, coords(&base));
    }

    #[test]
    fn trajectory_is_monotone_and_covers(xy in prop::collection::vec((0.0f64..1.0, 0.0f64..2.0), 1..50)) {
        let t = optimal_trajectory(&to_points(&xy)).unwrap();
        let top = xy.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(t.vertices.last().unwrap().perf_norm, top);
        let left = xy.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(t.vertices[0].effort, left);
        assert_no_point_above(&t, &xy);
    }

    #[test]
    fn saturation_point_has_flat_window(ys in prop::collection::vec(0.0f64..1.0, 3..12), window in 1usize..3) {
        prop_assume!(ys.len() > window);
        let curve: Vec<(f64, f64)> = ys.iter().enumerate().map(|(i, &y)| (i as f64, y)).collect();
        let max = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let flat_from = |i: usize| (i..i + window).all(|j| curve[j + 1].1 - curve[j].1 < 0.01 * max);
        let expected = (0..curve.len() - window).find(|&i| flat_from(i)).map(|i| curve[i].0);
        prop_assert_eq!(detect_saturation(&curve, 0.01, window).unwrap(), expected);
    }
}
