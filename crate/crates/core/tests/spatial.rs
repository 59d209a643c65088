mod common;

use placealign::dtw::CumulativeTable;
use placealign::spatial::{central_index, holistic_distance};
use placealign::{
    adaptive_weight, align, build_distance_matrix, point_distance, AlignConfig, AlignMode,
    DistanceMatrix, FeatureSequence, GaussianProjection, ProjectionSpec,
};
use proptest::prelude::*;

use common::{all_paths, brute_force_min_path, cosine, random_sequence, rng, shifted_copy};

fn nonneg_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..10.0, len)
}

fn sequence(
    width: std::ops::RangeInclusive<usize>,
    dim: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = FeatureSequence> {
    (width, dim).prop_flat_map(|(w, d)| {
        nonneg_vec(w * d).prop_map(move |v| FeatureSequence::from_flat(0, w, d, v).unwrap())
    })
}

fn sequence_pair() -> impl Strategy<Value = (FeatureSequence, FeatureSequence)> {
    (1usize..=8, 1usize..=6).prop_flat_map(|(w, d)| {
        (nonneg_vec(w * d), nonneg_vec(w * d)).prop_map(move |(a, b)| {
            (
                FeatureSequence::from_flat(0, w, d, a).unwrap(),
                FeatureSequence::from_flat(0, w, d, b).unwrap(),
            )
        })
    })
}

fn matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..=5).prop_flat_map(|w| prop::collection::vec(prop::collection::vec(0.0f64..1.0, w), w))
}

#[test]
fn point_distance_examples() {
    assert_eq!(
        point_distance(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(),
        0.0
    );
    assert_eq!(point_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
    // Oracle in extended form: 1 - 1/sqrt(2) from the half-angle identity.
    let expected = 1.0 - (0.5f64).sqrt();
    assert!((point_distance(&[1.0, 1.0], &[1.0, 0.0]).unwrap() - expected).abs() < 1e-15);
    assert_eq!(point_distance(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
    assert_eq!(point_distance(&[0.0, 0.0], &[3.0, 0.0]).unwrap(), 1.0);
    assert!(point_distance(&[1.0], &[1.0, 2.0]).is_err());
}

#[test]
fn two_by_two_examples() {
    let d = DistanceMatrix::from_rows(&[vec![0.2, 0.9], vec![0.9, 0.1]]).unwrap();
    for (a, s, c) in [(1.0, 0.3, 2.0), (4.0, 0.6, 5.0)] {
        let t = CumulativeTable::fill(&d, a);
        let rows = vec![vec![0.2, 0.9], vec![0.9, 0.1]];
        assert!((t.cumulative(1, 1) - brute_force_min_path(&rows, a)).abs() < 1e-12);
        assert!((t.cumulative(1, 1) - s).abs() < 1e-12);
        assert_eq!(t.cost(1, 1), c);
        assert_eq!(t.path_to(1, 1).points, vec![(0, 0), (1, 1)]);
    }
}

#[test]
fn adaptive_weight_examples() {
    let mut row = vec![0.5; 7];
    let rows = |row: &Vec<f64>| -> DistanceMatrix {
        let mut cells = vec![0.7; 49];
        cells[3 * 7..4 * 7].copy_from_slice(row);
        DistanceMatrix::new(7, 7, cells).unwrap()
    };
    row[3] = 0.1;
    assert_eq!(adaptive_weight(&rows(&row), 1.0).unwrap().a, 1.0);
    row[3] = 0.5;
    row[0] = 0.1;
    let w = adaptive_weight(&rows(&row), 1.0).unwrap();
    assert_eq!((w.best_index, w.a), (0, 2.0));
    assert_eq!(adaptive_weight(&rows(&row), 0.0).unwrap().a, 1.0);
    assert_eq!(central_index(7), 3);
    assert_eq!(central_index(4), 1);
}

#[test]
fn band_sentinels_for_w7_xi3() {
    let mut r = rng(3);
    let x = random_sequence(&mut r, 7, 5);
    let y = random_sequence(&mut r, 7, 5);
    let d = build_distance_matrix(&x, &y, true, 3).unwrap();
    let (mut above, mut below) = (0, 0);
    for i in 0..7 {
        for j in 0..7 {
            let inf = d.get(i, j).is_infinite();
            assert_eq!(inf, i.abs_diff(j) >= 3, "({i},{j})");
            if inf && j > i {
                above += 1;
            } else if inf {
                below += 1;
            }
        }
    }
    assert_eq!((above, below), (10, 10));
    assert_eq!(
        build_distance_matrix(&x, &y, true, 7).unwrap(),
        build_distance_matrix(&x, &y, false, 0).unwrap()
    );
}

#[test]
fn shift_detection() {
    let mut r = rng(4);
    let trials = 200;
    let mut wins = 0;
    for t in 0..trials {
        let x = random_sequence(&mut r, 7, 32);
        let y = shifted_copy(&mut r, &x, 1 + t % 2);
        let adaptive = align(&x, &y, &AlignConfig::default()).unwrap().distance;
        wins += usize::from(adaptive < cosine(x.flat(), y.flat()));
    }
    assert!(wins as f64 >= 0.95 * trials as f64, "{wins}/{trials}");
}

#[test]
fn projected_inputs_widen_the_range() {
    let mut r = rng(5);
    let projection = GaussianProjection::new(ProjectionSpec::new(40, 8, 1)).unwrap();
    for _ in 0..50 {
        let x = projection.project(&random_sequence(&mut r, 5, 40)).unwrap();
        let y = projection.project(&random_sequence(&mut r, 5, 40)).unwrap();
        let dist = align(&x, &y, &AlignConfig::default()).unwrap().distance;
        assert!((0.0..=2.0).contains(&dist));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn self_distance_is_zero(x in nonneg_vec(6).prop_filter("nonzero", |v| v.iter().any(|&a| a > 1e-3))) {
        prop_assert!(point_distance(&x, &x).unwrap().abs() < 1e-9);
    }

    #[test]
    fn scale_invariant(x in nonneg_vec(5), y in nonneg_vec(5), c in 0.01f64..100.0) {
        let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
        prop_assert!((point_distance(&x, &y).unwrap() - point_distance(&scaled, &y).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn bounded_for_nonnegative(x in nonneg_vec(5), y in nonneg_vec(5)) {
        let d = point_distance(&x, &y).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
    }

    #[test]
    fn dp_matches_brute_force(d in matrix(), a in 1.0f64..5.0) {
        let w = d.len();
        let t = CumulativeTable::fill(&DistanceMatrix::from_rows(&d).unwrap(), a);
        prop_assert!((t.cumulative(w - 1, w - 1) - brute_force_min_path(&d, a)).abs() < 1e-9);
    }

    #[test]
    fn backtraced_path_realises_the_score(d in matrix(), a in 1.0f64..5.0) {
        let w = d.len();
        let t = CumulativeTable::fill(&DistanceMatrix::from_rows(&d).unwrap(), a);
        let path = t.path_to(w - 1, w - 1);
        prop_assert!(all_paths(w, w).contains(&path.points));
        // Re-score the returned path: a diagonal entry costs `a` only if its charge says so.
        let mut score = d[0][0];
        for (k, pair) in path.points.windows(2).enumerate() {
            let (i, j) = pair[1];
            let charge = path.costs[k + 1];
            score += charge * d[i][j];
            if charge != 1.0 {
                prop_assert_eq!(pair[1], (pair[0].0 + 1, pair[0].1 + 1));
            }
        }
        // A diagonal taken on a tie is charged 1, so the re-scored sum never exceeds the optimum.
        prop_assert!(score <= t.cumulative(w - 1, w - 1) + 1e-9);
        prop_assert!((path.total_cost() - t.cost(w - 1, w - 1)).abs() < 1e-12);
    }

    #[test]
    fn alignment_invariants((x, y) in sequence_pair(), sigma in 0.0f64..3.0) {
        let cfg = AlignConfig { sigma, ..AlignConfig::default() };
        let r = align(&x, &y, &cfg).unwrap();
        let w = x.width();
        let path = r.path.as_ref().unwrap();
        prop_assert!(path.is_valid(w, w));
        prop_assert!(path.len() >= w && path.len() < 2 * w);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&r.distance));
        prop_assert!((r.distance - r.cumulative / r.total_cost).abs() < 1e-12);
        prop_assert!((r.total_cost - path.costs.iter().sum::<f64>()).abs() < 1e-12);
    }

    #[test]
    fn zero_sigma_degenerates_to_vanilla((x, y) in sequence_pair()) {
        let cfg = AlignConfig { sigma: 0.0, ..AlignConfig::default() };
        let a = align(&x, &y, &cfg).unwrap();
        let v = align(&x, &y, &cfg.with_mode(AlignMode::Vanilla)).unwrap();
        prop_assert_eq!(a.distance.to_bits(), v.distance.to_bits());
        prop_assert_eq!(a.path, v.path);
    }

    #[test]
    fn identity_gives_zero_and_diagonal(x in sequence(1..=8, 1..=6)) {
        let w = x.width();
        for mode in AlignMode::ALL {
            let window_ok = mode != AlignMode::SlidingWindow || w >= 4;
            if !window_ok {
                continue;
            }
            let r = align(&x, &x, &AlignConfig::default().with_mode(mode)).unwrap();
            prop_assert!(r.distance.abs() < 1e-12, "{:?}", mode);
            if let Some(path) = r.path {
                prop_assert_eq!(path.points, (0..w).map(|i| (i, i)).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn band_is_respected((x, y) in sequence_pair(), xi in 1usize..=8) {
        let w = x.width();
        let xi = xi.min(w);
        let r = align(&x, &y, &AlignConfig::default().restricted(xi)).unwrap();
        let path = r.path.unwrap();
        prop_assert!(path.is_valid(w, w));
        prop_assert!(path.points.iter().all(|&(i, j)| i.abs_diff(j) < xi));
        prop_assert!(r.distance.is_finite());
    }

    #[test]
    fn holistic_matches_flat_cosine((x, y) in sequence_pair()) {
        let h = holistic_distance(&x, &y);
        let r = align(&x, &y, &AlignConfig::default().with_mode(AlignMode::HolisticCosine)).unwrap();
        prop_assert_eq!(h, r.distance);
        if x.flat().iter().any(|&v| v > 0.0) && y.flat().iter().any(|&v| v > 0.0) {
            prop_assert!((h - cosine(x.flat(), y.flat())).abs() < 1e-9);
        }
    }
}
