use std::io::Cursor;

use placealign::bundle::{
    load_ground_truth, read_ground_truth, save_ground_truth, write_ground_truth, HEADER_LEN,
};
use placealign::{Error, FeatureBundle, FeatureSequence, Trajectory};
use proptest::prelude::*;

fn bundle() -> impl Strategy<Value = FeatureBundle> {
    (
        1usize..5,
        1usize..6,
        1usize..7,
        prop::option::of(any::<u64>()),
    )
        .prop_flat_map(|(n, w, d, seed)| {
            prop::collection::vec(
                any::<f32>().prop_filter("finite", |v| v.is_finite()),
                n * w * d,
            )
            .prop_map(move |values| {
                let frames = values
                    .chunks(w * d)
                    .enumerate()
                    .map(|(i, c)| {
                        FeatureSequence::from_flat(
                            i as u64,
                            w,
                            d,
                            c.iter().map(|&v| f64::from(v)).collect(),
                        )
                        .unwrap()
                    })
                    .collect();
                FeatureBundle {
                    trajectory: Trajectory::new(frames).unwrap(),
                    projection_seed: seed,
                }
            })
        })
}

#[test]
fn header_layout() {
    let frames = vec![FeatureSequence::from_flat(0, 2, 3, vec![1.0; 6]).unwrap()];
    let b = FeatureBundle {
        trajectory: Trajectory::new(frames).unwrap(),
        projection_seed: Some(0x0102030405060708),
    };
    let bytes = b.to_bytes().unwrap();
    assert_eq!(&bytes[..4], b"STAB");
    assert_eq!(&bytes[4..6], &1u16.to_le_bytes());
    assert_eq!(&bytes[6..10], &1u32.to_le_bytes());
    assert_eq!(&bytes[10..12], &2u16.to_le_bytes());
    assert_eq!(&bytes[12..16], &3u32.to_le_bytes());
    assert_eq!(bytes[16], 1);
    assert_eq!(&bytes[17..25], &0x0102030405060708u64.to_le_bytes());
    assert_eq!(&bytes[25..29], &1.0f32.to_le_bytes());
    assert_eq!(bytes.len(), HEADER_LEN + 6 * 4 + 8);
}

#[test]
fn malformed_headers_are_rejected() {
    let frames = vec![FeatureSequence::from_flat(0, 2, 2, vec![0.5; 4]).unwrap()];
    let good = FeatureBundle::raw(Trajectory::new(frames).unwrap())
        .to_bytes()
        .unwrap();
    for (pos, value) in [(0, b'X'), (4, 9), (6, 2), (16, 7), (20, 1)] {
        let mut bad = good.clone();
        bad[pos] = value;
        assert!(
            matches!(FeatureBundle::from_bytes(&bad), Err(Error::Format(_))),
            "byte {pos}"
        );
    }
    assert!(FeatureBundle::from_bytes(&good[..good.len() - 1]).is_err());
    assert!(FeatureBundle::from_bytes(&good[..10]).is_err());
}

#[test]
fn compatibility_checks() {
    let t = |w, d| {
        Trajectory::new(vec![
            FeatureSequence::from_flat(0, w, d, vec![1.0; w * d]).unwrap()
        ])
        .unwrap()
    };
    let raw = FeatureBundle::raw(t(2, 2));
    let p1 = FeatureBundle {
        trajectory: t(2, 2),
        projection_seed: Some(1),
    };
    let p2 = FeatureBundle {
        trajectory: t(2, 2),
        projection_seed: Some(2),
    };
    assert!(matches!(
        p1.ensure_compatible(&p2),
        Err(Error::SeedMismatch { .. })
    ));
    assert!(matches!(
        raw.ensure_compatible(&p1),
        Err(Error::SeedMismatch { .. })
    ));
    assert!(matches!(
        raw.ensure_compatible(&FeatureBundle::raw(t(2, 3))),
        Err(Error::ShapeMismatch { .. })
    ));
    assert!(p1.ensure_compatible(&p1.clone()).is_ok());
}

#[test]
fn ground_truth_table() {
    let truth = vec![Some(0), None, Some(7), Some(7)];
    let mut buf = Vec::new();
    write_ground_truth(&mut buf, &truth, &["seed 4".to_string()]).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("# seed 4\n"));
    assert!(text.contains("1,-1"));
    assert_eq!(read_ground_truth(Cursor::new(buf)).unwrap(), truth);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gt.csv");
    save_ground_truth(&path, &truth, &[]).unwrap();
    assert_eq!(load_ground_truth(&path).unwrap(), truth);

    let gap = "query_index,reference_index\n0,1\n2,3\n";
    assert!(matches!(
        read_ground_truth(Cursor::new(gap)),
        Err(Error::GroundTruth(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn round_trip_is_bit_exact(b in bundle()) {
        let bytes = b.to_bytes().unwrap();
        let back = FeatureBundle::from_bytes(&bytes).unwrap();
        prop_assert_eq!(&back, &b);
        let mut via_io = Vec::new();
        back.write_to(&mut via_io).unwrap();
        prop_assert_eq!(&via_io, &bytes);
        prop_assert_eq!(FeatureBundle::read_from(Cursor::new(via_io)).unwrap(), b);
    }

    #[test]
    fn single_byte_flips_are_caught(b in bundle(), pick in any::<prop::sample::Index>(), mask in 1u8..=255) {
        let mut bytes = b.to_bytes().unwrap();
        let pos = HEADER_LEN + pick.index(bytes.len() - HEADER_LEN - 8);
        bytes[pos] ^= mask;
        let is_checksum = matches!(FeatureBundle::from_bytes(&bytes), Err(Error::Checksum { .. }));
        prop_assert!(is_checksum);
    }
}
