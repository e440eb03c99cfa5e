use proptest::prelude::*;

use ier_sim::road::{conflict_zone, generate_map, load_map, minimal_map, save_map, validate, MapGenParams, SWEEP_WIDTH};

fn area(poly: &[ier_sim::geometry::Vec2]) -> f64 {
    let n = poly.len();
    (0..n).map(|i| poly[i].x * poly[(i + 1) % n].y - poly[(i + 1) % n].x * poly[i].y).sum::<f64>().abs() / 2.0
}

#[test]
fn generated_maps_validate() {
    let p = MapGenParams::default();
    for seed in 0..100 {
        let net = generate_map(seed, &p).unwrap();
        let r = validate(&net);
        assert!(r.is_valid(), "seed {seed}: {:?}", r.errors);
    }
}

#[test]
fn conflicts_are_symmetric() {
    for net in [minimal_map(), generate_map(5, &MapGenParams::default()).unwrap()] {
        let mut n = 0;
        for a in &net.movements {
            for c in &a.conflicts {
                let back = net.conflict(c.other, a.id).expect("reverse conflict entry");
                assert_eq!(back.other, a.id);
                assert_eq!(back.zone, c.zone);
                assert_eq!((back.span, back.other_span), (c.other_span, c.span));
                let b = net.movement(c.other);
                let (pa, sa, sb) = conflict_zone(&a.path, &b.path, SWEEP_WIDTH / 2.0).unwrap();
                let (pb, tb, ta) = conflict_zone(&b.path, &a.path, SWEEP_WIDTH / 2.0).unwrap();
                assert_eq!((sa, sb), (ta, tb));
                assert!((area(&pa) - area(&pb)).abs() < 1e-9);
                n += 1;
            }
        }
        assert!(n > 0);
    }
}

#[test]
fn map_file_roundtrip() {
    let net = generate_map(9, &MapGenParams::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("map.json");
    save_map(&net, &path).unwrap();
    assert_eq!(load_map(&path).unwrap(), net);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generation_is_a_function_of_seed_and_params(seed in any::<u64>(), density in 0.0f64..0.9, removal in 0.0f64..0.4) {
        let p = MapGenParams { building_density: density, edge_removal: removal, ..MapGenParams::default() };
        let a = generate_map(seed, &p).unwrap();
        let b = generate_map(seed, &p).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(validate(&a).is_valid());
    }
}
