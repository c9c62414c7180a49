use proptest::prelude::*;
use shiftlab_core::gibbs::{base_masses, WeightModel};
use shiftlab_core::metric::{
    cylinder_diameter, depth_for_scale, shift_distance, MetricParams, Point, TOLERANCE,
};
use shiftlab_core::natcover::NatCover;
use shiftlab_core::product::ProductCover;

fn symbol() -> impl Strategy<Value = u64> {
    prop_oneof![1u64..6, 1u64..200, 1u64..u32::MAX as u64]
}

fn point() -> impl Strategy<Value = Point> {
    (prop::collection::vec(symbol(), 0..8), symbol()).prop_map(|(p, t)| Point::new(p, t).unwrap())
}

fn params() -> impl Strategy<Value = MetricParams> {
    prop_oneof![
        (0.05f64..0.95).prop_map(|t| MetricParams::d1(t).unwrap()),
        (0.05f64..0.95, 0.1f64..3.0).prop_map(|(t, a)| MetricParams::d2(t, a).unwrap()),
    ]
}

proptest! {
    #[test]
    fn metric_axioms(x in point(), y in point(), z in point(), p in params()) {
        let d = |a: &Point, b: &Point| shift_distance(a, b, &p);
        prop_assert_eq!(d(&x, &x), 0.0);
        prop_assert_eq!(d(&x, &y), d(&y, &x));
        prop_assert!(d(&x, &z) <= (d(&x, &y) + d(&y, &z)) * (1.0 + 1e-12) + 1e-300);
        prop_assert!(d(&x, &y) >= 0.0);
    }

    #[test]
    fn cylinders_respect_their_diameter(
        head in prop::collection::vec(symbol(), 1..6),
        a in point(),
        b in point(),
        p in params(),
    ) {
        let k = head.len();
        let glue = |q: &Point| {
            let mut v = head.clone();
            v.extend((0..6).map(|n| q.coord(n)));
            Point::new(v, q.tail()).unwrap()
        };
        let d = shift_distance(&glue(&a), &glue(&b), &p);
        prop_assert!(d <= cylinder_diameter(k, &p) * (1.0 + TOLERANCE));
    }

    #[test]
    fn alphabet_cover_partitions(delta in 1e-4f64..0.9, p in params()) {
        let cover = NatCover::anchored(delta, p.base());
        prop_assume!(cover.is_ok());
        let cover = cover.unwrap();
        prop_assert!(cover.validate().is_ok());
        let cells = cover.cells();
        prop_assert_eq!(cells[0].lo, 1);
        for w in cells.windows(2) {
            prop_assert_eq!(w[0].hi.unwrap() + 1, w[1].lo);
        }
        prop_assert!(cells.last().unwrap().is_tail());
        for n in [1u64, 2, 7, 50, 1000, 1 << 40] {
            prop_assert!(cells[cover.cell_of(n)].contains(n));
        }
        for c in cells {
            prop_assert!(c.diameter(&p.base()) <= delta * (1.0 + TOLERANCE));
        }
    }

    #[test]
    fn encode_decode_round_trip(delta in 0.05f64..0.6, seed in any::<u64>()) {
        let cover = ProductCover::build(delta, MetricParams::d1(0.5).unwrap(), 1 << 24);
        prop_assume!(cover.is_ok());
        let cover = cover.unwrap();
        let id = shiftlab_core::product::CellId(seed % cover.cell_count());
        let t = cover.decode(id);
        prop_assert!(t.iter().all(|&i| i < cover.alphabet_size()));
        prop_assert_eq!(cover.encode(&t), id);
    }

    #[test]
    fn depth_is_monotone(a in 1e-6f64..0.4, b in 1e-6f64..0.4, p in params()) {
        let (fine, coarse) = if a < b { (a, b) } else { (b, a) };
        if let (Ok(kf), Ok(kc)) = (depth_for_scale(fine, &p), depth_for_scale(coarse, &p)) {
            prop_assert!(kf >= kc);
            prop_assert!(cylinder_diameter(kf, &p) <= fine * (1.0 + TOLERANCE));
        }
    }

    #[test]
    fn points_sharing_a_cell_are_close(x in point(), y in point(), delta in 0.05f64..0.6) {
        let p = MetricParams::d1(0.5).unwrap();
        let cover = ProductCover::build(delta, p, u64::MAX).unwrap();
        if cover.point_cell(&x) == cover.point_cell(&y) {
            let d = shift_distance(&x, &y, &p);
            prop_assert!(d <= cover.sandwich_constant() * delta * (1.0 + TOLERANCE));
        }
    }

    #[test]
    fn alphabet_masses_normalize(delta in 1e-3f64..0.9, kappa in 1.2f64..4.0) {
        let cover = NatCover::anchored(delta, MetricParams::d1(0.5).unwrap().base()).unwrap();
        for m in [WeightModel::Geometric, WeightModel::power_law(kappa).unwrap()] {
            let total: f64 = base_masses(&cover, &m).iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-9, "{m}: {total}");
        }
    }
}
