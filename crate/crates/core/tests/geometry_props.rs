use std::f64::consts::{PI, TAU};

use eelar_core::geometry::{area_of, area_of_position, bearing, distance, AreaId, Position};
use proptest::prelude::*;

/// The six wedges written out by hand, boundaries included in the lower area.
fn six_sector_table(theta: f64) -> u32 {
    if theta < PI / 3.0 {
        1
    } else if theta < 2.0 * PI / 3.0 {
        2
    } else if theta < PI {
        3
    } else if theta < 4.0 * PI / 3.0 {
        4
    } else if theta < 5.0 * PI / 3.0 {
        5
    } else {
        6
    }
}

fn coord() -> impl Strategy<Value = f64> {
    -2000.0..2000.0f64
}

proptest! {
    #[test]
    fn area_matches_six_sector_table(theta in 0.0..TAU) {
        prop_assert_eq!(area_of(theta, 6).unwrap(), AreaId(six_sector_table(theta)));
    }

    #[test]
    fn area_in_range_for_any_k(theta in 0.0..TAU, k in 1u32..64) {
        let a = area_of(theta, k).unwrap().0;
        prop_assert!((1..=k).contains(&a));
    }

    #[test]
    fn bearing_is_normalized(ax in coord(), ay in coord(), bx in coord(), by in coord()) {
        let (a, b) = (Position::new(ax, ay), Position::new(bx, by));
        prop_assume!(a != b);
        let t = bearing(a, b).unwrap();
        prop_assert!((0.0..TAU).contains(&t));
    }

    #[test]
    fn polar_round_trip(ax in coord(), ay in coord(), bx in coord(), by in coord()) {
        let (a, b) = (Position::new(ax, ay), Position::new(bx, by));
        prop_assume!(distance(a, b) > 1e-6);
        let back = a.offset_polar(distance(a, b), bearing(a, b).unwrap());
        let scale = 1.0 + a.x.abs().max(a.y.abs()).max(b.x.abs()).max(b.y.abs());
        prop_assert!((back.x - b.x).abs() <= 1e-9 * scale);
        prop_assert!((back.y - b.y).abs() <= 1e-9 * scale);
    }

    #[test]
    fn distance_symmetric_and_triangle(ax in coord(), ay in coord(), bx in coord(), by in coord(), cx in coord(), cy in coord()) {
        let (a, b, c) = (Position::new(ax, ay), Position::new(bx, by), Position::new(cx, cy));
        prop_assert_eq!(distance(a, b), distance(b, a));
        prop_assert!(distance(a, c) <= distance(a, b) + distance(b, c) + 1e-9);
    }

    #[test]
    fn sectors_partition_the_plane(x in coord(), y in coord(), k in 1u32..21) {
        let c = Position::new(750.0, 750.0);
        let a = area_of_position(c, Position::new(x, y), k).unwrap();
        prop_assert!(a.0 >= 1 && a.0 <= k);
    }
}

#[test]
fn table_boundaries() {
    for (theta, want) in [(0.0, 1), (PI / 3.0, 2), (PI, 4), (5.0 * PI / 3.0, 6), (TAU - 1e-12, 6)] {
        assert_eq!(area_of(theta, 6).unwrap(), AreaId(want), "theta {theta}");
    }
    assert!(area_of(TAU, 6).is_err());
    assert!(area_of(-0.1, 6).is_err());
}
