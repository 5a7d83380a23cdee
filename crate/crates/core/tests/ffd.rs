//! Bernstein basis and free-form deformation checks against hand oracles.

use approx::{assert_abs_diff_eq, assert_relative_eq};
use lattice_skin_core::ffd::{bernstein, FfdPrism};
use lattice_skin_core::geometry::{Aabb, Point, Vec3};
use lattice_skin_core::Error;

fn rnd(state: &mut u64) -> f64 {
    *state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    (*state >> 11) as f64 / (1u64 << 53) as f64
}

fn unit_box() -> Aabb {
    Aabb { min: Point::new(0.0, 0.0, 0.0), max: Point::new(1.0, 1.0, 1.0) }
}

#[test]
fn quadratic_basis_matches_hand_values() {
    let (values, _) = bernstein(2, 0.5).unwrap();
    assert_eq!(values.len(), 3);
    assert_abs_diff_eq!(values[0], 0.25, epsilon = 1e-15);
    assert_abs_diff_eq!(values[1], 0.5, epsilon = 1e-15);
    assert_abs_diff_eq!(values[2], 0.25, epsilon = 1e-15);

    for degree in 1..=5 {
        let (at0, _) = bernstein(degree, 0.0).unwrap();
        let (at1, _) = bernstein(degree, 1.0).unwrap();
        assert_eq!(at0[0], 1.0);
        assert_eq!(at1[degree], 1.0);
        assert!(at0[1..].iter().all(|&v| v == 0.0));
        assert!(at1[..degree].iter().all(|&v| v == 0.0));
    }
}

#[test]
fn basis_is_a_partition_of_unity() {
    let mut state = 7u64;
    for degree in 1..=5 {
        for _ in 0..20 {
            let xi = rnd(&mut state);
            let (values, derivatives) = bernstein(degree, xi).unwrap();
            let sum: f64 = values.iter().sum();
            let dsum: f64 = derivatives.iter().sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(dsum, 0.0, epsilon = 1e-12);
            assert!(values.iter().all(|&v| v >= 0.0));
        }
    }
}

#[test]
fn basis_derivatives_match_finite_differences() {
    let mut state = 42u64;
    let h = 1e-6;
    for degree in 1..=5 {
        for _ in 0..20 {
            let xi = h + rnd(&mut state) * (1.0 - 2.0 * h);
            let (_, derivatives) = bernstein(degree, xi).unwrap();
            let (plus, _) = bernstein(degree, xi + h).unwrap();
            let (minus, _) = bernstein(degree, xi - h).unwrap();
            for k in 0..=degree {
                let fd = (plus[k] - minus[k]) / (2.0 * h);
                assert_relative_eq!(derivatives[k], fd, epsilon = 1e-9, max_relative = 1e-8);
            }
        }
    }
}

#[test]
fn basis_rejects_out_of_domain_arguments() {
    assert!(matches!(bernstein(3, -0.01), Err(Error::OutOfDomain { .. })));
    assert!(matches!(bernstein(3, 1.01), Err(Error::OutOfDomain { .. })));
}

#[test]
fn prism_construction_validates_its_parameters() {
    assert!(matches!(
        FfdPrism::new(&unit_box(), [0, 2, 2], 0.0),
        Err(Error::InvalidParameter { .. })
    ));
    assert!(matches!(
        FfdPrism::new(&unit_box(), [2, 2, 2], -0.1),
        Err(Error::InvalidParameter { .. })
    ));
    let prism = FfdPrism::new(&unit_box(), [2, 3, 1], 0.0).unwrap();
    assert_eq!(prism.n_controls(), 3 * 4 * 2);
    assert_eq!(prism.degrees(), [2, 3, 1]);
}

#[test]
fn undisplaced_prism_maps_points_to_themselves() {
    let mut state = 3u64;
    for degrees in [[1, 1, 1], [2, 2, 2], [3, 2, 1]] {
        let prism = FfdPrism::new(&unit_box(), degrees, 0.01).unwrap();
        for _ in 0..25 {
            let p = Point::new(rnd(&mut state), rnd(&mut state), rnd(&mut state));
            let eta = prism.coordinates(p).unwrap();
            let mapped = prism.map(&eta).unwrap();
            assert_relative_eq!(mapped, p, epsilon = 1e-12);
            assert_abs_diff_eq!(prism.displacement(&eta).unwrap().norm(), 0.0);
        }
    }
}

#[test]
fn uniform_control_translation_shifts_every_point() {
    let mut state = 11u64;
    let mut prism = FfdPrism::new(&unit_box(), [2, 2, 2], 0.05).unwrap();
    let t = Vec3::new(0.3, -1.2, 0.7);
    for d in &mut prism.displacements {
        *d = t;
    }
    for _ in 0..25 {
        let p = Point::new(rnd(&mut state), rnd(&mut state), rnd(&mut state));
        let eta = prism.coordinates(p).unwrap();
        assert_relative_eq!(prism.map(&eta).unwrap(), p + t, epsilon = 1e-12);
        assert_relative_eq!(prism.displacement(&eta).unwrap(), t, epsilon = 1e-13);
    }
}

#[test]
fn degree_one_prism_interpolates_trilinearly() {
    let mut prism = FfdPrism::new(&unit_box(), [1, 1, 1], 0.0).unwrap();
    let mut state = 19u64;
    let moved = 5; // corner (i, j, l) = (1, 0, 1)
    let shift = Vec3::new(0.2, 0.4, -0.3);
    prism.displacements[moved] = shift;
    for _ in 0..25 {
        let (x, y, z) = (rnd(&mut state), rnd(&mut state), rnd(&mut state));
        let eta = prism.coordinates(Point::new(x, y, z)).unwrap();
        let weight = x * (1.0 - y) * z;
        let expected = Point::new(x, y, z) + weight * shift;
        assert_relative_eq!(prism.map(&eta).unwrap(), expected, epsilon = 1e-13);
    }
}

#[test]
fn control_grid_spans_the_inflated_box() {
    let aabb = Aabb { min: Point::new(1.0, 2.0, 3.0), max: Point::new(3.0, 6.0, 4.0) };
    let prism = FfdPrism::new(&aabb, [1, 1, 1], 0.25).unwrap();
    // A 25% margin on each side inflates the extents by half their size.
    assert_relative_eq!(prism.base_position(0), Point::new(0.5, 1.0, 2.75), epsilon = 1e-12);
    assert_relative_eq!(prism.base_position(7), Point::new(3.5, 7.0, 4.25), epsilon = 1e-12);
    assert_relative_eq!(
        prism.diagonal(),
        Vec3::new(3.0, 6.0, 1.5).norm(),
        max_relative = 1e-12
    );
}

#[test]
fn flat_geometry_gets_a_unit_thick_prism() {
    let aabb = Aabb { min: Point::new(0.0, 0.0, 0.0), max: Point::new(2.0, 1.0, 0.0) };
    let prism = FfdPrism::new(&aabb, [1, 1, 1], 0.0).unwrap();
    let eta = prism.coordinates(Point::new(1.0, 0.5, 0.0)).unwrap();
    assert_abs_diff_eq!(eta[2], 0.5, epsilon = 1e-12);
    assert_relative_eq!(
        prism.map(&eta).unwrap(),
        Point::new(1.0, 0.5, 0.0),
        epsilon = 1e-12
    );
}

#[test]
fn points_outside_the_prism_are_rejected() {
    let prism = FfdPrism::new(&unit_box(), [2, 2, 2], 0.0).unwrap();
    assert!(matches!(
        prism.coordinates(Point::new(1.5, 0.5, 0.5)),
        Err(Error::OutOfPrism { .. })
    ));
    assert!(matches!(
        prism.coordinates(Point::new(0.5, -0.2, 0.5)),
        Err(Error::OutOfPrism { .. })
    ));
    // Round-off just beyond a face clamps instead of failing.
    let eta = prism.coordinates(Point::new(1.0 + 1e-12, 0.5, 0.5)).unwrap();
    assert_eq!(eta[0], 1.0);
}
