//! Penalisation curves: values, slopes, continuity at the joins,
//! monotonicity, and an independent de Casteljau oracle.

use lattice_skin_core::penalise::{Penalisation, RHO_MIN};

/// Degree-5 Bezier ordinate evaluation by repeated linear interpolation.
fn de_casteljau(b: &[f64; 6], t: f64) -> f64 {
    let mut v = *b;
    for level in (1..6).rev() {
        for k in 0..level {
            v[k] = (1.0 - t) * v[k] + t * v[k + 1];
        }
    }
    v[0]
}

fn central_diff(p: &Penalisation, rho: f64, h: f64) -> f64 {
    (p.value(rho + h) - p.value(rho - h)) / (2.0 * h)
}

#[test]
fn power_values_and_slope() {
    let p = Penalisation::power(3.0).unwrap();
    assert!((p.value(0.5) - 0.125).abs() < 1e-15);
    assert!((p.value(1.0) - 1.0).abs() < 1e-15);
    // Above full density the map continues as the identity.
    assert!((p.value(1.2) - 1.2).abs() < 1e-15);
    assert_eq!(p.derivative(1.5), 1.0);
    assert!((p.derivative(0.5) - 3.0 * 0.25).abs() < 1e-15);
    assert!(Penalisation::power(0.5).is_err());
}

#[test]
fn bezier_presets_interpolate_expected_join_values() {
    for (idx, join) in [(1, 0.30), (2, 0.25), (3, 1.0 / 6.0)] {
        let p = Penalisation::bezier_preset(idx).unwrap();
        assert!(p.value(0.0).abs() < 1e-15);
        assert!((p.value(0.5) - join).abs() < 1e-14, "preset {idx}");
        assert!((p.value(1.0) - 1.0).abs() < 1e-14, "preset {idx}");
    }
    assert!(Penalisation::bezier_preset(0).is_err());
    assert!(Penalisation::bezier_preset(4).is_err());
}

#[test]
fn bezier_matches_de_casteljau_below_the_join() {
    for idx in 1..=3 {
        let p = Penalisation::bezier_preset(idx).unwrap();
        let Penalisation::Bezier { ordinates } = p else { unreachable!() };
        for i in 0..=50 {
            let rho = 0.5 * i as f64 / 50.0;
            let oracle = de_casteljau(&ordinates, 2.0 * rho);
            assert!(
                (p.value(rho) - oracle).abs() < 1e-14,
                "preset {idx} at rho {rho}: {} vs {oracle}",
                p.value(rho)
            );
        }
    }
}

#[test]
fn bezier_is_smooth_at_the_join() {
    for idx in 1..=3 {
        let p = Penalisation::bezier_preset(idx).unwrap();
        let h = 1e-7;
        let left = (p.value(0.5) - p.value(0.5 - h)) / h;
        let right = (p.value(0.5 + h) - p.value(0.5)) / h;
        assert!((left - right).abs() < 1e-6, "preset {idx}: slopes {left} vs {right}");
        assert!((p.derivative(0.5 - 1e-12) - p.derivative(0.5)).abs() < 1e-9);
    }
}

#[test]
fn derivatives_match_finite_differences() {
    let candidates = [
        Penalisation::power(2.0).unwrap(),
        Penalisation::power(4.0).unwrap(),
        Penalisation::bezier_preset(1).unwrap(),
        Penalisation::bezier_preset(3).unwrap(),
    ];
    for p in candidates {
        for i in 1..40 {
            let rho = i as f64 / 41.0;
            let fd = central_diff(&p, rho, 1e-6);
            assert!(
                (p.derivative(rho) - fd).abs() < 1e-6 * fd.abs().max(1.0),
                "{p:?} at {rho}: {} vs {}",
                p.derivative(rho),
                fd
            );
        }
    }
}

#[test]
fn maps_are_monotone_and_bounded_by_density() {
    let candidates = [
        Penalisation::power(2.0).unwrap(),
        Penalisation::power(4.0).unwrap(),
        Penalisation::bezier_preset(1).unwrap(),
        Penalisation::bezier_preset(2).unwrap(),
        Penalisation::bezier_preset(3).unwrap(),
    ];
    for p in candidates {
        let mut prev = -1.0;
        for i in 0..=100 {
            let rho = i as f64 / 100.0;
            let v = p.value(rho);
            assert!(v >= prev - 1e-15, "{p:?} not monotone at {rho}");
            assert!(v <= rho + 1e-14, "{p:?} exceeds identity at {rho}");
            assert!(p.derivative(rho) >= -1e-15);
            prev = v;
        }
    }
    assert!(RHO_MIN > 0.0 && RHO_MIN < 1e-3);
}
