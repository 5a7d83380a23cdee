//! Uniform cubic B-spline basis segments and the quadrature rule used by
//! all shell integrals.

/// The four uniform cubic B-spline segment polynomials on t in [0,1].
pub fn cubic(t: f64) -> [f64; 4] {
    let s = 1.0 - t;
    [
        s * s * s / 6.0,
        (3.0 * t * t * t - 6.0 * t * t + 4.0) / 6.0,
        (-3.0 * t * t * t + 3.0 * t * t + 3.0 * t + 1.0) / 6.0,
        t * t * t / 6.0,
    ]
}

pub fn cubic_d1(t: f64) -> [f64; 4] {
    let s = 1.0 - t;
    [-0.5 * s * s, 0.5 * (3.0 * t * t - 4.0 * t), 0.5 * (-3.0 * t * t + 2.0 * t + 1.0), 0.5 * t * t]
}

pub fn cubic_d2(t: f64) -> [f64; 4] {
    [1.0 - t, 3.0 * t - 2.0, -3.0 * t + 1.0, t]
}

/// 3-point Gauss-Legendre rule mapped to [0,1]: (abscissa, weight).
pub fn gauss3() -> [(f64, f64); 3] {
    let d = 0.5 * (0.6f64).sqrt();
    [(0.5 - d, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + d, 5.0 / 18.0)]
}
