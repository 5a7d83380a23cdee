//! Trivariate Bernstein free-form deformation.
//!
//! The design geometry is immersed in a box-shaped control prism carrying a
//! uniform grid of control points. Each immersed point keeps fixed local
//! coordinates in the prism; displacing control points deforms every immersed
//! point through the tensor-product Bernstein basis. Linear precision of the
//! basis on the uniform grid makes the undisplaced map the exact identity.

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Point, Vec3};

/// Bernstein basis values and derivatives of the given degree at `xi`.
pub fn bernstein(degree: usize, xi: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(Error::OutOfDomain { value: xi, lo: 0.0, hi: 1.0 });
    }
    let values = bernstein_values(degree, xi);
    let derivatives = if degree == 0 {
        vec![0.0]
    } else {
        let lower = bernstein_values(degree - 1, xi);
        let mut d = vec![0.0; degree + 1];
        let scale = degree as f64;
        for k in 0..=degree {
            let mut v = 0.0;
            if k > 0 {
                v += lower[k - 1];
            }
            if k < degree {
                v -= lower[k];
            }
            d[k] = scale * v;
        }
        d
    };
    Ok((values, derivatives))
}

fn bernstein_values(degree: usize, xi: f64) -> Vec<f64> {
    // De Casteljau style recurrence; stable and exact at the endpoints.
    let mut b = vec![0.0; degree + 1];
    b[0] = 1.0;
    for level in 1..=degree {
        b[level] = xi * b[level - 1];
        for k in (1..level).rev() {
            b[k] = xi * b[k - 1] + (1.0 - xi) * b[k];
        }
        b[0] *= 1.0 - xi;
    }
    b
}

/// A box-shaped control prism over a uniform Bernstein control grid.
///
/// Control points are indexed x-fastest: `k = i + (n1+1)(j + (n2+1) l)`.
#[derive(Debug, Clone)]
pub struct FfdPrism {
    origin: Point,
    extent: Vec3,
    degrees: [usize; 3],
    /// Displacement of each control point from its grid position.
    pub displacements: Vec<Vec3>,
    /// Control points excluded from design changes; displacement stays zero.
    pub fixed: Vec<bool>,
}

impl FfdPrism {
    /// Builds an undeformed prism covering `aabb` inflated by the given
    /// relative margin, so immersed points sit strictly inside.
    pub fn new(aabb: &Aabb, degrees: [usize; 3], inflate: f64) -> Result<Self> {
        if degrees.iter().any(|&d| d < 1) {
            return Err(Error::InvalidParameter {
                what: "prism degree".into(),
                value: *degrees.iter().min().unwrap() as f64,
                expected: "at least 1 per direction".into(),
            });
        }
        if !(inflate >= 0.0) {
            return Err(Error::InvalidParameter {
                what: "prism inflation".into(),
                value: inflate,
                expected: "a non-negative fraction".into(),
            });
        }
        let inflated = aabb.inflated(inflate);
        let mut origin = inflated.min;
        let mut extent = inflated.max - inflated.min;
        for a in 0..3 {
            // Flat axes get a unit-thick prism centred on the geometry.
            if extent[a] <= 0.0 {
                origin[a] -= 0.5;
                extent[a] = 1.0;
            }
        }
        let n = (degrees[0] + 1) * (degrees[1] + 1) * (degrees[2] + 1);
        Ok(FfdPrism {
            origin,
            extent,
            degrees,
            displacements: vec![Vec3::zeros(); n],
            fixed: vec![false; n],
        })
    }

    pub fn degrees(&self) -> [usize; 3] {
        self.degrees
    }

    pub fn n_controls(&self) -> usize {
        self.displacements.len()
    }

    pub fn diagonal(&self) -> f64 {
        self.extent.norm()
    }

    /// Grid position of a control point before displacement.
    pub fn base_position(&self, k: usize) -> Point {
        let n1 = self.degrees[0] + 1;
        let n2 = self.degrees[1] + 1;
        let (i, j, l) = (k % n1, (k / n1) % n2, k / (n1 * n2));
        let frac = Vec3::new(
            i as f64 / self.degrees[0] as f64,
            j as f64 / self.degrees[1] as f64,
            l as f64 / self.degrees[2] as f64,
        );
        self.origin + frac.component_mul(&self.extent)
    }

    /// Local prism coordinates of an immersed point.
    pub fn coordinates(&self, point: Point) -> Result<[f64; 3]> {
        let mut eta = [0.0; 3];
        for a in 0..3 {
            let t = (point[a] - self.origin[a]) / self.extent[a];
            if !(-1e-9..=1.0 + 1e-9).contains(&t) {
                return Err(Error::OutOfPrism { x: point.x, y: point.y, z: point.z });
            }
            eta[a] = t.clamp(0.0, 1.0);
        }
        Ok(eta)
    }

    /// Tensor-product basis weight of every control point at `eta`.
    pub fn weights(&self, eta: &[f64; 3]) -> Result<Vec<f64>> {
        let bx = bernstein(self.degrees[0], eta[0])?.0;
        let by = bernstein(self.degrees[1], eta[1])?.0;
        let bz = bernstein(self.degrees[2], eta[2])?.0;
        let mut w = Vec::with_capacity(self.n_controls());
        for &wz in &bz {
            for &wy in &by {
                for &wx in &bx {
                    w.push(wx * wy * wz);
                }
            }
        }
        Ok(w)
    }

    /// Deformed position of the point with local coordinates `eta`.
    pub fn map(&self, eta: &[f64; 3]) -> Result<Point> {
        let w = self.weights(eta)?;
        let mut x = Vec3::zeros();
        for (k, &wk) in w.iter().enumerate() {
            x += wk * (self.base_position(k).coords + self.displacements[k]);
        }
        Ok(Point::from(x))
    }

    /// Displacement of the point with local coordinates `eta`; the identity
    /// part of the map is skipped, so zero displacements give exactly zero.
    pub fn displacement(&self, eta: &[f64; 3]) -> Result<Vec3> {
        let w = self.weights(eta)?;
        let mut d = Vec3::zeros();
        for (k, &wk) in w.iter().enumerate() {
            d += wk * self.displacements[k];
        }
        Ok(d)
    }
}
