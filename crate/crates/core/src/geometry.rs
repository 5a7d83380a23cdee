//! Basic geometric primitives: points, bounding boxes, tolerance-based
//! point deduplication.

use std::collections::HashMap;

pub type Point = nalgebra::Point3<f64>;
pub type Vec3 = nalgebra::Vector3<f64>;

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point,
    pub max: Point,
}

impl Aabb {
    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let mut aabb = Aabb { min: first, max: first };
        for p in it {
            for a in 0..3 {
                aabb.min[a] = aabb.min[a].min(p[a]);
                aabb.max[a] = aabb.max[a].max(p[a]);
            }
        }
        Some(aabb)
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn max_extent(&self) -> f64 {
        let e = self.extent();
        e[0].max(e[1]).max(e[2])
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }

    /// Grows the box by `frac` of its extent on every side. Axes with zero
    /// extent grow by `frac` of the largest extent so the box stays full rank.
    pub fn inflated(&self, frac: f64) -> Self {
        let e = self.extent();
        let fallback = self.max_extent().max(1.0);
        let mut out = *self;
        for a in 0..3 {
            let pad = frac * if e[a] > 0.0 { e[a] } else { fallback };
            out.min[a] -= pad;
            out.max[a] += pad;
        }
        out
    }

    pub fn contains(&self, p: &Point, tol: f64) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] - tol && p[a] <= self.max[a] + tol)
    }

    /// Euclidean distance from a point to the box, zero inside.
    pub fn distance(&self, p: &Point) -> f64 {
        let mut d2 = 0.0;
        for a in 0..3 {
            let g = (self.min[a] - p[a]).max(0.0).max(p[a] - self.max[a]);
            d2 += g * g;
        }
        d2.sqrt()
    }
}

/// Spatial hash that assigns an id to each distinct point, merging points
/// closer than `tol`. Ids are issued in insertion order, so the result is
/// deterministic for a fixed insertion sequence.
pub struct MergeGrid {
    tol: f64,
    cell: f64,
    map: HashMap<(i64, i64, i64), Vec<usize>>,
    points: Vec<Point>,
}

impl MergeGrid {
    pub fn new(tol: f64) -> Self {
        assert!(tol > 0.0, "merge tolerance must be positive");
        MergeGrid {
            tol,
            // Cell edge at least 2*tol so near-duplicates are always in the
            // same or a neighbouring cell.
            cell: 2.0 * tol,
            map: HashMap::new(),
            points: Vec::new(),
        }
    }

    fn key(&self, p: &Point) -> (i64, i64, i64) {
        (
            (p.x / self.cell).floor() as i64,
            (p.y / self.cell).floor() as i64,
            (p.z / self.cell).floor() as i64,
        )
    }

    /// Returns the id of `p`, inserting it if no existing point lies within
    /// the merge tolerance. Ties go to the earliest inserted point.
    pub fn insert(&mut self, p: Point) -> usize {
        let (kx, ky, kz) = self.key(&p);
        let mut best: Option<(usize, f64)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = self.map.get(&(kx + dx, ky + dy, kz + dz)) {
                        for &id in ids {
                            let d = (self.points[id] - p).norm();
                            if d <= self.tol && best.map_or(true, |(bid, bd)| d < bd || (d == bd && id < bid)) {
                                best = Some((id, d));
                            }
                        }
                    }
                }
            }
        }
        if let Some((id, _)) = best {
            return id;
        }
        let id = self.points.len();
        self.points.push(p);
        self.map.entry((kx, ky, kz)).or_default().push(id);
        id
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
