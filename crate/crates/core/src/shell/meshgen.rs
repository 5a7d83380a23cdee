//! Built-in control meshes: rectangular grids and the pentagon roof fan.

use std::collections::HashMap;

use crate::geometry::{Point, Vec3};

use super::mesh::ShellMesh;

/// Rectangular grid of quads spanned by two edge vectors. Vertex (i, j)
/// sits at `origin + i/nx * ex + j/ny * ey`; faces are counter-clockwise
/// when `ex x ey` points toward the viewer.
pub fn rect_grid(origin: Point, ex: Vec3, ey: Vec3, nx: usize, ny: usize) -> ShellMesh {
    assert!(nx >= 1 && ny >= 1);
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let u = i as f64 / nx as f64;
            let v = j as f64 / ny as f64;
            vertices.push(origin + u * ex + v * ey);
        }
    }
    let at = |i: usize, j: usize| j * (nx + 1) + i;
    let mut faces = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            faces.push([at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)]);
        }
    }
    ShellMesh { vertices, faces }
}

/// Splits every quad in four, keeping vertices in place (linear midpoint
/// refinement of the control net, not a subdivision step).
pub fn refine_linear(mesh: &ShellMesh) -> ShellMesh {
    let mut vertices = mesh.vertices.clone();
    let mut edge_mid: HashMap<(usize, usize), usize> = HashMap::new();
    let mut mid = |a: usize, b: usize, vertices: &mut Vec<Point>| -> usize {
        let key = (a.min(b), a.max(b));
        *edge_mid.entry(key).or_insert_with(|| {
            let p = Point::from((vertices[a].coords + vertices[b].coords) * 0.5);
            vertices.push(p);
            vertices.len() - 1
        })
    };
    let mut faces = Vec::with_capacity(4 * mesh.faces.len());
    for f in &mesh.faces {
        let [a, b, c, d] = *f;
        let ab = mid(a, b, &mut vertices);
        let bc = mid(b, c, &mut vertices);
        let cd = mid(c, d, &mut vertices);
        let da = mid(d, a, &mut vertices);
        let centre = {
            let p = Point::from(
                (vertices[a].coords + vertices[b].coords + vertices[c].coords + vertices[d].coords) * 0.25,
            );
            vertices.push(p);
            vertices.len() - 1
        };
        faces.push([a, ab, centre, da]);
        faces.push([ab, b, bc, centre]);
        faces.push([centre, bc, c, cd]);
        faces.push([da, centre, cd, d]);
    }
    ShellMesh { vertices, faces }
}

/// Flat pentagon fan in the z = 0 plane: five quads joining the centre,
/// the edge midpoints and the outer corners, then linearly refined. The
/// centre is the only extraordinary vertex (valence 5).
pub fn pentagon_fan(circumradius: f64, refinements: usize) -> ShellMesh {
    let n = 5;
    let mut vertices = vec![Point::origin()];
    let corner: Vec<Point> = (0..n)
        .map(|i| {
            let ang = std::f64::consts::TAU * i as f64 / n as f64;
            Point::new(circumradius * ang.cos(), circumradius * ang.sin(), 0.0)
        })
        .collect();
    let mid: Vec<Point> = (0..n)
        .map(|i| Point::from((corner[i].coords + corner[(i + 1) % n].coords) * 0.5))
        .collect();
    let corner_ids: Vec<usize> = corner
        .iter()
        .map(|&p| {
            vertices.push(p);
            vertices.len() - 1
        })
        .collect();
    let mid_ids: Vec<usize> = mid
        .iter()
        .map(|&p| {
            vertices.push(p);
            vertices.len() - 1
        })
        .collect();
    let mut faces = Vec::with_capacity(n);
    for i in 0..n {
        let prev = (i + n - 1) % n;
        faces.push([0, mid_ids[prev], corner_ids[i], mid_ids[i]]);
    }
    let mut mesh = ShellMesh { vertices, faces };
    for _ in 0..refinements {
        mesh = refine_linear(&mesh);
    }
    mesh
}

/// Vertex ids of the outer pentagon edge midpoints, in fan order. These
/// are the roof support locations and survive refinement in place.
pub fn pentagon_edge_midpoints() -> [usize; 5] {
    // Construction order above: centre, 5 corners, 5 midpoints.
    [6, 7, 8, 9, 10]
}
