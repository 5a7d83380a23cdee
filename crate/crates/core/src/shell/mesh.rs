//! Quad control meshes and the extended mesh with one ring of reflected
//! ghost vertices along the boundary.
//!
//! Ghost vertices make every boundary face regular, so the limit surface
//! interpolates a cubic B-spline curve through the boundary control rows.
//! Each ghost is an affine combination of real vertices; all downstream
//! basis evaluations resolve to real control points through `expansions`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Control mesh: quad faces over shared vertices, consistently oriented.
#[derive(Debug, Clone)]
pub struct ShellMesh {
    pub vertices: Vec<Point>,
    pub faces: Vec<[usize; 4]>,
}

/// Mesh plus ghost ring, with full adjacency. Vertex ids < `n_real_verts`
/// are control vertices; higher ids are ghosts.
pub struct ExtMesh {
    pub n_real_verts: usize,
    pub n_real_faces: usize,
    pub faces: Vec<[usize; 4]>,
    /// Real-vertex expansion of every extended vertex.
    pub expansions: Vec<Vec<(usize, f64)>>,
    /// Incident faces per extended vertex, ascending.
    pub vert_faces: Vec<Vec<usize>>,
    /// Undirected edge to incident faces.
    pub edge_faces: HashMap<(usize, usize), [Option<usize>; 2]>,
    /// True for real vertices on the original mesh boundary.
    pub boundary_vertex: Vec<bool>,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl ShellMesh {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }
}

impl ExtMesh {
    pub fn build(mesh: &ShellMesh) -> Result<ExtMesh> {
        let nv = mesh.vertices.len();
        for (fi, f) in mesh.faces.iter().enumerate() {
            for &v in f {
                if v >= nv {
                    return Err(Error::BadMesh { reason: format!("face {fi} references vertex {v}") });
                }
            }
            for i in 0..4 {
                for j in i + 1..4 {
                    if f[i] == f[j] {
                        return Err(Error::BadMesh { reason: format!("face {fi} repeats a vertex") });
                    }
                }
            }
        }

        // Directed edges must be unique and each undirected edge must have
        // at most two faces: manifold with consistent orientation.
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edge_faces: HashMap<(usize, usize), [Option<usize>; 2]> = HashMap::new();
        for (fi, f) in mesh.faces.iter().enumerate() {
            for k in 0..4 {
                let (a, b) = (f[k], f[(k + 1) % 4]);
                if directed.insert((a, b), fi).is_some() {
                    return Err(Error::BadMesh {
                        reason: format!("edge ({a},{b}) traversed twice in the same direction; orientation is inconsistent"),
                    });
                }
                let slot = edge_faces.entry(edge_key(a, b)).or_insert([None, None]);
                if slot[0].is_none() {
                    slot[0] = Some(fi);
                } else if slot[1].is_none() {
                    slot[1] = Some(fi);
                } else {
                    return Err(Error::BadMesh { reason: format!("edge ({a},{b}) shared by 3+ faces") });
                }
            }
        }

        let mut vert_faces: Vec<Vec<usize>> = vec![Vec::new(); nv];
        for (fi, f) in mesh.faces.iter().enumerate() {
            for &v in f {
                vert_faces[v].push(fi);
            }
        }
        let mut vert_edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nv];
        for &(a, b) in edge_faces.keys() {
            vert_edges[a].push((a, b));
            vert_edges[b].push((a, b));
        }

        let mut boundary_vertex = vec![false; nv];
        for (&e, fs) in &edge_faces {
            if fs[1].is_none() {
                boundary_vertex[e.0] = true;
                boundary_vertex[e.1] = true;
            }
        }

        for v in 0..nv {
            let nf = vert_faces[v].len();
            let ne = vert_edges[v].len();
            if nf == 0 {
                return Err(Error::BadMesh { reason: format!("vertex {v} belongs to no face") });
            }
            if boundary_vertex[v] {
                // Supported boundary vertices: corner (1 face, 2 edges) or
                // regular (2 faces, 3 edges).
                if !(nf == 1 && ne == 2 || nf == 2 && ne == 3) {
                    return Err(Error::BadMesh {
                        reason: format!(
                            "boundary vertex {v} has {nf} faces and {ne} edges; only regular boundary vertices are supported"
                        ),
                    });
                }
            } else if nf != ne {
                return Err(Error::BadMesh { reason: format!("vertex {v} neighbourhood is not a closed fan") });
            }
        }

        // Interior fans must be connected (reject bowties).
        for v in 0..nv {
            if boundary_vertex[v] || vert_faces[v].len() <= 1 {
                continue;
            }
            let mut visited = vec![mesh.faces[vert_faces[v][0]]];
            let mut seen = vec![vert_faces[v][0]];
            while let Some(f) = visited.pop() {
                let k = f.iter().position(|&x| x == v).unwrap();
                for nb in [f[(k + 1) % 4], f[(k + 3) % 4]] {
                    let fs = edge_faces[&edge_key(v, nb)];
                    for of in fs.into_iter().flatten() {
                        if !seen.contains(&of) {
                            seen.push(of);
                            visited.push(mesh.faces[of]);
                        }
                    }
                }
            }
            if seen.len() != vert_faces[v].len() {
                return Err(Error::BadMesh { reason: format!("vertex {v} fan is disconnected") });
            }
        }

        // Extraordinary vertices must be interior, and a face may contain
        // at most one of them.
        for (fi, f) in mesh.faces.iter().enumerate() {
            let mut evs = 0;
            for &v in f {
                if !boundary_vertex[v] && vert_faces[v].len() != 4 {
                    evs += 1;
                }
                if boundary_vertex[v] && vert_faces[v].len() > 2 {
                    return Err(Error::BadMesh { reason: format!("vertex {v} is extraordinary on the boundary") });
                }
            }
            if evs > 1 {
                return Err(Error::BadMesh { reason: format!("face {fi} touches {evs} extraordinary vertices") });
            }
        }

        // Ghost ring: one reflected vertex row per boundary edge, plus the
        // diagonal reflection at each corner. Ghost 2a-b is keyed by (a,b).
        let mut expansions: Vec<Vec<(usize, f64)>> = (0..nv).map(|v| vec![(v, 1.0)]).collect();
        let mut ghost_ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut faces = mesh.faces.clone();
        let n_real_faces = faces.len();

        let mut ghost = |expansions: &mut Vec<Vec<(usize, f64)>>, a: usize, b: usize| -> usize {
            *ghost_ids.entry((a, b)).or_insert_with(|| {
                expansions.push(vec![(a, 2.0), (b, -1.0)]);
                expansions.len() - 1
            })
        };

        // Deterministic order: walk faces, then their edges.
        for fi in 0..n_real_faces {
            let f = mesh.faces[fi];
            for k in 0..4 {
                let (a, b) = (f[k], f[(k + 1) % 4]);
                if edge_faces[&edge_key(a, b)][1].is_some() {
                    continue;
                }
                let c = f[(k + 2) % 4];
                let d = f[(k + 3) % 4];
                let ga = ghost(&mut expansions, a, d);
                let gb = ghost(&mut expansions, b, c);
                faces.push([b, a, ga, gb]);
            }
        }
        for v in 0..nv {
            if !(boundary_vertex[v] && vert_faces[v].len() == 1) {
                continue;
            }
            let f = mesh.faces[vert_faces[v][0]];
            let k = f.iter().position(|&x| x == v).unwrap();
            let m1 = f[(k + 1) % 4];
            let dd = f[(k + 2) % 4];
            let m2 = f[(k + 3) % 4];
            let g1 = ghost(&mut expansions, v, m1);
            let gd = ghost(&mut expansions, v, dd);
            let g2 = ghost(&mut expansions, v, m2);
            faces.push([v, g1, gd, g2]);
        }

        // Rebuild adjacency over the extended mesh.
        let n_ext = expansions.len();
        let mut vert_faces: Vec<Vec<usize>> = vec![Vec::new(); n_ext];
        let mut edge_faces: HashMap<(usize, usize), [Option<usize>; 2]> = HashMap::new();
        for (fi, f) in faces.iter().enumerate() {
            for k in 0..4 {
                let (a, b) = (f[k], f[(k + 1) % 4]);
                let slot = edge_faces.entry(edge_key(a, b)).or_insert([None, None]);
                if slot[0].is_none() {
                    slot[0] = Some(fi);
                } else if slot[1].is_none() {
                    slot[1] = Some(fi);
                } else {
                    return Err(Error::BadMesh { reason: "ghost ring produced a non-manifold edge".into() });
                }
            }
            for &v in f {
                vert_faces[v].push(fi);
            }
        }

        Ok(ExtMesh {
            n_real_verts: nv,
            n_real_faces,
            faces,
            expansions,
            vert_faces,
            edge_faces,
            boundary_vertex,
        })
    }

    /// Position of an extended vertex under the given control positions.
    pub fn position(&self, ext_vert: usize, control: &[Point]) -> Point {
        let mut p = nalgebra::Vector3::zeros();
        for &(v, w) in &self.expansions[ext_vert] {
            p += control[v].coords * w;
        }
        Point::from(p)
    }

    /// The face on the other side of edge (a, b).
    pub fn face_across(&self, face: usize, a: usize, b: usize) -> Option<usize> {
        let fs = self.edge_faces.get(&edge_key(a, b))?;
        match *fs {
            [Some(f0), Some(f1)] if f0 == face => Some(f1),
            [Some(f0), Some(f1)] if f1 == face => Some(f0),
            _ => None,
        }
    }

    /// Face vertices rotated so they start with the directed edge a -> b.
    pub fn align_edge(&self, face: usize, a: usize, b: usize) -> Result<[usize; 4]> {
        let f = self.faces[face];
        for k in 0..4 {
            if f[k] == a && f[(k + 1) % 4] == b {
                return Ok([f[k], f[(k + 1) % 4], f[(k + 2) % 4], f[(k + 3) % 4]]);
            }
        }
        Err(Error::BadMesh { reason: format!("face {face} does not traverse edge ({a},{b})") })
    }

    /// Face vertices rotated to start at `v`.
    pub fn align_vertex(&self, face: usize, v: usize) -> Result<[usize; 4]> {
        let f = self.faces[face];
        let k = f
            .iter()
            .position(|&x| x == v)
            .ok_or_else(|| Error::BadMesh { reason: format!("face {face} does not contain vertex {v}") })?;
        Ok([f[k], f[(k + 1) % 4], f[(k + 2) % 4], f[(k + 3) % 4]])
    }

    /// At a valence-4 vertex, the face incident to `v` that is none of the
    /// three given ones.
    pub fn remaining_face_at(&self, v: usize, exclude: [usize; 3]) -> Result<usize> {
        let mut found = None;
        for &f in &self.vert_faces[v] {
            if !exclude.contains(&f) {
                if found.is_some() {
                    return Err(Error::BadMesh { reason: format!("vertex {v} is not valence 4") });
                }
                found = Some(f);
            }
        }
        found.ok_or_else(|| Error::BadMesh { reason: format!("vertex {v} has no remaining face") })
    }

    /// Number of neighbouring vertices in the extended mesh.
    pub fn ext_valence(&self, v: usize) -> usize {
        let mut n = 0;
        for &(a, b) in self.edge_faces.keys() {
            if a == v || b == v {
                n += 1;
            }
        }
        n
    }

    /// True when the vertex has a complete ring of 4 faces.
    pub fn is_regular_corner(&self, v: usize) -> bool {
        self.vert_faces[v].len() == 4
    }
}
