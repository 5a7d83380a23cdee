//! Per-face limit-surface patches.
//!
//! Faces whose corners all have complete valence-4 rings are bicubic
//! B-spline patches over a 4x4 stencil. A face with one extraordinary
//! corner is evaluated by subdividing its control net locally until the
//! requested parameter lands in a quadrant away from the extraordinary
//! vertex, which is regular again. The subdivision operator and the
//! quadrant stencils are tabulated per valence.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

use super::basis;
use super::mesh::ExtMesh;

/// Evaluations never approach the extraordinary corner closer than this.
const EV_CLAMP: f64 = 1.0 / 4096.0;
const MAX_DEPTH: usize = 16;

pub enum Patch {
    Regular {
        /// Extended-mesh vertex ids, grid ordered: slot i + 4j sits at
        /// grid (i-1, j-1) with the face spanning grid [0,1]^2.
        stencil: [usize; 16],
    },
    Ev {
        valence: usize,
        /// Corner index of the extraordinary vertex within the face.
        rotation: usize,
        /// 2*valence + 8 extended-mesh vertex ids in canonical order:
        /// centre, ring (edge/diagonal alternating), 7 outer.
        net: Vec<usize>,
    },
}

impl Patch {
    pub fn stencil_ids(&self) -> &[usize] {
        match self {
            Patch::Regular { stencil } => stencil,
            Patch::Ev { net, .. } => net,
        }
    }
}

/// Subdivision tables for one valence.
pub struct EvTables {
    /// (2v+17) x (2v+8): one local subdivision of the canonical net. The
    /// first 2v+8 refined rows reproduce the canonical net at half scale.
    pub a_bar: DMatrix<f64>,
    /// Refined-net slots forming the regular 4x4 stencil of the three
    /// quadrants away from the centre: 0 = s-side, 1 = diagonal, 2 = t-side.
    pub picks: [[usize; 16]; 3],
}

/// Basis weights over a patch's stencil vertices at one parameter point.
#[derive(Debug, Clone)]
pub struct PatchEval {
    pub n: Vec<f64>,
    pub d1: [Vec<f64>; 2],
    /// Second parametric derivatives: ss, st, tt.
    pub d2: [Vec<f64>; 3],
}

pub struct PatchTable {
    pub patches: Vec<Patch>,
    pub tables: HashMap<usize, EvTables>,
}

fn regular_stencil(ext: &ExtMesh, face: usize) -> Result<[usize; 16]> {
    let f = ext.faces[face];
    let [v0, v1, v2, v3] = f;
    let mut p = [usize::MAX; 16];
    let at = |i: usize, j: usize| i + 4 * j;
    p[at(1, 1)] = v0;
    p[at(2, 1)] = v1;
    p[at(2, 2)] = v2;
    p[at(1, 2)] = v3;

    let need = |x: Option<usize>, a: usize, b: usize| {
        x.ok_or_else(|| Error::BadMesh { reason: format!("missing neighbour across edge ({a},{b})") })
    };
    let south = need(ext.face_across(face, v0, v1), v0, v1)?;
    let sa = ext.align_edge(south, v1, v0)?;
    p[at(1, 0)] = sa[2];
    p[at(2, 0)] = sa[3];
    let north = need(ext.face_across(face, v2, v3), v2, v3)?;
    let na = ext.align_edge(north, v3, v2)?;
    p[at(2, 3)] = na[2];
    p[at(1, 3)] = na[3];
    let west = need(ext.face_across(face, v3, v0), v3, v0)?;
    let wa = ext.align_edge(west, v0, v3)?;
    p[at(0, 2)] = wa[2];
    p[at(0, 1)] = wa[3];
    let east = need(ext.face_across(face, v1, v2), v1, v2)?;
    let ea = ext.align_edge(east, v2, v1)?;
    p[at(3, 1)] = ea[2];
    p[at(3, 2)] = ea[3];

    let diag = |v: usize, exclude: [usize; 3]| -> Result<usize> {
        let g = ext.remaining_face_at(v, exclude)?;
        Ok(ext.align_vertex(g, v)?[2])
    };
    p[at(0, 0)] = diag(v0, [face, south, west])?;
    p[at(3, 0)] = diag(v1, [face, south, east])?;
    p[at(3, 3)] = diag(v2, [face, east, north])?;
    p[at(0, 3)] = diag(v3, [face, north, west])?;
    Ok(p)
}

/// Canonical net around an extraordinary corner: walk the ring of faces
/// counter-clockwise starting from `face`, then pick up the 7 outer
/// vertices around the far corners of `face`.
fn ev_net(ext: &ExtMesh, face: usize, ev: usize) -> Result<Vec<usize>> {
    let valence = ext.vert_faces[ev].len();
    let f0 = ext.align_vertex(face, ev)?;
    let mut e = vec![0usize; valence];
    let mut d = vec![0usize; valence];
    let mut g = face;
    let mut ga = f0;
    for i in 0..valence {
        e[i] = ga[1];
        d[i] = ga[2];
        let prev_end = ga[3];
        g = ext
            .face_across(g, ev, prev_end)
            .ok_or_else(|| Error::BadMesh { reason: format!("open ring at vertex {ev}") })?;
        ga = ext.align_vertex(g, ev)?;
        if ga[1] != prev_end {
            return Err(Error::BadMesh {
                reason: format!("inconsistent orientation in the ring of vertex {ev}"),
            });
        }
    }
    if g != face {
        return Err(Error::BadMesh { reason: format!("ring walk around vertex {ev} did not close") });
    }

    let fail = |a: usize, b: usize| Error::BadMesh { reason: format!("missing face across edge ({a},{b})") };
    // Ring faces needed for the outer walk.
    let face_nm1 = {
        // The face preceding `face` in the CCW ring contains edge (ev, e0).
        ext.face_across(face, ev, e[0]).ok_or_else(|| fail(ev, e[0]))?
    };
    let face_1 = ext.face_across(face, ev, e[1]).ok_or_else(|| fail(ev, e[1]))?;

    let g1 = ext.face_across(face_nm1, e[0], d[valence - 1]).ok_or_else(|| fail(e[0], d[valence - 1]))?;
    let g1a = ext.align_edge(g1, e[0], d[valence - 1])?;
    let (o1, o2) = (g1a[2], g1a[3]);
    let g2 = ext.face_across(face, e[0], d[0]).ok_or_else(|| fail(e[0], d[0]))?;
    let g2a = ext.align_edge(g2, d[0], e[0])?;
    if g2a[2] != o2 {
        return Err(Error::BadMesh { reason: "outer ring is inconsistent".into() });
    }
    let o3 = g2a[3];
    let g4 = ext.face_across(face, d[0], e[1]).ok_or_else(|| fail(d[0], e[1]))?;
    let g4a = ext.align_edge(g4, e[1], d[0])?;
    let (o5, o6) = (g4a[2], g4a[3]);
    let g3 = ext.remaining_face_at(d[0], [face, g2, g4])?;
    let g3a = ext.align_vertex(g3, d[0])?;
    if g3a[1] != o3 || g3a[3] != o5 {
        return Err(Error::BadMesh { reason: "diagonal outer face is inconsistent".into() });
    }
    let o4 = g3a[2];
    let g5 = ext.face_across(face_1, e[1], d[1]).ok_or_else(|| fail(e[1], d[1]))?;
    let g5a = ext.align_edge(g5, d[1], e[1])?;
    if g5a[2] != o6 {
        return Err(Error::BadMesh { reason: "outer ring is inconsistent".into() });
    }
    let o7 = g5a[3];

    let mut net = Vec::with_capacity(2 * valence + 8);
    net.push(ev);
    for i in 0..valence {
        net.push(e[i]);
        net.push(d[i]);
    }
    net.extend([o1, o2, o3, o4, o5, o6, o7]);
    Ok(net)
}

impl EvTables {
    /// Builds the subdivision operator of the canonical net by applying
    /// the face/edge/vertex averaging rules on the canonical mini-mesh.
    pub fn new(valence: usize) -> EvTables {
        build_ev_tables(valence)
    }
}

fn build_ev_tables(valence: usize) -> EvTables {
    let nu = valence;
    let n_coarse = 2 * nu + 8;
    let e = |i: usize| 1 + 2 * (i % nu);
    let d = |i: usize| 2 + 2 * (i % nu);
    let o = |j: usize| 2 * nu + j;

    let mut faces: Vec<[usize; 4]> = Vec::new();
    for i in 0..nu {
        faces.push([0, e(i), d(i), e(i + 1)]);
    }
    faces.push([d(nu - 1), o(1), o(2), e(0)]);
    faces.push([e(0), o(2), o(3), d(0)]);
    faces.push([d(0), o(3), o(4), o(5)]);
    faces.push([e(1), d(0), o(5), o(6)]);
    faces.push([d(1), e(1), o(6), o(7)]);

    let mut edge_faces: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    let mut vert_faces: Vec<Vec<usize>> = vec![Vec::new(); n_coarse];
    let mut vert_edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n_coarse];
    for (fi, f) in faces.iter().enumerate() {
        for k in 0..4 {
            let key = (f[k].min(f[(k + 1) % 4]), f[k].max(f[(k + 1) % 4]));
            let list = edge_faces.entry(key).or_default();
            if !list.contains(&fi) {
                list.push(fi);
            }
        }
        for &v in f {
            vert_faces[v].push(fi);
        }
    }
    for &(a, b) in edge_faces.keys() {
        vert_edges[a].push((a, b));
        vert_edges[b].push((a, b));
    }

    let fp_row = |f: usize| -> Vec<f64> {
        let mut row = vec![0.0; n_coarse];
        for &v in &faces[f] {
            row[v] += 0.25;
        }
        row
    };
    let ep_row = |a: usize, b: usize| -> Vec<f64> {
        let key = (a.min(b), a.max(b));
        let fs = &edge_faces[&key];
        assert_eq!(fs.len(), 2, "edge point of a boundary edge");
        let mut row = vec![0.0; n_coarse];
        row[a] += 0.25;
        row[b] += 0.25;
        for &f in fs {
            for &v in &faces[f] {
                row[v] += 0.25 * 0.25;
            }
        }
        row
    };
    let vp_row = |v: usize| -> Vec<f64> {
        let n = vert_faces[v].len() as f64;
        assert_eq!(vert_faces[v].len(), vert_edges[v].len(), "vertex point of a boundary vertex");
        let mut row = vec![0.0; n_coarse];
        for &f in &vert_faces[v] {
            for &w in &faces[f] {
                row[w] += 0.25 / (n * n);
            }
        }
        for &(a, b) in &vert_edges[v] {
            row[a] += 1.0 / (n * n);
            row[b] += 1.0 / (n * n);
        }
        row[v] += (n - 3.0) / n;
        row
    };

    // Refined rows in canonical order: centre net first (restriction is
    // then the identity on the leading rows), 9 extra rows after.
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(2 * nu + 17);
    rows.push(vp_row(0));
    for i in 0..nu {
        rows.push(ep_row(0, e(i)));
        rows.push(fp_row(i));
    }
    rows.push(ep_row(e(0), d(nu - 1)));
    rows.push(vp_row(e(0)));
    rows.push(ep_row(e(0), d(0)));
    rows.push(vp_row(d(0)));
    rows.push(ep_row(d(0), e(1)));
    rows.push(vp_row(e(1)));
    rows.push(ep_row(e(1), d(1)));
    let outer_faces = [nu, nu + 1, nu + 2, nu + 3, nu + 4];
    rows.push(fp_row(outer_faces[0]));
    rows.push(ep_row(e(0), o(2)));
    rows.push(fp_row(outer_faces[1]));
    rows.push(ep_row(d(0), o(3)));
    rows.push(fp_row(outer_faces[2]));
    rows.push(ep_row(d(0), o(5)));
    rows.push(fp_row(outer_faces[3]));
    rows.push(ep_row(e(1), o(6)));
    rows.push(fp_row(outer_faces[4]));

    let a_bar = DMatrix::from_fn(rows.len(), n_coarse, |r, c| rows[r][c]);

    // Refined-net slots in the canonical layout.
    let ev_s = 0usize;
    let es = |i: usize| 1 + 2 * (i % nu);
    let ds = |i: usize| 2 + 2 * (i % nu);
    let os = |j: usize| 2 * nu + j;
    let xs = |m: usize| 2 * nu + 7 + m;
    let grid = |entries: [[usize; 4]; 4]| -> [usize; 16] {
        let mut p = [0usize; 16];
        for (j, row) in entries.iter().enumerate() {
            for (i, &v) in row.iter().enumerate() {
                p[i + 4 * j] = v;
            }
        }
        p
    };
    let pick_s = grid([
        [es(nu - 1), ds(nu - 1), os(1), xs(1)],
        [ev_s, es(0), os(2), xs(2)],
        [es(1), ds(0), os(3), xs(3)],
        [os(6), os(5), os(4), xs(4)],
    ]);
    let pick_diag = grid([
        [ev_s, es(0), os(2), xs(2)],
        [es(1), ds(0), os(3), xs(3)],
        [os(6), os(5), os(4), xs(4)],
        [xs(8), xs(7), xs(6), xs(5)],
    ]);
    let pick_t = grid([
        [es(2), ev_s, es(0), os(2)],
        [ds(1), es(1), ds(0), os(3)],
        [os(7), os(6), os(5), os(4)],
        [xs(9), xs(8), xs(7), xs(6)],
    ]);

    EvTables { a_bar, picks: [pick_s, pick_diag, pick_t] }
}

impl PatchTable {
    pub fn build(ext: &ExtMesh) -> Result<PatchTable> {
        let mut patches = Vec::with_capacity(ext.n_real_faces);
        let mut tables: HashMap<usize, EvTables> = HashMap::new();
        for face in 0..ext.n_real_faces {
            let f = ext.faces[face];
            let mut ev_corner = None;
            for (k, &v) in f.iter().enumerate() {
                let val = ext.vert_faces[v].len();
                if val != 4 {
                    if ev_corner.is_some() {
                        return Err(Error::BadMesh {
                            reason: format!("face {face} has more than one extraordinary corner"),
                        });
                    }
                    ev_corner = Some((k, val));
                }
            }
            match ev_corner {
                None => patches.push(Patch::Regular { stencil: regular_stencil(ext, face)? }),
                Some((rotation, valence)) => {
                    tables.entry(valence).or_insert_with(|| build_ev_tables(valence));
                    let net = ev_net(ext, face, f[rotation])?;
                    patches.push(Patch::Ev { valence, rotation, net });
                }
            }
        }
        Ok(PatchTable { patches, tables })
    }

    /// Basis weights (and parametric derivatives) over the patch stencil.
    pub fn eval(&self, face: usize, s: f64, t: f64) -> PatchEval {
        match &self.patches[face] {
            Patch::Regular { .. } => regular_eval(s, t),
            Patch::Ev { valence, rotation, .. } => {
                let tables = &self.tables[valence];
                ev_eval(tables, *valence, *rotation, s, t)
            }
        }
    }
}

fn regular_eval(s: f64, t: f64) -> PatchEval {
    let ns = basis::cubic(s);
    let nt = basis::cubic(t);
    let ds = basis::cubic_d1(s);
    let dt = basis::cubic_d1(t);
    let dss = basis::cubic_d2(s);
    let dtt = basis::cubic_d2(t);
    let mut ev = PatchEval {
        n: vec![0.0; 16],
        d1: [vec![0.0; 16], vec![0.0; 16]],
        d2: [vec![0.0; 16], vec![0.0; 16], vec![0.0; 16]],
    };
    for j in 0..4 {
        for i in 0..4 {
            let k = i + 4 * j;
            ev.n[k] = ns[i] * nt[j];
            ev.d1[0][k] = ds[i] * nt[j];
            ev.d1[1][k] = ns[i] * dt[j];
            ev.d2[0][k] = dss[i] * nt[j];
            ev.d2[1][k] = ds[i] * dt[j];
            ev.d2[2][k] = ns[i] * dtt[j];
        }
    }
    ev
}

fn ev_eval(tables: &EvTables, valence: usize, rotation: usize, s: f64, t: f64) -> PatchEval {
    // Rotate parameters so the extraordinary vertex sits at (0,0).
    let (mut u, mut v) = (s, t);
    for _ in 0..rotation {
        let (nu_, nv_) = (v, 1.0 - u);
        u = nu_;
        v = nv_;
    }
    // Keep evaluations off the extraordinary point itself.
    if u.max(v) < EV_CLAMP {
        if u >= v {
            u = EV_CLAMP;
        } else {
            v = EV_CLAMP;
        }
    }

    let mut levels = 1usize;
    while u <= 0.5 && v <= 0.5 && levels < MAX_DEPTH {
        u *= 2.0;
        v *= 2.0;
        levels += 1;
    }
    let (quad, qu, qv) = if u > 0.5 && v <= 0.5 {
        (0, 2.0 * u - 1.0, 2.0 * v)
    } else if u > 0.5 {
        (1, 2.0 * u - 1.0, 2.0 * v - 1.0)
    } else {
        (2, 2.0 * u, 2.0 * v - 1.0)
    };

    let n_coarse = 2 * valence + 8;
    let n_fine = 2 * valence + 17;
    let picks = &tables.picks[quad];
    let reg = regular_eval(qu, qv);

    // Scatter the 16 regular weights into refined-net slots and pull them
    // back through the subdivision chain.
    let pull = |w16: &[f64]| -> Vec<f64> {
        let mut fine = vec![0.0; n_fine];
        for (k, &slot) in picks.iter().enumerate() {
            fine[slot] += w16[k];
        }
        let mut w = vec![0.0; n_coarse];
        for level in 0..levels {
            if level > 0 {
                fine = vec![0.0; n_fine];
                fine[..n_coarse].copy_from_slice(&w);
            }
            for c in 0..n_coarse {
                let mut acc = 0.0;
                for r in 0..n_fine {
                    acc += tables.a_bar[(r, c)] * fine[r];
                }
                w[c] = acc;
            }
        }
        w
    };

    let scale1 = (1u64 << levels) as f64;
    let scale2 = scale1 * scale1;
    let n = pull(&reg.n);
    let mut d1 = [pull(&reg.d1[0]), pull(&reg.d1[1])];
    let mut d2 = [pull(&reg.d2[0]), pull(&reg.d2[1]), pull(&reg.d2[2])];
    for w in d1.iter_mut() {
        for x in w.iter_mut() {
            *x *= scale1;
        }
    }
    for w in d2.iter_mut() {
        for x in w.iter_mut() {
            *x *= scale2;
        }
    }

    // Undo the parameter rotation on the derivative components:
    // one step maps (fs, ft) -> (-ft, fs) and (fss, fst, ftt) -> (ftt, -fst, fss).
    for _ in 0..rotation {
        let [a, b] = d1;
        d1 = [negate(b), a];
        let [p, q, r] = d2;
        d2 = [r, negate(q), p];
    }

    PatchEval { n, d1, d2 }
}

fn negate(mut v: Vec<f64>) -> Vec<f64> {
    for x in v.iter_mut() {
        *x = -*x;
    }
    v
}
