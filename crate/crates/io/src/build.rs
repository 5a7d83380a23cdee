//! Builds a [`Structure`] from a validated run configuration: lattice
//! generation or loading, shell meshing, support and load resolution, and
//! lattice-to-skin attachment.

use std::collections::BTreeMap;
use std::path::Path;

use lattice_skin_core::geometry::{Aabb, Point, Vec3};
use lattice_skin_core::lattice::{
    generate_blocks, generate_grid_lattice, CellTemplate, GridBlock, JointSupport, LatticeModel,
};
use lattice_skin_core::model::{Skin, Structure};
use lattice_skin_core::shell::meshgen;
use lattice_skin_core::shell::{ShellMaterial, ShellMesh, ShellModel};
use lattice_skin_core::truss::PointLoad;

use crate::config::{
    LatticeConfig, LatticeGeometry, LoadConfig, RegionConfig, RunConfig, ShellConfig,
    ShellGeometry, ShellSupportConfig, SupportConfig,
};
use crate::{IoError, Result};

pub struct BuiltModel {
    pub structure: Structure,
    /// Lattice joints attached to the skin; zero without an [attach] block.
    pub attached: usize,
}

fn point(c: [f64; 3]) -> Point {
    Point::new(c[0], c[1], c[2])
}

fn vec3(c: [f64; 3]) -> Vec3 {
    Vec3::new(c[0], c[1], c[2])
}

/// Model construction failures are configuration problems, not solver ones.
fn build_err(context: &str, e: lattice_skin_core::Error) -> IoError {
    IoError::config(format!("{context}: {e}"))
}

pub fn build_structure(config: &RunConfig, base_dir: &Path) -> Result<BuiltModel> {
    let mut lattice_loads = Vec::new();
    let lattice = match &config.lattice {
        Some(lc) => {
            let (model, loads) = build_lattice(lc, base_dir)?;
            lattice_loads = loads;
            Some(model)
        }
        None => None,
    };
    let skin = config.shell.as_ref().map(build_skin).transpose()?;
    let mut structure = Structure { lattice, skin, lattice_loads };
    structure.validate().map_err(|e| build_err("model", e))?;
    let mut attached = 0;
    if let Some(attach) = &config.attach {
        attached = structure.attach(attach.tol).map_err(IoError::Solver)?;
        if attached == 0 {
            return Err(IoError::config(format!(
                "attach.tol: no lattice joint lies within {} of the skin",
                attach.tol
            )));
        }
    }
    Ok(BuiltModel { structure, attached })
}

fn build_lattice(lc: &LatticeConfig, base_dir: &Path) -> Result<(LatticeModel, Vec<PointLoad>)> {
    let mut model = match &lc.geometry {
        LatticeGeometry::Grid { template, origin, extent, cell } => {
            let template = builtin_template(template)?;
            let domain = Aabb { min: point(*origin), max: point(*origin) + vec3(*extent) };
            let model = generate_grid_lattice(
                &domain,
                vec3(*cell),
                &template,
                lc.youngs_modulus.expect("validated"),
                lc.area.unwrap_or(1.0),
            )
            .map_err(|e| build_err("lattice.geometry", e))?;
            model
        }
        LatticeGeometry::Blocks { template, blocks } => {
            let template = builtin_template(template)?;
            let blocks: Vec<GridBlock> = blocks
                .iter()
                .map(|b| GridBlock { origin: point(b.origin), cell_size: vec3(b.cell), counts: b.counts })
                .collect();
            generate_blocks(
                &blocks,
                &template,
                lc.youngs_modulus.expect("validated"),
                lc.area.unwrap_or(1.0),
                None,
            )
            .map_err(|e| build_err("lattice.geometry", e))?
        }
        LatticeGeometry::File { path } => crate::lattice_file::read_lattice(&base_dir.join(path))?,
    };
    if let Some(volume) = lc.volume {
        spread_volume(&mut model, volume);
    }
    resolve_lattice_supports(&mut model, &lc.supports)?;
    let loads = resolve_loads(&model, &lc.loads)?;
    Ok((model, loads))
}

fn builtin_template(name: &str) -> Result<CellTemplate> {
    CellTemplate::builtin(name)
        .ok_or_else(|| IoError::config(format!("lattice.geometry.template: unknown template `{name}`")))
}

/// Uniform strut area realising a total material volume.
fn spread_volume(model: &mut LatticeModel, volume: f64) {
    let total_length: f64 = (0..model.struts.len()).map(|s| model.strut_length(s)).sum();
    let area = volume / total_length;
    for strut in &mut model.struts {
        strut.area = area;
        strut.reference_area = area;
    }
}

fn region_tol(aabb: &Aabb) -> f64 {
    1e-9 * aabb.max_extent().max(1.0)
}

fn resolve_lattice_supports(model: &mut LatticeModel, configs: &[SupportConfig]) -> Result<()> {
    if configs.is_empty() {
        return Ok(());
    }
    // OR-merge with any supports already on the model (e.g. from a file).
    let mut fixed: BTreeMap<usize, [bool; 3]> = BTreeMap::new();
    for s in &model.supports {
        fixed.insert(s.joint, s.fixed);
    }
    let aabb = model.aabb();
    let tol = region_tol(&aabb);
    for (i, c) in configs.iter().enumerate() {
        let joints: Vec<usize> = if let Some(ids) = &c.joints {
            for &j in ids {
                if j >= model.joints.len() {
                    return Err(IoError::config(format!(
                        "lattice.supports[{i}].joints: joint {j} out of range (lattice has {})",
                        model.joints.len()
                    )));
                }
            }
            ids.clone()
        } else {
            let region = c.region.as_ref().expect("validated");
            let hits = joints_in_region(model, region, tol);
            if hits.is_empty() {
                return Err(IoError::config(format!(
                    "lattice.supports[{i}].region: no joint inside the region"
                )));
            }
            hits
        };
        for j in joints {
            let entry = fixed.entry(j).or_insert([false; 3]);
            for a in 0..3 {
                entry[a] |= c.fixed[a];
            }
        }
    }
    model.supports = fixed
        .into_iter()
        .map(|(joint, fixed)| JointSupport { joint, fixed })
        .collect();
    Ok(())
}

fn joints_in_region(model: &LatticeModel, region: &RegionConfig, tol: f64) -> Vec<usize> {
    let aabb = Aabb { min: point(region.min), max: point(region.max) };
    (0..model.joints.len())
        .filter(|&j| aabb.contains(&model.joints[j].position, tol))
        .collect()
}

fn resolve_loads(model: &LatticeModel, configs: &[LoadConfig]) -> Result<Vec<PointLoad>> {
    let mut loads = Vec::with_capacity(configs.len());
    for (i, c) in configs.iter().enumerate() {
        let joint = if let Some(j) = c.joint {
            if j >= model.joints.len() {
                return Err(IoError::config(format!(
                    "lattice.loads[{i}].joint: joint {j} out of range (lattice has {})",
                    model.joints.len()
                )));
            }
            j
        } else {
            let at = point(c.at.expect("validated"));
            nearest_joint(model, &at)
        };
        loads.push(PointLoad { joint, force: vec3(c.force) });
    }
    Ok(loads)
}

/// Closest joint by Euclidean distance; ties resolve to the lowest id.
fn nearest_joint(model: &LatticeModel, target: &Point) -> usize {
    let mut best = 0;
    let mut best_d2 = f64::INFINITY;
    for (j, joint) in model.joints.iter().enumerate() {
        let d2 = (joint.position - target).norm_squared();
        if d2 < best_d2 {
            best = j;
            best_d2 = d2;
        }
    }
    best
}

fn build_skin(sc: &ShellConfig) -> Result<Skin> {
    let mesh = match &sc.geometry {
        ShellGeometry::Rect { patches } => {
            let mut merged = ShellMesh { vertices: Vec::new(), faces: Vec::new() };
            for p in patches {
                let patch = meshgen::rect_grid(point(p.origin), vec3(p.ex), vec3(p.ey), p.nx, p.ny);
                let offset = merged.vertices.len();
                merged.vertices.extend(patch.vertices);
                merged
                    .faces
                    .extend(patch.faces.iter().map(|f| f.map(|v| v + offset)));
            }
            merged
        }
        ShellGeometry::Pentagon { circumradius, refinements } => {
            meshgen::pentagon_fan(*circumradius, *refinements)
        }
    };
    let model = ShellModel::new(mesh).map_err(|e| build_err("shell.geometry", e))?;
    let supports = resolve_shell_supports(&model, &sc.supports)?;
    Ok(Skin {
        model,
        material: ShellMaterial {
            youngs_modulus: sc.youngs_modulus,
            poisson_ratio: sc.poisson_ratio,
            thickness: sc.thickness,
        },
        supports,
        pressure: vec3(sc.pressure),
    })
}

fn resolve_shell_supports(
    model: &ShellModel,
    configs: &[ShellSupportConfig],
) -> Result<Vec<JointSupport>> {
    let n = model.vertex_count();
    let mut fixed: BTreeMap<usize, [bool; 3]> = BTreeMap::new();
    let aabb = Aabb::from_points(model.mesh.vertices.iter())
        .ok_or_else(|| IoError::config("shell.geometry: empty mesh"))?;
    let tol = region_tol(&aabb);
    for (i, c) in configs.iter().enumerate() {
        let vertices: Vec<usize> = if let Some(ids) = &c.vertices {
            for &v in ids {
                if v >= n {
                    return Err(IoError::config(format!(
                        "shell.supports[{i}].vertices: vertex {v} out of range (mesh has {n})"
                    )));
                }
            }
            ids.clone()
        } else if let Some(region) = &c.region {
            let region = Aabb { min: point(region.min), max: point(region.max) };
            let hits: Vec<usize> = (0..n)
                .filter(|&v| region.contains(&model.mesh.vertices[v], tol))
                .collect();
            if hits.is_empty() {
                return Err(IoError::config(format!(
                    "shell.supports[{i}].region: no control vertex inside the region"
                )));
            }
            hits
        } else if c.boundary {
            (0..n).filter(|&v| model.ext.boundary_vertex[v]).collect()
        } else {
            meshgen::pentagon_edge_midpoints().to_vec()
        };
        for v in vertices {
            let entry = fixed.entry(v).or_insert([false; 3]);
            for a in 0..3 {
                entry[a] |= c.fixed[a];
            }
        }
    }
    Ok(fixed
        .into_iter()
        .map(|(joint, fixed)| JointSupport { joint, fixed })
        .collect())
}
