//! Lattice interchange files: a TOML dialect written with 17 significant
//! digits so every float survives a write/read cycle bit for bit, and a
//! write that is byte-identical for equal models.
//!
//! Layout: parallel top-level arrays for joints, struts, attachments and
//! supports, then one `[[cells]]` table per unit cell.

use std::path::Path;

use serde::Deserialize;

use lattice_skin_core::geometry::{Point, Vec3};
use lattice_skin_core::lattice::{
    Joint, JointSupport, LatticeModel, ShellAttachment, Strut, UnitCell,
};

use crate::{fmt_f64, IoError, Result};

pub fn write_lattice(path: &Path, model: &LatticeModel) -> Result<()> {
    crate::write_file(path, &lattice_to_string(model))
}

pub fn read_lattice(path: &Path) -> Result<LatticeModel> {
    let text = crate::read_file(path)?;
    lattice_from_str(&text)
        .map_err(|e| IoError::config(format!("lattice file {}: {e}", path.display())))
}

fn push_f64_array(out: &mut String, key: &str, values: impl Iterator<Item = Vec<f64>>) {
    out.push_str(key);
    out.push_str(" = [\n");
    for row in values {
        out.push_str("  [");
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            out.push_str(&fmt_f64(*v));
        }
        out.push_str("],\n");
    }
    out.push_str("]\n");
}

fn usize_list(values: &[usize]) -> String {
    let items: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    format!("[{}]", items.join(", "))
}

pub fn lattice_to_string(model: &LatticeModel) -> String {
    let mut out = String::new();
    out.push_str(&format!("dim = {}\n", model.dim));
    out.push_str(&format!("youngs_modulus = {}\n", fmt_f64(model.youngs_modulus)));
    push_f64_array(
        &mut out,
        "positions",
        model.joints.iter().map(|j| vec![j.position.x, j.position.y, j.position.z]),
    );
    out.push_str("strut_joints = [\n");
    for s in &model.struts {
        out.push_str(&format!("  [{}, {}],\n", s.joints[0], s.joints[1]));
    }
    out.push_str("]\n");
    push_f64_array(&mut out, "strut_area", model.struts.iter().map(|s| vec![s.area]));
    push_f64_array(
        &mut out,
        "strut_reference_area",
        model.struts.iter().map(|s| vec![s.reference_area]),
    );
    let attached: Vec<(usize, &ShellAttachment)> = model
        .joints
        .iter()
        .enumerate()
        .filter_map(|(j, joint)| joint.attachment.as_ref().map(|a| (j, a)))
        .collect();
    if !attached.is_empty() {
        out.push_str(&format!(
            "attachment_joints = {}\n",
            usize_list(&attached.iter().map(|(j, _)| *j).collect::<Vec<_>>())
        ));
        out.push_str(&format!(
            "attachment_faces = {}\n",
            usize_list(&attached.iter().map(|(_, a)| a.face).collect::<Vec<_>>())
        ));
        push_f64_array(
            &mut out,
            "attachment_coords",
            attached.iter().map(|(_, a)| vec![a.coord[0], a.coord[1]]),
        );
    }
    if !model.supports.is_empty() {
        out.push_str(&format!(
            "support_joints = {}\n",
            usize_list(&model.supports.iter().map(|s| s.joint).collect::<Vec<_>>())
        ));
        out.push_str("support_fixed = [\n");
        for s in &model.supports {
            out.push_str(&format!("  [{}, {}, {}],\n", s.fixed[0], s.fixed[1], s.fixed[2]));
        }
        out.push_str("]\n");
    }
    for cell in &model.cells {
        out.push_str("\n[[cells]]\n");
        out.push_str(&format!("template = {:?}\n", cell.template));
        out.push_str(&format!(
            "size = [{}, {}, {}]\n",
            fmt_f64(cell.size[0]),
            fmt_f64(cell.size[1]),
            fmt_f64(cell.size[2])
        ));
        out.push_str(&format!(
            "centroid = [{}, {}, {}]\n",
            fmt_f64(cell.centroid[0]),
            fmt_f64(cell.centroid[1]),
            fmt_f64(cell.centroid[2])
        ));
        out.push_str(&format!("corner_joints = {}\n", usize_list(&cell.corner_joints)));
        out.push_str(&format!("centre_joints = {}\n", usize_list(&cell.centre_joints)));
        out.push_str(&format!("edge_struts = {}\n", usize_list(&cell.edge_struts)));
        out.push_str(&format!("diagonal_struts = {}\n", usize_list(&cell.diagonal_struts)));
    }
    out
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LatticeFile {
    dim: usize,
    youngs_modulus: f64,
    positions: Vec<[f64; 3]>,
    strut_joints: Vec<[usize; 2]>,
    strut_area: Vec<f64>,
    strut_reference_area: Vec<f64>,
    #[serde(default)]
    attachment_joints: Vec<usize>,
    #[serde(default)]
    attachment_faces: Vec<usize>,
    #[serde(default)]
    attachment_coords: Vec<[f64; 2]>,
    #[serde(default)]
    support_joints: Vec<usize>,
    #[serde(default)]
    support_fixed: Vec<[bool; 3]>,
    #[serde(default)]
    cells: Vec<CellFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CellFile {
    template: String,
    size: [f64; 3],
    centroid: [f64; 3],
    corner_joints: Vec<usize>,
    centre_joints: Vec<usize>,
    edge_struts: Vec<usize>,
    diagonal_struts: Vec<usize>,
}

pub fn lattice_from_str(text: &str) -> Result<LatticeModel> {
    let file: LatticeFile = toml::from_str(text).map_err(|e| IoError::config(e.to_string()))?;
    let n_joints = file.positions.len();
    let n_struts = file.strut_joints.len();
    if file.strut_area.len() != n_struts || file.strut_reference_area.len() != n_struts {
        return Err(IoError::config("strut_area and strut_reference_area must match strut_joints"));
    }
    if file.attachment_faces.len() != file.attachment_joints.len()
        || file.attachment_coords.len() != file.attachment_joints.len()
    {
        return Err(IoError::config("attachment arrays must have equal lengths"));
    }
    if file.support_fixed.len() != file.support_joints.len() {
        return Err(IoError::config("support_fixed must match support_joints"));
    }
    if !matches!(file.dim, 2 | 3) {
        return Err(IoError::config(format!("dim must be 2 or 3, got {}", file.dim)));
    }
    let mut joints: Vec<Joint> = file
        .positions
        .iter()
        .map(|p| Joint { position: Point::new(p[0], p[1], p[2]), attachment: None })
        .collect();
    for ((&j, &face), coord) in file
        .attachment_joints
        .iter()
        .zip(&file.attachment_faces)
        .zip(&file.attachment_coords)
    {
        let joint = joints
            .get_mut(j)
            .ok_or_else(|| IoError::config(format!("attachment joint {j} out of range")))?;
        joint.attachment = Some(ShellAttachment { face, coord: *coord });
    }
    let struts: Vec<Strut> = file
        .strut_joints
        .iter()
        .zip(file.strut_area.iter().zip(&file.strut_reference_area))
        .map(|(&joints, (&area, &reference_area))| Strut { joints, area, reference_area })
        .collect();
    let supports: Vec<JointSupport> = file
        .support_joints
        .iter()
        .zip(&file.support_fixed)
        .map(|(&joint, &fixed)| JointSupport { joint, fixed })
        .collect();
    for s in &supports {
        if s.joint >= n_joints {
            return Err(IoError::config(format!("support joint {} out of range", s.joint)));
        }
    }
    let cells: Vec<UnitCell> = file
        .cells
        .into_iter()
        .map(|c| UnitCell {
            corner_joints: c.corner_joints,
            centre_joints: c.centre_joints,
            edge_struts: c.edge_struts,
            diagonal_struts: c.diagonal_struts,
            centroid: Point::new(c.centroid[0], c.centroid[1], c.centroid[2]),
            template: c.template,
            size: Vec3::new(c.size[0], c.size[1], c.size[2]),
        })
        .collect();
    for cell in &cells {
        if cell.corner_joints.iter().chain(&cell.centre_joints).any(|&j| j >= n_joints)
            || cell.edge_struts.iter().chain(&cell.diagonal_struts).any(|&e| e >= n_struts)
        {
            return Err(IoError::config("cell references a joint or strut out of range"));
        }
    }
    let model = LatticeModel {
        joints,
        struts,
        cells,
        supports,
        youngs_modulus: file.youngs_modulus,
        dim: file.dim,
    };
    model.validate().map_err(|e| IoError::config(e.to_string()))?;
    Ok(model)
}
