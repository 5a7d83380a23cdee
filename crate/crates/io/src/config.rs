//! Run configuration: one TOML document describing the model, the task
//! and all option blocks.
//!
//! Parsing is strict (unknown keys are rejected) and validation runs
//! before any solve: option blocks must be complete for the declared
//! problem, numeric parameters must be in range and referenced files must
//! exist. Serialisation of a parsed configuration parses back to an equal
//! value.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use lattice_skin_core::optimizer::{Method, Options};
use lattice_skin_core::penalise::Penalisation;

use crate::{IoError, Result};

/// What a configuration is meant to run; the CLI subcommand must agree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Analyze,
    Topopt,
    Shapeopt,
    Sequential,
    Extract,
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ProblemKind::Analyze => "analyze",
            ProblemKind::Topopt => "topopt",
            ProblemKind::Shapeopt => "shapeopt",
            ProblemKind::Sequential => "sequential",
            ProblemKind::Extract => "extract",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shell: Option<ShellConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attach: Option<AttachConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formfind: Option<FormFindConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topopt: Option<TopOptConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shapeopt: Option<ShapeOptConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extract: Option<ExtractConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Truss lattice: material, reference strut area (or a total volume the
/// area is derived from), geometry source, supports and point loads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub youngs_modulus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area: Option<f64>,
    /// Total strut material volume; the uniform area is volume over total
    /// strut length. Mutually exclusive with `area`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volume: Option<f64>,
    pub geometry: LatticeGeometry,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub supports: Vec<SupportConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub loads: Vec<LoadConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LatticeGeometry {
    /// Uniform tiling of an axis-aligned box with a builtin cell template.
    Grid {
        template: String,
        origin: [f64; 3],
        extent: [f64; 3],
        cell: [f64; 3],
    },
    /// Union of axis-aligned grid blocks, possibly of different cell
    /// sizes; coincident joints are merged.
    Blocks {
        template: String,
        blocks: Vec<BlockConfig>,
    },
    /// A lattice interchange file written by this toolkit.
    File { path: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockConfig {
    pub origin: [f64; 3],
    pub cell: [f64; 3],
    pub counts: [usize; 3],
}

/// Joint support: explicit ids or every joint inside an axis-aligned box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportConfig {
    pub fixed: [bool; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joints: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

/// Point load on an explicit joint or on the joint nearest to `at`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadConfig {
    pub force: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<[f64; 3]>,
}

/// Thin-shell skin: material, dead pressure load, control mesh and
/// supports on control vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShellConfig {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub thickness: f64,
    /// Constant dead load per unit reference area.
    #[serde(default)]
    pub pressure: [f64; 3],
    pub geometry: ShellGeometry,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub supports: Vec<ShellSupportConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShellGeometry {
    /// One or more independent rectangular patches (e.g. the two face
    /// sheets of a sandwich panel). Patches are not welded.
    Rect { patches: Vec<RectPatchConfig> },
    /// Flat regular-pentagon fan with one valence-5 centre vertex.
    Pentagon {
        circumradius: f64,
        refinements: usize,
    },
}

/// Quad grid spanned by two edge vectors: vertex (i, j) sits at
/// `origin + i/nx ex + j/ny ey`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectPatchConfig {
    pub origin: [f64; 3],
    pub ex: [f64; 3],
    pub ey: [f64; 3],
    pub nx: usize,
    pub ny: usize,
}

/// Control-vertex support with exactly one selector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShellSupportConfig {
    pub fixed: [bool; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionConfig>,
    /// Every control vertex on the mesh boundary.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub boundary: bool,
    /// The five outer edge midpoints of the pentagon fan.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub pentagon_midedges: bool,
}

/// Couples lattice joints within `tol` of the shell surface to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttachConfig {
    pub tol: f64,
}

/// Moves every node by `scale` times its displacement under the current
/// loads before the main task runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormFindConfig {
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopOptConfig {
    pub volume_fraction: f64,
    pub filter_radius: f64,
    pub penalisation: PenalisationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimiser: Option<OptimiserConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PenalisationConfig {
    /// Density to the `exponent` below one, linear continuation above.
    Power { exponent: f64 },
    /// Degree-5 Bezier over [0, 0.5] with a slope-matched line above;
    /// either a builtin preset (1, 2 or 3) or explicit ordinates.
    Bezier {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        preset: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ordinates: Option<[f64; 6]>,
    },
}

impl PenalisationConfig {
    pub fn resolve(&self) -> Result<Penalisation> {
        match self {
            PenalisationConfig::Power { exponent } => Penalisation::power(*exponent)
                .map_err(|e| IoError::config(format!("topopt.penalisation: {e}"))),
            PenalisationConfig::Bezier { preset, ordinates } => match (preset, ordinates) {
                (Some(i), None) => Penalisation::bezier_preset(*i)
                    .map_err(|e| IoError::config(format!("topopt.penalisation: {e}"))),
                (None, Some(o)) => Ok(Penalisation::Bezier { ordinates: *o }),
                _ => Err(IoError::config(
                    "topopt.penalisation: give exactly one of `preset` and `ordinates`",
                )),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodConfig {
    Sqp,
    ProjectedGradient,
}

/// Optional overrides of the built-in optimiser defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimiserConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_rel: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patience: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub move_limit: Option<f64>,
}

impl OptimiserConfig {
    /// Applies the overrides on top of `base`.
    pub fn resolve(&self, mut base: Options) -> Options {
        if let Some(m) = self.method {
            base.method = match m {
                MethodConfig::Sqp => Method::Sqp,
                MethodConfig::ProjectedGradient => Method::ProjectedGradient,
            };
        }
        if let Some(v) = self.max_iters {
            base.max_iters = v;
        }
        if let Some(v) = self.tol_rel {
            base.tol_rel = v;
        }
        if let Some(v) = self.patience {
            base.patience = v;
        }
        if let Some(v) = self.move_limit {
            base.move_limit = v;
        }
        base
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeOptConfig {
    /// Bernstein degree of the control prism per direction.
    #[serde(default = "default_degrees")]
    pub degrees: [usize; 3],
    /// Relative margin of the prism beyond the structure's bounds.
    #[serde(default = "default_inflate")]
    pub inflate: f64,
    /// Design variable bound as a fraction of the prism diagonal.
    #[serde(default = "default_bound_fraction")]
    pub bound_fraction: f64,
    /// Control-point grid indices excluded from the design.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fixed_controls: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimiser: Option<OptimiserConfig>,
}

fn default_degrees() -> [usize; 3] {
    [2, 2, 2]
}

fn default_inflate() -> f64 {
    0.01
}

fn default_bound_fraction() -> f64 {
    0.5
}

/// Strut extraction threshold: `relative` compares relative densities,
/// `threshold` physical areas. Default: relative 0.01.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relative: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

pub const DEFAULT_RELATIVE_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Artifact directory, created if missing; `--out` overrides it.
    #[serde(default = "default_out_dir")]
    pub dir: String,
    /// Dump a snapshot every this many accepted iterations (0: only the
    /// final state).
    #[serde(default)]
    pub snapshot_every: usize,
    /// Relative-density bin edges of the strut area histogram.
    #[serde(default = "default_histogram_bins")]
    pub histogram_bins: Vec<f64>,
}

fn default_out_dir() -> String {
    "out".into()
}

fn default_histogram_bins() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: default_out_dir(),
            snapshot_every: 0,
            histogram_bins: default_histogram_bins(),
        }
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    toml::from_str(text).map_err(|e| IoError::config(e.to_string()))
}

pub fn serialise_config(config: &RunConfig) -> Result<String> {
    toml::to_string(config).map_err(|e| IoError::config(format!("serialise: {e}")))
}

/// Reads, parses and validates a configuration. Paths inside the file are
/// resolved relative to its directory.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = crate::read_file(path)?;
    let config = parse_config(&text)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    config.validate(base)?;
    Ok(config)
}

fn err(msg: String) -> Result<()> {
    Err(IoError::Config(msg))
}

fn check_positive(what: &str, value: f64) -> Result<()> {
    if !(value > 0.0) || !value.is_finite() {
        return err(format!("{what}: expected a positive number, got {value}"));
    }
    Ok(())
}

fn check_finite3(what: &str, value: [f64; 3]) -> Result<()> {
    if value.iter().any(|v| !v.is_finite()) {
        return err(format!("{what}: expected finite components, got {value:?}"));
    }
    Ok(())
}

impl RunConfig {
    /// Full validation; `base_dir` anchors relative file references.
    pub fn validate(&self, base_dir: &Path) -> Result<()> {
        match self.problem {
            ProblemKind::Analyze => {
                if self.lattice.is_none() && self.shell.is_none() {
                    return err("analyze needs a [lattice] or a [shell] block".into());
                }
            }
            ProblemKind::Topopt => {
                if self.lattice.is_none() {
                    return err("topopt needs a [lattice] block".into());
                }
                if self.topopt.is_none() {
                    return err("topopt needs a [topopt] block".into());
                }
            }
            ProblemKind::Shapeopt => {
                if self.lattice.is_none() && self.shell.is_none() {
                    return err("shapeopt needs a [lattice] or a [shell] block".into());
                }
                if self.shapeopt.is_none() {
                    return err("shapeopt needs a [shapeopt] block".into());
                }
            }
            ProblemKind::Sequential => {
                if self.lattice.is_none() {
                    return err("sequential needs a [lattice] block".into());
                }
                if self.shapeopt.is_none() || self.topopt.is_none() {
                    return err("sequential needs both [shapeopt] and [topopt] blocks".into());
                }
            }
            ProblemKind::Extract => {
                if self.lattice.is_none() {
                    return err("extract needs a [lattice] block".into());
                }
            }
        }
        if self.attach.is_some() && (self.lattice.is_none() || self.shell.is_none()) {
            return err("[attach] needs both a [lattice] and a [shell] block".into());
        }
        if let Some(lattice) = &self.lattice {
            lattice.validate(base_dir)?;
        }
        if let Some(shell) = &self.shell {
            shell.validate()?;
        }
        if let Some(attach) = &self.attach {
            check_positive("attach.tol", attach.tol)?;
        }
        if let Some(formfind) = &self.formfind {
            if !formfind.scale.is_finite() {
                return err(format!("formfind.scale: expected a finite number, got {}", formfind.scale));
            }
        }
        if let Some(topopt) = &self.topopt {
            topopt.validate()?;
        }
        if let Some(shapeopt) = &self.shapeopt {
            shapeopt.validate()?;
        }
        if let Some(extract) = &self.extract {
            extract.validate()?;
        }
        self.output.validate()?;
        Ok(())
    }
}

impl LatticeConfig {
    fn validate(&self, base_dir: &Path) -> Result<()> {
        match &self.geometry {
            LatticeGeometry::Grid { template, extent, cell, origin } => {
                self.check_generated(template)?;
                check_finite3("lattice.geometry.origin", *origin)?;
                check_finite3("lattice.geometry.extent", *extent)?;
                check_finite3("lattice.geometry.cell", *cell)?;
            }
            LatticeGeometry::Blocks { template, blocks } => {
                self.check_generated(template)?;
                if blocks.is_empty() {
                    return err("lattice.geometry.blocks: at least one block required".into());
                }
                for (i, b) in blocks.iter().enumerate() {
                    check_finite3(&format!("lattice.geometry.blocks[{i}].origin"), b.origin)?;
                    check_finite3(&format!("lattice.geometry.blocks[{i}].cell"), b.cell)?;
                    if b.counts.iter().any(|&c| c == 0) {
                        return err(format!(
                            "lattice.geometry.blocks[{i}].counts: expected positive cell counts, got {:?}",
                            b.counts
                        ));
                    }
                }
            }
            LatticeGeometry::File { path } => {
                if self.youngs_modulus.is_some() || self.area.is_some() || self.volume.is_some() {
                    return err(
                        "lattice: `youngs_modulus`, `area` and `volume` come from the lattice file; remove them"
                            .into(),
                    );
                }
                let full = base_dir.join(path);
                if !full.is_file() {
                    return err(format!("lattice.geometry.path: file not found: {}", full.display()));
                }
            }
        }
        for (i, s) in self.supports.iter().enumerate() {
            let selectors = s.joints.is_some() as usize + s.region.is_some() as usize;
            if selectors != 1 {
                return err(format!(
                    "lattice.supports[{i}]: give exactly one of `joints` and `region`"
                ));
            }
        }
        for (i, l) in self.loads.iter().enumerate() {
            check_finite3(&format!("lattice.loads[{i}].force"), l.force)?;
            let selectors = l.joint.is_some() as usize + l.at.is_some() as usize;
            if selectors != 1 {
                return err(format!("lattice.loads[{i}]: give exactly one of `joint` and `at`"));
            }
        }
        Ok(())
    }

    fn check_generated(&self, template: &str) -> Result<()> {
        if lattice_skin_core::lattice::CellTemplate::builtin(template).is_none() {
            return err(format!("lattice.geometry.template: unknown template `{template}`"));
        }
        let Some(e) = self.youngs_modulus else {
            return err("lattice.youngs_modulus: required for generated lattices".into());
        };
        check_positive("lattice.youngs_modulus", e)?;
        match (self.area, self.volume) {
            (Some(a), None) => check_positive("lattice.area", a),
            (None, Some(v)) => check_positive("lattice.volume", v),
            _ => err("lattice: give exactly one of `area` and `volume`".into()),
        }
    }
}

impl ShellConfig {
    fn validate(&self) -> Result<()> {
        check_positive("shell.youngs_modulus", self.youngs_modulus)?;
        check_positive("shell.thickness", self.thickness)?;
        if !(self.poisson_ratio > -1.0 && self.poisson_ratio < 0.5) {
            return err(format!(
                "shell.poisson_ratio: expected a value in (-1, 0.5), got {}",
                self.poisson_ratio
            ));
        }
        check_finite3("shell.pressure", self.pressure)?;
        match &self.geometry {
            ShellGeometry::Rect { patches } => {
                if patches.is_empty() {
                    return err("shell.geometry.patches: at least one patch required".into());
                }
                for (i, p) in patches.iter().enumerate() {
                    check_finite3(&format!("shell.geometry.patches[{i}].origin"), p.origin)?;
                    check_finite3(&format!("shell.geometry.patches[{i}].ex"), p.ex)?;
                    check_finite3(&format!("shell.geometry.patches[{i}].ey"), p.ey)?;
                    if p.nx == 0 || p.ny == 0 {
                        return err(format!(
                            "shell.geometry.patches[{i}]: nx and ny must be positive"
                        ));
                    }
                }
            }
            ShellGeometry::Pentagon { circumradius, .. } => {
                check_positive("shell.geometry.circumradius", *circumradius)?;
            }
        }
        let pentagon = matches!(self.geometry, ShellGeometry::Pentagon { .. });
        for (i, s) in self.supports.iter().enumerate() {
            let selectors = s.vertices.is_some() as usize
                + s.region.is_some() as usize
                + s.boundary as usize
                + s.pentagon_midedges as usize;
            if selectors != 1 {
                return err(format!(
                    "shell.supports[{i}]: give exactly one of `vertices`, `region`, `boundary` and `pentagon_midedges`"
                ));
            }
            if s.pentagon_midedges && !pentagon {
                return err(format!(
                    "shell.supports[{i}]: `pentagon_midedges` needs pentagon geometry"
                ));
            }
        }
        Ok(())
    }
}

impl TopOptConfig {
    fn validate(&self) -> Result<()> {
        if !(self.volume_fraction > 0.0 && self.volume_fraction <= 1.0) {
            return err(format!(
                "topopt.volume_fraction: expected a value in (0, 1], got {}",
                self.volume_fraction
            ));
        }
        check_positive("topopt.filter_radius", self.filter_radius)?;
        self.penalisation.resolve()?;
        Ok(())
    }

    /// The solver options this block describes.
    pub fn resolve(&self) -> Result<lattice_skin_core::topopt::TopOptOptions> {
        let pen = self.penalisation.resolve()?;
        let mut options = lattice_skin_core::topopt::TopOptOptions::new(
            self.volume_fraction,
            pen,
            self.filter_radius,
        );
        if let Some(o) = &self.optimiser {
            options.optim = o.resolve(options.optim);
        }
        Ok(options)
    }
}

impl ShapeOptConfig {
    fn validate(&self) -> Result<()> {
        if self.degrees.iter().any(|&d| d == 0) {
            return err(format!(
                "shapeopt.degrees: expected degrees >= 1, got {:?}",
                self.degrees
            ));
        }
        if !(self.inflate >= 0.0) || !self.inflate.is_finite() {
            return err(format!(
                "shapeopt.inflate: expected a non-negative number, got {}",
                self.inflate
            ));
        }
        check_positive("shapeopt.bound_fraction", self.bound_fraction)?;
        Ok(())
    }

    /// The solver options this block describes.
    pub fn resolve(&self) -> lattice_skin_core::shapeopt::ShapeOptions {
        let mut options = lattice_skin_core::shapeopt::ShapeOptions {
            degrees: self.degrees,
            inflate: self.inflate,
            bound_fraction: self.bound_fraction,
            fixed_controls: self.fixed_controls.clone(),
            ..Default::default()
        };
        if let Some(o) = &self.optimiser {
            options.optim = o.resolve(options.optim);
        }
        options
    }
}

impl ExtractConfig {
    fn validate(&self) -> Result<()> {
        match (self.relative, self.threshold) {
            (Some(_), Some(_)) => {
                err("extract: give at most one of `relative` and `threshold`".into())
            }
            (Some(r), None) if !(r >= 0.0) => {
                err(format!("extract.relative: expected a non-negative number, got {r}"))
            }
            (None, Some(t)) if !(t >= 0.0) => {
                err(format!("extract.threshold: expected a non-negative number, got {t}"))
            }
            _ => Ok(()),
        }
    }
}

impl OutputConfig {
    fn validate(&self) -> Result<()> {
        if self.histogram_bins.len() < 2 {
            return err("output.histogram_bins: at least two bin edges required".into());
        }
        if self.histogram_bins.windows(2).any(|w| !(w[0] < w[1])) {
            return err("output.histogram_bins: bin edges must be strictly increasing".into());
        }
        Ok(())
    }
}
