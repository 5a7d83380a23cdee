//! Kirchhoff-Love thin shells on quad-mesh subdivision limit surfaces.

pub mod basis;
pub mod element;
pub mod mesh;
pub mod meshgen;
pub mod patch;

pub use element::{
    assemble_shell, project_point, shell_face_entries, solve_shell, LimitPoint, ShellMaterial,
    ShellModel, ShellSolution, ShellSystem, SurfaceFrame, SurfaceLocator,
};
pub use mesh::{ExtMesh, ShellMesh};
pub use patch::{EvTables, Patch, PatchTable};
