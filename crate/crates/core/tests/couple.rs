//! Coupling checks: attachment projection, slaved kinematics, load
//! transfer, and agreement with decoupled solves.

use approx::{assert_abs_diff_eq, assert_relative_eq};
use lattice_skin_core::couple::{attach_by_projection, solve_coupled, Coupler};
use lattice_skin_core::geometry::{Point, Vec3};
use lattice_skin_core::lattice::{Joint, JointSupport, LatticeModel, Strut};
use lattice_skin_core::shell::meshgen::rect_grid;
use lattice_skin_core::shell::{solve_shell, ShellMaterial, ShellModel};
use lattice_skin_core::truss::{assemble_truss, solve_truss, PointLoad};
use lattice_skin_core::{sparse, Error};

fn raw_lattice(positions: &[[f64; 3]], struts: &[[usize; 2]], area: f64, e_mod: f64) -> LatticeModel {
    LatticeModel {
        joints: positions
            .iter()
            .map(|p| Joint { position: Point::new(p[0], p[1], p[2]), attachment: None })
            .collect(),
        struts: struts
            .iter()
            .map(|s| Strut { joints: *s, area, reference_area: area })
            .collect(),
        cells: Vec::new(),
        supports: Vec::new(),
        youngs_modulus: e_mod,
        dim: 3,
    }
}

fn plate_model(n: usize, span: f64) -> (ShellModel, Vec<JointSupport>) {
    let mesh = rect_grid(
        Point::origin(),
        Vec3::new(span, 0.0, 0.0),
        Vec3::new(0.0, span, 0.0),
        n,
        n,
    );
    let model = ShellModel::new(mesh).unwrap();
    let mut supports = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            if i == 0 || j == 0 || i == n || j == n {
                supports.push(JointSupport { joint: j * (n + 1) + i, fixed: [true, true, true] });
            }
        }
    }
    (model, supports)
}

const MAT: ShellMaterial = ShellMaterial { youngs_modulus: 7.0e7, poisson_ratio: 0.3, thickness: 0.05 };

#[test]
fn projection_attaches_surface_joints_and_skips_distant_ones() {
    let (shell, _) = plate_model(4, 2.0);
    let mut lattice = raw_lattice(
        &[[0.5, 0.5, 0.0], [0.5, 0.5, -1.0], [1.3, 0.7, 0.0]],
        &[[0, 1], [1, 2]],
        1e-3,
        7.0e7,
    );
    let count = attach_by_projection(&mut lattice, &shell, 1e-8).unwrap();
    assert_eq!(count, 2);
    for j in [0usize, 2] {
        let att = lattice.joints[j].attachment.expect("surface joint attaches");
        let lp = shell.limit_evaluate(att.face, att.coord[0], att.coord[1]);
        let d = (lp.frame.x - lattice.joints[j].position).norm();
        assert!(d <= 1e-8, "attachment round trip distance {d}");
    }
    assert!(lattice.joints[1].attachment.is_none());
}

#[test]
fn attached_joints_follow_the_limit_surface() {
    let (shell, shell_supports) = plate_model(4, 2.0);
    let mut lattice = raw_lattice(
        &[[0.5, 0.5, 0.0], [0.5, 0.5, -1.0]],
        &[[0, 1]],
        1e-4,
        7.0e7,
    );
    attach_by_projection(&mut lattice, &shell, 1e-8).unwrap();
    // A single hanging strut is a pendulum; hold the free end laterally.
    lattice.supports = vec![JointSupport { joint: 1, fixed: [true, true, false] }];
    let coupler = Coupler::new(&shell, &MAT, &shell_supports, &lattice).unwrap();
    let loads = vec![PointLoad { joint: 1, force: Vec3::new(2.0, -1.0, -10.0) }];
    let sol = solve_coupled(&coupler, &lattice, &lattice.areas(), &loads, &[]).unwrap();

    let att = lattice.joints[0].attachment.unwrap();
    let lp = shell.limit_evaluate(att.face, att.coord[0], att.coord[1]);
    let interpolated: Vec3 = lp
        .verts
        .iter()
        .zip(&lp.n)
        .map(|(&v, &w)| w * sol.shell_u[v])
        .sum();
    assert_relative_eq!(sol.lattice_u[0], interpolated, epsilon = 1e-14, max_relative = 1e-12);
}

#[test]
fn hanging_strut_transfers_its_load_to_the_shell() {
    let (shell, shell_supports) = plate_model(4, 2.0);
    let area = 1e-4;
    let e_mod = 7.0e7;
    let mut lattice = raw_lattice(&[[1.0, 1.0, 0.0], [1.0, 1.0, -1.0]], &[[0, 1]], area, e_mod);
    attach_by_projection(&mut lattice, &shell, 1e-8).unwrap();
    assert!(lattice.joints[0].attachment.is_some());
    lattice.supports = vec![JointSupport { joint: 1, fixed: [true, true, false] }];

    let coupler = Coupler::new(&shell, &MAT, &shell_supports, &lattice).unwrap();
    let f = 10.0;
    let loads = vec![PointLoad { joint: 1, force: Vec3::new(0.0, 0.0, -f) }];
    let sol = solve_coupled(&coupler, &lattice, &lattice.areas(), &loads, &[]).unwrap();

    // The shell sees a centre point load equal to the hanging weight.
    let att = lattice.joints[0].attachment.unwrap();
    let lp = shell.limit_evaluate(att.face, att.coord[0], att.coord[1]);
    let mut shell_loads = vec![Vec3::zeros(); shell.vertex_count()];
    for (&v, &w) in lp.verts.iter().zip(&lp.n) {
        shell_loads[v] = Vec3::new(0.0, 0.0, -f * w);
    }
    let reference = solve_shell(&shell, &MAT, &shell_supports, &shell_loads).unwrap();
    for v in 0..shell.vertex_count() {
        assert_relative_eq!(sol.shell_u[v], reference.u[v], epsilon = 1e-12, max_relative = 1e-9);
    }

    // Bottom joint stretches the strut by f l / (E A) below the top joint.
    let stretch = f * 1.0 / (e_mod * area);
    assert_relative_eq!(sol.lattice_u[1].z, sol.lattice_u[0].z - stretch, max_relative = 1e-10);

    // Reported coupling force is the hanging weight.
    assert_relative_eq!(sol.coupling_forces[0], Vec3::new(0.0, 0.0, -f), epsilon = 1e-10, max_relative = 1e-8);
    assert_abs_diff_eq!(sol.coupling_forces[1].norm(), 0.0);
}

#[test]
fn unattached_models_match_independent_solves() {
    let (shell, shell_supports) = plate_model(4, 2.0);
    let mut lattice = raw_lattice(
        &[[10.0, 0.0, 0.0], [11.0, 0.0, 0.0], [11.0, 1.0, 0.0], [10.0, 1.0, 0.0], [10.5, 0.5, 1.0]],
        &[[0, 4], [1, 4], [2, 4], [3, 4]],
        2e-3,
        7.0e7,
    );
    lattice.supports = (0..4).map(|j| JointSupport { joint: j, fixed: [true, true, true] }).collect();

    let shell_loads = shell.pressure_load(Vec3::new(0.0, 0.0, -1.0e3));
    let lattice_loads = vec![PointLoad { joint: 4, force: Vec3::new(5.0, 1.0, -20.0) }];

    let coupler = Coupler::new(&shell, &MAT, &shell_supports, &lattice).unwrap();
    let sol = solve_coupled(&coupler, &lattice, &lattice.areas(), &lattice_loads, &shell_loads).unwrap();

    let shell_only = solve_shell(&shell, &MAT, &shell_supports, &shell_loads).unwrap();
    let truss_system = assemble_truss(&lattice, &lattice.areas()).unwrap();
    let truss_only = solve_truss(&truss_system, &lattice_loads).unwrap();

    assert_relative_eq!(
        sol.compliance,
        shell_only.compliance + truss_only.compliance,
        max_relative = 1e-12
    );
    for v in 0..shell.vertex_count() {
        assert_relative_eq!(sol.shell_u[v], shell_only.u[v], epsilon = 1e-14, max_relative = 1e-12);
    }
    for j in 0..lattice.joints.len() {
        assert_relative_eq!(sol.lattice_u[j], truss_only.u[j], epsilon = 1e-14, max_relative = 1e-12);
    }
}

#[test]
fn vanishing_lattice_stiffness_recovers_the_bare_shell() {
    let (shell, shell_supports) = plate_model(4, 2.0);
    let mut lattice = raw_lattice(
        &[[0.5, 0.5, 0.0], [1.5, 0.5, 0.0], [1.0, 1.5, 0.0], [1.0, 0.8, -0.7]],
        &[[0, 3], [1, 3], [2, 3]],
        1e-12,
        7.0e7,
    );
    attach_by_projection(&mut lattice, &shell, 1e-8).unwrap();
    assert_eq!(lattice.joints.iter().filter(|j| j.attachment.is_some()).count(), 3);

    let shell_loads = shell.pressure_load(Vec3::new(0.0, 0.0, -1.0e3));
    let coupler = Coupler::new(&shell, &MAT, &shell_supports, &lattice).unwrap();
    let sol = solve_coupled(&coupler, &lattice, &lattice.areas(), &[], &shell_loads).unwrap();
    let bare = solve_shell(&shell, &MAT, &shell_supports, &shell_loads).unwrap();
    assert_relative_eq!(sol.compliance, bare.compliance, max_relative = 1e-3);
}

#[test]
fn coupled_energy_identity_and_residual() {
    let (shell, shell_supports) = plate_model(4, 2.0);
    let area = 5e-4;
    let mut lattice = raw_lattice(
        &[[0.5, 0.5, 0.0], [1.5, 0.5, 0.0], [1.0, 1.5, 0.0], [1.0, 0.8, -0.7], [1.0, 0.8, -1.5]],
        &[[0, 3], [1, 3], [2, 3], [3, 4]],
        area,
        7.0e7,
    );
    attach_by_projection(&mut lattice, &shell, 1e-8).unwrap();
    // Joint 4 hangs from a single strut; hold it laterally and load it
    // axially so the support carries nothing.
    lattice.supports = vec![JointSupport { joint: 4, fixed: [true, true, false] }];

    let shell_loads = shell.pressure_load(Vec3::new(0.0, 0.0, -2.0e2));
    let lattice_loads = vec![
        PointLoad { joint: 4, force: Vec3::new(0.0, 0.0, -15.0) },
        PointLoad { joint: 3, force: Vec3::new(0.0, 1.0, -5.0) },
    ];
    let coupler = Coupler::new(&shell, &MAT, &shell_supports, &lattice).unwrap();
    let sol = solve_coupled(&coupler, &lattice, &lattice.areas(), &lattice_loads, &shell_loads).unwrap();

    // Work of loads equals twice the stored energy of both members.
    let geometry = lattice_skin_core::truss::strut_geometries(&lattice).unwrap();
    let truss_energy =
        lattice_skin_core::truss::strain_energy(&lattice, &geometry, &lattice.areas(), &sol.lattice_u);
    let shell_energy = shell.strain_energy(&MAT, &sol.shell_u);
    assert_relative_eq!(sol.compliance, 2.0 * (truss_energy + shell_energy), max_relative = 1e-8);

    // Linear system residual.
    let k = coupler.assemble(&lattice, &lattice.areas()).unwrap();
    let kx = sparse::matvec(&k, &sol.x);
    let f = coupler.rhs(&lattice_loads, &shell_loads);
    let rnorm: f64 = kx.iter().zip(&f).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let fnorm: f64 = f.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(rnorm <= 1e-10 * fnorm, "residual {rnorm:.3e} vs load {fnorm:.3e}");

    // A lattice without its own supports passes all load to the shell.
    let total_coupling: Vec3 = sol.coupling_forces.iter().sum();
    let total_applied: Vec3 = lattice_loads.iter().map(|l| l.force).sum();
    assert_relative_eq!(total_coupling, total_applied, epsilon = 1e-10, max_relative = 1e-8);
}

#[test]
fn supported_and_attached_joints_conflict() {
    let (shell, shell_supports) = plate_model(2, 2.0);
    let mut lattice = raw_lattice(&[[1.0, 1.0, 0.0], [1.0, 1.0, -1.0]], &[[0, 1]], 1e-4, 7.0e7);
    attach_by_projection(&mut lattice, &shell, 1e-8).unwrap();
    lattice.supports = vec![JointSupport { joint: 0, fixed: [true, false, false] }];
    assert!(matches!(
        Coupler::new(&shell, &MAT, &shell_supports, &lattice),
        Err(Error::InvalidModel { .. })
    ));
}
