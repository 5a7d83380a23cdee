//! Infill optimisation checks: analytic sensitivities against finite
//! differences, the cell filter against a direct computation, and the
//! optimiser driver on small cantilevers.

use approx::{assert_abs_diff_eq, assert_relative_eq};
use lattice_skin_core::geometry::{Aabb, Point, Vec3};
use lattice_skin_core::lattice::{CellTemplate, JointSupport, LatticeModel};
use lattice_skin_core::penalise::{Penalisation, STIFFNESS_FLOOR};
use lattice_skin_core::topopt::{
    compliance_and_sensitivity, effective_areas, run_topopt, SensitivityFilter, TopOptOptions,
    TrussCompliance,
};
use lattice_skin_core::truss::{self, PointLoad};

fn rnd(state: &mut u64) -> f64 {
    *state = state
        .wrapping_mul(6364136223846793005)
        .wrapping_add(1442695040888963407);
    (*state >> 11) as f64 / (1u64 << 53) as f64
}

fn cantilever(m: usize, n: usize, cell: f64, area: f64) -> (LatticeModel, Vec<PointLoad>) {
    let domain = Aabb {
        min: Point::origin(),
        max: Point::new(m as f64 * cell, n as f64 * cell, 0.0),
    };
    let mut lattice = lattice_skin_core::lattice::generate_grid_lattice(
        &domain,
        Vec3::new(cell, cell, 0.0),
        &CellTemplate::square_x2d(),
        7.0e7,
        area,
    )
    .unwrap();
    for (j, joint) in lattice.joints.iter().enumerate() {
        if joint.position.x.abs() < 1e-9 {
            lattice.supports.push(JointSupport { joint: j, fixed: [true, true, true] });
        }
    }
    let tip = Point::new(m as f64 * cell, n as f64 * cell / 2.0, 0.0);
    let tip_joint = lattice
        .joints
        .iter()
        .enumerate()
        .min_by(|a, b| {
            (a.1.position - tip).norm().total_cmp(&(b.1.position - tip).norm())
        })
        .map(|(j, _)| j)
        .unwrap();
    let loads = vec![PointLoad { joint: tip_joint, force: Vec3::new(0.0, -100.0, 0.0) }];
    (lattice, loads)
}

#[test]
fn sensitivities_match_finite_differences() {
    let (lattice, loads) = cantilever(2, 1, 1.0, 5e-3);
    assert!(lattice.struts.len() <= 50);
    let geometry = truss::strut_geometries(&lattice).unwrap();
    let mut state = 42u64;
    let rho: Vec<f64> = (0..lattice.struts.len()).map(|_| 0.2 + 0.7 * rnd(&mut state)).collect();

    for pen in [Penalisation::power(3.0).unwrap(), Penalisation::bezier_preset(2).unwrap()] {
        let mut solver = TrussCompliance { lattice: &lattice, loads: loads.clone() };
        let (j0, grad) =
            compliance_and_sensitivity(&lattice, &geometry, &mut solver, &pen, &rho).unwrap();
        assert!(j0 > 0.0);
        let h = 1e-6;
        for e in 0..lattice.struts.len() {
            let mut plus = rho.clone();
            plus[e] += h;
            let mut minus = rho.clone();
            minus[e] -= h;
            let mut solver = TrussCompliance { lattice: &lattice, loads: loads.clone() };
            let (jp, _) =
                compliance_and_sensitivity(&lattice, &geometry, &mut solver, &pen, &plus).unwrap();
            let mut solver = TrussCompliance { lattice: &lattice, loads: loads.clone() };
            let (jm, _) =
                compliance_and_sensitivity(&lattice, &geometry, &mut solver, &pen, &minus).unwrap();
            let fd = (jp - jm) / (2.0 * h);
            assert_relative_eq!(grad[e], fd, epsilon = 1e-5 * j0.abs(), max_relative = 1e-5);
        }
    }
}

#[test]
fn filter_matches_a_direct_computation() {
    let (lattice, _) = cantilever(3, 1, 1.0, 1e-2);
    let radius = 1.0;
    let filter = SensitivityFilter::build(&lattice, radius).unwrap();
    let geometry = truss::strut_geometries(&lattice).unwrap();
    let mut state = 7u64;
    let sens: Vec<f64> = (0..lattice.struts.len()).map(|_| -rnd(&mut state)).collect();
    let got = filter.apply(&sens);

    // Direct evaluation of the definition.
    let owners = lattice.strut_owners();
    let mut cell_value = vec![0.0; lattice.cells.len()];
    for (c, cell) in lattice.cells.iter().enumerate() {
        let mut num = 0.0;
        let mut den = 0.0;
        let mut used = std::collections::HashSet::new();
        for other in &lattice.cells {
            if (other.centroid - cell.centroid).norm() <= radius + 1e-12 {
                for e in other.strut_ids() {
                    if used.insert(e) {
                        let w = (radius - (geometry[e].centroid - cell.centroid).norm()).max(0.0);
                        num += w * sens[e] / geometry[e].length;
                        den += w / geometry[e].length;
                    }
                }
            }
        }
        cell_value[c] = num / den;
    }
    for e in 0..lattice.struts.len() {
        let want: f64 =
            owners[e].iter().map(|&c| cell_value[c]).sum::<f64>() / owners[e].len() as f64;
        assert_relative_eq!(got[e], want, max_relative = 1e-12);
    }

    // Adjacent cells participate, distant ones do not.
    let c0 = &lattice.cells[0];
    let c2 = &lattice.cells[2];
    assert!((c0.centroid - lattice.cells[1].centroid).norm() <= radius + 1e-12);
    assert!((c0.centroid - c2.centroid).norm() > radius + 1e-12);
}

#[test]
fn uniform_sensitivities_pass_through_the_filter() {
    let (lattice, _) = cantilever(3, 2, 0.5, 1e-2);
    let filter = SensitivityFilter::build(&lattice, 0.75).unwrap();
    let sens = vec![-2.5; lattice.struts.len()];
    for v in filter.apply(&sens) {
        assert_abs_diff_eq!(v, -2.5, epsilon = 1e-12);
    }
}

#[test]
fn stiffness_floor_keeps_vanishing_struts_positive() {
    let (lattice, _) = cantilever(2, 1, 1.0, 5e-3);
    let pen = Penalisation::power(4.0).unwrap();
    let rho = vec![1e-6; lattice.struts.len()];
    for (a, s) in effective_areas(&lattice, &pen, &rho).iter().zip(&lattice.struts) {
        assert!(*a >= STIFFNESS_FLOOR * s.reference_area);
        assert!(*a > 0.0);
    }
}

#[test]
fn full_volume_budget_stays_at_the_upper_bound() {
    let (lattice, loads) = cantilever(2, 1, 1.0, 5e-3);
    let mut solver = TrussCompliance { lattice: &lattice, loads: loads.clone() };
    let mut options = TopOptOptions::new(1.0, Penalisation::power(3.0).unwrap(), 1.1);
    options.optim.max_iters = 40;
    let outcome = run_topopt(&lattice, &mut solver, &options).unwrap();
    for &r in &outcome.rho {
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-9);
    }
    let system = truss::assemble_truss(&lattice, &lattice.reference_areas()).unwrap();
    let reference = truss::solve_truss(&system, &loads).unwrap();
    assert_relative_eq!(outcome.compliance, reference.compliance, max_relative = 1e-10);
}

#[test]
fn optimisation_improves_on_the_uniform_start() {
    let (lattice, loads) = cantilever(4, 2, 0.5, 5e-3);
    let vf = 0.5;
    let pen = Penalisation::power(3.0).unwrap();

    let mut solver = TrussCompliance { lattice: &lattice, loads: loads.clone() };
    let rho0 = vec![vf; lattice.struts.len()];
    let geometry = truss::strut_geometries(&lattice).unwrap();
    let (j_uniform, _) =
        compliance_and_sensitivity(&lattice, &geometry, &mut solver, &pen, &rho0).unwrap();

    let mut solver = TrussCompliance { lattice: &lattice, loads: loads.clone() };
    let mut options = TopOptOptions::new(vf, pen, 0.75);
    options.optim.max_iters = 120;
    let outcome = run_topopt(&lattice, &mut solver, &options).unwrap();

    assert!(outcome.compliance < j_uniform, "{} !< {}", outcome.compliance, j_uniform);
    assert!(outcome.volume_fraction <= vf + 1e-9);
    assert!(outcome.history.first().unwrap().objective >= outcome.compliance - 1e-12);
}

#[test]
fn larger_volume_budgets_are_stiffer() {
    let (lattice, loads) = cantilever(4, 2, 0.5, 5e-3);
    let run = |vf: f64| {
        let mut solver = TrussCompliance { lattice: &lattice, loads: loads.clone() };
        let mut options = TopOptOptions::new(vf, Penalisation::power(3.0).unwrap(), 0.75);
        options.optim.max_iters = 120;
        run_topopt(&lattice, &mut solver, &options).unwrap().compliance
    };
    let j_small = run(0.4);
    let j_large = run(0.7);
    assert!(j_large < j_small, "{j_large} !< {j_small}");
}
