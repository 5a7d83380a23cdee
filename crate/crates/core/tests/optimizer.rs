//! Optimiser behaviour on closed-form problems: quadratic bowls,
//! Rosenbrock, constrained projections against a KKT enumeration oracle.

use lattice_skin_core::optimizer::{
    minimise, project_box_halfspace, Method, NlpProblem, Options, Status,
};
use proptest::prelude::*;

/// min sum (x_i - c_i)^2 with box [0,1] and optional sum(x) <= cap.
struct Quadratic {
    c: Vec<f64>,
    cap: Option<f64>,
    nonlinear_interface: bool,
}

impl NlpProblem for Quadratic {
    fn dim(&self) -> usize {
        self.c.len()
    }
    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![0.0; self.c.len()], vec![1.0; self.c.len()])
    }
    fn objective(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        let mut f = 0.0;
        for i in 0..x.len() {
            f += (x[i] - self.c[i]).powi(2);
            grad[i] = 2.0 * (x[i] - self.c[i]);
        }
        f
    }
    fn constraint(&mut self, x: &[f64], grad: &mut [f64]) -> Option<f64> {
        if !self.nonlinear_interface {
            return None;
        }
        self.cap.map(|cap| {
            grad.fill(1.0);
            x.iter().sum::<f64>() - cap
        })
    }
    fn linear_constraint(&self) -> Option<(Vec<f64>, f64)> {
        if self.nonlinear_interface {
            return None;
        }
        self.cap.map(|cap| (vec![1.0; self.c.len()], cap))
    }
}

#[test]
fn clamped_minimum_of_one_dimensional_bowl() {
    // min (x-2)^2 on [0,1] -> x = 1.
    for method in [Method::Sqp, Method::ProjectedGradient] {
        let mut p = Quadratic { c: vec![2.0], cap: None, nonlinear_interface: false };
        let opts = Options { method, max_iters: 500, tol_rel: 1e-12, ..Options::default() };
        let r = minimise(&mut p, &[0.2], &opts).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-6, "{method:?}: {}", r.x[0]);
        assert!((r.objective - 1.0).abs() < 1e-6);
        assert_eq!(r.status, Status::Converged);
    }
}

#[test]
fn sum_capped_bowl_reaches_the_symmetric_kkt_point() {
    // min (x0-2)^2 + (x1-2)^2, x0+x1 <= 2 -> (1,1), objective 2.
    for (method, nonlinear) in
        [(Method::Sqp, true), (Method::Sqp, false), (Method::ProjectedGradient, false)]
    {
        let mut p = Quadratic { c: vec![2.0, 2.0], cap: Some(2.0), nonlinear_interface: nonlinear };
        let opts = Options { method, max_iters: 2000, tol_rel: 1e-13, ..Options::default() };
        let r = minimise(&mut p, &[0.1, 0.6], &opts).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-5, "{method:?}/{nonlinear}: {:?}", r.x);
        assert!((r.x[1] - 1.0).abs() < 1e-5);
        assert!((r.objective - 2.0).abs() < 1e-4);
    }
}

struct Rosenbrock;

impl NlpProblem for Rosenbrock {
    fn dim(&self) -> usize {
        2
    }
    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![-2.0; 2], vec![2.0; 2])
    }
    fn objective(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        grad[0] = -400.0 * a * (b - a * a) - 2.0 * (1.0 - a);
        grad[1] = 200.0 * (b - a * a);
        100.0 * (b - a * a).powi(2) + (1.0 - a).powi(2)
    }
}

#[test]
fn rosenbrock_converges_from_the_standard_start() {
    let opts = Options { method: Method::Sqp, max_iters: 600, tol_rel: 1e-14, patience: 5, ..Options::default() };
    let r = minimise(&mut Rosenbrock, &[-1.2, 1.0], &opts).unwrap();
    assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4, "{:?}", r.x);
}

#[test]
fn objective_history_trends_downwards() {
    let mut p = Quadratic { c: vec![0.9, 0.8, 0.7], cap: Some(1.5), nonlinear_interface: false };
    let opts =
        Options { method: Method::ProjectedGradient, max_iters: 400, tol_rel: 1e-12, ..Options::default() };
    let r = minimise(&mut p, &[0.0, 0.0, 0.0], &opts).unwrap();
    let first = r.history.first().unwrap().objective;
    let last = r.history.last().unwrap().objective;
    assert!(last < first);
    // The final iterate satisfies the constraint.
    assert!(r.x.iter().sum::<f64>() <= 1.5 + 1e-9);
}

#[test]
fn runs_are_bitwise_deterministic() {
    let run = || {
        let mut p = Quadratic { c: vec![1.4, -0.3, 0.8, 0.6], cap: Some(1.9), nonlinear_interface: false };
        let opts = Options { method: Method::Sqp, max_iters: 200, ..Options::default() };
        minimise(&mut p, &[0.5, 0.5, 0.5, 0.5], &opts).unwrap()
    };
    let a = run();
    let b = run();
    assert_eq!(a.x, b.x);
    assert_eq!(a.iterations, b.iterations);
    let ha: Vec<f64> = a.history.iter().map(|h| h.objective).collect();
    let hb: Vec<f64> = b.history.iter().map(|h| h.objective).collect();
    assert_eq!(ha, hb);
}

struct PoisonedAfter {
    calls: usize,
}

impl NlpProblem for PoisonedAfter {
    fn dim(&self) -> usize {
        1
    }
    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![-1.0], vec![1.0])
    }
    fn objective(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.calls += 1;
        grad[0] = 2.0 * x[0];
        if self.calls > 2 {
            f64::NAN
        } else {
            x[0] * x[0]
        }
    }
}

#[test]
fn non_finite_start_aborts_with_diagnostic() {
    // Poisoned from the first call: no method can begin.
    for method in [Method::Sqp, Method::ProjectedGradient] {
        let opts = Options { method, ..Options::default() };
        let err = minimise(&mut PoisonedAfter { calls: 2 }, &[0.9], &opts).unwrap_err();
        assert!(matches!(err, lattice_skin_core::Error::NonFiniteCallback { .. }));
    }
}

#[test]
fn late_non_finite_values_stall_sqp_and_abort_projected_gradient() {
    // The projected gradient walks into the poisoned region and reports it.
    let opts = Options { method: Method::ProjectedGradient, ..Options::default() };
    let err = minimise(&mut PoisonedAfter { calls: 0 }, &[0.9], &opts).unwrap_err();
    assert!(matches!(err, lattice_skin_core::Error::NonFiniteCallback { .. }));

    // SQP treats poisoned trials as rejected steps and keeps the last good
    // iterate instead of failing.
    let opts = Options { method: Method::Sqp, ..Options::default() };
    let r = minimise(&mut PoisonedAfter { calls: 0 }, &[0.9], &opts).unwrap();
    assert_eq!(r.status, Status::Stalled);
    assert!(r.objective.is_finite());
}

#[test]
fn iteration_budget_is_respected() {
    // Reaching the bound at 1 needs ten 0.1-sized moves from the origin.
    let mut p = Quadratic { c: vec![2.0; 6], cap: None, nonlinear_interface: false };
    let opts =
        Options { method: Method::ProjectedGradient, max_iters: 4, tol_rel: 1e-16, ..Options::default() };
    let r = minimise(&mut p, &[0.0; 6], &opts).unwrap();
    assert_eq!(r.status, Status::MaxIter);
    assert_eq!(r.iterations, 4);
}

/// Exhaustive KKT-pattern oracle for the projection onto
/// {l <= z <= u, a.z <= b}: tries every bound/active combination and keeps
/// the feasible candidate closest to x.
fn projection_oracle(x: &[f64], l: &[f64], u: &[f64], a: &[f64], b: f64) -> Vec<f64> {
    let n = x.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let patterns = 3usize.pow(n as u32);
    for active in [false, true] {
        for mut code in 0..patterns {
            let mut state = vec![0usize; n];
            for s in state.iter_mut() {
                *s = code % 3;
                code /= 3;
            }
            // states: 0 free, 1 at lower, 2 at upper
            let mut z = vec![0.0; n];
            let mut lambda = 0.0;
            if active {
                // Free components satisfy z_i = x_i - lambda a_i with
                // a.z = b.
                let mut fixed_sum = 0.0;
                let mut free_ax = 0.0;
                let mut free_aa = 0.0;
                for i in 0..n {
                    match state[i] {
                        1 => fixed_sum += a[i] * l[i],
                        2 => fixed_sum += a[i] * u[i],
                        _ => {
                            free_ax += a[i] * x[i];
                            free_aa += a[i] * a[i];
                        }
                    }
                }
                if free_aa < 1e-30 {
                    continue;
                }
                lambda = (free_ax + fixed_sum - b) / free_aa;
                if lambda < -1e-12 {
                    continue;
                }
            }
            for i in 0..n {
                z[i] = match state[i] {
                    1 => l[i],
                    2 => u[i],
                    _ => x[i] - lambda * a[i],
                };
            }
            let feasible = (0..n).all(|i| z[i] >= l[i] - 1e-9 && z[i] <= u[i] + 1e-9)
                && z.iter().zip(a).map(|(z, a)| z * a).sum::<f64>() <= b + 1e-9;
            if !feasible {
                continue;
            }
            let d: f64 = z.iter().zip(x).map(|(z, x)| (z - x).powi(2)).sum();
            if best.as_ref().map_or(true, |(bd, _)| d < *bd - 1e-15) {
                best = Some((d, z));
            }
        }
    }
    best.expect("feasible set is non-empty").1
}

proptest! {
    #[test]
    fn projection_matches_enumeration_oracle(
        x in proptest::collection::vec(-2.0f64..3.0, 1..5),
        a in proptest::collection::vec(0.1f64..2.0, 4),
        slack in 0.1f64..3.0,
    ) {
        let n = x.len();
        let l = vec![0.0; n];
        let u = vec![1.0; n];
        let a = &a[..n];
        // Keep the problem feasible: the box corner at l has a.l = 0 <= b.
        let b = slack;
        let z = project_box_halfspace(&x, &l, &u, a, b);
        let z_ref = projection_oracle(&x, &l, &u, a, b);
        for i in 0..n {
            prop_assert!((z[i] - z_ref[i]).abs() < 1e-6, "{z:?} vs {z_ref:?}");
        }
    }
}

/// Wraps a problem and records every iterate reported through `accepted`.
struct Recorded<P> {
    inner: P,
    seen: Vec<(usize, Vec<f64>)>,
}

impl<P: NlpProblem> NlpProblem for Recorded<P> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        self.inner.bounds()
    }
    fn objective(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.inner.objective(x, grad)
    }
    fn constraint(&mut self, x: &[f64], grad: &mut [f64]) -> Option<f64> {
        self.inner.constraint(x, grad)
    }
    fn linear_constraint(&self) -> Option<(Vec<f64>, f64)> {
        self.inner.linear_constraint()
    }
    fn accepted(&mut self, iter: usize, x: &[f64]) {
        self.seen.push((iter, x.to_vec()));
    }
}

#[test]
fn accepted_reports_the_start_point_and_every_iterate() {
    for method in [Method::Sqp, Method::ProjectedGradient] {
        let inner = Quadratic { c: vec![0.7, 0.2], cap: None, nonlinear_interface: false };
        let mut p = Recorded { inner, seen: Vec::new() };
        let opts = Options { method, max_iters: 200, tol_rel: 1e-10, ..Options::default() };
        let r = minimise(&mut p, &[0.0, 0.0], &opts).unwrap();
        assert!(!p.seen.is_empty());
        // First report is the clamped start point, last matches the result.
        assert_eq!(p.seen[0].0, 0);
        assert_eq!(p.seen[0].1, vec![0.0, 0.0]);
        let last = p.seen.last().unwrap();
        assert_eq!(last.1, r.x, "{method:?}");
        // Iteration indices are strictly increasing.
        for w in p.seen.windows(2) {
            assert!(w[0].0 < w[1].0, "{method:?}: {:?}", w.iter().map(|s| s.0).collect::<Vec<_>>());
        }
    }
}
