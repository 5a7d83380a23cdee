//! Bound-constrained minimisation with one scalar inequality constraint.
//!
//! Two methods share one interface: a dense SQP with damped BFGS updates
//! for small problems (shape optimisation), and a projected-gradient
//! method with exact projection onto box plus halfspace for large ones
//! (topology optimisation). Both are fully deterministic.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Optimisation problem: minimise `objective` over box bounds, optionally
/// subject to one scalar inequality `constraint(x) <= 0`.
pub trait NlpProblem {
    fn dim(&self) -> usize;
    /// Lower and upper variable bounds.
    fn bounds(&self) -> (Vec<f64>, Vec<f64>);
    /// Objective value; fills `grad` with the gradient.
    fn objective(&mut self, x: &[f64], grad: &mut [f64]) -> f64;
    /// Inequality value (feasible when <= 0); fills `grad`. None if the
    /// problem is unconstrained beyond the bounds.
    fn constraint(&mut self, _x: &[f64], _grad: &mut [f64]) -> Option<f64> {
        None
    }
    /// Coefficients (a, b) when the inequality is the linear a.x <= b;
    /// required by the projected-gradient method.
    fn linear_constraint(&self) -> Option<(Vec<f64>, f64)> {
        None
    }
    /// Called with the start point and again after every accepted step.
    /// The last `objective` evaluation happened at `x`, so any problem
    /// state matches the iterate. Default: ignored.
    fn accepted(&mut self, _iter: usize, _x: &[f64]) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Dense SQP: damped BFGS model, box QP with dual bisection on the
    /// inequality multiplier, L1 merit line search.
    Sqp,
    /// Projected gradient with an infinity-norm move limit; the inequality
    /// must be linear.
    ProjectedGradient,
}

#[derive(Debug, Clone)]
pub struct Options {
    pub method: Method,
    pub max_iters: usize,
    /// Relative objective change below which an iteration counts towards
    /// convergence.
    pub tol_rel: f64,
    /// Consecutive small-change iterations required to declare convergence.
    pub patience: usize,
    /// Infinity-norm step limit per iteration (projected gradient).
    pub move_limit: f64,
}

impl Default for Options {
    fn default() -> Self {
        Options { method: Method::Sqp, max_iters: 300, tol_rel: 1e-5, patience: 3, move_limit: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIter,
    Stalled,
}

#[derive(Debug, Clone, Copy)]
pub struct HistoryEntry {
    pub objective: f64,
    /// Constraint value at the iterate, 0 when absent.
    pub constraint: f64,
}

#[derive(Debug, Clone)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub objective: f64,
    pub status: Status,
    pub iterations: usize,
    pub history: Vec<HistoryEntry>,
}

pub fn minimise(problem: &mut dyn NlpProblem, x0: &[f64], options: &Options) -> Result<OptimResult> {
    match options.method {
        Method::Sqp => sqp(problem, x0, options),
        Method::ProjectedGradient => projected_gradient(problem, x0, options),
    }
}

fn check_finite(iter: usize, value: f64, grad: &[f64]) -> Result<()> {
    if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteCallback { iter });
    }
    Ok(())
}

fn clamp_to_bounds(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lower[i], upper[i]);
    }
}

/// Euclidean projection onto {lower <= z <= upper, a.z <= b}: clamp first,
/// then if the halfspace is violated bisect the multiplier of z(t) =
/// clamp(x - t a) until a.z = b. a.z(t) is monotone in t, so bisection is
/// exact to floating precision.
pub fn project_box_halfspace(x: &[f64], lower: &[f64], upper: &[f64], a: &[f64], b: f64) -> Vec<f64> {
    let clamp_at = |t: f64| -> Vec<f64> {
        (0..x.len()).map(|i| (x[i] - t * a[i]).clamp(lower[i], upper[i])).collect()
    };
    let dot = |z: &[f64]| -> f64 { z.iter().zip(a).map(|(z, a)| z * a).sum() };
    let z0 = clamp_at(0.0);
    if dot(&z0) <= b {
        return z0;
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    for _ in 0..200 {
        if dot(&clamp_at(hi)) <= b {
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..120 {
        let mid = 0.5 * (lo + hi);
        if dot(&clamp_at(mid)) > b {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    clamp_at(hi)
}

fn projected_gradient(problem: &mut dyn NlpProblem, x0: &[f64], options: &Options) -> Result<OptimResult> {
    let n = problem.dim();
    let (lower, upper) = problem.bounds();
    let linear = problem.linear_constraint();
    let mut x = x0.to_vec();
    clamp_to_bounds(&mut x, &lower, &upper);
    if let Some((a, b)) = &linear {
        x = project_box_halfspace(&x, &lower, &upper, a, *b);
    }

    let mut grad = vec![0.0; n];
    let mut history = Vec::new();
    let mut move_now = options.move_limit;
    let move_floor = 1e-4 * options.move_limit;
    let mut prev_obj = f64::INFINITY;
    let mut quiet_iters = 0;
    let mut status = Status::MaxIter;
    let mut iterations = 0;

    for iter in 0..options.max_iters {
        iterations = iter + 1;
        let f = problem.objective(&x, &mut grad);
        check_finite(iter, f, &grad)?;
        let c = linear
            .as_ref()
            .map(|(a, b)| x.iter().zip(a).map(|(x, a)| x * a).sum::<f64>() - b)
            .unwrap_or(0.0);
        history.push(HistoryEntry { objective: f, constraint: c });
        problem.accepted(iter, &x);

        if f > prev_obj {
            move_now = (0.5 * move_now).max(move_floor);
        } else {
            move_now = (1.2 * move_now).min(options.move_limit);
        }
        let rel_change = (f - prev_obj).abs() / f.abs().max(1e-30);
        if prev_obj.is_finite() && rel_change < options.tol_rel {
            quiet_iters += 1;
            if quiet_iters >= options.patience {
                status = Status::Converged;
                prev_obj = f;
                break;
            }
        } else {
            quiet_iters = 0;
        }

        let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gmax == 0.0 {
            status = Status::Converged;
            prev_obj = f;
            break;
        }
        let gamma = move_now / gmax;
        let trial: Vec<f64> = x.iter().zip(&grad).map(|(x, g)| x - gamma * g).collect();
        let next = match &linear {
            Some((a, b)) => project_box_halfspace(&trial, &lower, &upper, a, *b),
            None => {
                let mut t = trial;
                clamp_to_bounds(&mut t, &lower, &upper);
                t
            }
        };
        let step: f64 = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if step < 1e-15 {
            status = Status::Converged;
            prev_obj = f;
            break;
        }
        if move_now <= move_floor && f > prev_obj {
            status = Status::Stalled;
            prev_obj = f;
            break;
        }
        prev_obj = f;
        if iter + 1 == options.max_iters {
            // Keep x consistent with the last evaluated objective.
            break;
        }
        x = next;
    }

    Ok(OptimResult { objective: prev_obj, x, status, iterations, history })
}

/// Minimises 0.5 d'Bd + q'd over lb <= d <= ub by a primal active-set
/// method. B must be positive definite; 0 must be feasible.
fn solve_box_qp(b_mat: &DMatrix<f64>, q: &DVector<f64>, lb: &[f64], ub: &[f64]) -> DVector<f64> {
    let n = q.len();
    let mut d = DVector::zeros(n);
    // -1 free, 0 at lower, 1 at upper.
    let mut state = vec![-1i8; n];
    let max_rounds = 3 * n + 10;
    for _ in 0..max_rounds {
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == -1).collect();
        let mut cand = d.clone();
        if !free.is_empty() {
            let nf = free.len();
            let mut bff = DMatrix::zeros(nf, nf);
            let mut rhs = DVector::zeros(nf);
            for (r, &i) in free.iter().enumerate() {
                rhs[r] = -q[i];
                for (c, &j) in free.iter().enumerate() {
                    bff[(r, c)] = b_mat[(i, j)];
                }
                for j in 0..n {
                    if state[j] != -1 {
                        rhs[r] -= b_mat[(i, j)] * d[j];
                    }
                }
            }
            let sol = match bff.clone().cholesky() {
                Some(ch) => ch.solve(&rhs),
                None => bff.lu().solve(&rhs).unwrap_or_else(|| DVector::zeros(nf)),
            };
            for (r, &i) in free.iter().enumerate() {
                cand[i] = sol[r];
            }
        }
        // Step towards the candidate until a bound blocks.
        let mut alpha = 1.0f64;
        let mut blocker: Option<(usize, i8)> = None;
        for &i in &free {
            let delta = cand[i] - d[i];
            if delta > 1e-300 && d[i] + alpha * delta > ub[i] {
                let a = (ub[i] - d[i]) / delta;
                if a < alpha {
                    alpha = a;
                    blocker = Some((i, 1));
                }
            } else if delta < -1e-300 && d[i] + alpha * delta < lb[i] {
                let a = (lb[i] - d[i]) / delta;
                if a < alpha {
                    alpha = a;
                    blocker = Some((i, 0));
                }
            }
        }
        for &i in &free {
            d[i] += alpha * (cand[i] - d[i]);
        }
        if let Some((i, side)) = blocker {
            d[i] = if side == 1 { ub[i] } else { lb[i] };
            state[i] = side;
            continue;
        }
        // Full step taken: check multipliers of the active bounds.
        let kkt = b_mat * &d + q;
        let mut worst: Option<(usize, f64)> = None;
        for i in 0..n {
            let viol = match state[i] {
                0 => (-kkt[i]).max(0.0),
                1 => kkt[i].max(0.0),
                _ => 0.0,
            };
            if viol > 1e-12 && worst.map_or(true, |(_, w)| viol > w) {
                worst = Some((i, viol));
            }
        }
        match worst {
            Some((i, _)) => state[i] = -1,
            None => break,
        }
    }
    d
}

/// QP step with the scalar inequality handled by dual bisection: for a
/// multiplier mu the box QP with shifted gradient is solved, and mu is
/// bisected until complementarity holds.
fn qp_step(
    b_mat: &DMatrix<f64>,
    g: &DVector<f64>,
    lb: &[f64],
    ub: &[f64],
    lin: Option<(&DVector<f64>, f64)>,
) -> (DVector<f64>, f64) {
    let Some((a, r)) = lin else {
        return (solve_box_qp(b_mat, g, lb, ub), 0.0);
    };
    let at = |mu: f64| -> DVector<f64> {
        let q = g + a * mu;
        solve_box_qp(b_mat, &q, lb, ub)
    };
    let value = |d: &DVector<f64>| a.dot(d) - r;
    let d0 = at(0.0);
    if value(&d0) <= 1e-12 * (1.0 + r.abs()) {
        return (d0, 0.0);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    for _ in 0..200 {
        if value(&at(hi)) <= 0.0 {
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if value(&at(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (at(hi), hi)
}

fn sqp(problem: &mut dyn NlpProblem, x0: &[f64], options: &Options) -> Result<OptimResult> {
    let n = problem.dim();
    let (lower, upper) = problem.bounds();
    let linear = problem.linear_constraint();
    let mut x = x0.to_vec();
    clamp_to_bounds(&mut x, &lower, &upper);

    let mut grad = vec![0.0; n];
    let mut cgrad = vec![0.0; n];
    let mut b_mat = DMatrix::<f64>::identity(n, n);
    let mut history = Vec::new();
    let mut sigma = 1.0f64;
    let mut prev_obj = f64::INFINITY;
    let mut quiet_iters = 0;
    let mut status = Status::MaxIter;
    let mut iterations = 0;

    // Evaluates objective and constraint, synthesising the latter from the
    // linear coefficients when the problem only provides those. Finiteness
    // is the caller's concern: a non-finite trial only rejects that step.
    let eval = |problem: &mut dyn NlpProblem,
                x: &[f64],
                grad: &mut [f64],
                cgrad: &mut [f64],
                linear: &Option<(Vec<f64>, f64)>|
     -> (f64, Option<f64>) {
        let f = problem.objective(x, grad);
        let c = match problem.constraint(x, cgrad) {
            Some(c) => Some(c),
            None => linear.as_ref().map(|(a, b)| {
                cgrad.copy_from_slice(a);
                x.iter().zip(a).map(|(x, a)| x * a).sum::<f64>() - b
            }),
        };
        (f, c)
    };
    let all_finite = |f: f64, c: Option<f64>, grad: &[f64], cgrad: &[f64]| {
        f.is_finite()
            && grad.iter().all(|g| g.is_finite())
            && c.map_or(true, |c| c.is_finite() && cgrad.iter().all(|g| g.is_finite()))
    };

    let (mut f, mut c) = eval(problem, &x, &mut grad, &mut cgrad, &linear);
    if !all_finite(f, c, &grad, &cgrad) {
        return Err(Error::NonFiniteCallback { iter: 0 });
    }
    problem.accepted(0, &x);
    let ctol = 1e-8;
    let mut just_reset = false;

    for iter in 0..options.max_iters {
        iterations = iter + 1;
        history.push(HistoryEntry { objective: f, constraint: c.unwrap_or(0.0) });

        let rel_change = (f - prev_obj).abs() / f.abs().max(1e-30);
        let feasible = c.map_or(true, |c| c <= ctol * (1.0 + f.abs()));
        if prev_obj.is_finite() && rel_change < options.tol_rel && feasible {
            quiet_iters += 1;
            if quiet_iters >= options.patience {
                status = Status::Converged;
                break;
            }
        } else {
            quiet_iters = 0;
        }
        prev_obj = f;

        let g = DVector::from_column_slice(&grad);
        // Per-iteration step cap keeps early steps physically sensible.
        let cap: Vec<f64> = (0..n).map(|i| options.move_limit * (upper[i] - lower[i])).collect();
        let lb: Vec<f64> = (0..n).map(|i| (lower[i] - x[i]).max(-cap[i])).collect();
        let ub: Vec<f64> = (0..n).map(|i| (upper[i] - x[i]).min(cap[i])).collect();
        let a_vec = c.map(|_| DVector::from_column_slice(&cgrad));
        let lin = a_vec.as_ref().map(|a| (a, -c.unwrap()));
        let (d, mu) = qp_step(&b_mat, &g, &lb, &ub, lin);
        let dnorm = d.amax();
        if dnorm < 1e-12 && feasible {
            status = Status::Converged;
            break;
        }

        sigma = sigma.max(2.0 * mu + 1e-6);
        let merit = |f: f64, c: Option<f64>| f + sigma * c.map_or(0.0, |c| c.max(0.0));
        let m0 = merit(f, c);
        // Directional derivative bound for the merit function.
        let dd = g.dot(&d) - sigma * c.map_or(0.0, |c| c.max(0.0));
        let g_at_x = grad.clone();
        let cg_at_x = cgrad.clone();
        let mut t = 1.0;
        let mut accepted = false;
        let mut xt = x.clone();
        let (mut ft, mut ct) = (f, c);
        for _ in 0..40 {
            for i in 0..n {
                xt[i] = (x[i] + t * d[i]).clamp(lower[i], upper[i]);
            }
            let (fi, ci) = eval(problem, &xt, &mut grad, &mut cgrad, &linear);
            // A non-finite trial (degenerate trial geometry) just backtracks.
            if all_finite(fi, ci, &grad, &cgrad)
                && merit(fi, ci) <= m0 + 1e-4 * t * dd.min(0.0)
            {
                accepted = true;
                ft = fi;
                ct = ci;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            grad.copy_from_slice(&g_at_x);
            cgrad.copy_from_slice(&cg_at_x);
            if !just_reset {
                // Retry once from a fresh quadratic model before giving up.
                b_mat = DMatrix::identity(n, n);
                just_reset = true;
                continue;
            }
            status = Status::Stalled;
            break;
        }
        just_reset = false;

        // Damped BFGS update on the Lagrangian gradient difference.
        let s: DVector<f64> = (0..n).map(|i| xt[i] - x[i]).collect::<Vec<_>>().into();
        let gl_new = {
            let mut v = DVector::from_column_slice(&grad);
            if a_vec.is_some() {
                // Constraint gradient at the new point lives in cgrad.
                v += DVector::from_column_slice(&cgrad) * mu;
            }
            v
        };
        let gl_old = {
            let mut v = g.clone();
            if let Some(a) = &a_vec {
                v += a * mu;
            }
            v
        };
        let mut y = gl_new - gl_old;
        let bs = &b_mat * &s;
        let sbs = s.dot(&bs);
        let sy = s.dot(&y);
        if sbs > 1e-300 {
            if sy < 0.2 * sbs {
                let theta = 0.8 * sbs / (sbs - sy);
                y = y * theta + &bs * (1.0 - theta);
            }
            let sy_damped = s.dot(&y);
            if sy_damped > 1e-300 {
                b_mat = b_mat - (&bs * bs.transpose()) / sbs + (&y * y.transpose()) / sy_damped;
            }
        }

        x = xt;
        f = ft;
        c = ct;
        problem.accepted(iterations, &x);
    }

    Ok(OptimResult { objective: f, x, status, iterations, history })
}
