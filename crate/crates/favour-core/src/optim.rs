//! Box-constrained maximization routines.
//!
//! Two solvers are provided:
//!
//! - [`projected_newton`]: an active-set projected Newton method for smooth
//!   concave objectives with an available Hessian (the log-posterior and the
//!   pooled logit likelihood). Convergence is declared when the norm of the
//!   projected gradient `P(x + g) - x` falls below the tolerance.
//! - [`projected_gradient`]: a monotone Barzilai-Borwein spectral gradient
//!   method with Armijo backtracking, for smooth objectives where Hessians
//!   are too expensive (the simulated mixed-logit likelihood).

use nalgebra::{DMatrix, DVector};

use crate::belief::BoxBounds;

/// Options for [`projected_newton`].
#[derive(Debug, Clone)]
pub struct NewtonOptions {
    pub max_iterations: usize,
    /// Threshold on the Euclidean norm of the projected gradient.
    pub gradient_tolerance: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            max_iterations: 200,
            gradient_tolerance: 1e-6,
        }
    }
}

/// Options for [`projected_gradient`].
#[derive(Debug, Clone)]
pub struct GradientOptions {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
}

impl Default for GradientOptions {
    fn default() -> Self {
        GradientOptions {
            max_iterations: 500,
            gradient_tolerance: 1e-5,
        }
    }
}

/// Objective with value, gradient and Hessian.
pub trait TwiceDifferentiable {
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64>;
}

/// Objective with a fused value-and-gradient evaluation.
pub trait Differentiable {
    fn value_and_gradient(&self, x: &DVector<f64>) -> (f64, DVector<f64>);
}

/// Result of a box-constrained maximization.
#[derive(Debug, Clone)]
pub struct Maximum {
    pub x: DVector<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub projected_gradient_norm: f64,
    /// Objective value after each accepted step (line-searched, so
    /// non-decreasing).
    pub value_trace: Vec<f64>,
}

fn projected_gradient_norm(x: &DVector<f64>, g: &DVector<f64>, bounds: &BoxBounds) -> f64 {
    (bounds.clamp(&(x + g)) - x).norm()
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;

/// Backtracking line search along direction `d` with projection onto the
/// box after each trial step. Returns the accepted point, or `None` when no
/// step yields sufficient increase.
fn line_search<F: Fn(&DVector<f64>) -> f64>(
    value: &F,
    x: &DVector<f64>,
    fx: f64,
    g: &DVector<f64>,
    d: &DVector<f64>,
    bounds: &BoxBounds,
) -> Option<(DVector<f64>, f64)> {
    let mut step = 1.0;
    for _ in 0..MAX_BACKTRACKS {
        let candidate = bounds.clamp(&(x + d * step));
        let displacement = &candidate - x;
        if displacement.norm() == 0.0 {
            return None;
        }
        let f_candidate = value(&candidate);
        if f_candidate >= fx + ARMIJO_C1 * g.dot(&displacement) && f_candidate.is_finite() {
            return Some((candidate, f_candidate));
        }
        step *= 0.5;
    }
    None
}

/// Active-set projected Newton ascent for a concave objective.
pub fn projected_newton<F: TwiceDifferentiable>(
    objective: &F,
    x0: DVector<f64>,
    bounds: &BoxBounds,
    options: &NewtonOptions,
) -> Maximum {
    let mut x = bounds.clamp(&x0);
    let mut fx = objective.value(&x);
    let mut trace = vec![fx];

    for iteration in 0..options.max_iterations {
        let g = objective.gradient(&x);
        let pg_norm = projected_gradient_norm(&x, &g, bounds);
        if pg_norm < options.gradient_tolerance {
            return Maximum {
                x,
                value: fx,
                iterations: iteration,
                converged: true,
                projected_gradient_norm: pg_norm,
                value_trace: trace,
            };
        }

        // Components pinned at a bound with the gradient pushing outward are
        // held fixed; Newton runs on the free block.
        let free: Vec<usize> = (0..x.len())
            .filter(|&i| {
                let at_lower = x[i] <= bounds.lower()[i] && g[i] < 0.0;
                let at_upper = x[i] >= bounds.upper()[i] && g[i] > 0.0;
                !(at_lower || at_upper)
            })
            .collect();

        let mut direction = DVector::zeros(x.len());
        if !free.is_empty() {
            let h = objective.hessian(&x);
            let mut h_free = DMatrix::zeros(free.len(), free.len());
            for (a, &i) in free.iter().enumerate() {
                for (b, &j) in free.iter().enumerate() {
                    // Newton system for ascent: (-H) d = g on the free block.
                    h_free[(a, b)] = -h[(i, j)];
                }
            }
            let g_free = DVector::from_iterator(free.len(), free.iter().map(|&i| g[i]));
            let solved = h_free
                .clone()
                .cholesky()
                .map(|c| c.solve(&g_free))
                .or_else(|| {
                    let ridge =
                        h_free + DMatrix::identity(free.len(), free.len()) * 1e-10;
                    ridge.cholesky().map(|c| c.solve(&g_free))
                });
            if let Some(d_free) = solved {
                for (a, &i) in free.iter().enumerate() {
                    direction[i] = d_free[a];
                }
            }
        }
        // Fall back to the gradient when the Newton direction is unusable.
        if direction.dot(&g) <= 0.0 {
            direction = g.clone();
        }

        match line_search(&|p| objective.value(p), &x, fx, &g, &direction, bounds)
            .or_else(|| line_search(&|p| objective.value(p), &x, fx, &g, &g, bounds))
        {
            Some((next, f_next)) => {
                x = next;
                fx = f_next;
                trace.push(fx);
            }
            None => {
                // No ascent step exists within floating-point resolution.
                break;
            }
        }
    }

    let g = objective.gradient(&x);
    let pg_norm = projected_gradient_norm(&x, &g, bounds);
    let converged = pg_norm < options.gradient_tolerance;
    Maximum {
        x,
        value: fx,
        iterations: options.max_iterations,
        converged,
        projected_gradient_norm: pg_norm,
        value_trace: trace,
    }
}

/// Monotone projected Barzilai-Borwein gradient ascent.
pub fn projected_gradient<F: Differentiable>(
    objective: &F,
    x0: DVector<f64>,
    bounds: &BoxBounds,
    options: &GradientOptions,
) -> Maximum {
    let mut x = bounds.clamp(&x0);
    let (mut fx, mut g) = objective.value_and_gradient(&x);
    let mut trace = vec![fx];
    let mut previous: Option<(DVector<f64>, DVector<f64>)> = None;

    for iteration in 0..options.max_iterations {
        let pg_norm = projected_gradient_norm(&x, &g, bounds);
        if pg_norm < options.gradient_tolerance {
            return Maximum {
                x,
                value: fx,
                iterations: iteration,
                converged: true,
                projected_gradient_norm: pg_norm,
                value_trace: trace,
            };
        }

        // BB1 spectral step length from the previous displacement.
        let step = match &previous {
            Some((x_prev, g_prev)) => {
                let s = &x - x_prev;
                let y = &g - g_prev;
                let sy = -s.dot(&y); // positive for concave objectives
                if sy > 1e-16 {
                    (s.dot(&s) / sy).clamp(1e-10, 1e10)
                } else {
                    1.0
                }
            }
            None => 1.0 / g.norm().max(1.0),
        };

        let direction = &g * step;
        match line_search(
            &|p| objective.value_and_gradient(p).0,
            &x,
            fx,
            &g,
            &direction,
            bounds,
        ) {
            Some((next, f_next)) => {
                previous = Some((x.clone(), g.clone()));
                x = next;
                fx = f_next;
                g = objective.value_and_gradient(&x).1;
                trace.push(fx);
            }
            None => break,
        }
    }

    let pg_norm = projected_gradient_norm(&x, &g, bounds);
    let converged = pg_norm < options.gradient_tolerance;
    Maximum {
        x,
        value: fx,
        iterations: options.max_iterations,
        converged,
        projected_gradient_norm: pg_norm,
        value_trace: trace,
    }
}
