//! Limited-memory BFGS minimizer (two-loop recursion, backtracking line
//! search). Fully sequential floating-point arithmetic, so repeated runs on
//! identical inputs produce bit-identical iterates.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsParams {
    /// Number of (s, y) correction pairs kept.
    pub memory: usize,
    pub max_iterations: usize,
    /// Convergence threshold on the gradient infinity norm.
    pub tolerance: f64,
}

impl Default for LbfgsParams {
    fn default() -> Self {
        LbfgsParams {
            memory: 8,
            max_iterations: 300,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsOutcome {
    pub iterations: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimizes `eval` starting from `x`. `eval` returns the objective and
/// writes the gradient into its second argument.
pub fn minimize<F>(x: &mut [f64], params: &LbfgsParams, mut eval: F) -> LbfgsOutcome
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x.len();
    let mut grad = vec![0.0; n];
    let mut objective = eval(x, &mut grad);
    let mut history: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new(); // (s, y, 1/s·y)
    let mut direction = vec![0.0; n];
    let mut x_next = vec![0.0; n];
    let mut grad_next = vec![0.0; n];
    let mut iterations = 0;

    while iterations < params.max_iterations {
        let gnorm = inf_norm(&grad);
        if gnorm <= params.tolerance {
            return LbfgsOutcome {
                iterations,
                objective,
                grad_norm: gnorm,
                converged: true,
            };
        }

        // Two-loop recursion for d = -H g.
        direction.copy_from_slice(&grad);
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let alpha = rho * dot(s, &direction);
            for (d, yi) in direction.iter_mut().zip(y) {
                *d -= alpha * yi;
            }
            alphas.push(alpha);
        }
        if let Some((s, y, _)) = history.last() {
            let scale = dot(s, y) / dot(y, y);
            for d in direction.iter_mut() {
                *d *= scale;
            }
        }
        for ((s, y, rho), alpha) in history.iter().zip(alphas.iter().rev()) {
            let beta = rho * dot(y, &direction);
            for (d, si) in direction.iter_mut().zip(s) {
                *d += (alpha - beta) * si;
            }
        }
        for d in direction.iter_mut() {
            *d = -*d;
        }

        let mut descent = dot(&grad, &direction);
        if descent >= 0.0 {
            // Numerical breakdown: restart from steepest descent.
            history.clear();
            for (d, g) in direction.iter_mut().zip(&grad) {
                *d = -g;
            }
            descent = -dot(&grad, &grad);
        }

        // Backtracking Armijo line search.
        let mut step = if history.is_empty() {
            (1.0 / inf_norm(&direction).max(1.0)).min(1.0)
        } else {
            1.0
        };
        let c1 = 1e-4;
        let mut objective_next = objective;
        let mut found = false;
        for _ in 0..60 {
            for ((xn, xi), di) in x_next.iter_mut().zip(x.iter()).zip(&direction) {
                *xn = xi + step * di;
            }
            objective_next = eval(&x_next, &mut grad_next);
            if objective_next.is_finite() && objective_next <= objective + c1 * step * descent {
                found = true;
                break;
            }
            step *= 0.5;
        }
        if !found {
            return LbfgsOutcome {
                iterations,
                objective,
                grad_norm: gnorm,
                converged: false,
            };
        }

        let s: Vec<f64> = x_next.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = grad_next.iter().zip(grad.iter()).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 {
            if history.len() == params.memory.max(1) {
                history.remove(0);
            }
            history.push((s, y, 1.0 / sy));
        }

        x.copy_from_slice(&x_next);
        grad.copy_from_slice(&grad_next);
        objective = objective_next;
        iterations += 1;
    }

    let grad_norm = inf_norm(&grad);
    LbfgsOutcome {
        iterations,
        objective,
        grad_norm,
        converged: grad_norm <= params.tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_quadratic_bowl() {
        let mut x = vec![3.0, -2.0, 7.0];
        let out = minimize(&mut x, &LbfgsParams::default(), |x, g| {
            let mut f = 0.0;
            for (i, (xi, gi)) in x.iter().zip(g.iter_mut()).enumerate() {
                let c = (i + 1) as f64;
                f += 0.5 * c * xi * xi;
                *gi = c * xi;
            }
            f
        });
        assert!(out.converged);
        for xi in x {
            assert!(xi.abs() < 1e-6);
        }
    }

    #[test]
    fn minimizes_rosenbrock() {
        let mut x = vec![-1.2, 1.0];
        let out = minimize(
            &mut x,
            &LbfgsParams {
                max_iterations: 500,
                tolerance: 1e-8,
                ..LbfgsParams::default()
            },
            |x, g| {
                let (a, b) = (x[0], x[1]);
                g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
                g[1] = 200.0 * (b - a * a);
                (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
            },
        );
        assert!(out.converged, "outcome: {out:?}");
        assert!((x[0] - 1.0).abs() < 1e-4);
        assert!((x[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn deterministic_iterates() {
        let run = || {
            let mut x = vec![0.7, -0.3];
            minimize(&mut x, &LbfgsParams::default(), |x, g| {
                g[0] = x[0].exp() - 1.0 + 0.3 * x[1];
                g[1] = 0.3 * x[0] + 2.0 * x[1];
                x[0].exp() - x[0] + 0.3 * x[0] * x[1] + x[1] * x[1]
            });
            x
        };
        let a = run();
        let b = run();
        assert_eq!(a[0].to_bits(), b[0].to_bits());
        assert_eq!(a[1].to_bits(), b[1].to_bits());
    }
}
