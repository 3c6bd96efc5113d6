//! Quasi-Newton minimization with backtracking line search.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    /// Stop when the gradient ∞-norm falls below this.
    pub gtol: f64,
    pub max_iterations: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions {
            gtol: 1e-7,
            max_iterations: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: DVector<f64>,
    pub value: f64,
    pub gradient: DVector<f64>,
    pub iterations: usize,
    /// The line search failed from a steepest-descent direction.
    pub stalled: bool,
    /// Final inverse-Hessian estimate.
    pub inverse_hessian: DMatrix<f64>,
}

impl Minimum {
    pub fn grad_inf_norm(&self) -> f64 {
        self.gradient.amax()
    }
}

/// Minimize `f`, which returns `(value, gradient)`.
pub fn bfgs<F>(f: F, x0: DVector<f64>, opts: &BfgsOptions) -> Minimum
where
    F: Fn(&DVector<f64>) -> (f64, DVector<f64>),
{
    bfgs_warm(f, x0, None, opts)
}

/// [`bfgs`] seeded with an inverse-Hessian estimate, e.g. from a previous
/// solve of a nested problem.
pub fn bfgs_warm<F>(f: F, x0: DVector<f64>, h0: Option<DMatrix<f64>>, opts: &BfgsOptions) -> Minimum
where
    F: Fn(&DVector<f64>) -> (f64, DVector<f64>),
{
    let n = x0.len();
    let (mut fx, mut g) = f(&x0);
    let mut x = x0;
    if n == 0 {
        return Minimum {
            x,
            value: fx,
            gradient: g,
            iterations: 0,
            stalled: false,
            inverse_hessian: DMatrix::zeros(0, 0),
        };
    }
    let seeded = h0.filter(|h| h.nrows() == n && h.ncols() == n);
    let mut fresh = seeded.is_none();
    let mut h_inv = seeded.unwrap_or_else(|| DMatrix::<f64>::identity(n, n));
    let mut stalled = false;
    let mut it = 0;
    while it < opts.max_iterations {
        if g.amax() < opts.gtol {
            break;
        }
        it += 1;
        let mut d = -(&h_inv * &g);
        let mut slope = d.dot(&g);
        if slope >= 0.0 {
            h_inv.fill_with_identity();
            fresh = true;
            d = -g.clone();
            slope = d.dot(&g);
        }
        match line_search(&f, &x, fx, &d, slope) {
            Some((alpha, x_new, f_new, g_new)) => {
                let s = &d * alpha;
                let y = &g_new - &g;
                let sy = s.dot(&y);
                if sy > 1e-14 * s.norm() * y.norm() && sy > 0.0 {
                    if fresh {
                        // Scale the initial inverse Hessian to the observed curvature.
                        h_inv *= sy / y.dot(&y);
                        fresh = false;
                    }
                    let rho = 1.0 / sy;
                    let hy = &h_inv * &y;
                    let yhy = y.dot(&hy);
                    h_inv += (&s * s.transpose()) * (rho * (1.0 + rho * yhy))
                        - (&hy * s.transpose() + &s * hy.transpose()) * rho;
                }
                let decreased = f_new < fx;
                x = x_new;
                fx = f_new;
                g = g_new;
                if !decreased && g.amax() >= opts.gtol {
                    // No progress at machine precision.
                    stalled = g.amax() > 1e3 * opts.gtol;
                    break;
                }
            }
            None if !fresh => {
                h_inv.fill_with_identity();
                fresh = true;
            }
            None => {
                stalled = g.amax() > 1e3 * opts.gtol;
                break;
            }
        }
    }
    Minimum {
        x,
        value: fx,
        gradient: g,
        iterations: it,
        stalled,
        inverse_hessian: h_inv,
    }
}

type Step = (f64, DVector<f64>, f64, DVector<f64>);

/// Armijo backtracking from a unit step.
fn line_search<F>(f: &F, x: &DVector<f64>, fx: f64, d: &DVector<f64>, slope: f64) -> Option<Step>
where
    F: Fn(&DVector<f64>) -> (f64, DVector<f64>),
{
    let mut alpha = 1.0;
    for _ in 0..40 {
        let xn = x + d * alpha;
        let (fv, gv) = f(&xn);
        if fv.is_finite() && fv <= fx + 1e-4 * alpha * slope {
            return Some((alpha, xn, fv, gv));
        }
        alpha *= 0.5;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock_minimum() {
        let f = |x: &DVector<f64>| {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = DVector::from_vec(vec![
                -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
                200.0 * (b - a * a),
            ]);
            (v, g)
        };
        let m = bfgs(
            f,
            DVector::from_vec(vec![-1.2, 1.0]),
            &BfgsOptions::default(),
        );
        assert!(!m.stalled);
        assert!(
            (m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6,
            "{:?}",
            m.x
        );
    }

    #[test]
    fn empty_problem_returns_start_value() {
        let m = bfgs(
            |_| (3.0, DVector::zeros(0)),
            DVector::zeros(0),
            &BfgsOptions::default(),
        );
        assert_eq!(m.value, 3.0);
        assert_eq!(m.iterations, 0);
    }
}
