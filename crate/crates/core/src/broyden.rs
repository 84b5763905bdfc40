//! Box-constrained Broyden ("good" rank-one update) root finder.

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Copy, Debug)]
pub(crate) struct BroydenOptions {
    pub tol: f64,
    pub step_tol: f64,
    pub max_iter: usize,
    pub fd_step: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct BroydenRun {
    pub x: Vec<f64>,
    /// Last Jacobian estimate; `None` if the start point already converged
    /// and no estimate was supplied.
    pub jac: Option<DMatrix<f64>>,
    /// ∞-norm of the residual at `x`.
    pub residual: f64,
    pub converged: bool,
}

/// Backtracking budget with a secant-updated Jacobian.
const STALE_HALVINGS: usize = 4;
/// Backtracking budget right after a finite-difference rebuild.
const FRESH_HALVINGS: usize = 30;

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Forward-difference Jacobian; steps backwards at the upper bound.
pub(crate) fn fd_jacobian<E>(
    f: &mut dyn FnMut(&[f64]) -> Result<Vec<f64>, E>,
    x: &[f64],
    fx: &[f64],
    opts: &BroydenOptions,
) -> Result<DMatrix<f64>, E> {
    let n = x.len();
    let m = fx.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut probe = x.to_vec();
    for j in 0..n {
        let h = if x[j] + opts.fd_step <= opts.upper { opts.fd_step } else { -opts.fd_step };
        probe[j] = x[j] + h;
        let fp = f(&probe)?;
        probe[j] = x[j];
        for i in 0..m {
            jac[(i, j)] = (fp[i] - fx[i]) / h;
        }
    }
    Ok(jac)
}

fn newton_step(jac: &DMatrix<f64>, fx: &[f64]) -> Option<Vec<f64>> {
    let rhs = DVector::from_iterator(fx.len(), fx.iter().map(|v| -v));
    let dx = jac.clone().lu().solve(&rhs)?;
    dx.iter().all(|v| v.is_finite()).then(|| dx.iter().copied().collect())
}

/// Solves `f(x) = 0` for `x` in the box `[lower, upper]ⁿ`, projecting each
/// iterate back into the box. Errors raised by `f` abort the run; a
/// non-finite residual marks a trial point as rejected.
pub(crate) fn broyden<E>(
    f: &mut dyn FnMut(&[f64]) -> Result<Vec<f64>, E>,
    x0: &[f64],
    jac0: Option<DMatrix<f64>>,
    opts: &BroydenOptions,
) -> Result<BroydenRun, E> {
    let project = |v: f64| v.clamp(opts.lower, opts.upper);
    let mut x: Vec<f64> = x0.iter().map(|&v| project(v)).collect();
    let mut fx = f(&x)?;
    let n = x.len();

    let done = |x: Vec<f64>, fx: &[f64], jac: Option<DMatrix<f64>>, converged: bool| BroydenRun {
        x,
        jac,
        residual: inf_norm(fx),
        converged,
    };

    if inf_norm(&fx) <= opts.tol {
        return Ok(done(x, &fx, jac0, true));
    }
    if !inf_norm(&fx).is_finite() {
        return Ok(done(x, &fx, jac0, false));
    }
    let (mut jac, mut fresh) = match jac0 {
        Some(j) if j.nrows() == fx.len() && j.ncols() == n => (j, false),
        _ => (fd_jacobian(f, &x, &fx, opts)?, true),
    };

    for _ in 0..opts.max_iter {
        if inf_norm(&fx) <= opts.tol {
            return Ok(done(x, &fx, Some(jac), true));
        }
        let dx = match newton_step(&jac, &fx) {
            Some(dx) => dx,
            None if !fresh => {
                jac = fd_jacobian(f, &x, &fx, opts)?;
                match newton_step(&jac, &fx) {
                    Some(dx) => dx,
                    None => break,
                }
            }
            None => break,
        };

        let base = sq_norm(&fx);
        let halvings = if fresh { FRESH_HALVINGS } else { STALE_HALVINGS };
        let mut lambda = 1.0;
        let mut trial = None;
        for _ in 0..halvings {
            let xt: Vec<f64> = x.iter().zip(&dx).map(|(xi, di)| project(xi + lambda * di)).collect();
            let s: Vec<f64> = xt.iter().zip(&x).map(|(a, b)| a - b).collect();
            if inf_norm(&s) <= opts.step_tol {
                break;
            }
            let ft = f(&xt)?;
            if sq_norm(&ft) < base {
                trial = Some((xt, s, ft));
                break;
            }
            lambda *= 0.5;
        }
        let Some((xt, s, ft)) = trial else {
            if !fresh {
                // the secant model went stale: rebuild it here and retry
                jac = fd_jacobian(f, &x, &fx, opts)?;
                fresh = true;
                continue;
            }
            let converged = inf_norm(&fx) <= opts.tol;
            return Ok(done(x, &fx, Some(jac), converged));
        };

        // J ← J + (Δf − J s) sᵀ / (sᵀ s)
        let s_vec = DVector::from_column_slice(&s);
        let df = DVector::from_iterator(ft.len(), ft.iter().zip(&fx).map(|(a, b)| a - b));
        let denom = s_vec.dot(&s_vec);
        if denom > 0.0 {
            let u = (df - &jac * &s_vec) / denom;
            jac += u * s_vec.transpose();
        }
        x = xt;
        fx = ft;
        fresh = false;
    }
    let converged = inf_norm(&fx) <= opts.tol;
    Ok(done(x, &fx, Some(jac), converged))
}
