//! Damped Gauss–Newton (Levenberg–Marquardt) for small weighted problems.

use nalgebra::{DMatrix, DVector};

pub(crate) const MAX_ITERATIONS: usize = 200;
pub(crate) const STEP_TOLERANCE: f64 = 1e-10;

const LAMBDA_START: f64 = 1e-3;
const LAMBDA_MAX: f64 = 1e16;

#[derive(Debug, Clone)]
pub(crate) struct LsqOutcome {
    pub params: Vec<f64>,
    /// (JᵀWJ)⁻¹ at the solution, pseudo-inverted if singular.
    pub covariance: DMatrix<f64>,
    pub chi2: f64,
    pub iterations: usize,
    pub converged: bool,
}

struct Linearization {
    residuals: DVector<f64>,
    jacobian: DMatrix<f64>,
    chi2: f64,
}

fn linearize<M>(model: &M, xs: &[f64], ys: &[f64], sigmas: &[f64], p: &[f64]) -> Linearization
where
    M: Fn(f64, &[f64], &mut [f64]) -> f64,
{
    let n = xs.len();
    let k = p.len();
    let mut residuals = DVector::zeros(n);
    let mut jacobian = DMatrix::zeros(n, k);
    let mut grad = vec![0.0; k];
    for i in 0..n {
        let f = model(xs[i], p, &mut grad);
        let w = 1.0 / sigmas[i];
        residuals[i] = (ys[i] - f) * w;
        for j in 0..k {
            jacobian[(i, j)] = grad[j] * w;
        }
    }
    let chi2 = residuals.norm_squared();
    Linearization { residuals, jacobian, chi2 }
}

fn chi2_at<M>(model: &M, xs: &[f64], ys: &[f64], sigmas: &[f64], p: &[f64]) -> f64
where
    M: Fn(f64, &[f64], &mut [f64]) -> f64,
{
    let mut grad = vec![0.0; p.len()];
    xs.iter()
        .zip(ys)
        .zip(sigmas)
        .map(|((&x, &y), &s)| {
            let r = (y - model(x, p, &mut grad)) / s;
            r * r
        })
        .sum()
}

pub(crate) fn pseudo_inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cutoff = smax * 1e-12 * a.nrows() as f64;
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let mut out = DMatrix::zeros(a.ncols(), a.nrows());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            out += vt.row(i).transpose() * u.column(i).transpose() / s;
        }
    }
    out
}

/// Minimize Σ((y − f(x; p))/σ)². `model` returns f and writes ∂f/∂p into its
/// third argument. Parameters are clamped into `bounds` after every step.
pub(crate) fn minimize<M>(
    model: M,
    xs: &[f64],
    ys: &[f64],
    sigmas: &[f64],
    p0: &[f64],
    bounds: &[(f64, f64)],
) -> LsqOutcome
where
    M: Fn(f64, &[f64], &mut [f64]) -> f64,
{
    let k = p0.len();
    let clamp = |p: &mut [f64]| {
        for (v, &(lo, hi)) in p.iter_mut().zip(bounds) {
            *v = v.clamp(lo, hi);
        }
    };
    let mut p = p0.to_vec();
    clamp(&mut p);
    let mut lin = linearize(&model, xs, ys, sigmas, &p);
    let mut lambda = LAMBDA_START;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let jt = lin.jacobian.transpose();
        let a = &jt * &lin.jacobian;
        let g = &jt * &lin.residuals;
        let diag_floor = (0..k).map(|j| a[(j, j)]).fold(0.0, f64::max) * 1e-12 + f64::MIN_POSITIVE;

        let mut accepted = None;
        while lambda <= LAMBDA_MAX {
            let mut damped = a.clone();
            for j in 0..k {
                damped[(j, j)] += lambda * a[(j, j)].max(diag_floor);
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let delta = chol.solve(&g);
            let mut trial: Vec<f64> = p.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
            clamp(&mut trial);
            let chi2 = chi2_at(&model, xs, ys, sigmas, &trial);
            if chi2.is_finite() && chi2 <= lin.chi2 {
                accepted = Some(trial);
                lambda = (lambda / 10.0).max(1e-12);
                break;
            }
            lambda *= 10.0;
        }

        let Some(trial) = accepted else {
            // no descent direction left at machine precision
            converged = true;
            break;
        };
        let small = trial
            .iter()
            .zip(&p)
            .all(|(&n, &o)| (n - o).abs() <= STEP_TOLERANCE * (o.abs() + STEP_TOLERANCE));
        p = trial;
        lin = linearize(&model, xs, ys, sigmas, &p);
        if small {
            converged = true;
            break;
        }
    }

    let a = lin.jacobian.transpose() * &lin.jacobian;
    let covariance = match a.clone().cholesky() {
        Some(c) if c.l().diagonal().iter().all(|d| *d > 1e-150) => {
            let inv = c.inverse();
            if inv.iter().all(|v| v.is_finite()) {
                inv
            } else {
                pseudo_inverse(&a)
            }
        }
        _ => pseudo_inverse(&a),
    };
    LsqOutcome { params: p, covariance, chi2: lin.chi2, iterations, converged }
}
