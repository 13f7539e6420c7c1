//! Ramsey fringe fit f(φ) = a − (b/2)·cos(dφ + φ_D).

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::lsq::{minimize, pseudo_inverse};
use super::{binomial_sigma, check_points, distinct_count, unzip, wrap_phase, DataPoint, Estimate, FitError};
use crate::dynamics::PhaseScanRecord;

const D_BOUNDS: (f64, f64) = (0.5, 1.5);
const GRID_PHASES: usize = 72;
const GRID_D: usize = 11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseScanFit {
    pub a: Estimate,
    /// Fringe contrast, ≥ 0.
    pub b: Estimate,
    pub d: Estimate,
    /// In [0, 2π).
    pub phi_d: Estimate,
    /// Order (a, b, d, φ_D).
    pub covariance: [[f64; 4]; 4],
    pub chi2: f64,
    pub dof: usize,
    /// Unweighted rms of y − f.
    pub residual_rms: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn model(phi: f64, p: &[f64], g: &mut [f64]) -> f64 {
    let (a, b, d, phi_d) = (p[0], p[1], p[2], p[3]);
    let arg = d * phi + phi_d;
    let (s, c) = arg.sin_cos();
    g[0] = 1.0;
    g[1] = -0.5 * c;
    g[2] = 0.5 * b * s * phi;
    g[3] = 0.5 * b * s;
    a - 0.5 * b * c
}

/// Upper-state fractions with Agresti–Coull σ.
pub fn phase_scan_points(record: &PhaseScanRecord) -> Vec<DataPoint> {
    record
        .rows
        .iter()
        .map(|r| DataPoint::new(r.phi, r.upcount as f64 / r.shots as f64, binomial_sigma(r.upcount, r.shots)))
        .collect()
}

pub fn fit_phase_scan(record: &PhaseScanRecord) -> Result<PhaseScanFit, FitError> {
    if record.rows.iter().any(|r| r.shots == 0 || r.upcount > r.shots) {
        return Err(FitError::Domain("phase row with zero shots or upcount > shots".into()));
    }
    fit_phase_curve(&phase_scan_points(record))
}

/// Weighted linear solve of y ≈ a + c·u for fixed basis values u.
fn linear_amplitudes(us: &[f64], ys: &[f64], ws: &[f64]) -> Option<(f64, f64, f64)> {
    let (mut s, mut su, mut suu, mut sy, mut suy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((&u, &y), &w) in us.iter().zip(ys).zip(ws) {
        s += w;
        su += w * u;
        suu += w * u * u;
        sy += w * y;
        suy += w * u * y;
    }
    let det = s * suu - su * su;
    if det.abs() <= 1e-14 * s * suu {
        return None;
    }
    let c = (s * suy - su * sy) / det;
    let a = (sy - c * su) / s;
    let chi2 = us.iter().zip(ys).zip(ws).map(|((&u, &y), &w)| w * (y - a - c * u).powi(2)).sum();
    Some((a, c, chi2))
}

fn initial_guess(xs: &[f64], ys: &[f64], ws: &[f64]) -> [f64; 4] {
    let mut best = (f64::INFINITY, [0.0; 4]);
    let mut us = vec![0.0; xs.len()];
    for id in 0..GRID_D {
        let d = 0.9 + 0.2 * id as f64 / (GRID_D - 1) as f64;
        for ip in 0..GRID_PHASES {
            let phi_d = TAU * ip as f64 / GRID_PHASES as f64;
            for (u, &x) in us.iter_mut().zip(xs) {
                *u = (d * x + phi_d).cos();
            }
            if let Some((a, c, chi2)) = linear_amplitudes(&us, ys, ws) {
                if chi2 < best.0 {
                    best = (chi2, [a, -2.0 * c, d, phi_d]);
                }
            }
        }
    }
    let mut p = best.1;
    if p[1] < 0.0 {
        p[1] = -p[1];
        p[3] += PI;
    }
    p
}

fn finish(
    p: [f64; 4],
    mut cov: [[f64; 4]; 4],
    chi2: f64,
    points: &[DataPoint],
    iterations: usize,
    converged: bool,
) -> PhaseScanFit {
    let [a, mut b, d, mut phi_d] = p;
    if b < 0.0 {
        b = -b;
        phi_d += PI;
        for j in 0..4 {
            if j != 1 {
                cov[1][j] = -cov[1][j];
                cov[j][1] = -cov[j][1];
            }
        }
    }
    let mut g = [0.0; 4];
    let params = [a, b, d, phi_d];
    let ss: f64 = points.iter().map(|pt| (pt.y - model(pt.x, &params, &mut g)).powi(2)).sum();
    let sd = |j: usize| cov[j][j].max(0.0).sqrt();
    PhaseScanFit {
        a: Estimate::new(a, sd(0)),
        b: Estimate::new(b, sd(1)),
        d: Estimate::new(d, sd(2)),
        phi_d: Estimate::new(wrap_phase(phi_d), sd(3)),
        covariance: cov,
        chi2,
        dof: points.len().saturating_sub(4),
        residual_rms: (ss / points.len() as f64).sqrt(),
        iterations,
        converged,
    }
}

fn to_array(m: &nalgebra::DMatrix<f64>) -> [[f64; 4]; 4] {
    let mut out = [[0.0; 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = m[(i, j)];
        }
    }
    out
}

/// Fringe fit on arbitrary (φ, P↑, σ) points.
pub fn fit_phase_curve(points: &[DataPoint]) -> Result<PhaseScanFit, FitError> {
    check_points(points, 5, "phase-scan fit")?;
    let (xs, ys, ss) = unzip(points);
    if distinct_count(&xs) < 5 {
        return Err(FitError::InsufficientData("phase-scan fit needs 5 distinct phases".into()));
    }
    let span = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - xs.iter().cloned().fold(f64::INFINITY, f64::min);
    if span <= PI {
        return Err(FitError::InsufficientData(format!("phases span {span:.3} rad, need > π")));
    }
    let ws: Vec<f64> = ss.iter().map(|s| 1.0 / (s * s)).collect();

    let y0 = ys[0];
    if ys.iter().all(|&y| y == y0) {
        // flat data: contrast 0, d and φ_D unidentifiable
        let p = [y0, 0.0, 1.0, 0.0];
        let mut j = nalgebra::DMatrix::zeros(xs.len(), 4);
        let mut g = [0.0; 4];
        for (i, (&x, &s)) in xs.iter().zip(&ss).enumerate() {
            model(x, &p, &mut g);
            for k in 0..4 {
                j[(i, k)] = g[k] / s;
            }
        }
        let cov = pseudo_inverse(&(j.transpose() * &j));
        return Ok(finish(p, to_array(&cov), 0.0, points, 0, true));
    }

    let p0 = initial_guess(&xs, &ys, &ws);
    let inf = (f64::NEG_INFINITY, f64::INFINITY);
    let out = minimize(model, &xs, &ys, &ss, &p0, &[inf, inf, D_BOUNDS, inf]);
    if !out.converged {
        return Err(FitError::NotConverged { best: out.params, iterations: out.iterations });
    }
    let p = [out.params[0], out.params[1], out.params[2], out.params[3]];
    Ok(finish(p, to_array(&out.covariance), out.chi2, points, out.iterations, true))
}
