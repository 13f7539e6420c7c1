//! Weighted straight-line fit y = intercept + slope·x.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{check_points, distinct_count, DataPoint, Estimate, FitError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: Estimate,
    pub intercept: Estimate,
    pub covariance_slope_intercept: f64,
    pub chi2: f64,
    pub dof: usize,
}

impl LinearFit {
    pub fn predict(&self, x: f64) -> Estimate {
        let v = self.intercept.value + self.slope.value * x;
        let var = self.intercept.sigma.powi(2)
            + x * x * self.slope.sigma.powi(2)
            + 2.0 * x * self.covariance_slope_intercept;
        Estimate::new(v, var.max(0.0).sqrt())
    }
}

pub fn fit_linear_intercept(points: &[DataPoint]) -> Result<LinearFit, FitError> {
    check_points(points, 2, "linear fit")?;
    let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
    if distinct_count(&xs) < 2 {
        return Err(FitError::Domain("all x equal; slope undetermined".into()));
    }
    // centred on the weighted mean so that large offsets in y or x stay exact
    let ws: Vec<f64> = points.iter().map(|p| 1.0 / (p.sigma * p.sigma)).collect();
    let sw: f64 = ws.iter().sum();
    let xm = points.iter().zip(&ws).map(|(p, w)| w * p.x).sum::<f64>() / sw;
    let ym = points.iter().zip(&ws).map(|(p, w)| w * p.y).sum::<f64>() / sw;
    let sxx: f64 = points.iter().zip(&ws).map(|(p, w)| w * (p.x - xm).powi(2)).sum();
    let sxy: f64 = points.iter().zip(&ws).map(|(p, w)| w * (p.x - xm) * (p.y - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let var_slope = 1.0 / sxx;
    let var_intercept = 1.0 / sw + xm * xm / sxx;
    let chi2 = points
        .iter()
        .zip(&ws)
        .map(|(p, w)| w * (p.y - intercept - slope * p.x).powi(2))
        .sum();
    Ok(LinearFit {
        slope: Estimate::new(slope, var_slope.sqrt()),
        intercept: Estimate::new(intercept, var_intercept.sqrt()),
        covariance_slope_intercept: -xm / sxx,
        chi2,
        dof: points.len() - 2,
    })
}

/// y = c0 + c1·(x − x_ref) + c2·(x − x_ref)², with x_ref the weighted mean of x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFit {
    pub x_ref: f64,
    pub c0: Estimate,
    pub c1: Estimate,
    pub c2: Estimate,
    pub chi2: f64,
    pub dof: usize,
}

impl QuadraticFit {
    /// x at the extremum.
    pub fn vertex(&self) -> f64 {
        self.x_ref - self.c1.value / (2.0 * self.c2.value)
    }
}

pub fn fit_quadratic(points: &[DataPoint]) -> Result<QuadraticFit, FitError> {
    check_points(points, 3, "quadratic fit")?;
    let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
    if distinct_count(&xs) < 3 {
        return Err(FitError::Domain("quadratic fit needs 3 distinct x".into()));
    }
    let ws: Vec<f64> = points.iter().map(|p| 1.0 / (p.sigma * p.sigma)).collect();
    let sw: f64 = ws.iter().sum();
    let x_ref = points.iter().zip(&ws).map(|(p, w)| w * p.x).sum::<f64>() / sw;
    // scale u to O(1) so the normal matrix stays well conditioned
    let scale = points.iter().map(|p| (p.x - x_ref).abs()).fold(0.0, f64::max);
    let y_ref = points.iter().zip(&ws).map(|(p, w)| w * p.y).sum::<f64>() / sw;
    let mut m = Matrix3::<f64>::zeros();
    let mut v = Vector3::<f64>::zeros();
    for (p, &w) in points.iter().zip(&ws) {
        let u = (p.x - x_ref) / scale;
        let basis = Vector3::new(1.0, u, u * u);
        m += w * basis * basis.transpose();
        v += w * (p.y - y_ref) * basis;
    }
    let inv = m
        .try_inverse()
        .ok_or_else(|| FitError::Domain("singular quadratic design".into()))?;
    let c = inv * v;
    let chi2 = points
        .iter()
        .zip(&ws)
        .map(|(p, w)| {
            let u = (p.x - x_ref) / scale;
            w * (p.y - y_ref - c[0] - c[1] * u - c[2] * u * u).powi(2)
        })
        .sum();
    Ok(QuadraticFit {
        x_ref,
        c0: Estimate::new(y_ref + c[0], inv[(0, 0)].sqrt()),
        c1: Estimate::new(c[1] / scale, inv[(1, 1)].sqrt() / scale),
        c2: Estimate::new(c[2] / (scale * scale), inv[(2, 2)].sqrt() / (scale * scale)),
        chi2,
        dof: points.len() - 3,
    })
}
