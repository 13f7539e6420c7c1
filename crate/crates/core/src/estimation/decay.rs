//! Contrast decay b(T) = b₀·e^{−T/τ}, fitted in the rate γ = 1/τ so that
//! growing or flat data stay inside the parameter space.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::lsq::minimize;
use super::{check_points, distinct_count, unzip, DataPoint, Estimate, FitError, Lifetime};
use crate::rng::substream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub b0: Estimate,
    /// γ = 1/τ (1/s); may be ≤ 0 for nondecaying data.
    pub rate: Estimate,
    pub tau: Lifetime,
    /// Covariance of (b₀, γ).
    pub covariance: [[f64; 2]; 2],
    pub chi2: f64,
    pub dof: usize,
    pub iterations: usize,
    pub warning: Option<String>,
}

fn model(t: f64, p: &[f64], g: &mut [f64]) -> f64 {
    let e = (-p[1] * t).exp();
    g[0] = e;
    g[1] = -t * p[0] * e;
    p[0] * e
}

/// Weighted straight line through (T, ln b) over the positive contrasts.
fn log_linear_guess(points: &[DataPoint]) -> [f64; 2] {
    let (mut s, mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in points.iter().filter(|p| p.y > 0.0) {
        let w = (p.y / p.sigma).powi(2);
        let l = p.y.ln();
        s += w;
        sx += w * p.x;
        sxx += w * p.x * p.x;
        sy += w * l;
        sxy += w * p.x * l;
    }
    let det = s * sxx - sx * sx;
    if !(det > 0.0) {
        return [sy.exp() / s.max(f64::MIN_POSITIVE), 0.0];
    }
    let slope = (s * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / s;
    [intercept.exp(), -slope]
}

pub fn fit_exponential_decay(points: &[DataPoint]) -> Result<DecayFit, FitError> {
    check_points(points, 2, "decay fit")?;
    let (xs, ys, ss) = unzip(points);
    if distinct_count(&xs) < 2 {
        return Err(FitError::InsufficientData("decay fit needs two distinct T_R".into()));
    }
    let nonpositive = ys.iter().filter(|&&y| y <= 0.0).count();
    if 2 * nonpositive > ys.len() {
        return Err(FitError::Domain(format!(
            "{nonpositive} of {} contrasts are nonpositive",
            ys.len()
        )));
    }

    let p0 = log_linear_guess(points);
    let inf = (f64::NEG_INFINITY, f64::INFINITY);
    let out = minimize(model, &xs, &ys, &ss, &p0, &[inf, inf]);
    if !out.converged {
        return Err(FitError::NotConverged { best: out.params, iterations: out.iterations });
    }
    let c = &out.covariance;
    let b0 = Estimate::new(out.params[0], c[(0, 0)].max(0.0).sqrt());
    let rate = Estimate::new(out.params[1], c[(1, 1)].max(0.0).sqrt());
    let t_max = xs.iter().cloned().fold(0.0, f64::max);
    let tau = Lifetime::from_rate(rate, t_max);
    let warning = match tau {
        Lifetime::Unbounded => Some("contrast does not decay; tau unbounded".to_string()),
        Lifetime::Finite(_) => None,
    };
    Ok(DecayFit {
        b0,
        rate,
        tau,
        covariance: [[c[(0, 0)], c[(0, 1)]], [c[(1, 0)], c[(1, 1)]]],
        chi2: out.chi2,
        dof: points.len().saturating_sub(2),
        iterations: out.iterations,
        warning,
    })
}

/// Parametric bootstrap of τ: refit `resamples` synthetic datasets drawn from
/// the fitted curve with the original σ. Returns the sample standard deviation
/// of the finite τ values, or `None` if fewer than two were finite.
pub fn bootstrap_decay(points: &[DataPoint], fit: &DecayFit, resamples: usize, seed: u64) -> Option<f64> {
    let mut taus = Vec::with_capacity(resamples);
    let mut g = [0.0; 2];
    let p = [fit.b0.value, fit.rate.value];
    for k in 0..resamples {
        let mut rng = substream(seed, &[k as u64]);
        let synthetic: Vec<DataPoint> = points
            .iter()
            .map(|pt| {
                let z: f64 = StandardNormal.sample(&mut rng);
                DataPoint::new(pt.x, model(pt.x, &p, &mut g) + pt.sigma * z, pt.sigma)
            })
            .collect();
        if let Ok(Lifetime::Finite(t)) = fit_exponential_decay(&synthetic).map(|f| f.tau) {
            taus.push(t.value);
        }
    }
    if taus.len() < 2 {
        return None;
    }
    let n = taus.len() as f64;
    let mean = taus.iter().sum::<f64>() / n;
    Some((taus.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(b0: f64, tau: f64, ts: &[f64]) -> Vec<DataPoint> {
        ts.iter().map(|&t| DataPoint::new(t, b0 * (-t / tau).exp(), 0.02)).collect()
    }

    const TS: [f64; 8] = [0.004, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0, 15.0];

    #[test]
    fn exact_round_trip() {
        let fit = fit_exponential_decay(&exact(0.95, 14.7, &TS)).unwrap();
        assert!((fit.b0.value - 0.95).abs() < 1e-6 * 0.95);
        let tau = fit.tau.finite().unwrap();
        assert!((tau.value - 14.7).abs() < 1e-6 * 14.7);
        assert!(fit.warning.is_none());
    }

    #[test]
    fn equal_contrasts_are_unbounded() {
        let pts = [DataPoint::new(1.0, 0.8, 0.01), DataPoint::new(5.0, 0.8, 0.01)];
        let fit = fit_exponential_decay(&pts).unwrap();
        assert_eq!(fit.tau, Lifetime::Unbounded);
        assert!(fit.warning.is_some());
    }

    #[test]
    fn growth_is_unbounded() {
        let pts = [DataPoint::new(0.0, 0.5, 0.01), DataPoint::new(1.0, 0.6, 0.01), DataPoint::new(2.0, 0.7, 0.01)];
        assert_eq!(fit_exponential_decay(&pts).unwrap().tau, Lifetime::Unbounded);
    }

    #[test]
    fn mostly_nonpositive_is_domain_error() {
        let pts = [DataPoint::new(0.0, 0.5, 0.1), DataPoint::new(1.0, -0.1, 0.1), DataPoint::new(2.0, 0.0, 0.1)];
        assert!(matches!(fit_exponential_decay(&pts), Err(FitError::Domain(_))));
    }

    #[test]
    fn single_time_is_rejected() {
        let pts = [DataPoint::new(1.0, 0.5, 0.1), DataPoint::new(1.0, 0.4, 0.1), DataPoint::new(1.0, 0.45, 0.1)];
        assert!(matches!(fit_exponential_decay(&pts), Err(FitError::InsufficientData(_))));
    }

    #[test]
    fn bootstrap_is_close_to_covariance() {
        let pts = exact(0.95, 14.7, &TS);
        let fit = fit_exponential_decay(&pts).unwrap();
        let cov_sigma = fit.tau.finite().unwrap().sigma;
        let boot = bootstrap_decay(&pts, &fit, 400, 5).unwrap();
        assert!((boot / cov_sigma - 1.0).abs() < 0.25, "{boot} vs {cov_sigma}");
    }
}
