use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::RfsError;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Multivariate normal N(m, P).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl Gaussian {
    /// Checks that `cov` is square, conformable, symmetric within 1e-12
    /// (relative to its largest entry) and positive definite.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self, RfsError> {
        let n = mean.len();
        if cov.nrows() != n || cov.ncols() != n {
            return Err(RfsError::DimensionMismatch(format!(
                "mean has {n} entries, covariance is {}x{}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        let scale = cov.amax().max(1.0);
        if (&cov - cov.transpose()).amax() > 1e-12 * scale {
            return Err(RfsError::NotPositiveDefinite("covariance is not symmetric".into()));
        }
        if cov.clone().cholesky().is_none() {
            return Err(RfsError::NotPositiveDefinite("covariance".into()));
        }
        Ok(Gaussian { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// log N(x; m, P).
    pub fn log_pdf(&self, x: &DVector<f64>) -> Result<f64, RfsError> {
        if x.len() != self.dim() {
            return Err(RfsError::DimensionMismatch(format!(
                "state has {} entries, Gaussian has {}",
                x.len(),
                self.dim()
            )));
        }
        log_normal(&(x - &self.mean), &self.cov)
    }

    pub fn pdf(&self, x: &DVector<f64>) -> Result<f64, RfsError> {
        Ok(self.log_pdf(x)?.exp())
    }
}

/// log N(r; 0, S) for a residual `r`.
pub(crate) fn log_normal(residual: &DVector<f64>, cov: &DMatrix<f64>) -> Result<f64, RfsError> {
    let chol = cov
        .clone()
        .cholesky()
        .ok_or_else(|| RfsError::NotPositiveDefinite("covariance".into()))?;
    let l = chol.l();
    let log_det: f64 = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let y = chol.solve(residual);
    let maha = residual.dot(&y);
    Ok(-0.5 * (residual.len() as f64 * LN_2PI + log_det + maha))
}

/// Weighted sum of Gaussians with weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    pub components: Vec<(f64, Gaussian)>,
}

impl GaussianMixture {
    pub fn new(components: Vec<(f64, Gaussian)>) -> Result<Self, RfsError> {
        if components.is_empty() {
            return Err(RfsError::InvalidArgument("mixture needs at least one component".into()));
        }
        let dim = components[0].1.dim();
        if components.iter().any(|(_, g)| g.dim() != dim) {
            return Err(RfsError::DimensionMismatch("mixture components differ in dimension".into()));
        }
        if components.iter().any(|(w, _)| !(w.is_finite() && *w >= 0.0)) {
            return Err(RfsError::InvalidArgument("mixture weights must be non-negative".into()));
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(RfsError::InvalidArgument(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(GaussianMixture { components })
    }

    pub fn single(g: Gaussian) -> Self {
        GaussianMixture { components: vec![(1.0, g)] }
    }

    pub fn dim(&self) -> usize {
        self.components[0].1.dim()
    }

    pub fn weight_sum(&self) -> f64 {
        self.components.iter().map(|(w, _)| w).sum()
    }

    /// Highest-weight component (first on ties).
    pub fn top_component(&self) -> &Gaussian {
        let mut best = 0;
        for (i, (w, _)) in self.components.iter().enumerate() {
            if *w > self.components[best].0 {
                best = i;
            }
        }
        &self.components[best].1
    }

    pub(crate) fn normalize(&mut self) {
        let total = self.weight_sum();
        if total > 0.0 {
            for (w, _) in &mut self.components {
                *w /= total;
            }
        }
    }
}

/// Mixture density Σ w_i N(x; m_i, P_i).
pub fn gm_eval(gm: &GaussianMixture, x: &DVector<f64>) -> Result<f64, RfsError> {
    let mut total = 0.0;
    for (w, g) in &gm.components {
        total += w * g.pdf(x)?;
    }
    Ok(total)
}

/// Time update: N(F m, F P F' + Q).
pub fn kalman_predict(g: &Gaussian, f: &DMatrix<f64>, q: &DMatrix<f64>) -> Gaussian {
    let mean = f * &g.mean;
    let cov = f * &g.cov * f.transpose() + q;
    Gaussian { mean, cov: symmetrize(cov) }
}

/// Measurement update of `g` with `z`. Returns the posterior and the log of
/// the marginal measurement likelihood N(z; H m, H P H' + R).
pub fn kalman_update_log(
    g: &Gaussian,
    z: &DVector<f64>,
    h: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<(Gaussian, f64), RfsError> {
    if h.ncols() != g.dim() || h.nrows() != z.len() || r.nrows() != z.len() || r.ncols() != z.len()
    {
        return Err(RfsError::DimensionMismatch(format!(
            "H is {}x{}, R is {}x{}, z has {}, state has {}",
            h.nrows(),
            h.ncols(),
            r.nrows(),
            r.ncols(),
            z.len(),
            g.dim()
        )));
    }
    let innovation = z - h * &g.mean;
    let s = symmetrize(h * &g.cov * h.transpose() + r);
    let chol = s
        .clone()
        .cholesky()
        .ok_or_else(|| RfsError::NotPositiveDefinite("innovation covariance".into()))?;
    let pht = &g.cov * h.transpose();
    // K = P H' S^-1, computed as (S^-1 H P)'.
    let gain = chol.solve(&pht.transpose()).transpose();
    let mean = &g.mean + &gain * &innovation;
    let n = g.dim();
    let i_kh = DMatrix::<f64>::identity(n, n) - &gain * h;
    let cov = &i_kh * &g.cov * i_kh.transpose() + &gain * r * gain.transpose();
    let log_lik = log_normal(&innovation, &s)?;
    Ok((Gaussian { mean, cov: symmetrize(cov) }, log_lik))
}

/// Measurement update returning the likelihood itself rather than its log.
pub fn kalman_update(
    g: &Gaussian,
    z: &DVector<f64>,
    h: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<(Gaussian, f64), RfsError> {
    let (post, log_lik) = kalman_update_log(g, z, h, r)?;
    Ok((post, log_lik.exp()))
}

/// Updates every mixture component with `z`. Returns the posterior mixture and
/// the log of the mixture's measurement likelihood.
pub(crate) fn gm_update_log(
    gm: &GaussianMixture,
    z: &DVector<f64>,
    h: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<(GaussianMixture, f64), RfsError> {
    let mut parts = Vec::with_capacity(gm.components.len());
    for (w, g) in &gm.components {
        let (post, ll) = kalman_update_log(g, z, h, r)?;
        parts.push((w.ln() + ll, post));
    }
    let max = parts.iter().map(|(l, _)| *l).fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Ok((gm.clone(), f64::NEG_INFINITY));
    }
    let sum: f64 = parts.iter().map(|(l, _)| (l - max).exp()).sum();
    let log_total = max + sum.ln();
    let components = parts
        .into_iter()
        .map(|(l, g)| ((l - log_total).exp(), g))
        .collect();
    Ok((GaussianMixture { components }, log_total))
}

pub(crate) fn gm_predict(gm: &GaussianMixture, f: &DMatrix<f64>, q: &DMatrix<f64>) -> GaussianMixture {
    GaussianMixture {
        components: gm.components.iter().map(|(w, g)| (*w, kalman_predict(g, f, q))).collect(),
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (&m + m.transpose())
}
