use nalgebra::Matrix2;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use super::RfsError;
use crate::scenario::{MissionArea, Point};

/// Origin of a measurement. Kept for scoring only; the filters never see it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthTag {
    Agent(usize),
    Target(usize),
    Clutter,
}

impl std::fmt::Display for TruthTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TruthTag::Agent(i) => write!(f, "agent:{i}"),
            TruthTag::Target(i) => write!(f, "target:{i}"),
            TruthTag::Clutter => write!(f, "clutter"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub z: Point,
    pub tag: TruthTag,
}

/// One filter-tick scan of position measurements.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MeasurementScan {
    pub step: u32,
    pub measurements: Vec<Measurement>,
}

impl MeasurementScan {
    /// Points in scan order, without tags.
    pub fn points(&self) -> Vec<Point> {
        self.measurements.iter().map(|m| m.z).collect()
    }
}

/// Poisson(λ) clutter points, uniform over the area. Draws the count, then
/// x and y per point.
pub fn generate_clutter<R: Rng + ?Sized>(rate: f64, area: &MissionArea, rng: &mut R) -> Result<Vec<Point>, RfsError> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(RfsError::InvalidArgument(format!("clutter rate {rate}")));
    }
    if rate == 0.0 {
        return Ok(Vec::new());
    }
    let poisson = Poisson::new(rate).map_err(|e| RfsError::InvalidArgument(e.to_string()))?;
    let count: f64 = poisson.sample(rng);
    Ok((0..count as usize)
        .map(|_| {
            let x = rng.random_range(area.x_min..=area.x_max);
            let y = rng.random_range(area.y_min..=area.y_max);
            Point::new(x, y)
        })
        .collect())
}

/// Lower Cholesky factor of a noise covariance; the zero matrix is allowed
/// (noiseless sensing).
pub fn noise_factor(cov: &Matrix2<f64>) -> Result<Matrix2<f64>, RfsError> {
    if cov.iter().all(|v| *v == 0.0) {
        return Ok(Matrix2::zeros());
    }
    cov.cholesky()
        .map(|c| c.l())
        .ok_or_else(|| RfsError::NotPositiveDefinite("measurement noise".into()))
}

/// Independent detections with probability `p_d` plus Gaussian noise. For
/// each object one uniform draw decides detection, then two normals are
/// drawn if detected.
pub fn generate_measurements<R: Rng + ?Sized>(
    objects: &[(TruthTag, Point)],
    detect_prob: f64,
    noise: &Matrix2<f64>,
    rng: &mut R,
) -> Result<Vec<Measurement>, RfsError> {
    if !(0.0..=1.0).contains(&detect_prob) {
        return Err(RfsError::InvalidArgument(format!("detection probability {detect_prob}")));
    }
    let l = noise_factor(noise)?;
    let mut out = Vec::new();
    for &(tag, pos) in objects {
        let u: f64 = rng.random();
        if u < detect_prob {
            let n = nalgebra::Vector2::new(StandardNormal.sample(rng), StandardNormal.sample(rng));
            out.push(Measurement { z: pos + l * n, tag });
        }
    }
    Ok(out)
}
