//! Set densities of Bernoulli, multi-Bernoulli and labeled multi-Bernoulli
//! random finite sets.

use std::collections::BTreeSet;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::gaussian::{gm_eval, GaussianMixture};
use super::glmb::GlmbDensity;
use super::{Label, RfsError};

/// Labeled Bernoulli component: existence probability `r` and spatial density `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernoulliTrack {
    pub label: Label,
    pub r: f64,
    pub p: GaussianMixture,
}

impl BernoulliTrack {
    pub fn new(label: Label, r: f64, p: GaussianMixture) -> Result<Self, RfsError> {
        if !(0.0..=1.0).contains(&r) {
            return Err(RfsError::InvalidArgument(format!("existence {r} outside [0, 1]")));
        }
        Ok(BernoulliTrack { label, r, p })
    }
}

/// `1 - r` for the empty set, `r p(x)` for a singleton, 0 otherwise.
pub fn bernoulli_density(track: &BernoulliTrack, x: &[DVector<f64>]) -> Result<f64, RfsError> {
    match x {
        [] => Ok(1.0 - track.r),
        [x] => Ok(track.r * gm_eval(&track.p, x)?),
        _ => Ok(0.0),
    }
}

/// Multi-Bernoulli set density: sum over all injective assignments of the
/// points to components of the matched `r p(x)` factors times the `1 - r`
/// factors of the unmatched components.
///
/// Equivalent to the normalized-ratio form `∏(1 - r) Σ ∏ r p / (1 - r)` but
/// also defined when some `r = 1`.
pub fn multi_bernoulli_density(
    params: &[(f64, GaussianMixture)],
    x: &[DVector<f64>],
) -> Result<f64, RfsError> {
    if x.len() > params.len() {
        return Ok(0.0);
    }
    // Pre-evaluate r_i p_i(x_j).
    let mut matched = vec![vec![0.0; x.len()]; params.len()];
    for (i, (r, p)) in params.iter().enumerate() {
        for (j, xj) in x.iter().enumerate() {
            matched[i][j] = r * gm_eval(p, xj)?;
        }
    }
    let missed: Vec<f64> = params.iter().map(|(r, _)| 1.0 - r).collect();
    let mut used = vec![false; params.len()];
    Ok(sum_injective(0, &matched, &missed, &mut used))
}

fn sum_injective(point: usize, matched: &[Vec<f64>], missed: &[f64], used: &mut [bool]) -> f64 {
    let n_points = matched.first().map_or(0, |row| row.len());
    if point == n_points {
        return missed
            .iter()
            .zip(used.iter())
            .filter(|(_, u)| !**u)
            .map(|(m, _)| m)
            .product();
    }
    let mut total = 0.0;
    for i in 0..matched.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        total += matched[i][point] * sum_injective(point + 1, matched, missed, used);
        used[i] = false;
    }
    total
}

/// Labeled multi-Bernoulli weight of a label set:
/// `∏_{i ∉ L} (1 - r_i) ∏_{ℓ ∈ L} r_ℓ`, and 0 if `L` names a label outside
/// the track set.
pub fn lmb_hypothesis_weight(tracks: &[BernoulliTrack], labels: &BTreeSet<Label>) -> f64 {
    if labels.iter().any(|l| !tracks.iter().any(|t| t.label == *l)) {
        return 0.0;
    }
    tracks
        .iter()
        .map(|t| if labels.contains(&t.label) { t.r } else { 1.0 - t.r })
        .product()
}

/// GLMB density of a labeled set `{(ℓ_i, x_i)}`:
/// `Δ(X) Σ_h w_h δ_{I_h}(L(X)) ∏ p_h^(ℓ)(x)`, with Δ(X) = 0 for repeated labels.
pub fn glmb_density(density: &GlmbDensity, x: &[(Label, DVector<f64>)]) -> Result<f64, RfsError> {
    let labels: BTreeSet<Label> = x.iter().map(|(l, _)| *l).collect();
    if labels.len() != x.len() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for h in &density.hypotheses {
        if h.tracks.len() != labels.len() {
            continue;
        }
        let hyp_labels: BTreeSet<Label> = h.tracks.iter().map(|&t| density.tracks[t].label).collect();
        if hyp_labels != labels {
            continue;
        }
        let mut prod = h.weight;
        for (label, state) in x {
            let t = h
                .tracks
                .iter()
                .map(|&t| &density.tracks[t])
                .find(|t| t.label == *label)
                .expect("label present in hypothesis");
            prod *= gm_eval(&t.mixture, state)?;
        }
        total += prod;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rfs::Gaussian;
    use nalgebra::DMatrix;

    fn gm(m: f64, p: f64) -> GaussianMixture {
        GaussianMixture::single(
            Gaussian::new(DVector::from_element(1, m), DMatrix::from_element(1, 1, p)).unwrap(),
        )
    }

    fn x(v: f64) -> DVector<f64> {
        DVector::from_element(1, v)
    }

    #[test]
    fn bernoulli_branches() {
        let t = |r| BernoulliTrack::new(Label::new(0, 0), r, gm(0.0, 1.0)).unwrap();
        assert_eq!(bernoulli_density(&t(0.0), &[]).unwrap(), 1.0);
        assert_eq!(bernoulli_density(&t(1.0), &[]).unwrap(), 0.0);
        let p = gm_eval(&gm(0.0, 1.0), &x(0.7)).unwrap();
        assert_eq!(bernoulli_density(&t(0.5), &[x(0.7)]).unwrap(), 0.5 * p);
        assert_eq!(bernoulli_density(&t(0.5), &[x(0.7), x(0.1)]).unwrap(), 0.0);
    }

    #[test]
    fn single_component_reduces_to_bernoulli() {
        let track = BernoulliTrack::new(Label::new(0, 0), 0.3, gm(1.0, 2.0)).unwrap();
        let params = [(0.3, gm(1.0, 2.0))];
        for set in [vec![], vec![x(0.5)], vec![x(0.5), x(1.0)]] {
            assert_eq!(
                multi_bernoulli_density(&params, &set).unwrap(),
                bernoulli_density(&track, &set).unwrap()
            );
        }
    }

    #[test]
    fn empty_set_is_product_of_misses() {
        let params = [(0.3, gm(0.0, 1.0)), (0.6, gm(2.0, 1.0)), (0.9, gm(4.0, 1.0))];
        let v = multi_bernoulli_density(&params, &[]).unwrap();
        assert!((v - 0.7 * 0.4 * 0.1).abs() < 1e-16);
    }

    #[test]
    fn duplicate_labels_have_zero_density() {
        let tracks = vec![BernoulliTrack::new(Label::new(0, 0), 0.5, gm(0.0, 1.0)).unwrap()];
        let d = GlmbDensity::from_labeled_multi_bernoulli(&tracks);
        let l = Label::new(0, 0);
        assert_eq!(glmb_density(&d, &[(l, x(0.0)), (l, x(1.0))]).unwrap(), 0.0);
    }

    #[test]
    fn unknown_label_weight_is_zero() {
        let tracks = vec![BernoulliTrack::new(Label::new(0, 0), 0.5, gm(0.0, 1.0)).unwrap()];
        let labels: BTreeSet<_> = [Label::new(1, 0)].into_iter().collect();
        assert_eq!(lmb_hypothesis_weight(&tracks, &labels), 0.0);
    }
}
