use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::density::{lmb_hypothesis_weight, BernoulliTrack};
use super::gaussian::{gm_predict, gm_update_log, GaussianMixture};
use super::{Label, RfsError};
use crate::planning::{ranked_assignments, CostMatrix};

/// Association history value for a missed detection.
pub const MISSED: i32 = -1;

/// Track table entry: one labeled track under one association history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmbTrack {
    pub label: Label,
    pub mixture: GaussianMixture,
    /// Measurement index per scan since birth, `MISSED` for misses.
    pub history: Vec<i32>,
}

/// One GLMB component: weight and the track-table entries it holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmbHypothesis {
    pub weight: f64,
    /// Sorted indices into [`GlmbDensity::tracks`], at most one per label.
    pub tracks: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmbDensity {
    pub tracks: Vec<GlmbTrack>,
    pub hypotheses: Vec<GlmbHypothesis>,
}

/// Birth component: existence probability and spatial mixture at a fixed
/// birth index (the start-location index).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirthComponent {
    pub r: f64,
    pub mixture: GaussianMixture,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BirthModel {
    pub components: Vec<BirthComponent>,
}

/// Linear-Gaussian motion `x' = F x + w`, `w ~ N(0, Q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionModel {
    pub f: DMatrix<f64>,
    pub q: DMatrix<f64>,
}

impl MotionModel {
    /// Planar constant velocity on `[x, y, vx, vy]` with white-acceleration
    /// intensity `q`.
    pub fn constant_velocity(dt: f64, q: f64) -> Self {
        let mut f = DMatrix::identity(4, 4);
        f[(0, 2)] = dt;
        f[(1, 3)] = dt;
        let (d3, d2) = (dt.powi(3) / 3.0, dt.powi(2) / 2.0);
        let mut qm = DMatrix::zeros(4, 4);
        for i in 0..2 {
            qm[(i, i)] = d3 * q;
            qm[(i, i + 2)] = d2 * q;
            qm[(i + 2, i)] = d2 * q;
            qm[(i + 2, i + 2)] = dt * q;
        }
        MotionModel { f, q: qm }
    }
}

/// Linear-Gaussian measurement `z = H x + v`, `v ~ N(0, R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementModel {
    pub h: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

impl MeasurementModel {
    /// Position-only measurement of a `[x, y, vx, vy]` state.
    pub fn position(r: DMatrix<f64>) -> Self {
        let mut h = DMatrix::zeros(2, 4);
        h[(0, 0)] = 1.0;
        h[(1, 1)] = 1.0;
        MeasurementModel { h, r }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictLimits {
    pub max_survival_subsets: usize,
    pub max_birth_subsets: usize,
    /// Cap on predicted hypotheses kept (highest weight first).
    pub max_hypotheses: usize,
}

impl Default for PredictLimits {
    fn default() -> Self {
        PredictLimits { max_survival_subsets: 8, max_birth_subsets: 8, max_hypotheses: 400 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateLimits {
    /// Enumerate every association when a hypothesis has at most this many.
    pub exhaustive_limit: usize,
    /// Total ranked associations shared out over hypotheses (by √weight)
    /// when enumeration is too large.
    pub budget: usize,
}

impl Default for UpdateLimits {
    fn default() -> Self {
        UpdateLimits { exhaustive_limit: 512, budget: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PruneLimits {
    pub weight_threshold: f64,
    pub max_hypotheses: usize,
    pub gm_threshold: f64,
    pub gm_cap: usize,
}

/// Point estimate of one labeled track.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub label: Label,
    pub mean: DVector<f64>,
}

impl Estimate {
    pub fn position(&self) -> crate::scenario::Point {
        crate::scenario::Point::new(self.mean[0], self.mean[1])
    }
}

impl Default for GlmbDensity {
    fn default() -> Self {
        Self::empty()
    }
}

impl GlmbDensity {
    /// The density of the empty set: one hypothesis with no tracks.
    pub fn empty() -> Self {
        GlmbDensity {
            tracks: Vec::new(),
            hypotheses: vec![GlmbHypothesis { weight: 1.0, tracks: Vec::new() }],
        }
    }

    /// GLMB form of an LMB density: one hypothesis per label subset with
    /// non-zero weight.
    pub fn from_labeled_multi_bernoulli(tracks: &[BernoulliTrack]) -> Self {
        let table: Vec<GlmbTrack> = tracks
            .iter()
            .map(|t| GlmbTrack { label: t.label, mixture: t.p.clone(), history: Vec::new() })
            .collect();
        let mut hypotheses = Vec::new();
        for mask in 0u64..(1u64 << tracks.len()) {
            let idx: Vec<usize> = (0..tracks.len()).filter(|i| mask >> i & 1 == 1).collect();
            let labels: BTreeSet<Label> = idx.iter().map(|&i| tracks[i].label).collect();
            let w = lmb_hypothesis_weight(tracks, &labels);
            if w > 0.0 {
                hypotheses.push(GlmbHypothesis { weight: w, tracks: idx });
            }
        }
        GlmbDensity { tracks: table, hypotheses }
    }

    pub fn weight_sum(&self) -> f64 {
        self.hypotheses.iter().map(|h| h.weight).sum()
    }

    pub fn label_set(&self, h: &GlmbHypothesis) -> BTreeSet<Label> {
        h.tracks.iter().map(|&t| self.tracks[t].label).collect()
    }

    pub fn association_history(&self, h: &GlmbHypothesis) -> BTreeMap<Label, Vec<i32>> {
        h.tracks
            .iter()
            .map(|&t| (self.tracks[t].label, self.tracks[t].history.clone()))
            .collect()
    }

    /// Cardinality distribution `ρ(n)` for `n = 0..=max`.
    pub fn cardinality(&self) -> Vec<f64> {
        let max = self.hypotheses.iter().map(|h| h.tracks.len()).max().unwrap_or(0);
        let mut rho = vec![0.0; max + 1];
        for h in &self.hypotheses {
            rho[h.tracks.len()] += h.weight;
        }
        rho
    }

    /// Marginal existence probability of every label.
    pub fn existence(&self) -> BTreeMap<Label, f64> {
        let mut r = BTreeMap::new();
        for h in &self.hypotheses {
            for &t in &h.tracks {
                *r.entry(self.tracks[t].label).or_insert(0.0) += h.weight;
            }
        }
        r
    }

    /// Marginal LMB view: per label, existence and the weight-averaged mixture.
    pub fn marginal_tracks(&self) -> Vec<BernoulliTrack> {
        let mut per_label: BTreeMap<Label, (f64, Vec<(f64, super::Gaussian)>)> = BTreeMap::new();
        for h in &self.hypotheses {
            for &t in &h.tracks {
                let entry = per_label.entry(self.tracks[t].label).or_insert((0.0, Vec::new()));
                entry.0 += h.weight;
                for (w, g) in &self.tracks[t].mixture.components {
                    entry.1.push((h.weight * w, g.clone()));
                }
            }
        }
        per_label
            .into_iter()
            .map(|(label, (r, comps))| {
                let mut p = GaussianMixture { components: comps };
                p.normalize();
                BernoulliTrack { label, r: r.min(1.0), p }
            })
            .collect()
    }

    fn normalize(&mut self) {
        let total = self.weight_sum();
        if total > 0.0 {
            for h in &mut self.hypotheses {
                h.weight /= total;
            }
        }
    }
}

/// Subsets of independent binary choices in non-increasing order of weight.
/// `p[i]` is the probability of including element `i`. Returns at most `k`
/// pairs of inclusion flags and weights, skipping zero-weight subsets.
pub fn k_best_subsets(p: &[f64], k: usize) -> Vec<(Vec<bool>, f64)> {
    let n = p.len();
    if k == 0 {
        return Vec::new();
    }
    let preferred: Vec<bool> = p.iter().map(|&pi| pi >= 0.5).collect();
    let base: f64 = p
        .iter()
        .zip(&preferred)
        .map(|(&pi, &inc)| if inc { pi } else { 1.0 - pi })
        .product();
    if base == 0.0 {
        return Vec::new();
    }
    // Cost of flipping element i away from its preferred choice.
    let mut flips: Vec<(f64, usize)> = (0..n)
        .filter_map(|i| {
            let (pref, other) = if preferred[i] { (p[i], 1.0 - p[i]) } else { (1.0 - p[i], p[i]) };
            (other > 0.0).then(|| ((pref / other).ln(), i))
        })
        .collect();
    flips.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let make = |set: &[usize]| -> (Vec<bool>, f64) {
        let mut flags = preferred.clone();
        let mut cost = 0.0;
        for &f in set {
            flags[flips[f].1] = !flags[flips[f].1];
            cost += flips[f].0;
        }
        (flags, base * (-cost).exp())
    };

    #[derive(PartialEq)]
    struct Node(f64, usize, Vec<usize>);
    impl Eq for Node {}
    impl PartialOrd for Node {
        fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Node {
        fn cmp(&self, other: &Self) -> Ordering {
            other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
        }
    }

    let mut out = vec![make(&[])];
    let mut heap = BinaryHeap::new();
    let mut seq = 0;
    if !flips.is_empty() {
        heap.push(Node(flips[0].0, seq, vec![0]));
    }
    // Each flip set is a sorted index list; successors either move the last
    // index forward or extend the set with the next index.
    while out.len() < k {
        let Some(Node(cost, _, set)) = heap.pop() else { break };
        out.push(make(&set));
        let last = *set.last().expect("non-empty flip set");
        if last + 1 < flips.len() {
            let mut extend = set.clone();
            extend.push(last + 1);
            seq += 1;
            heap.push(Node(cost + flips[last + 1].0, seq, extend));
            let mut shift = set;
            *shift.last_mut().unwrap() = last + 1;
            seq += 1;
            heap.push(Node(cost - flips[last].0 + flips[last + 1].0, seq, shift));
        }
    }
    out
}

/// Prediction: every hypothesis spawns its most likely survival subsets
/// combined with the most likely birth subsets; identical track sets merge.
/// Births get labels `(step, i)`.
pub fn glmb_predict(
    density: &GlmbDensity,
    motion: &MotionModel,
    survival_prob: f64,
    birth: &BirthModel,
    step: u32,
    limits: PredictLimits,
) -> GlmbDensity {
    let n_prior = density.tracks.len();
    let mut tracks: Vec<GlmbTrack> = density
        .tracks
        .iter()
        .map(|t| GlmbTrack {
            label: t.label,
            mixture: gm_predict(&t.mixture, &motion.f, &motion.q),
            history: t.history.clone(),
        })
        .collect();
    for (i, b) in birth.components.iter().enumerate() {
        tracks.push(GlmbTrack {
            label: Label::new(step, i as u32),
            mixture: b.mixture.clone(),
            history: Vec::new(),
        });
    }
    let birth_r: Vec<f64> = birth.components.iter().map(|b| b.r).collect();
    let births = k_best_subsets(&birth_r, limits.max_birth_subsets);

    let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut hypotheses: Vec<GlmbHypothesis> = Vec::new();
    for h in &density.hypotheses {
        let ps = vec![survival_prob; h.tracks.len()];
        for (surv, ws) in k_best_subsets(&ps, limits.max_survival_subsets) {
            for (born, wb) in &births {
                let mut set: Vec<usize> =
                    h.tracks.iter().zip(&surv).filter(|(_, s)| **s).map(|(t, _)| *t).collect();
                set.extend(born.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| n_prior + i));
                let w = h.weight * ws * wb;
                if w <= 0.0 {
                    continue;
                }
                match index.get(&set) {
                    Some(&k) => hypotheses[k].weight += w,
                    None => {
                        index.insert(set.clone(), hypotheses.len());
                        hypotheses.push(GlmbHypothesis { weight: w, tracks: set });
                    }
                }
            }
        }
    }
    if hypotheses.len() > limits.max_hypotheses {
        let mut order: Vec<usize> = (0..hypotheses.len()).collect();
        order.sort_by(|&a, &b| hypotheses[b].weight.total_cmp(&hypotheses[a].weight).then(a.cmp(&b)));
        let mut keep = vec![false; hypotheses.len()];
        for &i in order.iter().take(limits.max_hypotheses) {
            keep[i] = true;
        }
        let mut i = 0;
        hypotheses.retain(|_| {
            i += 1;
            keep[i - 1]
        });
    }
    if hypotheses.is_empty() {
        hypotheses.push(GlmbHypothesis { weight: 1.0, tracks: Vec::new() });
    }
    let mut out = GlmbDensity { tracks, hypotheses };
    out.normalize();
    compact_tracks(&mut out);
    out
}

/// Number of partial injective maps from `n` tracks into `m` measurements,
/// saturating at `cap + 1`.
fn association_count(n: usize, m: usize, cap: usize) -> usize {
    let mut total: u128 = 0;
    let mut binom: u128 = 1; // C(n, k)
    let mut falling: u128 = 1; // m! / (m - k)!
    for k in 0..=n.min(m) {
        if k > 0 {
            binom = binom * (n - k + 1) as u128 / k as u128;
            falling *= (m - k + 1) as u128;
        }
        total = total.saturating_add(binom.saturating_mul(falling));
        if total > cap as u128 {
            return cap + 1;
        }
    }
    total as usize
}

/// Every association of `n` rows; column `m + i` is the miss of row `i`.
fn enumerate_associations(cost: &CostMatrix, n: usize, m: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(
        row: usize,
        cost: &CostMatrix,
        n: usize,
        m: usize,
        used: &mut [bool],
        cols: &mut Vec<usize>,
        acc: f64,
        out: &mut Vec<(Vec<usize>, f64)>,
    ) {
        if row == n {
            out.push((cols.clone(), acc));
            return;
        }
        let miss = cost.get(row, m + row);
        if miss.is_finite() {
            cols.push(m + row);
            rec(row + 1, cost, n, m, used, cols, acc + miss, out);
            cols.pop();
        }
        for j in 0..m {
            let c = cost.get(row, j);
            if used[j] || !c.is_finite() {
                continue;
            }
            used[j] = true;
            cols.push(j);
            rec(row + 1, cost, n, m, used, cols, acc + c, out);
            cols.pop();
            used[j] = false;
        }
    }
    let mut out = Vec::new();
    rec(0, cost, n, m, &mut vec![false; m], &mut Vec::with_capacity(n), 0.0, &mut out);
    out
}

/// Measurement update of a predicted density with one scan.
///
/// `clutter_intensity` is the clutter density per unit area (rate divided by
/// area). Each hypothesis expands into its associations, either all of them
/// or the best ones found by ranked assignment, and child weights are
/// normalized in the log domain.
pub fn glmb_update(
    density: &GlmbDensity,
    scan: &[DVector<f64>],
    meas: &MeasurementModel,
    detect_prob: f64,
    clutter_intensity: f64,
    limits: UpdateLimits,
) -> Result<GlmbDensity, RfsError> {
    let m = scan.len();
    let log_kappa = clutter_intensity.max(1e-300).ln();
    let log_pd = detect_prob.ln();
    let log_qd = (1.0 - detect_prob).ln();

    // Updated mixtures and likelihoods for every (track, measurement) pair.
    let mut updated: Vec<Vec<Option<GaussianMixture>>> = vec![vec![None; m]; density.tracks.len()];
    let mut log_lik = vec![vec![f64::NEG_INFINITY; m]; density.tracks.len()];
    let mut in_use = vec![false; density.tracks.len()];
    for h in &density.hypotheses {
        for &t in &h.tracks {
            in_use[t] = true;
        }
    }
    for (t, track) in density.tracks.iter().enumerate() {
        if !in_use[t] {
            continue;
        }
        for (j, z) in scan.iter().enumerate() {
            let (gm, ll) = gm_update_log(&track.mixture, z, &meas.h, &meas.r)?;
            log_lik[t][j] = ll;
            updated[t][j] = Some(gm);
        }
    }

    let sqrt_total: f64 = density.hypotheses.iter().map(|h| h.weight.sqrt()).sum();
    let mut children: Vec<(f64, Vec<(usize, usize)>)> = Vec::new();
    for h in &density.hypotheses {
        let n = h.tracks.len();
        let log_w = h.weight.ln();
        if n == 0 {
            children.push((log_w, Vec::new()));
            continue;
        }
        let cost = CostMatrix::from_fn(n, m + n, |i, j| {
            let t = h.tracks[i];
            if j < m {
                -(log_pd + log_lik[t][j] - log_kappa)
            } else if j - m == i {
                -log_qd
            } else {
                f64::INFINITY
            }
        });
        let assocs: Vec<(Vec<usize>, f64)> = if association_count(n, m, limits.exhaustive_limit)
            <= limits.exhaustive_limit
        {
            enumerate_associations(&cost, n, m)
        } else {
            let k = ((limits.budget as f64) * h.weight.sqrt() / sqrt_total).ceil().max(1.0) as usize;
            ranked_assignments(&cost, k).into_iter().map(|r| (r.cols, r.cost)).collect()
        };
        for (cols, c) in assocs {
            if !c.is_finite() {
                continue;
            }
            let pairs = h
                .tracks
                .iter()
                .zip(&cols)
                .map(|(&t, &j)| (t, if j < m { j } else { usize::MAX }))
                .collect();
            children.push((log_w - c, pairs));
        }
    }

    let max = children.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Ok(GlmbDensity::empty());
    }
    let log_norm = max + children.iter().map(|c| (c.0 - max).exp()).sum::<f64>().ln();

    let mut tracks: Vec<GlmbTrack> = Vec::new();
    let mut slot: HashMap<(usize, usize), usize> = HashMap::new();
    let mut hypotheses = Vec::with_capacity(children.len());
    for (lw, pairs) in children {
        let w = (lw - log_norm).exp();
        if w <= 0.0 {
            continue;
        }
        let mut set = Vec::with_capacity(pairs.len());
        for (t, j) in pairs {
            let idx = *slot.entry((t, j)).or_insert_with(|| {
                let src = &density.tracks[t];
                let mut history = src.history.clone();
                let mixture = if j == usize::MAX {
                    history.push(MISSED);
                    src.mixture.clone()
                } else {
                    history.push(j as i32);
                    updated[t][j].clone().expect("likelihood computed for used track")
                };
                tracks.push(GlmbTrack { label: src.label, mixture, history });
                tracks.len() - 1
            });
            set.push(idx);
        }
        set.sort_unstable();
        hypotheses.push(GlmbHypothesis { weight: w, tracks: set });
    }
    if hypotheses.is_empty() {
        return Ok(GlmbDensity::empty());
    }
    let mut out = GlmbDensity { tracks, hypotheses };
    out.normalize();
    Ok(out)
}

/// Drops hypotheses below the threshold, keeps at most `max_hypotheses` of
/// the heaviest, renormalizes, and prunes/caps each track's mixture. The
/// heaviest hypothesis always survives. Relative order is preserved.
pub fn prune_hypotheses(density: &GlmbDensity, limits: PruneLimits) -> GlmbDensity {
    let mut order: Vec<usize> = (0..density.hypotheses.len()).collect();
    order.sort_by(|&a, &b| {
        density.hypotheses[b].weight.total_cmp(&density.hypotheses[a].weight).then(a.cmp(&b))
    });
    let mut keep = vec![false; density.hypotheses.len()];
    for (rank, &i) in order.iter().enumerate() {
        if rank == 0
            || (rank < limits.max_hypotheses
                && density.hypotheses[i].weight >= limits.weight_threshold)
        {
            keep[i] = true;
        }
    }
    let hypotheses: Vec<GlmbHypothesis> = density
        .hypotheses
        .iter()
        .zip(&keep)
        .filter(|(_, k)| **k)
        .map(|(h, _)| h.clone())
        .collect();
    let dropped = hypotheses.len() != density.hypotheses.len();
    let mut out = GlmbDensity { tracks: density.tracks.clone(), hypotheses };
    if dropped {
        out.normalize();
    }
    compact_tracks(&mut out);
    for t in &mut out.tracks {
        prune_mixture(&mut t.mixture, limits.gm_threshold, limits.gm_cap);
    }
    out
}

fn prune_mixture(gm: &mut GaussianMixture, threshold: f64, cap: usize) {
    let n = gm.components.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| gm.components[b].0.total_cmp(&gm.components[a].0).then(a.cmp(&b)));
    let mut keep = vec![false; n];
    for (rank, &i) in order.iter().enumerate() {
        if rank == 0 || (rank < cap.max(1) && gm.components[i].0 >= threshold) {
            keep[i] = true;
        }
    }
    if keep.iter().all(|k| *k) {
        return;
    }
    let mut i = 0;
    gm.components.retain(|_| {
        i += 1;
        keep[i - 1]
    });
    gm.normalize();
}

/// Removes track-table entries no hypothesis references, preserving order.
fn compact_tracks(density: &mut GlmbDensity) {
    let mut used = vec![false; density.tracks.len()];
    for h in &density.hypotheses {
        for &t in &h.tracks {
            used[t] = true;
        }
    }
    if used.iter().all(|u| *u) {
        return;
    }
    let mut remap = vec![usize::MAX; density.tracks.len()];
    let mut next = 0;
    for (i, u) in used.iter().enumerate() {
        if *u {
            remap[i] = next;
            next += 1;
        }
    }
    let mut i = 0;
    density.tracks.retain(|_| {
        i += 1;
        used[i - 1]
    });
    for h in &mut density.hypotheses {
        for t in &mut h.tracks {
            *t = remap[*t];
        }
    }
}

/// MAP-cardinality extraction: the most probable cardinality (lower wins
/// ties), its heaviest hypothesis, and the top-component mean of each track,
/// sorted by label.
pub fn extract_states(density: &GlmbDensity) -> Vec<Estimate> {
    let rho = density.cardinality();
    let mut n_map = 0;
    for (n, &p) in rho.iter().enumerate() {
        if p > rho[n_map] {
            n_map = n;
        }
    }
    let best = density
        .hypotheses
        .iter()
        .filter(|h| h.tracks.len() == n_map)
        .fold(None::<&GlmbHypothesis>, |acc, h| match acc {
            Some(a) if a.weight >= h.weight => Some(a),
            _ => Some(h),
        });
    let Some(best) = best else { return Vec::new() };
    let mut out: Vec<Estimate> = best
        .tracks
        .iter()
        .map(|&t| Estimate {
            label: density.tracks[t].label,
            mean: density.tracks[t].mixture.top_component().mean.clone(),
        })
        .collect();
    out.sort_by_key(|e| e.label);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rfs::Gaussian;

    fn gm1(m: f64, p: f64) -> GaussianMixture {
        GaussianMixture::single(
            Gaussian::new(DVector::from_element(1, m), DMatrix::from_element(1, 1, p)).unwrap(),
        )
    }

    fn scalar_motion() -> MotionModel {
        MotionModel { f: DMatrix::identity(1, 1), q: DMatrix::from_element(1, 1, 0.1) }
    }

    fn scalar_meas() -> MeasurementModel {
        MeasurementModel { h: DMatrix::identity(1, 1), r: DMatrix::from_element(1, 1, 1.0) }
    }

    #[test]
    fn subsets_ranked_exhaustively() {
        let p = [0.9, 0.3, 0.6];
        let all = k_best_subsets(&p, 100);
        assert_eq!(all.len(), 8);
        let total: f64 = all.iter().map(|s| s.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(all.windows(2).all(|w| w[0].1 >= w[1].1 - 1e-15));
        assert_eq!(all[0].0, vec![true, false, true]);
        // Brute-force check of each weight.
        for (flags, w) in &all {
            let direct: f64 =
                flags.iter().zip(&p).map(|(f, pi)| if *f { *pi } else { 1.0 - pi }).product();
            assert!((w - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn certain_choices_have_single_subset() {
        let s = k_best_subsets(&[1.0, 0.0], 10);
        assert_eq!(s, vec![(vec![true, false], 1.0)]);
        assert!(k_best_subsets(&[], 3).len() == 1);
    }

    #[test]
    fn predicted_existence_is_product() {
        let tracks = vec![BernoulliTrack::new(Label::new(0, 0), 0.5, gm1(0.0, 1.0)).unwrap()];
        let d = GlmbDensity::from_labeled_multi_bernoulli(&tracks);
        let p = glmb_predict(&d, &scalar_motion(), 0.8, &BirthModel::default(), 1, Default::default());
        let r = p.existence()[&Label::new(0, 0)];
        assert!((r - 0.4).abs() < 1e-12);
        assert!((p.weight_sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn certain_survival_without_birth_is_identity_on_weights() {
        let tracks = vec![
            BernoulliTrack::new(Label::new(0, 0), 0.7, gm1(0.0, 1.0)).unwrap(),
            BernoulliTrack::new(Label::new(0, 1), 0.2, gm1(5.0, 1.0)).unwrap(),
        ];
        let d = GlmbDensity::from_labeled_multi_bernoulli(&tracks);
        let p = glmb_predict(&d, &scalar_motion(), 1.0, &BirthModel::default(), 1, Default::default());
        assert_eq!(p.hypotheses.len(), d.hypotheses.len());
        for (a, b) in p.hypotheses.iter().zip(&d.hypotheses) {
            assert!((a.weight - b.weight).abs() < 1e-15);
            assert_eq!(p.label_set(a), d.label_set(b));
        }
    }

    #[test]
    fn births_get_step_labels() {
        let birth = BirthModel {
            components: vec![
                BirthComponent { r: 0.9, mixture: gm1(0.0, 1.0) },
                BirthComponent { r: 0.9, mixture: gm1(10.0, 1.0) },
            ],
        };
        let p = glmb_predict(&GlmbDensity::empty(), &scalar_motion(), 0.99, &birth, 3, Default::default());
        let labels: Vec<Label> = p.existence().keys().copied().collect();
        assert_eq!(labels, vec![Label::new(3, 0), Label::new(3, 1)]);
        assert!((p.existence()[&Label::new(3, 1)] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn update_without_measurements_with_certain_detection_empties() {
        let tracks = vec![BernoulliTrack::new(Label::new(0, 0), 0.5, gm1(0.0, 1.0)).unwrap()];
        let d = GlmbDensity::from_labeled_multi_bernoulli(&tracks);
        let u = glmb_update(&d, &[], &scalar_meas(), 1.0, 1e-3, Default::default()).unwrap();
        assert_eq!(u.hypotheses.len(), 1);
        assert!(u.hypotheses[0].tracks.is_empty());
    }

    #[test]
    fn missed_detection_posterior_existence() {
        // r' = r q / (1 - r + r q)
        let tracks = vec![BernoulliTrack::new(Label::new(0, 0), 0.6, gm1(0.0, 1.0)).unwrap()];
        let d = GlmbDensity::from_labeled_multi_bernoulli(&tracks);
        let u = glmb_update(&d, &[], &scalar_meas(), 0.9, 1e-3, Default::default()).unwrap();
        let expected = 0.6 * 0.1 / (0.4 + 0.06);
        assert!((u.existence()[&Label::new(0, 0)] - expected).abs() < 1e-12);
        assert_eq!(u.tracks[0].history, vec![MISSED]);
    }

    #[test]
    fn association_counts() {
        assert_eq!(association_count(1, 1, 100), 2);
        assert_eq!(association_count(2, 2, 100), 7);
        assert_eq!(association_count(3, 0, 100), 1);
        assert_eq!(association_count(10, 10, 100), 101);
    }

    #[test]
    fn exhaustive_and_ranked_agree_when_budget_covers_everything() {
        let tracks = vec![
            BernoulliTrack::new(Label::new(0, 0), 0.8, gm1(0.0, 1.0)).unwrap(),
            BernoulliTrack::new(Label::new(0, 1), 0.7, gm1(4.0, 1.0)).unwrap(),
        ];
        let d = GlmbDensity::from_labeled_multi_bernoulli(&tracks);
        let scan = vec![DVector::from_element(1, 0.3), DVector::from_element(1, 3.5)];
        let a = glmb_update(&d, &scan, &scalar_meas(), 0.9, 0.05, Default::default()).unwrap();
        let b = glmb_update(
            &d,
            &scan,
            &scalar_meas(),
            0.9,
            0.05,
            UpdateLimits { exhaustive_limit: 0, budget: 1000 },
        )
        .unwrap();
        let (ra, rb) = (a.existence(), b.existence());
        for (l, r) in &ra {
            assert!((r - rb[l]).abs() < 1e-12, "{l:?}");
        }
        assert_eq!(a.hypotheses.len(), b.hypotheses.len());
    }

    #[test]
    fn prune_noop_and_never_empty() {
        let tracks = vec![
            BernoulliTrack::new(Label::new(0, 0), 0.7, gm1(0.0, 1.0)).unwrap(),
            BernoulliTrack::new(Label::new(0, 1), 0.2, gm1(5.0, 1.0)).unwrap(),
        ];
        let d = GlmbDensity::from_labeled_multi_bernoulli(&tracks);
        let limits = PruneLimits { weight_threshold: 0.0, max_hypotheses: 10, gm_threshold: 0.0, gm_cap: 10 };
        assert_eq!(prune_hypotheses(&d, limits), d);
        let harsh = PruneLimits { weight_threshold: 2.0, max_hypotheses: 10, gm_threshold: 0.0, gm_cap: 10 };
        let p = prune_hypotheses(&d, harsh);
        assert_eq!(p.hypotheses.len(), 1);
        assert_eq!(p.hypotheses[0].weight, 1.0);
        // 0.7 * 0.8 is the heaviest
        assert_eq!(p.label_set(&p.hypotheses[0]).len(), 1);
    }

    #[test]
    fn extraction_breaks_cardinality_ties_low() {
        let tracks = vec![BernoulliTrack::new(Label::new(0, 0), 0.5, gm1(2.0, 1.0)).unwrap()];
        let d = GlmbDensity::from_labeled_multi_bernoulli(&tracks);
        assert!(extract_states(&d).is_empty());
        let tracks = vec![BernoulliTrack::new(Label::new(0, 0), 0.51, gm1(2.0, 1.0)).unwrap()];
        let d = GlmbDensity::from_labeled_multi_bernoulli(&tracks);
        let e = extract_states(&d);
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].mean[0], 2.0);
    }
}
