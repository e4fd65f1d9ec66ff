//! Linear sum assignment.
//!
//! The core solver is a shortest-augmenting-path method (Jonker–Volgenant
//! style, one Dijkstra search per row with dual potentials) that accepts
//! rectangular matrices and `+∞` entries for forbidden pairs. The mission
//! planner wraps it with deterministic tie-breaking; the tracking filter uses
//! the ranked (Murty) enumeration built on the same solver.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::PlanError;

/// Dense row-major cost matrix; `f64::INFINITY` marks a forbidden pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, fill: f64) -> Self {
        CostMatrix { rows, cols, data: vec![fill; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == m), "ragged cost matrix");
        CostMatrix { rows: n, cols: m, data: rows.iter().flatten().copied().collect() }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CostMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> CostMatrix {
        CostMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Sum of `cols[i]` costs in row order.
    pub fn total(&self, cols: &[usize]) -> f64 {
        cols.iter().enumerate().map(|(i, &j)| self.get(i, j)).sum()
    }
}

/// Agent (row) to target (column) matching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    /// `(row, col)` pairs in ascending row order.
    pub pairs: Vec<(usize, usize)>,
    /// Rows left without a column (only when rows outnumber columns).
    pub unassigned_rows: Vec<usize>,
    /// Columns not used by any row.
    pub unassigned_cols: Vec<usize>,
    pub total: f64,
}

impl Assignment {
    fn from_row_cols(costs: &CostMatrix, row_cols: &[Option<usize>]) -> Self {
        let pairs: Vec<(usize, usize)> = row_cols
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.map(|j| (i, j)))
            .collect();
        let unassigned_rows = row_cols
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_none())
            .map(|(i, _)| i)
            .collect();
        let mut used = vec![false; costs.cols()];
        for &(_, j) in &pairs {
            used[j] = true;
        }
        let unassigned_cols = (0..costs.cols()).filter(|&j| !used[j]).collect();
        let total = pairs.iter().map(|&(i, j)| costs.get(i, j)).sum();
        Assignment { pairs, unassigned_rows, unassigned_cols, total }
    }

    pub fn col_of(&self, row: usize) -> Option<usize> {
        self.pairs.iter().find(|&&(i, _)| i == row).map(|&(_, j)| j)
    }
}

/// Minimum-cost assignment of every row to a distinct column (`rows <= cols`),
/// or of every column to a distinct row when `rows > cols`.
///
/// Returns, per row, the chosen column. Fails with `Infeasible` when no
/// complete matching with finite cost exists.
pub fn linear_sum_assignment(costs: &CostMatrix) -> Result<Vec<Option<usize>>, PlanError> {
    if costs.data.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
        return Err(PlanError::Infeasible("cost matrix contains NaN or -inf".into()));
    }
    if costs.rows() <= costs.cols() {
        let cols = solve_wide(costs).ok_or_else(|| {
            PlanError::Infeasible("no finite-cost assignment covers every row".into())
        })?;
        Ok(cols.into_iter().map(Some).collect())
    } else {
        let t = costs.transpose();
        let rows_for_cols = solve_wide(&t).ok_or_else(|| {
            PlanError::Infeasible("no finite-cost assignment covers every column".into())
        })?;
        let mut out = vec![None; costs.rows()];
        for (j, i) in rows_for_cols.into_iter().enumerate() {
            out[i] = Some(j);
        }
        Ok(out)
    }
}

/// Shortest augmenting path solver for `rows <= cols`.
fn solve_wide(c: &CostMatrix) -> Option<Vec<usize>> {
    let (nr, nc) = (c.rows(), c.cols());
    let mut u = vec![0.0; nr];
    let mut v = vec![0.0; nc];
    let mut col4row = vec![usize::MAX; nr];
    let mut row4col = vec![usize::MAX; nc];
    let mut path = vec![usize::MAX; nc];
    let mut shortest = vec![f64::INFINITY; nc];
    let mut sr = vec![false; nr];
    let mut sc = vec![false; nc];
    let mut remaining = vec![0usize; nc];

    for cur_row in 0..nr {
        shortest.iter_mut().for_each(|x| *x = f64::INFINITY);
        sr.iter_mut().for_each(|x| *x = false);
        sc.iter_mut().for_each(|x| *x = false);
        for (it, r) in remaining.iter_mut().enumerate() {
            *r = nc - it - 1;
        }
        let mut num_remaining = nc;
        let mut min_val = 0.0;
        let mut i = cur_row;
        let sink;
        loop {
            sr[i] = true;
            let mut index = usize::MAX;
            let mut lowest = f64::INFINITY;
            for (it, &j) in remaining[..num_remaining].iter().enumerate() {
                let r = min_val + c.get(i, j) - u[i] - v[j];
                if r < shortest[j] {
                    path[j] = i;
                    shortest[j] = r;
                }
                if shortest[j] < lowest || (shortest[j] == lowest && row4col[j] == usize::MAX) {
                    lowest = shortest[j];
                    index = it;
                }
            }
            min_val = lowest;
            if !min_val.is_finite() {
                return None;
            }
            let j = remaining[index];
            sc[j] = true;
            num_remaining -= 1;
            remaining[index] = remaining[num_remaining];
            if row4col[j] == usize::MAX {
                sink = j;
                break;
            }
            i = row4col[j];
        }

        u[cur_row] += min_val;
        for r in 0..nr {
            if sr[r] && r != cur_row {
                u[r] += min_val - shortest[col4row[r]];
            }
        }
        for j in 0..nc {
            if sc[j] {
                v[j] -= min_val - shortest[j];
            }
        }
        let mut j = sink;
        loop {
            let r = path[j];
            row4col[j] = r;
            std::mem::swap(&mut col4row[r], &mut j);
            if r == cur_row {
                break;
            }
        }
    }
    Some(col4row)
}

fn tie_tolerance(total: f64) -> f64 {
    1e-9 * total.abs().max(1.0)
}

/// Optimal assignment; among optimal assignments, the lexicographically
/// smallest row→column vector.
fn lexicographic_optimum(costs: &CostMatrix) -> Result<Vec<Option<usize>>, PlanError> {
    let best = linear_sum_assignment(costs)?;
    let best_total: f64 = best
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.map(|j| costs.get(i, j)))
        .sum();
    let tol = tie_tolerance(best_total);

    if costs.rows() > costs.cols() {
        // Rows compete for too few columns; keep the solver's choice.
        return Ok(best);
    }

    let n = costs.rows();
    let mut fixed: Vec<usize> = Vec::with_capacity(n);
    let mut fixed_cost = 0.0;
    for row in 0..n {
        let mut chosen = None;
        for col in 0..costs.cols() {
            let c = costs.get(row, col);
            if !c.is_finite() || fixed.contains(&col) {
                continue;
            }
            let rest_rows: Vec<usize> = (row + 1..n).collect();
            let rest_cols: Vec<usize> = (0..costs.cols())
                .filter(|j| *j != col && !fixed.contains(j))
                .collect();
            let sub = CostMatrix::from_fn(rest_rows.len(), rest_cols.len(), |i, j| {
                costs.get(rest_rows[i], rest_cols[j])
            });
            let rest = if rest_rows.is_empty() {
                Some(0.0)
            } else {
                linear_sum_assignment(&sub).ok().map(|a| {
                    a.iter()
                        .enumerate()
                        .filter_map(|(i, c)| c.map(|j| sub.get(i, j)))
                        .sum::<f64>()
                })
            };
            if let Some(rest) = rest {
                if fixed_cost + c + rest <= best_total + tol {
                    chosen = Some((col, c));
                    break;
                }
            }
        }
        let (col, c) = chosen.ok_or_else(|| {
            PlanError::Infeasible("tie-breaking lost the optimal assignment".into())
        })?;
        fixed.push(col);
        fixed_cost += c;
    }
    Ok(fixed.into_iter().map(Some).collect())
}

/// Optimal assignment for a square cost matrix.
pub fn hungarian(costs: &CostMatrix) -> Result<Assignment, PlanError> {
    if costs.rows() != costs.cols() {
        return Err(PlanError::InvalidArgument(format!(
            "hungarian needs a square matrix, got {}x{}",
            costs.rows(),
            costs.cols()
        )));
    }
    let cols = lexicographic_optimum(costs)?;
    Ok(Assignment::from_row_cols(costs, &cols))
}

/// Optimal rectangular assignment when targets (columns) outnumber agents
/// (rows): every agent gets a distinct target, surplus targets stay
/// unassigned. Square input delegates to [`hungarian`].
pub fn assign_unequal(costs: &CostMatrix) -> Result<Assignment, PlanError> {
    if costs.cols() == costs.rows() {
        return hungarian(costs);
    }
    if costs.cols() < costs.rows() {
        return Err(PlanError::InvalidArgument(format!(
            "assign_unequal needs more targets than agents, got {} agents and {} targets",
            costs.rows(),
            costs.cols()
        )));
    }
    if let Some(row) = (0..costs.rows()).find(|&i| (0..costs.cols()).all(|j| !costs.get(i, j).is_finite())) {
        return Err(PlanError::Infeasible(format!("agent row {row} has no reachable target")));
    }
    let cols = lexicographic_optimum(costs)?;
    Ok(Assignment::from_row_cols(costs, &cols))
}

/// Optimal assignment for any shape: rows beyond the column count stay unassigned.
pub fn assign_optimal(costs: &CostMatrix) -> Result<Assignment, PlanError> {
    match costs.rows().cmp(&costs.cols()) {
        Ordering::Equal => hungarian(costs),
        Ordering::Less => assign_unequal(costs),
        Ordering::Greater => {
            let cols = lexicographic_optimum(costs)?;
            Ok(Assignment::from_row_cols(costs, &cols))
        }
    }
}

/// Greedy nearest-first baseline: repeatedly takes the globally cheapest
/// remaining (row, col) pair. Not optimal.
pub fn assign_greedy(costs: &CostMatrix) -> Result<Assignment, PlanError> {
    let mut row_cols = vec![None; costs.rows()];
    let mut row_used = vec![false; costs.rows()];
    let mut col_used = vec![false; costs.cols()];
    for _ in 0..costs.rows().min(costs.cols()) {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in (0..costs.rows()).filter(|&i| !row_used[i]) {
            for j in (0..costs.cols()).filter(|&j| !col_used[j]) {
                let c = costs.get(i, j);
                if c.is_finite() && best.is_none_or(|(b, _, _)| c < b) {
                    best = Some((c, i, j));
                }
            }
        }
        let Some((_, i, j)) = best else { break };
        row_used[i] = true;
        col_used[j] = true;
        row_cols[i] = Some(j);
    }
    if row_cols.iter().all(|c| c.is_none()) && costs.rows() > 0 && costs.cols() > 0 {
        return Err(PlanError::Infeasible("no finite-cost pair".into()));
    }
    Ok(Assignment::from_row_cols(costs, &row_cols))
}

/// One solution of the ranked enumeration: column per row and its cost.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedAssignment {
    pub cols: Vec<usize>,
    pub cost: f64,
}

#[derive(Debug)]
struct MurtyNode {
    cost: f64,
    seq: usize,
    cols: Vec<usize>,
    forced: Vec<(usize, usize)>,
    banned: Vec<(usize, usize)>,
}

impl PartialEq for MurtyNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for MurtyNode {}
impl PartialOrd for MurtyNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for MurtyNode {
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then_with(|| other.seq.cmp(&self.seq))
    }
}

fn solve_constrained(
    base: &CostMatrix,
    forced: &[(usize, usize)],
    banned: &[(usize, usize)],
) -> Option<(Vec<usize>, f64)> {
    let mut c = base.clone();
    for &(i, j) in banned {
        c.set(i, j, f64::INFINITY);
    }
    for &(i, j) in forced {
        for jj in 0..c.cols() {
            if jj != j {
                c.set(i, jj, f64::INFINITY);
            }
        }
        for ii in 0..c.rows() {
            if ii != i {
                c.set(ii, j, f64::INFINITY);
            }
        }
    }
    let cols = solve_wide(&c)?;
    let cost = base.total(&cols);
    cost.is_finite().then_some((cols, cost))
}

/// The `k` lowest-cost complete assignments (rows <= cols) in non-decreasing
/// cost order, via Murty's partitioning.
pub fn ranked_assignments(costs: &CostMatrix, k: usize) -> Vec<RankedAssignment> {
    let mut out = Vec::new();
    if k == 0 || costs.rows() > costs.cols() {
        return out;
    }
    if costs.rows() == 0 {
        out.push(RankedAssignment { cols: Vec::new(), cost: 0.0 });
        return out;
    }
    let Some((cols, cost)) = solve_constrained(costs, &[], &[]) else {
        return out;
    };
    let mut seq = 0;
    let mut heap = BinaryHeap::new();
    heap.push(MurtyNode { cost, seq, cols, forced: Vec::new(), banned: Vec::new() });
    while let Some(node) = heap.pop() {
        out.push(RankedAssignment { cols: node.cols.clone(), cost: node.cost });
        if out.len() >= k {
            break;
        }
        // Partition the remaining solution space of this node.
        let mut forced = node.forced.clone();
        let free_rows: Vec<usize> = (0..costs.rows())
            .filter(|r| !node.forced.iter().any(|&(fr, _)| fr == *r))
            .collect();
        for &row in &free_rows {
            let mut banned = node.banned.clone();
            banned.push((row, node.cols[row]));
            if let Some((cols, cost)) = solve_constrained(costs, &forced, &banned) {
                seq += 1;
                heap.push(MurtyNode { cost, seq, cols, forced: forced.clone(), banned });
            }
            forced.push((row, node.cols[row]));
        }
    }
    out
}
