use crate::planning::{linear_sum_assignment, CostMatrix};
use crate::scenario::Point;

/// OSPA distance between two finite point sets with cutoff `c` and order `p`.
/// Empty against empty is 0; empty against non-empty is `c`.
pub fn ospa(x: &[Point], y: &[Point], cutoff: f64, order: f64) -> f64 {
    assert!(cutoff > 0.0 && order >= 1.0, "OSPA needs c > 0 and p >= 1");
    let (small, large) = if x.len() <= y.len() { (x, y) } else { (y, x) };
    let n = large.len();
    if n == 0 {
        return 0.0;
    }
    if small.is_empty() {
        return cutoff;
    }
    let costs = CostMatrix::from_fn(small.len(), n, |i, j| {
        (small[i] - large[j]).norm().min(cutoff).powf(order)
    });
    let cols = linear_sum_assignment(&costs).expect("finite OSPA costs are always feasible");
    let matched: f64 = cols
        .iter()
        .enumerate()
        .map(|(i, c)| costs.get(i, c.expect("every row assigned")))
        .sum();
    let penalty = cutoff.powf(order) * (n - small.len()) as f64;
    ((matched + penalty) / n as f64).powf(1.0 / order)
}
