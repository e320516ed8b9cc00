use alloc::vec;
use alloc::vec::Vec;

use super::HeuristicError;
use crate::model::Instance;

pub(super) fn check_demands(instance: &Instance, capacity: f64, demands: &[f64]) -> Result<(), HeuristicError> {
    let n = instance.n_nodes();
    if demands.len() != n {
        return Err(HeuristicError::DemandLength { expected: n, found: demands.len() });
    }
    if let Some(v) = (1..n).find(|&v| demands[v] > capacity) {
        return Err(HeuristicError::DemandExceedsCapacity(v));
    }
    Ok(())
}

/// Clarke-Wright savings on all customers, ignoring probabilities.
///
/// Starts from one out-and-back route per customer and merges route ends in
/// order of decreasing saving `d_0i + d_0j - d_ij` (ties by `(i, j)`), as
/// long as the merged load fits. Returns depot-to-depot tours.
pub fn clarke_wright(instance: &Instance, capacity: f64, demands: &[f64]) -> Result<Vec<Vec<usize>>, HeuristicError> {
    check_demands(instance, capacity, demands)?;
    let n = instance.n_nodes();
    let mut savings: Vec<(f64, usize, usize)> = Vec::new();
    for i in 1..n {
        for j in (i + 1)..n {
            let s = instance.distance(0, i) + instance.distance(0, j) - instance.distance(i, j);
            if s > 0.0 {
                savings.push((s, i, j));
            }
        }
    }
    savings.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut routes: Vec<Option<Vec<usize>>> = (0..n).map(|v| if v == 0 { None } else { Some(vec![v]) }).collect();
    let mut load: Vec<f64> = demands.to_vec();
    let mut owner: Vec<usize> = (0..n).collect();
    for (_, i, j) in savings {
        let (ri, rj) = (owner[i], owner[j]);
        if ri == rj || load[ri] + load[rj] > capacity {
            continue;
        }
        let a = routes[ri].as_ref().expect("live route");
        let b = routes[rj].as_ref().expect("live route");
        let i_end = a[0] == i || a[a.len() - 1] == i;
        let j_end = b[0] == j || b[b.len() - 1] == j;
        if !i_end || !j_end {
            continue;
        }
        let mut a = routes[ri].take().expect("live route");
        let mut b = routes[rj].take().expect("live route");
        if a[a.len() - 1] != i {
            a.reverse();
        }
        if b[0] != j {
            b.reverse();
        }
        for &v in &b {
            owner[v] = ri;
        }
        a.extend(b);
        routes[ri] = Some(a);
        load[ri] += load[rj];
    }
    Ok(routes
        .into_iter()
        .flatten()
        .map(|r| {
            let mut t = Vec::with_capacity(r.len() + 2);
            t.push(0);
            t.extend(r);
            t.push(0);
            t
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Cluster, Point};

    fn line(xs: &[(f64, f64)]) -> Instance {
        let pts = xs.iter().map(|&(x, y)| Point::new(x, y)).collect();
        let c = (1..xs.len()).map(|i| Cluster { id: i, probability: 1.0, members: vec![i] }).collect();
        Instance::euclid(pts, c, 1).unwrap()
    }

    #[test]
    fn collinear_customers_merge() {
        let inst = line(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]);
        let routes = clarke_wright(&inst, 10.0, &[0.0, 1.0, 1.0]).unwrap();
        assert_eq!(routes, vec![vec![0, 1, 2, 0]]);
    }

    #[test]
    fn opposite_customers_stay_apart() {
        let inst = line(&[(0.0, 0.0), (1.0, 0.0), (-1.0, 0.0)]);
        let routes = clarke_wright(&inst, 10.0, &[0.0, 1.0, 1.0]).unwrap();
        assert_eq!(routes, vec![vec![0, 1, 0], vec![0, 2, 0]]);
    }

    #[test]
    fn capacity_blocks_merges() {
        let inst = line(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0)]);
        let routes = clarke_wright(&inst, 2.0, &[0.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(routes.len(), 2);
        assert!(routes.iter().all(|r| r.len() <= 4));
    }
}
