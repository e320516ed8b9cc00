use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::savings::check_demands;
use super::HeuristicError;
use crate::model::Instance;

/// Groups up to this size are routed by exact dynamic programming.
const EXACT_GROUP: usize = 10;

/// Sweep heuristic: customers sorted by polar angle around the depot are
/// cut greedily into vehicle loads, each load routed as a small TSP. Every
/// rotation of the angular order is tried in both directions and the
/// shortest total is kept.
pub fn sweep(instance: &Instance, capacity: f64, demands: &[f64]) -> Result<Vec<Vec<usize>>, HeuristicError> {
    let coords = instance.coordinates().ok_or(HeuristicError::MissingCoordinates)?;
    check_demands(instance, capacity, demands)?;
    let depot = coords[0];
    let mut order: Vec<(f64, usize)> = (1..instance.n_nodes())
        .map(|v| (libm::atan2(coords[v].y - depot.y, coords[v].x - depot.x), v))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let forward: Vec<usize> = order.iter().map(|&(_, v)| v).collect();
    let backward: Vec<usize> = forward.iter().rev().copied().collect();
    let mut cache: BTreeMap<Vec<usize>, (f64, Vec<usize>)> = BTreeMap::new();
    let mut best: Option<(f64, Vec<Vec<usize>>)> = None;
    let count = forward.len().max(1);
    for seq in [&forward, &backward] {
        for offset in 0..count {
            let rotated: Vec<usize> = seq.iter().cycle().skip(offset).take(seq.len()).copied().collect();
            let mut groups: Vec<Vec<usize>> = Vec::new();
            let mut current: Vec<usize> = Vec::new();
            let mut load = 0.0;
            for v in rotated {
                if !current.is_empty() && load + demands[v] > capacity {
                    groups.push(core::mem::take(&mut current));
                    load = 0.0;
                }
                current.push(v);
                load += demands[v];
            }
            if !current.is_empty() {
                groups.push(current);
            }
            let mut total = 0.0;
            let mut tours = Vec::with_capacity(groups.len());
            for g in groups {
                let mut key = g.clone();
                key.sort_unstable();
                let (len, tour) = cache.entry(key).or_insert_with_key(|k| route_group(instance, k)).clone();
                total += len;
                tours.push(tour);
            }
            if best.as_ref().is_none_or(|(b, _)| total < *b) {
                best = Some((total, tours));
            }
        }
    }
    Ok(best.map(|(_, t)| t).unwrap_or_default())
}

fn route_group(instance: &Instance, nodes: &[usize]) -> (f64, Vec<usize>) {
    if nodes.len() <= EXACT_GROUP {
        held_karp(instance, nodes)
    } else {
        cheapest_insertion(instance, nodes)
    }
}

fn tour_length(instance: &Instance, tour: &[usize]) -> f64 {
    tour.windows(2).map(|w| instance.distance(w[0], w[1])).sum()
}

fn held_karp(instance: &Instance, nodes: &[usize]) -> (f64, Vec<usize>) {
    let k = nodes.len();
    if k == 0 {
        return (0.0, vec![0, 0]);
    }
    let full = 1usize << k;
    let mut cost = vec![f64::INFINITY; full * k];
    let mut parent = vec![usize::MAX; full * k];
    for i in 0..k {
        cost[(1 << i) * k + i] = instance.distance(0, nodes[i]);
    }
    for mask in 1..full {
        for last in 0..k {
            let c = cost[mask * k + last];
            if mask >> last & 1 == 0 || !c.is_finite() {
                continue;
            }
            for next in 0..k {
                if mask >> next & 1 == 1 {
                    continue;
                }
                let nm = mask | 1 << next;
                let v = c + instance.distance(nodes[last], nodes[next]);
                if v < cost[nm * k + next] {
                    cost[nm * k + next] = v;
                    parent[nm * k + next] = last;
                }
            }
        }
    }
    let all = full - 1;
    let mut best = (f64::INFINITY, 0);
    for last in 0..k {
        let v = cost[all * k + last] + instance.distance(nodes[last], 0);
        if v < best.0 {
            best = (v, last);
        }
    }
    let mut seq = Vec::with_capacity(k + 2);
    let (mut mask, mut last) = (all, best.1);
    while last != usize::MAX {
        seq.push(nodes[last]);
        let p = parent[mask * k + last];
        mask &= !(1 << last);
        last = p;
    }
    seq.push(0);
    seq.reverse();
    seq.push(0);
    let len = tour_length(instance, &seq);
    (len, seq)
}

fn cheapest_insertion(instance: &Instance, nodes: &[usize]) -> (f64, Vec<usize>) {
    let mut tour = vec![0, 0];
    let mut left: Vec<usize> = nodes.to_vec();
    while !left.is_empty() {
        let mut best = (f64::INFINITY, 0, 0);
        for (li, &v) in left.iter().enumerate() {
            for s in 1..tour.len() {
                let (a, b) = (tour[s - 1], tour[s]);
                let c = instance.distance(a, v) + instance.distance(v, b) - instance.distance(a, b);
                if c < best.0 {
                    best = (c, li, s);
                }
            }
        }
        let v = left.remove(best.1);
        tour.insert(best.2, v);
    }
    (tour_length(instance, &tour), tour)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Cluster, Point};

    fn inst(pts: &[(f64, f64)]) -> Instance {
        let coords = pts.iter().map(|&(x, y)| Point::new(x, y)).collect();
        let c = (1..pts.len()).map(|i| Cluster { id: i, probability: 1.0, members: vec![i] }).collect();
        Instance::euclid(coords, c, 1).unwrap()
    }

    #[test]
    fn one_group_is_exact_tsp() {
        let i = inst(&[(0.0, 0.0), (2.0, 0.0), (0.0, 2.0), (2.0, 2.0)]);
        let tours = sweep(&i, 3.0, &[0.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(tours.len(), 1);
        assert!((tour_length(&i, &tours[0]) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn unit_capacity_gives_star() {
        let i = inst(&[(0.0, 0.0), (2.0, 0.0), (0.0, 2.0), (-1.0, -1.0)]);
        let tours = sweep(&i, 1.0, &[0.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(tours.len(), 3);
        assert!(tours.iter().all(|t| t.len() == 3));
    }

    #[test]
    fn symmetric_square_pairs_adjacent_angles() {
        let i = inst(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)]);
        let tours = sweep(&i, 2.0, &[0.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
        let total: f64 = tours.iter().map(|t| tour_length(&i, t)).sum();
        // Each adjacent pair costs 2 + sqrt(2); opposite pairs cost 4.
        let adjacent = 2.0 * (2.0 + 2f64.sqrt());
        let opposite = 2.0 * 4.0;
        assert!((total - adjacent).abs() < 1e-12);
        assert!(total < opposite);
    }

    #[test]
    fn missing_coordinates_error() {
        let d = vec![0.0, 1.0, 1.0, 0.0];
        let c = vec![Cluster { id: 1, probability: 1.0, members: vec![1] }];
        let i = Instance::explicit(2, d, c, 1).unwrap();
        assert_eq!(sweep(&i, 1.0, &[0.0, 1.0]), Err(HeuristicError::MissingCoordinates));
    }
}
