use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::HeuristicError;
use crate::model::{AprioriSolution, Instance};

/// A possible insertion of `node` into tour `tour_index` before `position`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InsertionCandidate {
    pub node: usize,
    pub tour_index: usize,
    pub position: usize,
    pub value: f64,
}

impl InsertionCandidate {
    /// Order by value, then node, tour and slot.
    fn cmp_key(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then(self.node.cmp(&other.node))
            .then(self.tour_index.cmp(&other.tour_index))
            .then(self.position.cmp(&other.position))
    }

    fn tie_key(&self, other: &Self) -> Ordering {
        self.node.cmp(&other.node).then(self.tour_index.cmp(&other.tour_index)).then(self.position.cmp(&other.position))
    }
}

fn validate(tour: &[usize], slot: usize, node: usize, instance: &Instance) -> Result<(), HeuristicError> {
    let n = instance.n_nodes();
    if tour.len() < 2 || tour[0] != 0 || tour[tour.len() - 1] != 0 {
        return Err(crate::eval::EvalError::OpenTour.into());
    }
    if let Some(&v) = tour.iter().find(|&&v| v >= n) {
        return Err(HeuristicError::NodeOutOfRange(v));
    }
    if node == 0 || node >= n {
        return Err(HeuristicError::NodeOutOfRange(node));
    }
    if slot == 0 || slot >= tour.len() {
        return Err(HeuristicError::InvalidSlot { slot, len: tour.len() });
    }
    let c = instance.cluster_index(node);
    if tour.iter().any(|&v| v == node || (v != 0 && instance.cluster_index(v) == c)) {
        return Err(HeuristicError::AlreadyRouted(node));
    }
    Ok(())
}

/// Expected growth of a tour's expected length when `node` is inserted
/// between positions `slot - 1` and `slot`.
///
/// Sums over every predecessor `r` before the slot and successor `z` after
/// it, weighted by the chance that `r` and `z` are the nearest present nodes
/// around the new one. The closing depot is the last successor.
pub fn expected_insertion_value(tour: &[usize], slot: usize, node: usize, instance: &Instance) -> Result<f64, HeuristicError> {
    validate(tour, slot, node, instance)?;
    let p = |pos: usize| instance.node_probability(tour[pos]);
    let mut total = 0.0;
    for r in 0..slot {
        let mut w = p(r);
        for t in (r + 1)..slot {
            w *= 1.0 - p(t);
        }
        if w == 0.0 {
            continue;
        }
        let mut inner = 0.0;
        for z in slot..tour.len() {
            let mut v = p(z);
            for q in slot..z {
                v *= 1.0 - p(q);
            }
            let (a, b) = (tour[r], tour[z]);
            inner += v * (instance.distance(a, node) + instance.distance(node, b) - instance.distance(a, b));
        }
        total += w * inner;
    }
    Ok(instance.node_probability(node) * total)
}

#[derive(Debug, Clone)]
struct SlotTerms {
    before: Vec<(usize, f64)>,
    after: Vec<(usize, f64)>,
    spanned: f64,
}

/// Precomputed per-slot weights of one tour, giving insertion values in
/// time linear in the tour length.
#[derive(Debug, Clone)]
pub struct SlotTable {
    slots: Vec<SlotTerms>,
}

impl SlotTable {
    pub fn new(tour: &[usize], instance: &Instance) -> Self {
        let h = tour.len();
        let p: Vec<f64> = tour.iter().map(|&v| instance.node_probability(v)).collect();
        let mut slots = Vec::with_capacity(h.saturating_sub(1));
        for slot in 1..h {
            let mut before = Vec::new();
            let mut w = 1.0;
            for r in (0..slot).rev() {
                let weight = p[r] * w;
                if weight != 0.0 {
                    before.push((tour[r], weight));
                }
                w *= 1.0 - p[r];
                if w == 0.0 {
                    break;
                }
            }
            let mut after = Vec::new();
            let mut v = 1.0;
            for z in slot..h {
                let weight = p[z] * v;
                if weight != 0.0 {
                    after.push((tour[z], weight));
                }
                v *= 1.0 - p[z];
                if v == 0.0 {
                    break;
                }
            }
            let mut spanned = 0.0;
            for &(a, wa) in &before {
                for &(b, wb) in &after {
                    spanned += wa * wb * instance.distance(a, b);
                }
            }
            slots.push(SlotTerms { before, after, spanned });
        }
        SlotTable { slots }
    }

    /// Number of insertion slots.
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Insertion value of `node` at `slot` (1-based, as in
    /// [`expected_insertion_value`]).
    pub fn value(&self, slot: usize, node: usize, instance: &Instance) -> f64 {
        let s = &self.slots[slot - 1];
        let into: f64 = s.before.iter().map(|&(a, w)| w * instance.distance(a, node)).sum();
        let out: f64 = s.after.iter().map(|&(b, w)| w * instance.distance(node, b)).sum();
        instance.node_probability(node) * (into + out - s.spanned)
    }
}

/// Default clusters-per-tour capacity: `ceil(m / K)`.
pub fn default_capacity(instance: &Instance) -> usize {
    instance.num_clusters().div_ceil(instance.vehicles()).max(1)
}

fn check_capacity(instance: &Instance, capacity: usize) -> Result<(), HeuristicError> {
    if capacity == 0 {
        return Err(HeuristicError::ZeroCapacity);
    }
    let m = instance.num_clusters();
    if instance.vehicles().saturating_mul(capacity) < m {
        return Err(HeuristicError::InsufficientCapacity { capacity, vehicles: instance.vehicles(), clusters: m });
    }
    Ok(())
}

fn best_for_cluster(
    instance: &Instance,
    cluster: usize,
    table: &SlotTable,
    tour_index: usize,
) -> Option<InsertionCandidate> {
    let mut best: Option<InsertionCandidate> = None;
    for &node in &instance.clusters()[cluster].members {
        for slot in 1..=table.len() {
            let c = InsertionCandidate { node, tour_index, position: slot, value: table.value(slot, node, instance) };
            if best.is_none_or(|b| c.cmp_key(&b) == Ordering::Less) {
                best = Some(c);
            }
        }
    }
    best
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Rule {
    MinMin,
    MaxMin,
}

fn sequential(instance: &Instance, capacity: usize, rule: Rule) -> Result<AprioriSolution, HeuristicError> {
    check_capacity(instance, capacity)?;
    let m = instance.num_clusters();
    let mut covered = vec![false; m];
    let mut tours: Vec<Vec<usize>> = Vec::new();
    let mut current = vec![0, 0];
    let mut load = 0;
    for _ in 0..m {
        if load == capacity {
            tours.push(core::mem::replace(&mut current, vec![0, 0]));
            load = 0;
        }
        let table = SlotTable::new(&current, instance);
        let tour_index = tours.len();
        let mut chosen: Option<InsertionCandidate> = None;
        for k in (0..m).filter(|&k| !covered[k]) {
            let Some(c) = best_for_cluster(instance, k, &table, tour_index) else { continue };
            let better = match (&chosen, rule) {
                (None, _) => true,
                (Some(b), Rule::MinMin) => c.cmp_key(b) == Ordering::Less,
                (Some(b), Rule::MaxMin) => {
                    c.value > b.value || (c.value == b.value && c.tie_key(b) == Ordering::Less)
                }
            };
            if better {
                chosen = Some(c);
            }
        }
        let c = chosen.expect("an uncovered cluster remains");
        current.insert(c.position, c.node);
        covered[instance.cluster_index(c.node).expect("customer")] = true;
        load += 1;
    }
    if current.len() > 2 {
        tours.push(current);
    }
    while tours.len() < instance.vehicles() {
        tours.push(vec![0, 0]);
    }
    Ok(AprioriSolution::new(tours))
}

/// Min-min insertion: fills one vehicle at a time with the globally
/// cheapest insertion, opening the next vehicle at `capacity` clusters.
pub fn min_min_insertion(instance: &Instance, capacity: usize) -> Result<AprioriSolution, HeuristicError> {
    sequential(instance, capacity, Rule::MinMin)
}

/// Max-min insertion: each step inserts the cluster whose cheapest
/// insertion is most expensive, at that cheapest position.
pub fn max_min_insertion(instance: &Instance, capacity: usize) -> Result<AprioriSolution, HeuristicError> {
    sequential(instance, capacity, Rule::MaxMin)
}

/// Seeds every vehicle with one cluster, then repeatedly makes the cheapest
/// insertion across all tours, without a capacity limit.
pub fn unbounded_insertion(instance: &Instance) -> Result<AprioriSolution, HeuristicError> {
    let m = instance.num_clusters();
    let k = instance.vehicles();
    let mut covered = vec![false; m];
    let mut tours: Vec<Vec<usize>> = vec![vec![0, 0]; k];
    let seeded = k.min(m);
    let empty = SlotTable::new(&[0, 0], instance);
    for (t, tour) in tours.iter_mut().enumerate().take(seeded) {
        let mut chosen: Option<InsertionCandidate> = None;
        for c in (0..m).filter(|&c| !covered[c]).filter_map(|c| best_for_cluster(instance, c, &empty, t)) {
            if chosen.is_none_or(|b| c.cmp_key(&b) == Ordering::Less) {
                chosen = Some(c);
            }
        }
        let c = chosen.expect("an uncovered cluster remains");
        tour.insert(1, c.node);
        covered[instance.cluster_index(c.node).expect("customer")] = true;
    }
    let mut tables: Vec<SlotTable> = tours.iter().map(|t| SlotTable::new(t, instance)).collect();
    for _ in seeded..m {
        let mut chosen: Option<InsertionCandidate> = None;
        for (t, table) in tables.iter().enumerate().take(seeded) {
            for c in (0..m).filter(|&c| !covered[c]).filter_map(|c| best_for_cluster(instance, c, table, t)) {
                if chosen.is_none_or(|b| c.cmp_key(&b) == Ordering::Less) {
                    chosen = Some(c);
                }
            }
        }
        let c = chosen.expect("an uncovered cluster remains");
        tours[c.tour_index].insert(c.position, c.node);
        tables[c.tour_index] = SlotTable::new(&tours[c.tour_index], instance);
        covered[instance.cluster_index(c.node).expect("customer")] = true;
    }
    Ok(AprioriSolution::new(tours))
}
