#![allow(dead_code)]

use pgvrp_core::model::{AprioriSolution, Cluster, Instance, Point};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random Euclidean instance with `customers` nodes split into `m` clusters.
pub fn random_instance(seed: u64, customers: usize, m: usize, k: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = vec![Point::new(50.0, 50.0)];
    for _ in 0..customers {
        pts.push(Point::new(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)));
    }
    let mut ids: Vec<usize> = (1..=customers).collect();
    ids.shuffle(&mut rng);
    let mut clusters = Vec::new();
    let mut start = 0;
    for c in 0..m {
        let size = customers / m + usize::from(c < customers % m);
        clusters.push(Cluster {
            id: c + 1,
            probability: rng.random_range(0.1..0.9),
            members: ids[start..start + size].to_vec(),
        });
        start += size;
    }
    Instance::euclid(pts, clusters, k).unwrap()
}

/// Random feasible solution: one random member per cluster, random order,
/// random split into at most K tours.
pub fn random_solution(seed: u64, instance: &Instance) -> AprioriSolution {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut reps: Vec<usize> = instance
        .clusters()
        .iter()
        .map(|c| c.members[rng.random_range(0..c.members.len())])
        .collect();
    reps.shuffle(&mut rng);
    let k = instance.vehicles();
    let mut routes: Vec<Vec<usize>> = vec![Vec::new(); k];
    for v in reps {
        let t = rng.random_range(0..k);
        routes[t].push(v);
    }
    let routes: Vec<Vec<usize>> = routes.into_iter().filter(|r| !r.is_empty()).collect();
    AprioriSolution::from_routes(&routes, k)
}
