//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use pcsp_core::structures::{RelStructure, Relation, Tuple};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Instance over `n` variables with `m` constraints, each the preimage of a
/// uniformly chosen tuple of `rel` under a hidden assignment. Returns the
/// instance and the planted assignment.
pub fn planted(rel: &Relation, n: usize, m: usize, rng: &mut impl Rng) -> (RelStructure, Vec<u32>) {
    let tuples: Vec<&Tuple> = rel.iter().collect();
    let mut sigma: Vec<u32> = (0..n).map(|_| rng.gen_range(0..2)).collect();
    // both values must occur
    sigma[0] = 0;
    sigma[1] = 1;
    sigma.shuffle(rng);
    let by_value: [Vec<u32>; 2] = [0, 1].map(|b| (0..n as u32).filter(|&v| sigma[v as usize] == b).collect());
    let scopes: Vec<Tuple> = (0..m)
        .map(|_| {
            let a = tuples[rng.gen_range(0..tuples.len())];
            a.iter().map(|&b| *by_value[b as usize].choose(rng).unwrap()).collect()
        })
        .collect();
    let x = RelStructure::new(n, vec![Relation::new(rel.arity(), scopes).unwrap()]).unwrap();
    (x, sigma)
}

/// Instance with `m` uniformly random scopes (repeats allowed).
pub fn random_instance(k: usize, n: usize, m: usize, rng: &mut impl Rng) -> RelStructure {
    let scopes: Vec<Tuple> = (0..m).map(|_| (0..k).map(|_| rng.gen_range(0..n as u32)).collect()).collect();
    RelStructure::new(n, vec![Relation::new(k, scopes).unwrap()]).unwrap()
}
