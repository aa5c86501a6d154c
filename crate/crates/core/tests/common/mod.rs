#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use relayout::model::Dataset;

/// Isotropic Gaussian blobs with centers uniform in the unit cube.
pub fn blobs(n: usize, d: usize, components: usize, spread: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, spread).unwrap();
    let centers: Vec<f64> = (0..components * d).map(|_| rng.random()).collect();
    let mut coords = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let c = rng.random_range(0..components);
        coords.extend((0..d).map(|j| centers[c * d + j] + noise.sample(&mut rng)));
        labels.push(c);
    }
    Dataset::from_flat(d, coords).unwrap().with_labels(labels).unwrap()
}

pub fn uniform(n: usize, d: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Dataset::from_flat(d, (0..n * d).map(|_| rng.random()).collect()).unwrap()
}

pub fn recall(got: &[usize], want: &[usize]) -> f64 {
    let hits = got.iter().filter(|id| want.contains(id)).count();
    hits as f64 / want.len() as f64
}
