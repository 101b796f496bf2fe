#![allow(dead_code)]

use std::ops::Range;

use oscbump::grid::{Cube, DyadicGrid, Lattice, SampledFunction, Weight};
use oscbump::sparse::{build_sparse_stopping, SparseFamily};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn unit(depth: u32) -> Lattice {
    Lattice::with_depth(0.0, 1.0, depth).unwrap()
}

/// Piecewise constant on `2^k` equal pieces, `k` drawn from `levels`, with values drawn from `[lo, hi)`.
pub fn random_steps(rng: &mut ChaCha8Rng, lat: Lattice, levels: Range<u32>, lo: f64, hi: f64) -> SampledFunction {
    let k = rng.gen_range(levels);
    let pieces = 1usize << k.min(lat.depth());
    let vals: Vec<f64> = (0..pieces).map(|_| rng.gen_range(lo..hi)).collect();
    let width = lat.n / pieces;
    SampledFunction::new(lat, (0..lat.n).map(|i| vals[i / width]).collect()).unwrap()
}

/// Random steps plus a random smooth component.
pub fn random_symbol(rng: &mut ChaCha8Rng, lat: Lattice) -> SampledFunction {
    let steps = random_steps(rng, lat, 1..6, -1.0, 1.0);
    let (a, w) = (rng.gen_range(-2.0..2.0), rng.gen_range(1.0..12.0));
    steps.zip_with(&SampledFunction::from_fn(lat, |x| a * (w * x).sin()), |s, t| s + t).unwrap()
}

pub fn random_weight(rng: &mut ChaCha8Rng, lat: Lattice) -> Weight {
    Weight::new(random_steps(rng, lat, 0..6, 0.05, 5.0)).unwrap()
}

pub fn random_cube(rng: &mut ChaCha8Rng, grid: &DyadicGrid) -> Cube {
    let k = rng.gen_range(grid.k_min..=grid.k_max);
    let level = grid.level(k);
    level[rng.gen_range(0..level.len())]
}

/// Stopping-time family of a random positive function; rarely trivial.
pub fn random_family(rng: &mut ChaCha8Rng, grid: &DyadicGrid) -> SparseFamily {
    let lat = grid.lattice;
    let k = lat.depth().min(7);
    let spikes = random_steps(rng, lat, k..k + 1, 0.0, 1.0).map(|x| (8.0 * x).exp());
    build_sparse_stopping(&spikes, grid, rng.gen_range(1.5..4.0)).unwrap()
}

/// Expands `vals` (length a power of two not exceeding `n`) into a step function.
pub fn steps_from(lat: Lattice, vals: &[f64]) -> SampledFunction {
    let width = lat.n / vals.len();
    SampledFunction::new(lat, (0..lat.n).map(|i| vals[i / width]).collect()).unwrap()
}
