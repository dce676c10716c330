#![allow(dead_code)]

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use periodic_sampling::generators::{FrequencyProfile, Generator};
use periodic_sampling::{GeneratorSet, LatticePoint, RasterProfile, RasterSpectrum};

pub fn lp(v: &[i64]) -> LatticePoint {
    LatticePoint(v.to_vec())
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

/// Random d=1 raster with offsets drawn from `[-reach, reach]`; each cell is
/// empty with probability `p_empty`.
pub fn random_raster(rng: &mut ChaCha8Rng, grid: usize, reach: i64, p_empty: f64) -> RasterSpectrum {
    let width = (2 * reach + 1) as usize;
    let cells = (0..grid).map(|c| {
        let offsets: Vec<LatticePoint> = if rng.random::<f64>() < p_empty {
            Vec::new()
        } else {
            let n = rng.random_range(1..=3.min(width));
            sample(rng, width, n).into_iter().map(|i| lp(&[i as i64 - reach])).collect()
        };
        (vec![c], offsets)
    });
    RasterSpectrum::from_cells(1, grid, cells.collect::<Vec<_>>()).unwrap()
}

/// `k` distinct offsets in `[-reach, reach]^dim`.
pub fn random_offsets(rng: &mut ChaCha8Rng, dim: usize, k: usize, reach: i64) -> Vec<LatticePoint> {
    let mut set = BTreeSet::new();
    while set.len() < k {
        set.insert(LatticePoint((0..dim).map(|_| rng.random_range(-reach..=reach)).collect()));
    }
    let mut v: Vec<LatticePoint> = set.into_iter().collect();
    // shuffle deterministically so order does not follow the sort
    for i in (1..v.len()).rev() {
        let j = rng.random_range(0..=i);
        v.swap(i, j);
    }
    v
}

/// `k` generators in dimension 1 whose raster profiles are orthonormal in
/// every cell: per cell, `k` orthonormal columns over `k + 1` random offsets.
/// All members share one base frequency, which keeps the fibers orthonormal.
pub fn random_orthonormal_set(rng: &mut ChaCha8Rng, k: usize, profile_grid: usize) -> GeneratorSet {
    let base = lp(&[rng.random_range(-2..=2)]);
    let mut profiles = vec![RasterProfile::zeros(1, profile_grid).unwrap(); k];
    for cell in 0..profile_grid {
        let offsets = random_offsets(rng, 1, k + 1, 2);
        let a = DMatrix::from_fn(k + 1, k, |_, _| gaussian(rng));
        let q = a.qr().q();
        for (i, p) in profiles.iter_mut().enumerate() {
            for (r, l) in offsets.iter().enumerate() {
                p.add(&[cell], l.clone(), q[(r, i)]).unwrap();
            }
        }
    }
    let members = profiles
        .into_iter()
        .map(|p| Generator::new(base.clone(), FrequencyProfile::Raster(p)))
        .collect();
    GeneratorSet::new(1, members).unwrap()
}

/// Raster profiles with arbitrary complex values and distinct base frequencies.
pub fn random_profile_set(rng: &mut ChaCha8Rng, k: usize, profile_grid: usize) -> GeneratorSet {
    let bases = random_offsets(rng, 1, k, 3);
    let members = bases
        .into_iter()
        .map(|b| {
            let mut p = RasterProfile::zeros(1, profile_grid).unwrap();
            for cell in 0..profile_grid {
                let n = rng.random_range(1..=3);
                for l in random_offsets(rng, 1, n, 2) {
                    p.add(&[cell], l, gaussian(rng)).unwrap();
                }
            }
            Generator::new(b, FrequencyProfile::Raster(p))
        })
        .collect();
    GeneratorSet::new(1, members).unwrap()
}
