mod common;

use std::collections::BTreeSet;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{lp, random_offsets, random_orthonormal_set, random_profile_set, random_raster};
use periodic_sampling::generators::{FrequencyProfile, Generator};
use periodic_sampling::signal::{
    energy_identity_check, synthesize_in_span, synthesize_random, take_samples, zak_of_samples,
};
use periodic_sampling::verify::{
    extreme_eigenvalues, gram_t, multitile_fast_t, verify_frame, zak_matrix, GridPolicy, SamplingPattern,
};
use periodic_sampling::{
    DiscreteSignal, FiberPoint, GeneratorSet, LatticePoint, MultiTileSpectrum, Spectrum,
};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn pattern_strategy(dim: usize, max_m: usize) -> impl Strategy<Value = SamplingPattern> {
    prop::collection::vec(prop::collection::vec(-0.5f64..0.5, dim), 1..=max_m)
        .prop_map(move |pts| SamplingPattern::new(dim, pts).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decomposition_reassembles(seed in any::<u64>(), grid in 1usize..12) {
        let r = random_raster(&mut rng(seed), grid, 3, 0.3);
        let dec = r.tiling_decomposition();
        prop_assert_eq!(dec.reassemble(), r.fingerprint_slice().to_vec());
        let distinct: BTreeSet<_> = r.fingerprint_slice().iter().filter(|f| !f.is_empty()).collect();
        prop_assert_eq!(dec.complexity_index(), distinct.len());
        for class in dec.classes() {
            prop_assert!(!class.cells.is_empty());
        }
    }

    #[test]
    fn completion_reaches_level(seed in any::<u64>(), extra in 0usize..3) {
        let r = random_raster(&mut rng(seed), 8, 2, 0.3);
        let k = r.k_level().max(1) + extra;
        let done = r.complete_to_multitile(k).unwrap();
        prop_assert!(done.is_multitile_at(k));
        for (a, b) in r.fingerprint_slice().iter().zip(done.fingerprint_slice()) {
            prop_assert!(a.is_subset(b));
        }
        let before = r.tiling_decomposition().complexity_index();
        prop_assert!(done.tiling_decomposition().complexity_index() <= before + 1);
        prop_assert_eq!(done.complete_to_multitile(k).unwrap(), done.clone());
        if k > 1 {
            prop_assert!(done.complete_to_multitile(k - 1).is_err());
        }
    }

    #[test]
    fn refinement_keeps_structure(seed in any::<u64>(), factor in 1usize..4) {
        let r = random_raster(&mut rng(seed), 5, 3, 0.2);
        let fine = r.refine(factor).unwrap();
        prop_assert_eq!(fine.tiling_decomposition().complexity_index(), r.tiling_decomposition().complexity_index());
        prop_assert_eq!(fine.k_level(), r.k_level());
        prop_assert_eq!(fine.offsets_union(), r.offsets_union());
    }

    #[test]
    fn zak_phase_identity(seed in any::<u64>(), k in 1usize..4, x in -0.5f64..0.5, cell in 0usize..8) {
        let set = random_profile_set(&mut rng(seed), k, 4);
        let omega = FiberPoint::new(8, vec![cell]);
        for i in 0..k {
            // Σ_ℓ φ̂_i(ω+ℓ) e^{-2πi ℓ x} straight from the shifted fiber
            let direct: Complex64 = set
                .fiber(i, &omega)
                .unwrap()
                .into_iter()
                .map(|(l, v)| v * Complex64::from_polar(1.0, -std::f64::consts::TAU * l.dot(&[x])))
                .sum();
            let z = set.zak_generator(i, &omega, &[x]).unwrap();
            prop_assert!((z - direct).norm() <= 1e-12 * (1.0 + direct.norm()));
        }
    }

    #[test]
    fn constants_ignore_global_phase(seed in any::<u64>(), k in 1usize..3, theta in 0f64..6.3) {
        let set = random_profile_set(&mut rng(seed), k, 4);
        let phase = Complex64::from_polar(1.0, theta);
        let rotated = GeneratorSet::new(
            1,
            set.members()
                .iter()
                .map(|g| match &g.profile {
                    FrequencyProfile::Raster(r) => {
                        Generator::new(g.base_freq.clone(), FrequencyProfile::Raster(r.scaled(phase)))
                    }
                    FrequencyProfile::Indicator => g.clone(),
                })
                .collect(),
        )
        .unwrap();
        let (c0, c1) = (set.constant_c(), rotated.constant_c());
        let (k0, k1) = (set.constant_k().unwrap(), rotated.constant_k().unwrap());
        prop_assert!((c0 - c1).abs() <= 1e-12 * c0);
        prop_assert!((k0 - k1).abs() <= 1e-9 * k0.max(1.0));
    }

    #[test]
    fn gram_t_is_hermitian_psd(seed in any::<u64>(), k in 1usize..4, x in pattern_strategy(1, 8), cell in 0usize..8) {
        let set = random_profile_set(&mut rng(seed), k, 4);
        let omega = FiberPoint::new(8, vec![cell]);
        let t = gram_t(&set, &x, &omega).unwrap();
        let dev = (&t - t.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max);
        let scale = t.iter().map(|v| v.norm()).fold(1.0, f64::max);
        prop_assert!(dev <= 1e-12 * scale);
        let (lo, hi) = extreme_eigenvalues(&t);
        prop_assert!(lo >= -1e-10 * x.len() as f64 * scale);
        let c = set.constant_c();
        prop_assert!(hi <= x.len() as f64 * k as f64 * c * c * (1.0 + 1e-9));
    }

    #[test]
    fn fast_t_matches_generic(seed in any::<u64>(), k in 1usize..5, x in pattern_strategy(1, 8)) {
        let mut r = rng(seed);
        let raster = loop {
            let cand = random_raster(&mut r, 4, 3, 0.0);
            if cand.k_level() <= k {
                break cand;
            }
        };
        let dec = raster.complete_to_multitile(k).unwrap().tiling_decomposition();
        let set = GeneratorSet::from_decomposition(&dec).unwrap();
        for (n, class) in dec.classes().iter().enumerate() {
            let fast = multitile_fast_t(&dec, &x, n).unwrap();
            for &cell in &class.cells {
                let omega = FiberPoint::new(4, vec![cell]);
                let slow = gram_t(&set, &x, &omega).unwrap();
                let dev = (&fast - &slow).iter().map(|v| v.norm()).fold(0.0, f64::max);
                prop_assert!(dev <= 1e-12 * x.len() as f64);
            }
        }
    }

    #[test]
    fn alpha_invariant_under_relabeling(seed in any::<u64>(), k in 1usize..4, x in pattern_strategy(1, 8)) {
        let mut r = rng(seed);
        let offsets = random_offsets(&mut r, 1, k, 3);
        let set = GeneratorSet::from_multitile(&MultiTileSpectrum::new(1, offsets.clone()).unwrap());
        let mut rev = offsets;
        rev.reverse();
        let set_rev = GeneratorSet::from_multitile(&MultiTileSpectrum::new(1, rev).unwrap());
        let mut pts = x.points().to_vec();
        pts.reverse();
        let x_rev = SamplingPattern::new(1, pts).unwrap();
        let a = verify_frame(&set, &x, 0.5, GridPolicy::default()).unwrap().alpha_achieved;
        let b = verify_frame(&set_rev, &x_rev, 0.5, GridPolicy::default()).unwrap().alpha_achieved;
        prop_assert!((a - b).abs() <= 1e-10);
    }

    #[test]
    fn samples_are_linear(seed in any::<u64>(), x in pattern_strategy(1, 4), re in -2f64..2.0, im in -2f64..2.0) {
        let spec = Spectrum::MultiTile(MultiTileSpectrum::new(1, vec![lp(&[0]), lp(&[3])]).unwrap());
        let f = synthesize_random(&spec, 6, seed).unwrap();
        let g = synthesize_random(&spec, 6, seed.wrapping_add(1)).unwrap();
        let a = Complex64::new(re, im);
        let mut combo = DiscreteSignal::zeros(1, 6).unwrap();
        for c in 0..6 {
            for (l, v) in f.cell(c) {
                combo.set(&[c], l.clone(), a * v + g.coefficient(c, l)).unwrap();
            }
        }
        let sf = take_samples(&f, &x).unwrap();
        let sg = take_samples(&g, &x).unwrap();
        let sc = take_samples(&combo, &x).unwrap();
        for ((u, v), w) in sf.values().iter().zip(sg.values()).zip(sc.values()) {
            prop_assert!((a * u + v - w).norm() <= 1e-12 * (1.0 + w.norm()));
        }
    }

    #[test]
    fn discrete_parseval(seed in any::<u64>(), g in 1usize..=8) {
        // offsets in [-2, 2], so an 8-point average in x kills all cross terms
        let spec = Spectrum::MultiTile(MultiTileSpectrum::new(1, vec![lp(&[-2]), lp(&[0]), lp(&[1]), lp(&[2])]).unwrap());
        let f = synthesize_random(&spec, g, seed).unwrap();
        let n = 8;
        let pts: Vec<Vec<f64>> = (0..n).map(|i| vec![-0.5 + (i as f64 + 0.5) / n as f64]).collect();
        let x = SamplingPattern::new(1, pts).unwrap();
        let avg = take_samples(&f, &x).unwrap().energy() / n as f64;
        prop_assert!((avg - f.norm_sqr()).abs() <= 1e-12 * f.norm_sqr().max(1.0));
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn zak_of_samples_matches_zak_matrix(seed in any::<u64>(), k in 1usize..4, x in pattern_strategy(1, 4)) {
        let set = random_orthonormal_set(&mut rng(seed), k, 4);
        let f = synthesize_in_span(&set, 8, seed).unwrap();
        let y = zak_of_samples(&take_samples(&f, &x).unwrap());
        for cell in 0..8 {
            let omega = FiberPoint::new(8, vec![cell]);
            let z = zak_matrix(&set, &x, &omega).unwrap();
            // orthonormal fibers: c_i = <f̂(ω+·), φ̂_i(ω+·)>
            let c: Vec<Complex64> = (0..k)
                .map(|i| set.fiber(i, &omega).unwrap().iter().map(|(l, v)| f.coefficient(cell, l) * v.conj()).sum())
                .collect();
            for r in 0..x.len() {
                let expect: Complex64 = (0..k).map(|i| z[(i, r)] * c[i]).sum();
                prop_assert!((y[r][cell] - expect).norm() <= 1e-10 * (1.0 + expect.norm()));
            }
        }
    }

    #[test]
    fn energy_identity_and_bounds(seed in any::<u64>(), k in 1usize..4, x in pattern_strategy(1, 6)) {
        let set = random_orthonormal_set(&mut rng(seed), k, 2);
        let f = synthesize_in_span(&set, 8, seed).unwrap();
        let e = energy_identity_check(&f, &set, &x).unwrap();
        prop_assert!(e.gap <= 1e-10);
        let rep = verify_frame(&set, &x, 0.9, GridPolicy::PerFingerprint).unwrap();
        let m = x.len() as f64;
        let tol = 1e-12 * e.lhs;
        prop_assert!(e.lhs >= rep.global_min * e.norm_sqr - tol);
        prop_assert!(e.lhs <= rep.global_max * e.norm_sqr + tol);
        if rep.pass {
            prop_assert!(e.lhs >= m * 0.1 * e.norm_sqr - tol);
        }
    }

    #[test]
    fn energy_is_quadratic(seed in any::<u64>(), x in pattern_strategy(1, 4)) {
        let set = random_orthonormal_set(&mut rng(seed), 2, 4);
        let f = synthesize_in_span(&set, 4, seed).unwrap();
        let e1 = energy_identity_check(&f, &set, &x).unwrap();
        let e2 = energy_identity_check(&f.scaled(Complex64::new(2.0, 0.0)), &set, &x).unwrap();
        prop_assert!((e2.lhs - 4.0 * e1.lhs).abs() <= 1e-12 * e2.lhs.max(1.0));
        prop_assert!((e2.rhs - 4.0 * e1.rhs).abs() <= 1e-12 * e2.rhs.max(1.0));
    }
}

#[test]
fn synthesis_variance_is_one() {
    let spec = Spectrum::MultiTile(MultiTileSpectrum::new(1, vec![LatticePoint(vec![0])]).unwrap());
    let trials = 2000;
    let mut total = 0.0;
    for seed in 0..trials {
        let f = synthesize_random(&spec, 4, seed).unwrap();
        assert_eq!(f.support_size(), 4);
        total += (0..4).map(|c| f.coefficient(c, &lp(&[0])).norm_sqr()).sum::<f64>();
    }
    let mean = total / (4 * trials) as f64;
    assert!((mean - 1.0).abs() <= 3.0 / (trials as f64).sqrt(), "mean |f̂|² = {mean}");
}
