//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with a
//! nonzero status if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{lp, random_offsets, random_orthonormal_set, random_profile_set, random_raster};
use periodic_sampling::experiments::{ktile_experiment, run_trials, sweep_m, TrialConfig, TrialSource};
use periodic_sampling::signal::{energy_identity_check, reconstruct, synthesize_in_span, take_samples};
use periodic_sampling::verify::{
    bernstein_tail, extreme_eigenvalues, gram_t, multitile_fast_t, sample_count_cor2, sample_count_general,
    sample_count_ktile, sample_count_thm1, verify_frame, GridPolicy, SamplingPattern,
};
use periodic_sampling::{
    BoundaryGeometry, FiberPoint, GeneratorSet, LatticePoint, MultiTileSpectrum, RasterSpectrum, Spectrum,
    TilingDecomposition,
};

// Reference values evaluated with 50-digit arithmetic.
const COR2_K4_RAW: f64 = 701.124_261_547_821_1;
const THM1_K1_RAW: f64 = 92.103_403_719_761_83;
const KTILE_K2_N2_RAW: f64 = 350.562_130_773_910_5;
const DISC_RHO: f64 = 3.288_325_270_493_705_3e-4;
const DISC_TILES_RATIO: f64 = 29_053_625.400_081_26;
const DISC_M: u64 = 48516145350;

const ALPHA: f64 = 0.5;
const EPS: f64 = 0.1;

type Outcome = (bool, String);
type Criterion = Box<dyn FnOnce() -> Vec<Outcome>>;

fn multitile(dim: usize, offsets: Vec<LatticePoint>) -> MultiTileSpectrum {
    MultiTileSpectrum::new(dim, offsets).unwrap()
}

fn formula_exactness() -> Outcome {
    let cor2 = sample_count_cor2(4, ALPHA, EPS).unwrap();
    let thm1_k0 = sample_count_thm1(4, 1.0, 0.0, 1, ALPHA, EPS).unwrap();
    let thm1 = sample_count_thm1(1, 1.0, 1.0, 1, ALPHA, 1.0).unwrap();
    let ktile = sample_count_ktile(2, 2, ALPHA, EPS).unwrap();
    let disc = BoundaryGeometry::new(2, std::f64::consts::PI, 2.0 * std::f64::consts::PI, 2.0).unwrap();
    let general = sample_count_general(&disc, ALPHA, EPS).unwrap();
    let rho_err = (disc.rho() - DISC_RHO).abs() / DISC_RHO;
    let checks = [
        cor2.m == 702 && (cor2.raw - COR2_K4_RAW).abs() < 1e-9,
        thm1_k0.m == 702,
        thm1.m == 93 && (thm1.raw - THM1_K1_RAW).abs() < 1e-10,
        ktile.m == 351 && (ktile.raw - KTILE_K2_N2_RAW).abs() < 1e-10,
        rho_err <= 1e-12,
        (general.tiles_ratio - DISC_TILES_RATIO).abs() / DISC_TILES_RATIO <= 1e-12,
        general.m == DISC_M && !general.simulable,
    ];
    (
        checks.iter().all(|&c| c),
        format!(
            "cor2={} thm1(K=0)={} thm1(K=1)={} ktile={} rho rel.err={rho_err:.1e} general m={}",
            cor2.m, thm1_k0.m, thm1.m, ktile.m, general.m
        ),
    )
}

fn tight_frames() -> Outcome {
    let mut worst = 0.0f64;
    for dim in 1..=2 {
        let set = GeneratorSet::from_multitile(&multitile(dim, vec![LatticePoint(vec![1; dim])]));
        for (m, seed) in [(1, 1), (3, 2), (10, 3), (57, 4)] {
            let x = SamplingPattern::random(dim, m, seed).unwrap();
            let rep = verify_frame(&set, &x, 0.01, GridPolicy::default()).unwrap();
            worst = worst.max(rep.alpha_achieved.abs());
        }
    }
    let set = GeneratorSet::from_multitile(&multitile(1, vec![lp(&[0]), lp(&[1])]));
    let x = SamplingPattern::new(1, vec![vec![-0.25], vec![0.25]]).unwrap();
    let rep = verify_frame(&set, &x, 0.01, GridPolicy::default()).unwrap();
    worst = worst.max(rep.alpha_achieved.abs());
    (worst <= 1e-12 && rep.pass, format!("max |alpha_achieved| = {worst:.1e}"))
}

fn trial_config(spectrum: Spectrum, m: Option<usize>, trials: usize, base_seed: u64) -> TrialConfig {
    TrialConfig {
        source: TrialSource::Spectrum(spectrum),
        alpha: ALPHA,
        epsilon: EPS,
        m,
        trials,
        base_seed,
        policy: GridPolicy::PerFingerprint,
    }
}

fn corollary_guarantee() -> Outcome {
    let cases = [
        (1, vec![lp(&[0]), lp(&[1])]),
        (1, vec![lp(&[-1]), lp(&[0]), lp(&[2]), lp(&[5])]),
        (2, vec![lp(&[0, 0]), lp(&[1, 0])]),
        (2, vec![lp(&[0, 0]), lp(&[1, 0]), lp(&[0, 1]), lp(&[1, 1])]),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, (dim, offsets)) in cases.into_iter().enumerate() {
        let k = offsets.len();
        let cfg = trial_config(Spectrum::MultiTile(multitile(dim, offsets)), None, 200, 100 * i as u64);
        let s = run_trials(&cfg).unwrap();
        ok &= s.failure_rate <= EPS && s.binomial_pass && s.guarantee_applicable;
        parts.push(format!("k={k} d={dim} m={} fail={}/{}", s.m, s.failures, s.trials));
    }
    (ok, parts.join("; "))
}

fn two_piece() -> RasterSpectrum {
    RasterSpectrum::from_cells(
        1,
        2,
        vec![(vec![0], vec![lp(&[0]), lp(&[2])]), (vec![1], vec![lp(&[0])])],
    )
    .unwrap()
}

fn multitile_guarantee() -> Outcome {
    let s = ktile_experiment(&two_piece(), ALPHA, EPS, 200, 31).unwrap();
    (
        s.m == 351 && s.k == 2 && s.complexity == Some(2) && s.failure_rate <= EPS && s.binomial_pass,
        format!(
            "k={} N={:?} m={} fail={}/{} (binomial p={:.3})",
            s.k, s.complexity, s.m, s.failures, s.trials, s.binomial_p_value
        ),
    )
}

fn concentration_trend() -> Outcome {
    let spectrum = Spectrum::MultiTile(multitile(1, vec![lp(&[0]), lp(&[1]), lp(&[2]), lp(&[3])]));
    let rows = sweep_m(&trial_config(spectrum, None, 100, 2026), &[40, 160]).unwrap();
    let ratio = rows[1].alpha_median / rows[0].alpha_median;
    (
        ratio <= 2.0 / 3.0,
        format!(
            "median alpha m=40: {:.4}, m=160: {:.4}, ratio {ratio:.3} (base seed 2026)",
            rows[0].alpha_median, rows[1].alpha_median
        ),
    )
}

fn expectation_identity() -> Outcome {
    let dec = TilingDecomposition::from_multitile(&multitile(1, vec![lp(&[0]), lp(&[1])]));
    let draws = 10_000u64;
    let mut sum = num_complex::Complex64::default();
    for seed in 0..draws {
        let x = SamplingPattern::random(1, 1, seed).unwrap();
        sum += multitile_fast_t(&dec, &x, 0).unwrap()[(0, 1)];
    }
    let mean = (sum / draws as f64).norm();
    (mean <= 0.05, format!("|mean T_01| = {mean:.4} over {draws} draws"))
}

fn norm_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for t in 0..1000 {
        let k = rng.random_range(1..=3);
        let set = if t % 4 == 0 {
            let offsets = random_offsets(&mut rng, 1, k, 4);
            GeneratorSet::from_multitile(&multitile(1, offsets))
        } else {
            random_profile_set(&mut rng, k, 4)
        };
        let m = rng.random_range(1..=8);
        let x = SamplingPattern::random(1, m, rng.random()).unwrap();
        let omega = FiberPoint::new(8, vec![rng.random_range(0..8)]);
        let (_, hi) = extreme_eigenvalues(&gram_t(&set, &x, &omega).unwrap());
        let c = set.constant_c();
        worst = worst.max(hi / (m as f64 * k as f64 * c * c));
    }
    (worst <= 1.0 + 1e-9, format!("max lambda_max / (m k C^2) = {worst:.4}"))
}

/// Orthonormal generator set for instance `seed`: random raster profiles or
/// indicators of a random multi-tile decomposition.
fn instance_set(rng: &mut ChaCha8Rng, k: usize, seed: u64) -> GeneratorSet {
    if seed.is_multiple_of(2) {
        random_orthonormal_set(rng, k, 4)
    } else {
        let mut r = random_raster(rng, 4, 3, 0.25);
        while r.k_level() > k {
            r = random_raster(rng, 4, 3, 0.25);
        }
        let dec = r.complete_to_multitile(k).unwrap().tiling_decomposition();
        GeneratorSet::from_decomposition(&dec).unwrap()
    }
}

fn oracle_and_transfer() -> (Outcome, Outcome) {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_gap = 0.0f64;
    let mut checked = 0;
    let mut transfer_ok = true;
    for seed in 0..100u64 {
        let k = rng.random_range(1..=3);
        let m = rng.random_range(1..=5);
        let set = instance_set(&mut rng, k, seed);
        let f = synthesize_in_span(&set, 8, seed).unwrap();
        let x = SamplingPattern::random(1, m, rng.random()).unwrap();
        let e = energy_identity_check(&f, &set, &x).unwrap();
        worst_gap = worst_gap.max(e.gap);
        for alpha in [0.5, 0.9] {
            let rep = verify_frame(&set, &x, alpha, GridPolicy::PerFingerprint).unwrap();
            if rep.pass {
                checked += 1;
                let mf = m as f64;
                let tol = 1e-12 * e.lhs;
                transfer_ok &= e.lhs >= mf * (1.0 - alpha) * e.norm_sqr - tol;
                transfer_ok &= e.lhs <= mf * (1.0 + alpha) * e.norm_sqr + tol;
            }
        }
    }
    (
        (worst_gap <= 1e-10, format!("max gap {worst_gap:.1e} over 100 instances")),
        (
            transfer_ok && checked > 0,
            format!("{checked} passing (instance, alpha) pairs, all within [m(1-a), m(1+a)] ||f||^2"),
        ),
    )
}

fn round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    let mut passed = 0;
    let mut attempts = 0;
    while passed < 100 && attempts < 1000 {
        attempts += 1;
        let seed = attempts as u64;
        let k = rng.random_range(1..=4);
        let grid = [4, 8, 16][rng.random_range(0..3)];
        let set = instance_set(&mut rng, k, seed);
        let m = sample_count_cor2(k, ALPHA, EPS).unwrap().m as usize;
        let x = SamplingPattern::random(1, m, rng.random()).unwrap();
        if !verify_frame(&set, &x, ALPHA, GridPolicy::PerFingerprint).unwrap().pass {
            continue;
        }
        passed += 1;
        let f = synthesize_in_span(&set, grid, seed).unwrap();
        let back = reconstruct(&take_samples(&f, &x).unwrap(), &set).unwrap();
        worst = worst.max(back.relative_error(&f).unwrap());
    }
    (
        passed == 100 && worst <= 1e-9,
        format!("{passed} verified instances ({attempts} drawn), max relative error {worst:.1e}"),
    )
}

fn tiling_decomposition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut ok = true;
    let mut max_growth = 0i64;
    for _ in 0..200 {
        let r = random_raster(&mut rng, 16, 3, 0.2);
        let dec = r.tiling_decomposition();
        ok &= dec.reassemble() == r.fingerprint_slice();
        let distinct: BTreeSet<_> = r.fingerprint_slice().iter().filter(|fp| !fp.is_empty()).collect();
        ok &= dec.complexity_index() == distinct.len();
        let k0 = r.k_level().max(1);
        for k in [k0, k0 + 1] {
            let done = r.complete_to_multitile(k).unwrap();
            ok &= done.is_multitile_at(k);
            ok &= r
                .fingerprint_slice()
                .iter()
                .zip(done.fingerprint_slice())
                .all(|(a, b)| a.is_subset(b));
            let growth = done.tiling_decomposition().complexity_index() as i64 - dec.complexity_index() as i64;
            max_growth = max_growth.max(growth);
        }
    }
    ok &= max_growth <= 1;
    (ok, format!("200 rasters, max complexity growth under completion {max_growth}"))
}

fn bernstein_dominance() -> Outcome {
    let mut count = 0;
    let mut worst = 0.0f64;
    for k in 1..=8 {
        for c in [1.0, 2.0] {
            for alpha in [0.1, 0.5, 0.9] {
                for step in 0..=24 {
                    let m = 10f64.powf(1.0 + 3.0 * step as f64 / 24.0).round() as usize;
                    let b = bernstein_tail(k, m, c, alpha).unwrap();
                    worst = worst.max(b.raw / b.simplified);
                    count += 1;
                }
            }
        }
    }
    (worst <= 1.0 + 1e-12, format!("{count} parameter points, max raw/simplified = {worst:.4}"))
}

fn main() -> ExitCode {
    let mut results: Vec<(&str, Criterion)> = vec![
        ("formula exactness", Box::new(|| vec![formula_exactness()])),
        ("tight-frame exactness", Box::new(|| vec![tight_frames()])),
        ("probabilistic guarantee, unions of cubes", Box::new(|| vec![corollary_guarantee()])),
        ("probabilistic guarantee, multi-tile", Box::new(|| vec![multitile_guarantee()])),
        ("concentration trend", Box::new(|| vec![concentration_trend()])),
        ("expectation identity", Box::new(|| vec![expectation_identity()])),
        ("norm bound", Box::new(|| vec![norm_bound()])),
        (
            "oracle equivalence / sampling-inequality transfer",
            Box::new(|| {
                let (a, b) = oracle_and_transfer();
                vec![a, b]
            }),
        ),
        ("reconstruction round trip", Box::new(|| vec![round_trip()])),
        ("tiling decomposition", Box::new(|| vec![tiling_decomposition()])),
        ("Bernstein dominance", Box::new(|| vec![bernstein_dominance()])),
    ];
    let names_8_9 = ["oracle equivalence", "sampling-inequality transfer"];
    let mut index = 0;
    let mut failed = 0;
    for (name, run) in results.drain(..) {
        let start = Instant::now();
        let outcomes = run();
        let elapsed = start.elapsed().as_secs_f64();
        for (j, (pass, detail)) in outcomes.into_iter().enumerate() {
            index += 1;
            let label = if name.contains('/') { names_8_9[j] } else { name };
            if !pass {
                failed += 1;
            }
            println!(
                "{} {index:>2} {label}: {detail} [{elapsed:.2}s]",
                if pass { "PASS" } else { "FAIL" }
            );
        }
    }
    println!("acceptance: {} of {index} criteria passed", index - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
