//! Monte Carlo trials of random sampling patterns against the frame bounds.

use std::collections::BTreeSet;
use std::io::Write;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::error::{invalid, Error, Result};
use crate::generators::GeneratorSet;
use crate::schema::{GeneratorSetDoc, SpectrumDoc};
use crate::spectrum::{RasterSpectrum, Spectrum, TilingDecomposition};
use crate::verify::{
    sample_count_cor2, sample_count_ktile, sample_count_thm1, verify_decomposition, verify_frame,
    FrameReport, GridPolicy, SampleCount, SamplingPattern,
};

/// Significance level of the one-sided binomial test on the failure count.
pub const BINOMIAL_LEVEL: f64 = 0.01;

pub const CSV_HEADER: [&str; 8] = [
    "m",
    "trials",
    "failures",
    "failure_rate",
    "alpha_min",
    "alpha_median",
    "alpha_max",
    "seed",
];

#[derive(Debug, Clone)]
pub enum TrialSource {
    Spectrum(Spectrum),
    Generators(GeneratorSet),
}

#[derive(Debug, Clone)]
pub struct TrialConfig {
    pub source: TrialSource,
    pub alpha: f64,
    pub epsilon: f64,
    /// `None` picks the matching sample-count formula.
    pub m: Option<usize>,
    pub trials: usize,
    pub base_seed: u64,
    /// Used for generator sources only; spectra are always verified exactly.
    pub policy: GridPolicy,
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("trials", "need at least one trial"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid("alpha", format!("must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(invalid("epsilon", format!("must lie in (0, 1), got {}", self.epsilon)));
        }
        if self.m == Some(0) {
            return Err(invalid("m", "need at least one sample point"));
        }
        Ok(())
    }
}

/// `m` as a number or the string `"auto"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SampleSize {
    Fixed(usize),
    Named(String),
}

impl Default for SampleSize {
    fn default() -> Self {
        SampleSize::Named("auto".into())
    }
}

/// JSON form of [`TrialConfig`]; exactly one of `spectrum` and `generators`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialConfigDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<GeneratorSetDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub alpha: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub m: SampleSize,
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<String>,
}

impl TrialConfigDoc {
    pub fn into_config(self) -> Result<TrialConfig> {
        let source = match (self.spectrum, self.generators) {
            (Some(s), None) => TrialSource::Spectrum(s.into_spectrum()?),
            (None, Some(g)) => TrialSource::Generators(g.into_generators()?),
            _ => {
                return Err(Error::Schema(
                    "config needs exactly one of `spectrum` and `generators`".into(),
                ))
            }
        };
        let dim = match &source {
            TrialSource::Spectrum(s) => s.dim(),
            TrialSource::Generators(g) => g.dim(),
        };
        if let Some(d) = self.dim {
            if d != dim {
                return Err(Error::DimensionMismatch { expected: d, found: dim });
            }
        }
        let m = match self.m {
            SampleSize::Fixed(m) => Some(m),
            SampleSize::Named(s) if s == "auto" => None,
            SampleSize::Named(s) => return Err(Error::Schema(format!("m must be an integer or \"auto\", got `{s}`"))),
        };
        let policy = match self.policy {
            Some(p) => p.parse()?,
            None => GridPolicy::PerFingerprint,
        };
        let cfg = TrialConfig {
            source,
            alpha: self.alpha,
            epsilon: self.epsilon,
            m,
            trials: self.trials,
            base_seed: self.base_seed,
            policy,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialStats {
    pub m: usize,
    pub trials: usize,
    pub failures: usize,
    pub failure_rate: f64,
    pub alpha_min: f64,
    pub alpha_median: f64,
    pub alpha_max: f64,
    pub base_seed: u64,
    /// Pattern seed of each trial, `base_seed + t` for `t = 1..=trials`.
    pub seeds: Vec<u64>,
    pub alpha: f64,
    pub epsilon: f64,
    /// Sample count from the matching formula.
    pub formula_m: u64,
    pub formula: &'static str,
    /// Whether `m` reaches the formula's count.
    pub guarantee_applicable: bool,
    /// `P(failures ≥ observed)` when the failure probability equals `ε`.
    pub binomial_p_value: f64,
    /// The test does not reject "failure probability ≤ ε" at the 1% level.
    pub binomial_pass: bool,
    pub k: usize,
    /// Tiling complexity index of the verified spectrum, if any.
    pub complexity: Option<usize>,
}

impl TrialStats {
    pub fn csv_record(&self) -> [String; 8] {
        [
            self.m.to_string(),
            self.trials.to_string(),
            self.failures.to_string(),
            self.failure_rate.to_string(),
            self.alpha_min.to_string(),
            self.alpha_median.to_string(),
            self.alpha_max.to_string(),
            self.base_seed.to_string(),
        ]
    }
}

enum Verifier {
    Decomposition(TilingDecomposition),
    Generators(GeneratorSet, GridPolicy),
}

struct Prepared {
    verifier: Verifier,
    dim: usize,
    k: usize,
    complexity: Option<usize>,
    count: SampleCount,
}

impl Prepared {
    fn check(&self, pattern: &SamplingPattern, alpha: f64) -> Result<FrameReport> {
        match &self.verifier {
            Verifier::Decomposition(dec) => verify_decomposition(dec, pattern, alpha),
            Verifier::Generators(set, policy) => verify_frame(set, pattern, alpha, *policy),
        }
    }
}

/// Completes a raster to a multi-tile at its own level if needed and returns
/// the decomposition used for verification with `N = max(N_Ω, N_{Ω*})`.
fn prepare_raster(raster: &RasterSpectrum, alpha: f64, eps: f64) -> Result<Prepared> {
    let k = raster.k_level();
    if k == 0 {
        return Err(Error::Empty("spectrum has no cells"));
    }
    let n_before = raster.tiling_decomposition().complexity_index();
    let dec = if raster.is_multitile_at(k) {
        raster.tiling_decomposition()
    } else {
        warn!("spectrum is not a multi-tile; completing to level {k}");
        raster.complete_to_multitile(k)?.tiling_decomposition()
    };
    let n = dec.complexity_index().max(n_before);
    let count = sample_count_ktile(k, n, alpha, eps)?;
    Ok(Prepared {
        verifier: Verifier::Decomposition(dec),
        dim: raster.dim(),
        k,
        complexity: Some(n),
        count,
    })
}

fn prepare(cfg: &TrialConfig) -> Result<Prepared> {
    match &cfg.source {
        TrialSource::Spectrum(Spectrum::MultiTile(s)) => Ok(Prepared {
            verifier: Verifier::Decomposition(TilingDecomposition::from_multitile(s)),
            dim: s.dim(),
            k: s.level(),
            complexity: Some(1),
            count: sample_count_cor2(s.level(), cfg.alpha, cfg.epsilon)?,
        }),
        TrialSource::Spectrum(Spectrum::Raster(r)) => prepare_raster(r, cfg.alpha, cfg.epsilon),
        TrialSource::Generators(set) => {
            let inflation = match cfg.policy {
                GridPolicy::Net { inflation } => inflation,
                _ => 1.0,
            };
            let lipschitz = set.constant_k()? * inflation;
            let count = sample_count_thm1(
                set.len(),
                set.constant_c(),
                lipschitz,
                set.dim(),
                cfg.alpha,
                cfg.epsilon,
            )?;
            Ok(Prepared {
                verifier: Verifier::Generators(set.clone(), cfg.policy),
                dim: set.dim(),
                k: set.len(),
                complexity: None,
                count,
            })
        }
    }
}

fn execute(p: &Prepared, cfg: &TrialConfig, m: usize) -> Result<TrialStats> {
    let seeds: Vec<u64> = (1..=cfg.trials as u64).map(|t| cfg.base_seed.wrapping_add(t)).collect();
    let alphas = seeds
        .par_iter()
        .map(|&seed| {
            let x = SamplingPattern::random(p.dim, m, seed)?;
            let rep = p.check(&x, cfg.alpha)?;
            Ok((rep.pass, rep.alpha_achieved))
        })
        .collect::<Result<Vec<_>>>()?;
    let failures = alphas.iter().filter(|(pass, _)| !pass).count();
    let mut sorted: Vec<f64> = alphas.iter().map(|&(_, a)| a).collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let binomial_p_value = binomial_tail(failures, cfg.trials, cfg.epsilon)?;
    Ok(TrialStats {
        m,
        trials: cfg.trials,
        failures,
        failure_rate: failures as f64 / cfg.trials as f64,
        alpha_min: sorted[0],
        alpha_median: median,
        alpha_max: sorted[n - 1],
        base_seed: cfg.base_seed,
        seeds,
        alpha: cfg.alpha,
        epsilon: cfg.epsilon,
        formula_m: p.count.m,
        formula: p.count.formula,
        guarantee_applicable: m as u64 >= p.count.m,
        binomial_p_value,
        binomial_pass: binomial_p_value >= BINOMIAL_LEVEL,
        k: p.k,
        complexity: p.complexity,
    })
}

/// `P(X ≥ failures)` for `X ~ Binomial(trials, eps)`.
pub fn binomial_tail(failures: usize, trials: usize, eps: f64) -> Result<f64> {
    if failures == 0 {
        return Ok(1.0);
    }
    let b = Binomial::new(eps, trials as u64).map_err(|e| invalid("epsilon", e.to_string()))?;
    Ok(b.sf(failures as u64 - 1))
}

/// Draws `trials` patterns with seeds `base_seed + t` and verifies each.
/// Results do not depend on the number of worker threads.
pub fn run_trials(cfg: &TrialConfig) -> Result<TrialStats> {
    cfg.validate()?;
    let p = prepare(cfg)?;
    let m = match cfg.m {
        Some(m) => m,
        None => auto_m(&p)?,
    };
    info!("running {} trials with m = {m}, base seed {}", cfg.trials, cfg.base_seed);
    execute(&p, cfg, m)
}

fn auto_m(p: &Prepared) -> Result<usize> {
    if p.count.m > crate::verify::SIMULABLE_LIMIT {
        return Err(Error::TooLarge {
            what: "automatic sample count",
            count: p.count.m as f64,
            limit: crate::verify::SIMULABLE_LIMIT as usize,
        });
    }
    Ok(p.count.m as usize)
}

/// [`run_trials`] for each distinct `m`, in increasing order.
pub fn sweep_m(cfg: &TrialConfig, m_values: &[usize]) -> Result<Vec<TrialStats>> {
    cfg.validate()?;
    if m_values.is_empty() {
        return Err(Error::Empty("no sample sizes to sweep"));
    }
    let distinct: BTreeSet<usize> = m_values.iter().copied().collect();
    if distinct.len() < m_values.len() {
        warn!("dropping {} repeated sample sizes", m_values.len() - distinct.len());
    }
    if distinct.contains(&0) {
        return Err(invalid("m", "need at least one sample point"));
    }
    let p = prepare(cfg)?;
    distinct.into_iter().map(|m| execute(&p, cfg, m)).collect()
}

/// Trials on a raster spectrum with `m` from the multi-tile count and exact
/// per-class verification. Spectra that are not multi-tiles are completed to
/// their maximal level first.
pub fn ktile_experiment(
    raster: &RasterSpectrum,
    alpha: f64,
    eps: f64,
    trials: usize,
    base_seed: u64,
) -> Result<TrialStats> {
    run_trials(&TrialConfig {
        source: TrialSource::Spectrum(Spectrum::Raster(raster.clone())),
        alpha,
        epsilon: eps,
        m: None,
        trials,
        base_seed,
        policy: GridPolicy::PerFingerprint,
    })
}

pub fn write_csv<W: Write>(rows: &[TrialStats], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(r.csv_record())?;
    }
    w.flush()?;
    Ok(())
}
