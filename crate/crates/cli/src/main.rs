use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::warn;
use serde::Serialize;
use serde_json::json;

use periodic_sampling::experiments::{self, TrialConfig, TrialConfigDoc, TrialStats};
use periodic_sampling::schema::{self, SampleSetDoc, SignalDoc, SpectrumDoc};
use periodic_sampling::signal::{self, DiscreteSignal};
use periodic_sampling::spectrum::{rho_and_cover, BoundaryGeometry};
use periodic_sampling::verify::{self, FrameReport, GridPolicy, SamplingPattern};
use periodic_sampling::{Error, GeneratorSet, Result, Spectrum, TilingDecomposition};

#[derive(Parser)]
#[command(name = "psample", version, about = "Random periodic sampling toolkit")]
struct Cli {
    /// Cap on worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for every random draw; experiments use it as base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// More log output on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect or complete a spectrum.
    #[command(subcommand)]
    Spectrum(SpectrumCmd),
    /// Evaluate a sample-count formula.
    #[command(subcommand)]
    Bounds(BoundsCmd),
    /// Check the frame inequalities of a sampling pattern fiber by fiber.
    Verify(VerifyArgs),
    /// Synthesize a random signal and sample it.
    Simulate(SimulateArgs),
    /// Recover a signal from its samples and report the error.
    Reconstruct(ReconstructArgs),
    /// Monte Carlo trials over random patterns.
    #[command(subcommand)]
    Experiment(ExperimentCmd),
}

#[derive(Subcommand)]
enum SpectrumCmd {
    /// Print complexity index, level and offset union.
    Analyze {
        file: PathBuf,
        /// Refine the raster to this many cells per axis first.
        #[arg(long)]
        grid: Option<usize>,
        /// Lebesgue measure of the spectrum, for the ρ-cover.
        #[arg(long, requires_all = ["surface", "kappa"])]
        volume: Option<f64>,
        /// Boundary measure of the spectrum.
        #[arg(long, requires_all = ["volume", "kappa"])]
        surface: Option<f64>,
        /// Ahlfors regularity constant of the boundary.
        #[arg(long, requires_all = ["volume", "surface"])]
        kappa: Option<f64>,
    },
    /// Enlarge a spectrum to a multi-tile of the given level.
    Complete {
        file: PathBuf,
        #[arg(long)]
        level: usize,
        #[arg(long)]
        grid: Option<usize>,
        /// Write the completed spectrum here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum BoundsCmd {
    /// General generator sets with constants C and K.
    Thm1 {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// Zak Lipschitz constant K.
        #[arg(long = "lipschitz", default_value_t = 0.0)]
        lipschitz: f64,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        eps: f64,
    },
    /// Unions of unit cubes.
    Cor2 {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        eps: f64,
    },
    /// Level-k multi-tiles with complexity index N.
    Ktile {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        eps: f64,
    },
    /// Compact spectra with Ahlfors-regular boundary.
    General {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        volume: f64,
        #[arg(long)]
        surface: f64,
        #[arg(long)]
        kappa: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        eps: f64,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SourceArgs {
    /// Generator set document.
    #[arg(long)]
    generators: Option<PathBuf>,
    /// Spectrum document; indicator generators are derived from it.
    #[arg(long)]
    spectrum: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct PatternArgs {
    /// Sampling pattern document.
    #[arg(long)]
    pattern: Option<PathBuf>,
    /// Draw this many uniform points instead of reading a pattern.
    #[arg(long)]
    m: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    pattern: PatternArgs,
    #[arg(long)]
    alpha: f64,
    /// per-fingerprint, net, net:<factor> or grid:<G>.
    #[arg(long, default_value = "per-fingerprint")]
    policy: GridPolicy,
    /// Skip the orthonormality precondition.
    #[arg(long)]
    waive_orthonormality: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    spectrum: PathBuf,
    #[command(flatten)]
    pattern: PatternArgs,
    /// Frequency grid size per axis.
    #[arg(long)]
    grid: usize,
    #[arg(long)]
    signal_out: Option<PathBuf>,
    #[arg(long)]
    samples_out: Option<PathBuf>,
}

#[derive(Args)]
struct ReconstructArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Pattern for synthesized signals; ignored with --samples.
    #[arg(long)]
    pattern: Option<PathBuf>,
    /// Number of random points when no pattern is given.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    grid: Option<usize>,
    /// Reconstruct these samples instead of synthesizing a signal.
    #[arg(long)]
    samples: Option<PathBuf>,
    /// Reference signal for the error when reading samples.
    #[arg(long, requires = "samples")]
    reference: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ExperimentCmd {
    /// One batch of trials; prints the statistics as JSON.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Also write the CSV row here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Trials for several sample sizes; prints CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated sample sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        m: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Outcome {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Spectrum(cmd) => spectrum(cmd),
        Command::Bounds(cmd) => bounds(cmd),
        Command::Verify(args) => verify_cmd(cli, args),
        Command::Simulate(args) => simulate(cli, args),
        Command::Reconstruct(args) => reconstruct(cli, args),
        Command::Experiment(cmd) => experiment(cli, cmd),
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn effective_seed(cli: &Cli) -> u64 {
    let seed = cli.seed.unwrap_or(0);
    eprintln!("seed: {seed}");
    seed
}

fn spectrum(cmd: &SpectrumCmd) -> Result<Outcome> {
    match cmd {
        SpectrumCmd::Analyze {
            file,
            grid,
            volume,
            surface,
            kappa,
        } => {
            let s = schema::load_spectrum(file)?;
            let raster = s.to_raster(*grid)?;
            let dec = raster.tiling_decomposition();
            let k = raster.k_level();
            let mut out = json!({
                "dim": raster.dim(),
                "grid": raster.grid().size,
                "complexity_index": dec.complexity_index(),
                "k_level": k,
                "is_multitile": k > 0 && raster.is_multitile_at(k),
                "offsets_union": raster.offsets_union(),
                "max_offset": raster.max_offset(),
                "classes": dec.classes().iter().map(|c| json!({
                    "cells": c.cells.len(),
                    "offsets": c.offsets,
                })).collect::<Vec<_>>(),
            });
            if let (Some(v), Some(sf), Some(kp)) = (volume, surface, kappa) {
                let geom = BoundaryGeometry::new(raster.dim(), *v, *sf, *kp)?;
                let cover = rho_and_cover(&geom, &raster)?;
                out["rho"] = json!(cover.rho);
                out["cover_cubes"] = json!(cover.cubes);
                out["cover_bound"] = json!(cover.cube_bound);
                out["cover_within_bound"] = json!(cover.within_bound);
            }
            print_json(&out)?;
        }
        SpectrumCmd::Complete {
            file,
            level,
            grid,
            out,
        } => {
            let s = schema::load_spectrum(file)?;
            let raster = s.to_raster(*grid)?;
            let before = raster.tiling_decomposition().complexity_index();
            let done = raster.complete_to_multitile(*level)?;
            let after = done.tiling_decomposition().complexity_index();
            eprintln!("complexity index {before} -> {after}");
            let doc = SpectrumDoc::from_raster(&done);
            match out {
                Some(path) => schema::write_json(path, &doc)?,
                None => print_json(&doc)?,
            }
        }
    }
    Ok(Outcome::Pass)
}

fn bounds(cmd: &BoundsCmd) -> Result<Outcome> {
    let out = match *cmd {
        BoundsCmd::Thm1 {
            k,
            c,
            lipschitz,
            dim,
            alpha,
            eps,
        } => {
            let s = verify::sample_count_thm1(k, c, lipschitz, dim, alpha, eps)?;
            json!({"m": s.m, "formula": s.formula, "raw": s.raw, "clamped": s.clamped,
                "inputs": {"k": k, "C": c, "K": lipschitz, "dim": dim, "alpha": alpha, "eps": eps}})
        }
        BoundsCmd::Cor2 { k, alpha, eps } => {
            let s = verify::sample_count_cor2(k, alpha, eps)?;
            json!({"m": s.m, "formula": s.formula, "raw": s.raw, "clamped": s.clamped,
                "inputs": {"k": k, "alpha": alpha, "eps": eps}})
        }
        BoundsCmd::Ktile { k, n, alpha, eps } => {
            let s = verify::sample_count_ktile(k, n, alpha, eps)?;
            json!({"m": s.m, "formula": s.formula, "raw": s.raw, "clamped": s.clamped,
                "inputs": {"k": k, "N": n, "alpha": alpha, "eps": eps}})
        }
        BoundsCmd::General {
            dim,
            volume,
            surface,
            kappa,
            alpha,
            eps,
        } => {
            let geom = BoundaryGeometry::new(dim, volume, surface, kappa)?;
            let s = verify::sample_count_general(&geom, alpha, eps)?;
            json!({"m": s.m, "formula": "general", "raw": s.m_real, "rho": s.rho,
                "tiles_ratio": s.tiles_ratio, "simulable": s.simulable, "clamped": s.clamped,
                "inputs": {"dim": dim, "volume": volume, "surface": surface, "kappa": kappa,
                    "alpha": alpha, "eps": eps}})
        }
    };
    print_json(&out)?;
    Ok(Outcome::Pass)
}

/// Generators for a source, plus the multi-tile decomposition when the source
/// is a spectrum. Rasters that are not multi-tiles are completed to their
/// maximal level.
fn load_source(source: &SourceArgs, grid: Option<usize>) -> Result<(GeneratorSet, Option<TilingDecomposition>)> {
    if let Some(path) = &source.generators {
        return Ok((schema::load_generators(path)?, None));
    }
    let path = source.spectrum.as_ref().expect("clap enforces one source");
    let spectrum = schema::load_spectrum(path)?;
    let dec = match (&spectrum, grid) {
        (Spectrum::MultiTile(m), None) => TilingDecomposition::from_multitile(m),
        _ => {
            let raster = spectrum.to_raster(grid)?;
            let k = raster.k_level();
            if k == 0 {
                return Err(Error::Empty("spectrum has no cells"));
            }
            if raster.is_multitile_at(k) {
                raster.tiling_decomposition()
            } else {
                warn!("spectrum is not a multi-tile; completing to level {k}");
                raster.complete_to_multitile(k)?.tiling_decomposition()
            }
        }
    };
    let set = match &spectrum {
        Spectrum::MultiTile(m) if grid.is_none() => GeneratorSet::from_multitile(m),
        _ => GeneratorSet::from_decomposition(&dec)?,
    };
    Ok((set, Some(dec)))
}

fn load_pattern(path: Option<&Path>, m: Option<usize>, dim: usize, seed: impl FnOnce() -> u64) -> Result<SamplingPattern> {
    match (path, m) {
        (Some(p), _) => {
            let x = schema::load_pattern(p)?;
            if x.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: x.dim(),
                });
            }
            Ok(x)
        }
        (None, Some(m)) => SamplingPattern::random(dim, m, seed()),
        (None, None) => Err(Error::Schema("need --pattern or --m".into())),
    }
}

fn verify_cmd(cli: &Cli, args: &VerifyArgs) -> Result<Outcome> {
    let (set, dec) = load_source(&args.source, None)?;
    let x = load_pattern(args.pattern.pattern.as_deref(), args.pattern.m, set.dim(), || effective_seed(cli))?;
    let report: FrameReport = match (&dec, args.policy) {
        (Some(dec), GridPolicy::PerFingerprint) => verify::verify_decomposition(dec, &x, args.alpha)?,
        _ if args.waive_orthonormality => verify::verify_frame_unchecked(&set, &x, args.alpha, args.policy)?,
        _ => verify::verify_frame(&set, &x, args.alpha, args.policy)?,
    };
    print_json(&report)?;
    eprintln!(
        "{}: alpha achieved {:.6} (target {}), {} fibers",
        if report.pass { "PASS" } else { "FAIL" },
        report.alpha_achieved,
        args.alpha,
        report.fiber_count()
    );
    Ok(if report.pass { Outcome::Pass } else { Outcome::Fail })
}

fn simulate(cli: &Cli, args: &SimulateArgs) -> Result<Outcome> {
    let spectrum = schema::load_spectrum(&args.spectrum)?;
    let seed = effective_seed(cli);
    let x = load_pattern(args.pattern.pattern.as_deref(), args.pattern.m, spectrum.dim(), || {
        seed.wrapping_add(1)
    })?;
    let f = signal::synthesize_random(&spectrum, args.grid, seed)?;
    let s = signal::take_samples(&f, &x)?;
    let norm = f.norm_sqr();
    let energy = s.energy();
    if let Some(p) = &args.signal_out {
        schema::write_json(p, &SignalDoc::from_signal(&f))?;
    }
    if let Some(p) = &args.samples_out {
        schema::write_json(p, &SampleSetDoc::from_samples(&s))?;
    }
    print_json(&json!({
        "grid": args.grid,
        "m": x.len(),
        "seed": seed,
        "support_size": f.support_size(),
        "norm_sqr": norm,
        "sample_energy": energy,
        "energy_ratio": if norm > 0.0 { energy / (x.len() as f64 * norm) } else { 0.0 },
    }))?;
    Ok(Outcome::Pass)
}

fn reconstruct(cli: &Cli, args: &ReconstructArgs) -> Result<Outcome> {
    let (samples, reference, set) = if let Some(path) = &args.samples {
        let samples = schema::load_samples(path)?;
        let (set, _) = load_source(&args.source, Some(samples.grid().size))?;
        let reference = args.reference.as_ref().map(schema::load_signal).transpose()?;
        (samples, reference, set)
    } else {
        let grid = args
            .grid
            .ok_or_else(|| Error::Schema("need --grid when synthesizing a signal".into()))?;
        let (set, _) = load_source(&args.source, Some(grid))?;
        let seed = effective_seed(cli);
        let x = load_pattern(args.pattern.as_deref(), args.m, set.dim(), || seed.wrapping_add(1))?;
        let f: DiscreteSignal = match &args.source.spectrum {
            Some(p) => signal::synthesize_random(&schema::load_spectrum(p)?, grid, seed)?,
            None => signal::synthesize_in_span(&set, grid, seed)?,
        };
        (signal::take_samples(&f, &x)?, Some(f), set)
    };
    let back = signal::reconstruct(&samples, &set)?;
    if let Some(p) = &args.out {
        schema::write_json(p, &SignalDoc::from_signal(&back))?;
    }
    let error = reference.as_ref().map(|f| back.relative_error(f)).transpose()?;
    print_json(&json!({
        "grid": samples.grid().size,
        "m": samples.pattern().len(),
        "k": set.len(),
        "relative_error": error,
    }))?;
    Ok(Outcome::Pass)
}

fn load_config(cli: &Cli, path: &Path) -> Result<TrialConfig> {
    let doc: TrialConfigDoc = schema::read_json(path)?;
    let mut cfg = doc.into_config()?;
    if let Some(seed) = cli.seed {
        cfg.base_seed = seed;
    }
    eprintln!("seed: {}", cfg.base_seed);
    Ok(cfg)
}

fn stats_pass(s: &TrialStats) -> bool {
    !s.guarantee_applicable || s.binomial_pass
}

fn write_rows(rows: &[TrialStats], out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => experiments::write_csv(rows, File::create(p)?),
        None => experiments::write_csv(rows, io::stdout().lock()),
    }
}

fn experiment(cli: &Cli, cmd: &ExperimentCmd) -> Result<Outcome> {
    let rows = match cmd {
        ExperimentCmd::Run { config, out } => {
            let cfg = load_config(cli, config)?;
            let stats = experiments::run_trials(&cfg)?;
            if let Some(p) = out {
                write_rows(std::slice::from_ref(&stats), Some(p))?;
            }
            print_json(&stats)?;
            vec![stats]
        }
        ExperimentCmd::Sweep { config, m, out } => {
            let cfg = load_config(cli, config)?;
            let rows = experiments::sweep_m(&cfg, m)?;
            write_rows(&rows, out.as_deref())?;
            rows
        }
    };
    for r in &rows {
        eprintln!(
            "m={}: {}/{} failures, formula m={} ({}), binomial p={:.4}",
            r.m, r.failures, r.trials, r.formula_m, r.formula, r.binomial_p_value
        );
    }
    Ok(if rows.iter().all(stats_pass) {
        Outcome::Pass
    } else {
        Outcome::Fail
    })
}
