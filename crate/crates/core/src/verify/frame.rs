use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::generators::GeneratorSet;
use crate::lattice::{FiberPoint, Grid};
use crate::spectrum::TilingDecomposition;

use super::zak::{extreme_eigenvalues, gram_t, multitile_fast_t};
use super::SamplingPattern;

/// Factor applied to the grid estimate of `K` by the net policy.
pub const DEFAULT_K_INFLATION: f64 = 2.0;

/// Largest number of fibers a single verification will evaluate.
pub const MAX_FIBERS: usize = 1 << 22;

/// Tolerance of the orthonormality precondition in [`verify_frame`].
pub const ORTHONORMALITY_TOL: f64 = 1e-9;

/// Which frequencies `ω` a verification evaluates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridPolicy {
    /// δ-net derived from `(k, C, inflation·K, α)`.
    Net { inflation: f64 },
    /// Cell centers of a grid with this many points per axis.
    Grid(usize),
    /// One fiber per distinct configuration of raster values; exact relative
    /// to the raster.
    PerFingerprint,
}

impl Default for GridPolicy {
    fn default() -> Self {
        GridPolicy::Net {
            inflation: DEFAULT_K_INFLATION,
        }
    }
}

impl FromStr for GridPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-fingerprint" => Ok(GridPolicy::PerFingerprint),
            "net" => Ok(GridPolicy::default()),
            _ => {
                if let Some(g) = s.strip_prefix("grid:") {
                    let g: usize = g
                        .parse()
                        .map_err(|_| invalid("policy", format!("bad grid size in `{s}`")))?;
                    if g == 0 {
                        return Err(invalid("policy", "grid size must be positive"));
                    }
                    Ok(GridPolicy::Grid(g))
                } else if let Some(f) = s.strip_prefix("net:") {
                    let inflation: f64 = f
                        .parse()
                        .map_err(|_| invalid("policy", format!("bad inflation in `{s}`")))?;
                    if !(inflation.is_finite() && inflation >= 1.0) {
                        return Err(invalid("policy", "K inflation must be at least 1"));
                    }
                    Ok(GridPolicy::Net { inflation })
                } else {
                    Err(invalid(
                        "policy",
                        format!("expected per-fingerprint, net[:factor] or grid:G, got `{s}`"),
                    ))
                }
            }
        }
    }
}

impl fmt::Display for GridPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridPolicy::Net { inflation } => write!(f, "net:{inflation}"),
            GridPolicy::Grid(g) => write!(f, "grid:{g}"),
            GridPolicy::PerFingerprint => write!(f, "per-fingerprint"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NetResolution {
    /// Net radius δ; infinite when `K = 0`.
    pub delta: f64,
    /// `⌈1/(2δ)⌉` points per axis.
    pub per_axis: usize,
    /// `per_axis^d` (saturating).
    pub count: usize,
    /// `(2kCK/α + 1)^d`.
    pub cardinality_bound: f64,
}

/// Net resolution for uniform-in-ω verification.
///
/// With `K = 0`, `T(ω)` does not depend on `ω` and one point suffices.
/// Otherwise `δ = min(1/2, α/(4kCK))` and the net has `⌈1/(2δ)⌉^d` points.
pub fn net_resolution(k: usize, c: f64, lipschitz: f64, alpha: f64, dim: usize) -> Result<NetResolution> {
    check_alpha(alpha)?;
    if k == 0 {
        return Err(invalid("k", "need at least one generator"));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(invalid("C", format!("must be positive, got {c}")));
    }
    if !(lipschitz.is_finite() && lipschitz >= 0.0) {
        return Err(invalid("K", format!("must be nonnegative, got {lipschitz}")));
    }
    if dim == 0 {
        return Err(invalid("dim", "ambient dimension must be at least 1"));
    }
    if lipschitz == 0.0 {
        return Ok(NetResolution {
            delta: f64::INFINITY,
            per_axis: 1,
            count: 1,
            cardinality_bound: 1.0,
        });
    }
    let kck = k as f64 * c * lipschitz;
    let delta = (alpha / (4.0 * kck)).min(0.5);
    let per_axis = (1.0 / (2.0 * delta)).ceil() as usize;
    let count = per_axis.checked_pow(dim as u32).unwrap_or(usize::MAX);
    Ok(NetResolution {
        delta,
        per_axis,
        count,
        cardinality_bound: (2.0 * kck / alpha + 1.0).powi(dim as i32),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberEigenvalues {
    pub grid: usize,
    pub cell: Vec<usize>,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameReport {
    pub per_fiber: Vec<FiberEigenvalues>,
    pub global_min: f64,
    pub global_max: f64,
    pub m: usize,
    pub k: usize,
    pub alpha_target: f64,
    /// `max(1 - λ_min/m, λ_max/m - 1)`.
    pub alpha_achieved: f64,
    pub pass: bool,
    /// Set when `m < k`, in which case every `λ_min` is zero.
    pub rank_deficient: bool,
    pub grid_spec: String,
}

impl FrameReport {
    fn from_fibers(
        per_fiber: Vec<FiberEigenvalues>,
        m: usize,
        k: usize,
        alpha_target: f64,
        grid_spec: String,
    ) -> Result<Self> {
        if per_fiber.is_empty() {
            return Err(Error::Empty("no fibers to evaluate"));
        }
        let global_min = per_fiber.iter().map(|f| f.lambda_min).fold(f64::INFINITY, f64::min);
        let global_max = per_fiber
            .iter()
            .map(|f| f.lambda_max)
            .fold(f64::NEG_INFINITY, f64::max);
        let mf = m as f64;
        let alpha_achieved = (1.0 - global_min / mf).max(global_max / mf - 1.0);
        let pass = global_min >= mf * (1.0 - alpha_target) && global_max <= mf * (1.0 + alpha_target);
        Ok(Self {
            per_fiber,
            global_min,
            global_max,
            m,
            k,
            alpha_target,
            alpha_achieved,
            pass,
            rank_deficient: m < k,
            grid_spec,
        })
    }

    /// Number of evaluated fibers.
    pub fn fiber_count(&self) -> usize {
        self.per_fiber.len()
    }
}

/// Checks the sampling inequalities with `A = m(1-α)`, `B = m(1+α)` on the
/// fibers selected by `policy`. Fails with an error if the generators are not
/// orthonormal; see [`verify_frame_unchecked`] to skip that precondition.
pub fn verify_frame(
    generators: &GeneratorSet,
    pattern: &SamplingPattern,
    alpha: f64,
    policy: GridPolicy,
) -> Result<FrameReport> {
    let ortho = generators.orthonormality_check(ORTHONORMALITY_TOL)?;
    if !ortho.orthonormal {
        return Err(invalid(
            "generators",
            format!(
                "integer translates are not orthonormal (max Gramian deviation {:e})",
                ortho.max_deviation
            ),
        ));
    }
    verify_frame_unchecked(generators, pattern, alpha, policy)
}

pub fn verify_frame_unchecked(
    generators: &GeneratorSet,
    pattern: &SamplingPattern,
    alpha: f64,
    policy: GridPolicy,
) -> Result<FrameReport> {
    check_alpha(alpha)?;
    if pattern.dim() != generators.dim() {
        return Err(Error::DimensionMismatch {
            expected: generators.dim(),
            found: pattern.dim(),
        });
    }
    let (fibers, grid_spec) = select_fibers(generators, alpha, policy)?;
    let m = pattern.len();
    let k = generators.len();
    let per_fiber = fibers
        .par_iter()
        .map(|omega| {
            let t = gram_t(generators, pattern, omega)?;
            let (lo, hi) = extreme_eigenvalues(&t);
            Ok(fiber_entry(omega, lo, hi, m, k))
        })
        .collect::<Result<Vec<_>>>()?;
    FrameReport::from_fibers(per_fiber, m, k, alpha, grid_spec)
}

/// Exact verification on a level-`k` multi-tile through the per-class closed
/// form of `T`; evaluates exactly one matrix per class.
pub fn verify_decomposition(
    dec: &TilingDecomposition,
    pattern: &SamplingPattern,
    alpha: f64,
) -> Result<FrameReport> {
    check_alpha(alpha)?;
    if dec.classes().is_empty() {
        return Err(Error::Empty("decomposition has no classes"));
    }
    let grid = dec.grid();
    let m = pattern.len();
    let per_fiber = (0..dec.complexity_index())
        .into_par_iter()
        .map(|n| {
            let t = multitile_fast_t(dec, pattern, n)?;
            let (lo, hi) = extreme_eigenvalues(&t);
            let omega = FiberPoint::new(grid.size, grid.unravel(dec.classes()[n].cells[0]));
            Ok(fiber_entry(&omega, lo, hi, m, t.nrows()))
        })
        .collect::<Result<Vec<_>>>()?;
    let k = dec.level().unwrap_or(0);
    let spec = format!("per-fingerprint exact: {} classes", dec.complexity_index());
    FrameReport::from_fibers(per_fiber, m, k, alpha, spec)
}

fn fiber_entry(omega: &FiberPoint, lo: f64, hi: f64, m: usize, k: usize) -> FiberEigenvalues {
    // Rank of T is at most m; eigenvalues are nonnegative up to roundoff.
    let lambda_min = if m < k { 0.0 } else { lo.max(0.0) };
    FiberEigenvalues {
        grid: omega.grid,
        cell: omega.cell.clone(),
        lambda_min,
        lambda_max: hi.max(lambda_min),
    }
}

fn select_fibers(
    generators: &GeneratorSet,
    alpha: f64,
    policy: GridPolicy,
) -> Result<(Vec<FiberPoint>, String)> {
    let dim = generators.dim();
    match policy {
        GridPolicy::PerFingerprint => {
            let reps = generators.fiber_configurations();
            let spec = format!("per-fingerprint exact: {} configurations", reps.len());
            Ok((reps, spec))
        }
        GridPolicy::Grid(g) => {
            let fibers = grid_fibers(generators, g)?;
            let spec = format!("grid: {g} points per axis, {} distinct fibers", fibers.len());
            Ok((fibers, spec))
        }
        GridPolicy::Net { inflation } => {
            let k_est = generators.constant_k()?;
            let net = net_resolution(
                generators.len(),
                generators.constant_c(),
                k_est * inflation,
                alpha,
                dim,
            )?;
            if net.count > MAX_FIBERS {
                return Err(Error::TooLarge {
                    what: "δ-net",
                    count: net.count as f64,
                    limit: MAX_FIBERS,
                });
            }
            let fibers = grid_fibers(generators, net.per_axis)?;
            let spec = format!(
                "net: delta={}, K estimate {k_est} inflated x{inflation}, {} points per axis, {} distinct fibers",
                net.delta,
                net.per_axis,
                fibers.len()
            );
            Ok((fibers, spec))
        }
    }
}

/// Cell centers of a `size^d` grid, each mapped to the cell of the profile
/// grid that contains it (when the set has raster profiles).
fn grid_fibers(generators: &GeneratorSet, size: usize) -> Result<Vec<FiberPoint>> {
    let g = Grid::new(generators.dim(), size)?;
    if g.cell_count() > MAX_FIBERS {
        return Err(Error::TooLarge {
            what: "fiber grid",
            count: g.cell_count() as f64,
            limit: MAX_FIBERS,
        });
    }
    let Some(pg) = generators.profile_grid() else {
        return Ok(g.fibers().collect());
    };
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for f in g.fibers() {
        let cell = pg.containing(&f.coords());
        if seen.insert(cell.clone()) {
            out.push(FiberPoint::new(pg.size, cell));
        }
    }
    Ok(out)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}
