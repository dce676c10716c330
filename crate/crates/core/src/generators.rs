//! Generator sets `Φ = {φ_i}` with `φ_i = e^{2πi<ℓ_i,·>} ψ_i`.
//!
//! Profiles are described on the frequency side. A [`FrequencyProfile::Indicator`]
//! is `ψ̂ = χ_{[-1/2,1/2]^d}` (the sinc generator); a [`RasterProfile`] stores
//! `ψ̂(ω_j + ℓ)` for the cell centers `ω_j` of a `G^d` grid and finitely many
//! offsets, and is read as piecewise constant on cells.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::lattice::{sup_distance, FiberPoint, Grid, LatticePoint};
use crate::spectrum::{MultiTileSpectrum, TilingDecomposition};

/// `e^{2πi t}`.
pub(crate) fn cis(t: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * t)
}

/// Frequency-side values of a profile on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterProfile {
    grid: Grid,
    values: Vec<BTreeMap<LatticePoint, Complex64>>,
}

impl RasterProfile {
    /// Identically zero profile.
    pub fn zeros(dim: usize, grid: usize) -> Result<Self> {
        let g = Grid::new(dim, grid)?;
        Ok(Self {
            grid: g,
            values: vec![BTreeMap::new(); g.cell_count()],
        })
    }

    /// Builds a profile from `(cell index, offset, value)` triples; repeated
    /// entries are summed.
    pub fn from_entries<I>(dim: usize, grid: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, LatticePoint, Complex64)>,
    {
        let mut p = Self::zeros(dim, grid)?;
        for (cell, offset, value) in entries {
            p.add(&cell, offset, value)?;
        }
        Ok(p)
    }

    /// Adds `value` to `ψ̂(ω_cell + offset)`.
    pub fn add(&mut self, cell: &[usize], offset: LatticePoint, value: Complex64) -> Result<()> {
        self.grid.check_index(cell)?;
        offset.check_dim(self.grid.dim)?;
        if !(value.re.is_finite() && value.im.is_finite()) {
            return Err(invalid("profile value", "must be finite"));
        }
        let linear = self.grid.ravel(cell);
        *self.values[linear].entry(offset).or_default() += value;
        Ok(())
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Nonzero-or-stored values at a cell, keyed by offset.
    pub fn cell_values(&self, cell: usize) -> &BTreeMap<LatticePoint, Complex64> {
        &self.values[cell]
    }

    /// Multiplies every value by `factor`.
    pub fn scaled(&self, factor: Complex64) -> Self {
        let values = self
            .values
            .iter()
            .map(|m| m.iter().map(|(l, v)| (l.clone(), v * factor)).collect())
            .collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    /// Pointwise sum with a profile on the same grid.
    pub fn sum(&self, other: &RasterProfile) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::MixedGrids {
                first: self.grid.size,
                second: other.grid.size,
            });
        }
        let mut out = self.clone();
        for (cell, m) in other.values.iter().enumerate() {
            for (l, v) in m {
                *out.values[cell].entry(l.clone()).or_default() += v;
            }
        }
        Ok(out)
    }

    fn cell_of(&self, omega: &FiberPoint) -> Result<usize> {
        if omega.dim() != self.grid.dim {
            return Err(Error::DimensionMismatch {
                expected: self.grid.dim,
                found: omega.dim(),
            });
        }
        let coarse = omega.coarsen(self.grid.size)?;
        Ok(self.grid.ravel(&coarse))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FrequencyProfile {
    /// `ψ̂ = χ_{[-1/2,1/2]^d}`.
    Indicator,
    Raster(RasterProfile),
}

impl FrequencyProfile {
    pub fn grid(&self) -> Option<Grid> {
        match self {
            FrequencyProfile::Indicator => None,
            FrequencyProfile::Raster(r) => Some(r.grid),
        }
    }

    /// Pairs `(ℓ, ψ̂(ω + ℓ))` at a fiber.
    pub fn values_at(&self, omega: &FiberPoint) -> Result<Vec<(LatticePoint, Complex64)>> {
        match self {
            FrequencyProfile::Indicator => {
                Ok(vec![(LatticePoint::zero(omega.dim()), Complex64::new(1.0, 0.0))])
            }
            FrequencyProfile::Raster(r) => {
                let cell = r.cell_of(omega)?;
                Ok(r.values[cell].iter().map(|(l, v)| (l.clone(), *v)).collect())
            }
        }
    }
}

/// `Z_{ψ̂}(ω, x) = Σ_ℓ ψ̂(ω + ℓ) e^{-2πi<ℓ, x>}`.
///
/// Raster profiles need `ω` on their grid or on a refinement of it.
pub fn zak_profile(profile: &FrequencyProfile, omega: &FiberPoint, x: &[f64]) -> Result<Complex64> {
    match profile {
        FrequencyProfile::Indicator => Ok(Complex64::new(1.0, 0.0)),
        FrequencyProfile::Raster(r) => {
            let cell = r.cell_of(omega)?;
            Ok(zak_of_values(&r.values[cell], x))
        }
    }
}

fn zak_of_values(values: &BTreeMap<LatticePoint, Complex64>, x: &[f64]) -> Complex64 {
    values.iter().map(|(l, v)| v * cis(-l.dot(x))).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub base_freq: LatticePoint,
    pub profile: FrequencyProfile,
}

impl Generator {
    pub fn new(base_freq: LatticePoint, profile: FrequencyProfile) -> Self {
        Self { base_freq, profile }
    }

    pub fn indicator(base_freq: LatticePoint) -> Self {
        Self::new(base_freq, FrequencyProfile::Indicator)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrthonormalityReport {
    pub orthonormal: bool,
    /// Largest entrywise `|G(ω_j) - I|` over the evaluated fibers.
    pub max_deviation: f64,
    pub fibers: usize,
}

/// A finite generator set with lazily computed constants.
#[derive(Debug, Clone)]
pub struct GeneratorSet {
    dim: usize,
    members: Vec<Generator>,
    profile_grid: Option<Grid>,
    /// Whether the caller asserts bounded quadratic periodization in time.
    /// Informational only.
    pub time_periodization_asserted: bool,
    c: OnceLock<f64>,
    k: OnceLock<f64>,
}

impl GeneratorSet {
    /// Validated generator set: matching dimensions, one common raster grid,
    /// and no two identical members.
    pub fn new(dim: usize, members: Vec<Generator>) -> Result<Self> {
        let set = Self::allow_duplicates(dim, members)?;
        for i in 0..set.members.len() {
            for j in 0..i {
                if set.members[i] == set.members[j] {
                    return Err(Error::DuplicateGenerator { first: j, second: i });
                }
            }
        }
        Ok(set)
    }

    /// Like [`GeneratorSet::new`] but accepts repeated members, which is
    /// useful for diagnosing degenerate inputs.
    pub fn allow_duplicates(dim: usize, members: Vec<Generator>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "ambient dimension must be at least 1"));
        }
        if members.is_empty() {
            return Err(Error::Empty("generator set needs at least one member"));
        }
        let mut profile_grid: Option<Grid> = None;
        for g in &members {
            g.base_freq.check_dim(dim)?;
            if let Some(pg) = g.profile.grid() {
                if pg.dim != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: pg.dim,
                    });
                }
                match profile_grid {
                    None => profile_grid = Some(pg),
                    Some(prev) if prev != pg => {
                        return Err(Error::MixedGrids {
                            first: prev.size,
                            second: pg.size,
                        })
                    }
                    _ => {}
                }
            }
        }
        Ok(Self {
            dim,
            members,
            profile_grid,
            time_periodization_asserted: true,
            c: OnceLock::new(),
            k: OnceLock::new(),
        })
    }

    /// Sinc generators `ψ̂ = χ_{[-1/2,1/2]^d}` at the cube offsets of a multi-tile
    /// spectrum (after dilation to the unit lattice).
    pub fn from_multitile(spectrum: &MultiTileSpectrum) -> Self {
        let members = spectrum
            .offsets()
            .iter()
            .cloned()
            .map(Generator::indicator)
            .collect();
        Self::new(spectrum.dim(), members).expect("multi-tile offsets are distinct")
    }

    /// Indicator generators `φ̂_i = χ_{Ω_i}` with `Ω_i = ⋃_n Q_n + b_i^n`, where
    /// `b_i^n` is the `i`-th offset of `B_n` in sorted order.
    pub fn from_decomposition(dec: &TilingDecomposition) -> Result<Self> {
        let k = match dec.level() {
            Some(k) => k,
            None if dec.classes().is_empty() => {
                return Err(Error::Empty("decomposition has no classes"))
            }
            None => {
                let sizes: Vec<usize> = dec.classes().iter().map(|c| c.offsets.len()).collect();
                let lo = *sizes.iter().min().unwrap();
                let hi = *sizes.iter().max().unwrap();
                return Err(Error::UnequalLevel {
                    expected: hi,
                    found: lo,
                });
            }
        };
        let grid = dec.grid();
        let mut profiles = vec![RasterProfile::zeros(grid.dim, grid.size)?; k];
        for class in dec.classes() {
            for (i, b) in class.offsets.iter().enumerate() {
                for &cell in &class.cells {
                    profiles[i].values[cell].insert(b.clone(), Complex64::new(1.0, 0.0));
                }
            }
        }
        let members = profiles
            .into_iter()
            .map(|p| Generator::new(LatticePoint::zero(grid.dim), FrequencyProfile::Raster(p)))
            .collect();
        Self::new(grid.dim, members)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of generators `k`.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Generator] {
        &self.members
    }

    /// Common grid of the raster profiles, if any.
    pub fn profile_grid(&self) -> Option<Grid> {
        self.profile_grid
    }

    pub fn all_indicators(&self) -> bool {
        self.profile_grid.is_none()
    }

    /// `Z_{φ̂_i}(ω, x) = e^{-2πi<x, ℓ_i>} Z_{ψ̂_i}(ω, x)`.
    pub fn zak_generator(&self, i: usize, omega: &FiberPoint, x: &[f64]) -> Result<Complex64> {
        let g = &self.members[i];
        Ok(cis(-g.base_freq.dot(x)) * zak_profile(&g.profile, omega, x)?)
    }

    /// Fiber of `φ̂_i` at `ω`: pairs `(ℓ, φ̂_i(ω + ℓ))` with `φ̂_i(ω + ℓ) = ψ̂_i(ω + ℓ - ℓ_i)`.
    pub fn fiber(&self, i: usize, omega: &FiberPoint) -> Result<Vec<(LatticePoint, Complex64)>> {
        let g = &self.members[i];
        Ok(g.profile
            .values_at(omega)?
            .into_iter()
            .map(|(l, v)| (l.add(&g.base_freq), v))
            .collect())
    }

    /// Periodization bound `C = max_i max_j Σ_ℓ |ψ̂_i(ω_j + ℓ)|`.
    pub fn constant_c(&self) -> f64 {
        *self.c.get_or_init(|| {
            self.members
                .iter()
                .map(|g| match &g.profile {
                    FrequencyProfile::Indicator => 1.0,
                    FrequencyProfile::Raster(r) => r
                        .values
                        .iter()
                        .map(|m| m.values().map(|v| v.norm()).sum::<f64>())
                        .fold(0.0, f64::max),
                })
                .fold(0.0, f64::max)
        })
    }

    /// Grid estimate of the Zak Lipschitz constant `K`.
    ///
    /// Difference quotients `|Z(ω,x) - Z(ω',x)| / |ω - ω'|_∞` are maximised
    /// over distinct cell centers `ω, ω'` and over `x` on the same grid. This
    /// is a lower estimate of the true supremum.
    pub fn constant_k(&self) -> Result<f64> {
        if let Some(&k) = self.k.get() {
            return Ok(k);
        }
        if let Some(g) = self.profile_grid {
            if g.size < 2 {
                return Err(Error::DegenerateGrid(
                    "raster profiles need at least 2 cells per dimension to estimate K".into(),
                ));
            }
        }
        let k = self
            .members
            .iter()
            .map(|g| match &g.profile {
                FrequencyProfile::Indicator => 0.0,
                FrequencyProfile::Raster(r) => lipschitz_estimate(r),
            })
            .fold(0.0, f64::max);
        Ok(*self.k.get_or_init(|| k))
    }

    /// Grid estimate of `D = max_i sup_x Σ_ℓ |ψ_i(x + ℓ)|^2`, computed on the
    /// frequency side as `G^{-d} Σ_j |Z_{ψ̂_i}(ω_j, -x)|^2` with `x` on the grid.
    /// Exact (equal to 1) for indicator profiles.
    pub fn constant_d_estimate(&self) -> f64 {
        self.members
            .iter()
            .map(|g| match &g.profile {
                FrequencyProfile::Indicator => 1.0,
                FrequencyProfile::Raster(r) => {
                    let n = r.grid.cell_count();
                    (0..n)
                        .map(|xi| {
                            let x: Vec<f64> =
                                r.grid.center(&r.grid.unravel(xi)).iter().map(|v| -v).collect();
                            r.values
                                .iter()
                                .map(|m| zak_of_values(m, &x).norm_sqr())
                                .sum::<f64>()
                                / n as f64
                        })
                        .fold(0.0, f64::max)
                }
            })
            .fold(0.0, f64::max)
    }

    /// Fiber Gramians on the profile grid (one fiber for indicator-only sets).
    pub fn orthonormality_check(&self, tol: f64) -> Result<OrthonormalityReport> {
        let grid = self.profile_grid.map(|g| g.size).unwrap_or(1);
        self.orthonormality_check_at(grid, tol)
    }

    /// Fiber Gramians `G_ij(ω) = Σ_ℓ φ̂_i(ω+ℓ) conj(φ̂_j(ω+ℓ))` at every cell
    /// center of a grid with `grid` cells per axis; orthonormal iff
    /// `max |G - I| <= tol`.
    pub fn orthonormality_check_at(&self, grid: usize, tol: f64) -> Result<OrthonormalityReport> {
        let g = Grid::new(self.dim, grid)?;
        let k = self.len();
        let mut max_deviation = 0.0f64;
        for omega in g.fibers() {
            let fibers: Vec<HashMap<LatticePoint, Complex64>> = (0..k)
                .map(|i| Ok(self.fiber(i, &omega)?.into_iter().collect()))
                .collect::<Result<_>>()?;
            for i in 0..k {
                for j in 0..k {
                    let gram: Complex64 = fibers[i]
                        .iter()
                        .filter_map(|(l, a)| fibers[j].get(l).map(|b| a * b.conj()))
                        .sum();
                    let target = if i == j { 1.0 } else { 0.0 };
                    max_deviation = max_deviation.max((gram - target).norm());
                }
            }
        }
        Ok(OrthonormalityReport {
            orthonormal: max_deviation <= tol,
            max_deviation,
            fibers: g.cell_count(),
        })
    }

    /// Cells of the profile grid grouped by the tuple of raster values of all
    /// members. `T(ω)` depends on `ω` only through this tuple, so one
    /// representative per group determines every fiber. Indicator-only sets
    /// have a single group at `ω = 0`.
    pub fn fiber_configurations(&self) -> Vec<FiberPoint> {
        let Some(grid) = self.profile_grid else {
            return vec![FiberPoint::origin(self.dim)];
        };
        let mut seen = HashSet::new();
        let mut reps = Vec::new();
        for cell in 0..grid.cell_count() {
            let key: Vec<Vec<(LatticePoint, u64, u64)>> = self
                .members
                .iter()
                .filter_map(|g| match &g.profile {
                    FrequencyProfile::Raster(r) => Some(
                        r.values[cell]
                            .iter()
                            .map(|(l, v)| (l.clone(), v.re.to_bits(), v.im.to_bits()))
                            .collect(),
                    ),
                    FrequencyProfile::Indicator => None,
                })
                .collect();
            if seen.insert(key) {
                reps.push(FiberPoint::new(grid.size, grid.unravel(cell)));
            }
        }
        reps
    }
}

fn lipschitz_estimate(r: &RasterProfile) -> f64 {
    let grid = r.grid;
    let n = grid.cell_count();
    let centers: Vec<Vec<f64>> = (0..n).map(|i| grid.center(&grid.unravel(i))).collect();
    // table[ω][x]
    let table: Vec<Vec<Complex64>> = r
        .values
        .iter()
        .map(|m| centers.iter().map(|x| zak_of_values(m, x)).collect())
        .collect();
    (0..n)
        .into_par_iter()
        .map(|a| {
            let mut best = 0.0f64;
            for b in (a + 1)..n {
                let dist = sup_distance(&centers[a], &centers[b]);
                let num = table[a]
                    .iter()
                    .zip(&table[b])
                    .map(|(za, zb)| (za - zb).norm())
                    .fold(0.0, f64::max);
                best = best.max(num / dist);
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}
