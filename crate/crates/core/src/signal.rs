//! Finite signal model on a frequency grid, sampling and per-fiber
//! reconstruction.
//!
//! A signal is given by coefficients `f̂(ω_j + ℓ)` where `ω_j` runs over the
//! `G^d` cell centers and `ℓ` over finitely many lattice points. It is
//! synthesised as
//!
//! ```text
//! f(x + ℓ') = G^{-d} Σ_j Σ_ℓ f̂(ω_j + ℓ) e^{2πi<ω_j + ℓ, x + ℓ'>},   ℓ' ∈ {0..G-1}^d
//! ```
//!
//! so that `Σ_{ℓ'} |f(x + ℓ')|²` averages to `‖f‖² = G^{-d} Σ |f̂|²`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::generators::{cis, GeneratorSet};
use crate::lattice::{FiberPoint, Grid, LatticePoint};
use crate::spectrum::Spectrum;
use crate::verify::{extreme_eigenvalues, gram_t, zak_matrix, SamplingPattern};

/// Relative threshold on `λ_min(T)/λ_max(T)` below which a fiber is treated
/// as singular during reconstruction.
pub const SINGULAR_RATIO: f64 = 1e-10;

/// Coefficients `f̂(ω_j + ℓ)` of a finite-model signal, one map per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSignal {
    grid: Grid,
    coeffs: Vec<BTreeMap<LatticePoint, Complex64>>,
}

impl DiscreteSignal {
    pub fn zeros(dim: usize, grid: usize) -> Result<Self> {
        let grid = Grid::new(dim, grid)?;
        Ok(Self {
            grid,
            coeffs: vec![BTreeMap::new(); grid.cell_count()],
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    pub fn cell(&self, cell: usize) -> &BTreeMap<LatticePoint, Complex64> {
        &self.coeffs[cell]
    }

    pub fn coefficient(&self, cell: usize, offset: &LatticePoint) -> Complex64 {
        self.coeffs[cell].get(offset).copied().unwrap_or_default()
    }

    pub fn set(&mut self, cell: &[usize], offset: LatticePoint, value: Complex64) -> Result<()> {
        self.grid.check_index(cell)?;
        offset.check_dim(self.dim())?;
        let c = self.grid.ravel(cell);
        self.coeffs[c].insert(offset, value);
        Ok(())
    }

    /// Number of stored `(ω_j, ℓ)` pairs.
    pub fn support_size(&self) -> usize {
        self.coeffs.iter().map(BTreeMap::len).sum()
    }

    /// `(cell index, offset, value)` triples in storage order.
    pub fn entries(&self) -> impl Iterator<Item = (Vec<usize>, &LatticePoint, Complex64)> + '_ {
        self.coeffs.iter().enumerate().flat_map(move |(c, m)| {
            let idx = self.grid.unravel(c);
            m.iter().map(move |(l, v)| (idx.clone(), l, *v))
        })
    }

    /// Finite-model energy `G^{-d} Σ |f̂|²`.
    pub fn norm_sqr(&self) -> f64 {
        let total: f64 = self.coeffs.iter().flat_map(|m| m.values()).map(|v| v.norm_sqr()).sum();
        total / self.grid.cell_count() as f64
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .map(|m| m.iter().map(|(l, v)| (l.clone(), v * factor)).collect())
                .collect(),
        }
    }

    /// `‖self - other‖ / ‖other‖` in the finite-model norm; missing
    /// coefficients count as zero. Zero when both signals vanish.
    pub fn relative_error(&self, other: &DiscreteSignal) -> Result<f64> {
        if self.grid != other.grid {
            return Err(invalid("signal", "signals live on different grids"));
        }
        let mut diff = 0.0;
        let mut base = 0.0;
        for (a, b) in self.coeffs.iter().zip(&other.coeffs) {
            for (l, v) in b {
                base += v.norm_sqr();
                diff += (a.get(l).copied().unwrap_or_default() - v).norm_sqr();
            }
            for (l, v) in a {
                if !b.contains_key(l) {
                    diff += v.norm_sqr();
                }
            }
        }
        if base == 0.0 {
            return Ok(if diff == 0.0 { 0.0 } else { f64::INFINITY });
        }
        Ok((diff / base).sqrt())
    }

    /// `f(x + ℓ')` with `ℓ'` reduced mod `G` per axis.
    pub fn evaluate(&self, x: &[f64], shift: &LatticePoint) -> Result<Complex64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        shift.check_dim(self.dim())?;
        let g = self.grid.size as i64;
        let point: Vec<f64> = x
            .iter()
            .zip(shift.coords())
            .map(|(&x, &l)| x + l.rem_euclid(g) as f64)
            .collect();
        let mut acc = Complex64::default();
        for (c, m) in self.coeffs.iter().enumerate() {
            let w = self.grid.center(&self.grid.unravel(c));
            for (l, v) in m {
                let t: f64 = w
                    .iter()
                    .zip(l.coords())
                    .zip(&point)
                    .map(|((w, &l), p)| (w + l as f64) * p)
                    .sum();
                acc += v * cis(t);
            }
        }
        Ok(acc / self.grid.cell_count() as f64)
    }
}

/// Sample values `f(x_r + ℓ')` for `r < m` and `ℓ' ∈ {0..G-1}^d`, stored row
/// by row with `ℓ'` raveled like grid cells.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    grid: Grid,
    pattern: SamplingPattern,
    values: Vec<Complex64>,
}

impl SampleSet {
    pub fn new(grid: usize, pattern: SamplingPattern, values: Vec<Complex64>) -> Result<Self> {
        let grid = Grid::new(pattern.dim(), grid)?;
        let expected = pattern.len() * grid.cell_count();
        if values.len() != expected {
            return Err(invalid(
                "samples",
                format!("expected {expected} values (m x G^d), got {}", values.len()),
            ));
        }
        Ok(Self {
            grid,
            pattern,
            values,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn pattern(&self) -> &SamplingPattern {
        &self.pattern
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// `f(x_r + ℓ')` with `ℓ'` given as a grid index.
    pub fn value(&self, r: usize, shift: &[usize]) -> Complex64 {
        self.values[r * self.grid.cell_count() + self.grid.ravel(shift)]
    }

    /// `Σ_r Σ_{ℓ'} |f(x_r + ℓ')|²`.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

/// Independent standard complex Gaussian coefficients (`E|f̂|² = 1`) on every
/// active pair of the spectrum rasterised at `grid`.
pub fn synthesize_random(spectrum: &Spectrum, grid: usize, seed: u64) -> Result<DiscreteSignal> {
    let raster = spectrum.to_raster(Some(grid))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = raster
        .fingerprint_slice()
        .iter()
        .map(|fp| fp.iter().map(|l| (l.clone(), complex_gaussian(&mut rng))).collect())
        .collect();
    Ok(DiscreteSignal {
        grid: raster.grid(),
        coeffs,
    })
}

/// `f̂(ω_j + ·) = Σ_i c_i(ω_j) φ̂_i(ω_j + ·)` with standard complex Gaussian
/// fiber coefficients `c_i(ω_j)`.
pub fn synthesize_in_span(generators: &GeneratorSet, grid: usize, seed: u64) -> Result<DiscreteSignal> {
    let g = Grid::new(generators.dim(), grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = generators.len();
    let mut coeffs = Vec::with_capacity(g.cell_count());
    for omega in g.fibers() {
        let c: Vec<Complex64> = (0..k).map(|_| complex_gaussian(&mut rng)).collect();
        coeffs.push(combine(generators, &omega, &c)?);
    }
    Ok(DiscreteSignal { grid: g, coeffs })
}

fn combine(
    generators: &GeneratorSet,
    omega: &FiberPoint,
    c: &[Complex64],
) -> Result<BTreeMap<LatticePoint, Complex64>> {
    let mut out = BTreeMap::new();
    for (i, ci) in c.iter().enumerate() {
        for (l, v) in generators.fiber(i, omega)? {
            *out.entry(l).or_insert_with(Complex64::default) += ci * v;
        }
    }
    Ok(out)
}

/// `e^{2πi<x, ω_j>} Z_{f̂}(ω_j, -x)` directly from the coefficients.
fn zak_direct(f: &DiscreteSignal, x: &[f64]) -> Vec<Complex64> {
    let grid = f.grid;
    f.coeffs
        .iter()
        .enumerate()
        .map(|(c, m)| {
            let w = grid.center(&grid.unravel(c));
            m.iter()
                .map(|(l, v)| {
                    let t: f64 = w.iter().zip(l.coords()).zip(x).map(|((w, &l), x)| (w + l as f64) * x).sum();
                    v * cis(t)
                })
                .sum()
        })
        .collect()
}

/// In-place multidimensional DFT of a row-major `G^d` block.
fn dft_nd(data: &mut [Complex64], grid: Grid, inverse: bool) {
    let n = grid.size;
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let total = grid.cell_count();
    let mut line = vec![Complex64::default(); n];
    for axis in 0..grid.dim {
        let stride = n.pow((grid.dim - 1 - axis) as u32);
        for start in 0..total {
            if !(start / stride).is_multiple_of(n) {
                continue;
            }
            for (t, slot) in line.iter_mut().enumerate() {
                *slot = data[start + t * stride];
            }
            fft.process(&mut line);
            for (t, v) in line.iter().enumerate() {
                data[start + t * stride] = *v;
            }
        }
    }
}

/// Per-axis factor `e^{±2πi ℓ' (-1/2 + 1/(2G))}` relating the cell-center grid
/// to the plain DFT grid.
fn twist(grid: Grid, sign: f64) -> Vec<Complex64> {
    let n = grid.size;
    let base = -0.5 + 0.5 / n as f64;
    let axis: Vec<Complex64> = (0..n).map(|l| cis(sign * base * l as f64)).collect();
    (0..grid.cell_count())
        .map(|i| grid.unravel(i).iter().map(|&l| axis[l]).product())
        .collect()
}

/// Samples `f(x_r + ℓ')` for every pattern point and every `ℓ'` in one
/// lattice period.
pub fn take_samples(f: &DiscreteSignal, pattern: &SamplingPattern) -> Result<SampleSet> {
    if pattern.dim() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            found: pattern.dim(),
        });
    }
    let grid = f.grid;
    let tw = twist(grid, 1.0);
    let norm = 1.0 / grid.cell_count() as f64;
    let rows: Vec<Vec<Complex64>> = pattern
        .points()
        .par_iter()
        .map(|x| {
            let mut y = zak_direct(f, x);
            dft_nd(&mut y, grid, true);
            y.iter().zip(&tw).map(|(v, t)| v * t * norm).collect()
        })
        .collect();
    SampleSet::new(grid.size, pattern.clone(), rows.concat())
}

/// `y[r][j] = Σ_{ℓ'} f(x_r + ℓ') e^{-2πi<ℓ', ω_j>}`, the Zak transform of
/// the samples along the period lattice.
pub fn zak_of_samples(samples: &SampleSet) -> Vec<Vec<Complex64>> {
    let grid = samples.grid;
    let n = grid.cell_count();
    let tw = twist(grid, -1.0);
    samples
        .values
        .par_chunks(n)
        .map(|row| {
            let mut y: Vec<Complex64> = row.iter().zip(&tw).map(|(v, t)| v * t).collect();
            dft_nd(&mut y, grid, false);
            y
        })
        .collect()
}

/// Coefficients `c(ω_j)` of the projection of `f̂(ω_j + ·)` onto the span of
/// the generator fibers, for every cell. Exact for signals in the span.
pub fn fiber_coefficients(f: &DiscreteSignal, generators: &GeneratorSet) -> Result<Vec<DVector<Complex64>>> {
    if generators.dim() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            found: generators.dim(),
        });
    }
    let k = generators.len();
    let grid = f.grid;
    (0..grid.cell_count())
        .into_par_iter()
        .map(|c| {
            let omega = FiberPoint::new(grid.size, grid.unravel(c));
            let fibers: Vec<Vec<(LatticePoint, Complex64)>> =
                (0..k).map(|i| generators.fiber(i, &omega)).collect::<Result<_>>()?;
            let inner = |a: &[(LatticePoint, Complex64)], b: &dyn Fn(&LatticePoint) -> Complex64| {
                a.iter().map(|(l, v)| b(l) * v.conj()).sum::<Complex64>()
            };
            let gram = DMatrix::from_fn(k, k, |i, j| {
                let fj: BTreeMap<&LatticePoint, Complex64> = fibers[j].iter().map(|(l, v)| (l, *v)).collect();
                inner(&fibers[i], &|l| fj.get(l).copied().unwrap_or_default())
            });
            let rhs = DVector::from_fn(k, |i, _| inner(&fibers[i], &|l| f.coefficient(c, l)));
            solve_hermitian(gram, rhs, &omega)
        })
        .collect()
}

fn solve_hermitian(
    t: DMatrix<Complex64>,
    rhs: DVector<Complex64>,
    omega: &FiberPoint,
) -> Result<DVector<Complex64>> {
    let (lo, hi) = extreme_eigenvalues(&t);
    if lo.is_nan() || lo <= SINGULAR_RATIO * hi.max(f64::MIN_POSITIVE) {
        return Err(Error::SingularFiber {
            cell: omega.cell.clone(),
            lambda_min: lo,
        });
    }
    let chol = t.cholesky().ok_or_else(|| Error::SingularFiber {
        cell: omega.cell.clone(),
        lambda_min: lo,
    })?;
    Ok(chol.solve(&rhs))
}

/// Least-squares recovery of a signal in the span of `generators` from its
/// samples, one `k x k` normal-equation solve per grid fiber.
pub fn reconstruct(samples: &SampleSet, generators: &GeneratorSet) -> Result<DiscreteSignal> {
    let pattern = samples.pattern();
    if generators.dim() != pattern.dim() {
        return Err(Error::DimensionMismatch {
            expected: generators.dim(),
            found: pattern.dim(),
        });
    }
    let grid = samples.grid;
    let y = zak_of_samples(samples);
    let coeffs = (0..grid.cell_count())
        .into_par_iter()
        .map(|c| {
            let omega = FiberPoint::new(grid.size, grid.unravel(c));
            let z = zak_matrix(generators, pattern, &omega)?;
            let yc = DVector::from_fn(pattern.len(), |r, _| y[r][c]);
            let rhs = z.conjugate() * yc;
            let t = z.conjugate() * z.transpose();
            let coef = solve_hermitian(t, rhs, &omega)?;
            combine(generators, &omega, coef.as_slice())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DiscreteSignal { grid, coeffs })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyIdentity {
    /// `Σ_r Σ_{ℓ'} |f(x_r + ℓ')|²` from the samples.
    pub lhs: f64,
    /// `G^{-d} Σ_j <T(ω_j) c(ω_j), c(ω_j)>`.
    pub rhs: f64,
    /// `|lhs - rhs| / lhs`, zero for the zero signal.
    pub gap: f64,
    /// `‖f‖²` of the finite model.
    pub norm_sqr: f64,
}

/// Compares the sample energy with the Zak-domain quadratic form built from
/// the generator fibers. `f` must lie in the span of the generators.
pub fn energy_identity_check(
    f: &DiscreteSignal,
    generators: &GeneratorSet,
    pattern: &SamplingPattern,
) -> Result<EnergyIdentity> {
    let lhs = take_samples(f, pattern)?.energy();
    let coeffs = fiber_coefficients(f, generators)?;
    let grid = f.grid;
    let quad: Vec<f64> = coeffs
        .par_iter()
        .enumerate()
        .map(|(c, coef)| {
            let omega = FiberPoint::new(grid.size, grid.unravel(c));
            let t = gram_t(generators, pattern, &omega)?;
            Ok(coef.dotc(&(t * coef)).re)
        })
        .collect::<Result<_>>()?;
    let rhs = quad.iter().sum::<f64>() / grid.cell_count() as f64;
    let gap = if lhs == 0.0 { 0.0 } else { (lhs - rhs).abs() / lhs };
    Ok(EnergyIdentity {
        lhs,
        rhs,
        gap,
        norm_sqr: f.norm_sqr(),
    })
}
