use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::generators::{cis, GeneratorSet};
use crate::lattice::FiberPoint;
use crate::spectrum::TilingDecomposition;

use super::SamplingPattern;

/// The `k x m` Zak matrix with entries `Z_{φ_i}(x_j, ω)`, evaluated on the
/// frequency side as `e^{2πi<x_j, ω>} Z_{φ̂_i}(ω, -x_j)`.
pub fn zak_matrix(
    generators: &GeneratorSet,
    pattern: &SamplingPattern,
    omega: &FiberPoint,
) -> Result<DMatrix<Complex64>> {
    check_dims(generators, pattern, omega)?;
    let w = omega.coords();
    let k = generators.len();
    let m = pattern.len();
    let mut z = DMatrix::zeros(k, m);
    for (j, x) in pattern.points().iter().enumerate() {
        let phase = cis(x.iter().zip(&w).map(|(a, b)| a * b).sum());
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        for i in 0..k {
            z[(i, j)] = phase * generators.zak_generator(i, omega, &neg)?;
        }
    }
    Ok(z)
}

/// `T(ω) = conj(Z) Z^t`, a `k x k` Hermitian positive semi-definite matrix.
pub fn gram_t(
    generators: &GeneratorSet,
    pattern: &SamplingPattern,
    omega: &FiberPoint,
) -> Result<DMatrix<Complex64>> {
    let z = zak_matrix(generators, pattern, omega)?;
    Ok(z.conjugate() * z.transpose())
}

/// `T` on class `n` of a level-`k` multi-tile decomposition:
/// `T_ij = Σ_r e^{2πi<x_r, b_j - b_i>}` with `B_n = {b_1 < .. < b_k}`.
pub fn multitile_fast_t(
    dec: &TilingDecomposition,
    pattern: &SamplingPattern,
    class: usize,
) -> Result<DMatrix<Complex64>> {
    let Some(level) = dec.level() else {
        let sizes: Vec<usize> = dec.classes().iter().map(|c| c.offsets.len()).collect();
        return Err(Error::UnequalLevel {
            expected: sizes.iter().copied().max().unwrap_or(0),
            found: sizes.iter().copied().min().unwrap_or(0),
        });
    };
    if dec.grid().dim != pattern.dim() {
        return Err(Error::DimensionMismatch {
            expected: dec.grid().dim,
            found: pattern.dim(),
        });
    }
    let offsets: Vec<_> = dec.classes()[class].offsets.iter().collect();
    // phases[r][i] = e^{2πi<x_r, b_i>}
    let phases: Vec<Vec<Complex64>> = pattern
        .points()
        .iter()
        .map(|x| offsets.iter().map(|b| cis(b.dot(x))).collect())
        .collect();
    let mut t = DMatrix::zeros(level, level);
    for row in &phases {
        for i in 0..level {
            for j in 0..level {
                t[(i, j)] += row[i].conj() * row[j];
            }
        }
    }
    Ok(t)
}

/// Smallest and largest eigenvalue of a Hermitian matrix.
pub fn extreme_eigenvalues(t: &DMatrix<Complex64>) -> (f64, f64) {
    let ev = t.clone().symmetric_eigenvalues();
    let lo = ev.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

fn check_dims(generators: &GeneratorSet, pattern: &SamplingPattern, omega: &FiberPoint) -> Result<()> {
    for found in [pattern.dim(), omega.dim()] {
        if found != generators.dim() {
            return Err(Error::DimensionMismatch {
                expected: generators.dim(),
                found,
            });
        }
    }
    Ok(())
}
