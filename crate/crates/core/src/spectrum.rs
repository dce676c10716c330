//! Spectra on a finite raster of the fundamental domain.
//!
//! A compact spectrum `Ω` is stored through its fingerprint map: for every
//! cell `Q` of the raster, the set of integer offsets `ℓ` with `Q + ℓ ⊂ Ω`.
//! Every "almost everywhere" statement about `Ω` becomes an exact statement
//! about cells.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use log::warn;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::lattice::{shell, Grid, LatticePoint};

pub type Fingerprint = BTreeSet<LatticePoint>;

/// Upper limit on the number of ρ-cubes materialised by [`cover_at_scale`].
pub const MAX_COVER_CUBES: usize = 1 << 22;

/// `Ω = ⋃_i [-ρ/2, ρ/2]^d + ρ ℓ_i` with distinct `ℓ_i ∈ Z^d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiTileSpectrum {
    dim: usize,
    offsets: Vec<LatticePoint>,
    scale: f64,
}

impl MultiTileSpectrum {
    pub fn new(dim: usize, offsets: Vec<LatticePoint>) -> Result<Self> {
        Self::with_scale(dim, offsets, 1.0)
    }

    pub fn with_scale(dim: usize, offsets: Vec<LatticePoint>, scale: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "ambient dimension must be at least 1"));
        }
        if offsets.is_empty() {
            return Err(Error::Empty("multi-tile spectrum needs at least one offset"));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(invalid("scale", format!("must be positive, got {scale}")));
        }
        let mut seen = BTreeSet::new();
        for l in &offsets {
            l.check_dim(dim)?;
            if !seen.insert(l.clone()) {
                return Err(invalid("offsets", format!("offset {l:?} repeated")));
            }
        }
        Ok(Self {
            dim,
            offsets,
            scale,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn offsets(&self) -> &[LatticePoint] {
        &self.offsets
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Number of cubes.
    pub fn level(&self) -> usize {
        self.offsets.len()
    }

    /// Raster of the dilated spectrum `Ω/ρ`, which is a union of unit cubes.
    pub fn to_raster(&self, grid: usize) -> Result<RasterSpectrum> {
        let g = Grid::new(self.dim, grid)?;
        let fp: Fingerprint = self.offsets.iter().cloned().collect();
        Ok(RasterSpectrum::from_fingerprints(
            self.dim,
            grid,
            vec![fp; g.cell_count()],
        ))
    }
}

/// Spectrum given by a fingerprint per cell of a `G^d` raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterSpectrum {
    grid: Grid,
    fingerprints: Vec<Fingerprint>,
    max_offset: i64,
}

impl RasterSpectrum {
    /// The empty spectrum.
    pub fn empty(dim: usize, grid: usize) -> Result<Self> {
        let g = Grid::new(dim, grid)?;
        Ok(Self {
            grid: g,
            fingerprints: vec![Fingerprint::new(); g.cell_count()],
            max_offset: 0,
        })
    }

    /// Builds a raster from `(cell index, offsets)` pairs; unlisted cells are empty.
    pub fn from_cells<I>(dim: usize, grid: usize, cells: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, Vec<LatticePoint>)>,
    {
        let mut out = Self::empty(dim, grid)?;
        for (index, offsets) in cells {
            out.grid.check_index(&index)?;
            let linear = out.grid.ravel(&index);
            for l in offsets {
                l.check_dim(dim)?;
                out.fingerprints[linear].insert(l);
            }
        }
        out.max_offset = max_offset(&out.fingerprints);
        Ok(out)
    }

    pub(crate) fn from_fingerprints(dim: usize, grid: usize, fingerprints: Vec<Fingerprint>) -> Self {
        let max_offset = max_offset(&fingerprints);
        Self {
            grid: Grid { dim, size: grid },
            fingerprints,
            max_offset,
        }
    }

    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Largest `|ℓ|_∞` over all stored offsets.
    pub fn max_offset(&self) -> i64 {
        self.max_offset
    }

    /// Fingerprint of the cell with linear index `cell`.
    pub fn fingerprint(&self, cell: usize) -> &Fingerprint {
        &self.fingerprints[cell]
    }

    pub fn fingerprint_slice(&self) -> &[Fingerprint] {
        &self.fingerprints
    }

    /// The fingerprint map keyed by cell multi-index, in canonical order.
    pub fn fingerprints(&self) -> BTreeMap<Vec<usize>, Fingerprint> {
        self.fingerprints
            .iter()
            .enumerate()
            .map(|(i, fp)| (self.grid.unravel(i), fp.clone()))
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.fingerprints.iter().all(|fp| fp.is_empty())
    }

    /// Same set on a grid `factor` times finer along each axis.
    pub fn refine(&self, factor: usize) -> Result<RasterSpectrum> {
        if factor == 0 {
            return Err(invalid("factor", "refinement factor must be positive"));
        }
        let fine = Grid::new(self.dim(), self.grid.size * factor)?;
        let fps = (0..fine.cell_count())
            .map(|i| {
                let coarse: Vec<usize> = fine.unravel(i).iter().map(|c| c / factor).collect();
                self.fingerprints[self.grid.ravel(&coarse)].clone()
            })
            .collect();
        Ok(Self::from_fingerprints(self.dim(), fine.size, fps))
    }

    /// Same set on a grid of `size` cells per axis, which must be a multiple
    /// of the current grid.
    pub fn on_grid(&self, size: usize) -> Result<RasterSpectrum> {
        if size == 0 || !size.is_multiple_of(self.grid.size) {
            return Err(Error::OffGrid {
                expected: self.grid.size,
                found: size,
            });
        }
        self.refine(size / self.grid.size)
    }

    /// Groups cells by fingerprint. Empty cells belong to no class; classes are
    /// ordered by the first cell carrying them.
    pub fn tiling_decomposition(&self) -> TilingDecomposition {
        let mut classes: Vec<TilingClass> = Vec::new();
        let mut lookup: HashMap<&Fingerprint, usize> = HashMap::new();
        for (cell, fp) in self.fingerprints.iter().enumerate() {
            if fp.is_empty() {
                continue;
            }
            let n = *lookup.entry(fp).or_insert_with(|| {
                classes.push(TilingClass {
                    cells: Vec::new(),
                    offsets: fp.clone(),
                });
                classes.len() - 1
            });
            classes[n].cells.push(cell);
        }
        TilingDecomposition {
            grid: self.grid,
            classes,
        }
    }

    /// Largest fingerprint cardinality.
    pub fn k_level(&self) -> usize {
        self.fingerprints.iter().map(|fp| fp.len()).max().unwrap_or(0)
    }

    /// Union of all fingerprints.
    pub fn offsets_union(&self) -> BTreeSet<LatticePoint> {
        self.fingerprints.iter().flatten().cloned().collect()
    }

    /// True when every cell has exactly `k` offsets.
    pub fn is_multitile_at(&self, k: usize) -> bool {
        self.fingerprints.iter().all(|fp| fp.len() == k)
    }

    /// Enlarges the spectrum to a multi-tile of level `k` over the whole
    /// fundamental domain.
    ///
    /// Offsets are added per class of the tiling decomposition (empty cells
    /// forming one extra class), smallest first in
    /// [`LatticePoint::completion_cmp`] order, so the complexity index grows
    /// by at most one.
    pub fn complete_to_multitile(&self, k: usize) -> Result<RasterSpectrum> {
        let current = self.k_level();
        if k < current {
            return Err(Error::LevelBelowMaximum {
                requested: k,
                current,
            });
        }
        let dim = self.dim();
        let mut fps = self.fingerprints.clone();
        let dec = self.tiling_decomposition();
        let mut groups: Vec<(Vec<usize>, Fingerprint)> = dec
            .classes
            .into_iter()
            .map(|c| (c.cells, c.offsets))
            .collect();
        let empty: Vec<usize> = (0..fps.len()).filter(|&i| fps[i].is_empty()).collect();
        if !empty.is_empty() {
            groups.push((empty, Fingerprint::new()));
        }
        for (cells, mut fp) in groups {
            let mut radius = 0;
            while fp.len() < k {
                for cand in shell(dim, radius) {
                    if fp.len() == k {
                        break;
                    }
                    if !fp.contains(&cand) {
                        fp.insert(cand);
                    }
                }
                radius += 1;
            }
            for c in cells {
                fps[c] = fp.clone();
            }
        }
        Ok(Self::from_fingerprints(dim, self.grid.size, fps))
    }
}

fn max_offset(fps: &[Fingerprint]) -> i64 {
    fps.iter()
        .flatten()
        .map(|l| l.sup_norm())
        .max()
        .unwrap_or(0)
}

/// Either representation of a spectrum.
#[derive(Debug, Clone, PartialEq)]
pub enum Spectrum {
    MultiTile(MultiTileSpectrum),
    Raster(RasterSpectrum),
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        match self {
            Spectrum::MultiTile(s) => s.dim(),
            Spectrum::Raster(r) => r.dim(),
        }
    }

    /// Raster representation. A multi-tile spectrum needs no refinement and is
    /// returned on a single cell unless `grid` is given.
    pub fn to_raster(&self, grid: Option<usize>) -> Result<RasterSpectrum> {
        match (self, grid) {
            (Spectrum::MultiTile(s), g) => s.to_raster(g.unwrap_or(1)),
            (Spectrum::Raster(r), None) => Ok(r.clone()),
            (Spectrum::Raster(r), Some(g)) => r.on_grid(g),
        }
    }
}

/// One block `Q_n + B_n` of a tiling decomposition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TilingClass {
    /// Linear cell indices making up `Q_n`.
    pub cells: Vec<usize>,
    /// The shared offset set `B_n`.
    pub offsets: Fingerprint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TilingDecomposition {
    grid: Grid,
    classes: Vec<TilingClass>,
}

impl TilingDecomposition {
    /// Single-class decomposition of a multi-tile spectrum on the one-cell grid.
    pub fn from_multitile(spectrum: &MultiTileSpectrum) -> Self {
        Self {
            grid: Grid {
                dim: spectrum.dim(),
                size: 1,
            },
            classes: vec![TilingClass {
                cells: vec![0],
                offsets: spectrum.offsets().iter().cloned().collect(),
            }],
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn classes(&self) -> &[TilingClass] {
        &self.classes
    }

    /// The tiling complexity index `N`.
    pub fn complexity_index(&self) -> usize {
        self.classes.len()
    }

    /// Common size of the offset sets, if all classes agree.
    pub fn level(&self) -> Option<usize> {
        let first = self.classes.first()?.offsets.len();
        self.classes
            .iter()
            .all(|c| c.offsets.len() == first)
            .then_some(first)
    }

    /// Rebuilds the fingerprint map from the blocks.
    pub fn reassemble(&self) -> Vec<Fingerprint> {
        let mut fps = vec![Fingerprint::new(); self.grid.cell_count()];
        for class in &self.classes {
            for &c in &class.cells {
                fps[c].extend(class.offsets.iter().cloned());
            }
        }
        fps
    }
}

/// Scalar boundary data of a compact spectrum with Ahlfors-regular boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryGeometry {
    pub dim: usize,
    /// Lebesgue measure `|Ω|`.
    pub volume: f64,
    /// `(d-1)`-dimensional Hausdorff measure of `∂Ω`.
    pub surface: f64,
    /// Ahlfors regularity constant of the boundary.
    pub kappa: f64,
}

impl BoundaryGeometry {
    pub fn new(dim: usize, volume: f64, surface: f64, kappa: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "ambient dimension must be at least 1"));
        }
        for (name, v) in [("volume", volume), ("surface", surface), ("kappa", kappa)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("must be positive and finite, got {v}")));
            }
        }
        Ok(Self {
            dim,
            volume,
            surface,
            kappa,
        })
    }

    /// Cube side `ρ = (κ / C_d) · |Ω| / H^{d-1}(∂Ω)`.
    pub fn rho(&self) -> f64 {
        self.kappa / cover_constant(self.dim) * self.volume / self.surface
    }
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    // β_0 = 1, β_1 = 2, β_d = β_{d-2} · 2π / d
    let mut even = 1.0;
    let mut odd = 2.0;
    for d in 2..=dim {
        if d % 2 == 0 {
            even *= 2.0 * std::f64::consts::PI / d as f64;
        } else {
            odd *= 2.0 * std::f64::consts::PI / d as f64;
        }
    }
    if dim.is_multiple_of(2) {
        even
    } else {
        odd
    }
}

/// `C_d = 2 β_d (1 + sqrt(d-1))^2 11^d`.
pub fn cover_constant(dim: usize) -> f64 {
    let s = 1.0 + ((dim as f64) - 1.0).sqrt();
    2.0 * unit_ball_volume(dim) * s * s * 11f64.powi(dim as i32)
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverReport {
    pub rho: f64,
    /// Union of ρ-cubes on `ρ Z^d`; offsets are integer lattice coordinates.
    pub cover: MultiTileSpectrum,
    /// Number of cubes in the cover.
    pub cubes: usize,
    /// `2|Ω| / ρ^d`.
    pub cube_bound: f64,
    /// Whether `cubes <= cube_bound` held.
    pub within_bound: bool,
}

/// Computes ρ from the boundary geometry and the smallest union of ρ-cubes
/// covering the raster. The geometry is not cross-checked against the raster.
pub fn rho_and_cover(geom: &BoundaryGeometry, raster: &RasterSpectrum) -> Result<CoverReport> {
    let geom = BoundaryGeometry::new(geom.dim, geom.volume, geom.surface, geom.kappa)?;
    if geom.dim != raster.dim() {
        return Err(Error::DimensionMismatch {
            expected: geom.dim,
            found: raster.dim(),
        });
    }
    let rho = geom.rho();
    let cover = cover_at_scale(raster, rho)?;
    let cubes = cover.level();
    let cube_bound = 2.0 * geom.volume / rho.powi(geom.dim as i32);
    let within_bound = cubes as f64 <= cube_bound;
    if !within_bound {
        warn!("ρ-cover has {cubes} cubes, above 2|Ω|/ρ^d = {cube_bound:.3}; the raster is too coarse for this ρ");
    }
    Ok(CoverReport {
        rho,
        cover,
        cubes,
        cube_bound,
        within_bound,
    })
}

/// All cubes `[-ρ/2, ρ/2]^d + ρn`, `n ∈ Z^d`, meeting a raster cell of the
/// spectrum in a set of positive measure.
pub fn cover_at_scale(raster: &RasterSpectrum, rho: f64) -> Result<MultiTileSpectrum> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(invalid("rho", format!("must be positive, got {rho}")));
    }
    if raster.is_empty() {
        return Err(Error::Empty("cannot cover an empty spectrum"));
    }
    const TOUCH: f64 = 1e-9;
    let grid = raster.grid();
    let width = 1.0 / grid.size as f64;
    let mut boxes: Vec<Vec<(i64, i64)>> = Vec::new();
    let mut estimate = 0f64;
    for (cell, fp) in raster.fingerprint_slice().iter().enumerate() {
        if fp.is_empty() {
            continue;
        }
        let index = grid.unravel(cell);
        for l in fp {
            let ranges: Vec<(i64, i64)> = index
                .iter()
                .zip(l.coords())
                .map(|(&c, &o)| {
                    let lo = o as f64 - 0.5 + c as f64 * width;
                    let hi = lo + width;
                    let first = (lo / rho - 0.5 + TOUCH).floor() as i64 + 1;
                    let last = (hi / rho + 0.5 - TOUCH).ceil() as i64 - 1;
                    (first, last)
                })
                .collect();
            estimate += ranges
                .iter()
                .map(|(a, b)| (b - a + 1).max(0) as f64)
                .product::<f64>();
            if estimate > MAX_COVER_CUBES as f64 {
                return Err(Error::TooLarge {
                    what: "ρ-cover",
                    count: estimate,
                    limit: MAX_COVER_CUBES,
                });
            }
            boxes.push(ranges);
        }
    }
    let mut cubes = BTreeSet::new();
    for ranges in boxes {
        let mut n: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        if ranges.iter().any(|(a, b)| a > b) {
            continue;
        }
        'odometer: loop {
            cubes.insert(LatticePoint(n.clone()));
            for t in (0..n.len()).rev() {
                if n[t] < ranges[t].1 {
                    n[t] += 1;
                    continue 'odometer;
                }
                n[t] = ranges[t].0;
            }
            break;
        }
    }
    MultiTileSpectrum::with_scale(raster.dim(), cubes.into_iter().collect(), rho)
}
