//! JSON documents for spectra, generator sets, sampling patterns, signals and
//! samples.
//!
//! Spectra:
//!
//! ```json
//! {"dim": 1, "type": "multitile", "scale": 1.0, "offsets": [[0], [1]]}
//! {"dim": 1, "type": "raster", "grid": 2, "cells": [{"index": [0], "offsets": [[0], [1]]}]}
//! ```
//!
//! Generators, each with a base frequency and an `"indicator"` or raster profile:
//!
//! ```json
//! {"dim": 1, "generators": [
//!   {"base_freq": [0], "profile": "indicator"},
//!   {"base_freq": [1], "profile": {"grid": 2, "entries": [{"omega_index": [0], "offset": [0], "re": 1.0, "im": 0.0}]}}
//! ]}
//! ```
//!
//! Signals and samples are arrays of `{indices, re, im}`. For a signal the
//! indices are the cell index followed by the offset; for samples they are the
//! point number `r` followed by the shift `ℓ'`.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{FrequencyProfile, Generator, GeneratorSet, RasterProfile};
use crate::lattice::{Grid, LatticePoint};
use crate::signal::{DiscreteSignal, SampleSet};
use crate::spectrum::{MultiTileSpectrum, RasterSpectrum, Spectrum};
use crate::verify::SamplingPattern;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum SpectrumDoc {
    Multitile {
        dim: usize,
        #[serde(default = "one")]
        scale: f64,
        offsets: Vec<Vec<i64>>,
    },
    Raster {
        dim: usize,
        grid: usize,
        cells: Vec<CellDoc>,
    },
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellDoc {
    pub index: Vec<usize>,
    pub offsets: Vec<Vec<i64>>,
}

impl SpectrumDoc {
    pub fn into_spectrum(self) -> Result<Spectrum> {
        match self {
            SpectrumDoc::Multitile { dim, scale, offsets } => Ok(Spectrum::MultiTile(
                MultiTileSpectrum::with_scale(dim, offsets.into_iter().map(LatticePoint).collect(), scale)?,
            )),
            SpectrumDoc::Raster { dim, grid, cells } => {
                Ok(Spectrum::Raster(RasterSpectrum::from_cells(
                    dim,
                    grid,
                    cells
                        .into_iter()
                        .map(|c| (c.index, c.offsets.into_iter().map(LatticePoint).collect())),
                )?))
            }
        }
    }

    pub fn from_spectrum(s: &Spectrum) -> Self {
        match s {
            Spectrum::MultiTile(m) => SpectrumDoc::Multitile {
                dim: m.dim(),
                scale: m.scale(),
                offsets: m.offsets().iter().map(|l| l.0.clone()).collect(),
            },
            Spectrum::Raster(r) => Self::from_raster(r),
        }
    }

    /// Raster document listing nonempty cells only.
    pub fn from_raster(r: &RasterSpectrum) -> Self {
        let g = r.grid();
        let cells = r
            .fingerprint_slice()
            .iter()
            .enumerate()
            .filter(|(_, fp)| !fp.is_empty())
            .map(|(c, fp)| CellDoc {
                index: g.unravel(c),
                offsets: fp.iter().map(|l| l.0.clone()).collect(),
            })
            .collect();
        SpectrumDoc::Raster {
            dim: g.dim,
            grid: g.size,
            cells,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSetDoc {
    pub dim: usize,
    pub generators: Vec<GeneratorDoc>,
    #[serde(default = "yes")]
    pub time_periodization_asserted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorDoc {
    pub base_freq: Vec<i64>,
    pub profile: ProfileDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileDoc {
    Named(String),
    Raster(RasterProfileDoc),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RasterProfileDoc {
    pub grid: usize,
    pub entries: Vec<ProfileEntryDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileEntryDoc {
    pub omega_index: Vec<usize>,
    pub offset: Vec<i64>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl GeneratorSetDoc {
    pub fn into_generators(self) -> Result<GeneratorSet> {
        let dim = self.dim;
        let members = self
            .generators
            .into_iter()
            .map(|g| {
                let profile = match g.profile {
                    ProfileDoc::Named(name) if name == "indicator" => FrequencyProfile::Indicator,
                    ProfileDoc::Named(name) => {
                        return Err(Error::Schema(format!("unknown profile `{name}`")))
                    }
                    ProfileDoc::Raster(r) => FrequencyProfile::Raster(RasterProfile::from_entries(
                        dim,
                        r.grid,
                        r.entries
                            .into_iter()
                            .map(|e| (e.omega_index, LatticePoint(e.offset), Complex64::new(e.re, e.im))),
                    )?),
                };
                Ok(Generator::new(LatticePoint(g.base_freq), profile))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut set = GeneratorSet::new(dim, members)?;
        set.time_periodization_asserted = self.time_periodization_asserted;
        Ok(set)
    }

    pub fn from_generators(set: &GeneratorSet) -> Self {
        let generators = set
            .members()
            .iter()
            .map(|g| GeneratorDoc {
                base_freq: g.base_freq.0.clone(),
                profile: match &g.profile {
                    FrequencyProfile::Indicator => ProfileDoc::Named("indicator".into()),
                    FrequencyProfile::Raster(r) => {
                        let grid = r.grid();
                        let entries = (0..grid.cell_count())
                            .flat_map(|c| {
                                let idx = grid.unravel(c);
                                r.cell_values(c).iter().map(move |(l, v)| ProfileEntryDoc {
                                    omega_index: idx.clone(),
                                    offset: l.0.clone(),
                                    re: v.re,
                                    im: v.im,
                                })
                            })
                            .collect();
                        ProfileDoc::Raster(RasterProfileDoc {
                            grid: grid.size,
                            entries,
                        })
                    }
                },
            })
            .collect();
        Self {
            dim: set.dim(),
            generators,
            time_periodization_asserted: set.time_periodization_asserted,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValueDoc {
    pub indices: Vec<i64>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalDoc {
    pub dim: usize,
    pub grid: usize,
    pub coefficients: Vec<ValueDoc>,
}

impl SignalDoc {
    pub fn from_signal(f: &DiscreteSignal) -> Self {
        let coefficients = f
            .entries()
            .map(|(cell, l, v)| ValueDoc {
                indices: cell.iter().map(|&c| c as i64).chain(l.0.iter().copied()).collect(),
                re: v.re,
                im: v.im,
            })
            .collect();
        Self {
            dim: f.dim(),
            grid: f.grid().size,
            coefficients,
        }
    }

    pub fn into_signal(self) -> Result<DiscreteSignal> {
        let mut f = DiscreteSignal::zeros(self.dim, self.grid)?;
        for e in self.coefficients {
            if e.indices.len() != 2 * self.dim {
                return Err(Error::Schema(format!(
                    "signal entry needs {} indices (cell then offset), got {}",
                    2 * self.dim,
                    e.indices.len()
                )));
            }
            let (cell, offset) = e.indices.split_at(self.dim);
            let cell = to_cell(cell)?;
            f.set(&cell, LatticePoint(offset.to_vec()), Complex64::new(e.re, e.im))?;
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSetDoc {
    pub grid: usize,
    pub pattern: SamplingPattern,
    pub values: Vec<ValueDoc>,
}

impl SampleSetDoc {
    pub fn from_samples(s: &SampleSet) -> Self {
        let g = s.grid();
        let n = g.cell_count();
        let values = s
            .values()
            .iter()
            .enumerate()
            .map(|(i, v)| ValueDoc {
                indices: std::iter::once((i / n) as i64)
                    .chain(g.unravel(i % n).into_iter().map(|c| c as i64))
                    .collect(),
                re: v.re,
                im: v.im,
            })
            .collect();
        Self {
            grid: g.size,
            pattern: s.pattern().clone(),
            values,
        }
    }

    pub fn into_samples(self) -> Result<SampleSet> {
        self.pattern.validate()?;
        let g = Grid::new(self.pattern.dim(), self.grid)?;
        let n = g.cell_count();
        let m = self.pattern.len();
        let mut values = vec![Complex64::default(); m * n];
        let mut filled = vec![false; m * n];
        for e in self.values {
            if e.indices.len() != g.dim + 1 {
                return Err(Error::Schema(format!(
                    "sample entry needs {} indices (point then shift), got {}",
                    g.dim + 1,
                    e.indices.len()
                )));
            }
            let r = usize::try_from(e.indices[0])
                .ok()
                .filter(|&r| r < m)
                .ok_or_else(|| Error::Schema(format!("sample point {} out of range", e.indices[0])))?;
            let shift = to_cell(&e.indices[1..])?;
            g.check_index(&shift)?;
            let at = r * n + g.ravel(&shift);
            if filled[at] {
                return Err(Error::Schema(format!("duplicate sample {:?}", e.indices)));
            }
            filled[at] = true;
            values[at] = Complex64::new(e.re, e.im);
        }
        if let Some(missing) = filled.iter().position(|f| !f) {
            return Err(Error::Schema(format!(
                "missing sample for point {} shift {:?}",
                missing / n,
                g.unravel(missing % n)
            )));
        }
        SampleSet::new(self.grid, self.pattern, values)
    }
}

fn to_cell(v: &[i64]) -> Result<Vec<usize>> {
    v.iter()
        .map(|&c| usize::try_from(c).map_err(|_| Error::Schema(format!("negative cell index {c}"))))
        .collect()
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::File {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| Error::Document {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, serde_json::to_string_pretty(value)? + "\n").map_err(|source| Error::File {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_spectrum(path: impl AsRef<Path>) -> Result<Spectrum> {
    read_json::<SpectrumDoc>(path)?.into_spectrum()
}

pub fn load_generators(path: impl AsRef<Path>) -> Result<GeneratorSet> {
    read_json::<GeneratorSetDoc>(path)?.into_generators()
}

pub fn load_pattern(path: impl AsRef<Path>) -> Result<SamplingPattern> {
    let p: SamplingPattern = read_json(path)?;
    p.validate()?;
    Ok(p)
}

pub fn load_signal(path: impl AsRef<Path>) -> Result<DiscreteSignal> {
    read_json::<SignalDoc>(path)?.into_signal()
}

pub fn load_samples(path: impl AsRef<Path>) -> Result<SampleSet> {
    read_json::<SampleSetDoc>(path)?.into_samples()
}
