//! Zak matrices, fiber-wise frame verification and the sample-count bounds.

mod bounds;
mod frame;
mod zak;

pub use bounds::{
    bernstein_tail, sample_count_cor2, sample_count_general, sample_count_ktile, sample_count_thm1,
    BernsteinTail, GeneralSampleCount, SampleCount, SIMULABLE_LIMIT,
};
pub use frame::{
    net_resolution, verify_decomposition, verify_frame, verify_frame_unchecked, FiberEigenvalues,
    FrameReport, GridPolicy, NetResolution, DEFAULT_K_INFLATION, MAX_FIBERS,
    ORTHONORMALITY_TOL,
};
pub use zak::{extreme_eigenvalues, gram_t, multitile_fast_t, zak_matrix};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// `m` points of the closed fundamental cell; the sampling set is
/// `X + (1/ρ) Z^d` after rescaling by the period scale `ρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingPattern {
    dim: usize,
    points: Vec<Vec<f64>>,
    #[serde(default = "unit_scale")]
    scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

fn unit_scale() -> f64 {
    1.0
}

impl SamplingPattern {
    pub fn new(dim: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        let p = Self {
            dim,
            points,
            scale: 1.0,
            seed: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// `m` i.i.d. uniform points on `[-1/2, 1/2)^d` from a ChaCha8 stream
    /// seeded with `seed`.
    pub fn random(dim: usize, m: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = (0..m)
            .map(|_| (0..dim).map(|_| rng.random::<f64>() - 0.5).collect())
            .collect();
        let mut p = Self::new(dim, points)?;
        p.seed = Some(seed);
        Ok(p)
    }

    pub fn with_scale(mut self, scale: f64) -> Result<Self> {
        self.scale = scale;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(invalid("dim", "ambient dimension must be at least 1"));
        }
        if self.points.is_empty() {
            return Err(Error::Empty("sampling pattern needs at least one point"));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(invalid("scale", format!("must be positive, got {}", self.scale)));
        }
        for p in &self.points {
            if p.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: p.len(),
                });
            }
            if p.iter().any(|v| !(-0.5..=0.5).contains(v)) {
                return Err(invalid(
                    "points",
                    format!("{p:?} lies outside the fundamental cell [-1/2, 1/2]^d"),
                ));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Number of points `m`.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_patterns_are_reproducible() {
        let a = SamplingPattern::random(2, 10, 42).unwrap();
        let b = SamplingPattern::random(2, 10, 42).unwrap();
        let c = SamplingPattern::random(2, 10, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.seed(), Some(42));
        assert!(a.points().iter().flatten().all(|v| (-0.5..0.5).contains(v)));
    }

    #[test]
    fn rejects_points_outside_cell() {
        assert!(SamplingPattern::new(1, vec![vec![0.6]]).is_err());
        assert!(SamplingPattern::new(1, vec![vec![0.5], vec![-0.5]]).is_ok());
        assert!(SamplingPattern::new(2, vec![vec![0.1]]).is_err());
        assert!(SamplingPattern::new(1, vec![]).is_err());
    }

    #[test]
    fn json_defaults() {
        let p: SamplingPattern = serde_json::from_str(r#"{"dim":1,"points":[[-0.25],[0.25]]}"#).unwrap();
        assert_eq!(p.scale(), 1.0);
        assert!(serde_json::from_str::<SamplingPattern>(r#"{"dim":1,"points":[[0]],"bogus":1}"#).is_err());
    }
}
