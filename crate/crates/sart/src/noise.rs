//! Deterministic multiplicative + additive Gaussian noise.
//!
//! Each deviate is a pure function of (seed, stream, sample index), produced
//! by a counter-based hash, so noising is reproducible bit for bit and needs
//! no sequential generator state. The model applied to a field g is
//!
//! `out = g·(1 + p·N1) + p·additive_scale·max|g|·N2`
//!
//! with `N1`, `N2` independent standard normal deviates per sample.

use crate::error::{Result, SartError};
use crate::grid::{DataField, Image};

/// Noise model parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NoiseSpec {
    /// Relative level p (0.10 means 10% noise).
    pub percent: f64,
    /// Absolute-error magnitude as a fraction of max |g|.
    pub additive_scale: f64,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec { percent: 0.0, additive_scale: 0.01, seed: 0 }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.percent >= 0.0 && self.percent.is_finite()) {
            return Err(SartError::InvalidArgument(format!(
                "noise percent must be >= 0, got {}",
                self.percent
            )));
        }
        if !(self.additive_scale >= 0.0 && self.additive_scale.is_finite()) {
            return Err(SartError::InvalidArgument(format!(
                "additive_scale must be >= 0, got {}",
                self.additive_scale
            )));
        }
        Ok(())
    }
}

/// 64-bit finalizer with full avalanche (splitmix64 output stage).
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based hash of (seed, stream, index); uncorrelated across all three.
#[inline]
fn hash(seed: u64, stream: u64, index: u64) -> u64 {
    mix64(mix64(mix64(seed) ^ stream) ^ index)
}

/// Derive an independent seed for a sub-experiment (e.g. one antenna).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    hash(seed, 0xa5a5_a5a5_a5a5_a5a5, stream)
}

#[inline]
fn unit_open(bits: u64) -> f64 {
    // 53 uniform bits mapped into (0, 1]; never 0, so ln() is safe.
    ((bits >> 11) + 1) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

/// Standard normal deviate for (seed, stream, index) via Box-Muller.
pub fn gaussian(seed: u64, stream: u64, index: u64) -> f64 {
    let u1 = unit_open(hash(seed, stream.wrapping_mul(2), index));
    let u2 = unit_open(hash(seed, stream.wrapping_mul(2).wrapping_add(1), index));
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[inline]
fn perturb(v: f64, peak: f64, spec: &NoiseSpec, index: u64) -> f64 {
    let n1 = gaussian(spec.seed, 1, index);
    let n2 = gaussian(spec.seed, 2, index);
    v * (1.0 + spec.percent * n1) + spec.percent * spec.additive_scale * peak * n2
}

/// Apply the noise model to circle-average data.
pub fn add_noise(data: &DataField, spec: &NoiseSpec) -> Result<DataField> {
    spec.validate()?;
    if spec.percent == 0.0 {
        return Ok(data.clone());
    }
    let peak = data.max_abs();
    let mut out = data.clone();
    for (k, v) in out.values.iter_mut().enumerate() {
        *v = perturb(*v, peak, spec, k as u64);
    }
    Ok(out)
}

/// Apply the same noise model to an image (used on directly computed even
/// parts in the multi-antenna experiments).
pub fn add_noise_image(img: &Image, spec: &NoiseSpec) -> Result<Image> {
    spec.validate()?;
    if spec.percent == 0.0 {
        return Ok(img.clone());
    }
    let peak = img.max_abs();
    let mut out = img.clone();
    for (k, v) in out.values.iter_mut().enumerate() {
        *v = perturb(*v, peak, spec, k as u64);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DataGrid;

    #[test]
    fn zero_percent_is_identity() {
        let g = DataGrid::new(8, 8, 1.0, 1.0, 0.0).unwrap();
        let d = DataField::from_fn(g, |x, r| x * r);
        let spec = NoiseSpec { percent: 0.0, additive_scale: 0.5, seed: 7 };
        assert_eq!(add_noise(&d, &spec).unwrap().values, d.values);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let g = DataGrid::new(16, 16, 1.0, 1.0, 0.0).unwrap();
        let d = DataField::from_fn(g, |x, r| (x - r).sin());
        let spec = NoiseSpec { percent: 0.2, additive_scale: 0.01, seed: 42 };
        let a = add_noise(&d, &spec).unwrap();
        let b = add_noise(&d, &spec).unwrap();
        assert_eq!(a.values, b.values);
        let other = add_noise(&d, &NoiseSpec { seed: 43, ..spec }).unwrap();
        assert_ne!(a.values, other.values);
    }

    #[test]
    fn law_of_large_numbers_on_constant_field() {
        // p = 0.10, no additive term, g = 1: mean near 1, std near 0.1.
        let n = 1_000_000usize;
        let spec = NoiseSpec { percent: 0.10, additive_scale: 0.0, seed: 1 };
        let mut sum = 0.0;
        let mut sq = 0.0;
        for k in 0..n {
            let v = perturb(1.0, 1.0, &spec, k as u64);
            sum += v;
            sq += v * v;
        }
        let mean = sum / n as f64;
        let std = (sq / n as f64 - mean * mean).sqrt();
        assert!((0.999..=1.001).contains(&mean), "mean {mean}");
        assert!((0.099..=0.101).contains(&std), "std {std}");
    }

    #[test]
    fn streams_are_uncorrelated() {
        let n = 200_000;
        let mut dot = 0.0;
        for k in 0..n {
            dot += gaussian(5, 1, k) * gaussian(5, 2, k);
        }
        assert!((dot / n as f64).abs() < 0.01);
    }

    #[test]
    fn rejects_negative_parameters() {
        let g = DataGrid::new(4, 4, 1.0, 1.0, 0.0).unwrap();
        let d = DataField::zeros(g);
        assert!(add_noise(&d, &NoiseSpec { percent: -0.1, ..Default::default() }).is_err());
        assert!(
            add_noise(&d, &NoiseSpec { additive_scale: -1.0, ..Default::default() }).is_err()
        );
    }
}
