//! Comparison metrics turning side-by-side images into numbers: relative
//! L² and max errors, plateau means over disc interiors, and the
//! mirror-suppression ratio used by the multi-track experiments.

use crate::error::{Result, SartError};
use crate::grid::{Disc, Image, PhantomSpec};

/// Relative L² error `||a - b|| / ||b||`. Returns 0 when both are zero
/// and infinity when only the reference `b` is zero.
pub fn l2_relative(a: &Image, b: &Image) -> Result<f64> {
    ensure_same_grid(a, b)?;
    let mut err = 0.0f64;
    let mut norm = 0.0f64;
    for (x, y) in a.values.iter().zip(&b.values) {
        err += (x - y) * (x - y);
        norm += y * y;
    }
    Ok(ratio(err.sqrt(), norm.sqrt()))
}

/// Max absolute difference over the grid.
pub fn linf(a: &Image, b: &Image) -> Result<f64> {
    ensure_same_grid(a, b)?;
    Ok(a.values
        .iter()
        .zip(&b.values)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs())))
}

/// Summary produced by [`compare`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareReport {
    pub l2_relative: f64,
    pub linf: f64,
    /// Number of samples that entered the comparison.
    pub n_samples: usize,
}

/// Compare two images, optionally restricted to samples where `mask` is
/// nonzero. The mask must share the grid.
pub fn compare(a: &Image, b: &Image, mask: Option<&Image>) -> Result<CompareReport> {
    ensure_same_grid(a, b)?;
    if let Some(m) = mask {
        ensure_same_grid(a, m)?;
    }
    let mut err = 0.0f64;
    let mut norm = 0.0f64;
    let mut peak = 0.0f64;
    let mut n = 0usize;
    for (i, (x, y)) in a.values.iter().zip(&b.values).enumerate() {
        if let Some(m) = mask {
            if m.values[i] == 0.0 {
                continue;
            }
        }
        err += (x - y) * (x - y);
        norm += y * y;
        peak = peak.max((x - y).abs());
        n += 1;
    }
    Ok(CompareReport {
        l2_relative: ratio(err.sqrt(), norm.sqrt()),
        linf: peak,
        n_samples: n,
    })
}

/// Mean image value over a disc interior eroded by `erode_px` pixels
/// (erosion in units of the smaller grid spacing). Errors when the eroded
/// region contains no samples.
pub fn plateau_amplitude(img: &Image, disc: &Disc, erode_px: f64) -> Result<f64> {
    let g = &img.grid;
    let r_eff = disc.radius - erode_px * g.dx.min(g.dy);
    if r_eff <= 0.0 {
        return Err(SartError::InvalidArgument(format!(
            "erosion by {erode_px} px empties a disc of radius {}",
            disc.radius
        )));
    }
    let mut sum = 0.0f64;
    let mut n = 0usize;
    for j in 0..g.ny {
        let y = g.y(j);
        for i in 0..g.nx {
            let x = g.x(i);
            if (x - disc.cx).hypot(y - disc.cy) <= r_eff {
                sum += img.values[g.idx(i, j)];
                n += 1;
            }
        }
    }
    if n == 0 {
        return Err(SartError::InvalidArgument(
            "eroded disc contains no grid samples".into(),
        ));
    }
    Ok(sum / n as f64)
}

/// Ratio of the max magnitude over the mirrored disc regions (discs
/// reflected about y = 0) to the max magnitude over the true disc
/// regions. Small values mean the mirror artifact is suppressed.
pub fn mirror_suppression_ratio(img: &Image, phantom: &PhantomSpec) -> Result<f64> {
    if phantom.discs.is_empty() {
        return Err(SartError::InvalidArgument("phantom has no discs".into()));
    }
    let g = &img.grid;
    let mut true_max = 0.0f64;
    let mut mirror_max = 0.0f64;
    let mut true_hit = false;
    let mut mirror_hit = false;
    for j in 0..g.ny {
        let y = g.y(j);
        for i in 0..g.nx {
            let x = g.x(i);
            let v = img.values[g.idx(i, j)].abs();
            for d in &phantom.discs {
                if (x - d.cx).hypot(y - d.cy) <= d.radius {
                    true_max = true_max.max(v);
                    true_hit = true;
                }
                if (x - d.cx).hypot(y + d.cy) <= d.radius {
                    mirror_max = mirror_max.max(v);
                    mirror_hit = true;
                }
            }
        }
    }
    if !true_hit || !mirror_hit {
        return Err(SartError::InvalidArgument(
            "disc or mirrored disc region lies outside the image grid".into(),
        ));
    }
    Ok(ratio(mirror_max, true_max))
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

fn ensure_same_grid(a: &Image, b: &Image) -> Result<()> {
    if a.grid != b.grid {
        return Err(SartError::GridMismatch(
            "metric inputs are on different grids".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ImageGrid;

    fn grid() -> ImageGrid {
        ImageGrid::new(32, 32, 1.0, 1.0, -16.0, -16.0).unwrap()
    }

    #[test]
    fn identical_images_have_zero_error() {
        let img = Image::from_fn(grid(), |x, y| x - 2.0 * y);
        assert_eq!(l2_relative(&img, &img).unwrap(), 0.0);
        assert_eq!(linf(&img, &img).unwrap(), 0.0);
    }

    #[test]
    fn scaling_shows_up_as_relative_error() {
        let img = Image::from_fn(grid(), |x, y| (x * 0.2).sin() + y);
        let mut scaled = img.clone();
        for v in scaled.values.iter_mut() {
            *v *= 1.25;
        }
        let rel = l2_relative(&scaled, &img).unwrap();
        assert!((rel - 0.25).abs() < 1e-12, "rel = {rel}");
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let a = Image::zeros(grid());
        let b = Image::zeros(ImageGrid::new(32, 32, 1.0, 1.0, 0.0, 0.0).unwrap());
        assert!(l2_relative(&a, &b).is_err());
    }

    #[test]
    fn zero_reference_yields_infinite_ratio() {
        let zero = Image::zeros(grid());
        let mut one = Image::zeros(grid());
        one.values[0] = 1.0;
        assert_eq!(l2_relative(&zero, &zero).unwrap(), 0.0);
        assert!(l2_relative(&one, &zero).unwrap().is_infinite());
    }

    #[test]
    fn mask_limits_the_comparison() {
        let a = Image::from_fn(grid(), |x, _| x);
        let mut b = a.clone();
        // Perturb only the left half; mask out exactly that half.
        let g = a.grid.clone();
        let mut mask = Image::zeros(g.clone());
        for j in 0..g.ny {
            for i in 0..g.nx {
                if g.x(i) < 0.0 {
                    b.values[g.idx(i, j)] += 5.0;
                } else {
                    mask.values[g.idx(i, j)] = 1.0;
                }
            }
        }
        let report = compare(&b, &a, Some(&mask)).unwrap();
        assert_eq!(report.linf, 0.0);
        assert_eq!(report.n_samples, 16 * 32);
        let full = compare(&b, &a, None).unwrap();
        assert_eq!(full.linf, 5.0);
    }

    #[test]
    fn plateau_means_the_disc_interior() {
        let disc = Disc { cx: 0.0, cy: 0.0, radius: 8.0, amplitude: 3.0 };
        let img = Image::from_fn(grid(), |x, y| {
            if x.hypot(y) <= 8.0 {
                3.0
            } else {
                -50.0
            }
        });
        let amp = plateau_amplitude(&img, &disc, 1.0).unwrap();
        assert!((amp - 3.0).abs() < 1e-12);
        assert!(plateau_amplitude(&img, &disc, 9.0).is_err());
    }

    #[test]
    fn mirror_ratio_detects_suppression() {
        let spec = PhantomSpec {
            discs: vec![Disc { cx: 2.0, cy: 6.0, radius: 3.0, amplitude: 1.0 }],
        };
        let img = Image::from_fn(grid(), |x, y| {
            if x.hypot(y - 6.0) < 4.0 {
                1.0
            } else if x.hypot(y + 6.0) < 4.0 {
                0.125
            } else {
                0.0
            }
        });
        let r = mirror_suppression_ratio(&img, &spec).unwrap();
        assert!((r - 0.125).abs() < 1e-12, "r = {r}");
    }
}
