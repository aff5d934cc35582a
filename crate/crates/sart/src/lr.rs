//! Left-right ambiguity resolution from several parallel tracks.
//!
//! One track on y = 0 only determines the even part of the scene about
//! that line: `fe_b(x,y) = (f(x, y+b) + f(x, -y+b))/2` for a track on
//! y = b, stored in coordinates centered on the track (so every stored
//! even image is symmetric about its own y = 0 row). Combining even
//! images from tracks at different offsets resolves the ambiguity: for
//! each column DFT bin, `sin(b eta) fhat(eta) = -i [fe_b - fe_0(. - b)]^`
//! turns the b-offset pair into an equation for the full spectrum.
//!
//! All row shifts are circular; inputs must keep a guard band of zeros
//! at the y-wrap boundary for the circular shifts to mean what the
//! continuum ones do. Resolver grids have an even row count with
//! `y0 = -(ny/2) dy`, putting y = 0 on a sample row and making the
//! mirror `j -> (N - j) mod N` exact.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Result, SartError};
use crate::fbp::{invert_fbp, ContinuationMode};
use crate::forward::{default_n_angles, forward_about};
use crate::grid::{DataField, DataGrid, Image, ImageGrid};
use crate::noise::{add_noise, add_noise_image, derive_seed, NoiseSpec};
use crate::spectral::{signed_freq, SecondAxis, SpectralField};

/// Track offsets in physical units, sorted ascending; the reference
/// track must sit at 0 and every offset must be a whole number of rows.
#[derive(Debug, Clone, PartialEq)]
pub struct AntennaArray {
    positions: Vec<f64>,
}

impl AntennaArray {
    /// Validate and canonicalize (sort) a set of track offsets against a
    /// row spacing `dy`. Order of the input does not matter.
    pub fn new(mut positions: Vec<f64>, dy: f64) -> Result<Self> {
        if positions.len() < 2 {
            return Err(SartError::InvalidArgument(
                "need at least two antenna positions".into(),
            ));
        }
        if !(dy > 0.0) || !dy.is_finite() {
            return Err(SartError::InvalidArgument(format!(
                "row spacing must be positive, got {dy}"
            )));
        }
        positions.sort_by(|a, b| a.partial_cmp(b).expect("positions must be comparable"));
        for &p in &positions {
            if !p.is_finite() || p < 0.0 {
                return Err(SartError::InvalidArgument(format!(
                    "antenna positions must be finite and nonnegative, got {p}"
                )));
            }
            let rows = p / dy;
            if (rows - rows.round()).abs() > 1e-6 {
                return Err(SartError::InvalidArgument(format!(
                    "antenna position {p} is not a whole number of rows (dy = {dy})"
                )));
            }
        }
        if positions[0] != 0.0 {
            return Err(SartError::InvalidArgument(format!(
                "the reference antenna must sit at 0, got smallest position {}",
                positions[0]
            )));
        }
        for w in positions.windows(2) {
            if w[1] - w[0] < 0.5 * dy {
                return Err(SartError::InvalidArgument(format!(
                    "antenna positions must be distinct, got {} and {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(AntennaArray { positions })
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn max_offset(&self) -> f64 {
        *self.positions.last().expect("nonempty by construction")
    }
}

/// Even images keyed by track offset, all on one resolver grid, each
/// symmetric about its own y = 0 row (circularly: row j equals row
/// (N-j) mod N).
#[derive(Debug, Clone)]
pub struct EvenImageSet {
    offsets: Vec<f64>,
    images: Vec<Image>,
}

impl EvenImageSet {
    pub fn new(mut entries: Vec<(f64, Image)>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(SartError::InvalidArgument(
                "need even images for at least two offsets".into(),
            ));
        }
        entries.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("offsets must be comparable"));
        let grid = entries[0].1.grid;
        check_resolver_grid(&grid)?;
        if entries[0].0 != 0.0 {
            return Err(SartError::InvalidArgument(format!(
                "the reference offset must be 0, got smallest offset {}",
                entries[0].0
            )));
        }
        for w in entries.windows(2) {
            if w[1].0 - w[0].0 < 0.5 * grid.dy {
                return Err(SartError::InvalidArgument(format!(
                    "offsets must be distinct, got {} and {}",
                    w[0].0, w[1].0
                )));
            }
        }
        for (b, img) in &entries {
            if img.grid != grid {
                return Err(SartError::GridMismatch(
                    "all even images must share one grid".into(),
                ));
            }
            offset_rows(&grid, *b)?;
            img.ensure_finite("even image")?;
            let tol = 1e-9 * img.max_abs().max(1e-300);
            for j in 1..grid.ny {
                let jm = grid.ny - j;
                for i in 0..grid.nx {
                    let d = (img.values[grid.idx(i, j)] - img.values[grid.idx(i, jm)]).abs();
                    if d > tol {
                        return Err(SartError::InvalidArgument(format!(
                            "image for offset {b} is not even about its track (rows {j}/{jm} differ by {d})"
                        )));
                    }
                }
            }
        }
        let (offsets, images) = entries.into_iter().unzip();
        Ok(EvenImageSet { offsets, images })
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn images(&self) -> &[Image] {
        &self.images
    }

    pub fn grid(&self) -> &ImageGrid {
        &self.images[0].grid
    }

    pub fn image_for(&self, offset: f64) -> Option<&Image> {
        let dy = self.grid().dy;
        self.offsets
            .iter()
            .position(|&p| (p - offset).abs() < 0.5 * dy)
            .map(|k| &self.images[k])
    }
}

/// Regularization of the two-track formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizationSpec {
    /// Weight of the regularizer on the outer half of the band.
    pub epsilon: f64,
    /// Half the power of the cosine in the regularizer.
    pub cos_power_k: u32,
    /// Offset (0 or b) whose even image supplies the eta = 0 line.
    pub eta0_source: f64,
}

impl Default for RegularizationSpec {
    fn default() -> Self {
        RegularizationSpec { epsilon: 1e-2, cos_power_k: 2, eta0_source: 0.0 }
    }
}

impl RegularizationSpec {
    fn validate(&self, b: f64) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(SartError::InvalidArgument(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.cos_power_k < 1 {
            return Err(SartError::InvalidArgument(
                "cos_power_k must be at least 1".into(),
            ));
        }
        if self.eta0_source != 0.0 && (self.eta0_source - b).abs() > 1e-9 {
            return Err(SartError::InvalidArgument(format!(
                "eta0_source must be 0 or b = {b}, got {}",
                self.eta0_source
            )));
        }
        Ok(())
    }
}

/// Which track separations enter the many-track formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairingMode {
    /// All m(m-1)/2 pairwise separations.
    #[default]
    AllPairs,
    /// Only the m-1 separations from the reference track.
    ReferenceOnly,
}

fn check_resolver_grid(g: &ImageGrid) -> Result<()> {
    if g.ny < 4 || g.ny % 2 != 0 {
        return Err(SartError::InvalidGrid(format!(
            "resolver grids need an even row count >= 4, got {}",
            g.ny
        )));
    }
    let want = -((g.ny / 2) as f64) * g.dy;
    if (g.y0 - want).abs() > 1e-9 * g.dy {
        return Err(SartError::InvalidGrid(format!(
            "resolver grids need y0 = -(ny/2) dy = {want}, got {}",
            g.y0
        )));
    }
    Ok(())
}

/// Whole-row count of an offset, or an error if it is off-lattice.
fn offset_rows(g: &ImageGrid, b: f64) -> Result<i64> {
    if !b.is_finite() {
        return Err(SartError::InvalidArgument("offset must be finite".into()));
    }
    let rows = b / g.dy;
    if (rows - rows.round()).abs() > 1e-6 {
        return Err(SartError::InvalidArgument(format!(
            "offset {b} is not a whole number of rows (dy = {})",
            g.dy
        )));
    }
    Ok(rows.round() as i64)
}

/// Even part about the line y = b: `out(x, y) = (f(x, y+b) + f(x, -y+b))/2`
/// with out-of-grid reads as zero. Requires both read lattices to land on
/// rows: b and (b - 2 y0) must be whole numbers of rows.
pub fn even_part_about(img: &Image, b: f64) -> Result<Image> {
    let g = img.grid;
    let sb = offset_rows(&g, b)?;
    let refl = (b - 2.0 * g.y0) / g.dy;
    if (refl - refl.round()).abs() > 1e-6 {
        return Err(SartError::InvalidGrid(format!(
            "reflection about y = {b} does not land on rows (y0 = {}, dy = {})",
            g.y0, g.dy
        )));
    }
    let m0 = refl.round() as i64;
    let read = |i: usize, j: i64| -> f64 {
        if j < 0 || j >= g.ny as i64 {
            0.0
        } else {
            img.values[g.idx(i, j as usize)]
        }
    };
    let mut out = Image::zeros(g);
    for j in 0..g.ny {
        let jp = j as i64 + sb;
        let jm = m0 - j as i64;
        for i in 0..g.nx {
            out.values[g.idx(i, j)] = 0.5 * (read(i, jp) + read(i, jm));
        }
    }
    Ok(out)
}

/// Circular even projector about y = 0 on a resolver grid:
/// `out[j] = (v[j] + v[(N-j) mod N])/2`. Idempotent bit for bit on
/// already-even images.
pub fn even_part_circular(img: &Image) -> Result<Image> {
    let g = img.grid;
    check_resolver_grid(&g)?;
    let mut out = Image::zeros(g);
    for j in 0..g.ny {
        let jm = (g.ny - j) % g.ny;
        for i in 0..g.nx {
            out.values[g.idx(i, j)] =
                0.5 * (img.values[g.idx(i, j)] + img.values[g.idx(i, jm)]);
        }
    }
    Ok(out)
}

/// Row reflection `out(x, y) = f(x, -y)` with out-of-grid reads as zero.
/// Requires the reflected lattice to land on rows.
pub fn mirror_rows(img: &Image) -> Result<Image> {
    let g = img.grid;
    let refl = -2.0 * g.y0 / g.dy;
    if (refl - refl.round()).abs() > 1e-6 {
        return Err(SartError::InvalidGrid(format!(
            "reflection about y = 0 does not land on rows (y0 = {}, dy = {})",
            g.y0, g.dy
        )));
    }
    let m0 = refl.round() as i64;
    let mut out = Image::zeros(g);
    for j in 0..g.ny {
        let js = m0 - j as i64;
        if js < 0 || js >= g.ny as i64 {
            continue;
        }
        for i in 0..g.nx {
            out.values[g.idx(i, j)] = img.values[g.idx(i, js as usize)];
        }
    }
    Ok(out)
}

/// Row translation `out(x, y) = f(x, y-b)` with out-of-grid reads as
/// zero; b must be a whole number of rows.
pub fn shift_rows(img: &Image, b: f64) -> Result<Image> {
    let g = img.grid;
    let sb = offset_rows(&g, b)?;
    let mut out = Image::zeros(g);
    for j in 0..g.ny {
        let js = j as i64 - sb;
        if js < 0 || js >= g.ny as i64 {
            continue;
        }
        for i in 0..g.nx {
            out.values[g.idx(i, j)] = img.values[g.idx(i, js as usize)];
        }
    }
    Ok(out)
}

/// The sine-modulated column spectrum
/// `h_b(x, eta) = -i DFT_y[fe_b(x,y) - fe_0(x, y-b)](eta)`, the quantity
/// satisfying `h_b = sin(b eta) fhat` for consistent even images. The
/// shift is circular.
///
/// The returned field is mixed (x, eta): its first axis is the image
/// column lattice, not a frequency axis.
pub fn sine_modulated_spectrum(fe_b: &Image, fe_0: &Image, b: f64) -> Result<SpectralField> {
    let g = fe_b.grid;
    if fe_0.grid != g {
        return Err(SartError::GridMismatch(
            "even images must share one grid".into(),
        ));
    }
    check_resolver_grid(&g)?;
    let shift = offset_rows(&g, b)?;
    let n = g.ny;
    let d_eta = 2.0 * std::f64::consts::PI / (n as f64 * g.dy);
    let mut out = SpectralField::zeros(g.nx, g.dx, SecondAxis::Eta { n, d: d_eta });
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..g.nx {
        for (j, slot) in buf.iter_mut().enumerate() {
            let js = (j as i64 - shift).rem_euclid(n as i64) as usize;
            *slot = Complex64::new(
                fe_b.values[g.idx(i, j)] - fe_0.values[g.idx(i, js)],
                0.0,
            );
        }
        fft.process(&mut buf);
        for (m, v) in buf.iter().enumerate() {
            let k = out.idx(i, m);
            out.values[k] = Complex64::new(0.0, -1.0) * v;
        }
    }
    Ok(out)
}

/// Two-track resolver: per column and DFT bin,
/// `fhat = sin(b eta) h_b / (sin^2(b eta) + H(|eta| - pi/(2b)) eps
/// cos^2k(b eta))`, with the eta = 0 bin taken from the chosen even
/// image; inverse DFT, real part. Exact on spectra confined to
/// `|eta| <= pi/(2b)` and, as eps -> 0, on `|eta| < pi/b`.
pub fn resolve_two(
    fe_0: &Image,
    fe_b: &Image,
    b: f64,
    reg: &RegularizationSpec,
) -> Result<Image> {
    if !(b > 0.0) {
        return Err(SartError::InvalidArgument(format!(
            "track separation must be positive, got {b}"
        )));
    }
    reg.validate(b)?;
    let h = sine_modulated_spectrum(fe_b, fe_0, b)?;
    let g = fe_b.grid;
    let n = g.ny;
    let d_eta = 2.0 * std::f64::consts::PI / (n as f64 * g.dy);
    let eta0_img = if reg.eta0_source == 0.0 { fe_0 } else { fe_b };
    let threshold = std::f64::consts::PI / (2.0 * b);
    let mut planner = FftPlanner::new();
    let inv = planner.plan_fft_inverse(n);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut out = Image::zeros(g);
    for i in 0..g.nx {
        let dc: f64 = (0..n).map(|j| eta0_img.values[g.idx(i, j)]).sum();
        buf[0] = Complex64::new(dc, 0.0);
        for (m, slot) in buf.iter_mut().enumerate().skip(1) {
            let eta = signed_freq(m, n, d_eta);
            let s = (b * eta).sin();
            let c = (b * eta).cos();
            let heaviside = if eta.abs() > threshold { 1.0 } else { 0.0 };
            let den = s * s + heaviside * reg.epsilon * c.powi(2 * reg.cos_power_k as i32);
            *slot = h.at(i, m) * (s / den);
        }
        inv.process(&mut buf);
        for j in 0..n {
            out.values[g.idx(i, j)] = buf[j].re / n as f64;
        }
    }
    out.ensure_finite("resolved image")?;
    Ok(out)
}

/// Many-track resolver, exact when the separations share no sine zero:
/// `fhat = sum_k sin(b_k eta) h_k / sum_k sin^2(b_k eta)` per bin, with
/// the DC bin from the chosen even image and the Nyquist bin from the
/// reference image (both are exact there). Pairs not involving the
/// reference enter re-centered: the pair (i, j) identity is applied in
/// coordinates shifted by p_i and carried back by the phase
/// `exp(-i p_i eta)`.
pub fn resolve_many(
    fe_set: &EvenImageSet,
    pairing: PairingMode,
    eta0_source: f64,
) -> Result<Image> {
    let g = *fe_set.grid();
    let n = g.ny;
    let d_eta = 2.0 * std::f64::consts::PI / (n as f64 * g.dy);
    let offsets = fe_set.offsets();
    let eta0_img = fe_set.image_for(eta0_source).ok_or_else(|| {
        SartError::InvalidArgument(format!(
            "eta0 source offset {eta0_source} has no even image"
        ))
    })?;
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    match pairing {
        PairingMode::AllPairs => {
            for i in 0..offsets.len() {
                for j in i + 1..offsets.len() {
                    pairs.push((i, j));
                }
            }
        }
        PairingMode::ReferenceOnly => {
            for j in 1..offsets.len() {
                pairs.push((0, j));
            }
        }
    }
    // Per-pair tables: separation row count, sin(b eta), recentering phase.
    struct PairTables {
        low: usize,
        high: usize,
        shift: i64,
        sin_b: Vec<f64>,
        phase: Vec<Complex64>,
    }
    let tables: Vec<PairTables> = pairs
        .iter()
        .map(|&(i, j)| {
            let b = offsets[j] - offsets[i];
            let shift = offset_rows(&g, b)?;
            let p_low = offsets[i];
            let mut sin_b = vec![0.0; n];
            let mut phase = vec![Complex64::new(0.0, 0.0); n];
            for m in 0..n {
                let eta = signed_freq(m, n, d_eta);
                sin_b[m] = (b * eta).sin();
                phase[m] = Complex64::from_polar(1.0, -p_low * eta);
            }
            Ok(PairTables { low: i, high: j, shift, sin_b, phase })
        })
        .collect::<Result<_>>()?;
    // No common sine zero away from DC and Nyquist, else the formula
    // divides by zero.
    let mut dead_bins: Vec<usize> = Vec::new();
    for m in 1..n {
        if 2 * m == n {
            continue;
        }
        if tables.iter().all(|t| t.sin_b[m].abs() <= 1e-12) {
            dead_bins.push(m);
        }
    }
    if !dead_bins.is_empty() {
        return Err(SartError::InvalidArgument(format!(
            "every pair separation has sin(b eta) = 0 at eta bins {dead_bins:?}; add an antenna breaking the common zeros"
        )));
    }
    let images = fe_set.images();
    let fe_ref = &images[0];
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut num = vec![Complex64::new(0.0, 0.0); n];
    let mut den = vec![0.0f64; n];
    let mut out = Image::zeros(g);
    for i in 0..g.nx {
        num.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        den.iter_mut().for_each(|v| *v = 0.0);
        for t in &tables {
            let fe_low = &images[t.low];
            let fe_high = &images[t.high];
            for (j, slot) in buf.iter_mut().enumerate() {
                let js = (j as i64 - t.shift).rem_euclid(n as i64) as usize;
                *slot = Complex64::new(
                    fe_high.values[g.idx(i, j)] - fe_low.values[g.idx(i, js)],
                    0.0,
                );
            }
            fft.process(&mut buf);
            for m in 1..n {
                if 2 * m == n {
                    continue;
                }
                let h = Complex64::new(0.0, -1.0) * t.phase[m] * buf[m];
                num[m] += h * t.sin_b[m];
                den[m] += t.sin_b[m] * t.sin_b[m];
            }
        }
        let dc: f64 = (0..n).map(|j| eta0_img.values[g.idx(i, j)]).sum();
        buf[0] = Complex64::new(dc, 0.0);
        for m in 1..n {
            if 2 * m == n {
                let nyq: f64 = (0..n)
                    .map(|j| fe_ref.values[g.idx(i, j)] * if j % 2 == 0 { 1.0 } else { -1.0 })
                    .sum();
                buf[m] = Complex64::new(nyq, 0.0);
            } else {
                buf[m] = num[m] / den[m];
            }
        }
        inv.process(&mut buf);
        for j in 0..n {
            out.values[g.idx(i, j)] = buf[j].re / n as f64;
        }
    }
    out.ensure_finite("resolved image")?;
    Ok(out)
}

/// How the per-track even images are produced in [`lr_pipeline`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PipelineMode {
    /// Even parts of the phantom computed directly, then noised.
    Direct,
    /// Forward-project about each track, noise the data, invert with
    /// filtered backprojection (whose output about a track is exactly
    /// that track's even image).
    ViaRadon,
}

/// Resolver selection for the pipeline: the exact many-track formula by
/// default, or the regularized two-track formula when `two_set` is set
/// (requires exactly two antennas).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolverConfig {
    pub pairing: PairingMode,
    pub eta0_source: f64,
    pub two_set: Option<RegularizationSpec>,
}

impl Default for ResolverConfig {
    fn default() -> Self {
        ResolverConfig { pairing: PairingMode::AllPairs, eta0_source: 0.0, two_set: None }
    }
}

/// Resolved image plus per-stage intermediates.
#[derive(Debug, Clone)]
pub struct LrPipelineOutput {
    pub resolved: Image,
    /// Even images fed to the resolver, keyed by offset (noised).
    pub even_images: Vec<(f64, Image)>,
    /// Noised data per offset (via-radon mode only).
    pub data: Vec<(f64, DataField)>,
}

/// Full multi-track experiment: produce per-track even images (directly
/// or through the data domain), noise them (seed derived per antenna),
/// and resolve. Noise on direct-mode images is symmetrized about the
/// track, since a track's measurement only carries even content.
///
/// The phantom must leave a guard band of empty rows at least as wide as
/// the largest offset, so circular row shifts match the continuum ones.
pub fn lr_pipeline(
    phantom: &Image,
    antennas: &AntennaArray,
    noise: &NoiseSpec,
    mode: PipelineMode,
    resolver: &ResolverConfig,
) -> Result<LrPipelineOutput> {
    let g = phantom.grid;
    check_resolver_grid(&g)?;
    noise.validate()?;
    phantom.ensure_finite("phantom")?;
    if let Some((_, _, j_min, j_max)) = phantom.nonzero_bbox() {
        let guard_rows = j_min.min(g.ny - 1 - j_max) as f64;
        let needed = antennas.max_offset() / g.dy;
        if guard_rows < needed {
            return Err(SartError::InvalidArgument(format!(
                "phantom support reaches within {guard_rows} rows of the y-wrap boundary; need at least {needed} (the largest track offset) for circular shifts to be faithful"
            )));
        }
    }
    let mut even_images = Vec::with_capacity(antennas.len());
    let mut data_out = Vec::new();
    match mode {
        PipelineMode::Direct => {
            for (k, &p) in antennas.positions().iter().enumerate() {
                let fe = even_part_about(phantom, p)?;
                let spec = NoiseSpec { seed: derive_seed(noise.seed, k as u64), ..*noise };
                let noised = add_noise_image(&fe, &spec)?;
                even_images.push((p, even_part_circular(&noised)?));
            }
        }
        PipelineMode::ViaRadon => {
            let dgrid = pipeline_data_grid(&g, antennas.max_offset())?;
            let n_angles = default_n_angles(&g);
            for (k, &p) in antennas.positions().iter().enumerate() {
                let data = forward_about(phantom, &dgrid, n_angles, p)?;
                let spec = NoiseSpec { seed: derive_seed(noise.seed, k as u64), ..*noise };
                let noised = add_noise(&data, &spec)?;
                let fe = invert_fbp(&noised, &g, ContinuationMode::Approximate)?;
                even_images.push((p, even_part_circular(&fe)?));
                data_out.push((p, noised));
            }
        }
    }
    let set = EvenImageSet::new(even_images.clone())?;
    let resolved = match resolver.two_set {
        Some(reg) => {
            if antennas.len() != 2 {
                return Err(SartError::InvalidArgument(format!(
                    "the two-track resolver needs exactly 2 antennas, got {}",
                    antennas.len()
                )));
            }
            let b = antennas.positions()[1];
            resolve_two(&set.images()[0], &set.images()[1], b, &reg)?
        }
        None => resolve_many(&set, resolver.pairing, resolver.eta0_source)?,
    };
    Ok(LrPipelineOutput { resolved, even_images, data: data_out })
}

/// Data grid for the via-radon branch: tracks on the image's column
/// lattice, radii fine as rows and long enough for every circle through
/// the image about the highest track.
fn pipeline_data_grid(g: &ImageGrid, max_offset: f64) -> Result<DataGrid> {
    let x_span = g.x_max() - g.x0;
    let y_reach = g.y0.abs().max(g.y_max().abs()) + max_offset;
    let r_max = x_span.hypot(y_reach);
    let n_radius = (r_max / g.dy).ceil() as usize + 2;
    DataGrid::new(g.nx, n_radius, g.dx, g.dy, g.x0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolver_grid(nx: usize, ny: usize, d: f64) -> ImageGrid {
        ImageGrid::new(nx, ny, d, d, -(nx as f64) * d / 2.0, -((ny / 2) as f64) * d).unwrap()
    }

    fn hash_val(i: usize, j: usize, salt: u64) -> f64 {
        let mut z = (i as u64)
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .wrapping_add((j as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9))
            ^ salt;
        z ^= z >> 30;
        z = z.wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 27;
        (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    }

    /// Circularly consistent even image of `f` about offset `b`.
    fn circular_even(f: &Image, b: f64) -> Image {
        let g = f.grid;
        let s = (b / g.dy).round() as i64;
        let n = g.ny as i64;
        let mut out = Image::zeros(g);
        for j in 0..g.ny {
            let jp = (j as i64 + s).rem_euclid(n) as usize;
            let jm = (s - j as i64).rem_euclid(n) as usize;
            for i in 0..g.nx {
                out.values[g.idx(i, j)] =
                    0.5 * (f.values[g.idx(i, jp)] + f.values[g.idx(i, jm)]);
            }
        }
        out
    }

    /// Band-limited random image: low-order cosine/sine modes per column.
    fn band_limited(g: &ImageGrid, m_max: usize, salt: u64) -> Image {
        let n = g.ny;
        let mut img = Image::zeros(*g);
        for i in 0..g.nx {
            for j in 0..n {
                let mut v = hash_val(i, 0, salt);
                for m in 1..=m_max {
                    let th = 2.0 * std::f64::consts::PI * (m * j) as f64 / n as f64;
                    v += hash_val(i, m, salt) * th.cos() + hash_val(i, m + 1000, salt) * th.sin();
                }
                img.values[g.idx(i, j)] = v;
            }
        }
        img
    }

    #[test]
    fn antenna_array_sorts_and_validates() {
        let dy = 0.25;
        let a = AntennaArray::new(vec![3.0 * dy, 0.0, 1.0 * dy], dy).unwrap();
        assert_eq!(a.positions(), &[0.0, 0.25, 0.75]);
        assert_eq!(a.max_offset(), 0.75);
        assert!(AntennaArray::new(vec![0.0], dy).is_err());
        assert!(AntennaArray::new(vec![0.0, -dy], dy).is_err());
        assert!(AntennaArray::new(vec![dy, 2.0 * dy], dy).is_err());
        assert!(AntennaArray::new(vec![0.0, 0.3], 0.25).is_err());
        assert!(AntennaArray::new(vec![0.0, dy, dy], dy).is_err());
    }

    #[test]
    fn even_part_about_of_even_image_is_identity() {
        // Odd symmetric grid: every row has its mirror on the grid.
        let g = ImageGrid::new(5, 9, 0.5, 0.5, -1.0, -2.0).unwrap();
        let f = Image::from_fn(g, |x, y| (x + 1.5) * (-y * y).exp());
        let out = even_part_about(&f, 0.0).unwrap();
        assert_eq!(out.values, f.values);
    }

    #[test]
    fn even_part_about_splits_a_spike() {
        let g = ImageGrid::new(3, 9, 0.5, 0.5, -0.5, -2.0).unwrap();
        let mut f = Image::zeros(g);
        *f.at_mut(1, 7) = 1.0; // y = 1.5
        let out = even_part_about(&f, 0.0).unwrap();
        assert_eq!(out.at(1, 7), 0.5);
        assert_eq!(out.at(1, 1), 0.5); // y = -1.5
        let total: f64 = out.values.iter().sum();
        assert_eq!(total, 1.0);
    }

    #[test]
    fn even_part_about_is_idempotent_at_zero_offset() {
        let g = ImageGrid::new(4, 9, 0.5, 0.5, -1.0, -2.0).unwrap();
        let f = Image::from_fn(g, |x, y| hash_val((x * 10.0) as usize, (y * 10.0 + 20.0) as usize, 7));
        let once = even_part_about(&f, 0.0).unwrap();
        let twice = even_part_about(&once, 0.0).unwrap();
        assert_eq!(once.values, twice.values);
    }

    #[test]
    fn circular_even_projector_fixes_even_images() {
        let g = resolver_grid(4, 16, 0.5);
        let f = band_limited(&g, 5, 3);
        let fe = circular_even(&f, 2.0 * g.dy);
        let fixed = even_part_circular(&fe).unwrap();
        assert_eq!(fixed.values, fe.values);
    }

    #[test]
    fn misaligned_offset_is_rejected() {
        let g = resolver_grid(4, 8, 0.5);
        let f = Image::zeros(g);
        assert!(even_part_about(&f, 0.3).is_err());
        assert!(shift_rows(&f, 0.3).is_err());
    }

    #[test]
    fn mirror_shift_commutation_is_bit_exact() {
        // Odd symmetric grid: the mirror permutes rows bijectively, so
        // both compositions clamp under exactly the same conditions.
        let g = ImageGrid::new(5, 13, 0.25, 0.25, -0.5, -1.5).unwrap();
        let f = band_limited(&g, 4, 11);
        let b = 3.0 * g.dy;
        let lhs = mirror_rows(&shift_rows(&f, b).unwrap()).unwrap();
        let rhs = shift_rows(&mirror_rows(&f).unwrap(), -b).unwrap();
        assert_eq!(lhs.values, rhs.values);
    }

    #[test]
    fn zero_separation_spectrum_vanishes() {
        let g = resolver_grid(4, 16, 0.5);
        let f = band_limited(&g, 5, 9);
        let fe = circular_even(&f, 0.0);
        let h = sine_modulated_spectrum(&fe, &fe, 0.0).unwrap();
        assert_eq!(h.max_abs(), 0.0);
    }

    #[test]
    fn sine_modulated_spectrum_matches_the_identity() {
        // h_b must equal sin(b eta) fhat bin by bin.
        let g = resolver_grid(6, 32, 0.5);
        let f = band_limited(&g, 10, 21);
        let b = 3.0 * g.dy;
        let fe0 = circular_even(&f, 0.0);
        let feb = circular_even(&f, b);
        let h = sine_modulated_spectrum(&feb, &fe0, b).unwrap();
        let n = g.ny;
        let d_eta = 2.0 * std::f64::consts::PI / (n as f64 * g.dy);
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let mut worst = 0.0f64;
        for i in 0..g.nx {
            let mut buf: Vec<Complex64> = (0..n)
                .map(|j| Complex64::new(f.values[g.idx(i, j)], 0.0))
                .collect();
            fft.process(&mut buf);
            for m in 0..n {
                let eta = signed_freq(m, n, d_eta);
                let want = buf[m] * (b * eta).sin();
                worst = worst.max((h.at(i, m) - want).norm());
            }
        }
        assert!(worst < 1e-10, "identity deviation {worst}");
    }

    #[test]
    fn resolve_two_is_exact_in_band() {
        // Spectrum confined to |eta| <= 0.45 pi / dy with b = 2 dy keeps
        // |b eta| <= 0.9 pi; with a tiny epsilon the formula is exact.
        let g = resolver_grid(5, 64, 0.25);
        let f = band_limited(&g, 14, 5); // modes m <= 14 < 0.45*32
        let b = 2.0 * g.dy;
        let fe0 = circular_even(&f, 0.0);
        let feb = circular_even(&f, b);
        let reg = RegularizationSpec { epsilon: 1e-12, ..Default::default() };
        let out = resolve_two(&fe0, &feb, b, &reg).unwrap();
        let worst = out
            .values
            .iter()
            .zip(&f.values)
            .fold(0.0f64, |w, (a, b)| w.max((a - b).abs()));
        assert!(worst < 1e-8, "two-track recovery error {worst}");
    }

    #[test]
    fn resolve_two_returns_the_even_part_for_even_scenes() {
        let g = resolver_grid(5, 32, 0.25);
        let even_f = {
            let raw = band_limited(&g, 6, 17);
            even_part_circular(&raw).unwrap()
        };
        let b = 1.0 * g.dy;
        let fe0 = circular_even(&even_f, 0.0);
        let feb = circular_even(&even_f, b);
        assert_eq!(fe0.values, even_f.values);
        let reg = RegularizationSpec { epsilon: 1e-12, ..Default::default() };
        let out = resolve_two(&fe0, &feb, b, &reg).unwrap();
        let worst = out
            .values
            .iter()
            .zip(&even_f.values)
            .fold(0.0f64, |w, (a, b)| w.max((a - b).abs()));
        assert!(worst < 1e-8, "even-scene deviation {worst}");
    }

    #[test]
    fn regularizer_distortion_obeys_the_algebraic_bound() {
        let b = 0.5;
        let reg = RegularizationSpec { epsilon: 1e-3, cos_power_k: 2, eta0_source: 0.0 };
        for eta in [2.0f64, 3.0, 4.5, 5.5] {
            let s = (b * eta).sin();
            if s.abs() < 0.5 {
                continue;
            }
            let c = (b * eta).cos();
            let h = 0.7; // any nonzero bin value
            let den = s * s + reg.epsilon * c.powi(4);
            let exact = h / s;
            let got = s * h / den;
            let rel = ((got - exact) / exact).abs();
            let bound = reg.epsilon * c.powi(4) / (s * s);
            assert!(rel <= bound + 1e-15, "eta {eta}: rel {rel} > bound {bound}");
        }
    }

    #[test]
    fn resolve_many_recovers_an_asymmetric_scene() {
        let g = resolver_grid(6, 64, 0.25);
        let mut f = band_limited(&g, 20, 33);
        // Kill the Nyquist bin so the reference-image convention is
        // exercised with a consistent value.
        let fixed = {
            let n = g.ny;
            for i in 0..g.nx {
                let nyq: f64 = (0..n)
                    .map(|j| f.values[g.idx(i, j)] * if j % 2 == 0 { 1.0 } else { -1.0 })
                    .sum();
                for j in 0..n {
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    f.values[g.idx(i, j)] -= sign * nyq / n as f64;
                }
            }
            f
        };
        let dy = g.dy;
        let entries: Vec<(f64, Image)> = [0.0, 1.0, 3.0]
            .iter()
            .map(|&k| (k * dy, circular_even(&fixed, k * dy)))
            .collect();
        let set = EvenImageSet::new(entries).unwrap();
        let out = resolve_many(&set, PairingMode::AllPairs, 0.0).unwrap();
        let worst = out
            .values
            .iter()
            .zip(&fixed.values)
            .fold(0.0f64, |w, (a, b)| w.max((a - b).abs()));
        assert!(worst < 1e-6, "many-track recovery error {worst}");
    }

    #[test]
    fn resolve_many_handles_the_nyquist_bin_from_the_reference() {
        // Full-band scene, Nyquist included: every bin must come back.
        let g = resolver_grid(4, 16, 0.5);
        let f = band_limited(&g, 8, 41);
        let entries: Vec<(f64, Image)> = [0.0, 1.0, 3.0]
            .iter()
            .map(|&k| (k * g.dy, circular_even(&f, k * g.dy)))
            .collect();
        let set = EvenImageSet::new(entries).unwrap();
        let out = resolve_many(&set, PairingMode::AllPairs, 0.0).unwrap();
        let worst = out
            .values
            .iter()
            .zip(&f.values)
            .fold(0.0f64, |w, (a, b)| w.max((a - b).abs()));
        assert!(worst < 1e-10, "full-band recovery error {worst}");
    }

    #[test]
    fn resolve_many_of_even_scene_is_the_reference_image() {
        let g = resolver_grid(4, 32, 0.25);
        let even_f = even_part_circular(&band_limited(&g, 9, 55)).unwrap();
        let entries: Vec<(f64, Image)> = [0.0, 1.0, 3.0]
            .iter()
            .map(|&k| (k * g.dy, circular_even(&even_f, k * g.dy)))
            .collect();
        let set = EvenImageSet::new(entries).unwrap();
        let out = resolve_many(&set, PairingMode::AllPairs, 0.0).unwrap();
        let worst = out
            .values
            .iter()
            .zip(&even_f.values)
            .fold(0.0f64, |w, (a, b)| w.max((a - b).abs()));
        assert!(worst < 1e-10, "even-scene deviation {worst}");
    }

    #[test]
    fn single_pair_reduces_to_the_two_track_formula() {
        let g = resolver_grid(4, 32, 0.25);
        let f = {
            // Band-limited and Nyquist-free.
            band_limited(&g, 9, 77)
        };
        let b = g.dy;
        let fe0 = circular_even(&f, 0.0);
        let feb = circular_even(&f, b);
        let set = EvenImageSet::new(vec![(0.0, fe0.clone()), (b, feb.clone())]).unwrap();
        let many = resolve_many(&set, PairingMode::AllPairs, 0.0).unwrap();
        let reg = RegularizationSpec { epsilon: 1e-300, ..Default::default() };
        let two = resolve_two(&fe0, &feb, b, &reg).unwrap();
        let worst = many
            .values
            .iter()
            .zip(&two.values)
            .fold(0.0f64, |w, (a, b)| w.max((a - b).abs()));
        assert!(worst < 1e-6, "pair reduction deviation {worst}");
    }

    #[test]
    fn common_sine_zero_is_reported_with_bins() {
        let g = resolver_grid(4, 16, 0.5);
        let f = band_limited(&g, 3, 13);
        // {0, 2dy} alone: sin(2 dy eta) dies at bins 4 and 12.
        let entries: Vec<(f64, Image)> = [0.0, 2.0]
            .iter()
            .map(|&k| (k * g.dy, circular_even(&f, k * g.dy)))
            .collect();
        let set = EvenImageSet::new(entries).unwrap();
        let err = resolve_many(&set, PairingMode::AllPairs, 0.0).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains('4') && msg.contains("12"), "message: {msg}");
    }

    #[test]
    fn every_grid_offset_determines_the_scene() {
        // With even images about every row offset, any scene on the grid
        // comes back exactly.
        let g = resolver_grid(3, 16, 0.5);
        let f = band_limited(&g, 8, 99);
        let entries: Vec<(f64, Image)> = (0..g.ny)
            .map(|k| (k as f64 * g.dy, circular_even(&f, k as f64 * g.dy)))
            .collect();
        let set = EvenImageSet::new(entries).unwrap();
        let out = resolve_many(&set, PairingMode::AllPairs, 0.0).unwrap();
        let worst = out
            .values
            .iter()
            .zip(&f.values)
            .fold(0.0f64, |w, (a, b)| w.max((a - b).abs()));
        assert!(worst < 1e-9, "all-offset recovery error {worst}");
    }

    #[test]
    fn resolver_inputs_are_validated() {
        let g = resolver_grid(4, 16, 0.5);
        let f = band_limited(&g, 3, 1);
        let fe0 = circular_even(&f, 0.0);
        // Not an even image: the raw scene itself.
        assert!(EvenImageSet::new(vec![(0.0, f.clone()), (g.dy, fe0.clone())]).is_err());
        // Missing reference offset.
        assert!(
            EvenImageSet::new(vec![(g.dy, fe0.clone()), (2.0 * g.dy, fe0.clone())]).is_err()
        );
        // Odd row count is no resolver grid.
        let g_odd = ImageGrid::new(4, 9, 0.5, 0.5, -1.0, -2.0).unwrap();
        let z = Image::zeros(g_odd);
        assert!(EvenImageSet::new(vec![(0.0, z.clone()), (0.5, z.clone())]).is_err());
    }

    #[test]
    fn zero_noise_direct_pipeline_recovers_the_phantom() {
        let g = resolver_grid(24, 32, 0.25);
        // Asymmetric two-bump scene; compact support keeps a guard band
        // of at least 8 rows at the wrap boundary.
        let bump = |dx: f64, dy: f64, rad: f64| {
            let q = (dx * dx + dy * dy) / (rad * rad);
            if q < 1.0 {
                (-q / (1.0 - q)).exp()
            } else {
                0.0
            }
        };
        let phantom = Image::from_fn(g, |x, y| {
            bump(x + 1.0, y - 1.0, 0.8) + 0.6 * bump(x, y + 0.75, 0.6)
        });
        let antennas = AntennaArray::new(vec![0.0, g.dy, 3.0 * g.dy], g.dy).unwrap();
        let noise = NoiseSpec { percent: 0.0, ..Default::default() };
        let out = lr_pipeline(
            &phantom,
            &antennas,
            &noise,
            PipelineMode::Direct,
            &ResolverConfig::default(),
        )
        .unwrap();
        let worst = out
            .resolved
            .values
            .iter()
            .zip(&phantom.values)
            .fold(0.0f64, |w, (a, b)| w.max((a - b).abs()));
        assert!(worst < 1e-6, "pipeline recovery error {worst}");
        assert_eq!(out.even_images.len(), 3);
        assert!(out.data.is_empty());
    }

    #[test]
    fn pipeline_rejects_scenes_crowding_the_wrap_boundary() {
        let g = resolver_grid(8, 16, 0.5);
        // Support touches the top row.
        let mut phantom = Image::zeros(g);
        *phantom.at_mut(4, 15) = 1.0;
        let antennas = AntennaArray::new(vec![0.0, 2.0 * g.dy], g.dy).unwrap();
        let noise = NoiseSpec::default();
        assert!(lr_pipeline(
            &phantom,
            &antennas,
            &noise,
            PipelineMode::Direct,
            &ResolverConfig::default()
        )
        .is_err());
    }

    #[test]
    fn pipeline_output_is_independent_of_antenna_input_order() {
        let g = resolver_grid(12, 32, 0.25);
        let phantom = Image::from_fn(g, |x, y| {
            let d = (x * x + (y - 0.5) * (y - 0.5)).sqrt();
            if d < 0.6 {
                1.0
            } else {
                0.0
            }
        });
        let noise = NoiseSpec { percent: 0.1, ..Default::default() };
        let a1 = AntennaArray::new(vec![0.0, 3.0 * g.dy, g.dy], g.dy).unwrap();
        let a2 = AntennaArray::new(vec![g.dy, 0.0, 3.0 * g.dy], g.dy).unwrap();
        assert_eq!(a1, a2);
        let r1 = lr_pipeline(&phantom, &a1, &noise, PipelineMode::Direct, &ResolverConfig::default())
            .unwrap();
        let r2 = lr_pipeline(&phantom, &a2, &noise, PipelineMode::Direct, &ResolverConfig::default())
            .unwrap();
        assert_eq!(r1.resolved.values, r2.resolved.values);
    }
}
