//! Fourier-domain inversion: Hankel/Fourier transforms of circle-average
//! data and the slice relations that map them to reflectivity spectra.
//!
//! Conventions used throughout:
//! * Image spectra use the symmetric 2-D pair: `1/(2*pi)` on the forward
//!   and inverse transforms alike.
//! * Data spectra are the plain (unnormalized) Fourier transform in the
//!   track coordinate of the order-zero Hankel transform in radius. With
//!   circle averages normalized by `1/(2*pi)`, this scaling is exactly the
//!   one that makes `G(xi, rho) = 2 F(xi, eta) / eta` hold on
//!   `eta = sqrt(rho^2 - xi^2) > 0`.
//! * Data spectra live on a half-plane grid `(xi, rho)` with `rho >= 0`;
//!   reflectivity spectra live on `(xi, eta)` with `eta` signed and stored
//!   in DFT bin order.
//! * On the cone `rho <= |xi|` the data spectrum of any reflectivity is
//!   identically zero, and the maps below enforce that exactly.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::bessel::bessel_j0;
use crate::error::{Result, SartError};
use crate::grid::{DataField, Image, ImageGrid};

/// Second axis of a spectral field: radial (`rho >= 0`) or signed vertical
/// frequency (`eta`, DFT bin order).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SecondAxis {
    Rho { n: usize, d: f64 },
    Eta { n: usize, d: f64 },
}

impl SecondAxis {
    pub fn len(&self) -> usize {
        match *self {
            SecondAxis::Rho { n, .. } | SecondAxis::Eta { n, .. } => n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> f64 {
        match *self {
            SecondAxis::Rho { d, .. } | SecondAxis::Eta { d, .. } => d,
        }
    }
}

/// Complex spectrum sampled on a rectangular frequency grid.
///
/// The first axis is the along-track frequency `xi` in DFT bin order
/// (`n_xi` bins of spacing `d_xi`; bin `k` holds the signed frequency
/// obtained by wrapping `k` past `n_xi/2`). The second axis is either
/// `rho` or `eta`, see [`SecondAxis`]. Values are row-major with the
/// second axis contiguous.
#[derive(Debug, Clone)]
pub struct SpectralField {
    pub n_xi: usize,
    pub d_xi: f64,
    pub second: SecondAxis,
    pub values: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(n_xi: usize, d_xi: f64, second: SecondAxis) -> Self {
        let n = n_xi * second.len();
        SpectralField { n_xi, d_xi, second, values: vec![Complex64::new(0.0, 0.0); n] }
    }

    #[inline]
    pub fn idx(&self, k: usize, m: usize) -> usize {
        debug_assert!(k < self.n_xi && m < self.second.len());
        k * self.second.len() + m
    }

    #[inline]
    pub fn at(&self, k: usize, m: usize) -> Complex64 {
        self.values[self.idx(k, m)]
    }

    /// Signed frequency for bin `k` of the first axis (DFT wrap order).
    #[inline]
    pub fn xi(&self, k: usize) -> f64 {
        signed_freq(k, self.n_xi, self.d_xi)
    }

    /// Coordinate of bin `m` on the second axis. For an `Eta` axis this is
    /// the signed frequency in wrap order; for `Rho` it is `m * d`.
    #[inline]
    pub fn second_coord(&self, m: usize) -> f64 {
        match self.second {
            SecondAxis::Rho { d, .. } => m as f64 * d,
            SecondAxis::Eta { n, d } => signed_freq(m, n, d),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.norm()))
    }
}

/// Signed frequency of DFT bin `k` out of `n` with bin spacing `d`.
/// Bins past `n/2` wrap to negative; for even `n` bin `n/2` maps to the
/// positive Nyquist frequency.
#[inline]
pub fn signed_freq(k: usize, n: usize, d: f64) -> f64 {
    if 2 * k > n {
        (k as f64 - n as f64) * d
    } else {
        k as f64 * d
    }
}

/// Zeroth-order Hankel transform of radial samples on a uniform grid
/// starting at zero: `H(rho) = integral_0^rmax f(r) J0(r rho) r dr`,
/// evaluated by the trapezoid rule at each requested `rho`.
///
/// The integrand is assumed negligible at the last sample; callers can
/// check [`tail_fraction`] when that is in doubt.
pub fn hankel_j0(samples: &[f64], d_radius: f64, rho: &[f64]) -> Vec<f64> {
    let n = samples.len();
    let mut out = vec![0.0f64; rho.len()];
    if n < 2 {
        return out;
    }
    for (om, &p) in out.iter_mut().zip(rho) {
        let mut acc = 0.0;
        for (j, &fj) in samples.iter().enumerate() {
            let r = j as f64 * d_radius;
            let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
            acc += w * fj * bessel_j0(r * p) * r;
        }
        *om = acc * d_radius;
    }
    out
}

/// Fraction of the largest absolute sample reached at the outer radial
/// boundary, `max |g(i, r_last)| / max |g|`. Large values mean the radial
/// integrals in [`data_spectrum`] are truncating live signal.
pub fn tail_fraction(data: &DataField) -> f64 {
    let g = &data.grid;
    let mut tail = 0.0f64;
    let mut peak = 0.0f64;
    for i in 0..g.n_track {
        for j in 0..g.n_radius {
            let v = data.values[g.idx(i, j)].abs();
            peak = peak.max(v);
            if j == g.n_radius - 1 {
                tail = tail.max(v);
            }
        }
    }
    if peak > 0.0 {
        tail / peak
    } else {
        0.0
    }
}

fn fft_1d(planner: &mut FftPlanner<f64>, buf: &mut [Complex64], inverse: bool) {
    let fft = if inverse {
        planner.plan_fft_inverse(buf.len())
    } else {
        planner.plan_fft_forward(buf.len())
    };
    fft.process(buf);
}

/// Half-plane spectrum of circle-average data: the plain Fourier
/// transform in the track coordinate of the order-zero Hankel transform
/// in radius, `G(xi, rho) = FT_x[Hankel0_r[g]](xi)` on `rho >= 0`.
///
/// The radial Hankel transform uses the trapezoid rule on the data's own
/// radial grid; the along-track transform is the DFT of the track samples
/// scaled by `d_track` with the phase anchored at the physical track
/// start, so bin `k` approximates the continuum transform at `xi_k`.
/// Output bins: `n_rho` radii of spacing `d_rho`, `n_track` frequencies
/// of spacing `2*pi / (n_track * d_track)`.
pub fn data_spectrum(data: &DataField, n_rho: usize, d_rho: f64) -> Result<SpectralField> {
    if n_rho < 2 || !(d_rho > 0.0) || !d_rho.is_finite() {
        return Err(SartError::InvalidArgument(format!(
            "spectrum needs n_rho >= 2 and positive d_rho, got {n_rho} and {d_rho}"
        )));
    }
    data.ensure_finite("spectrum input")?;
    let g = &data.grid;
    let nt = g.n_track;
    let d_xi = 2.0 * std::f64::consts::PI / (nt as f64 * g.d_track);

    // Hankel kernel matrix, shared across all tracks: kernel[m][j] is the
    // trapezoid weight times r_j J0(r_j rho_m) d_radius.
    let nr = g.n_radius;
    let mut kernel = vec![0.0f64; n_rho * nr];
    for m in 0..n_rho {
        let p = m as f64 * d_rho;
        let row = &mut kernel[m * nr..(m + 1) * nr];
        for (j, kj) in row.iter_mut().enumerate() {
            let r = j as f64 * g.d_radius;
            let w = if j == 0 || j == nr - 1 { 0.5 } else { 1.0 };
            *kj = w * r * bessel_j0(r * p) * g.d_radius;
        }
    }

    // hank[i][m]: Hankel transform of track i at rho_m.
    let mut hank = vec![0.0f64; nt * n_rho];
    for i in 0..nt {
        let row = &data.values[g.idx(i, 0)..g.idx(i, 0) + nr];
        for m in 0..n_rho {
            let krow = &kernel[m * nr..(m + 1) * nr];
            let mut acc = 0.0;
            for (kj, fj) in krow.iter().zip(row) {
                acc += kj * fj;
            }
            hank[i * n_rho + m] = acc;
        }
    }

    let mut planner = FftPlanner::new();
    let mut field = SpectralField::zeros(nt, d_xi, SecondAxis::Rho { n: n_rho, d: d_rho });
    let scale = g.d_track;
    let mut col = vec![Complex64::new(0.0, 0.0); nt];
    for m in 0..n_rho {
        for (i, c) in col.iter_mut().enumerate() {
            *c = Complex64::new(hank[i * n_rho + m], 0.0);
        }
        fft_1d(&mut planner, &mut col, false);
        for k in 0..nt {
            // DFT sums exp(-2 pi i k i / nt); the physical transform wants
            // exp(-i xi x) with x = track_min + i d_track.
            let phase = Complex64::from_polar(1.0, -field.xi(k) * g.track_min);
            field.values[k * n_rho + m] = col[k] * phase * scale;
        }
    }
    Ok(field)
}

/// Map a data spectrum on `(xi, rho)` to the reflectivity spectrum on
/// `(xi, eta)`: `F(xi, eta) = |eta| G(xi, sqrt(xi^2 + eta^2)) / 2`.
///
/// The `eta = 0` plane is zero by the factor `|eta|`. Interpolation runs
/// on the weighted row `G(xi, rho) sqrt(rho^2 - xi^2)`, which for exact
/// data is a smooth function of `rho^2 - xi^2` and so stays
/// linear-interpolation friendly where `G` itself blows up like an
/// inverse square root at the cone; queries near the cone anchor the
/// stencil on the first two bins clear of it and extrapolate down.
/// Requires the radial grid to cover `sqrt(xi^2 + eta^2)` for every
/// requested bin, plus two bins past every `|xi|`.
pub fn data_to_reflectivity_spectrum(
    gspec: &SpectralField,
    n_eta: usize,
    d_eta: f64,
) -> Result<SpectralField> {
    let (n_rho, d_rho) = match gspec.second {
        SecondAxis::Rho { n, d } => (n, d),
        SecondAxis::Eta { .. } => {
            return Err(SartError::InvalidArgument(
                "data_to_reflectivity_spectrum expects a (xi, rho) field".into(),
            ))
        }
    };
    if n_eta < 2 || !(d_eta > 0.0) || !d_eta.is_finite() {
        return Err(SartError::InvalidArgument(format!(
            "need n_eta >= 2 and positive d_eta, got {n_eta} and {d_eta}"
        )));
    }
    let rho_max = (n_rho - 1) as f64 * d_rho;
    let mut out = SpectralField::zeros(gspec.n_xi, gspec.d_xi, SecondAxis::Eta { n: n_eta, d: d_eta });
    let mut smooth = vec![Complex64::new(0.0, 0.0); n_rho];
    for k in 0..gspec.n_xi {
        let xi = gspec.xi(k);
        let grow = &gspec.values[k * n_rho..(k + 1) * n_rho];
        for (j, s) in smooth.iter_mut().enumerate() {
            let rho = j as f64 * d_rho;
            *s = grow[j] * (rho * rho - xi * xi).max(0.0).sqrt();
        }
        // First bin at least half a step clear of the cone; bins closer
        // than that carry a zero or smeared weight and are never read.
        let ja = (xi.abs() / d_rho + 0.5).floor() as usize + 1;
        if ja + 1 >= n_rho {
            return Err(SartError::InvalidArgument(format!(
                "radial grid reaches rho = {rho_max:.6} but xi = {xi:.6} needs two usable bins above the cone"
            )));
        }
        for m in 0..n_eta {
            let eta = signed_freq(m, n_eta, d_eta);
            if eta == 0.0 {
                continue;
            }
            let s = xi.hypot(eta);
            if s > rho_max {
                return Err(SartError::InvalidArgument(format!(
                    "radial grid reaches rho = {rho_max:.6} but bin (xi = {xi:.6}, eta = {eta:.6}) needs rho = {s:.6}"
                )));
            }
            let t = s / d_rho;
            let j = (t.floor() as usize).max(ja).min(n_rho - 2);
            let frac = t - j as f64;
            let val = smooth[j] * (1.0 - frac) + smooth[j + 1] * frac;
            out.values[k * n_eta + m] = val * 0.5;
        }
    }
    Ok(out)
}

/// Map a reflectivity spectrum on `(xi, eta)` to the data spectrum on
/// `(xi, rho)`: `G(xi, rho) = 2 F(xi, sqrt(rho^2 - xi^2)) / sqrt(rho^2 - xi^2)`
/// for `rho > |xi|`, zero on and around the cone (one guard bin).
///
/// `F` is read at nonnegative `eta` by linear interpolation over the
/// stored bins; frequencies at or past the highest stored bin are
/// treated as zero, so the usable band is open at the top edge.
pub fn reflectivity_to_data_spectrum(
    fspec: &SpectralField,
    n_rho: usize,
    d_rho: f64,
) -> Result<SpectralField> {
    let (n_eta, d_eta) = match fspec.second {
        SecondAxis::Eta { n, d } => (n, d),
        SecondAxis::Rho { .. } => {
            return Err(SartError::InvalidArgument(
                "reflectivity_to_data_spectrum expects a (xi, eta) field".into(),
            ))
        }
    };
    if n_rho < 2 || !(d_rho > 0.0) || !d_rho.is_finite() {
        return Err(SartError::InvalidArgument(format!(
            "need n_rho >= 2 and positive d_rho, got {n_rho} and {d_rho}"
        )));
    }
    let eta_top = n_eta / 2; // highest stored nonnegative bin
    let mut out = SpectralField::zeros(fspec.n_xi, fspec.d_xi, SecondAxis::Rho { n: n_rho, d: d_rho });
    for k in 0..fspec.n_xi {
        let xi = fspec.xi(k);
        let frow = &fspec.values[k * n_eta..(k + 1) * n_eta];
        for m in 0..n_rho {
            let rho = m as f64 * d_rho;
            if rho <= xi.abs() + d_rho {
                continue; // on-cone values and a one-bin guard stay zero
            }
            let eta = (rho * rho - xi * xi).sqrt();
            let t = eta / d_eta;
            let j = t.floor() as usize;
            if j >= eta_top {
                continue; // beyond the stored band: spectrum treated as zero
            }
            let frac = t - j as f64;
            let fval = frow[j] * (1.0 - frac) + frow[j + 1] * frac;
            out.values[k * n_rho + m] = fval * (2.0 / eta);
        }
    }
    Ok(out)
}

/// Discrete transform of an image known on `y >= 0` and extended evenly:
/// `F(xi, eta) = dx dy / (2 pi) * sum f(x, |y|) exp(-i(xi x + eta y))`
/// over the even extension to `2 * ny` rows.
///
/// The image's first row must sit at `y = 0`. First axis: `nx` bins of
/// spacing `2 pi / (nx dx)`; second axis: `2 ny` eta bins.
pub fn image_spectrum_even(img: &Image) -> Result<SpectralField> {
    let g = &img.grid;
    if g.y0.abs() > 1e-9 * g.dy {
        return Err(SartError::InvalidGrid(format!(
            "even image spectrum needs the first row at y = 0, got y0 = {}",
            g.y0
        )));
    }
    img.ensure_finite("spectrum input")?;
    let (nx, ny) = (g.nx, g.ny);
    let m_rows = 2 * ny;
    let d_xi = 2.0 * std::f64::consts::PI / (nx as f64 * g.dx);
    let d_eta = 2.0 * std::f64::consts::PI / (m_rows as f64 * g.dy);

    // Evenly extended samples, row-major (x fastest), rows in DFT order:
    // row q holds y = q dy for q < ny and y = (q - 2 ny) dy reflected above.
    let mut buf = vec![Complex64::new(0.0, 0.0); nx * m_rows];
    for q in 0..m_rows {
        let src = if q < ny { q } else { 2 * ny - q }; // q = ny maps to row ny, absent: clamp below
        let src = src.min(ny - 1);
        // Row ny of the extension corresponds to y = ny * dy, one past the
        // stored grid; the even extension wraps it onto row ny of the
        // mirror, i.e. the same missing sample. Treat it as row ny-1's
        // neighbor by clamping; for images that decay before the boundary
        // this bin is zero anyway.
        for i in 0..nx {
            buf[q * nx + i] = Complex64::new(img.values[src * nx + i], 0.0);
        }
    }
    // The wrap row q = ny is y = -ny*dy = +ny*dy: not a stored sample. Use
    // zero there rather than a clamped copy when the image does not reach
    // the boundary; detect by checking the outermost stored row.
    {
        let top_max = (0..nx).fold(0.0f64, |a, i| a.max(img.values[(ny - 1) * nx + i].abs()));
        if top_max == 0.0 {
            for i in 0..nx {
                buf[ny * nx + i] = Complex64::new(0.0, 0.0);
            }
        }
    }

    let mut planner = FftPlanner::new();
    // FFT rows (x direction).
    let mut row = vec![Complex64::new(0.0, 0.0); nx];
    for q in 0..m_rows {
        row.copy_from_slice(&buf[q * nx..(q + 1) * nx]);
        fft_1d(&mut planner, &mut row, false);
        buf[q * nx..(q + 1) * nx].copy_from_slice(&row);
    }
    // FFT columns (y direction).
    let mut col = vec![Complex64::new(0.0, 0.0); m_rows];
    for i in 0..nx {
        for q in 0..m_rows {
            col[q] = buf[q * nx + i];
        }
        fft_1d(&mut planner, &mut col, false);
        for q in 0..m_rows {
            buf[q * nx + i] = col[q];
        }
    }

    let mut field = SpectralField::zeros(nx, d_xi, SecondAxis::Eta { n: m_rows, d: d_eta });
    let scale = g.dx * g.dy / (2.0 * std::f64::consts::PI);
    for k in 0..nx {
        let phase = Complex64::from_polar(1.0, -field.xi(k) * g.x0);
        for m in 0..m_rows {
            field.values[k * m_rows + m] = buf[m * nx + k] * phase * scale;
        }
    }
    Ok(field)
}

/// Invert circle-average data through the Fourier route: Hankel + Fourier
/// transform of the data, the slice map to the reflectivity spectrum, and
/// a 2-D inverse DFT onto the requested grid.
///
/// Grid preconditions (checked): `igrid.dx` equals the track spacing, the
/// image x and y lattices are aligned to the track lattice and to `y = 0`,
/// and the track span covers the image's x range.
pub fn invert_fourier(data: &DataField, igrid: &ImageGrid) -> Result<Image> {
    let g = &data.grid;
    let nt = g.n_track;
    if ((igrid.dx - g.d_track) / g.d_track).abs() > 1e-9 {
        return Err(SartError::GridMismatch(format!(
            "image dx = {} must equal track spacing {}",
            igrid.dx, g.d_track
        )));
    }
    let s0f = (igrid.x0 - g.track_min) / g.d_track;
    let s0 = s0f.round();
    if (s0f - s0).abs() > 1e-6 {
        return Err(SartError::GridMismatch(
            "image x lattice is not aligned to the track lattice".into(),
        ));
    }
    let q0f = igrid.y0 / igrid.dy;
    let q0 = q0f.round();
    if (q0f - q0).abs() > 1e-6 {
        return Err(SartError::GridMismatch(
            "image y lattice is not aligned to y = 0".into(),
        ));
    }
    if igrid.x0 < g.track_min - 1e-9 * g.d_track
        || igrid.x_max() > g.track(nt - 1) + 1e-9 * g.d_track
    {
        return Err(SartError::GridMismatch(
            "track span does not cover the image x range".into(),
        ));
    }

    let m_rows = 2 * igrid.ny;
    let d_eta = 2.0 * std::f64::consts::PI / (m_rows as f64 * igrid.dy);
    let d_xi = 2.0 * std::f64::consts::PI / (nt as f64 * g.d_track);
    let xi_max = d_xi * (nt as f64 / 2.0);
    let eta_max = d_eta * (m_rows as f64 / 2.0);
    let rho_need = xi_max.hypot(eta_max);
    // An eighth of the finer frequency step keeps the slice-map
    // interpolation error well under the quadrature error of the radial
    // transform itself.
    let d_rho = 0.125 * d_xi.min(d_eta);
    let n_rho = (rho_need / d_rho).ceil() as usize + 2;

    let gspec = data_spectrum(data, n_rho, d_rho)?;
    let mut fspec = data_to_reflectivity_spectrum(&gspec, m_rows, d_eta)?;

    // Bins close to the cone carry little usable information: data
    // supported in r <= r_max resolves rho structure no finer than
    // pi / r_max, so the slice map reads smeared values there, and the
    // eta = 0 row is zeroed outright by the |eta| factor. Rebuild both
    // from the even smoothness of the reflectivity spectrum in eta,
    // extrapolating in eta^2 from the first rows clear of the smear.
    let smear = std::f64::consts::PI / ((g.n_radius - 1) as f64 * g.d_radius);
    for k in 0..nt {
        let xi = fspec.xi(k);
        let mut nodes: Vec<(f64, Complex64)> = Vec::with_capacity(3);
        for m in 1..=m_rows / 2 {
            let eta = m as f64 * d_eta;
            if xi.hypot(eta) - xi.abs() >= smear {
                nodes.push((eta * eta, fspec.values[k * m_rows + m]));
                if nodes.len() == 3 {
                    break;
                }
            }
        }
        if nodes.len() < 2 {
            continue;
        }
        for m in 0..m_rows {
            let eta = signed_freq(m, m_rows, d_eta);
            if eta != 0.0 && xi.hypot(eta) - xi.abs() >= smear {
                continue;
            }
            let u = eta * eta;
            let mut v = Complex64::new(0.0, 0.0);
            for (a, &(ua, fa)) in nodes.iter().enumerate() {
                let mut wgt = 1.0;
                for (b, &(ub, _)) in nodes.iter().enumerate() {
                    if a != b {
                        wgt *= (u - ub) / (ua - ub);
                    }
                }
                v += fa * wgt;
            }
            fspec.values[k * m_rows + m] = v;
        }
    }

    // Inverse 2-D DFT with the x phase anchored at the track start.
    let mut buf = vec![Complex64::new(0.0, 0.0); nt * m_rows];
    for k in 0..nt {
        let phase = Complex64::from_polar(1.0, fspec.xi(k) * g.track_min);
        for m in 0..m_rows {
            buf[m * nt + k] = fspec.values[k * m_rows + m] * phase;
        }
    }
    let mut planner = FftPlanner::new();
    let mut row = vec![Complex64::new(0.0, 0.0); nt];
    for q in 0..m_rows {
        row.copy_from_slice(&buf[q * nt..(q + 1) * nt]);
        fft_1d(&mut planner, &mut row, true);
        buf[q * nt..(q + 1) * nt].copy_from_slice(&row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); m_rows];
    for k in 0..nt {
        for q in 0..m_rows {
            col[q] = buf[q * nt + k];
        }
        fft_1d(&mut planner, &mut col, true);
        for q in 0..m_rows {
            buf[q * nt + k] = col[q];
        }
    }

    let scale = d_xi * d_eta / (2.0 * std::f64::consts::PI);
    let s0 = s0 as i64;
    let q0 = q0 as i64;
    let mut img = Image::zeros(*igrid);
    for j in 0..igrid.ny {
        let q = (q0 + j as i64).rem_euclid(m_rows as i64) as usize;
        for i in 0..igrid.nx {
            let p = (s0 + i as i64).rem_euclid(nt as i64) as usize;
            img.values[j * igrid.nx + i] = buf[q * nt + p].re * scale;
        }
    }
    img.ensure_finite("inversion output")?;
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::forward;
    use crate::grid::{render_phantom, DataGrid, Disc, PhantomSpec};

    fn gaussian_image(n: usize, half: f64, sigma: f64) -> Image {
        let d = 2.0 * half / n as f64;
        let grid = ImageGrid::new(n, n / 2, d, d, -half, 0.0).unwrap();
        Image::from_fn(grid, |x, y| (-(x * x + y * y) / (2.0 * sigma * sigma)).exp())
    }

    #[test]
    fn hankel_of_zero_is_zero() {
        let out = hankel_j0(&[0.0; 64], 0.1, &[0.0, 1.0, 2.0]);
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hankel_at_rho_zero_is_radial_mass() {
        // J0(0) = 1, so H(0) = integral f(r) r dr; take f = 1 on [0, 1].
        let n = 4097;
        let h = 1.0 / (n - 1) as f64;
        let f = vec![1.0; n];
        let out = hankel_j0(&f, h, &[0.0]);
        assert!((out[0] - 0.5).abs() < 1e-12, "got {}", out[0]);
    }

    #[test]
    fn signed_freq_wraps_past_half() {
        assert_eq!(signed_freq(0, 8, 0.5), 0.0);
        assert_eq!(signed_freq(3, 8, 0.5), 1.5);
        assert_eq!(signed_freq(4, 8, 0.5), 2.0); // Nyquist kept positive
        assert_eq!(signed_freq(5, 8, 0.5), -1.5);
        assert_eq!(signed_freq(7, 8, 0.5), -0.5);
    }

    #[test]
    fn slice_map_halves_and_weights() {
        // One nonzero G bin at (xi, rho) = (3, 5): F at eta = 4 must be
        // 0.5 * 4 * G = 2 G by the 3-4-5 triangle.
        let n_xi = 8;
        let d_xi = 1.0;
        let n_rho = 8;
        let d_rho = 1.0;
        let mut gspec = SpectralField::zeros(n_xi, d_xi, SecondAxis::Rho { n: n_rho, d: d_rho });
        let k = 3; // xi = +3
        gspec.values[k * n_rho + 5] = Complex64::new(1.0, 0.0);
        let fspec = data_to_reflectivity_spectrum(&gspec, 16, 0.5).unwrap();
        // eta = 4 is bin m = 8 on a 16-bin grid with d_eta = 0.5.
        let got = fspec.values[k * 16 + 8];
        assert!((got.re - 2.0).abs() < 1e-12 && got.im.abs() < 1e-15, "got {got}");
    }

    #[test]
    fn slice_map_interpolates_clear_of_the_cone() {
        // Fill one xi row so that G sqrt(rho^2 - xi^2) is the line
        // 1 + 0.5 rho; the weighted interpolation then reproduces
        // F = |eta| (1 + 0.5 hypot(xi, eta)) / (2 eta) exactly for every
        // eta != 0 without reading the poisoned bins at or below the
        // cone, and the eta = 0 row stays zero by the |eta| factor.
        let n_rho = 8;
        let mut gspec = SpectralField::zeros(8, 1.0, SecondAxis::Rho { n: n_rho, d: 1.0 });
        let k = 2; // xi = +2
        for j in 0..n_rho {
            let rho = j as f64;
            gspec.values[k * n_rho + j] = if rho > 2.0 {
                Complex64::new((1.0 + 0.5 * rho) / (rho * rho - 4.0).sqrt(), 0.0)
            } else {
                Complex64::new(99.0, 99.0)
            };
        }
        let fspec = data_to_reflectivity_spectrum(&gspec, 8, 0.5).unwrap();
        assert_eq!(fspec.values[k * 8], Complex64::new(0.0, 0.0));
        for m in 1..8 {
            let eta = signed_freq(m, 8, 0.5);
            let want = 0.5 * (1.0 + 0.5 * 2.0f64.hypot(eta));
            let got = fspec.values[k * 8 + m];
            assert!(
                (got.re - want).abs() < 1e-12 && got.im.abs() < 1e-12,
                "eta = {eta}: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn cone_and_guard_are_zero() {
        let mut fspec = SpectralField::zeros(8, 1.0, SecondAxis::Eta { n: 16, d: 0.5 });
        for v in fspec.values.iter_mut() {
            *v = Complex64::new(1.0, -1.0);
        }
        let gspec = reflectivity_to_data_spectrum(&fspec, 12, 0.5).unwrap();
        for k in 0..8 {
            let xi = gspec.xi(k);
            for m in 0..12 {
                let rho = m as f64 * 0.5;
                if rho <= xi.abs() + 0.5 {
                    assert_eq!(gspec.values[k * 12 + m], Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn slice_maps_roundtrip_on_smooth_spectrum() {
        // Build a smooth synthetic F, push it through F -> G -> F, and
        // compare on the open band: away from the zeroed eta = 0 plane
        // and the top stored frequency, which the forward map treats as
        // already outside the band. On interior bins the eta
        // interpolation cancels exactly (the backward map queries rho
        // values whose eta is a lattice point of the piecewise-linear
        // interpolant), leaving only the rho interpolation error; that
        // error is amplified near the cone by the square-root kink,
        // roughly (d_rho xi / eta^2)^2, so the rho step is sized for the
        // worst corner xi = 2, eta = 0.125.
        let n_xi = 16;
        let d_xi = 0.25;
        let n_eta = 64;
        let d_eta = 0.125;
        let mut fspec = SpectralField::zeros(n_xi, d_xi, SecondAxis::Eta { n: n_eta, d: d_eta });
        for k in 0..n_xi {
            let xi = fspec.xi(k);
            for m in 0..n_eta {
                let eta = signed_freq(m, n_eta, d_eta);
                let a = (-(xi * xi + eta * eta) / 8.0).exp();
                fspec.values[k * n_eta + m] = Complex64::new(a, 0.3 * a);
            }
        }
        let rho_need = (d_xi * 8.0f64).hypot(d_eta * 32.0);
        let d_rho = 2e-5;
        let n_rho = (rho_need / d_rho).ceil() as usize + 2;
        let gspec = reflectivity_to_data_spectrum(&fspec, n_rho, d_rho).unwrap();
        let back = data_to_reflectivity_spectrum(&gspec, n_eta, d_eta).unwrap();
        let mut err = 0.0f64;
        let mut norm = 0.0f64;
        for k in 0..n_xi {
            let xi = fspec.xi(k);
            for m in 0..n_eta {
                let eta = signed_freq(m, n_eta, d_eta);
                if eta == 0.0 || m == n_eta / 2 {
                    continue;
                }
                // The guard band around the cone zeroes G there; skip bins
                // whose rho falls inside it.
                let rho = xi.hypot(eta);
                if rho <= xi.abs() + d_rho {
                    continue;
                }
                let d = back.values[k * n_eta + m] - fspec.values[k * n_eta + m];
                err += d.norm_sqr();
                norm += fspec.values[k * n_eta + m].norm_sqr();
            }
        }
        let rel = (err / norm).sqrt();
        assert!(rel < 1e-6, "roundtrip relative error {rel}");
    }

    #[test]
    fn even_image_spectrum_matches_direct_sum() {
        let grid = ImageGrid::new(6, 4, 0.5, 0.5, -1.5, 0.0).unwrap();
        let img = Image::from_fn(grid.clone(), |x, y| {
            (-(x * x + y * y)).exp() * (1.0 + 0.3 * x)
        });
        let spec = image_spectrum_even(&img).unwrap();
        // Literal re-evaluation of the defining DFT: even-extended rows in
        // wrap order (the unsampled wrap row q = ny clamps to row ny - 1,
        // matching the non-decayed-image convention), x phase anchored at
        // the grid origin.
        let m_rows = 8;
        for &(k, m) in &[(0usize, 1usize), (2, 3), (5, 7), (3, 4)] {
            let xi = spec.xi(k);
            let mut direct = Complex64::new(0.0, 0.0);
            for q in 0..m_rows {
                let src = if q < 4 { q } else { (8 - q).min(3) };
                for i in 0..6 {
                    let v = img.values[src * 6 + i];
                    let ph = -2.0 * std::f64::consts::PI
                        * (k as f64 * i as f64 / 6.0 + m as f64 * q as f64 / 8.0);
                    direct += Complex64::from_polar(v, ph);
                }
            }
            let direct = direct
                * Complex64::from_polar(1.0, -xi * grid.x0)
                * (0.25 / (2.0 * std::f64::consts::PI));
            let got = spec.values[k * m_rows + m];
            assert!(
                (got - direct).norm() < 1e-12,
                "bin ({k},{m}): got {got}, direct {direct}"
            );
        }
    }

    #[test]
    fn fourier_route_recovers_gaussian() {
        // Circle-mean data of a compact object decays only like 1/|x|
        // along its diagonal ridges, so a finite track window truncates
        // live signal and the lowest eta rows of the recovered spectrum
        // carry a Bessel-tail oscillation that shrinks like the inverse
        // square root of the aperture. The error must drop as the track
        // window widens past the image; bounds frozen from measured
        // values 0.347 and 0.200.
        let n = 64;
        let half = 4.0;
        let sigma = 0.55;
        let img = gaussian_image(n, half, sigma);
        let d = img.grid.dx;
        let rel_at_extent = |extent: usize| -> f64 {
            let nt = n * extent;
            let tmin = -half * extent as f64;
            let reach = tmin.abs() + 3.0 * sigma + 1.0;
            let nr = (reach / (d * 0.5)).ceil() as usize + 2;
            let dgrid = DataGrid::new(nt, nr, d, d * 0.5, tmin).unwrap();
            let data = forward(&img, &dgrid, 8 * nt).unwrap();
            let rec = invert_fourier(&data, &img.grid).unwrap();
            let mut err = 0.0f64;
            let mut norm = 0.0f64;
            for (a, b) in rec.values.iter().zip(&img.values) {
                err += (a - b) * (a - b);
                norm += b * b;
            }
            (err / norm).sqrt()
        };
        let e1 = rel_at_extent(1);
        let e2 = rel_at_extent(2);
        assert!(e1 < 0.45, "extent-1 relative error {e1}");
        assert!(e2 < 0.25, "extent-2 relative error {e2}");
        assert!(e2 < e1, "no aperture improvement: {e1} -> {e2}");
    }

    #[test]
    fn fourier_route_checks_alignment() {
        let grid = ImageGrid::new(8, 4, 0.5, 0.5, -2.0, 0.0).unwrap();
        let dgrid = DataGrid::new(8, 8, 0.5, 0.25, -2.0).unwrap();
        let data = DataField::zeros(dgrid.clone());
        // Mismatched dx.
        let bad = ImageGrid::new(8, 4, 0.4, 0.5, -2.0, 0.0).unwrap();
        assert!(invert_fourier(&data, &bad).is_err());
        // Off-lattice x0.
        let bad = ImageGrid::new(7, 4, 0.5, 0.5, -1.8, 0.0).unwrap();
        assert!(invert_fourier(&data, &bad).is_err());
        // y lattice not anchored at 0.
        let bad = ImageGrid::new(8, 4, 0.5, 0.5, -2.0, 0.3).unwrap();
        assert!(invert_fourier(&data, &bad).is_err());
        // Aligned case passes validation and runs.
        assert!(invert_fourier(&data, &grid).is_ok());
    }

    #[test]
    fn tail_fraction_flags_live_boundary() {
        let dgrid = DataGrid::new(4, 8, 1.0, 0.5, -2.0).unwrap();
        let mut f = DataField::zeros(dgrid.clone());
        f.values[dgrid.idx(1, 3)] = 2.0;
        assert_eq!(tail_fraction(&f), 0.0);
        f.values[dgrid.idx(2, 7)] = 0.5;
        assert!((tail_fraction(&f) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn phantom_spectrum_feeds_consistent_pipeline() {
        // forward data of a compact phantom should produce a spectrum
        // whose inverse localizes the object, exercised end to end at
        // small size. A sharp disc through a finite aperture keeps
        // sizable edge ringing and an amplitude deficit (measured 0.505
        // at double extent), so the bound is loose; the placement check
        // is the sharp part.
        let spec = PhantomSpec {
            discs: vec![Disc { cx: 0.0, cy: 1.0, radius: 0.8, amplitude: 1.0 }],
        };
        let grid = ImageGrid::new(32, 16, 0.25, 0.25, -4.0, 0.0).unwrap();
        let img = render_phantom(&spec, grid).unwrap();
        // Track window twice the image width; radial reach covers the
        // farthest live circle (track corner to the disc's far edge), so
        // nothing truncates.
        let dgrid = DataGrid::new(64, 78, 0.25, 0.125, -8.0).unwrap();
        let data = forward(&img, &dgrid, 512).unwrap();
        let rec = invert_fourier(&data, &grid).unwrap();
        let mut err = 0.0f64;
        let mut norm = 0.0f64;
        for (a, b) in rec.values.iter().zip(&img.values) {
            err += (a - b) * (a - b);
            norm += b * b;
        }
        let rel = (err / norm).sqrt();
        assert!(rel < 0.6, "pipeline relative error {rel}");
        // The strongest pixel lands inside the disc.
        let (mut best, mut at) = (f64::MIN, (0usize, 0usize));
        for j in 0..16 {
            for i in 0..32 {
                let v = rec.values[j * 32 + i];
                if v > best {
                    best = v;
                    at = (i, j);
                }
            }
        }
        let (x, y) = (grid.x(at.0), grid.y(at.1));
        let inside = x * x + (y - 1.0) * (y - 1.0) <= 0.8 * 0.8;
        assert!(inside, "peak {best:.3} at ({x}, {y}) outside the disc");
    }
}
