//! Discrete spherical Radon transform: circle averages of a sampled image.
//!
//! The antenna at track position x measures, for each radius r, the mean of
//! the reflectivity over the circle of radius r about (x, 0):
//!
//! `g(x_i, r_j) = (1/2π) Σ_m f(x_i + r_j cos θ_m, r_j |sin θ_m|) · Δθ`
//!
//! with θ_m uniform on [0, 2π), f bilinear and zero outside its grid, and the
//! even-in-y extension f(x, |y|). Since f vanishes outside a bounding box,
//! only the angular arcs whose circle points can enter the (one-cell padded)
//! box contribute; [`forward`] enumerates exactly those index ranges in
//! ascending order, so its sums match a naive full sweep term for term.

use crate::error::{Result, SartError};
use crate::grid::{DataField, DataGrid, Image, ImageGrid, PhantomSpec};

/// Default angular sampling: keeps arc steps below one pixel at the largest
/// radius of the canonical scenario.
pub fn default_n_angles(grid: &ImageGrid) -> usize {
    4 * grid.nx.max(grid.ny)
}

/// Circle averages about the track y = 0, seeing only f(x, |y|).
pub fn forward(img: &Image, dgrid: &DataGrid, n_angles: usize) -> Result<DataField> {
    project(img, dgrid, n_angles, Track::Mirror)
}

/// Circle averages about the line y = track_y, sampling f with signed y.
/// Used by the multi-antenna experiments where each antenna sits at its own
/// offset; `forward` is the common special case of even scenes about y = 0.
pub fn forward_about(
    img: &Image,
    dgrid: &DataGrid,
    n_angles: usize,
    track_y: f64,
) -> Result<DataField> {
    if !track_y.is_finite() {
        return Err(SartError::InvalidArgument("track_y must be finite".into()));
    }
    project(img, dgrid, n_angles, Track::About(track_y))
}

#[derive(Clone, Copy)]
enum Track {
    Mirror,
    About(f64),
}

/// Physical bounding box of possibly nonzero image values, padded by one
/// interpolation cell: bilinear values vanish identically outside it.
struct Bbox {
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
}

fn padded_bbox(img: &Image) -> Option<Bbox> {
    let (i0, i1, j0, j1) = img.nonzero_bbox()?;
    let g = &img.grid;
    let px = g.dx * (1.0 + 1e-9);
    let py = g.dy * (1.0 + 1e-9);
    Some(Bbox {
        x_lo: g.x(i0) - px,
        x_hi: g.x(i1) + px,
        y_lo: g.y(j0) - py,
        y_hi: g.y(j1) + py,
    })
}

/// Intervals (at most two, ascending, disjoint) of θ in [0, π] where
/// cos θ ∈ [u0, u1] and sin θ ∈ [v0, v1].
fn windows_half(u0: f64, u1: f64, v0: f64, v1: f64, out: &mut Vec<(f64, f64)>) {
    out.clear();
    if u0 > 1.0 || u1 < -1.0 || v0 > 1.0 || v1 < 0.0 || u0 > u1 || v0 > v1 {
        return;
    }
    let a = u1.clamp(-1.0, 1.0).acos();
    let b = u0.clamp(-1.0, 1.0).acos();
    let p = v0.clamp(0.0, 1.0).asin();
    let q = v1.clamp(0.0, 1.0).asin();
    // sin θ ∈ [v0, v1] on [0, π] holds on [p, q] ∪ [π−q, π−p]; the two merge
    // when q reaches π/2.
    let sin_windows: [(f64, f64); 2] = if std::f64::consts::PI - q <= q {
        [(p, std::f64::consts::PI - p), (f64::NAN, f64::NAN)]
    } else {
        [(p, q), (std::f64::consts::PI - q, std::f64::consts::PI - p)]
    };
    for &(lo, hi) in &sin_windows {
        if lo.is_nan() {
            continue;
        }
        let lo = lo.max(a);
        let hi = hi.min(b);
        if lo <= hi {
            out.push((lo, hi));
        }
    }
}

/// Append an ascending angle-index range, merging with the previous range
/// when snapping makes them touch (no index is ever counted twice).
fn push_range(lo: f64, hi: f64, min_m: usize, max_m: usize, ranges: &mut Vec<(usize, usize)>) {
    let m_lo = (lo - 1e-9).ceil().max(0.0) as usize;
    let m_hi = (hi + 1e-9).floor().max(-1.0) as i64;
    if m_hi < 0 {
        return;
    }
    let m_lo = m_lo.max(min_m);
    let m_hi = (m_hi as usize).min(max_m);
    if m_lo <= m_hi {
        if let Some(last) = ranges.last_mut() {
            if last.1 + 1 >= m_lo {
                last.1 = last.1.max(m_hi);
                return;
            }
        }
        ranges.push((m_lo, m_hi));
    }
}

fn project(img: &Image, dgrid: &DataGrid, n_angles: usize, track: Track) -> Result<DataField> {
    if n_angles < 8 {
        return Err(SartError::InvalidArgument(format!(
            "n_angles must be at least 8, got {n_angles}"
        )));
    }
    img.ensure_finite("input image")?;
    let mut out = DataField::zeros(*dgrid);
    let bbox = match padded_bbox(img) {
        Some(b) => b,
        None => return Ok(out),
    };
    let n = n_angles;
    let dtheta = 2.0 * std::f64::consts::PI / n as f64;
    let inv_dtheta = 1.0 / dtheta;
    // Same expression as the definition θ_m = 2πm/n; m·Δθ rounds
    // differently for n that are not powers of two.
    let trig: Vec<(f64, f64)> = (0..n)
        .map(|m| {
            let t = 2.0 * std::f64::consts::PI * m as f64 / n as f64;
            (t.cos(), t.sin())
        })
        .collect();
    // Largest index with θ_m ≤ π (2m ≤ n), exact in integer arithmetic.
    let n_half = n / 2;
    let track_y = match track {
        Track::Mirror => 0.0,
        Track::About(p) => p,
    };

    let mut upper = Vec::with_capacity(2);
    let mut lower = Vec::with_capacity(2);
    let mut ranges: Vec<(usize, usize)> = Vec::with_capacity(4);
    for i in 0..dgrid.n_track {
        let xc = dgrid.track(i);
        for j in 0..dgrid.n_radius {
            let r = dgrid.radius(j);
            let k = dgrid.idx(i, j);
            if r == 0.0 {
                out.values[k] = img.sample(xc, track_y);
                continue;
            }
            let inv_r = 1.0 / r;
            let u0 = (bbox.x_lo - xc) * inv_r;
            let u1 = (bbox.x_hi - xc) * inv_r;
            // Upper half θ ∈ [0, π]: y = track_y + r sin θ (mirror: y = r sin θ).
            windows_half(
                u0,
                u1,
                (bbox.y_lo - track_y) * inv_r,
                (bbox.y_hi - track_y) * inv_r,
                &mut upper,
            );
            // Lower half via φ = 2π − θ ∈ (0, π): y = track_y − r sin φ for the
            // signed average; the mirrored average repeats the upper window.
            match track {
                Track::Mirror => lower.clone_from(&upper),
                Track::About(p) => windows_half(
                    u0,
                    u1,
                    (p - bbox.y_hi) * inv_r,
                    (p - bbox.y_lo) * inv_r,
                    &mut lower,
                ),
            }
            ranges.clear();
            for &(lo, hi) in upper.iter() {
                push_range(lo * inv_dtheta, hi * inv_dtheta, 0, n_half, &mut ranges);
            }
            for &(lo, hi) in lower.iter().rev() {
                // φ ∈ [lo, hi] maps to m = n − φ/Δθ, descending in φ.
                push_range(
                    n as f64 - hi * inv_dtheta,
                    n as f64 - lo * inv_dtheta,
                    n_half + 1,
                    n - 1,
                    &mut ranges,
                );
            }
            let mut sum = 0.0;
            for &(m_lo, m_hi) in &ranges {
                match track {
                    Track::Mirror => {
                        for &(c, s) in &trig[m_lo..=m_hi] {
                            sum += img.sample(xc + r * c, r * s.abs());
                        }
                    }
                    Track::About(p) => {
                        for &(c, s) in &trig[m_lo..=m_hi] {
                            sum += img.sample(xc + r * c, p + r * s);
                        }
                    }
                }
            }
            out.values[k] = sum / n as f64;
        }
    }
    Ok(out)
}

/// Closed-form circle averages of a disc phantom about the track y = 0,
/// valid when every disc lies on or above the track (cy >= radius): the
/// average over the circle of radius r centered at (z, 0) of the scene
/// f(x, |y|) is, per disc, amplitude · 2φ/π with
/// cos φ = (r² + d² − a²)/(2rd), d the distance from (z, 0) to the disc
/// center and a the disc radius (φ clamped to [0, π]).
///
/// Exact up to floating point, so it serves as an oracle for [`forward`]
/// and generates large data extents without quadrature cost.
pub fn disc_arc_data(spec: &PhantomSpec, dgrid: &DataGrid) -> Result<DataField> {
    spec.validate()?;
    for (k, d) in spec.discs.iter().enumerate() {
        if d.cy < d.radius {
            return Err(SartError::InvalidArgument(format!(
                "disc {k} crosses the track (cy = {} < radius = {}); only discs above the track have closed-form data",
                d.cy, d.radius
            )));
        }
    }
    let g = dgrid.clone();
    let mut out = DataField::zeros(g.clone());
    for disc in &spec.discs {
        let a2 = disc.radius * disc.radius;
        for i in 0..g.n_track {
            let z = g.track(i);
            let ex = z - disc.cx;
            let d2 = ex * ex + disc.cy * disc.cy;
            let d = d2.sqrt();
            let row = i * g.n_radius;
            for j in 0..g.n_radius {
                let r = g.radius(j);
                if r == 0.0 {
                    // Degenerate circle: the track point itself.
                    if d2 <= a2 {
                        out.values[row] += disc.amplitude;
                    }
                    continue;
                }
                // Outside [d−a, d+a] the circle misses the disc.
                if (r - d).abs() > disc.radius {
                    continue;
                }
                let cos_phi = ((r * r + d2 - a2) / (2.0 * r * d)).clamp(-1.0, 1.0);
                out.values[row + j] += disc.amplitude * 2.0 * cos_phi.acos()
                    / std::f64::consts::PI;
            }
        }
    }
    Ok(out)
}
