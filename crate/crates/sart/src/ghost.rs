//! Invisible-object atlas: families of data fields supported entirely on
//! the unmeasured region (radii beyond R for the range family, track
//! positions beyond |x| = L for the mode families), projections of
//! full-extent data onto them, and the image-side ghosts they induce.
//!
//! A ghost image forward-projects to data that vanishes on the measured
//! strip, so adding it to any reconstruction changes nothing an
//! instrument with that geometry can see. The families:
//!
//! * range:  `o[a,b](x,r) = delta(x-a) cos(b s)/s`, `s = sqrt(r^2-R^2)`,
//!   supported on `r > R`;
//! * even:   `o[a,l](x,r) = J0(a sqrt(x^2-L^2)) cos(l pi r''/R)/r''` on
//!   `|x| > L`, `r < R`, with `r'' = sqrt(R^2-r^2)`;
//! * odd:    x times the even family.
//!
//! Projection and recovery integrals run in the substituted variables
//! `r' = sqrt(r^2-R^2)` and `x' = sqrt(x^2-L^2)` where the families
//! reduce to plain cosine and Bessel kernels.

use crate::bessel::bessel_j0;
use crate::error::{Result, SartError};
use crate::fbp::{d_dy, hilbert_y};
use crate::forward::forward;
use crate::grid::{DataField, DataGrid, Image, ImageGrid};

/// Which unmeasured-region family a ghost belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GhostFamily {
    Range,
    Even,
    Odd,
}

impl std::fmt::Display for GhostFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GhostFamily::Range => "range",
            GhostFamily::Even => "even",
            GhostFamily::Odd => "odd",
        })
    }
}

/// Family-specific parameter payload.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GhostKind {
    /// Radial cosine parameter `b >= 0`.
    Range { b: f64 },
    /// Track cosine mode `l >= 0`.
    Even { l: usize },
    Odd { l: usize },
}

/// One ghost: family payload, Hankel/track parameter `a`, and the
/// geometry bounds (half track length L, radial cutoff R).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GhostParams {
    pub kind: GhostKind,
    /// Track position of the spike (range family) or Hankel parameter
    /// `>= 0` (mode families).
    pub a: f64,
    pub l_bound: f64,
    pub r_bound: f64,
}

impl GhostParams {
    pub fn range(a: f64, b: f64, l_bound: f64, r_bound: f64) -> Result<Self> {
        let p = GhostParams { kind: GhostKind::Range { b }, a, l_bound, r_bound };
        p.validate()?;
        Ok(p)
    }

    pub fn even_mode(a: f64, l: usize, l_bound: f64, r_bound: f64) -> Result<Self> {
        let p = GhostParams { kind: GhostKind::Even { l }, a, l_bound, r_bound };
        p.validate()?;
        Ok(p)
    }

    pub fn odd_mode(a: f64, l: usize, l_bound: f64, r_bound: f64) -> Result<Self> {
        let p = GhostParams { kind: GhostKind::Odd { l }, a, l_bound, r_bound };
        p.validate()?;
        Ok(p)
    }

    pub fn family(&self) -> GhostFamily {
        match self.kind {
            GhostKind::Range { .. } => GhostFamily::Range,
            GhostKind::Even { .. } => GhostFamily::Even,
            GhostKind::Odd { .. } => GhostFamily::Odd,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l_bound > 0.0)
            || !(self.r_bound > 0.0)
            || !self.l_bound.is_finite()
            || !self.r_bound.is_finite()
        {
            return Err(SartError::InvalidArgument(format!(
                "geometry bounds must be positive and finite, got L = {}, R = {}",
                self.l_bound, self.r_bound
            )));
        }
        if !self.a.is_finite() {
            return Err(SartError::InvalidArgument("parameter a must be finite".into()));
        }
        match self.kind {
            GhostKind::Range { b } => {
                if !(b >= 0.0) || !b.is_finite() {
                    return Err(SartError::InvalidArgument(format!(
                        "range parameter b must be >= 0, got {b}"
                    )));
                }
            }
            GhostKind::Even { .. } | GhostKind::Odd { .. } => {
                if !(self.a >= 0.0) {
                    return Err(SartError::InvalidArgument(format!(
                        "Hankel parameter a must be >= 0, got {}",
                        self.a
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Evaluate a ghost data field at `(x, r)`. The range family's track
/// delta follows the discrete convention: `1/d_track` on the track
/// sample nearest `a` (as located on `dgrid`), zero on every other
/// sample. Callers keep evaluation points away from the singular loci
/// `r = R` and `|x| = L`.
pub fn eval_ghost_data(p: &GhostParams, x: f64, r: f64, dgrid: &DataGrid) -> f64 {
    let lb = p.l_bound;
    let rb = p.r_bound;
    match p.kind {
        GhostKind::Range { b } => {
            let spike = ((p.a - dgrid.track_min) / dgrid.d_track).round();
            let here = ((x - dgrid.track_min) / dgrid.d_track).round();
            if spike != here
                || (x - dgrid.track(here as usize)).abs() > 0.25 * dgrid.d_track
            {
                return 0.0;
            }
            let s2 = r * r - rb * rb;
            if s2 <= 0.0 {
                return 0.0;
            }
            let s = s2.sqrt();
            (b * s).cos() / s / dgrid.d_track
        }
        GhostKind::Even { l } => mode_value(p.a, l, x, r, lb, rb),
        GhostKind::Odd { l } => x * mode_value(p.a, l, x, r, lb, rb),
    }
}

fn mode_value(a: f64, l: usize, x: f64, r: f64, lb: f64, rb: f64) -> f64 {
    let xp2 = x * x - lb * lb;
    let rs2 = rb * rb - r * r;
    if xp2 <= 0.0 || rs2 <= 0.0 {
        return 0.0;
    }
    let rs = rs2.sqrt();
    bessel_j0(a * xp2.sqrt()) * (l as f64 * std::f64::consts::PI * rs / rb).cos() / rs
}

/// Evaluate a ghost on every sample of a data grid.
pub fn render_ghost_data(p: &GhostParams, dgrid: &DataGrid) -> DataField {
    let mut out = DataField::zeros(dgrid.clone());
    for i in 0..dgrid.n_track {
        let x = dgrid.track(i);
        for j in 0..dgrid.n_radius {
            out.values[dgrid.idx(i, j)] = eval_ghost_data(p, x, dgrid.radius(j), dgrid);
        }
    }
    out
}

/// Uniform parameter lattice `node(i) = start + i*step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSpec {
    pub start: f64,
    pub step: f64,
}

impl AxisSpec {
    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }
}

/// Parameter sampling for [`project_unmeasured`]: a midpoint b-lattice
/// for the range family, or a midpoint a-lattice crossed with modes
/// `l = 0..=l_max` for the even/odd families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamGrid {
    Range { n_b: usize, d_b: f64 },
    Modes { n_a: usize, d_a: f64, l_max: usize },
}

/// Projection coefficients of a data field onto one ghost family.
///
/// Rows follow `row_axis` (track positions for the range family, Hankel
/// midpoints for the mode families); columns follow `col_axis`
/// (b midpoints, respectively mode numbers with step 1).
#[derive(Debug, Clone, PartialEq)]
pub struct GhostTable {
    pub family: GhostFamily,
    pub l_bound: f64,
    pub r_bound: f64,
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_axis: AxisSpec,
    pub col_axis: AxisSpec,
    pub values: Vec<f64>,
}

impl GhostTable {
    #[inline]
    pub fn idx(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.n_rows && col < self.n_cols);
        row * self.n_cols + col
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[self.idx(row, col)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

fn check_bounds(l_bound: f64, r_bound: f64) -> Result<()> {
    if !(l_bound > 0.0) || !(r_bound > 0.0) || !l_bound.is_finite() || !r_bound.is_finite() {
        return Err(SartError::InvalidArgument(format!(
            "geometry bounds must be positive and finite, got L = {l_bound}, R = {r_bound}"
        )));
    }
    Ok(())
}

/// Number of midpoint nodes `(j+1/2)h` that fit below `limit`.
fn midpoint_count(limit: f64, h: f64) -> usize {
    ((limit / h - 0.5).floor().max(0.0) as usize) + 1
}

/// Project full-extent data onto one ghost family.
///
/// Range family: `G(x_i, b_m) = (2/pi) \int_0^{r'max} cos(b r')
/// g(x_i, sqrt(r'^2+R^2)) r' dr'` per track sample, on the midpoint
/// lattice `b_m = (m+1/2) d_b`, with the radial quadrature truncated at
/// the grid's largest radius.
///
/// Mode families: `G^l(a_m) = (eps_l a_m / 2R) \int\int [g(x,r) +- g(-x,r)]
/// J0(a_m x') cos(l pi r''/R) w x' r'' dx' dr''` with `x = sqrt(x'^2+L^2)`,
/// `r = sqrt(R^2-r''^2)`, weight `w = 1` for even and `1/x` for odd, on
/// the midpoint a-lattice. Orthogonality makes these exact inverses of
/// the family synthesis in the continuum limit.
pub fn project_unmeasured(
    g_full: &DataField,
    family: GhostFamily,
    params: &ParamGrid,
    l_bound: f64,
    r_bound: f64,
) -> Result<GhostTable> {
    check_bounds(l_bound, r_bound)?;
    g_full.ensure_finite("projection input")?;
    let dg = &g_full.grid;
    match (family, params) {
        (GhostFamily::Range, &ParamGrid::Range { n_b, d_b }) => {
            if n_b == 0 || !(d_b > 0.0) {
                return Err(SartError::InvalidArgument(
                    "range parameter grid needs n_b >= 1 and d_b > 0".into(),
                ));
            }
            if dg.radius_max() < r_bound + 2.0 * dg.d_radius {
                return Err(SartError::InvalidArgument(format!(
                    "data radius_max {} does not extend beyond R = {r_bound}",
                    dg.radius_max()
                )));
            }
            let h = dg.d_radius;
            let rp_max = (dg.radius_max() * dg.radius_max() - r_bound * r_bound).sqrt();
            let n_rp = midpoint_count(rp_max, h);
            let mut table = GhostTable {
                family,
                l_bound,
                r_bound,
                n_rows: dg.n_track,
                n_cols: n_b,
                row_axis: AxisSpec { start: dg.track_min, step: dg.d_track },
                col_axis: AxisSpec { start: 0.5 * d_b, step: d_b },
                values: vec![0.0; dg.n_track * n_b],
            };
            let scale = 2.0 / std::f64::consts::PI * h;
            for i in 0..dg.n_track {
                // Weighted radial profile at this track sample.
                let prof: Vec<(f64, f64)> = (0..n_rp)
                    .map(|j| {
                        let rp = (j as f64 + 0.5) * h;
                        let r = (rp * rp + r_bound * r_bound).sqrt();
                        (rp, g_full.sample_radius(i, r) * rp)
                    })
                    .collect();
                for m in 0..n_b {
                    let b = table.col_axis.node(m);
                    let mut acc = 0.0;
                    for &(rp, w) in &prof {
                        acc += (b * rp).cos() * w;
                    }
                    table.values[i * n_b + m] = acc * scale;
                }
            }
            Ok(table)
        }
        (GhostFamily::Even, &ParamGrid::Modes { n_a, d_a, l_max })
        | (GhostFamily::Odd, &ParamGrid::Modes { n_a, d_a, l_max }) => {
            if n_a == 0 || !(d_a > 0.0) {
                return Err(SartError::InvalidArgument(
                    "mode parameter grid needs n_a >= 1 and d_a > 0".into(),
                ));
            }
            let reach = dg.track_max().min(-dg.track_min);
            if reach < l_bound + 2.0 * dg.d_track {
                return Err(SartError::InvalidArgument(format!(
                    "data track span [{}, {}] does not extend beyond |x| = {l_bound}",
                    dg.track_min,
                    dg.track_max()
                )));
            }
            if dg.radius_max() < r_bound {
                return Err(SartError::InvalidArgument(format!(
                    "data radius_max {} does not cover R = {r_bound}",
                    dg.radius_max()
                )));
            }
            let odd = family == GhostFamily::Odd;
            let hx = dg.d_track;
            let hr = dg.d_radius;
            let xp_max = (reach * reach - l_bound * l_bound).sqrt();
            let n_xp = midpoint_count(xp_max, hx);
            let n_rs = midpoint_count(r_bound, hr);
            let nl = l_max + 1;
            // cos(l pi r''/R) table and the r''-weighted data rows.
            let mut cos_rs = vec![0.0f64; nl * n_rs];
            let rs: Vec<f64> = (0..n_rs).map(|j| (j as f64 + 0.5) * hr).collect();
            for l in 0..nl {
                for j in 0..n_rs {
                    cos_rs[l * n_rs + j] =
                        (l as f64 * std::f64::consts::PI * rs[j] / r_bound).cos();
                }
            }
            let mut table = GhostTable {
                family,
                l_bound,
                r_bound,
                n_rows: n_a,
                n_cols: nl,
                row_axis: AxisSpec { start: 0.5 * d_a, step: d_a },
                col_axis: AxisSpec { start: 0.0, step: 1.0 },
                values: vec![0.0; n_a * nl],
            };
            // te[ix][l]: the r''-integral at each substituted track node.
            let mut te = vec![0.0f64; n_xp * nl];
            let mut xps = vec![0.0f64; n_xp];
            let mut wx = vec![0.0f64; n_xp];
            for ix in 0..n_xp {
                let xp = (ix as f64 + 0.5) * hx;
                let x = (xp * xp + l_bound * l_bound).sqrt();
                xps[ix] = xp;
                wx[ix] = if odd { xp / x } else { xp };
                for j in 0..n_rs {
                    let r = (r_bound * r_bound - rs[j] * rs[j]).max(0.0).sqrt();
                    let gp = g_full.sample(x, r);
                    let gm = g_full.sample(-x, r);
                    let comb = if odd { gp - gm } else { gp + gm };
                    let w = comb * rs[j];
                    for l in 0..nl {
                        te[ix * nl + l] += w * cos_rs[l * n_rs + j];
                    }
                }
            }
            for m in 0..n_a {
                let a = table.row_axis.node(m);
                for ix in 0..n_xp {
                    let j0 = bessel_j0(a * xps[ix]) * wx[ix];
                    for l in 0..nl {
                        table.values[m * nl + l] += j0 * te[ix * nl + l];
                    }
                }
                for l in 0..nl {
                    let eps = if l == 0 { 1.0 } else { 2.0 };
                    table.values[m * nl + l] *= eps * a / (2.0 * r_bound) * hx * hr;
                }
            }
            Ok(table)
        }
        _ => Err(SartError::InvalidArgument(format!(
            "parameter grid does not match family {family}"
        ))),
    }
}

/// Resynthesize a data field from family coefficients on the unmeasured
/// region (zero on the measured strip).
///
/// Range rows resynthesize on their own track sample only; tracks of
/// `dgrid` that match no table row stay zero.
pub fn recover_outside(table: &GhostTable, dgrid: &DataGrid) -> Result<DataField> {
    let mut out = DataField::zeros(dgrid.clone());
    let lb = table.l_bound;
    let rb = table.r_bound;
    match table.family {
        GhostFamily::Range => {
            let db = table.col_axis.step;
            for i in 0..dgrid.n_track {
                let x = dgrid.track(i);
                let row = ((x - table.row_axis.start) / table.row_axis.step).round();
                if row < 0.0 || row >= table.n_rows as f64 {
                    continue;
                }
                let row = row as usize;
                if (table.row_axis.node(row) - x).abs() > 1e-6 * table.row_axis.step {
                    continue;
                }
                for j in 0..dgrid.n_radius {
                    let r = dgrid.radius(j);
                    let s2 = r * r - rb * rb;
                    if s2 <= 0.0 {
                        continue;
                    }
                    let rp = s2.sqrt();
                    let mut acc = 0.0;
                    for m in 0..table.n_cols {
                        acc += (table.col_axis.node(m) * rp).cos() * table.at(row, m);
                    }
                    out.values[dgrid.idx(i, j)] = acc * db / rp;
                }
            }
        }
        GhostFamily::Even | GhostFamily::Odd => {
            let odd = table.family == GhostFamily::Odd;
            let da = table.row_axis.step;
            for i in 0..dgrid.n_track {
                let x = dgrid.track(i);
                let xp2 = x * x - lb * lb;
                if xp2 <= 0.0 {
                    continue;
                }
                let xp = xp2.sqrt();
                // J0 row reused across radii.
                let j0s: Vec<f64> = (0..table.n_rows)
                    .map(|m| bessel_j0(table.row_axis.node(m) * xp))
                    .collect();
                for j in 0..dgrid.n_radius {
                    let r = dgrid.radius(j);
                    let rs2 = rb * rb - r * r;
                    if rs2 <= 0.0 {
                        continue;
                    }
                    let rs = rs2.sqrt();
                    let mut acc = 0.0;
                    for l in 0..table.n_cols {
                        let c = (l as f64 * std::f64::consts::PI * rs / rb).cos();
                        let mut inner = 0.0;
                        for (m, j0) in j0s.iter().enumerate() {
                            inner += j0 * table.at(m, l);
                        }
                        acc += c * inner;
                    }
                    let v = acc * da / rs;
                    out.values[dgrid.idx(i, j)] = if odd { x * v } else { v };
                }
            }
        }
    }
    Ok(out)
}

/// Render the image-side ghost for one parameter tuple.
///
/// Range family: `f = (1/sqrt(8 pi)) H_y d/dy [cos(b s)/s]` with
/// `s = sqrt((x-a)^2 + y^2 - R^2)` outside the circle of radius R about
/// `(a, 0)`, zero inside. Mode families: `f = sqrt(2/pi) H_y d/dy
/// \int J0(a sqrt(t^2-L^2)) cos(l pi w/R)/w dt` over `|t| > L`,
/// `w = sqrt(R^2-(x-t)^2-y^2) > 0` (times x for the odd family).
///
/// With `subtract_baseline` the `b = 0` (resp. `l = 0`) ghost at the same
/// `a` is removed inside the kernels (`cos(..) - 1`), which cancels the
/// strongest singularity; the flag set with `b = 0` or `l = 0` therefore
/// returns an exactly zero image.
///
/// The grid must resolve the radial cosine (at least 8 samples per
/// oscillation) and have its y lattice aligned to y = 0.
pub fn ghost_image(p: &GhostParams, subtract_baseline: bool, igrid: &ImageGrid) -> Result<Image> {
    p.validate()?;
    let h = igrid.dx.min(igrid.dy);
    let wavelength = match p.kind {
        GhostKind::Range { b } => {
            if b > 0.0 {
                2.0 * std::f64::consts::PI / b
            } else {
                f64::INFINITY
            }
        }
        GhostKind::Even { l } | GhostKind::Odd { l } => {
            if l > 0 {
                2.0 * p.r_bound / l as f64
            } else {
                f64::INFINITY
            }
        }
    };
    if h > wavelength / 8.0 {
        return Err(SartError::InvalidArgument(format!(
            "grid spacing {h} cannot resolve the radial oscillation (period {wavelength}); need at least 8 samples per period"
        )));
    }
    let align = igrid.y0 / igrid.dy;
    if (align - align.round()).abs() > 1e-6 {
        return Err(SartError::InvalidGrid(
            "image y lattice is not aligned to y = 0".into(),
        ));
    }
    let internal = padded_symmetric_grid(igrid, p.r_bound)?;
    let half_rows = internal.ny / 2;
    let mut pre = Image::zeros(internal);
    for j in half_rows..internal.ny {
        let y = internal.y(j);
        for i in 0..internal.nx {
            let x = internal.x(i);
            let v = match p.kind {
                GhostKind::Range { b } => {
                    let s2 = (x - p.a) * (x - p.a) + y * y - p.r_bound * p.r_bound;
                    if s2 <= 0.0 {
                        0.0
                    } else {
                        let s = s2.sqrt();
                        if subtract_baseline {
                            ((b * s).cos() - 1.0) / s
                        } else {
                            (b * s).cos() / s
                        }
                    }
                }
                GhostKind::Even { l } | GhostKind::Odd { l } => mode_pre_integral(
                    p.a,
                    l,
                    x,
                    y,
                    p.l_bound,
                    p.r_bound,
                    subtract_baseline,
                ),
            };
            pre.values[internal.idx(i, j)] = v;
            let jm = 2 * half_rows - j;
            if jm < internal.ny {
                pre.values[internal.idx(i, jm)] = v;
            }
        }
    }
    let deriv = d_dy(&pre);
    let hil = hilbert_y(&deriv)?;
    let scale = match p.kind {
        GhostKind::Range { .. } => 1.0 / (8.0 * std::f64::consts::PI).sqrt(),
        _ => (2.0 / std::f64::consts::PI).sqrt(),
    };
    let odd = matches!(p.kind, GhostKind::Odd { .. });
    let mut out = Image::zeros(*igrid);
    let j_base = ((igrid.y0 - hil.grid.y0) / igrid.dy).round() as usize;
    for j in 0..igrid.ny {
        for i in 0..igrid.nx {
            let v = hil.values[hil.grid.idx(i, j_base + j)] * scale;
            out.values[igrid.idx(i, j)] = if odd { igrid.x(i) * v } else { v };
        }
    }
    out.ensure_finite("ghost image")?;
    Ok(out)
}

/// Symmetric-in-y grid enclosing `igrid` with clearance for the periodic
/// Hilbert column (the ghost fields are even in y, so only half the rows
/// are ever evaluated directly).
fn padded_symmetric_grid(igrid: &ImageGrid, r_bound: f64) -> Result<ImageGrid> {
    let y_need = igrid.y0.abs().max(igrid.y_max().abs()).max(r_bound);
    let half_rows = ((2.0 * (y_need + r_bound)) / igrid.dy).ceil() as usize + 4;
    ImageGrid::new(
        igrid.nx,
        2 * half_rows,
        igrid.dx,
        igrid.dy,
        igrid.x0,
        -(half_rows as f64) * igrid.dy,
    )
}

/// t-integral of the mode families' pre-Hilbert field at one point: the
/// window `|x-t| < sqrt(R^2-y^2)` intersected with `|t| > L` splits into
/// at most two intervals; each is quadratured under the substitution
/// `t = mid + half*sin(psi)`, which flattens both the inverse square
/// root of the kernel and the square-root kink at the window ends. Node
/// counts double until the value settles within 1e-4 (absolute, relative
/// above unit magnitude).
fn mode_pre_integral(
    a: f64,
    l: usize,
    x: f64,
    y: f64,
    l_bound: f64,
    r_bound: f64,
    subtract_baseline: bool,
) -> f64 {
    let w2 = r_bound * r_bound - y * y;
    if w2 <= 0.0 {
        return 0.0;
    }
    let reach = w2.sqrt();
    let mut total = 0.0;
    for (lo, hi) in [
        ((x - reach).min(-l_bound), (x + reach).min(-l_bound)),
        ((x - reach).max(l_bound), (x + reach).max(l_bound)),
    ] {
        if hi <= lo {
            continue;
        }
        total += window_integral(a, l, x, y, l_bound, r_bound, lo, hi, subtract_baseline);
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn window_integral(
    a: f64,
    l: usize,
    x: f64,
    y: f64,
    l_bound: f64,
    r_bound: f64,
    lo: f64,
    hi: f64,
    subtract_baseline: bool,
) -> f64 {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let lf = l as f64 * std::f64::consts::PI / r_bound;
    let y2 = y * y;
    let r2 = r_bound * r_bound;
    let eval = |n: usize| -> f64 {
        let h = std::f64::consts::PI / n as f64;
        let mut acc = 0.0;
        for q in 0..n {
            let psi = -std::f64::consts::FRAC_PI_2 + (q as f64 + 0.5) * h;
            let (sp, cp) = psi.sin_cos();
            let t = mid + half * sp;
            let u = x - t;
            let w2 = r2 - u * u - y2;
            if w2 <= 0.0 {
                continue;
            }
            let w = w2.sqrt();
            let kernel = if subtract_baseline {
                ((lf * w).cos() - 1.0) / w
            } else {
                (lf * w).cos() / w
            };
            let xp = (t * t - l_bound * l_bound).max(0.0).sqrt();
            acc += bessel_j0(a * xp) * kernel * cp;
        }
        acc * h * half
    };
    let mut n = 32;
    let mut prev = eval(n);
    loop {
        n *= 2;
        let cur = eval(n);
        if (cur - prev).abs() <= 1e-4 * cur.abs().max(1.0) || n >= 4096 {
            return cur;
        }
        prev = cur;
    }
}

/// Forward-projection energies of a ghost image split over the measured
/// strip (with a guard margin) and its complement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullSpaceCertificate {
    /// L2 norm over `|x| < L - guard`, `r < R - guard`.
    pub measured_l2: f64,
    /// L2 norm over the rest of the data grid.
    pub unmeasured_l2: f64,
    pub total_l2: f64,
    /// measured / unmeasured (infinite if nothing lands outside).
    pub ratio: f64,
}

/// Render the baseline-subtracted ghost on `igrid`, forward-project it
/// on `dgrid`, and measure how much energy leaks into the measured
/// strip, guarded by `guard_px` samples on each boundary.
pub fn null_space_certificate(
    p: &GhostParams,
    igrid: &ImageGrid,
    dgrid: &DataGrid,
    n_angles: usize,
    guard_px: usize,
) -> Result<NullSpaceCertificate> {
    let img = ghost_image(p, true, igrid)?;
    let data = forward(&img, dgrid, n_angles)?;
    let x_lim = p.l_bound - guard_px as f64 * dgrid.d_track;
    let r_lim = p.r_bound - guard_px as f64 * dgrid.d_radius;
    let cell = dgrid.d_track * dgrid.d_radius;
    let mut inside = 0.0;
    let mut outside = 0.0;
    for i in 0..dgrid.n_track {
        let x = dgrid.track(i);
        for j in 0..dgrid.n_radius {
            let v = data.values[dgrid.idx(i, j)];
            let e = v * v * cell;
            if x.abs() < x_lim && dgrid.radius(j) < r_lim {
                inside += e;
            } else {
                outside += e;
            }
        }
    }
    let measured = inside.sqrt();
    let unmeasured = outside.sqrt();
    let ratio = if unmeasured > 0.0 {
        measured / unmeasured
    } else if measured > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(NullSpaceCertificate {
        measured_l2: measured,
        unmeasured_l2: unmeasured,
        total_l2: (inside + outside).sqrt(),
        ratio,
    })
}
