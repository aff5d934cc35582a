//! Inversion by orthogonal families on the measured strip: circle-average
//! data on (x, r) in (0,L)x(0,R) is projected onto separable cosine
//! families, resynthesized, and mapped back to images as a weighted sum
//! of per-mode reconstructions.
//!
//! The families are
//! `i_even[k,l](x,r) = cos(k pi x''/L) cos(l pi r''/R) / (x'' r'')` and
//! `i_odd = x * i_even`, with `x'' = sqrt(L^2-x^2)`, `r'' = sqrt(R^2-r^2)`,
//! supported on the open strip. "Even"/"odd" names the part of the data
//! each family captures: projections pair `i_even` with `g(x,r)+g(-x,r)`
//! and `i_odd` with `g(x,r)-g(-x,r)`.
//!
//! All strip integrals run in the substituted variables `(x'', r'')`,
//! where the family weights turn into plain cosine series and midpoint
//! quadrature makes the cosine orthogonality exact.

use std::path::Path;

use crate::error::{Result, SartError};
use crate::fbp::{d_dy, hilbert_y};
use crate::grid::{DataField, DataGrid, Image, ImageGrid};
use crate::io;

/// Which part of the data a family addresses (see module docs).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl std::fmt::Display for Parity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        })
    }
}

/// Index of one basis element: parity plus track/radius mode numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisIndex {
    pub parity: Parity,
    pub k: usize,
    pub l: usize,
}

/// Projection coefficients for both parities, `(k_max+1) x (l_max+1)`
/// each, row-major in `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffTable {
    pub k_max: usize,
    pub l_max: usize,
    pub even: Vec<f64>,
    pub odd: Vec<f64>,
}

impl CoeffTable {
    pub fn zeros(k_max: usize, l_max: usize) -> Self {
        let n = (k_max + 1) * (l_max + 1);
        CoeffTable { k_max, l_max, even: vec![0.0; n], odd: vec![0.0; n] }
    }

    #[inline]
    pub fn idx(&self, k: usize, l: usize) -> usize {
        debug_assert!(k <= self.k_max && l <= self.l_max);
        k * (self.l_max + 1) + l
    }

    pub fn at(&self, parity: Parity, k: usize, l: usize) -> f64 {
        let i = self.idx(k, l);
        match parity {
            Parity::Even => self.even[i],
            Parity::Odd => self.odd[i],
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.even
            .iter()
            .chain(&self.odd)
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Neumann factor: 1 for mode 0, 2 otherwise.
#[inline]
pub fn neumann(k: usize) -> f64 {
    if k == 0 {
        1.0
    } else {
        2.0
    }
}

/// Quadrature node count used by [`project_data`] along each substituted
/// axis.
pub const PROJECT_NODES: usize = 2048;

fn check_geometry(l_bound: f64, r_bound: f64) -> Result<()> {
    if !(l_bound > 0.0) || !(r_bound > 0.0) || !l_bound.is_finite() || !r_bound.is_finite() {
        return Err(SartError::InvalidArgument(format!(
            "geometry bounds must be positive and finite, got L = {l_bound}, R = {r_bound}"
        )));
    }
    Ok(())
}

/// Evaluate one basis element at `(x, r)`. The even family is even in
/// `x` and the odd family odd (the extra factor `x`), so values extend
/// across `x = 0` by parity. Zero outside `|x| < L`, `0 < r < R`;
/// callers keep evaluation points away from the singular edges
/// `|x| -> L`, `r -> R`.
pub fn eval_basis(idx: &BasisIndex, x: f64, r: f64, l_bound: f64, r_bound: f64) -> f64 {
    if x.abs() >= l_bound || r <= 0.0 || r >= r_bound {
        return 0.0;
    }
    let xs = (l_bound * l_bound - x * x).sqrt();
    let rs = (r_bound * r_bound - r * r).sqrt();
    let v = (idx.k as f64 * std::f64::consts::PI * xs / l_bound).cos()
        * (idx.l as f64 * std::f64::consts::PI * rs / r_bound).cos()
        / (xs * rs);
    match idx.parity {
        Parity::Even => v,
        Parity::Odd => x * v,
    }
}

/// Weighted inner product of two same-parity basis elements on the strip,
/// by midpoint quadrature with `n_nodes` points per substituted axis.
///
/// The weight is `r sqrt(R^2-r^2) x sqrt(L^2-x^2)` for the even family
/// and the same with `1/x` in place of `x` for the odd family; in the
/// substituted variables both reduce to the identical plain cosine
/// product, so the diagonal is `(L/eps_k)(R/eps_l)` exactly up to
/// rounding.
pub fn basis_gram(
    a: &BasisIndex,
    b: &BasisIndex,
    n_nodes: usize,
    l_bound: f64,
    r_bound: f64,
) -> Result<f64> {
    check_geometry(l_bound, r_bound)?;
    if a.parity != b.parity {
        return Err(SartError::InvalidArgument(
            "gram entries pair elements of the same parity".into(),
        ));
    }
    if n_nodes == 0 {
        return Err(SartError::InvalidArgument("need at least one node".into()));
    }
    let dot = |m1: usize, m2: usize, len: f64| -> f64 {
        let h = len / n_nodes as f64;
        let mut acc = 0.0;
        for j in 0..n_nodes {
            let t = (j as f64 + 0.5) * h;
            acc += (m1 as f64 * std::f64::consts::PI * t / len).cos()
                * (m2 as f64 * std::f64::consts::PI * t / len).cos();
        }
        acc * h
    };
    Ok(dot(a.k, b.k, l_bound) * dot(a.l, b.l, r_bound))
}

/// Project an arbitrary sampler `g(x, r)` (signed `x`) onto both
/// families: the scaled strip integrals of `g(x,r) + g(-x,r)` against the
/// even family and of `g(x,r) - g(-x,r)` against the odd family, with the
/// `1/x` odd weight absorbed.
///
/// [`project_data`] wraps this with bilinear data sampling; tests and
/// synthetic studies can pass exact closures.
pub fn project_fn<F: FnMut(f64, f64) -> f64>(
    mut g: F,
    k_max: usize,
    l_max: usize,
    l_bound: f64,
    r_bound: f64,
    n_nodes: usize,
) -> Result<CoeffTable> {
    check_geometry(l_bound, r_bound)?;
    if n_nodes < 2 {
        return Err(SartError::InvalidArgument("need at least two nodes".into()));
    }
    let m = n_nodes;
    let hx = l_bound / m as f64;
    let hr = r_bound / m as f64;
    // Radius-axis tables: substituted node, physical radius, cosine rows.
    let rs: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) * hr).collect();
    let rad: Vec<f64> = rs
        .iter()
        .map(|r2| (r_bound * r_bound - r2 * r2).max(0.0).sqrt())
        .collect();
    let mut cr = vec![0.0f64; (l_max + 1) * m];
    for l in 0..=l_max {
        for i in 0..m {
            cr[l * m + i] = (l as f64 * std::f64::consts::PI * rs[i] / r_bound).cos();
        }
    }
    let mut table = CoeffTable::zeros(k_max, l_max);
    let mut te = vec![0.0f64; l_max + 1];
    let mut to = vec![0.0f64; l_max + 1];
    for j in 0..m {
        let xs = (j as f64 + 0.5) * hx;
        let x = (l_bound * l_bound - xs * xs).max(0.0).sqrt();
        te.iter_mut().for_each(|v| *v = 0.0);
        to.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..m {
            let gp = g(x, rad[i]);
            let gm = g(-x, rad[i]);
            let se = (gp + gm) * rs[i];
            let so = (gp - gm) * rs[i];
            for l in 0..=l_max {
                let c = cr[l * m + i];
                te[l] += se * c;
                to[l] += so * c;
            }
        }
        let we = xs;
        let wo = if x > 0.0 { xs / x } else { 0.0 };
        for k in 0..=k_max {
            let ck = (k as f64 * std::f64::consts::PI * xs / l_bound).cos();
            let fe = ck * we;
            let fo = ck * wo;
            for l in 0..=l_max {
                let i = k * (l_max + 1) + l;
                table.even[i] += fe * te[l];
                table.odd[i] += fo * to[l];
            }
        }
    }
    let base = hx * hr / (2.0 * l_bound * r_bound);
    for k in 0..=k_max {
        for l in 0..=l_max {
            let s = base * neumann(k) * neumann(l);
            let i = k * (l_max + 1) + l;
            table.even[i] *= s;
            table.odd[i] *= s;
        }
    }
    Ok(table)
}

/// Project circle-average data onto both families up to `(k_max, l_max)`,
/// sampling the data bilinearly at [`PROJECT_NODES`] substituted nodes
/// per axis. The data grid must cover the strip for both signs of `x`.
pub fn project_data(
    data: &DataField,
    k_max: usize,
    l_max: usize,
    l_bound: f64,
    r_bound: f64,
) -> Result<CoeffTable> {
    check_geometry(l_bound, r_bound)?;
    let g = &data.grid;
    let track_max = g.track(g.n_track - 1);
    if g.track_min > -l_bound || track_max < l_bound || g.radius_max() < r_bound {
        return Err(SartError::InvalidArgument(format!(
            "data grid (track [{}, {}], radius_max {}) does not cover the strip |x| <= {l_bound}, r <= {r_bound}",
            g.track_min,
            track_max,
            g.radius_max()
        )));
    }
    data.ensure_finite("projection input")?;
    project_fn(
        |x, r| data.sample(x, r),
        k_max,
        l_max,
        l_bound,
        r_bound,
        PROJECT_NODES,
    )
}

/// Evaluate the truncated two-parity sum on a data grid. Nodes outside
/// the open strip, or within half a pixel of the singular edges
/// `x in {0, L}` and `r = R`, are left zero.
pub fn resynthesize(
    coeffs: &CoeffTable,
    dgrid: &DataGrid,
    l_bound: f64,
    r_bound: f64,
) -> Result<DataField> {
    check_geometry(l_bound, r_bound)?;
    let mut out = DataField::zeros(dgrid.clone());
    let inset_x = 0.5 * dgrid.d_track;
    let inset_r = 0.5 * dgrid.d_radius;
    let nl = coeffs.l_max + 1;
    // Radius tables for nodes that participate.
    let mut v = vec![0.0f64; nl];
    let mut we = vec![0.0f64; nl];
    let mut wo = vec![0.0f64; nl];
    for ti in 0..dgrid.n_track {
        let x = dgrid.track(ti);
        if x <= inset_x || x >= l_bound - inset_x {
            continue;
        }
        let xs = (l_bound * l_bound - x * x).sqrt();
        // W[l] = sum_k G[k][l] cos(k pi xs / L), per parity.
        for l in 0..nl {
            we[l] = 0.0;
            wo[l] = 0.0;
        }
        for k in 0..=coeffs.k_max {
            let ck = (k as f64 * std::f64::consts::PI * xs / l_bound).cos();
            for l in 0..nl {
                let i = k * nl + l;
                we[l] += coeffs.even[i] * ck;
                wo[l] += coeffs.odd[i] * ck;
            }
        }
        for rj in 0..dgrid.n_radius {
            let r = dgrid.radius(rj);
            if r <= 0.0 || r >= r_bound - inset_r {
                continue;
            }
            let rs = (r_bound * r_bound - r * r).sqrt();
            for (l, vl) in v.iter_mut().enumerate() {
                *vl = (l as f64 * std::f64::consts::PI * rs / r_bound).cos();
            }
            let mut se = 0.0;
            let mut so = 0.0;
            for l in 0..nl {
                se += we[l] * v[l];
                so += wo[l] * v[l];
            }
            out.values[dgrid.idx(ti, rj)] = (se + x * so) / (xs * rs);
        }
    }
    Ok(out)
}

/// Pre-Hilbert field of one mode's image reconstruction: the t-integral
/// `P(x,y) = integral A(t) B(x-t, y) dt` with
/// `A(t) = cos(k pi sqrt(L^2-t^2)/L)/sqrt(L^2-t^2)` on `|t| < L` and
/// `B(u,y) = cos(l pi w/R)/w`, `w = sqrt(R^2-u^2-y^2)`, on `u^2+y^2 < R^2`.
///
/// The substitution `t = L sin(phi)` absorbs A's endpoint singularity;
/// node counts double until the value settles. Parity is ignored here
/// (the odd image is the even integral times `x`).
pub fn basis_field(
    idx: &BasisIndex,
    grid: &ImageGrid,
    l_bound: f64,
    r_bound: f64,
) -> Result<Image> {
    check_geometry(l_bound, r_bound)?;
    let mut img = Image::zeros(*grid);
    for j in 0..grid.ny {
        let y = grid.y(j);
        let w2 = r_bound * r_bound - y * y;
        if w2 <= 0.0 {
            continue;
        }
        let w = w2.sqrt();
        for i in 0..grid.nx {
            let x = grid.x(i);
            img.values[grid.idx(i, j)] =
                mode_integral(idx.k, idx.l, x, y, w, l_bound, r_bound);
        }
    }
    Ok(img)
}

/// Midpoint quadrature of the mode integrand over the phi window, with
/// doubling until the result changes by less than a relative 1e-6.
fn mode_integral(k: usize, l: usize, x: f64, y: f64, w: f64, l_bound: f64, r_bound: f64) -> f64 {
    let lo = ((x - w) / l_bound).clamp(-1.0, 1.0).asin();
    let hi = ((x + w) / l_bound).clamp(-1.0, 1.0).asin();
    if !(hi > lo) {
        return 0.0;
    }
    let kf = k as f64 * std::f64::consts::PI;
    let lf = l as f64 * std::f64::consts::PI / r_bound;
    let y2 = y * y;
    let r2 = r_bound * r_bound;
    let eval = |n: usize| -> f64 {
        let h = (hi - lo) / n as f64;
        let mut acc = 0.0;
        for q in 0..n {
            let phi = lo + (q as f64 + 0.5) * h;
            let (s, c) = phi.sin_cos();
            let u = x - l_bound * s;
            let w2 = r2 - u * u - y2;
            if w2 <= 0.0 {
                continue;
            }
            let wv = w2.sqrt();
            acc += (kf * c).cos() * (lf * wv).cos() / wv;
        }
        acc * h
    };
    let mut n = 64;
    let mut prev = eval(n);
    loop {
        n *= 2;
        let cur = eval(n);
        if (cur - prev).abs() <= 1e-6 * cur.abs().max(1e-3) || n >= 8192 {
            return cur;
        }
        prev = cur;
    }
}

/// Image-side reconstruction of one basis element:
/// `sqrt(pi/2) * H_y d/dy P` (times `x` for the odd parity), computed on
/// an internal symmetric-in-y grid and sampled back onto `igrid`.
///
/// `igrid` must lie within `|x| <= L + R` and have its y lattice aligned
/// to y = 0.
pub fn basis_reconstruction(
    idx: &BasisIndex,
    igrid: &ImageGrid,
    l_bound: f64,
    r_bound: f64,
) -> Result<Image> {
    check_geometry(l_bound, r_bound)?;
    if igrid.x0 < -(l_bound + r_bound) - 1e-9 || igrid.x_max() > l_bound + r_bound + 1e-9 {
        return Err(SartError::InvalidGrid(format!(
            "image x range [{}, {}] exceeds |x| <= {}",
            igrid.x0,
            igrid.x_max(),
            l_bound + r_bound
        )));
    }
    let pre = signed_pre_hilbert(idx, igrid, l_bound, r_bound)?;
    let deriv = d_dy(&pre);
    let hil = hilbert_y(&deriv)?;
    let scale = (std::f64::consts::PI / 2.0).sqrt();
    let mut out = Image::zeros(*igrid);
    let j_base = ((igrid.y0 - hil.grid.y0) / igrid.dy).round() as usize;
    for j in 0..igrid.ny {
        for i in 0..igrid.nx {
            let v = hil.values[hil.grid.idx(i, j_base + j)] * scale;
            out.values[igrid.idx(i, j)] = match idx.parity {
                Parity::Even => v,
                Parity::Odd => igrid.x(i) * v,
            };
        }
    }
    Ok(out)
}

/// Evaluate the pre-Hilbert field on a y-symmetric padded grid, using the
/// field's evenness in y to halve the quadrature work.
fn signed_pre_hilbert(
    idx: &BasisIndex,
    igrid: &ImageGrid,
    l_bound: f64,
    r_bound: f64,
) -> Result<Image> {
    let dy = igrid.dy;
    let align = igrid.y0 / dy;
    if (align - align.round()).abs() > 1e-6 {
        return Err(SartError::InvalidGrid(
            "image y lattice is not aligned to y = 0".into(),
        ));
    }
    let y_need = igrid.y0.abs().max(igrid.y_max().abs()).max(r_bound);
    // Pad generously: the periodic Hilbert column needs clearance between
    // the field's support (|y| < R) and the wrap boundary.
    let half_rows = ((2.0 * y_need) / dy).ceil() as usize + 4;
    let ny_int = 2 * half_rows;
    let internal = ImageGrid::new(
        igrid.nx,
        ny_int,
        igrid.dx,
        dy,
        igrid.x0,
        -(half_rows as f64) * dy,
    )?;
    let mut img = Image::zeros(internal);
    for j in half_rows..ny_int {
        let y = internal.y(j);
        let w2 = r_bound * r_bound - y * y;
        if w2 <= 0.0 {
            continue;
        }
        let w = w2.sqrt();
        for i in 0..internal.nx {
            let x = internal.x(i);
            let v = mode_integral(idx.k, idx.l, x, y, w, l_bound, r_bound);
            img.values[internal.idx(i, j)] = v;
            let jm = 2 * half_rows - j;
            if jm < ny_int {
                img.values[internal.idx(i, jm)] = v;
            }
        }
    }
    Ok(img)
}

/// Full inversion: project the data, then sum coefficient-weighted mode
/// reconstructions. With `cache_dir` set, mode images are memoized on
/// disk (written atomically) and keyed by index, grid, and geometry.
pub fn invert_ortho(
    data: &DataField,
    k_max: usize,
    l_max: usize,
    igrid: &ImageGrid,
    l_bound: f64,
    r_bound: f64,
    cache_dir: Option<&Path>,
) -> Result<Image> {
    let table = project_data(data, k_max, l_max, l_bound, r_bound)?;
    let mut out = Image::zeros(*igrid);
    for parity in [Parity::Even, Parity::Odd] {
        for k in 0..=k_max {
            for l in 0..=l_max {
                let c = table.at(parity, k, l);
                if c == 0.0 {
                    continue;
                }
                let idx = BasisIndex { parity, k, l };
                let mode = cached_reconstruction(&idx, igrid, l_bound, r_bound, cache_dir)?;
                for (o, v) in out.values.iter_mut().zip(&mode.values) {
                    *o += c * v;
                }
            }
        }
    }
    Ok(out)
}

fn cache_key(idx: &BasisIndex, g: &ImageGrid, l_bound: f64, r_bound: f64) -> String {
    format!(
        "recon_{}_{}_{}_nx{}_ny{}_dx{:e}_dy{:e}_x0{:e}_y0{:e}_L{:e}_R{:e}.field",
        idx.parity, idx.k, idx.l, g.nx, g.ny, g.dx, g.dy, g.x0, g.y0, l_bound, r_bound
    )
}

fn cached_reconstruction(
    idx: &BasisIndex,
    igrid: &ImageGrid,
    l_bound: f64,
    r_bound: f64,
    cache_dir: Option<&Path>,
) -> Result<Image> {
    let dir = match cache_dir {
        Some(d) => d,
        None => return basis_reconstruction(idx, igrid, l_bound, r_bound),
    };
    let path = dir.join(cache_key(idx, igrid, l_bound, r_bound));
    if path.exists() {
        if let Ok((img, _)) = io::read_image(&path) {
            if img.grid == *igrid {
                return Ok(img);
            }
        }
    }
    let img = basis_reconstruction(idx, igrid, l_bound, r_bound)?;
    let meta = vec![
        ("mode".to_string(), format!("{}_{}_{}", idx.parity, idx.k, idx.l)),
        ("L".to_string(), l_bound.to_string()),
        ("R".to_string(), r_bound.to_string()),
    ];
    io::write_image(&path, &img, &meta)?;
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;

    const L: f64 = 1.0;
    const R: f64 = 1.0;

    fn even(k: usize, l: usize) -> BasisIndex {
        BasisIndex { parity: Parity::Even, k, l }
    }

    fn odd(k: usize, l: usize) -> BasisIndex {
        BasisIndex { parity: Parity::Odd, k, l }
    }

    #[test]
    fn basis_support_and_plugin_value() {
        assert_eq!(eval_basis(&even(0, 0), 1.5 * L, 0.5, L, R), 0.0);
        assert_eq!(eval_basis(&even(0, 0), -1.5 * L, 0.5, L, R), 0.0);
        assert_eq!(eval_basis(&even(0, 0), 0.5, 1.5 * R, L, R), 0.0);
        assert_eq!(eval_basis(&even(0, 0), 0.5, 0.0, L, R), 0.0);
        let v = eval_basis(&even(0, 0), 0.5, 0.5, L, R);
        assert!((v - 4.0 / 3.0).abs() < 1e-14, "got {v}");
        // Parity extension across x = 0.
        assert_eq!(eval_basis(&even(0, 0), -0.5, 0.5, L, R), v);
        let w = eval_basis(&odd(1, 1), 0.5, 0.5, L, R);
        assert_eq!(eval_basis(&odd(1, 1), -0.5, 0.5, L, R), -w);
        assert_eq!(eval_basis(&odd(1, 1), 0.0, 0.5, L, R), 0.0);
    }

    #[test]
    fn odd_is_x_times_even() {
        let mut state = 88172645463325252u64;
        let mut unit = || {
            // xorshift; plenty for scattering test points
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let x = 0.05 + 0.9 * unit();
            let r = 0.05 + 0.9 * unit();
            let e = eval_basis(&even(3, 2), x, r, L, R);
            let o = eval_basis(&odd(3, 2), x, r, L, R);
            assert_eq!(o, x * e);
        }
    }

    #[test]
    fn gram_diagonal_and_neumann_factors() {
        let g00 = basis_gram(&even(0, 0), &even(0, 0), 2048, L, R).unwrap();
        assert!((g00 - 1.0).abs() < 1e-6, "g00 = {g00}");
        let cross = basis_gram(&even(1, 2), &even(1, 3), 2048, L, R).unwrap();
        assert!(cross.abs() < 1e-6, "cross = {cross}");
        let o22 = basis_gram(&odd(2, 2), &odd(2, 2), 2048, L, R).unwrap();
        assert!((o22 - 0.25).abs() < 1e-6, "o22 = {o22}");
    }

    #[test]
    fn gram_matrix_is_diagonal_for_low_modes() {
        for parity in [Parity::Even, Parity::Odd] {
            for k1 in 0..=4usize {
                for l1 in 0..=4usize {
                    for k2 in 0..=4usize {
                        for l2 in 0..=4usize {
                            let a = BasisIndex { parity, k: k1, l: l1 };
                            let b = BasisIndex { parity, k: k2, l: l2 };
                            let g = basis_gram(&a, &b, 512, 2.0, 0.5).unwrap();
                            let want = if (k1, l1) == (k2, l2) {
                                (2.0 / neumann(k1)) * (0.5 / neumann(l1))
                            } else {
                                0.0
                            };
                            assert!(
                                (g - want).abs() < 1e-12,
                                "({parity} {k1}{l1})({k2}{l2}): {g} vs {want}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn gram_rejects_parity_mixing() {
        assert!(basis_gram(&even(0, 0), &odd(0, 0), 64, L, R).is_err());
    }

    #[test]
    fn exact_projection_is_one_hot() {
        // Projecting a basis element sampled exactly returns the unit
        // coefficient table, by the same midpoint cosine orthogonality
        // that makes the gram diagonal.
        let target = even(2, 3);
        let table = project_fn(
            |x, r| eval_basis(&target, x, r, L, R),
            4,
            4,
            L,
            R,
            2048,
        )
        .unwrap();
        for k in 0..=4 {
            for l in 0..=4 {
                let want = if (k, l) == (2, 3) { 1.0 } else { 0.0 };
                let got = table.at(Parity::Even, k, l);
                assert!((got - want).abs() < 1e-10, "even[{k}{l}] = {got}");
                let o = table.at(Parity::Odd, k, l);
                assert!(o.abs() < 1e-10, "odd[{k}{l}] = {o}");
            }
        }
    }

    #[test]
    fn even_sampler_kills_odd_coefficients() {
        let table = project_fn(
            |x, r| (x * x - r).cos(),
            3,
            3,
            L,
            R,
            512,
        )
        .unwrap();
        for v in &table.odd {
            assert_eq!(*v, 0.0);
        }
        assert!(table.max_abs() > 0.0);
    }

    #[test]
    fn zero_data_projects_to_zero() {
        let dgrid = DataGrid::new(65, 40, 1.0 / 32.0, 1.0 / 32.0, -1.0).unwrap();
        let table = project_data(&DataField::zeros(dgrid), 3, 3, L, R).unwrap();
        assert_eq!(table.max_abs(), 0.0);
    }

    #[test]
    fn projection_requires_strip_coverage() {
        let dgrid = DataGrid::new(33, 40, 1.0 / 32.0, 1.0 / 32.0, 0.0).unwrap();
        assert!(project_data(&DataField::zeros(dgrid), 2, 2, L, R).is_err());
    }

    #[test]
    fn resynthesis_of_one_hot_is_the_basis() {
        let mut table = CoeffTable::zeros(4, 4);
        let i = table.idx(2, 3);
        table.even[i] = 1.0;
        let dgrid = DataGrid::new(129, 72, 1.0 / 64.0, 1.0 / 64.0, -1.0).unwrap();
        let field = resynthesize(&table, &dgrid, L, R).unwrap();
        let inset_x = 0.5 * dgrid.d_track;
        let inset_r = 0.5 * dgrid.d_radius;
        let mut peak = 0.0f64;
        for ti in 0..dgrid.n_track {
            let x = dgrid.track(ti);
            for rj in 0..dgrid.n_radius {
                let r = dgrid.radius(rj);
                let got = field.values[dgrid.idx(ti, rj)];
                if x <= inset_x || x >= L - inset_x || r <= 0.0 || r >= R - inset_r {
                    assert_eq!(got, 0.0);
                    continue;
                }
                let want = eval_basis(&even(2, 3), x, r, L, R);
                peak = peak.max((got - want).abs());
            }
        }
        assert!(peak < 1e-6, "max interior deviation {peak}");
    }

    #[test]
    fn zero_table_resynthesizes_to_zero() {
        let table = CoeffTable::zeros(2, 2);
        let dgrid = DataGrid::new(33, 20, 1.0 / 16.0, 1.0 / 16.0, -1.0).unwrap();
        let field = resynthesize(&table, &dgrid, L, R).unwrap();
        assert!(field.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mode_field_vanishes_in_the_far_zone() {
        // Where |x| > L + R no circle through the strip reaches the
        // point, so the pre-Hilbert integral has empty support.
        let grid = ImageGrid::new(9, 6, 0.125, 0.125, 2.05, 0.0).unwrap();
        let img = basis_field(&even(0, 0), &grid, L, R).unwrap();
        assert!(img.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn odd_reconstruction_is_x_times_even() {
        let grid = ImageGrid::new(17, 8, 0.2, 0.2, -1.6, 0.0).unwrap();
        let e = basis_reconstruction(&even(1, 1), &grid, L, R).unwrap();
        let o = basis_reconstruction(&odd(1, 1), &grid, L, R).unwrap();
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let want = grid.x(i) * e.values[grid.idx(i, j)];
                let got = o.values[grid.idx(i, j)];
                assert!((got - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reconstruction_cache_round_trips() {
        let dir = tempfile::TempDir::new().unwrap();
        let grid = ImageGrid::new(9, 5, 0.25, 0.25, -1.0, 0.0).unwrap();
        let dgrid = DataGrid::new(65, 40, 1.0 / 32.0, 1.0 / 32.0, -1.0).unwrap();
        let mut data = DataField::zeros(dgrid.clone());
        for ti in 0..dgrid.n_track {
            for rj in 0..dgrid.n_radius {
                data.values[dgrid.idx(ti, rj)] =
                    eval_basis(&even(1, 0), dgrid.track(ti), dgrid.radius(rj), L, R);
            }
        }
        let a = invert_ortho(&data, 1, 1, &grid, L, R, Some(dir.path())).unwrap();
        let n_files = std::fs::read_dir(dir.path()).unwrap().count();
        assert!(n_files > 0);
        let b = invert_ortho(&data, 1, 1, &grid, L, R, Some(dir.path())).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn zero_data_inverts_to_zero_image() {
        let grid = ImageGrid::new(9, 5, 0.25, 0.25, -1.0, 0.0).unwrap();
        let dgrid = DataGrid::new(65, 40, 1.0 / 32.0, 1.0 / 32.0, -1.0).unwrap();
        let img = invert_ortho(&DataField::zeros(dgrid), 2, 2, &grid, L, R, None).unwrap();
        assert!(img.values.iter().all(|&v| v == 0.0));
    }
}
