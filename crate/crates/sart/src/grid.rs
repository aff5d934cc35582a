//! Sampling grids, images, circle-average data fields, and disc phantoms.
//!
//! An [`ImageGrid`] samples the reflectivity plane at `x_i = x0 + i*dx`,
//! `y_j = y0 + j*dy`, stored row-major (`j*nx + i`). A [`DataGrid`] samples
//! track positions `x_i = track_min + i*d_track` and radii `r_j = j*d_radius`;
//! the first radius sample is always `r = 0`. A [`DataField`] holds the
//! restriction to `r >= 0` of a function even in `r`, which is how circle
//! averages over a track on y = 0 behave.

use crate::error::{Result, SartError};

/// Rectangular image sampling lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageGrid {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    /// Coordinate of sample column 0.
    pub x0: f64,
    /// Coordinate of sample row 0.
    pub y0: f64,
}

impl ImageGrid {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64, x0: f64, y0: f64) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(SartError::InvalidGrid(format!(
                "image grid needs at least 2 samples per axis, got {nx}x{ny}"
            )));
        }
        if !(dx > 0.0 && dy > 0.0 && dx.is_finite() && dy.is_finite()) {
            return Err(SartError::InvalidGrid(format!(
                "image spacings must be positive and finite, got dx={dx}, dy={dy}"
            )));
        }
        if !(x0.is_finite() && y0.is_finite()) {
            return Err(SartError::InvalidGrid("image origin must be finite".into()));
        }
        Ok(ImageGrid { nx, ny, dx, dy, x0, y0 })
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.dy
    }

    /// Largest sampled x coordinate.
    pub fn x_max(&self) -> f64 {
        self.x(self.nx - 1)
    }

    /// Largest sampled y coordinate.
    pub fn y_max(&self) -> f64 {
        self.y(self.ny - 1)
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the row lying on the track line y = 0, if the lattice hits it.
    pub fn track_row(&self) -> Option<usize> {
        let j = (-self.y0 / self.dy).round();
        if j >= 0.0 && (j as usize) < self.ny && (self.y0 + j * self.dy).abs() < 1e-9 * self.dy {
            Some(j as usize)
        } else {
            None
        }
    }

    /// Index of the sampled row nearest to `y`; errors more than half a cell
    /// outside the covered band.
    pub fn row_nearest(&self, y: f64) -> Result<usize> {
        let v = (y - self.y0) / self.dy;
        let j = v.round();
        if j < 0.0 || j as usize >= self.ny || (v - j).abs() > 0.5 + 1e-9 {
            return Err(SartError::InvalidArgument(format!(
                "row y={y} outside grid rows [{}, {}]",
                self.y0,
                self.y_max()
            )));
        }
        Ok(j as usize)
    }
}

/// Sampled scalar field over an [`ImageGrid`], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub grid: ImageGrid,
    pub values: Vec<f64>,
}

impl Image {
    pub fn zeros(grid: ImageGrid) -> Self {
        Image { values: vec![0.0; grid.len()], grid }
    }

    /// Evaluate `f(x, y)` at every sample.
    pub fn from_fn(grid: ImageGrid, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            let y = grid.y(j);
            for i in 0..grid.nx {
                values.push(f(grid.x(i), y));
            }
        }
        Image { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let k = self.grid.idx(i, j);
        &mut self.values[k]
    }

    /// Bilinear interpolation; zero outside the sampled rectangle.
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let g = &self.grid;
        let u = (x - g.x0) / g.dx;
        let v = (y - g.y0) / g.dy;
        // More than one cell outside the lattice every corner weight is zero.
        if !(u > -1.0 && u < g.nx as f64 && v > -1.0 && v < g.ny as f64) {
            return 0.0;
        }
        let iu = u.floor();
        let iv = v.floor();
        let fu = u - iu;
        let fv = v - iv;
        let i0 = iu as isize;
        let j0 = iv as isize;
        let mut acc = 0.0;
        let nx = g.nx as isize;
        let ny = g.ny as isize;
        for (dj, wj) in [(0, 1.0 - fv), (1, fv)] {
            let j = j0 + dj;
            if j < 0 || j >= ny || wj == 0.0 {
                continue;
            }
            let row = j as usize * g.nx;
            for (di, wi) in [(0, 1.0 - fu), (1, fu)] {
                let i = i0 + di;
                if i < 0 || i >= nx || wi == 0.0 {
                    continue;
                }
                acc += wj * wi * self.values[row + i as usize];
            }
        }
        acc
    }

    /// Largest absolute sample value (0 for an all-zero image).
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Sample-index bounding box `(i_min, i_max, j_min, j_max)` of nonzero
    /// values, or `None` if the image is identically zero.
    pub fn nonzero_bbox(&self) -> Option<(usize, usize, usize, usize)> {
        let mut bb: Option<(usize, usize, usize, usize)> = None;
        for j in 0..self.grid.ny {
            let row = j * self.grid.nx;
            for i in 0..self.grid.nx {
                if self.values[row + i] != 0.0 {
                    let b = bb.get_or_insert((i, i, j, j));
                    b.0 = b.0.min(i);
                    b.1 = b.1.max(i);
                    b.2 = b.2.min(j);
                    b.3 = b.3.max(j);
                }
            }
        }
        bb
    }

    pub fn ensure_finite(&self, what: &str) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(SartError::NonFinite(format!("{what} contains non-finite samples")))
        }
    }
}

/// Track/radius sampling lattice for circle-average data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataGrid {
    pub n_track: usize,
    pub n_radius: usize,
    pub d_track: f64,
    pub d_radius: f64,
    pub track_min: f64,
}

impl DataGrid {
    pub fn new(
        n_track: usize,
        n_radius: usize,
        d_track: f64,
        d_radius: f64,
        track_min: f64,
    ) -> Result<Self> {
        if n_track < 2 || n_radius < 2 {
            return Err(SartError::InvalidGrid(format!(
                "data grid needs at least 2 samples per axis, got {n_track}x{n_radius}"
            )));
        }
        if !(d_track > 0.0 && d_radius > 0.0 && d_track.is_finite() && d_radius.is_finite()) {
            return Err(SartError::InvalidGrid(format!(
                "data spacings must be positive and finite, got d_track={d_track}, d_radius={d_radius}"
            )));
        }
        if !track_min.is_finite() {
            return Err(SartError::InvalidGrid("track_min must be finite".into()));
        }
        Ok(DataGrid { n_track, n_radius, d_track, d_radius, track_min })
    }

    #[inline]
    pub fn track(&self, i: usize) -> f64 {
        self.track_min + i as f64 * self.d_track
    }

    #[inline]
    pub fn radius(&self, j: usize) -> f64 {
        j as f64 * self.d_radius
    }

    pub fn track_max(&self) -> f64 {
        self.track(self.n_track - 1)
    }

    /// Largest sampled radius.
    pub fn radius_max(&self) -> f64 {
        self.radius(self.n_radius - 1)
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n_track && j < self.n_radius);
        i * self.n_radius + j
    }

    pub fn len(&self) -> usize {
        self.n_track * self.n_radius
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Circle-average data sampled on a [`DataGrid`]; even in `r` by convention.
#[derive(Debug, Clone, PartialEq)]
pub struct DataField {
    pub grid: DataGrid,
    pub values: Vec<f64>,
}

impl DataField {
    pub fn zeros(grid: DataGrid) -> Self {
        DataField { values: vec![0.0; grid.len()], grid }
    }

    /// Evaluate `g(x, r)` at every sample.
    pub fn from_fn(grid: DataGrid, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.n_track {
            let x = grid.track(i);
            for j in 0..grid.n_radius {
                values.push(f(x, grid.radius(j)));
            }
        }
        DataField { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let k = self.grid.idx(i, j);
        &mut self.values[k]
    }

    /// Linear interpolation in radius at a fixed track sample, using the
    /// even-in-r convention; zero beyond the largest sampled radius.
    pub fn sample_radius(&self, i_track: usize, r: f64) -> f64 {
        let g = &self.grid;
        let v = r.abs() / g.d_radius;
        if v > (g.n_radius - 1) as f64 {
            return 0.0;
        }
        let j0 = (v.floor() as usize).min(g.n_radius - 2);
        let f = v - j0 as f64;
        let base = i_track * g.n_radius + j0;
        (1.0 - f) * self.values[base] + f * self.values[base + 1]
    }

    /// Bilinear interpolation in (track, radius); even in `r`, zero outside
    /// the track span and beyond the largest radius.
    pub fn sample(&self, x: f64, r: f64) -> f64 {
        let g = &self.grid;
        let u = (x - g.track_min) / g.d_track;
        if u < 0.0 || u > (g.n_track - 1) as f64 {
            return 0.0;
        }
        let i0 = (u.floor() as usize).min(g.n_track - 2);
        let f = u - i0 as f64;
        (1.0 - f) * self.sample_radius(i0, r) + f * self.sample_radius(i0 + 1, r)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn ensure_finite(&self, what: &str) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(SartError::NonFinite(format!("{what} contains non-finite samples")))
        }
    }
}

/// One disc of constant reflectivity.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Disc {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
    pub amplitude: f64,
}

/// A scene made of overlapping discs; overlaps add.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PhantomSpec {
    pub discs: Vec<Disc>,
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        for (k, d) in self.discs.iter().enumerate() {
            if !(d.radius > 0.0 && d.radius.is_finite()) {
                return Err(SartError::InvalidArgument(format!(
                    "disc {k}: radius must be positive, got {}",
                    d.radius
                )));
            }
            if !(d.cx.is_finite() && d.cy.is_finite() && d.amplitude.is_finite()) {
                return Err(SartError::InvalidArgument(format!("disc {k}: non-finite parameter")));
            }
        }
        Ok(())
    }
}

/// Render a disc phantom by the sample-center rule: a sample belongs to a
/// disc when its center lies within `radius` (boundary inclusive), and
/// overlapping discs add their amplitudes.
pub fn render_phantom(spec: &PhantomSpec, grid: ImageGrid) -> Result<Image> {
    spec.validate()?;
    let mut img = Image::zeros(grid);
    for d in &spec.discs {
        let r2 = d.radius * d.radius;
        for j in 0..grid.ny {
            let ey = grid.y(j) - d.cy;
            let ey2 = ey * ey;
            if ey2 > r2 {
                continue;
            }
            for i in 0..grid.nx {
                let ex = grid.x(i) - d.cx;
                if ex * ex + ey2 <= r2 {
                    *img.at_mut(i, j) += d.amplitude;
                }
            }
        }
    }
    Ok(img)
}

/// A 1-D section through an image: paired coordinates and values.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub coords: Vec<f64>,
    pub values: Vec<f64>,
}

/// Extract the image row nearest to `row_y` as a profile along x.
pub fn cross_section(img: &Image, row_y: f64) -> Result<Profile> {
    let j = img.grid.row_nearest(row_y)?;
    let coords = (0..img.grid.nx).map(|i| img.grid.x(i)).collect();
    let row = j * img.grid.nx;
    let values = img.values[row..row + img.grid.nx].to_vec();
    Ok(Profile { coords, values })
}
