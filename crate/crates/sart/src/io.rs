//! File formats: raw little-endian `f64` fields with plain-text sidecar
//! headers, 16-bit PGM previews, and CSV writers for profiles and metrics.
//!
//! A field file is a pair: `<path>` holds the raw samples (row-major,
//! little-endian f64; spectra interleave re,im) and `<path>.hdr` holds a
//! `key = value` text header describing the grid. Extra metadata travels
//! in `meta.<name>` lines. All writers go through a temp-file-then-rename
//! step so readers never observe partial files.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::{Result, SartError};
use crate::grid::{DataField, DataGrid, Image, ImageGrid, Profile};
use crate::spectral::{SecondAxis, SpectralField};

/// Ordered metadata attached to a field file (`meta.*` header lines).
pub type Meta = Vec<(String, String)>;

fn header_path(path: &Path) -> PathBuf {
    let mut os = path.as_os_str().to_os_string();
    os.push(".hdr");
    PathBuf::from(os)
}

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(d) => {
            fs::create_dir_all(d)?;
            tempfile::NamedTempFile::new_in(d)?
        }
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| SartError::Io(e.error))?;
    Ok(())
}

fn values_to_bytes(values: &[f64]) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes
}

fn bytes_to_values(bytes: &[u8], path: &Path) -> Result<Vec<f64>> {
    if bytes.len() % 8 != 0 {
        return Err(SartError::Format(format!(
            "{}: raw length {} is not a multiple of 8",
            path.display(),
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn render_header(kind: &str, fields: &[(&str, String)], meta: &Meta) -> String {
    let mut s = String::new();
    s.push_str(&format!("kind = {kind}\n"));
    for (k, v) in fields {
        s.push_str(&format!("{k} = {v}\n"));
    }
    for (k, v) in meta {
        s.push_str(&format!("meta.{k} = {v}\n"));
    }
    s
}

struct Header {
    kind: String,
    fields: BTreeMap<String, String>,
    meta: Meta,
}

fn parse_header(text: &str, path: &Path) -> Result<Header> {
    let mut kind = None;
    let mut fields = BTreeMap::new();
    let mut meta = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            SartError::Format(format!("{}:{}: expected key = value", path.display(), ln + 1))
        })?;
        let key = key.trim();
        let value = value.trim().to_string();
        if key == "kind" {
            kind = Some(value);
        } else if let Some(name) = key.strip_prefix("meta.") {
            meta.push((name.to_string(), value));
        } else {
            fields.insert(key.to_string(), value);
        }
    }
    let kind = kind
        .ok_or_else(|| SartError::Format(format!("{}: missing kind line", path.display())))?;
    Ok(Header { kind, fields, meta })
}

impl Header {
    fn usize_field(&self, key: &str, path: &Path) -> Result<usize> {
        self.str_field(key, path)?.parse().map_err(|_| {
            SartError::Format(format!("{}: bad integer for {key}", path.display()))
        })
    }

    fn f64_field(&self, key: &str, path: &Path) -> Result<f64> {
        self.str_field(key, path)?.parse().map_err(|_| {
            SartError::Format(format!("{}: bad number for {key}", path.display()))
        })
    }

    fn str_field(&self, key: &str, path: &Path) -> Result<&str> {
        self.fields
            .get(key)
            .map(|s| s.as_str())
            .ok_or_else(|| SartError::Format(format!("{}: missing field {key}", path.display())))
    }
}

/// Write an image with optional metadata lines.
pub fn write_image(path: &Path, img: &Image, meta: &Meta) -> Result<()> {
    let g = &img.grid;
    let header = render_header(
        "image",
        &[
            ("nx", g.nx.to_string()),
            ("ny", g.ny.to_string()),
            ("dx", g.dx.to_string()),
            ("dy", g.dy.to_string()),
            ("x0", g.x0.to_string()),
            ("y0", g.y0.to_string()),
        ],
        meta,
    );
    atomic_write(&header_path(path), header.as_bytes())?;
    atomic_write(path, &values_to_bytes(&img.values))
}

/// Read an image written by [`write_image`]; returns the metadata too.
pub fn read_image(path: &Path) -> Result<(Image, Meta)> {
    let hpath = header_path(path);
    let header = parse_header(&fs::read_to_string(&hpath)?, &hpath)?;
    if header.kind != "image" {
        return Err(SartError::Format(format!(
            "{}: kind is {}, expected image",
            hpath.display(),
            header.kind
        )));
    }
    let grid = ImageGrid::new(
        header.usize_field("nx", &hpath)?,
        header.usize_field("ny", &hpath)?,
        header.f64_field("dx", &hpath)?,
        header.f64_field("dy", &hpath)?,
        header.f64_field("x0", &hpath)?,
        header.f64_field("y0", &hpath)?,
    )?;
    let values = bytes_to_values(&fs::read(path)?, path)?;
    if values.len() != grid.len() {
        return Err(SartError::Format(format!(
            "{}: {} samples but header says {}",
            path.display(),
            values.len(),
            grid.len()
        )));
    }
    Ok((Image { grid, values }, header.meta))
}

/// Read just the `kind` line of a field's sidecar header, so callers
/// can dispatch on image vs data files without loading the payload.
pub fn peek_kind(path: &Path) -> Result<String> {
    let hpath = header_path(path);
    let header = parse_header(&fs::read_to_string(&hpath)?, &hpath)?;
    Ok(header.kind)
}

/// Write circle-average data with optional metadata lines.
pub fn write_data(path: &Path, data: &DataField, meta: &Meta) -> Result<()> {
    let g = &data.grid;
    let header = render_header(
        "data",
        &[
            ("n_track", g.n_track.to_string()),
            ("n_radius", g.n_radius.to_string()),
            ("d_track", g.d_track.to_string()),
            ("d_radius", g.d_radius.to_string()),
            ("track_min", g.track_min.to_string()),
        ],
        meta,
    );
    atomic_write(&header_path(path), header.as_bytes())?;
    atomic_write(path, &values_to_bytes(&data.values))
}

/// Read data written by [`write_data`].
pub fn read_data(path: &Path) -> Result<(DataField, Meta)> {
    let hpath = header_path(path);
    let header = parse_header(&fs::read_to_string(&hpath)?, &hpath)?;
    if header.kind != "data" {
        return Err(SartError::Format(format!(
            "{}: kind is {}, expected data",
            hpath.display(),
            header.kind
        )));
    }
    let grid = DataGrid::new(
        header.usize_field("n_track", &hpath)?,
        header.usize_field("n_radius", &hpath)?,
        header.f64_field("d_track", &hpath)?,
        header.f64_field("d_radius", &hpath)?,
        header.f64_field("track_min", &hpath)?,
    )?;
    let values = bytes_to_values(&fs::read(path)?, path)?;
    if values.len() != grid.n_track * grid.n_radius {
        return Err(SartError::Format(format!(
            "{}: {} samples but header says {}",
            path.display(),
            values.len(),
            grid.n_track * grid.n_radius
        )));
    }
    Ok((DataField { grid, values }, header.meta))
}

/// Write a complex spectrum (re,im interleaved raw samples).
pub fn write_spectrum(path: &Path, spec: &SpectralField, meta: &Meta) -> Result<()> {
    let (axis, n2, d2) = match spec.second {
        SecondAxis::Rho { n, d } => ("rho", n, d),
        SecondAxis::Eta { n, d } => ("eta", n, d),
    };
    let header = render_header(
        "spectrum",
        &[
            ("n_xi", spec.n_xi.to_string()),
            ("d_xi", spec.d_xi.to_string()),
            ("second", axis.to_string()),
            ("n_second", n2.to_string()),
            ("d_second", d2.to_string()),
        ],
        meta,
    );
    atomic_write(&header_path(path), header.as_bytes())?;
    let mut flat = Vec::with_capacity(spec.values.len() * 2);
    for v in &spec.values {
        flat.push(v.re);
        flat.push(v.im);
    }
    atomic_write(path, &values_to_bytes(&flat))
}

/// Read a spectrum written by [`write_spectrum`].
pub fn read_spectrum(path: &Path) -> Result<(SpectralField, Meta)> {
    let hpath = header_path(path);
    let header = parse_header(&fs::read_to_string(&hpath)?, &hpath)?;
    if header.kind != "spectrum" {
        return Err(SartError::Format(format!(
            "{}: kind is {}, expected spectrum",
            hpath.display(),
            header.kind
        )));
    }
    let n_xi = header.usize_field("n_xi", &hpath)?;
    let d_xi = header.f64_field("d_xi", &hpath)?;
    let n2 = header.usize_field("n_second", &hpath)?;
    let d2 = header.f64_field("d_second", &hpath)?;
    let second = match header.str_field("second", &hpath)? {
        "rho" => SecondAxis::Rho { n: n2, d: d2 },
        "eta" => SecondAxis::Eta { n: n2, d: d2 },
        other => {
            return Err(SartError::Format(format!(
                "{}: unknown second axis {other}",
                hpath.display()
            )))
        }
    };
    let flat = bytes_to_values(&fs::read(path)?, path)?;
    if flat.len() != 2 * n_xi * n2 {
        return Err(SartError::Format(format!(
            "{}: {} samples but header says {}",
            path.display(),
            flat.len(),
            2 * n_xi * n2
        )));
    }
    let values = flat
        .chunks_exact(2)
        .map(|c| Complex64::new(c[0], c[1]))
        .collect();
    Ok((SpectralField { n_xi, d_xi, second, values }, header.meta))
}

/// Write a 16-bit binary PGM preview of an image.
///
/// Values are mapped symmetrically: `[-cap, cap]` onto `[0, 65535]` with
/// zero at midscale; `cap` defaults to the image's max magnitude. The cap
/// actually used is recorded in a `# scale = ...` comment and returned,
/// so pixel values can be mapped back to field units.
pub fn write_pgm16(path: &Path, img: &Image, cap: Option<f64>) -> Result<f64> {
    let cap = match cap {
        Some(c) if c > 0.0 && c.is_finite() => c,
        Some(c) => {
            return Err(SartError::InvalidArgument(format!(
                "pgm cap must be positive and finite, got {c}"
            )))
        }
        None => {
            let m = img.max_abs();
            if m > 0.0 {
                m
            } else {
                1.0
            }
        }
    };
    let g = &img.grid;
    let mut out = Vec::with_capacity(64 + img.values.len() * 2);
    out.extend_from_slice(format!("P5\n# scale = {cap}\n{} {}\n65535\n", g.nx, g.ny).as_bytes());
    // Top image row first, matching usual raster order (our row 0 is the
    // smallest y, drawn at the bottom).
    for j in (0..g.ny).rev() {
        for i in 0..g.nx {
            let v = img.values[g.idx(i, j)];
            let t = ((v / cap).clamp(-1.0, 1.0) + 1.0) * 0.5;
            let px = (t * 65535.0).round() as u16;
            out.extend_from_slice(&px.to_be_bytes());
        }
    }
    atomic_write(path, &out)?;
    Ok(cap)
}

/// Write a two-column CSV of a 1-D profile.
pub fn write_profile_csv(path: &Path, profile: &Profile, coord_name: &str) -> Result<()> {
    let mut s = String::new();
    s.push_str(&format!("{coord_name},value\n"));
    for (c, v) in profile.coords.iter().zip(&profile.values) {
        s.push_str(&format!("{c},{v}\n"));
    }
    atomic_write(path, s.as_bytes())
}

/// Write a metrics CSV: `# key = value` config lines first, then a
/// `metric,value` table. Runs with identical inputs produce identical
/// bytes (floats print in shortest round-trip form, rows keep caller
/// order).
pub fn write_metrics_csv(path: &Path, config: &[(String, String)], rows: &[(String, f64)]) -> Result<()> {
    let mut s = String::new();
    for (k, v) in config {
        s.push_str(&format!("# {k} = {v}\n"));
    }
    s.push_str("metric,value\n");
    for (name, value) in rows {
        s.push_str(&format!("{name},{value}\n"));
    }
    atomic_write(path, s.as_bytes())
}
