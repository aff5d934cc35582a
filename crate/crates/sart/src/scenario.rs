//! Named experiment suites driven by TOML config files.
//!
//! Each scenario loads one config, applies dotted-path `key=value`
//! overrides, runs a fixed pipeline, and writes renders, profiles, and
//! a `metrics.csv` with one row per stage and metric. The CSV header
//! embeds the fully resolved config, so a rerun with the same config
//! and seed produces byte-identical metric files.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Result, SartError};
use crate::fbp::{invert_fbp, ContinuationMode};
use crate::forward::{disc_arc_data, forward};
use crate::ghost::{ghost_image, null_space_certificate, GhostFamily, GhostParams};
use crate::grid::{cross_section, render_phantom, Profile};
use crate::lr::{lr_pipeline, AntennaArray, PairingMode, PipelineMode, ResolverConfig};
use crate::metrics::{compare, l2_relative, linf, mirror_suppression_ratio, plateau_amplitude};
use crate::noise::NoiseSpec;
use crate::ortho::{invert_ortho, project_data, resynthesize, CoeffTable};
use crate::{DataField, DataGrid, Image, ImageGrid, PhantomSpec};

/// Names accepted by [`run_scenario`].
pub const SCENARIO_NAMES: [&str; 4] =
    ["ch2_ladder", "ch3_ghost_sweep", "ch4_ortho", "ch5_antenna_sweep"];

/// Scalar image comparison selected by name on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    L2Relative,
    Linf,
    MirrorSuppressionRatio,
    PlateauAmplitude,
}

impl Metric {
    pub const NAMES: [&'static str; 4] =
        ["l2_relative", "linf", "mirror_suppression_ratio", "plateau_amplitude"];
}

impl std::str::FromStr for Metric {
    type Err = SartError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l2_relative" => Ok(Metric::L2Relative),
            "linf" => Ok(Metric::Linf),
            "mirror_suppression_ratio" => Ok(Metric::MirrorSuppressionRatio),
            "plateau_amplitude" => Ok(Metric::PlateauAmplitude),
            other => Err(SartError::InvalidArgument(format!(
                "unknown metric '{other}'; choose one of {}",
                Metric::NAMES.join(", ")
            ))),
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Metric::L2Relative => "l2_relative",
            Metric::Linf => "linf",
            Metric::MirrorSuppressionRatio => "mirror_suppression_ratio",
            Metric::PlateauAmplitude => "plateau_amplitude",
        })
    }
}

/// Evaluate a metric against whichever inputs it needs. `b` is the
/// reference image for the pairwise metrics, `mask` restricts them to
/// its nonzero samples, and `phantom` supplies disc geometry for the
/// plateau and mirror metrics (plateau uses the first disc).
pub fn evaluate_metric(
    metric: Metric,
    a: &Image,
    b: Option<&Image>,
    mask: Option<&Image>,
    phantom: Option<&PhantomSpec>,
    erode_px: f64,
) -> Result<f64> {
    match metric {
        Metric::L2Relative | Metric::Linf => {
            let b = b.ok_or_else(|| {
                SartError::InvalidArgument(format!("metric {metric} needs a reference image"))
            })?;
            let report = compare(a, b, mask)?;
            Ok(match metric {
                Metric::L2Relative => report.l2_relative,
                _ => report.linf,
            })
        }
        Metric::MirrorSuppressionRatio => {
            let p = phantom.ok_or_else(|| {
                SartError::InvalidArgument(format!("metric {metric} needs a phantom"))
            })?;
            mirror_suppression_ratio(a, p)
        }
        Metric::PlateauAmplitude => {
            let p = phantom.ok_or_else(|| {
                SartError::InvalidArgument(format!("metric {metric} needs a phantom"))
            })?;
            let disc = p.discs.first().ok_or_else(|| {
                SartError::InvalidArgument("phantom has no discs".into())
            })?;
            plateau_amplitude(a, disc, erode_px)
        }
    }
}

/// Image grid parameters as they appear in config files.
#[derive(Debug, Clone, Copy, PartialEq, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridParams {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub x0: f64,
    pub y0: f64,
}

impl GridParams {
    pub fn build(&self) -> Result<ImageGrid> {
        ImageGrid::new(self.nx, self.ny, self.dx, self.dy, self.x0, self.y0)
    }
}

/// Data grid parameters as they appear in config files.
#[derive(Debug, Clone, Copy, PartialEq, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataParams {
    pub n_track: usize,
    pub n_radius: usize,
    pub d_track: f64,
    pub d_radius: f64,
    pub track_min: f64,
}

impl DataParams {
    pub fn build(&self) -> Result<DataGrid> {
        DataGrid::new(self.n_track, self.n_radius, self.d_track, self.d_radius, self.track_min)
    }

    /// Same spacings, `m` times the aperture and radial reach.
    pub fn scaled(&self, m: u32) -> Result<DataParams> {
        if m == 0 {
            return Err(SartError::InvalidArgument("extent multiplier must be >= 1".into()));
        }
        Ok(DataParams {
            n_track: self.n_track * m as usize,
            n_radius: self.n_radius * m as usize,
            d_track: self.d_track,
            d_radius: self.d_radius,
            track_min: self.track_min * m as f64,
        })
    }
}

/// Shared geometry file consumed by the command line tools: an image
/// grid, optionally a base data grid with an extent multiplier, the
/// track and radius bounds of the measured strip, and optionally a
/// disc phantom.
#[derive(Debug, Clone, PartialEq, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub image: GridParams,
    pub data: Option<DataParams>,
    #[serde(default = "default_extent")]
    pub extent: u32,
    pub l_bound: Option<f64>,
    pub r_bound: Option<f64>,
    pub phantom: Option<PhantomSpec>,
}

fn default_extent() -> u32 {
    1
}

impl GeometryConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let (cfg, _) = load_config::<GeometryConfig>(path, &[])?;
        Ok(cfg)
    }

    pub fn image_grid(&self) -> Result<ImageGrid> {
        self.image.build()
    }

    /// Data grid with the extent multiplier applied.
    pub fn data_grid(&self) -> Result<DataGrid> {
        let base = self.data.as_ref().ok_or_else(|| {
            SartError::InvalidArgument("geometry config has no [data] table".into())
        })?;
        base.scaled(self.extent)?.build()
    }
}

/// Load a TOML config, apply `key=value` overrides, and return the
/// typed config together with the flattened `(path, value)` lines of
/// the resolved document (used as provenance headers in metric files).
pub fn load_config<T: serde::de::DeserializeOwned>(
    path: &Path,
    overrides: &[(String, String)],
) -> Result<(T, Vec<(String, String)>)> {
    let text = fs::read_to_string(path)?;
    let mut doc: toml::Value = text
        .parse()
        .map_err(|e| SartError::Format(format!("{}: {e}", path.display())))?;
    for (key, raw) in overrides {
        let value = parse_fragment(raw);
        set_value_at(&mut doc, key, value)?;
    }
    let mut resolved = Vec::new();
    flatten_value("", &doc, &mut resolved);
    let cfg: T = doc
        .try_into()
        .map_err(|e| SartError::Format(format!("{}: {e}", path.display())))?;
    Ok((cfg, resolved))
}

/// Parse an override's right-hand side as a TOML value, falling back
/// to a plain string when it is not valid TOML (so `mode=direct` works
/// without quoting).
fn parse_fragment(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Value>() {
        Ok(toml::Value::Table(mut t)) => match t.remove("v") {
            Some(v) => v,
            None => toml::Value::String(raw.to_string()),
        },
        _ => toml::Value::String(raw.to_string()),
    }
}

/// One dotted-path segment: a key name plus any trailing `[i]` indices.
fn split_indices(segment: &str) -> Result<(&str, Vec<usize>)> {
    let bad = || {
        SartError::InvalidArgument(format!("malformed override path segment '{segment}'"))
    };
    match segment.find('[') {
        None => {
            if segment.is_empty() {
                return Err(bad());
            }
            Ok((segment, Vec::new()))
        }
        Some(p) => {
            let name = &segment[..p];
            if name.is_empty() || !segment.ends_with(']') {
                return Err(bad());
            }
            let mut indices = Vec::new();
            for part in segment[p + 1..segment.len() - 1].split("][") {
                indices.push(part.parse::<usize>().map_err(|_| bad())?);
            }
            Ok((name, indices))
        }
    }
}

/// Set `root[path] = value`, creating intermediate tables as needed.
/// Paths are dot separated and may index into arrays: `phantom.discs[0].cy`.
fn set_value_at(root: &mut toml::Value, path: &str, value: toml::Value) -> Result<()> {
    let segments: Vec<&str> = path.split('.').collect();
    let mut pending = Some(value);
    let mut cur = root;
    for (si, segment) in segments.iter().enumerate() {
        let last = si + 1 == segments.len();
        let (name, indices) = split_indices(segment)?;
        let table = cur.as_table_mut().ok_or_else(|| {
            SartError::InvalidArgument(format!(
                "override path '{path}': '{name}' is not inside a table"
            ))
        })?;
        if indices.is_empty() && last {
            table.insert(name.to_string(), pending.take().unwrap());
            return Ok(());
        }
        let mut node = if indices.is_empty() {
            table
                .entry(name.to_string())
                .or_insert_with(|| toml::Value::Table(toml::map::Map::new()))
        } else {
            table.get_mut(name).ok_or_else(|| {
                SartError::InvalidArgument(format!("override path '{path}': no array '{name}'"))
            })?
        };
        for &ix in &indices {
            let arr = node.as_array_mut().ok_or_else(|| {
                SartError::InvalidArgument(format!("override path '{path}': '{name}' is not an array"))
            })?;
            let len = arr.len();
            node = arr.get_mut(ix).ok_or_else(|| {
                SartError::InvalidArgument(format!(
                    "override path '{path}': index {ix} out of range (array '{name}' has {len} items)"
                ))
            })?;
        }
        if last {
            *node = pending.take().unwrap();
            return Ok(());
        }
        cur = node;
    }
    Err(SartError::InvalidArgument("empty override path".into()))
}

/// Flatten a TOML document into sorted-by-document-order
/// `(dotted.path, rendered value)` lines. Arrays of scalars render
/// inline; arrays of tables are indexed with `[i]`.
fn flatten_value(prefix: &str, v: &toml::Value, out: &mut Vec<(String, String)>) {
    match v {
        toml::Value::Table(t) => {
            for (k, vv) in t {
                let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten_value(&p, vv, out);
            }
        }
        toml::Value::Array(a) if a.iter().any(toml::Value::is_table) => {
            for (i, vv) in a.iter().enumerate() {
                flatten_value(&format!("{prefix}[{i}]"), vv, out);
            }
        }
        other => out.push((prefix.to_string(), render_inline(other))),
    }
}

fn render_inline(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(x) => format!("{x}"),
        toml::Value::Boolean(b) => b.to_string(),
        toml::Value::Datetime(d) => d.to_string(),
        toml::Value::Array(a) => {
            let items: Vec<String> = a.iter().map(render_inline).collect();
            format!("[{}]", items.join(", "))
        }
        toml::Value::Table(_) => "<table>".to_string(),
    }
}

/// Run a named scenario: load `config_path`, apply `overrides`, write
/// all outputs under `out_dir`, and return the created file paths
/// (renders, profiles, field dumps, and finally `metrics.csv`).
pub fn run_scenario(
    name: &str,
    config_path: &Path,
    overrides: &[(String, String)],
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    match name {
        "ch2_ladder" => {
            let (cfg, resolved) = load_config::<Ch2Config>(config_path, overrides)?;
            run_ch2(&cfg, &resolved, name, out_dir)
        }
        "ch3_ghost_sweep" => {
            let (cfg, resolved) = load_config::<Ch3Config>(config_path, overrides)?;
            run_ch3(&cfg, &resolved, name, out_dir)
        }
        "ch4_ortho" => {
            let (cfg, resolved) = load_config::<Ch4Config>(config_path, overrides)?;
            run_ch4(&cfg, &resolved, name, out_dir)
        }
        "ch5_antenna_sweep" => {
            let (cfg, resolved) = load_config::<Ch5Config>(config_path, overrides)?;
            run_ch5(&cfg, &resolved, name, out_dir)
        }
        other => Err(SartError::InvalidArgument(format!(
            "unknown scenario '{other}'; choose one of {}",
            SCENARIO_NAMES.join(", ")
        ))),
    }
}

/// Overrides that shrink a scenario to a seconds-scale smoke run while
/// keeping every stage and metric name intact.
pub fn smoke_overrides(name: &str) -> Vec<(String, String)> {
    let pairs: &[(&str, &str)] = match name {
        "ch2_ladder" => &[
            ("image.nx", "64"),
            ("image.ny", "64"),
            ("image.x0", "-32"),
            ("data_base.n_track", "64"),
            ("data_base.n_radius", "64"),
            ("data_base.track_min", "-32"),
            ("extents", "[1, 2]"),
        ],
        "ch3_ghost_sweep" => &[
            ("image.nx", "65"),
            ("image.ny", "65"),
            ("image.dx", "0.03125"),
            ("image.dy", "0.03125"),
            ("image.x0", "-1.0"),
            ("image.y0", "-1.0"),
            ("l_bound", "0.25"),
            ("r_bound", "0.25"),
            ("range_b", "[2.0, 4.0]"),
            ("mode_l", "[1, 2]"),
            ("cert_data.n_track", "65"),
            ("cert_data.n_radius", "33"),
            ("cert_data.d_track", "0.03125"),
            ("cert_data.d_radius", "0.03125"),
            ("cert_data.track_min", "-1.0"),
            ("cert_angles", "256"),
            ("cert_guard_px", "3"),
        ],
        "ch4_ortho" => &[
            ("image.nx", "33"),
            ("image.ny", "17"),
            ("image.x0", "-0.5"),
            ("gaussian.cy", "0.25"),
            ("n_angles", "256"),
            ("k_sweep", "[4, 8, 16]"),
            ("invert_k", "4"),
        ],
        "ch5_antenna_sweep" => &[
            ("image.nx", "64"),
            ("image.ny", "64"),
            ("image.x0", "-4.0"),
            ("image.y0", "-4.0"),
            ("phantom.discs[0].cx", "-1.0"),
            ("phantom.discs[0].cy", "1.0"),
            ("phantom.discs[0].radius", "0.45"),
            ("phantom.discs[1].cx", "1.25"),
            ("phantom.discs[1].cy", "0.5"),
            ("phantom.discs[1].radius", "0.3"),
            ("noise_percents", "[0.0, 0.1]"),
            ("profile_column_x", "-1.0"),
        ],
        _ => &[],
    };
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

/// Collects output files under one directory.
struct Outputs {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Outputs { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn pgm(&mut self, name: &str, img: &Image) -> Result<()> {
        let p = self.dir.join(name);
        crate::io::write_pgm16(&p, img, None)?;
        self.files.push(p);
        Ok(())
    }

    fn image(&mut self, name: &str, img: &Image, label: &str) -> Result<()> {
        let p = self.dir.join(name);
        let meta = vec![("content".to_string(), label.to_string())];
        crate::io::write_image(&p, img, &meta)?;
        self.files.push(p);
        Ok(())
    }

    fn data(&mut self, name: &str, data: &DataField, label: &str) -> Result<()> {
        let p = self.dir.join(name);
        let meta = vec![("content".to_string(), label.to_string())];
        crate::io::write_data(&p, data, &meta)?;
        self.files.push(p);
        Ok(())
    }

    fn profile(&mut self, name: &str, profile: &Profile, coord: &str) -> Result<()> {
        let p = self.dir.join(name);
        crate::io::write_profile_csv(&p, profile, coord)?;
        self.files.push(p);
        Ok(())
    }

    fn metrics(
        &mut self,
        scenario: &str,
        resolved: &[(String, String)],
        rows: &[(String, f64)],
    ) -> Result<Vec<PathBuf>> {
        let mut header = Vec::with_capacity(resolved.len() + 1);
        header.push(("scenario".to_string(), scenario.to_string()));
        header.extend_from_slice(resolved);
        let p = self.dir.join("metrics.csv");
        crate::io::write_metrics_csv(&p, &header, rows)?;
        self.files.push(p);
        Ok(std::mem::take(&mut self.files))
    }
}

/// Values of one image column `x = col_x`, bottom row first.
fn column_section(img: &Image, col_x: f64) -> Result<Profile> {
    let g = &img.grid;
    let v = (col_x - g.x0) / g.dx;
    let i = v.round();
    if i < 0.0 || i as usize >= g.nx || (v - i).abs() > 0.5 + 1e-9 {
        return Err(SartError::InvalidArgument(format!(
            "column x={col_x} outside grid columns [{}, {}]",
            g.x0,
            g.x_max()
        )));
    }
    let i = i as usize;
    Ok(Profile {
        coords: (0..g.ny).map(|j| g.y(j)).collect(),
        values: (0..g.ny).map(|j| img.at(i, j)).collect(),
    })
}

/// Smallest profile value at coordinates beyond `threshold`.
fn min_beyond(profile: &Profile, threshold: f64) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for (&c, &v) in profile.coords.iter().zip(&profile.values) {
        if c > threshold && best.map_or(true, |(_, bv)| v < bv) {
            best = Some((c, v));
        }
    }
    best
}

/// Largest-magnitude profile value at coordinates beyond `threshold`.
fn argmax_abs_beyond(profile: &Profile, threshold: f64) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for (&c, &v) in profile.coords.iter().zip(&profile.values) {
        if c > threshold && best.map_or(true, |(_, bv): (f64, f64)| v.abs() > bv.abs()) {
            best = Some((c, v));
        }
    }
    best
}

/// Relative L2 distance between two data fields over the open strip
/// `0 < x < L`, `0 < r < R` (half-sample insets on each edge), the
/// region where [`resynthesize`] evaluates the series.
fn data_rel_l2_inside(a: &DataField, b: &DataField, l_bound: f64, r_bound: f64) -> Result<f64> {
    if a.grid != b.grid {
        return Err(SartError::GridMismatch("data fields must share a grid".into()));
    }
    let g = &a.grid;
    let ix = 0.5 * g.d_track;
    let ir = 0.5 * g.d_radius;
    let mut err = 0.0f64;
    let mut norm = 0.0f64;
    for i in 0..g.n_track {
        let x = g.track(i);
        if x <= ix || x >= l_bound - ix {
            continue;
        }
        for j in 0..g.n_radius {
            let r = g.radius(j);
            if r <= ir || r >= r_bound - ir {
                continue;
            }
            let d = a.values[g.idx(i, j)] - b.values[g.idx(i, j)];
            err += d * d;
            norm += b.values[g.idx(i, j)] * b.values[g.idx(i, j)];
        }
    }
    if norm == 0.0 {
        return Ok(if err == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok((err / norm).sqrt())
}

/// Aperture ladder: one disc phantom, closed-form data at each extent
/// multiplier, inversion under both radial continuations, and the
/// plateau and shadow-dip measurements used to compare them.
#[derive(Debug, Clone, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct Ch2Config {
    image: GridParams,
    phantom: PhantomSpec,
    data_base: DataParams,
    extents: Vec<u32>,
    profile_row_y: f64,
    profile_column_x: f64,
    plateau_erode_px: f64,
}

fn run_ch2(
    cfg: &Ch2Config,
    resolved: &[(String, String)],
    name: &str,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let mut out = Outputs::new(out_dir)?;
    let mut rows: Vec<(String, f64)> = Vec::new();
    let igrid = cfg.image.build()?;
    let disc = *cfg.phantom.discs.first().ok_or_else(|| {
        SartError::InvalidArgument("ch2_ladder needs at least one phantom disc".into())
    })?;
    if cfg.extents.is_empty() {
        return Err(SartError::InvalidArgument("ch2_ladder needs a nonempty extent list".into()));
    }

    let phantom = render_phantom(&cfg.phantom, igrid)?;
    out.pgm("phantom.pgm", &phantom)?;
    out.image("phantom.field", &phantom, "rendered disc phantom")?;
    out.profile("phantom_row.csv", &cross_section(&phantom, cfg.profile_row_y)?, "x")?;
    out.profile("phantom_column.csv", &column_section(&phantom, cfg.profile_column_x)?, "y")?;
    rows.push((
        "phantom/plateau_amplitude".to_string(),
        plateau_amplitude(&phantom, &disc, cfg.plateau_erode_px)?,
    ));

    let far_edge = disc.cy + disc.radius;
    for &m in &cfg.extents {
        let dgrid = cfg.data_base.scaled(m)?.build()?;
        let data = disc_arc_data(&cfg.phantom, &dgrid)?;
        for mode in [ContinuationMode::ZeroFill, ContinuationMode::Approximate] {
            let recon = invert_fbp(&data, &igrid, mode)?;
            let stage = format!("extent{m}_{mode}");
            out.pgm(&format!("{stage}.pgm"), &recon)?;
            out.profile(
                &format!("{stage}_row.csv"),
                &cross_section(&recon, cfg.profile_row_y)?,
                "x",
            )?;
            let column = column_section(&recon, cfg.profile_column_x)?;
            out.profile(&format!("{stage}_column.csv"), &column, "y")?;
            rows.push((format!("{stage}/l2_relative_vs_phantom"), l2_relative(&recon, &phantom)?));
            rows.push((
                format!("{stage}/plateau_amplitude"),
                plateau_amplitude(&recon, &disc, cfg.plateau_erode_px)?,
            ));
            if let Some((y_dip, v_dip)) = min_beyond(&column, far_edge) {
                rows.push((format!("{stage}/dip_y"), y_dip));
                rows.push((format!("{stage}/dip_value"), v_dip));
            }
        }
    }
    out.metrics(name, resolved, &rows)
}

/// Null-space atlas: render ghosts from both unmeasured-region
/// families, and certify for each that its forward data stays out of
/// the measured strip.
#[derive(Debug, Clone, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct Ch3Config {
    image: GridParams,
    l_bound: f64,
    r_bound: f64,
    subtract_baseline: bool,
    range_a: f64,
    range_b: Vec<f64>,
    mode_a: f64,
    mode_l: Vec<u32>,
    families: Vec<String>,
    cert_data: DataParams,
    cert_angles: usize,
    cert_guard_px: usize,
}

fn run_ch3(
    cfg: &Ch3Config,
    resolved: &[(String, String)],
    name: &str,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let mut out = Outputs::new(out_dir)?;
    let mut rows: Vec<(String, f64)> = Vec::new();
    let igrid = cfg.image.build()?;
    let dgrid = cfg.cert_data.build()?;

    let mut ghosts: Vec<(String, GhostParams)> = Vec::new();
    for &b in &cfg.range_b {
        ghosts.push((
            format!("range_b{b}"),
            GhostParams::range(cfg.range_a, b, cfg.l_bound, cfg.r_bound)?,
        ));
    }
    for family in &cfg.families {
        for &l in &cfg.mode_l {
            let p = match family.as_str() {
                "even" => GhostParams::even_mode(cfg.mode_a, l as usize, cfg.l_bound, cfg.r_bound)?,
                "odd" => GhostParams::odd_mode(cfg.mode_a, l as usize, cfg.l_bound, cfg.r_bound)?,
                other => {
                    return Err(SartError::InvalidArgument(format!(
                        "unknown ghost family '{other}'; choose even or odd"
                    )))
                }
            };
            ghosts.push((format!("{family}_l{l}"), p));
        }
    }

    for (stage, p) in &ghosts {
        let img = ghost_image(p, cfg.subtract_baseline, &igrid)?;
        out.pgm(&format!("{stage}.pgm"), &img)?;
        out.image(&format!("{stage}.field"), &img, "null-space ghost")?;
        rows.push((format!("{stage}/max_abs"), img.max_abs()));
        if p.family() == GhostFamily::Range {
            // The spike-at-a ghost concentrates on the circle of radius
            // R about (a, 0); record where the column through a peaks.
            let column = column_section(&img, p.a)?;
            if let Some((y_ridge, _)) = argmax_abs_beyond(&column, 0.0) {
                rows.push((format!("{stage}/ridge_y"), y_ridge));
            }
        }
        let cert = null_space_certificate(p, &igrid, &dgrid, cfg.cert_angles, cfg.cert_guard_px)?;
        rows.push((format!("{stage}/measured_l2"), cert.measured_l2));
        rows.push((format!("{stage}/unmeasured_l2"), cert.unmeasured_l2));
        rows.push((format!("{stage}/leak_ratio"), cert.ratio));
    }
    out.metrics(name, resolved, &rows)
}

/// Series expansion: forward data of a Gaussian bump, resynthesis
/// error as the coefficient cutoff grows, and a series inversion
/// compared against filtered backprojection away from the strip edges.
#[derive(Debug, Clone, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct Ch4Config {
    image: GridParams,
    data: DataParams,
    l_bound: f64,
    r_bound: f64,
    gaussian: GaussianSpec,
    n_angles: usize,
    k_sweep: Vec<usize>,
    invert_k: usize,
    interior_margin: f64,
}

#[derive(Debug, Clone, Copy, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct GaussianSpec {
    cx: f64,
    cy: f64,
    sigma2: f64,
    amplitude: f64,
}

fn truncate_coeffs(full: &CoeffTable, k_max: usize, l_max: usize) -> CoeffTable {
    let mut out = CoeffTable::zeros(k_max.min(full.k_max), l_max.min(full.l_max));
    for k in 0..=out.k_max {
        for l in 0..=out.l_max {
            let src = full.idx(k, l);
            let dst = out.idx(k, l);
            out.even[dst] = full.even[src];
            out.odd[dst] = full.odd[src];
        }
    }
    out
}

fn run_ch4(
    cfg: &Ch4Config,
    resolved: &[(String, String)],
    name: &str,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let mut out = Outputs::new(out_dir)?;
    let mut rows: Vec<(String, f64)> = Vec::new();
    let igrid = cfg.image.build()?;
    let dgrid = cfg.data.build()?;
    if cfg.k_sweep.is_empty() {
        return Err(SartError::InvalidArgument("ch4_ortho needs a nonempty k_sweep".into()));
    }
    if !(0.0..0.5).contains(&cfg.interior_margin) {
        return Err(SartError::InvalidArgument(format!(
            "interior_margin must lie in [0, 0.5), got {}",
            cfg.interior_margin
        )));
    }

    let gs = cfg.gaussian;
    if !(gs.sigma2 > 0.0) || !gs.sigma2.is_finite() {
        return Err(SartError::InvalidArgument(format!(
            "gaussian.sigma2 must be positive, got {}",
            gs.sigma2
        )));
    }
    let scene = Image::from_fn(igrid, |x, y| {
        let d2 = (x - gs.cx) * (x - gs.cx) + (y - gs.cy) * (y - gs.cy);
        gs.amplitude * (-d2 / gs.sigma2).exp()
    });
    out.pgm("scene.pgm", &scene)?;
    out.image("scene.field", &scene, "gaussian scene")?;

    let data = forward(&scene, &dgrid, cfg.n_angles)?;
    out.data("forward.field", &data, "circle averages of the gaussian scene")?;

    let k_top = *cfg.k_sweep.iter().max().unwrap();
    let coeffs = project_data(&data, k_top, k_top, cfg.l_bound, cfg.r_bound)?;
    for &k in &cfg.k_sweep {
        let truncated = truncate_coeffs(&coeffs, k, k);
        let resyn = resynthesize(&truncated, &dgrid, cfg.l_bound, cfg.r_bound)?;
        let err = data_rel_l2_inside(&resyn, &data, cfg.l_bound, cfg.r_bound)?;
        rows.push((format!("resynthesis_k{k}/rel_l2"), err));
    }

    let cache = out.dir.join("cache");
    let recon_series =
        invert_ortho(&data, cfg.invert_k, cfg.invert_k, &igrid, cfg.l_bound, cfg.r_bound, Some(&cache))?;
    out.pgm("invert_series.pgm", &recon_series)?;
    out.image("invert_series.field", &recon_series, "series inversion")?;
    let recon_fbp = invert_fbp(&data, &igrid, ContinuationMode::Approximate)?;
    out.pgm("invert_fbp.pgm", &recon_fbp)?;
    out.image("invert_fbp.field", &recon_fbp, "filtered backprojection")?;

    let mx = cfg.interior_margin * cfg.l_bound;
    let mr = cfg.interior_margin * cfg.r_bound;
    let interior = Image::from_fn(igrid, |x, y| {
        let inside =
            x.abs() < cfg.l_bound - mx && y > mr && y < cfg.r_bound - mr;
        if inside {
            1.0
        } else {
            0.0
        }
    });
    let series_vs_fbp = compare(&recon_series, &recon_fbp, Some(&interior))?;
    rows.push(("invert/series_vs_fbp_l2".to_string(), series_vs_fbp.l2_relative));
    let series_vs_scene = compare(&recon_series, &scene, Some(&interior))?;
    rows.push(("invert/series_vs_scene_l2".to_string(), series_vs_scene.l2_relative));
    let fbp_vs_scene = compare(&recon_fbp, &scene, Some(&interior))?;
    rows.push(("invert/fbp_vs_scene_l2".to_string(), fbp_vs_scene.l2_relative));

    out.metrics(name, resolved, &rows)
}

/// Multi-antenna sweep: resolve a non-even scene from vertically
/// offset even images at several noise levels and antenna sets.
#[derive(Debug, Clone, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct Ch5Config {
    image: GridParams,
    phantom: PhantomSpec,
    antenna_rows: Vec<Vec<u32>>,
    noise_percents: Vec<f64>,
    additive_scale: f64,
    seed: u64,
    mode: String,
    pairing: String,
    eta0_source_rows: f64,
    profile_column_x: f64,
}

pub fn parse_pipeline_mode(s: &str) -> Result<PipelineMode> {
    match s {
        "direct" => Ok(PipelineMode::Direct),
        "radon" | "via_radon" => Ok(PipelineMode::ViaRadon),
        other => Err(SartError::InvalidArgument(format!(
            "unknown pipeline mode '{other}'; choose direct or radon"
        ))),
    }
}

pub fn parse_pairing(s: &str) -> Result<PairingMode> {
    match s {
        "all_pairs" => Ok(PairingMode::AllPairs),
        "reference_only" => Ok(PairingMode::ReferenceOnly),
        other => Err(SartError::InvalidArgument(format!(
            "unknown pairing '{other}'; choose all_pairs or reference_only"
        ))),
    }
}

fn run_ch5(
    cfg: &Ch5Config,
    resolved: &[(String, String)],
    name: &str,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let mut out = Outputs::new(out_dir)?;
    let mut rows: Vec<(String, f64)> = Vec::new();
    let igrid = cfg.image.build()?;
    let mode = parse_pipeline_mode(&cfg.mode)?;
    let pairing = parse_pairing(&cfg.pairing)?;

    let phantom = render_phantom(&cfg.phantom, igrid)?;
    out.pgm("phantom.pgm", &phantom)?;
    out.image("phantom.field", &phantom, "non-even disc phantom")?;
    out.profile("phantom_column.csv", &column_section(&phantom, cfg.profile_column_x)?, "y")?;

    for set in &cfg.antenna_rows {
        let positions: Vec<f64> = set.iter().map(|&r| r as f64 * igrid.dy).collect();
        let antennas = AntennaArray::new(positions, igrid.dy)?;
        let label: Vec<String> = set.iter().map(u32::to_string).collect();
        let set_name = format!("antennas_{}", label.join("_"));
        for &percent in &cfg.noise_percents {
            let noise = NoiseSpec {
                percent,
                additive_scale: cfg.additive_scale,
                seed: cfg.seed,
            };
            let resolver = ResolverConfig {
                pairing,
                eta0_source: cfg.eta0_source_rows * igrid.dy,
                two_set: None,
            };
            let run = lr_pipeline(&phantom, &antennas, &noise, mode, &resolver)?;
            let stage = format!("{set_name}_noise{}", (percent * 100.0).round() as i64);
            out.pgm(&format!("{stage}.pgm"), &run.resolved)?;
            out.profile(
                &format!("{stage}_column.csv"),
                &column_section(&run.resolved, cfg.profile_column_x)?,
                "y",
            )?;
            rows.push((format!("{stage}/l2_relative"), l2_relative(&run.resolved, &phantom)?));
            rows.push((format!("{stage}/linf"), linf(&run.resolved, &phantom)?));
            rows.push((
                format!("{stage}/mirror_suppression_ratio"),
                mirror_suppression_ratio(&run.resolved, &cfg.phantom)?,
            ));
        }
    }
    out.metrics(name, resolved, &rows)
}
