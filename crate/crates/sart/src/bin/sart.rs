//! Command line front end: render phantoms, simulate circle-average
//! data, add noise, invert by each method, render null-space ghosts,
//! resolve the left-right ambiguity, compare fields, and drive the
//! scripted scenarios. Exit code 0 on success, 2 on validation errors,
//! and 3 when non-finite values are detected.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sart::fbp::{invert_fbp, ContinuationMode};
use sart::forward::forward;
use sart::ghost::{ghost_image, GhostParams};
use sart::grid::render_phantom;
use sart::io;
use sart::lr::{lr_pipeline, AntennaArray, RegularizationSpec, ResolverConfig};
use sart::noise::{add_noise, add_noise_image, NoiseSpec};
use sart::ortho::invert_ortho;
use sart::scenario::{
    evaluate_metric, parse_pipeline_mode, run_scenario, smoke_overrides, GeometryConfig, Metric,
};
use sart::spectral::{data_spectrum, invert_fourier, tail_fraction};
use sart::{Image, Result, SartError};

#[derive(Parser)]
#[command(
    name = "sart",
    version,
    about = "Strip-map SAR imaging toolkit built on circular means"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Render the disc phantom of a geometry config onto its image grid.
    Phantom {
        /// Geometry config (TOML) with [image] and [[phantom.discs]].
        #[arg(long)]
        geometry: PathBuf,
        /// Output image field file.
        #[arg(long)]
        out: PathBuf,
        /// Optional 16-bit PGM preview.
        #[arg(long)]
        pgm: Option<PathBuf>,
    },
    /// Circle averages of an image on the config's data grid.
    Forward {
        /// Input image field file.
        #[arg(long)]
        image: PathBuf,
        /// Geometry config (TOML) with [data] (extent multiplier applies).
        #[arg(long)]
        geometry: PathBuf,
        /// Angular quadrature nodes per circle.
        #[arg(long)]
        angles: usize,
        /// Output data field file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Add seeded Gaussian noise to an image or data field.
    Noise {
        /// Input field file (kind image or data).
        #[arg(long = "in")]
        input: PathBuf,
        /// Noise amplitude as a fraction of the field's peak magnitude.
        #[arg(long)]
        percent: f64,
        /// Extra additive noise scale in field units.
        #[arg(long, default_value_t = 0.0)]
        additive: f64,
        /// RNG seed; reruns with the same seed are bit-identical.
        #[arg(long)]
        seed: u64,
        /// Output field file (same kind as the input).
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct an image from circle-average data.
    #[command(subcommand)]
    Invert(InvertCmd),
    /// Render a null-space ghost (an invisible object) as an image.
    Ghost {
        /// Ghost family: range, even, or odd.
        #[arg(long)]
        family: Option<String>,
        /// Track position of the spike (range) or Bessel parameter (modes).
        #[arg(long)]
        a: Option<f64>,
        /// Radial cosine parameter (range family only).
        #[arg(long)]
        b: Option<f64>,
        /// Mode number (even/odd families only).
        #[arg(long)]
        l: Option<u32>,
        /// Subtract the in-band baseline so the data vanish identically
        /// on the measured strip.
        #[arg(long)]
        subtract_baseline: bool,
        /// Geometry config with [image], l_bound, and r_bound.
        #[arg(long)]
        geometry: PathBuf,
        /// Batch CSV with family,a,param rows; --out becomes a directory.
        #[arg(long)]
        batch: Option<PathBuf>,
        /// Output image field file (or directory in batch mode).
        #[arg(long)]
        out: PathBuf,
        /// Optional 16-bit PGM preview (single-ghost mode).
        #[arg(long)]
        pgm: Option<PathBuf>,
    },
    /// Multi-antenna left-right ambiguity resolution.
    #[command(subcommand)]
    Lr(LrCmd),
    /// Compare two fields, or measure one, by a named metric.
    Compare {
        /// First image field file (the one being measured).
        #[arg(long)]
        a: PathBuf,
        /// Reference image field file (pairwise metrics).
        #[arg(long)]
        b: Option<PathBuf>,
        /// Metric: l2_relative, linf, mirror_suppression_ratio, plateau_amplitude.
        #[arg(long)]
        metric: String,
        /// Optional mask image; nonzero samples select the region.
        #[arg(long)]
        mask: Option<PathBuf>,
        /// Geometry config supplying the phantom for the disc metrics.
        #[arg(long)]
        geometry: Option<PathBuf>,
        /// Disc erosion in pixels for plateau_amplitude.
        #[arg(long, default_value_t = 3.0)]
        erode_px: f64,
    },
    /// Scripted experiment suites.
    #[command(subcommand)]
    Scenario(ScenarioCmd),
}

#[derive(Subcommand)]
enum InvertCmd {
    /// Filtered backprojection with a choice of radial continuation.
    Fbp {
        /// Input data field file.
        #[arg(long)]
        data: PathBuf,
        /// Geometry config supplying the image grid.
        #[arg(long)]
        grid: PathBuf,
        /// Radial continuation past the measured aperture: zero | approx.
        #[arg(long, default_value = "approx")]
        continuation: String,
        /// Output image field file.
        #[arg(long)]
        out: PathBuf,
        /// Optional 16-bit PGM preview.
        #[arg(long)]
        pgm: Option<PathBuf>,
    },
    /// Fourier-domain inversion via the radial Hankel transform.
    Fourier {
        /// Input data field file.
        #[arg(long)]
        data: PathBuf,
        /// Geometry config supplying the image grid.
        #[arg(long)]
        grid: PathBuf,
        /// Output image field file.
        #[arg(long)]
        out: PathBuf,
        /// Also export the data spectrum (kind = spectrum).
        #[arg(long)]
        spectrum_out: Option<PathBuf>,
        /// Optional 16-bit PGM preview.
        #[arg(long)]
        pgm: Option<PathBuf>,
    },
    /// Orthogonal-series inversion on the measured strip.
    Ortho {
        /// Input data field file.
        #[arg(long)]
        data: PathBuf,
        /// Coefficient cutoff along the track axis.
        #[arg(long)]
        kmax: usize,
        /// Coefficient cutoff along the radial axis.
        #[arg(long)]
        lmax: usize,
        /// Geometry config with [image], l_bound, and r_bound.
        #[arg(long)]
        grid: PathBuf,
        /// Directory for cached basis reconstructions.
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Output image field file.
        #[arg(long)]
        out: PathBuf,
        /// Optional 16-bit PGM preview.
        #[arg(long)]
        pgm: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum LrCmd {
    /// Resolve a non-even scene from vertically offset antennas.
    Resolve {
        /// Input scene as an image field file.
        #[arg(long)]
        phantom: PathBuf,
        /// Antenna offsets in rows, comma separated (first must be 0).
        #[arg(long)]
        positions: String,
        /// Noise fraction of peak applied per antenna.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Extra additive noise scale in field units.
        #[arg(long, default_value_t = 0.0)]
        additive: f64,
        /// RNG seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Even images come from mirror averaging (direct) or a full
        /// forward-and-invert round trip (radon).
        #[arg(long, default_value = "direct")]
        mode: String,
        /// exact: sine-weighted stacking; reg: regularized two-antenna
        /// division (requires exactly two positions).
        #[arg(long, default_value = "exact")]
        resolver: String,
        /// Regularization strength for --resolver reg.
        #[arg(long, default_value_t = 1e-2)]
        eps: f64,
        /// Cosine power for --resolver reg.
        #[arg(long, default_value_t = 2)]
        k: u32,
        /// Output image field file.
        #[arg(long)]
        out: PathBuf,
        /// Directory for per-antenna even images and data fields.
        #[arg(long)]
        emit_intermediates: Option<PathBuf>,
        /// Optional 16-bit PGM preview.
        #[arg(long)]
        pgm: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ScenarioCmd {
    /// Run a named scenario and write its report files.
    Run {
        /// One of: ch2_ladder, ch3_ghost_sweep, ch4_ortho, ch5_antenna_sweep.
        name: String,
        /// Config file; defaults to scenarios/<name>.toml.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Dotted-path override, repeatable: --set image.nx=64.
        #[arg(long = "set")]
        set: Vec<String>,
        /// Apply the built-in small-grid overrides before --set.
        #[arg(long)]
        smoke: bool,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn read_image_file(path: &Path) -> Result<Image> {
    Ok(io::read_image(path)?.0)
}

fn maybe_pgm(pgm: Option<&PathBuf>, img: &Image) -> Result<()> {
    if let Some(p) = pgm {
        io::write_pgm16(p, img, None)?;
    }
    Ok(())
}

fn require_bounds(cfg: &GeometryConfig, path: &Path) -> Result<(f64, f64)> {
    match (cfg.l_bound, cfg.r_bound) {
        (Some(l), Some(r)) => Ok((l, r)),
        _ => Err(SartError::InvalidArgument(format!(
            "{}: this command needs l_bound and r_bound in the geometry config",
            path.display()
        ))),
    }
}

fn parse_continuation(s: &str) -> Result<ContinuationMode> {
    match s {
        "zero" | "zero_fill" => Ok(ContinuationMode::ZeroFill),
        "approx" | "approximate" => Ok(ContinuationMode::Approximate),
        other => Err(SartError::InvalidArgument(format!(
            "unknown continuation '{other}'; choose zero or approx"
        ))),
    }
}

fn build_ghost(
    family: &str,
    a: f64,
    b: Option<f64>,
    l: Option<u32>,
    l_bound: f64,
    r_bound: f64,
) -> Result<GhostParams> {
    match family {
        "range" => {
            let b = b.ok_or_else(|| {
                SartError::InvalidArgument("range ghosts need --b".into())
            })?;
            GhostParams::range(a, b, l_bound, r_bound)
        }
        "even" | "odd" => {
            let l = l.ok_or_else(|| {
                SartError::InvalidArgument(format!("{family} ghosts need --l"))
            })? as usize;
            if family == "even" {
                GhostParams::even_mode(a, l, l_bound, r_bound)
            } else {
                GhostParams::odd_mode(a, l, l_bound, r_bound)
            }
        }
        other => Err(SartError::InvalidArgument(format!(
            "unknown ghost family '{other}'; choose range, even, or odd"
        ))),
    }
}

/// Batch rows: `family,a,param` where param is b for the range family
/// and the mode number for even/odd. Blank lines, `#` comments, and a
/// `family,...` header line are skipped.
fn parse_ghost_batch(text: &str, l_bound: f64, r_bound: f64) -> Result<Vec<(String, GhostParams)>> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("family") {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(SartError::Format(format!(
                "batch line {}: expected family,a,param",
                ln + 1
            )));
        }
        let bad_num = |what: &str| {
            SartError::Format(format!("batch line {}: bad number for {what}", ln + 1))
        };
        let a: f64 = parts[1].parse().map_err(|_| bad_num("a"))?;
        let param: f64 = parts[2].parse().map_err(|_| bad_num("param"))?;
        let (name, p) = match parts[0] {
            "range" => (
                format!("range_a{a}_b{param}"),
                build_ghost("range", a, Some(param), None, l_bound, r_bound)?,
            ),
            fam @ ("even" | "odd") => {
                if param < 0.0 || param.fract() != 0.0 {
                    return Err(SartError::Format(format!(
                        "batch line {}: mode number must be a nonnegative integer",
                        ln + 1
                    )));
                }
                let l = param as u32;
                (
                    format!("{fam}_a{a}_l{l}"),
                    build_ghost(fam, a, None, Some(l), l_bound, r_bound)?,
                )
            }
            other => {
                return Err(SartError::Format(format!(
                    "batch line {}: unknown family '{other}'",
                    ln + 1
                )))
            }
        };
        out.push((name, p));
    }
    if out.is_empty() {
        return Err(SartError::InvalidArgument("batch CSV has no parameter rows".into()));
    }
    Ok(out)
}

fn parse_positions(s: &str, dy: f64) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let rows: f64 = part.trim().parse().map_err(|_| {
            SartError::InvalidArgument(format!("bad antenna offset '{part}'"))
        })?;
        out.push(rows * dy);
    }
    Ok(out)
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Phantom { geometry, out, pgm } => {
            let cfg = GeometryConfig::load(&geometry)?;
            let spec = cfg.phantom.clone().ok_or_else(|| {
                SartError::InvalidArgument(format!(
                    "{}: geometry config has no [[phantom.discs]]",
                    geometry.display()
                ))
            })?;
            let img = render_phantom(&spec, cfg.image_grid()?)?;
            io::write_image(&out, &img, &vec![("content".into(), "phantom".into())])?;
            maybe_pgm(pgm.as_ref(), &img)?;
            println!("wrote {}", out.display());
        }
        Cmd::Forward { image, geometry, angles, out } => {
            let cfg = GeometryConfig::load(&geometry)?;
            let img = read_image_file(&image)?;
            let data = forward(&img, &cfg.data_grid()?, angles)?;
            let meta = vec![
                ("content".into(), "circle averages".into()),
                ("angles".into(), angles.to_string()),
            ];
            io::write_data(&out, &data, &meta)?;
            println!("wrote {}", out.display());
        }
        Cmd::Noise { input, percent, additive, seed, out } => {
            let spec = NoiseSpec { percent, additive_scale: additive, seed };
            match io::peek_kind(&input)?.as_str() {
                "image" => {
                    let (img, mut meta) = io::read_image(&input)?;
                    let noisy = add_noise_image(&img, &spec)?;
                    meta.push(("noise_percent".into(), percent.to_string()));
                    meta.push(("noise_seed".into(), seed.to_string()));
                    io::write_image(&out, &noisy, &meta)?;
                }
                "data" => {
                    let (data, mut meta) = io::read_data(&input)?;
                    let noisy = add_noise(&data, &spec)?;
                    meta.push(("noise_percent".into(), percent.to_string()));
                    meta.push(("noise_seed".into(), seed.to_string()));
                    io::write_data(&out, &noisy, &meta)?;
                }
                other => {
                    return Err(SartError::Format(format!(
                        "{}: cannot add noise to kind '{other}'",
                        input.display()
                    )))
                }
            }
            println!("wrote {}", out.display());
        }
        Cmd::Invert(sub) => run_invert(sub)?,
        Cmd::Ghost { family, a, b, l, subtract_baseline, geometry, batch, out, pgm } => {
            let cfg = GeometryConfig::load(&geometry)?;
            let igrid = cfg.image_grid()?;
            let (lb, rb) = require_bounds(&cfg, &geometry)?;
            match batch {
                Some(csv) => {
                    let text = std::fs::read_to_string(&csv)?;
                    let ghosts = parse_ghost_batch(&text, lb, rb)?;
                    std::fs::create_dir_all(&out)?;
                    for (name, p) in &ghosts {
                        let img = ghost_image(p, subtract_baseline, &igrid)?;
                        let path = out.join(format!("{name}.field"));
                        io::write_image(
                            &path,
                            &img,
                            &vec![("content".into(), "null-space ghost".into())],
                        )?;
                        io::write_pgm16(&out.join(format!("{name}.pgm")), &img, None)?;
                        println!("wrote {}", path.display());
                    }
                }
                None => {
                    let family = family.ok_or_else(|| {
                        SartError::InvalidArgument(
                            "ghost needs --family (or --batch)".into(),
                        )
                    })?;
                    let a = a.ok_or_else(|| {
                        SartError::InvalidArgument("ghost needs --a".into())
                    })?;
                    let p = build_ghost(&family, a, b, l, lb, rb)?;
                    let img = ghost_image(&p, subtract_baseline, &igrid)?;
                    io::write_image(
                        &out,
                        &img,
                        &vec![("content".into(), "null-space ghost".into())],
                    )?;
                    maybe_pgm(pgm.as_ref(), &img)?;
                    println!("wrote {}", out.display());
                }
            }
        }
        Cmd::Lr(LrCmd::Resolve {
            phantom,
            positions,
            noise,
            additive,
            seed,
            mode,
            resolver,
            eps,
            k,
            out,
            emit_intermediates,
            pgm,
        }) => {
            let scene = read_image_file(&phantom)?;
            let offsets = parse_positions(&positions, scene.grid.dy)?;
            let antennas = AntennaArray::new(offsets, scene.grid.dy)?;
            let two_set = match resolver.as_str() {
                "exact" => None,
                "reg" => Some(RegularizationSpec {
                    epsilon: eps,
                    cos_power_k: k,
                    eta0_source: 0.0,
                }),
                other => {
                    return Err(SartError::InvalidArgument(format!(
                        "unknown resolver '{other}'; choose exact or reg"
                    )))
                }
            };
            let config = ResolverConfig { two_set, ..ResolverConfig::default() };
            let spec = NoiseSpec { percent: noise, additive_scale: additive, seed };
            let run = lr_pipeline(&scene, &antennas, &spec, parse_pipeline_mode(&mode)?, &config)?;
            io::write_image(
                &out,
                &run.resolved,
                &vec![("content".into(), "left-right resolved scene".into())],
            )?;
            maybe_pgm(pgm.as_ref(), &run.resolved)?;
            if let Some(dir) = emit_intermediates {
                std::fs::create_dir_all(&dir)?;
                for (offset, img) in &run.even_images {
                    let rows = (offset / scene.grid.dy).round() as i64;
                    let path = dir.join(format!("even_{rows}.field"));
                    io::write_image(
                        &path,
                        img,
                        &vec![("content".into(), format!("even image, offset {offset}"))],
                    )?;
                    io::write_pgm16(&dir.join(format!("even_{rows}.pgm")), img, None)?;
                }
                for (offset, data) in &run.data {
                    let rows = (offset / scene.grid.dy).round() as i64;
                    io::write_data(
                        &dir.join(format!("data_{rows}.field")),
                        data,
                        &vec![("content".into(), format!("circle averages, offset {offset}"))],
                    )?;
                }
            }
            println!("wrote {}", out.display());
        }
        Cmd::Compare { a, b, metric, mask, geometry, erode_px } => {
            let metric: Metric = metric.parse()?;
            let img_a = read_image_file(&a)?;
            let img_b = match &b {
                Some(p) => Some(read_image_file(p)?),
                None => None,
            };
            let mask_img = match &mask {
                Some(p) => Some(read_image_file(p)?),
                None => None,
            };
            let phantom = match &geometry {
                Some(p) => GeometryConfig::load(p)?.phantom,
                None => None,
            };
            let value = evaluate_metric(
                metric,
                &img_a,
                img_b.as_ref(),
                mask_img.as_ref(),
                phantom.as_ref(),
                erode_px,
            )?;
            println!("{metric},{value}");
        }
        Cmd::Scenario(ScenarioCmd::Run { name, config, set, smoke, out }) => {
            let config = config.unwrap_or_else(|| PathBuf::from(format!("scenarios/{name}.toml")));
            let mut overrides: Vec<(String, String)> = Vec::new();
            if smoke {
                overrides.extend(smoke_overrides(&name));
            }
            for item in &set {
                let (key, value) = item.split_once('=').ok_or_else(|| {
                    SartError::InvalidArgument(format!(
                        "override '{item}' is not of the form key=value"
                    ))
                })?;
                overrides.push((key.trim().to_string(), value.trim().to_string()));
            }
            let files = run_scenario(&name, &config, &overrides, &out)?;
            println!("wrote {} files under {}", files.len(), out.display());
            if let Some(metrics) = files.last() {
                println!("metrics: {}", metrics.display());
            }
        }
    }
    Ok(())
}

fn run_invert(cmd: InvertCmd) -> Result<()> {
    match cmd {
        InvertCmd::Fbp { data, grid, continuation, out, pgm } => {
            let cfg = GeometryConfig::load(&grid)?;
            let (field, _) = io::read_data(&data)?;
            let mode = parse_continuation(&continuation)?;
            let img = invert_fbp(&field, &cfg.image_grid()?, mode)?;
            let meta = vec![
                ("content".into(), "filtered backprojection".into()),
                ("continuation".into(), mode.to_string()),
            ];
            io::write_image(&out, &img, &meta)?;
            maybe_pgm(pgm.as_ref(), &img)?;
            println!("wrote {}", out.display());
        }
        InvertCmd::Fourier { data, grid, out, spectrum_out, pgm } => {
            let cfg = GeometryConfig::load(&grid)?;
            let (field, _) = io::read_data(&data)?;
            let tail = tail_fraction(&field);
            if tail > 0.05 {
                eprintln!(
                    "warning: {:.1}% of the peak magnitude sits on the outermost radius; \
                     the data look radially truncated and the spectrum will ring",
                    100.0 * tail
                );
            }
            let img = invert_fourier(&field, &cfg.image_grid()?)?;
            if let Some(spath) = spectrum_out {
                let g = &field.grid;
                let d_rho = std::f64::consts::PI / (g.n_radius as f64 * g.d_radius);
                let spectrum = data_spectrum(&field, g.n_radius, d_rho)?;
                io::write_spectrum(
                    &spath,
                    &spectrum,
                    &vec![("content".into(), "data spectrum".into())],
                )?;
            }
            io::write_image(
                &out,
                &img,
                &vec![("content".into(), "Fourier-domain inversion".into())],
            )?;
            maybe_pgm(pgm.as_ref(), &img)?;
            println!("wrote {}", out.display());
        }
        InvertCmd::Ortho { data, kmax, lmax, grid, cache, out, pgm } => {
            let cfg = GeometryConfig::load(&grid)?;
            let (lb, rb) = require_bounds(&cfg, &grid)?;
            let (field, _) = io::read_data(&data)?;
            let img = invert_ortho(
                &field,
                kmax,
                lmax,
                &cfg.image_grid()?,
                lb,
                rb,
                cache.as_deref(),
            )?;
            let meta = vec![
                ("content".into(), "orthogonal-series inversion".into()),
                ("kmax".into(), kmax.to_string()),
                ("lmax".into(), lmax.to_string()),
            ];
            io::write_image(&out, &img, &meta)?;
            maybe_pgm(pgm.as_ref(), &img)?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}
