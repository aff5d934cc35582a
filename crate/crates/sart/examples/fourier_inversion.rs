//! Invert circle-average data through the frequency domain and compare
//! against filtered backprojection on the same input.
//!
//! The route: Fourier transform along the track, order-zero Hankel
//! transform in radius, the slice map onto the reflectivity spectrum,
//! and an inverse 2-D transform. Exact identities tie the two spectra
//! together, but the route pays for finite data more visibly than
//! backprojection does: data truncated at the track ends cuts slowly
//! decaying ridges of the circle averages, which shows up as a few
//! percent of low-frequency error even for a smooth scene.
//!
//! ```bash
//! cargo run --release --example fourier_inversion [out_dir]
//! ```

use std::path::PathBuf;

use sart::fbp::{invert_fbp, ContinuationMode};
use sart::forward::forward;
use sart::metrics::l2_relative;
use sart::spectral::{invert_fourier, tail_fraction};
use sart::{io, DataGrid, Image, ImageGrid};

fn main() -> sart::Result<()> {
    let out_dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("target/examples/fourier_inversion"));
    std::fs::create_dir_all(&out_dir)?;

    // Gaussian bump above the track on a 64x32 scene; the data grid
    // doubles the track span and reaches past the farthest circle that
    // still sees the bump, so the radial transform is not truncating
    // anything that matters.
    let igrid = ImageGrid::new(64, 32, 0.25, 0.25, -8.0, 0.0)?;
    let scene = Image::from_fn(igrid, |x, y| {
        (-(x * x + (y - 2.0) * (y - 2.0)) / 0.72).exp()
    });
    let dgrid = DataGrid::new(128, 112, 0.25, 0.25, -16.0)?;
    let data = forward(&scene, &dgrid, 1024)?;
    println!(
        "outermost-radius magnitude is {:.1}% of the data peak",
        100.0 * tail_fraction(&data)
    );

    let by_fourier = invert_fourier(&data, &igrid)?;
    let by_fbp = invert_fbp(&data, &igrid, ContinuationMode::Approximate)?;

    io::write_pgm16(&out_dir.join("scene.pgm"), &scene, None)?;
    io::write_pgm16(&out_dir.join("fourier.pgm"), &by_fourier, None)?;
    io::write_pgm16(&out_dir.join("fbp.pgm"), &by_fbp, None)?;
    io::write_image(
        &out_dir.join("fourier.field"),
        &by_fourier,
        &vec![("content".into(), "frequency-domain inversion".into())],
    )?;

    println!("relative L2 error vs the scene:");
    println!("  fourier route               {:.4}", l2_relative(&by_fourier, &scene)?);
    println!("  filtered backprojection     {:.4}", l2_relative(&by_fbp, &scene)?);
    println!("  fourier vs fbp              {:.4}", l2_relative(&by_fourier, &by_fbp)?);
    println!("wrote reconstructions under {}", out_dir.display());
    Ok(())
}
