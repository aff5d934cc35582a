//! Numerical toolkit for strip-map SAR imaging built on circular means.
//!
//! A side-looking antenna moving along the line y = 0 measures, for each
//! position x and range r, the average of the ground reflectivity f over the
//! circle of radius r centered at (x, 0). Only the part of f that is even
//! about the track is visible. This crate provides:
//!
//! - the forward model (circle averages of a sampled image), [`forward`]
//! - filtered backprojection inversion with two treatments of the
//!   unmeasured data region, [`fbp`]
//! - Fourier-domain inversion via the Hankel transform, [`spectral`]
//! - an orthogonal-series inversion on the measured rectangle, [`ortho`]
//! - explicit null-space elements ("ghosts") for limited data, [`ghost`]
//! - multi-antenna resolution of the left-right ambiguity, [`lr`]
//! - deterministic noise, metrics, file formats, and scenario drivers.
//!
//! Start with the runnable programs in `examples/`.

pub mod bessel;
pub mod error;
pub mod fbp;
pub mod forward;
pub mod ghost;
pub mod grid;
pub mod io;
pub mod lr;
pub mod metrics;
pub mod noise;
pub mod ortho;
pub mod scenario;
pub mod spectral;

pub use error::{Result, SartError};
pub use grid::{DataField, DataGrid, Disc, Image, ImageGrid, PhantomSpec, Profile};
