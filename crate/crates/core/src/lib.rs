//! Hong-Ou-Mandel coincidence rates for SPDC photon pairs that propagate
//! through dispersive fiber and are counted inside a finite, rectangular
//! coincidence window.
//!
//! The crate is organised in four layers:
//!
//! * [`model`]: domain types, the crystal-to-spectrum derivation chain, a
//!   complex error function kernel, the closed-form windowed coincidence rate
//!   and curve analyzers (FWHM, side-lobe period).
//! * [`oracle`]: a brute-force reference that integrates the time-resolved
//!   coincidence density over the window by adaptive quadrature.
//! * [`fitting`]: global Levenberg-Marquardt fit with shared `(beta2, rho)`,
//!   per-dataset reflectivities and profiled per-dataset scales.
//! * [`io`] and [`synth`]: dataset files and seeded synthetic campaigns.
//!
//! Units are fixed throughout: times in ps, angular frequencies in rad/ps,
//! `rho`, `r`, `s` in ps^-2, `beta2` in ps^2/km and fiber lengths in km.
//!
//! With the default `parallel` feature, grid evaluations, oracle sweeps and
//! finite-difference Jacobians run on rayon. Every such entry point takes an
//! [`Execution`] so the sequential path stays available (and is the only
//! path when the feature is disabled). Output ordering never depends on it.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod fitting;
pub mod io;
pub mod model;
pub mod oracle;
pub mod synth;

pub use error::{Error, Result};
pub use exec::Execution;
pub use model::{
    ChannelParams, ComplexValue, DerivedSpectral, DetectionParams, FilterConvention, FilterParams, HomCurve,
    RateParams, SourceParams,
};
