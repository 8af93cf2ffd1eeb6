//! GREED-VMAF: full-reference video quality features for content at mixed
//! frame rates, with an SVR fusion model and an evaluation harness.
//!
//! The pipeline for one (reference, distorted) pair:
//! 1. [`media`] loads luma planes and builds the pseudo-reference by dropping
//!    reference frames down to the distorted frame rate.
//! 2. [`greed`] measures entropic differences of temporal band-pass
//!    responses ([`bandpass`]) and of spatially mean-subtracted frames, under
//!    a generalized Gaussian model ([`ggd`]).
//! 3. [`vmaf`] adds VIF at four scales and DLM against the pseudo-reference.
//! 4. [`features::extract_features`] concatenates the 21 values;
//!    [`regression`] maps them to a quality score.
//!
//! Data-parallel loops use rayon when the `parallel` feature is on (default)
//! and plain iterators otherwise. Results are identical either way.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Numeric kernels index several parallel buffers with one loop variable.
#![allow(clippy::needless_range_loop)]

pub mod bandpass;
pub mod error;
pub mod eval;
pub mod features;
pub mod filters;
pub mod ggd;
pub mod greed;
pub mod media;
pub mod par;
pub mod regression;
pub mod synth;
pub mod vmaf;

pub use error::{Error, Result};
pub use features::{extract_features, feature_names, FeatureVector, FEATURE_NAMES};
