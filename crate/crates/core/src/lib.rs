//! Distortion-rate analysis of sampled Gaussian processes: estimator
//! spectra under uniform and filter-bank sampling, reverse waterfilling,
//! optimal pre-sampling filters and independent time-domain checks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod oracle;
pub mod presets;
pub mod sampling;
pub mod spectra;
pub mod waterfill;

pub use error::{Error, Result};
pub use linalg::{hermitian_eig, inv_sqrt_psd, EigenDecomposition, HermitianMatrix};
pub use sampling::{EigenCurves, SamplerSpec, ScalarCurve};
pub use spectra::{ComplexGainProfile, FrequencyInterval, FrequencySet, PsdSegment, SpectralDensity};
pub use waterfill::{RateSpec, RateUnit, WaterfillSolution};
