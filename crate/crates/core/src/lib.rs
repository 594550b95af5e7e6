//! Toeplitz space-time block codes for MISO links.
//!
//! The crate covers the whole link: constellations ([`modulation`]), the
//! Toeplitz encoder and its equivalent channel ([`stbc`]), correlated
//! Rayleigh fading ([`channel`]), linear and maximum-likelihood receivers
//! ([`detect`]), closed-form error analysis ([`analytics`]), beamformer
//! design ([`design`]) and a reproducible Monte Carlo harness ([`sim`]).

pub mod analytics;
pub mod channel;
pub mod design;
pub mod detect;
mod error;
pub mod modulation;
pub mod numerics;
pub mod sim;
pub mod stbc;

pub use detect::Detector;
pub use error::{Error, Result};
pub use modulation::{Constellation, Scheme};
pub use num_complex::Complex64;
pub use numerics::ComplexMatrix;
pub use sim::{CurveRecord, ExperimentConfig};
pub use stbc::ToeplitzCode;
