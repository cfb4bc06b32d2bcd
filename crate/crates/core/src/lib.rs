//! Covert rate optimization for a STAR-RIS aided rate-splitting downlink
//! with a warden (Willie) running a radiometer.

// `!(x >= 0.0)` rejects NaN along with negatives.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alloc;
pub mod beamforming;
pub mod channel;
pub mod covert;
pub mod driver;
pub mod error;
pub mod linalg;
pub mod rates;
pub mod scenario;
pub mod sdp;

pub use error::{Constraint, Error, Result};

/// Complex baseband sample type.
pub type C64 = num_complex::Complex<f64>;
