//! Path-space Metropolis light transport with regionally adapted
//! perturbation kernels.
// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptation;
pub mod diagnostics;
pub mod driver;
pub mod error;
pub mod image_io;
pub mod math;
pub mod mutations;
pub mod partition;
pub mod path;
pub mod sampling;
pub mod scene;

pub use error::{Error, Result};
