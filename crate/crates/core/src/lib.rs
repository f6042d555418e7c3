//! Landfast sea-ice simulator: viscous–plastic rheology with tensile
//! strength and basal stress, an implicit momentum solver, upwind transport,
//! diagnostics and output.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// tensor code indexes by component
#![allow(clippy::needless_range_loop)]

pub mod diagnostics;
pub mod ellipticity;
pub mod error;
pub mod forcing;
pub mod grid;
pub mod momentum;
pub mod params;
pub mod rheology;
pub mod scenario;
pub mod transport;
pub mod vtk;

pub use error::{Error, Result};
