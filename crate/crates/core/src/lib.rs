// Tensor code indexes several arrays per loop, and `!(x > 0.0)` is used on
// purpose so that NaN fails the check.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod coords;
pub mod decomposition;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod grid;
pub mod jet;
pub mod monitors;
pub mod oracle;
pub mod output;
pub mod residuals;
pub mod state;
pub mod stencil;

pub use error::{Error, Result};
pub use geometry::{curvature_sample, CurvatureSample, NablaRicNorm};
pub use grid::{Grid, RadialField};
pub use state::{Topology, WarpedState};
