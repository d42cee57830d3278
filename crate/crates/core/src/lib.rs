//! Scheduled relaxation Jacobi (SRJ) schemes for non-symmetric linear systems.

pub mod amplification;
pub mod catalog;
pub mod dense;
pub mod eigen;
pub mod error;
pub mod optimizer;
pub mod pde;
pub mod ratio;
pub mod region;
pub mod solver;
pub mod sparse;
pub mod spectral;

pub use amplification::{chebyshev_scheme, Scheme};
pub use error::{Error, Result};
pub use ratio::Ratio;
pub use region::{make_region, EllipseRegion};
pub use sparse::CsrMatrix;
