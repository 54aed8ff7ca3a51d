//! Dirac operators with infinite-mass boundary conditions on planar sectors.
//!
//! The crate covers the Pauli algebra and boundary matrices, the angular
//! eigenbasis of a sector, modified Bessel functions of the second kind,
//! the radial fiber operators with their self-adjoint extensions, a spectral
//! engine for the massive operator on truncated sectors, and polygon
//! classification.

// `!(x > 0.0)` style guards deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod angular;
pub mod bessel;
pub mod cli;
pub mod error;
pub mod extension;
pub mod fiber;
pub mod fit;
pub mod geometry;
pub mod grid;
pub mod linalg;
pub mod quadrature;
pub mod spectra;
pub mod spinor;

pub use angular::{AngularMode, SectorGeometry};
pub use error::{Error, Result};
pub use extension::{ExtensionAudit, ScalingFlow};
pub use fiber::{DeficiencyElement, ExtensionParameter, FiberClass, FiberOperator, OuterWall};
pub use geometry::{PolygonClass, PolygonDomain};
pub use grid::{RadialGrid, Spacing};
pub use angular::Truncation;
pub use spectra::{SectorAssembly, SpectralReport};
pub use spinor::{Mat2, Spinor, UnitVector2};

pub use num_complex::Complex64 as C64;
