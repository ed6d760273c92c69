//! Gauge-theoretic constructions for surfaces of constant negative curvature
//! and isothermic surfaces, smooth and discrete, with numerical checks of
//! their defining invariants.

pub mod error;
pub mod geomcore;
pub mod linalg;

pub use error::{Error, Result};
pub mod grid;
pub mod ksurface;
pub mod loopgauge;
pub mod isothermic;
pub mod discretei;
