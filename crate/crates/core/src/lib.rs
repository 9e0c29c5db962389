//! Random-walk drift on torus-type Teichmüller models.
//!
//! Two ratio-metric models are provided: the flat torus with the Teichmüller
//! metric and the once-punctured torus with Thurston's Lipschitz metric.
//! On top of them sit horofunctions and the Busemann cocycle, a Monte Carlo
//! walk engine, parameter-sweep experiments, and entropy/shadow checks.

pub mod entropy_shadows;
pub mod error;
pub mod experiments;
pub mod horoboundary;
pub mod group;
pub mod models;
pub mod slopes;
pub mod stats;
pub mod walk;

pub use error::{Error, Result};
pub use group::{GroupElement, Marking};
pub use slopes::{ProjectiveDirection, Slope};
