//! Mixed finite-element / finite-volume semi-implicit dynamical core on an
//! extruded equiangular cubed sphere.

pub mod constants;
pub mod driver;
pub mod error;
pub mod fem;
pub mod mesh;
pub mod solver;
pub mod sparse;
pub mod timestepper;
pub mod transport;

pub use constants::PhysicalConstants;
pub use error::{DycoreError, Result};
