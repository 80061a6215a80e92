//! Reflected rays, reflected flow maps and grazing sets for waves meeting a convex obstacle
//! `x₁ < F(x̄)` whose apex sits at `x̄ = 0` with `F(0) = 1`.

pub mod diffgeo;
pub mod error;
pub mod linalg;
pub mod phases;
pub mod grazing;
pub mod reflection;

pub use diffgeo::{Obstacle, Polynomial, Surface};
pub use error::{Error, Result};
